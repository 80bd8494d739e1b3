use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Content-addressed store of raw planner responses, keyed by model name
/// and prompt bytes. Unreadable entries count as misses.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    model: String,
    response: String,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(model: &str, prompt: &str) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        h.update([0u8]);
        h.update(prompt.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, model: &str, prompt: &str) -> Option<String> {
        let text = std::fs::read_to_string(self.path(&Self::key(model, prompt))).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        (entry.model == model).then_some(entry.response)
    }

    /// Writes through a temporary file and a rename, so readers never see a
    /// partial entry.
    pub fn put(&self, model: &str, prompt: &str, response: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let key = Self::key(model, prompt);
        let tmp = self.dir.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let entry = Entry {
            model: model.to_string(),
            response: response.to_string(),
        };
        std::fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        std::fs::rename(&tmp, self.path(&key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_and_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        assert_eq!(cache.get("m", "p"), None);
        cache.put("m", "p", "seen = explore_scene(target='bed')").unwrap();
        assert_eq!(
            cache.get("m", "p").as_deref(),
            Some("seen = explore_scene(target='bed')")
        );
        assert_eq!(cache.get("other", "p"), None);
        assert_eq!(cache.get("m", "p2"), None);
    }

    #[test]
    fn truncated_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        cache.put("m", "p", "hello").unwrap();
        let path = dir.path().join(format!("{}.json", ResponseCache::key("m", "p")));
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert_eq!(cache.get("m", "p"), None);
    }
}
