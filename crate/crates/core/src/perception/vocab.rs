use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, PerceptionError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynonymGroup {
    pub canonical: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

/// Answer-constraint groups: every synonym of a group normalizes to its
/// canonical form.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    groups: Vec<SynonymGroup>,
    lookup: HashMap<String, usize>,
}

fn key(text: &str) -> String {
    tokenize(text).join(" ")
}

impl SynonymTable {
    pub fn new(groups: Vec<SynonymGroup>) -> Result<Self, PerceptionError> {
        let mut lookup: HashMap<String, usize> = HashMap::new();
        for (i, g) in groups.iter().enumerate() {
            for phrase in std::iter::once(&g.canonical).chain(&g.synonyms) {
                let k = key(phrase);
                if k.is_empty() {
                    return Err(PerceptionError::Invalid(format!(
                        "empty phrase in synonym group {:?}",
                        g.canonical
                    )));
                }
                if let Some(&prev) = lookup.get(&k) {
                    if prev != i {
                        return Err(PerceptionError::Invalid(format!(
                            "{phrase:?} belongs to both {:?} and {:?}",
                            groups[prev].canonical, g.canonical
                        )));
                    }
                }
                lookup.insert(k, i);
            }
        }
        Ok(Self { groups, lookup })
    }

    pub fn from_json(text: &str) -> Result<Self, PerceptionError> {
        let groups: Vec<SynonymGroup> =
            serde_json::from_str(text).map_err(|e| PerceptionError::Invalid(format!("synonym table: {e}")))?;
        Self::new(groups)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PerceptionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PerceptionError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The table shipped with the crate (colors, rooms, states and a few
    /// object names).
    pub fn bundled() -> Self {
        Self::from_json(include_str!("../../data/synonyms.json")).expect("bundled synonym table is valid")
    }

    pub fn groups(&self) -> &[SynonymGroup] {
        &self.groups
    }

    /// Canonical form of a phrase, or the normalized phrase itself when it is
    /// in no group.
    pub fn canonical(&self, text: &str) -> String {
        let k = key(text);
        match self.lookup.get(&k) {
            Some(&i) => key(&self.groups[i].canonical),
            None => k,
        }
    }

    /// Every phrase (canonical and synonyms) of the group `text` belongs to.
    pub fn phrases_of(&self, text: &str) -> Vec<String> {
        let k = key(text);
        match self.lookup.get(&k) {
            Some(&i) => {
                let g = &self.groups[i];
                std::iter::once(&g.canonical)
                    .chain(&g.synonyms)
                    .map(|p| key(p))
                    .collect()
            }
            None => vec![k],
        }
    }
}
