//! Deterministic oracles standing in for learned perception: detection with
//! configurable noise, subcategory classification, attribute question
//! answering, instance matching and hashed-token embeddings.

mod embed;
mod vocab;

pub use embed::{token_hash, Embedder, Embedding, DEFAULT_DIM};
pub use vocab::SynonymTable;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::{Observation, Scene, SceneObject};
use crate::rng::keyed_unit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("input has no tokens")]
    EmptyInput,
    #[error("no object with id {0}")]
    UnknownObject(u32),
    #[error("no object with image reference {0:?}")]
    UnknownImage(String),
    #[error("{0}")]
    Invalid(String),
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// True when every token of `query` appears among the object's category,
/// subcategory and attribute tokens.
pub fn token_match(obj: &SceneObject, query: &str) -> bool {
    let q = tokenize(query);
    if q.is_empty() {
        return false;
    }
    let have = obj.descriptor_tokens();
    q.iter().all(|t| have.contains(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub false_negative_rate: f64,
    pub false_positive_rate: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            false_negative_rate: 0.0,
            false_positive_rate: 0.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        for (name, rate) in [
            ("false_negative_rate", self.false_negative_rate),
            ("false_positive_rate", self.false_positive_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(PerceptionError::Invalid(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: u32,
    pub label: String,
    pub bearing: f64,
    pub range: f64,
    pub confidence: f64,
}

const TAG_MISS: u64 = 1;
const TAG_FALSE_ALARM: u64 = 2;
const TAG_RELABEL: u64 = 3;

/// Oracle detector. Matching sightings are reported with confidence 1.0
/// unless dropped as false negatives; non-matching sightings may be
/// relabelled as one of the queries with confidence 0.6. Every noise draw
/// is keyed by `(seed, object id, step)`.
pub fn detect(obs: &Observation, scene: &Scene, queries: &[String], noise: &NoiseConfig) -> Vec<Detection> {
    let mut out = Vec::new();
    if queries.is_empty() {
        return out;
    }
    for s in &obs.sightings {
        let Some(obj) = scene.object(s.object_id) else {
            continue;
        };
        let id = u64::from(obj.id);
        match queries.iter().find(|q| token_match(obj, q)) {
            Some(q) => {
                if noise.false_negative_rate > 0.0
                    && keyed_unit(noise.seed, id, obs.steps_taken, TAG_MISS) < noise.false_negative_rate
                {
                    continue;
                }
                out.push(Detection {
                    object_id: obj.id,
                    label: q.clone(),
                    bearing: s.bearing,
                    range: s.range,
                    confidence: 1.0,
                });
            }
            None => {
                if noise.false_positive_rate > 0.0
                    && keyed_unit(noise.seed, id, obs.steps_taken, TAG_FALSE_ALARM) < noise.false_positive_rate
                {
                    let pick = keyed_unit(noise.seed, id, obs.steps_taken, TAG_RELABEL);
                    let idx = ((pick * queries.len() as f64) as usize).min(queries.len() - 1);
                    out.push(Detection {
                        object_id: obj.id,
                        label: queries[idx].clone(),
                        bearing: s.bearing,
                        range: s.range,
                        confidence: 0.6,
                    });
                }
            }
        }
    }
    out
}

/// Returns the detected object's subcategory when it is among `subcategories`
/// (case-insensitive), otherwise `"other"`.
pub fn classify(scene: &Scene, detection: &Detection, subcategories: &[String]) -> Result<String, PerceptionError> {
    if subcategories.is_empty() {
        return Err(PerceptionError::Invalid("subcategory list is empty".into()));
    }
    let obj = scene
        .object(detection.object_id)
        .ok_or(PerceptionError::UnknownObject(detection.object_id))?;
    Ok(subcategories
        .iter()
        .find(|s| s.trim().eq_ignore_ascii_case(&obj.subcategory))
        .map(|_| obj.subcategory.to_lowercase())
        .unwrap_or_else(|| "other".to_string()))
}

pub const UNKNOWN_ANSWER: &str = "unknown";

fn normalize_question(q: &str) -> Vec<String> {
    tokenize(q)
}

/// Singular and plural-stripped readings of a noun phrase.
fn noun_forms(words: &[String]) -> Vec<String> {
    let phrase = words.join(" ");
    let mut forms = vec![phrase.clone()];
    if let Some(last) = words.last() {
        let head = &words[..words.len() - 1];
        let mut push = |stem: &str| {
            let mut w = head.to_vec();
            w.push(stem.to_string());
            forms.push(w.join(" "));
        };
        if let Some(stem) = last.strip_suffix("es") {
            push(stem);
        }
        if let Some(stem) = last.strip_suffix('s') {
            if !last.ends_with("ss") {
                push(stem);
            }
        }
    }
    forms
}

fn visible_matching<'a>(scene: &'a Scene, obs: &Observation, noun: &[String]) -> Vec<(&'a SceneObject, f64)> {
    let forms = noun_forms(noun);
    let mut found: Vec<(&SceneObject, f64)> = obs
        .sightings
        .iter()
        .filter_map(|s| scene.object(s.object_id).map(|o| (o, s.range)))
        .filter(|(o, _)| forms.iter().any(|f| token_match(o, f)))
        .collect();
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)));
    found
}

const ARTICLES: [&str; 3] = ["the", "a", "an"];

fn strip_article(words: &[String]) -> &[String] {
    match words.first() {
        Some(w) if ARTICLES.contains(&w.as_str()) => &words[1..],
        _ => words,
    }
}

/// Answers attribute, state, count and location questions about the objects
/// currently in view. Anything else, or a question whose referent is not
/// visible, yields `"unknown"`.
pub fn answer(scene: &Scene, obs: &Observation, question: &str) -> String {
    let w = normalize_question(question);
    let s: Vec<&str> = w.iter().map(String::as_str).collect();
    let nearest_attr = |noun: &[String], key: &str| -> String {
        visible_matching(scene, obs, noun)
            .first()
            .and_then(|(o, _)| o.attributes.get(key).cloned())
            .unwrap_or_else(|| UNKNOWN_ANSWER.to_string())
    };
    match s.as_slice() {
        ["what", "color" | "colour", "is" | "are", rest @ ..] if !rest.is_empty() => {
            nearest_attr(strip_article(&w[3..]), "color")
        }
        ["how", "many", rest @ ..] if !rest.is_empty() => {
            let end = rest
                .iter()
                .position(|t| matches!(*t, "are" | "is" | "do" | "can" | "in" | "there"))
                .unwrap_or(rest.len());
            if end == 0 {
                return UNKNOWN_ANSWER.into();
            }
            visible_matching(scene, obs, &w[2..2 + end]).len().to_string()
        }
        ["which" | "what", "room", "is", rest @ ..] if rest.len() >= 2 => {
            let rest = &w[3..];
            let noun = if rest.last().is_some_and(|t| t == "in") {
                &rest[..rest.len() - 1]
            } else {
                rest
            };
            nearest_attr(strip_article(noun), "room")
        }
        ["where", "is", rest @ ..] if !rest.is_empty() => nearest_attr(strip_article(&w[2..]), "room"),
        ["is", rest @ ..] if rest.len() >= 2 => {
            let noun = strip_article(&w[1..w.len() - 1]);
            let state = &w[w.len() - 1];
            match visible_matching(scene, obs, noun).first() {
                Some((o, _)) => match o.attributes.get("state") {
                    Some(actual) if actual == state => "yes".into(),
                    Some(_) => "no".into(),
                    None => UNKNOWN_ANSWER.into(),
                },
                None => UNKNOWN_ANSWER.into(),
            }
        }
        _ => UNKNOWN_ANSWER.into(),
    }
}

/// Answers a question about an instance image rather than the current view.
pub fn answer_image(scene: &Scene, image_ref: &str, question: &str) -> Result<String, PerceptionError> {
    let obj = scene
        .object_by_image(image_ref)
        .ok_or_else(|| PerceptionError::UnknownImage(image_ref.to_string()))?;
    let w = normalize_question(question);
    let s: Vec<&str> = w.iter().map(String::as_str).collect();
    Ok(match s.as_slice() {
        ["what", "object" | "is", ..] => obj.category.clone(),
        ["what", "color" | "colour", ..] => obj
            .attributes
            .get("color")
            .cloned()
            .unwrap_or_else(|| UNKNOWN_ANSWER.into()),
        _ => UNKNOWN_ANSWER.into(),
    })
}

/// Largest score a non-identical instance can receive, so that a perfect
/// score always means the exact instance is in view.
const NEAR_MATCH_CAP: f64 = 1.0 - 1e-6;

/// Instance matching between the current view and a goal image.
pub fn match_image(
    scene: &Scene,
    obs: &Observation,
    embedder: &Embedder,
    image_ref: &str,
) -> Result<f64, PerceptionError> {
    let goal = scene
        .object_by_image(image_ref)
        .ok_or_else(|| PerceptionError::UnknownImage(image_ref.to_string()))?;
    if obs.sightings.iter().any(|s| s.object_id == goal.id) {
        return Ok(1.0);
    }
    let nearest = obs
        .sightings
        .iter()
        .filter_map(|s| scene.object(s.object_id).map(|o| (o, s.range)))
        .filter(|(o, _)| o.category == goal.category)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)));
    match nearest {
        None => Ok(0.0),
        Some((other, _)) => {
            let a = embedder.embed_text(&goal.category)?;
            let b = embedder.embed_text(&other.appearance_text())?;
            Ok(a.similarity(&b).min(NEAR_MATCH_CAP))
        }
    }
}

/// Text describing the current view for the feature map: a floor token plus
/// the appearance of every visible object.
pub fn view_text(scene: &Scene, obs: &Observation) -> String {
    let mut text = String::from("floor");
    for s in &obs.sightings {
        if let Some(o) = scene.object(s.object_id) {
            text.push(' ');
            text.push_str(&o.appearance_text());
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::gridworld::{AgentPose, CellKind, Grid, Sighting};
    use std::collections::BTreeMap;

    fn obj(id: u32, category: &str, sub: &str, attrs: &[(&str, &str)]) -> SceneObject {
        SceneObject {
            id,
            category: category.into(),
            subcategory: sub.into(),
            attributes: attrs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<BTreeMap<_, _>>(),
            position: Point::new(0.5 + id as f64 * 0.5, 0.5),
            image_ref: Some(format!("img_{id}")),
        }
    }

    fn scene(objects: Vec<SceneObject>) -> Scene {
        Scene::new("s", 0.25, Grid::new(8, 40, CellKind::Free), objects).unwrap()
    }

    fn view(ids: &[(u32, f64)]) -> Observation {
        Observation {
            pose: AgentPose::new(0.1, 0.5, 0.0),
            sightings: ids
                .iter()
                .map(|&(id, range)| Sighting {
                    object_id: id,
                    category: String::new(),
                    bearing: 0.0,
                    range,
                })
                .collect(),
            depth_scan: vec![],
            relative_goal: None,
            steps_taken: 3,
            collided: false,
        }
    }

    #[test]
    fn detect_matches_category_without_noise() {
        let s = scene(vec![obj(1, "chair", "armchair", &[])]);
        let d = detect(&view(&[(1, 2.0)]), &s, &["chair".into()], &NoiseConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].object_id, d[0].range, d[0].confidence), (1, 2.0, 1.0));
        assert!(detect(&view(&[(1, 2.0)]), &s, &["bed".into()], &NoiseConfig::default()).is_empty());
    }

    #[test]
    fn false_positives_relabel_real_objects() {
        let s = scene(vec![obj(1, "plant", "fern", &[])]);
        let noise = NoiseConfig {
            false_positive_rate: 1.0,
            ..NoiseConfig::default()
        };
        let d = detect(&view(&[(1, 2.0)]), &s, &["chair".into()], &noise);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].label.as_str(), d[0].confidence), ("chair", 0.6));
    }

    #[test]
    fn classify_returns_listed_subcategory_or_other() {
        let s = scene(vec![obj(1, "chair", "armchair", &[]), obj(2, "chair", "stool", &[])]);
        let det = |id| Detection {
            object_id: id,
            label: "chair".into(),
            bearing: 0.0,
            range: 1.0,
            confidence: 1.0,
        };
        let opts: Vec<String> = ["armchair", "couch", "other"].iter().map(|s| s.to_string()).collect();
        assert_eq!(classify(&s, &det(1), &opts).unwrap(), "armchair");
        assert_eq!(classify(&s, &det(2), &opts).unwrap(), "other");
        assert!(classify(&s, &det(1), &[]).is_err());
        assert_eq!(classify(&s, &det(9), &opts), Err(PerceptionError::UnknownObject(9)));
    }

    #[test]
    fn answers_from_visible_objects() {
        let s = scene(vec![
            obj(1, "bed", "bed", &[("color", "white"), ("room", "bedroom")]),
            obj(2, "chair", "stool", &[("state", "open")]),
            obj(3, "chair", "armchair", &[]),
            obj(4, "tv", "tv", &[("state", "on")]),
        ]);
        let all = view(&[(1, 1.0), (2, 2.0), (3, 3.0), (4, 1.5)]);
        assert_eq!(answer(&s, &all, "What color is the bed?"), "white");
        assert_eq!(answer(&s, &view(&[(2, 1.0)]), "what color is the bed"), "unknown");
        assert_eq!(answer(&s, &all, "how many chairs are there"), "2");
        assert_eq!(answer(&s, &all, "is the tv on"), "yes");
        assert_eq!(answer(&s, &all, "is the tv off"), "no");
        assert_eq!(answer(&s, &all, "which room is the bed in"), "bedroom");
        assert_eq!(answer(&s, &all, "where is the bed"), "bedroom");
        assert_eq!(answer(&s, &all, "why is the sky blue"), "unknown");
    }

    #[test]
    fn image_questions_name_the_depicted_object() {
        let s = scene(vec![obj(1, "gas boiler", "gas boiler", &[("color", "white")])]);
        assert_eq!(answer_image(&s, "img_1", "what object is this").unwrap(), "gas boiler");
        assert!(answer_image(&s, "img_9", "what object is this").is_err());
    }

    #[test]
    fn match_scores() {
        let s = scene(vec![
            obj(1, "chair", "armchair", &[("color", "white")]),
            obj(2, "chair", "armchair", &[("color", "red")]),
            obj(3, "bed", "bed", &[]),
        ]);
        let e = Embedder::default();
        assert_eq!(match_image(&s, &view(&[(1, 1.0)]), &e, "img_1").unwrap(), 1.0);
        assert_eq!(match_image(&s, &view(&[(3, 1.0)]), &e, "img_1").unwrap(), 0.0);
        assert_eq!(match_image(&s, &view(&[]), &e, "img_1").unwrap(), 0.0);
        assert!(match_image(&s, &view(&[]), &e, "nope").is_err());
    }
}
