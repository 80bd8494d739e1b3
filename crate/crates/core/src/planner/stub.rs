//! Deterministic rule-based planner. Maps each goal kind to a fixed program
//! template so that episodes can run without a language model.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::task::{Task, COLORS};
use super::PlanError;
use crate::gridworld::{default_vocabulary, GoalKind};
use crate::interpreter::quote;
use crate::perception::tokenize;
use crate::rng::keyed_unit;

const TAG_FIRE: u64 = 1;
const TAG_PICK: u64 = 2;

/// Injected planning faults: with `probability`, the program targets a
/// category other than the goal's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultMode {
    pub probability: f64,
    pub seed: u64,
}

impl Default for FaultMode {
    fn default() -> Self {
        Self::none()
    }
}

impl FaultMode {
    pub fn none() -> Self {
        Self {
            probability: 0.0,
            seed: 0,
        }
    }

    pub fn new(probability: f64, seed: u64) -> Self {
        Self { probability, seed }
    }

    fn key(payload: &str) -> u64 {
        let digest = Sha256::digest(payload.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    /// The wrong category to use for `payload`, when the fault fires.
    fn wrong_target(&self, payload: &str, real: &str) -> Option<String> {
        if self.probability <= 0.0 {
            return None;
        }
        let key = Self::key(payload);
        if keyed_unit(self.seed, key, 0, TAG_FIRE) >= self.probability {
            return None;
        }
        let real_tokens = tokenize(real);
        let candidates: Vec<String> = default_vocabulary()
            .into_iter()
            .map(|t| t.category)
            .filter(|c| tokenize(c).iter().all(|t| !real_tokens.contains(t)))
            .collect();
        let i = (keyed_unit(self.seed, key, 0, TAG_PICK) * candidates.len() as f64) as usize;
        candidates.get(i.min(candidates.len() - 1)).cloned()
    }
}

fn strip_article(words: &[String]) -> &[String] {
    match words.first().map(String::as_str) {
        Some("the" | "a" | "an") => &words[1..],
        _ => words,
    }
}

/// `'a'` style literal for an `eval` string comparison inside a quoted arg.
fn eval_literal(var: &str, text: &str) -> String {
    if text.contains(['"', '\\', '\'']) {
        quote(&format!("{var} == {}", quote(text)))
    } else {
        format!("\"{var} == '{text}'\"")
    }
}

fn singular(word: &str) -> String {
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if word.ends_with("ss") {
        return word.to_string();
    }
    word.strip_suffix('s').unwrap_or(word).to_string()
}

fn category_program(target: &str) -> String {
    let t = quote(target);
    format!(
        "# search the house until a {target} is in view\n\
         seen = explore_scene(target={t})\n\
         # locate it in the current view\n\
         boxes = detect(image=obs, query={t})\n\
         # walk up to the nearest one\n\
         nav = navigate_to(target=boxes)\n\
         # stop if we reached it\n\
         done = is_found(target=nav)\n"
    )
}

struct Description {
    /// Color and kind, e.g. "white armchair".
    noun_phrase: String,
    /// Kind without colors, e.g. "armchair".
    kind: String,
    room: Option<String>,
}

fn parse_description(payload: &str) -> Result<Description, PlanError> {
    let words = tokenize(payload);
    let words = strip_article(&words);
    let (np, room) = match words.iter().position(|w| w == "in") {
        Some(i) => (&words[..i], Some(strip_article(&words[i + 1..]).join(" "))),
        None => (words, None),
    };
    let kind: Vec<&str> = np.iter().map(String::as_str).filter(|w| !COLORS.contains(w)).collect();
    if kind.is_empty() {
        return Err(PlanError::Unrecognized(payload.to_string()));
    }
    Ok(Description {
        noun_phrase: np.join(" "),
        kind: kind.join(" "),
        room: room.filter(|r| !r.is_empty()),
    })
}

fn description_program(payload: &str, desc: &Description) -> String {
    let mut query = desc.noun_phrase.clone();
    if let Some(room) = &desc.room {
        query.push(' ');
        query.push_str(room);
    }
    let q = quote(&query);
    let head = desc.kind.rsplit(' ').next().unwrap_or(&desc.kind);
    format!(
        "# the head noun is {head}; ground the search in the full description\n\
         seen = explore_scene(target={target}, query={q})\n\
         boxes = detect(image=obs, query={q})\n\
         # confirm the kind of object before committing\n\
         kind = classify(target=boxes, options={kind})\n\
         ok = eval(expr={check})\n\
         nav = navigate_to(target=boxes)\n\
         done = is_found(target=nav, check=ok)\n",
        target = quote(payload),
        kind = quote(&desc.kind),
        check = eval_literal("kind", &desc.kind),
    )
}

fn image_program(wrong: Option<&str>) -> String {
    let (naming, label) = match wrong {
        None => (
            "# it has to first extract the semantic object from the image\n\
             label = answer(image=goal, question='what object is this')\n"
                .to_string(),
            "label".to_string(),
        ),
        Some(w) => (format!("# the image shows a {w}\n"), quote(w)),
    };
    format!(
        "{naming}\
         seen = explore_scene(target=goal, query={label})\n\
         boxes = detect(image=obs, query={label})\n\
         nav = navigate_to(target=boxes)\n\
         # only the exact instance from the image counts\n\
         score = match(image=obs, target=goal)\n\
         same = eval(expr='score == 1')\n\
         done = is_found(target=nav, check=same)\n"
    )
}

/// The object a question is about, or None when the pattern is unknown.
fn question_target(question: &str) -> Option<(String, bool)> {
    let words = tokenize(question);
    let w: Vec<&str> = words.iter().map(String::as_str).collect();
    let noun = |ws: &[&str]| -> Option<String> {
        let ws: Vec<String> = ws.iter().map(|s| s.to_string()).collect();
        let ws = strip_article(&ws);
        (!ws.is_empty()).then(|| ws.join(" "))
    };
    match w.as_slice() {
        ["what", "color" | "colour", "is" | "are", rest @ ..] => noun(rest).map(|n| (n, false)),
        ["which" | "what", "room", "is" | "are", rest @ ..] => match rest.split_last() {
            Some((&"in", head)) => noun(head),
            _ => noun(rest),
        }
        .map(|n| (n, false)),
        ["where", "is" | "are", rest @ ..] => noun(rest).map(|n| (n, false)),
        ["how", "many", rest @ ..] => {
            let end = rest
                .iter()
                .position(|x| matches!(*x, "are" | "is" | "in" | "can" | "do"))
                .unwrap_or(rest.len());
            let mut n: Vec<String> = rest[..end].iter().map(|s| s.to_string()).collect();
            let last = n.pop()?;
            n.push(singular(&last));
            Some((n.join(" "), true))
        }
        ["is" | "are", rest @ ..] if rest.len() >= 2 => noun(&rest[..rest.len() - 1]).map(|n| (n, false)),
        _ => None,
    }
}

fn question_program(question: &str, target: &str, counting: bool) -> String {
    let t = quote(target);
    let q = quote(question);
    if counting {
        format!(
            "# find where the {target}s are, then count the ones in view\n\
             seen = explore_scene(target={t})\n\
             boxes = detect(image=obs, query={t})\n\
             ans = answer(image=obs, question={q})\n\
             return(value=ans)\n"
        )
    } else {
        format!(
            "# the question is about the {target}; go and look at it\n\
             seen = explore_scene(target={t})\n\
             boxes = detect(image=obs, query={t})\n\
             nav = navigate_to(target=boxes)\n\
             ans = answer(image=obs, question={q})\n\
             return(value=ans)\n"
        )
    }
}

/// Program text for `task`. Identical inputs give identical bytes.
pub fn stub_plan(task: &Task, fault: &FaultMode) -> Result<String, PlanError> {
    let payload = task.payload.trim();
    if payload.is_empty() {
        return Err(PlanError::Unrecognized(String::new()));
    }
    Ok(match task.kind {
        GoalKind::Category => {
            let target = fault
                .wrong_target(payload, payload)
                .unwrap_or_else(|| payload.to_string());
            category_program(&target)
        }
        GoalKind::Description => {
            let desc = parse_description(payload)?;
            match fault.wrong_target(payload, &desc.kind) {
                Some(w) => category_program(&w),
                None => description_program(payload, &desc),
            }
        }
        GoalKind::Image => {
            // Nothing about the real object is known without looking at the
            // image, so any vocabulary category can stand in as the wrong one.
            let wrong = fault.wrong_target(payload, "");
            image_program(wrong.as_deref())
        }
        GoalKind::Question => {
            let (target, counting) =
                question_target(payload).ok_or_else(|| PlanError::Unrecognized(payload.to_string()))?;
            let target = fault.wrong_target(payload, &target).unwrap_or(target);
            question_program(payload, &target, counting)
        }
    })
}
