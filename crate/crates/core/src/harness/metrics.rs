use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::gridworld::{DistanceField, Scene};
use crate::perception::{tokenize, SynonymTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("no values to aggregate")]
    Empty,
    #[error("episode {0} succeeded but has no optimal path length")]
    MissingOptimal(usize),
    #[error("score {0} is outside 1..=5")]
    ScoreOutOfRange(u8),
}

/// `ℓ / max(p, ℓ)`, with two zero lengths counting as optimal.
pub fn path_efficiency(path: f64, optimal: f64) -> f64 {
    let denom = path.max(optimal);
    if denom <= 0.0 {
        1.0
    } else {
        optimal / denom
    }
}

/// Path data needed by SPL: success flag, agent path length and optimal
/// length (when defined).
pub trait SplInput {
    fn success(&self) -> bool;
    fn path_length(&self) -> f64;
    fn optimal_length(&self) -> Option<f64>;
}

impl SplInput for (bool, f64, Option<f64>) {
    fn success(&self) -> bool {
        self.0
    }
    fn path_length(&self) -> f64 {
        self.1
    }
    fn optimal_length(&self) -> Option<f64> {
        self.2
    }
}

/// Success weighted by path length, in percent. Failures contribute zero.
pub fn compute_spl<T: SplInput>(rows: &[T]) -> Result<f64, MetricError> {
    if rows.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for (i, r) in rows.iter().enumerate() {
        if r.success() {
            let l = r
                .optimal_length()
                .filter(|l| l.is_finite())
                .ok_or(MetricError::MissingOptimal(i))?;
            sum += path_efficiency(r.path_length(), l);
        }
    }
    Ok(sum / rows.len() as f64 * 100.0)
}

pub fn success_rate(successes: &[bool]) -> Result<f64, MetricError> {
    if successes.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(successes.iter().filter(|s| **s).count() as f64 / successes.len() as f64 * 100.0)
}

/// One episode's progress and its PPL term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgressRow {
    pub goals_reached: usize,
    pub goals_total: usize,
    pub path_length: f64,
    /// Optimal length through the reached goals, in order.
    pub reached_optimal_length: f64,
}

impl ProgressRow {
    pub fn progress(&self) -> f64 {
        if self.goals_total == 0 {
            0.0
        } else {
            self.goals_reached as f64 / self.goals_total as f64
        }
    }

    pub fn ppl(&self) -> f64 {
        if self.goals_reached == 0 {
            0.0
        } else {
            self.progress() * path_efficiency(self.path_length, self.reached_optimal_length)
        }
    }
}

/// (Progress %, PPL %) averaged over episodes.
pub fn compute_progress_ppl(rows: &[ProgressRow]) -> Result<(f64, f64), MetricError> {
    if rows.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = rows.len() as f64;
    let progress = rows.iter().map(ProgressRow::progress).sum::<f64>() / n * 100.0;
    let ppl = rows.iter().map(ProgressRow::ppl).sum::<f64>() / n * 100.0;
    Ok((progress, ppl))
}

/// Mean distance to goal over the finite entries, plus the number of
/// disconnected (infinite or missing) entries left out.
pub fn compute_dtg(distances: &[Option<f64>]) -> (Option<f64>, usize) {
    let finite: Vec<f64> = distances.iter().flatten().copied().filter(|d| d.is_finite()).collect();
    let excluded = distances.len() - finite.len();
    if excluded > 0 {
        log::warn!("{excluded} episode(s) without a connected target left out of DTG");
    }
    if finite.is_empty() {
        (None, excluded)
    } else {
        (Some(finite.iter().sum::<f64>() / finite.len() as f64), excluded)
    }
}

/// Mean of `(σ − 1) / 4` in percent.
pub fn llm_match_score(sigmas: &[u8]) -> Result<f64, MetricError> {
    if sigmas.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for &s in sigmas {
        if !(1..=5).contains(&s) {
            return Err(MetricError::ScoreOutOfRange(s));
        }
        sum += f64::from(s - 1) / 4.0;
    }
    Ok(sum / sigmas.len() as f64 * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerMode {
    Exact,
    Constrained,
    Judge,
}

impl std::str::FromStr for AnswerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(AnswerMode::Exact),
            "constrained" => Ok(AnswerMode::Constrained),
            "judge" => Ok(AnswerMode::Judge),
            other => Err(format!(
                "unknown answer mode {other:?} (expected exact|constrained|judge)"
            )),
        }
    }
}

fn contains_phrase(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Scores an answer 5 (match) or 1 (no match) without a judge. Constrained
/// mode maps both sides through the synonym table and also accepts either
/// side containing a phrase from the other side's synonym group, so "white"
/// and "the bed is white" match.
pub fn score_answer_offline(answer: &str, truth: &str, mode: AnswerMode, synonyms: &SynonymTable) -> u8 {
    let exact = answer.trim().eq_ignore_ascii_case(truth.trim());
    let ok = match mode {
        AnswerMode::Exact | AnswerMode::Judge => exact,
        AnswerMode::Constrained => {
            let contains = |text: &str, other: &str| {
                let words = tokenize(text);
                synonyms
                    .phrases_of(other)
                    .iter()
                    .any(|p| contains_phrase(&words, &tokenize(p)))
            };
            exact
                || synonyms.canonical(answer) == synonyms.canonical(truth)
                || contains(answer, truth)
                || contains(truth, answer)
        }
    };
    if ok {
        5
    } else {
        1
    }
}

/// Judge prompt for remote scoring.
pub fn judge_prompt(question: &str, answer: &str, truth: &str) -> String {
    format!(
        "You are grading an answer to a question about a house.\n\
         Question: {question}\n\
         Reference answer: {truth}\n\
         Given answer: {answer}\n\
         Rate how well the given answer matches the reference on a scale of 1 to 5, \
         where 5 means equivalent and 1 means wrong. Reply with the number only.\n"
    )
}

/// The first digit 1–5 in a judge reply.
pub fn parse_judge_reply(reply: &str) -> Option<u8> {
    reply.chars().find(|c| ('1'..='5').contains(c)).map(|c| c as u8 - b'0')
}

/// Geodesic distances from one point to every cell, over free cells.
pub fn distance_field_from(scene: &Scene, p: Point) -> Option<DistanceField> {
    let cell = scene.cell_of(p).filter(|&c| scene.grid.is_free(c))?;
    Some(DistanceField::from_scene(scene, cell))
}

/// Shortest length of a path from `start` that visits one point of each
/// layer in order. None when some layer is unreachable.
pub fn layered_optimal_length(scene: &Scene, start: Point, layers: &[Vec<Point>]) -> Option<f64> {
    let mut frontier: Vec<(Point, f64)> = vec![(start, 0.0)];
    for layer in layers {
        let fields: Vec<(Point, f64, Option<DistanceField>)> = frontier
            .iter()
            .map(|&(p, d)| (p, d, distance_field_from(scene, p)))
            .collect();
        let mut next = Vec::with_capacity(layer.len());
        for &target in layer {
            let cell = scene.cell_of(target)?;
            let best = fields
                .iter()
                .filter_map(|(_, d, f)| f.as_ref().map(|f| d + f.meters(cell)))
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                next.push((target, best));
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
    Some(frontier.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min))
}
