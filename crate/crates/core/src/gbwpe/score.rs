//! Removal scores for the PT-region search: the state with the largest score
//! leaves `S` first.

use std::collections::BTreeMap;

use super::StateProblem;
use crate::error::{Error, Result};

pub trait RemovalScore: Send + Sync {
    fn name(&self) -> &'static str;

    /// Score of `k` given the current membership of `S`.
    fn score(&self, prob: &StateProblem, k: usize, in_s: &[bool]) -> f64;
}

/// `(Σ_{k'∈S} |λV_{k'k}|²)^{1/2} / |E_α − E0_k|`: the norm of column `k` of `W_S`.
pub struct ColumnNormGap;

impl RemovalScore for ColumnNormGap {
    fn name(&self) -> &'static str {
        "column-norm-gap"
    }

    fn score(&self, prob: &StateProblem, k: usize, in_s: &[bool]) -> f64 {
        let s: f64 = prob.coupling[k].iter().filter(|(kp, _)| in_s[*kp]).map(|(_, v)| v * v).sum();
        s.sqrt() / prob.gaps[k].abs()
    }
}

/// `max_{k'∈S} |λV_{k'k}| / |E_α − E0_k|`: the largest entry of column `k` of `W_S`.
pub struct MaxEntryGap;

impl RemovalScore for MaxEntryGap {
    fn name(&self) -> &'static str {
        "max-entry-gap"
    }

    fn score(&self, prob: &StateProblem, k: usize, in_s: &[bool]) -> f64 {
        prob.coupling[k].iter().filter(|(kp, _)| in_s[*kp]).map(|(_, v)| v.abs()).fold(0.0, f64::max)
            / prob.gaps[k].abs()
    }
}

pub struct ScoreRegistry {
    scores: BTreeMap<&'static str, Box<dyn RemovalScore>>,
}

impl ScoreRegistry {
    pub fn empty() -> Self {
        ScoreRegistry { scores: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ColumnNormGap));
        r.register(Box::new(MaxEntryGap));
        r
    }

    pub fn register(&mut self, score: Box<dyn RemovalScore>) {
        self.scores.insert(score.name(), score);
    }

    pub fn get(&self, name: &str) -> Result<&dyn RemovalScore> {
        self.scores.get(name).map(|s| s.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "removal score",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.scores.keys().copied().collect()
    }
}

impl Default for ScoreRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
