//! Run configuration, read from TOML. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ptlab_core::classical::{ThetaGrid, DEFAULT_THETA_SAMPLES};
use ptlab_core::gbwpe::PtSearchOptions;
use ptlab_core::models::{ModelSpec, DEFAULT_MAX_DIM};
use ptlab_core::spectral::DEGENERACY_GUARD;
use serde::{Deserialize, Serialize};

use crate::failure::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    /// One value or a sweep.
    pub lambda: Lambda,
    #[serde(default)]
    pub states: States,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub shape: ShapeSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub cache: bool,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub size: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambda {
    Single(f64),
    Sweep(Vec<f64>),
}

impl Lambda {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Lambda::Single(x) => vec![*x],
            Lambda::Sweep(v) => v.clone(),
        }
    }
}

/// Exactly one of the selectors, or none for the middle of the spectrum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct States {
    pub target: Option<f64>,
    pub index: Option<usize>,
    /// Half-open index range `[start, end)`.
    pub range: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub series_tol: f64,
    pub n_max: usize,
    pub imag_tol: Option<f64>,
    pub degeneracy_guard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { series_tol: 1e-8, n_max: 10_000, imag_tol: None, degeneracy_guard: DEGENERACY_GUARD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub solver: String,
    pub score: String,
    pub sequential_limit: usize,
    pub readd: bool,
    pub compute_spectrum: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = PtSearchOptions::default();
        SearchSection {
            solver: d.solver,
            score: d.score,
            sequential_limit: d.sequential_limit,
            readd: d.readd,
            compute_spectrum: d.compute_spectrum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub theta_samples: usize,
    /// Guard band on the forbidden test.
    pub eta: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { theta_samples: DEFAULT_THETA_SAMPLES, eta: 0.0 }
    }
}

/// Averaging window: a number of neighbouring levels or an energy width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSection {
    pub count: Option<usize>,
    pub epsilon: Option<f64>,
}

impl Default for ShapeSection {
    fn default() -> Self {
        ShapeSection { count: Some(5), epsilon: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    /// Defaults to the model size alone.
    pub sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    pub seed: u64,
    pub pairs: usize,
    pub dim: usize,
    pub lambda: f64,
    /// States checked per random pair, centred in the spectrum.
    pub states_per_pair: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection { seed: 2024, pairs: 20, dim: 50, lambda: 0.15, states_per_pair: 5 }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("ptlab-out")
}

fn default_threads() -> usize {
    1
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

/// Settings for `validate` when no file is given: a small LMG instance.
impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSection { name: "lmg".into(), size: 20, params: BTreeMap::new(), max_dim: DEFAULT_MAX_DIM },
            lambda: Lambda::Single(0.5),
            states: States::default(),
            tolerances: Tolerances::default(),
            search: SearchSection::default(),
            grid: GridSection::default(),
            shape: ShapeSection::default(),
            study: StudySection::default(),
            validate: ValidateSection::default(),
            out: default_out(),
            cache: false,
            threads: default_threads(),
        }
    }
}

fn check(ok: bool, field: &str, msg: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(format!("{field}: {msg}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    /// Field-level checks that need no model build or file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        check(!self.model.name.is_empty(), "model.name", "must not be empty")?;
        check(self.model.size >= 1, "model.size", "must be >= 1")?;
        check(self.model.max_dim >= 1, "model.max_dim", "must be >= 1")?;
        let lambdas = self.lambda.values();
        check(!lambdas.is_empty(), "lambda", "the sweep is empty")?;
        for (i, l) in lambdas.iter().enumerate() {
            check(l.is_finite(), &format!("lambda[{i}]"), "must be finite")?;
        }
        let s = &self.states;
        let set = [s.target.is_some(), s.index.is_some(), s.range.is_some()].iter().filter(|&&b| b).count();
        check(set <= 1, "states", "set at most one of target, index, range")?;
        if let Some(t) = s.target {
            check(t.is_finite(), "states.target", "must be finite")?;
        }
        if let Some([a, b]) = s.range {
            check(a < b, "states.range", "needs start < end")?;
        }
        let t = &self.tolerances;
        check(t.series_tol > 0.0, "tolerances.series_tol", "must be > 0")?;
        check(t.n_max >= 1, "tolerances.n_max", "must be >= 1")?;
        check(t.degeneracy_guard > 0.0, "tolerances.degeneracy_guard", "must be > 0")?;
        if let Some(x) = t.imag_tol {
            check(x > 0.0, "tolerances.imag_tol", "must be > 0")?;
        }
        check(self.search.sequential_limit >= 1, "search.sequential_limit", "must be >= 1")?;
        ThetaGrid::new(self.grid.theta_samples).map_err(|e| ConfigError(format!("grid.theta_samples: {e}")))?;
        check(self.grid.eta >= 0.0 && self.grid.eta.is_finite(), "grid.eta", "must be finite and >= 0")?;
        match (self.shape.count, self.shape.epsilon) {
            (Some(c), None) => check(c >= 1, "shape.count", "must be >= 1")?,
            (None, Some(e)) => check(e > 0.0, "shape.epsilon", "must be > 0")?,
            _ => return Err(ConfigError("shape: set exactly one of count, epsilon".into())),
        }
        if let Some(sizes) = &self.study.sizes {
            check(!sizes.is_empty(), "study.sizes", "must not be empty")?;
            check(sizes.windows(2).all(|w| w[0] < w[1]), "study.sizes", "must be strictly ascending")?;
            check(sizes[0] >= 1, "study.sizes", "sizes must be >= 1")?;
        }
        let v = &self.validate;
        check(v.pairs >= 1, "validate.pairs", "must be >= 1")?;
        check(v.dim >= 2, "validate.dim", "must be >= 2")?;
        check(v.states_per_pair >= 1 && v.states_per_pair <= v.dim, "validate.states_per_pair", "must be in 1..=dim")?;
        check(v.lambda.is_finite() && v.lambda > 0.0, "validate.lambda", "must be finite and > 0")?;
        check(self.threads >= 1, "threads", "must be >= 1")?;
        Ok(())
    }

    pub fn model_spec(&self, lambda: f64) -> ModelSpec {
        ModelSpec {
            model: self.model.name.clone(),
            size: self.model.size,
            lambda,
            params: self.model.params.clone(),
            max_dim: self.model.max_dim,
        }
    }

    pub fn search_options(&self) -> PtSearchOptions {
        PtSearchOptions {
            solver: self.search.solver.clone(),
            score: self.search.score.clone(),
            imag_tol: self.tolerances.imag_tol,
            sequential_limit: self.search.sequential_limit,
            readd: self.search.readd,
            compute_spectrum: self.search.compute_spectrum,
            degeneracy_guard: self.tolerances.degeneracy_guard,
        }
    }

    pub fn theta(&self) -> ThetaGrid {
        ThetaGrid::new(self.grid.theta_samples).expect("validated")
    }
}
