//! Quantum models as `H = H0 + λV` pairs on an enumerated unperturbed basis.
//!
//! Every model is a [`Model`] trait object held by a [`ModelRegistry`] and
//! selected by name (`"lmg"`, `"dicke"`, `"bose-hubbard"`). Model-specific
//! coupling constants travel in [`ModelSpec::params`] as a flat name/value map;
//! each model declares its parameters, fills defaults and rejects unknown keys.

mod bose_hubbard;
mod dicke;
mod lmg;
pub mod random;

use std::collections::BTreeMap;
use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::ClassicalModel;
use crate::error::{Error, Result};

pub use bose_hubbard::BoseHubbard;
pub use dicke::Dicke;
pub use lmg::Lmg;

/// Default ceiling on the Hilbert-space dimension a builder may produce.
pub const DEFAULT_MAX_DIM: usize = 20_000;

/// One unperturbed basis state `|m⟩` with its linear index `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    /// Model quantum numbers: `(m1, m2)` for LMG, `(n_a, n_b)` for Dicke,
    /// `(n1, n2, n3)` for Bose-Hubbard, `(k)` for random pairs.
    pub m: Vec<u32>,
    pub k: usize,
}

/// Which model to build, at what size and perturbation strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Registry name of the model.
    pub model: String,
    /// Ω for LMG, N for Dicke and Bose-Hubbard.
    pub size: usize,
    pub lambda: f64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

impl ModelSpec {
    pub fn new(model: &str, size: usize, lambda: f64) -> Self {
        ModelSpec { model: model.to_string(), size, lambda, params: BTreeMap::new(), max_dim: DEFAULT_MAX_DIM }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Effective Planck constant `1/Ω` or `1/N`.
    pub fn hbar_eff(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidParameter("size must be >= 1".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        Ok(())
    }
}

/// Default value of a model parameter.
#[derive(Debug, Clone, Copy)]
pub enum ParamDefault {
    Value(f64),
    /// Defaults to the model size (Ω or N).
    Size,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamDef {
    pub name: &'static str,
    pub default: ParamDefault,
    pub doc: &'static str,
}

/// Parameters of one build, defaults filled in.
#[derive(Debug, Clone)]
pub struct ResolvedParams(BTreeMap<&'static str, f64>);

impl ResolvedParams {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    /// Parameter that must hold a non-negative integer.
    pub fn get_count(&self, name: &str) -> Result<usize> {
        let v = self.get(name);
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!("`{name}` must be a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }
}

/// Fill defaults and reject keys the model does not declare.
pub fn resolve_params(defs: &[ParamDef], spec: &ModelSpec) -> Result<ResolvedParams> {
    spec.validate()?;
    for key in spec.params.keys() {
        if !defs.iter().any(|d| d.name == key) {
            let known: Vec<_> = defs.iter().map(|d| d.name).collect();
            return Err(Error::InvalidParameter(format!(
                "unknown parameter `{key}` for model `{}` (known: {})",
                spec.model,
                known.join(", ")
            )));
        }
    }
    let mut out = BTreeMap::new();
    for d in defs {
        let v = match spec.params.get(d.name) {
            Some(&v) => v,
            None => match d.default {
                ParamDefault::Value(v) => v,
                ParamDefault::Size => spec.size as f64,
            },
        };
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("`{}` is not finite", d.name)));
        }
        out.insert(d.name, v);
    }
    Ok(ResolvedParams(out))
}

/// `H = diag(E0) + λV` with `V` real symmetric and zero on the diagonal.
#[derive(Clone)]
pub struct HamiltonianPair {
    pub e0: Vec<f64>,
    pub v: Mat<f64>,
    pub lambda: f64,
    pub basis: Vec<BasisIndex>,
}

impl fmt::Debug for HamiltonianPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianPair").field("dim", &self.dim()).field("lambda", &self.lambda).finish()
    }
}

impl HamiltonianPair {
    /// Assemble a pair and move any diagonal of `v` into `e0`.
    pub fn new(e0: Vec<f64>, v: Mat<f64>, lambda: f64, basis: Vec<BasisIndex>) -> Result<Self> {
        let n = e0.len();
        if v.nrows() != n || v.ncols() != n || basis.len() != n {
            return Err(Error::InvalidArgument(format!(
                "inconsistent dimensions: E0 {n}, V {}x{}, basis {}",
                v.nrows(),
                v.ncols(),
                basis.len()
            )));
        }
        let (e0, v) = regularize_diagonal(&e0, &v, lambda);
        Ok(HamiltonianPair { e0, v, lambda, basis })
    }

    pub fn dim(&self) -> usize {
        self.e0.len()
    }

    /// Dense `H = diag(E0) + λV`.
    pub fn hamiltonian(&self) -> Mat<f64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            let d = if i == j { self.e0[i] } else { 0.0 };
            d + self.lambda * self.v[(i, j)]
        })
    }

    /// Largest `|V_ij|`.
    pub fn v_max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.v[(i, j)].abs());
            }
        }
        m
    }

    /// `max E0 − min E0`.
    pub fn unperturbed_range(&self) -> f64 {
        let lo = self.e0.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.e0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if self.e0.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    /// Symmetry, zero diagonal and dimension invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.dim();
        if self.v.nrows() != n || self.v.ncols() != n || self.basis.len() != n {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        let scale = self.v_max_abs().max(f64::MIN_POSITIVE);
        for i in 0..n {
            if self.v[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("V[{i},{i}] = {} != 0", self.v[(i, i)])));
            }
            for j in 0..i {
                let d = (self.v[(i, j)] - self.v[(j, i)]).abs();
                if d > 1e-14 * scale {
                    return Err(Error::InvalidArgument(format!("V not symmetric at ({i},{j}): difference {d}")));
                }
            }
        }
        for (k, b) in self.basis.iter().enumerate() {
            if b.k != k {
                return Err(Error::InvalidArgument(format!("basis entry {k} carries index {}", b.k)));
            }
        }
        Ok(())
    }

    /// SHA-256 over dimension, λ, E0 and V (column-major), little-endian.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        h.update(self.lambda.to_le_bytes());
        for e in &self.e0 {
            h.update(e.to_le_bytes());
        }
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                h.update(self.v[(i, j)].to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

/// Move the diagonal of `λV` into the unperturbed energies.
///
/// Returns `E0'_k = E0_k + λ V_kk` and `V'` equal to `V` off the diagonal
/// with `V'_kk = 0`; `diag(E0') + λV'` equals `diag(E0) + λV`.
pub fn regularize_diagonal(e0: &[f64], v: &Mat<f64>, lambda: f64) -> (Vec<f64>, Mat<f64>) {
    let mut e = e0.to_vec();
    let mut w = v.clone();
    for k in 0..e.len() {
        let d = w[(k, k)];
        if d != 0.0 {
            e[k] += lambda * d;
            w[(k, k)] = 0.0;
        }
    }
    (e, w)
}

/// A quantum model with an integrable unperturbed part and a classical limit.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    fn parameters(&self) -> &'static [ParamDef];

    /// Enumerate the unperturbed basis for `spec`.
    fn basis(&self, spec: &ModelSpec) -> Result<Vec<BasisIndex>>;

    /// Build the regularized pair.
    fn build(&self, spec: &ModelSpec) -> Result<HamiltonianPair>;

    /// Classical counterpart in two-dimensional action-angle variables.
    fn classical(&self, spec: &ModelSpec) -> Result<Box<dyn ClassicalModel>>;

    /// The two quantum numbers whose `mħ` values are the actions of a cell.
    fn cell_label(&self, b: &BasisIndex) -> [u32; 2];

    /// Integer coordinates on which lattice 4-neighbourhoods are taken.
    fn lattice_coords(&self, b: &BasisIndex) -> [i64; 2] {
        let [a, c] = self.cell_label(b);
        [a as i64, c as i64]
    }

    /// Classical actions `I_m = m ħ_eff` of a basis state.
    fn actions(&self, spec: &ModelSpec, b: &BasisIndex) -> [f64; 2] {
        let h = spec.hbar_eff();
        let [a, c] = self.cell_label(b);
        [a as f64 * h, c as f64 * h]
    }

    /// Diameter of the action domain, for normalizing border distances.
    fn domain_diameter(&self, spec: &ModelSpec) -> f64;

    /// Probability weight of `state` on the truncation boundary, if the model truncates.
    fn truncation_weight(&self, _spec: &ModelSpec, _basis: &[BasisIndex], _state: &[f64]) -> Option<f64> {
        None
    }
}

pub(crate) fn check_dim(dim: usize, spec: &ModelSpec) -> Result<()> {
    if dim > spec.max_dim {
        return Err(Error::DimensionOverflow { dim, limit: spec.max_dim });
    }
    Ok(())
}

/// Name-keyed collection of [`Model`] implementations.
pub struct ModelRegistry {
    models: BTreeMap<&'static str, Box<dyn Model>>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry { models: BTreeMap::new() }
    }

    /// LMG, Dicke and Bose-Hubbard.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Lmg));
        r.register(Box::new(Dicke));
        r.register(Box::new(BoseHubbard));
        r
    }

    pub fn register(&mut self, model: Box<dyn Model>) {
        self.models.insert(model.name(), model);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Model> {
        self.models.get(name).map(|m| m.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "model",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.keys().copied().collect()
    }

    /// Look up `spec.model` and build it.
    pub fn build(&self, spec: &ModelSpec) -> Result<HamiltonianPair> {
        self.get(&spec.model)?.build(spec)
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Accumulates matrix elements `V[to, from] += value` and symmetrizes at the end.
pub(crate) struct MatrixAccumulator {
    v: Mat<f64>,
}

impl MatrixAccumulator {
    pub fn new(n: usize) -> Self {
        MatrixAccumulator { v: Mat::zeros(n, n) }
    }

    pub fn add(&mut self, to: usize, from: usize, value: f64) {
        self.v[(to, from)] += value;
    }

    /// Average `V` with its transpose so the result is exactly symmetric.
    pub fn finish(mut self) -> Mat<f64> {
        let n = self.v.nrows();
        for j in 0..n {
            for i in 0..j {
                let s = 0.5 * (self.v[(i, j)] + self.v[(j, i)]);
                self.v[(i, j)] = s;
                self.v[(j, i)] = s;
            }
        }
        self.v
    }
}
