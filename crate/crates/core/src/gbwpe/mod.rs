//! Generalized Brillouin-Wigner perturbation expansion on a subset `S` of the
//! unperturbed basis.
//!
//! For a perturbed state `|α⟩` and a split of the basis into `S` and its
//! complement `S̄`, the components on `S` follow from those on `S̄` through
//! `|α_P⟩ = Σ_n T_a^n |α_Q⟩` whenever the shifted operator
//! `W_a = (W_S − a)/(1 − a)` is a spectral contraction. Here
//! `W_S = Σ_{k,k'∈S} λV_{k'k}/(E_α − E0_k) |k'⟩⟨k|`.
//!
//! The convergence check is a [`ConditionSolver`] strategy and the PT-region
//! search drops states in the order given by a [`RemovalScore`] strategy.

mod band;
mod score;
mod search;
mod series;
mod solver;

use faer::{c64, Mat};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::HamiltonianPair;
use crate::spectral::{spectral_range, DEGENERACY_GUARD};

pub use score::{ColumnNormGap, MaxEntryGap, RemovalScore, ScoreRegistry};
pub use search::{find_pt_region, find_pt_region_with, nonmaximal_additions, PtRegion, PtSearchOptions, SearchStats};
pub use series::{evaluate_series, residual_norm, SeriesConfig, SeriesResult, DIVERGENCE_WINDOW};
pub use solver::{BlockSolver, ConditionSolver, DenseSolver, Session, SolverRegistry};

/// Split of the basis into the PT candidate `S` and its complement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionPartition {
    pub alpha: usize,
    /// Sorted.
    pub s: Vec<usize>,
    /// Sorted.
    pub s_bar: Vec<usize>,
}

impl RegionPartition {
    /// Partition with `S` given by `mask`.
    pub fn from_mask(alpha: usize, mask: &[bool]) -> Self {
        let (mut s, mut s_bar) = (Vec::new(), Vec::new());
        for (k, &inside) in mask.iter().enumerate() {
            if inside {
                s.push(k);
            } else {
                s_bar.push(k);
            }
        }
        RegionPartition { alpha, s, s_bar }
    }

    /// Partition with `S` given as an index list over a basis of size `dim`.
    pub fn from_s(alpha: usize, dim: usize, s: &[usize]) -> Result<Self> {
        let mut mask = vec![false; dim];
        for &k in s {
            if k >= dim || mask[k] {
                return Err(Error::InvalidArgument(format!("S entry {k} out of range or repeated")));
            }
            mask[k] = true;
        }
        Ok(Self::from_mask(alpha, &mask))
    }

    pub fn dim(&self) -> usize {
        self.s.len() + self.s_bar.len()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.dim()];
        for &k in &self.s {
            m[k] = true;
        }
        m
    }
}

/// One perturbed state seen from the unperturbed basis: gaps `E_α − E0_k`
/// and the nonzero off-diagonal couplings `λV`.
#[derive(Debug, Clone)]
pub struct StateProblem {
    pub alpha: usize,
    pub e_alpha: f64,
    pub gaps: Vec<f64>,
    /// `coupling[k]` lists `(k', λV_{k'k})` for every `k' ≠ k` with `V_{k'k} ≠ 0`.
    pub coupling: Vec<Vec<(usize, f64)>>,
    /// Threshold on `|Im w|` below which a spectrum counts as real;
    /// `None` selects [`default_imag_tol`].
    pub imag_tol: Option<f64>,
    /// Eigenvalues of `W` at or above `1 − unit_margin` fail. At least
    /// [`UNIT_MARGIN`], larger when a small gap amplifies rounding in `E_α`.
    pub unit_margin: f64,
}

impl StateProblem {
    /// Gaps and couplings of state `alpha`, guarded against `E_α ≈ E0_k`
    /// relative to `range`.
    pub fn new(pair: &HamiltonianPair, alpha: usize, e_alpha: f64, range: f64) -> Result<Self> {
        Self::with_guard(pair, alpha, e_alpha, range, DEGENERACY_GUARD)
    }

    /// As [`StateProblem::new`] with a relative degeneracy guard of `guard`.
    pub fn with_guard(pair: &HamiltonianPair, alpha: usize, e_alpha: f64, range: f64, guard: f64) -> Result<Self> {
        crate::spectral::check_nondegenerate(&pair.e0, alpha, e_alpha, range, guard)?;
        let n = pair.dim();
        let mut coupling = vec![Vec::new(); n];
        for (k, list) in coupling.iter_mut().enumerate() {
            let col = pair.v.col(k);
            for kp in 0..n {
                let v = col[kp];
                if kp != k && v != 0.0 {
                    list.push((kp, pair.lambda * v));
                }
            }
        }
        let gaps: Vec<f64> = pair.e0.iter().map(|e| e_alpha - e).collect();
        let energy_scale = pair.e0.iter().fold(range.max(e_alpha.abs()), |m, e| m.max(e.abs()));
        let min_gap = gaps.iter().fold(f64::INFINITY, |m, g| m.min(g.abs()));
        let unit_margin = UNIT_MARGIN.max(64.0 * f64::EPSILON * energy_scale / min_gap);
        Ok(StateProblem { alpha, e_alpha, gaps, coupling, imag_tol: None, unit_margin })
    }

    /// State `alpha` of a spectrum given by its sorted energies.
    pub fn from_energies(pair: &HamiltonianPair, energies: &[f64], alpha: usize) -> Result<Self> {
        Self::from_energies_with_guard(pair, energies, alpha, DEGENERACY_GUARD)
    }

    pub fn from_energies_with_guard(
        pair: &HamiltonianPair,
        energies: &[f64],
        alpha: usize,
        guard: f64,
    ) -> Result<Self> {
        if alpha >= energies.len() {
            return Err(Error::InvalidArgument(format!(
                "state index {alpha} out of range for {} energies",
                energies.len()
            )));
        }
        Self::with_guard(pair, alpha, energies[alpha], spectral_range(energies), guard)
    }

    pub fn dim(&self) -> usize {
        self.gaps.len()
    }

    /// Dense `W_S` over the sorted index list `s`.
    pub fn w_matrix(&self, s: &[usize]) -> Mat<f64> {
        let mut local = vec![usize::MAX; self.dim()];
        for (i, &k) in s.iter().enumerate() {
            local[k] = i;
        }
        let mut w = Mat::zeros(s.len(), s.len());
        for (j, &k) in s.iter().enumerate() {
            for &(kp, lv) in &self.coupling[k] {
                let i = local[kp];
                if i != usize::MAX {
                    w[(i, j)] = lv / self.gaps[k];
                }
            }
        }
        w
    }

    pub fn verdict_of(&self, spec: &WSpectrum) -> Verdict {
        check_condition_with(spec, self.imag_tol.unwrap_or_else(|| default_imag_tol(spec)), self.unit_margin)
    }
}

/// `W_S[k', k] = λV_{k'k}/(E_α − E0_k)` for `k, k' ∈ s`, in the order of `s`.
///
/// Fails if some `k ∈ s` has `|E_α − E0_k|` within the degeneracy guard of
/// the unperturbed energy range.
pub fn build_w(pair: &HamiltonianPair, e_alpha: f64, s: &[usize]) -> Result<Mat<f64>> {
    let tol = DEGENERACY_GUARD * pair.unperturbed_range();
    for &k in s {
        let gap = e_alpha - pair.e0[k];
        if gap == 0.0 || gap.abs() < tol {
            return Err(Error::Degenerate { alpha: None, k, e_alpha, e0: pair.e0[k] });
        }
    }
    Ok(Mat::from_fn(s.len(), s.len(), |i, j| {
        let (kp, k) = (s[i], s[j]);
        pair.lambda * pair.v[(kp, k)] / (e_alpha - pair.e0[k])
    }))
}

/// Eigenvalues of `W_S` with the summaries the convergence check needs.
#[derive(Debug, Clone, PartialEq)]
pub struct WSpectrum {
    pub eigenvalues: Vec<c64>,
    /// `max Re w`; zero for an empty spectrum.
    pub re_max: f64,
    /// `min Re w`; zero for an empty spectrum.
    pub re_min: f64,
    pub max_imag: f64,
    /// `Σ w` (real part; the imaginary parts cancel in conjugate pairs).
    pub trace_sum: f64,
    /// `Σ |w|`.
    pub abs_sum: f64,
}

impl WSpectrum {
    pub fn from_eigenvalues(eigenvalues: Vec<c64>) -> Self {
        let (mut re_max, mut re_min) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut max_imag, mut trace_sum, mut abs_sum) = (0.0f64, 0.0, 0.0);
        for w in &eigenvalues {
            re_max = re_max.max(w.re);
            re_min = re_min.min(w.re);
            max_imag = max_imag.max(w.im.abs());
            trace_sum += w.re;
            abs_sum += w.norm();
        }
        if eigenvalues.is_empty() {
            re_max = 0.0;
            re_min = 0.0;
        }
        WSpectrum { eigenvalues, re_max, re_min, max_imag, trace_sum, abs_sum }
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    /// `|Σ w| ≤ 1e-9 (1 + Σ|w|)`.
    pub fn trace_ok(&self) -> bool {
        self.trace_sum.abs() <= 1e-9 * (1.0 + self.abs_sum)
    }

    /// Eigenvalues of `W_a = (W − a)/(1 − a)`.
    pub fn shifted(&self, a: f64) -> Vec<c64> {
        self.eigenvalues.iter().map(|w| (w - c64::new(a, 0.0)) / (1.0 - a)).collect()
    }
}

/// Full nonsymmetric eigenvalue set of `w`.
pub fn w_spectrum(w: &Mat<f64>) -> Result<WSpectrum> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::InvalidArgument(format!("W is {n}x{}, not square", w.ncols())));
    }
    let eig = match n {
        0 => Vec::new(),
        1 => vec![c64::new(w[(0, 0)], 0.0)],
        _ => w.eigenvalues().map_err(|e| Error::Eigensolver { dim: n, reason: format!("{e:?}") })?,
    };
    Ok(WSpectrum::from_eigenvalues(eig))
}

/// Outcome of the convergence check on `W_S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Real spectrum with `w_max < 1`.
    PassReal,
    /// Complex spectrum with `max Re w < 1`.
    PassComplexCheckOnly,
    /// `max Re w ≥ 1`.
    Fail,
}

impl Verdict {
    pub fn passes(self) -> bool {
        self != Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PassReal => "pass_real",
            Verdict::PassComplexCheckOnly => "pass_complex_check_only",
            Verdict::Fail => "fail",
        }
    }
}

/// `1e-8 (1 + max|w|)`.
pub fn default_imag_tol(spec: &WSpectrum) -> f64 {
    1e-8 * (1.0 + spec.max_abs())
}

/// Eigenvalues within this distance below 1 count as reaching 1. With `S`
/// the full basis, `W` has the exact eigenvalue 1 and rounding can land on
/// either side of it.
pub const UNIT_MARGIN: f64 = 1e-10;

pub fn check_condition(spec: &WSpectrum, imag_tol: f64) -> Verdict {
    check_condition_with(spec, imag_tol, UNIT_MARGIN)
}

pub fn check_condition_with(spec: &WSpectrum, imag_tol: f64, unit_margin: f64) -> Verdict {
    if spec.re_max >= 1.0 - unit_margin {
        Verdict::Fail
    } else if spec.max_imag <= imag_tol {
        Verdict::PassReal
    } else {
        Verdict::PassComplexCheckOnly
    }
}

/// Shift `a < 1` minimizing the spectral radius `max |w − a|/(1 − a)` of `W_a`.
///
/// For a real spectrum this is `(w_max + w_min)/2`. For a complex spectrum
/// with `max Re w < 1` the minimizer is found by a bracketed golden-section
/// search; it is always admissible since `|w − a|/(1 − a) → 1⁻` as `a → −∞`.
pub fn choose_a(spec: &WSpectrum, imag_tol: f64) -> Result<f64> {
    match check_condition(spec, imag_tol) {
        Verdict::Fail => Err(Error::NoAdmissibleShift { re_max: spec.re_max }),
        Verdict::PassReal => Ok(0.5 * (spec.re_max + spec.re_min)),
        Verdict::PassComplexCheckOnly => Ok(minimax_shift(&spec.eigenvalues)),
    }
}

/// Spectral radius of `W_a`.
pub fn shifted_radius(eigenvalues: &[c64], a: f64) -> f64 {
    eigenvalues.iter().map(|w| (w - c64::new(a, 0.0)).norm()).fold(0.0, f64::max) / (1.0 - a)
}

fn minimax_shift(eigenvalues: &[c64]) -> f64 {
    let rho = |a: f64| shifted_radius(eigenvalues, a);
    let re_max = eigenvalues.iter().map(|w| w.re).fold(f64::NEG_INFINITY, f64::max);
    // Each |w − a|/(1 − a) is quasi-convex on a < 1, hence so is the maximum:
    // the best of the samples re_max − 2^j brackets the minimizer.
    let top = 1.0 - 1e-12 * (1.0 + re_max.abs());
    let samples: Vec<f64> = (0..64).map(|j| re_max - 2f64.powi(j)).collect();
    let best = (0..samples.len()).min_by(|&i, &j| rho(samples[i]).total_cmp(&rho(samples[j]))).unwrap_or(0);
    let mut lo = samples.get(best + 1).copied().unwrap_or(samples[best]);
    let mut hi = if best == 0 { top } else { samples[best - 1] };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (rho(x1), rho(x2));
    for _ in 0..300 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = rho(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = rho(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests;
