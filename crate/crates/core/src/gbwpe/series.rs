//! The expansion `|α_P⟩ = Σ_{n≥1} T_a^n |α_Q⟩` evaluated term by term.
//!
//! On `S` the terms obey `t_1 = (T|α_Q⟩)|_S / (1 − a)` and
//! `t_{n+1} = (R − a) t_n / (1 − a)` with `R = D⁻¹ λV_SS` (rows scaled by the
//! gaps). `R` is similar to the column-scaled `W_S`, so both share a spectrum.

use serde::Serialize;

use super::{RegionPartition, StateProblem};
use crate::error::{Error, Result};
use crate::models::HamiltonianPair;
use crate::spectral::EigenSolution;

/// Consecutive growing terms after which the series is declared divergent.
pub const DIVERGENCE_WINDOW: usize = 50;

/// Term norms beyond this multiple of the first term count as divergence.
const RUNAWAY: f64 = 1e8;

/// Terms over which the contraction rate is averaged for the stopping test.
const RATE_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesConfig {
    pub a: f64,
    pub n_max: usize,
    /// Relative tolerance on the reconstructed `P_S|α⟩`.
    pub tol: f64,
    /// Relative degeneracy guard on `|E_α − E0_k|`.
    pub degeneracy_guard: f64,
}

impl SeriesConfig {
    pub fn new(a: f64) -> Self {
        SeriesConfig { a, n_max: 10_000, tol: 1e-8, degeneracy_guard: crate::spectral::DEGENERACY_GUARD }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.n_max < 1 || !(self.a < 1.0) || !(self.degeneracy_guard > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "series config needs tol > 0, n_max >= 1, a < 1, guard > 0 (got tol {}, n_max {}, a {}, guard {})",
                self.tol, self.n_max, self.a, self.degeneracy_guard
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    /// Partial sum on `S`, in the order of `partition.s`.
    pub partial_sum: Vec<f64>,
    /// `‖Σ t_n − P_S|α⟩‖ / ‖P_S|α⟩‖` (absolute when `P_S|α⟩ = 0`).
    pub reconstruction_error: f64,
    pub terms_used: usize,
    /// `‖t_n‖` for every term summed.
    pub residual_history: Vec<f64>,
    /// The stopping test was met and the error is within `tol`.
    pub converged: bool,
    pub diverged: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sparse rows of `λV` restricted to `S`, in local indices.
fn local_rows(prob: &StateProblem, s: &[usize]) -> Vec<Vec<(usize, f64)>> {
    let mut local = vec![usize::MAX; prob.dim()];
    for (i, &k) in s.iter().enumerate() {
        local[k] = i;
    }
    s.iter()
        .map(|&k| {
            prob.coupling[k]
                .iter()
                .filter(|&&(kp, _)| local[kp] != usize::MAX)
                .map(|&(kp, lv)| (local[kp], lv))
                .collect()
        })
        .collect()
}

fn check_partition(pair: &HamiltonianPair, sol: &EigenSolution, alpha: usize, p: &RegionPartition) -> Result<()> {
    if p.dim() != pair.dim() || sol.dim() != pair.dim() || alpha >= sol.dim() || p.alpha != alpha {
        return Err(Error::InvalidArgument("partition, eigensolution and pair disagree".into()));
    }
    Ok(())
}

/// Sum the series for state `alpha` on `partition.s` and compare with the
/// exact `P_S|α⟩`. The caller is responsible for `cfg.a` being admissible;
/// an inadmissible shift shows up as `diverged`.
pub fn evaluate_series(
    pair: &HamiltonianPair,
    sol: &EigenSolution,
    alpha: usize,
    partition: &RegionPartition,
    cfg: &SeriesConfig,
) -> Result<SeriesResult> {
    cfg.validate()?;
    check_partition(pair, sol, alpha, partition)?;
    let prob = StateProblem::from_energies_with_guard(pair, &sol.energies, alpha, cfg.degeneracy_guard)?;
    let s = &partition.s;
    let exact: Vec<f64> = s.iter().map(|&k| sol.component(alpha, k)).collect();
    let exact_norm = norm(&exact);
    if s.is_empty() {
        return Ok(SeriesResult {
            partial_sum: Vec::new(),
            reconstruction_error: 0.0,
            terms_used: 0,
            residual_history: Vec::new(),
            converged: true,
            diverged: false,
        });
    }

    let in_s = partition.mask();
    let scale = 1.0 / (1.0 - cfg.a);
    let mut t: Vec<f64> = s
        .iter()
        .map(|&k| {
            let q: f64 = prob.coupling[k]
                .iter()
                .filter(|&&(kp, _)| !in_s[kp])
                .map(|&(kp, lv)| lv * sol.component(alpha, kp))
                .sum();
            q / prob.gaps[k] * scale
        })
        .collect();
    let rows = local_rows(&prob, s);
    let gaps: Vec<f64> = s.iter().map(|&k| prob.gaps[k]).collect();

    let mut sum = vec![0.0; s.len()];
    let mut history = Vec::new();
    let mut stopped = false;
    let mut diverged = false;
    let mut growing = 0;
    let reference = norm(&t);
    let mut next = vec![0.0; s.len()];
    for n in 1..=cfg.n_max {
        for (acc, v) in sum.iter_mut().zip(&t) {
            *acc += v;
        }
        let tn = norm(&t);
        history.push(tn);
        if !tn.is_finite() || tn > RUNAWAY * reference {
            diverged = true;
            break;
        }
        if tn == 0.0 {
            stopped = true;
            break;
        }
        if n >= 2 {
            let prev = history[n - 2];
            if tn > prev {
                growing += 1;
                if growing >= DIVERGENCE_WINDOW {
                    diverged = true;
                    break;
                }
            } else {
                growing = 0;
            }
            // Tail ratio: the worse of the last step and the mean rate over a
            // short window, since complex spectra make single ratios oscillate.
            let m = (n - 1).min(RATE_WINDOW);
            let q = (tn / prev).max((tn / history[n - 1 - m]).powf(1.0 / m as f64));
            if q < 1.0 && tn * q / (1.0 - q) <= 0.1 * cfg.tol * norm(&sum) {
                stopped = true;
                break;
            }
        }
        for (i, row) in rows.iter().enumerate() {
            let rt: f64 = row.iter().map(|&(j, lv)| lv * t[j]).sum::<f64>() / gaps[i];
            next[i] = (rt - cfg.a * t[i]) * scale;
        }
        std::mem::swap(&mut t, &mut next);
    }

    let diff: Vec<f64> = sum.iter().zip(&exact).map(|(x, y)| x - y).collect();
    let reconstruction_error = if exact_norm > 0.0 { norm(&diff) / exact_norm } else { norm(&diff) };
    Ok(SeriesResult {
        partial_sum: sum,
        reconstruction_error,
        terms_used: history.len(),
        residual_history: history,
        converged: stopped && !diverged && reconstruction_error <= cfg.tol,
        diverged,
    })
}

/// `‖W_a^n P_S|α⟩‖²` by `n` applications of `W_a = (W_S − a)/(1 − a)`.
pub fn residual_norm(
    pair: &HamiltonianPair,
    sol: &EigenSolution,
    alpha: usize,
    partition: &RegionPartition,
    a: f64,
    n: usize,
) -> Result<f64> {
    check_partition(pair, sol, alpha, partition)?;
    let prob = StateProblem::from_energies(pair, &sol.energies, alpha)?;
    let s = &partition.s;
    let rows = local_rows(&prob, s);
    let gaps: Vec<f64> = s.iter().map(|&k| prob.gaps[k]).collect();
    let scale = 1.0 / (1.0 - a);
    let mut x: Vec<f64> = s.iter().map(|&k| sol.component(alpha, k)).collect();
    let mut y = vec![0.0; s.len()];
    for _ in 0..n {
        // (W x)_{k'} = Σ_k λV_{k'k} x_k / gap_k; λV symmetric.
        for (i, row) in rows.iter().enumerate() {
            let wx: f64 = row.iter().map(|&(j, lv)| lv * x[j] / gaps[j]).sum();
            y[i] = (wx - a * x[i]) * scale;
        }
        std::mem::swap(&mut x, &mut y);
    }
    Ok(x.iter().map(|v| v * v).sum())
}
