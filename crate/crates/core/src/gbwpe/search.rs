//! Search for a locally maximal passing set `S` (the PT region).
//!
//! Starting from the full basis, states leave `S` in the order of a removal
//! score recomputed after every removal, until the convergence check passes.
//! States of the complement are then offered back in
//! descending `|E_α − E0_k|` order until a full sweep adds nothing.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::score::{RemovalScore, ScoreRegistry};
use super::solver::{ConditionSolver, Session, SolverRegistry};
use super::{w_spectrum, RegionPartition, StateProblem, Verdict, WSpectrum};
use crate::error::{Error, Result};
use crate::models::HamiltonianPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PtSearchOptions {
    /// Registry name of the convergence solver.
    pub solver: String,
    /// Registry name of the removal score.
    pub score: String,
    pub imag_tol: Option<f64>,
    /// Up to this many removal steps every prefix is checked in turn; longer
    /// removal sequences are searched by doubling and bisection.
    pub sequential_limit: usize,
    pub readd: bool,
    /// Compute the full spectrum of the final `W_S`.
    pub compute_spectrum: bool,
    /// Relative degeneracy guard on `|E_α − E0_k|`.
    pub degeneracy_guard: f64,
}

impl Default for PtSearchOptions {
    fn default() -> Self {
        PtSearchOptions {
            solver: "block".into(),
            score: "column-norm-gap".into(),
            imag_tol: None,
            sequential_limit: 400,
            readd: true,
            compute_spectrum: true,
            degeneracy_guard: crate::spectral::DEGENERACY_GUARD,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchStats {
    /// Length of the precomputed removal sequence.
    pub removal_order_len: usize,
    /// States removed before the first passing prefix.
    pub removed: usize,
    /// States put back by the re-add sweeps.
    pub readded: usize,
    pub checks: usize,
}

#[derive(Debug, Clone)]
pub struct PtRegion {
    pub partition: RegionPartition,
    pub verdict: Verdict,
    pub spectrum: Option<WSpectrum>,
    pub stats: SearchStats,
}

/// PT region of state `alpha`, with strategies looked up by name in `opts`.
pub fn find_pt_region(
    pair: &HamiltonianPair,
    energies: &[f64],
    alpha: usize,
    opts: &PtSearchOptions,
) -> Result<PtRegion> {
    if pair.lambda == 0.0 {
        return unperturbed_region(pair, energies, alpha, opts.degeneracy_guard);
    }
    let mut prob = StateProblem::from_energies_with_guard(pair, energies, alpha, opts.degeneracy_guard)?;
    prob.imag_tol = opts.imag_tol;
    let solvers = SolverRegistry::builtin();
    let scores = ScoreRegistry::builtin();
    find_pt_region_with(&prob, solvers.get(&opts.solver)?, scores.get(&opts.score)?, opts)
}

/// Without a perturbation `W_S = 0` for every `S` avoiding the levels
/// degenerate with `E_α`, so those levels alone form the complement.
fn unperturbed_region(pair: &HamiltonianPair, energies: &[f64], alpha: usize, guard: f64) -> Result<PtRegion> {
    let e = *energies.get(alpha).ok_or_else(|| Error::InvalidArgument(format!("state index {alpha} out of range")))?;
    let tol = guard * crate::spectral::spectral_range(energies);
    let mask: Vec<bool> = pair.e0.iter().map(|&x| (e - x).abs() > tol).collect();
    let partition = RegionPartition::from_mask(alpha, &mask);
    let spectrum = WSpectrum::from_eigenvalues(vec![faer::c64::new(0.0, 0.0); partition.s.len()]);
    Ok(PtRegion { partition, verdict: Verdict::PassReal, spectrum: Some(spectrum), stats: SearchStats::default() })
}

#[derive(PartialEq)]
struct Ranked {
    score: f64,
    k: usize,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        other.score.total_cmp(&self.score).then(self.k.cmp(&other.k))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy removal sequence; stops once every remaining score is zero.
pub(crate) fn removal_order(prob: &StateProblem, score: &dyn RemovalScore) -> Vec<usize> {
    let n = prob.dim();
    let mut in_s = vec![true; n];
    let mut current: Vec<f64> = (0..n).map(|k| score.score(prob, k, &in_s)).collect();
    let mut queue: BTreeSet<Ranked> = (0..n).map(|k| Ranked { score: current[k], k }).collect();
    let mut order = Vec::new();
    while let Some(top) = queue.pop_first() {
        if top.score == 0.0 {
            break;
        }
        let k = top.k;
        in_s[k] = false;
        order.push(k);
        for &(j, _) in &prob.coupling[k] {
            if in_s[j] {
                queue.remove(&Ranked { score: current[j], k: j });
                current[j] = score.score(prob, j, &in_s);
                queue.insert(Ranked { score: current[j], k: j });
            }
        }
    }
    order
}

fn prefix_set(n: usize, order: &[usize], r: usize) -> Vec<usize> {
    let mut in_s = vec![true; n];
    for &k in &order[..r] {
        in_s[k] = false;
    }
    (0..n).filter(|&k| in_s[k]).collect()
}

/// PT region of `prob` with explicit strategies.
pub fn find_pt_region_with(
    prob: &StateProblem,
    solver: &dyn ConditionSolver,
    score: &dyn RemovalScore,
    opts: &PtSearchOptions,
) -> Result<PtRegion> {
    let n = prob.dim();
    let order = removal_order(prob, score);
    let len = order.len();
    let mut stats = SearchStats { removal_order_len: len, ..Default::default() };
    let check = |r: usize, stats: &mut SearchStats| -> Result<bool> {
        stats.checks += 1;
        Ok(solver.check(prob, &prefix_set(n, &order, r))?.passes())
    };

    let removed = if len <= opts.sequential_limit {
        let mut found = None;
        for r in 0..=len {
            if check(r, &mut stats)? {
                found = Some(r);
                break;
            }
        }
        found.ok_or(Error::SearchExhausted)?
    } else {
        // Assumes passing is (mostly) monotone along the removal sequence.
        let mut lo = None;
        let mut r = 0;
        loop {
            if check(r, &mut stats)? {
                break;
            }
            if r == len {
                return Err(Error::SearchExhausted);
            }
            lo = Some(r);
            r = if r == 0 { 1 } else { (2 * r).min(len) };
        }
        let mut hi = r;
        if let Some(mut lo) = lo {
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if check(mid, &mut stats)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        hi
    };
    stats.removed = removed;

    let mut session = solver.session(prob, &prefix_set(n, &order, removed))?;
    if opts.readd {
        readd(prob, session.as_mut(), &mut stats)?;
    }
    let verdict = session.verdict();
    if !verdict.passes() {
        return Err(Error::SearchExhausted);
    }
    let members = session.members();
    let partition = RegionPartition::from_s(prob.alpha, n, &members)?;
    let spectrum = if opts.compute_spectrum { Some(w_spectrum(&prob.w_matrix(&members))?) } else { None };
    Ok(PtRegion { partition, verdict, spectrum, stats })
}

/// Complement states by descending `|gap|` then index.
fn candidates(prob: &StateProblem, session: &dyn Session) -> Vec<usize> {
    let mut c: Vec<usize> = (0..prob.dim()).filter(|&k| !session.contains(k)).collect();
    c.sort_by(|&a, &b| prob.gaps[b].abs().total_cmp(&prob.gaps[a].abs()).then(a.cmp(&b)));
    c
}

fn readd(prob: &StateProblem, session: &mut dyn Session, stats: &mut SearchStats) -> Result<()> {
    loop {
        let mut added = false;
        for k in candidates(prob, session) {
            stats.checks += 1;
            if session.try_add(k)?.passes() {
                session.commit(k)?;
                stats.readded += 1;
                added = true;
            }
        }
        if !added {
            return Ok(());
        }
    }
}

/// Complement states whose single addition still passes,
/// as judged by `solver`. Empty for a locally maximal region.
pub fn nonmaximal_additions(
    prob: &StateProblem,
    solver: &dyn ConditionSolver,
    partition: &RegionPartition,
) -> Result<Vec<usize>> {
    let mut session = solver.session(prob, &partition.s)?;
    let mut out = Vec::new();
    for k in candidates(prob, session.as_ref()) {
        if session.try_add(k)?.passes() {
            out.push(k);
        }
    }
    out.sort_unstable();
    Ok(out)
}
