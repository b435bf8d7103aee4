//! Convergence-check strategies.
//!
//! `"dense"` computes the full nonsymmetric spectrum of `W_S`. `"block"` uses
//! that `W_S` is similar to `J G` with `G = |D|^{-1/2} λV |D|^{-1/2}` symmetric
//! and `J = sign(D)`, `D = diag(E_α − E0_k)`: the spectrum splits over the
//! connected components of the coupling graph on `S`, a component whose gaps
//! share one sign `σ` has a real spectrum and passes iff `σ(D − λV)` is
//! positive definite, and for mixed-sign components a change in the inertia of
//! `D − sλV` for some `s ∈ (0, 1]` exposes a real eigenvalue `w = 1/s' ≥ 1`.
//! Mixed components not settled by inertia fall back to the dense spectrum.

use std::collections::BTreeMap;

use super::band::{inertia, Inertia, RowSolve, Skyline};
use super::{w_spectrum, StateProblem, Verdict};
use crate::error::{Error, Result};

/// A way of deciding `check_condition` for subsets `S`.
pub trait ConditionSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Evaluate `S` (sorted or not) and keep enough state to test single additions.
    fn session<'p>(&self, prob: &'p StateProblem, s: &[usize]) -> Result<Box<dyn Session + 'p>>;

    fn check(&self, prob: &StateProblem, s: &[usize]) -> Result<Verdict> {
        Ok(self.session(prob, s)?.verdict())
    }
}

/// A subset `S` under evaluation.
pub trait Session {
    fn verdict(&self) -> Verdict;

    fn contains(&self, k: usize) -> bool;

    /// Sorted members of `S`.
    fn members(&self) -> Vec<usize>;

    /// Verdict for `S ∪ {k}`; `S` is unchanged.
    fn try_add(&mut self, k: usize) -> Result<Verdict>;

    /// Add `k` to `S`.
    fn commit(&mut self, k: usize) -> Result<()>;
}

fn sorted_mask(dim: usize, s: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; dim];
    for &k in s {
        if k >= dim {
            return Err(Error::InvalidArgument(format!("index {k} outside basis of size {dim}")));
        }
        mask[k] = true;
    }
    Ok(mask)
}

fn members_of(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(k, _)| k).collect()
}

fn dense_verdict(prob: &StateProblem, s: &[usize]) -> Result<Verdict> {
    Ok(prob.verdict_of(&w_spectrum(&prob.w_matrix(s))?))
}

/// Full spectrum of `W_S` on every check.
pub struct DenseSolver;

struct DenseSession<'p> {
    prob: &'p StateProblem,
    mask: Vec<bool>,
    verdict: Verdict,
}

impl ConditionSolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn session<'p>(&self, prob: &'p StateProblem, s: &[usize]) -> Result<Box<dyn Session + 'p>> {
        let mask = sorted_mask(prob.dim(), s)?;
        let verdict = dense_verdict(prob, &members_of(&mask))?;
        Ok(Box::new(DenseSession { prob, mask, verdict }))
    }
}

impl Session for DenseSession<'_> {
    fn verdict(&self) -> Verdict {
        self.verdict
    }

    fn contains(&self, k: usize) -> bool {
        self.mask[k]
    }

    fn members(&self) -> Vec<usize> {
        members_of(&self.mask)
    }

    fn try_add(&mut self, k: usize) -> Result<Verdict> {
        if self.mask[k] {
            return Ok(self.verdict);
        }
        self.mask[k] = true;
        let v = dense_verdict(self.prob, &members_of(&self.mask));
        self.mask[k] = false;
        v
    }

    fn commit(&mut self, k: usize) -> Result<()> {
        if !self.mask[k] {
            self.mask[k] = true;
            self.verdict = dense_verdict(self.prob, &members_of(&self.mask))?;
        }
        Ok(())
    }
}

/// Component-wise exact check with banded factorizations.
pub struct BlockSolver {
    /// Values of `s` at which the inertia of `D − sλV` is compared with that of `D`.
    pub inertia_samples: Vec<f64>,
    /// Pivots with `|d| ≤ tiny × scale` make an inertia count inconclusive.
    pub tiny: f64,
}

impl Default for BlockSolver {
    fn default() -> Self {
        BlockSolver { inertia_samples: vec![1.0, 0.75, 0.5, 0.35, 0.25, 0.125, 0.0625, 0.03125], tiny: 1e-12 }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// All gaps share sign `sign`; `factor` is the LDLᵀ of `sign (D − λV)`.
    Definite { sign: f64, factor: Skyline },
    /// Mixed gap signs; passing, with `complex` recording the spectrum type.
    Mixed { complex: bool },
}

#[derive(Debug, Clone)]
struct Component {
    /// In factor order.
    members: Vec<usize>,
    kind: Kind,
}

impl Component {
    fn complex(&self) -> bool {
        matches!(self.kind, Kind::Mixed { complex: true })
    }
}

enum Outcome {
    Fail,
    Pass(Component),
}

enum Pending {
    /// `k` joins no component.
    Alone,
    /// `k` appended to the definite components `comps` with the row pieces solved.
    Schur { comps: Vec<usize>, pieces: Vec<RowSolve>, pivot: f64 },
    /// Merged component evaluated from scratch.
    Merged { comps: Vec<usize>, comp: Component },
}

struct BlockSession<'p> {
    samples: Vec<f64>,
    tiny: f64,
    prob: &'p StateProblem,
    /// Component id per basis state, `usize::MAX` outside `S`.
    comp_of: Vec<usize>,
    /// Position within its component.
    local_of: Vec<usize>,
    comps: Vec<Option<Component>>,
    verdict: Verdict,
    pending: Option<(usize, Verdict, Pending)>,
}

impl ConditionSolver for BlockSolver {
    fn name(&self) -> &'static str {
        "block"
    }

    fn session<'p>(&self, prob: &'p StateProblem, s: &[usize]) -> Result<Box<dyn Session + 'p>> {
        let mut sess = BlockSession {
            samples: self.inertia_samples.clone(),
            tiny: self.tiny,
            prob,
            comp_of: vec![usize::MAX; prob.dim()],
            local_of: vec![usize::MAX; prob.dim()],
            comps: Vec::new(),
            verdict: Verdict::PassReal,
            pending: None,
        };
        sess.rebuild(&sorted_mask(prob.dim(), s)?)?;
        Ok(Box::new(sess))
    }
}

impl BlockSession<'_> {
    /// Connected components of the coupling graph restricted to `mask`,
    /// each sorted by basis index; ordered by smallest member.
    fn components(&self, mask: &[bool]) -> Vec<Vec<usize>> {
        let n = mask.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if !mask[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(k) = stack.pop() {
                comp.push(k);
                for &(kp, _) in &self.prob.coupling[k] {
                    if mask[kp] && !seen[kp] {
                        seen[kp] = true;
                        stack.push(kp);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn gap_sign(&self, k: usize) -> f64 {
        if self.prob.gaps[k] > 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Rows `(strictly-lower entries, diagonal)` of `(1 − margin) D − s λV` over `members`
    /// in their given order, scaled by `sign`.
    fn rows(&self, members: &[usize], s: f64, sign: f64) -> Vec<(Vec<(usize, f64)>, f64)> {
        let mut local = BTreeMap::new();
        for (i, &k) in members.iter().enumerate() {
            local.insert(k, i);
        }
        members
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let lower = self.prob.coupling[k]
                    .iter()
                    .filter_map(|&(kp, lv)| match local.get(&kp) {
                        Some(&j) if j < i => Some((j, -sign * s * lv)),
                        _ => None,
                    })
                    .collect();
                (lower, self.shrunk_gap(k, sign))
            })
            .collect()
    }

    /// `sign (1 − margin) gap_k`: the unit threshold pulled in by the margin.
    fn shrunk_gap(&self, k: usize, sign: f64) -> f64 {
        sign * (1.0 - self.prob.unit_margin) * self.prob.gaps[k]
    }

    fn scale(&self, members: &[usize]) -> f64 {
        members
            .iter()
            .map(|&k| {
                let off = self.prob.coupling[k].iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
                self.prob.gaps[k].abs().max(off)
            })
            .fold(0.0, f64::max)
    }

    /// Definite test; `None` if the component has mixed signs.
    fn definite(&self, members: &[usize]) -> Option<Outcome> {
        let sign = self.gap_sign(members[0]);
        if members.iter().any(|&k| self.gap_sign(k) != sign) {
            return None;
        }
        let mut factor = Skyline::default();
        for (lower, diag) in self.rows(members, 1.0, sign) {
            if factor.push_row(&lower, diag) <= 0.0 {
                return Some(Outcome::Fail);
            }
        }
        Some(Outcome::Pass(Component { members: members.to_vec(), kind: Kind::Definite { sign, factor } }))
    }

    /// `true` when an inertia change proves a real eigenvalue `w ≥ 1`.
    fn inertia_fails(&self, members: &[usize]) -> bool {
        let positive = members.iter().filter(|&&k| self.prob.gaps[k] > 0.0).count();
        let tiny = self.tiny * self.scale(members);
        self.samples
            .iter()
            .any(|&s| matches!(inertia(self.rows(members, s, 1.0), tiny), Inertia::Positive(p) if p != positive))
    }

    fn dense(&self, members: &[usize]) -> Result<Outcome> {
        Ok(match dense_verdict(self.prob, members)? {
            Verdict::Fail => Outcome::Fail,
            v => Outcome::Pass(Component {
                members: members.to_vec(),
                kind: Kind::Mixed { complex: v == Verdict::PassComplexCheckOnly },
            }),
        })
    }

    fn evaluate(&self, members: &[usize]) -> Result<Outcome> {
        if let Some(o) = self.definite(members) {
            return Ok(o);
        }
        if self.inertia_fails(members) {
            return Ok(Outcome::Fail);
        }
        self.dense(members)
    }

    fn rebuild(&mut self, mask: &[bool]) -> Result<()> {
        self.comp_of.iter_mut().for_each(|c| *c = usize::MAX);
        self.local_of.iter_mut().for_each(|c| *c = usize::MAX);
        self.comps.clear();
        self.pending = None;
        let groups = self.components(mask);
        // Cheap decisions first: definite components, then inertia, then dense.
        let mut mixed = Vec::new();
        let mut passed = Vec::new();
        for g in groups {
            match self.definite(&g) {
                Some(Outcome::Fail) => return self.fail(mask),
                Some(Outcome::Pass(c)) => passed.push(c),
                None => mixed.push(g),
            }
        }
        for g in &mixed {
            if self.inertia_fails(g) {
                return self.fail(mask);
            }
        }
        for g in &mixed {
            match self.dense(g)? {
                Outcome::Fail => return self.fail(mask),
                Outcome::Pass(c) => passed.push(c),
            }
        }
        for c in passed {
            self.install(c);
        }
        self.verdict = self.overall();
        Ok(())
    }

    /// Failing sessions keep only the membership.
    fn fail(&mut self, mask: &[bool]) -> Result<()> {
        for (k, &m) in mask.iter().enumerate() {
            if m {
                self.comp_of[k] = self.comps.len();
            }
        }
        self.comps.push(None);
        self.verdict = Verdict::Fail;
        Ok(())
    }

    fn install(&mut self, c: Component) -> usize {
        let id = self.comps.len();
        for (i, &k) in c.members.iter().enumerate() {
            self.comp_of[k] = id;
            self.local_of[k] = i;
        }
        self.comps.push(Some(c));
        id
    }

    fn overall(&self) -> Verdict {
        if self.comps.iter().flatten().any(|c| c.complex()) {
            Verdict::PassComplexCheckOnly
        } else {
            Verdict::PassReal
        }
    }

    fn mask(&self) -> Vec<bool> {
        self.comp_of.iter().map(|&c| c != usize::MAX).collect()
    }

    /// Components that `k` couples to, in increasing id order.
    fn neighbour_comps(&self, k: usize) -> Vec<usize> {
        let mut ids: Vec<usize> =
            self.prob.coupling[k].iter().map(|&(kp, _)| self.comp_of[kp]).filter(|&c| c != usize::MAX).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn plan(&self, k: usize) -> Result<(Verdict, Pending)> {
        let comps = self.neighbour_comps(k);
        if comps.is_empty() {
            return Ok((self.verdict, Pending::Alone));
        }
        let sign = self.gap_sign(k);
        let definite_same = comps.iter().all(
            |&c| matches!(&self.comps[c], Some(Component { kind: Kind::Definite { sign: s, .. }, .. }) if *s == sign),
        );
        if definite_same {
            let mut pieces = Vec::with_capacity(comps.len());
            let mut reduction = 0.0;
            for &c in &comps {
                let comp = self.comps[c].as_ref().expect("live component");
                let Kind::Definite { factor, .. } = &comp.kind else { unreachable!() };
                let lower: Vec<(usize, f64)> = self.prob.coupling[k]
                    .iter()
                    .filter(|&&(kp, _)| self.comp_of[kp] == c)
                    .map(|&(kp, lv)| (self.local_of[kp], -sign * lv))
                    .collect();
                let piece = factor.solve_row(&lower);
                reduction += piece.reduction;
                pieces.push(piece);
            }
            let pivot = self.shrunk_gap(k, sign) - reduction;
            let verdict = if pivot > 0.0 { self.verdict } else { Verdict::Fail };
            return Ok((verdict, Pending::Schur { comps, pieces, pivot }));
        }
        let mut members: Vec<usize> = comps
            .iter()
            .flat_map(|&c| self.comps[c].as_ref().expect("live component").members.iter().copied())
            .chain(std::iter::once(k))
            .collect();
        members.sort_unstable();
        match self.evaluate(&members)? {
            Outcome::Fail => Ok((Verdict::Fail, Pending::Alone)),
            Outcome::Pass(comp) => {
                let complex = comp.complex()
                    || self
                        .comps
                        .iter()
                        .enumerate()
                        .any(|(i, c)| !comps.contains(&i) && c.as_ref().is_some_and(|c| c.complex()));
                let verdict = if complex { Verdict::PassComplexCheckOnly } else { Verdict::PassReal };
                Ok((verdict, Pending::Merged { comps, comp }))
            }
        }
    }

    fn apply(&mut self, k: usize, pending: Pending) {
        match pending {
            Pending::Alone => {
                let sign = self.gap_sign(k);
                let mut factor = Skyline::default();
                factor.push_row(&[], self.shrunk_gap(k, sign));
                self.install(Component { members: vec![k], kind: Kind::Definite { sign, factor } });
            }
            Pending::Schur { comps, pieces, pivot } => {
                let sign = self.gap_sign(k);
                let mut members = Vec::new();
                let mut factor = Skyline::default();
                let mut row = RowSolve { first: usize::MAX, l: Vec::new(), reduction: 0.0 };
                for (c, piece) in comps.iter().zip(pieces) {
                    let comp = self.comps[*c].take().expect("live component");
                    let Kind::Definite { factor: f, .. } = comp.kind else { unreachable!() };
                    let offset = factor.len();
                    let len = f.len();
                    factor.append_block(f);
                    members.extend(comp.members);
                    if row.first == usize::MAX {
                        row.first = offset + piece.first;
                    } else {
                        let gap = offset + piece.first - (row.first + row.l.len());
                        row.l.extend(std::iter::repeat_n(0.0, gap));
                    }
                    row.l.extend(piece.l);
                    debug_assert_eq!(row.first + row.l.len(), offset + len);
                }
                factor.push_solved(row, pivot);
                members.push(k);
                self.install(Component { members, kind: Kind::Definite { sign, factor } });
            }
            Pending::Merged { comps, comp } => {
                for c in comps {
                    self.comps[c] = None;
                }
                self.install(comp);
            }
        }
        self.verdict = self.overall();
    }
}

impl Session for BlockSession<'_> {
    fn verdict(&self) -> Verdict {
        self.verdict
    }

    fn contains(&self, k: usize) -> bool {
        self.comp_of[k] != usize::MAX
    }

    fn members(&self) -> Vec<usize> {
        members_of(&self.mask())
    }

    fn try_add(&mut self, k: usize) -> Result<Verdict> {
        if self.contains(k) {
            return Ok(self.verdict);
        }
        if self.verdict == Verdict::Fail {
            let mut mask = self.mask();
            mask[k] = true;
            return dense_or_block_fresh(self, &mask);
        }
        let (v, p) = self.plan(k)?;
        self.pending = Some((k, v, p));
        Ok(v)
    }

    fn commit(&mut self, k: usize) -> Result<()> {
        if self.contains(k) {
            return Ok(());
        }
        if self.verdict == Verdict::Fail {
            let mut mask = self.mask();
            mask[k] = true;
            return self.rebuild(&mask);
        }
        let pending = match self.pending.take() {
            Some((pk, v, p)) if pk == k => Some((v, p)),
            _ => None,
        };
        let (v, p) = match pending {
            Some(x) => x,
            None => self.plan(k)?,
        };
        if v == Verdict::Fail {
            let mut mask = self.mask();
            mask[k] = true;
            return self.rebuild(&mask);
        }
        self.apply(k, p);
        Ok(())
    }
}

/// Fresh evaluation of `mask` with the same settings, leaving `sess` untouched.
fn dense_or_block_fresh(sess: &BlockSession<'_>, mask: &[bool]) -> Result<Verdict> {
    let mut probe = BlockSession {
        samples: sess.samples.clone(),
        tiny: sess.tiny,
        prob: sess.prob,
        comp_of: vec![usize::MAX; sess.prob.dim()],
        local_of: vec![usize::MAX; sess.prob.dim()],
        comps: Vec::new(),
        verdict: Verdict::PassReal,
        pending: None,
    };
    probe.rebuild(mask)?;
    Ok(probe.verdict)
}

/// Name-keyed collection of [`ConditionSolver`]s.
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn ConditionSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        SolverRegistry { solvers: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(DenseSolver));
        r.register(Box::new(BlockSolver::default()));
        r
    }

    pub fn register(&mut self, solver: Box<dyn ConditionSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ConditionSolver> {
        self.solvers.get(name).map(|s| s.as_ref()).ok_or_else(|| Error::UnknownStrategy {
            kind: "convergence solver",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.keys().copied().collect()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
