//! Three-orbital Lipkin-Meshkov-Glick model, collective (fully symmetric) sector.
//!
//! Levels `r = 0, 1, 2` with occupations `(m0, m1, m2)`, `m0 = Ω − m1 − m2`.
//! `K_rs` acts as `a_r† a_s` on the occupations. Couplings are given in the
//! size-free form `ε_r Ω` and `μ_t Ω²`.

use std::collections::HashMap;

use crate::classical::{ClassicalModel, LmgClassical};
use crate::error::Result;

use super::{
    check_dim, resolve_params, BasisIndex, HamiltonianPair, MatrixAccumulator, Model, ModelSpec, ParamDef, ParamDefault,
};

const PARAMS: &[ParamDef] = &[
    ParamDef { name: "eps1", default: ParamDefault::Value(44.1), doc: "ε1·Ω" },
    ParamDef { name: "eps2", default: ParamDefault::Value(64.5), doc: "ε2·Ω" },
    ParamDef { name: "mu1", default: ParamDefault::Value(62.1), doc: "μ1·Ω²" },
    ParamDef { name: "mu2", default: ParamDefault::Value(70.2), doc: "μ2·Ω²" },
    ParamDef { name: "mu3", default: ParamDefault::Value(76.5), doc: "μ3·Ω²" },
    ParamDef { name: "mu4", default: ParamDefault::Value(65.7), doc: "μ4·Ω²" },
];

/// `(coefficient index, [(r, s) of the right factor, (r, s) of the left factor])`
/// for every product of two `K_rs` in `V = Σ_t μ_t V^(t)`.
const TERMS: &[(usize, [(usize, usize); 2])] = &[
    (0, [(1, 0), (1, 0)]), // K10 K10
    (0, [(0, 1), (0, 1)]), // K01 K01
    (1, [(2, 0), (2, 0)]), // K20 K20
    (1, [(0, 2), (0, 2)]), // K02 K02
    (2, [(2, 0), (2, 1)]), // K21 K20
    (2, [(1, 2), (0, 2)]), // K02 K12
    (3, [(1, 0), (1, 2)]), // K12 K10
    (3, [(2, 1), (0, 1)]), // K01 K21
];

/// `a_r† a_s` on occupations; `None` when it annihilates the state.
fn ladder(occ: [u32; 3], r: usize, s: usize) -> Option<(f64, [u32; 3])> {
    if occ[s] == 0 {
        return None;
    }
    let mut out = occ;
    let amp = (occ[s] as f64 * (occ[r] + 1) as f64).sqrt();
    out[s] -= 1;
    out[r] += 1;
    Some((amp, out))
}

pub struct Lmg;

impl Lmg {
    pub fn dimension(omega: usize) -> usize {
        (omega + 1) * (omega + 2) / 2
    }
}

impl Model for Lmg {
    fn name(&self) -> &'static str {
        "lmg"
    }

    fn parameters(&self) -> &'static [ParamDef] {
        PARAMS
    }

    fn basis(&self, spec: &ModelSpec) -> Result<Vec<BasisIndex>> {
        let omega = spec.size as u32;
        check_dim(Self::dimension(spec.size), spec)?;
        let mut out = Vec::with_capacity(Self::dimension(spec.size));
        for m1 in 0..=omega {
            for m2 in 0..=(omega - m1) {
                out.push(BasisIndex { m: vec![m1, m2], k: out.len() });
            }
        }
        Ok(out)
    }

    fn build(&self, spec: &ModelSpec) -> Result<HamiltonianPair> {
        let p = resolve_params(PARAMS, spec)?;
        let basis = self.basis(spec)?;
        let omega = spec.size as f64;
        let eps1 = p.get("eps1") / omega;
        let eps2 = p.get("eps2") / omega;
        let mu = [
            p.get("mu1") / (omega * omega),
            p.get("mu2") / (omega * omega),
            p.get("mu3") / (omega * omega),
            p.get("mu4") / (omega * omega),
        ];

        let index: HashMap<(u32, u32), usize> = basis.iter().map(|b| ((b.m[0], b.m[1]), b.k)).collect();
        let n = basis.len();
        let e0: Vec<f64> = basis.iter().map(|b| eps1 * b.m[0] as f64 + eps2 * b.m[1] as f64).collect();

        let mut acc = MatrixAccumulator::new(n);
        for b in &basis {
            let occ = [spec.size as u32 - b.m[0] - b.m[1], b.m[0], b.m[1]];
            for &(t, [(r1, s1), (r2, s2)]) in TERMS {
                if mu[t] == 0.0 {
                    continue;
                }
                let Some((a1, o1)) = ladder(occ, r1, s1) else { continue };
                let Some((a2, o2)) = ladder(o1, r2, s2) else { continue };
                let to = index[&(o2[1], o2[2])];
                acc.add(to, b.k, mu[t] * a1 * a2);
            }
        }
        HamiltonianPair::new(e0, acc.finish(), spec.lambda, basis)
    }

    fn classical(&self, spec: &ModelSpec) -> Result<Box<dyn ClassicalModel>> {
        let p = resolve_params(PARAMS, spec)?;
        Ok(Box::new(LmgClassical {
            eps: [p.get("eps1"), p.get("eps2")],
            mu: [p.get("mu1"), p.get("mu2"), p.get("mu3"), p.get("mu4")],
            lambda: spec.lambda,
        }))
    }

    fn cell_label(&self, b: &BasisIndex) -> [u32; 2] {
        [b.m[0], b.m[1]]
    }

    fn domain_diameter(&self, _spec: &ModelSpec) -> f64 {
        std::f64::consts::SQRT_2
    }
}
