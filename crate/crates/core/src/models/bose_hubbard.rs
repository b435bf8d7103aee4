//! Three-site Bose-Hubbard chain with open boundaries at fixed particle number.
//!
//! `H0 = Σ_j [U/2 n_j(n_j − 1) + h μ_j n_j]`,
//! `V = −J Σ_{j=1,2} (a_j† a_{j+1} + h.c.)`,
//! with `U N²`, `J N` and `h N` given as parameters.

use std::collections::HashMap;

use crate::classical::{BoseHubbardClassical, ClassicalModel};
use crate::error::Result;

use super::{
    check_dim, resolve_params, BasisIndex, HamiltonianPair, MatrixAccumulator, Model, ModelSpec, ParamDef, ParamDefault,
};

const PARAMS: &[ParamDef] = &[
    ParamDef { name: "u", default: ParamDefault::Value(1.0), doc: "U·N²" },
    ParamDef { name: "j", default: ParamDefault::Value(1.0), doc: "J·N" },
    ParamDef { name: "h", default: ParamDefault::Value(1.0), doc: "h·N" },
    ParamDef { name: "mu1", default: ParamDefault::Value(0.1), doc: "on-site offset, site 1" },
    ParamDef { name: "mu2", default: ParamDefault::Value(0.0), doc: "on-site offset, site 2" },
    ParamDef { name: "mu3", default: ParamDefault::Value(-0.1), doc: "on-site offset, site 3" },
];

pub struct BoseHubbard;

impl BoseHubbard {
    pub fn dimension(n: usize) -> usize {
        (n + 1) * (n + 2) / 2
    }
}

impl Model for BoseHubbard {
    fn name(&self) -> &'static str {
        "bose-hubbard"
    }

    fn parameters(&self) -> &'static [ParamDef] {
        PARAMS
    }

    fn basis(&self, spec: &ModelSpec) -> Result<Vec<BasisIndex>> {
        let n = spec.size as u32;
        check_dim(Self::dimension(spec.size), spec)?;
        let mut out = Vec::with_capacity(Self::dimension(spec.size));
        for n1 in 0..=n {
            for n3 in 0..=(n - n1) {
                out.push(BasisIndex { m: vec![n1, n - n1 - n3, n3], k: out.len() });
            }
        }
        Ok(out)
    }

    fn build(&self, spec: &ModelSpec) -> Result<HamiltonianPair> {
        let p = resolve_params(PARAMS, spec)?;
        let basis = self.basis(spec)?;
        let n = spec.size as f64;
        let u = p.get("u") / (n * n);
        let hop = p.get("j") / n;
        let h = p.get("h") / n;
        let mu = [p.get("mu1"), p.get("mu2"), p.get("mu3")];

        let index: HashMap<[u32; 3], usize> = basis.iter().map(|b| ([b.m[0], b.m[1], b.m[2]], b.k)).collect();
        let e0: Vec<f64> = basis
            .iter()
            .map(|b| {
                (0..3)
                    .map(|j| {
                        let nj = b.m[j] as f64;
                        0.5 * u * nj * (nj - 1.0) + h * mu[j] * nj
                    })
                    .sum()
            })
            .collect();

        let mut acc = MatrixAccumulator::new(basis.len());
        for b in &basis {
            let occ = [b.m[0], b.m[1], b.m[2]];
            for (dst, src) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
                if occ[src] == 0 {
                    continue;
                }
                let amp = (occ[src] as f64 * (occ[dst] + 1) as f64).sqrt();
                let mut to = occ;
                to[src] -= 1;
                to[dst] += 1;
                acc.add(index[&to], b.k, -hop * amp);
            }
        }
        HamiltonianPair::new(e0, acc.finish(), spec.lambda, basis)
    }

    fn classical(&self, spec: &ModelSpec) -> Result<Box<dyn ClassicalModel>> {
        let p = resolve_params(PARAMS, spec)?;
        Ok(Box::new(BoseHubbardClassical {
            u: p.get("u"),
            hop: p.get("j"),
            h: p.get("h"),
            mu: [p.get("mu1"), p.get("mu2"), p.get("mu3")],
            lambda: spec.lambda,
        }))
    }

    /// `(n1, n3)`: the reduced actions are `J1 = n1/N`, `J2 = n3/N`.
    fn cell_label(&self, b: &BasisIndex) -> [u32; 2] {
        [b.m[0], b.m[2]]
    }

    fn domain_diameter(&self, _spec: &ModelSpec) -> f64 {
        std::f64::consts::SQRT_2
    }
}
