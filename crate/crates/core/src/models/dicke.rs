//! Single-mode Dicke model in the Holstein-Primakoff representation.
//!
//! Basis `|n_a, n_b⟩` with `n_a ≤ (n_a)_max`, `n_b ≤ 2j = N`, restricted to one
//! parity sector of the excitation number `n_a + n_b`.
//!
//! `H0 = ω0 (n_b − j) + ω n_a`,
//! `V = μ (a† + a)(b† √(1 − n_b/2j) + √(1 − n_b/2j) b)`,
//! with `ω0 N`, `ω N`, `μ N` given as parameters.

use std::collections::HashMap;

use crate::classical::{ClassicalModel, DickeClassical};
use crate::error::{Error, Result};

use super::{
    check_dim, resolve_params, BasisIndex, HamiltonianPair, MatrixAccumulator, Model, ModelSpec, ParamDef, ParamDefault,
};

const PARAMS: &[ParamDef] = &[
    ParamDef { name: "omega0", default: ParamDefault::Value(1.0), doc: "ω0·N" },
    ParamDef { name: "omega", default: ParamDefault::Value(1.0), doc: "ω·N" },
    ParamDef { name: "mu", default: ParamDefault::Value(1.0), doc: "μ·N" },
    ParamDef { name: "na_max", default: ParamDefault::Size, doc: "photon-number truncation" },
    ParamDef { name: "parity", default: ParamDefault::Value(1.0), doc: "+1 (even) or -1 (odd) sector" },
];

pub struct Dicke;

fn parity_bit(p: f64) -> Result<u32> {
    if p == 1.0 {
        Ok(0)
    } else if p == -1.0 {
        Ok(1)
    } else {
        Err(Error::InvalidParameter(format!("parity must be +1 or -1, got {p}")))
    }
}

impl Model for Dicke {
    fn name(&self) -> &'static str {
        "dicke"
    }

    fn parameters(&self) -> &'static [ParamDef] {
        PARAMS
    }

    fn basis(&self, spec: &ModelSpec) -> Result<Vec<BasisIndex>> {
        let p = resolve_params(PARAMS, spec)?;
        let na_max = p.get_count("na_max")? as u32;
        let parity = parity_bit(p.get("parity"))?;
        let nb_max = spec.size as u32;
        let dim = (0..=na_max).map(|na| (0..=nb_max).filter(|nb| (na + nb) % 2 == parity).count()).sum();
        check_dim(dim, spec)?;
        let mut out = Vec::with_capacity(dim);
        for na in 0..=na_max {
            for nb in 0..=nb_max {
                if (na + nb) % 2 == parity {
                    out.push(BasisIndex { m: vec![na, nb], k: out.len() });
                }
            }
        }
        Ok(out)
    }

    fn build(&self, spec: &ModelSpec) -> Result<HamiltonianPair> {
        let p = resolve_params(PARAMS, spec)?;
        let basis = self.basis(spec)?;
        let n = spec.size as f64;
        let two_j = n;
        let omega0 = p.get("omega0") / n;
        let omega = p.get("omega") / n;
        let mu = p.get("mu") / n;

        let index: HashMap<(u32, u32), usize> = basis.iter().map(|b| ((b.m[0], b.m[1]), b.k)).collect();
        let e0: Vec<f64> =
            basis.iter().map(|b| omega0 * (b.m[1] as f64 - 0.5 * two_j) + omega * b.m[0] as f64).collect();

        let mut acc = MatrixAccumulator::new(basis.len());
        for b in &basis {
            let (na, nb) = (b.m[0], b.m[1]);
            let mut a_moves = vec![(na + 1, ((na + 1) as f64).sqrt())];
            if na > 0 {
                a_moves.push((na - 1, (na as f64).sqrt()));
            }
            let mut b_moves = Vec::with_capacity(2);
            // b† √(1 − n_b/2j)
            let up = (1.0 - nb as f64 / two_j).max(0.0).sqrt() * ((nb + 1) as f64).sqrt();
            if up > 0.0 {
                b_moves.push((nb + 1, up));
            }
            // √(1 − n_b/2j) b
            if nb > 0 {
                let down = (1.0 - (nb - 1) as f64 / two_j).max(0.0).sqrt() * (nb as f64).sqrt();
                b_moves.push((nb - 1, down));
            }
            for &(na2, aa) in &a_moves {
                for &(nb2, ab) in &b_moves {
                    if let Some(&to) = index.get(&(na2, nb2)) {
                        acc.add(to, b.k, mu * aa * ab);
                    }
                }
            }
        }
        HamiltonianPair::new(e0, acc.finish(), spec.lambda, basis)
    }

    fn classical(&self, spec: &ModelSpec) -> Result<Box<dyn ClassicalModel>> {
        let p = resolve_params(PARAMS, spec)?;
        Ok(Box::new(DickeClassical {
            omega0: p.get("omega0"),
            omega: p.get("omega"),
            mu: p.get("mu"),
            ia_max: p.get("na_max") / spec.size as f64,
            lambda: spec.lambda,
        }))
    }

    fn cell_label(&self, b: &BasisIndex) -> [u32; 2] {
        [b.m[0], b.m[1]]
    }

    /// The parity sector is a checkerboard in `(n_a, n_b)`; rotating by 45°
    /// turns diagonal steps into 4-neighbour steps.
    fn lattice_coords(&self, b: &BasisIndex) -> [i64; 2] {
        let (na, nb) = (b.m[0] as i64, b.m[1] as i64);
        [(na + nb).div_euclid(2), (na - nb).div_euclid(2)]
    }

    fn domain_diameter(&self, spec: &ModelSpec) -> f64 {
        let ia = resolve_params(PARAMS, spec).map(|p| p.get("na_max") / spec.size as f64).unwrap_or(1.0);
        (1.0 + ia * ia).sqrt()
    }

    fn truncation_weight(&self, spec: &ModelSpec, basis: &[BasisIndex], state: &[f64]) -> Option<f64> {
        let na_max = resolve_params(PARAMS, spec).ok()?.get("na_max") as u32;
        Some(basis.iter().filter(|b| b.m[0] == na_max).map(|b| state[b.k] * state[b.k]).sum())
    }
}
