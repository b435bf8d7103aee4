//! Exact diagonalization of `H = diag(E0) + λV` and target-state selection.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::models::HamiltonianPair;

/// Perturbed energies `E_α` (ascending) and components `C_αk = ⟨k|α⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    /// Row `α` is the eigenvector of `E_α`.
    pub components: Mat<f64>,
}

impl EigenSolution {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn component(&self, alpha: usize, k: usize) -> f64 {
        self.components[(alpha, k)]
    }

    pub fn state(&self, alpha: usize) -> Vec<f64> {
        (0..self.dim()).map(|k| self.components[(alpha, k)]).collect()
    }

    /// Ordering, orthonormality (1e-10) and residual (1e-9 × spectral range) checks.
    pub fn check_invariants(&self, pair: &HamiltonianPair) -> Result<()> {
        let n = self.dim();
        let fail = |reason: String| Err(Error::Eigensolver { dim: n, reason });
        if self.components.nrows() != n || self.components.ncols() != n || pair.dim() != n {
            return fail("dimension mismatch".into());
        }
        if let Some(w) = self.energies.windows(2).position(|w| w[1] < w[0]) {
            return fail(format!("energies not ascending at {w}"));
        }
        let c = &self.components;
        let gram = c * c.transpose();
        for j in 0..n {
            for i in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                let d = (gram[(i, j)] - want).abs();
                if d > 1e-10 {
                    return fail(format!("rows {i},{j} not orthonormal (deviation {d:.3e})"));
                }
            }
        }
        let range = spectral_range(&self.energies).max(f64::MIN_POSITIVE);
        // H symmetric, so row α of C·H is (H|α⟩)ᵀ.
        let hc = c * pair.hamiltonian();
        for a in 0..n {
            let r: f64 = (0..n).map(|k| (hc[(a, k)] - self.energies[a] * c[(a, k)]).powi(2)).sum::<f64>().sqrt();
            if r > 1e-9 * range {
                return fail(format!("residual of state {a} is {r:.3e}"));
            }
        }
        Ok(())
    }
}

/// Full eigendecomposition, with each eigenvector's largest-magnitude
/// component made positive. Invariants are checked before returning.
pub fn diagonalize(pair: &HamiltonianPair) -> Result<EigenSolution> {
    let n = pair.dim();
    let h = pair.hamiltonian();
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolver { dim: n, reason: format!("{e:?}") })?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let energies: Vec<f64> = (0..n).map(|a| s[a]).collect();
    let mut components = Mat::from_fn(n, n, |a, k| u[(k, a)]);
    for a in 0..n {
        let mut best = 0;
        for k in 0..n {
            if components[(a, k)].abs() > components[(a, best)].abs() {
                best = k;
            }
        }
        if components[(a, best)] < 0.0 {
            for k in 0..n {
                components[(a, k)] = -components[(a, k)];
            }
        }
    }
    let sol = EigenSolution { energies, components };
    sol.check_invariants(pair)?;
    Ok(sol)
}

/// Eigenvalues only, ascending.
pub fn energies(pair: &HamiltonianPair) -> Result<Vec<f64>> {
    let n = pair.dim();
    pair.hamiltonian()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver { dim: n, reason: format!("{e:?}") })
}

/// Index minimizing `|E_α − target|`; ties go to the smaller index.
pub fn select_state(energies: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (a, e) in energies.iter().enumerate() {
        if (e - target).abs() < (energies[best] - target).abs() {
            best = a;
        }
    }
    best
}

pub fn spectral_range(energies: &[f64]) -> f64 {
    match (energies.first(), energies.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    }
}

/// Relative threshold of the degeneracy guard.
pub const DEGENERACY_GUARD: f64 = 1e-12;

/// Fail when `|E_α − E0_k| < guard × range` for some `k`.
pub fn check_nondegenerate(e0: &[f64], alpha: usize, e_alpha: f64, range: f64, guard: f64) -> Result<()> {
    let tol = guard * range;
    for (k, &e) in e0.iter().enumerate() {
        if (e_alpha - e).abs() < tol || e_alpha == e {
            return Err(Error::Degenerate { alpha: Some(alpha), k, e_alpha, e0: e });
        }
    }
    Ok(())
}

/// Write `sol` with a header of dimension and content hash.
///
/// Layout, all little-endian: `u64` dimension, 32-byte hash, `n` energies,
/// then the `n × n` components row by row, as `f64`.
pub fn save_cache(path: &Path, hash: &[u8; 32], sol: &EigenSolution) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = sol.dim();
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(hash)?;
    for e in &sol.energies {
        w.write_all(&e.to_le_bytes())?;
    }
    for a in 0..n {
        for k in 0..n {
            w.write_all(&sol.components[(a, k)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a cache file; `Ok(None)` when it belongs to a different pair.
pub fn load_cache(path: &Path, hash: &[u8; 32]) -> Result<Option<EigenSolution>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    let mut stored = [0u8; 32];
    r.read_exact(&mut stored)?;
    if &stored != hash {
        return Ok(None);
    }
    let expected = 40 + 8 * (n + n * n) as u64;
    let actual = r.get_ref().metadata()?.len();
    if actual != expected {
        return Err(Error::Cache(format!("file is {actual} bytes, expected {expected} for dimension {n}")));
    }
    let mut next = || -> Result<f64> {
        r.read_exact(&mut word)?;
        Ok(f64::from_le_bytes(word))
    };
    let energies = (0..n).map(|_| next()).collect::<Result<Vec<_>>>()?;
    let mut components = Mat::zeros(n, n);
    for a in 0..n {
        for k in 0..n {
            components[(a, k)] = next()?;
        }
    }
    Ok(Some(EigenSolution { energies, components }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BasisIndex, ModelRegistry, ModelSpec};

    fn pair(e0: &[f64], v: &[&[f64]], lambda: f64) -> HamiltonianPair {
        let n = e0.len();
        let basis = (0..n).map(|k| BasisIndex { m: vec![k as u32], k }).collect();
        HamiltonianPair::new(e0.to_vec(), Mat::from_fn(n, n, |i, j| v[i][j]), lambda, basis).unwrap()
    }

    #[test]
    fn zero_lambda_sorts_unperturbed_levels() {
        let p = pair(&[2.0, 0.5, 1.0], &[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]], 0.0);
        let sol = diagonalize(&p).unwrap();
        assert_eq!(sol.energies, vec![0.5, 1.0, 2.0]);
        for (a, k) in [(0, 1), (1, 2), (2, 0)] {
            assert_eq!(sol.component(a, k), 1.0);
        }
    }

    #[test]
    fn two_level_closed_form() {
        let (v, lambda) = (0.7, 0.9);
        let p = pair(&[0.0, 1.0], &[&[0.0, v], &[v, 0.0]], lambda);
        let sol = diagonalize(&p).unwrap();
        let root = (1.0f64 + 4.0 * lambda * lambda * v * v).sqrt();
        assert!((sol.energies[0] - 0.5 * (1.0 - root)).abs() < 1e-14);
        assert!((sol.energies[1] - 0.5 * (1.0 + root)).abs() < 1e-14);
    }

    #[test]
    fn lmg_trace_identity() {
        let p = ModelRegistry::builtin().build(&ModelSpec::new("lmg", 30, 0.5)).unwrap();
        let e = energies(&p).unwrap();
        let trace: f64 = p.e0.iter().sum();
        let sum: f64 = e.iter().sum();
        assert!((sum - trace).abs() <= 1e-9 * trace.abs());
    }

    #[test]
    fn selection_rules() {
        let e = [0.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(select_state(&e, -10.0), 0);
        assert_eq!(select_state(&e, e[5]), 5);
        assert_eq!(select_state(&e, 1.0), 1);
        assert_eq!(select_state(&e, 1.5), 1);
    }

    #[test]
    fn degeneracy_guard_names_level() {
        let err = check_nondegenerate(&[0.0, 1.0, 2.0], 3, 1.0, 2.0, DEGENERACY_GUARD).unwrap_err();
        assert!(matches!(err, Error::Degenerate { k: 1, .. }));
        check_nondegenerate(&[0.0, 1.0, 2.0], 3, 1.5, 2.0, DEGENERACY_GUARD).unwrap();
    }

    #[test]
    fn cache_round_trip() {
        let p = ModelRegistry::builtin().build(&ModelSpec::new("bose-hubbard", 5, 0.3)).unwrap();
        let sol = diagonalize(&p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eig.bin");
        let hash = p.content_hash();
        save_cache(&path, &hash, &sol).unwrap();
        assert_eq!(load_cache(&path, &hash).unwrap().unwrap(), sol);
        assert!(load_cache(&path, &[0u8; 32]).unwrap().is_none());
    }
}
