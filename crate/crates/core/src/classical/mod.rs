//! Classical counterparts in action-angle variables and forbidden masks.
//!
//! Each model reduces to two degrees of freedom with `H(I, θ) = H0(I) + λV(I, θ)`.
//! A torus `γ(I)` is classically forbidden at energy `E` when `E` lies outside
//! `[min_θ H, max_θ H]`.

mod coherent;
mod counterparts;

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Model, ModelSpec};

pub use coherent::{coherent_overlap, fwhm, gaussian_overlap, ln_coherent_overlap};
pub use counterparts::{BoseHubbardClassical, DickeClassical, LmgClassical};

/// Default number of samples per angle.
pub const DEFAULT_THETA_SAMPLES: usize = 256;

/// One Fourier mode `coeff · cos(k1 θ1 + k2 θ2)` of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub coeff: f64,
    pub k: [i32; 2],
}

/// Two-degree-of-freedom classical Hamiltonian.
pub trait ClassicalModel: Send + Sync {
    fn h0(&self, i: [f64; 2]) -> f64;

    /// Perturbation with zero angle average.
    fn v(&self, i: [f64; 2], theta: [f64; 2]) -> f64;

    /// `v(i, ·)` as a finite cosine series; no mode has `k = 0`.
    fn harmonics(&self, i: [f64; 2]) -> Vec<Harmonic>;

    fn lambda(&self) -> f64;

    /// Closed admissible action domain.
    fn in_domain(&self, i: [f64; 2]) -> bool;

    fn energy(&self, i: [f64; 2], theta: [f64; 2]) -> f64 {
        self.h0(i) + self.lambda() * self.v(i, theta)
    }
}

/// Uniform sampling of each angle on `[0, 2π)`.
///
/// Point `j` sits at `2πj/n`, so a grid with `2n` points contains this one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaGrid {
    n: usize,
}

impl ThetaGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidArgument(format!("theta grid needs >= 8 points per angle, got {n}")));
        }
        Ok(ThetaGrid { n })
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n).map(|j| TAU * j as f64 / self.n as f64).collect()
    }

    pub fn refined(&self) -> Self {
        ThetaGrid { n: 2 * self.n }
    }
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid { n: DEFAULT_THETA_SAMPLES }
    }
}

/// `(min, max)` of `H(I, θ)` over the product angle grid.
///
/// Angles are grid multiples of `2π/n`, so every mode is read from one cosine
/// table. A grid and its refinement share bit-identical values on common points.
pub fn torus_energy_range(model: &dyn ClassicalModel, i: [f64; 2], grid: &ThetaGrid) -> (f64, f64) {
    TorusScanner::new(grid).range(model, i)
}

/// Cosine table for one angle grid, reused across cells.
struct TorusScanner {
    n: usize,
    cos: Vec<f64>,
}

impl TorusScanner {
    fn new(grid: &ThetaGrid) -> Self {
        TorusScanner { n: grid.n, cos: grid.angles().iter().map(|a| a.cos()).collect() }
    }

    fn range(&self, model: &dyn ClassicalModel, i: [f64; 2]) -> (f64, f64) {
        let h0 = model.h0(i);
        let lambda = model.lambda();
        let modes = model.harmonics(i);
        let n = self.n as i64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j1 in 0..n {
            for j2 in 0..n {
                let mut v = 0.0;
                for m in &modes {
                    let idx = (m.k[0] as i64 * j1 + m.k[1] as i64 * j2).rem_euclid(n);
                    v += m.coeff * self.cos[idx as usize];
                }
                let e = h0 + lambda * v;
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
        (lo, hi)
    }
}

/// One action cell: lattice label and action coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionCell {
    pub label: [u32; 2],
    pub coords: [i64; 2],
    pub actions: [f64; 2],
}

/// Cells at which tori are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    pub cells: Vec<ActionCell>,
}

impl ActionGrid {
    /// One cell per basis state at `I_m = m ħ_eff`, in basis order.
    pub fn quantum_matched(model: &dyn Model, spec: &ModelSpec) -> Result<Self> {
        let basis = model.basis(spec)?;
        Ok(ActionGrid {
            cells: basis
                .iter()
                .map(|b| ActionCell {
                    label: model.cell_label(b),
                    coords: model.lattice_coords(b),
                    actions: model.actions(spec, b),
                })
                .collect(),
        })
    }

    /// Uniform `n × n` grid on `[0, max0] × [0, max1]` restricted to the model domain.
    pub fn uniform(classical: &dyn ClassicalModel, max: [f64; 2], n: usize) -> Self {
        let mut cells = Vec::new();
        let step = |ax: usize, j: usize| if n > 1 { max[ax] * j as f64 / (n - 1) as f64 } else { 0.0 };
        for a in 0..n {
            for b in 0..n {
                let actions = [step(0, a), step(1, b)];
                if classical.in_domain(actions) {
                    cells.push(ActionCell { label: [a as u32, b as u32], coords: [a as i64, b as i64], actions });
                }
            }
        }
        ActionGrid { cells }
    }
}

/// Torus energy range and classification of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskCell {
    pub label: [u32; 2],
    pub coords: [i64; 2],
    pub actions: [f64; 2],
    pub hmin: f64,
    pub hmax: f64,
    pub forbidden: bool,
}

/// Per-cell forbidden/allowed classification at energy `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenMask {
    pub energy: f64,
    pub eta: f64,
    pub cells: Vec<MaskCell>,
}

impl ForbiddenMask {
    pub fn forbidden_count(&self) -> usize {
        self.cells.iter().filter(|c| c.forbidden).count()
    }

    /// Reclassify at another energy without resampling the tori.
    pub fn at_energy(&self, energy: f64, eta: f64) -> Self {
        ForbiddenMask {
            energy,
            eta,
            cells: self
                .cells
                .iter()
                .map(|c| MaskCell { forbidden: is_forbidden(energy, c.hmin, c.hmax, eta), ..c.clone() })
                .collect(),
        }
    }
}

fn is_forbidden(e: f64, hmin: f64, hmax: f64, eta: f64) -> bool {
    e < hmin - eta || e > hmax + eta
}

/// Classify every cell of `grid`: forbidden iff `E < Hmin − η` or `E > Hmax + η`.
pub fn forbidden_mask(
    model: &dyn ClassicalModel,
    energy: f64,
    grid: &ActionGrid,
    theta: &ThetaGrid,
    eta: f64,
) -> ForbiddenMask {
    let scanner = TorusScanner::new(theta);
    let cells = grid
        .cells
        .iter()
        .map(|c| {
            let (hmin, hmax) = scanner.range(model, c.actions);
            MaskCell {
                label: c.label,
                coords: c.coords,
                actions: c.actions,
                hmin,
                hmax,
                forbidden: is_forbidden(energy, hmin, hmax, eta),
            }
        })
        .collect();
    ForbiddenMask { energy, eta, cells }
}

/// `|mean_θ v| / max_θ |v|` at `i` on `grid`; zero when `v` vanishes identically.
pub fn angle_average_ratio(model: &dyn ClassicalModel, i: [f64; 2], grid: &ThetaGrid) -> f64 {
    let angles = grid.angles();
    let mut sum = 0.0;
    let mut peak = 0.0f64;
    for &t1 in &angles {
        for &t2 in &angles {
            let v = model.v(i, [t1, t2]);
            sum += v;
            peak = peak.max(v.abs());
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        (sum / (angles.len() * angles.len()) as f64).abs() / peak
    }
}
