//! Averaged eigenfunction shapes, region borders and border distances.

use std::collections::HashMap;

use serde::Serialize;

use crate::classical::{forbidden_mask, ActionGrid, ForbiddenMask, ThetaGrid};
use crate::error::{Error, Result};
use crate::gbwpe::{find_pt_region, PtSearchOptions};
use crate::models::{Model, ModelRegistry, ModelSpec};
use crate::spectral::{energies, select_state, EigenSolution};

/// `⟨|C_α'k|²⟩` over the states `α'` with `|E_α' − E_α| ≤ ε/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EFShape {
    pub alpha: usize,
    pub values: Vec<f64>,
    pub epsilon: f64,
    /// Number of states averaged.
    pub count: usize,
}

impl EFShape {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn averaged_shape(sol: &EigenSolution, alpha: usize, epsilon: f64) -> Result<EFShape> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("window width must be positive, got {epsilon}")));
    }
    if alpha >= sol.dim() {
        return Err(Error::InvalidArgument(format!("state {alpha} out of range")));
    }
    let e = sol.energies[alpha];
    let window: Vec<usize> =
        (0..sol.dim()).filter(|&b| b == alpha || (sol.energies[b] - e).abs() <= 0.5 * epsilon).collect();
    let n = sol.dim();
    let mut values = vec![0.0; n];
    for &b in &window {
        for (k, v) in values.iter_mut().enumerate() {
            let c = sol.component(b, k);
            *v += c * c;
        }
    }
    let inv = 1.0 / window.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    Ok(EFShape { alpha, values, epsilon, count: window.len() })
}

/// Window width holding the `count` states nearest in energy to `alpha`
/// (itself included): `ε/2` sits halfway between the `count`-th and the
/// next distance. With fewer states than `count` the window covers all.
pub fn epsilon_for_count(energies: &[f64], alpha: usize, count: usize) -> Result<f64> {
    if count == 0 || alpha >= energies.len() {
        return Err(Error::InvalidArgument(format!(
            "need count >= 1 and a valid state (count {count}, state {alpha})"
        )));
    }
    let e = energies[alpha];
    let mut d: Vec<f64> = energies.iter().map(|x| (x - e).abs()).collect();
    d.sort_by(f64::total_cmp);
    let half = if count >= d.len() {
        d[d.len() - 1] * (1.0 + 1e-12) + f64::MIN_POSITIVE
    } else {
        0.5 * (d[count - 1] + d[count])
    };
    Ok(2.0 * half)
}

/// Cells with integer lattice coordinates (for neighbourhoods), labels (for
/// ordering) and action coordinates (for distances).
#[derive(Debug, Clone)]
pub struct Lattice {
    pub labels: Vec<[u32; 2]>,
    pub coords: Vec<[i64; 2]>,
    pub actions: Vec<[f64; 2]>,
    index: HashMap<[i64; 2], usize>,
}

impl Lattice {
    pub fn new(labels: Vec<[u32; 2]>, coords: Vec<[i64; 2]>, actions: Vec<[f64; 2]>) -> Result<Self> {
        if labels.len() != coords.len() || labels.len() != actions.len() {
            return Err(Error::InvalidArgument("lattice arrays differ in length".into()));
        }
        let mut index = HashMap::with_capacity(coords.len());
        for (i, c) in coords.iter().enumerate() {
            if index.insert(*c, i).is_some() {
                return Err(Error::InvalidArgument(format!("lattice coordinate {c:?} repeated")));
            }
        }
        Ok(Lattice { labels, coords, actions, index })
    }

    pub fn from_grid(grid: &ActionGrid) -> Result<Self> {
        Self::new(
            grid.cells.iter().map(|c| c.label).collect(),
            grid.cells.iter().map(|c| c.coords).collect(),
            grid.cells.iter().map(|c| c.actions).collect(),
        )
    }

    /// One cell per basis state, in basis order.
    pub fn for_model(model: &dyn Model, spec: &ModelSpec) -> Result<Self> {
        Self::from_grid(&ActionGrid::quantum_matched(model, spec)?)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// In-lattice 4-neighbours of cell `i`.
    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let [x, y] = self.coords[i];
        [[x + 1, y], [x - 1, y], [x, y + 1], [x, y - 1]].into_iter().filter_map(|c| self.index.get(&c).copied())
    }
}

/// Region cells adjacent to the complement, ordered by label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Border {
    pub cells: Vec<usize>,
    pub labels: Vec<[u32; 2]>,
    pub points: Vec<[f64; 2]>,
}

impl Border {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Cells of `region` (a mask over the lattice) with a 4-neighbour outside it.
pub fn extract_border(region: &[bool], lattice: &Lattice) -> Result<Border> {
    if region.len() != lattice.len() {
        return Err(Error::InvalidRegion(format!("mask has {} cells, lattice {}", region.len(), lattice.len())));
    }
    let inside = region.iter().filter(|&&r| r).count();
    if inside == 0 || inside == region.len() {
        return Err(Error::InvalidRegion(if inside == 0 {
            "region is empty".into()
        } else {
            "region covers the whole lattice".into()
        }));
    }
    let mut cells: Vec<usize> =
        (0..lattice.len()).filter(|&i| region[i] && lattice.neighbours(i).any(|j| !region[j])).collect();
    cells.sort_by_key(|&i| (lattice.labels[i], i));
    Ok(Border {
        labels: cells.iter().map(|&i| lattice.labels[i]).collect(),
        points: cells.iter().map(|&i| lattice.actions[i]).collect(),
        cells,
    })
}

fn mean_nearest(from: &[[f64; 2]], sorted_to: &[[f64; 2]]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|p| {
            let start = sorted_to.partition_point(|q| q[0] < p[0]);
            let mut best = f64::INFINITY;
            for q in sorted_to[start..].iter() {
                let dx = q[0] - p[0];
                if dx * dx >= best {
                    break;
                }
                best = best.min(dx * dx + (q[1] - p[1]).powi(2));
            }
            for q in sorted_to[..start].iter().rev() {
                let dx = p[0] - q[0];
                if dx * dx >= best {
                    break;
                }
                best = best.min(dx * dx + (q[1] - p[1]).powi(2));
            }
            best.sqrt()
        })
        .sum();
    total / from.len() as f64
}

/// `½[mean_{x∈b1} min_{y∈b2} ‖x − y‖ + mean_{y∈b2} min_{x∈b1} ‖x − y‖]`.
pub fn border_distance(b1: &Border, b2: &Border) -> Result<f64> {
    if b1.is_empty() || b2.is_empty() {
        return Err(Error::InvalidRegion("border distance needs two nonempty borders".into()));
    }
    let sorted = |b: &Border| {
        let mut p = b.points.clone();
        p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        p
    };
    let (s1, s2) = (sorted(b1), sorted(b2));
    Ok(0.5 * (mean_nearest(&b1.points, &s2) + mean_nearest(&b2.points, &s1)))
}

/// Cells on which two masks disagree.
pub fn mask_disagreement(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// How the studied state is picked at each size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EnergySelector {
    /// The state nearest to a fixed energy.
    Target(f64),
    Index(usize),
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub search: PtSearchOptions,
    pub theta: ThetaGrid,
    pub eta: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            search: PtSearchOptions { compute_spectrum: false, ..Default::default() },
            theta: ThetaGrid::default(),
            eta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub size: usize,
    pub hbar_eff: f64,
    pub alpha: usize,
    pub e_alpha: f64,
    pub pt_size: usize,
    pub forbidden_count: usize,
    /// Action units.
    pub distance: f64,
    /// Divided by the action-domain diameter.
    pub distance_normalized: f64,
    /// Divided by `ħ_eff`, the lattice spacing.
    pub distance_cells: f64,
}

/// PT region, forbidden mask and their borders for one model instance.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub row: StudyRow,
    pub pt_mask: Vec<bool>,
    pub mask: ForbiddenMask,
    pub pt_border: Border,
    pub classical_border: Border,
}

/// Compare the PT region of the selected state with the classically
/// forbidden region at its energy, on the quantum lattice.
pub fn compare(
    registry: &ModelRegistry,
    spec: &ModelSpec,
    selector: EnergySelector,
    opts: &StudyOptions,
) -> Result<Comparison> {
    let model = registry.get(&spec.model)?;
    let pair = model.build(spec)?;
    let e = energies(&pair)?;
    let alpha = match selector {
        EnergySelector::Target(t) => select_state(&e, t),
        EnergySelector::Index(i) if i < e.len() => i,
        EnergySelector::Index(i) => {
            return Err(Error::InvalidArgument(format!("state {i} out of range for dimension {}", e.len())))
        }
    };
    let region = find_pt_region(&pair, &e, alpha, &opts.search)?;
    let pt_mask = region.partition.mask();
    let grid = ActionGrid::quantum_matched(model, spec)?;
    let lattice = Lattice::from_grid(&grid)?;
    let classical = model.classical(spec)?;
    let mask = forbidden_mask(classical.as_ref(), e[alpha], &grid, &opts.theta, opts.eta);
    let forbidden: Vec<bool> = mask.cells.iter().map(|c| c.forbidden).collect();
    let pt_border = extract_border(&pt_mask, &lattice)?;
    let classical_border = extract_border(&forbidden, &lattice)?;
    let distance = border_distance(&pt_border, &classical_border)?;
    let hbar = spec.hbar_eff();
    let row = StudyRow {
        size: spec.size,
        hbar_eff: hbar,
        alpha,
        e_alpha: e[alpha],
        pt_size: region.partition.s.len(),
        forbidden_count: mask.forbidden_count(),
        distance,
        distance_normalized: distance / model.domain_diameter(spec),
        distance_cells: distance / hbar,
    };
    Ok(Comparison { row, pt_mask, mask, pt_border, classical_border })
}

/// [`compare`] at each size of `sizes` (ascending), other settings from `template`.
pub fn correspondence_study(
    registry: &ModelRegistry,
    template: &ModelSpec,
    sizes: &[usize],
    selector: EnergySelector,
    opts: &StudyOptions,
) -> Result<Vec<StudyRow>> {
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("study sizes must be strictly ascending".into()));
    }
    sizes
        .iter()
        .map(|&size| {
            let spec = ModelSpec { size, ..template.clone() };
            let t = std::time::Instant::now();
            let c = compare(registry, &spec, selector, opts)?;
            log::info!(
                "{} size {size}: distance {:.4e} ({:.3} cells) in {:.1?}",
                spec.model,
                c.row.distance,
                c.row.distance_cells,
                t.elapsed()
            );
            Ok(c.row)
        })
        .collect()
}
