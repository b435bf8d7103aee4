//! Skyline LDLᵀ without pivoting.
//!
//! Row `i` of `L` is stored densely from its first structural nonzero
//! `first[i]` up to column `i − 1`; fill-in never leaves this envelope.

/// Factor `A = L D Lᵀ` of a symmetric matrix, built row by row.
#[derive(Debug, Clone, Default)]
pub(crate) struct Skyline {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
    d: Vec<f64>,
}

/// Row of `L` for a prospective new last row, with its pivot.
#[derive(Debug, Clone)]
pub(crate) struct RowSolve {
    pub first: usize,
    pub l: Vec<f64>,
    /// `Σ_m L_im² d_m`, the amount subtracted from the diagonal.
    pub reduction: f64,
}

impl Skyline {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    /// Solve for the `L` row of a new last row with strictly-lower entries
    /// `lower` (`(column, value)`, any order, columns `< len`).
    pub fn solve_row(&self, lower: &[(usize, f64)]) -> RowSolve {
        let n = self.len();
        let Some(first) = lower.iter().map(|&(j, _)| j).min() else {
            return RowSolve { first: n, l: Vec::new(), reduction: 0.0 };
        };
        let width = n - first;
        let mut a = vec![0.0; width];
        for &(j, v) in lower {
            a[j - first] += v;
        }
        // u[m] = L_im d_m
        let mut u = vec![0.0; width];
        let mut l = vec![0.0; width];
        let mut reduction = 0.0;
        for j in first..n {
            let fj = self.first[j];
            let start = fj.max(first);
            let row_j = &self.rows[j];
            let mut t = a[j - first];
            for m in start..j {
                t -= u[m - first] * row_j[m - fj];
            }
            u[j - first] = t;
            let lij = t / self.d[j];
            l[j - first] = lij;
            reduction += t * lij;
        }
        RowSolve { first, l, reduction }
    }

    /// Append a solved row with pivot `pivot`.
    pub fn push_solved(&mut self, row: RowSolve, pivot: f64) {
        self.first.push(row.first);
        self.rows.push(row.l);
        self.d.push(pivot);
    }

    /// Append a row given its strictly-lower entries and diagonal; returns the pivot.
    pub fn push_row(&mut self, lower: &[(usize, f64)], diag: f64) -> f64 {
        let row = self.solve_row(lower);
        let pivot = diag - row.reduction;
        self.push_solved(row, pivot);
        pivot
    }

    /// Block-diagonal concatenation: `other` is placed after `self`.
    pub fn append_block(&mut self, other: Skyline) {
        let offset = self.len();
        self.first.extend(other.first.into_iter().map(|f| f + offset));
        self.rows.extend(other.rows);
        self.d.extend(other.d);
    }
}

/// Outcome of factoring row by row while watching the pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Inertia {
    /// Number of positive pivots; every pivot was well away from zero.
    Positive(usize),
    /// A pivot below the tolerance made the count unreliable.
    Inconclusive,
}

/// Count positive pivots of the matrix with rows `(lower, diag)`.
pub(crate) fn inertia<I>(rows: I, tiny: f64) -> Inertia
where
    I: IntoIterator<Item = (Vec<(usize, f64)>, f64)>,
{
    let mut f = Skyline::default();
    let mut positive = 0;
    for (lower, diag) in rows {
        let p = f.push_row(&lower, diag);
        if !p.is_finite() || p.abs() <= tiny {
            return Inertia::Inconclusive;
        }
        if p > 0.0 {
            positive += 1;
        }
    }
    Inertia::Positive(positive)
}
