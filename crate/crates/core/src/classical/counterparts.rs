//! Action-angle forms of the three models, with actions scaled by the size.

use super::{ClassicalModel, Harmonic};

const EDGE: f64 = 1e-12;

fn nonneg(x: f64) -> f64 {
    x.max(0.0)
}

/// Three-orbital LMG with `I0 = 1 − I1 − I2`.
///
/// `H0 = ε1 I1 + ε2 I2`,
/// `V = 2μ1 I0 I1 cos 2θ1 + 2μ2 I0 I2 cos 2θ2
///    + 2μ3 I2 √(I0 I1) cos(2θ2 − θ1) + 2μ4 I1 √(I0 I2) cos(2θ1 − θ2)`,
/// where `ε` and `μ` are the size-free constants `ε_r Ω`, `μ_t Ω²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmgClassical {
    pub eps: [f64; 2],
    pub mu: [f64; 4],
    pub lambda: f64,
}

impl ClassicalModel for LmgClassical {
    fn h0(&self, i: [f64; 2]) -> f64 {
        self.eps[0] * i[0] + self.eps[1] * i[1]
    }

    fn v(&self, i: [f64; 2], t: [f64; 2]) -> f64 {
        let [i1, i2] = i;
        let i0 = nonneg(1.0 - i1 - i2);
        let [t1, t2] = t;
        2.0 * (self.mu[0] * i0 * i1 * (2.0 * t1).cos()
            + self.mu[1] * i0 * i2 * (2.0 * t2).cos()
            + self.mu[2] * i2 * nonneg(i0 * i1).sqrt() * (2.0 * t2 - t1).cos()
            + self.mu[3] * i1 * nonneg(i0 * i2).sqrt() * (2.0 * t1 - t2).cos())
    }

    fn harmonics(&self, i: [f64; 2]) -> Vec<Harmonic> {
        let [i1, i2] = i;
        let i0 = nonneg(1.0 - i1 - i2);
        vec![
            Harmonic { coeff: 2.0 * self.mu[0] * i0 * i1, k: [2, 0] },
            Harmonic { coeff: 2.0 * self.mu[1] * i0 * i2, k: [0, 2] },
            Harmonic { coeff: 2.0 * self.mu[2] * i2 * nonneg(i0 * i1).sqrt(), k: [-1, 2] },
            Harmonic { coeff: 2.0 * self.mu[3] * i1 * nonneg(i0 * i2).sqrt(), k: [2, -1] },
        ]
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn in_domain(&self, i: [f64; 2]) -> bool {
        i[0] >= -EDGE && i[1] >= -EDGE && i[0] + i[1] <= 1.0 + EDGE
    }
}

/// Dicke model with `I_a = n_a/N`, `I_b = n_b/N`.
///
/// `H0 = ω0 (I_b − 1/2) + ω I_a`,
/// `V = 4μ √(I_a I_b (1 − I_b)) cos φ_a cos φ_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeClassical {
    pub omega0: f64,
    pub omega: f64,
    pub mu: f64,
    /// Upper end of the `I_a` domain, `(n_a)_max / N`.
    pub ia_max: f64,
    pub lambda: f64,
}

impl ClassicalModel for DickeClassical {
    fn h0(&self, i: [f64; 2]) -> f64 {
        self.omega0 * (i[1] - 0.5) + self.omega * i[0]
    }

    fn v(&self, i: [f64; 2], t: [f64; 2]) -> f64 {
        let [ia, ib] = i;
        4.0 * self.mu * nonneg(ia * ib * (1.0 - ib)).sqrt() * t[0].cos() * t[1].cos()
    }

    fn harmonics(&self, i: [f64; 2]) -> Vec<Harmonic> {
        let [ia, ib] = i;
        let c = 2.0 * self.mu * nonneg(ia * ib * (1.0 - ib)).sqrt();
        vec![Harmonic { coeff: c, k: [1, 1] }, Harmonic { coeff: c, k: [1, -1] }]
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn in_domain(&self, i: [f64; 2]) -> bool {
        i[0] >= -EDGE && i[0] <= self.ia_max + EDGE && i[1] >= -EDGE && i[1] <= 1.0 + EDGE
    }
}

/// Three-site Bose-Hubbard chain reduced to the outer-site actions
/// `J1 = n1/N`, `J2 = n3/N`; the middle site holds `J3 = 1 − J1 − J2`.
///
/// `H0 = u/2 [J1² + J2² + J3²] + h (μ1 J1 + μ3 J2 + μ2 J3)`,
/// `V = −2j [√(J1 J3) cos θ1 + √(J2 J3) cos θ2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoseHubbardClassical {
    pub u: f64,
    pub hop: f64,
    pub h: f64,
    pub mu: [f64; 3],
    pub lambda: f64,
}

impl ClassicalModel for BoseHubbardClassical {
    fn h0(&self, i: [f64; 2]) -> f64 {
        let [j1, j2] = i;
        let j3 = 1.0 - j1 - j2;
        0.5 * self.u * (j1 * j1 + j2 * j2 + j3 * j3) + self.h * (self.mu[0] * j1 + self.mu[2] * j2 + self.mu[1] * j3)
    }

    fn v(&self, i: [f64; 2], t: [f64; 2]) -> f64 {
        let [j1, j2] = i;
        let j3 = nonneg(1.0 - j1 - j2);
        -2.0 * self.hop * (nonneg(j1 * j3).sqrt() * t[0].cos() + nonneg(j2 * j3).sqrt() * t[1].cos())
    }

    fn harmonics(&self, i: [f64; 2]) -> Vec<Harmonic> {
        let [j1, j2] = i;
        let j3 = nonneg(1.0 - j1 - j2);
        vec![
            Harmonic { coeff: -2.0 * self.hop * nonneg(j1 * j3).sqrt(), k: [1, 0] },
            Harmonic { coeff: -2.0 * self.hop * nonneg(j2 * j3).sqrt(), k: [0, 1] },
        ]
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn in_domain(&self, i: [f64; 2]) -> bool {
        i[0] >= -EDGE && i[1] >= -EDGE && i[0] + i[1] <= 1.0 + EDGE
    }
}
