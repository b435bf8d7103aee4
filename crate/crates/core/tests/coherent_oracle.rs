//! Quantum expectation values in coherent states centred at `(I, θ)` against
//! the classical Hamiltonians.

use ptlab_core::models::{HamiltonianPair, ModelRegistry, ModelSpec};
use statrs::function::gamma::ln_gamma;

/// Complex amplitudes `(modulus, phase)` per basis state.
type Coherent = Vec<(f64, f64)>;

fn expectation(pair: &HamiltonianPair, c: &Coherent) -> f64 {
    let h = pair.hamiltonian();
    let n = pair.dim();
    let mut total = 0.0;
    for j in 0..n {
        let (rj, pj) = c[j];
        if rj < 1e-300 {
            continue;
        }
        for i in 0..n {
            let hij = h[(i, j)];
            if hij != 0.0 {
                let (ri, pi) = c[i];
                total += ri * rj * hij * (pj - pi).cos();
            }
        }
    }
    total
}

/// Multinomial state of `size` bosons over three modes with actions `w`
/// and phases `phi` (the first mode is the phase reference).
fn su3(occupations: impl Iterator<Item = [u32; 3]>, size: usize, w: [f64; 3], phi: [f64; 3]) -> Coherent {
    let lf = |n: u32| ln_gamma(n as f64 + 1.0);
    occupations
        .map(|n| {
            let mut ln = lf(size as u32);
            let mut phase = 0.0;
            for r in 0..3 {
                ln += -lf(n[r]) + if n[r] > 0 { n[r] as f64 * w[r].ln() } else { 0.0 };
                phase += n[r] as f64 * phi[r];
            }
            ((0.5 * ln).exp(), phase)
        })
        .collect()
}

fn check(label: &str, quantum: f64, classical: f64, worst: &mut f64) {
    let rel = (quantum - classical).abs() / classical.abs();
    assert!(rel <= 0.02, "{label}: quantum {quantum} classical {classical} ({rel:.3e})");
    *worst = worst.max(rel);
}

const ANGLES: [[f64; 2]; 4] = [[0.0, 0.0], [0.7, 1.9], [2.5, -1.0], [std::f64::consts::FRAC_PI_2, 1.0]];

#[test]
fn lmg_coherent_expectation() {
    let spec = ModelSpec::new("lmg", 120, 0.5);
    let reg = ModelRegistry::builtin();
    let model = reg.get("lmg").unwrap();
    let pair = model.build(&spec).unwrap();
    let classical = model.classical(&spec).unwrap();
    let mut worst = 0.0;
    for i in [[0.2, 0.3], [0.3, 0.3], [0.25, 0.45], [0.4, 0.2]] {
        for t in ANGLES {
            let occ = pair.basis.iter().map(|b| [120 - b.m[0] - b.m[1], b.m[0], b.m[1]]);
            let c = su3(occ, 120, [1.0 - i[0] - i[1], i[0], i[1]], [0.0, t[0], t[1]]);
            check(&format!("lmg {i:?} {t:?}"), expectation(&pair, &c), classical.energy(i, t), &mut worst);
        }
    }
    eprintln!("lmg worst relative deviation {worst:.3e}");
}

/// Expectation minus classical energy at each test point.
fn bose_hubbard_offsets(n: u32, points: &[([f64; 2], [f64; 2])]) -> Vec<(f64, f64)> {
    let spec = ModelSpec::new("bose-hubbard", n as usize, 0.1);
    let reg = ModelRegistry::builtin();
    let model = reg.get("bose-hubbard").unwrap();
    let pair = model.build(&spec).unwrap();
    let classical = model.classical(&spec).unwrap();
    points
        .iter()
        .map(|&(i, t)| {
            // Sites (1, 2, 3) carry actions (J1, J3, J2); the middle site is the reference.
            let occ = pair.basis.iter().map(|b| [b.m[0], b.m[1], b.m[2]]);
            let c = su3(occ, n as usize, [i[0], 1.0 - i[0] - i[1], i[1]], [t[0], 0.0, t[1]]);
            let scale = classical.h0(i).abs()
                + classical.lambda().abs() * classical.harmonics(i).iter().map(|h| h.coeff.abs()).sum::<f64>();
            (expectation(&pair, &c) - classical.energy(i, t), scale)
        })
        .collect()
}

/// The printed Hamiltonian drops `O(1/N)` terms (`n(n − 1)` against `J²`);
/// energies near zero make a plain relative test meaningless, so the
/// deviation is measured against the torus energy scale and must shrink as `1/N`.
#[test]
fn bose_hubbard_coherent_expectation() {
    let points: Vec<([f64; 2], [f64; 2])> = [[0.2, 0.3], [0.3, 0.3], [0.5, 0.2], [0.1, 0.6]]
        .iter()
        .flat_map(|&i| ANGLES.iter().map(move |&t| (i, t)))
        .collect();
    let coarse = bose_hubbard_offsets(60, &points);
    let fine = bose_hubbard_offsets(120, &points);
    let mut worst = 0.0f64;
    for (((i, t), (d60, scale)), (d120, _)) in points.iter().zip(&coarse).zip(&fine) {
        let rel = d120.abs() / scale;
        assert!(rel <= 0.02, "bh {i:?} {t:?}: deviation {d120} on scale {scale}");
        let ratio = d120 / d60;
        assert!((0.4..=0.6).contains(&ratio), "bh {i:?} {t:?}: 1/N ratio {ratio}");
        worst = worst.max(rel);
    }
    eprintln!("bose-hubbard worst scaled deviation {worst:.3e}");
}

#[test]
fn dicke_coherent_expectation() {
    let n = 60usize;
    let nf = n as f64;
    let reg = ModelRegistry::builtin();
    let model = reg.get("dicke").unwrap();
    let sectors: Vec<HamiltonianPair> = [1.0, -1.0]
        .iter()
        .map(|&p| model.build(&ModelSpec::new("dicke", n, 0.4).with_param("parity", p)).unwrap())
        .collect();
    let classical = model.classical(&ModelSpec::new("dicke", n, 0.4)).unwrap();
    let mut worst = 0.0;
    for i in [[0.3, 0.8], [0.5, 0.9], [0.2, 0.6], [0.4, 0.7]] {
        for t in ANGLES {
            let x = nf * i[0];
            let mut q = 0.0;
            for pair in &sectors {
                // Field: Poisson amplitudes with mean N I_a; spin: binomial over n_b.
                let c: Coherent = pair
                    .basis
                    .iter()
                    .map(|b| {
                        let (na, nb) = (b.m[0] as f64, b.m[1] as f64);
                        let ln_a = na * x.ln() - x - ln_gamma(na + 1.0);
                        let ln_b = ln_gamma(nf + 1.0) - ln_gamma(nb + 1.0) - ln_gamma(nf - nb + 1.0)
                            + nb * i[1].ln()
                            + (nf - nb) * (1.0 - i[1]).ln();
                        ((0.5 * (ln_a + ln_b)).exp(), na * t[0] + nb * t[1])
                    })
                    .collect();
                q += expectation(pair, &c);
            }
            check(&format!("dicke {i:?} {t:?}"), q, classical.energy(i, t), &mut worst);
        }
    }
    eprintln!("dicke worst relative deviation {worst:.3e}");
}
