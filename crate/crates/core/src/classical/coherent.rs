//! Overlap of an action eigenstate `|m⟩` with a coherent state centred at action `J`.

use statrs::function::gamma::ln_gamma;

/// `ln |⟨m|c⟩|² = m ln(J/ħ) − J/ħ − ln Γ(m + 1)`, for real `m ≥ 0`.
pub fn ln_coherent_overlap(m: f64, j: f64, hbar: f64) -> f64 {
    let x = j / hbar;
    if m == 0.0 {
        return -x;
    }
    m * x.ln() - x - ln_gamma(m + 1.0)
}

/// Poisson weight `|⟨m|c⟩|²` with mean `J/ħ`, evaluated in log space.
pub fn coherent_overlap(m: u64, j: f64, hbar: f64) -> f64 {
    ln_coherent_overlap(m as f64, j, hbar).exp()
}

/// Gaussian approximation `√(ħ/2πJ) exp(−(I − J)²/2Jħ)` at `I = mħ`.
pub fn gaussian_overlap(i: f64, j: f64, hbar: f64) -> f64 {
    (hbar / (std::f64::consts::TAU * j)).sqrt() * (-(i - j).powi(2) / (2.0 * j * hbar)).exp()
}

/// Full width at half maximum of `I ↦ |⟨I/ħ|c⟩|²`, in action units.
///
/// `m` is treated as continuous through `ln Γ`; the two half-maximum
/// crossings are located by bisection.
pub fn fwhm(j: f64, hbar: f64) -> f64 {
    let f = |m: f64| ln_coherent_overlap(m, j, hbar);
    let x = j / hbar;
    // The continuous mode solves ψ(m + 1) = ln x and lies in (x − 1, x).
    let (mut a, mut b) = ((x - 1.0).max(0.0), x);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let mode = 0.5 * (a + b);
    let half = f(mode) - std::f64::consts::LN_2;
    let crossing = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if f(mid) > half {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let reach = 10.0 * x.sqrt() + 10.0;
    let hi = crossing(mode, mode + reach);
    let lo = if f(0.0) > half { 0.0 } else { crossing(mode, 0.0) };
    (hi - lo) * hbar
}
