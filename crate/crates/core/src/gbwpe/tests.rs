use super::*;
use crate::models::random::{random_pair, RandomPairSpec};
use crate::models::{BasisIndex, ModelRegistry, ModelSpec};
use crate::spectral::{diagonalize, energies};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair_from(e0: &[f64], v: &[&[f64]], lambda: f64) -> HamiltonianPair {
    let n = e0.len();
    let basis = (0..n).map(|k| BasisIndex { m: vec![k as u32], k }).collect();
    HamiltonianPair::new(e0.to_vec(), Mat::from_fn(n, n, |i, j| v[i][j]), lambda, basis).unwrap()
}

fn seeded(n: usize, lambda: f64, seed: u64) -> HamiltonianPair {
    random_pair(&RandomPairSpec::new(n, lambda), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Greedy multiset matching of two complex lists.
fn same_multiset(a: &[c64], b: &[c64], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.len() == b.len()
        && a.iter().all(|x| {
            let best =
                (0..b.len()).filter(|&j| !used[j]).min_by(|&i, &j| (b[i] - x).norm().total_cmp(&(b[j] - x).norm()));
            match best {
                Some(j) if (b[j] - x).norm() <= tol => {
                    used[j] = true;
                    true
                }
                _ => false,
            }
        })
}

#[test]
fn singleton_w_is_zero() {
    let p = seeded(5, 0.4, 1);
    let w = build_w(&p, 2.5, &[3]).unwrap();
    assert_eq!(w.nrows(), 1);
    assert_eq!(w[(0, 0)], 0.0);
}

#[test]
fn two_state_w_formula() {
    let (v, lambda, e) = (0.8, 0.3, 0.37);
    let p = pair_from(&[0.0, 1.0], &[&[0.0, v], &[v, 0.0]], lambda);
    let w = build_w(&p, e, &[0, 1]).unwrap();
    assert_eq!(w[(0, 0)], 0.0);
    assert_eq!(w[(1, 1)], 0.0);
    assert!((w[(0, 1)] - lambda * v / (e - 1.0)).abs() < 1e-15);
    assert!((w[(1, 0)] - lambda * v / e).abs() < 1e-15);
}

#[test]
fn build_w_rejects_degenerate_level() {
    let p = pair_from(&[0.0, 1.0], &[&[0.0, 1.0], &[1.0, 0.0]], 0.1);
    let err = build_w(&p, 1.0, &[0, 1]).unwrap_err();
    assert!(matches!(err, Error::Degenerate { k: 1, .. }));
}

#[test]
fn build_w_matches_entrywise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let p = seeded(6, 0.5, seed);
        let e_alpha = 2.5 + 0.01 * seed as f64;
        let s: Vec<usize> = (0..6).filter(|_| rng.random::<bool>()).collect();
        let w = build_w(&p, e_alpha, &s).unwrap();
        for (i, &kp) in s.iter().enumerate() {
            for (j, &k) in s.iter().enumerate() {
                let want = if kp == k { 0.0 } else { p.lambda * p.v[(kp, k)] / (e_alpha - p.e0[k]) };
                assert_eq!(w[(i, j)], want);
            }
        }
        // StateProblem assembles the same matrix from sparse couplings.
        let prob = StateProblem::new(&p, 0, e_alpha, 10.0).unwrap();
        assert_eq!(prob.w_matrix(&s), w);
    }
}

#[test]
fn zero_matrix_spectrum() {
    let spec = w_spectrum(&Mat::zeros(4, 4)).unwrap();
    assert!(spec.eigenvalues.iter().all(|w| w.norm() == 0.0));
    assert_eq!(check_condition(&spec, default_imag_tol(&spec)), Verdict::PassReal);
}

#[test]
fn antidiagonal_closed_form() {
    for (b, c) in [(2.0, 0.5), (-2.0, 0.5), (0.3, 3.0)] {
        let w = Mat::from_fn(2, 2, |i, j| [[0.0, b], [c, 0.0]][i][j]);
        let spec = w_spectrum(&w).unwrap();
        let r = (b * c).abs().sqrt();
        let want = if b * c > 0.0 {
            vec![c64::new(r, 0.0), c64::new(-r, 0.0)]
        } else {
            vec![c64::new(0.0, r), c64::new(0.0, -r)]
        };
        assert!(same_multiset(&spec.eigenvalues, &want, 1e-12), "{:?}", spec.eigenvalues);
    }
}

#[test]
fn verdict_thresholds() {
    let real = |ws: &[f64]| WSpectrum::from_eigenvalues(ws.iter().map(|&w| c64::new(w, 0.0)).collect());
    let s = real(&[0.0, 0.0]);
    assert_eq!(check_condition(&s, default_imag_tol(&s)), Verdict::PassReal);
    let s = real(&[1.2, -0.7, -0.5]);
    assert_eq!(check_condition(&s, default_imag_tol(&s)), Verdict::Fail);
    let s = WSpectrum::from_eigenvalues(vec![c64::new(0.3, 0.4), c64::new(0.3, -0.4), c64::new(-0.6, 0.0)]);
    assert_eq!(s.re_max, 0.3);
    assert_eq!(check_condition(&s, default_imag_tol(&s)), Verdict::PassComplexCheckOnly);
}

#[test]
fn choose_a_examples() {
    let real = |ws: &[f64]| WSpectrum::from_eigenvalues(ws.iter().map(|&w| c64::new(w, 0.0)).collect());
    let s = real(&[-0.4, 0.0, 0.4]);
    assert_eq!(choose_a(&s, 1e-8).unwrap(), 0.0);
    let s = real(&[-0.6, 0.2]);
    let a = choose_a(&s, 1e-8).unwrap();
    assert!((a + 0.2).abs() < 1e-15);
    assert!(a < (1.0 - 0.6) / 2.0);
    let s = real(&[-0.3, 1.5]);
    assert!(matches!(choose_a(&s, 1e-8), Err(Error::NoAdmissibleShift { .. })));
}

#[test]
fn complex_shift_is_a_contraction_and_locally_optimal() {
    let ws = vec![c64::new(0.9, 0.9), c64::new(0.9, -0.9), c64::new(-1.8, 0.0)];
    let s = WSpectrum::from_eigenvalues(ws.clone());
    let a = choose_a(&s, 1e-8).unwrap();
    let rho = shifted_radius(&ws, a);
    assert!(a < 1.0 && rho < 1.0, "a {a}, radius {rho}");
    for d in [1e-3, 1e-2, 0.1, 1.0] {
        assert!(rho <= shifted_radius(&ws, a + d) + 1e-12);
        assert!(rho <= shifted_radius(&ws, a - d) + 1e-12);
    }
}

#[test]
fn small_lambda_shift_is_near_zero() {
    let p = seeded(12, 1e-4, 4);
    let e = energies(&p).unwrap();
    let region = find_pt_region(&p, &e, 6, &PtSearchOptions::default()).unwrap();
    let spec = region.spectrum.unwrap();
    let a = choose_a(&spec, default_imag_tol(&spec)).unwrap();
    assert!(a.abs() < 1e-3, "a = {a}");
}

#[test]
fn trace_identity_on_models() {
    let reg = ModelRegistry::builtin();
    for (name, size, lambda) in [("lmg", 8, 0.5), ("dicke", 6, 0.4), ("bose-hubbard", 8, 0.1)] {
        let p = reg.build(&ModelSpec::new(name, size, lambda)).unwrap();
        let e = energies(&p).unwrap();
        let alpha = e.len() / 2;
        let s: Vec<usize> = (0..p.dim()).filter(|&k| (e[alpha] - p.e0[k]).abs() > 1e-9).collect();
        let spec = w_spectrum(&build_w(&p, e[alpha], &s).unwrap()).unwrap();
        assert!(spec.trace_ok(), "{name}: trace {}", spec.trace_sum);
    }
}

#[test]
fn shift_covariance() {
    let p = seeded(9, 0.3, 7);
    let e = energies(&p).unwrap();
    let s: Vec<usize> = (0..9).filter(|&k| k != 4).collect();
    let w = build_w(&p, e[4], &s).unwrap();
    let spec = w_spectrum(&w).unwrap();
    for a in [-0.7, 0.0, 0.25] {
        let wa = Mat::from_fn(w.nrows(), w.ncols(), |i, j| (w[(i, j)] - if i == j { a } else { 0.0 }) / (1.0 - a));
        let direct = w_spectrum(&wa).unwrap();
        assert!(same_multiset(&direct.eigenvalues, &spec.shifted(a), 1e-10));
    }
}

#[test]
fn gershgorin_far_states_pass() {
    let p = seeded(30, 0.05, 3);
    let e_alpha = 14.9;
    let bound = 30.0 * p.lambda.abs() * p.v_max_abs();
    let s: Vec<usize> = (0..30).filter(|&k| (e_alpha - p.e0[k]).abs() > bound).collect();
    assert!(!s.is_empty());
    let prob = StateProblem::new(&p, 0, e_alpha, 30.0).unwrap();
    for solver in [&DenseSolver as &dyn ConditionSolver, &BlockSolver::default()] {
        assert!(solver.check(&prob, &s).unwrap().passes());
    }
}

#[test]
fn vanishing_lambda_leaves_only_nearest_state() {
    let p0 = seeded(15, 1.0, 21);
    let spacing = 0.4;
    let lambda = 1e-4 * spacing / p0.v_max_abs();
    let p = HamiltonianPair { lambda, ..p0 };
    let e = energies(&p).unwrap();
    for alpha in 0..15 {
        let region = find_pt_region(&p, &e, alpha, &PtSearchOptions::default()).unwrap();
        let nearest =
            (0..15).min_by(|&i, &j| (e[alpha] - p.e0[i]).abs().total_cmp(&(e[alpha] - p.e0[j]).abs())).unwrap();
        assert_eq!(region.partition.s_bar, vec![nearest]);
    }
}

#[test]
fn zero_lambda_region() {
    let p = HamiltonianPair { lambda: 0.0, ..seeded(6, 1.0, 2) };
    let e = energies(&p).unwrap();
    let region = find_pt_region(&p, &e, 2, &PtSearchOptions::default()).unwrap();
    assert_eq!(region.partition.s_bar.len(), 1);
    assert!((p.e0[region.partition.s_bar[0]] - e[2]).abs() < 1e-12);
}

/// Largest passing subset by exhaustive enumeration, with the dense check.
fn brute_force_max(prob: &StateProblem) -> usize {
    let n = prob.dim();
    let mut best = 0;
    for bits in 0u32..(1 << n) {
        let size = bits.count_ones() as usize;
        if size <= best {
            continue;
        }
        let s: Vec<usize> = (0..n).filter(|&k| bits & (1 << k) != 0).collect();
        if DenseSolver.check(prob, &s).unwrap().passes() {
            best = size;
        }
    }
    best
}

#[test]
fn greedy_close_to_exhaustive_on_small_instances() {
    let mut ok = 0;
    for seed in 0..8 {
        let p = seeded(8, 0.35, 100 + seed);
        let e = energies(&p).unwrap();
        let prob = StateProblem::from_energies(&p, &e, 4).unwrap();
        let region = find_pt_region(&p, &e, 4, &PtSearchOptions::default()).unwrap();
        if region.partition.s.len() + 1 >= brute_force_max(&prob) {
            ok += 1;
        }
    }
    assert!(ok >= 7, "{ok}/8");
}

#[test]
fn search_result_is_locally_maximal() {
    for seed in 0..6 {
        let p = seeded(20, 0.4, 40 + seed);
        let e = energies(&p).unwrap();
        for alpha in [3, 10, 16] {
            for solver in ["dense", "block"] {
                let opts = PtSearchOptions { solver: solver.into(), ..Default::default() };
                let region = find_pt_region(&p, &e, alpha, &opts).unwrap();
                let prob = StateProblem::from_energies(&p, &e, alpha).unwrap();
                let extra = nonmaximal_additions(&prob, &DenseSolver, &region.partition).unwrap();
                assert!(extra.is_empty(), "seed {seed} state {alpha} {solver}: {extra:?}");
                assert!(region.verdict.passes());
            }
        }
    }
}

#[test]
fn solvers_agree_on_model_regions() {
    let reg = ModelRegistry::builtin();
    for (name, size, lambda) in [("lmg", 12, 0.5), ("dicke", 10, 0.4), ("bose-hubbard", 12, 0.1)] {
        let p = reg.build(&ModelSpec::new(name, size, lambda)).unwrap();
        let e = energies(&p).unwrap();
        for alpha in [e.len() / 4, e.len() / 2] {
            let block = find_pt_region(&p, &e, alpha, &PtSearchOptions::default()).unwrap();
            let prob = StateProblem::from_energies(&p, &e, alpha).unwrap();
            assert!(DenseSolver.check(&prob, &block.partition.s).unwrap().passes());
            let extra = nonmaximal_additions(&prob, &DenseSolver, &block.partition).unwrap();
            assert!(extra.is_empty(), "{name} state {alpha}: {extra:?}");
        }
    }
}

#[test]
fn conjugation_symmetry() {
    let p = seeded(25, 0.6, 8);
    let e = energies(&p).unwrap();
    let s: Vec<usize> = (0..25).filter(|&k| k % 3 != 0).collect();
    let spec = w_spectrum(&build_w(&p, e[12], &s).unwrap()).unwrap();
    let conj: Vec<c64> = spec.eigenvalues.iter().map(|w| w.conj()).collect();
    assert!(same_multiset(&spec.eigenvalues, &conj, 1e-9));
}

#[test]
fn lambda_sweep_grows_npt_region() {
    let reg = ModelRegistry::builtin();
    let mut sizes = Vec::new();
    for lambda in [0.1, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let p = reg.build(&ModelSpec::new("lmg", 14, lambda)).unwrap();
        let e = energies(&p).unwrap();
        let alpha = crate::spectral::select_state(&e, 13.4);
        sizes.push(find_pt_region(&p, &e, alpha, &PtSearchOptions::default()).unwrap().partition.s.len());
    }
    for w in sizes.windows(2) {
        assert!(w[1] <= w[0] + 1, "{sizes:?}");
    }
}

#[test]
fn empty_s_series_is_exact() {
    let p = seeded(6, 0.3, 5);
    let sol = diagonalize(&p).unwrap();
    let part = RegionPartition::from_s(2, 6, &[]).unwrap();
    let r = evaluate_series(&p, &sol, 2, &part, &SeriesConfig::new(0.0)).unwrap();
    assert_eq!(r.reconstruction_error, 0.0);
    assert!(r.converged);
}

#[test]
fn first_term_matches_first_order_theory() {
    let p0 = seeded(10, 1.0, 9);
    let alpha = 5;
    let mut errs = Vec::new();
    for lambda in [1e-3, 5e-4] {
        let p = HamiltonianPair { lambda, ..p0.clone() };
        let sol = diagonalize(&p).unwrap();
        // S̄ = {k0}, the level the state grows out of.
        let k0 =
            (0..10).max_by(|&i, &j| sol.component(alpha, i).abs().total_cmp(&sol.component(alpha, j).abs())).unwrap();
        let s: Vec<usize> = (0..10).filter(|&k| k != k0).collect();
        let part = RegionPartition::from_s(alpha, 10, &s).unwrap();
        let cfg = SeriesConfig { n_max: 1, ..SeriesConfig::new(0.0) };
        let r = evaluate_series(&p, &sol, alpha, &part, &cfg).unwrap();
        let c0 = sol.component(alpha, k0);
        let mut err = 0.0f64;
        for (i, &k) in s.iter().enumerate() {
            let first_order = lambda * p.v[(k, k0)] / (p.e0[k0] - p.e0[k]) * c0;
            err = err.max((r.partial_sum[i] - first_order).abs());
            err = err.max((sol.component(alpha, k) - first_order).abs());
        }
        errs.push(err);
    }
    assert!(errs[0] < 20.0 * 1e-6, "{errs:?}");
    // O(λ²): halving λ quarters the error.
    assert!(errs[1] < 0.35 * errs[0], "{errs:?}");
}

#[test]
fn series_reconstructs_projection_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut count = 0;
    for seed in 0..6 {
        let p = seeded(10, rng.random_range(0.2..0.8), 500 + seed);
        let sol = diagonalize(&p).unwrap();
        for alpha in [2, 5, 7] {
            let region = find_pt_region(&p, &sol.energies, alpha, &PtSearchOptions::default()).unwrap();
            let spec = region.spectrum.unwrap();
            let a = choose_a(&spec, default_imag_tol(&spec)).unwrap();
            let r = evaluate_series(&p, &sol, alpha, &region.partition, &SeriesConfig::new(a)).unwrap();
            assert!(r.converged, "seed {seed} state {alpha}: error {:.3e}", r.reconstruction_error);
            assert!(r.reconstruction_error <= 1e-8);
            count += 1;
        }
    }
    assert_eq!(count, 18);
}

#[test]
fn residual_norm_examples() {
    let p = seeded(12, 0.4, 13);
    let sol = diagonalize(&p).unwrap();
    let alpha = 6;
    let region = find_pt_region(&p, &sol.energies, alpha, &PtSearchOptions::default()).unwrap();
    let part = &region.partition;
    let spec = region.spectrum.unwrap();
    let a = choose_a(&spec, default_imag_tol(&spec)).unwrap();
    let base: f64 = part.s.iter().map(|&k| sol.component(alpha, k).powi(2)).sum();
    let r0 = residual_norm(&p, &sol, alpha, part, a, 0).unwrap();
    assert!((r0 - base).abs() <= 1e-15 * base.max(1.0));
    let r200 = residual_norm(&p, &sol, alpha, part, a, 200).unwrap();
    assert!(r200 <= 1e-6 * r0, "{r200:.3e} vs {r0:.3e}");

    // All states, including the nearest one: W has the eigenvalue 1 and the
    // residual does not decay.
    let full = RegionPartition::from_s(alpha, 12, &(0..12).collect::<Vec<_>>()).unwrap();
    let spec = w_spectrum(&build_w(&p, sol.energies[alpha], &full.s).unwrap()).unwrap();
    assert!(spec.re_max >= 1.0 - 1e-8);
    let r100 = residual_norm(&p, &sol, alpha, &full, 0.0, 100).unwrap();
    assert!(r100 > 0.1);

    // A failing S with a nonempty complement: the unshifted series blows up.
    let bad = (0..12)
        .filter(|&j| j != alpha)
        .map(|j| RegionPartition::from_s(alpha, 12, &(0..12).filter(|&k| k != j).collect::<Vec<_>>()).unwrap())
        .find(|part| w_spectrum(&build_w(&p, sol.energies[alpha], &part.s).unwrap()).unwrap().re_max > 1.05)
        .expect("a failing single-state complement");
    let r10 = residual_norm(&p, &sol, alpha, &bad, 0.0, 10).unwrap();
    let r100 = residual_norm(&p, &sol, alpha, &bad, 0.0, 100).unwrap();
    assert!(r100 > 10.0 * r10);
    let r = evaluate_series(&p, &sol, alpha, &bad, &SeriesConfig::new(0.0)).unwrap();
    assert!(r.diverged && !r.converged);
}

#[test]
fn registries_list_strategies() {
    assert_eq!(SolverRegistry::builtin().names(), vec!["block", "dense"]);
    assert_eq!(ScoreRegistry::builtin().names(), vec!["column-norm-gap", "max-entry-gap"]);
    assert!(matches!(SolverRegistry::builtin().get("qr"), Err(Error::UnknownStrategy { .. })));
    let p = seeded(8, 0.4, 1);
    let e = energies(&p).unwrap();
    let opts = PtSearchOptions { score: "max-entry-gap".into(), ..Default::default() };
    assert!(find_pt_region(&p, &e, 3, &opts).unwrap().verdict.passes());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn block_and_dense_agree(seed in 0u64..10_000, n in 3usize..14, lambda in 0.05f64..1.5, band in 1usize..4, bits in any::<u32>()) {
        let spec = RandomPairSpec::new(n, lambda).banded(band);
        let p = random_pair(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let e = energies(&p).unwrap();
        let alpha = (bits as usize) % n;
        let prob = StateProblem::from_energies(&p, &e, alpha).unwrap();
        let s: Vec<usize> = (0..n).filter(|&k| (bits >> (k % 32)) & 1 == 1).collect();
        let dense = DenseSolver.check(&prob, &s).unwrap();
        let block = BlockSolver::default().check(&prob, &s).unwrap();
        prop_assert_eq!(dense.passes(), block.passes());
    }

    #[test]
    fn incremental_add_matches_fresh_check(seed in 0u64..10_000, n in 4usize..14, lambda in 0.05f64..1.0, bits in any::<u32>()) {
        let spec = RandomPairSpec::new(n, lambda).banded(2);
        let p = random_pair(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let e = energies(&p).unwrap();
        let prob = StateProblem::from_energies(&p, &e, n / 2).unwrap();
        let mut s: Vec<usize> = (0..n).filter(|&k| (bits >> k) & 1 == 1).collect();
        let solver = BlockSolver::default();
        let mut session = solver.session(&prob, &s).unwrap();
        for k in 0..n {
            if session.contains(k) {
                continue;
            }
            let inc = session.try_add(k).unwrap();
            let mut t = s.clone();
            t.push(k);
            let fresh = DenseSolver.check(&prob, &t).unwrap();
            prop_assert_eq!(inc.passes(), fresh.passes());
            if inc.passes() {
                session.commit(k).unwrap();
                s = t;
                prop_assert_eq!(session.members(), { let mut u = s.clone(); u.sort(); u });
            }
        }
    }

    #[test]
    fn trace_vanishes_for_any_subset(seed in 0u64..10_000, n in 2usize..20, lambda in 0.01f64..2.0, bits in any::<u32>()) {
        let p = seeded(n, lambda, seed);
        let e = energies(&p).unwrap();
        let alpha = (bits as usize) % n;
        let s: Vec<usize> = (0..n).filter(|&k| (bits >> k) & 1 == 1).collect();
        let spec = w_spectrum(&build_w(&p, e[alpha], &s).unwrap()).unwrap();
        prop_assert!(spec.trace_ok(), "trace {}", spec.trace_sum);
    }
}

#[test]
fn unregularized_diagonal_breaks_the_trace() {
    let basis = (0..3).map(|k| BasisIndex { m: vec![k as u32], k }).collect();
    let v = Mat::from_fn(3, 3, |i, j| if i == j { 0.5 } else { 0.2 });
    let raw = HamiltonianPair { e0: vec![0.0, 1.0, 2.0], v, lambda: 1.0, basis };
    let w = build_w(&raw, 0.4, &[0, 1, 2]).unwrap();
    assert_eq!(w[(1, 1)], 0.5 / (0.4 - 1.0));
    assert!(!w_spectrum(&w).unwrap().trace_ok());
}

#[test]
fn degeneracy_guard_is_configurable() {
    let p = seeded(10, 0.1, 4);
    let e = energies(&p).unwrap();
    let nearest = (0..10).map(|k| (e[4] - p.e0[k]).abs()).fold(f64::INFINITY, f64::min);
    let range = crate::spectral::spectral_range(&e);
    let wide = PtSearchOptions { degeneracy_guard: 2.0 * nearest / range, ..Default::default() };
    assert!(matches!(find_pt_region(&p, &e, 4, &wide), Err(Error::Degenerate { .. })));
    find_pt_region(&p, &e, 4, &PtSearchOptions::default()).unwrap();
    let sol = diagonalize(&p).unwrap();
    let part = RegionPartition::from_s(4, 10, &[]).unwrap();
    let cfg = SeriesConfig { degeneracy_guard: wide.degeneracy_guard, ..SeriesConfig::new(0.0) };
    assert!(evaluate_series(&p, &sol, 4, &part, &cfg).is_err());
}
