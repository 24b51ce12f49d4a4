mod common;

use common::rel_close;
use etdiv::entropy_transport::*;
use etdiv::marginal_perspective::h_value;
use etdiv::{EntropyDescriptor, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INF: f64 = f64::INFINITY;

fn up(p: f64) -> EntropyDescriptor {
    EntropyDescriptor::power_like(p).unwrap()
}

fn random_instances(count: usize, seed: u64) -> Vec<EtProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let f = up(if k % 2 == 0 { 1.0 } else { 2.0 });
            let cost = (0..2).map(|_| (0..2).map(|_| rng.random_range(0.0..4.0)).collect()).collect();
            let r = (0..2).map(|_| rng.random_range(0.2..3.0)).collect();
            let t = (0..2).map(|_| rng.random_range(0.2..3.0)).collect();
            EtProblem::new(f, cost, r, t).unwrap()
        })
        .collect()
}

#[test]
fn e_and_h_forms_agree_on_random_instances() {
    for (k, pb) in random_instances(20, 0x5EED).iter().enumerate() {
        let bf = brute_force_et(pb, 20).unwrap();
        let h = bf.min_h.unwrap();
        let (ce, ch) = (bf.coarse_energy, bf.coarse_h.unwrap());
        assert!((ce - ch).abs() <= 2.0 * bf.coarse_resolution, "#{k}: coarse {ce} vs {ch}, res {}", bf.coarse_resolution);
        assert!((bf.min_energy - h).abs() <= 2.0 * bf.coarse_resolution, "#{k}: {} vs {h}", bf.min_energy);
        assert!(h >= bf.min_energy - 1e-9, "#{k}: {h} below {}", bf.min_energy);
        // At an energy minimizer with positive marginals both forms coincide.
        if let Ok(at_e) = h_functional(pb, &bf.argmin_energy) {
            assert!((at_e.to_f64() - bf.min_energy).abs() <= 1e-9, "#{k}: {at_e} vs {}", bf.min_energy);
        }
        let sol = solve(pb, &SolveOptions::default()).unwrap();
        assert!((sol.value - bf.min_energy).abs() <= 1e-4, "#{k}: solve {} vs {}", sol.value, bf.min_energy);
        assert!(sol.value <= bf.min_energy + 1e-8, "#{k}");
    }
}

#[test]
fn pure_entropy_recovery() {
    let cost = vec![vec![0.0, INF], vec![INF, 0.0]];
    let pb = EtProblem::new(up(1.0), cost.clone(), vec![1.0, 1.0], vec![4.0, 1.0]).unwrap();
    let sol = solve(&pb, &SolveOptions::default()).unwrap();
    assert!((sol.value - 1.0).abs() < 1e-6, "{}", sol.value);
    assert_eq!(sol.plan.entries()[0][1], 0.0);
    assert_eq!(sol.plan.entries()[1][0], 0.0);

    // General masses against sum_i H_0(r_i, t_i) = sum_i (sqrt r_i - sqrt t_i)^2.
    let (r, t) = (vec![0.3, 2.5], vec![1.7, 0.4]);
    let pb = EtProblem::new(up(1.0), cost.clone(), r.clone(), t.clone()).unwrap();
    let want: f64 = r.iter().zip(&t).map(|(a, b): (&f64, &f64)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    let sol = solve(&pb, &SolveOptions::default()).unwrap();
    assert!((sol.value - want).abs() < 1e-6, "{} vs {want}", sol.value);
    let f: f64 = r.iter().zip(&t).map(|(&a, &b)| h_value(&up(1.0), a / b, 1.0).to_f64() * b).sum();
    assert!((f - want).abs() < 1e-12);

    // The H-form value does not depend on the diagonal masses.
    for g in [[0.1, 5.0], [1.0, 1.0], [7.0, 0.02]] {
        let plan = TransportPlan::new(vec![vec![g[0], 0.0], vec![0.0, g[1]]]).unwrap();
        assert!(rel_close(h_functional(&pb, &plan).unwrap().to_f64(), want, 1e-12));
    }

    let bf = brute_force_et(&pb, 40).unwrap();
    assert!((bf.min_energy - want).abs() < 1e-6);
    assert!((bf.min_h.unwrap() - want).abs() < 1e-9);
}

#[test]
fn matched_measures_cost_nothing() {
    let cost = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    for f in [up(1.0), up(2.0), up(3.0)] {
        let pb = EtProblem::new(f.clone(), cost.clone(), vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let sol = solve(&pb, &SolveOptions::default()).unwrap();
        assert!(sol.value.abs() < 1e-9, "{f}: {}", sol.value);
        let g = sol.plan.entries();
        assert!((g[0][0] - 1.0).abs() < 1e-4 && (g[1][1] - 2.0).abs() < 1e-4 && g[0][1] < 1e-4, "{g:?}");
        let bf = brute_force_et(&pb, 13).unwrap();
        assert!(bf.min_energy.abs() < 1e-9 && bf.min_h.unwrap().abs() < 1e-9);
    }
}

#[test]
fn zero_plan_energy() {
    let pb = EtProblem::new(up(2.0), vec![vec![1.0, 2.0], vec![0.5, 3.0]], vec![1.0, 2.0], vec![0.5, 1.5]).unwrap();
    let e = energy(&pb, &TransportPlan::zeros(2, 2)).unwrap().to_f64();
    assert!((e - 0.5 * 5.0).abs() < 1e-15);
}

#[test]
fn solve_beats_tested_plans() {
    for pb in random_instances(6, 7) {
        let sol = solve(&pb, &SolveOptions::default()).unwrap();
        for g in [[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 1.0], [0.5, 0.5, 0.5, 0.5], [2.0, 0.1, 0.3, 1.0]] {
            let plan = TransportPlan::new(vec![vec![g[0], g[1]], vec![g[2], g[3]]]).unwrap();
            assert!(sol.value <= energy(&pb, &plan).unwrap().to_f64() + 1e-9);
        }
    }
}

#[test]
fn kinked_entropy_uses_coordinate_search() {
    let f = EntropyDescriptor::chi_alpha(2.0).unwrap();
    let pb = EtProblem::new(f, vec![vec![0.3, 1.0], vec![2.0, 0.1]], vec![1.0, 0.5], vec![0.7, 1.2]).unwrap();
    let sol = solve(&pb, &SolveOptions::default()).unwrap();
    assert_eq!(sol.report.method, SolveMethod::CoordinateSearch);
    let (e, _) = brute_force_energy(&pb, 30).unwrap();
    assert!((sol.value - e).abs() < 1e-4, "{} vs {e}", sol.value);
}

#[test]
fn incompatible_indicator_is_infeasible() {
    // F = 0 on [1/2, 2]: the row needs mass in [1/2, 2], the column in [5, 20].
    let f = EntropyDescriptor::indicator(0.5, 2.0).unwrap();
    let pb = EtProblem::new(f, vec![vec![0.0]], vec![1.0], vec![10.0]).unwrap();
    assert!(matches!(solve(&pb, &SolveOptions::default()), Err(Error::Infeasible)));
}

#[test]
fn non_superlinear_entropy_is_rejected() {
    let f = EntropyDescriptor::matusita(0.5).unwrap();
    assert!(matches!(EtProblem::new(f, vec![vec![0.0]], vec![1.0], vec![1.0]), Err(Error::NotSuperlinear(_))));
}

#[test]
fn optimum_scales_linearly() {
    for pb in random_instances(4, 11) {
        let base = solve(&pb, &SolveOptions::default()).unwrap().value;
        for lambda in [0.5, 2.0] {
            let v = solve(&pb.scaled(lambda), &SolveOptions::default()).unwrap().value;
            assert!((v - lambda * base).abs() <= 1e-7 * (1.0 + base), "{v} vs {}", lambda * base);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn h_form_is_invariant_under_plan_scaling(
        g in prop::collection::vec(0.05..3.0f64, 4), lambda in 0.1..10.0f64,
        c in prop::collection::vec(0.0..4.0f64, 4),
    ) {
        let pb = EtProblem::new(up(2.0), vec![vec![c[0], c[1]], vec![c[2], c[3]]], vec![1.0, 2.0], vec![0.5, 1.5]).unwrap();
        let plan = TransportPlan::new(vec![vec![g[0], g[1]], vec![g[2], g[3]]]).unwrap();
        let a = h_functional(&pb, &plan).unwrap().to_f64();
        let b = h_functional(&pb, &plan.scaled(lambda)).unwrap().to_f64();
        prop_assert!(rel_close(b, a, 1e-10));
        // The H-form never exceeds the energy of the same plan.
        prop_assert!(a <= energy(&pb, &plan).unwrap().to_f64() + 1e-9);
    }
}
