mod common;

use common::random_pair;
use ubw1::discrepancy::LocalDiscrepancy;
use ubw1::dynamic::{
    assemble_dynamic, continuity_residual, dual_potential, mass_trajectory, semicoupling_cost,
};
use ubw1::flow::DynamicPenalty;
use ubw1::reconstruct::witness_for;
use ubw1::transport::solve_static;

#[test]
fn discrete_cost_converges_at_first_order_or_better() {
    let dp = DynamicPenalty::catalog("hellinger").unwrap();
    let d = LocalDiscrepancy::catalog("hellinger").unwrap();
    let exact = d.cs(1.0, 4.0);
    let err = |n| (mass_trajectory(&dp, 1.0, 4.0, n).unwrap().discrete_cost - exact).abs();
    let (e1, e2) = (err(32), err(64));
    assert!(e1 / e2 >= 1.8, "errors {e1:e} {e2:e}");
    let t = mass_trajectory(&dp, 1.0, 4.0, 64).unwrap();
    assert!((t.cost - exact).abs() < 1e-6);
    assert_eq!(t.masses.first(), Some(&1.0));
    assert_eq!(t.masses.last(), Some(&4.0));
}

#[test]
fn zero_end_masses() {
    for name in ["hellinger", "jensen_shannon"] {
        let dp = DynamicPenalty::catalog(name).unwrap();
        let d = LocalDiscrepancy::catalog(name).unwrap();
        for (m0, m1) in [(0.0, 2.0), (1.5, 0.0)] {
            let t = mass_trajectory(&dp, m0, m1, 128).unwrap();
            assert!((t.cost - d.cs(m0, m1)).abs() < 1e-4, "{name} {m0}->{m1}: {} vs {}", t.cost, d.cs(m0, m1));
            assert!(t.masses.iter().all(|&m| m >= 0.0));
        }
    }
}

#[test]
fn optimizer_cost_is_sandwiched() {
    for model in ["hellinger", "jensen_shannon", "chi2"] {
        let d = LocalDiscrepancy::catalog(model).unwrap();
        let dp = witness_for(&d).unwrap();
        for seed in 0..10 {
            let (a, b) = random_pair(seed);
            let sol = solve_static(&a, &b, &d, 65).unwrap();
            let opt = assemble_dynamic(&sol, &dp, 128).unwrap();
            assert!(opt.total_cost >= sol.dual_value - 1e-4, "{model} seed {seed}");
            assert!(opt.total_cost <= sol.primal_value + 2e-3, "{model} seed {seed}");
            let r = continuity_residual(&opt, 32) / (1.0 + a.mass().max(b.mass()));
            assert!(r < 1e-6, "{model} seed {seed}: residual {r:e}");
        }
    }
}

#[test]
fn residual_detects_a_mass_leak() {
    let d = LocalDiscrepancy::catalog("hellinger").unwrap();
    let dp = d.dynamic().unwrap().clone();
    let (a, b) = random_pair(7);
    let sol = solve_static(&a, &b, &d, 65).unwrap();
    let mut opt = assemble_dynamic(&sol, &dp, 64).unwrap();
    for r in &mut opt.trajectories[0].rates {
        *r += 0.1;
    }
    assert!(continuity_residual(&opt, 32) >= 0.05);
}

#[test]
fn dual_potentials_solve_the_hjb_inequality() {
    let d = LocalDiscrepancy::catalog("hellinger").unwrap();
    let dp = d.dynamic().unwrap().clone();
    for seed in 0..5 {
        let (a, b) = random_pair(seed);
        let sol = solve_static(&a, &b, &d, 65).unwrap();
        let surf = dual_potential(&dp, &sol.alpha, &sol.beta).unwrap();
        assert!(surf.hjb_violation(33) < 1e-6, "seed {seed}");
        let obj = surf.objective(a.weights(), b.weights());
        assert!((obj - sol.dual_value).abs() < 1e-9 * (1.0 + obj.abs()));
    }
}

#[test]
fn infeasible_potentials_are_rejected() {
    let dp = DynamicPenalty::catalog("hellinger").unwrap();
    assert!(dual_potential(&dp, &[0.0, 0.0], &[0.0, 5.0]).is_err());
}

#[test]
fn semicoupling_bracket() {
    for model in ["hellinger", "jensen_shannon", "tv"] {
        let d = LocalDiscrepancy::catalog(model).unwrap();
        for (dx, m0, m1) in [(0.0, 1.0, 2.0), (0.5, 1.0, 1.0), (1.5, 2.0, 0.5), (3.0, 1.0, 1.0)] {
            let sc = semicoupling_cost(&d, dx, m0, m1).unwrap();
            assert!(sc.primal >= sc.dual - 1e-8, "{model} {dx} {m0} {m1}");
            assert!(sc.primal - sc.dual < 1e-5, "{model} {dx} {m0} {m1}: {} {}", sc.primal, sc.dual);
            assert!(sc.primal <= d.cs(m0, 0.0) + d.cs(0.0, m1) + 1e-9);
        }
    }
}
