mod common;

use common::random_pair;
use ubw1::discrepancy::LocalDiscrepancy;
use ubw1::measure::{w1_distance, DiscreteMeasure};
use ubw1::transport::{canonicalize, pattern_violations, primal_cost, solve_static, verify_structure, SupportCase};

const MODELS: [&str; 4] = ["hellinger", "jensen_shannon", "chi2", "tv"];

#[test]
fn random_instances_close_the_gap() {
    for model in MODELS {
        let d = LocalDiscrepancy::catalog(model).unwrap();
        for seed in 0..25 {
            let (a, b) = random_pair(seed);
            let sol = solve_static(&a, &b, &d, 65).unwrap();
            let rel = sol.gap / (1.0 + sol.primal_value.abs());
            assert!(rel <= 1e-6 && sol.gap >= -1e-9, "{model} seed {seed}: gap {:e}", sol.gap);
            let recomputed = primal_cost(&d, &sol.pi0, &sol.pi1);
            assert!((recomputed - sol.primal_value).abs() < 1e-9 * (1.0 + recomputed));
            let (r0, c1) = (sol.pi0.row_sums(), sol.pi1.col_sums());
            for i in 0..a.len() {
                assert!((r0[i] - a.weights()[i]).abs() < 1e-7);
                assert!((c1[i] - b.weights()[i]).abs() < 1e-7);
            }
            let v = verify_structure(&sol, &d);
            assert!(v.is_empty(), "{model} seed {seed}: {v:?}");
        }
    }
}

#[test]
fn canonical_form_keeps_cost_and_pattern() {
    for model in ["hellinger", "jensen_shannon"] {
        let d = LocalDiscrepancy::catalog(model).unwrap();
        for seed in 100..115 {
            let (a, b) = random_pair(seed);
            let sol = solve_static(&a, &b, &d, 65).unwrap();
            let c = canonicalize(&sol, &d).unwrap();
            assert!(c.primal_value <= sol.primal_value + 1e-9);
            let pv = pattern_violations(&c, SupportCase::General);
            assert!(pv.is_empty(), "{model} seed {seed}: {pv:?}");

            if a.mass() == 0.0 {
                continue;
            }
            let disjoint: Vec<f64> = a.weights().iter().map(|&w| if w > 0.0 { 0.0 } else { 1.0 }).collect();
            if disjoint.iter().all(|&w| w == 0.0) {
                continue;
            }
            let bb = DiscreteMeasure::new(a.space().clone(), disjoint).unwrap();
            let s2 = solve_static(&a, &bb, &d, 65).unwrap();
            let c2 = canonicalize(&s2, &d).unwrap();
            let pv = pattern_violations(&c2, SupportCase::Singular);
            assert!(pv.is_empty(), "{model} seed {seed} singular: {pv:?}");
        }
    }
}

#[test]
fn exact_model_reduces_to_w1_for_balanced_masses() {
    let d = LocalDiscrepancy::catalog("exact").unwrap();
    for seed in 200..210 {
        let (a, b) = random_pair(seed);
        let scale = a.mass() / b.mass();
        let b = DiscreteMeasure::new(b.space().clone(), b.weights().iter().map(|w| w * scale).collect()).unwrap();
        let sol = solve_static(&a, &b, &d, 65).unwrap();
        let (w1, _) = w1_distance(&a, &b).unwrap();
        assert!((sol.primal_value - w1).abs() < 1e-7 * (1.0 + w1), "seed {seed}: {} vs {w1}", sol.primal_value);
    }
}

#[test]
fn cost_is_bounded_by_pure_mass_change() {
    for model in MODELS {
        let d = LocalDiscrepancy::catalog(model).unwrap();
        for seed in 300..310 {
            let (a, b) = random_pair(seed);
            let sol = solve_static(&a, &b, &d, 65).unwrap();
            let no_transport: f64 = a.weights().iter().zip(b.weights()).map(|(&x, &y)| d.cs(x, y)).sum();
            assert!(sol.primal_value <= no_transport + 1e-9, "{model} seed {seed}");
            assert!(sol.dual_value >= -1e-12);
        }
    }
}
