use proptest::prelude::*;
use ubw1::dirac::{cost, solve_dirac, DiracInstance};
use ubw1::discrepancy::LocalDiscrepancy;
use ubw1::flow::DynamicPenalty;

const SMOOTH: [&str; 3] = ["hellinger", "jensen_shannon", "chi2"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_a_semigroup(z in -0.4f64..3.0, s in 0.0f64..0.5, t in 0.0f64..0.5, which in 0usize..2) {
        let dp = DynamicPenalty::catalog(["hellinger", "jensen_shannon"][which]).unwrap();
        let two_steps = dp.flow(s, dp.flow(t, z).value).value;
        let one_step = dp.flow(s + t, z).value;
        prop_assert!((two_steps - one_step).abs() < 1e-7 * (1.0 + one_step.abs()), "{} vs {}", two_steps, one_step);
    }

    #[test]
    fn flow_is_monotone_and_invertible(z in -0.4f64..3.0, dz in 1e-3f64..1.0, t in 0.0f64..1.0) {
        let dp = DynamicPenalty::catalog("hellinger").unwrap();
        let f = dp.flow(t, z).value;
        prop_assert!(dp.flow(t, z + dz).value >= f);
        let back = dp.inverse_flow(t, f).value;
        prop_assert!((back - z).abs() < 1e-7 * (1.0 + z.abs()));
    }

    #[test]
    fn cs_is_homogeneous_and_vanishes_on_diagonal(m0 in 0.0f64..5.0, m1 in 0.0f64..5.0, lambda in 0.1f64..10.0, which in 0usize..3) {
        let d = LocalDiscrepancy::catalog(SMOOTH[which]).unwrap();
        let c = d.cs(m0, m1);
        prop_assert!(c >= -1e-12);
        prop_assert!((d.cs(lambda * m0, lambda * m1) - lambda * c).abs() < 1e-8 * (1.0 + lambda * c));
        prop_assert!(d.cs(m0, m0).abs() < 1e-12);
    }

    #[test]
    fn cs_is_midpoint_convex(a in 0.0f64..4.0, b in 0.0f64..4.0, c in 0.0f64..4.0, e in 0.0f64..4.0, which in 0usize..3) {
        let d = LocalDiscrepancy::catalog(SMOOTH[which]).unwrap();
        let mid = d.cs(0.5 * (a + c), 0.5 * (b + e));
        prop_assert!(mid <= 0.5 * (d.cs(a, b) + d.cs(c, e)) + 1e-9);
    }

    #[test]
    fn dirac_value_beats_feasible_splits(l in 0.05f64..3.0, m00 in 0.1f64..2.0, m1l in 0.1f64..2.0, fa in 0.0f64..1.0, fb in 0.0f64..1.0, which in 0usize..2) {
        let d = LocalDiscrepancy::catalog(["hellinger", "jensen_shannon"][which]).unwrap();
        let inst = DiracInstance { l, m00, m0l: 0.0, m10: 0.0, m1l, disc: d };
        let sol = solve_dirac(&inst).unwrap();
        prop_assert!(sol.value <= cost(&inst, fa * m00, fb * m1l) + 1e-9);
        prop_assert!(sol.value <= cost(&inst, 0.0, 0.0) + 1e-9);
    }
}
