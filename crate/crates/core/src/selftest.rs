//! Acceptance checks, shared by `ubw1 selftest` and the `acceptance` test
//! target. Expected values come from closed forms or brute-force searches
//! written here, never from the routine under test.

use crate::dirac::{phase_boundaries, solve_dirac, DiracInstance};
use crate::discrepancy::LocalDiscrepancy;
use crate::dynamic::{assemble_dynamic, continuity_residual, semicoupling_cost};
use crate::flow::DynamicPenalty;
use crate::measure::{DiscreteMeasure, MetricSpace};
use crate::reconstruct::{
    check_conditions, decide_dynamic, default_grid, reconstruct, witness_for, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::transport::{
    canonicalize, max_transport_distances, pattern_violations, solve_static, verify_structure, SupportCase,
    TransportSolution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Outcome of one criterion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }

    fn error(e: crate::Error) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub check: fn() -> Outcome,
}

pub fn format_line(c: &Criterion, o: &Outcome) -> String {
    format!("[{}] criterion {:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, c.id, c.title, o.detail)
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, title: "hellinger reconstruction", check: c01_hellinger_reconstruction },
        Criterion { id: 2, title: "jensen-shannon reconstruction", check: c02_js_reconstruction },
        Criterion { id: 3, title: "pwl reconstruction", check: c03_pwl_reconstruction },
        Criterion { id: 4, title: "no-dynamic counterexample", check: c04_counterexample },
        Criterion { id: 5, title: "flow/static round trip", check: c05_round_trip },
        Criterion { id: 6, title: "two-dirac hellinger", check: c06_two_dirac },
        Criterion { id: 7, title: "flat norm", check: c07_flat_norm },
        Criterion { id: 8, title: "duality gap", check: c08_duality_gap },
        Criterion { id: 9, title: "structure theorems", check: c09_structure },
        Criterion { id: 10, title: "dynamic equals static", check: c10_dynamic_equals_static },
        Criterion { id: 11, title: "flow properties", check: c11_flow_properties },
        Criterion { id: 12, title: "semi-coupling consistency", check: c12_semicoupling },
        Criterion { id: 13, title: "topology", check: c13_topology },
    ]
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn catalog(name: &str) -> LocalDiscrepancy {
    LocalDiscrepancy::catalog(name).expect("catalog entry")
}

fn max_q_error(disc: &LocalDiscrepancy, grid: &[f64], oracle: impl Fn(f64) -> f64) -> Result<f64, crate::Error> {
    let report = reconstruct(disc, grid, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(report.points().iter().map(|p| (p.q - oracle(p.z)).abs()).fold(0.0, f64::max))
}

fn c01_hellinger_reconstruction() -> Outcome {
    match max_q_error(&catalog("hellinger"), &linspace(-0.9, 3.0, 79), |z| -z * z) {
        Ok(e) => Outcome::new(e <= 1e-4, format!("max |q + z²| = {e:.2e} on [-0.9, 3] (tol 1e-4)")),
        Err(e) => Outcome::error(e),
    }
}

fn c02_js_reconstruction() -> Outcome {
    let oracle = |z: f64| {
        let d = 2f64.powf(z / 2.0) - 2f64.powf(-z / 2.0);
        -d * d / std::f64::consts::LN_2
    };
    match max_q_error(&catalog("jensen_shannon"), &linspace(-2.0, 2.0, 81), oracle) {
        Ok(e) => Outcome::new(e <= 1e-4, format!("max error {e:.2e} on [-2, 2], natural log (tol 1e-4)")),
        Err(e) => Outcome::error(e),
    }
}

fn c03_pwl_reconstruction() -> Outcome {
    let (d_lo, s_lo, a, s_hi, d_hi, b) = (-2.0, -1.0, 2.0, 1.0, 2.0, 0.5);
    let disc = catalog("pwl(-2,-1,2,1,2,0.5)");
    // The lower end of dom q is where the lower branch of h_S starts.
    let g = s_lo + a * (d_lo - s_lo);
    let segments: [(f64, f64, Box<dyn Fn(f64) -> f64>); 3] = [
        (g, s_lo, Box::new(move |z| (z - s_lo) * f64::ln(a))),
        (s_lo, s_hi, Box::new(|_| 0.0)),
        (s_hi, d_hi, Box::new(move |z| (z - s_hi) * f64::ln(b))),
    ];
    let mut worst = 0.0f64;
    for (lo, hi, f) in &segments {
        let inset = 1e-6 * (hi - lo);
        match max_q_error(&disc, &linspace(lo + inset, hi - inset, 33), f) {
            Ok(e) => worst = worst.max(e),
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(worst <= 1e-6, format!("max error {worst:.2e} over 3 segments (tol 1e-6)"))
}

/// `h_S = min(z, z/2 + 1/2, z/4 + 1)`.
pub fn counterexample() -> LocalDiscrepancy {
    LocalDiscrepancy::custom_pwl(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.5, 1.75]).expect("valid profile")
}

fn c04_counterexample() -> Outcome {
    let disc = counterexample();
    let report = match reconstruct(&disc, &linspace(-2.0, 6.0, 81), DEFAULT_TOL, DEFAULT_MAX_ITER) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let necessary = check_conditions(&disc).necessary_ok;
    match decide_dynamic(&report, 64) {
        Ok(d) => Outcome::new(
            !d.exists && !necessary,
            format!("exists = {}, necessary_ok = {necessary} ({})", d.exists, d.reason),
        ),
        Err(e) => Outcome::error(e),
    }
}

fn c05_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for name in ["exact", "tv", "pwl(-2,-1,2,1,2,0.5)", "hellinger", "jensen_shannon"] {
        let disc = catalog(name);
        let grid = default_grid(&disc, 129);
        let report = match reconstruct(&disc, &grid, DEFAULT_TOL, DEFAULT_MAX_ITER) {
            Ok(r) => r,
            Err(e) => return Outcome::error(e),
        };
        let witness = match decide_dynamic(&report, 33) {
            Ok(d) => match d.witness {
                Some(w) => w,
                None => return Outcome::new(false, format!("{name}: no witness ({})", d.reason)),
            },
            Err(e) => return Outcome::error(e),
        };
        let fs = witness.static_profile();
        let hs = disc.h_s();
        let (lo, hi) = (grid[0].max(hs.domain().0), grid[grid.len() - 1].min(hs.domain().1));
        let pad = 0.02 * (hi - lo);
        let e = linspace(lo + pad, hi - pad, 64)
            .into_iter()
            .map(|z| (fs.eval(z) - hs.eval(z)).abs())
            .fold(0.0, f64::max);
        notes.push(format!("{name} {e:.1e}"));
        worst = worst.max(e);
    }
    Outcome::new(worst <= 2e-4, format!("max |F₁ − h_S|: {} (tol 2e-4)", notes.join(", ")))
}

fn s_of_l(l: f64) -> f64 {
    let r = l / 2.0 + (l * l / 4.0 + 1.0).sqrt();
    r * r
}

fn c06_two_dirac() -> Outcome {
    let disc = catalog("hellinger");
    let inst = DiracInstance { l: 1.5, m00: 1.0, m0l: 0.0, m10: 0.0, m1l: 1.0, disc: disc.clone() };
    let sol = match solve_dirac(&inst) {
        Ok(s) => s,
        Err(e) => return Outcome::error(e),
    };
    let ab = (sol.a - 0.2).abs().max((sol.b - 0.2).abs());
    let mut worst = 0.0f64;
    for l in linspace(0.1, 5.0, 50) {
        match phase_boundaries(&disc, l) {
            Ok(Some((lo, hi))) => {
                let s = s_of_l(l);
                worst = worst.max((lo - 1.0 / s).abs()).max((hi - s).abs() / s.max(1.0));
            }
            Ok(None) => return Outcome::new(false, format!("no interior phase at L = {l}")),
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(
        ab <= 1e-6 && worst <= 1e-6,
        format!("a = {:.9}, b = {:.9}; boundary error {worst:.1e} over L ∈ [0.1, 5] (tol 1e-6)", sol.a, sol.b),
    )
}

/// Brute force over the transported amounts `a` (before) and `b` (after
/// the mass change) for unit Diracs at distance `l` under `|m₀ − m₁|`.
fn flat_norm_oracle(l: f64) -> f64 {
    let c = |m0: f64, m1: f64| (m0 - m1).abs();
    let n = 200;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            best = best.min(a * l + c(1.0 - a, b) + c(a, 1.0 - b) + b * l);
        }
    }
    best
}

fn two_points(l: f64, w0: [f64; 2], w1: [f64; 2]) -> (DiscreteMeasure, DiscreteMeasure) {
    let space = Arc::new(MetricSpace::euclidean(vec![vec![0.0], vec![l]]).expect("space"));
    (
        DiscreteMeasure::new(space.clone(), w0.to_vec()).expect("measure"),
        DiscreteMeasure::new(space, w1.to_vec()).expect("measure"),
    )
}

fn c07_flat_norm() -> Outcome {
    let disc = catalog("tv");
    let mut worst = 0.0f64;
    for l in [0.5, 1.9, 2.1, 5.0] {
        let (a, b) = two_points(l, [1.0, 0.0], [0.0, 1.0]);
        match solve_static(&a, &b, &disc, 65) {
            Ok(s) => worst = worst.max((s.value() - flat_norm_oracle(l)).abs()),
            Err(e) => return Outcome::error(e),
        }
    }
    let (l0, l1) = max_transport_distances(&disc);
    let dist_ok = (l0 - 2.0).abs() < 1e-12 && (l1 - 2.0).abs() < 1e-12;
    Outcome::new(
        worst <= 1e-7 && dist_ok,
        format!("max |W_S − min(L,2)| = {worst:.1e} (tol 1e-7); (L0, L1) = ({l0}, {l1})"),
    )
}

/// The random instance of seed `seed`: `n ∈ 3..=8` points in `[0,3]²`,
/// weights in `[0.1, 2)` with each entry zero with probability 0.2.
pub fn random_instance(seed: u64) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=8);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)]).collect();
    let space = Arc::new(MetricSpace::euclidean(pts).expect("space"));
    let mut weights = || -> Vec<f64> {
        (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..2.0) }).collect()
    };
    let (w0, w1) = (weights(), weights());
    (
        DiscreteMeasure::new(space.clone(), w0).expect("measure"),
        DiscreteMeasure::new(space, w1).expect("measure"),
    )
}

pub const SUITE_MODELS: [&str; 3] = ["hellinger", "jensen_shannon", "chi2"];
pub const SUITE_SEEDS: u64 = 100;

fn suite(model: &str) -> Result<Vec<(DiscreteMeasure, DiscreteMeasure, TransportSolution)>, crate::Error> {
    let disc = catalog(model);
    (0..SUITE_SEEDS)
        .map(|seed| {
            let (a, b) = random_instance(seed);
            let sol = solve_static(&a, &b, &disc, 65)?;
            Ok((a, b, sol))
        })
        .collect()
}

fn c08_duality_gap() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for model in SUITE_MODELS {
        let runs = match suite(model) {
            Ok(r) => r,
            Err(e) => return Outcome::error(e),
        };
        let tight = runs.iter().filter(|(_, _, s)| s.gap <= 1e-6 * (1.0 + s.primal_value.abs())).count();
        let worst = runs.iter().map(|(_, _, s)| s.gap.abs()).fold(0.0, f64::max);
        pass &= tight >= 95 && worst <= 1e-4;
        notes.push(format!("{model} {tight}/100 tight, max gap {worst:.1e}"));
    }
    Outcome::new(pass, notes.join("; "))
}

/// Five points on a line where the rest of the mass has to pass through
/// points whose mass does not change.
fn tv_chain_instances() -> Vec<(DiscreteMeasure, DiscreteMeasure)> {
    let line = |xs: &[f64]| Arc::new(MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).expect("space"));
    let s = line(&[0.0, 0.4, 0.8, 1.2, 1.6]);
    [
        ([1.0, 0.5, 0.5, 0.0, 0.0], [0.0, 0.5, 0.5, 1.0, 0.0]),
        ([1.0, 1.0, 1.0, 1.0, 0.0], [0.0, 1.0, 1.0, 1.0, 1.0]),
        ([2.0, 0.3, 0.3, 0.0, 0.5], [0.0, 0.3, 0.3, 1.5, 1.0]),
    ]
    .into_iter()
    .map(|(a, b)| {
        (DiscreteMeasure::new(s.clone(), a.to_vec()).expect("measure"), DiscreteMeasure::new(s.clone(), b.to_vec()).expect("measure"))
    })
    .collect()
}

fn c09_structure() -> Outcome {
    let mut structure_bad = 0;
    let mut increase = 0.0f64;
    let mut general_bad = 0;
    for model in SUITE_MODELS {
        let disc = catalog(model);
        let runs = match suite(model) {
            Ok(r) => r,
            Err(e) => return Outcome::error(e),
        };
        for (_, _, sol) in &runs {
            if !verify_structure(sol, &disc).is_empty() {
                structure_bad += 1;
            }
            match canonicalize(sol, &disc) {
                Ok(c) => {
                    increase = increase.max(c.primal_value - sol.primal_value);
                    if !pattern_violations(&c, SupportCase::General).is_empty() {
                        general_bad += 1;
                    }
                }
                Err(e) => return Outcome::error(e),
            }
        }
    }
    let mut chain_bad = 0;
    let tv = catalog("tv");
    for (a, b) in tv_chain_instances() {
        let res = solve_static(&a, &b, &tv, 65).and_then(|s| canonicalize(&s, &tv).map(|c| (s, c)));
        match res {
            Ok((s, c)) => {
                increase = increase.max(c.primal_value - s.primal_value);
                if !pattern_violations(&c, SupportCase::Tv).is_empty() {
                    chain_bad += 1;
                }
            }
            Err(e) => return Outcome::error(e),
        }
    }
    let hel = catalog("hellinger");
    let mut disjoint_bad = 0;
    for seed in 0..20 {
        let (a, _) = random_instance(seed);
        if a.mass() == 0.0 {
            continue;
        }
        let w: Vec<f64> = a.weights().iter().map(|&w| if w > 0.0 { 0.0 } else { 1.0 }).collect();
        let b = DiscreteMeasure::new(a.space().clone(), w).expect("measure");
        match solve_static(&a, &b, &hel, 65).and_then(|s| canonicalize(&s, &hel)) {
            Ok(c) => {
                if !pattern_violations(&c, SupportCase::Singular).is_empty() {
                    disjoint_bad += 1;
                }
            }
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(
        structure_bad == 0 && increase <= 1e-9 && chain_bad == 0 && disjoint_bad == 0 && general_bad == 0,
        format!(
            "structure violations {structure_bad}/300, max objective increase {increase:.1e}, \
             pattern misses: general {general_bad}, tv chains {chain_bad}, disjoint supports {disjoint_bad}"
        ),
    )
}

fn c10_dynamic_equals_static() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for model in SUITE_MODELS {
        let disc = catalog(model);
        let dp = match witness_for(&disc) {
            Ok(d) => d,
            Err(e) => return Outcome::error(e),
        };
        let runs = match suite(model) {
            Ok(r) => r,
            Err(e) => return Outcome::error(e),
        };
        let (mut below, mut above, mut residual) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
        for (a, b, sol) in &runs {
            let opt = match assemble_dynamic(sol, &dp, 128) {
                Ok(o) => o,
                Err(e) => return Outcome::error(e),
            };
            below = below.max(sol.dual_value - opt.total_cost);
            above = above.max(opt.total_cost - sol.primal_value);
            residual = residual.max(continuity_residual(&opt, 32) / (1.0 + a.mass() + b.mass()));
        }
        pass &= below <= 1e-4 && above <= 2e-3 && residual <= 1e-5;
        notes.push(format!("{model} dual−cost ≤ {below:.1e}, cost−primal ≤ {above:.1e}, residual {residual:.1e}"));
    }
    Outcome::new(pass, notes.join("; "))
}

fn flow_checks(dp: &DynamicPenalty, above_fixed: &[f64]) -> Vec<String> {
    let mut bad = Vec::new();
    let (lo, hi) = dp.domain();
    let (a, b) = (lo.max(-3.0), hi.min(4.0));
    let pad = 1e-3 * (b - a);
    let zs = linspace(a + pad, b - pad, 57);
    let times = [0.25, 0.5, 1.0, 2.0];
    for &s in &times {
        let f = |z: f64| dp.flow(s, z).value;
        let vals: Vec<f64> = zs.iter().map(|&z| f(z)).collect();
        for i in 1..zs.len() {
            if vals[i].is_finite() && vals[i - 1].is_finite() && !(vals[i] > vals[i - 1]) {
                bad.push(format!("not increasing at s = {s}, z = {}", zs[i]));
            }
            if vals[i].is_finite() && zs[i] >= 0.0 && zs[i - 1] >= 0.0 && vals[i] - vals[i - 1] > zs[i] - zs[i - 1] + 1e-8 {
                bad.push(format!("expansive at s = {s}, z = {}", zs[i]));
            }
        }
        for i in 1..zs.len() - 1 {
            let (u, v, w) = (vals[i - 1], vals[i], vals[i + 1]);
            if u.is_finite() && v.is_finite() && w.is_finite() && u - 2.0 * v + w > 1e-8 {
                bad.push(format!("not concave at s = {s}, z = {}", zs[i]));
            }
        }
        for (z, v) in zs.iter().zip(&vals) {
            if z >= &0.0 && *v > z + 1e-8 {
                bad.push(format!("F_s(z) > z at s = {s}, z = {z}"));
            }
        }
        let h = 1e-4;
        let slope = (f(h) - f(-h)) / (2.0 * h);
        if (slope - 1.0).abs() > 1e-3 {
            bad.push(format!("slope {slope} at 0, s = {s}"));
        }
        for &z in above_fixed {
            let d = 1e-5;
            let fd = (f(z + d) - f(z - d)) / (2.0 * d);
            let ratio = dp.h(f(z)) / dp.h(z);
            if (fd - ratio).abs() > 1e-4 {
                bad.push(format!("∂F/∂z = {fd} but h(F)/h = {ratio} at s = {s}, z = {z}"));
            }
        }
    }
    for &z in zs.iter().filter(|&&z| z >= 0.0) {
        let g: Vec<f64> = linspace(0.1, 2.1, 21).iter().map(|&t| dp.flow(t, z).value).collect();
        for i in 1..g.len() - 1 {
            if g[i - 1] - 2.0 * g[i] + g[i + 1] < -1e-8 {
                bad.push(format!("t ↦ F_t({z}) not convex near t = {:.2}", 0.1 + 0.1 * i as f64));
            }
        }
    }
    bad
}

fn c11_flow_properties() -> Outcome {
    let pwl = catalog("pwl(-2,-1,2,1,2,0.5)").dynamic().cloned().expect("pwl dynamics");
    let cases = [
        (DynamicPenalty::catalog("hellinger").expect("catalog"), vec![0.5, 1.0, 2.0]),
        (pwl, vec![1.3, 1.6]),
        (DynamicPenalty::catalog("tv").expect("catalog"), vec![]),
    ];
    let mut all = Vec::new();
    for (dp, above) in &cases {
        for v in flow_checks(dp, above) {
            all.push(format!("{}: {v}", dp.name()));
        }
    }
    let detail = if all.is_empty() {
        "monotone, concave, nonexpansive, F_s ≤ id, time-convex, unit slope at 0, derivative identity: all hold".to_string()
    } else {
        format!("{} violations, first: {}", all.len(), all[0])
    };
    Outcome::new(all.is_empty(), detail)
}

fn c12_semicoupling() -> Outcome {
    let models = ["tv", "hellinger", "jensen_shannon", "chi2", "pwl(-2,-1,2,1,2,0.5)"];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let disc = catalog(models[rng.gen_range(0..models.len())]);
        let l = rng.gen_range(0.1..4.0);
        let (m0, m1) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
        let (a, b) = two_points(l, [m0, 0.0], [0.0, m1]);
        let w = match solve_static(&a, &b, &disc, 65) {
            Ok(s) => s.value(),
            Err(e) => return Outcome::error(e),
        };
        match semicoupling_cost(&disc, l, m0, m1) {
            Ok(c) => worst = worst.max((c.primal - w).abs()),
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(worst <= 1e-4, format!("max |W_SC − W_S| = {worst:.1e} over 20 draws (tol 1e-4)"))
}

fn c13_topology() -> Outcome {
    let models = ["tv", "pwl(-2,-1,2,1,2,0.5)", "hellinger", "jensen_shannon", "chi2"];
    let base = [[0.0, 0.0], [1.0, 0.5], [0.3, 1.7]];
    let weights = [1.0, 0.6, 1.4];
    let mut pass = true;
    let mut notes = Vec::new();
    let mut asym = 0.0f64;
    for model in models {
        let disc = catalog(model);
        let mut values = Vec::new();
        for j in 1..=4 {
            let eps = 10f64.powi(-j);
            let mut pts: Vec<Vec<f64>> = base.iter().map(|p| p.to_vec()).collect();
            pts.extend(base.iter().map(|p| vec![p[0] + eps, p[1] - 0.5 * eps]));
            let space = Arc::new(MetricSpace::euclidean(pts).expect("space"));
            let mut w = weights.to_vec();
            w.extend([0.0; 3]);
            let mut wj = vec![0.0; 3];
            wj.extend(weights.iter().enumerate().map(|(i, &m)| m * (1.0 + eps * [1.0, -1.0, 0.5][i])));
            let rho = DiscreteMeasure::new(space.clone(), w).expect("measure");
            let rho_j = DiscreteMeasure::new(space, wj).expect("measure");
            let (fwd, bwd) = match (solve_static(&rho_j, &rho, &disc, 65), solve_static(&rho, &rho_j, &disc, 65)) {
                (Ok(f), Ok(b)) => (f.value(), b.value()),
                (Err(e), _) | (_, Err(e)) => return Outcome::error(e),
            };
            asym = asym.max((fwd - bwd).abs());
            values.push(fwd);
        }
        let decreasing = values.windows(2).all(|v| v[1] < 0.2 * v[0]);
        pass &= decreasing;
        notes.push(format!("{model} {:.1e}→{:.1e}", values[0], values[3]));
    }
    pass &= asym <= 1e-7;
    Outcome::new(pass, format!("{}; max asymmetry {asym:.1e}", notes.join(", ")))
}
