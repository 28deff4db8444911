//! Unbalanced transport between two sites at distance `L`.
//!
//! Couplings are parameterized by the mass `a` moved before and the mass `b`
//! moved after the change, so the cost is
//! `P(a,b) = L(a+b) + c_S(m₀⁰−a, m₁⁰+b) + c_S(m₀ᴸ+a, m₁ᴸ−b)`.
//! Interior optima come from the two tangents to `c_S(1,·)` through `(1,s)`.

use crate::discrepancy::LocalDiscrepancy;
use crate::error::{Error, Result};
use crate::numeric::golden_min;
use serde::{Deserialize, Serialize};

const SCAN_POINTS: usize = 64;
const BETA_CAP: f64 = 1e14;

/// Two sites `0` and `L` with masses of `ρ₀` and `ρ₁` at each.
#[derive(Clone, Debug)]
pub struct DiracInstance {
    pub l: f64,
    pub m00: f64,
    pub m0l: f64,
    pub m10: f64,
    pub m1l: f64,
    pub disc: LocalDiscrepancy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Interior,
    /// No transport before the mass change.
    BoundaryA0,
    /// No transport after the mass change.
    BoundaryB0,
    BoundaryOther,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::BoundaryA0 => "boundary_a0",
            Regime::BoundaryB0 => "boundary_b0",
            Regime::BoundaryOther => "boundary_other",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracSolution {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: Option<f64>,
    pub regime: Regime,
    pub value: f64,
    /// Mass travels from `L` to `0`; `a`, `b` then refer to that direction.
    pub swapped: bool,
    /// The tangent touches `c_S(1,·)` along a segment, so other `(α, β)`
    /// are optimal as well.
    pub nonunique: bool,
}

/// Result of the tangent construction for one intercept `s`.
#[derive(Clone, Copy, Debug)]
pub struct TangentSplit {
    pub alpha: f64,
    pub beta: f64,
    pub l_of_s: f64,
    pub nonunique: bool,
}

/// `T[γ](1)`: value at 1 of the tangent to `c_S(1,·)` at `γ`.
fn tangent_at_one(disc: &LocalDiscrepancy, g: f64) -> f64 {
    let (a, b) = disc.tangent_point(1.0, g);
    a + b
}

/// Left and right tangents to `c_S(1,·)` through `(1, s)` and `L(s)`.
pub fn tangent_split(disc: &LocalDiscrepancy, s: f64) -> Result<TangentSplit> {
    if !(s < 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameters(format!("tangent intercept must be negative, got {s}")));
    }
    let c = |g: f64| disc.cs(1.0, g);
    // Smallest α in [0, 1] with T[α](1) ≥ s.
    let alpha = if tangent_at_one(disc, 0.0) >= s {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-16 * hi.max(1e-300) && 0.5 * (lo + hi) > lo && 0.5 * (lo + hi) < hi {
            let m = 0.5 * (lo + hi);
            if tangent_at_one(disc, m) >= s {
                hi = m;
            } else {
                lo = m;
            }
        }
        hi
    };
    let c_alpha = c(alpha);
    if !c_alpha.is_finite() {
        return Err(Error::OutOfRange(format!("no left tangent through (1, {s}) touches c_S(1,·)")));
    }
    let left = (c_alpha - s) / (alpha - 1.0);
    // Smallest β ≥ 1 with T[β](1) ≤ s.
    let mut hi = 2.0;
    while tangent_at_one(disc, hi) > s && hi < BETA_CAP {
        hi *= 2.0;
    }
    let (beta, right) = if tangent_at_one(disc, hi) > s {
        (f64::INFINITY, disc.partial2_limits().1)
    } else {
        let mut lo = 1.0f64;
        while hi - lo > 1e-16 * hi && 0.5 * (lo + hi) > lo && 0.5 * (lo + hi) < hi {
            let m = 0.5 * (lo + hi);
            if tangent_at_one(disc, m) <= s {
                hi = m;
            } else {
                lo = m;
            }
        }
        (hi, (c(hi) - s) / (hi - 1.0))
    };
    if !right.is_finite() || !left.is_finite() {
        return Err(Error::OutOfRange(format!("tangents through (1, {s}) are vertical")));
    }
    let slack = 1e-12 * (1.0 + s.abs());
    let flat_left = alpha < 1.0 && tangent_at_one(disc, (alpha + 1e-7).min(1.0)) <= s + slack && alpha + 1e-7 < 1.0;
    let flat_right = beta.is_finite() && tangent_at_one(disc, beta * (1.0 + 1e-7)) >= s - slack;
    Ok(TangentSplit { alpha, beta, l_of_s: right - left, nonunique: flat_left || flat_right })
}

/// `(L_min, L_max)`: limits of `L(s)` as `s → 0⁻` and `s → −∞`, from
/// samples at `s = −10^{∓k}`, `k ≤ 8`. `L_max` is infinite when the samples
/// keep growing.
pub fn l_range(disc: &LocalDiscrepancy) -> Result<(f64, f64)> {
    let mut l_min = f64::NAN;
    for k in 1..=8 {
        let v = tangent_split(disc, -(10f64.powi(-k)))?.l_of_s;
        let done = (v - l_min).abs() <= 1e-10 * (1.0 + v.abs());
        l_min = v;
        if done {
            break;
        }
    }
    let mut prev = f64::NAN;
    let mut last = f64::NAN;
    for k in 0..=8 {
        let v = tangent_split(disc, -(10f64.powi(k)))?.l_of_s;
        prev = last;
        last = v;
        if (last - prev).abs() <= 1e-10 * (1.0 + last.abs()) {
            return Ok((l_min, last));
        }
    }
    let l_max = if last - prev > 1e-6 * (1.0 + last.abs()) { f64::INFINITY } else { last };
    Ok((l_min, l_max))
}

/// Intercept `s < 0` with `L(s) = l`, if one exists.
pub fn solve_intercept(disc: &LocalDiscrepancy, l: f64) -> Result<Option<(f64, TangentSplit)>> {
    let near = tangent_split(disc, -1e-12)?;
    if l <= near.l_of_s {
        return Ok(None);
    }
    let mut t_lo = -12.0 * std::f64::consts::LN_10;
    let mut t_hi: f64 = 0.0;
    loop {
        let sp = tangent_split(disc, -t_hi.exp())?;
        if sp.l_of_s >= l {
            break;
        }
        t_lo = t_hi;
        t_hi += 2.0;
        if t_hi > 28.0 * std::f64::consts::LN_10 {
            return Ok(None);
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (t_lo + t_hi);
        if m == t_lo || m == t_hi {
            break;
        }
        if tangent_split(disc, -m.exp())?.l_of_s >= l {
            t_hi = m;
        } else {
            t_lo = m;
        }
    }
    let s = -t_hi.exp();
    Ok(Some((s, tangent_split(disc, s)?)))
}

/// `P(a, b)`.
pub fn cost(inst: &DiracInstance, a: f64, b: f64) -> f64 {
    let d = &inst.disc;
    inst.l * (a + b)
        + d.cs((inst.m00 - a).max(0.0), (inst.m10 + b).max(0.0))
        + d.cs((inst.m0l + a).max(0.0), (inst.m1l - b).max(0.0))
}

fn swapped(inst: &DiracInstance) -> DiracInstance {
    DiracInstance {
        l: inst.l,
        m00: inst.m0l,
        m0l: inst.m00,
        m10: inst.m1l,
        m1l: inst.m10,
        disc: inst.disc.clone(),
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

fn minimize_segment<F: Fn(f64) -> f64>(f: F, hi: f64) -> (f64, f64) {
    if hi <= 0.0 {
        return (0.0, f(0.0));
    }
    let xs: Vec<f64> = (0..=SCAN_POINTS).map(|i| hi * i as f64 / SCAN_POINTS as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let k = (0..xs.len()).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    let lo = xs[k.saturating_sub(1)];
    let up = xs[(k + 1).min(SCAN_POINTS)];
    let (x, v) = golden_min(&f, lo, up, 1e-14 * (1.0 + hi));
    if v <= vals[k] {
        (x, v)
    } else {
        (xs[k], vals[k])
    }
}

/// Best point on the four edges of the box, preferring `a = 0`, then
/// `b = 0`, on ties.
fn best_on_edges(inst: &DiracInstance) -> (f64, f64, f64, Regime) {
    let (am, bm) = (inst.m00, inst.m1l);
    let (b0, v0) = minimize_segment(|b| cost(inst, 0.0, b), bm);
    let (a1, v1) = minimize_segment(|a| cost(inst, a, 0.0), am);
    let (b2, v2) = minimize_segment(|b| cost(inst, am, b), bm);
    let (a3, v3) = minimize_segment(|a| cost(inst, a, bm), am);
    let cands = [
        (0.0, b0, v0, Regime::BoundaryA0),
        (a1, 0.0, v1, Regime::BoundaryB0),
        (am, b2, v2, Regime::BoundaryOther),
        (a3, bm, v3, Regime::BoundaryOther),
    ];
    let mut best = cands[0];
    for c in &cands[1..] {
        if c.2 < best.2 - 1e-12 * (1.0 + best.2.abs()) {
            best = *c;
        }
    }
    best
}

fn solve_oriented(inst: &DiracInstance, split: Option<(f64, TangentSplit)>) -> DiracSolution {
    let finish = |a: f64, b: f64, value: f64, regime: Regime, s: Option<f64>, nonunique: bool| DiracSolution {
        a,
        b,
        alpha: ratio(inst.m10 + b, inst.m00 - a),
        beta: ratio(inst.m1l - b, inst.m0l + a),
        s,
        regime,
        value,
        swapped: false,
        nonunique,
    };
    if let Some((s, sp)) = split {
        let (al, be) = (sp.alpha, sp.beta);
        if be.is_finite() && be > al {
            let u = al * inst.m00 - inst.m10;
            let w = be * inst.m0l - inst.m1l;
            let a = (-u - w) / (be - al);
            let b = (be * u + al * w) / (be - al);
            let eps = 1e-9 * (1.0 + inst.m00 + inst.m1l);
            if a > eps && b > eps && a < inst.m00 - eps && b < inst.m1l - eps {
                return finish(a, b, cost(inst, a, b), Regime::Interior, Some(s), sp.nonunique);
            }
        }
    }
    let (a, b, v, regime) = best_on_edges(inst);
    finish(a, b, v, regime, split.map(|p| p.0), false)
}

fn balanced(inst: &DiracInstance) -> bool {
    inst.m00 == inst.m10 && inst.m0l == inst.m1l
}

fn check(inst: &DiracInstance) -> Result<()> {
    if !(inst.l > 0.0) || !inst.l.is_finite() {
        return Err(Error::InvalidParameters(format!("distance must be positive, got {}", inst.l)));
    }
    for m in [inst.m00, inst.m0l, inst.m10, inst.m1l] {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameters(format!("site masses must be finite and nonnegative, got {m}")));
        }
    }
    Ok(())
}

fn solve_with(inst: &DiracInstance, split: Option<(f64, TangentSplit)>) -> Result<DiracSolution> {
    check(inst)?;
    if balanced(inst) {
        return Ok(DiracSolution {
            a: 0.0,
            b: 0.0,
            alpha: 1.0,
            beta: 1.0,
            s: None,
            regime: Regime::BoundaryA0,
            value: 0.0,
            swapped: false,
            nonunique: false,
        });
    }
    let forward = inst.m10 < inst.m00 && inst.m1l > inst.m0l;
    let backward = inst.m10 > inst.m00 && inst.m1l < inst.m0l;
    let sol = if forward {
        solve_oriented(inst, split)
    } else if backward {
        DiracSolution { swapped: true, ..solve_oriented(&swapped(inst), split) }
    } else {
        let f = solve_oriented(inst, split);
        let r = solve_oriented(&swapped(inst), split);
        if r.value < f.value - 1e-12 * (1.0 + f.value.abs()) {
            DiracSolution { swapped: true, ..r }
        } else {
            f
        }
    };
    if !sol.value.is_finite() {
        return Err(Error::InfiniteCost(format!(
            "{} cannot turn masses ({}, {}) into ({}, {})",
            inst.disc.name(),
            inst.m00,
            inst.m0l,
            inst.m10,
            inst.m1l
        )));
    }
    Ok(sol)
}

/// Optimal `(a, b)` for a two-site instance.
pub fn solve_dirac(inst: &DiracInstance) -> Result<DiracSolution> {
    check(inst)?;
    let split = if balanced(inst) { None } else { interior_split(&inst.disc, inst.l) };
    solve_with(inst, split)
}

fn interior_split(disc: &LocalDiscrepancy, l: f64) -> Option<(f64, TangentSplit)> {
    solve_intercept(disc, l).ok().flatten()
}

/// Ratios `m₁ᴸ/m₀⁰` bounding the interior regime for single Diracs at
/// distance `l`: `(α(L), β(L))`.
pub fn phase_boundaries(disc: &LocalDiscrepancy, l: f64) -> Result<Option<(f64, f64)>> {
    Ok(solve_intercept(disc, l)?.map(|(_, sp)| (sp.alpha, sp.beta)))
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseRow {
    pub l: f64,
    pub ratio: f64,
    pub regime: Regime,
}

/// Regime of `ρ₀ = δ₀`, `ρ₁ = r·δ_L` for every `(L, r)` of the grids.
pub fn phase_diagram(disc: &LocalDiscrepancy, l_grid: &[f64], ratio_grid: &[f64]) -> Result<Vec<PhaseRow>> {
    let mut rows = Vec::with_capacity(l_grid.len() * ratio_grid.len());
    for &l in l_grid {
        let split = interior_split(disc, l);
        for &r in ratio_grid {
            let inst = DiracInstance { l, m00: 1.0, m0l: 0.0, m10: 0.0, m1l: r, disc: disc.clone() };
            let sol = solve_with(&inst, split)?;
            rows.push(PhaseRow { l, ratio: r, regime: sol.regime });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s_of(l: f64) -> f64 {
        let r = l / 2.0 + (l * l / 4.0 + 1.0).sqrt();
        r * r
    }

    #[test]
    fn hellinger_tangents() {
        let d = LocalDiscrepancy::catalog("hellinger").unwrap();
        let sp = tangent_split(&d, -0.5).unwrap();
        assert!((sp.alpha - 0.25).abs() < 1e-12 && (sp.beta - 4.0).abs() < 1e-10, "{sp:?}");
        assert!((sp.l_of_s - 1.5).abs() < 1e-10);
        let (lmin, lmax) = l_range(&d).unwrap();
        assert!(lmin < 1e-3 && lmax == f64::INFINITY, "{lmin} {lmax}");
    }

    #[test]
    fn hellinger_unit_masses() {
        let d = LocalDiscrepancy::catalog("hellinger").unwrap();
        let inst = DiracInstance { l: 1.5, m00: 1.0, m0l: 0.0, m10: 0.0, m1l: 1.0, disc: d.clone() };
        let sol = solve_dirac(&inst).unwrap();
        assert_eq!(sol.regime, Regime::Interior);
        assert!((sol.a - 0.2).abs() < 1e-9 && (sol.b - 0.2).abs() < 1e-9, "{sol:?}");
        assert!((sol.value - 1.0).abs() < 1e-9);
        let (lo, hi) = phase_boundaries(&d, 1.5).unwrap().unwrap();
        assert!((hi - s_of(1.5)).abs() < 1e-9 && (lo - 1.0 / s_of(1.5)).abs() < 1e-9);
        let inst = DiracInstance { m1l: 5.0, ..inst };
        let sol = solve_dirac(&inst).unwrap();
        assert_eq!(sol.regime, Regime::BoundaryB0);
        assert!((sol.a - 1.0).abs() < 1e-9 && sol.b == 0.0);
    }

    #[test]
    fn tv_never_interior() {
        let d = LocalDiscrepancy::catalog("tv").unwrap();
        assert!((tangent_split(&d, -0.5).unwrap().l_of_s - 2.5).abs() < 1e-12);
        for l in [0.5, 1.9, 2.1, 5.0] {
            let inst = DiracInstance { l, m00: 1.0, m0l: 0.0, m10: 0.0, m1l: 1.0, disc: d.clone() };
            let sol = solve_dirac(&inst).unwrap();
            assert!((sol.value - l.min(2.0)).abs() < 1e-12, "{l} {sol:?}");
        }
    }

    #[test]
    fn balanced_and_reversed() {
        let d = LocalDiscrepancy::catalog("hellinger").unwrap();
        let inst = DiracInstance { l: 1.0, m00: 1.0, m0l: 2.0, m10: 1.0, m1l: 2.0, disc: d.clone() };
        let sol = solve_dirac(&inst).unwrap();
        assert_eq!((sol.a, sol.b, sol.value), (0.0, 0.0, 0.0));
        let inst = DiracInstance { l: 1.5, m00: 0.0, m0l: 1.0, m10: 1.0, m1l: 0.0, disc: d };
        let sol = solve_dirac(&inst).unwrap();
        assert!(sol.swapped && (sol.a - 0.2).abs() < 1e-9);
    }
}
