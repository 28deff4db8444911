//! Recovery of the infinitesimal penalty `h_D` from a static profile `h_S`.
//!
//! The candidate is `q[h_S](z) = c̄ · lim_j (h^j(z) − h^{j−1}(z)) / (h^j)'(z)`
//! on the positive side and the analogous expression built from `h̄_S` on the
//! negative side. A dynamic model reproducing `h_S` exists exactly when `q`
//! is concave (and then `q` itself is the penalty).

use crate::discrepancy::LocalDiscrepancy;
use crate::error::{Error, Result};
use crate::flow::DynamicPenalty;
use crate::hfunc::{plateau_start, Extension, HFunction, Sampled};
use crate::numeric::last_true;
use std::sync::Arc;

/// Default relative tolerance of the `q` iteration.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration budget per grid point.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Accepted accuracy once rounding noise stops the extrapolated sequence
/// from improving.
const NOISE_FLOOR: f64 = 1e-8;
const SMOOTH_THRESHOLD: f64 = 1.0 - 1e-4;
const MAX_WITNESS_KNOTS: usize = 512;

/// Fixed-point data of one side of a profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideConstants {
    /// Right end of `{h(z) = z}`.
    pub zeta: f64,
    /// Start of the plateau `{h = sup h}`, or `+∞`.
    pub d: f64,
    /// Right slope of `h` at `zeta`.
    pub m: f64,
    /// Scale factor `log m / (1 − 1/m)`, equal to 1 when `m = 1`.
    pub c: f64,
}

impl SideConstants {
    pub fn of(h: &HFunction) -> Self {
        let zeta = fixed_point_end(h);
        let d = plateau_start(h).unwrap_or(f64::INFINITY);
        let m = if zeta.is_finite() { h.deriv_right(zeta).max(0.0) } else { 1.0 };
        SideConstants { zeta, d, m, c: scale_factor(m) }
    }
}

fn scale_factor(m: f64) -> f64 {
    if (m - 1.0).abs() <= 1e-12 {
        1.0
    } else if m <= 0.0 {
        0.0
    } else {
        m.ln() / (1.0 - 1.0 / m)
    }
}

fn fixed_point_end(h: &HFunction) -> f64 {
    if let HFunction::Pwl(p) = h {
        let (xs, ys) = p.knots();
        let (_, right) = p.extensions();
        let on_diag = |i: usize| (ys[i] - xs[i]).abs() <= 1e-15 * (1.0 + xs[i].abs());
        let last = xs.len() - 1;
        if on_diag(last) && right == Extension::Slope(1.0) {
            return f64::INFINITY;
        }
        return (0..xs.len()).rev().find(|&i| on_diag(i) && xs[i] >= 0.0).map_or(0.0, |i| xs[i]);
    }
    let (_, hi) = h.domain();
    let on_diag = |z: f64| h.eval(z) >= z - 4.0 * f64::EPSILON * z.abs();
    let mut b = 1.0f64.min(hi);
    while on_diag(b) {
        if b >= hi {
            return b;
        }
        if b > 1e12 {
            return f64::INFINITY;
        }
        b = (2.0 * b).min(hi);
    }
    let z = last_true(on_diag, 0.0, b, 1e-15);
    if z < 1e-12 {
        0.0
    } else {
        z
    }
}

/// Constants of both sides: `d̲, d̄, ζ̲, ζ̄, m̲, m̄, c̲, c̄`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub d_lo: f64,
    pub d_hi: f64,
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    pub c_lo: f64,
    pub c_hi: f64,
}

impl Constants {
    fn from_sides(pos: &SideConstants, neg: &SideConstants) -> Self {
        Constants {
            d_lo: -neg.d,
            d_hi: pos.d,
            zeta_lo: -neg.zeta,
            zeta_hi: pos.zeta,
            m_lo: neg.m,
            m_hi: pos.m,
            c_lo: neg.c,
            c_hi: pos.c,
        }
    }
}

/// `q` at one point together with convergence diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEstimate {
    pub z: f64,
    pub q: f64,
    pub iterations: usize,
    /// The iterates `q_j` were nondecreasing in `j`.
    pub monotone: bool,
    pub converged: bool,
}

/// Evaluates `q[h_S]` anywhere once the constants are known.
#[derive(Clone, Debug)]
pub struct QEvaluator {
    h: HFunction,
    h_bar: HFunction,
    pos: SideConstants,
    neg: SideConstants,
    tol: f64,
    max_iter: usize,
}

impl QEvaluator {
    pub fn new(disc: &LocalDiscrepancy, tol: f64, max_iter: usize) -> Self {
        let h = disc.h_s().clone();
        let h_bar = disc.h_bar_s().clone();
        let pos = SideConstants::of(&h);
        let neg = SideConstants::of(&h_bar);
        QEvaluator { h, h_bar, pos, neg, tol, max_iter }
    }

    pub fn constants(&self) -> Constants {
        Constants::from_sides(&self.pos, &self.neg)
    }

    pub fn estimate(&self, z: f64) -> PointEstimate {
        let mut e = if z >= 0.0 {
            side_estimate(&self.h, &self.pos, z, self.tol, self.max_iter)
        } else {
            side_estimate(&self.h_bar, &self.neg, -z, self.tol, self.max_iter)
        };
        e.z = z;
        e
    }

    pub fn q(&self, z: f64) -> f64 {
        self.estimate(z).q
    }
}

fn exact(z: f64, q: f64) -> PointEstimate {
    PointEstimate { z, q, iterations: 0, monotone: true, converged: true }
}

/// Three-point polynomial through `(s_i, q_i)` evaluated at `s = 0`.
fn extrapolate_to_zero(pts: [(f64, f64); 3]) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= pts[j].0 / (pts[j].0 - pts[i].0);
            }
        }
        total += w * pts[i].1;
    }
    total
}

fn side_estimate(h: &HFunction, k: &SideConstants, w: f64, tol: f64, max_iter: usize) -> PointEstimate {
    if w > k.d {
        return exact(w, f64::NEG_INFINITY);
    }
    if w <= k.zeta {
        return exact(w, 0.0);
    }
    let smooth = k.m >= SMOOTH_THRESHOLD;
    let mut y = w;
    let mut dprod = 1.0;
    let mut monotone = true;
    let mut hist: Vec<(f64, f64)> = Vec::new();
    let mut prev_est = f64::NAN;
    let mut prev_change = f64::INFINITY;
    let mut checkpoint = 8usize;
    let mut last_q = f64::NAN;
    let mut last_delta = f64::NAN;
    for j in 1..=max_iter {
        let slope = h.deriv_left(y);
        if !(slope > 0.0) || !slope.is_finite() {
            if j == 1 && slope == 0.0 {
                return exact(w, f64::NEG_INFINITY);
            }
            return PointEstimate { z: w, q: last_q, iterations: j, monotone, converged: false };
        }
        dprod *= slope;
        let next = h.eval(y);
        if !(dprod > 1e-300) {
            return PointEstimate { z: w, q: last_q, iterations: j, monotone, converged: false };
        }
        let qj = k.c * (next - y) / dprod;
        if j > 1 && qj < last_q - 1e-9 * (1.0 + last_q.abs()) {
            monotone = false;
        }
        let delta = qj - last_q;
        if next <= k.zeta || next == y {
            return PointEstimate { z: w, q: qj, iterations: j, monotone, converged: true };
        }
        let scale = 1.0 + qj.abs();
        if smooth {
            hist.push((y - k.zeta, qj));
            if j == checkpoint {
                let est = extrapolate_to_zero([hist[j / 4 - 1], hist[j / 2 - 1], hist[j - 1]]);
                let change = (est - prev_est).abs();
                if change <= tol * scale {
                    return PointEstimate { z: w, q: est, iterations: j, monotone, converged: true };
                }
                if j >= 64 && change > prev_change {
                    return PointEstimate {
                        z: w,
                        q: prev_est,
                        iterations: j,
                        monotone,
                        converged: prev_change <= NOISE_FLOOR * scale,
                    };
                }
                prev_change = change;
                prev_est = est;
                checkpoint *= 2;
            }
        } else if j > 1 {
            let r = delta / last_delta;
            let tail = if r.is_finite() && r.abs() < 1.0 { delta * r / (1.0 - r) } else { 0.0 };
            if delta.abs() <= tol * scale {
                return PointEstimate { z: w, q: qj + tail, iterations: j, monotone, converged: true };
            }
        }
        last_delta = delta;
        last_q = qj;
        y = next;
    }
    let q = if smooth && prev_est.is_finite() { prev_est } else { last_q };
    PointEstimate { z: w, q, iterations: max_iter, monotone, converged: false }
}

/// Structural conditions on `h_S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conditions {
    /// `h_S'` and `h̄_S'` have no jumps between the fixed interval and the plateau.
    pub necessary_ok: bool,
    /// `1/h_S'` and `1/h̄_S'` are convex.
    pub sufficient_ok: bool,
}

fn slope_jump(h: &HFunction, a: f64, b: f64) -> f64 {
    let l = h.deriv_left(b);
    let r = h.deriv_right(a);
    (l - r).abs() / l.abs().max(r.abs()).max(1e-12)
}

fn abs_jump(h: &HFunction, a: f64, b: f64) -> f64 {
    (h.deriv_left(b) - h.deriv_right(a)).abs()
}

fn has_kink(h: &HFunction, k: &SideConstants) -> bool {
    if !k.zeta.is_finite() {
        return false;
    }
    let lo = k.zeta;
    let hi = k.d.min(k.zeta + 10.0);
    if !(hi > lo) {
        return false;
    }
    let n = 256;
    for i in 0..n {
        let mut a = lo + (hi - lo) * i as f64 / n as f64;
        let mut b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
        if slope_jump(h, a, b) <= 1e-3 {
            continue;
        }
        let reference = h.deriv_right(a).abs().max(h.deriv_left(b).abs());
        while b - a > 1e-10 * (1.0 + a.abs()) {
            let m = 0.5 * (a + b);
            if slope_jump(h, a, m) >= slope_jump(h, m, b) {
                b = m;
            } else {
                a = m;
            }
        }
        if slope_jump(h, a, b) > 1e-3 && abs_jump(h, a, b) > 1e-6 * reference {
            return true;
        }
    }
    false
}

fn inverse_slope_convex(h: &HFunction, k: &SideConstants) -> bool {
    let top = k.d.min(10.0);
    if !(top > 0.0) {
        return true;
    }
    let n = 128;
    let f: Vec<f64> = (0..n).map(|i| 1.0 / h.deriv_left(top * i as f64 / n as f64)).collect();
    if f.iter().any(|v| !v.is_finite()) {
        return false;
    }
    f.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-8 * (1.0 + w[1].abs()))
}

/// Evaluate the necessary (derivative without jumps) and sufficient
/// (convex inverse slope) conditions on both sides.
pub fn check_conditions(disc: &LocalDiscrepancy) -> Conditions {
    let pos = SideConstants::of(disc.h_s());
    let neg = SideConstants::of(disc.h_bar_s());
    Conditions {
        necessary_ok: !has_kink(disc.h_s(), &pos) && !has_kink(disc.h_bar_s(), &neg),
        sufficient_ok: inverse_slope_convex(disc.h_s(), &pos) && inverse_slope_convex(disc.h_bar_s(), &neg),
    }
}

/// `q[h_S]` on a grid with diagnostics.
#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    evaluator: QEvaluator,
    points: Vec<PointEstimate>,
    conditions: Conditions,
    concave_on_grid: bool,
}

impl ReconstructionReport {
    pub fn points(&self) -> &[PointEstimate] {
        &self.points
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.z).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.q).collect()
    }

    pub fn constants(&self) -> Constants {
        self.evaluator.constants()
    }

    pub fn conditions(&self) -> Conditions {
        self.conditions
    }

    pub fn evaluator(&self) -> &QEvaluator {
        &self.evaluator
    }

    /// Points where the iteration did not settle within the budget.
    pub fn failures(&self) -> Vec<Error> {
        self.points
            .iter()
            .filter(|p| !p.converged)
            .map(|p| Error::NonConvergence {
                z: p.z,
                detail: format!("q iteration stopped after {} steps", p.iterations),
            })
            .collect()
    }

    pub fn converged_fraction(&self) -> f64 {
        let ok = self.points.iter().filter(|p| p.converged).count();
        ok as f64 / self.points.len() as f64
    }

    /// Slopes between consecutive finite grid values are nonincreasing.
    pub fn concave_on_grid(&self) -> bool {
        self.concave_on_grid
    }
}

fn discrete_concave(pts: &[(f64, f64)], tol: f64) -> bool {
    let finite: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1.is_finite()).collect();
    let slopes: Vec<f64> = finite.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    slopes.windows(2).all(|s| s[1] <= s[0] + tol * (1.0 + s[0].abs().max(s[1].abs())))
}

/// Compute `q[h_S]` on `grid`.
pub fn reconstruct(disc: &LocalDiscrepancy, grid: &[f64], tol: f64, max_iter: usize) -> Result<ReconstructionReport> {
    if grid.is_empty() || grid.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameters("reconstruction grid must be nonempty and finite".into()));
    }
    if !(tol > 0.0) || max_iter < 8 {
        return Err(Error::InvalidParameters("tolerance must be positive and max_iter at least 8".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let evaluator = QEvaluator::new(disc, tol, max_iter);
    let points: Vec<PointEstimate> = sorted.iter().map(|&z| evaluator.estimate(z)).collect();
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.z, p.q)).collect();
    Ok(ReconstructionReport {
        concave_on_grid: discrete_concave(&pairs, 1e-6),
        conditions: check_conditions(disc),
        evaluator,
        points,
    })
}

/// Outcome of the existence test.
#[derive(Clone, Debug)]
pub struct Decision {
    pub exists: bool,
    pub reason: String,
    /// Midpoint-concavity violations found on the mesh.
    pub violations: usize,
    pub witness: Option<DynamicPenalty>,
}

/// Decide whether a dynamic model reproduces `h_S` by testing midpoint
/// concavity of `q` on a mesh of `concavity_grid` points spanning the
/// report's grid. On success a witness penalty is built from `q`.
pub fn decide_dynamic(report: &ReconstructionReport, concavity_grid: usize) -> Result<Decision> {
    if report.converged_fraction() < 0.9 {
        return Err(Error::Inconclusive(format!(
            "q converged on only {:.0}% of the grid",
            100.0 * report.converged_fraction()
        )));
    }
    let n = concavity_grid.max(3);
    let c = report.constants();
    let grid = report.grid();
    let lo = grid[0].max(c.d_lo);
    let hi = grid[grid.len() - 1].min(c.d_hi);
    let ev = &report.evaluator;
    let mut violations = 0;
    let mut marginal_unconverged = 0;
    if hi > lo {
        let mesh: Vec<PointEstimate> =
            (0..2 * n - 1).map(|i| ev.estimate(lo + (hi - lo) * i as f64 / (2 * n - 2) as f64)).collect();
        for a in 0..n {
            for b in a + 1..n {
                let (x, y, m) = (&mesh[2 * a], &mesh[2 * b], &mesh[a + b]);
                if !(x.q.is_finite() && y.q.is_finite()) {
                    continue;
                }
                let avg = 0.5 * (x.q + y.q);
                let slack = 1e-7 * (1.0 + x.q.abs() + y.q.abs());
                if !(m.q >= avg - slack) {
                    violations += 1;
                    let marginal = m.q >= avg - 100.0 * slack;
                    if marginal && !(x.converged && y.converged && m.converged) {
                        marginal_unconverged += 1;
                    }
                }
            }
        }
    }
    if violations > 0 && violations == marginal_unconverged {
        return Err(Error::Inconclusive("concavity violations are marginal and sit on unconverged points".into()));
    }
    if violations > 0 {
        return Ok(Decision { exists: false, reason: "q[h_S] not concave".into(), violations, witness: None });
    }
    if !report.conditions.necessary_ok {
        return Ok(Decision {
            exists: false,
            reason: "h_S' jumps between the fixed interval and the plateau".into(),
            violations: 0,
            witness: None,
        });
    }
    let witness = build_witness(ev, lo, hi)?;
    Ok(Decision { exists: true, reason: "q[h_S] concave".into(), violations: 0, witness: Some(witness) })
}

fn lobatto(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            if k == 0 {
                a
            } else if k == n {
                b
            } else {
                a + (b - a) * 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / n as f64).cos())
            }
        })
        .collect()
}

/// Second-order one-sided and centred slopes on a nonuniform segment.
fn segment_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 2 {
        let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return vec![s, s];
    }
    let three = |x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, at: f64| {
        let l0 = ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2));
        let l1 = ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2));
        let l2 = ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1));
        l0 * y0 + l1 * y1 + l2 * y2
    };
    (0..n)
        .map(|i| {
            let c = i.clamp(1, n - 2);
            three(xs[c - 1], xs[c], xs[c + 1], ys[c - 1], ys[c], ys[c + 1], xs[i])
        })
        .collect()
}

/// Hermite interpolant of `q` on `[lo, hi]`, with one-sided slopes at the
/// structural points `d̲, ζ̲, 0, ζ̄, d̄` so kinks there are kept.
pub fn build_witness(ev: &QEvaluator, lo: f64, hi: f64) -> Result<DynamicPenalty> {
    let c = ev.constants();
    let mut a = lo.max(c.d_lo);
    let mut b = hi.min(c.d_hi);
    if !(a <= 0.0 && b >= 0.0 && b > a) {
        return Err(Error::InvalidParameters("witness range must contain 0".into()));
    }
    let span = b - a;
    if !ev.q(a).is_finite() {
        a += 1e-4 * span;
    }
    if !ev.q(b).is_finite() {
        b -= 1e-4 * span;
    }
    let mut breaks = vec![a];
    for s in [c.zeta_lo, 0.0, c.zeta_hi] {
        if s > a + 1e-9 * span && s < b - 1e-9 * span && s > *breaks.last().unwrap() + 1e-9 * span {
            breaks.push(s);
        }
    }
    breaks.push(b);
    let segments = breaks.len() - 1;
    let budget = MAX_WITNESS_KNOTS - 1 - segments;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut ml: Vec<f64> = Vec::new();
    let mut mr: Vec<f64> = Vec::new();
    for w in breaks.windows(2) {
        let share = ((w[1] - w[0]) / (b - a) * budget as f64).floor() as usize;
        let cells = share.max(8).min(budget);
        let sx = lobatto(w[0], w[1], cells);
        let sy: Vec<f64> = sx.iter().map(|&x| ev.q(x)).collect();
        if sy.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence { z: w[0], detail: "q not finite inside the witness range".into() });
        }
        let sm = segment_slopes(&sx, &sy);
        let start = if xs.is_empty() {
            0
        } else {
            *mr.last_mut().unwrap() = sm[0];
            1
        };
        for i in start..sx.len() {
            xs.push(sx[i]);
            ys.push(sy[i]);
            ml.push(sm[i]);
            mr.push(sm[i]);
        }
    }
    let left = if a == c.d_lo || a > lo { Extension::Wall } else { Extension::Slope(mr[0]) };
    let right = if b == c.d_hi || b < hi { Extension::Wall } else { Extension::Slope(*ml.last().unwrap()) };
    let s = Sampled::one_sided(xs, ys, ml, mr, left, right).map_err(Error::InvalidParameters)?;
    DynamicPenalty::new("witness", HFunction::Sampled(Arc::new(s)))
}

/// `n` points spanning the finite part of `[d̲, d̄]` clipped to `[−6, 6]`,
/// kept slightly inside so that `q` is finite at the ends.
pub fn default_grid(disc: &LocalDiscrepancy, n: usize) -> Vec<f64> {
    let c = QEvaluator::new(disc, DEFAULT_TOL, DEFAULT_MAX_ITER).constants();
    let (lo, hi) = (c.d_lo.max(-6.0), c.d_hi.min(6.0));
    let pad = 1.0 / 600.0 * (hi - lo);
    let (a, b) = (lo + pad, hi - pad);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64).collect()
}

/// A dynamic model for `disc`: its own when it has one, otherwise the
/// witness of the reconstruction on [`default_grid`].
pub fn witness_for(disc: &LocalDiscrepancy) -> Result<DynamicPenalty> {
    if let Some(dp) = disc.dynamic() {
        return Ok(dp.clone());
    }
    let report = reconstruct(disc, &default_grid(disc, 65), DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let decision = decide_dynamic(&report, 33)?;
    decision
        .witness
        .ok_or_else(|| Error::ModelMismatch(format!("{} has no dynamic counterpart: {}", disc.name(), decision.reason)))
}

/// Rows `(z, q(z), c_D(1, z))`; the last column is NaN without a witness.
pub fn emit_profile(report: &ReconstructionReport, witness: Option<&DynamicPenalty>) -> Vec<[f64; 3]> {
    report
        .points
        .iter()
        .map(|p| {
            let cd = witness.and_then(|w| w.cd_eval(1.0, p.z).ok()).unwrap_or(f64::NAN);
            [p.z, p.q, cd]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(name: &str, z: f64) -> f64 {
        let d = LocalDiscrepancy::catalog(name).unwrap();
        QEvaluator::new(&d, DEFAULT_TOL, DEFAULT_MAX_ITER).q(z)
    }

    #[test]
    fn hellinger_is_minus_square() {
        for z in [-0.9, -0.3, 0.5, 2.0, 3.0] {
            assert!((q("hellinger", z) + z * z).abs() < 1e-8, "z = {z}: {}", q("hellinger", z));
        }
    }

    #[test]
    fn js_natural_log() {
        let v = q("js", 1.0);
        let expect = -(2f64.sqrt() - 1.0 / 2f64.sqrt()).powi(2) / std::f64::consts::LN_2;
        assert!((v - expect).abs() < 1e-8, "{v} vs {expect}");
    }

    #[test]
    fn pwl_segments() {
        let d = LocalDiscrepancy::catalog("pwl(-2,-1,2,1,2,0.5)").unwrap();
        let ev = QEvaluator::new(&d, DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert!((ev.q(1.5) - 0.5 * 0.5f64.ln()).abs() < 1e-12);
        assert!((ev.q(-2.5) - (-1.5) * 2f64.ln()).abs() < 1e-12);
        assert_eq!(ev.q(0.3), 0.0);
        assert_eq!(ev.q(2.5), f64::NEG_INFINITY);
        assert_eq!(ev.q(-3.5), f64::NEG_INFINITY);
    }

    #[test]
    fn kink_breaks_concavity() {
        let d = LocalDiscrepancy::custom_pwl(vec![0.0, 1.0, 3.0, 7.0], vec![0.0, 1.0, 2.0, 2.75]).unwrap();
        let grid: Vec<f64> = (0..81).map(|i| -2.0 + 0.1 * i as f64).collect();
        let r = reconstruct(&d, &grid, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(!r.conditions().necessary_ok);
        let dec = decide_dynamic(&r, 64).unwrap();
        assert!(!dec.exists);
        assert_eq!(dec.reason, "q[h_S] not concave");
    }

    #[test]
    fn hellinger_witness_round_trip() {
        let d = LocalDiscrepancy::catalog("hellinger").unwrap();
        let grid: Vec<f64> = (0..=90).map(|i| -10.0 + 13.5 * i as f64 / 90.0).collect();
        let r = reconstruct(&d, &grid, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let dec = decide_dynamic(&r, 64).unwrap();
        assert!(dec.exists);
        let w = dec.witness.unwrap();
        for z in [-0.5, 0.7, 2.0] {
            let f = w.flow(1.0, z).value;
            assert!((f - z / (1.0 + z)).abs() < 1e-6, "{z}: {f}");
        }
    }
}
