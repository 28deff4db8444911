//! Scalar flow of `∂ₜφ = h_D(φ)` and the static profile `h_S = F₁`.
//!
//! Away from the fixed-point interval the flow is obtained by inverting the
//! travel time `∫ dx / |h_D(x)|`. Distances to the nearest fixed point are
//! handled in logarithmic coordinates `x = ζ ± e^u`, which keeps the
//! quadrature well conditioned when the flow creeps towards a fixed point.

use crate::error::{Error, Result};
use crate::hfunc::{Extension, HFunction};
use crate::numeric::{integrate, last_true};
use std::f64::consts::LN_2;
use std::sync::Arc;

const QUAD_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 1 << 16;
const U_MAX: f64 = 700.0;

/// Infinitesimal growth penalty given by its profile `h_D`.
#[derive(Clone, Debug)]
pub struct DynamicPenalty {
    h: HFunction,
    sign: f64,
    dom_lo: f64,
    dom_hi: f64,
    fixed_lo: f64,
    fixed_hi: f64,
    name: String,
}

/// Value of a flow map together with a flag for absorption.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowResult {
    pub value: f64,
    pub reached_fixed_point: bool,
}

impl DynamicPenalty {
    /// Wrap a profile; checks `h(0) = 0`, `h ≤ 0` and the monotonicity
    /// pattern on a grid.
    pub fn new(name: impl Into<String>, h: HFunction) -> Result<Self> {
        let (dom_lo, dom_hi) = h.domain();
        if !(dom_lo <= 0.0 && dom_hi >= 0.0) || h.eval(0.0).abs() > 1e-12 {
            return Err(Error::InvalidParameters("h_D must vanish at 0".into()));
        }
        let a = if dom_lo.is_finite() { dom_lo } else { -10.0 };
        let b = if dom_hi.is_finite() { dom_hi } else { 10.0 };
        let n = 257;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..n {
            let z = a + (b - a) * i as f64 / (n - 1) as f64;
            let v = h.eval(z);
            if v > 1e-12 {
                return Err(Error::InvalidParameters(format!("h_D({z}) = {v} is positive")));
            }
            if z <= 0.0 && v < prev - 1e-10 {
                return Err(Error::InvalidParameters(format!("h_D decreases on the negatives near {z}")));
            }
            if z > 0.0 && v > prev.min(0.0) + 1e-10 {
                return Err(Error::InvalidParameters(format!("h_D increases on the positives near {z}")));
            }
            prev = if z <= 0.0 && i + 1 < n && a + (b - a) * (i + 1) as f64 / (n - 1) as f64 > 0.0 { 0.0 } else { v };
        }
        let fixed_hi = zero_edge(&h, 1.0, dom_hi);
        let fixed_lo = -zero_edge_neg(&h, dom_lo);
        Ok(DynamicPenalty { h, sign: 1.0, dom_lo, dom_hi, fixed_lo, fixed_hi, name: name.into() })
    }

    /// Catalog dynamics: `hellinger`, `jensen_shannon`, `tv`, `exact`.
    pub fn catalog(name: &str) -> Result<Self> {
        match name {
            "hellinger" => DynamicPenalty::new("hellinger", HFunction::HellingerDyn),
            "jensen_shannon" | "js" => DynamicPenalty::new("jensen_shannon", HFunction::JensenShannonDyn),
            "tv" => DynamicPenalty::new(
                "tv",
                HFunction::pwl(vec![-1.0, 1.0], vec![0.0, 0.0], Extension::Wall, Extension::Wall)
                    .map_err(Error::InvalidParameters)?,
            ),
            "exact" => DynamicPenalty::new(
                "exact",
                HFunction::pwl(vec![0.0], vec![0.0], Extension::Slope(0.0), Extension::Slope(0.0))
                    .map_err(Error::InvalidParameters)?,
            ),
            other => Err(Error::UnknownName(format!("dynamic model '{other}'"))),
        }
    }

    /// Piecewise-linear dynamics: zero on `[s_lo, s_hi]`, slope `ln a` below
    /// down to `lo`, slope `ln b` above up to `hi`.
    pub fn pwl(lo: f64, s_lo: f64, a: f64, s_hi: f64, hi: f64, b: f64) -> Result<Self> {
        let mut xs = vec![];
        let mut ys = vec![];
        for (x, y) in [
            (lo, (lo - s_lo) * a.ln()),
            (s_lo, 0.0),
            (s_hi, 0.0),
            (hi, (hi - s_hi) * b.ln()),
        ] {
            if xs.last().map_or(true, |&l: &f64| x > l) {
                xs.push(x);
                ys.push(y);
            }
        }
        let h = HFunction::pwl(xs, ys, Extension::Wall, Extension::Wall).map_err(Error::InvalidParameters)?;
        DynamicPenalty::new("pwl", h)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `h_D(z)`.
    pub fn h(&self, z: f64) -> f64 {
        self.h.eval(self.sign * z)
    }

    /// One-sided derivative of `h_D`.
    pub fn h_deriv(&self, z: f64, right: bool) -> f64 {
        if self.sign > 0.0 {
            self.h.deriv(z, right)
        } else {
            -self.h.deriv(-z, !right)
        }
    }

    pub fn profile(&self) -> &HFunction {
        &self.h
    }

    pub fn is_reflected(&self) -> bool {
        self.sign < 0.0
    }

    /// Closure of `dom h_D`.
    pub fn domain(&self) -> (f64, f64) {
        (self.dom_lo, self.dom_hi)
    }

    /// The interval `{h_D = 0}`.
    pub fn fixed_interval(&self) -> (f64, f64) {
        (self.fixed_lo, self.fixed_hi)
    }

    /// The penalty with profile `z ↦ h_D(−z)`.
    pub fn reflected(&self) -> DynamicPenalty {
        DynamicPenalty {
            h: self.h.clone(),
            sign: -self.sign,
            dom_lo: -self.dom_hi,
            dom_hi: -self.dom_lo,
            fixed_lo: -self.fixed_hi,
            fixed_hi: -self.fixed_lo,
            name: self.name.clone(),
        }
    }

    fn speed_above(&self, u: f64) -> f64 {
        let x = self.fixed_hi + u.exp();
        let v = self.h(x);
        u.exp() / (-v)
    }

    fn speed_below(&self, u: f64) -> f64 {
        let x = self.fixed_lo - u.exp();
        let v = self.h(x);
        u.exp() / (-v)
    }

    fn floor_above(&self) -> f64 {
        (self.fixed_hi.abs() * 1e-16).max(1e-300).ln()
    }

    fn floor_below(&self) -> f64 {
        (self.fixed_lo.abs() * 1e-16).max(1e-300).ln()
    }

    fn ceiling_below(&self) -> f64 {
        if self.dom_lo.is_finite() {
            (self.fixed_lo - self.dom_lo).ln()
        } else {
            U_MAX
        }
    }

    /// `F_t(z)`.
    pub fn flow(&self, t: f64, z: f64) -> FlowResult {
        let fixed = FlowResult { value: z, reached_fixed_point: false };
        if t == 0.0 || z.is_nan() {
            return if z >= self.dom_lo && z <= self.dom_hi { fixed } else { FlowResult { value: f64::NEG_INFINITY, ..fixed } };
        }
        if z < self.dom_lo {
            return FlowResult { value: f64::NEG_INFINITY, reached_fixed_point: false };
        }
        if z > self.dom_hi {
            return FlowResult { value: f64::NEG_INFINITY, reached_fixed_point: false };
        }
        if z >= self.fixed_lo && z <= self.fixed_hi {
            return fixed;
        }
        if z > self.fixed_hi {
            if z == f64::INFINITY {
                return self.flow_from_infinity(t);
            }
            let start = (z - self.fixed_hi).ln();
            return match march(|u| self.speed_above(u), start, -1.0, t, self.floor_above()) {
                Some(v) => FlowResult { value: self.fixed_hi + v.exp(), reached_fixed_point: false },
                None => FlowResult { value: self.fixed_hi, reached_fixed_point: true },
            };
        }
        let start = (self.fixed_lo - z).ln();
        match march(|u| self.speed_below(u), start, 1.0, t, self.ceiling_below()) {
            Some(v) if !(self.dom_lo == f64::NEG_INFINITY && v >= U_MAX) => {
                FlowResult { value: self.fixed_lo - v.exp(), reached_fixed_point: false }
            }
            _ => FlowResult { value: f64::NEG_INFINITY, reached_fixed_point: false },
        }
    }

    fn flow_from_infinity(&self, t: f64) -> FlowResult {
        let total = tail_total(|u| self.speed_above(u), 0.0, U_MAX);
        if !total.is_finite() {
            return FlowResult { value: f64::INFINITY, reached_fixed_point: false };
        }
        let v = if total >= t {
            march(|u| self.speed_above(u), 0.0, 1.0, total - t, U_MAX)
        } else {
            march(|u| self.speed_above(u), 0.0, -1.0, t - total, self.floor_above())
        };
        match v {
            Some(v) => FlowResult { value: self.fixed_hi + v.exp(), reached_fixed_point: false },
            None => FlowResult { value: self.fixed_hi, reached_fixed_point: true },
        }
    }

    /// Infimum of `{z : F_t(z) > −∞}`.
    pub fn flow_domain_lo(&self, t: f64) -> f64 {
        if t == 0.0 || self.fixed_lo == f64::NEG_INFINITY {
            return self.dom_lo;
        }
        let ceiling = self.ceiling_below();
        let v = if self.dom_lo.is_finite() {
            march(|u| self.speed_below(u), ceiling, -1.0, t, self.floor_below())
        } else {
            let total = tail_total(|u| self.speed_below(u), 0.0, U_MAX);
            if !total.is_finite() {
                return f64::NEG_INFINITY;
            }
            if total >= t {
                march(|u| self.speed_below(u), 0.0, 1.0, total - t, ceiling)
            } else {
                march(|u| self.speed_below(u), 0.0, -1.0, t - total, self.floor_below())
            }
        };
        match v {
            Some(v) => self.fixed_lo - v.exp(),
            None => self.fixed_lo,
        }
    }

    /// `F_t^inv(z) = −F̃_t(−z)` with `F̃` the flow of the reflected penalty.
    pub fn inverse_flow(&self, t: f64, z: f64) -> FlowResult {
        let r = self.reflected().flow(t, -z);
        FlowResult { value: -r.value, reached_fixed_point: r.reached_fixed_point }
    }

    /// `c_D(ρ, ζ) = sup_z ρ h_D(z) + ζ z`.
    pub fn cd_eval(&self, rho: f64, zeta: f64) -> Result<f64> {
        if rho < 0.0 || rho.is_nan() {
            return Err(Error::NegativeDensity(rho));
        }
        if zeta == 0.0 {
            return Ok(0.0);
        }
        if rho == 0.0 {
            let edge = if zeta > 0.0 { self.dom_hi } else { self.dom_lo };
            return Ok(if edge.is_infinite() { f64::INFINITY } else { zeta * edge });
        }
        if self.sign < 0.0 {
            return self.reflected().cd_eval(rho, -zeta);
        }
        match &self.h {
            HFunction::HellingerDyn => Ok(zeta * zeta / (4.0 * rho)),
            HFunction::JensenShannonDyn => {
                let r = zeta / (2.0 * rho);
                let g = r + (r * r + 1.0).sqrt();
                let s = g.sqrt() - 1.0 / g.sqrt();
                Ok(-s * s / LN_2 * rho + zeta * g.log2())
            }
            HFunction::Pwl(p) => {
                let (xs, ys) = p.knots();
                let (left, right) = p.extensions();
                if let Extension::Slope(s) = right {
                    if rho * s + zeta > 0.0 {
                        return Ok(f64::INFINITY);
                    }
                }
                if let Extension::Slope(s) = left {
                    if rho * s + zeta < 0.0 {
                        return Ok(f64::INFINITY);
                    }
                }
                Ok(xs.iter().zip(ys).map(|(x, y)| rho * y + zeta * x).fold(f64::NEG_INFINITY, f64::max))
            }
            h => {
                let z = h.argmax_generic(-zeta / rho);
                if !z.is_finite() {
                    return Ok(f64::INFINITY);
                }
                Ok(rho * h.eval(z) + zeta * z)
            }
        }
    }

    /// Maximizer `z*` in the definition of `c_D(ρ, ζ)` for `ρ > 0`.
    pub fn cd_argmax(&self, rho: f64, zeta: f64) -> f64 {
        if zeta == 0.0 {
            return 0.0;
        }
        let r = -zeta / rho;
        match (&self.h, self.sign > 0.0) {
            (HFunction::HellingerDyn, _) => zeta / (2.0 * rho),
            (HFunction::JensenShannonDyn, _) => (zeta / (2.0 * rho)).asinh() / LN_2,
            _ => {
                if self.sign > 0.0 {
                    self.h.argmax_generic(r)
                } else {
                    -self.h.argmax_generic(-r)
                }
            }
        }
    }

    /// `h_S = F₁`, clamped above `dom h_D`.
    pub fn static_profile(&self) -> HFunction {
        HFunction::Flow(Arc::new(FlowMap::new(self.clone(), 1.0)))
    }
}

/// Largest `z ≥ 0` in the domain with `h(z) = 0`.
fn zero_edge(h: &HFunction, scale: f64, dom_hi: f64) -> f64 {
    let tol = 1e-12;
    let is_zero = |z: f64| h.eval(z) >= -1e-15;
    let mut b = if dom_hi.is_finite() { dom_hi } else { scale };
    if dom_hi.is_finite() {
        if is_zero(b) {
            return b;
        }
    } else {
        let mut guard = 0;
        while is_zero(b) {
            b *= 2.0;
            guard += 1;
            if guard > 1000 {
                return f64::INFINITY;
            }
        }
    }
    last_true(is_zero, 0.0, b, tol)
}

fn zero_edge_neg(h: &HFunction, dom_lo: f64) -> f64 {
    let tol = 1e-12;
    let is_zero = |w: f64| h.eval(-w) >= -1e-15;
    let mut b = if dom_lo.is_finite() { -dom_lo } else { 1.0 };
    if dom_lo.is_finite() {
        if is_zero(b) {
            return b;
        }
    } else {
        let mut guard = 0;
        while is_zero(b) {
            b *= 2.0;
            guard += 1;
            if guard > 1000 {
                return f64::INFINITY;
            }
        }
    }
    last_true(is_zero, 0.0, b, tol)
}

/// Integrate `g` from `start` in direction `dir` until the accumulated
/// integral equals `target`; `None` if `limit` is reached first.
fn march<G: Fn(f64) -> f64>(g: G, start: f64, dir: f64, target: f64, limit: f64) -> Option<f64> {
    if target <= 0.0 {
        return Some(start);
    }
    if (dir > 0.0 && start >= limit) || (dir < 0.0 && start <= limit) {
        return None;
    }
    let mut u = start;
    let mut acc = 0.0;
    let mut w: f64 = 0.25;
    loop {
        let mut next = u + dir * w;
        let mut at_limit = false;
        if (dir > 0.0 && next >= limit) || (dir < 0.0 && next <= limit) {
            next = limit;
            at_limit = true;
        }
        let seg = integrate(&g, u.min(next), u.max(next), QUAD_TOL * target.max(1.0), MAX_PANELS).value;
        if !seg.is_finite() || acc + seg >= target {
            return Some(solve_within(&g, u, next, dir, target - acc));
        }
        acc += seg;
        u = next;
        if at_limit {
            return if acc >= target * (1.0 - 1e-11) { Some(limit) } else { None };
        }
        if seg < 0.25 * (target - acc) {
            w = (w * 2.0).min(16.0);
        }
    }
}

/// `x` between `a` and `b` with `∫_a^x g = r` (orientation `dir`).
fn solve_within<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, dir: f64, r: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, (b - a).abs());
    let mut s = 0.0;
    let mut fs = 0.0;
    for _ in 0..200 {
        let x = a + dir * s;
        let gx = g(x);
        let mut cand = if gx.is_finite() && gx > 0.0 { s + (r - fs) / gx } else { f64::NAN };
        if !(cand > lo && cand < hi) {
            cand = 0.5 * (lo + hi);
        }
        let xc = a + dir * cand;
        let part = integrate(g, x.min(xc), x.max(xc), QUAD_TOL * r.max(1.0), MAX_PANELS).value;
        let fc = if cand >= s { fs + part } else { fs - part };
        if fc > r {
            hi = cand;
        } else {
            lo = cand;
        }
        let done = (fc - r).abs() <= 1e-14 * r.max(1.0) || hi - lo <= 1e-15 * (1.0 + a.abs());
        s = cand;
        fs = fc;
        if done {
            break;
        }
    }
    a + dir * s
}

/// `∫_start^∞ g` by marching; `inf` if the integrand does not decay.
fn tail_total<G: Fn(f64) -> f64>(g: G, start: f64, limit: f64) -> f64 {
    let mut u = start;
    let mut acc = 0.0;
    while u < limit {
        let next = (u + 4.0).min(limit);
        let seg = integrate(&g, u, next, QUAD_TOL, MAX_PANELS).value;
        if !seg.is_finite() {
            return f64::INFINITY;
        }
        acc += seg;
        u = next;
        if seg <= 1e-17 * acc.max(1e-300) || (seg < 1e-18 && g(u) * 4.0 < 1e-18) {
            return acc;
        }
    }
    f64::INFINITY
}

/// Time-`t` flow map viewed as a profile.
#[derive(Clone, Debug)]
pub struct FlowMap {
    dp: DynamicPenalty,
    t: f64,
    lo: f64,
    sup: f64,
}

impl FlowMap {
    pub fn new(dp: DynamicPenalty, t: f64) -> Self {
        let lo = dp.flow_domain_lo(t);
        let (_, hi) = dp.domain();
        let sup = if hi.is_finite() { dp.flow(t, hi).value } else { dp.flow(t, f64::INFINITY).value };
        FlowMap { dp, t, lo, sup }
    }

    pub fn penalty(&self) -> &DynamicPenalty {
        &self.dp
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn eval(&self, z: f64) -> f64 {
        let (_, hi) = self.dp.domain();
        if z > hi {
            return self.sup;
        }
        let near_lo = (z - self.lo).abs() <= 1e-10 * (1.0 + self.lo.abs());
        if z < self.lo && !near_lo {
            return f64::NEG_INFINITY;
        }
        let v = self.dp.flow(self.t, z).value;
        if v == f64::NEG_INFINITY && near_lo && self.dp.dom_lo.is_finite() {
            return self.dp.dom_lo;
        }
        v
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, f64::INFINITY)
    }

    pub fn sup_value(&self) -> f64 {
        self.sup
    }

    /// One-sided derivative via `F'(z) = h_D(F(z)) / h_D(z)` off the fixed
    /// interval, finite differences at its edges.
    pub fn deriv(&self, z: f64, right: bool) -> f64 {
        let (_, hi) = self.dp.domain();
        let (flo, fhi) = self.dp.fixed_interval();
        if z > hi || (z == hi && right) {
            return 0.0;
        }
        if z < self.lo || (z == self.lo && !right) {
            return f64::NAN;
        }
        if z > flo && z < fhi {
            return 1.0;
        }
        if (z == fhi && !right) || (z == flo && right) {
            return 1.0;
        }
        let hz = self.dp.h(z);
        if hz < 0.0 {
            let f = self.dp.flow(self.t, z).value;
            if f.is_finite() {
                return self.dp.h(f) / hz;
            }
            return f64::NAN;
        }
        let h = HFunction::Flow(Arc::new(self.clone()));
        h.fd_slope(z, right, 1e-6)
    }

    /// `h̄` of the flow profile: the flow of the reflected penalty.
    pub fn bar_profile(&self) -> HFunction {
        HFunction::Flow(Arc::new(FlowMap::new(self.dp.reflected(), self.t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hellinger_flow_closed_form() {
        let dp = DynamicPenalty::catalog("hellinger").unwrap();
        for &z in &[0.5, 1.0, 2.0] {
            for &t in &[0.25, 0.5, 2.0] {
                let f = dp.flow(t, z).value;
                assert!((f - z / (1.0 + t * z)).abs() < 1e-10, "t={t} z={z} f={f}");
            }
        }
        assert!((dp.flow(1.0, -0.5).value + 1.0).abs() < 1e-10);
        assert_eq!(dp.flow(1.0, -1.0).value, f64::NEG_INFINITY);
    }

    #[test]
    fn hellinger_static_profile() {
        let dp = DynamicPenalty::catalog("hellinger").unwrap();
        let hs = dp.static_profile();
        assert!((hs.domain().0 + 1.0).abs() < 1e-9);
        assert!((hs.sup_value() - 1.0).abs() < 1e-9);
        assert!((hs.eval(3.0) - 0.75).abs() < 1e-10);
        assert!((hs.deriv_right(1.0) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn inverse_flow_examples() {
        let dp = DynamicPenalty::catalog("hellinger").unwrap();
        assert!((dp.inverse_flow(1.0, 0.5).value - 1.0).abs() < 1e-10);
        assert!((dp.inverse_flow(1.0, -1.0).value + 0.5).abs() < 1e-10);
    }

    #[test]
    fn pwl_and_tv_flows() {
        let dp = DynamicPenalty::pwl(-3.0, -1.0, 2.0, 1.0, 2.0, 0.5).unwrap();
        assert!((dp.flow(1.0, 1.5).value - 1.25).abs() < 1e-10);
        assert!((dp.flow(1.0, -1.5).value + 2.0).abs() < 1e-10);
        let tv = DynamicPenalty::catalog("tv").unwrap();
        assert_eq!(tv.flow(1.0, 0.3).value, 0.3);
        let hs = tv.static_profile();
        assert_eq!(hs.eval(4.0), 1.0);
    }

    #[test]
    fn cd_examples() {
        let h = DynamicPenalty::catalog("hellinger").unwrap();
        assert!((h.cd_eval(1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(h.cd_eval(5.0, 0.0).unwrap(), 0.0);
        let tv = DynamicPenalty::catalog("tv").unwrap();
        assert!((tv.cd_eval(1.0, -3.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(tv.cd_eval(-1.0, 0.0), Err(Error::NegativeDensity(_))));
    }
}
