//! Concave scalar profiles: h_S, h̄_S, h_D and q[h_S] all live here.
//!
//! Values are plain `f64`; `-inf` marks points outside the effective domain.

use crate::flow::FlowMap;
use crate::numeric::bisect;
use std::f64::consts::LN_2;
use std::sync::Arc;

/// Behaviour of a tabulated profile beyond its first or last knot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extension {
    /// `-inf` beyond the knot; the knot itself belongs to the domain.
    Wall,
    /// Affine continuation with the given slope.
    Slope(f64),
}

/// Continuous piecewise-linear profile.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left: Extension,
    right: Extension,
}

impl PiecewiseLinear {
    /// Knots must be strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, left: Extension, right: Extension) -> Result<Self, String> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err("breakpoints and values must be nonempty and of equal length".into());
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err("breakpoints must be strictly increasing".into());
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err("breakpoints and values must be finite".into());
        }
        Ok(PiecewiseLinear { xs, ys, left, right })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn extensions(&self) -> (Extension, Extension) {
        (self.left, self.right)
    }

    fn slope(&self, k: usize) -> f64 {
        (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k])
    }

    pub fn eval(&self, z: f64) -> f64 {
        let n = self.xs.len();
        if z.is_nan() {
            return f64::NAN;
        }
        if z < self.xs[0] {
            return match self.left {
                Extension::Wall => f64::NEG_INFINITY,
                Extension::Slope(s) => self.ys[0] + s * (z - self.xs[0]),
            };
        }
        if z > self.xs[n - 1] {
            return match self.right {
                Extension::Wall => f64::NEG_INFINITY,
                Extension::Slope(s) => {
                    if s == 0.0 {
                        self.ys[n - 1]
                    } else {
                        self.ys[n - 1] + s * (z - self.xs[n - 1])
                    }
                }
            };
        }
        let k = self.xs.partition_point(|&x| x <= z).saturating_sub(1).min(n.saturating_sub(2));
        if n == 1 {
            return self.ys[0];
        }
        let t = (z - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.ys[k] + t * (self.ys[k + 1] - self.ys[k])
    }

    pub fn deriv_left(&self, z: f64) -> f64 {
        let n = self.xs.len();
        if z <= self.xs[0] {
            return match self.left {
                Extension::Wall if z == self.xs[0] => f64::INFINITY,
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        if z > self.xs[n - 1] {
            return match self.right {
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        let k = self.xs.partition_point(|&x| x < z) - 1;
        self.slope(k)
    }

    pub fn deriv_right(&self, z: f64) -> f64 {
        let n = self.xs.len();
        if z >= self.xs[n - 1] {
            return match self.right {
                Extension::Wall if z == self.xs[n - 1] => f64::NEG_INFINITY,
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        if z < self.xs[0] {
            return match self.left {
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        let k = self.xs.partition_point(|&x| x <= z) - 1;
        self.slope(k)
    }

    pub fn domain(&self) -> (f64, f64) {
        let lo = match self.left {
            Extension::Wall => self.xs[0],
            Extension::Slope(_) => f64::NEG_INFINITY,
        };
        let hi = match self.right {
            Extension::Wall => *self.xs.last().unwrap(),
            Extension::Slope(_) => f64::INFINITY,
        };
        (lo, hi)
    }

    pub fn sup_value(&self) -> f64 {
        match self.right {
            Extension::Wall => self.ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Extension::Slope(s) if s <= 0.0 => self.ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Extension::Slope(_) => f64::INFINITY,
        }
    }

    /// Point maximizing `h(u) − r·u`, scanning knots; the superdifferential
    /// at a knot is `[slope right, slope left]`.
    pub fn argmax_ratio(&self, r: f64) -> f64 {
        let n = self.xs.len();
        for k in 0..n {
            let dl = self.deriv_left(self.xs[k]);
            let dr = self.deriv_right(self.xs[k]);
            if dl >= r && dr <= r {
                return self.xs[k];
            }
        }
        match (self.left, self.right) {
            (Extension::Slope(s), _) if s < r => f64::NEG_INFINITY,
            (_, Extension::Slope(s)) if s > r => f64::INFINITY,
            _ => self.xs[0],
        }
    }

    /// The reflected inverse `w ↦ −h⁻¹(−w)`.
    pub fn bar(&self) -> Result<PiecewiseLinear, String> {
        let mut xs = self.xs.clone();
        let mut ys = self.ys.clone();
        let mut right = self.right;
        while xs.len() >= 2 {
            let n = xs.len();
            if ys[n - 1] - ys[n - 2] <= 0.0 {
                xs.pop();
                ys.pop();
                right = Extension::Slope(0.0);
            } else {
                break;
            }
        }
        if xs.windows(2).zip(ys.windows(2)).any(|(x, y)| y[1] <= y[0] || x[1] <= x[0]) {
            return Err("profile is not strictly increasing before its plateau".into());
        }
        let nxs: Vec<f64> = ys.iter().rev().map(|v| -v).collect();
        let nys: Vec<f64> = xs.iter().rev().map(|v| -v).collect();
        let new_left = match right {
            Extension::Wall => Extension::Wall,
            Extension::Slope(s) if s <= 0.0 => Extension::Wall,
            Extension::Slope(s) => Extension::Slope(1.0 / s),
        };
        let new_right = match self.left {
            Extension::Wall => Extension::Slope(0.0),
            Extension::Slope(s) if s > 0.0 && s.is_finite() => Extension::Slope(1.0 / s),
            Extension::Slope(_) => return Err("left extension must have a positive finite slope".into()),
        };
        PiecewiseLinear::new(nxs, nys, new_left, new_right)
    }
}

/// Cubic Hermite interpolant through samples with prescribed slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ml: Vec<f64>,
    mr: Vec<f64>,
    left: Extension,
    right: Extension,
}

impl Sampled {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ms: Vec<f64>, left: Extension, right: Extension) -> Result<Self, String> {
        Self::one_sided(xs, ys, ms.clone(), ms, left, right)
    }

    /// Knots with separate left and right slopes, allowing kinks at knots.
    pub fn one_sided(
        xs: Vec<f64>,
        ys: Vec<f64>,
        ml: Vec<f64>,
        mr: Vec<f64>,
        left: Extension,
        right: Extension,
    ) -> Result<Self, String> {
        let n = xs.len();
        if n < 2 || ys.len() != n || ml.len() != n || mr.len() != n {
            return Err("sampled profile needs at least two knots with values and slopes".into());
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err("sample abscissae must be strictly increasing".into());
        }
        if xs.iter().chain(&ys).chain(&ml).chain(&mr).any(|v| !v.is_finite()) {
            return Err("samples must be finite".into());
        }
        Ok(Sampled { xs, ys, ml, mr, left, right })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    fn segment(&self, z: f64) -> usize {
        let n = self.xs.len();
        self.xs.partition_point(|&x| x <= z).saturating_sub(1).min(n - 2)
    }

    pub fn eval(&self, z: f64) -> f64 {
        let n = self.xs.len();
        if z < self.xs[0] {
            return match self.left {
                Extension::Wall => f64::NEG_INFINITY,
                Extension::Slope(s) => self.ys[0] + s * (z - self.xs[0]),
            };
        }
        if z > self.xs[n - 1] {
            return match self.right {
                Extension::Wall => f64::NEG_INFINITY,
                Extension::Slope(s) => self.ys[n - 1] + s * (z - self.xs[n - 1]),
            };
        }
        let k = self.segment(z);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (z - self.xs[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.mr[k] + h01 * self.ys[k + 1] + h11 * h * self.ml[k + 1]
    }

    fn interior_deriv(&self, z: f64, right: bool) -> f64 {
        let n = self.xs.len();
        let mut k = self.segment(z);
        if let Ok(i) = self.xs.binary_search_by(|x| x.total_cmp(&z)) {
            if right && i < n - 1 {
                return self.mr[i];
            }
            if !right && i > 0 {
                return self.ml[i];
            }
            k = k.min(n - 2);
        }
        let h = self.xs[k + 1] - self.xs[k];
        let t = (z - self.xs[k]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.ys[k] + d01 * self.ys[k + 1]) / h + d10 * self.mr[k] + d11 * self.ml[k + 1]
    }

    pub fn deriv_left(&self, z: f64) -> f64 {
        let n = self.xs.len();
        if z <= self.xs[0] {
            return match self.left {
                Extension::Wall if z == self.xs[0] => f64::INFINITY,
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        if z > self.xs[n - 1] {
            return match self.right {
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        self.interior_deriv(z, false)
    }

    pub fn deriv_right(&self, z: f64) -> f64 {
        let n = self.xs.len();
        if z >= self.xs[n - 1] {
            return match self.right {
                Extension::Wall if z == self.xs[n - 1] => f64::NEG_INFINITY,
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        if z < self.xs[0] {
            return match self.left {
                Extension::Wall => f64::NAN,
                Extension::Slope(s) => s,
            };
        }
        self.interior_deriv(z, true)
    }

    pub fn domain(&self) -> (f64, f64) {
        let lo = match self.left {
            Extension::Wall => self.xs[0],
            Extension::Slope(_) => f64::NEG_INFINITY,
        };
        let hi = match self.right {
            Extension::Wall => *self.xs.last().unwrap(),
            Extension::Slope(_) => f64::INFINITY,
        };
        (lo, hi)
    }
}

/// A concave, upper semicontinuous profile.
#[derive(Clone, Debug)]
pub enum HFunction {
    /// `z`.
    Identity,
    /// `z/(1+z)` on `(−1, ∞)`.
    Hellinger,
    /// `log₂(2 − 2^{−z})` on `(−1, ∞)`.
    JensenShannon,
    /// `1 − (2 − √(1+z))²` on `[−1, 3]`, `1` beyond.
    Chi2,
    /// `ln(1+z)` on `(−1, ∞)`.
    Kl0,
    /// `1 − e^{−z}`.
    Kl1,
    /// `(1 − (1 + (1−p)z)^{p/(p−1)})/p`, clamped at its supremum.
    Power(f64),
    /// `−z²`.
    HellingerDyn,
    /// `−(2^z − 2 + 2^{−z})/ln 2`.
    JensenShannonDyn,
    Pwl(Arc<PiecewiseLinear>),
    Sampled(Arc<Sampled>),
    /// `w ↦ −h⁻¹(−w)` of the wrapped profile.
    Bar(Arc<HFunction>),
    /// Time-`t` flow map of a dynamic penalty.
    Flow(Arc<FlowMap>),
}

impl HFunction {
    pub fn pwl(xs: Vec<f64>, ys: Vec<f64>, left: Extension, right: Extension) -> Result<Self, String> {
        Ok(HFunction::Pwl(Arc::new(PiecewiseLinear::new(xs, ys, left, right)?)))
    }

    pub fn eval(&self, z: f64) -> f64 {
        use HFunction::*;
        if z.is_nan() {
            return f64::NAN;
        }
        match self {
            Identity => z,
            Hellinger => {
                if z > -1.0 {
                    if z.is_infinite() {
                        1.0
                    } else {
                        z / (1.0 + z)
                    }
                } else {
                    f64::NEG_INFINITY
                }
            }
            JensenShannon => {
                if z > -1.0 {
                    (-(-z * LN_2).exp_m1()).ln_1p() / LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
            Chi2 => {
                if z < -1.0 {
                    f64::NEG_INFINITY
                } else if z > 3.0 {
                    1.0
                } else {
                    let s = (1.0 + z).sqrt();
                    z / (1.0 + s) * (3.0 - s)
                }
            }
            Kl0 => {
                if z > -1.0 {
                    z.ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Kl1 => -(-z).exp_m1(),
            Power(p) => power_eval(*p, z),
            HellingerDyn => -z * z,
            JensenShannonDyn => {
                if z.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    let s = 2.0 * (0.5 * LN_2 * z).sinh();
                    -s * s / LN_2
                }
            }
            Pwl(p) => p.eval(z),
            Sampled(s) => s.eval(z),
            Bar(h) => bar_eval(h, z),
            Flow(f) => f.eval(z),
        }
    }

    /// Closure of the effective domain `{h > −∞}`.
    pub fn domain(&self) -> (f64, f64) {
        use HFunction::*;
        match self {
            Identity | Kl1 | HellingerDyn | JensenShannonDyn => (f64::NEG_INFINITY, f64::INFINITY),
            Hellinger | JensenShannon | Chi2 | Kl0 => (-1.0, f64::INFINITY),
            Power(p) => {
                if *p < 1.0 {
                    (-1.0 / (1.0 - p), f64::INFINITY)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            Pwl(p) => p.domain(),
            Sampled(s) => s.domain(),
            Bar(h) => (-h.sup_value(), f64::INFINITY),
            Flow(f) => f.domain(),
        }
    }

    /// `sup h`, attained or approached as `z → sup dom h`.
    pub fn sup_value(&self) -> f64 {
        use HFunction::*;
        match self {
            Identity | Kl0 => f64::INFINITY,
            Hellinger | JensenShannon | Chi2 | Kl1 => 1.0,
            Power(p) => {
                if *p > 0.0 {
                    1.0 / p
                } else {
                    f64::INFINITY
                }
            }
            HellingerDyn | JensenShannonDyn => 0.0,
            Pwl(p) => p.sup_value(),
            Sampled(s) => match s.right {
                Extension::Slope(m) if m > 0.0 => f64::INFINITY,
                _ => s.ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            },
            Bar(h) => {
                let (lo, _) = h.domain();
                -lo
            }
            Flow(f) => f.sup_value(),
        }
    }

    pub fn deriv_left(&self, z: f64) -> f64 {
        self.deriv(z, false)
    }

    pub fn deriv_right(&self, z: f64) -> f64 {
        self.deriv(z, true)
    }

    pub(crate) fn deriv(&self, z: f64, right: bool) -> f64 {
        use HFunction::*;
        match self {
            Identity => 1.0,
            Hellinger => {
                if z > -1.0 {
                    1.0 / ((1.0 + z) * (1.0 + z))
                } else if z == -1.0 && right {
                    f64::INFINITY
                } else {
                    f64::NAN
                }
            }
            JensenShannon => {
                if z > -1.0 {
                    let e = (-z).exp2();
                    e / (2.0 - e)
                } else if z == -1.0 && right {
                    f64::INFINITY
                } else {
                    f64::NAN
                }
            }
            Chi2 => {
                if z < -1.0 || (z == -1.0 && !right) {
                    if z == -1.0 {
                        f64::INFINITY
                    } else {
                        f64::NAN
                    }
                } else if z > 3.0 || (z == 3.0 && right) {
                    0.0
                } else {
                    let s = (1.0 + z).sqrt();
                    (2.0 - s) / s
                }
            }
            Kl0 => {
                if z > -1.0 {
                    1.0 / (1.0 + z)
                } else if z == -1.0 && right {
                    f64::INFINITY
                } else {
                    f64::NAN
                }
            }
            Kl1 => (-z).exp(),
            Power(p) => power_deriv(*p, z, right),
            HellingerDyn => -2.0 * z,
            JensenShannonDyn => -(z.exp2() - (-z).exp2()),
            Pwl(p) => {
                if right {
                    p.deriv_right(z)
                } else {
                    p.deriv_left(z)
                }
            }
            Sampled(s) => {
                if right {
                    s.deriv_right(z)
                } else {
                    s.deriv_left(z)
                }
            }
            Bar(h) => bar_deriv(h, z, right),
            Flow(f) => f.deriv(z, right),
        }
    }

    /// A maximizer of `h(u) − r·u` for `r > 0`, i.e. a point whose
    /// superdifferential contains `r`. May be `±inf` if none exists.
    pub fn argmax_ratio(&self, r: f64) -> f64 {
        use HFunction::*;
        match self {
            Hellinger => 1.0 / r.sqrt() - 1.0,
            JensenShannon => -(2.0 * r / (1.0 + r)).log2(),
            Chi2 => {
                let s = 2.0 / (1.0 + r);
                s * s - 1.0
            }
            Kl0 => 1.0 / r - 1.0,
            Kl1 => -r.ln(),
            Power(p) => {
                let u = (r.powf(p - 1.0) - 1.0) / (1.0 - p);
                if *p > 1.0 {
                    u.min(1.0 / (p - 1.0))
                } else {
                    u
                }
            }
            Pwl(p) => p.argmax_ratio(r),
            _ => self.argmax_generic(r),
        }
    }

    pub(crate) fn argmax_generic(&self, r: f64) -> f64 {
        let (lo, hi) = self.domain();
        let mut a;
        if lo.is_finite() {
            a = lo;
            if self.deriv_right(lo) <= r {
                return lo;
            }
        } else {
            a = -1.0;
            let mut guard = 0;
            while self.deriv_right(a) < r {
                a = 2.0 * a - 1.0;
                guard += 1;
                if guard > 60 {
                    return f64::NEG_INFINITY;
                }
            }
        }
        let mut b;
        if hi.is_finite() {
            b = hi;
            if self.deriv_left(hi) >= r {
                return hi;
            }
        } else {
            b = a.max(0.0) + 1.0;
            let mut guard = 0;
            while self.deriv_left(b) > r {
                b = 2.0 * b + 1.0;
                guard += 1;
                if guard > 60 {
                    return f64::INFINITY;
                }
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b || b - a < 1e-15 * (1.0 + m.abs()) {
                break;
            }
            if self.deriv_right(m) > r {
                a = m;
            } else if self.deriv_left(m) < r {
                b = m;
            } else {
                return m;
            }
        }
        0.5 * (a + b)
    }

    /// The reflected inverse `h̄(w) = −h⁻¹(−w)`.
    pub fn bar(&self) -> HFunction {
        use HFunction::*;
        match self {
            Identity => Identity,
            Hellinger => Hellinger,
            JensenShannon => JensenShannon,
            Chi2 => Chi2,
            Kl0 => Kl1,
            Kl1 => Kl0,
            Power(p) => Power(1.0 - p),
            Pwl(p) => match p.bar() {
                Ok(b) => Pwl(Arc::new(b)),
                Err(_) => Bar(Arc::new(self.clone())),
            },
            Bar(h) => (**h).clone(),
            Flow(f) => f.bar_profile(),
            _ => Bar(Arc::new(self.clone())),
        }
    }

    /// One-sided finite-difference slope with one Richardson step.
    pub fn fd_slope(&self, z: f64, right: bool, step: f64) -> f64 {
        let d = |h: f64| {
            let s = if right { h } else { -h };
            let f0 = self.eval(z);
            let f1 = self.eval(z + s);
            let f2 = self.eval(z + 2.0 * s);
            (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * s)
        };
        (4.0 * d(step / 2.0) - d(step)) / 3.0
    }
}

fn power_eval(p: f64, z: f64) -> f64 {
    let base = 1.0 + (1.0 - p) * z;
    if p > 1.0 {
        if base <= 0.0 {
            return 1.0 / p;
        }
        if z == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
    } else if base < 0.0 || (base == 0.0 && p > 0.0) {
        return f64::NEG_INFINITY;
    } else if z == f64::INFINITY {
        return if p > 0.0 { 1.0 / p } else { f64::INFINITY };
    }
    -((p / (p - 1.0)) * ((1.0 - p) * z).ln_1p()).exp_m1() / p
}

fn power_deriv(p: f64, z: f64, right: bool) -> f64 {
    let base = 1.0 + (1.0 - p) * z;
    if p > 1.0 {
        if base < 0.0 || (base == 0.0 && right) {
            return 0.0;
        }
    } else if base < 0.0 || (base == 0.0 && !right) {
        return if base == 0.0 { f64::INFINITY } else { f64::NAN };
    }
    base.powf(1.0 / (p - 1.0))
}

/// `x` with `h(x) = y` for `y` strictly inside the range of `h`.
fn invert(h: &HFunction, y: f64) -> f64 {
    let (lo, hi) = h.domain();
    let mut a = if lo.is_finite() { lo } else { -1.0 };
    let mut guard = 0;
    while h.eval(a) > y && guard < 1100 {
        a = 2.0 * a - 1.0;
        guard += 1;
    }
    let mut b = if hi.is_finite() { hi } else { a.max(0.0) + 1.0 };
    guard = 0;
    while h.eval(b) < y && guard < 1100 && !hi.is_finite() {
        b = 2.0 * b + 1.0;
        guard += 1;
    }
    bisect(|x| h.eval(x) - y, a, b, 1e-15)
}

fn bar_eval(h: &HFunction, w: f64) -> f64 {
    let y = -w;
    let sup = h.sup_value();
    if y > sup {
        return f64::NEG_INFINITY;
    }
    let (lo, _) = h.domain();
    if lo.is_finite() {
        let vlo = h.eval(lo);
        if y <= vlo {
            return -lo;
        }
    } else if y == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    if y == sup {
        return match plateau_start(h) {
            Some(d) => -d,
            None => f64::NEG_INFINITY,
        };
    }
    -invert(h, y)
}

/// `min {x : h(x) = sup h}` when the supremum is attained.
pub fn plateau_start(h: &HFunction) -> Option<f64> {
    let sup = h.sup_value();
    if !sup.is_finite() {
        return None;
    }
    match h {
        HFunction::Pwl(p) => {
            let (xs, ys) = p.knots();
            return xs.iter().zip(ys).find(|(_, &y)| y >= sup).map(|(&x, _)| x);
        }
        HFunction::Chi2 => return Some(3.0),
        HFunction::Power(p) if *p > 1.0 => return Some(1.0 / (p - 1.0)),
        HFunction::Power(_) | HFunction::Hellinger | HFunction::JensenShannon | HFunction::Kl1 => return None,
        HFunction::Flow(f) => {
            let (_, hi) = f.penalty().domain();
            return if hi.is_finite() { Some(hi) } else { None };
        }
        HFunction::Bar(inner) => {
            let (lo, _) = inner.domain();
            let v = if lo.is_finite() { inner.eval(lo) } else { f64::NEG_INFINITY };
            return if v.is_finite() { Some(-v) } else { None };
        }
        _ => {}
    }
    let (lo, hi) = h.domain();
    let mut b = if hi.is_finite() { hi } else { 1.0 };
    let mut guard = 0;
    while h.eval(b) < sup {
        if hi.is_finite() || guard > 60 {
            return None;
        }
        b = 2.0 * b + 1.0;
        guard += 1;
    }
    let a = if lo.is_finite() { lo } else { -1.0 };
    if h.eval(a) >= sup {
        return Some(a);
    }
    let last_below = crate::numeric::last_true(|x| h.eval(x) < sup, a, b, 1e-14);
    Some(last_below)
}

fn bar_deriv(h: &HFunction, w: f64, right: bool) -> f64 {
    let v = bar_eval(h, w);
    if !v.is_finite() {
        return f64::NAN;
    }
    let x = -v;
    let d = if right { h.deriv_left(x) } else { h.deriv_right(x) };
    if d == 0.0 {
        f64::INFINITY
    } else if d.is_infinite() {
        0.0
    } else {
        1.0 / d
    }
}

/// Check the profile invariants on a grid: concavity, monotonicity,
/// `h(0) = 0`, `h ≤ id` and unit slope at zero.
pub fn check_profile(h: &HFunction, n: usize) -> Result<(), String> {
    let tol = 1e-10;
    let v0 = h.eval(0.0);
    if v0.abs() > 1e-12 {
        return Err(format!("h(0) = {v0}, expected 0"));
    }
    for step in [1e-3, 1e-4, 1e-5] {
        let q = (h.eval(step) - h.eval(-step)) / (2.0 * step);
        if (q - 1.0).abs() > 1e-3 + step {
            return Err(format!("difference quotient at 0 is {q} for step {step}"));
        }
    }
    let (lo, hi) = h.domain();
    let a = if lo.is_finite() { lo } else { -10.0 };
    let b = if hi.is_finite() { hi } else { 10.0 };
    let grid: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&z| h.eval(z)).collect();
    for i in 0..n {
        if vals[i].is_finite() && vals[i] > grid[i] + tol * (1.0 + grid[i].abs()) {
            return Err(format!("h({}) = {} exceeds the identity", grid[i], vals[i]));
        }
        if i + 1 < n && vals[i].is_finite() && vals[i + 1] < vals[i] - tol * (1.0 + vals[i].abs()) {
            return Err(format!("h decreases near {}", grid[i]));
        }
        if i + 2 < n && vals[i].is_finite() && vals[i + 2].is_finite() {
            let mid = vals[i + 1];
            if mid < 0.5 * (vals[i] + vals[i + 2]) - tol * (1.0 + mid.abs()) {
                return Err(format!("h is not concave near {}", grid[i + 1]));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_one() {
        assert!((HFunction::Hellinger.eval(1.0) - 0.5).abs() < 1e-15);
        assert!((HFunction::JensenShannon.eval(1.0) - 1.5f64.log2()).abs() < 1e-15);
        assert!((HFunction::Chi2.eval(-1.0) + 3.0).abs() < 1e-15);
        assert_eq!(HFunction::Chi2.eval(5.0), 1.0);
        assert_eq!(HFunction::Hellinger.eval(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn catalog_profiles_pass_invariants() {
        for h in [
            HFunction::Identity,
            HFunction::Hellinger,
            HFunction::JensenShannon,
            HFunction::Chi2,
            HFunction::Kl0,
            HFunction::Kl1,
            HFunction::Power(0.5),
            HFunction::Power(2.0),
            HFunction::Power(-1.0),
        ] {
            check_profile(&h, 512).unwrap_or_else(|e| panic!("{h:?}: {e}"));
            check_profile(&h.bar(), 512).unwrap_or_else(|e| panic!("bar {h:?}: {e}"));
        }
    }

    #[test]
    fn bar_is_reflected_inverse() {
        for h in [HFunction::Kl0, HFunction::Power(0.3), HFunction::Power(3.0), HFunction::Chi2] {
            let hb = h.bar();
            for &z in &[-0.5, -0.1, 0.0, 0.2, 0.7] {
                let w = hb.eval(-z);
                if w.is_finite() {
                    let back = h.eval(-w);
                    assert!((back - z).abs() < 1e-8, "{h:?} at {z}: {back}");
                }
            }
        }
    }

    #[test]
    fn generic_bar_matches_closed_bar() {
        let wrapped = HFunction::Bar(Arc::new(HFunction::Kl0));
        for &w in &[-0.9, -0.3, 0.0, 0.5, 2.0, 6.0] {
            assert!((wrapped.eval(w) - HFunction::Kl1.eval(w)).abs() < 1e-12);
            assert!((wrapped.deriv_right(w) - HFunction::Kl1.deriv_right(w)).abs() < 1e-9);
        }
    }

    #[test]
    fn pwl_bar_of_tv_is_tv() {
        let tv = PiecewiseLinear::new(vec![-1.0, 1.0], vec![-1.0, 1.0], Extension::Wall, Extension::Slope(0.0)).unwrap();
        assert_eq!(tv.bar().unwrap(), tv);
    }

    #[test]
    fn argmax_matches_derivative() {
        for h in [HFunction::Hellinger, HFunction::JensenShannon, HFunction::Chi2, HFunction::Power(0.5)] {
            for &r in &[0.2, 0.9, 1.0, 3.0] {
                let u = h.argmax_ratio(r);
                let g = h.argmax_generic(r);
                assert!((u - g).abs() < 1e-7, "{h:?} r={r}: {u} vs {g}");
            }
        }
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| -x * x * x / 10.0 + x;
        let df = |x: f64| -0.3 * x * x + 1.0;
        let xs: Vec<f64> = (0..5).map(|i| i as f64 * 0.5).collect();
        let s = Sampled::new(
            xs.clone(),
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
            Extension::Wall,
            Extension::Wall,
        )
        .unwrap();
        for &z in &[0.1, 0.77, 1.3, 1.99] {
            assert!((s.eval(z) - f(z)).abs() < 1e-12);
        }
    }
}
