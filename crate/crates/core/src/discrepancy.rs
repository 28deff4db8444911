//! Local discrepancies `c_S`, their profiles `h_S`, `h̄_S`, and the catalog.

use crate::error::{Error, Result};
use crate::flow::DynamicPenalty;
use crate::hfunc::{check_profile, plateau_start, Extension, HFunction};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Exact,
    Tv,
    Pwl,
    Hellinger,
    JensenShannon,
    Chi2,
    Kl0,
    Kl1,
    Power(f64),
    Custom,
}

/// Parameters of the piecewise-linear family `C_S^pwl`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwlParams {
    pub d_lo: f64,
    pub s_lo: f64,
    pub a: f64,
    pub s_hi: f64,
    pub d_hi: f64,
    pub b: f64,
}

impl PwlParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        let ok = p.b > 0.0 && p.b <= 1.0 && p.a >= 1.0 && p.d_lo <= p.s_lo && p.s_lo <= 0.0 && 0.0 <= p.s_hi && p.s_hi <= p.d_hi;
        if !ok || [p.d_lo, p.s_lo, p.a, p.s_hi, p.d_hi, p.b].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "pwl requires 0 < b ≤ 1 ≤ a and d_lo ≤ s_lo ≤ 0 ≤ s_hi ≤ d_hi, got {p:?}"
            )));
        }
        Ok(())
    }

    /// Value of `h_S` at `d_lo`.
    pub fn lower_value(&self) -> f64 {
        self.s_lo + self.a * (self.d_lo - self.s_lo)
    }

    fn knots(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for (x, y) in [
            (self.d_lo, self.lower_value()),
            (self.s_lo, self.s_lo),
            (self.s_hi, self.s_hi),
            (self.d_hi, self.s_hi + self.b * (self.d_hi - self.s_hi)),
        ] {
            if xs.last().map_or(true, |&l| x > l) {
                xs.push(x);
                ys.push(y);
            }
        }
        (xs, ys)
    }
}

/// A mass-change penalty `c_S` with its dual profiles.
#[derive(Clone, Debug)]
pub struct LocalDiscrepancy {
    name: String,
    kind: Kind,
    h_s: HFunction,
    h_bar_s: HFunction,
    partial1: (f64, f64),
    partial2: (f64, f64),
    dynamic: Option<DynamicPenalty>,
}

fn xlog2(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.log2()
    }
}

/// JSON description of a custom piecewise-linear profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CustomModelFile {
    pub h_s: CustomProfile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CustomProfile {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl LocalDiscrepancy {
    fn build(name: String, kind: Kind, h_s: HFunction, dynamic: Option<DynamicPenalty>) -> Self {
        let h_bar_s = h_s.bar();
        let (lo, _) = h_s.domain();
        let sup = h_s.sup_value();
        let d_hi = match plateau_start(&h_s) {
            Some(d) => d,
            None => f64::INFINITY,
        };
        let h_lo = if lo.is_finite() { h_s.eval(lo) } else { f64::NEG_INFINITY };
        LocalDiscrepancy {
            name,
            kind,
            h_s,
            h_bar_s,
            partial1: (-d_hi, -lo),
            partial2: (h_lo, sup),
            dynamic,
        }
    }

    /// Look up a catalog entry. Accepted names: `exact`, `tv`, `hellinger`,
    /// `jensen_shannon` (or `js`), `chi2`, `kl0`, `kl1`, `power(p)` and
    /// `pwl(d_lo,s_lo,a,s_hi,d_hi,b)`.
    pub fn catalog(name: &str) -> Result<Self> {
        let name = name.trim();
        let dyn_of = |n: &str| DynamicPenalty::catalog(n).ok();
        Ok(match name {
            "exact" => Self::build("exact".into(), Kind::Exact, HFunction::Identity, dyn_of("exact")),
            "tv" => Self::build(
                "tv".into(),
                Kind::Tv,
                HFunction::pwl(vec![-1.0, 1.0], vec![-1.0, 1.0], Extension::Wall, Extension::Slope(0.0))
                    .map_err(Error::InvalidParameters)?,
                dyn_of("tv"),
            ),
            "hellinger" => Self::build("hellinger".into(), Kind::Hellinger, HFunction::Hellinger, dyn_of("hellinger")),
            "jensen_shannon" | "js" => Self::build(
                "jensen_shannon".into(),
                Kind::JensenShannon,
                HFunction::JensenShannon,
                dyn_of("jensen_shannon"),
            ),
            "chi2" => Self::build("chi2".into(), Kind::Chi2, HFunction::Chi2, None),
            "kl0" => Self::build("kl0".into(), Kind::Kl0, HFunction::Kl0, None),
            "kl1" => Self::build("kl1".into(), Kind::Kl1, HFunction::Kl1, None),
            _ => {
                if let Some(args) = strip_call(name, "power") {
                    let v = parse_args(args, 1)?;
                    return Self::power(v[0]);
                }
                if let Some(args) = strip_call(name, "pwl") {
                    let v = parse_args(args, 6)?;
                    return Self::pwl(PwlParams { d_lo: v[0], s_lo: v[1], a: v[2], s_hi: v[3], d_hi: v[4], b: v[5] });
                }
                return Err(Error::UnknownName(format!("model '{name}'")));
            }
        })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !p.is_finite() || p == 0.0 || p == 1.0 {
            return Err(Error::InvalidParameters(format!("power model needs p ∉ {{0, 1}}, got {p}")));
        }
        let h = HFunction::Power(p);
        check_profile(&h, 512).map_err(|e| Error::InvalidParameters(format!("power({p}): {e}")))?;
        check_profile(&h.bar(), 512).map_err(|e| Error::InvalidParameters(format!("power({p}) reflected: {e}")))?;
        Ok(Self::build(format!("power({p})"), Kind::Power(p), h, None))
    }

    pub fn pwl(p: PwlParams) -> Result<Self> {
        p.validate()?;
        let (xs, ys) = p.knots();
        let h = HFunction::pwl(xs, ys, Extension::Wall, Extension::Slope(0.0)).map_err(Error::InvalidParameters)?;
        let dynamic = DynamicPenalty::pwl(p.lower_value(), p.s_lo, p.a, p.s_hi, p.d_hi, p.b).ok();
        let name = format!("pwl({},{},{},{},{},{})", p.d_lo, p.s_lo, p.a, p.s_hi, p.d_hi, p.b);
        Ok(Self::build(name, Kind::Pwl, h, dynamic))
    }

    /// Custom piecewise-linear `h_S`, extended linearly with its end slopes.
    pub fn custom_pwl(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidParameters("custom_pwl needs at least two breakpoints".into()));
        }
        let n = breakpoints.len();
        let s0 = (values[1] - values[0]) / (breakpoints[1] - breakpoints[0]);
        let s1 = (values[n - 1] - values[n - 2]) / (breakpoints[n - 1] - breakpoints[n - 2]);
        let h = HFunction::pwl(breakpoints, values, Extension::Slope(s0), Extension::Slope(s1))
            .map_err(Error::InvalidParameters)?;
        Self::from_profile("custom_pwl", h)
    }

    /// Load `{"h_s": {"breakpoints": [...], "values": [...]}}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CustomModelFile = serde_json::from_str(&text)?;
        Self::custom_pwl(file.h_s.breakpoints, file.h_s.values)
    }

    /// Any valid profile; `c_S` is obtained by conjugation.
    pub fn from_profile(name: &str, h: HFunction) -> Result<Self> {
        check_profile(&h, 512).map_err(|e| Error::InvalidParameters(format!("{name}: {e}")))?;
        Ok(Self::build(name.into(), Kind::Custom, h, None))
    }

    /// The static model induced by a dynamic one, `h_S = F₁`.
    pub fn from_dynamic(dp: &DynamicPenalty) -> Self {
        let h = dp.static_profile();
        let mut d = Self::build(format!("static({})", dp.name()), Kind::Custom, h, None);
        d.dynamic = Some(dp.clone());
        d
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn h_s(&self) -> &HFunction {
        &self.h_s
    }

    pub fn h_bar_s(&self) -> &HFunction {
        &self.h_bar_s
    }

    /// Closed-form dynamic counterpart, if the catalog provides one.
    pub fn dynamic(&self) -> Option<&DynamicPenalty> {
        self.dynamic.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.kind == Kind::Exact
    }

    pub fn is_tv(&self) -> bool {
        self.kind == Kind::Tv
    }

    /// True when `c_S` is positively homogeneous and piecewise linear, so
    /// finitely many supporting points describe `B_S` exactly.
    pub fn is_polyhedral(&self) -> bool {
        matches!(self.h_s, HFunction::Pwl(_)) || self.kind == Kind::Exact
    }

    /// `(lim_{a→0} ∂₁c_S(a,1), lim_{a→∞} ∂₁c_S(a,1))`.
    pub fn partial1_limits(&self) -> (f64, f64) {
        self.partial1
    }

    /// `(lim_{b→0} ∂₂c_S(1,b), lim_{b→∞} ∂₂c_S(1,b))`.
    pub fn partial2_limits(&self) -> (f64, f64) {
        self.partial2
    }

    /// `c_S(m0, m1)`.
    pub fn cs_eval(&self, m0: f64, m1: f64) -> Result<f64> {
        if m0 < 0.0 || m1 < 0.0 || m0.is_nan() || m1.is_nan() {
            return Err(Error::NegativeMass(m0, m1));
        }
        Ok(self.cs(m0, m1))
    }

    /// `c_S` without argument validation.
    pub fn cs(&self, m0: f64, m1: f64) -> f64 {
        if m0 == 0.0 && m1 == 0.0 {
            return 0.0;
        }
        match self.kind {
            Kind::Exact => {
                if m0 == m1 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Tv => (m1 - m0).abs(),
            Kind::Hellinger => {
                let d = m1.sqrt() - m0.sqrt();
                d * d
            }
            Kind::JensenShannon => {
                let s = m0 + m1;
                xlog2(m0, 2.0 * m0 / s) + xlog2(m1, 2.0 * m1 / s)
            }
            Kind::Chi2 => (m1 - m0) * (m1 - m0) / (m1 + m0),
            Kind::Kl0 => {
                if m0 == 0.0 {
                    f64::INFINITY
                } else if m1 == 0.0 {
                    m0
                } else {
                    m1 * (m1 / m0).ln() - m1 + m0
                }
            }
            Kind::Kl1 => {
                if m1 == 0.0 {
                    f64::INFINITY
                } else if m0 == 0.0 {
                    m1
                } else {
                    m1 - m0 - m0 * (m1 / m0).ln()
                }
            }
            Kind::Power(p) => {
                if m1 == 0.0 {
                    if p < 1.0 {
                        m0 / (1.0 - p)
                    } else {
                        f64::INFINITY
                    }
                } else if m0 == 0.0 {
                    if p > 0.0 {
                        m1 / p
                    } else {
                        f64::INFINITY
                    }
                } else {
                    let r = m0 / m1;
                    m1 * (r.powf(p) - p * (r - 1.0) - 1.0) / (p * (p - 1.0))
                }
            }
            Kind::Pwl | Kind::Custom => self.cs_conjugate(m0, m1),
        }
    }

    /// `sup_u m1·h_S(u) − m0·u`.
    fn cs_conjugate(&self, m0: f64, m1: f64) -> f64 {
        let h = &self.h_s;
        let (lo, _) = h.domain();
        if m1 == 0.0 {
            return if lo.is_finite() { -m0 * lo } else { f64::INFINITY };
        }
        if m0 == 0.0 {
            return m1 * h.sup_value();
        }
        if let HFunction::Pwl(p) = h {
            let (xs, ys) = p.knots();
            let (left, right) = p.extensions();
            if let Extension::Slope(s) = right {
                if m1 * s - m0 > 0.0 {
                    return f64::INFINITY;
                }
            }
            if let Extension::Slope(s) = left {
                if m1 * s - m0 < 0.0 {
                    return f64::INFINITY;
                }
            }
            return xs.iter().zip(ys).map(|(x, y)| m1 * y - m0 * x).fold(f64::NEG_INFINITY, f64::max);
        }
        let u = h.argmax_ratio(m0 / m1);
        if !u.is_finite() {
            return f64::INFINITY;
        }
        m1 * h.eval(u) - m0 * u
    }

    /// Tangent point of `B_S` with outer normal `(m0, m1)`: `(−u*, h_S(u*))`.
    pub fn tangent_point(&self, m0: f64, m1: f64) -> (f64, f64) {
        let h = &self.h_s;
        let (lo, _) = h.domain();
        let u = if m1 <= 0.0 {
            lo
        } else if m0 <= 0.0 {
            match plateau_start(h) {
                Some(d) => d,
                None => h.argmax_ratio(1e-14),
            }
        } else {
            h.argmax_ratio((m0 / m1).clamp(1e-14, 1e14))
        };
        let u = if u.is_finite() {
            u
        } else if u > 0.0 {
            1e7
        } else if lo.is_finite() {
            lo
        } else {
            -1e7
        };
        (-u, h.eval(u))
    }

    /// `k` points on the upper boundary of `B_S`, sorted by `α`, including `(0, 0)`.
    pub fn supporting_points(&self, k: usize) -> Vec<(f64, f64)> {
        let k = k.max(3);
        let angles: Vec<f64> = (0..k).map(|i| FRAC_PI_2 * (i as f64 + 0.5) / k as f64).collect();
        let centre = angles
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - FRAC_PI_2 / 2.0).abs().total_cmp(&(b.1 - FRAC_PI_2 / 2.0).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut pts: Vec<(f64, f64)> = angles
            .iter()
            .enumerate()
            .map(|(i, &th)| {
                if i == centre {
                    (0.0, 0.0)
                } else {
                    let (a, b) = self.tangent_point(th.cos(), th.sin());
                    (a, b)
                }
            })
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }
}

fn strip_call<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    let rest = s.strip_prefix(head)?;
    let rest = rest.trim();
    if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        return Some(inner);
    }
    rest.strip_prefix(':')
}

fn parse_args(args: &str, n: usize) -> Result<Vec<f64>> {
    let v: std::result::Result<Vec<f64>, _> = args.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let v = v.map_err(|e| Error::InvalidParameters(format!("cannot parse parameters '{args}': {e}")))?;
    if v.len() != n {
        return Err(Error::InvalidParameters(format!("expected {n} parameters, got {}", v.len())));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let h = LocalDiscrepancy::catalog("hellinger").unwrap();
        assert!((h.cs_eval(1.0, 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((h.h_s().eval(1.0) - 0.5).abs() < 1e-15);
        let tv = LocalDiscrepancy::catalog("tv").unwrap();
        assert_eq!(tv.cs_eval(2.0, 5.0).unwrap(), 3.0);
        let chi = LocalDiscrepancy::catalog("chi2").unwrap();
        assert!((chi.cs_eval(1.0, 3.0).unwrap() - 1.0).abs() < 1e-15);
        let ex = LocalDiscrepancy::catalog("exact").unwrap();
        assert_eq!(ex.cs_eval(1.0, 2.0).unwrap(), f64::INFINITY);
        assert!(matches!(h.cs_eval(-1.0, 1.0), Err(Error::NegativeMass(..))));
    }

    #[test]
    fn parse_parametric_names() {
        assert!(LocalDiscrepancy::catalog("power(0.5)").is_ok());
        assert!(LocalDiscrepancy::catalog("pwl(-2,-1,2,1,2,0.5)").is_ok());
        assert!(matches!(LocalDiscrepancy::catalog("power(1)"), Err(Error::InvalidParameters(_))));
        assert!(matches!(LocalDiscrepancy::catalog("pwl(-2,-1,0.5,1,2,0.5)"), Err(Error::InvalidParameters(_))));
        assert!(matches!(LocalDiscrepancy::catalog("nope"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn tv_supporting_points() {
        let tv = LocalDiscrepancy::catalog("tv").unwrap();
        assert_eq!(tv.supporting_points(3), vec![(-1.0, 1.0), (0.0, 0.0), (1.0, -1.0)]);
    }

    #[test]
    fn limits() {
        let tv = LocalDiscrepancy::catalog("tv").unwrap();
        assert_eq!(tv.partial1_limits(), (-1.0, 1.0));
        assert_eq!(tv.partial2_limits(), (-1.0, 1.0));
        let h = LocalDiscrepancy::catalog("hellinger").unwrap();
        assert_eq!(h.partial1_limits().0, f64::NEG_INFINITY);
        assert_eq!(h.partial2_limits().0, f64::NEG_INFINITY);
    }
}
