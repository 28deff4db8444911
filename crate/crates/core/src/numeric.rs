//! Scalar root finding, minimization and quadrature.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection for a sign change of `f` on `[a, b]`; `f(a)` and `f(b)` must
/// have opposite signs (or one of them vanish). Returns the bracket midpoint
/// once the bracket is narrower than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Largest `x` in `[a, b]` with `pred(x)` true, assuming `pred` is true on a
/// prefix of the interval and `pred(a)` holds.
pub fn last_true<F: FnMut(f64) -> bool>(mut pred: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    if pred(b) {
        return b;
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if b - a <= tol || m == a || m == b {
            break;
        }
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`; the endpoints are compared as well, so boundary
/// minima are returned exactly.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if b - a <= 0.0 {
        let v = f(a);
        return (a, v);
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while hi - lo > tol && iters < 300 {
        iters += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a, b] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_KRONROD[7];
    let mut g = fc * GK_GAUSS[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_KRONROD[i] * s;
        if i % 2 == 1 {
            g += GK_GAUSS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Outcome of adaptive quadrature.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub accurate: bool,
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with a global panel budget.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, max_panels: usize) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, accurate: true };
    }
    let (first, err) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, first, err)];
    let mut total_err = err;
    while total_err > abs_tol && panels.len() < max_panels {
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, pv, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            panels.push((pa, pb, pv, 0.0));
            total_err -= pe;
            continue;
        }
        let (v1, e1) = gk15(&mut f, pa, mid);
        let (v2, e2) = gk15(&mut f, mid, pb);
        total_err += e1 + e2 - pe;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    let value: f64 = panels.iter().map(|p| p.2).sum();
    let error: f64 = panels.iter().map(|p| p.3).sum();
    Quadrature { value, error, accurate: error <= abs_tol.max(1e-15 * value.abs()) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn golden_parabola_and_boundary() {
        let (x, v) = golden_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8 && v < 1e-15);
        let (x, _) = golden_min(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn quadrature_smooth_and_singular() {
        let q = integrate(|x| x.exp(), 0.0, 1.0, 1e-13, 1 << 12);
        assert!((q.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let q = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 1 << 14);
        assert!((q.value - 2.0).abs() < 1e-8);
    }
}
