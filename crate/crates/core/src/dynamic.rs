//! Dynamic counterparts of static solutions: single-point mass-change
//! trajectories, assembled optimizers with instantaneous transport at
//! `t = 0` and `t = 1`, dual potentials built from the flow, and the
//! semi-coupling cost.

use crate::discrepancy::LocalDiscrepancy;
use crate::error::{Error, Result};
use crate::flow::DynamicPenalty;
use crate::hfunc::{Extension, HFunction};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Sense};
use crate::measure::Coupling;
use crate::numeric::golden_min;
use crate::transport::TransportSolution;
use rayon::prelude::*;

const NEWTON_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 200;

/// Masses `m(t_k)` on a uniform grid and the growth rate on each interval.
#[derive(Clone, Debug)]
pub struct MassTrajectory {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    /// `ζ` on `[t_k, t_{k+1}]`, one entry per interval.
    pub rates: Vec<f64>,
    /// Discrete objective `Σ c_D(m̄_k, ζ_k) Δt` of this trajectory.
    pub discrete_cost: f64,
    /// Richardson extrapolation of the discrete optimum over `steps`,
    /// `2·steps` and `4·steps`.
    pub cost: f64,
    /// `|cost − discrete_cost|`.
    pub excess: f64,
}

impl MassTrajectory {
    fn constant(m: f64, steps: usize) -> Self {
        MassTrajectory {
            times: grid(steps),
            masses: vec![m; steps + 1],
            rates: vec![0.0; steps],
            discrete_cost: 0.0,
            cost: 0.0,
            excess: 0.0,
        }
    }

    fn from_masses(dp: &DynamicPenalty, masses: Vec<f64>) -> Self {
        let steps = masses.len() - 1;
        let dt = 1.0 / steps as f64;
        let rates = masses.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        let cost = discrete_cost(dp, &masses);
        MassTrajectory { times: grid(steps), discrete_cost: cost, cost, masses, rates, excess: 0.0 }
    }
}

fn grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| k as f64 / steps as f64).collect()
}

/// `Σ_k c_D(m̄_k, (m_{k+1} − m_k)/Δt) Δt`.
fn discrete_cost(dp: &DynamicPenalty, m: &[f64]) -> f64 {
    let dt = 1.0 / (m.len() - 1) as f64;
    let mut total = 0.0;
    for w in m.windows(2) {
        match dp.cd_eval(0.5 * (w[0] + w[1]), (w[1] - w[0]) / dt) {
            Ok(v) if v.is_finite() => total += v * dt,
            _ => return f64::INFINITY,
        }
    }
    total
}

/// Knots of `h_D` in its own coordinates, with its extensions.
fn pwl_pieces(dp: &DynamicPenalty) -> Option<(Vec<(f64, f64)>, Extension, Extension)> {
    let HFunction::Pwl(p) = dp.profile() else { return None };
    let (xs, ys) = p.knots();
    let (left, right) = p.extensions();
    if dp.is_reflected() {
        let knots = xs.iter().zip(ys).rev().map(|(&x, &y)| (-x, y)).collect();
        let flip = |e: Extension| match e {
            Extension::Slope(s) => Extension::Slope(-s),
            Extension::Wall => Extension::Wall,
        };
        Some((knots, flip(right), flip(left)))
    } else {
        Some((xs.iter().zip(ys).map(|(&x, &y)| (x, y)).collect(), left, right))
    }
}

/// For piecewise-linear `h_D`, `c_D` is a maximum of linear functions and
/// the discrete problem is an LP.
fn solve_lp(dp: &DynamicPenalty, m0: f64, m1: f64, steps: usize) -> Result<Vec<f64>> {
    let (knots, left, right) = pwl_pieces(dp).ok_or_else(|| Error::InvalidParameters("profile is not piecewise linear".into()))?;
    let n = steps;
    let dt = 1.0 / n as f64;
    let nm = n - 1;
    let mut lp = LinearProgram::new(nm + n);
    for k in 0..n {
        lp.objective[nm + k] = dt;
        lp.lower[nm + k] = f64::NEG_INFINITY;
    }
    // Coefficients of (m_k, m_{k+1}) in ρ̄·y + ζ·x.
    let lin = |x: f64, y: f64| (0.5 * y - x / dt, 0.5 * y + x / dt);
    let push = |k: usize, ca: f64, cb: f64, t_coef: f64, sense: Sense, lp: &mut LinearProgram| {
        let mut row = vec![0.0; nm + n];
        let mut rhs = 0.0;
        if k == 0 {
            rhs -= ca * m0;
        } else {
            row[k - 1] += ca;
        }
        if k + 1 == n {
            rhs -= cb * m1;
        } else {
            row[k] += cb;
        }
        row[nm + k] = t_coef;
        lp.add_row(row, sense, rhs);
    };
    for k in 0..n {
        for &(x, y) in &knots {
            let (ca, cb) = lin(x, y);
            push(k, ca, cb, -1.0, Sense::Le, &mut lp);
        }
        if let Extension::Slope(s) = right {
            let (ca, cb) = lin(1.0, s);
            push(k, ca, cb, 0.0, Sense::Le, &mut lp);
        }
        if let Extension::Slope(s) = left {
            let (ca, cb) = lin(1.0, s);
            push(k, ca, cb, 0.0, Sense::Ge, &mut lp);
        }
    }
    let sol = lp_solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::InfeasibleChange(format!("{} cannot change mass {m0} into {m1}", dp.name())))
        }
        LpStatus::Unbounded => return Err(Error::LpFailure("trajectory LP is unbounded".into())),
    }
    let mut m = Vec::with_capacity(n + 1);
    m.push(m0);
    m.extend(sol.x[..nm].iter().map(|v| v.max(0.0)));
    m.push(m1);
    Ok(m)
}

struct TermDerivs {
    ga: f64,
    gb: f64,
    haa: f64,
    hab: f64,
    hbb: f64,
}

/// Gradient and Hessian of `Δt·c_D(m̄, ζ)` with respect to the two end
/// masses of one interval.
fn term_derivs(dp: &DynamicPenalty, a: f64, b: f64, dt: f64) -> TermDerivs {
    let rho = 0.5 * (a + b);
    let zeta = (b - a) / dt;
    let z = dp.cd_argmax(rho, zeta);
    let hz = dp.h(z);
    let ga = 0.5 * dt * hz - z;
    let gb = 0.5 * dt * hz + z;
    let (lo, hi) = dp.domain();
    let d = 1e-5 * (1.0 + z.abs());
    let mut curv = 0.0;
    if z - d > lo && z + d < hi {
        curv = (dp.h_deriv(z + d, true) - dp.h_deriv(z - d, false)) / (2.0 * d);
    }
    if !(curv < -1e-14) || !curv.is_finite() {
        return TermDerivs { ga, gb, haa: 0.0, hab: 0.0, hbb: 0.0 };
    }
    let h1 = -zeta / rho;
    let dz_dzeta = -1.0 / (rho * curv);
    let dz_drho = h1 * dz_dzeta;
    let (hrr, hrz, hzz) = (h1 * dz_drho, dz_drho, dz_dzeta);
    // Jacobian of (m̄, ζ) with respect to (a, b).
    let (ra, rb, za, zb) = (0.5, 0.5, -1.0 / dt, 1.0 / dt);
    let q = |ru: f64, zu: f64, rv: f64, zv: f64| dt * (ru * rv * hrr + (ru * zv + zu * rv) * hrz + zu * zv * hzz);
    TermDerivs { ga, gb, haa: q(ra, za, ra, za), hab: q(ra, za, rb, zb), hbb: q(rb, zb, rb, zb) }
}

/// Solve a symmetric tridiagonal system; `None` if a pivot is not positive.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if !(piv > 0.0) {
        return None;
    }
    c[0] = if n > 1 { off[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - off[i - 1] * c[i - 1];
        if !(piv > 0.0) {
            return None;
        }
        c[i] = if i + 1 < n { off[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Damped Newton on the interior masses of the convex discrete energy.
fn solve_newton(dp: &DynamicPenalty, m0: f64, m1: f64, steps: usize) -> Result<Vec<f64>> {
    let n = steps;
    let dt = 1.0 / n as f64;
    let mut m: Vec<f64> = (0..=n).map(|k| m0 + (m1 - m0) * k as f64 / n as f64).collect();
    if m0 == 0.0 || m1 == 0.0 {
        // Keep the interior strictly positive so that c_D stays finite.
        let top = m0.max(m1);
        for (k, v) in m.iter_mut().enumerate().take(n).skip(1) {
            let t = k as f64 / n as f64;
            let s = if m0 == 0.0 { t } else { 1.0 - t };
            *v = top * s * s;
        }
    }
    let mut energy = discrete_cost(dp, &m);
    if !energy.is_finite() {
        return Err(Error::InfeasibleChange(format!("{} cannot change mass {m0} into {m1}", dp.name())));
    }
    let ni = n - 1;
    let mut last_grad = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let terms: Vec<TermDerivs> = (0..n).map(|k| term_derivs(dp, m[k], m[k + 1], dt)).collect();
        let grad: Vec<f64> = (1..n).map(|i| terms[i - 1].gb + terms[i].ga).collect();
        let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        last_grad = gmax;
        if gmax <= NEWTON_TOL {
            return Ok(m);
        }
        let diag: Vec<f64> = (1..n).map(|i| terms[i - 1].hbb + terms[i].haa).collect();
        let off: Vec<f64> = (1..ni).map(|i| terms[i].hab).collect();
        let scale = diag.iter().fold(0.0f64, |a, d| a.max(d.abs())) + 1.0;
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut mu = 0.0;
        let step = loop {
            let dg: Vec<f64> = diag.iter().map(|d| d + mu).collect();
            if let Some(p) = thomas(&dg, &off, &neg) {
                break p;
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
            if mu > 1e10 * scale {
                break neg.iter().map(|g| g / scale).collect();
            }
        };
        let slope: f64 = step.iter().zip(&grad).map(|(p, g)| p * g).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..=n)
                .map(|k| if k == 0 || k == n { m[k] } else { m[k] + t * step[k - 1] })
                .collect();
            if trial[1..n].iter().all(|&v| v > 0.0) {
                let e = discrete_cost(dp, &trial);
                if e < energy && e <= energy + 1e-4 * t * slope.min(0.0) {
                    m = trial;
                    energy = e;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if last_grad <= 1e-6 * (1.0 + m0 + m1) {
        return Ok(m);
    }
    Err(Error::NonConvergence {
        z: m1,
        detail: format!("trajectory from {m0} to {m1}: gradient {last_grad:e} after Newton"),
    })
}

/// `c_D` is positively homogeneous, so solve at unit scale and rescale.
fn solve_discrete(dp: &DynamicPenalty, m0: f64, m1: f64, steps: usize) -> Result<Vec<f64>> {
    let scale = m0.max(m1);
    let snap = |v: f64| if v < 1e-12 { 0.0 } else { v };
    let (a, b) = (snap(m0 / scale), snap(m1 / scale));
    let mut m = if pwl_pieces(dp).is_some() { solve_lp(dp, a, b, steps)? } else { solve_newton(dp, a, b, steps)? };
    for v in m.iter_mut() {
        *v *= scale;
    }
    m[0] = m0;
    m[steps] = m1;
    Ok(m)
}

/// Cheapest discrete trajectory from `m0` to `m1` under `c_D`.
pub fn mass_trajectory(dp: &DynamicPenalty, m0: f64, m1: f64, steps: usize) -> Result<MassTrajectory> {
    if steps < 2 {
        return Err(Error::InvalidParameters(format!("need at least 2 time steps, got {steps}")));
    }
    for m in [m0, m1] {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::NegativeMass(m0, m1));
        }
    }
    if m0 == m1 {
        return Ok(MassTrajectory::constant(m0, steps));
    }
    if !dp.cd_eval(m0.max(m1), m1 - m0)?.is_finite() {
        return Err(Error::InfeasibleChange(format!("{} cannot change mass {m0} into {m1}", dp.name())));
    }
    let coarse = MassTrajectory::from_masses(dp, solve_discrete(dp, m0, m1, steps)?);
    let j1 = coarse.discrete_cost;
    let j2 = discrete_cost(dp, &solve_discrete(dp, m0, m1, 2 * steps)?);
    let j4 = discrete_cost(dp, &solve_discrete(dp, m0, m1, 4 * steps)?);
    // Error model a·Δt + b·Δt²: zero end masses make the scheme first order.
    let (r1, r2) = (2.0 * j2 - j1, 2.0 * j4 - j2);
    let cost = (4.0 * r2 - r1) / 3.0;
    Ok(MassTrajectory { cost, excess: (cost - j1).abs(), ..coarse })
}

/// Instantaneous transports at both ends and one trajectory per point.
#[derive(Clone, Debug)]
pub struct DynamicOptimizer {
    pub jump0: Coupling,
    pub jump1: Coupling,
    pub trajectories: Vec<MassTrajectory>,
    pub total_cost: f64,
    /// Sum of the trajectories' discretization estimates.
    pub excess: f64,
}

/// Largest relative difference between `F₁` of `dp` and `h_S` of `disc`
/// on a grid over the common domain, clipped to `[−4, 4]`.
pub fn profile_mismatch(dp: &DynamicPenalty, disc: &LocalDiscrepancy) -> f64 {
    let fs = dp.static_profile();
    let hs = disc.h_s();
    let (mut lo, mut hi) = (fs.domain().0.max(hs.domain().0).max(-4.0), fs.domain().1.min(hs.domain().1).min(4.0));
    // Sampled profiles are only trusted between their knots.
    if let HFunction::Sampled(smp) = dp.profile() {
        let k = smp.knots();
        let (x0, x1) = if dp.is_reflected() { (-k[k.len() - 1], -k[0]) } else { (k[0], k[k.len() - 1]) };
        lo = lo.max(x0);
        hi = hi.min(x1);
    }
    let span = hi - lo;
    let (a, b) = (lo + 1e-3 * span, hi - 1e-3 * span);
    let mut worst = 0.0f64;
    for i in 0..33 {
        let z = a + (b - a) * i as f64 / 32.0;
        let (u, v) = (fs.eval(z), hs.eval(z));
        let err = if u.is_finite() && v.is_finite() {
            (u - v).abs() / (1.0 + v.abs())
        } else if u == v {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(err);
    }
    worst
}

/// Build the dynamic optimizer of a static solution.
pub fn assemble_dynamic(sol: &TransportSolution, dp: &DynamicPenalty, steps: usize) -> Result<DynamicOptimizer> {
    let mismatch = profile_mismatch(dp, &sol.disc);
    if mismatch > 1e-6 {
        return Err(Error::ModelMismatch(format!(
            "the flow of {} differs from h_S of {} by {mismatch:e}",
            dp.name(),
            sol.disc.name()
        )));
    }
    let r0 = sol.rho0p.weights();
    let r1 = sol.rho1p.weights();
    let trajectories = (0..r0.len())
        .into_par_iter()
        .map(|x| mass_trajectory(dp, r0[x].max(0.0), r1[x].max(0.0), steps))
        .collect::<Result<Vec<_>>>()?;
    let growth: f64 = trajectories.iter().map(|t| t.cost).sum();
    let excess = trajectories.iter().map(|t| t.excess).sum();
    Ok(DynamicOptimizer {
        total_cost: sol.pi0.transport_cost() + growth + sol.pi1.transport_cost(),
        jump0: sol.pi0.clone(),
        jump1: sol.pi1.clone(),
        trajectories,
        excess,
    })
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Largest violation of the weak continuity equation over test functions
/// `tᵖ·hat(x)`, `p ≤ 3`, with hats centred at the points in turn. Masses
/// are interpolated linearly in time and rates are constant per interval.
pub fn continuity_residual(opt: &DynamicOptimizer, test_fns: usize) -> f64 {
    let space = opt.jump0.space().clone();
    let n = space.len();
    let rho0 = opt.jump0.row_sums();
    let rho1 = opt.jump1.col_sums();
    let mut worst = 0.0f64;
    for j in 0..test_fns {
        let c = j % n;
        let p = ((j / n) % 4) as i32;
        let radius = (0..n).map(|x| space.distance(c, x)).fold(0.0f64, f64::max).max(1.0);
        let hat = |x: usize| (1.0 - space.distance(c, x) / radius).max(0.0);
        let phi = |t: f64, x: usize| t.powi(p) * hat(x);
        let dphi = |t: f64, x: usize| if p == 0 { 0.0 } else { p as f64 * t.powi(p - 1) * hat(x) };
        let mut lhs = 0.0;
        for (x, tr) in opt.trajectories.iter().enumerate() {
            for k in 0..tr.rates.len() {
                let (t0, t1) = (tr.times[k], tr.times[k + 1]);
                let half = 0.5 * (t1 - t0);
                for &(g, w) in &GAUSS3 {
                    let t = t0 + half * (1.0 + g);
                    let s = (t - t0) / (t1 - t0);
                    let m = tr.masses[k] * (1.0 - s) + tr.masses[k + 1] * s;
                    lhs += w * half * (dphi(t, x) * m + phi(t, x) * tr.rates[k]);
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                lhs += opt.jump0.get(x, y) * (phi(0.0, y) - phi(0.0, x));
                lhs += opt.jump1.get(x, y) * (phi(1.0, y) - phi(1.0, x));
            }
        }
        let rhs: f64 = (0..n).map(|x| phi(1.0, x) * rho1[x] - phi(0.0, x) * rho0[x]).sum();
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// `g(t, z)`: `F_t(z) − t·F₁(z)` for `z > 0`, `(1 − t)·z` for `z ≤ 0`.
pub fn g(dp: &DynamicPenalty, t: f64, z: f64) -> f64 {
    if z > 0.0 {
        dp.flow(t, z).value - t * dp.flow(1.0, z).value
    } else {
        (1.0 - t) * z
    }
}

/// `g^inv(t, z)`: `t·z` for `z ≥ 0`, `F^inv_{1−t}(z) − (1 − t)·F^inv_1(z)`
/// for `z < 0`.
pub fn g_inv(dp: &DynamicPenalty, t: f64, z: f64) -> f64 {
    if z < 0.0 {
        dp.inverse_flow(1.0 - t, z).value - (1.0 - t) * dp.inverse_flow(1.0, z).value
    } else {
        t * z
    }
}

/// `φ(t, x) = g(t, −α(x)) + g^inv(t, β(x))`.
#[derive(Clone, Debug)]
pub struct DualPotentialSurface {
    pub dp: DynamicPenalty,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl DualPotentialSurface {
    pub fn time_eval(&self, t: f64, x: usize) -> f64 {
        if t == 0.0 {
            return -self.alpha[x];
        }
        if t == 1.0 {
            return self.beta[x];
        }
        g(&self.dp, t, -self.alpha[x]) + g_inv(&self.dp, t, self.beta[x])
    }

    /// `max (∂ₜφ − h_D(φ))` over `samples` times per point, with `∂ₜ` by
    /// finite differences.
    pub fn hjb_violation(&self, samples: usize) -> f64 {
        let dt = 1e-5;
        let mut worst = f64::NEG_INFINITY;
        for x in 0..self.alpha.len() {
            for i in 0..samples {
                let t = i as f64 / (samples - 1).max(1) as f64;
                let f = |s: f64| self.time_eval(s, x);
                let d = if t - dt < 0.0 {
                    (-3.0 * f(t) + 4.0 * f(t + dt) - f(t + 2.0 * dt)) / (2.0 * dt)
                } else if t + dt > 1.0 {
                    (3.0 * f(t) - 4.0 * f(t - dt) + f(t - 2.0 * dt)) / (2.0 * dt)
                } else {
                    (f(t + dt) - f(t - dt)) / (2.0 * dt)
                };
                worst = worst.max(d - self.dp.h(self.time_eval(t, x)));
            }
        }
        worst
    }

    /// `Σ β ρ₁ − Σ φ(0) ρ₀`.
    pub fn objective(&self, rho0: &[f64], rho1: &[f64]) -> f64 {
        let mut v = 0.0;
        for x in 0..self.alpha.len() {
            if rho0[x] > 0.0 {
                v += self.alpha[x] * rho0[x];
            }
            if rho1[x] > 0.0 {
                v += self.beta[x] * rho1[x];
            }
        }
        v
    }
}

/// Interpolating dual potentials for static potentials in `B_S,pre`.
pub fn dual_potential(dp: &DynamicPenalty, alpha: &[f64], beta: &[f64]) -> Result<DualPotentialSurface> {
    if alpha.len() != beta.len() {
        return Err(Error::InvalidParameters("alpha and beta differ in length".into()));
    }
    let (lo, hi) = dp.domain();
    let bad: Vec<usize> = (0..alpha.len())
        .filter(|&x| {
            let (u, v) = (-alpha[x], beta[x]);
            let inside = |w: f64| w.is_finite() && w >= lo && w <= hi;
            !(inside(u) && inside(v)) || v > dp.flow(1.0, u).value + 1e-10
        })
        .collect();
    if !bad.is_empty() {
        return Err(Error::InfeasiblePair(bad));
    }
    Ok(DualPotentialSurface { dp: dp.clone(), alpha: alpha.to_vec(), beta: beta.to_vec() })
}

/// Semi-coupling cost of moving a Dirac of mass `m0` to a Dirac of mass
/// `m1` at distance `dx`, with the minimizing split.
#[derive(Clone, Copy, Debug)]
pub struct SemiCouplingCost {
    pub primal: f64,
    pub dual: f64,
    /// Mass sent before the change, and what it becomes.
    pub a0: f64,
    pub a1: f64,
}

fn scan_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let k = (0..=n).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    let (a, b) = (xs[k.saturating_sub(1)], xs[(k + 1).min(n)]);
    let (x, v) = golden_min(&f, a, b, 1e-13 * (1.0 + hi.abs() + lo.abs()));
    if v <= vals[k] {
        (x, v)
    } else {
        (xs[k], vals[k])
    }
}

/// `min c_S(a₀,a₁) + a₀Δx + c_S(m₀−a₀, m₁−a₁) + (m₁−a₁)Δx` and the
/// supremum of `α m₀ + β m₁` over the boundary of
/// `[B_S + (Δx, 0)] ∩ [B_S + (0, Δx)]`.
pub fn semicoupling_cost(disc: &LocalDiscrepancy, dx: f64, m0: f64, m1: f64) -> Result<SemiCouplingCost> {
    for v in [dx, m0, m1] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameters(format!("semi-coupling inputs must be finite and nonnegative, got {v}")));
        }
    }
    let objective = |a0: f64, a1: f64| {
        disc.cs(a0, a1) + a0 * dx + disc.cs((m0 - a0).max(0.0), (m1 - a1).max(0.0)) + (m1 - a1) * dx
    };
    let inner = |a0: f64| scan_golden(|a1| objective(a0, a1), 0.0, m1, 32);
    let (a0, primal) = scan_golden(|a0| inner(a0).1, 0.0, m0, 32);
    let a1 = inner(a0).0;

    let h = disc.h_s();
    let psi = |u: f64| {
        let cap = h.eval(u + dx).min(h.eval(u) + dx);
        if cap == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let b = if m1 > 0.0 { m1 * cap } else { 0.0 };
        -u * m0 + b
    };
    let (lo, _) = h.domain();
    let v_lo = if lo.is_finite() { lo.asinh() } else { (-1e9f64).asinh() };
    let v_hi = (1e9f64).asinh();
    let (_, neg) = scan_golden(|v| -psi(v.sinh()), v_lo, v_hi, 4000);
    Ok(SemiCouplingCost { primal, dual: -neg, a0, a1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hellinger_trajectory_cost() {
        let dp = DynamicPenalty::catalog("hellinger").unwrap();
        let tr = mass_trajectory(&dp, 1.0, 4.0, 256).unwrap();
        assert!((tr.cost - 1.0).abs() < 1e-3, "{}", tr.cost);
        for (t, m) in tr.times.iter().zip(&tr.masses) {
            assert!((m - (1.0 + t).powi(2)).abs() < 1e-3);
        }
    }

    #[test]
    fn tv_trajectory_cost() {
        let dp = DynamicPenalty::catalog("tv").unwrap();
        for steps in [2, 8, 64] {
            let tr = mass_trajectory(&dp, 2.0, 5.0, steps).unwrap();
            assert!((tr.cost - 3.0).abs() < 1e-9, "{}", tr.cost);
        }
    }

    #[test]
    fn exact_model_cannot_change_mass() {
        let dp = DynamicPenalty::catalog("exact").unwrap();
        assert!(matches!(mass_trajectory(&dp, 1.0, 2.0, 16), Err(Error::InfeasibleChange(_))));
        assert_eq!(mass_trajectory(&dp, 3.0, 3.0, 16).unwrap().cost, 0.0);
    }

    #[test]
    fn hellinger_dual_interpolant() {
        let dp = DynamicPenalty::catalog("hellinger").unwrap();
        let s = dual_potential(&dp, &[-1.0], &[0.5]).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            assert!((s.time_eval(t, 0) - 1.0 / (1.0 + t)).abs() < 1e-10);
        }
        let v = s.hjb_violation(33);
        assert!(v <= 1e-7, "{v}");
        assert!(matches!(dual_potential(&dp, &[-1.0], &[0.6]), Err(Error::InfeasiblePair(_))));
    }

    #[test]
    fn semicoupling_examples() {
        let tv = LocalDiscrepancy::catalog("tv").unwrap();
        let c = semicoupling_cost(&tv, 10.0, 1.0, 1.0).unwrap();
        assert!((c.primal - 2.0).abs() < 1e-9 && c.dual <= c.primal + 1e-9);
        let h = LocalDiscrepancy::catalog("hellinger").unwrap();
        let c = semicoupling_cost(&h, 0.0, 2.0, 3.0).unwrap();
        assert!((c.primal - h.cs(2.0, 3.0)).abs() < 1e-9);
        let c = semicoupling_cost(&h, 1.5, 1.0, 1.0).unwrap();
        assert!((c.primal - 1.0).abs() < 1e-6 && (c.dual - 1.0).abs() < 1e-5, "{c:?}");
    }
}
