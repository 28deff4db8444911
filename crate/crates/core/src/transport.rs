//! Static unbalanced transport on finite metric spaces.
//!
//! The primal problem couples `ρ₀` to an intermediate `ρ₀′` by `π₀`, changes
//! mass from `ρ₀′` to `ρ₁′` at cost `C_S`, and couples `ρ₁′` to `ρ₁` by `π₁`.
//! It is solved through its dual: potentials `α, β` must stay below
//! `d(·,x) + A(x)` and `d(x,·) + B(x)` with `(A(x), B(x)) ∈ B_S`. Each
//! `(A(x), B(x))` is a convex combination of supporting points of `B_S`;
//! further points are priced in by column generation until the cut model
//! matches `c_S` at the current intermediate masses. The couplings are the
//! row multipliers of the dual LP.

use crate::discrepancy::LocalDiscrepancy;
use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpStatus, RunOutcome, Sense, Simplex};
use crate::measure::{Coupling, DiscreteMeasure, MeasureFile, MetricSpace, MetricSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

const MAX_ROUNDS: usize = 400;
const PARTITION_EPS: f64 = 1e-9;

/// Label of a point by the sign of its mass change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// `ρ₀′(x) < ρ₁′(x)`: mass grows.
    Plus,
    /// `ρ₀′(x) > ρ₁′(x)`: mass shrinks.
    Minus,
    Equal,
}

/// Optimal couplings, potentials and the value bracket.
#[derive(Clone, Debug)]
pub struct TransportSolution {
    pub disc: LocalDiscrepancy,
    pub rho0: DiscreteMeasure,
    pub rho1: DiscreteMeasure,
    pub pi0: Coupling,
    pub pi1: Coupling,
    pub rho0p: DiscreteMeasure,
    pub rho1p: DiscreteMeasure,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `P_S(π₀, π₁)` evaluated with the exact `c_S`.
    pub primal_value: f64,
    /// Dual objective of potentials that are exactly feasible.
    pub dual_value: f64,
    pub gap: f64,
    pub partition: Vec<Region>,
    /// Column-generation rounds used.
    pub rounds: usize,
}

impl TransportSolution {
    pub fn space(&self) -> &Arc<MetricSpace> {
        self.rho0.space()
    }

    /// Midpoint of the value bracket.
    pub fn value(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }
}

fn partition_of(rho0p: &[f64], rho1p: &[f64]) -> Vec<Region> {
    rho0p
        .iter()
        .zip(rho1p)
        .map(|(&a, &b)| {
            if a < b - PARTITION_EPS {
                Region::Plus
            } else if a > b + PARTITION_EPS {
                Region::Minus
            } else {
                Region::Equal
            }
        })
        .collect()
}

/// `P_S(π₀, π₁) = Σ d π₀ + Σ_x c_S(ρ₀′(x), ρ₁′(x)) + Σ d π₁`.
pub fn primal_cost(disc: &LocalDiscrepancy, pi0: &Coupling, pi1: &Coupling) -> f64 {
    let r0 = pi0.col_sums();
    let r1 = pi1.row_sums();
    let change: f64 = r0.iter().zip(&r1).map(|(&a, &b)| disc.cs(a.max(0.0), b.max(0.0))).sum();
    pi0.transport_cost() + change + pi1.transport_cost()
}

/// Potentials induced by `(A(x), B(x))` and their dual objective.
fn induced_potentials(
    space: &MetricSpace,
    rho0: &[f64],
    rho1: &[f64],
    a: &[f64],
    b: &[f64],
) -> (Vec<f64>, Vec<f64>, f64) {
    let n = space.len();
    let alpha: Vec<f64> = (0..n).map(|i| (0..n).map(|x| a[x] + space.distance(i, x)).fold(f64::INFINITY, f64::min)).collect();
    let beta: Vec<f64> = (0..n).map(|j| (0..n).map(|x| b[x] + space.distance(x, j)).fold(f64::INFINITY, f64::min)).collect();
    let mut value = 0.0;
    for i in 0..n {
        if rho0[i] > 0.0 {
            value += alpha[i] * rho0[i];
        }
        if rho1[i] > 0.0 {
            value += beta[i] * rho1[i];
        }
    }
    (alpha, beta, value)
}

fn finish(
    disc: &LocalDiscrepancy,
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    pi0: Coupling,
    pi1: Coupling,
    a: &[f64],
    b: &[f64],
    rounds: usize,
) -> Result<TransportSolution> {
    let space = rho0.space().clone();
    let r0 = pi0.col_sums();
    let r1 = pi1.row_sums();
    let primal_value = primal_cost(disc, &pi0, &pi1);
    let (alpha, beta, dual_value) = induced_potentials(&space, rho0.weights(), rho1.weights(), a, b);
    Ok(TransportSolution {
        disc: disc.clone(),
        rho0: rho0.clone(),
        rho1: rho1.clone(),
        partition: partition_of(&r0, &r1),
        rho0p: DiscreteMeasure::new(space.clone(), r0)?,
        rho1p: DiscreteMeasure::new(space, r1)?,
        pi0,
        pi1,
        alpha,
        beta,
        gap: primal_value - dual_value,
        primal_value,
        dual_value,
        rounds,
    })
}

/// A point of `B_S` with both coordinates finite, pushed onto the boundary.
fn clamp_to_set(disc: &LocalDiscrepancy, a: f64, b: f64) -> (f64, f64) {
    let cap = disc.h_s().eval(-a);
    (a, b.min(cap))
}

fn solve_exact(rho0: &DiscreteMeasure, rho1: &DiscreteMeasure, disc: &LocalDiscrepancy) -> Result<TransportSolution> {
    let (m0, m1) = (rho0.mass(), rho1.mass());
    if (m0 - m1).abs() > 1e-9 * m0.max(m1).max(1.0) {
        return Err(Error::InfeasibleModel(format!("the exact model cannot change the total mass {m0} into {m1}")));
    }
    let space = rho0.space().clone();
    let n = space.len();
    let (_, plan) = crate::measure::w1_distance(rho0, rho1)?;
    // Kantorovich potential: maximize Σ g (ρ₁ − ρ₀) over 1-Lipschitz g.
    let mut lp = LinearProgram::new(n);
    for i in 0..n {
        lp.objective[i] = rho0.weights()[i] - rho1.weights()[i];
        lp.lower[i] = f64::NEG_INFINITY;
    }
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let mut row = vec![0.0; n];
                row[x] = 1.0;
                row[y] = -1.0;
                lp.add_row(row, Sense::Le, space.distance(x, y));
            }
        }
    }
    let mut row = vec![0.0; n];
    row[0] = 1.0;
    lp.add_row(row, Sense::Eq, 0.0);
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::LpFailure(format!("potential LP ended with status {:?}", sol.status)));
    }
    let g = sol.x;
    let a: Vec<f64> = g.iter().map(|v| -v).collect();
    let pi1 = Coupling::diagonal(&DiscreteMeasure::new(space.clone(), plan.col_sums())?);
    finish(disc, rho0, rho1, plan, pi1, &a, &g, 0)
}

fn solve_one_sided(rho0: &DiscreteMeasure, rho1: &DiscreteMeasure, disc: &LocalDiscrepancy) -> Result<TransportSolution> {
    let space = rho0.space().clone();
    let n = space.len();
    let (m0, m1) = (rho0.mass(), rho1.mass());
    let unit = disc.cs(m0.min(1.0).ceil(), m1.min(1.0).ceil());
    if !unit.is_finite() {
        return Err(Error::InfeasibleModel(format!(
            "{} cannot create or destroy all mass (masses {m0} and {m1})",
            disc.name()
        )));
    }
    let (ta, tb) = disc.tangent_point(m0, m1);
    let (ta, tb) = clamp_to_set(disc, ta, tb);
    let pi0 = Coupling::diagonal(rho0);
    let pi1 = Coupling::diagonal(rho1);
    finish(disc, rho0, rho1, pi0, pi1, &vec![ta; n], &vec![tb; n], 0)
}

struct DualLp {
    n: usize,
    simplex: Simplex,
    /// `(point, α-coordinate, β-coordinate, column)` of every cut.
    cuts: Vec<(usize, f64, f64, usize)>,
}

impl DualLp {
    fn row_alpha(&self, i: usize, x: usize) -> usize {
        i * self.n + x
    }

    fn row_beta(&self, x: usize, j: usize) -> usize {
        self.n * self.n + x * self.n + j
    }

    fn row_conv(&self, x: usize) -> usize {
        2 * self.n * self.n + x
    }

    fn column(&self, x: usize, a: f64, b: f64) -> Vec<f64> {
        let mut col = vec![0.0; 2 * self.n * self.n + self.n];
        for i in 0..self.n {
            col[self.row_alpha(i, x)] = -a;
            col[self.row_beta(x, i)] = -b;
        }
        col[self.row_conv(x)] = 1.0;
        col
    }

    fn build(space: &MetricSpace, rho0: &[f64], rho1: &[f64], initial: &[(f64, f64)]) -> Self {
        let n = space.len();
        let m = 2 * n * n + n;
        let nvar = 4 * n;
        let mut rows = vec![vec![0.0; nvar]; m];
        let mut senses = vec![Sense::Le; m];
        let mut rhs = vec![0.0; m];
        let mut cost = vec![0.0; nvar];
        for i in 0..n {
            cost[2 * i] = -rho0[i];
            cost[2 * i + 1] = rho0[i];
            cost[2 * n + 2 * i] = -rho1[i];
            cost[2 * n + 2 * i + 1] = rho1[i];
        }
        for i in 0..n {
            for x in 0..n {
                let r = i * n + x;
                rows[r][2 * i] = 1.0;
                rows[r][2 * i + 1] = -1.0;
                rhs[r] = space.distance(i, x);
                let r = n * n + x * n + i;
                rows[r][2 * n + 2 * i] = 1.0;
                rows[r][2 * n + 2 * i + 1] = -1.0;
                rhs[r] = space.distance(x, i);
            }
        }
        for x in 0..n {
            senses[2 * n * n + x] = Sense::Eq;
            rhs[2 * n * n + x] = 1.0;
        }
        let simplex = Simplex::new(&cost, &rows, &senses, &rhs);
        let mut lp = DualLp { n, simplex, cuts: Vec::new() };
        for x in 0..n {
            for &(a, b) in initial {
                lp.add_cut(x, a, b);
            }
        }
        lp
    }

    fn add_cut(&mut self, x: usize, a: f64, b: f64) {
        let col = self.column(x, a, b);
        let j = self.simplex.add_column(0.0, &col);
        self.cuts.push((x, a, b, j));
    }

    /// Intermediate marginals and the couplings read off the row duals.
    fn couplings(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let y = self.simplex.duals();
        let n = self.n;
        let mut p0 = vec![vec![0.0; n]; n];
        let mut p1 = vec![vec![0.0; n]; n];
        for i in 0..n {
            for x in 0..n {
                p0[i][x] = (-y[self.row_alpha(i, x)]).max(0.0);
                p1[x][i] = (-y[self.row_beta(x, i)]).max(0.0);
            }
        }
        (p0, p1)
    }

    fn epigraph(&self, x: usize, m0: f64, m1: f64) -> f64 {
        self.cuts
            .iter()
            .filter(|c| c.0 == x)
            .map(|c| c.1 * m0 + c.2 * m1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(A(x), B(x))` as convex combinations of the active cuts.
    fn set_points(&self) -> (Vec<f64>, Vec<f64>) {
        let v = self.simplex.primal();
        let mut a = vec![0.0; self.n];
        let mut b = vec![0.0; self.n];
        let mut w = vec![0.0; self.n];
        for &(x, ca, cb, j) in &self.cuts {
            let l = v[j];
            if l > 0.0 {
                a[x] += l * ca;
                b[x] += l * cb;
                w[x] += l;
            }
        }
        for x in 0..self.n {
            if w[x] > 0.0 {
                a[x] /= w[x];
                b[x] /= w[x];
            }
        }
        (a, b)
    }
}

/// Solve the static problem with `k_cuts` initial supporting points per
/// location, refined by column generation.
pub fn solve_static(
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    disc: &LocalDiscrepancy,
    k_cuts: usize,
) -> Result<TransportSolution> {
    if rho0.space().is_empty() {
        return Err(Error::EmptySpace);
    }
    if !rho0.same_space(rho1) {
        return Err(Error::SpaceMismatch("measures live on different spaces".into()));
    }
    if k_cuts < 3 {
        return Err(Error::InvalidParameters("at least 3 supporting points are needed".into()));
    }
    if disc.is_exact() {
        return solve_exact(rho0, rho1, disc);
    }
    let (m0, m1) = (rho0.mass(), rho1.mass());
    if m0 == 0.0 || m1 == 0.0 {
        return solve_one_sided(rho0, rho1, disc);
    }
    let space = rho0.space().clone();
    let n = space.len();
    let initial = disc.supporting_points(k_cuts);
    let mut lp = DualLp::build(&space, rho0.weights(), rho1.weights(), &initial);
    if !lp.simplex.phase_one()? {
        return Err(Error::LpFailure("dual LP has no feasible point".into()));
    }
    let scale = 1.0 + m0 + m1;
    let mut rounds = 0;
    loop {
        if lp.simplex.run()? == RunOutcome::Unbounded {
            return Err(Error::InfeasibleModel(format!("{} admits no finite transport cost here", disc.name())));
        }
        rounds += 1;
        let (p0, p1) = lp.couplings();
        let mut added = 0;
        for x in 0..n {
            let r0: f64 = (0..n).map(|i| p0[i][x]).sum();
            let r1: f64 = p1[x].iter().sum();
            if r0 <= 0.0 && r1 <= 0.0 {
                continue;
            }
            let exact = disc.cs(r0, r1);
            let model = lp.epigraph(x, r0, r1);
            if exact - model > 1e-13 * scale {
                let (a, b) = disc.tangent_point(r0, r1);
                if a.is_finite() && b.is_finite() && a * r0 + b * r1 > model + 1e-14 * scale {
                    lp.add_cut(x, a, b);
                    added += 1;
                }
            }
        }
        if added == 0 || rounds >= MAX_ROUNDS {
            break;
        }
    }
    let (p0, p1) = lp.couplings();
    let (a, b) = lp.set_points();
    let fixed: Vec<(f64, f64)> = a.iter().zip(&b).map(|(&x, &y)| clamp_to_set(disc, x, y)).collect();
    let a: Vec<f64> = fixed.iter().map(|p| p.0).collect();
    let b: Vec<f64> = fixed.iter().map(|p| p.1).collect();
    let pi0 = Coupling::new(space.clone(), p0)?;
    let pi1 = Coupling::new(space, p1)?;
    finish(disc, rho0, rho1, pi0, pi1, &a, &b, rounds)
}

fn mass_tol(sol: &TransportSolution) -> f64 {
    1e-6 * (1.0 + sol.rho0.mass() + sol.rho1.mass())
}

/// Check the necessary optimality conditions on the supports of `π₀, π₁`.
/// Returns one message per violated condition.
pub fn verify_structure(sol: &TransportSolution, _disc: &LocalDiscrepancy) -> Vec<String> {
    let n = sol.space().len();
    let tol = mass_tol(sol);
    let p = &sol.partition;
    let d = |i: usize, j: usize| sol.space().distance(i, j);
    let mut out = Vec::new();
    if sol.gap > 1e-5 * (1.0 + sol.primal_value.abs()) {
        out.push(format!("solution is not optimal: gap {:e}", sol.gap));
    }
    let mut into_minus = 0.0;
    let mut out_of_plus = 0.0;
    let mut plus_leaves = 0.0;
    let mut minus_fed = 0.0;
    for x in 0..n {
        for y in 0..n {
            let a = sol.pi0.get(x, y);
            let b = sol.pi1.get(x, y);
            if p[y] == Region::Minus {
                into_minus += d(x, y) * a;
            }
            if p[x] == Region::Plus {
                out_of_plus += d(x, y) * b;
            }
            if p[x] == Region::Plus && p[y] != Region::Plus {
                plus_leaves += a;
            }
            if p[x] != Region::Minus && p[y] == Region::Minus {
                minus_fed += b;
            }
        }
    }
    if into_minus > tol {
        out.push(format!("condition I: pi0 transports {into_minus:e} cost into the shrinking region"));
    }
    if out_of_plus > tol {
        out.push(format!("condition I: pi1 transports {out_of_plus:e} cost out of the growing region"));
    }
    if plus_leaves > tol {
        out.push(format!("condition II: pi0 moves {plus_leaves:e} mass out of the growing region"));
    }
    if minus_fed > tol {
        out.push(format!("condition II: pi1 moves {minus_fed:e} mass into the shrinking region"));
    }
    out
}

/// Columns of the support table of optimal couplings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportCase {
    General,
    /// `c_S(1,·)` differentiable at 1.
    Smooth,
    /// `ρ₀ ⊥ ρ₁`.
    Singular,
    /// `c_S(1,·) = |1 − ·|`.
    Tv,
}

#[derive(Clone, Copy, PartialEq)]
enum Cell {
    Zero,
    Diagonal,
    Free,
}

fn region_index(r: Region) -> usize {
    match r {
        Region::Plus => 0,
        Region::Equal => 1,
        Region::Minus => 2,
    }
}

fn support_table(case: SupportCase) -> ([[Cell; 3]; 3], [[Cell; 3]; 3]) {
    use Cell::*;
    let general_pi1 = [[Diagonal, Zero, Zero], [Zero, Diagonal, Zero], [Free, Free, Free]];
    match case {
        SupportCase::General => ([[Free, Zero, Zero], [Free, Free, Zero], [Free, Zero, Diagonal]], general_pi1),
        SupportCase::Smooth => ([[Free, Zero, Zero], [Free, Diagonal, Zero], [Free, Zero, Diagonal]], general_pi1),
        SupportCase::Singular => (
            [[Zero, Zero, Zero], [Free, Free, Zero], [Free, Zero, Diagonal]],
            [[Diagonal, Zero, Zero], [Zero, Diagonal, Zero], [Free, Free, Zero]],
        ),
        SupportCase::Tv => (
            [[Diagonal, Zero, Zero], [Free, Free, Zero], [Free, Zero, Diagonal]],
            [[Diagonal, Zero, Zero], [Zero, Diagonal, Zero], [Free, Free, Diagonal]],
        ),
    }
}

const REGION_NAMES: [&str; 3] = ["growing", "balanced", "shrinking"];

/// Compare the supports of `π₀, π₁` with the pattern for `case`, blockwise
/// over the regions. Mass in a zero block, and transport cost in a diagonal
/// block, count as violations.
pub fn pattern_violations(sol: &TransportSolution, case: SupportCase) -> Vec<String> {
    let n = sol.space().len();
    let tol = mass_tol(sol);
    let (t0, t1) = support_table(case);
    let mut out = Vec::new();
    for (name, pi, table) in [("pi0", &sol.pi0, t0), ("pi1", &sol.pi1, t1)] {
        let mut mass = [[0.0; 3]; 3];
        let mut cost = [[0.0; 3]; 3];
        for x in 0..n {
            for y in 0..n {
                let (r, c) = (region_index(sol.partition[x]), region_index(sol.partition[y]));
                mass[r][c] += pi.get(x, y);
                cost[r][c] += sol.space().distance(x, y) * pi.get(x, y);
            }
        }
        for r in 0..3 {
            for c in 0..3 {
                let bad = match table[r][c] {
                    Cell::Zero => mass[r][c] > tol,
                    Cell::Diagonal => cost[r][c] > tol,
                    Cell::Free => false,
                };
                if bad {
                    out.push(format!(
                        "{name} carries mass {:e} at cost {:e} from the {} into the {} region",
                        mass[r][c], cost[r][c], REGION_NAMES[r], REGION_NAMES[c]
                    ));
                }
            }
        }
    }
    out
}

/// Move `m` units that `π₀` delivers at `z` (taken proportionally from its
/// sources) so that they are delivered at `w` instead.
fn redirect_arrivals(p0: &mut [Vec<f64>], z: usize, w: usize, m: f64) {
    let n = p0.len();
    let total: f64 = (0..n).map(|i| p0[i][z]).sum();
    if total <= 0.0 {
        return;
    }
    let f = (m / total).min(1.0);
    for i in 0..n {
        let moved = p0[i][z] * f;
        p0[i][z] -= moved;
        p0[i][w] += moved;
    }
}

/// Move `m` units that `π₁` sends out of `z` (proportionally over targets)
/// so that they leave from `x` instead.
fn redirect_departures(p1: &mut [Vec<f64>], z: usize, x: usize, m: f64) {
    let n = p1.len();
    let total: f64 = p1[z].iter().sum();
    if total <= 0.0 {
        return;
    }
    let f = (m / total).min(1.0);
    for y in 0..n {
        let moved = p1[z][y] * f;
        p1[z][y] -= moved;
        p1[x][y] += moved;
    }
}

/// Reroute mass through the balanced region so that the optimizer takes
/// the canonical support pattern; the objective never increases.
pub fn canonicalize(sol: &TransportSolution, disc: &LocalDiscrepancy) -> Result<TransportSolution> {
    if sol.gap > 1e-5 * (1.0 + sol.primal_value.abs()) {
        return Err(Error::NotOptimalInput(format!("gap {:e} exceeds 1e-5", sol.gap)));
    }
    let n = sol.space().len();
    let part = sol.partition.clone();
    let mut p0: Vec<Vec<f64>> = sol.pi0.matrix().to_vec();
    let mut p1: Vec<Vec<f64>> = sol.pi1.matrix().to_vec();
    let before = primal_cost(disc, &sol.pi0, &sol.pi1);
    let tiny = 1e-15 * (1.0 + sol.rho0.mass() + sol.rho1.mass());
    for _ in 0..100 {
        let mut changed = false;
        for z in 0..n {
            if part[z] != Region::Equal {
                continue;
            }
            // π₁ leaves z towards w ≠ z: deliver directly at w under π₀.
            for w in 0..n {
                let m = p1[z][w];
                if w == z || m <= tiny {
                    continue;
                }
                redirect_arrivals(&mut p0, z, w, m);
                p1[z][w] -= m;
                p1[w][w] += m;
                changed = true;
            }
            // π₀ brings mass from x in the shrinking region: keep it at x
            // and let π₁ carry it on.
            for x in 0..n {
                let m = p0[x][z];
                if m <= tiny || part[x] != Region::Minus {
                    continue;
                }
                p0[x][z] -= m;
                p0[x][x] += m;
                redirect_departures(&mut p1, z, x, m);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let space = sol.space().clone();
    let pi0 = Coupling::new(space.clone(), p0)?;
    let pi1 = Coupling::new(space, p1)?;
    let after = primal_cost(disc, &pi0, &pi1);
    if after > before + 1e-9 * (1.0 + before.abs()) {
        return Err(Error::NotOptimalInput(format!("rerouting raised the objective from {before} to {after}")));
    }
    let r0 = pi0.col_sums();
    let r1 = pi1.row_sums();
    Ok(TransportSolution {
        disc: sol.disc.clone(),
        rho0: sol.rho0.clone(),
        rho1: sol.rho1.clone(),
        partition: partition_of(&r0, &r1),
        rho0p: DiscreteMeasure::new(sol.space().clone(), r0)?,
        rho1p: DiscreteMeasure::new(sol.space().clone(), r1)?,
        pi0,
        pi1,
        alpha: sol.alpha.clone(),
        beta: sol.beta.clone(),
        primal_value: after,
        dual_value: sol.dual_value,
        gap: after - sol.dual_value,
        rounds: sol.rounds,
    })
}

/// `(L₀, L₁)`: distances beyond which transport before, respectively after,
/// the mass change is never worthwhile.
pub fn max_transport_distances(disc: &LocalDiscrepancy) -> (f64, f64) {
    let (a0, a1) = disc.partial1_limits();
    let (b0, b1) = disc.partial2_limits();
    (a1 - a0, b1 - b0)
}

/// On-disk solution format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub model: String,
    pub points: Vec<Vec<f64>>,
    pub metric: MetricSpec,
    pub rho0: Vec<f64>,
    pub rho1: Vec<f64>,
    pub pi0: Vec<Vec<f64>>,
    pub pi1: Vec<Vec<f64>>,
    pub rho0p: Vec<f64>,
    pub rho1p: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub dual_value: f64,
    pub primal_value: f64,
    pub gap: f64,
    pub partition: Vec<Region>,
}

impl SolutionFile {
    pub fn from_solution(sol: &TransportSolution) -> Self {
        let mf = MeasureFile::from_measure(&sol.rho0);
        SolutionFile {
            model: sol.disc.name().to_string(),
            points: mf.points,
            metric: mf.metric,
            rho0: sol.rho0.weights().to_vec(),
            rho1: sol.rho1.weights().to_vec(),
            pi0: sol.pi0.matrix().to_vec(),
            pi1: sol.pi1.matrix().to_vec(),
            rho0p: sol.rho0p.weights().to_vec(),
            rho1p: sol.rho1p.weights().to_vec(),
            alpha: sol.alpha.clone(),
            beta: sol.beta.clone(),
            dual_value: sol.dual_value,
            primal_value: sol.primal_value,
            gap: sol.gap,
            partition: sol.partition.clone(),
        }
    }

    /// Rebuild the solution for the discrepancy it was solved with; values
    /// are taken as stored.
    pub fn into_solution(self, disc: LocalDiscrepancy) -> Result<TransportSolution> {
        let rho0 = MeasureFile { points: self.points.clone(), metric: self.metric.clone(), weights: self.rho0 }
            .into_measure()?;
        let space = rho0.space().clone();
        let rho1 = DiscreteMeasure::new(space.clone(), self.rho1)?;
        Ok(TransportSolution {
            disc,
            pi0: Coupling::new(space.clone(), self.pi0)?,
            pi1: Coupling::new(space.clone(), self.pi1)?,
            rho0p: DiscreteMeasure::new(space.clone(), self.rho0p)?,
            rho1p: DiscreteMeasure::new(space, self.rho1p)?,
            rho0,
            rho1,
            alpha: self.alpha,
            beta: self.beta,
            primal_value: self.primal_value,
            dual_value: self.dual_value,
            gap: self.gap,
            partition: self.partition,
            rounds: 0,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let s = line(&[0.0, 1.0, 2.5]);
        let r = DiscreteMeasure::new(s, vec![1.0, 2.0, 0.5]).unwrap();
        let d = LocalDiscrepancy::catalog("hellinger").unwrap();
        let sol = solve_static(&r, &r, &d, 65).unwrap();
        assert!(sol.primal_value.abs() < 1e-9 && sol.gap.abs() < 1e-9);
        for i in 0..3 {
            assert!((sol.pi0.get(i, i) - r.weights()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn single_point_mass_change() {
        let s = line(&[0.0]);
        let a = DiscreteMeasure::new(s.clone(), vec![2.0]).unwrap();
        let b = DiscreteMeasure::new(s, vec![3.0]).unwrap();
        let d = LocalDiscrepancy::catalog("hellinger").unwrap();
        let sol = solve_static(&a, &b, &d, 65).unwrap();
        let expect = (2f64.sqrt() - 3f64.sqrt()).powi(2);
        assert!((sol.primal_value - expect).abs() < 1e-9, "{}", sol.primal_value);
        assert!((sol.dual_value - expect).abs() < 1e-9, "{}", sol.dual_value);
    }

    #[test]
    fn tv_two_diracs() {
        let d = LocalDiscrepancy::catalog("tv").unwrap();
        for (l, expect) in [(3.0, 2.0), (1.5, 1.5)] {
            let s = line(&[0.0, l]);
            let a = DiscreteMeasure::new(s.clone(), vec![1.0, 0.0]).unwrap();
            let b = DiscreteMeasure::new(s, vec![0.0, 1.0]).unwrap();
            let sol = solve_static(&a, &b, &d, 65).unwrap();
            assert!((sol.primal_value - expect).abs() < 1e-9 && sol.gap.abs() < 1e-9);
        }
        assert_eq!(max_transport_distances(&d), (2.0, 2.0));
    }

    #[test]
    fn exact_model_is_w1() {
        let s = line(&[0.0, 1.0, 3.0]);
        let a = DiscreteMeasure::new(s.clone(), vec![1.0, 1.0, 0.0]).unwrap();
        let b = DiscreteMeasure::new(s, vec![0.0, 1.0, 1.0]).unwrap();
        let d = LocalDiscrepancy::catalog("exact").unwrap();
        let sol = solve_static(&a, &b, &d, 65).unwrap();
        assert!((sol.primal_value - 3.0).abs() < 1e-9 && sol.gap.abs() < 1e-9);
        let c = DiscreteMeasure::new(a.space().clone(), vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(solve_static(&a, &c, &d, 65), Err(Error::InfeasibleModel(_))));
    }
}
