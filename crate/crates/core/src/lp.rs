//! Dense two-phase simplex.
//!
//! Small, dense, deterministic. Pricing is Dantzig's rule with a switch to
//! Bland's rule whenever a run of degenerate pivots is detected, so the
//! method cannot cycle. The tableau keeps the initial identity columns
//! (slacks and artificials) for the whole run; they carry `B^-1` and give
//! the row duals, and they make column generation cheap.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;
const DEGENERATE_RUN: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `minimize c·x` subject to row constraints and variable bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One multiplier per row, sign convention of `min`: `y ≤ 0` on `≤` rows,
    /// `y ≥ 0` on `≥` rows, so that `c − Aᵀy ≥ 0` on variables at their lower bound.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    /// `n` variables with bounds `[0, ∞)` and a zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidParameters("bound vectors do not match variable count".into()));
        }
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::InvalidParameters("row metadata does not match row count".into()));
        }
        for r in &self.rows {
            if r.len() != n {
                return Err(Error::InvalidParameters("row length does not match variable count".into()));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameters("non-finite constraint coefficient".into()));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) || self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("non-finite objective or right-hand side".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidParameters(format!("empty bound interval for variable {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Tableau state of the simplex method over `A x (≤,≥,=) b`, `x ≥ 0`.
#[derive(Clone, Debug)]
pub(crate) struct Simplex {
    m: usize,
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    d: Vec<f64>,
    obj: f64,
    basis: Vec<usize>,
    kind: Vec<ColKind>,
    cost: Vec<f64>,
    unit: Vec<usize>,
    flipped: Vec<bool>,
    n_struct: usize,
    struct_cols: Vec<usize>,
    pub pivots: usize,
    phase_two: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RunOutcome {
    Optimal,
    Unbounded,
}

impl Simplex {
    /// Build the phase-one tableau. All structural variables are `≥ 0`.
    pub(crate) fn new(cost: &[f64], rows: &[Vec<f64>], senses: &[Sense], rhs: &[f64]) -> Self {
        let m = rows.len();
        let n = cost.len();
        let mut kind = vec![ColKind::Structural; n];
        let mut col_cost: Vec<f64> = cost.to_vec();
        let mut flipped = vec![false; m];
        let mut norm_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut norm_rhs = Vec::with_capacity(m);
        let mut norm_sense = Vec::with_capacity(m);
        for i in 0..m {
            let mut r = rows[i].clone();
            let mut b = rhs[i];
            let mut s = senses[i];
            if b < 0.0 {
                flipped[i] = true;
                r.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                s = match s {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            norm_rows.push(r);
            norm_rhs.push(b);
            norm_sense.push(s);
        }
        let mut extra: Vec<(usize, f64, ColKind)> = Vec::new();
        let mut unit = vec![usize::MAX; m];
        let mut next = n;
        for i in 0..m {
            match norm_sense[i] {
                Sense::Le => {
                    extra.push((i, 1.0, ColKind::Slack));
                    unit[i] = next;
                    next += 1;
                }
                Sense::Ge => {
                    extra.push((i, -1.0, ColKind::Slack));
                    next += 1;
                    extra.push((i, 1.0, ColKind::Artificial));
                    unit[i] = next;
                    next += 1;
                }
                Sense::Eq => {
                    extra.push((i, 1.0, ColKind::Artificial));
                    unit[i] = next;
                    next += 1;
                }
            }
        }
        let total = next;
        let mut t = vec![vec![0.0; total]; m];
        for i in 0..m {
            t[i][..n].copy_from_slice(&norm_rows[i]);
        }
        for (k, &(row, coef, kd)) in extra.iter().enumerate() {
            t[row][n + k] = coef;
            kind.push(kd);
            col_cost.push(0.0);
        }
        let basis = unit.clone();
        let mut s = Simplex {
            m,
            t,
            rhs: norm_rhs,
            d: vec![0.0; total],
            obj: 0.0,
            basis,
            kind,
            cost: col_cost,
            unit,
            flipped,
            n_struct: n,
            struct_cols: (0..n).collect(),
            pivots: 0,
            phase_two: false,
        };
        s.set_phase_one_costs();
        s
    }

    fn phase_cost(&self, j: usize) -> f64 {
        if self.phase_two {
            if self.kind[j] == ColKind::Artificial {
                0.0
            } else {
                self.cost[j]
            }
        } else if self.kind[j] == ColKind::Artificial {
            1.0
        } else {
            0.0
        }
    }

    fn recompute_reduced_costs(&mut self) {
        let ncol = self.d.len();
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.phase_cost(j)).collect();
        for j in 0..ncol {
            let mut v = self.phase_cost(j);
            for i in 0..self.m {
                v -= cb[i] * self.t[i][j];
            }
            self.d[j] = v;
        }
        self.obj = (0..self.m).map(|i| cb[i] * self.rhs[i]).sum();
    }

    fn set_phase_one_costs(&mut self) {
        self.phase_two = false;
        self.recompute_reduced_costs();
    }

    fn enterable(&self, j: usize) -> bool {
        !(self.phase_two && self.kind[j] == ColKind::Artificial)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let ncol = self.d.len();
        let p = self.t[r][c];
        let inv = 1.0 / p;
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.t[r][c] = 1.0;
        let prow = self.t[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][c];
            if f != 0.0 {
                let row = &mut self.t[i];
                for j in 0..ncol {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
                self.rhs[i] -= f * prhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-13 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for j in 0..ncol {
                self.d[j] -= f * prow[j];
            }
            self.d[c] = 0.0;
            self.obj += f * prhs;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Run primal simplex iterations for the current phase.
    pub(crate) fn run(&mut self) -> Result<RunOutcome> {
        let mut in_basis = vec![false; self.d.len()];
        for &b in &self.basis {
            in_basis[b] = true;
        }
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::CycleGuardExceeded(self.pivots));
            }
            let mut enter = None;
            let mut best = -COST_EPS;
            for j in 0..self.d.len() {
                if in_basis[j] || !self.enterable(j) {
                    continue;
                }
                let dj = self.d[j];
                if dj < -COST_EPS {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if dj < best {
                        best = dj;
                        enter = Some(j);
                    }
                }
            }
            let c = match enter {
                None => return Ok(RunOutcome::Optimal),
                Some(c) => c,
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.t[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[i] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    a > self.t[l][c]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let r = match leave {
                None => return Ok(RunOutcome::Unbounded),
                Some(r) => r,
            };
            if self.rhs[r] <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            in_basis[self.basis[r]] = false;
            in_basis[c] = true;
            self.pivot(r, c);
        }
    }

    /// Phase one, artificial clean-up, switch to phase-two costs.
    /// Returns `false` if the system is infeasible.
    pub(crate) fn phase_one(&mut self) -> Result<bool> {
        self.run()?;
        let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if self.obj > FEAS_EPS * scale {
            return Ok(false);
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if self.kind[b] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.d.len() {
                if self.kind[j] == ColKind::Artificial || self.basis.contains(&j) {
                    continue;
                }
                let a = self.t[r][j].abs();
                if a > 1e-9 && best.map_or(true, |(_, v)| a > v) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                self.pivot(r, j);
            }
        }
        self.phase_two = true;
        self.recompute_reduced_costs();
        Ok(true)
    }

    /// Multipliers of the original rows (before sign normalization).
    pub(crate) fn duals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let u = self.unit[i];
                let y = self.phase_cost(u) - self.d[u];
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect()
    }

    /// Values of the structural variables, in insertion order.
    pub(crate) fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.d.len()];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs[i].max(0.0);
        }
        self.struct_cols.iter().map(|&j| x[j]).collect()
    }

    /// Append a nonnegative structural column with the given cost and
    /// coefficients on the original rows; the current basis stays valid.
    pub(crate) fn add_column(&mut self, cost: f64, coeffs: &[f64]) -> usize {
        let norm: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| if self.flipped[i] { -a } else { a })
            .collect();
        let mut col = vec![0.0; self.m];
        for (i, &a) in norm.iter().enumerate() {
            if a != 0.0 {
                let u = self.unit[i];
                for r in 0..self.m {
                    col[r] += a * self.t[r][u];
                }
            }
        }
        let j = self.d.len();
        for r in 0..self.m {
            self.t[r].push(col[r]);
        }
        self.kind.push(ColKind::Structural);
        self.cost.push(cost);
        let mut dj = if self.phase_two { cost } else { 0.0 };
        for (i, &a) in norm.iter().enumerate() {
            if a != 0.0 {
                let u = self.unit[i];
                let y = self.phase_cost(u) - self.d[u];
                dj -= y * a;
            }
        }
        self.d.push(dj);
        self.struct_cols.push(j);
        self.n_struct += 1;
        self.n_struct - 1
    }
}

/// Solve a general LP by the two-phase method.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    // Map each original variable onto nonnegative internal columns.
    enum Map {
        Shift(usize, f64),
        Reflect(usize, f64),
        Split(usize, usize),
    }
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l.is_finite() {
            maps.push(Map::Shift(ncols, l));
            if u.is_finite() {
                bound_rows.push((ncols, u - l));
            }
            ncols += 1;
        } else if u.is_finite() {
            maps.push(Map::Reflect(ncols, u));
            ncols += 1;
        } else {
            maps.push(Map::Split(ncols, ncols + 1));
            ncols += 2;
        }
    }
    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        let c = lp.objective[j];
        match maps[j] {
            Map::Shift(k, _) => cost[k] = c,
            Map::Reflect(k, _) => cost[k] = -c,
            Map::Split(p, q) => {
                cost[p] = c;
                cost[q] = -c;
            }
        }
    }
    let mut rows = Vec::with_capacity(lp.rows.len() + bound_rows.len());
    let mut rhs = Vec::with_capacity(rows.capacity());
    let mut senses = Vec::with_capacity(rows.capacity());
    for (i, r) in lp.rows.iter().enumerate() {
        let mut row = vec![0.0; ncols];
        let mut b = lp.rhs[i];
        for j in 0..n {
            let a = r[j];
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                Map::Shift(k, l) => {
                    row[k] = a;
                    b -= a * l;
                }
                Map::Reflect(k, u) => {
                    row[k] = -a;
                    b -= a * u;
                }
                Map::Split(p, q) => {
                    row[p] = a;
                    row[q] = -a;
                }
            }
        }
        rows.push(row);
        rhs.push(b);
        senses.push(lp.senses[i]);
    }
    for &(k, ub) in &bound_rows {
        let mut row = vec![0.0; ncols];
        row[k] = 1.0;
        rows.push(row);
        rhs.push(ub);
        senses.push(Sense::Le);
    }
    let mut s = Simplex::new(&cost, &rows, &senses, &rhs);
    if !s.phase_one()? {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            duals: vec![0.0; lp.rows.len()],
            objective: f64::NAN,
            pivots: s.pivots,
        });
    }
    let outcome = s.run()?;
    let xi = s.primal();
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match maps[j] {
            Map::Shift(k, l) => l + xi[k],
            Map::Reflect(k, u) => u - xi[k],
            Map::Split(p, q) => xi[p] - xi[q],
        };
    }
    let mut duals = s.duals();
    duals.truncate(lp.rows.len());
    let status = match outcome {
        RunOutcome::Optimal => LpStatus::Optimal,
        RunOutcome::Unbounded => LpStatus::Unbounded,
    };
    let objective = match status {
        LpStatus::Optimal => lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum(),
        _ => f64::NEG_INFINITY,
    };
    Ok(LpSolution { status, x, duals, objective, pivots: s.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_single_variable() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = -1.0;
        lp.add_row(vec![1.0], Sense::Le, 3.0);
        let s = lp_solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_equality_point() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_row(vec![1.0, 1.0], Sense::Eq, 0.0);
        lp.add_row(vec![1.0, -1.0], Sense::Eq, 0.0);
        let s = lp_solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.x.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(vec![1.0], Sense::Ge, 2.0);
        lp.add_row(vec![1.0], Sense::Le, 1.0);
        assert_eq!(lp_solve(&lp).unwrap().status, LpStatus::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = -1.0;
        lp.add_row(vec![1.0], Sense::Ge, 2.0);
        assert_eq!(lp_solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, -1.0];
        lp.lower = vec![f64::NEG_INFINITY, -2.0];
        lp.upper = vec![f64::INFINITY, 5.0];
        lp.add_row(vec![1.0, 0.0], Sense::Ge, -4.0);
        let s = lp_solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 4.0).abs() < 1e-12);
        assert!((s.x[1] - 5.0).abs() < 1e-12);
        assert!((s.objective + 9.0).abs() < 1e-12);
    }
}
