//! Finite metric spaces, discrete measures, couplings and exact W1.

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Sense};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    Euclidean,
    Explicit,
}

/// Finite point set with a metric. Distances are stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    points: Vec<Vec<f64>>,
    mode: DistanceMode,
    dist: Vec<Vec<f64>>,
}

impl MetricSpace {
    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidMeasure("points must have dimension at least 1".into()));
        }
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidMeasure("points must be finite and share one dimension".into()));
        }
        let n = points.len();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        Ok(MetricSpace { points, mode: DistanceMode::Euclidean, dist })
    }

    /// Explicit distance matrix; symmetry, zero diagonal and the triangle
    /// inequality are checked with tolerance 1e-12.
    pub fn explicit(points: Vec<Vec<f64>>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if !points.is_empty() && points.len() != n {
            return Err(Error::SpaceMismatch(format!(
                "{} points but a {}x{} distance matrix",
                points.len(),
                n,
                n
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::SpaceMismatch(format!("distance matrix row {i} has length {}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidMeasure(format!("distance matrix row {i} has a negative or non-finite entry")));
            }
        }
        let tol = 1e-12;
        for i in 0..n {
            if matrix[i][i].abs() > tol {
                return Err(Error::InvalidMeasure(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                if (matrix[i][j] - matrix[j][i]).abs() > tol {
                    return Err(Error::InvalidMeasure(format!("distance matrix not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if matrix[i][k] > matrix[i][j] + matrix[j][k] + tol {
                        return Err(Error::InvalidMeasure(format!(
                            "triangle inequality fails for ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        let points = if points.is_empty() { (0..n).map(|i| vec![i as f64]).collect() } else { points };
        Ok(MetricSpace { points, mode: DistanceMode::Explicit, dist: matrix })
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn distance_matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }
}

/// Nonnegative weights, one per point of a shared metric space.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    space: Arc<MetricSpace>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(space: Arc<MetricSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} weights for {} points",
                weights.len(),
                space.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {i} is negative or not finite")));
        }
        Ok(DiscreteMeasure { space, weights })
    }

    pub fn zero(space: Arc<MetricSpace>) -> Self {
        let n = space.len();
        DiscreteMeasure { space, weights: vec![0.0; n] }
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn same_space(&self, other: &DiscreteMeasure) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }
}

/// Nonnegative matrix indexed by (source point, target point).
#[derive(Clone, Debug)]
pub struct Coupling {
    space: Arc<MetricSpace>,
    matrix: Vec<Vec<f64>>,
}

impl Coupling {
    pub fn new(space: Arc<MetricSpace>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::SpaceMismatch("coupling shape does not match the space".into()));
        }
        if matrix.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMeasure("coupling entries must be finite and nonnegative".into()));
        }
        Ok(Coupling { space, matrix })
    }

    pub fn zero(space: Arc<MetricSpace>) -> Self {
        let n = space.len();
        Coupling { space, matrix: vec![vec![0.0; n]; n] }
    }

    pub fn diagonal(measure: &DiscreteMeasure) -> Self {
        let n = measure.len();
        let mut matrix = vec![vec![0.0; n]; n];
        for i in 0..n {
            matrix[i][i] = measure.weights()[i];
        }
        Coupling { space: measure.space().clone(), matrix }
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.matrix.len();
        (0..n).map(|j| self.matrix.iter().map(|r| r[j]).sum()).collect()
    }

    /// Σ d(x,y) π(x,y).
    pub fn transport_cost(&self) -> f64 {
        let mut s = 0.0;
        for (i, r) in self.matrix.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                if *v != 0.0 {
                    s += v * self.space.distance(i, j);
                }
            }
        }
        s
    }
}

/// First and second marginal of a coupling.
pub fn marginals(pi: &Coupling) -> (DiscreteMeasure, DiscreteMeasure) {
    let first = DiscreteMeasure { space: pi.space.clone(), weights: pi.row_sums() };
    let second = DiscreteMeasure { space: pi.space.clone(), weights: pi.col_sums() };
    (first, second)
}

/// Balanced Kantorovich problem with cost d.
pub fn w1_distance(rho0: &DiscreteMeasure, rho1: &DiscreteMeasure) -> Result<(f64, Coupling)> {
    if rho0.space().is_empty() {
        return Err(Error::EmptySpace);
    }
    if !rho0.same_space(rho1) {
        return Err(Error::SpaceMismatch("measures live on different spaces".into()));
    }
    let (m0, m1) = (rho0.mass(), rho1.mass());
    if (m0 - m1).abs() > 1e-9 * m0.max(1.0) {
        return Err(Error::MassMismatch(m0, m1));
    }
    let space = rho0.space().clone();
    let n = space.len();
    let a = rho0.weights();
    let b = rho1.weights();
    let src: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let dst: Vec<usize> = (0..n).filter(|&j| b[j] > 0.0).collect();
    let mut plan = vec![vec![0.0; n]; n];
    if src.is_empty() || dst.is_empty() {
        return Ok((0.0, Coupling { space, matrix: plan }));
    }
    let scale = if m1 > 0.0 { m0 / m1 } else { 1.0 };
    let (ns, nd) = (src.len(), dst.len());
    let mut lp = LinearProgram::new(ns * nd);
    for (p, &i) in src.iter().enumerate() {
        for (q, &j) in dst.iter().enumerate() {
            lp.objective[p * nd + q] = space.distance(i, j);
        }
    }
    for (p, &i) in src.iter().enumerate() {
        let mut row = vec![0.0; ns * nd];
        for q in 0..nd {
            row[p * nd + q] = 1.0;
        }
        lp.add_row(row, Sense::Eq, a[i]);
    }
    for (q, &j) in dst.iter().enumerate() {
        let mut row = vec![0.0; ns * nd];
        for p in 0..ns {
            row[p * nd + q] = 1.0;
        }
        lp.add_row(row, Sense::Eq, b[j] * scale);
    }
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::LpFailure(format!("transport LP ended with status {:?}", sol.status)));
    }
    let mut value = 0.0;
    for (p, &i) in src.iter().enumerate() {
        for (q, &j) in dst.iter().enumerate() {
            let v = sol.x[p * nd + q];
            plan[i][j] = v;
            value += v * space.distance(i, j);
        }
    }
    Ok((value, Coupling { space, matrix: plan }))
}

/// On-disk measure format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub points: Vec<Vec<f64>>,
    pub metric: MetricSpec,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Named(String),
    Matrix { matrix: Vec<Vec<f64>> },
}

impl MeasureFile {
    pub fn into_measure(self) -> Result<DiscreteMeasure> {
        let space = match self.metric {
            MetricSpec::Named(ref s) if s == "euclidean" => MetricSpace::euclidean(self.points)?,
            MetricSpec::Named(s) => return Err(Error::InvalidMeasure(format!("unknown metric '{s}'"))),
            MetricSpec::Matrix { matrix } => {
                if matrix.len() != self.points.len() {
                    return Err(Error::SpaceMismatch(format!(
                        "{} points but {} distance matrix rows",
                        self.points.len(),
                        matrix.len()
                    )));
                }
                MetricSpace::explicit(self.points, matrix)?
            }
        };
        DiscreteMeasure::new(Arc::new(space), self.weights)
    }

    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        let metric = match m.space().mode() {
            DistanceMode::Euclidean => MetricSpec::Named("euclidean".into()),
            DistanceMode::Explicit => MetricSpec::Matrix { matrix: m.space().distance_matrix().to_vec() },
        };
        MeasureFile { points: m.space().points().to_vec(), metric, weights: m.weights().to_vec() }
    }
}

/// Read a measure from a JSON file.
pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    let text = std::fs::read_to_string(path)?;
    let file: MeasureFile = serde_json::from_str(&text)?;
    file.into_measure()
}

/// Read two measures and put them on one shared space.
pub fn load_measure_pair(p0: &Path, p1: &Path) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let a = load_measure(p0)?;
    let b = load_measure(p1)?;
    if a.len() != b.len() {
        return Err(Error::SpaceMismatch(format!("{} points versus {} points", a.len(), b.len())));
    }
    if *a.space() != *b.space() {
        return Err(Error::SpaceMismatch("the two measures use different point sets or metrics".into()));
    }
    let b = DiscreteMeasure::new(a.space().clone(), b.weights().to_vec())?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    #[test]
    fn single_route() {
        let s = line(&[0.0, 3.0]);
        let a = DiscreteMeasure::new(s.clone(), vec![2.0, 0.0]).unwrap();
        let b = DiscreteMeasure::new(s, vec![0.0, 2.0]).unwrap();
        let (v, plan) = w1_distance(&a, &b).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
        assert!((plan.get(0, 1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_of_small_matrix() {
        let s = line(&[0.0, 1.0]);
        let pi = Coupling::new(s, vec![vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let (f, g) = marginals(&pi);
        assert_eq!(f.weights(), &[3.0, 3.0]);
        assert_eq!(g.weights(), &[1.0, 5.0]);
    }

    #[test]
    fn explicit_metric_checks_triangle() {
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(matches!(MetricSpace::explicit(vec![], bad), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn mass_mismatch_is_reported() {
        let s = line(&[0.0, 1.0]);
        let a = DiscreteMeasure::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let b = DiscreteMeasure::new(s, vec![0.0, 2.0]).unwrap();
        assert!(matches!(w1_distance(&a, &b), Err(Error::MassMismatch(..))));
    }
}
