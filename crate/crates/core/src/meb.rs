//! Minimum enclosing ball as an LP-type problem.
//!
//! Constraints are the points; the optimum of a subset is its smallest
//! enclosing ball and the value is the radius. Used to exercise the solver
//! on a problem with a closed-form basis computation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lptype::{solve_lptype, Basis, LpTypeProblem, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64], rel_tol: f64) -> bool {
        dist(&self.center, p) <= self.radius * (1.0 + rel_tol) + rel_tol
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest ball with every point of `pts` on its boundary, centered in
/// their affine hull. `None` for affinely dependent points.
pub fn circumball(pts: &[&[f64]]) -> Option<Ball> {
    let p0 = pts.first()?;
    let k = pts.len() - 1;
    if k == 0 {
        return Some(Ball {
            center: p0.to_vec(),
            radius: 0.0,
        });
    }
    let diffs: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(p0.iter()).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let m = DMatrix::from_fn(k, k, |i, j| 2.0 * dot(&diffs[i], &diffs[j]));
    let rhs = DVector::from_fn(k, |i, _| dot(&diffs[i], &diffs[i]));
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let lu = m.lu();
    let det = lu.determinant();
    if det.abs() <= 1e-12 * scale.powi(k as i32) {
        return None;
    }
    let lambda = lu.solve(&rhs)?;
    let mut center = p0.to_vec();
    for (j, d) in diffs.iter().enumerate() {
        for (c, x) in center.iter_mut().zip(d) {
            *c += lambda[j] * x;
        }
    }
    let radius = dist(&center, p0);
    Some(Ball { center, radius })
}

/// Points in `R^d` as LP-type constraints.
#[derive(Debug, Clone)]
pub struct MebInstance {
    points: Vec<Vec<f64>>,
    dim: usize,
}

const CONTAIN_TOL: f64 = 1e-10;

impl MebInstance {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::MalformedProblem("no points".into()))?;
        if dim == 0 {
            return Err(Error::MalformedProblem("zero-dimensional points".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedProblem("non-finite coordinate".into()));
            }
        }
        Ok(Self { points, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Smallest enclosing ball of a handful of points by enumerating the
    /// subsets that could span its boundary.
    fn small_meb(&self, idx: &[usize]) -> Basis<Ball> {
        let n = idx.len();
        let mut best: Option<(Vec<usize>, Ball)> = None;
        for mask in 1u32..(1u32 << n) {
            let subset: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| idx[b]).collect();
            if subset.len() > self.dim + 1 {
                continue;
            }
            let pts: Vec<&[f64]> = subset.iter().map(|&i| self.points[i].as_slice()).collect();
            let Some(ball) = circumball(&pts) else { continue };
            if !idx.iter().all(|&i| ball.contains(&self.points[i], CONTAIN_TOL)) {
                continue;
            }
            let better = match &best {
                None => true,
                Some((s, b)) => ball.radius < b.radius - 1e-12 || (ball.radius <= b.radius + 1e-12 && subset.len() < s.len()),
            };
            if better {
                best = Some((subset, ball));
            }
        }
        let (constraints, ball) = best.expect("a single point is always its own ball");
        Basis::feasible(constraints, ball.radius, ball)
    }
}

impl LpTypeProblem for MebInstance {
    type Solution = Ball;

    fn num_constraints(&self) -> usize {
        self.points.len()
    }

    fn max_basis_size(&self) -> usize {
        self.dim + 1
    }

    fn initial_basis(&self, constraints: &[usize]) -> Result<Basis<Ball>> {
        let &first = constraints
            .first()
            .ok_or_else(|| Error::MalformedProblem("empty point set".into()))?;
        Ok(Basis::feasible(
            vec![first],
            0.0,
            Ball {
                center: self.points[first].clone(),
                radius: 0.0,
            },
        ))
    }

    fn violates(&self, basis: &Basis<Ball>, h: usize) -> Result<bool> {
        Ok(match &basis.solution {
            Some(ball) => !ball.contains(&self.points[h], CONTAIN_TOL),
            None => false,
        })
    }

    fn violation_magnitude(&self, ball: &Ball, h: usize) -> f64 {
        dist(&ball.center, &self.points[h]) - ball.radius
    }

    fn basis_computation(&self, basis: &Basis<Ball>, h: usize) -> Result<Basis<Ball>> {
        let mut idx = basis.constraints.clone();
        if !idx.contains(&h) {
            idx.push(h);
        }
        Ok(self.small_meb(&idx))
    }

    fn solution_of_basis(&self, constraints: &[usize]) -> Result<Basis<Ball>> {
        if constraints.is_empty() {
            return Err(Error::MalformedProblem("empty point set".into()));
        }
        Ok(self.small_meb(constraints))
    }

    fn tight_optimum(&self, forced: &[usize]) -> Result<Basis<Ball>> {
        let pts: Vec<&[f64]> = forced.iter().map(|&i| self.points[i].as_slice()).collect();
        let ball = circumball(&pts).ok_or_else(|| Error::NumericalFailure("affinely dependent boundary points".into()))?;
        Ok(Basis::feasible(forced.to_vec(), ball.radius, ball))
    }
}

/// Center and radius of the smallest ball enclosing `points`.
pub fn solve_meb(points: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let inst = MebInstance::new(points.to_vec())?;
    let all: Vec<usize> = (0..points.len()).collect();
    let start = inst.initial_basis(&all)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_62);
    let (basis, _) = solve_lptype(&inst, &all, start, SolverConfig::default(), &mut rng)?;
    let ball = basis
        .solution
        .ok_or_else(|| Error::NumericalFailure("enclosing ball".into()))?;
    Ok((ball.center, ball.radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let (c, r) = solve_meb(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn diameter_pair() {
        let (c, r) = solve_meb(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn right_triangle() {
        let (c, r) = solve_meb(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_dimensional_points() {
        let pts = vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, -1.0],
            vec![0.1, 0.2, 0.3],
        ];
        let (c, r) = solve_meb(&pts).unwrap();
        assert!((r - 1.0).abs() < 1e-9, "{r}");
        assert!(c.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_meb(&[]).is_err());
        assert!(solve_meb(&[vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(solve_meb(&[vec![f64::NAN]]).is_err());
    }
}
