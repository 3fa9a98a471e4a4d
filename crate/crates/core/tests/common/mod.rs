//! Instance generators and brute-force oracles shared by the integration
//! tests. Nothing here calls into the solvers under test.
#![allow(dead_code)]

use lptml::metric::{ConstraintSet, PairConstraint};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// A random PSD matrix `GᵀG` with Gaussian `G`.
pub fn random_psd<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.transpose() * g
}

/// `n` pairs that `planted` satisfies: similar pairs sit below the 60th
/// percentile of squared planted distance and dissimilar ones above the
/// 40th, with the overlap split at random.
pub fn planted_instance<R: Rng>(rng: &mut R, d: usize, n: usize) -> (ConstraintSet, DMatrix<f64>) {
    let a = random_psd(rng, d);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|_| (gaussian_vec(rng, d), gaussian_vec(rng, d))).collect();
    let q: Vec<f64> = pairs
        .iter()
        .map(|(p, r)| {
            let v = DVector::from_iterator(d, p.iter().zip(r).map(|(x, y)| x - y));
            (v.transpose() * &a * &v)[(0, 0)]
        })
        .collect();
    let mut sorted = q.clone();
    sorted.sort_by(f64::total_cmp);
    let u2 = sorted[(n * 6) / 10];
    let l2 = sorted[(n * 4) / 10];
    let mut sims = Vec::new();
    let mut dis = Vec::new();
    for ((p, r), &qi) in pairs.into_iter().zip(&q) {
        let can_sim = qi <= u2;
        let can_dis = qi >= l2;
        let sim = match (can_sim, can_dis) {
            (true, true) => rng.random_bool(0.5),
            (s, _) => s,
        };
        if sim {
            sims.push(PairConstraint::similar(p, r).unwrap());
        } else {
            dis.push(PairConstraint::dissimilar(p, r).unwrap());
        }
    }
    (ConstraintSet::new(d, sims, dis, u2.sqrt(), l2.sqrt()).unwrap(), a)
}

/// Scalar instance: similar pair `i` holds iff `a ≤ s_i`, dissimilar pair
/// `j` iff `a ≥ d_j`.
pub struct Scalar {
    pub cs: ConstraintSet,
    pub sim_limits: Vec<f64>,
    pub dis_limits: Vec<f64>,
}

pub fn scalar_instance<R: Rng>(rng: &mut R, n: usize) -> Scalar {
    let u: f64 = rng.random_range(1.5..3.0);
    let l: f64 = rng.random_range(0.5..1.5);
    let mut sims = Vec::new();
    let mut dis = Vec::new();
    let mut sim_limits = Vec::new();
    let mut dis_limits = Vec::new();
    for _ in 0..n {
        let p: f64 = rng.random_range(-5.0..5.0);
        let x: f64 = rng.random_range(0.2..5.0);
        if rng.random_bool(0.5) {
            sims.push(PairConstraint::similar(vec![p], vec![p + x]).unwrap());
        } else {
            dis.push(PairConstraint::dissimilar(vec![p], vec![p + x]).unwrap());
        }
    }
    for c in &sims {
        let x = c.difference()[0];
        sim_limits.push(u * u / (x * x));
    }
    for c in &dis {
        let x = c.difference()[0];
        dis_limits.push(l * l / (x * x));
    }
    Scalar {
        cs: ConstraintSet::new(1, sims, dis, u, l).unwrap(),
        sim_limits,
        dis_limits,
    }
}

impl Scalar {
    /// Violations at `a`, compared against the limits themselves.
    pub fn count_at(&self, a: f64) -> usize {
        self.sim_limits.iter().filter(|&&s| s < a).count() + self.dis_limits.iter().filter(|&&d| d > a).count()
    }

    fn candidates(&self) -> Vec<f64> {
        let mut c = vec![0.0];
        c.extend(&self.sim_limits);
        c.extend(&self.dis_limits);
        c
    }

    /// Fewest violations over all `a ≥ 0`: the count is piecewise constant
    /// and each piece's best value is attained at one of its breakpoints.
    pub fn opt(&self) -> usize {
        self.candidates().into_iter().map(|a| self.count_at(a)).min().unwrap()
    }

    /// Minimum of `count(a) + η·a`; on each piece the left breakpoint wins.
    pub fn reg_opt(&self, eta: f64) -> f64 {
        self.candidates()
            .into_iter()
            .map(|a| self.count_at(a) as f64 + eta * a)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Smallest enclosing ball by trying every subset of at most `d + 1`
/// points as the boundary.
pub fn brute_force_meb(pts: &[Vec<f64>]) -> f64 {
    let d = pts[0].len();
    let n = pts.len();
    let mut best = f64::INFINITY;
    let mut subset = Vec::new();
    fn rec(pts: &[Vec<f64>], d: usize, start: usize, subset: &mut Vec<usize>, best: &mut f64) {
        if !subset.is_empty() {
            if let Some((c, r)) = circumsphere(pts, subset) {
                if r < *best && pts.iter().all(|p| dist(p, &c) <= r * (1.0 + 1e-9) + 1e-12) {
                    *best = r;
                }
            }
        }
        if subset.len() == d + 1 {
            return;
        }
        for i in start..pts.len() {
            subset.push(i);
            rec(pts, d, i + 1, subset, best);
            subset.pop();
        }
    }
    rec(pts, d, 0, &mut subset, &mut best);
    assert!(best.is_finite() && n > 0);
    best
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Center in the affine hull of the chosen points, equidistant to all.
fn circumsphere(pts: &[Vec<f64>], idx: &[usize]) -> Option<(Vec<f64>, f64)> {
    let p0 = &pts[idx[0]];
    let k = idx.len() - 1;
    if k == 0 {
        return Some((p0.clone(), 0.0));
    }
    let d = p0.len();
    // c = p0 + Σ λ_j (p_j − p0), with 2 (p_i − p0)·(c − p0) = |p_i − p0|²
    let vs: Vec<Vec<f64>> = idx[1..].iter().map(|&i| (0..d).map(|t| pts[i][t] - p0[t]).collect()).collect();
    let m = DMatrix::from_fn(k, k, |i, j| 2.0 * vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum::<f64>());
    let rhs = DVector::from_fn(k, |i, _| vs[i].iter().map(|a| a * a).sum::<f64>());
    let lu = m.lu();
    if lu.determinant().abs() < 1e-12 {
        return None;
    }
    let lam = lu.solve(&rhs)?;
    let c: Vec<f64> = (0..d).map(|t| p0[t] + (0..k).map(|j| lam[j] * vs[j][t]).sum::<f64>()).collect();
    let r = dist(&c, p0);
    Some((c, r))
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect()).collect()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new((a + a.transpose()) * 0.5).eigenvalues.min()
}
