use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{ConstraintSet, PairConstraint, PairKind};

/// Sampled index pairs, before thresholds are attached.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSample {
    pub similar: Vec<(usize, usize)>,
    pub dissimilar: Vec<(usize, usize)>,
}

impl PairSample {
    pub fn len(&self) -> usize {
        self.similar.len() + self.dissimilar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (PairKind, usize, usize)> + '_ {
        self.similar
            .iter()
            .map(|&(i, j)| (PairKind::Similar, i, j))
            .chain(self.dissimilar.iter().map(|&(i, j)| (PairKind::Dissimilar, i, j)))
    }
}

/// Same-label and cross-label pairs `(i, j)`, `i < j`. Pairs of identical
/// points carry no information and are left out of both pools.
pub fn pair_pools(ds: &LabeledDataset) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut sim = Vec::new();
    let mut dis = Vec::new();
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            if ds.points[i] == ds.points[j] {
                continue;
            }
            if ds.labels[i] == ds.labels[j] {
                sim.push((i, j));
            } else {
                dis.push((i, j));
            }
        }
    }
    (sim, dis)
}

fn draw<R: Rng>(pool: &[(usize, usize)], k: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if pool.is_empty() || k == 0 {
        return Vec::new();
    }
    if k <= pool.len() {
        let mut picked = index::sample(rng, pool.len(), k).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| pool[i]).collect()
    } else {
        (0..k).map(|_| pool[rng.random_range(0..pool.len())]).collect()
    }
}

/// `n_sim` same-label and `n_dis` cross-label pairs, uniformly without
/// replacement (with replacement when a pool is smaller than requested).
pub fn generate_constraints(ds: &LabeledDataset, n_sim: usize, n_dis: usize, seed: u64) -> Result<PairSample> {
    let (sim, dis) = pair_pools(ds);
    if sim.is_empty() && dis.is_empty() {
        return Err(Error::NotEnoughPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let similar = draw(&sim, n_sim, &mut rng);
    let dissimilar = draw(&dis, n_dis, &mut rng);
    Ok(PairSample { similar, dissimilar })
}

/// The default constraint counts: 500 of each kind, or the whole pool.
pub fn default_pair_counts(ds: &LabeledDataset) -> (usize, usize) {
    let (sim, dis) = pair_pools(ds);
    (sim.len().min(500), dis.len().min(500))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nearest-rank percentile of sorted values: the element of rank
/// `⌈q/100 · n⌉`.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// `(u, ℓ)`: the 90th and 10th nearest-rank percentiles of all pairwise
/// Euclidean distances.
pub fn compute_thresholds(ds: &LabeledDataset) -> Result<(f64, f64)> {
    if ds.len() < 2 {
        return Err(Error::InvalidDataset("need at least two points for thresholds".into()));
    }
    let mut d = Vec::with_capacity(ds.len() * (ds.len() - 1) / 2);
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            d.push(dist(&ds.points[i], &ds.points[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    Ok((nearest_rank(&d, 90.0), nearest_rank(&d, 10.0)))
}

/// Attaches the pairs of `sample` to the points of `ds`.
pub fn build_constraint_set(ds: &LabeledDataset, sample: &PairSample, u: f64, l: f64) -> Result<ConstraintSet> {
    let mut sim = Vec::with_capacity(sample.similar.len());
    let mut dis = Vec::with_capacity(sample.dissimilar.len());
    for (kind, i, j) in sample.iter() {
        if i >= ds.len() || j >= ds.len() {
            return Err(Error::InvalidConstraint(format!("pair ({i}, {j}) is out of range for {} points", ds.len())));
        }
        let c = PairConstraint::new(kind, ds.points[i].clone(), ds.points[j].clone())?.with_source(i, j);
        match kind {
            PairKind::Similar => sim.push(c),
            PairKind::Dissimilar => dis.push(c),
        }
    }
    ConstraintSet::new(ds.dim(), sim, dis, u, l)
}
