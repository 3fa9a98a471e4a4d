use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Neighborhood size used throughout the experiments.
pub const DEFAULT_K: usize = 4;

fn project(g: &DMatrix<f64>, pts: &[Vec<f64>]) -> Vec<DVector<f64>> {
    pts.iter().map(|p| g * DVector::from_column_slice(p)).collect()
}

/// Majority vote among the `k` nearest training points under `x ↦ Gx`.
/// Distance ties go to the lower training index; vote ties go to the
/// label with the smaller mean neighbor distance, then the smaller label.
pub fn knn_predict(train: &LabeledDataset, test: &LabeledDataset, g: &DMatrix<f64>, k: usize) -> Result<Vec<u32>> {
    if train.is_empty() {
        return Err(Error::InvalidDataset("empty training set".into()));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    for ds in [train, test] {
        if ds.dim() != g.ncols() {
            return Err(Error::DimensionMismatch {
                expected: g.ncols(),
                got: ds.dim(),
            });
        }
    }
    let tr = project(g, &train.points);
    let te = project(g, &test.points);
    let k = k.min(tr.len());
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(tr.len());
    Ok(te
        .iter()
        .map(|x| {
            order.clear();
            order.extend(tr.iter().enumerate().map(|(i, y)| ((x - y).norm(), i)));
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
            for &(dist, i) in &order[..k] {
                let e = votes.entry(train.labels[i]).or_insert((0, 0.0));
                e.0 += 1;
                e.1 += dist;
            }
            // BTreeMap iterates labels in increasing order, so strict
            // comparisons keep the smaller label on a full tie.
            let mut best: Option<(u32, usize, f64)> = None;
            for (&label, &(count, sum)) in &votes {
                let mean = sum / count as f64;
                let better = match best {
                    None => true,
                    Some((_, c, m)) => count > c || (count == c && mean < m),
                };
                if better {
                    best = Some((label, count, mean));
                }
            }
            best.expect("k >= 1 neighbors").0
        })
        .collect())
}

/// Fraction of `test` classified correctly.
pub fn knn_accuracy(train: &LabeledDataset, test: &LabeledDataset, g: &DMatrix<f64>, k: usize) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidDataset("empty test set".into()));
    }
    let pred = knn_predict(train, test, g, k)?;
    let hits = pred.iter().zip(&test.labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledDataset {
        LabeledDataset::new(
            vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![5.0, 5.0], vec![5.1, 5.0], vec![5.0, 5.2]],
            vec![0, 0, 1, 1, 1],
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn self_classification_with_one_neighbor() {
        let ds = toy();
        assert_eq!(knn_accuracy(&ds, &ds, &DMatrix::identity(2, 2), 1).unwrap(), 1.0);
    }

    #[test]
    fn zero_transform_uses_first_training_points() {
        let ds = toy();
        // all distances vanish: neighbors are indices 0..4 (labels 0,0,1,1),
        // the tie on votes and mean distance goes to label 0
        let pred = knn_predict(&ds, &ds, &DMatrix::zeros(2, 2), 4).unwrap();
        assert!(pred.iter().all(|&p| p == 0));
        assert_eq!(knn_accuracy(&ds, &ds, &DMatrix::zeros(2, 2), 4).unwrap(), 0.4);
    }

    #[test]
    fn vote_tie_prefers_closer_class() {
        let train = LabeledDataset::new(vec![vec![0.0], vec![3.0], vec![-1.0], vec![2.0]], vec![0, 0, 1, 1], "t").unwrap();
        let test = LabeledDataset::new(vec![vec![0.5]], vec![1], "q").unwrap();
        // label 0: distances 0.5, 2.5; label 1: 1.5, 1.5 -> means equal
        // (1.5 each) so the smaller label wins
        assert_eq!(knn_predict(&train, &test, &DMatrix::identity(1, 1), 4).unwrap(), vec![0]);
        let test = LabeledDataset::new(vec![vec![-0.2]], vec![1], "q").unwrap();
        // label 0: 0.2, 3.2 (1.7); label 1: 0.8, 2.2 (1.5)
        assert_eq!(knn_predict(&train, &test, &DMatrix::identity(1, 1), 4).unwrap(), vec![1]);
    }

    #[test]
    fn empty_inputs() {
        let ds = toy();
        let empty = LabeledDataset {
            points: vec![],
            labels: vec![],
            name: "e".into(),
        };
        assert!(knn_accuracy(&empty, &ds, &DMatrix::identity(2, 2), 4).is_err());
    }
}
