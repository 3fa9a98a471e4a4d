use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Principal directions of a dataset, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: DVector<f64>,
    /// One unit direction per row.
    pub components: DMatrix<f64>,
    /// Sample variance (divisor `n - 1`) along each direction.
    pub variances: Vec<f64>,
}

impl Pca {
    pub fn fit(ds: &LabeledDataset, k: usize) -> Result<Self> {
        let d = ds.dim();
        if k == 0 || k > d {
            return Err(Error::InvalidConfig(format!("target dimension must lie in 1..={d}, got {k}")));
        }
        let n = ds.len();
        let x = DMatrix::from_fn(n, d, |i, j| ds.points[i][j]);
        let mean = DVector::from_fn(d, |j, _| x.column(j).mean());
        let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
        let denom = (n.max(2) - 1) as f64;
        let cov = centered.transpose() * &centered / denom;
        let eig = SymmetricEigen::new((&cov + cov.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let mut components = DMatrix::zeros(k, d);
        let mut variances = Vec::with_capacity(k);
        for (r, &c) in order.iter().take(k).enumerate() {
            let mut v = eig.eigenvectors.column(c).into_owned();
            // sign: the largest-magnitude coordinate is positive
            let mut lead = 0;
            for i in 1..d {
                if v[i].abs() > v[lead].abs() {
                    lead = i;
                }
            }
            if v[lead] < 0.0 {
                v = -v;
            }
            components.set_row(r, &v.transpose());
            variances.push(eig.eigenvalues[c].max(0.0));
        }
        Ok(Self {
            mean,
            components,
            variances,
        })
    }

    pub fn transform(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        if ds.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: ds.dim(),
            });
        }
        let points = ds
            .points
            .iter()
            .map(|p| {
                let c = DVector::from_column_slice(p) - &self.mean;
                (&self.components * c).iter().copied().collect()
            })
            .collect();
        Ok(LabeledDataset {
            points,
            labels: ds.labels.clone(),
            name: format!("{}-pca{}", ds.name, self.components.nrows()),
        })
    }
}

/// Centers `ds` and projects it onto its top `k` principal directions.
pub fn pca_reduce(ds: &LabeledDataset, k: usize) -> Result<LabeledDataset> {
    Pca::fit(ds, k)?.transform(ds)
}
