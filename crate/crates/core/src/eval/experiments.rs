use std::io::Write;
use std::sync::Arc;
use web_time::Instant;

use serde::{Deserialize, Serialize};

use super::constraints::{build_constraint_set, compute_thresholds, generate_constraints, pair_pools};
use super::cv::{stratified_folds, PairCounts};
use super::dataset::LabeledDataset;
use super::knn::knn_accuracy;
use super::pca::pca_reduce;
use crate::approx::{lptml, LptmlConfig};
use crate::error::{Error, Result};
use crate::metric::ConstraintSet;
use crate::parallel::derive_seed;

fn constraints_for(train: &LabeledDataset, counts: PairCounts, seed: u64) -> Result<Arc<ConstraintSet>> {
    let (u, l) = compute_thresholds(train)?;
    let (sp, dp) = pair_pools(train);
    let pairs = generate_constraints(
        train,
        counts.n_sim.unwrap_or(sp.len().min(500)),
        counts.n_dis.unwrap_or(dp.len().min(500)),
        seed,
    )?;
    Ok(Arc::new(build_constraint_set(train, &pairs, u, l)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iterations: usize,
    pub violated_fraction: f64,
    pub accuracy: f64,
}

/// Quality against the iteration budget: one stratified half trains, the
/// other is classified, once per entry of `iterations`.
pub fn learning_curve(ds: &LabeledDataset, cfg: &LptmlConfig, iterations: &[usize], counts: PairCounts, k: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    if iterations.is_empty() {
        return Err(Error::InvalidConfig("no checkpoints requested".into()));
    }
    let folds = stratified_folds(ds, 2, derive_seed(seed, 0, 0))?;
    let train = ds.subset(&folds[1]);
    let test = ds.subset(&folds[0]);
    let cs = constraints_for(&train, counts, derive_seed(seed, 1, 0))?;
    let f = cs.all_indices();
    let mut cfg = cfg.clone();
    cfg.master_seed = derive_seed(seed, 2, 0);
    cfg.t = cfg.t.max(*iterations.iter().max().expect("non-empty"));
    cfg.checkpoints = iterations.to_vec();
    let res = lptml(&f, cs, &cfg)?;
    res.checkpoints
        .iter()
        .map(|c| {
            Ok(CurvePoint {
                iterations: c.iterations,
                violated_fraction: c.violations as f64 / f.len() as f64,
                accuracy: knn_accuracy(&train, &test, &c.best.g, k)?,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], mut out: W) -> Result<()> {
    writeln!(out, "iterations,violated_fraction,accuracy")?;
    for p in points {
        writeln!(out, "{},{},{}", p.iterations, p.violated_fraction, p.accuracy)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub d: usize,
    pub seconds: Vec<f64>,
    pub median: f64,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Training time of the scheme after projecting `ds` onto its top `d`
/// principal directions, for each `d` in `dims`.
pub fn bench_dimensions(ds: &LabeledDataset, dims: &[usize], runs: usize, cfg: &LptmlConfig, counts: PairCounts, seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(dims.len());
    for &d in dims {
        let red = pca_reduce(ds, d)?;
        let mut seconds = Vec::with_capacity(runs);
        for run in 0..runs.max(1) {
            let cs = constraints_for(&red, counts, derive_seed(seed, d as u64, run as u64))?;
            let f = cs.all_indices();
            let mut cfg = cfg.clone();
            cfg.master_seed = derive_seed(derive_seed(seed, 2, 0), d as u64, run as u64);
            let started = Instant::now();
            lptml(&f, cs, &cfg)?;
            seconds.push(started.elapsed().as_secs_f64());
        }
        rows.push(BenchRow {
            d,
            median: median(&seconds),
            seconds,
        });
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    writeln!(out, "d,runs,median_seconds")?;
    for r in rows {
        writeln!(out, "{},{},{:.6}", r.d, r.seconds.len(), r.median)?;
    }
    Ok(())
}
