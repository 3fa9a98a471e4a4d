use std::sync::Arc;
use web_time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::constraints::{build_constraint_set, compute_thresholds, generate_constraints, pair_pools};
use super::dataset::LabeledDataset;
use super::knn::{knn_accuracy, DEFAULT_K};
use crate::approx::{lptml, lptml_regularized, LptmlConfig, LptmlResult};
use crate::error::{Error, Result};
use crate::metric::MetricMatrix;
use crate::parallel::derive_seed;
use crate::sdp::LinearFunctional;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learner {
    /// Plain Euclidean distance.
    Identity,
    Lptml(LptmlConfig),
    /// Regularized by the trace with weight `eta`.
    LptmlTrace { cfg: LptmlConfig, eta: f64 },
}

impl Learner {
    pub fn name(&self) -> &'static str {
        match self {
            Learner::Identity => "identity",
            Learner::Lptml(_) => "lptml",
            Learner::LptmlTrace { .. } => "lptml-trace",
        }
    }

    fn config(&self) -> Option<&LptmlConfig> {
        match self {
            Learner::Identity => None,
            Learner::Lptml(c) | Learner::LptmlTrace { cfg: c, .. } => Some(c),
        }
    }
}

/// How constraints are drawn from a training set. `None` counts mean
/// `min(500, pool size)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub n_sim: Option<usize>,
    pub n_dis: Option<usize>,
}

/// A learned metric together with the training outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub metric: MetricMatrix,
    pub u: f64,
    pub l: f64,
    pub violations: usize,
    pub constraints: usize,
    /// The learner failed on every subproblem and the identity was used.
    pub fallback: bool,
    pub result: Option<LptmlResult>,
}

/// Thresholds and constraints from `train`, then the learner.
pub fn train_metric(train: &LabeledDataset, learner: &Learner, counts: PairCounts, seed: u64) -> Result<Trained> {
    let d = train.dim();
    let (u, l) = compute_thresholds(train)?;
    let Some(cfg) = learner.config() else {
        return Ok(Trained {
            metric: MetricMatrix::identity(d),
            u,
            l,
            violations: 0,
            constraints: 0,
            fallback: false,
            result: None,
        });
    };
    let (sim_pool, dis_pool) = pair_pools(train);
    let n_sim = counts.n_sim.unwrap_or(sim_pool.len().min(500));
    let n_dis = counts.n_dis.unwrap_or(dis_pool.len().min(500));
    let pairs = generate_constraints(train, n_sim, n_dis, derive_seed(seed, 1, 0))?;
    let cs = Arc::new(build_constraint_set(train, &pairs, u, l)?);
    let f = cs.all_indices();
    let mut cfg = cfg.clone();
    cfg.master_seed = derive_seed(seed, 2, 0);
    let res = match learner {
        Learner::LptmlTrace { eta, .. } => lptml_regularized(&f, Arc::clone(&cs), &cfg, *eta, &LinearFunctional::trace(d)),
        _ => lptml(&f, Arc::clone(&cs), &cfg),
    };
    match res {
        Ok(r) => Ok(Trained {
            metric: r.best.clone(),
            u,
            l,
            violations: r.violations,
            constraints: f.len(),
            fallback: false,
            result: Some(r),
        }),
        Err(Error::AllSubproblemsFailed) => {
            let id = DMatrix::identity(d, d);
            Ok(Trained {
                metric: MetricMatrix::identity(d),
                u,
                l,
                violations: cs.count_violations(&id, &f, cfg.feas_tol).0,
                constraints: f.len(),
                fallback: true,
                result: None,
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub k: usize,
    pub counts: PairCounts,
    pub learner: Learner,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 2,
            repeats: 1,
            seed: 0,
            k: DEFAULT_K,
            counts: PairCounts::default(),
            learner: Learner::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub learner: String,
    pub accuracy_mean: f64,
    /// Population standard deviation over all folds of all repeats.
    pub accuracy_std: f64,
    pub fold_accuracies: Vec<f64>,
    /// Violated fraction of each fold's training constraints.
    pub fold_violated_fractions: Vec<f64>,
    pub fallbacks: usize,
    pub k: usize,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub t: Option<usize>,
    pub epsilon: Option<f64>,
    pub wall_time: f64,
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Stratified assignment of every point to one of `folds` folds: each
/// class is shuffled and dealt round-robin.
pub fn stratified_folds(ds: &LabeledDataset, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("need at least two folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut offset = 0;
    for (label, count) in ds.class_counts() {
        if count < folds {
            return Err(Error::InvalidDataset(format!("class {label} has {count} points, fewer than {folds} folds")));
        }
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == label).collect();
        members.shuffle(&mut rng);
        for (r, i) in members.into_iter().enumerate() {
            out[(r + offset) % folds].push(i);
        }
        offset += count;
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Repeated stratified cross-validation: learn on all folds but one,
/// classify the held-out fold against the training points.
pub fn cross_validate(ds: &LabeledDataset, cfg: &CvConfig) -> Result<EvalReport> {
    let started = Instant::now();
    let mut accs = Vec::new();
    let mut fracs = Vec::new();
    let mut fallbacks = 0;
    for rep in 0..cfg.repeats.max(1) {
        let folds = stratified_folds(ds, cfg.folds, derive_seed(cfg.seed, rep as u64, 0))?;
        for (f, test_idx) in folds.iter().enumerate() {
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let train = ds.subset(&train_idx);
            let test = ds.subset(test_idx);
            let trained = train_metric(&train, &cfg.learner, cfg.counts, derive_seed(cfg.seed, rep as u64, f as u64 + 1))?;
            if trained.fallback {
                fallbacks += 1;
            }
            accs.push(knn_accuracy(&train, &test, &trained.metric.g, cfg.k)?);
            if trained.constraints > 0 {
                fracs.push(trained.violations as f64 / trained.constraints as f64);
            }
        }
    }
    let (mean, std) = mean_std(&accs);
    let lc = cfg.learner.config();
    Ok(EvalReport {
        dataset: ds.name.clone(),
        learner: cfg.learner.name().into(),
        accuracy_mean: mean,
        accuracy_std: std,
        fold_accuracies: accs,
        fold_violated_fractions: fracs,
        fallbacks,
        k: cfg.k,
        folds: cfg.folds,
        repeats: cfg.repeats.max(1),
        seed: cfg.seed,
        t: lc.map(|c| c.t),
        epsilon: lc.map(|c| c.epsilon),
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_halves() {
        let ds = super::super::dataset::iris();
        let folds = stratified_folds(&ds, 2, 1).unwrap();
        assert_eq!(folds[0].len() + folds[1].len(), 150);
        for f in &folds {
            let sub = ds.subset(f);
            for (_, c) in sub.class_counts() {
                assert!(c == 25 || c == 24 || c == 26);
            }
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());
    }

    #[test]
    fn identity_on_separated_classes() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![if i < 10 { i as f64 * 0.1 } else { 100.0 + i as f64 * 0.1 }]).collect();
        let labels = (0..20).map(|i| (i >= 10) as u32).collect();
        let ds = LabeledDataset::new(pts, labels, "sep").unwrap();
        let cfg = CvConfig { repeats: 3, ..Default::default() };
        let rep = cross_validate(&ds, &cfg).unwrap();
        assert_eq!(rep.accuracy_mean, 1.0);
        assert_eq!(rep.fold_accuracies.len(), 6);
        assert_eq!(rep, EvalReport { wall_time: rep.wall_time, ..cross_validate(&ds, &cfg).unwrap() });
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
