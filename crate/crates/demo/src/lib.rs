//! Browser bindings: generate the two-Gaussian data, learn a metric on it,
//! and compute minimum enclosing balls of clicked points.

use std::sync::Arc;

use lptml::approx::{lptml, LptmlConfig};
use lptml::eval::cv::stratified_folds;
use lptml::eval::{self, knn_accuracy, LabeledDataset};
use lptml::io::ModelFile;
use lptml::meb::solve_meb;
use lptml::metric::MetricMatrix;
use lptml::parallel::derive_seed;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Serialize, Deserialize)]
pub struct Points {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

#[derive(Serialize)]
pub struct Learned {
    /// Row-major 2x2 matrices.
    pub a: Vec<f64>,
    pub g: Vec<f64>,
    pub transformed: Vec<Vec<f64>>,
    pub violations: usize,
    pub constraints: usize,
    pub identity_accuracy: f64,
    pub learned_accuracy: f64,
    pub seconds: f64,
}

#[derive(Serialize)]
pub struct Enclosing {
    pub center: Vec<f64>,
    pub radius: f64,
}

fn dataset_for(kind: &str, seed: u64) -> Result<LabeledDataset, String> {
    match kind {
        "synthetic" => Ok(eval::synth_two_gaussians(seed)),
        "poisoned" => Ok(eval::poison_dataset(&eval::synth_two_gaussians_raw(seed), seed)),
        _ => Err(format!("unknown dataset {kind:?}")),
    }
}

pub fn generate_json(kind: &str, seed: u64) -> Result<String, String> {
    let ds = dataset_for(kind, seed)?;
    let p = Points {
        points: ds.points,
        labels: ds.labels,
    };
    Ok(serde_json::to_string(&p).expect("serializable"))
}

/// Learns on one stratified half of the dataset and scores 4-NN on the
/// other half, with and without the learned metric.
pub fn learn_json(kind: &str, seed: u64, t: usize, pairs: usize) -> Result<String, String> {
    let started = web_time::Instant::now();
    let ds = dataset_for(kind, seed)?;
    let folds = stratified_folds(&ds, 2, derive_seed(seed, 0, 0)).map_err(|e| e.to_string())?;
    let train = ds.subset(&folds[1]);
    let test = ds.subset(&folds[0]);
    let (u, l) = eval::compute_thresholds(&train).map_err(|e| e.to_string())?;
    let sample = eval::generate_constraints(&train, pairs, pairs, derive_seed(seed, 1, 0)).map_err(|e| e.to_string())?;
    let cs = Arc::new(eval::build_constraint_set(&train, &sample, u, l).map_err(|e| e.to_string())?);
    let f = cs.all_indices();
    let cfg = LptmlConfig {
        t,
        master_seed: derive_seed(seed, 2, 0),
        workers: 1,
        ..LptmlConfig::default()
    };
    let res = lptml(&f, cs, &cfg).map_err(|e| e.to_string())?;
    let id = MetricMatrix::identity(2);
    let model = ModelFile::from_metric(&res.best, u, l);
    let out = Learned {
        a: model.a,
        g: model.g,
        transformed: ds.points.iter().map(|p| res.best.transform(p)).collect(),
        violations: res.violations,
        constraints: f.len(),
        identity_accuracy: knn_accuracy(&train, &test, &id.g, eval::DEFAULT_K).map_err(|e| e.to_string())?,
        learned_accuracy: knn_accuracy(&train, &test, &res.best.g, eval::DEFAULT_K).map_err(|e| e.to_string())?,
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

/// `points` is a JSON array of `[x, y]` pairs.
pub fn meb_json(points: &str) -> Result<String, String> {
    let pts: Vec<Vec<f64>> = serde_json::from_str(points).map_err(|e| e.to_string())?;
    let (center, radius) = solve_meb(&pts).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&Enclosing { center, radius }).expect("serializable"))
}

#[wasm_bindgen]
pub fn generate(kind: &str, seed: u32) -> Result<String, JsError> {
    generate_json(kind, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn learn(kind: &str, seed: u32, t: u32, pairs: u32) -> Result<String, JsError> {
    learn_json(kind, seed as u64, t as usize, pairs as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn enclosing_ball(points: &str) -> Result<String, JsError> {
    meb_json(points).map_err(|e| JsError::new(&e))
}
