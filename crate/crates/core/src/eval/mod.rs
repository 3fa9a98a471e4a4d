//! Datasets, constraint sampling, PCA, k-NN and cross-validation.

pub mod constraints;
pub mod cv;
pub mod dataset;
pub mod experiments;
pub mod knn;
pub mod pca;

pub use constraints::{build_constraint_set, compute_thresholds, generate_constraints, pair_pools, PairSample};
pub use cv::{cross_validate, train_metric, CvConfig, EvalReport, Learner, PairCounts, Trained};
pub use dataset::{iris, poison_dataset, synth_two_gaussians, synth_two_gaussians_raw, wine, LabeledDataset};
pub use knn::{knn_accuracy, knn_predict, DEFAULT_K};
pub use pca::{pca_reduce, Pca};
pub use experiments::{bench_dimensions, learning_curve, write_bench_csv, write_curve_csv, BenchRow, CurvePoint};
