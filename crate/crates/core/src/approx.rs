//! The subsampling approximation scheme.
//!
//! Row `i` of the grid samples every constraint independently with
//! probability `p = (1+ε)^-i` and solves the sample exactly, `t` times with
//! independent seeds. The candidate with the fewest violations on the full
//! constraint list wins; ties go to the smallest `(i, j)`.

use std::io::Write;
use std::sync::Arc;
use web_time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lptype::{solve_lptype, LpTypeProblem, SolverConfig, SolverStats};
use crate::metric::{factor_transform, ConstraintSet, MetricInstance, MetricMatrix, DEFAULT_FEAS_TOL};
use crate::parallel::{derive_seed, resolve_workers, run_tasks, GridTask, TaskGrid};
use crate::sdp::LinearFunctional;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LptmlConfig {
    pub epsilon: f64,
    /// Inner iterations per grid row.
    pub t: usize,
    /// Rank candidates by a sampled violation estimate and recount exactly
    /// only those that might beat the current best.
    pub approx_count: bool,
    /// `None` selects [`default_sample_size`].
    pub sample_size: Option<usize>,
    pub master_seed: u64,
    pub workers: usize,
    pub feas_tol: f64,
    pub move_to_front: bool,
    pub pivoting: bool,
    /// Stop after the first grid row that produced a candidate with no
    /// violations; later rows cannot win the tie-break against it.
    pub stop_at_zero: bool,
    /// Also report the best candidate among the first `c` iterations of
    /// every row, for each `c` listed here.
    pub checkpoints: Vec<usize>,
}

impl Default for LptmlConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            t: 2000,
            approx_count: false,
            sample_size: None,
            master_seed: 0,
            workers: 1,
            feas_tol: DEFAULT_FEAS_TOL,
            move_to_front: true,
            pivoting: true,
            stop_at_zero: true,
            checkpoints: Vec::new(),
        }
    }
}

impl LptmlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.t == 0 {
            return Err(Error::InvalidConfig("t must be at least 1".into()));
        }
        if self.sample_size == Some(0) {
            return Err(Error::InvalidConfig("sample size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if !(self.feas_tol >= 0.0) {
            return Err(Error::InvalidConfig("negative tolerance".into()));
        }
        Ok(())
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            move_to_front: self.move_to_front,
            pivoting: self.pivoting,
        }
    }
}

/// `max(100, ⌈4/ε² · ln(4/ε)⌉)`, capped at `n`.
pub fn default_sample_size(epsilon: f64, n: usize) -> usize {
    let s = (4.0 / (epsilon * epsilon) * (4.0 / epsilon).ln()).ceil() as usize;
    s.max(100).min(n.max(1))
}

/// Sampling rates `(1+ε)^-i` for `i = 0..=⌈log_{1+ε} n⌉`.
pub fn sampling_rates(epsilon: f64, n: usize) -> Vec<f64> {
    let rows = if n <= 1 {
        0
    } else {
        ((n as f64).ln() / (1.0 + epsilon).ln()).ceil() as usize
    };
    (0..=rows).map(|i| (1.0 + epsilon).powi(-(i as i32))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Optimal => "Optimal",
            CellStatus::Infeasible => "Infeasible",
            CellStatus::NumericalFailure => "NumericalFailure",
        }
    }
}

/// One grid cell. `violations` is exact unless `estimated` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub i: usize,
    pub j: usize,
    pub p: f64,
    pub seed: u64,
    pub sample_len: usize,
    pub violations: Option<usize>,
    pub estimated: bool,
    pub status: CellStatus,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iterations: usize,
    pub best: MetricMatrix,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LptmlResult {
    pub best: MetricMatrix,
    pub violations: usize,
    pub fraction: f64,
    /// Grid position `(i, j)` of the winner.
    pub best_cell: (usize, usize),
    pub grid: Vec<GridRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub stats: SolverStats,
    pub wall_time: f64,
    /// `reg(best)` for the regularized variant.
    pub reg_value: Option<f64>,
    /// `violations + η·reg(best)` for the regularized variant.
    pub cost: Option<f64>,
}

/// Keeps each element of `f` with probability `p`, in order.
pub fn subsample<R: Rng + ?Sized>(f: &[usize], p: f64, rng: &mut R) -> Vec<usize> {
    if p >= 1.0 {
        return f.to_vec();
    }
    f.iter().copied().filter(|_| rng.random::<f64>() < p).collect()
}

/// Fraction of a with-replacement sample of `f` that `a` violates.
pub fn approx_count_violations<R: Rng + ?Sized>(
    cs: &ConstraintSet,
    a: &DMatrix<f64>,
    f: &[usize],
    sample_size: usize,
    tol: f64,
    rng: &mut R,
) -> f64 {
    if f.is_empty() || sample_size == 0 {
        return 0.0;
    }
    let hits = (0..sample_size)
        .filter(|_| cs.violated(a, f[rng.random_range(0..f.len())], tol))
        .count();
    hits as f64 / sample_size as f64
}

struct CellOutput {
    status: CellStatus,
    matrix: Option<DMatrix<f64>>,
    estimate: Option<f64>,
    sample_len: usize,
    stats: SolverStats,
    seconds: f64,
}

fn solve_cell(inst: &MetricInstance, f: &[usize], task: &GridTask, cfg: &LptmlConfig, sample_size: usize) -> CellOutput {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let sample = subsample(f, task.p, &mut rng);
    let solved = inst
        .initial_basis(&sample)
        .and_then(|b0| solve_lptype(inst, &sample, b0, cfg.solver(), &mut rng));
    let (status, matrix, stats) = match solved {
        Ok((basis, stats)) => match basis.solution {
            Some(a) if basis.is_feasible() => (CellStatus::Optimal, Some(a), stats),
            _ => (CellStatus::Infeasible, None, stats),
        },
        Err(_) => (CellStatus::NumericalFailure, None, SolverStats::default()),
    };
    let estimate = match (&matrix, cfg.approx_count) {
        (Some(a), true) => Some(approx_count_violations(inst.constraints(), a, f, sample_size, cfg.feas_tol, &mut rng)),
        _ => None,
    };
    CellOutput {
        status,
        matrix,
        estimate,
        sample_len: sample.len(),
        stats,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Running minimum over candidates seen in `(i, j)` order.
#[derive(Clone)]
struct Best {
    limit: usize,
    found: Option<(usize, (usize, usize), DMatrix<f64>)>,
}

impl Best {
    fn offer(&mut self, count: usize, cell: (usize, usize), a: &DMatrix<f64>) {
        if cell.1 > self.limit {
            return;
        }
        if self.found.as_ref().is_none_or(|(c, _, _)| count < *c) {
            self.found = Some((count, cell, a.clone()));
        }
    }

    fn count(&self) -> Option<usize> {
        self.found.as_ref().map(|f| f.0)
    }
}

/// Hoeffding half-width of the violation estimate at confidence 99%.
fn estimate_margin(sample_size: usize) -> f64 {
    ((2.0f64 / 0.01).ln() / (2.0 * sample_size as f64)).sqrt()
}

fn run_scheme(inst: &MetricInstance, f: &[usize], cfg: &LptmlConfig, score: &dyn Fn(usize, &DMatrix<f64>) -> f64) -> Result<LptmlResult> {
    cfg.validate()?;
    if f.is_empty() {
        return Err(Error::InvalidConfig("empty constraint list".into()));
    }
    let started = Instant::now();
    let n = f.len();
    let rates = sampling_rates(cfg.epsilon, n);
    let workers = resolve_workers(cfg.workers);
    let grid = TaskGrid::new(cfg.master_seed, &rates, cfg.t, workers);
    let sample_size = cfg.sample_size.unwrap_or_else(|| default_sample_size(cfg.epsilon, n));
    let margin = estimate_margin(sample_size);
    let cs = inst.constraints();

    let mut best = Best { limit: cfg.t, found: None };
    let mut best_score = f64::INFINITY;
    let mut checkpoints: Vec<Best> = cfg
        .checkpoints
        .iter()
        .filter(|&&c| c >= 1)
        .map(|&c| Best { limit: c.min(cfg.t), found: None })
        .collect();
    let use_estimates = cfg.approx_count && checkpoints.is_empty();
    let mut records = Vec::with_capacity(grid.len());
    let mut stats = SolverStats::default();

    for row in grid.tasks.chunks(cfg.t) {
        // With p = 1 every iteration solves the full list, whose optimum is
        // unique, so one solve stands for the whole row.
        let first_only = row[0].p >= 1.0;
        let todo = if first_only { &row[..1] } else { row };
        let outputs = run_tasks(todo, workers, |task| solve_cell(inst, f, task, cfg, sample_size))?;
        for (k, task) in row.iter().enumerate() {
            let out = if first_only { &outputs[0] } else { &outputs[k] };
            let out = match out {
                Ok(o) => o,
                Err(_) => {
                    records.push(GridRecord {
                        i: task.i,
                        j: task.j,
                        p: task.p,
                        seed: task.seed,
                        sample_len: 0,
                        violations: None,
                        estimated: false,
                        status: CellStatus::NumericalFailure,
                        seconds: 0.0,
                    });
                    continue;
                }
            };
            if !first_only || k == 0 {
                stats.merge(&out.stats);
            }
            let cell = (task.i, task.j);
            let mut violations = None;
            let mut estimated = false;
            if let Some(a) = &out.matrix {
                let est = out.estimate.filter(|_| use_estimates);
                let prune = match (est, best.count()) {
                    (Some(e), Some(b)) => e - margin > b as f64 / n as f64,
                    _ => false,
                };
                if prune {
                    violations = est.map(|e| (e * n as f64).round() as usize);
                    estimated = true;
                } else {
                    let (count, _) = cs.count_violations(a, f, cfg.feas_tol);
                    violations = Some(count);
                    let s = score(count, a);
                    if s < best_score {
                        best_score = s;
                        best.found = Some((count, cell, a.clone()));
                    }
                    for c in &mut checkpoints {
                        c.offer(count, cell, a);
                    }
                }
            }
            records.push(GridRecord {
                i: task.i,
                j: task.j,
                p: task.p,
                seed: task.seed,
                sample_len: out.sample_len,
                violations,
                estimated,
                status: out.status,
                seconds: if first_only && k > 0 { 0.0 } else { out.seconds },
            });
        }
        let done = best.count() == Some(0) && checkpoints.iter().all(|c| c.count() == Some(0));
        if cfg.stop_at_zero && done {
            break;
        }
    }

    let (violations, best_cell, a) = best.found.ok_or(Error::AllSubproblemsFailed)?;
    let checkpoints = checkpoints
        .into_iter()
        .filter_map(|c| {
            let (count, _, a) = c.found?;
            Some(factor_transform(&a).map(|m| Checkpoint {
                iterations: c.limit,
                best: m,
                violations: count,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LptmlResult {
        best: factor_transform(&a)?,
        violations,
        fraction: violations as f64 / n as f64,
        best_cell,
        grid: records,
        checkpoints,
        stats,
        wall_time: started.elapsed().as_secs_f64(),
        reg_value: None,
        cost: None,
    })
}

fn instance_seed(master: u64) -> u64 {
    derive_seed(master, u64::MAX, u64::MAX)
}

/// Learns a metric for the constraints `f` (indices into `cs`).
pub fn lptml(f: &[usize], cs: Arc<ConstraintSet>, cfg: &LptmlConfig) -> Result<LptmlResult> {
    let mut inst = MetricInstance::shared(cs, instance_seed(cfg.master_seed))?;
    inst.feas_tol = cfg.feas_tol;
    run_scheme(&inst, f, cfg, &|count, _| count as f64)
}

/// Guess exponents `k` with `(1+ε)^k` spanning `[ε³, n³/ε]`.
pub fn regularization_guesses(epsilon: f64, n: usize) -> Vec<i32> {
    let base = (1.0 + epsilon).ln();
    let lo = (epsilon.powi(3)).ln() / base;
    let hi = ((n.max(1) as f64).powi(3) / epsilon).ln() / base;
    (lo.floor() as i32..=hi.ceil() as i32).collect()
}

/// Minimizes `violations + η·reg(A)` by running the scheme once per guess
/// of `reg(A)`, each time with `reg(A) ≤ (1+ε)^k` added to every SDP.
pub fn lptml_regularized(f: &[usize], cs: Arc<ConstraintSet>, cfg: &LptmlConfig, eta: f64, reg: &LinearFunctional) -> Result<LptmlResult> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig(format!("eta must be a non-negative number, got {eta}")));
    }
    let n = f.len();
    let coef_max = reg.coefficients().amax();
    if coef_max > (n.max(1) as f64).powi(3) {
        return Err(Error::InvalidConfig(format!("regularizer coefficient {coef_max} exceeds n³")));
    }
    if eta == 0.0 {
        let mut res = lptml(f, cs, cfg)?;
        let r = reg.eval(&res.best.a);
        res.reg_value = Some(r);
        res.cost = Some(res.violations as f64);
        return Ok(res);
    }
    let started = Instant::now();
    let mut best: Option<LptmlResult> = None;
    let mut stats = SolverStats::default();
    let mut grid = Vec::new();
    for k in regularization_guesses(cfg.epsilon, n) {
        let bound = (1.0 + cfg.epsilon).powi(k);
        let mut inst = MetricInstance::shared(Arc::clone(&cs), instance_seed(cfg.master_seed))?.with_side_constraint(reg.clone(), bound)?;
        inst.feas_tol = cfg.feas_tol;
        let mut sub = cfg.clone();
        sub.stop_at_zero = false;
        let score = |count: usize, a: &DMatrix<f64>| count as f64 + eta * reg.eval(a);
        let res = match run_scheme(&inst, f, &sub, &score) {
            Ok(r) => r,
            Err(Error::AllSubproblemsFailed) => continue,
            Err(e) => return Err(e),
        };
        stats.merge(&res.stats);
        grid.extend(res.grid.iter().cloned());
        let r = reg.eval(&res.best.a);
        let cost = res.violations as f64 + eta * r;
        if best.as_ref().is_none_or(|b| cost < b.cost.unwrap_or(f64::INFINITY)) {
            best = Some(LptmlResult {
                reg_value: Some(r),
                cost: Some(cost),
                ..res
            });
        }
    }
    let mut out = best.ok_or(Error::AllSubproblemsFailed)?;
    out.stats = stats;
    out.grid = grid;
    out.wall_time = started.elapsed().as_secs_f64();
    Ok(out)
}

/// Writes the grid as CSV: `i,j,p,violations,status,seconds`. Cells
/// without a feasible candidate leave `violations` empty.
pub fn write_grid_csv<W: Write>(grid: &[GridRecord], mut out: W) -> Result<()> {
    writeln!(out, "i,j,p,violations,status,seconds")?;
    for r in grid {
        let v = r.violations.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{:.6}", r.i, r.j, r.p, v, r.status.as_str(), r.seconds)?;
    }
    Ok(())
}
