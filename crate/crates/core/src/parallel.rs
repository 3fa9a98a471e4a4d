//! Deterministic execution of independent grid tasks on a bounded pool.
//!
//! Each task carries a seed derived from the master seed and its `(i, j)`
//! position, so its result does not depend on which worker runs it or when.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that overrides the requested worker count.
pub const WORKERS_ENV: &str = "LPTML_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridTask {
    pub i: usize,
    pub j: usize,
    pub p: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskGrid {
    pub tasks: Vec<GridTask>,
    pub workers: usize,
}

impl TaskGrid {
    /// Row-major grid: row `i` has sampling rate `rates[i]` and columns
    /// `j = 1..=t`.
    pub fn new(master_seed: u64, rates: &[f64], t: usize, workers: usize) -> Self {
        let mut tasks = Vec::with_capacity(rates.len() * t);
        for (i, &p) in rates.iter().enumerate() {
            for j in 1..=t {
                tasks.push(GridTask {
                    i,
                    j,
                    p,
                    seed: derive_seed(master_seed, i as u64, j as u64),
                });
            }
        }
        Self {
            tasks,
            workers: workers.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of task `(i, j)`.
pub fn derive_seed(master: u64, i: u64, j: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ i) ^ j.rotate_left(32))
}

/// The requested worker count unless the environment overrides it.
pub fn resolve_workers(requested: usize) -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or(requested)
        .max(1)
}

/// Outcome of one task; a panic is captured instead of tearing down the
/// whole grid.
pub type TaskOutcome<T> = std::result::Result<T, String>;

fn guarded<T>(f: impl FnOnce() -> T) -> TaskOutcome<T> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        e.downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| e.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "task panicked".into())
    })
}

/// Runs `f` on every task and returns the outcomes in task order.
pub fn run_tasks<T, F>(tasks: &[GridTask], workers: usize, f: F) -> Result<Vec<TaskOutcome<T>>>
where
    T: Send,
    F: Fn(&GridTask) -> T + Sync,
{
    if workers <= 1 || tasks.len() <= 1 {
        return Ok(tasks.iter().map(|t| guarded(|| f(t))).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    Ok(pool.install(|| tasks.par_iter().map(|t| guarded(|| f(t))).collect()))
}

/// Runs the whole grid with its configured worker count.
pub fn run_grid<T, F>(grid: &TaskGrid, f: F) -> Result<Vec<TaskOutcome<T>>>
where
    T: Send,
    F: Fn(&GridTask) -> T + Sync,
{
    run_tasks(&grid.tasks, grid.workers, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_follow_task_order() {
        let grid = TaskGrid::new(9, &[1.0, 0.5], 3, 1);
        let out: Vec<u64> = run_grid(&grid, |t| t.seed).unwrap().into_iter().map(|r| r.unwrap()).collect();
        let expected: Vec<u64> = [(0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3)]
            .iter()
            .map(|&(i, j)| derive_seed(9, i, j))
            .collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let grid = TaskGrid::new(5, &[1.0; 10], 10, 1);
        let work = |t: &GridTask| {
            let mut x = t.seed;
            for _ in 0..1000 {
                x = splitmix64(x);
            }
            x
        };
        let a = run_grid(&grid, work).unwrap();
        let b = run_grid(&TaskGrid { workers: 8, ..grid.clone() }, work).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
    }

    #[test]
    fn panics_stay_inside_their_task() {
        let grid = TaskGrid::new(1, &[1.0], 4, 2);
        let out = run_grid(&grid, |t| {
            if t.j == 2 {
                panic!("boom");
            }
            t.j
        })
        .unwrap();
        assert_eq!(out[0], Ok(1));
        assert_eq!(out[1], Err("boom".to_string()));
        assert_eq!(out[3], Ok(4));
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..50 {
            for j in 1..=50 {
                assert!(seen.insert(derive_seed(3, i, j)));
            }
        }
    }
}
