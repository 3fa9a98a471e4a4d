//! Randomized incremental solver for LP-type problems.
//!
//! A problem exposes its constraints as indices `0..n` and the basic
//! operations: an initial basis, a violation test against the optimum of a
//! basis, a basis computation for `B ∪ {h}`, and the optimum of a forced set
//! with every member held tight. [`solve_lptype`] runs the two-call
//! recursion: solve without `h`; if the result violates `h`, solve again with
//! `h` added to the forced set. The random choice of `h` is realized by
//! shuffling the constraint list once and consuming it in order; move-to-front
//! and pivoting reorder that list as violations are found.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A basis: a constraint subset together with its optimum.
///
/// `value` is `+inf` when the subset is infeasible, in which case
/// `solution` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis<S> {
    pub constraints: Vec<usize>,
    pub value: f64,
    pub solution: Option<S>,
}

impl<S> Basis<S> {
    pub fn feasible(constraints: Vec<usize>, value: f64, solution: S) -> Self {
        Self {
            constraints,
            value,
            solution: Some(solution),
        }
    }

    pub fn infeasible(constraints: Vec<usize>) -> Self {
        Self {
            constraints,
            value: f64::INFINITY,
            solution: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.solution.is_some() && self.value < f64::INFINITY
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// The oracle interface consumed by the solver.
///
/// Implementations must be deterministic; an instance may be shared across
/// threads and solved concurrently.
pub trait LpTypeProblem {
    type Solution: Clone;

    fn num_constraints(&self) -> usize;

    /// Combinatorial dimension: no basis is larger than this.
    fn max_basis_size(&self) -> usize;

    /// (B0) Any basis of a subset of `constraints`.
    fn initial_basis(&self, constraints: &[usize]) -> Result<Basis<Self::Solution>>;

    /// (B1) Whether the optimum of `basis` violates constraint `h`.
    fn violates(&self, basis: &Basis<Self::Solution>, h: usize) -> Result<bool>;

    /// How badly `solution` violates `h`; positive when violated. Used by
    /// the pivoting heuristic.
    fn violation_magnitude(&self, solution: &Self::Solution, h: usize) -> f64;

    /// (B2) A basis of `basis ∪ {h}`.
    fn basis_computation(&self, basis: &Basis<Self::Solution>, h: usize) -> Result<Basis<Self::Solution>>;

    /// Optimum and value of a small constraint set (at most
    /// `max_basis_size() + 1` elements).
    fn solution_of_basis(&self, constraints: &[usize]) -> Result<Basis<Self::Solution>>;

    /// Optimum of `forced` with every constraint holding with equality.
    /// Returns an infeasible basis when no such solution exists.
    fn tight_optimum(&self, forced: &[usize]) -> Result<Basis<Self::Solution>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub move_to_front: bool,
    pub pivoting: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            move_to_front: true,
            pivoting: true,
        }
    }
}

impl SolverConfig {
    /// Plain recursion without reordering heuristics.
    pub fn plain() -> Self {
        Self {
            move_to_front: false,
            pivoting: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SolverStats {
    pub violation_tests: u64,
    pub basis_computations: u64,
    pub recursion_depth_max: u64,
}

impl SolverStats {
    pub fn merge(&mut self, other: &SolverStats) {
        self.violation_tests += other.violation_tests;
        self.basis_computations += other.basis_computations;
        self.recursion_depth_max = self.recursion_depth_max.max(other.recursion_depth_max);
    }
}

/// Returns `order` with `violated` moved to the front, the rest in their
/// original relative order.
pub fn move_to_front(order: &[usize], violated: usize) -> Result<Vec<usize>> {
    let pos = order
        .iter()
        .position(|&c| c == violated)
        .ok_or(Error::NotFound(violated))?;
    let mut out = order.to_vec();
    out[..=pos].rotate_right(1);
    Ok(out)
}

/// The candidate violated the most by `solution`; ties go to the lowest
/// constraint index.
pub fn pick_pivot<P: LpTypeProblem + ?Sized>(problem: &P, solution: &P::Solution, candidates: &[usize]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &c in candidates {
        let m = problem.violation_magnitude(solution, c);
        best = match best {
            None => Some((c, m)),
            Some((bc, bm)) if m > bm || (m == bm && c < bc) => Some((c, m)),
            keep => keep,
        };
    }
    best.map(|(c, _)| c).ok_or(Error::EmptyCandidates)
}

struct Run<'a, P: LpTypeProblem + ?Sized> {
    problem: &'a P,
    order: Vec<usize>,
    config: SolverConfig,
    stats: SolverStats,
    depth_limit: usize,
}

impl<P: LpTypeProblem + ?Sized> Run<'_, P> {
    fn test(&mut self, basis: &Basis<P::Solution>, h: usize) -> Result<bool> {
        self.stats.violation_tests += 1;
        self.problem.violates(basis, h)
    }

    fn base(&mut self, forced: &[usize]) -> Result<Basis<P::Solution>> {
        if forced.len() > self.depth_limit {
            return Err(Error::RecursionGuardExceeded {
                size: forced.len(),
                limit: self.depth_limit,
            });
        }
        self.stats.basis_computations += 1;
        self.stats.recursion_depth_max = self.stats.recursion_depth_max.max(forced.len() as u64);
        self.problem.tight_optimum(forced)
    }

    /// Optimum of `order[..prefix]` with `forced` tight, starting from
    /// `current`, the optimum of the forced set alone.
    fn recurse(&mut self, prefix: usize, forced: &mut Vec<usize>, mut current: Basis<P::Solution>) -> Result<Basis<P::Solution>> {
        for i in 0..prefix {
            let h = self.order[i];
            if !self.test(&current, h)? {
                continue;
            }
            forced.push(h);
            let base = self.base(forced)?;
            current = if base.is_feasible() {
                self.recurse(i, forced, base)?
            } else {
                base
            };
            forced.pop();
            if !current.is_feasible() {
                return Ok(current);
            }
            if self.config.move_to_front {
                self.order[..=i].rotate_right(1);
            }
        }
        Ok(current)
    }

    fn pivot_loop(&mut self, mut current: Basis<P::Solution>, mut settled: usize) -> Result<Basis<P::Solution>> {
        loop {
            let mut violated = Vec::new();
            for pos in settled..self.order.len() {
                let h = self.order[pos];
                if self.test(&current, h)? {
                    violated.push(h);
                }
            }
            if violated.is_empty() {
                return Ok(current);
            }
            let solution = current
                .solution
                .as_ref()
                .expect("feasible basis carries a solution");
            let h = pick_pivot(self.problem, solution, &violated)?;
            let pos = settled
                + self.order[settled..]
                    .iter()
                    .position(|&c| c == h)
                    .expect("pivot comes from the unsettled tail");
            let mut forced = vec![h];
            let base = self.base(&forced)?;
            if !base.is_feasible() {
                return Ok(base);
            }
            current = self.recurse(settled, &mut forced, base)?;
            if !current.is_feasible() {
                return Ok(current);
            }
            self.order[..=pos].rotate_right(1);
            settled += 1;
        }
    }
}

/// Solves `F ∪ B` where `start` is a basis of `B` (usually the problem's
/// initial basis for `F`). Returns a basis whose optimum satisfies every
/// constraint of `constraints`, or an infeasible basis if `F ∪ B` has no
/// solution. The returned constraints are the forced set that produced the
/// optimum; all of them are tight there.
///
/// The recursion guard trips when more than `max_basis_size() + 1`
/// constraints would be forced at once.
pub fn solve_lptype<P, R>(
    problem: &P,
    constraints: &[usize],
    start: Basis<P::Solution>,
    config: SolverConfig,
    rng: &mut R,
) -> Result<(Basis<P::Solution>, SolverStats)>
where
    P: LpTypeProblem + ?Sized,
    R: Rng + ?Sized,
{
    // The start basis goes first: its optimum is the optimum of that prefix.
    let mut rest: Vec<usize> = constraints
        .iter()
        .copied()
        .filter(|c| !start.constraints.contains(c))
        .collect();
    rest.shuffle(rng);
    let mut order = start.constraints.clone();
    let settled = order.len();
    order.extend(rest);

    let mut run = Run {
        problem,
        order,
        config,
        stats: SolverStats::default(),
        depth_limit: problem.max_basis_size() + 1,
    };
    if !start.is_feasible() {
        return Ok((start, run.stats));
    }
    let result = if config.pivoting {
        run.pivot_loop(start, settled)?
    } else {
        let n = run.order.len();
        run.recurse(n, &mut Vec::new(), start)?
    };
    Ok((result, run.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meb::MebInstance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn move_to_front_examples() {
        assert_eq!(move_to_front(&[1, 2, 3], 3).unwrap(), vec![3, 1, 2]);
        assert_eq!(move_to_front(&[1], 1).unwrap(), vec![1]);
        assert_eq!(move_to_front(&[1, 2, 3, 4], 2).unwrap(), vec![2, 1, 3, 4]);
        assert_eq!(move_to_front(&[1, 2], 5), Err(Error::NotFound(5)));
    }

    #[test]
    fn pivot_prefers_largest_then_lowest_index() {
        // points on the x axis; the ball is the origin with radius 0
        let inst = MebInstance::new(vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![7.0, 0.0], vec![-7.0, 0.0]]).unwrap();
        let basis = inst.initial_basis(&[0]).unwrap();
        let ball = basis.solution.as_ref().unwrap();
        assert_eq!(pick_pivot(&inst, ball, &[1, 2]).unwrap(), 2);
        assert_eq!(pick_pivot(&inst, ball, &[1]).unwrap(), 1);
        assert_eq!(pick_pivot(&inst, ball, &[3, 2]).unwrap(), 2);
        assert_eq!(pick_pivot(&inst, ball, &[]), Err(Error::EmptyCandidates));
    }

    #[test]
    fn heuristics_do_not_change_the_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let inst = MebInstance::new(pts).unwrap();
        let all: Vec<usize> = (0..inst.num_constraints()).collect();
        let mut radii = Vec::new();
        for cfg in [SolverConfig::plain(), SolverConfig::default(), SolverConfig { move_to_front: true, pivoting: false }] {
            let start = inst.initial_basis(&all).unwrap();
            let (b, stats) = solve_lptype(&inst, &all, start, cfg, &mut rng).unwrap();
            assert!(stats.violation_tests > 0);
            radii.push(b.value);
        }
        assert!((radii[0] - radii[1]).abs() < 1e-9 && (radii[0] - radii[2]).abs() < 1e-9);
    }
}
