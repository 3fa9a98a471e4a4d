//! Mahalanobis metric learning as an LP-type problem.
//!
//! A constraint is a pair `(p, q)` with `v = p - q`: similar pairs need
//! `vᵀAv ≤ u²`, dissimilar pairs need `vᵀAv ≥ ℓ²`, and `A` ranges over the
//! PSD cone. The value of a constraint subset is the minimum of a random
//! linear objective over its feasible matrices, `+inf` when there are none.
//!
//! The objective is `⟨C, A⟩` with `C = r rᵀ + ρ P N P`, where `r` is a random
//! unit vector, `P = I - r rᵀ` and `N` is a random positive definite matrix.
//! The second term vanishes for `d = 1`. For `d ≥ 2` it makes `C` positive
//! definite, so the optimum is unique and bounded; with `C = r rᵀ` alone the
//! optimal face is generally large and unbounded.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lptype::{Basis, LpTypeProblem};
use crate::sdp::{self, Direction, Inequality, LinearFunctional, SdpOptions, SdpProblem, SdpStatus};

/// Default weight of the full-rank part of the objective.
pub const DEFAULT_PERTURBATION: f64 = 0.5;

/// Default relative violation tolerance.
pub const DEFAULT_FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    Similar,
    Dissimilar,
}

impl PairKind {
    pub fn code(self) -> char {
        match self {
            PairKind::Similar => 'S',
            PairKind::Dissimilar => 'D',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairConstraint {
    pub kind: PairKind,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    v: DVector<f64>,
    /// Row indices of `p` and `q` in the dataset they came from, if any.
    pub source: Option<(usize, usize)>,
}

impl PairConstraint {
    pub fn new(kind: PairKind, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: q.len(),
            });
        }
        if p.iter().chain(&q).any(|x| !x.is_finite()) {
            return Err(Error::InvalidConstraint("non-finite coordinate".into()));
        }
        let v = DVector::from_iterator(p.len(), p.iter().zip(&q).map(|(a, b)| a - b));
        Ok(Self {
            kind,
            p,
            q,
            v,
            source: None,
        })
    }

    pub fn with_source(mut self, i: usize, j: usize) -> Self {
        self.source = Some((i, j));
        self
    }

    pub fn similar(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::new(PairKind::Similar, p, q)
    }

    pub fn dissimilar(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::new(PairKind::Dissimilar, p, q)
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn difference(&self) -> &DVector<f64> {
        &self.v
    }

    /// `vᵀAv`.
    pub fn quad(&self, a: &DMatrix<f64>) -> f64 {
        (a * &self.v).dot(&self.v)
    }
}

/// Similar and dissimilar pairs with their thresholds. Constraint `i` is
/// the `i`-th similar pair for `i < similars.len()`, then the dissimilar
/// pairs follow.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    similars: Vec<PairConstraint>,
    dissimilars: Vec<PairConstraint>,
    pub u: f64,
    pub l: f64,
    dim: usize,
}

impl ConstraintSet {
    /// Drops similar pairs with `p = q` (always satisfied) and rejects
    /// dissimilar pairs with `p = q` (never satisfiable).
    pub fn new(dim: usize, similars: Vec<PairConstraint>, dissimilars: Vec<PairConstraint>, u: f64, l: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) || !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidConstraint(format!("thresholds must be positive (u = {u}, l = {l})")));
        }
        if dim == 0 {
            return Err(Error::InvalidConstraint("zero dimension".into()));
        }
        for c in similars.iter().chain(&dissimilars) {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.dim() });
            }
        }
        let similars = similars
            .into_iter()
            .map(|mut c| {
                c.kind = PairKind::Similar;
                c
            })
            .filter(|c| c.v.iter().any(|&x| x != 0.0))
            .collect();
        let mut dis = Vec::with_capacity(dissimilars.len());
        for mut c in dissimilars {
            if c.v.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidConstraint("dissimilar pair of identical points".into()));
            }
            c.kind = PairKind::Dissimilar;
            dis.push(c);
        }
        Ok(Self {
            similars,
            dissimilars: dis,
            u,
            l,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.similars.len() + self.dissimilars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn similars(&self) -> &[PairConstraint] {
        &self.similars
    }

    pub fn dissimilars(&self) -> &[PairConstraint] {
        &self.dissimilars
    }

    pub fn get(&self, i: usize) -> &PairConstraint {
        let ns = self.similars.len();
        if i < ns {
            &self.similars[i]
        } else {
            &self.dissimilars[i - ns]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &PairConstraint> {
        self.similars.iter().chain(&self.dissimilars)
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Squared threshold of constraint `i`.
    pub fn bound(&self, i: usize) -> f64 {
        match self.get(i).kind {
            PairKind::Similar => self.u * self.u,
            PairKind::Dissimilar => self.l * self.l,
        }
    }

    /// Violation relative to the squared threshold; positive when violated.
    pub fn relative_residual(&self, a: &DMatrix<f64>, i: usize) -> f64 {
        let c = self.get(i);
        let b = self.bound(i);
        let q = c.quad(a);
        match c.kind {
            PairKind::Similar => (q - b) / b,
            PairKind::Dissimilar => (b - q) / b,
        }
    }

    /// Violation gap in squared units: `vᵀAv - u²` or `ℓ² - vᵀAv`.
    pub fn gap(&self, a: &DMatrix<f64>, i: usize) -> f64 {
        let c = self.get(i);
        let b = self.bound(i);
        match c.kind {
            PairKind::Similar => c.quad(a) - b,
            PairKind::Dissimilar => b - c.quad(a),
        }
    }

    pub fn violated(&self, a: &DMatrix<f64>, i: usize, tol: f64) -> bool {
        self.relative_residual(a, i) > tol
    }

    /// Number and fraction of `indices` violated by `a` beyond `tol`.
    pub fn count_violations(&self, a: &DMatrix<f64>, indices: &[usize], tol: f64) -> (usize, f64) {
        let count = indices.iter().filter(|&&i| self.violated(a, i, tol)).count();
        let frac = if indices.is_empty() { 0.0 } else { count as f64 / indices.len() as f64 };
        (count, frac)
    }

    fn inequality(&self, i: usize) -> Inequality {
        let c = self.get(i);
        Inequality {
            functional: LinearFunctional::outer(&c.v),
            bound: self.bound(i),
            direction: match c.kind {
                PairKind::Similar => Direction::Le,
                PairKind::Dissimilar => Direction::Ge,
            },
        }
    }
}

/// A learned metric: `A` and a factor `G` with `GᵀG = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    pub a: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl MetricMatrix {
    pub fn identity(d: usize) -> Self {
        Self {
            a: DMatrix::identity(d, d),
            g: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        (&self.g * DVector::from_column_slice(x)).iter().copied().collect()
    }
}

/// Factors a PSD matrix as `GᵀG` with `G = Λ^{1/2} Qᵀ`; slightly negative
/// eigenvalues are clamped to zero.
pub fn factor_transform(a: &DMatrix<f64>) -> Result<MetricMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.amax().max(1.0);
    let min = eig.eigenvalues.min();
    if min < -1e-6 * scale {
        return Err(Error::NotPsd(min));
    }
    let d = a.nrows();
    let mut g = eig.eigenvectors.transpose();
    for i in 0..d {
        let s = eig.eigenvalues[i].max(0.0).sqrt();
        g.row_mut(i).scale_mut(s);
    }
    let a = g.transpose() * &g;
    Ok(MetricMatrix { a, g })
}

/// A shareable metric learning instance.
#[derive(Debug, Clone)]
pub struct MetricInstance {
    cs: Arc<ConstraintSet>,
    r: DVector<f64>,
    objective: LinearFunctional,
    side: Vec<Inequality>,
    pub feas_tol: f64,
    pub sdp_options: SdpOptions,
}

impl MetricInstance {
    pub fn new(cs: ConstraintSet, seed: u64) -> Result<Self> {
        Self::with_perturbation(Arc::new(cs), seed, DEFAULT_PERTURBATION)
    }

    pub fn shared(cs: Arc<ConstraintSet>, seed: u64) -> Result<Self> {
        Self::with_perturbation(cs, seed, DEFAULT_PERTURBATION)
    }

    pub fn with_perturbation(cs: Arc<ConstraintSet>, seed: u64, rho: f64) -> Result<Self> {
        let d = cs.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_unit(&mut rng, d);
        let w = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = &w * w.transpose() / d as f64 + DMatrix::identity(d, d);
        let proj = DMatrix::identity(d, d) - &r * r.transpose();
        let c = &r * r.transpose() + &proj * n * &proj * rho;
        let c = (&c + c.transpose()) * 0.5;
        Ok(Self {
            cs,
            r,
            objective: LinearFunctional::new(c)?,
            side: Vec::new(),
            feas_tol: DEFAULT_FEAS_TOL,
            sdp_options: SdpOptions::default(),
        })
    }

    /// Adds `reg(A) ≤ bound` to every SDP this instance solves.
    pub fn with_side_constraint(mut self, reg: LinearFunctional, bound: f64) -> Result<Self> {
        if reg.dim() != self.cs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cs.dim(),
                got: reg.dim(),
            });
        }
        self.side.push(Inequality {
            functional: reg,
            bound,
            direction: Direction::Le,
        });
        Ok(self)
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.cs
    }

    pub fn shared_constraints(&self) -> Arc<ConstraintSet> {
        Arc::clone(&self.cs)
    }

    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn objective(&self) -> &LinearFunctional {
        &self.objective
    }

    pub fn dim(&self) -> usize {
        self.cs.dim()
    }

    fn problem(&self) -> SdpProblem {
        let mut p = SdpProblem::new(self.objective.clone());
        p.inequalities.extend(self.side.iter().cloned());
        p
    }

    fn solve(&self, problem: &SdpProblem, constraints: Vec<usize>) -> Result<Basis<DMatrix<f64>>> {
        let mut opts = self.sdp_options;
        opts.max_constraints = Some(problem.num_constraints().max(SdpProblem::default_constraint_cap(self.dim())));
        let res = sdp::minimize(problem, &opts)?;
        match res.status {
            SdpStatus::Optimal => {
                let a = res.matrix.expect("optimal result carries a matrix");
                Ok(Basis::feasible(constraints, res.value.unwrap_or(f64::NAN), a))
            }
            SdpStatus::Infeasible => Ok(Basis::infeasible(constraints)),
            SdpStatus::NumericalFailure => Err(Error::NumericalFailure(format!(
                "SDP over {} constraints after {} Newton steps",
                problem.num_constraints(),
                res.newton_steps
            ))),
        }
    }

    /// Number and fraction of `indices` violated by `a` at this
    /// instance's tolerance.
    pub fn count_violations(&self, a: &DMatrix<f64>, indices: &[usize]) -> (usize, f64) {
        self.cs.count_violations(a, indices, self.feas_tol)
    }
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

impl LpTypeProblem for MetricInstance {
    type Solution = DMatrix<f64>;

    fn num_constraints(&self) -> usize {
        self.cs.len()
    }

    fn max_basis_size(&self) -> usize {
        let d = self.dim();
        (d + 3) * d / 2
    }

    /// The first similar pair with `A = 0`, or the empty basis.
    fn initial_basis(&self, constraints: &[usize]) -> Result<Basis<DMatrix<f64>>> {
        let d = self.dim();
        let first_sim = constraints
            .iter()
            .copied()
            .find(|&i| self.cs.get(i).kind == PairKind::Similar);
        let basis = first_sim.map_or_else(Vec::new, |i| vec![i]);
        if self.side.is_empty() {
            return Ok(Basis::feasible(basis, 0.0, DMatrix::zeros(d, d)));
        }
        // With side constraints the zero matrix need not be feasible.
        let mut p = self.problem();
        for &i in &basis {
            p.inequalities.push(self.cs.inequality(i));
        }
        self.solve(&p, basis)
    }

    fn violates(&self, basis: &Basis<DMatrix<f64>>, h: usize) -> Result<bool> {
        let Some(a) = &basis.solution else { return Ok(false) };
        if a.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.nrows(),
            });
        }
        Ok(self.cs.violated(a, h, self.feas_tol))
    }

    fn violation_magnitude(&self, a: &DMatrix<f64>, h: usize) -> f64 {
        self.cs.gap(a, h)
    }

    /// Solves `basis ∪ {h}`, then drops every constraint whose removal
    /// leaves an optimum that still satisfies it; `h` is tried last.
    fn basis_computation(&self, basis: &Basis<DMatrix<f64>>, h: usize) -> Result<Basis<DMatrix<f64>>> {
        let mut set: Vec<usize> = basis.constraints.iter().copied().filter(|&c| c != h).collect();
        set.push(h);
        let mut current = self.solution_of_basis(&set)?;
        let Some(a) = current.solution.clone() else { return Ok(current) };
        // Clearly slack constraints never support the optimum.
        set.retain(|&c| self.cs.relative_residual(&a, c) >= -1e-6);
        if set.len() < current.constraints.len() {
            current.constraints = set.clone();
        }
        let mut k = 0;
        while k < set.len() {
            let c = set[k];
            let rest: Vec<usize> = set.iter().copied().filter(|&x| x != c).collect();
            let without = self.solution_of_basis(&rest)?;
            match &without.solution {
                Some(a) if !self.cs.violated(a, c, self.feas_tol) => {
                    set = rest;
                    current = without;
                }
                _ => k += 1,
            }
        }
        current.constraints = set;
        Ok(current)
    }

    fn solution_of_basis(&self, constraints: &[usize]) -> Result<Basis<DMatrix<f64>>> {
        let mut p = self.problem();
        for &i in constraints {
            p.inequalities.push(self.cs.inequality(i));
        }
        self.solve(&p, constraints.to_vec())
    }

    fn tight_optimum(&self, forced: &[usize]) -> Result<Basis<DMatrix<f64>>> {
        let mut p = self.problem();
        for &i in forced {
            p = p.eq(LinearFunctional::outer(self.cs.get(i).difference()), self.cs.bound(i));
        }
        self.solve(&p, forced.to_vec())
    }
}
