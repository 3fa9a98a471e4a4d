//! Small dense semidefinite programs.
//!
//! Solves
//!
//! ```text
//! minimize   <C, A>
//! subject to <F_i, A> <= b_i  or  >= b_i
//!            <E_k, A>  = c_k
//!            A symmetric positive semidefinite
//! ```
//!
//! with a primal log-barrier method. The free variables are the `d(d+1)/2`
//! entries of `A` in an orthonormal symmetric basis; equalities are
//! eliminated onto their nullspace before the barrier iterations start, and a
//! phase-1 problem (minimize the largest constraint slack) either produces a
//! strictly feasible start or certifies infeasibility.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// The functional `A -> <C, A> = sum_ij C_ij A_ij` for a symmetric `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    coefficients: DMatrix<f64>,
}

impl LinearFunctional {
    /// Builds the functional from a square matrix; the matrix must be
    /// symmetric up to rounding and is stored exactly symmetric.
    pub fn new(coefficients: DMatrix<f64>) -> Result<Self> {
        let d = coefficients.nrows();
        if coefficients.ncols() != d {
            return Err(Error::MalformedProblem(format!(
                "coefficient matrix is {}x{}",
                d,
                coefficients.ncols()
            )));
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::MalformedProblem("non-finite coefficient".into()));
        }
        let scale = coefficients.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (coefficients[(i, j)] - coefficients[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::MalformedProblem(format!(
                        "coefficient matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let coefficients = (&coefficients + coefficients.transpose()) * 0.5;
        Ok(Self { coefficients })
    }

    /// `A -> v^T A v`.
    pub fn outer(v: &DVector<f64>) -> Self {
        Self {
            coefficients: v * v.transpose(),
        }
    }

    /// `A -> tr(A)`.
    pub fn trace(d: usize) -> Self {
        Self {
            coefficients: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn eval(&self, a: &DMatrix<f64>) -> f64 {
        self.coefficients.dot(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub functional: LinearFunctional,
    pub bound: f64,
    pub direction: Direction,
}

impl Inequality {
    /// Signed residual: positive when the constraint is violated.
    pub fn residual(&self, a: &DMatrix<f64>) -> f64 {
        let value = self.functional.eval(a);
        match self.direction {
            Direction::Le => value - self.bound,
            Direction::Ge => self.bound - value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub functional: LinearFunctional,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub dim: usize,
    pub objective: LinearFunctional,
    pub inequalities: Vec<Inequality>,
    pub equalities: Vec<Equality>,
}

impl SdpProblem {
    pub fn new(objective: LinearFunctional) -> Self {
        Self {
            dim: objective.dim(),
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn le(mut self, functional: LinearFunctional, bound: f64) -> Self {
        self.push_inequality(functional, bound, Direction::Le);
        self
    }

    pub fn ge(mut self, functional: LinearFunctional, bound: f64) -> Self {
        self.push_inequality(functional, bound, Direction::Ge);
        self
    }

    pub fn eq(mut self, functional: LinearFunctional, bound: f64) -> Self {
        self.equalities.push(Equality { functional, bound });
        self
    }

    pub fn push_inequality(&mut self, functional: LinearFunctional, bound: f64, direction: Direction) {
        self.inequalities.push(Inequality {
            functional,
            bound,
            direction,
        });
    }

    pub fn num_constraints(&self) -> usize {
        self.inequalities.len() + self.equalities.len()
    }

    /// Default cap on the number of constraints: four times the
    /// combinatorial dimension plus a little room for side constraints.
    pub fn default_constraint_cap(dim: usize) -> usize {
        4 * (dim + 3) * dim / 2 + 8
    }

    fn validate(&self, cap: usize) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::MalformedProblem("zero dimension".into()));
        }
        if self.num_constraints() > cap {
            return Err(Error::MalformedProblem(format!(
                "{} constraints exceed the cap of {cap}",
                self.num_constraints()
            )));
        }
        let dims = self
            .inequalities
            .iter()
            .map(|c| (c.functional.dim(), c.bound))
            .chain(self.equalities.iter().map(|c| (c.functional.dim(), c.bound)));
        for (d, b) in dims {
            if d != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: d,
                });
            }
            if !b.is_finite() {
                return Err(Error::MalformedProblem("non-finite bound".into()));
            }
        }
        if self.objective.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.objective.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_newton_steps: usize,
    /// `None` selects [`SdpProblem::default_constraint_cap`].
    pub max_constraints: Option<usize>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            gap_tol: 1e-7,
            max_newton_steps: 500,
            max_constraints: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub matrix: Option<DMatrix<f64>>,
    pub value: Option<f64>,
    /// Largest constraint residual, each constraint scaled by its bound
    /// (or by the norm of its functional when the bound is zero). For
    /// `Infeasible` this is the certified minimum phase-1 slack.
    pub max_residual: f64,
    pub newton_steps: usize,
}

impl SdpResult {
    fn failure(reason: SdpStatus, max_residual: f64, newton_steps: usize) -> Self {
        Self {
            status: reason,
            matrix: None,
            value: None,
            max_residual,
            newton_steps,
        }
    }
}

/// Lists the constraints violated by `a` beyond `tol`, as
/// `(index, residual)` sorted by descending residual. Inequalities are
/// numbered first, equalities follow.
pub fn feasibility_report(a: &DMatrix<f64>, problem: &SdpProblem, tol: f64) -> Result<Vec<(usize, f64)>> {
    if a.nrows() != problem.dim || a.ncols() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            got: a.nrows(),
        });
    }
    let mut out: Vec<(usize, f64)> = problem
        .inequalities
        .iter()
        .map(|c| c.residual(a))
        .chain(
            problem
                .equalities
                .iter()
                .map(|c| (c.functional.eval(a) - c.bound).abs()),
        )
        .enumerate()
        .filter(|&(_, r)| r > tol)
        .collect();
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(out)
}

/// Number of free entries of a symmetric `d x d` matrix.
pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Index pairs `(i, j)` with `i <= j`, in svec order.
fn svec_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(svec_len(d));
    for j in 0..d {
        for i in 0..=j {
            out.push((i, j));
        }
    }
    out
}

/// Coordinates of a symmetric matrix in the orthonormal basis
/// `e_i e_i^T`, `(e_i e_j^T + e_j e_i^T) / sqrt 2`.
fn svec(m: &DMatrix<f64>, pairs: &[(usize, usize)]) -> DVector<f64> {
    DVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|&(i, j)| {
            if i == j {
                m[(i, i)]
            } else {
                std::f64::consts::SQRT_2 * m[(i, j)]
            }
        }),
    )
}

fn smat(v: &DVector<f64>, d: usize, pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if i == j {
            m[(i, i)] = v[k];
        } else {
            let x = v[k] / std::f64::consts::SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

/// Barrier problem over `w`: the PSD argument is `y0 + T w` (svec
/// coordinates, `T = None` meaning the identity), linear rows `G w <= h`,
/// objective `c^T w`.
struct Barrier<'a> {
    d: usize,
    pairs: &'a [(usize, usize)],
    y0: DVector<f64>,
    t_map: Option<DMatrix<f64>>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    c: DVector<f64>,
}

struct Eval {
    f: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Barrier<'_> {
    fn nvars(&self) -> usize {
        self.c.len()
    }

    fn nu(&self) -> f64 {
        (self.d + self.g.nrows()) as f64
    }

    fn psd_arg(&self, w: &DVector<f64>) -> DVector<f64> {
        match &self.t_map {
            Some(t) => &self.y0 + t * w,
            None => &self.y0 + w,
        }
    }

    /// `-log det` of the PSD argument, or `None` outside the cone.
    fn neg_logdet(&self, y: &DVector<f64>) -> Option<(f64, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
        let a = smat(y, self.d, self.pairs);
        let chol = a.cholesky()?;
        let l = chol.l_dirty();
        let mut logdet = 0.0;
        for i in 0..self.d {
            let x = l[(i, i)];
            if !(x > 0.0) {
                return None;
            }
            logdet += 2.0 * x.ln();
        }
        Some((-logdet, chol))
    }

    fn value(&self, t: f64, w: &DVector<f64>) -> f64 {
        let slack = &self.h - &self.g * w;
        if slack.iter().any(|&s| !(s > 0.0)) {
            return f64::INFINITY;
        }
        let y = self.psd_arg(w);
        match self.neg_logdet(&y) {
            Some((nld, _)) => t * self.c.dot(w) + nld - slack.iter().map(|s| s.ln()).sum::<f64>(),
            None => f64::INFINITY,
        }
    }

    fn eval(&self, t: f64, w: &DVector<f64>) -> Option<Eval> {
        let slack = &self.h - &self.g * w;
        if slack.iter().any(|&s| !(s > 0.0)) {
            return None;
        }
        let y = self.psd_arg(w);
        let (nld, chol) = self.neg_logdet(&y)?;
        let winv = chol.inverse();

        // log-det gradient and Hessian in svec coordinates
        let m = self.pairs.len();
        let alpha = |i: usize, j: usize| if i == j { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 };
        let mut gy = DVector::zeros(m);
        let mut hy = DMatrix::zeros(m, m);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            gy[k] = -2.0 * alpha(i, j) * winv[(i, j)];
            for (l, &(a, b)) in self.pairs.iter().enumerate().take(k + 1) {
                let v = 2.0
                    * alpha(i, j)
                    * alpha(a, b)
                    * (winv[(i, a)] * winv[(j, b)] + winv[(i, b)] * winv[(j, a)]);
                hy[(k, l)] = v;
                hy[(l, k)] = v;
            }
        }
        let (mut grad, mut hess) = match &self.t_map {
            Some(t) => (t.transpose() * gy, t.transpose() * hy * t),
            None => (gy, hy),
        };

        let inv_s = slack.map(|s| 1.0 / s);
        grad += self.g.transpose() * &inv_s;
        let gs = DMatrix::from_fn(self.g.nrows(), self.g.ncols(), |r, c| self.g[(r, c)] * inv_s[r]);
        hess += gs.transpose() * gs;
        grad += &self.c * t;

        let f = t * self.c.dot(w) + nld - slack.iter().map(|s| s.ln()).sum::<f64>();
        Some(Eval { f, grad, hess })
    }

    /// Newton centering at fixed `t`. Returns the number of steps taken.
    fn center(&self, t: f64, w: &mut DVector<f64>, budget: usize, mut stop: impl FnMut(&DVector<f64>) -> bool) -> Result<usize> {
        let mut steps = 0;
        while steps < budget {
            let e = self
                .eval(t, w)
                .ok_or_else(|| Error::NumericalFailure("iterate left the interior".into()))?;
            let dir = solve_newton(&e.hess, &e.grad)
                .ok_or_else(|| Error::NumericalFailure("singular Newton system".into()))?;
            let decrement = -e.grad.dot(&dir);
            steps += 1;
            if !(decrement.is_finite()) {
                return Err(Error::NumericalFailure("non-finite Newton decrement".into()));
            }
            // below this the line search only sees rounding noise in f
            if decrement / 2.0 <= 1e-9_f64.max(1e-13 * e.f.abs()) {
                break;
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = &*w + &dir * step;
                let fc = self.value(t, &cand);
                if fc < e.f && fc <= e.f - 0.25 * step * decrement {
                    *w = cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // no further progress possible at this precision
                break;
            }
            if stop(w) {
                break;
            }
        }
        Ok(steps)
    }

    fn new_w(&self) -> DVector<f64> {
        DVector::zeros(self.nvars())
    }
}

/// Solves `H x = -g` with Jacobi scaling and a Cholesky factorization,
/// falling back to LU.
fn solve_newton(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let diag: Vec<f64> = (0..n).map(|i| h[(i, i)].abs().max(1e-300).sqrt().recip()).collect();
    let hs = DMatrix::from_fn(n, n, |i, j| h[(i, j)] * diag[i] * diag[j]);
    let gs = DVector::from_fn(n, |i, _| -g[i] * diag[i]);
    let xs = match hs.clone().cholesky() {
        Some(ch) => ch.solve(&gs),
        None => hs.lu().solve(&gs)?,
    };
    let x = DVector::from_fn(n, |i, _| xs[i] * diag[i]);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Solves the SDP. Malformed problems are rejected with an error; solver
/// outcomes are reported through [`SdpResult::status`].
pub fn minimize(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpResult> {
    let cap = options
        .max_constraints
        .unwrap_or_else(|| SdpProblem::default_constraint_cap(problem.dim));
    problem.validate(cap)?;

    let d = problem.dim;
    let pairs = svec_pairs(d);
    let m = pairs.len();

    let obj_norm = problem.objective.coefficients().norm();
    if problem.inequalities.is_empty() && problem.equalities.is_empty() {
        let min_eig = problem
            .objective
            .coefficients()
            .clone()
            .symmetric_eigenvalues()
            .min();
        return Ok(if min_eig >= -1e-12 * obj_norm.max(1.0) {
            SdpResult {
                status: SdpStatus::Optimal,
                matrix: Some(DMatrix::zeros(d, d)),
                value: Some(0.0),
                max_residual: 0.0,
                newton_steps: 0,
            }
        } else {
            SdpResult::failure(SdpStatus::NumericalFailure, 0.0, 0)
        });
    }

    // Variable scale: A = sigma * A_hat, the geometric mean of the bound
    // to functional-norm ratios.
    let ratios: Vec<f64> = problem
        .inequalities
        .iter()
        .map(|c| (c.bound, c.functional.coefficients().norm()))
        .chain(
            problem
                .equalities
                .iter()
                .map(|c| (c.bound, c.functional.coefficients().norm())),
        )
        .filter(|&(b, n)| b.abs() > 0.0 && n > 0.0)
        .map(|(b, n)| (b.abs() / n).ln())
        .collect();
    let sigma = if ratios.is_empty() {
        1.0
    } else {
        (ratios.iter().sum::<f64>() / ratios.len() as f64).exp()
    };

    // Normalized inequality rows g^T y <= h in A_hat coordinates.
    let n_ineq = problem.inequalities.len();
    let mut g_rows = DMatrix::zeros(n_ineq, m);
    let mut h_vec = DVector::zeros(n_ineq);
    let mut row_scale = vec![1.0; n_ineq];
    for (r, c) in problem.inequalities.iter().enumerate() {
        let f = c.functional.coefficients();
        let fn_norm = f.norm();
        if fn_norm == 0.0 {
            // constant constraint 0 <= b / 0 >= b
            let ok = match c.direction {
                Direction::Le => c.bound >= 0.0,
                Direction::Ge => c.bound <= 0.0,
            };
            if !ok {
                return Ok(SdpResult::failure(SdpStatus::Infeasible, c.bound.abs(), 0));
            }
        }
        let sign = match c.direction {
            Direction::Le => 1.0,
            Direction::Ge => -1.0,
        };
        let norm = fn_norm.max(f64::MIN_POSITIVE);
        let sv = svec(f, &pairs);
        for k in 0..m {
            g_rows[(r, k)] = sign * sv[k] / norm;
        }
        h_vec[r] = sign * c.bound / (sigma * norm);
        row_scale[r] = if c.bound != 0.0 { c.bound.abs() / (sigma * norm) } else { 1.0 };
    }

    // Equality elimination y = y0 + N z.
    let (y0, n_map) = if problem.equalities.is_empty() {
        (DVector::zeros(m), None)
    } else {
        let k = problem.equalities.len();
        let mut e = DMatrix::zeros(k, m);
        let mut rhs = DVector::zeros(k);
        for (r, c) in problem.equalities.iter().enumerate() {
            let f = c.functional.coefficients();
            let norm = f.norm();
            if norm == 0.0 {
                return Ok(SdpResult::failure(SdpStatus::NumericalFailure, c.bound.abs(), 0));
            }
            let sv = svec(f, &pairs);
            for kk in 0..m {
                e[(r, kk)] = sv[kk] / norm;
            }
            rhs[r] = c.bound / (sigma * norm);
        }
        let gram = e.transpose() * &e;
        let eig = SymmetricEigen::new(gram);
        let max_ev = eig.eigenvalues.max().max(1e-300);
        let rank = eig.eigenvalues.iter().filter(|&&v| v > 1e-10 * max_ev).count();
        if rank < k {
            return Ok(SdpResult::failure(SdpStatus::NumericalFailure, 0.0, 0));
        }
        let null_cols: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] <= 1e-10 * max_ev).collect();
        let n = DMatrix::from_fn(m, null_cols.len(), |r, c| eig.eigenvectors[(r, null_cols[c])]);
        // least-norm solution of e y = rhs
        let eet = &e * e.transpose();
        let lam = eet
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NumericalFailure("equality system".into()))?;
        let y0 = e.transpose() * lam;
        (y0, Some(n))
    };
    let q = n_map.as_ref().map_or(m, |n| n.ncols());

    // Rows and objective in z coordinates, plus a trace cap keeping the
    // barrier bounded when the feasible set is.
    let eye = svec(&DMatrix::identity(d, d), &pairs);
    let trace_cap = 1e6 * d as f64 * (1.0 + h_vec.amax());
    let g_base = match &n_map {
        Some(n) => &g_rows * n,
        None => g_rows.clone(),
    };
    let trace_row = match &n_map {
        Some(n) => n.transpose() * &eye,
        None => eye.clone(),
    };
    let mut g_z = DMatrix::zeros(n_ineq + 1, q);
    g_z.view_mut((0, 0), (n_ineq, q)).copy_from(&g_base);
    g_z.set_row(n_ineq, &trace_row.transpose());
    let mut h_z = DVector::zeros(n_ineq + 1);
    h_z.rows_mut(0, n_ineq).copy_from(&(&h_vec - &g_rows * &y0));
    h_z[n_ineq] = trace_cap - eye.dot(&y0);
    let c_y = svec(problem.objective.coefficients(), &pairs) / obj_norm.max(f64::MIN_POSITIVE);
    let c_z = match &n_map {
        Some(n) => n.transpose() * &c_y,
        None => c_y.clone(),
    };

    let mut steps_used = 0usize;
    let budget = options.max_newton_steps;

    // Phase 1: minimize s subject to G z - h <= s, A(z) + s I > 0, s >= -1,
    // under a trace cap. The cap starts small so the iterate stays near the
    // data scale, and grows only when an infeasibility certificate leans
    // on it.
    let mut t1 = DMatrix::zeros(m, q + 1);
    match &n_map {
        Some(n) => t1.view_mut((0, 0), (m, q)).copy_from(n),
        None => t1.view_mut((0, 0), (m, q)).fill_with_identity(),
    }
    t1.set_column(q, &eye);
    let mut g1 = DMatrix::zeros(n_ineq + 2, q + 1);
    g1.view_mut((0, 0), (n_ineq + 1, q)).copy_from(&g_z);
    for r in 0..n_ineq {
        g1[(r, q)] = -1.0;
    }
    g1[(n_ineq + 1, q)] = -1.0;
    let mut h1 = DVector::zeros(n_ineq + 2);
    h1.rows_mut(0, n_ineq + 1).copy_from(&h_z);
    h1[n_ineq + 1] = 1.0;
    let mut c1 = DVector::zeros(q + 1);
    c1[q] = 1.0;
    let mut phase1 = Barrier {
        d,
        pairs: &pairs,
        y0: y0.clone(),
        t_map: Some(t1),
        g: g1,
        h: h1,
        c: c1,
    };
    let a0 = smat(&y0, d, &pairs);
    let lam_min = a0.symmetric_eigenvalues().min();
    let worst = (0..n_ineq).map(|r| -h_z[r]).fold(f64::NEG_INFINITY, f64::max);
    let s0 = worst.max(-lam_min).max(-0.5) + 1.0;

    let margin = 1e-3;
    let infeas_threshold = 10.0 * options.feas_tol;
    let nu1 = phase1.nu();
    let y0_trace = eye.dot(&y0);
    let mut cap1 = (1e2 * d as f64 * (1.0 + h_vec.amax())).max(2.0 * (y0_trace.abs() + d as f64 * s0));
    let w1 = 'caps: loop {
        let cap1_eff = cap1.min(trace_cap);
        phase1.h[n_ineq] = cap1_eff - y0_trace;
        let mut w1 = phase1.new_w();
        w1[q] = s0;
        let mut t = 1.0;
        loop {
            let left = budget.saturating_sub(steps_used);
            if left == 0 {
                return Ok(SdpResult::failure(SdpStatus::NumericalFailure, w1[q], steps_used));
            }
            steps_used += phase1.center(t, &mut w1, left, |w| w[q] < -margin)?;
            let s = w1[q];
            if s < -margin {
                break 'caps w1;
            }
            let gap = nu1 / t;
            if s - gap > infeas_threshold {
                let tr = eye.dot(&phase1.psd_arg(&w1));
                if cap1_eff < trace_cap && tr > 0.5 * cap1_eff {
                    cap1 *= 1e2;
                    continue 'caps;
                }
                return Ok(SdpResult::failure(SdpStatus::Infeasible, s - gap, steps_used));
            }
            if gap < 0.1 * options.feas_tol {
                if s < 0.0 {
                    break 'caps w1;
                }
                return Ok(SdpResult::failure(SdpStatus::NumericalFailure, s, steps_used));
            }
            t *= 10.0;
        }
    };
    let mut w = w1.rows(0, q).into_owned();

    // Phase 2.
    let phase2 = Barrier {
        d,
        pairs: &pairs,
        y0: y0.clone(),
        t_map: n_map.clone(),
        g: g_z,
        h: h_z,
        c: c_z.clone(),
    };
    let nu2 = phase2.nu();
    let mut t = 1.0;
    loop {
        let left = budget.saturating_sub(steps_used);
        if left == 0 {
            return Ok(SdpResult::failure(SdpStatus::NumericalFailure, f64::NAN, steps_used));
        }
        steps_used += phase2.center(t, &mut w, left, |_| false)?;
        if eye.dot(&phase2.psd_arg(&w)) > 0.5 * trace_cap {
            return Ok(SdpResult::failure(SdpStatus::NumericalFailure, f64::NAN, steps_used));
        }
        let val = c_y.dot(&phase2.psd_arg(&w));
        if nu2 / t <= 0.1 * options.gap_tol * val.abs().max(1.0) {
            break;
        }
        t *= 20.0;
    }

    let y = phase2.psd_arg(&w);
    let mut a = smat(&y, d, &pairs) * sigma;
    a = (&a + a.transpose()) * 0.5;
    let value = problem.objective.eval(&a);
    let slack_rows = &phase2.h - &phase2.g * &w;
    let mut max_residual = (0..n_ineq)
        .map(|r| -slack_rows[r] / row_scale[r])
        .fold(f64::NEG_INFINITY, f64::max);
    for c in &problem.equalities {
        let scale = if c.bound != 0.0 { c.bound.abs() } else { c.functional.coefficients().norm() * sigma };
        max_residual = max_residual.max((c.functional.eval(&a) - c.bound).abs() / scale);
    }
    if !max_residual.is_finite() {
        max_residual = 0.0;
    }
    Ok(SdpResult {
        status: SdpStatus::Optimal,
        matrix: Some(a),
        value: Some(value),
        max_residual,
        newton_steps: steps_used,
    })
}
