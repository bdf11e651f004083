use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
    SupportedConeT::{NonnegativeConeT, SecondOrderConeT},
};
use nalgebra::DVector;

use super::{AirCompProblem, ScaState, ALPHA_DEGENERATE, ALPHA_FLOOR};
use crate::error::{Error, Result};

/// Interior-point gap and feasibility tolerance.
const SOLVER_TOL: f64 = 1e-9;

/// Convex restriction of the design problem around a reference point.
///
/// `R_k` is replaced by its tangent plane at `f_ref` and `Q_j` by its tangent
/// plane at `(c_ref, alpha_ref)`. Both functions are convex, so the tangents
/// under-estimate them and every point feasible here is feasible for the
/// original problem.
#[derive(Clone, Debug)]
pub struct ConvexSubproblem {
    pub f_ref: DVector<f64>,
    pub c_ref: Vec<f64>,
    pub alpha_ref: Vec<f64>,
    /// `R_k(f_ref)`.
    pub r_const: Vec<f64>,
    /// `grad R_k(f_ref) = 4 P_hat_k Re(h h^H) f_ref`.
    pub r_grad: Vec<DVector<f64>>,
    /// `Q_j(c_ref, alpha_ref)`.
    pub q_const: Vec<f64>,
    /// `A_j = dQ_j/dc_k`, identical for every device.
    pub q_grad_c: Vec<f64>,
    /// `B_j = dQ_j/dalpha_j`, nonpositive.
    pub q_grad_alpha: Vec<f64>,
    /// Lower bound for each `alpha_j`.
    pub alpha_lower: Vec<f64>,
}

impl ConvexSubproblem {
    /// Linearized `R_k` at `f_hat`.
    pub fn r_hat(&self, k: usize, f_hat: &DVector<f64>) -> f64 {
        self.r_const[k] + self.r_grad[k].dot(&(f_hat - &self.f_ref))
    }

    /// Linearized `Q_j` at `(c, alpha)`.
    pub fn q_hat(&self, j: usize, steering: &[f64], alpha: f64) -> f64 {
        let dc: f64 = steering.iter().zip(&self.c_ref).map(|(c, r)| c - r).sum();
        self.q_const[j] + self.q_grad_c[j] * dc + self.q_grad_alpha[j] * (alpha - self.alpha_ref[j])
    }

    /// Largest relative violation of the relaxed constraints at a point.
    pub fn max_violation(&self, problem: &AirCompProblem, f_hat: &DVector<f64>, steering: &[f64], alpha: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (k, &c) in steering.iter().enumerate() {
            let r = self.r_hat(k, f_hat);
            let scale = r.abs().max(c * c).max(f64::MIN_POSITIVE);
            worst = worst.max((c * c - r) / scale);
        }
        for (j, &a) in alpha.iter().enumerate() {
            let lhs = problem.received_variance(j, steering, f_hat);
            let q = self.q_hat(j, steering, a);
            let scale = lhs.max(q.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max((lhs - q) / scale);
        }
        worst
    }
}

/// First-order data of `R_k` and `Q_j` at `reference`.
pub fn build_subproblem(problem: &AirCompProblem, reference: &ScaState) -> Result<ConvexSubproblem> {
    if let Some((j, &a)) = reference
        .alpha
        .iter()
        .enumerate()
        .find(|(_, &a)| !(a > ALPHA_DEGENERATE))
    {
        return Err(Error::DegenerateReference { index: j, value: a });
    }
    let f = &reference.f_hat;
    let k_count = problem.num_devices();
    let r_const = (0..k_count).map(|k| problem.steering_limit(k, f)).collect();
    let r_grad = (0..k_count).map(|k| problem.steering_limit_grad(k, f)).collect();
    let s: f64 = reference.steering.iter().sum();
    let mut q_const = Vec::with_capacity(problem.terms().len());
    let mut q_grad_c = Vec::with_capacity(problem.terms().len());
    let mut q_grad_alpha = Vec::with_capacity(problem.terms().len());
    for (j, term) in problem.terms().iter().enumerate() {
        let a = reference.alpha[j];
        q_const.push(problem.q_value(j, &reference.steering, a));
        q_grad_c.push(2.0 * s * term.gap_sq / a);
        q_grad_alpha.push(-(s * s * term.gap_sq) / (a * a));
    }
    Ok(ConvexSubproblem {
        f_ref: f.clone(),
        c_ref: reference.steering.clone(),
        alpha_ref: reference.alpha.clone(),
        r_const,
        r_grad,
        q_const,
        q_grad_c,
        q_grad_alpha,
        alpha_lower: reference.alpha.iter().map(|&a| a.min(ALPHA_FLOOR)).collect(),
    })
}

/// Optimum of the convex subproblem.
#[derive(Clone, Debug)]
pub struct SubproblemSolution {
    pub f_hat: DVector<f64>,
    pub steering: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `w * sum alpha` at the returned point.
    pub objective: f64,
    pub status: String,
}

/// Sparse constraint rows accumulated cone by cone.
struct ConeBuilder {
    cols: usize,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl ConeBuilder {
    fn new(cols: usize) -> Self {
        ConeBuilder {
            cols,
            triplets: Vec::new(),
            b: Vec::new(),
            cones: Vec::new(),
        }
    }

    /// Appends one row `s = b - a^T x`; returns its index.
    fn row(&mut self, b: f64, entries: &[(usize, f64)]) -> usize {
        let r = self.b.len();
        self.b.push(b);
        for &(c, v) in entries {
            if v != 0.0 {
                self.triplets.push((r, c, v));
            }
        }
        r
    }

    fn finish(self) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
        let rows = self.b.len();
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.cols];
        for (r, c, v) in self.triplets {
            by_col[c].push((r, v));
        }
        let mut colptr = Vec::with_capacity(self.cols + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for mut col in by_col {
            col.sort_by_key(|&(r, _)| r);
            for (r, v) in col {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        (CscMatrix::new(rows, self.cols, colptr, rowval, nzval), self.b, self.cones)
    }
}

/// Solves the subproblem as a second-order cone program.
///
/// Variables are `f_hat`, steering powers scaled by the largest reference
/// steering power, and auxiliary gains scaled by their reference values.
/// Every quadratic constraint `|w|^2 <= t` is posed as the rotated cone
/// `|(2w, t - 1)| <= t + 1`. A unit-ball bound on `f_hat` removes the joint
/// scaling freedom of `(f_hat, c)`, which leaves the original problem
/// unchanged.
pub fn solve_subproblem(problem: &AirCompProblem, sub: &ConvexSubproblem) -> Result<SubproblemSolution> {
    let n = problem.num_antennas();
    let k_count = problem.num_devices();
    let terms = problem.terms();
    let j_count = terms.len();
    let f_col = |i: usize| i;
    let c_col = |k: usize| n + k;
    let a_col = |j: usize| n + k_count + j;
    let cols = n + k_count + j_count;

    let scale = sub.c_ref.iter().cloned().fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DegenerateDesign);
    }
    let s2 = scale * scale;
    let alpha_scale: Vec<f64> = sub.alpha_ref.clone();
    let alpha_total: f64 = alpha_scale.iter().sum();

    let mut q = vec![0.0; cols];
    for j in 0..j_count {
        q[a_col(j)] = -alpha_scale[j] / alpha_total;
    }

    let mut cb = ConeBuilder::new(cols);

    // c >= 0, alpha >= lower bound
    for k in 0..k_count {
        cb.row(0.0, &[(c_col(k), -1.0)]);
    }
    for j in 0..j_count {
        cb.row(-sub.alpha_lower[j] / alpha_scale[j], &[(a_col(j), -1.0)]);
    }
    cb.cones.push(NonnegativeConeT(k_count + j_count));

    // c_k^2 <= R_hat_k(f) / scale^2
    for k in 0..k_count {
        let d: Vec<f64> = sub.r_grad[k].iter().map(|g| g / s2).collect();
        let e = (sub.r_const[k] - sub.r_grad[k].dot(&sub.f_ref)) / s2;
        let lin: Vec<(usize, f64)> = (0..n).map(|i| (f_col(i), -d[i])).collect();
        cb.row(e + 1.0, &lin);
        cb.row(e - 1.0, &lin);
        cb.row(0.0, &[(c_col(k), -2.0)]);
        cb.cones.push(SecondOrderConeT(3));
    }

    // received variance <= Q_hat_j, divided by scale^2
    let noise_amp = problem.noise_power().sqrt() / scale;
    for (j, term) in terms.iter().enumerate() {
        let c_ref_sum: f64 = sub.c_ref.iter().sum();
        let q0 = (sub.q_const[j] - sub.q_grad_c[j] * c_ref_sum - sub.q_grad_alpha[j] * sub.alpha_ref[j]) / s2;
        let a_coef = sub.q_grad_c[j] / scale;
        let b_coef = sub.q_grad_alpha[j] * alpha_scale[j] / s2;
        let mut lin: Vec<(usize, f64)> = (0..k_count).map(|k| (c_col(k), -a_coef)).collect();
        lin.push((a_col(j), -b_coef));
        cb.row(q0 + 1.0, &lin);
        cb.row(q0 - 1.0, &lin);
        for k in 0..k_count {
            cb.row(0.0, &[(c_col(k), -2.0 * problem.sensing_noise()[k].sqrt())]);
        }
        for i in 0..n {
            cb.row(0.0, &[(f_col(i), -2.0 * noise_amp)]);
        }
        let sigma = term.variance.sqrt();
        let sum_row: Vec<(usize, f64)> = (0..k_count).map(|k| (c_col(k), -2.0 * sigma)).collect();
        cb.row(0.0, &sum_row);
        cb.cones.push(SecondOrderConeT(k_count + n + 3));
    }

    // |f| <= 1
    cb.row(1.0, &[]);
    for i in 0..n {
        cb.row(0.0, &[(f_col(i), -1.0)]);
    }
    cb.cones.push(SecondOrderConeT(n + 1));

    let (a_mat, b, cones) = cb.finish();
    let p_mat = CscMatrix::<f64>::zeros((cols, cols));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .tol_gap_abs(SOLVER_TOL)
        .tol_gap_rel(SOLVER_TOL)
        .tol_feas(SOLVER_TOL)
        .build()
        .map_err(|e| Error::Solver(format!("settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings)
        .map_err(|e| Error::Solver(format!("setup: {e:?}")))?;
    solver.solve();
    let status = solver.solution.status;
    let x = &solver.solution.x;
    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Err(Error::Internal(format!(
                "subproblem built from a feasible reference reported {status:?}"
            )))
        }
        // stalled near the optimum: the last iterate is still usable because
        // the caller re-tightens it onto the original feasible set
        SolverStatus::InsufficientProgress | SolverStatus::MaxIterations | SolverStatus::NumericalError if x.iter().all(|v| v.is_finite()) => {}
        other => return Err(Error::Solver(format!("{other:?}"))),
    }
    let f_hat = DVector::from_fn(n, |i, _| x[f_col(i)]);
    let steering: Vec<f64> = (0..k_count).map(|k| x[c_col(k)].max(0.0) * scale).collect();
    let alpha: Vec<f64> = (0..j_count).map(|j| x[a_col(j)] * alpha_scale[j]).collect();
    let objective = problem.pair_weight() * alpha.iter().sum::<f64>();
    Ok(SubproblemSolution {
        f_hat,
        steering,
        alpha,
        objective,
        status: format!("{status:?}"),
    })
}
