use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::nnls::nnls;
use super::{AirCompProblem, ScaState};

/// A power constraint counts as active when its relative slack is at most this.
pub const ACTIVE_REL_SLACK: f64 = 1e-4;
/// Scaled stationarity residual accepted as a KKT point.
pub const KKT_RESIDUAL_TOL: f64 = 1e-4;

/// First-order optimality report for a design of the relaxed problem.
#[derive(Clone, Debug, Serialize)]
pub struct KktDiagnostics {
    /// Power-constraint multipliers (zero for inactive devices).
    pub beta: Vec<f64>,
    /// Gain-constraint multipliers, one per term.
    pub lambda: Vec<f64>,
    pub active: Vec<bool>,
    /// Relative slack `(R_k - c_k^2) / R_k` per device.
    pub slack: Vec<f64>,
    /// Row-equilibrated stationarity residual, relative to the right-hand side.
    pub residual: f64,
    /// Steering powers normalized by their sum.
    pub normalized_steering: Vec<f64>,
    /// `c'_k eps_k^2` for each inactive device `(k, value)`.
    pub inactive_products: Vec<(usize, f64)>,
    /// Max relative spread of `inactive_products`; `None` with fewer than two inactive devices.
    pub structure_deviation: Option<f64>,
    pub satisfied: bool,
}

/// Recovers multipliers by nonnegative least squares on the stationarity
/// system and reports how well the design satisfies it.
pub fn kkt_check(problem: &AirCompProblem, state: &ScaState) -> KktDiagnostics {
    let k_count = problem.num_devices();
    let n = problem.num_antennas();
    let terms = problem.terms();
    let j_count = terms.len();
    let c = &state.steering;
    let f = &state.f_hat;
    let s: f64 = c.iter().sum();
    let w = problem.pair_weight();
    let eps = problem.sensing_noise();

    let slack: Vec<f64> = (0..k_count)
        .map(|k| {
            let r = problem.steering_limit(k, f);
            if r > 0.0 {
                (r - c[k] * c[k]) / r
            } else {
                0.0
            }
        })
        .collect();
    let active: Vec<bool> = slack.iter().map(|&v| v <= ACTIVE_REL_SLACK).collect();
    let active_idx: Vec<usize> = (0..k_count).filter(|&k| active[k]).collect();
    let unknowns = active_idx.len() + j_count;

    // rows: alpha (J), c (K), f (N); columns: beta_active, lambda
    let rows = j_count + k_count + n;
    let mut m = DMatrix::<f64>::zeros(rows, unknowns);
    let mut rhs = DVector::<f64>::zeros(rows);
    let lambda_col = |j: usize| active_idx.len() + j;

    // Row scales come from the magnitudes of the individual summands: at a
    // stationary point the c-row coefficients of an inactive device cancel,
    // and scaling by their (tiny) net value would amplify rounding noise.
    let mut row_scale = vec![1.0; rows];
    for (j, t) in terms.iter().enumerate() {
        let a = state.alpha[j];
        m[(j, lambda_col(j))] = s * s * t.gap_sq / (a * a);
        rhs[j] = w;
        row_scale[j] = m[(j, lambda_col(j))].max(w);
    }
    for k in 0..k_count {
        let row = j_count + k;
        let mut scale = 0.0f64;
        if let Some(pos) = active_idx.iter().position(|&i| i == k) {
            m[(row, pos)] = 2.0 * c[k];
            scale = scale.max(2.0 * c[k]);
        }
        for (j, t) in terms.iter().enumerate() {
            let a = state.alpha[j];
            let parts = [2.0 * c[k] * eps[k], 2.0 * t.variance * s, -2.0 * s * t.gap_sq / a];
            m[(row, lambda_col(j))] = parts.iter().sum();
            scale = scale.max(parts.iter().map(|v| v.abs()).sum());
        }
        row_scale[row] = scale;
    }
    let grads: Vec<DVector<f64>> = active_idx.iter().map(|&k| problem.steering_limit_grad(k, f)).collect();
    let mut f_scale = 0.0f64;
    for i in 0..n {
        let row = j_count + k_count + i;
        for (pos, g) in grads.iter().enumerate() {
            m[(row, pos)] = -g[i];
        }
        for j in 0..j_count {
            m[(row, lambda_col(j))] = 2.0 * problem.noise_power() * f[i];
        }
        f_scale = f_scale.max(m.row(row).amax());
    }
    for i in 0..n {
        row_scale[j_count + k_count + i] = f_scale;
    }

    for r in 0..rows {
        if row_scale[r] > 0.0 {
            m.row_mut(r).scale_mut(1.0 / row_scale[r]);
            rhs[r] /= row_scale[r];
        }
    }
    let col_norms: Vec<f64> = (0..unknowns).map(|i| m.column(i).norm()).collect();
    let mut scaled = m.clone();
    for (i, &cn) in col_norms.iter().enumerate() {
        if cn > 0.0 {
            scaled.column_mut(i).scale_mut(1.0 / cn);
        }
    }
    let mut z = nnls(&scaled, &rhs);
    for (i, &cn) in col_norms.iter().enumerate() {
        if cn > 0.0 {
            z[i] /= cn;
        }
    }
    let residual = (&m * &z - &rhs).norm() / rhs.norm().max(1.0);

    let mut beta = vec![0.0; k_count];
    for (pos, &k) in active_idx.iter().enumerate() {
        beta[k] = z[pos];
    }
    let lambda: Vec<f64> = (0..j_count).map(|j| z[lambda_col(j)]).collect();

    let normalized_steering: Vec<f64> = c.iter().map(|v| v / s).collect();
    let inactive_products: Vec<(usize, f64)> = (0..k_count)
        .filter(|&k| !active[k])
        .map(|k| (k, normalized_steering[k] * eps[k]))
        .collect();
    let structure_deviation = if inactive_products.len() >= 2 {
        let mean = inactive_products.iter().map(|p| p.1).sum::<f64>() / inactive_products.len() as f64;
        let spread = inactive_products
            .iter()
            .map(|p| (p.1 - mean).abs())
            .fold(0.0, f64::max);
        Some(spread / mean.abs().max(f64::MIN_POSITIVE))
    } else {
        None
    };

    KktDiagnostics {
        beta,
        lambda,
        active,
        slack,
        residual,
        normalized_steering,
        inactive_products,
        structure_deviation,
        satisfied: residual < KKT_RESIDUAL_TOL,
    }
}
