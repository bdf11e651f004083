use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::baselines::baseline_mmse_centroid;
use super::subproblem::{build_subproblem, solve_subproblem, ConvexSubproblem};
use super::{AirCompProblem, ScaState};
use crate::aircomp::TransceiverDesign;
use crate::error::{Error, Result};

/// Initial steering powers sit this fraction below the power limit.
const INITIAL_BACKOFF: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaOptions {
    pub max_iter: usize,
    /// Stop when one iteration improves the objective by less than this fraction.
    pub rel_tol: f64,
    /// Also start from the channel-equalizing design and each device's matched
    /// filter, keeping the best result.
    pub multi_start: bool,
}

impl Default for ScaOptions {
    fn default() -> Self {
        ScaOptions {
            max_iter: 100,
            rel_tol: 1e-5,
            multi_start: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScaOutcome {
    pub design: TransceiverDesign,
    pub state: ScaState,
    pub converged: bool,
}

/// Principal eigenvector of a symmetric PSD matrix, sign-normalized so the
/// largest-magnitude entry is positive. Ties go to the lowest eigen-index.
fn principal_direction(m: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let best = (0..n).fold(0, |best, i| if eig.eigenvalues[i] > eig.eigenvalues[best] { i } else { best });
    let mut v = eig.eigenvectors.column(best).clone_owned();
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let lead = v.iamax();
    if v[lead] < 0.0 {
        v.neg_mut();
    }
    Some((eig.eigenvalues[best], v))
}

/// Feasible starting point from a given beamformer: every device at
/// (just below) full power, auxiliary gains tight.
pub fn initialize_from(problem: &AirCompProblem, f_hat: DVector<f64>) -> Result<ScaState> {
    if f_hat.len() != problem.num_antennas() {
        return Err(Error::DimensionMismatch {
            what: "beamformer length vs antennas",
            expected: problem.num_antennas(),
            got: f_hat.len(),
        });
    }
    let steering = (0..problem.num_devices())
        .map(|k| problem.steering_limit(k, &f_hat).sqrt() * (1.0 - INITIAL_BACKOFF))
        .collect();
    ScaState::tightened(problem, f_hat, steering)
}

/// Starting point along the dominant direction of the power-weighted
/// channel Gram matrix `sum_k P_hat_k Re(h_k h_k^H)`.
pub fn initialize_reference(problem: &AirCompProblem) -> Result<ScaState> {
    let n = problem.num_antennas();
    let mut total = DMatrix::<f64>::zeros(n, n);
    for k in 0..problem.num_devices() {
        total += problem.channel_gram(k) * problem.max_precoding_power()[k];
    }
    if total.amax() == 0.0 {
        return Err(Error::ZeroChannels);
    }
    let f_hat = match principal_direction(&total) {
        Some((lambda, v)) if lambda > 0.0 => v,
        _ => {
            // matched filter to the summed channel
            let sum = problem
                .channels()
                .vectors()
                .fold(DVector::zeros(n), |acc: DVector<f64>, h| acc + h.map(|z| z.re + z.im));
            if sum.norm() == 0.0 {
                return Err(Error::ZeroChannels);
            }
            sum
        }
    };
    initialize_from(problem, f_hat)
}

/// Per-device matched filters: the real direction maximizing `|f^T h_k|`.
fn matched_filters(problem: &AirCompProblem) -> Vec<DVector<f64>> {
    (0..problem.num_devices())
        .filter_map(|k| principal_direction(problem.channel_gram(k)))
        .filter(|(lambda, _)| *lambda > 0.0)
        .map(|(_, v)| v)
        .collect()
}

/// Longest doubling of the SCA step tried by [`extrapolate`].
const MAX_EXTRAPOLATION: f64 = 1024.0;

/// Pushes along the direction from `reference` to the subproblem solution
/// while the (re-tightened) objective keeps improving. SCA steps are
/// conservative because the tangent planes under-estimate `R_k` and `Q_j`.
fn extrapolate(
    problem: &AirCompProblem,
    reference: &ScaState,
    f_hat: &DVector<f64>,
    steering: &[f64],
    candidate: ScaState,
) -> ScaState {
    let df = f_hat - &reference.f_hat;
    let dc: Vec<f64> = steering.iter().zip(&reference.steering).map(|(a, b)| a - b).collect();
    let mut best = candidate;
    let mut t = 2.0;
    while t <= MAX_EXTRAPOLATION {
        let f = &reference.f_hat + &df * t;
        let c: Vec<f64> = reference.steering.iter().zip(&dc).map(|(b, d)| b + t * d).collect();
        match ScaState::tightened(problem, f, c) {
            Ok(s) if s.objective > best.objective => best = s,
            _ => break,
        }
        t *= 2.0;
    }
    best
}

/// Runs SCA from one start; `observer` sees every reference, its subproblem
/// and the accepted next state.
fn run_from<F>(problem: &AirCompProblem, start: ScaState, options: &ScaOptions, observer: &mut F) -> Result<(ScaState, bool)>
where
    F: FnMut(&ScaState, &ConvexSubproblem, &ScaState),
{
    let mut state = start;
    let mut converged = false;
    while state.iteration < options.max_iter {
        let sub = build_subproblem(problem, &state)?;
        let sol = solve_subproblem(problem, &sub)?;
        let candidate = ScaState::tightened(problem, sol.f_hat.clone(), sol.steering.clone())
            .map(|c| extrapolate(problem, &state, &sol.f_hat, &sol.steering, c));
        let mut next = match candidate {
            Ok(c) if c.objective >= state.objective => c,
            // the solver returned no improvement (or a degenerate point)
            _ => ScaState {
                trace: Vec::new(),
                ..state.clone()
            },
        };
        next.iteration = state.iteration + 1;
        next.trace = std::mem::take(&mut state.trace);
        next.trace.push(next.objective);
        let improvement = next.objective - state.objective;
        let rel = improvement / state.objective.abs().max(f64::MIN_POSITIVE);
        observer(&state, &sub, &next);
        state = next;
        if rel < options.rel_tol {
            converged = true;
            break;
        }
    }
    let trace_ok = state.trace.windows(2).all(|w| w[1] >= w[0]);
    if !trace_ok {
        return Err(Error::Internal("SCA objective trace decreased".into()));
    }
    Ok((state, converged))
}

/// Successive convex approximation for the discriminant-gain problem.
pub fn sca_optimize(problem: &AirCompProblem, options: &ScaOptions) -> Result<ScaOutcome> {
    sca_optimize_observed(problem, options, |_, _, _| {})
}

/// [`sca_optimize`] with a per-iteration observer.
pub fn sca_optimize_observed<F>(problem: &AirCompProblem, options: &ScaOptions, mut observer: F) -> Result<ScaOutcome>
where
    F: FnMut(&ScaState, &ConvexSubproblem, &ScaState),
{
    let mut starts = vec![initialize_reference(problem)?];
    if options.multi_start && problem.num_devices() > 1 {
        if let Ok(eq) = baseline_mmse_centroid(problem) {
            if let Ok(s) = ScaState::tightened(problem, eq.f_hat().clone(), eq.steering().to_vec()) {
                starts.push(s);
            }
        }
        for f in matched_filters(problem) {
            if let Ok(s) = initialize_from(problem, f) {
                starts.push(s);
            }
        }
    }
    let mut best: Option<(ScaState, bool)> = None;
    let mut first_err = None;
    for start in starts {
        match run_from(problem, start, options, &mut observer) {
            Ok((state, converged)) => {
                if best.as_ref().map_or(true, |(b, _)| state.objective > b.objective) {
                    best = Some((state, converged));
                }
            }
            // a weak extra start does not sink the others
            Err(e @ Error::DegenerateReference { .. }) => {
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    let (state, converged) = match (best, first_err) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => return Err(Error::Internal("no SCA start".into())),
    };
    let design = TransceiverDesign::new(state.f_hat.clone(), state.steering.clone(), problem.channels())?;
    Ok(ScaOutcome {
        design,
        state,
        converged,
    })
}
