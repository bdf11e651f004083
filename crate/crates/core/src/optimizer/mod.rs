//! Discriminant-gain maximization over receive beamformer and steering powers.
//!
//! With ZF precoders and a symmetric beamformer `f = f_hat (1 + j)`, the
//! design problem becomes a difference-of-convex program in
//! `(f_hat, c, alpha)`, where `alpha` holds one auxiliary gain per
//! (class pair, received element):
//!
//! ```text
//! max  w * sum alpha
//! s.t. c_k^2 <= R_k(f_hat) = 2 P_hat_k |f_hat^T h_k|^2
//!      sum_k c_k^2 eps_k^2 + delta0^2 |f_hat|^2 + sigma_m^2 (sum c)^2
//!          <= Q(c, alpha) = (sum c)^2 (mu_l,m - mu_l',m)^2 / alpha
//! ```
//!
//! [`sca_optimize`] solves it by successive convex approximation: `R_k` and
//! `Q` are replaced by their first-order expansions at the current point,
//! which yields a second-order cone program ([`ConvexSubproblem`]).

mod baselines;
mod kkt;
mod nnls;
mod sca;
mod subproblem;

pub use baselines::{baseline_mmse_centroid, baseline_random};
pub use kkt::{kkt_check, KktDiagnostics, ACTIVE_REL_SLACK, KKT_RESIDUAL_TOL};
pub use nnls::nnls;
pub use sca::{initialize_from, initialize_reference, sca_optimize, sca_optimize_observed, ScaOptions, ScaOutcome};
pub use subproblem::{build_subproblem, solve_subproblem, ConvexSubproblem, SubproblemSolution};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aircomp::{max_precoding_power, real_projection};
use crate::channel_sim::{ChannelRealization, DeviceProfile, NoiseModel};
use crate::error::{Error, Result};
use crate::feature_model::{received_gain_from_parts, FeatureStatistics};

/// Auxiliary gain variables below this floor are clamped inside subproblems.
pub const ALPHA_FLOOR: f64 = 1e-10;
/// References with an auxiliary gain at or below this value are rejected.
pub const ALPHA_DEGENERATE: f64 = 1e-12;
/// Terms whose per-element gain is below this fraction of the largest are
/// dropped from the variable set; they contribute at most that fraction.
const TERM_REL_CUTOFF: f64 = 1e-9;
/// Devices whose channel is this close to orthogonal to `f_hat` get zero steering power.
const NULL_COSINE: f64 = 1e-10;

/// One `(class pair, received element)` gain term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainTerm {
    pub classes: (usize, usize),
    /// Position of the element inside the transmitted pair (0 or 1).
    pub element: usize,
    pub dim: usize,
    /// `(mu_l,m - mu_l',m)^2`.
    pub gap_sq: f64,
    /// `sigma_m^2`.
    pub variance: f64,
}

/// Fixed data of one design problem: a feature pair, channels and devices.
#[derive(Clone, Debug)]
pub struct AirCompProblem {
    stats: FeatureStatistics,
    dims: Vec<usize>,
    channels: ChannelRealization,
    sensing_noise: Vec<f64>,
    transmit_power: Vec<f64>,
    second_moment: Vec<f64>,
    max_precoding_power: Vec<f64>,
    noise_power: f64,
    gram: Vec<DMatrix<f64>>,
    terms: Vec<GainTerm>,
}

impl AirCompProblem {
    /// `dims` lists the one or two feature elements sent in a symbol.
    pub fn new(
        stats: &FeatureStatistics,
        dims: &[usize],
        channels: &ChannelRealization,
        profiles: &[DeviceProfile],
        noise: &NoiseModel,
    ) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(Error::invalid("a symbol carries one or two feature elements"));
        }
        if dims.len() == 2 && dims[0] == dims[1] {
            return Err(Error::invalid("paired feature elements must differ"));
        }
        for &m in dims {
            stats.check_dim(m)?;
        }
        if profiles.len() != channels.num_devices() {
            return Err(Error::DimensionMismatch {
                what: "device profiles vs channels",
                expected: channels.num_devices(),
                got: profiles.len(),
            });
        }
        let sensing_noise: Vec<f64> = profiles.iter().map(|p| p.sensing_noise).collect();
        let transmit_power: Vec<f64> = profiles.iter().map(|p| p.transmit_power).collect();
        let second_moment = sensing_noise
            .iter()
            .map(|&e| stats.symbol_second_moment(e, dims))
            .collect::<Result<Vec<_>>>()?;
        let max_precoding_power = transmit_power
            .iter()
            .zip(&second_moment)
            .map(|(&p, &m)| max_precoding_power(p, m))
            .collect::<Result<Vec<_>>>()?;
        let gram = channels
            .vectors()
            .map(|h| {
                let re = h.map(|z| z.re);
                let im = h.map(|z| z.im);
                &re * re.transpose() + &im * im.transpose()
            })
            .collect();

        let mut terms = Vec::new();
        for (element, &dim) in dims.iter().enumerate() {
            for (a, b) in stats.class_pairs() {
                terms.push(GainTerm {
                    classes: (a, b),
                    element,
                    dim,
                    gap_sq: stats.centroid_gap_sq(a, b, dim),
                    variance: stats.variance(dim),
                });
            }
        }
        let top = terms.iter().map(|t| t.gap_sq / t.variance).fold(0.0, f64::max);
        terms.retain(|t| t.gap_sq > 0.0 && t.gap_sq / t.variance > TERM_REL_CUTOFF * top);
        if terms.is_empty() {
            return Err(Error::invalid("no class pair is separated on the selected elements"));
        }

        Ok(AirCompProblem {
            stats: stats.clone(),
            dims: dims.to_vec(),
            channels: channels.clone(),
            sensing_noise,
            transmit_power,
            second_moment,
            max_precoding_power,
            noise_power: noise.power(),
            gram,
            terms,
        })
    }

    pub fn stats(&self) -> &FeatureStatistics {
        &self.stats
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn channels(&self) -> &ChannelRealization {
        &self.channels
    }

    pub fn num_devices(&self) -> usize {
        self.sensing_noise.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.channels.num_antennas()
    }

    pub fn sensing_noise(&self) -> &[f64] {
        &self.sensing_noise
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn transmit_power(&self) -> &[f64] {
        &self.transmit_power
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    pub fn max_precoding_power(&self) -> &[f64] {
        &self.max_precoding_power
    }

    pub fn terms(&self) -> &[GainTerm] {
        &self.terms
    }

    /// `2 / (L (L - 1))`.
    pub fn pair_weight(&self) -> f64 {
        self.stats.pair_weight()
    }

    /// `Re(h h^H) = Re(h) Re(h)^T + Im(h) Im(h)^T` for device `k`.
    pub fn channel_gram(&self, k: usize) -> &DMatrix<f64> {
        &self.gram[k]
    }

    /// `R_k(f_hat) = 2 P_hat_k f_hat^T Re(h h^H) f_hat`.
    pub fn steering_limit(&self, k: usize, f_hat: &DVector<f64>) -> f64 {
        2.0 * self.max_precoding_power[k] * real_projection(f_hat, self.channels.h(k)).norm_sqr()
    }

    /// Gradient of `R_k` in `f_hat`.
    pub fn steering_limit_grad(&self, k: usize, f_hat: &DVector<f64>) -> DVector<f64> {
        &self.gram[k] * f_hat * (4.0 * self.max_precoding_power[k])
    }

    /// `Q(c, alpha) = (sum c)^2 gap^2 / alpha` for term `j`.
    pub fn q_value(&self, j: usize, steering: &[f64], alpha: f64) -> f64 {
        let s: f64 = steering.iter().sum();
        s * s * self.terms[j].gap_sq / alpha
    }

    /// Left-hand side of the gain constraint of term `j`: received variance.
    pub fn received_variance(&self, j: usize, steering: &[f64], f_hat: &DVector<f64>) -> f64 {
        let s: f64 = steering.iter().sum();
        let sensing: f64 = steering
            .iter()
            .zip(&self.sensing_noise)
            .map(|(c, e)| c * c * e)
            .sum();
        sensing + self.noise_power * f_hat.norm_squared() + self.terms[j].variance * s * s
    }

    /// The largest `alpha_j` compatible with `(f_hat, c)`.
    pub fn exact_alpha(&self, j: usize, steering: &[f64], f_hat: &DVector<f64>) -> f64 {
        let s: f64 = steering.iter().sum();
        s * s * self.terms[j].gap_sq / self.received_variance(j, steering, f_hat)
    }

    /// Achieved discriminant gain of the pair under `(f_hat, c)`.
    pub fn gain(&self, steering: &[f64], f_hat: &DVector<f64>) -> Result<f64> {
        received_gain_from_parts(&self.stats, steering, f_hat, &self.sensing_noise, self.noise_power, &self.dims)
    }

    /// Largest relative violation of the original (non-relaxed) constraints.
    pub fn max_violation(&self, f_hat: &DVector<f64>, steering: &[f64], alpha: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (k, &c) in steering.iter().enumerate() {
            let r = self.steering_limit(k, f_hat);
            let scale = r.max(c * c).max(f64::MIN_POSITIVE);
            worst = worst.max((c * c - r) / scale);
            worst = worst.max(-c / c.abs().max(1.0));
        }
        for (j, &a) in alpha.iter().enumerate() {
            let lhs = self.received_variance(j, steering, f_hat);
            let q = self.q_value(j, steering, a);
            let scale = lhs.max(q).max(f64::MIN_POSITIVE);
            worst = worst.max((lhs - q) / scale);
        }
        worst
    }
}

/// SCA iterate: beamformer half, steering powers, auxiliary gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaState {
    pub f_hat: DVector<f64>,
    pub steering: Vec<f64>,
    /// One entry per [`GainTerm`] of the problem.
    pub alpha: Vec<f64>,
    /// Achieved discriminant gain at `(f_hat, steering)`.
    pub objective: f64,
    pub iteration: usize,
    /// Objective after each iteration.
    pub trace: Vec<f64>,
}

impl ScaState {
    /// Builds a feasible state with every gain constraint tight.
    pub(crate) fn tightened(problem: &AirCompProblem, f_hat: DVector<f64>, steering: Vec<f64>) -> Result<Self> {
        let norm = f_hat.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Internal("beamformer has zero or non-finite norm".into()));
        }
        let f_hat = f_hat / norm;
        let mut steering: Vec<f64> = steering.iter().map(|c| c / norm).collect();
        for (k, c) in steering.iter_mut().enumerate() {
            let cap = problem.steering_limit(k, &f_hat).sqrt();
            let h_norm = problem.channels().h(k).norm();
            let cos = real_projection(&f_hat, problem.channels().h(k)).norm() / h_norm.max(f64::MIN_POSITIVE);
            // a (numerically) nulled device cannot be zero-forced
            *c = if cos <= NULL_COSINE { 0.0 } else { c.clamp(0.0, cap) };
        }
        if steering.iter().sum::<f64>() <= 0.0 {
            return Err(Error::DegenerateDesign);
        }
        let alpha = (0..problem.terms().len())
            .map(|j| problem.exact_alpha(j, &steering, &f_hat))
            .collect();
        let objective = problem.gain(&steering, &f_hat)?;
        Ok(ScaState {
            f_hat,
            steering,
            alpha,
            objective,
            iteration: 0,
            trace: Vec::new(),
        })
    }

    /// Pair-weighted sum of the auxiliary gains (the relaxed objective).
    pub fn alpha_objective(&self, problem: &AirCompProblem) -> f64 {
        problem.pair_weight() * self.alpha.iter().sum::<f64>()
    }
}
