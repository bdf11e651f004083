use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::AirCompProblem;
use crate::aircomp::TransceiverDesign;
use crate::error::{Error, Result};

/// Random unit-norm beamformer; each device transmits at full power.
pub fn baseline_random<R: Rng + ?Sized>(problem: &AirCompProblem, rng: &mut R) -> Result<TransceiverDesign> {
    let n = problem.num_antennas();
    let mut f_hat = DVector::<f64>::zeros(n);
    while f_hat.norm() == 0.0 {
        f_hat = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    }
    f_hat /= f_hat.norm();
    let steering = (0..problem.num_devices())
        .map(|k| problem.steering_limit(k, &f_hat).sqrt())
        .collect();
    TransceiverDesign::new(f_hat, steering, problem.channels())
}

fn top_eigenvector(m: DMatrix<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(m);
    let best = (0..eig.eigenvalues.len()).fold(0, |b, i| if eig.eigenvalues[i] > eig.eigenvalues[b] { i } else { b });
    eig.eigenvectors.column(best).clone_owned()
}

/// Channel-equalizing design: every device lands at the same steering
/// power, set by the weakest device at full power.
///
/// The beamformer is the candidate with the largest equalized power among
/// the dominant direction of `sum_k Re(h_k h_k^H)` and each device's matched
/// filter.
pub fn baseline_mmse_centroid(problem: &AirCompProblem) -> Result<TransceiverDesign> {
    let n = problem.num_antennas();
    let k_count = problem.num_devices();
    let mut total = DMatrix::<f64>::zeros(n, n);
    for k in 0..k_count {
        total += problem.channel_gram(k);
    }
    let mut candidates = vec![top_eigenvector(total)];
    candidates.extend((0..k_count).map(|k| top_eigenvector(problem.channel_gram(k).clone())));

    let equalized = |f: &DVector<f64>| {
        (0..k_count)
            .map(|k| problem.steering_limit(k, f))
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = 0;
    let mut best_value = equalized(&candidates[0]);
    for (i, f) in candidates.iter().enumerate().skip(1) {
        let v = equalized(f);
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    if !(best_value > 0.0) {
        return Err(Error::DegenerateDesign);
    }
    let f_hat = candidates.swap_remove(best);
    let c = best_value.sqrt();
    TransceiverDesign::new(f_hat, vec![c; k_count], problem.channels())
}
