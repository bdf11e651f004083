#![allow(dead_code)]

use aircomp_core::channel_sim::{dbm_to_watts, place_devices, ChannelModel, ChannelRealization, DeviceProfile, NoiseModel};
use aircomp_core::feature_model::FeatureStatistics;
use aircomp_core::optimizer::AirCompProblem;
use aircomp_core::rng::{substream, Domain};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct Instance {
    pub stats: FeatureStatistics,
    pub profiles: Vec<DeviceProfile>,
    pub channels: ChannelRealization,
    pub noise: NoiseModel,
    pub dims: Vec<usize>,
}

impl Instance {
    pub fn problem(&self) -> AirCompProblem {
        AirCompProblem::new(&self.stats, &self.dims, &self.channels, &self.profiles, &self.noise).unwrap()
    }
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Four classes, twelve unit-variance dims, Gaussian centroids.
pub fn random_stats(seed: u64) -> FeatureStatistics {
    let mut rng = substream(seed, Domain::SyntheticFeatures, 99);
    let c: Vec<Vec<f64>> = (0..4).map(|_| (0..12).map(|_| normal(&mut rng)).collect()).collect();
    FeatureStatistics::new(c, vec![1.0; 12]).unwrap()
}

/// Random scenario in the normalized channel scale (reference power 1e-11 W).
pub fn instance(seed: u64, devices: usize, antennas: usize, eps: &[f64], power_dbm: f64, noise_power: f64) -> Instance {
    let stats = random_stats(seed);
    let mut rng = substream(seed, Domain::Placement, 99);
    let pos = place_devices(devices, 50.0, 1.0, &mut rng);
    let profiles: Vec<DeviceProfile> = pos
        .iter()
        .enumerate()
        .map(|(k, &p)| DeviceProfile::new(eps[k % eps.len()], dbm_to_watts(power_dbm), p).unwrap())
        .collect();
    let channels = ChannelModel::new(antennas, 8.0)
        .with_reference_noise(1e-11)
        .sample_streams(&profiles, seed, 99)
        .unwrap();
    let dims = stats.ranked_dims()[..2].to_vec();
    Instance {
        stats,
        profiles,
        channels,
        noise: NoiseModel::new(noise_power).unwrap(),
        dims,
    }
}

/// Largest gain for a fixed beamformer and steering direction `w >= 0`:
/// the gain grows with the overall scale, so the scale is pushed until the
/// first power limit binds.
fn scaled_gain(p: &AirCompProblem, f: &DVector<f64>, w: &[f64], limit: &dyn Fn(usize) -> f64) -> f64 {
    let scale = (0..w.len())
        .filter(|&k| w[k] > 0.0)
        .map(|k| limit(k).sqrt() / w[k])
        .fold(f64::INFINITY, f64::min);
    if !(scale > 0.0 && scale.is_finite()) {
        return 0.0;
    }
    let c: Vec<f64> = w.iter().map(|v| v * scale).collect();
    p.gain(&c, f).unwrap_or(0.0)
}

/// Dense search over `f_hat` angle and steering ratio for K = 2, N = 2,
/// followed by a finer pass around the best cell.
pub fn grid_oracle_2x2(p: &AirCompProblem, steps: usize) -> (f64, f64, f64) {
    assert_eq!((p.num_devices(), p.num_antennas()), (2, 2));
    let eval = |th: f64, t: f64| {
        let f = DVector::from_vec(vec![th.cos(), th.sin()]);
        scaled_gain(p, &f, &[t, 1.0 - t], &|k| p.steering_limit(k, &f))
    };
    let pi = std::f64::consts::PI;
    let mut best = (0.0, 0.0, 0.0);
    for a in 0..steps {
        let th = pi * a as f64 / steps as f64;
        for b in 0..=steps {
            let t = b as f64 / steps as f64;
            let g = eval(th, t);
            if g > best.0 {
                best = (g, th, t);
            }
        }
    }
    let (dth, dt) = (pi / steps as f64, 1.0 / steps as f64);
    let (_, th0, t0) = best;
    for a in -(steps as i64)..=steps as i64 {
        let th = th0 + dth * a as f64 / steps as f64;
        for b in -(steps as i64)..=steps as i64 {
            let t = (t0 + dt * b as f64 / steps as f64).clamp(0.0, 1.0);
            let g = eval(th, t);
            if g > best.0 {
                best = (g, th, t);
            }
        }
    }
    best
}

/// Best gain over independent real/imaginary beamformers `f1`, `f2` for
/// N = 2, K <= 2. Power limits are `P_hat (|f1^T h|^2 + |f2^T h|^2)` and the
/// noise is `delta0^2 / 2 (|f1|^2 + |f2|^2)`; both depend on `(f1, f2)` only
/// through `X = f1 f1^T + f2 f2^T`, a 2x2 PSD matrix whose trace is fixed
/// to 2 by scale invariance. The disk `X = [[1 + a, b], [b, 1 - a]]`,
/// `a^2 + b^2 <= 1` is gridded in polar coordinates.
pub fn general_beamformer_oracle(p: &AirCompProblem, steps: usize) -> f64 {
    assert_eq!(p.num_antennas(), 2);
    let k_count = p.num_devices();
    assert!(k_count <= 2);
    let p_hat = p.max_precoding_power();
    let mut best = 0.0f64;
    for ri in 0..=steps {
        let r = ri as f64 / steps as f64;
        let n_angles = if ri == 0 { 1 } else { 4 * steps };
        for ai in 0..n_angles {
            let phi = 2.0 * std::f64::consts::PI * ai as f64 / n_angles as f64;
            let x = DMatrix::from_row_slice(2, 2, &[1.0 + r * phi.cos(), r * phi.sin(), r * phi.sin(), 1.0 - r * phi.cos()]);
            let limit = |k: usize| p_hat[k] * (p.channel_gram(k) * &x).trace();
            // any unit-norm f_hat gives the same noise term delta0^2 |f_hat|^2 = delta0^2 (|f1|^2 + |f2|^2) / 2
            let f = DVector::from_vec(vec![1.0, 0.0]);
            let ws: Vec<Vec<f64>> = if k_count == 1 {
                vec![vec![1.0]]
            } else {
                (0..=steps).map(|b| {
                    let t = b as f64 / steps as f64;
                    vec![t, 1.0 - t]
                }).collect()
            };
            for w in &ws {
                best = best.max(scaled_gain(p, &f, w, &limit));
            }
        }
    }
    best
}

/// Monte-Carlo accuracy of the Bayes rule on the ground-truth mixture,
/// restricted to `dims`. Independent of the library's classifier.
pub fn bayes_oracle(stats: &FeatureStatistics, dims: &[usize], draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = substream(seed, Domain::Trials, 7_000_000);
    let l = stats.num_classes();
    let mut correct = 0usize;
    for _ in 0..draws {
        let class = rng.gen_range(0..l);
        let x: Vec<f64> = (0..stats.num_dims())
            .map(|m| stats.centroid(class, m) + stats.variance(m).sqrt() * normal(&mut rng))
            .collect();
        let mut best = (f64::NEG_INFINITY, 0);
        for c in 0..l {
            let ll: f64 = dims
                .iter()
                .map(|&m| -(x[m] - stats.centroid(c, m)).powi(2) / (2.0 * stats.variance(m)))
                .sum();
            if ll > best.0 {
                best = (ll, c);
            }
        }
        correct += (best.1 == class) as usize;
    }
    let acc = correct as f64 / draws as f64;
    (acc, (acc * (1.0 - acc) / draws as f64).sqrt())
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix; eigenvalues
/// sorted descending with matching eigenvector columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}
