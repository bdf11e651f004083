//! Sensing data, uplink channels and receiver noise.
//!
//! Channels follow the usual cellular model: distance path loss
//! `128.1 + 37.6 log10(d_km)` dB, log-normal shadowing and i.i.d. Rayleigh
//! small-scale fading. Channel vectors can be expressed relative to a
//! reference noise power, so that a unit receiver noise power corresponds to
//! that physical noise level.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_model::FeatureStatistics;
use crate::rng::{self, Domain};

/// Static per-device parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    /// Sensing-noise power `eps_k^2` on each feature element.
    pub sensing_noise: f64,
    /// Transmit power budget in watts.
    pub transmit_power: f64,
    /// Position relative to the access point, meters.
    pub position: [f64; 2],
}

impl DeviceProfile {
    pub fn new(sensing_noise: f64, transmit_power: f64, position: [f64; 2]) -> Result<Self> {
        if !(sensing_noise >= 0.0 && sensing_noise.is_finite()) {
            return Err(Error::invalid("sensing noise power must be finite and nonnegative"));
        }
        if !(transmit_power > 0.0 && transmit_power.is_finite()) {
            return Err(Error::invalid("transmit power must be finite and positive"));
        }
        Ok(DeviceProfile {
            sensing_noise,
            transmit_power,
            position,
        })
    }

    pub fn distance_m(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Path loss in dB for a distance in kilometers.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::invalid("distance must be positive"));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Uniform placement in the annulus `min_radius <= r <= radius` (meters).
pub fn place_devices<R: Rng + ?Sized>(count: usize, radius: f64, min_radius: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let (r2_lo, r2_hi) = (min_radius * min_radius, radius * radius);
    (0..count)
        .map(|_| {
            let r = rng.gen_range(r2_lo..=r2_hi).sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

/// One device's uplink channel and the components it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceChannel {
    pub h: DVector<Complex64>,
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    /// Large-scale coefficient `-PL + zeta` in dB.
    pub large_scale_db: f64,
    pub small_scale: DVector<Complex64>,
}

/// Channels of all devices for one coherence interval.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub devices: Vec<DeviceChannel>,
}

impl ChannelRealization {
    /// Builds a realization from explicit channel vectors (components unknown).
    pub fn from_vectors(h: Vec<DVector<Complex64>>) -> Result<Self> {
        let n = h.first().map(|v| v.len()).ok_or_else(|| Error::invalid("at least one device"))?;
        if n == 0 {
            return Err(Error::invalid("at least one receive antenna"));
        }
        let mut devices = Vec::with_capacity(h.len());
        for v in h {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "channel length",
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::invalid("channel entries must be finite"));
            }
            devices.push(DeviceChannel {
                small_scale: v.clone(),
                h: v,
                path_loss_db: 0.0,
                shadowing_db: 0.0,
                large_scale_db: 0.0,
            });
        }
        Ok(ChannelRealization { devices })
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.devices[0].h.len()
    }

    pub fn h(&self, k: usize) -> &DVector<Complex64> {
        &self.devices[k].h
    }

    pub fn vectors(&self) -> impl Iterator<Item = &DVector<Complex64>> {
        self.devices.iter().map(|d| &d.h)
    }
}

/// Parameters of the uplink channel model.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub antennas: usize,
    /// Shadowing variance `sigma_zeta^2` in dB^2.
    pub shadowing_variance_db: f64,
    /// Channel gains are divided by this power; 1.0 gives physical gains.
    pub reference_noise_power: f64,
}

impl ChannelModel {
    pub fn new(antennas: usize, shadowing_variance_db: f64) -> Self {
        ChannelModel {
            antennas,
            shadowing_variance_db,
            reference_noise_power: 1.0,
        }
    }

    pub fn with_reference_noise(mut self, power: f64) -> Self {
        self.reference_noise_power = power;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::invalid("at least one receive antenna"));
        }
        if !(self.shadowing_variance_db >= 0.0) {
            return Err(Error::invalid("shadowing variance must be nonnegative"));
        }
        if !(self.reference_noise_power > 0.0) {
            return Err(Error::invalid("reference noise power must be positive"));
        }
        Ok(())
    }

    /// Draws one device's channel from `rng`.
    pub fn sample_device<R: Rng + ?Sized>(&self, device: usize, profile: &DeviceProfile, rng: &mut R) -> Result<DeviceChannel> {
        self.validate()?;
        let dist_m = profile.distance_m();
        if !(dist_m > 0.0) {
            return Err(Error::ZeroDistance { device });
        }
        let path_loss_db = path_loss_db(dist_m / 1000.0)?;
        let z: f64 = StandardNormal.sample(rng);
        let shadowing_db = self.shadowing_variance_db.sqrt() * z;
        let large_scale_db = -path_loss_db + shadowing_db;
        let amplitude = (db_to_linear(large_scale_db) / self.reference_noise_power).sqrt();
        let small_scale = complex_gaussian(self.antennas, 1.0, rng);
        Ok(DeviceChannel {
            h: &small_scale * Complex64::new(amplitude, 0.0),
            path_loss_db,
            shadowing_db,
            large_scale_db,
            small_scale,
        })
    }

    /// Draws all devices' channels sequentially from one generator.
    pub fn sample<R: Rng + ?Sized>(&self, profiles: &[DeviceProfile], rng: &mut R) -> Result<ChannelRealization> {
        let devices = profiles
            .iter()
            .enumerate()
            .map(|(k, p)| self.sample_device(k, p, rng))
            .collect::<Result<Vec<_>>>()?;
        if devices.is_empty() {
            return Err(Error::invalid("at least one device"));
        }
        Ok(ChannelRealization { devices })
    }

    /// Draws each device's channel from its own sub-stream, so a device's
    /// channel does not depend on how many other devices exist.
    pub fn sample_streams(&self, profiles: &[DeviceProfile], seed: u64, block: u64) -> Result<ChannelRealization> {
        let devices = profiles
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let mut r = rng::substream_keyed(seed, Domain::ChannelBlock, block, k as u64);
                self.sample_device(k, p, &mut r)
            })
            .collect::<Result<Vec<_>>>()?;
        if devices.is_empty() {
            return Err(Error::invalid("at least one device"));
        }
        Ok(ChannelRealization { devices })
    }
}

/// Physical-gain channels: `h_k = sqrt(lin(-PL_k + zeta_k)) rho_k`.
pub fn sample_channels<R: Rng + ?Sized>(
    profiles: &[DeviceProfile],
    antennas: usize,
    shadowing_variance_db: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    ChannelModel::new(antennas, shadowing_variance_db).sample(profiles, rng)
}

/// Circularly-symmetric complex Gaussian vector with total per-entry power `power`.
pub fn complex_gaussian<R: Rng + ?Sized>(len: usize, power: f64, rng: &mut R) -> DVector<Complex64> {
    let s = (power / 2.0).sqrt();
    DVector::from_fn(len, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(s * re, s * im)
    })
}

/// Receiver noise `n ~ CN(0, delta0^2 I)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    power: f64,
}

impl NoiseModel {
    pub fn new(power: f64) -> Result<Self> {
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::invalid("noise power must be finite and nonnegative"));
        }
        Ok(NoiseModel { power })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Real and imaginary parts are independent `N(0, delta0^2 / 2)`.
    pub fn sample<R: Rng + ?Sized>(&self, antennas: usize, rng: &mut R) -> DVector<Complex64> {
        if self.power == 0.0 {
            return DVector::zeros(antennas);
        }
        complex_gaussian(antennas, self.power, rng)
    }
}

pub fn sample_rx_noise<R: Rng + ?Sized>(noise: &NoiseModel, antennas: usize, rng: &mut R) -> DVector<Complex64> {
    noise.sample(antennas, rng)
}

/// Ground truth and per-device local features for one sensing event.
#[derive(Clone, Debug)]
pub struct Observation {
    pub class: usize,
    pub truth: DVector<f64>,
    pub local: Vec<DVector<f64>>,
}

/// Draws `x ~ N(mu_class, Sigma)`.
pub fn sample_ground_truth<R: Rng + ?Sized>(stats: &FeatureStatistics, class: usize, rng: &mut R) -> Result<DVector<f64>> {
    if class >= stats.num_classes() {
        return Err(Error::IndexOutOfRange {
            what: "class",
            index: class,
            bound: stats.num_classes(),
        });
    }
    Ok(DVector::from_fn(stats.num_dims(), |m, _| {
        let z: f64 = StandardNormal.sample(rng);
        stats.centroid(class, m) + stats.variance(m).sqrt() * z
    }))
}

/// Adds per-device sensing noise `d_k ~ N(0, eps_k^2 I)` to a shared ground truth.
pub fn sample_observation<R: Rng + ?Sized>(truth: &DVector<f64>, sensing_noise: f64, rng: &mut R) -> DVector<f64> {
    if sensing_noise == 0.0 {
        return truth.clone();
    }
    let s = sensing_noise.sqrt();
    truth.map(|v| {
        let z: f64 = StandardNormal.sample(rng);
        v + s * z
    })
}

/// One ground-truth draw of class `class` observed by every device.
pub fn sample_observations<R: Rng + ?Sized>(
    stats: &FeatureStatistics,
    class: usize,
    profiles: &[DeviceProfile],
    rng: &mut R,
) -> Result<Observation> {
    let truth = sample_ground_truth(stats, class, rng)?;
    let local = profiles
        .iter()
        .map(|p| sample_observation(&truth, p.sensing_noise, rng))
        .collect();
    Ok(Observation { class, truth, local })
}
