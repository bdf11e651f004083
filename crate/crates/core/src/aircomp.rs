//! Over-the-air aggregation with zero-forcing precoders.
//!
//! Each device packs two feature elements into one complex symbol
//! `s_k = x_{k,m1} + j x_{k,m2}`, scales it by a precoder `b_k` and transmits.
//! The server applies the receive beamformer `f = f_hat (1 + j)` and reads the
//! two aggregated elements from the real and imaginary parts of `f^H y`.
//! Precoders are zero-forcing: `f^H h_k b_k = c_k` for steering powers `c_k`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel_sim::ChannelRealization;
use crate::error::{Error, Result};

const ZF_REL_TOL: f64 = 1e-8;
const POWER_REL_TOL: f64 = 1e-8;
const NULL_REL_TOL: f64 = 1e-12;

/// `f = f_hat + j f_hat`.
pub fn full_beamformer(f_hat: &DVector<f64>) -> DVector<Complex64> {
    f_hat.map(|v| Complex64::new(v, v))
}

/// `f_hat^T h` (no conjugation).
pub fn real_projection(f_hat: &DVector<f64>, h: &DVector<Complex64>) -> Complex64 {
    f_hat.iter().zip(h.iter()).map(|(&f, &z)| z * f).sum()
}

/// `R_k(f_hat) = 2 P_hat_k |f_hat^T h_k|^2`, the largest admissible `c_k^2`.
pub fn steering_limit(f_hat: &DVector<f64>, h: &DVector<Complex64>, max_precoding_power: f64) -> f64 {
    2.0 * max_precoding_power * real_projection(f_hat, h).norm_sqr()
}

/// `P_hat_k = P_k / E|s_k|^2`.
pub fn max_precoding_power(transmit_power: f64, second_moment: f64) -> Result<f64> {
    if !(second_moment > 0.0) {
        return Err(Error::invalid("symbol second moment must be positive"));
    }
    if !(transmit_power > 0.0) {
        return Err(Error::invalid("transmit power must be positive"));
    }
    Ok(transmit_power / second_moment)
}

/// `s_k = x_{m1} + j x_{m2}`; a missing second element leaves the imaginary part at zero.
pub fn pack_symbol(features: &DVector<f64>, m1: usize, m2: Option<usize>) -> Result<Complex64> {
    let check = |m: usize| {
        if m >= features.len() {
            Err(Error::IndexOutOfRange {
                what: "feature dimension",
                index: m,
                bound: features.len(),
            })
        } else {
            Ok(())
        }
    };
    check(m1)?;
    if let Some(m2) = m2 {
        check(m2)?;
        if m1 == m2 {
            return Err(Error::invalid("packed elements must be distinct"));
        }
    }
    Ok(Complex64::new(features[m1], m2.map_or(0.0, |m| features[m])))
}

/// ZF precoders `b_k = c_k (h_k^H f) / |f^H h_k|^2`.
pub fn zf_precoders(f_hat: &DVector<f64>, channels: &ChannelRealization, steering: &[f64]) -> Result<Vec<Complex64>> {
    if steering.len() != channels.num_devices() {
        return Err(Error::DimensionMismatch {
            what: "steering powers vs devices",
            expected: channels.num_devices(),
            got: steering.len(),
        });
    }
    if f_hat.len() != channels.num_antennas() {
        return Err(Error::DimensionMismatch {
            what: "beamformer length vs antennas",
            expected: channels.num_antennas(),
            got: f_hat.len(),
        });
    }
    let f = full_beamformer(f_hat);
    channels
        .vectors()
        .zip(steering)
        .enumerate()
        .map(|(k, (h, &c))| {
            if c == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let g = f.dotc(h);
            if g.norm() <= NULL_REL_TOL * f.norm() * h.norm() {
                return Err(Error::BeamformerNullsDevice { device: k });
            }
            Ok(g.conj() * c / g.norm_sqr())
        })
        .collect()
}

/// A complete transceiver: symmetric beamformer half, steering powers and
/// the ZF precoders derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignDocument", into = "DesignDocument")]
pub struct TransceiverDesign {
    f_hat: DVector<f64>,
    steering: Vec<f64>,
    precoders: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct DesignDocument {
    f_hat: Vec<f64>,
    c: Vec<f64>,
    b_re: Vec<f64>,
    b_im: Vec<f64>,
}

impl TryFrom<DesignDocument> for TransceiverDesign {
    type Error = Error;

    fn try_from(doc: DesignDocument) -> Result<Self> {
        let k = doc.c.len();
        if doc.b_re.len() != k || doc.b_im.len() != k {
            return Err(Error::DimensionMismatch {
                what: "precoders vs steering powers",
                expected: k,
                got: doc.b_re.len().min(doc.b_im.len()),
            });
        }
        if doc.c.iter().any(|&c| !(c >= 0.0)) {
            return Err(Error::invalid("steering powers must be nonnegative"));
        }
        Ok(TransceiverDesign {
            f_hat: DVector::from_vec(doc.f_hat),
            steering: doc.c,
            precoders: doc.b_re.into_iter().zip(doc.b_im).map(|(r, i)| Complex64::new(r, i)).collect(),
        })
    }
}

impl From<TransceiverDesign> for DesignDocument {
    fn from(d: TransceiverDesign) -> Self {
        DesignDocument {
            f_hat: d.f_hat.iter().copied().collect(),
            b_re: d.precoders.iter().map(|b| b.re).collect(),
            b_im: d.precoders.iter().map(|b| b.im).collect(),
            c: d.steering,
        }
    }
}

impl TransceiverDesign {
    /// Derives the ZF precoders for `(f_hat, steering)` on `channels`.
    pub fn new(f_hat: DVector<f64>, steering: Vec<f64>, channels: &ChannelRealization) -> Result<Self> {
        if steering.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::invalid("steering powers must be finite and nonnegative"));
        }
        let precoders = zf_precoders(&f_hat, channels, &steering)?;
        Ok(TransceiverDesign {
            f_hat,
            steering,
            precoders,
        })
    }

    pub fn f_hat(&self) -> &DVector<f64> {
        &self.f_hat
    }

    pub fn steering(&self) -> &[f64] {
        &self.steering
    }

    pub fn precoders(&self) -> &[Complex64] {
        &self.precoders
    }

    pub fn num_devices(&self) -> usize {
        self.steering.len()
    }

    pub fn beamformer(&self) -> DVector<Complex64> {
        full_beamformer(&self.f_hat)
    }

    /// Worst relative deviation from `f^H h_k b_k = c_k` over devices.
    pub fn zf_residual(&self, channels: &ChannelRealization) -> f64 {
        let f = self.beamformer();
        channels
            .vectors()
            .zip(&self.precoders)
            .zip(&self.steering)
            .map(|((h, b), &c)| {
                let got = f.dotc(h) * b;
                (got - Complex64::new(c, 0.0)).norm() / c.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// Checks the ZF identity and `|b_k|^2 E|s_k|^2 <= P_k` for every device.
    pub fn verify(&self, channels: &ChannelRealization, transmit_power: &[f64], second_moment: &[f64]) -> Result<()> {
        let k = self.num_devices();
        if channels.num_devices() != k || transmit_power.len() != k || second_moment.len() != k {
            return Err(Error::DimensionMismatch {
                what: "devices in design check",
                expected: k,
                got: channels.num_devices(),
            });
        }
        let zf = self.zf_residual(channels);
        if zf > ZF_REL_TOL {
            return Err(Error::Internal(format!("ZF identity violated (relative residual {zf:e})")));
        }
        for (dev, ((b, &p), &m)) in self.precoders.iter().zip(transmit_power).zip(second_moment).enumerate() {
            let used = b.norm_sqr() * m;
            if used > p * (1.0 + POWER_REL_TOL) {
                return Err(Error::Internal(format!(
                    "device {dev} exceeds its power budget ({used:e} > {p:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Received vector and the two extracted estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationResult {
    pub y: DVector<Complex64>,
    pub estimate: Complex64,
}

impl AggregationResult {
    pub fn first(&self) -> f64 {
        self.estimate.re
    }

    pub fn second(&self) -> f64 {
        self.estimate.im
    }
}

/// `y = sum_k h_k b_k s_k + n`, estimates `Re(f^H y)` and `Im(f^H y)`.
pub fn aggregate(
    design: &TransceiverDesign,
    symbols: &[Complex64],
    channels: &ChannelRealization,
    noise: &DVector<Complex64>,
) -> Result<AggregationResult> {
    let k = design.num_devices();
    if symbols.len() != k || channels.num_devices() != k {
        return Err(Error::DimensionMismatch {
            what: "symbols/channels vs devices",
            expected: k,
            got: symbols.len().min(channels.num_devices()),
        });
    }
    let n = channels.num_antennas();
    if noise.len() != n || design.f_hat.len() != n {
        return Err(Error::DimensionMismatch {
            what: "noise/beamformer length vs antennas",
            expected: n,
            got: noise.len(),
        });
    }
    let mut y = noise.clone();
    for ((h, b), s) in channels.vectors().zip(&design.precoders).zip(symbols) {
        y.axpy(b * s, h, Complex64::new(1.0, 0.0));
    }
    let estimate = design.beamformer().dotc(&y);
    Ok(AggregationResult { y, estimate })
}
