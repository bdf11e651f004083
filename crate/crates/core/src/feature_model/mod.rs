//! Gaussian-mixture feature model and discriminant gains.
//!
//! Ground-truth features follow an equal-prior mixture of `L` Gaussians with
//! per-class centroids and a shared diagonal covariance. The discriminant
//! gain of a set of feature elements is the symmetric KL divergence averaged
//! over all class pairs; with a diagonal covariance it decomposes into a sum
//! of per-element terms `(mu_l - mu_l')^2 / sigma^2`.
//!
//! All dimension and class indices are zero-based.

mod pca;

pub use pca::PcaProjection;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aircomp::TransceiverDesign;
use crate::channel_sim::{DeviceProfile, NoiseModel};
use crate::error::{Error, Result};

/// Class statistics of the feature space: an `L x M` centroid matrix and
/// a length-`M` vector of per-dimension variances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StatsDocument", into = "StatsDocument")]
pub struct FeatureStatistics {
    centroids: DMatrix<f64>,
    variances: DVector<f64>,
}

/// Wire form: `{"L":..,"M":..,"centroids":[[..]],"variances":[..]}`.
#[derive(Serialize, Deserialize)]
struct StatsDocument {
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "M")]
    m: usize,
    centroids: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl TryFrom<StatsDocument> for FeatureStatistics {
    type Error = Error;

    fn try_from(doc: StatsDocument) -> Result<Self> {
        if doc.centroids.len() != doc.l {
            return Err(Error::DimensionMismatch {
                what: "centroid rows vs L",
                expected: doc.l,
                got: doc.centroids.len(),
            });
        }
        if doc.variances.len() != doc.m {
            return Err(Error::DimensionMismatch {
                what: "variances vs M",
                expected: doc.m,
                got: doc.variances.len(),
            });
        }
        FeatureStatistics::new(doc.centroids, doc.variances)
    }
}

impl From<FeatureStatistics> for StatsDocument {
    fn from(s: FeatureStatistics) -> Self {
        StatsDocument {
            l: s.num_classes(),
            m: s.num_dims(),
            centroids: s.centroids.row_iter().map(|r| r.iter().copied().collect()).collect(),
            variances: s.variances.iter().copied().collect(),
        }
    }
}

impl FeatureStatistics {
    /// Builds statistics from per-class centroid rows and per-dimension variances.
    pub fn new(centroids: Vec<Vec<f64>>, variances: Vec<f64>) -> Result<Self> {
        let l = centroids.len();
        let m = variances.len();
        if l == 0 || m == 0 {
            return Err(Error::invalid("at least one class and one dimension are required"));
        }
        for row in &centroids {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "centroid row length vs M",
                    expected: m,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("centroids must be finite"));
            }
        }
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("variances must be finite and strictly positive"));
        }
        let centroids = DMatrix::from_fn(l, m, |i, j| centroids[i][j]);
        Ok(FeatureStatistics {
            centroids,
            variances: DVector::from_vec(variances),
        })
    }

    /// Fits class centroids by per-class sample means and a pooled
    /// per-dimension variance (shared across classes).
    pub fn fit(features: &[DVector<f64>], labels: &[usize], num_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "labels vs samples",
                expected: features.len(),
                got: labels.len(),
            });
        }
        if features.len() <= num_classes {
            return Err(Error::NotEnoughSamples {
                needed: num_classes + 1,
                got: features.len(),
            });
        }
        let m = features[0].len();
        let mut sums = DMatrix::<f64>::zeros(num_classes, m);
        let mut counts = vec![0usize; num_classes];
        for (x, &label) in features.iter().zip(labels) {
            if label >= num_classes {
                return Err(Error::IndexOutOfRange {
                    what: "class label",
                    index: label,
                    bound: num_classes,
                });
            }
            if x.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "feature length",
                    expected: m,
                    got: x.len(),
                });
            }
            let mut row = sums.row_mut(label);
            row += x.transpose();
            counts[label] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!("class {empty} has no samples")));
        }
        for (l, &n) in counts.iter().enumerate() {
            let mut row = sums.row_mut(l);
            row /= n as f64;
        }
        let mut pooled = DVector::<f64>::zeros(m);
        for (x, &label) in features.iter().zip(labels) {
            for j in 0..m {
                let d = x[j] - sums[(label, j)];
                pooled[j] += d * d;
            }
        }
        pooled /= (features.len() - num_classes) as f64;
        let centroids = sums.row_iter().map(|r| r.iter().copied().collect()).collect();
        FeatureStatistics::new(centroids, pooled.iter().copied().collect())
    }

    pub fn num_classes(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn num_dims(&self) -> usize {
        self.variances.len()
    }

    pub fn centroids(&self) -> &DMatrix<f64> {
        &self.centroids
    }

    pub fn variances(&self) -> &DVector<f64> {
        &self.variances
    }

    pub fn centroid(&self, class: usize, dim: usize) -> f64 {
        self.centroids[(class, dim)]
    }

    pub fn variance(&self, dim: usize) -> f64 {
        self.variances[dim]
    }

    /// `2 / (L (L - 1))`, or zero when there is a single class.
    pub fn pair_weight(&self) -> f64 {
        let l = self.num_classes() as f64;
        if self.num_classes() < 2 {
            0.0
        } else {
            2.0 / (l * (l - 1.0))
        }
    }

    /// All class pairs `(l, l')` with `l < l'`.
    pub fn class_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let l = self.num_classes();
        (0..l).flat_map(move |b| (0..b).map(move |a| (a, b)))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim >= self.num_dims() {
            return Err(Error::IndexOutOfRange {
                what: "feature dimension",
                index: dim,
                bound: self.num_dims(),
            });
        }
        Ok(())
    }

    fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.num_classes() {
            return Err(Error::IndexOutOfRange {
                what: "class",
                index: class,
                bound: self.num_classes(),
            });
        }
        Ok(())
    }

    /// Squared centroid separation of a class pair on one dimension.
    pub fn centroid_gap_sq(&self, a: usize, b: usize, dim: usize) -> f64 {
        let d = self.centroids[(a, dim)] - self.centroids[(b, dim)];
        d * d
    }

    /// Pair-wise discriminant gain of classes `a`, `b` on element `dim`.
    pub fn pairwise_element_gain(&self, a: usize, b: usize, dim: usize) -> Result<f64> {
        self.check_class(a)?;
        self.check_class(b)?;
        self.check_dim(dim)?;
        if a == b {
            return Err(Error::invalid("class pair must be two distinct classes"));
        }
        Ok(self.centroid_gap_sq(a, b, dim) / self.variances[dim])
    }

    /// Discriminant gain of a single feature element, averaged over class pairs.
    pub fn element_gain(&self, dim: usize) -> Result<f64> {
        self.check_dim(dim)?;
        let sum: f64 = self
            .class_pairs()
            .map(|(a, b)| self.centroid_gap_sq(a, b, dim))
            .sum();
        Ok(self.pair_weight() * sum / self.variances[dim])
    }

    /// Discriminant gain over a set of feature elements.
    pub fn total_gain(&self, dims: &[usize]) -> Result<f64> {
        if dims.is_empty() {
            return Err(Error::invalid("dimension set must be nonempty"));
        }
        dims.iter().map(|&m| self.element_gain(m)).sum()
    }

    /// Dimensions ordered by decreasing element gain; ties keep the lower index first.
    pub fn ranked_dims(&self) -> Vec<usize> {
        let gains: Vec<f64> = (0..self.num_dims())
            .map(|m| self.element_gain(m).unwrap_or(0.0))
            .collect();
        let mut order: Vec<usize> = (0..self.num_dims()).collect();
        order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
        order
    }

    /// Statistics restricted to the listed dimensions, in the given order.
    pub fn select_dims(&self, dims: &[usize]) -> Result<FeatureStatistics> {
        for &m in dims {
            self.check_dim(m)?;
        }
        let centroids = (0..self.num_classes())
            .map(|l| dims.iter().map(|&m| self.centroids[(l, m)]).collect())
            .collect();
        let variances = dims.iter().map(|&m| self.variances[m]).collect();
        FeatureStatistics::new(centroids, variances)
    }

    /// Analytic `E|s_k|^2` for a device with sensing noise `sensing_noise`
    /// transmitting the listed elements (one or two).
    ///
    /// Each element contributes its mixture second moment
    /// `(1/L) sum_l mu_{l,m}^2 + sigma_m^2 + eps_k^2`.
    pub fn symbol_second_moment(&self, sensing_noise: f64, dims: &[usize]) -> Result<f64> {
        let l = self.num_classes() as f64;
        let mut total = 0.0;
        for &m in dims {
            self.check_dim(m)?;
            let mean_sq: f64 = self.centroids.column(m).iter().map(|v| v * v).sum::<f64>() / l;
            total += mean_sq + self.variances[m] + sensing_noise;
        }
        Ok(total)
    }
}

/// Distribution of one received element after AirComp: per-class centroids
/// and the shared variance.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedElementStats {
    pub centroids: DVector<f64>,
    pub variance: f64,
}

impl ReceivedElementStats {
    /// Discriminant gain of this received element (pair-averaged).
    pub fn gain(&self) -> Result<f64> {
        if !(self.variance > 0.0) {
            return Err(Error::DegenerateDesign);
        }
        let l = self.centroids.len();
        if l < 2 {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        for b in 0..l {
            for a in 0..b {
                let d = self.centroids[a] - self.centroids[b];
                sum += d * d;
            }
        }
        let lf = l as f64;
        Ok(2.0 / (lf * (lf - 1.0)) * sum / self.variance)
    }
}

/// Received statistics of element `dim` for steering powers `steering`,
/// symmetric beamformer half `f_hat`, per-device sensing noise powers
/// `sensing_noise` and channel noise power `noise_power`.
///
/// Centroids scale by `sum c_k`; the variance is
/// `sigma^2 (sum c)^2 + sum c_k^2 eps_k^2 + delta0^2 |f_hat|^2`.
pub fn received_element_stats(
    stats: &FeatureStatistics,
    dim: usize,
    steering: &[f64],
    f_hat: &DVector<f64>,
    sensing_noise: &[f64],
    noise_power: f64,
) -> Result<ReceivedElementStats> {
    stats.check_dim(dim)?;
    if steering.len() != sensing_noise.len() {
        return Err(Error::DimensionMismatch {
            what: "sensing noise powers vs steering powers",
            expected: steering.len(),
            got: sensing_noise.len(),
        });
    }
    if steering.iter().any(|&c| c < 0.0) || sensing_noise.iter().any(|&e| e < 0.0) || noise_power < 0.0 {
        return Err(Error::invalid("steering and noise powers must be nonnegative"));
    }
    let sum_c: f64 = steering.iter().sum();
    let sensing: f64 = steering
        .iter()
        .zip(sensing_noise)
        .map(|(c, e)| c * c * e)
        .sum();
    let variance = stats.variance(dim) * sum_c * sum_c + sensing + noise_power * f_hat.norm_squared();
    Ok(ReceivedElementStats {
        centroids: stats.centroids.column(dim) * sum_c,
        variance,
    })
}

/// Sum of the received element gains over `dims` for raw design parts.
pub fn received_gain_from_parts(
    stats: &FeatureStatistics,
    steering: &[f64],
    f_hat: &DVector<f64>,
    sensing_noise: &[f64],
    noise_power: f64,
    dims: &[usize],
) -> Result<f64> {
    if dims.is_empty() {
        return Err(Error::invalid("dimension set must be nonempty"));
    }
    dims.iter()
        .map(|&m| received_element_stats(stats, m, steering, f_hat, sensing_noise, noise_power)?.gain())
        .sum()
}

/// Achieved discriminant gain of the elements `dims` under `design`.
pub fn received_gain(
    stats: &FeatureStatistics,
    design: &TransceiverDesign,
    profiles: &[DeviceProfile],
    noise: &NoiseModel,
    dims: &[usize],
) -> Result<f64> {
    if profiles.len() != design.num_devices() {
        return Err(Error::DimensionMismatch {
            what: "device profiles vs design",
            expected: design.num_devices(),
            got: profiles.len(),
        });
    }
    let eps: Vec<f64> = profiles.iter().map(|p| p.sensing_noise).collect();
    received_gain_from_parts(stats, design.steering(), design.f_hat(), &eps, noise.power(), dims)
}
