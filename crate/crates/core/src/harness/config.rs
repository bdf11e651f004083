use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_model::FeatureStatistics;
use crate::optimizer::ScaOptions;

/// A scalar applied to every device, or one value per device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerDevice {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerDevice {
    /// Values for the first `count` devices.
    pub fn take(&self, count: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerDevice::Uniform(v) => Ok(vec![*v; count]),
            PerDevice::Each(v) if v.len() >= count => Ok(v[..count].to_vec()),
            PerDevice::Each(v) => Err(Error::Config(format!(
                "{what} lists {} values but {count} devices are simulated",
                v.len()
            ))),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            PerDevice::Uniform(v) => vec![*v],
            PerDevice::Each(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// One channel realization for every trial.
    Fixed,
    /// A fresh realization (and fresh designs) every `block_size` trials.
    PerBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub devices: usize,
    pub antennas: usize,
    pub radius_m: f64,
    pub min_radius_m: f64,
    /// `sigma_zeta^2` in dB^2.
    pub shadowing_variance_db: f64,
    /// Receiver noise power `delta0^2` in the normalized units of the channel.
    pub noise_power: f64,
    /// Channel power gains are divided by this (watts); 1.0 keeps physical gains.
    pub channel_reference_power: f64,
    /// `eps_k^2`.
    pub sensing_noise: PerDevice,
    pub power_dbm: PerDevice,
    pub channel_mode: ChannelMode,
    pub block_size: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            devices: 3,
            antennas: 8,
            radius_m: 50.0,
            min_radius_m: 1.0,
            shadowing_variance_db: 8.0,
            noise_power: 1.0,
            channel_reference_power: 1e-11,
            sensing_noise: PerDevice::Uniform(0.4),
            power_dbm: PerDevice::Uniform(12.0),
            channel_mode: ChannelMode::PerBlock,
            block_size: 200,
        }
    }
}

/// Where the class statistics come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSource {
    /// Random centroids with per-dimension spread `centroid_std * decay^m`
    /// and a common within-class variance.
    Synthetic {
        #[serde(default = "default_classes")]
        classes: usize,
        #[serde(default = "default_dims")]
        dims: usize,
        #[serde(default = "default_centroid_std")]
        centroid_std: f64,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_variance")]
        variance: f64,
    },
    Stats { stats: FeatureStatistics },
    /// JSON statistics document; relative paths resolve against the config file.
    StatsFile { path: PathBuf },
    /// Raw Gaussian-mixture samples, projected by a fitted PCA.
    SampledPca {
        #[serde(default = "default_classes")]
        classes: usize,
        raw_dim: usize,
        #[serde(default = "default_dims")]
        dims: usize,
        samples_per_class: usize,
        #[serde(default = "default_centroid_std")]
        centroid_std: f64,
    },
}

fn default_classes() -> usize {
    4
}
fn default_dims() -> usize {
    12
}
fn default_centroid_std() -> f64 {
    0.6
}
fn default_decay() -> f64 {
    0.85
}
fn default_variance() -> f64 {
    1.0
}

impl Default for FeatureSource {
    fn default() -> Self {
        FeatureSource::Synthetic {
            classes: default_classes(),
            dims: default_dims(),
            centroid_std: default_centroid_std(),
            decay: default_decay(),
            variance: default_variance(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    Devices,
    Power,
    PcaDims,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: SweepAxis::None,
            values: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    MmseCentroid,
    Random,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::MmseCentroid => "mmse_centroid",
            Scheme::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Scheme::Proposed),
            "mmse_centroid" => Ok(Scheme::MmseCentroid),
            "random" => Ok(Scheme::Random),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected proposed, mmse_centroid or random)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub features: FeatureSource,
    /// Number of top-ranked feature elements transmitted; all when absent.
    pub feature_dims: Option<usize>,
    pub sweep: SweepConfig,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub optimizer: ScaOptions,
    /// Fill the `seconds` column; off by default so reports are byte-stable.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            scenario: ScenarioConfig::default(),
            features: FeatureSource::default(),
            feature_dims: None,
            sweep: SweepConfig::default(),
            trials: 1600,
            schemes: vec![Scheme::Proposed, Scheme::MmseCentroid, Scheme::Random],
            optimizer: ScaOptions::default(),
            record_wall_time: false,
        }
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive and finite, got {v}")))
    }
}

fn nonnegative(v: f64, what: &str) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be nonnegative and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses a JSON config; `stats_file` paths are made absolute relative to `path`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let FeatureSource::StatsFile { path: p } = &mut config.features {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Feature-space size `(L, M)` implied by the source, without sampling.
    fn source_shape(&self) -> Result<(usize, usize)> {
        match &self.features {
            FeatureSource::Synthetic {
                classes,
                dims,
                centroid_std,
                decay,
                variance,
            } => {
                positive(*centroid_std, "features.centroid_std")?;
                positive(*decay, "features.decay")?;
                positive(*variance, "features.variance")?;
                Ok((*classes, *dims))
            }
            FeatureSource::Stats { stats } => Ok((stats.num_classes(), stats.num_dims())),
            FeatureSource::StatsFile { path } => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("features.path {}: {e}", path.display())))?;
                let stats: FeatureStatistics = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("features.path {}: {e}", path.display())))?;
                Ok((stats.num_classes(), stats.num_dims()))
            }
            FeatureSource::SampledPca {
                classes,
                raw_dim,
                dims,
                samples_per_class,
                centroid_std,
            } => {
                positive(*centroid_std, "features.centroid_std")?;
                if dims > raw_dim {
                    return Err(Error::Config(format!("features.dims {dims} exceeds raw_dim {raw_dim}")));
                }
                if classes * samples_per_class <= dims + classes {
                    return Err(Error::Config("features.samples_per_class too small for the PCA fit".into()));
                }
                Ok((*classes, *dims))
            }
        }
    }

    /// Checks every field; returns the first problem found.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme".into()));
        }
        let s = &self.scenario;
        if s.devices == 0 {
            return Err(Error::Config("scenario.devices must be at least 1".into()));
        }
        if s.antennas == 0 {
            return Err(Error::Config("scenario.antennas must be at least 1".into()));
        }
        positive(s.radius_m, "scenario.radius_m")?;
        positive(s.min_radius_m, "scenario.min_radius_m")?;
        if s.min_radius_m > s.radius_m {
            return Err(Error::Config("scenario.min_radius_m exceeds radius_m".into()));
        }
        nonnegative(s.shadowing_variance_db, "scenario.shadowing_variance_db")?;
        nonnegative(s.noise_power, "scenario.noise_power")?;
        positive(s.channel_reference_power, "scenario.channel_reference_power")?;
        for v in s.sensing_noise.values() {
            nonnegative(v, "scenario.sensing_noise")?;
        }
        for v in s.power_dbm.values() {
            if !v.is_finite() {
                return Err(Error::Config("scenario.power_dbm must be finite".into()));
            }
        }
        if s.block_size == 0 {
            return Err(Error::Config("scenario.block_size must be at least 1".into()));
        }
        if self.optimizer.max_iter == 0 {
            return Err(Error::Config("optimizer.max_iter must be at least 1".into()));
        }
        nonnegative(self.optimizer.rel_tol, "optimizer.rel_tol")?;

        let (classes, dims) = self.source_shape()?;
        if classes < 2 {
            return Err(Error::Config("at least two classes".into()));
        }
        if dims == 0 {
            return Err(Error::Config("at least one feature dimension".into()));
        }
        if let Some(d) = self.feature_dims {
            if d == 0 || d > dims {
                return Err(Error::Config(format!("feature_dims must be in 1..={dims}, got {d}")));
            }
        }

        let values = &self.sweep.values;
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
        match self.sweep.axis {
            SweepAxis::None => {
                if !values.is_empty() {
                    return Err(Error::Config("sweep.values given without a sweep axis".into()));
                }
            }
            axis => {
                if values.is_empty() {
                    return Err(Error::Config("sweep.values must not be empty".into()));
                }
                for &v in values {
                    if !v.is_finite() {
                        return Err(Error::Config("sweep values must be finite".into()));
                    }
                    let integral = v.fract() == 0.0 && v >= 1.0;
                    match axis {
                        SweepAxis::Devices if !integral => {
                            return Err(Error::Config(format!("device counts must be positive integers, got {v}")))
                        }
                        SweepAxis::PcaDims if !integral || v as usize > dims => {
                            return Err(Error::Config(format!("pca_dims values must be integers in 1..={dims}, got {v}")))
                        }
                        _ => {}
                    }
                }
            }
        }
        let max_devices = match self.sweep.axis {
            SweepAxis::Devices => values.last().map_or(s.devices, |&v| v as usize),
            _ => s.devices,
        };
        s.sensing_noise.take(max_devices, "scenario.sensing_noise")?;
        s.power_dbm.take(max_devices, "scenario.power_dbm")?;
        Ok(())
    }
}
