//! Monte-Carlo experiment driver.
//!
//! A point of an experiment fixes the scenario (devices, powers, channels)
//! and the transmitted feature elements. For every scheme it designs one
//! transceiver per feature pair, pushes `trials` end-to-end inferences
//! through sensing, AirComp and a MAP classifier, and reports the achieved
//! discriminant gain with the empirical accuracy.
//!
//! All randomness is drawn from sub-streams keyed by the experiment seed,
//! so results do not depend on thread scheduling. Trial `t` uses the same
//! stream under every scheme and sweep value (common random numbers).

mod config;
mod report;

pub use config::{ChannelMode, ExperimentConfig, FeatureSource, PerDevice, ScenarioConfig, Scheme, SweepAxis, SweepConfig};
pub use report::{emit_report, write_csv, ExperimentReport, ReportRow, CSV_HEADER};

use std::fs;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::aircomp::{aggregate, pack_symbol, TransceiverDesign};
use crate::channel_sim::{
    dbm_to_watts, place_devices, sample_ground_truth, sample_observation, ChannelModel, ChannelRealization,
    DeviceProfile, NoiseModel,
};
use crate::error::{Error, Result};
use crate::feature_model::{received_element_stats, FeatureStatistics, PcaProjection, ReceivedElementStats};
use crate::optimizer::{baseline_mmse_centroid, baseline_random, sca_optimize, AirCompProblem};
use crate::rng::{substream, substream_keyed, Domain};

/// Trials per parallel work item inside one channel block.
const TRIAL_CHUNK: usize = 64;

/// Equal-prior diagonal-Gaussian MAP decision on the received elements.
///
/// Ties go to the lowest class index.
pub fn map_classify(received: &[ReceivedElementStats], estimate: &[f64]) -> Result<usize> {
    if received.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            what: "estimates vs received element statistics",
            expected: received.len(),
            got: estimate.len(),
        });
    }
    let classes = received.first().map_or(0, |r| r.centroids.len());
    if classes == 0 {
        return Err(Error::invalid("no received statistics"));
    }
    if received.iter().any(|r| r.centroids.len() != classes) {
        return Err(Error::invalid("received statistics disagree on the class count"));
    }
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for l in 0..classes {
        let score: f64 = received
            .iter()
            .zip(estimate)
            .map(|(r, &x)| {
                let d = x - r.centroids[l];
                -d * d / (2.0 * r.variance)
            })
            .sum();
        if score > best_score {
            best = l;
            best_score = score;
        }
    }
    Ok(best)
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either input is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Class statistics described by the config's feature source.
pub fn build_statistics(config: &ExperimentConfig) -> Result<FeatureStatistics> {
    match &config.features {
        FeatureSource::Synthetic {
            classes,
            dims,
            centroid_std,
            decay,
            variance,
        } => {
            let mut rng = substream(config.seed, Domain::SyntheticFeatures, 0);
            let centroids = (0..*classes)
                .map(|_| {
                    (0..*dims)
                        .map(|m| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            centroid_std * decay.powi(m as i32) * z
                        })
                        .collect()
                })
                .collect();
            FeatureStatistics::new(centroids, vec![*variance; *dims])
        }
        FeatureSource::Stats { stats } => Ok(stats.clone()),
        FeatureSource::StatsFile { path } => {
            let text = fs::read_to_string(path)?;
            Ok(serde_json::from_str(&text)?)
        }
        FeatureSource::SampledPca {
            classes,
            raw_dim,
            dims,
            samples_per_class,
            centroid_std,
        } => {
            let mut rng = substream(config.seed, Domain::RawSamples, 0);
            let means: Vec<DVector<f64>> = (0..*classes)
                .map(|_| DVector::from_fn(*raw_dim, |_, _| centroid_std * Distribution::<f64>::sample(&StandardNormal, &mut rng)))
                .collect();
            let mut raw = Vec::with_capacity(classes * samples_per_class);
            let mut labels = Vec::with_capacity(classes * samples_per_class);
            for (l, mean) in means.iter().enumerate() {
                for _ in 0..*samples_per_class {
                    raw.push(mean.map(|v| v + Distribution::<f64>::sample(&StandardNormal, &mut rng)));
                    labels.push(l);
                }
            }
            let pca = PcaProjection::fit(&raw, *dims)?;
            let features = raw.iter().map(|x| pca.project(x)).collect::<Result<Vec<_>>>()?;
            FeatureStatistics::fit(&features, &labels, *classes)
        }
    }
}

/// Device profiles for the scenario. Device `k`'s position comes from its
/// own sub-stream, so adding devices leaves existing ones in place.
pub fn build_profiles(config: &ExperimentConfig) -> Result<Vec<DeviceProfile>> {
    let s = &config.scenario;
    let eps = s.sensing_noise.take(s.devices, "scenario.sensing_noise")?;
    let power = s.power_dbm.take(s.devices, "scenario.power_dbm")?;
    (0..s.devices)
        .map(|k| {
            let mut rng = substream(config.seed, Domain::Placement, k as u64);
            let pos = place_devices(1, s.radius_m, s.min_radius_m, &mut rng)[0];
            DeviceProfile::new(eps[k], dbm_to_watts(power[k]), pos)
        })
        .collect()
}

/// Feature elements grouped into transmitted pairs, best-ranked first.
pub fn feature_pairs(stats: &FeatureStatistics, feature_dims: Option<usize>) -> Vec<Vec<usize>> {
    let ranked = stats.ranked_dims();
    let used = feature_dims.unwrap_or(ranked.len()).min(ranked.len());
    ranked[..used].chunks(2).map(|c| c.to_vec()).collect()
}

/// Returns `config` with the sweep parameter set to `value`.
pub fn apply_sweep(config: &ExperimentConfig, value: Option<f64>) -> ExperimentConfig {
    let mut c = config.clone();
    if let Some(v) = value {
        match config.sweep.axis {
            SweepAxis::None => {}
            SweepAxis::Devices => c.scenario.devices = v as usize,
            SweepAxis::Power => c.scenario.power_dbm = PerDevice::Uniform(v),
            SweepAxis::PcaDims => c.feature_dims = Some(v as usize),
        }
    }
    c
}

/// Result of one scheme at one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    /// Discriminant gain summed over pairs, averaged over channel blocks.
    pub gain: f64,
    pub accuracy: f64,
    /// Binomial standard error of `accuracy`.
    pub se: f64,
    /// SCA iterations summed over pairs and channel blocks (0 for baselines).
    pub iters: usize,
    pub correct: usize,
    pub trials: usize,
    pub seconds: Option<f64>,
}

struct PairDesign {
    dims: Vec<usize>,
    design: TransceiverDesign,
    received: Vec<ReceivedElementStats>,
}

struct BlockOutcome {
    gain: f64,
    iters: usize,
    correct: usize,
}

/// Fixed inputs shared by every block of a point.
struct PointSetup {
    stats: FeatureStatistics,
    pairs: Vec<Vec<usize>>,
    profiles: Vec<DeviceProfile>,
    model: ChannelModel,
    noise: NoiseModel,
}

impl PointSetup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let stats = build_statistics(config)?;
        let pairs = feature_pairs(&stats, config.feature_dims);
        let s = &config.scenario;
        Ok(PointSetup {
            pairs,
            profiles: build_profiles(config)?,
            model: ChannelModel::new(s.antennas, s.shadowing_variance_db).with_reference_noise(s.channel_reference_power),
            noise: NoiseModel::new(s.noise_power)?,
            stats,
        })
    }

    fn designs(
        &self,
        config: &ExperimentConfig,
        scheme: Scheme,
        channels: &ChannelRealization,
        block: u64,
    ) -> Result<(Vec<PairDesign>, f64, usize)> {
        let mut out = Vec::with_capacity(self.pairs.len());
        let mut gain = 0.0;
        let mut iters = 0;
        for (p, dims) in self.pairs.iter().enumerate() {
            let problem = AirCompProblem::new(&self.stats, dims, channels, &self.profiles, &self.noise)?;
            let design = match scheme {
                Scheme::Proposed => {
                    let outcome = sca_optimize(&problem, &config.optimizer)?;
                    iters += outcome.state.iteration;
                    outcome.design
                }
                Scheme::MmseCentroid => baseline_mmse_centroid(&problem)?,
                Scheme::Random => {
                    let mut rng = substream_keyed(config.seed, Domain::RandomBeamformer, block, p as u64);
                    baseline_random(&problem, &mut rng)?
                }
            };
            gain += problem.gain(design.steering(), design.f_hat())?;
            let eps = problem.sensing_noise();
            let received = dims
                .iter()
                .map(|&m| received_element_stats(&self.stats, m, design.steering(), design.f_hat(), eps, self.noise.power()))
                .collect::<Result<Vec<_>>>()?;
            out.push(PairDesign {
                dims: dims.clone(),
                design,
                received,
            });
        }
        Ok((out, gain, iters))
    }

    /// Runs trial `t` end to end; returns whether it was classified correctly.
    fn trial(&self, seed: u64, t: usize, channels: &ChannelRealization, designs: &[PairDesign]) -> Result<bool> {
        let mut rng = substream(seed, Domain::Trials, t as u64);
        let class = rng.gen_range(0..self.stats.num_classes());
        let truth = sample_ground_truth(&self.stats, class, &mut rng)?;
        let local: Vec<DVector<f64>> = self
            .profiles
            .iter()
            .map(|p| sample_observation(&truth, p.sensing_noise, &mut rng))
            .collect();
        let mut received = Vec::new();
        let mut estimate = Vec::new();
        for pd in designs {
            let symbols = local
                .iter()
                .map(|x| pack_symbol(x, pd.dims[0], pd.dims.get(1).copied()))
                .collect::<Result<Vec<_>>>()?;
            let n = self.noise.sample(channels.num_antennas(), &mut rng);
            let agg = aggregate(&pd.design, &symbols, channels, &n)?;
            estimate.push(agg.first());
            if pd.dims.len() == 2 {
                estimate.push(agg.second());
            }
            received.extend(pd.received.iter().cloned());
        }
        Ok(map_classify(&received, &estimate)? == class)
    }
}

/// Evaluates one scheme at the scenario described by `config` (any sweep
/// value already applied).
pub fn run_point(config: &ExperimentConfig, scheme: Scheme) -> Result<PointResult> {
    let start = Instant::now();
    let setup = PointSetup::new(config)?;
    let trials = config.trials;
    let block_size = match config.scenario.channel_mode {
        ChannelMode::Fixed => trials,
        ChannelMode::PerBlock => config.scenario.block_size,
    };
    let blocks = trials.div_ceil(block_size);

    let outcomes = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<BlockOutcome> {
            let channels = setup.model.sample_streams(&setup.profiles, config.seed, b as u64)?;
            let (designs, gain, iters) = setup.designs(config, scheme, &channels, b as u64)?;
            let lo = b * block_size;
            let hi = (lo + block_size).min(trials);
            let chunks: Vec<(usize, usize)> = (lo..hi)
                .step_by(TRIAL_CHUNK)
                .map(|s| (s, (s + TRIAL_CHUNK).min(hi)))
                .collect();
            let correct = chunks
                .into_par_iter()
                .map(|(s, e)| -> Result<usize> {
                    let mut c = 0;
                    for t in s..e {
                        c += setup.trial(config.seed, t, &channels, &designs)? as usize;
                    }
                    Ok(c)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum();
            Ok(BlockOutcome { gain, iters, correct })
        })
        .collect::<Result<Vec<_>>>()?;

    let gain = outcomes.iter().map(|o| o.gain).sum::<f64>() / blocks as f64;
    let iters = outcomes.iter().map(|o| o.iters).sum();
    let correct: usize = outcomes.iter().map(|o| o.correct).sum();
    let accuracy = correct as f64 / trials as f64;
    let se = (accuracy * (1.0 - accuracy) / trials as f64).sqrt();
    Ok(PointResult {
        gain,
        accuracy,
        se,
        iters,
        correct,
        trials,
        seconds: config.record_wall_time.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Runs every (sweep value, scheme) combination in config order.
pub fn run_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let values: Vec<Option<f64>> = match config.sweep.axis {
        SweepAxis::None => vec![None],
        _ => config.sweep.values.iter().map(|&v| Some(v)).collect(),
    };
    let jobs: Vec<(Option<f64>, Scheme)> = values
        .iter()
        .flat_map(|&v| config.schemes.iter().map(move |&s| (v, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(value, scheme)| {
            let point = apply_sweep(config, value);
            let r = run_point(&point, scheme)?;
            Ok(ReportRow {
                sweep_value: value,
                scheme,
                gain: r.gain,
                accuracy: r.accuracy,
                se: r.se,
                iters: r.iters,
                seconds: r.seconds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        config: config.clone(),
        rows,
    })
}
