//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use aircomp_core::aircomp::{aggregate, pack_symbol};
use aircomp_core::channel_sim::{sample_ground_truth, sample_observation, ChannelModel, NoiseModel};
use aircomp_core::feature_model::received_element_stats;
use aircomp_core::harness::{
    build_profiles, build_statistics, feature_pairs, run_point, run_sweep, spearman, write_csv, ChannelMode,
    ExperimentConfig, PerDevice, Scheme, SweepAxis,
};
use aircomp_core::optimizer::{kkt_check, sca_optimize, sca_optimize_observed, AirCompProblem, ScaOptions};
use aircomp_core::rng::{substream, Domain};
use nalgebra::DVector;
use rand::Rng;

use common::{bayes_oracle, grid_oracle_2x2, instance};

type Verdict = Result<String, String>;

// --- pinned tolerances ---------------------------------------------------
const C1_DRAWS: usize = 100_000;
const C1_SE_BOUND: f64 = 3.0;
const C1_BUDGET: Duration = Duration::from_secs(60);
const C2_MIN_INSTANCES: usize = 50;
const C2_FEAS_TOL: f64 = 1e-7;
const C2_PROBES: usize = 1000;
const C2_BUDGET: Duration = Duration::from_secs(300);
const C3_MIN_INSTANCES: usize = 10;
const C3_REL_GAP: f64 = 0.01;
const C3_BUDGET: Duration = Duration::from_secs(600);
const C4_REL_SPREAD: f64 = 0.02;
const C5_MIN_SEEDS: usize = 20;
const C5_SE_SLACK: f64 = 1.0;
const C6_SE_SLACK: f64 = 2.0;
const C7_GAIN_REL: f64 = 1e-6;
const C7_SE_BOUND: f64 = 3.0;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// `|empirical - expected|` in standard errors for a mean and a variance.
fn z_scores(xs: &[f64], mean: f64, var: f64) -> (f64, f64) {
    let n = xs.len() as f64;
    let (m, v) = mean_var(xs);
    let z_mean = (m - mean).abs() / (var / n).sqrt();
    let z_var = (v - var).abs() / (var * (2.0 / (n - 1.0)).sqrt());
    (z_mean, z_var)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let config = ExperimentConfig::default();
    let stats = build_statistics(&config).map_err(|e| e.to_string())?;
    let profiles = build_profiles(&config).map_err(|e| e.to_string())?;
    let s = &config.scenario;
    let channels = ChannelModel::new(s.antennas, s.shadowing_variance_db)
        .with_reference_noise(s.channel_reference_power)
        .sample_streams(&profiles, config.seed, 0)
        .map_err(|e| e.to_string())?;
    let noise = NoiseModel::new(s.noise_power).map_err(|e| e.to_string())?;
    let dims = feature_pairs(&stats, None)[0].clone();
    let problem = AirCompProblem::new(&stats, &dims, &channels, &profiles, &noise).map_err(|e| e.to_string())?;
    let design = sca_optimize(&problem, &ScaOptions::default()).map_err(|e| e.to_string())?.design;

    let class = 1;
    let mut rng = substream(11, Domain::Trials, 1);
    let mut local: Vec<Vec<Vec<f64>>> = vec![vec![Vec::with_capacity(C1_DRAWS); dims.len()]; profiles.len()];
    let mut est: Vec<Vec<f64>> = vec![Vec::with_capacity(C1_DRAWS); 2];
    for _ in 0..C1_DRAWS {
        let truth = sample_ground_truth(&stats, class, &mut rng).map_err(|e| e.to_string())?;
        let xs: Vec<DVector<f64>> = profiles.iter().map(|p| sample_observation(&truth, p.sensing_noise, &mut rng)).collect();
        for (k, x) in xs.iter().enumerate() {
            for (i, &m) in dims.iter().enumerate() {
                local[k][i].push(x[m]);
            }
        }
        let symbols = xs
            .iter()
            .map(|x| pack_symbol(x, dims[0], Some(dims[1])))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let n = noise.sample(channels.num_antennas(), &mut rng);
        let r = aggregate(&design, &symbols, &channels, &n).map_err(|e| e.to_string())?;
        est[0].push(r.first());
        est[1].push(r.second());
    }

    let mut worst = 0.0f64;
    for (k, p) in profiles.iter().enumerate() {
        for (i, &m) in dims.iter().enumerate() {
            let (zm, zv) = z_scores(&local[k][i], stats.centroid(class, m), stats.variance(m) + p.sensing_noise);
            worst = worst.max(zm).max(zv);
        }
    }
    for (i, &m) in dims.iter().enumerate() {
        let r = received_element_stats(&stats, m, design.steering(), design.f_hat(), problem.sensing_noise(), noise.power())
            .map_err(|e| e.to_string())?;
        let (zm, zv) = z_scores(&est[i], r.centroids[class], r.variance);
        worst = worst.max(zm).max(zv);
    }
    let elapsed = start.elapsed();
    let detail = format!("worst deviation {worst:.2} SE over {C1_DRAWS} draws in {elapsed:.1?}");
    if worst <= C1_SE_BOUND && elapsed < C1_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut instances = 0;
    let mut iterations = 0;
    let mut worst_feas = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..6u64 {
        for &k in &[1usize, 2, 3] {
            for &n in &[2usize, 4, 8] {
                let inst = instance(1000 + seed, k, n, &[0.2, 0.4, 0.7], -5.0 + 5.0 * seed as f64, 1.0);
                let problem = inst.problem();
                let mut probe_rng = substream(seed, Domain::Trials, (k * 10 + n) as u64);
                let mut bad = None;
                let outcome = sca_optimize_observed(&problem, &ScaOptions::default(), |reference, sub, next| {
                    iterations += 1;
                    if next.objective < reference.objective {
                        bad.get_or_insert(format!("objective decreased {} -> {}", reference.objective, next.objective));
                    }
                    let v = problem.max_violation(&next.f_hat, &next.steering, &next.alpha);
                    worst_feas = worst_feas.max(v);
                    if v > C2_FEAS_TOL {
                        bad.get_or_insert(format!("iterate violates constraints by {v:e}"));
                    }
                    for _ in 0..C2_PROBES {
                        let f = DVector::from_fn(n, |i, _| reference.f_hat[i] + probe_rng.gen_range(-1.0..1.0));
                        let c: Vec<f64> = reference.steering.iter().map(|c| c * probe_rng.gen_range(0.0..2.0)).collect();
                        for kk in 0..k {
                            let exact = problem.steering_limit(kk, &f);
                            let lin = sub.r_hat(kk, &f);
                            if exact < lin - 1e-9 * exact.abs().max(lin.abs()) {
                                bad.get_or_insert(format!("R_{kk} {exact:e} below its tangent {lin:e}"));
                            }
                        }
                        for j in 0..problem.terms().len() {
                            let a = reference.alpha[j] * probe_rng.gen_range(-3.0f64..3.0).exp();
                            let exact = problem.q_value(j, &c, a);
                            let lin = sub.q_hat(j, &c, a);
                            if exact < lin - 1e-9 * exact.abs().max(lin.abs()) {
                                bad.get_or_insert(format!("Q_{j} {exact:e} below its tangent {lin:e}"));
                            }
                        }
                    }
                });
                instances += 1;
                let trace_ok = outcome.as_ref().map_or(true, |o| o.state.trace.windows(2).all(|w| w[1] >= w[0]));
                match (outcome, bad, trace_ok) {
                    (Err(e), _, _) => failures.push(format!("seed {seed} K={k} N={n}: {e}")),
                    (_, Some(b), _) => failures.push(format!("seed {seed} K={k} N={n}: {b}")),
                    (_, _, false) => failures.push(format!("seed {seed} K={k} N={n}: trace decreased")),
                    _ => {}
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{instances} instances, {iterations} iterations, worst violation {worst_feas:.1e}, {elapsed:.1?}"
    );
    if failures.is_empty() && instances >= C2_MIN_INSTANCES && elapsed < C2_BUDGET {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    let mut failures = Vec::new();
    for seed in 0..12u64 {
        let power = [-10.0, 0.0, 12.0][seed as usize % 3];
        let inst = instance(2000 + seed, 2, 2, &[0.3, 0.6], power, 1.0);
        let problem = inst.problem();
        let sca = sca_optimize(&problem, &ScaOptions::default()).map_err(|e| e.to_string())?;
        // angle step pi/400 and ratio step 1/400 before refinement
        let (grid, _, _) = grid_oracle_2x2(&problem, 400);
        let gap = (grid - sca.state.objective) / grid;
        worst = worst.max(gap);
        count += 1;
        if gap > C3_REL_GAP {
            failures.push(format!("seed {seed}: sca {} grid {grid}", sca.state.objective));
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("{count} instances, worst shortfall vs grid {:.2e}, {elapsed:.1?}", worst.max(0.0));
    if failures.is_empty() && count >= C3_MIN_INSTANCES && elapsed < C3_BUDGET {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn criterion_4() -> Verdict {
    let options = ScaOptions {
        max_iter: 2000,
        rel_tol: 1e-10,
        multi_start: true,
    };
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let devices = 4 + (seed as usize % 2);
        let inst = instance(3000 + seed, devices, 8, &[0.1, 0.25, 0.4, 0.6, 0.9], 30.0, 1.0);
        let problem = inst.problem();
        let outcome = sca_optimize(&problem, &options).map_err(|e| e.to_string())?;
        if !outcome.converged {
            continue;
        }
        let kkt = kkt_check(&problem, &outcome.state);
        if let Some(dev) = kkt.structure_deviation {
            checked += 1;
            worst = worst.max(dev);
            if dev > C4_REL_SPREAD {
                failures.push(format!("seed {seed}: spread {dev:.3e} products {:?}", kkt.inactive_products));
            }
        }
    }
    let detail = format!("{checked} converged runs with >= 2 inactive devices, worst spread {worst:.2e}");
    if failures.is_empty() && checked > 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn criterion_5() -> Verdict {
    let mut failures = Vec::new();
    let mut acc = [Vec::new(), Vec::new(), Vec::new()];
    let mut se = [Vec::new(), Vec::new(), Vec::new()];
    let schemes = [Scheme::Proposed, Scheme::MmseCentroid, Scheme::Random];
    for seed in 0..C5_MIN_SEEDS as u64 {
        let mut config = ExperimentConfig::default();
        config.seed = seed;
        config.scenario.channel_mode = ChannelMode::Fixed;
        let mut gains = [0.0; 3];
        for (i, &s) in schemes.iter().enumerate() {
            let r = run_point(&config, s).map_err(|e| e.to_string())?;
            gains[i] = r.gain;
            acc[i].push(r.accuracy);
            se[i].push(r.se);
        }
        if gains[0] < gains[1] || gains[0] < gains[2] {
            failures.push(format!("seed {seed}: gains {gains:?}"));
        }
    }
    let n = C5_MIN_SEEDS as f64;
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / n;
    let pooled = |v: &Vec<f64>| v.iter().map(|s| s * s).sum::<f64>().sqrt() / n;
    let mut gaps = Vec::new();
    for i in 1..3 {
        let gap = mean(&acc[0]) - mean(&acc[i]);
        let gap_se = (pooled(&se[0]).powi(2) + pooled(&se[i]).powi(2)).sqrt();
        gaps.push(format!("{}: {gap:+.4} (SE {gap_se:.4})", schemes[i].name()));
        if gap <= -C5_SE_SLACK * gap_se {
            failures.push(format!("accuracy inversion against {}", schemes[i].name()));
        }
    }
    let detail = format!(
        "{C5_MIN_SEEDS} seeds, gain dominance on every seed; mean accuracy proposed {:.4}, gaps {}",
        mean(&acc[0]),
        gaps.join(", ")
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn criterion_6() -> Verdict {
    let mut failures = Vec::new();
    let mut power = ExperimentConfig::default();
    power.schemes = vec![Scheme::Proposed];
    power.sweep.axis = SweepAxis::Power;
    power.sweep.values = vec![-20.0, -10.0, 0.0, 10.0, 20.0];
    let report = run_sweep(&power).map_err(|e| e.to_string())?;
    let rows: Vec<_> = report.scheme_rows(Scheme::Proposed).collect();
    for w in rows.windows(2) {
        let step_se = (w[0].se.powi(2) + w[1].se.powi(2)).sqrt();
        if w[1].accuracy < w[0].accuracy - C6_SE_SLACK * step_se {
            failures.push(format!(
                "accuracy drops {} -> {} between {:?} and {:?} dBm",
                w[0].accuracy, w[1].accuracy, w[0].sweep_value, w[1].sweep_value
            ));
        }
    }
    let gains: Vec<f64> = rows.iter().map(|r| r.gain).collect();
    let accs: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
    let rho = spearman(&gains, &accs);
    if !rho.is_some_and(|r| r > 0.0) {
        failures.push(format!("Spearman(gain, accuracy) = {rho:?}"));
    }

    let mut dims = ExperimentConfig::default();
    dims.schemes = vec![Scheme::Proposed];
    dims.sweep.axis = SweepAxis::PcaDims;
    dims.sweep.values = vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
    let report = run_sweep(&dims).map_err(|e| e.to_string())?;
    let dim_gains: Vec<f64> = report.scheme_rows(Scheme::Proposed).map(|r| r.gain).collect();
    if dim_gains.windows(2).any(|w| w[1] < w[0]) {
        failures.push(format!("gain not monotone in feature dims: {dim_gains:?}"));
    }

    let detail = format!(
        "power accuracy {:?}, Spearman {:.3}, gain over dims {:?}",
        accs.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>(),
        rho.unwrap_or(f64::NAN),
        dim_gains.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>()
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn criterion_7() -> Verdict {
    let mut config = ExperimentConfig::default();
    config.scenario.sensing_noise = PerDevice::Uniform(0.0);
    config.scenario.noise_power = 0.0;
    config.trials = 20_000;
    config.schemes = vec![Scheme::Proposed];
    let stats = build_statistics(&config).map_err(|e| e.to_string())?;
    let all: Vec<usize> = (0..stats.num_dims()).collect();
    let ceiling = stats.total_gain(&all).map_err(|e| e.to_string())?;
    let r = run_point(&config, Scheme::Proposed).map_err(|e| e.to_string())?;
    let rel = (r.gain - ceiling).abs() / ceiling;
    let (oracle, oracle_se) = bayes_oracle(&stats, &all, 200_000, 5);
    let bound = C7_SE_BOUND * (r.se.powi(2) + oracle_se.powi(2)).sqrt();
    let detail = format!(
        "gain {:.6} vs ceiling {ceiling:.6} (rel {rel:.1e}); accuracy {:.4} vs Bayes {oracle:.4} (bound {bound:.4})",
        r.gain, r.accuracy
    );
    if rel < C7_GAIN_REL && (r.accuracy - oracle).abs() <= bound {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Verdict {
    let mut config = ExperimentConfig::default();
    config.seed = 42;
    config.trials = 400;
    config.sweep.axis = SweepAxis::Power;
    config.sweep.values = vec![0.0, 12.0];
    let csv = |c: &ExperimentConfig| -> Result<Vec<u8>, String> {
        let report = run_sweep(c).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        write_csv(&report, &mut out).map_err(|e| e.to_string())?;
        Ok(out)
    };
    let a = csv(&config)?;
    let b = csv(&config)?;
    if a != b {
        return Err("library rerun produced a different CSV".into());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string(&config).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let stem = dir.path().join(format!("run{run}"));
        let out = Command::new(env!("CARGO_BIN_EXE_aircomp-opt"))
            .args(["run", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&stem)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "CLI run {run} exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            ));
        }
        outputs.push(std::fs::read(stem.with_extension("csv")).map_err(|e| e.to_string())?);
    }
    if outputs[0] != outputs[1] {
        return Err("CLI rerun produced a different CSV".into());
    }
    if outputs[0] != a {
        return Err("CLI and library CSVs differ for the same config".into());
    }
    Ok(format!("{} byte CSV identical across library and CLI reruns", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("distribution fidelity", criterion_1),
        ("SCA correctness", criterion_2),
        ("grid oracle equivalence", criterion_3),
        ("KKT structure", criterion_4),
        ("scheme dominance", criterion_5),
        ("monotone trends", criterion_6),
        ("noiseless ceiling", criterion_7),
        ("determinism", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id) {
            continue;
        }
        match run() {
            Ok(detail) => println!("[PASS] {id}. {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id}. {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
