//! The `train`, `sweep-f`, `ablate-ddpg` and `analyze` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rud_core::agents::{ExplorationType, Scheduler};
use rud_core::analysis::{
    clipped_double_q_bias_mc, exact_block_expectations, simulate_replay_counts, theorem1_bounds,
    BiasEstimate, ReplayCountReport,
};

use crate::config::{Algorithm, ExperimentConfig};
use crate::harness::{
    fmt_f64, long_rows, run_groups, write_long_csv, GroupResult, GroupSpec,
};

pub const Z_TOLERANCE: f64 = 3.0;

/// Outcome of a training-style command: the groups that ran and where the
/// comparison table (if any) went.
#[derive(Debug)]
pub struct CommandOutput {
    pub groups: Vec<GroupResult>,
    pub table: Option<PathBuf>,
}

impl CommandOutput {
    pub fn failures(&self) -> usize {
        self.groups.iter().map(GroupResult::failures).sum()
    }
}

pub fn group_label(config: &ExperimentConfig, scheduler: Scheduler) -> String {
    format!("{}-{}", config.algorithm, scheduler)
}

pub fn cmd_train(config: &ExperimentConfig) -> Result<CommandOutput> {
    let spec = GroupSpec {
        label: group_label(config, config.scheduler),
        config: config.clone(),
        scheduler: config.scheduler,
    };
    info!(
        "training {} on {} for {} steps, seeds {:?}",
        spec.label, config.env_id, config.total_steps, config.seeds
    );
    let groups = run_groups(&[spec], &config.output_dir)?;
    Ok(CommandOutput { groups, table: None })
}

/// Drop repeated values, keeping first occurrences in order.
pub fn dedupe_f_values(values: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(values.len());
    for &f in values {
        if out.contains(&f) {
            warn!("F = {f} listed more than once; running it once");
        } else {
            out.push(f);
        }
    }
    out
}

/// One group per distinct F; F = 1 is the streaming baseline.
pub fn cmd_sweep_f(config: &ExperimentConfig, f_values: &[usize]) -> Result<CommandOutput> {
    let values = dedupe_f_values(f_values);
    if values.is_empty() {
        bail!("sweep-f needs at least one F value");
    }
    let mut specs = Vec::with_capacity(values.len());
    for &f in &values {
        let cfg = ExperimentConfig {
            block_size: f,
            ..config.clone()
        };
        cfg.validate().with_context(|| format!("F = {f}"))?;
        let scheduler = if f == 1 {
            Scheduler::Streaming
        } else {
            Scheduler::Regular
        };
        specs.push(GroupSpec {
            label: format!("F_{f}"),
            config: cfg,
            scheduler,
        });
    }
    let root = config.output_dir.join("sweep_f");
    let groups = run_groups(&specs, &root)?;
    let keys: Vec<String> = values.iter().map(usize::to_string).collect();
    let table = root.join("sweep_f.csv");
    write_long_csv(&table, "F", &long_rows(&groups, &keys))?;
    Ok(CommandOutput {
        groups,
        table: Some(table),
    })
}

pub const ABLATION_GROUPS: [&str; 2] = ["ddpg-streaming", "ddpg-regular"];

/// Plain DDPG: explicit agent overrides apply, but the structural choices
/// (OU noise, one critic, no smoothing, no delay) are fixed.
pub fn plain_ddpg(config: &ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = config.with_algorithm(Algorithm::Ddpg)?;
    let a = &mut cfg.agent;
    if a.use_clipped_double_q || a.use_target_policy_smoothing || a.policy_delay != 1 {
        warn!("ablate-ddpg ignores twin-critic, smoothing and delay settings");
    }
    if a.exploration_type != ExplorationType::OrnsteinUhlenbeck {
        warn!("ablate-ddpg always explores with Ornstein-Uhlenbeck noise");
    }
    a.use_clipped_double_q = false;
    a.use_target_policy_smoothing = false;
    a.policy_delay = 1;
    a.exploration_type = ExplorationType::OrnsteinUhlenbeck;
    cfg.validate()?;
    Ok(cfg)
}

/// DDPG under both schedulers on the same seeds.
pub fn cmd_ablate_ddpg(config: &ExperimentConfig) -> Result<CommandOutput> {
    let cfg = plain_ddpg(config)?;
    let specs = [
        GroupSpec {
            label: ABLATION_GROUPS[0].into(),
            config: cfg.clone(),
            scheduler: Scheduler::Streaming,
        },
        GroupSpec {
            label: ABLATION_GROUPS[1].into(),
            config: cfg,
            scheduler: Scheduler::Regular,
        },
    ];
    let root = config.output_dir.join("ablate_ddpg");
    let groups = run_groups(&specs, &root)?;
    let keys: Vec<String> = ABLATION_GROUPS.iter().map(|s| s.to_string()).collect();
    let table = root.join("ablate_ddpg.csv");
    write_long_csv(&table, "group", &long_rows(&groups, &keys))?;

    let mut w = csv::Writer::from_path(root.join("noise_autocorr.csv"))?;
    w.write_record(["group", "seed", "lag1_autocorr"])?;
    for g in &groups {
        for run in &g.runs {
            let ac = run.log.as_ref().and_then(|l| l.noise_lag1_autocorr);
            if let Some(v) = ac {
                info!("{} seed {}: OU noise lag-1 autocorrelation {v:.4}", g.label, run.seed);
            }
            w.write_record([g.label.clone(), run.seed.to_string(), ac.map(fmt_f64).unwrap_or_default()])?;
        }
    }
    w.flush()?;
    Ok(CommandOutput {
        groups,
        table: Some(table),
    })
}

/// One pass/fail line of an analysis report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub lines: Vec<String>,
    pub checks: Vec<Check>,
}

impl AnalysisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ReplayCountsArgs {
    pub total_steps: usize,
    pub batch_size: usize,
    pub block_size: usize,
    /// 0 selects exact-only mode.
    pub trials: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub output_dir: Option<PathBuf>,
}

/// `points` evenly spaced time indices from 1 to `total` inclusive.
pub fn time_grid(total: usize, points: usize) -> Vec<usize> {
    if points <= 1 || total == 1 {
        return vec![total];
    }
    let mut grid: Vec<usize> = (0..points)
        .map(|k| 1 + ((total - 1) as f64 * k as f64 / (points - 1) as f64).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Exact expectations, closed-form extremes, and optionally a simulation
/// checked on a time grid.
pub fn analyze_replay_counts(args: &ReplayCountsArgs) -> Result<AnalysisReport> {
    let (t_total, n, f) = (args.total_steps, args.batch_size, args.block_size);
    if f == 0 || f > t_total {
        bail!("block size must satisfy 1 <= F <= T");
    }
    let mut lines = vec![format!("replay counts: T={t_total} N={n} F={f}")];
    let mut checks = Vec::new();

    let exact = exact_block_expectations(t_total, n, f)?;
    if f == 1 {
        let bounds = theorem1_bounds(t_total, n)?;
        lines.push(format!(
            "max E[M_t] closed form N ln((T+1)/N) = {:.2} ({})",
            bounds.max_closed_form,
            fmt_f64(bounds.max_closed_form)
        ));
        lines.push(format!("max E[M_t] exact harmonic sum at t=N = {:.6}", bounds.exact_max));
        lines.push(format!("min E[M_t] = E[M_T] = N/T = {}", bounds.min));
        checks.push(Check::new(
            "closed-form maximum within 1% of exact",
            bounds.relative_gap() < 0.01 || t_total / n < 100,
            format!("relative gap {:.3e}", bounds.relative_gap()),
        ));
        let last = exact[t_total - 1];
        checks.push(Check::new(
            "E[M_T] equals N/T",
            (last - bounds.min).abs() <= 1e-15 * bounds.min,
            format!("{last} vs {}", bounds.min),
        ));
        let decreasing = exact[n - 1..].windows(2).all(|w| w[0] > w[1]);
        checks.push(Check::new(
            "strictly decreasing on [N, T]",
            decreasing,
            format!("{} values", t_total - n + 1),
        ));
    } else {
        let nonincreasing = exact.windows(2).all(|w| w[0] >= w[1]);
        checks.push(Check::new("non-increasing in t", nonincreasing, format!("{t_total} values")));
    }

    let mut report: Option<ReplayCountReport> = None;
    if args.trials > 0 {
        let sim = simulate_replay_counts(t_total, n, f, args.trials, args.seed)?;
        let z = sim.z_scores();
        let grid = time_grid(t_total, args.grid_points);
        let worst = grid
            .iter()
            .map(|t| (*t, z[t]))
            .fold((0, 0.0f64), |acc, (t, v)| if v.abs() > acc.1.abs() { (t, v) } else { acc });
        lines.push(format!("simulation: {} trials, seed {}", args.trials, args.seed));
        for t in &grid {
            lines.push(format!(
                "  t={t:>8} exact={:.6} simulated={:.6} se={:.6} z={:+.3}",
                sim.exact_expectations[t], sim.simulated_means[t], sim.simulated_stderr[t], z[t]
            ));
        }
        checks.push(Check::new(
            format!("simulation |z| < {Z_TOLERANCE} on {} grid points", grid.len()),
            grid.iter().all(|t| z[t].abs() < Z_TOLERANCE),
            format!("worst z={:+.3} at t={}", worst.1, worst.0),
        ));
        report = Some(sim);
    }

    if let Some(dir) = &args.output_dir {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("replay_counts.csv");
        match &report {
            Some(sim) => sim.write_csv(fs::File::create(&csv_path)?)?,
            None => {
                let mut w = csv::Writer::from_path(&csv_path)?;
                w.write_record(["t", "exact"])?;
                for (i, v) in exact.iter().enumerate() {
                    w.write_record([(i + 1).to_string(), fmt_f64(*v)])?;
                }
                w.flush()?;
            }
        }
        let out = AnalysisReport {
            lines: lines.clone(),
            checks: checks.clone(),
        };
        fs::write(dir.join("replay_counts.txt"), out.render())?;
    }
    Ok(AnalysisReport { lines, checks })
}

#[derive(Debug, Clone)]
pub struct BiasArgs {
    pub sigmas: Vec<f64>,
    pub v_stars: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub correlated: bool,
    pub output_dir: Option<PathBuf>,
}

/// Monte Carlo mean of the clipped double-Q target for every (sigma, v*)
/// pair, one derived seed per pair.
pub fn analyze_bias(args: &BiasArgs) -> Result<(AnalysisReport, Vec<BiasEstimate>)> {
    if args.sigmas.is_empty() || args.v_stars.is_empty() {
        bail!("need at least one sigma and one v_star");
    }
    let mut estimates = Vec::new();
    let mut k = 0u64;
    for &sigma in &args.sigmas {
        for &v in &args.v_stars {
            estimates.push(clipped_double_q_bias_mc(
                v,
                sigma,
                args.samples,
                args.seed.wrapping_add(k),
                args.correlated,
            )?);
            k += 1;
        }
    }
    let lines: Vec<String> = estimates.iter().map(|e| e.to_string()).collect();
    let checks = estimates
        .iter()
        .map(|e| {
            Check::new(
                format!("sigma={} v_star={}", e.sigma, e.v_star),
                e.z_score().abs() < Z_TOLERANCE,
                format!(
                    "mc={:.6} analytic={:.6} z={:+.3}",
                    e.mc_mean_of_min,
                    e.analytic_prediction,
                    e.z_score()
                ),
            )
        })
        .collect();
    let report = AnalysisReport { lines, checks };
    if let Some(dir) = &args.output_dir {
        fs::create_dir_all(dir)?;
        let mut csv = String::from(BiasEstimate::csv_header());
        csv.push('\n');
        for e in &estimates {
            csv.push_str(&e.csv_row());
            csv.push('\n');
        }
        fs::write(dir.join("bias.csv"), csv)?;
        fs::write(dir.join("bias.txt"), report.render())?;
    }
    Ok((report, estimates))
}

pub fn summarize_table(path: &Path) -> Result<String> {
    let (key, rows) = crate::harness::read_long_csv(path)?;
    let mut out = format!("{key},points,final_step,final_mean,best_mean,average_mean\n");
    for s in crate::harness::summarize(&rows) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.key,
            s.points,
            s.final_step,
            fmt_f64(s.final_mean),
            fmt_f64(s.best_mean),
            fmt_f64(s.average_mean)
        );
    }
    Ok(out)
}
