//! Seed-level orchestration and CSV artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use rud_core::agents::{
    mean_std, EvalOutcome, Evaluator, Learner, LogRow, RunLog, Scheduler, TrainHooks, TrainingRun,
};
use rud_core::replay::ReplayBuffer;

use crate::config::ExperimentConfig;

pub const SEED_HEADER: [&str; 6] = [
    "step",
    "eval_return_mean",
    "eval_return_std",
    "critic_loss",
    "q_std_diagnostic",
    "q_change_diagnostic",
];
pub const AGGREGATE_HEADER: [&str; 5] = ["step", "mean", "std", "seeds_ok", "seeds_failed"];

/// 17 significant digits: parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub step: usize,
    pub returns: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub status: RunStatus,
    pub rows: Vec<LogRow>,
    pub records: Vec<EvalRecord>,
    pub log: Option<RunLog>,
}

impl SeedRun {
    pub fn ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub step: usize,
    pub mean: f64,
    pub std: f64,
    pub seeds_ok: usize,
    pub seeds_failed: usize,
}

/// One curve: a labelled configuration run over every seed.
#[derive(Debug, Clone)]
pub struct GroupSpec {
    pub label: String,
    pub config: ExperimentConfig,
    pub scheduler: Scheduler,
}

#[derive(Debug, Clone)]
pub struct GroupResult {
    pub label: String,
    pub dir: PathBuf,
    pub runs: Vec<SeedRun>,
    pub aggregate: Vec<AggregateRow>,
}

impl GroupResult {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| !r.ok()).count()
    }
}

/// Delegates to [`Evaluator`] and keeps every episode return.
struct Capture {
    inner: Evaluator,
    records: Vec<EvalRecord>,
}

impl TrainHooks for Capture {
    fn on_eval(
        &mut self,
        step: usize,
        learner: &Learner,
        buffer: &ReplayBuffer,
    ) -> rud_core::Result<Option<EvalOutcome>> {
        let outcome = self.inner.on_eval(step, learner, buffer)?;
        if let Some(o) = &outcome {
            let (mean, std) = mean_std(&o.returns);
            self.records.push(EvalRecord {
                step,
                returns: o.returns.clone(),
                mean,
                std,
            });
        }
        Ok(outcome)
    }
}

/// Train one seed. Failures are captured in the status, not propagated.
pub fn run_seed(config: &ExperimentConfig, scheduler: Scheduler, seed: u64) -> SeedRun {
    let mut records = Vec::new();
    let result = (|| -> rud_core::Result<RunLog> {
        let env = config.env_id.make();
        let learner = Learner::new(config.agent.clone(), env.spec(), seed)?;
        let evaluator = Evaluator::new(
            config.env_id.make(),
            config.eval_episodes,
            seed,
            learner.critics()[0].clone(),
        )
        .with_probe_size(config.probe_size);
        let mut run = TrainingRun::new(learner, env, config.schedule(), seed)?;
        let mut hooks = Capture {
            inner: evaluator,
            records: Vec::new(),
        };
        let log = scheduler.train(&mut run, &mut hooks);
        records = hooks.records;
        log
    })();
    match result {
        Ok(log) => SeedRun {
            seed,
            status: RunStatus::Ok,
            rows: log.rows.clone(),
            records,
            log: Some(log),
        },
        Err(e) => {
            warn!("seed {seed} failed: {e}");
            SeedRun {
                seed,
                status: RunStatus::Failed(e.to_string()),
                rows: Vec::new(),
                records,
                log: None,
            }
        }
    }
}

pub fn write_seed_csv(path: &Path, rows: &[LogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(SEED_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            fmt_f64(r.eval_return_mean),
            fmt_f64(r.eval_return_std),
            fmt_f64(r.critic_loss),
            fmt_f64(r.q_std_diagnostic),
            fmt_f64(r.q_change_diagnostic),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_seed_csv(path: &Path) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { Ok(rec[i].parse()?) };
        rows.push(LogRow {
            step: rec[0].parse()?,
            eval_return_mean: f(1)?,
            eval_return_std: f(2)?,
            critic_loss: f(3)?,
            q_std_diagnostic: f(4)?,
            q_change_diagnostic: f(5)?,
        });
    }
    Ok(rows)
}

pub fn write_returns_csv(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "episode", "return"])?;
    for rec in records {
        for (k, v) in rec.returns.iter().enumerate() {
            w.write_record([rec.step.to_string(), k.to_string(), fmt_f64(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-step mean/std of `eval_return_mean` across the successful seeds, in
/// seed order.
pub fn aggregate(runs: &[SeedRun]) -> Vec<AggregateRow> {
    let ok: Vec<&SeedRun> = runs.iter().filter(|r| r.ok()).collect();
    let failed = runs.len() - ok.len();
    let Some(first) = ok.first() else {
        return Vec::new();
    };
    first
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let values: Vec<f64> = ok.iter().map(|r| r.rows[i].eval_return_mean).collect();
            let (mean, std) = mean_std(&values);
            AggregateRow {
                step: row.step,
                mean,
                std,
                seeds_ok: ok.len(),
                seeds_failed: failed,
            }
        })
        .collect()
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            fmt_f64(r.mean),
            fmt_f64(r.std),
            r.seeds_ok.to_string(),
            r.seeds_failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(AggregateRow {
            step: rec[0].parse()?,
            mean: rec[1].parse()?,
            std: rec[2].parse()?,
            seeds_ok: rec[3].parse()?,
            seeds_failed: rec[4].parse()?,
        });
    }
    Ok(rows)
}

pub fn write_runs_csv(path: &Path, runs: &[SeedRun]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "seed",
        "status",
        "env_steps",
        "updates",
        "actor_updates",
        "episodes",
        "noise_lag1_autocorr",
        "message",
    ])?;
    for run in runs {
        let (status, message) = match &run.status {
            RunStatus::Ok => ("ok", String::new()),
            RunStatus::Failed(m) => ("failed", m.clone()),
        };
        let num = |f: fn(&RunLog) -> String| run.log.as_ref().map(f).unwrap_or_default();
        w.write_record([
            run.seed.to_string(),
            status.to_string(),
            num(|l| l.env_steps.to_string()),
            num(|l| l.updates.to_string()),
            num(|l| l.actor_updates.to_string()),
            num(|l| l.episodes.to_string()),
            num(|l| l.noise_lag1_autocorr.map(fmt_f64).unwrap_or_default()),
            message,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn seed_csv_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.csv"))
}

/// Run every (group, seed) pair concurrently. Each task writes its own
/// per-seed files; aggregates are written after all tasks join.
pub fn run_groups(specs: &[GroupSpec], root: &Path) -> Result<Vec<GroupResult>> {
    let dirs: Vec<PathBuf> = specs.iter().map(|s| root.join(&s.label)).collect();
    for dir in &dirs {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tasks: Vec<(usize, u64)> = specs
        .iter()
        .enumerate()
        .flat_map(|(g, s)| s.config.seeds.iter().map(move |&seed| (g, seed)))
        .collect();
    let finished: Vec<(usize, SeedRun)> = tasks
        .par_iter()
        .map(|&(g, seed)| -> Result<(usize, SeedRun)> {
            let spec = &specs[g];
            info!("{}: seed {seed} started", spec.label);
            let run = run_seed(&spec.config, spec.scheduler, seed);
            if run.ok() {
                write_seed_csv(&seed_csv_path(&dirs[g], seed), &run.rows)?;
                write_returns_csv(&dirs[g].join(format!("returns_seed_{seed}.csv")), &run.records)?;
            }
            info!("{}: seed {seed} finished ({:?})", spec.label, run.status);
            Ok((g, run))
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(specs.len());
    for (g, spec) in specs.iter().enumerate() {
        let runs: Vec<SeedRun> = finished
            .iter()
            .filter(|(i, _)| *i == g)
            .map(|(_, r)| r.clone())
            .collect();
        let agg = aggregate(&runs);
        write_aggregate_csv(&dirs[g].join("aggregate.csv"), &agg)?;
        write_runs_csv(&dirs[g].join("runs.csv"), &runs)?;
        results.push(GroupResult {
            label: spec.label.clone(),
            dir: dirs[g].clone(),
            runs,
            aggregate: agg,
        });
    }
    Ok(results)
}

/// One labelled row of a long-format comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub key: String,
    pub step: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn long_rows(groups: &[GroupResult], keys: &[String]) -> Vec<LongRow> {
    groups
        .iter()
        .zip(keys)
        .flat_map(|(g, key)| {
            g.aggregate.iter().map(move |a| LongRow {
                key: key.clone(),
                step: a.step,
                mean: a.mean,
                std: a.std,
            })
        })
        .collect()
}

pub fn write_long_csv(path: &Path, key_column: &str, rows: &[LongRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([key_column, "step", "mean", "std"])?;
    for r in rows {
        w.write_record([r.key.clone(), r.step.to_string(), fmt_f64(r.mean), fmt_f64(r.std)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads any table written by [`write_long_csv`]; the key column name is
/// returned alongside the rows.
pub fn read_long_csv(path: &Path) -> Result<(String, Vec<LongRow>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let key_column = r.headers()?.get(0).unwrap_or("key").to_string();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(LongRow {
            key: rec[0].to_string(),
            step: rec[1].parse()?,
            mean: rec[2].parse()?,
            std: rec[3].parse()?,
        });
    }
    Ok((key_column, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub key: String,
    pub points: usize,
    pub final_step: usize,
    pub final_mean: f64,
    pub best_mean: f64,
    /// Mean of the curve over its evaluation points.
    pub average_mean: f64,
}

/// Per-curve summary of a long table, keys in first-appearance order.
pub fn summarize(rows: &[LongRow]) -> Vec<CurveSummary> {
    let mut keys: Vec<&str> = Vec::new();
    for r in rows {
        if !keys.contains(&r.key.as_str()) {
            keys.push(&r.key);
        }
    }
    keys.into_iter()
        .map(|key| {
            let curve: Vec<&LongRow> = rows.iter().filter(|r| r.key == key).collect();
            let last = curve.last().expect("key came from rows");
            CurveSummary {
                key: key.to_string(),
                points: curve.len(),
                final_step: last.step,
                final_mean: last.mean,
                best_mean: curve.iter().map(|r| r.mean).fold(f64::NEG_INFINITY, f64::max),
                average_mean: curve.iter().map(|r| r.mean).sum::<f64>() / curve.len() as f64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, mean: f64) -> LogRow {
        LogRow {
            step,
            eval_return_mean: mean,
            eval_return_std: 0.0,
            critic_loss: f64::NAN,
            q_std_diagnostic: 0.1,
            q_change_diagnostic: 0.2,
        }
    }

    fn seed_run(seed: u64, means: &[f64]) -> SeedRun {
        SeedRun {
            seed,
            status: RunStatus::Ok,
            rows: means.iter().enumerate().map(|(i, m)| row((i + 1) * 10, *m)).collect(),
            records: Vec::new(),
            log: None,
        }
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, f64::MAX, -0.0, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert!(fmt_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn aggregate_skips_failed_seeds() {
        let mut failed = seed_run(2, &[]);
        failed.status = RunStatus::Failed("non-finite".into());
        let runs = vec![seed_run(0, &[1.0, 2.0]), failed, seed_run(1, &[3.0, 6.0])];
        let agg = aggregate(&runs);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].mean, 2.0);
        assert_eq!(agg[0].std, 1.0);
        assert_eq!(agg[1].mean, 4.0);
        assert_eq!((agg[1].seeds_ok, agg[1].seeds_failed), (2, 1));
    }

    #[test]
    fn summary_of_curves() {
        let rows = vec![
            LongRow { key: "1".into(), step: 10, mean: -5.0, std: 0.0 },
            LongRow { key: "1".into(), step: 20, mean: -3.0, std: 0.0 },
            LongRow { key: "50".into(), step: 10, mean: -1.0, std: 0.0 },
            LongRow { key: "1".into(), step: 30, mean: -4.0, std: 0.0 },
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].key, "1");
        assert_eq!((s[0].points, s[0].final_step), (3, 30));
        assert_eq!((s[0].final_mean, s[0].best_mean, s[0].average_mean), (-4.0, -3.0, -4.0));
    }
}
