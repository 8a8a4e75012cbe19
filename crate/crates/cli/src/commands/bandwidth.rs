//! Learning diagnostics under a bandwidth schedule.

use std::path::Path;

use anyhow::Result;
use feedrecall::bandwidth::{
    bandwidth_learning_diagnostic, BandwidthSchedule, LearningVerdict, PopulationSequence, Range, DIVERGENCE_RATIO,
};
use serde::Serialize;

use super::world_state;
use crate::config::{BandwidthConfig, Config, ScheduleConfig, VerdictName};
use crate::output::{Meta, OutDir};

#[derive(Debug, Serialize)]
struct Row {
    n: usize,
    #[serde(rename = "B_n")]
    b_n: f64,
    p_n: f64,
    time: f64,
    bayes_rate: f64,
    bayes_benchmark: f64,
    nonbayes_rate: f64,
    nonbayes_per_capita: f64,
    /// Ratio to the previous grid point; empty on the first row.
    growth: Option<f64>,
    diverging_step: Option<bool>,
    verdict: String,
    verdict_pass: Option<bool>,
}

fn schedule(s: ScheduleConfig) -> BandwidthSchedule<f64> {
    match s {
        ScheduleConfig::Constant { b } => BandwidthSchedule::Constant(b),
        ScheduleConfig::Linear { b } => BandwidthSchedule::Linear(b),
        ScheduleConfig::Sqrt { c } => BandwidthSchedule::Sqrt(c),
        ScheduleConfig::Power { scale, exponent } => BandwidthSchedule::Power { scale, exponent },
    }
}

fn matches(expected: VerdictName, got: LearningVerdict) -> bool {
    matches!(
        (expected, got),
        (VerdictName::Stalled, LearningVerdict::Stalled)
            | (VerdictName::SubExponential, LearningVerdict::SubExponential)
            | (VerdictName::Exponential, LearningVerdict::Exponential)
    )
}

fn sequence(cfg: &BandwidthConfig, seed: u64) -> Result<PopulationSequence<f64>> {
    Ok(PopulationSequence::new(
        Range::new(cfg.rate.0, cfg.rate.1)?,
        Range::new(cfg.p_hi.0, cfg.p_hi.1)?,
        Range::new(cfg.p_lo.0, cfg.p_lo.1)?,
        world_state(cfg.theta, "bandwidth.theta")?,
        seed,
    )?)
}

pub fn run(config: &Config, out: &Path) -> Result<()> {
    let cfg = &config.bandwidth;
    let seq = sequence(cfg, config.seed)?;
    let diag = bandwidth_learning_diagnostic(&seq, &schedule(cfg.schedule), &cfg.n_grid, cfg.time_factor)?;
    let verdict = diag.verdict.to_string();
    let verdict_pass = cfg.expected_verdict.map(|e| matches(e, diag.verdict));
    let rows: Vec<Row> = diag
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let growth = (i > 0).then(|| r.nonbayes_rate / diag.rows[i - 1].nonbayes_rate);
            Row {
                n: r.n,
                b_n: r.bandwidth,
                p_n: r.keep_prob,
                time: r.time,
                bayes_rate: r.bayes_rate,
                bayes_benchmark: r.bayes_benchmark,
                nonbayes_rate: r.nonbayes_rate,
                nonbayes_per_capita: r.nonbayes_per_capita,
                growth,
                diverging_step: growth.map(|g| g >= DIVERGENCE_RATIO),
                verdict: verdict.clone(),
                verdict_pass,
            }
        })
        .collect();
    let dir = OutDir::create(out, Meta::new("bandwidth", config.seed, cfg)?)?;
    dir.write_csv("bandwidth.csv", &rows)?;
    println!("bandwidth: {verdict}");
    if verdict_pass == Some(false) {
        println!("bandwidth: verdict differs from the expected one");
    }
    Ok(())
}
