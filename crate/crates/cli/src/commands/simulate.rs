//! Monte Carlo receivers against the analytic drift.

use std::path::Path;

use anyhow::Result;
use feedrecall::montecarlo::{mean_se, replicate_rng, replicates};
use feedrecall::{
    asymptotic_recall, bayesian_limit, bayesian_trajectory, nonbayesian_rate, sample_feed, sender_influence,
    simulate_nonbayesian, BeliefTrajectory, InterferenceParam, Population, Sender, SignalModel,
};
use serde::Serialize;

use super::{world_state, STREAM_STRIDE};
use crate::config::{Config, SimulateConfig};
use crate::output::{Meta, OutDir};
use crate::ConfigError;

#[derive(Serialize)]
struct TrajectoryRow {
    replicate: usize,
    time: f64,
    phi: f64,
    mu1: f64,
    bayes_phi: f64,
    /// `rate * time`, the analytic drift line.
    analytic_phi: f64,
}

#[derive(Serialize)]
struct SenderSummary {
    id: usize,
    rate: f64,
    signal: u8,
    llr: f64,
    influence: f64,
    asymptotic_recall: f64,
    rate_term: f64,
}

#[derive(Serialize)]
struct RateSummaryDoc {
    horizon: f64,
    replicates: usize,
    r: f64,
    theta: u8,
    analytic_rate: f64,
    bayesian_limit: f64,
    mean_phi_over_horizon: f64,
    se_phi_over_horizon: f64,
    relative_error: f64,
    senders: Vec<SenderSummary>,
}

fn population(cfg: &SimulateConfig, seed: u64) -> Result<Population<f64>> {
    if cfg.senders.is_empty() {
        return Err(ConfigError("simulate needs at least one sender".into()).into());
    }
    let theta = world_state(cfg.theta, "simulate.theta")?;
    // Missing signals come from a stream disjoint from the replicate streams.
    let mut rng = replicate_rng(seed, STREAM_STRIDE);
    let senders = cfg
        .senders
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let model = SignalModel::new(s.p_hi, s.p_lo)?;
            let signal = match s.signal {
                Some(bit) => world_state(bit, "sender signal")?,
                None => model.sample_signal(theta, &mut rng),
            };
            Ok(Sender::new(i + 1, s.rate, model, signal)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Population::new(senders, theta)?)
}

/// Value of a step trajectory at each grid time.
fn on_grid(traj: &BeliefTrajectory<f64>, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut k = 0;
    let mut phi = 0.0;
    for &t in grid {
        while k < traj.samples.len() && traj.samples[k].0 <= t {
            phi = traj.samples[k].1;
            k += 1;
        }
        out.push(phi);
    }
    out
}

pub fn run(config: &Config, out: &Path) -> Result<()> {
    let cfg = &config.simulate;
    let pop = population(cfg, config.seed)?;
    let r = InterferenceParam::new(cfg.r)?;
    if cfg.replicates == 0 {
        return Err(ConfigError("simulate.replicates must be at least 1".into()).into());
    }
    if !(cfg.grid_step > 0.0 && cfg.grid_step.is_finite()) {
        return Err(ConfigError(format!("simulate.grid_step = {} must be > 0", cfg.grid_step)).into());
    }
    let steps = (cfg.horizon / cfg.grid_step).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|k| k as f64 * cfg.grid_step).collect();
    if grid.last() != Some(&cfg.horizon) {
        grid.push(cfg.horizon);
    }

    let summary = nonbayesian_rate(&pop, r);
    let runs = replicates(cfg.replicates, config.seed, |_, rng| -> feedrecall::Result<_> {
        let feed = sample_feed(&pop, cfg.horizon, rng)?;
        let non = simulate_nonbayesian(&feed, &pop, r, rng)?;
        let bayes = bayesian_trajectory(&feed, &pop)?;
        Ok((on_grid(&non, &grid), on_grid(&bayes, &grid), non.final_phi()))
    })
    .into_iter()
    .collect::<feedrecall::Result<Vec<_>>>()?;

    let meta = Meta::new("simulate", config.seed, cfg)?;
    let dir = OutDir::create(out, meta)?;
    let mut rows = Vec::with_capacity(runs.len() * grid.len());
    for (rep, (non, bayes, _)) in runs.iter().enumerate() {
        for (k, &time) in grid.iter().enumerate() {
            rows.push(TrajectoryRow {
                replicate: rep,
                time,
                phi: non[k],
                mu1: BeliefTrajectory::mu1(non[k]),
                bayes_phi: bayes[k],
                analytic_phi: summary.rate * time,
            });
        }
    }
    dir.write_csv("trajectories.csv", &rows)?;

    let scaled: Vec<f64> = runs.iter().map(|(_, _, f)| f / cfg.horizon).collect();
    let (mean, se) = mean_se(&scaled);
    let senders = pop
        .senders()
        .iter()
        .zip(&summary.per_sender_terms)
        .map(|(s, &term)| {
            Ok(SenderSummary {
                id: s.id(),
                rate: s.rate(),
                signal: s.signal().bit(),
                llr: s.signal_llr(),
                influence: sender_influence(s.id(), &pop, r)?,
                asymptotic_recall: asymptotic_recall(s.rate(), pop.total_rate(), cfg.r)?,
                rate_term: term,
            })
        })
        .collect::<feedrecall::Result<Vec<_>>>()?;
    let relative_error = if summary.rate != 0.0 { (mean - summary.rate).abs() / summary.rate.abs() } else { f64::NAN };
    let doc = RateSummaryDoc {
        horizon: cfg.horizon,
        replicates: cfg.replicates,
        r: cfg.r,
        theta: cfg.theta,
        analytic_rate: summary.rate,
        bayesian_limit: bayesian_limit(&pop),
        mean_phi_over_horizon: mean,
        se_phi_over_horizon: se,
        relative_error,
        senders,
    };
    dir.write_json("rate_summary.json", &doc)?;
    println!(
        "simulate: {} replicates, analytic rate {:.6}, simulated {:.6} (se {:.6})",
        cfg.replicates, summary.rate, mean, se
    );
    Ok(())
}
