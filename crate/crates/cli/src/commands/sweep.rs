//! Cross-product grid of closed-form quantities.

use std::path::Path;

use anyhow::Result;
use feedrecall::belief::MAX_EXACT_SENDERS;
use feedrecall::montecarlo::replicate_rng;
use feedrecall::{
    asymptotic_recall, mislearning_probability, mislearning_probability_mc, nonbayesian_rate, sender_influence,
    InterferenceParam, Population, Sender, SignalModel, WorldState,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, SweepConfig};
use crate::output::{Meta, OutDir};
use crate::ConfigError;

#[derive(Debug, Clone, Copy)]
struct Point {
    n: usize,
    high_rate: f64,
    base_rate: f64,
    r: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    n: usize,
    high_rate: f64,
    base_rate: f64,
    r: f64,
    influence_high: f64,
    /// Empty when `n = 1`.
    influence_base: Option<f64>,
    recall_high: f64,
    recall_base: Option<f64>,
    /// Drift when every signal matches the state.
    rate_all_correct: f64,
    /// Drift when only the high sender's signal is wrong.
    rate_high_dissent: f64,
    /// Mislearning masses; empty when `r = 0`, where the drift is zero by construction.
    p_wrong: Option<f64>,
    p_correct: Option<f64>,
    p_tie: Option<f64>,
    se_wrong: Option<f64>,
    method: Option<&'static str>,
    /// Within this `(n, high_rate, base_rate)` block, the high sender's
    /// influence never decreases as `r` grows.
    influence_monotone_in_r: bool,
}

fn grid(cfg: &SweepConfig) -> Result<Vec<Point>> {
    for (name, len) in [("r", cfg.r.len()), ("n", cfg.n.len()), ("high_rate", cfg.high_rate.len()), ("base_rate", cfg.base_rate.len())] {
        if len == 0 {
            return Err(ConfigError(format!("sweep.{name} is empty")).into());
        }
    }
    if let Some(n) = cfg.n.iter().find(|&&n| n == 0) {
        return Err(ConfigError(format!("sweep.n must be >= 1, got {n}")).into());
    }
    let mut points = Vec::new();
    for &n in &cfg.n {
        for &high_rate in &cfg.high_rate {
            for &base_rate in &cfg.base_rate {
                for &r in &cfg.r {
                    points.push(Point { n, high_rate, base_rate, r });
                }
            }
        }
    }
    Ok(points)
}

fn population(p: &Point, model: SignalModel<f64>, dissent: bool) -> feedrecall::Result<Population<f64>> {
    let senders = (1..=p.n)
        .map(|id| {
            let rate = if id == 1 { p.high_rate } else { p.base_rate };
            let signal = if id == 1 && dissent { WorldState::Zero } else { WorldState::One };
            Sender::new(id, rate, model, signal)
        })
        .collect::<feedrecall::Result<Vec<_>>>()?;
    Population::new(senders, WorldState::One)
}

fn evaluate(p: &Point, cfg: &SweepConfig, seed: u64, index: usize) -> feedrecall::Result<Row> {
    let model = SignalModel::new(cfg.p_hi, cfg.p_lo)?;
    let r = InterferenceParam::new(p.r)?;
    let correct = population(p, model, false)?;
    let dissent = population(p, model, true)?;
    let total = correct.total_rate();
    let models = vec![model; p.n];
    let rates: Vec<f64> = correct.senders().iter().map(|s| s.rate()).collect();
    let (m, method) = if p.r == 0.0 {
        (None, None)
    } else if p.n <= MAX_EXACT_SENDERS {
        (Some(mislearning_probability(&models, &rates, p.r)?), Some("exact"))
    } else {
        let mut rng = replicate_rng(seed, index as u64);
        (Some(mislearning_probability_mc(&models, &rates, p.r, cfg.mc_draws, &mut rng)?), Some("monte_carlo"))
    };
    let (influence_base, recall_base) = if p.n > 1 {
        (Some(sender_influence(2, &correct, r)?), Some(asymptotic_recall(p.base_rate, total, p.r)?))
    } else {
        (None, None)
    };
    Ok(Row {
        n: p.n,
        high_rate: p.high_rate,
        base_rate: p.base_rate,
        r: p.r,
        influence_high: sender_influence(1, &correct, r)?,
        influence_base,
        recall_high: asymptotic_recall(p.high_rate, total, p.r)?,
        recall_base,
        rate_all_correct: nonbayesian_rate(&correct, r).rate,
        rate_high_dissent: nonbayesian_rate(&dissent, r).rate,
        p_wrong: m.map(|m| m.p_wrong),
        p_correct: m.map(|m| m.p_correct),
        p_tie: m.map(|m| m.p_tie),
        se_wrong: m.map(|m| m.se_wrong),
        method,
        influence_monotone_in_r: true,
    })
}

pub fn run(config: &Config, out: &Path) -> Result<()> {
    let cfg = &config.sweep;
    let points = grid(cfg)?;
    let mut rows = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| evaluate(p, cfg, config.seed, i))
        .collect::<feedrecall::Result<Vec<_>>>()?;

    for block in rows.chunks_mut(cfg.r.len()) {
        let mut by_r: Vec<(f64, f64)> = block.iter().map(|row| (row.r, row.influence_high)).collect();
        by_r.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = by_r.windows(2).all(|w| w[1].1 >= w[0].1);
        block.iter_mut().for_each(|row| row.influence_monotone_in_r = monotone);
    }

    let dir = OutDir::create(out, Meta::new("sweep", config.seed, cfg)?)?;
    dir.write_csv("sweep.csv", &rows)?;
    let failures = rows.iter().filter(|r| !r.influence_monotone_in_r).count();
    println!("sweep: {} grid points, {} failing the monotonicity check", rows.len(), failures);
    Ok(())
}
