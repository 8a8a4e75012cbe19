//! Calibration and best-response verification table.

use std::path::Path;

use anyhow::Result;
use feedrecall::pricing::{calibrate_price, PriceFunction, PriceKind, PricingGame};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, PriceKindName, PricingConfig};
use crate::output::{Meta, OutDir};
use crate::ConfigError;

#[derive(Debug, Serialize)]
struct Row {
    kind: &'static str,
    n: usize,
    b: f64,
    c1: Option<f64>,
    c2: Option<f64>,
    target: f64,
    best_response: f64,
    abs_error: f64,
    br_pass: bool,
    foc_residual: f64,
    foc_pass: bool,
    deviations_dominated: bool,
}

fn check(cfg: &PricingConfig, n: usize, b: f64) -> feedrecall::Result<Row> {
    let price = match cfg.kind {
        PriceKindName::Linear => calibrate_price(n, b, PriceKind::Linear)?,
        PriceKindName::Quadratic => calibrate_price(n, b, PriceKind::Quadratic)?,
        PriceKindName::Tabulated => PriceFunction::tabulated(cfg.knots.clone())?,
    };
    let (kind, c1, c2) = match price {
        PriceFunction::Linear { c1 } => ("linear", Some(c1), None),
        PriceFunction::Quadratic { c2 } => ("quadratic", None, Some(c2)),
        PriceFunction::Tabulated { .. } => ("tabulated", None, None),
    };
    let game = PricingGame::new(n, b, price)?;
    let c = game.check(cfg.search_tol)?;
    Ok(Row {
        kind,
        n,
        b,
        c1,
        c2,
        target: c.target,
        best_response: c.best_response,
        abs_error: c.abs_error,
        br_pass: c.abs_error <= cfg.br_tol,
        foc_residual: c.foc_residual,
        foc_pass: c.foc_residual < cfg.foc_tol,
        deviations_dominated: c.deviations_dominated,
    })
}

pub fn run(config: &Config, out: &Path) -> Result<()> {
    let cfg = &config.pricing;
    if cfg.games.is_empty() {
        return Err(ConfigError("pricing.games is empty".into()).into());
    }
    let rows = cfg
        .games
        .par_iter()
        .map(|g| check(cfg, g.n, g.b))
        .collect::<feedrecall::Result<Vec<_>>>()?;
    let dir = OutDir::create(out, Meta::new("pricing", config.seed, cfg)?)?;
    dir.write_csv("pricing.csv", &rows)?;
    println!("{:>10} {:>5} {:>8} {:>12} {:>12} {:>14} {:>10} {:>7}", "kind", "n", "B", "c1", "c2", "best_response", "foc_resid", "pass");
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    for r in &rows {
        println!(
            "{:>10} {:>5} {:>8} {:>12} {:>12} {:>14.9} {:>10.2e} {:>7}",
            r.kind,
            r.n,
            r.b,
            fmt(r.c1),
            fmt(r.c2),
            r.best_response,
            r.foc_residual,
            r.br_pass && r.foc_pass
        );
    }
    Ok(())
}
