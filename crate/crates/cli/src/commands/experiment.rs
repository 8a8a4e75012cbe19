//! Generate, filter, fit and bootstrap the counting experiment.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use feedrecall::experiment::{
    filter_rows, fit_r_with_ci, fit_recall_curve, generate_dataset, overcount_curve, recall_observations,
    ClusterBootstrap, Color, Covariate, EstimationRow, GenerationConfig, GenerationMode, Interval, ModelSpec,
    OvercountForm, RModel, RecallFit,
};
use serde::Serialize;

use super::STREAM_STRIDE;
use crate::config::{Config, CovariateName, ExperimentConfig, FeedSelection, FormName, ModeName};
use crate::output::{Meta, OutDir};
use crate::ConfigError;

#[derive(Serialize)]
struct DatasetRow {
    participant: u64,
    feed: u8,
    own_color: Color,
    n_total: u32,
    n1: u32,
    n0: u32,
    alpha: u32,
    alpha_bar: u32,
    #[serde(rename = "Y1")]
    y1: f64,
    #[serde(rename = "Y0")]
    y0: f64,
    #[serde(rename = "Y")]
    y: f64,
    same_color: bool,
    known_question: bool,
    show_picture: bool,
    noticed_repetition: bool,
    used: bool,
}

#[derive(Serialize)]
struct FilterStats {
    threshold: Option<f64>,
    rows_total: usize,
    rows_selected: usize,
    dropped: usize,
    rows_used: usize,
}

#[derive(Serialize)]
struct RecallSummary {
    observations: usize,
    #[serde(flatten)]
    fit: RecallFit,
}

#[derive(Serialize)]
struct Estimates {
    coefficients: BTreeMap<&'static str, f64>,
    ci: BTreeMap<&'static str, Interval>,
    sigma_eps: f64,
    log_likelihood: f64,
    n_rows: usize,
    sweeps: usize,
    converged: bool,
    bootstrap: ClusterBootstrap,
    filter: FilterStats,
    recall_curve: Option<RecallSummary>,
    generating: RModel,
}

#[derive(Serialize)]
struct CurveRow {
    alpha: u32,
    rows: usize,
    mean_y: f64,
    ci_lo: f64,
    ci_hi: f64,
    predicted: Option<f64>,
}

fn generation(cfg: &ExperimentConfig, seed: u64) -> GenerationConfig {
    let mut g = GenerationConfig::new(
        cfg.participants,
        RModel {
            r0: cfg.r0,
            r_same_color: cfg.r_same_color,
            r_unknown_question: cfg.r_unknown_question,
            sigma_eps: cfg.sigma_eps,
        },
        seed,
    );
    g.black_blue_share = cfg.black_blue_share;
    g.eta_sigma = cfg.eta_sigma;
    g.recognition_r = cfg.recognition_r;
    g.false_recognition = cfg.false_recognition;
    g.form = form(cfg.form);
    g.mode = match cfg.mode {
        ModeName::Mean => GenerationMode::Mean,
        ModeName::MessageLevel => GenerationMode::MessageLevel,
    };
    g
}

fn form(f: FormName) -> OvercountForm {
    match f {
        FormName::Verbatim => OvercountForm::Verbatim,
        FormName::ExcludeFirst => OvercountForm::ExcludeFirst,
    }
}

pub fn run(config: &Config, out: &Path) -> Result<()> {
    let cfg = &config.experiment;
    if cfg.participants < 2 {
        return Err(ConfigError("experiment.participants must be at least 2".into()).into());
    }
    let data = generate_dataset(&generation(cfg, config.seed))?;

    let selected: Vec<EstimationRow> = match cfg.feeds {
        FeedSelection::Known => data.rows.iter().filter(|r| r.known_question).copied().collect(),
        FeedSelection::All => data.rows.clone(),
    };
    let (used, dropped) = match cfg.filter_max_abs_error {
        Some(t) if !(t >= 0.0) => {
            return Err(ConfigError(format!("experiment.filter_max_abs_error = {t} must be >= 0")).into())
        }
        Some(t) => {
            let report = filter_rows(&selected, t);
            (report.kept, report.dropped)
        }
        None => (selected.clone(), 0),
    };

    let spec = ModelSpec::with(
        &cfg.covariates
            .iter()
            .map(|c| match c {
                CovariateName::SameColor => Covariate::SameColor,
                CovariateName::UnknownQuestion => Covariate::UnknownQuestion,
            })
            .collect::<Vec<_>>(),
    );
    let fit_form = form(cfg.form);
    let boot = ClusterBootstrap::new(cfg.bootstrap_reps, cfg.level, config.seed.wrapping_add(STREAM_STRIDE));
    let est = fit_r_with_ci(&used, &spec, fit_form, boot)?;
    let curve_boot = ClusterBootstrap { seed: config.seed.wrapping_add(2 * STREAM_STRIDE), ..boot };
    let curve = overcount_curve(&used, Some(est.fit.r()), fit_form, curve_boot)?;

    let obs = recall_observations(&data.participants);
    let recall_curve = match fit_recall_curve(&obs) {
        Ok(fit) => Some(RecallSummary { observations: obs.len(), fit }),
        Err(feedrecall::Error::Identifiability(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let used_keys: std::collections::HashSet<(u64, u8)> = used.iter().map(|r| (r.participant, r.feed)).collect();
    let mut rows = Vec::with_capacity(data.rows.len());
    // Rows are laid out participant by participant, one per feed.
    for (p, p_rows) in data.participants.iter().zip(data.rows.chunks(3)) {
        for (f, row) in p.feeds.iter().zip(p_rows) {
            rows.push(DatasetRow {
                participant: row.participant,
                feed: row.feed,
                own_color: p.own_color,
                n_total: row.n_total,
                n1: row.n1,
                n0: row.n0,
                alpha: row.alpha,
                alpha_bar: row.alpha_bar,
                y1: row.y1,
                y0: row.y0,
                y: row.y,
                same_color: row.same_color,
                known_question: row.known_question,
                show_picture: f.spec.show_picture,
                noticed_repetition: f.noticed_repetition,
                used: used_keys.contains(&(row.participant, row.feed)),
            });
        }
    }

    let dir = OutDir::create(out, Meta::new("experiment", config.seed, cfg)?)?;
    dir.write_csv("dataset.csv", &rows)?;
    let curve_rows: Vec<CurveRow> = curve
        .iter()
        .map(|p| CurveRow { alpha: p.alpha, rows: p.rows, mean_y: p.mean_y, ci_lo: p.ci_lo, ci_hi: p.ci_hi, predicted: p.predicted })
        .collect();
    dir.write_csv("overcount_curve.csv", &curve_rows)?;

    let names = &est.fit.names;
    let estimates = Estimates {
        coefficients: names.iter().copied().zip(est.fit.coefficients.iter().copied()).collect(),
        ci: names.iter().copied().zip(est.ci.iter().copied()).collect(),
        sigma_eps: est.fit.sigma_eps,
        log_likelihood: est.fit.log_likelihood,
        n_rows: est.fit.n_rows,
        sweeps: est.fit.sweeps,
        converged: est.fit.converged,
        bootstrap: boot,
        filter: FilterStats {
            threshold: cfg.filter_max_abs_error,
            rows_total: data.rows.len(),
            rows_selected: selected.len(),
            dropped,
            rows_used: used.len(),
        },
        recall_curve,
        generating: generation(cfg, config.seed).r_model,
    };
    dir.write_json("estimates.json", &estimates)?;
    println!(
        "experiment: r0 = {:.6} [{:.6}, {:.6}] from {} rows ({} dropped by filter)",
        est.fit.r(),
        est.ci[0].lo,
        est.ci[0].hi,
        used.len(),
        dropped
    );
    Ok(())
}
