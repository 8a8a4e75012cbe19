//! Synthetic counting experiment and estimation of the interference strength.
//!
//! Each participant watches three feeds. In a feed `n` senders (8 or 10) post
//! one of two colour opinions; one "high" sender repeats its message `alpha`
//! times. Participants then report how many senders hold each opinion. With
//! `n1` senders agreeing with the high sender and `n0` disagreeing, the
//! overcount statistic
//!
//! `Y = (Y1 - Y0) - (n1 - n0) = alpha (1 - p_r) + eps`,
//! `p_r = alpha / (alpha + r (alpha_bar - alpha))`, `alpha_bar = n - 1 + alpha`
//!
//! identifies `r`. Errors common to both counts cancel in the difference.
//! The estimator is Gaussian maximum likelihood with `r` per row built from a
//! baseline plus covariate shifts, fitted by coordinate-wise golden-section
//! search under the constraint that every row's `r` stays nonnegative.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::influence_weight;
use crate::error::{domain, Error, Result};
use crate::montecarlo::{replicate_rng, replicates};
use crate::num::Real;
use crate::optimize::golden_section_min;
use crate::recall::{recall_ratio, InterferenceParam, RecallState};

/// Upper end of the search interval for any interference coefficient.
pub const R_SEARCH_MAX: f64 = 50.0;
/// Coordinate descent stops once no coefficient moves more than this in a sweep.
pub const FIT_STEP_TOL: f64 = 1e-7;
const MAX_SWEEPS: usize = 2000;
const SCAN_POINTS: usize = 64;
const LINE_TOL: f64 = 1e-11;

/// How much of the high sender's repetition is exposed to double counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OvercountForm {
    /// `alpha (1 - p_r)`: every one of the `alpha` messages may be miscounted.
    #[default]
    Verbatim,
    /// `(alpha - 1)(1 - p_r)`: the first message always identifies the sender.
    ExcludeFirst,
}

impl OvercountForm {
    fn exposed(self, alpha: u32) -> u32 {
        match self {
            OvercountForm::Verbatim => alpha,
            OvercountForm::ExcludeFirst => alpha - 1,
        }
    }
}

/// Expected overcount `alpha (1 - p_r)` (or its exclude-first variant).
pub fn overcount_mean<T: Real>(alpha: T, alpha_bar: T, r: T, form: OvercountForm) -> Result<T> {
    if !(alpha >= T::one() && alpha <= alpha_bar && alpha_bar.is_finite()) {
        return domain(format!("need 1 <= alpha <= alpha_bar, got {alpha} and {alpha_bar}"));
    }
    let r = InterferenceParam::new(r)?.value();
    Ok(overcount_unchecked(alpha, alpha_bar, r, form))
}

fn overcount_unchecked<T: Real>(alpha: T, alpha_bar: T, r: T, form: OvercountForm) -> T {
    match form {
        OvercountForm::Verbatim => influence_weight(alpha, alpha_bar, r),
        OvercountForm::ExcludeFirst => {
            (alpha - T::one()) * (T::one() - recall_ratio(alpha, alpha_bar - alpha, r))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    BlackBlue,
    WhiteGold,
}

/// Randomized design of one feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedSpec {
    /// 1, 2 or 3; the question is known in advance from feed 2 on.
    pub feed_index: u8,
    pub n_total: u32,
    pub n_black_blue: u32,
    pub high_color: Color,
    /// Senders sharing the high sender's opinion, the high sender included.
    pub n1: u32,
    pub n0: u32,
    /// Messages sent by the high sender.
    pub alpha: u32,
    pub show_picture: bool,
}

impl FeedSpec {
    /// Total messages in the feed: one per low sender plus the high sender's repeats.
    pub fn alpha_bar(&self) -> u32 {
        self.n_total - 1 + self.alpha
    }

    pub fn known_question(&self) -> bool {
        self.feed_index >= 2
    }

    fn sample<R: Rng + ?Sized>(feed_index: u8, rng: &mut R) -> Self {
        let n_total = if rng.random::<bool>() { 8 } else { 10 };
        let n_black_blue = rng.random_range(0..=n_total);
        // The high sender is one of the n senders, so its side is never empty.
        let high = rng.random_range(0..n_total);
        let high_color = if high < n_black_blue { Color::BlackBlue } else { Color::WhiteGold };
        let n1 = match high_color {
            Color::BlackBlue => n_black_blue,
            Color::WhiteGold => n_total - n_black_blue,
        };
        let alpha = rng.random_range(1..=6);
        FeedSpec {
            feed_index,
            n_total,
            n_black_blue,
            high_color,
            n1,
            n0: n_total - n1,
            alpha,
            show_picture: rng.random::<bool>(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedResponse {
    pub spec: FeedSpec,
    /// Reported number of senders agreeing with the high sender.
    pub y1: f64,
    /// Reported number of senders disagreeing with the high sender.
    pub y0: f64,
    pub noticed_repetition: bool,
}

/// End-of-study name recognition after the third feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NameRecognition {
    pub high: bool,
    /// `None` when no other sender shared that opinion.
    pub low_black_blue: Option<bool>,
    pub low_white_gold: Option<bool>,
    /// Two names that never appeared.
    pub absent: [bool; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantRecord {
    pub id: u64,
    pub own_color: Color,
    pub feeds: Vec<FeedResponse>,
    pub names: NameRecognition,
}

/// One `(participant, feed)` observation of the overcount statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationRow {
    pub participant: u64,
    pub feed: u8,
    pub n_total: u32,
    pub n1: u32,
    pub n0: u32,
    pub alpha: u32,
    pub alpha_bar: u32,
    #[serde(rename = "Y1")]
    pub y1: f64,
    #[serde(rename = "Y0")]
    pub y0: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub same_color: bool,
    pub known_question: bool,
}

impl EstimationRow {
    fn from_response(participant: u64, own: Color, resp: &FeedResponse) -> Self {
        let s = &resp.spec;
        EstimationRow {
            participant,
            feed: s.feed_index,
            n_total: s.n_total,
            n1: s.n1,
            n0: s.n0,
            alpha: s.alpha,
            alpha_bar: s.alpha_bar(),
            y1: resp.y1,
            y0: resp.y0,
            y: (resp.y1 - resp.y0) - (s.n1 as f64 - s.n0 as f64),
            same_color: own == s.high_color,
            known_question: s.known_question(),
        }
    }
}

/// Row-level effect on the interference strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    /// Participant perceives the same colour as the high sender.
    SameColor,
    /// First feed, before the question is known.
    UnknownQuestion,
}

impl Covariate {
    pub fn name(self) -> &'static str {
        match self {
            Covariate::SameColor => "r_same_color",
            Covariate::UnknownQuestion => "r_unknown_question",
        }
    }

    fn active(self, row: &EstimationRow) -> bool {
        match self {
            Covariate::SameColor => row.same_color,
            Covariate::UnknownQuestion => !row.known_question,
        }
    }
}

/// Generating model: `r = r0 + 1(same colour) r_same + 1(feed 1) r_unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RModel {
    pub r0: f64,
    pub r_same_color: f64,
    pub r_unknown_question: f64,
    pub sigma_eps: f64,
}

impl RModel {
    pub fn constant(r: f64, sigma_eps: f64) -> Self {
        RModel { r0: r, r_same_color: 0.0, r_unknown_question: 0.0, sigma_eps }
    }

    pub fn r_for(&self, same_color: bool, known_question: bool) -> f64 {
        let mut r = self.r0;
        if same_color {
            r += self.r_same_color;
        }
        if !known_question {
            r += self.r_unknown_question;
        }
        r
    }

    pub fn validate(&self) -> Result<()> {
        for same in [false, true] {
            for known in [false, true] {
                InterferenceParam::new(self.r_for(same, known))?;
            }
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite()) {
            return domain(format!("sigma_eps = {} must be finite and >= 0", self.sigma_eps));
        }
        Ok(())
    }
}

/// How the high sender's overcount is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    /// Use the expected overcount directly.
    #[default]
    Mean,
    /// Replay the feed into a recall state and, when the question is asked,
    /// draw a recall for each exposed repeat of the high sender. Each repeat
    /// whose source is not recalled is counted as an extra sender.
    MessageLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationConfig {
    pub participants: usize,
    pub r_model: RModel,
    pub seed: u64,
    /// Probability that a participant perceives black and blue.
    pub black_blue_share: f64,
    pub form: OvercountForm,
    pub mode: GenerationMode,
    /// Scale of the error shared by both counts of a feed; cancels in `Y`.
    pub eta_sigma: f64,
    /// Interference applying to the unincentivized name-recognition task.
    pub recognition_r: f64,
    /// Probability of claiming to recognize a name that never appeared.
    pub false_recognition: f64,
}

impl GenerationConfig {
    pub fn new(participants: usize, r_model: RModel, seed: u64) -> Self {
        GenerationConfig {
            participants,
            r_model,
            seed,
            black_blue_share: 0.5,
            form: OvercountForm::Verbatim,
            mode: GenerationMode::Mean,
            eta_sigma: 0.0,
            recognition_r: 0.05,
            false_recognition: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.r_model.validate()?;
        InterferenceParam::new(self.recognition_r)?;
        for (name, p) in [
            ("black_blue_share", self.black_blue_share),
            ("false_recognition", self.false_recognition),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return domain(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if !(self.eta_sigma >= 0.0 && self.eta_sigma.is_finite()) {
            return domain(format!("eta_sigma = {} must be finite and >= 0", self.eta_sigma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub participants: Vec<ParticipantRecord>,
    pub rows: Vec<EstimationRow>,
}

fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sd
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Miscounted repeats of the high sender (source id 1) drawn message by message.
fn sampled_overcount<R: Rng + ?Sized>(spec: &FeedSpec, r: f64, form: OvercountForm, rng: &mut R) -> f64 {
    let mut state = RecallState::new();
    for _ in 0..spec.alpha {
        state = state.record_message(1);
    }
    for low in 0..spec.n_total - 1 {
        state = state.record_message(2 + low as usize);
    }
    let r = InterferenceParam::new(r).expect("validated interference");
    (0..form.exposed(spec.alpha))
        .filter(|_| !state.sample_recall(1, r, rng))
        .count() as f64
}

fn simulate_participant<R: Rng + ?Sized>(id: u64, cfg: &GenerationConfig, rng: &mut R) -> ParticipantRecord {
    let own_color = if bernoulli(rng, cfg.black_blue_share) { Color::BlackBlue } else { Color::WhiteGold };
    let sigma_each = cfg.r_model.sigma_eps / std::f64::consts::SQRT_2;
    let mut feeds = Vec::with_capacity(3);
    for feed_index in 1..=3u8 {
        let spec = FeedSpec::sample(feed_index, rng);
        let r = cfg.r_model.r_for(own_color == spec.high_color, spec.known_question());
        let (alpha, alpha_bar) = (spec.alpha as f64, spec.alpha_bar() as f64);
        let over = match cfg.mode {
            GenerationMode::Mean => overcount_unchecked(alpha, alpha_bar, r, cfg.form),
            GenerationMode::MessageLevel => sampled_overcount(&spec, r, cfg.form, rng),
        };
        let eta = normal(rng, cfg.eta_sigma);
        let y1 = spec.n1 as f64 + over + eta + normal(rng, sigma_each);
        let y0 = spec.n0 as f64 + eta + normal(rng, sigma_each);
        let p_notice = recall_ratio(alpha, alpha_bar - alpha, r);
        let noticed_repetition = spec.alpha > 1 && bernoulli(rng, p_notice);
        feeds.push(FeedResponse { spec, y1, y0, noticed_repetition });
    }

    let last = feeds[2].spec;
    let (alpha, alpha_bar) = (last.alpha as f64, last.alpha_bar() as f64);
    let rr = cfg.recognition_r;
    let high = bernoulli(rng, recall_ratio(alpha, alpha_bar - alpha, rr));
    let low_p = recall_ratio(1.0, alpha_bar - 1.0, rr);
    let others = |color: Color| {
        let on_side = if color == Color::BlackBlue { last.n_black_blue } else { last.n_total - last.n_black_blue };
        if color == last.high_color { on_side - 1 } else { on_side }
    };
    let low_black_blue = (others(Color::BlackBlue) > 0).then(|| bernoulli(rng, low_p));
    let low_white_gold = (others(Color::WhiteGold) > 0).then(|| bernoulli(rng, low_p));
    let absent = [bernoulli(rng, cfg.false_recognition), bernoulli(rng, cfg.false_recognition)];

    ParticipantRecord {
        id,
        own_color,
        feeds,
        names: NameRecognition { high, low_black_blue, low_white_gold, absent },
    }
}

/// Draws participants and their responses; participant `k` uses stream `seed + k`.
pub fn generate_dataset(cfg: &GenerationConfig) -> Result<Dataset> {
    cfg.validate()?;
    let participants = replicates(cfg.participants, cfg.seed, |k, rng| {
        simulate_participant(k as u64, cfg, rng)
    });
    let rows = participants
        .iter()
        .flat_map(|p| p.feeds.iter().map(move |f| EstimationRow::from_response(p.id, p.own_color, f)))
        .collect();
    Ok(Dataset { participants, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub kept: Vec<EstimationRow>,
    pub dropped: usize,
}

/// Drops known-question rows whose counts miss the truth by more than `max_abs_error`.
pub fn filter_rows(rows: &[EstimationRow], max_abs_error: f64) -> FilterReport {
    let (kept, dropped): (Vec<_>, Vec<_>) = rows.iter().partition(|row| {
        !row.known_question
            || ((row.y1 - row.n1 as f64).abs() <= max_abs_error
                && (row.y0 - row.n0 as f64).abs() <= max_abs_error)
    });
    FilterReport { kept, dropped: dropped.len() }
}

/// Rows restricted to feeds where the question was known.
pub fn known_question_rows(rows: &[EstimationRow]) -> Vec<EstimationRow> {
    rows.iter().filter(|r| r.known_question).copied().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ModelSpec {
    pub covariates: Vec<Covariate>,
}

impl ModelSpec {
    pub fn baseline() -> Self {
        ModelSpec::default()
    }

    pub fn with(covariates: &[Covariate]) -> Self {
        ModelSpec { covariates: covariates.to_vec() }
    }

    pub fn coefficient_names(&self) -> Vec<&'static str> {
        std::iter::once("r0").chain(self.covariates.iter().map(|c| c.name())).collect()
    }
}

/// Count, mean and sum of squared deviations of `Y`, mergeable across groups.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, y: f64) {
        self.n += 1.0;
        let delta = y - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (y - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n / n;
        self.m2 += other.m2 + delta * delta * self.n * other.n / n;
        self.n = n;
    }
}

/// `(alpha, alpha_bar, covariate bit pattern)`.
type CellKey = (u32, u32, u32);

fn cell_key(row: &EstimationRow, spec: &ModelSpec) -> CellKey {
    let pattern = spec
        .covariates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.active(row))
        .fold(0u32, |acc, (k, _)| acc | (1 << k));
    (row.alpha, row.alpha_bar, pattern)
}

#[derive(Debug, Clone)]
struct Cell {
    alpha: f64,
    alpha_bar: f64,
    pattern: u32,
    count: f64,
    mean: f64,
}

/// Rows grouped by cell; the likelihood depends on the data only through these.
struct Compressed {
    cells: Vec<Cell>,
    within_ss: f64,
    n: usize,
    n_covariates: usize,
}

impl Compressed {
    fn from_moments<'a>(cells: impl IntoIterator<Item = (&'a CellKey, &'a Moments)>, n_covariates: usize) -> Self {
        let mut out = Compressed { cells: Vec::new(), within_ss: 0.0, n: 0, n_covariates };
        for (&(alpha, alpha_bar, pattern), m) in cells {
            if m.n == 0.0 {
                continue;
            }
            out.within_ss += m.m2;
            out.n += m.n as usize;
            out.cells.push(Cell { alpha: alpha as f64, alpha_bar: alpha_bar as f64, pattern, count: m.n, mean: m.mean });
        }
        out
    }

    fn from_rows(rows: &[EstimationRow], spec: &ModelSpec) -> Self {
        let mut acc: BTreeMap<CellKey, Moments> = BTreeMap::new();
        for row in rows {
            acc.entry(cell_key(row, spec)).or_default().push(row.y);
        }
        Self::from_moments(&acc, spec.covariates.len())
    }

    fn check_identifiable(&self, spec: &ModelSpec) -> Result<()> {
        let Some(first) = self.cells.first() else {
            return Err(Error::Identifiability("no rows to fit".into()));
        };
        if self.cells.iter().all(|c| c.alpha == first.alpha) {
            return Err(Error::Identifiability(format!(
                "every row has alpha = {}; at least two distinct repetition counts are needed",
                first.alpha
            )));
        }
        for (k, c) in spec.covariates.iter().enumerate() {
            let on = self.cells.iter().filter(|cell| cell.pattern & (1 << k) != 0).count();
            if on == 0 || on == self.cells.len() {
                return Err(Error::Identifiability(format!("covariate {} does not vary across rows", c.name())));
            }
        }
        Ok(())
    }

    fn cell_r(cell: &Cell, theta: &[f64]) -> f64 {
        theta[0]
            + theta[1..]
                .iter()
                .enumerate()
                .filter(|(k, _)| cell.pattern & (1 << k) != 0)
                .map(|(_, c)| c)
                .sum::<f64>()
    }

    fn ssr(&self, theta: &[f64], form: OvercountForm) -> f64 {
        self.within_ss
            + self
                .cells
                .iter()
                .map(|c| {
                    let r = Self::cell_r(c, theta).max(0.0);
                    let m = overcount_unchecked(c.alpha, c.alpha_bar, r, form);
                    c.count * (c.mean - m).powi(2)
                })
                .sum::<f64>()
    }

    /// Smallest value of coefficient `j` keeping every affected cell's `r` nonnegative.
    fn lower_bound(&self, theta: &[f64], j: usize) -> f64 {
        let floor = if j == 0 { f64::NEG_INFINITY } else { -R_SEARCH_MAX };
        self.cells
            .iter()
            .filter(|c| j == 0 || c.pattern & (1 << (j - 1)) != 0)
            .map(|c| theta[j] - Self::cell_r(c, theta))
            .fold(floor, f64::max)
    }
}

/// Minimizes a 1-D objective on `[lo, hi]`: coarse scan, then golden section
/// on the cells adjacent to the best scan point.
fn scan_then_refine<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(lo);
    }
    let step = (hi - lo) / SCAN_POINTS as f64;
    let mut best = (lo, f(lo));
    for k in 1..=SCAN_POINTS {
        let x = if k == SCAN_POINTS { hi } else { lo + step * k as f64 };
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let m = golden_section_min(&f, a, b, LINE_TOL)?;
    Ok(if m.value <= best.1 { m.x } else { best.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    pub names: Vec<&'static str>,
    pub coefficients: Vec<f64>,
    pub sigma_eps: f64,
    pub log_likelihood: f64,
    pub n_rows: usize,
    pub sweeps: usize,
    pub converged: bool,
}

impl Fit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| *n == name).map(|i| self.coefficients[i])
    }

    /// The baseline interference `r0`.
    pub fn r(&self) -> f64 {
        self.coefficients[0]
    }
}

fn fit_compressed(data: &Compressed, spec: &ModelSpec, form: OvercountForm) -> Result<Fit> {
    data.check_identifiable(spec)?;
    if form == OvercountForm::ExcludeFirst && data.cells.iter().all(|c| c.alpha <= 1.0) {
        return Err(Error::Identifiability("no repeated messages under the exclude-first form".into()));
    }
    let k = data.n_covariates + 1;
    let mut theta = vec![0.0; k];
    theta[0] = 0.1;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_step: f64 = 0.0;
        for j in 0..k {
            let lo = data.lower_bound(&theta, j);
            let hi = R_SEARCH_MAX.max(lo);
            let best = scan_then_refine(
                |x| {
                    let mut trial = theta.clone();
                    trial[j] = x;
                    data.ssr(&trial, form)
                },
                lo,
                hi,
            )?;
            // Keep the old value unless the move strictly improves the fit.
            let mut candidate = theta.clone();
            candidate[j] = best;
            if data.ssr(&candidate, form) < data.ssr(&theta, form) {
                max_step = max_step.max((best - theta[j]).abs());
                theta[j] = best;
            }
        }
        if max_step < FIT_STEP_TOL {
            converged = true;
            break;
        }
    }
    if !theta.iter().all(|t| t.is_finite()) {
        return Err(Error::Numeric("non-finite coefficient estimate".into()));
    }
    let ssr = data.ssr(&theta, form).max(0.0);
    let n = data.n as f64;
    let sigma_eps = (ssr / n).sqrt();
    let log_likelihood = if sigma_eps > 0.0 {
        -0.5 * n * ((2.0 * std::f64::consts::PI * sigma_eps * sigma_eps).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    Ok(Fit {
        names: spec.coefficient_names(),
        coefficients: theta,
        sigma_eps,
        log_likelihood,
        n_rows: data.n,
        sweeps,
        converged,
    })
}

/// Gaussian maximum-likelihood fit of the interference coefficients.
pub fn fit_r(rows: &[EstimationRow], spec: &ModelSpec, form: OvercountForm) -> Result<Fit> {
    fit_compressed(&Compressed::from_rows(rows, spec), spec, form)
}

/// Percentile interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Percentile bootstrap resampling whole clusters with replacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterBootstrap {
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
}

impl ClusterBootstrap {
    pub fn new(reps: usize, level: f64, seed: u64) -> Self {
        ClusterBootstrap { reps, level, seed }
    }

    fn validate(&self, clusters: usize) -> Result<()> {
        if self.reps == 0 {
            return domain("bootstrap needs at least one replicate");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return domain(format!("confidence level {} outside (0, 1)", self.level));
        }
        if clusters < 2 {
            return Err(Error::TooFewClusters(clusters));
        }
        Ok(())
    }

    /// Replicate `b` draws `clusters` indices from stream `seed + b` and hands them to `f`.
    fn draw<F>(&self, clusters: usize, f: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(&[usize]) -> Result<Vec<f64>> + Sync + Send,
    {
        (0..self.reps)
            .into_par_iter()
            .map(|b| {
                let mut rng = replicate_rng(self.seed, b as u64);
                let picks: Vec<usize> = (0..clusters).map(|_| rng.random_range(0..clusters)).collect();
                f(&picks)
            })
            .collect()
    }

    /// Non-finite component values (e.g. an empty subgroup) are left out of
    /// that component's percentiles.
    fn intervals(&self, draws: &[Vec<f64>]) -> Result<Vec<Interval>> {
        let tail = (1.0 - self.level) / 2.0;
        (0..draws[0].len())
            .map(|d| {
                let mut vals: Vec<f64> = draws.iter().map(|v| v[d]).filter(|x| x.is_finite()).collect();
                if vals.is_empty() {
                    return Err(Error::Numeric(format!("bootstrap component {d} never finite")));
                }
                vals.sort_by(f64::total_cmp);
                Ok(Interval { lo: quantile_sorted(&vals, tail), hi: quantile_sorted(&vals, 1.0 - tail) })
            })
            .collect()
    }

    /// Intervals for every component of a vector-valued statistic.
    pub fn run<R, K, F>(&self, rows: &[R], cluster: K, statistic: F) -> Result<Vec<Interval>>
    where
        R: Clone + Send + Sync,
        K: Fn(&R) -> u64,
        F: Fn(&[R]) -> Result<Vec<f64>> + Sync + Send,
    {
        let mut groups: BTreeMap<u64, Vec<R>> = BTreeMap::new();
        for row in rows {
            groups.entry(cluster(row)).or_default().push(row.clone());
        }
        let clusters: Vec<Vec<R>> = groups.into_values().collect();
        self.validate(clusters.len())?;
        let draws = self.draw(clusters.len(), |picks| {
            let sample: Vec<R> = picks.iter().flat_map(|&i| clusters[i].iter().cloned()).collect();
            statistic(&sample)
        })?;
        self.intervals(&draws)
    }
}

/// Clustered percentile interval of a scalar statistic.
pub fn bootstrap_ci<R, K, F>(rows: &[R], cluster: K, statistic: F, boot: ClusterBootstrap) -> Result<Interval>
where
    R: Clone + Send + Sync,
    K: Fn(&R) -> u64,
    F: Fn(&[R]) -> Result<f64> + Sync + Send,
{
    Ok(boot.run(rows, cluster, |s| Ok(vec![statistic(s)?]))?[0])
}

/// Point estimates with clustered bootstrap intervals per coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitWithCi {
    pub fit: Fit,
    pub ci: Vec<Interval>,
    pub bootstrap: ClusterBootstrap,
}

/// Fits the model and bootstraps it over participants.
///
/// Equivalent to [`ClusterBootstrap::run`] with [`fit_r`] as the statistic, but
/// each participant is reduced to per-cell moments once, so a replicate costs
/// a merge instead of a pass over the rows. A replicate whose resample is not
/// identifiable contributes nothing to the intervals.
pub fn fit_r_with_ci(
    rows: &[EstimationRow],
    spec: &ModelSpec,
    form: OvercountForm,
    boot: ClusterBootstrap,
) -> Result<FitWithCi> {
    let fit = fit_r(rows, spec, form)?;
    let mut index: BTreeMap<CellKey, usize> = BTreeMap::new();
    for row in rows {
        let next = index.len();
        index.entry(cell_key(row, spec)).or_insert(next);
    }
    let keys: Vec<CellKey> = {
        let mut k = vec![(0, 0, 0); index.len()];
        index.iter().for_each(|(key, &i)| k[i] = *key);
        k
    };
    let mut by_participant: BTreeMap<u64, BTreeMap<usize, Moments>> = BTreeMap::new();
    for row in rows {
        by_participant
            .entry(row.participant)
            .or_default()
            .entry(index[&cell_key(row, spec)])
            .or_default()
            .push(row.y);
    }
    let clusters: Vec<Vec<(usize, Moments)>> =
        by_participant.into_values().map(|cells| cells.into_iter().collect()).collect();
    boot.validate(clusters.len())?;
    let draws = boot.draw(clusters.len(), |picks| {
        let mut acc = vec![Moments::default(); keys.len()];
        for &p in picks {
            for (cell, m) in &clusters[p] {
                acc[*cell].merge(m);
            }
        }
        let data = Compressed::from_moments(keys.iter().zip(&acc), spec.covariates.len());
        match fit_compressed(&data, spec, form) {
            Ok(f) => Ok(f.coefficients),
            Err(Error::Identifiability(_)) => Ok(vec![f64::NAN; spec.covariates.len() + 1]),
            Err(e) => Err(e),
        }
    })?;
    let ci = boot.intervals(&draws)?;
    Ok(FitWithCi { fit, ci, bootstrap: boot })
}

/// One answer to "did you see this name?" for a sender with `alpha` messages
/// among `alpha_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallObservation {
    pub participant: u64,
    pub alpha: u32,
    pub alpha_bar: u32,
    pub remembered: bool,
}

/// Recognition answers for senders that actually appeared in the third feed.
pub fn recall_observations(participants: &[ParticipantRecord]) -> Vec<RecallObservation> {
    let mut out = Vec::new();
    for p in participants {
        let last = p.feeds[2].spec;
        let alpha_bar = last.alpha_bar();
        out.push(RecallObservation { participant: p.id, alpha: last.alpha, alpha_bar, remembered: p.names.high });
        for low in [p.names.low_black_blue, p.names.low_white_gold].into_iter().flatten() {
            out.push(RecallObservation { participant: p.id, alpha: 1, alpha_bar, remembered: low });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallFit {
    pub r: f64,
    pub log_likelihood: f64,
    pub at_boundary: bool,
    pub warning: Option<String>,
}

/// Bernoulli maximum likelihood for `P(remembered) = alpha / (alpha + r (alpha_bar - alpha))`.
pub fn fit_recall_curve(obs: &[RecallObservation]) -> Result<RecallFit> {
    if obs.is_empty() {
        return Err(Error::Identifiability("no recognition answers".into()));
    }
    if let Some(o) = obs.iter().find(|o| o.alpha == 0 || o.alpha > o.alpha_bar) {
        return domain(format!("need 1 <= alpha <= alpha_bar, got {} and {}", o.alpha, o.alpha_bar));
    }
    if obs.iter().all(|o| o.alpha == o.alpha_bar) {
        return Err(Error::Identifiability("no competing messages in any observation".into()));
    }
    let nll = |r: f64| -> f64 {
        obs.iter()
            .map(|o| {
                let p = recall_ratio(o.alpha as f64, (o.alpha_bar - o.alpha) as f64, r);
                -if o.remembered { p.ln() } else { (1.0 - p).ln() }
            })
            .sum()
    };
    let r = scan_then_refine(nll, 0.0, R_SEARCH_MAX)?;
    let all_same = obs.iter().all(|o| o.remembered == obs[0].remembered);
    let at_boundary = r <= 0.0 || r >= R_SEARCH_MAX;
    let warning = all_same.then(|| {
        format!(
            "every answer is {}; estimate sits at the search boundary",
            if obs[0].remembered { "remembered" } else { "not remembered" }
        )
    });
    Ok(RecallFit { r, log_likelihood: -nll(r), at_boundary, warning })
}

/// Mean overcount per repetition count, with clustered intervals and the model overlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub alpha: u32,
    pub rows: usize,
    pub mean_y: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Model prediction averaged over the group's rows; `None` without a fitted `r`.
    pub predicted: Option<f64>,
}

pub fn overcount_curve(
    rows: &[EstimationRow],
    r_hat: Option<f64>,
    form: OvercountForm,
    boot: ClusterBootstrap,
) -> Result<Vec<CurvePoint>> {
    if rows.is_empty() {
        return domain("overcount curve needs at least one row");
    }
    let mut alphas: Vec<u32> = rows.iter().map(|r| r.alpha).collect();
    alphas.sort_unstable();
    alphas.dedup();
    let group_means = |sample: &[EstimationRow]| -> Vec<f64> {
        alphas
            .iter()
            .map(|&a| {
                let (sum, n) = sample
                    .iter()
                    .filter(|r| r.alpha == a)
                    .fold((0.0, 0usize), |(s, n), r| (s + r.y, n + 1));
                if n == 0 { f64::NAN } else { sum / n as f64 }
            })
            .collect()
    };
    let means = group_means(rows);
    let ci = boot.run(rows, |r| r.participant, |s| Ok(group_means(s)))?;
    alphas
        .iter()
        .zip(means)
        .zip(ci)
        .map(|((&alpha, mean_y), ci)| {
            let group: Vec<&EstimationRow> = rows.iter().filter(|r| r.alpha == alpha).collect();
            let predicted = match r_hat {
                Some(r) => {
                    let mut total = 0.0;
                    for row in &group {
                        total += overcount_mean(row.alpha as f64, row.alpha_bar as f64, r, form)?;
                    }
                    Some(total / group.len() as f64)
                }
                None => None,
            };
            Ok(CurvePoint { alpha, rows: group.len(), mean_y, ci_lo: ci.lo, ci_hi: ci.hi, predicted })
        })
        .collect()
}
