//! Run configuration. Every section is optional and falls back to the defaults
//! below; unknown keys are rejected.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub simulate: SimulateConfig,
    pub sweep: SweepConfig,
    pub experiment: ExperimentConfig,
    pub pricing: PricingConfig,
    pub bandwidth: BandwidthConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            simulate: SimulateConfig::default(),
            sweep: SweepConfig::default(),
            experiment: ExperimentConfig::default(),
            pricing: PricingConfig::default(),
            bandwidth: BandwidthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenderConfig {
    pub rate: f64,
    pub p_hi: f64,
    pub p_lo: f64,
    /// 0 or 1; drawn from the true state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub horizon: f64,
    pub replicates: usize,
    pub r: f64,
    pub theta: u8,
    /// Spacing of the time grid on which trajectories are written.
    pub grid_step: f64,
    pub senders: Vec<SenderConfig>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let sender = |rate, signal| SenderConfig { rate, p_hi: 0.75, p_lo: 0.25, signal: Some(signal) };
        SimulateConfig {
            horizon: 500.0,
            replicates: 200,
            r: 0.5,
            theta: 1,
            grid_step: 5.0,
            senders: vec![sender(2.0, 1), sender(1.0, 0), sender(1.0, 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub r: Vec<f64>,
    pub n: Vec<usize>,
    pub high_rate: Vec<f64>,
    pub base_rate: Vec<f64>,
    pub p_hi: f64,
    pub p_lo: f64,
    /// Monte Carlo draws for mislearning when exact enumeration is too large.
    pub mc_draws: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            r: vec![0.0, 0.25, 0.5, 1.0, 2.0],
            n: vec![3, 5, 10],
            high_rate: vec![2.0, 4.0],
            base_rate: vec![1.0],
            p_hi: 0.75,
            p_lo: 0.25,
            mc_draws: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedSelection {
    /// Feeds 2 and 3, where the question was known in advance.
    Known,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateName {
    SameColor,
    UnknownQuestion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    Verbatim,
    ExcludeFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Mean,
    MessageLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub participants: usize,
    pub r0: f64,
    pub r_same_color: f64,
    pub r_unknown_question: f64,
    pub sigma_eps: f64,
    pub eta_sigma: f64,
    pub black_blue_share: f64,
    pub recognition_r: f64,
    pub false_recognition: f64,
    pub form: FormName,
    pub mode: ModeName,
    pub feeds: FeedSelection,
    pub covariates: Vec<CovariateName>,
    /// Drop known-question rows whose counts miss by more than this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_max_abs_error: Option<f64>,
    pub bootstrap_reps: usize,
    pub level: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            participants: 1000,
            r0: 0.16,
            r_same_color: 0.0,
            r_unknown_question: 0.0,
            sigma_eps: 3.3,
            eta_sigma: 0.0,
            black_blue_share: 0.5,
            recognition_r: 0.05,
            false_recognition: 0.0,
            form: FormName::Verbatim,
            mode: ModeName::Mean,
            feeds: FeedSelection::Known,
            covariates: Vec::new(),
            filter_max_abs_error: None,
            bootstrap_reps: 2000,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceKindName {
    Linear,
    Quadratic,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub n: usize,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricingConfig {
    pub kind: PriceKindName,
    pub games: Vec<GameConfig>,
    /// `(alpha, price)` points for `kind = "tabulated"`; shared by every game.
    pub knots: Vec<(f64, f64)>,
    pub search_tol: f64,
    pub br_tol: f64,
    pub foc_tol: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        let game = |n, b| GameConfig { n, b };
        PricingConfig {
            kind: PriceKindName::Linear,
            games: vec![game(4, 8.0), game(10, 5.0), game(50, 50.0)],
            knots: Vec::new(),
            search_tol: 1e-10,
            br_tol: 1e-6,
            foc_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { b: f64 },
    Linear { b: f64 },
    Sqrt { c: f64 },
    Power { scale: f64, exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictName {
    Stalled,
    SubExponential,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandwidthConfig {
    pub schedule: ScheduleConfig,
    pub n_grid: Vec<usize>,
    pub time_factor: f64,
    /// Uniform ranges `[lo, hi]` for the i.i.d. sender draws.
    pub rate: (f64, f64),
    pub p_hi: (f64, f64),
    pub p_lo: (f64, f64),
    pub theta: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_verdict: Option<VerdictName>,
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        BandwidthConfig {
            schedule: ScheduleConfig::Constant { b: 3.0 },
            n_grid: vec![10, 100, 1000, 10_000],
            time_factor: 1.0,
            rate: (0.5, 1.5),
            p_hi: (0.6, 0.9),
            p_lo: (0.2, 0.5),
            theta: 1,
            expected_verdict: None,
        }
    }
}
