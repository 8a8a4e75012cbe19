//! Learning from message feeds when the receiver's recall of sources is
//! limited by interference.
//!
//! The crate simulates Poisson feeds from senders with fixed private signals,
//! tracks Bayesian and imperfect-recall log-belief ratios, evaluates the
//! long-run drift and learning-rate benchmarks in closed form, solves the
//! bandwidth pricing game, and estimates the interference parameter from
//! counting-experiment data.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`). The `*F64` and
//! `*F32` aliases below name the common concrete instantiations.

pub mod bandwidth;
pub mod belief;
pub mod error;
pub mod experiment;
pub mod feed;
pub mod model;
pub mod montecarlo;
pub mod num;
pub mod optimize;
pub mod pricing;
pub mod recall;

pub use belief::{
    bayesian_limit, bayesian_phi, bayesian_trajectory, expected_bayesian_phi,
    mislearning_probability, mislearning_probability_mc, nonbayesian_rate, sender_influence,
    simulate_nonbayesian, simulate_receiver, BeliefTrajectory, Mislearning, RateSummary,
    ReceiverRun,
};
pub use error::{Error, Result};
pub use feed::{sample_arrivals, sample_feed, thin_feed, Feed, Message};
pub use model::{
    kl_binary, llr_weights, LlrWeights, Population, Sender, SenderProfile, Signal, SignalModel,
    WorldState,
};
pub use num::Real;
pub use recall::{asymptotic_recall, recall_probability, InterferenceParam, RecallState};

pub type SignalModelF64 = SignalModel<f64>;
pub type SenderF64 = Sender<f64>;
pub type SenderProfileF64 = SenderProfile<f64>;
pub type PopulationF64 = Population<f64>;
pub type FeedF64 = Feed<f64>;
pub type MessageF64 = Message<f64>;
pub type InterferenceF64 = InterferenceParam<f64>;
pub type BeliefTrajectoryF64 = BeliefTrajectory<f64>;
pub type RateSummaryF64 = RateSummary<f64>;
pub type MislearningF64 = Mislearning<f64>;
pub type PriceFunctionF64 = pricing::PriceFunction<f64>;
pub type PricingGameF64 = pricing::PricingGame<f64>;
pub type BandwidthScheduleF64 = bandwidth::BandwidthSchedule<f64>;
pub type PopulationSequenceF64 = bandwidth::PopulationSequence<f64>;

pub type SignalModelF32 = SignalModel<f32>;
pub type PopulationF32 = Population<f32>;
pub type FeedF32 = Feed<f32>;
pub type InterferenceF32 = InterferenceParam<f32>;
pub type RateSummaryF32 = RateSummary<f32>;
pub type PriceFunctionF32 = pricing::PriceFunction<f32>;
