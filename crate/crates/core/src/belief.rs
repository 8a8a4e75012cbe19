//! Bayesian and interference-limited log-belief dynamics.
//!
//! Beliefs are tracked as the log ratio `phi = log(mu(1) / mu(0))`, starting at
//! zero for a uniform prior. A Bayesian receiver adds each sender's
//! log-likelihood once, at its first message. A receiver with imperfect recall
//! adds it again whenever a repeat arrives and the source is not recalled, so
//! `phi` drifts linearly at the rate returned by [`nonbayesian_rate`].

use std::collections::HashSet;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::feed::Feed;
use crate::model::{Population, Signal, SignalModel, WorldState};
use crate::num::Real;
use crate::recall::{recall_ratio, InterferenceParam, RecallState};

/// Largest population handled by exact enumeration of signal vectors.
pub const MAX_EXACT_SENDERS: usize = 20;

/// `(time, phi)` recorded at every message arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTrajectory<T> {
    pub samples: Vec<(T, T)>,
    pub horizon: T,
}

impl<T: Real> BeliefTrajectory<T> {
    /// Belief at the horizon; zero when no message arrived.
    pub fn final_phi(&self) -> T {
        self.samples.last().map_or(T::zero(), |&(_, phi)| phi)
    }

    /// Posterior probability of state one for a log ratio.
    pub fn mu1(phi: T) -> T {
        T::one() / (T::one() + (-phi).exp())
    }

    /// CSV with header `time,phi,mu1`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,phi,mu1")?;
        for &(t, phi) in &self.samples {
            writeln!(out, "{},{},{}", t, phi, Self::mu1(phi))?;
        }
        Ok(())
    }
}

/// A simulated non-Bayesian receiver: its trajectory and, per message, whether
/// the source was recalled.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverRun<T> {
    pub trajectory: BeliefTrajectory<T>,
    pub recalled: Vec<bool>,
}

impl<T: Real> ReceiverRun<T> {
    /// `(recalled, total)` over `source_id`'s messages.
    pub fn recall_hits(&self, feed: &Feed<T>, source_id: usize) -> (usize, usize) {
        feed.messages()
            .iter()
            .zip(&self.recalled)
            .filter(|(m, _)| m.source_id == source_id)
            .fold((0, 0), |(hits, n), (_, &rec)| (hits + rec as usize, n + 1))
    }
}

fn lookup_llr<T: Real>(population: &Population<T>, source_id: usize) -> Result<T> {
    Ok(population.sender(source_id)?.signal_llr())
}

/// Bayesian log ratio along the feed; each sender counts once.
pub fn bayesian_trajectory<T: Real>(
    feed: &Feed<T>,
    population: &Population<T>,
) -> Result<BeliefTrajectory<T>> {
    let mut seen = HashSet::new();
    let mut phi = T::zero();
    let mut samples = Vec::with_capacity(feed.len());
    for m in feed.messages() {
        let llr = lookup_llr(population, m.source_id)?;
        if seen.insert(m.source_id) {
            phi += llr;
        }
        samples.push((m.time, phi));
    }
    Ok(BeliefTrajectory {
        samples,
        horizon: feed.horizon(),
    })
}

/// Bayesian log ratio at the feed horizon.
pub fn bayesian_phi<T: Real>(feed: &Feed<T>, population: &Population<T>) -> Result<T> {
    Ok(bayesian_trajectory(feed, population)?.final_phi())
}

/// `E[phi_t | signals] = sum_i lambda_i (1 - exp(-alpha_i t))`.
pub fn expected_bayesian_phi<T: Real>(population: &Population<T>, t: T) -> Result<T> {
    if !(t >= T::zero()) {
        return domain(format!("time {t} must be >= 0"));
    }
    Ok(population
        .senders()
        .iter()
        .map(|s| s.signal_llr() * -(-s.rate() * t).exp_m1())
        .sum())
}

/// Bayesian belief once every sender has been heard: `sum_i lambda_i`.
pub fn bayesian_limit<T: Real>(population: &Population<T>) -> T {
    population.senders().iter().map(|s| s.signal_llr()).sum()
}

/// Walks the feed with interference-limited recall.
///
/// For each message the recall draw uses the counts of strictly earlier
/// messages; if the source is not recalled its log-likelihood is added. The
/// message is recorded afterwards either way.
pub fn simulate_receiver<T: Real, R: Rng + ?Sized>(
    feed: &Feed<T>,
    population: &Population<T>,
    r: InterferenceParam<T>,
    rng: &mut R,
) -> Result<ReceiverRun<T>> {
    let mut state = RecallState::new();
    let mut phi = T::zero();
    let mut samples = Vec::with_capacity(feed.len());
    let mut recalled = Vec::with_capacity(feed.len());
    for m in feed.messages() {
        let llr = lookup_llr(population, m.source_id)?;
        let hit = state.sample_recall(m.source_id, r, rng);
        if !hit {
            phi += llr;
        }
        state = state.record_message(m.source_id);
        samples.push((m.time, phi));
        recalled.push(hit);
    }
    Ok(ReceiverRun {
        trajectory: BeliefTrajectory {
            samples,
            horizon: feed.horizon(),
        },
        recalled,
    })
}

pub fn simulate_nonbayesian<T: Real, R: Rng + ?Sized>(
    feed: &Feed<T>,
    population: &Population<T>,
    r: InterferenceParam<T>,
    rng: &mut R,
) -> Result<BeliefTrajectory<T>> {
    Ok(simulate_receiver(feed, population, r, rng)?.trajectory)
}

/// Linear drift of the non-Bayesian log ratio and its per-sender decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary<T> {
    pub rate: T,
    pub per_sender_terms: Vec<T>,
}

/// Direct influence weight `alpha (1 - alpha / (alpha + r (alpha_bar - alpha)))`.
pub(crate) fn influence_weight<T: Real>(alpha: T, alpha_bar: T, r: T) -> T {
    alpha * (T::one() - recall_ratio(alpha, alpha_bar - alpha, r))
}

/// `sum_i alpha_i lambda_i (1 - alpha_i / (alpha_i + r (alpha_bar - alpha_i)))`.
pub fn nonbayesian_rate<T: Real>(population: &Population<T>, r: InterferenceParam<T>) -> RateSummary<T> {
    let alpha_bar = population.total_rate();
    let per_sender_terms: Vec<T> = population
        .senders()
        .iter()
        .map(|s| influence_weight(s.rate(), alpha_bar, r.value()) * s.signal_llr())
        .collect();
    RateSummary {
        rate: per_sender_terms.iter().copied().sum(),
        per_sender_terms,
    }
}

/// Direct influence of sender `id` on the drift, before weighting by its log-likelihood.
pub fn sender_influence<T: Real>(
    id: usize,
    population: &Population<T>,
    r: InterferenceParam<T>,
) -> Result<T> {
    let s = population.sender(id)?;
    Ok(influence_weight(s.rate(), population.total_rate(), r.value()))
}

/// Ex-ante probabilities that the drift points to the wrong state, the right
/// state, or is exactly zero, with equally likely states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mislearning<T> {
    pub p_wrong: T,
    pub p_correct: T,
    pub p_tie: T,
    /// Standard errors of the three masses; zero for exact enumeration.
    pub se_wrong: T,
    pub se_correct: T,
    pub se_tie: T,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Wrong,
    Correct,
    Tie,
}

struct DriftModel<T> {
    weights: Vec<T>,
    models: Vec<SignalModel<T>>,
}

impl<T: Real> DriftModel<T> {
    fn new(models: &[SignalModel<T>], rates: &[T], r: T) -> Result<Self> {
        if models.len() != rates.len() {
            return domain(format!("{} signal models but {} rates", models.len(), rates.len()));
        }
        if models.is_empty() {
            return domain("mislearning needs at least one sender");
        }
        if !(r > T::zero() && r.is_finite()) {
            return domain(format!("mislearning requires r > 0, got {r}"));
        }
        if let Some(a) = rates.iter().find(|a| !(a.is_finite() && **a > T::zero())) {
            return domain(format!("rate {a} must be finite and > 0"));
        }
        let alpha_bar: T = rates.iter().copied().sum();
        let mut weights: Vec<T> = rates.iter().map(|&a| influence_weight(a, alpha_bar, r)).collect();
        // A lone sender is never forgotten, so nothing is double counted and the
        // belief settles at the Bayesian limit; its sign decides the outcome.
        if weights.iter().all(|w| *w == T::zero()) {
            weights.iter_mut().for_each(|w| *w = T::one());
        }
        Ok(DriftModel { weights, models: models.to_vec() })
    }

    fn classify(&self, signals: impl Iterator<Item = Signal>, theta: WorldState) -> Outcome {
        let mut drift = T::zero();
        let mut scale = T::zero();
        for ((w, m), s) in self.weights.iter().zip(&self.models).zip(signals) {
            let term = *w * m.weights().for_signal(s);
            drift += term;
            scale += term.abs();
        }
        // Symmetric weights cancel only up to rounding.
        if drift.abs() <= T::lit(64.0) * T::epsilon() * scale {
            return Outcome::Tie;
        }
        let points_to_one = drift > T::zero();
        match (theta, points_to_one) {
            (WorldState::One, true) | (WorldState::Zero, false) => Outcome::Correct,
            _ => Outcome::Wrong,
        }
    }
}

fn bit_signals(mask: u32, n: usize) -> impl Iterator<Item = Signal> {
    (0..n).map(move |i| {
        if mask >> i & 1 == 1 {
            WorldState::One
        } else {
            WorldState::Zero
        }
    })
}

/// Exact mislearning probabilities by enumerating all `2^n` signal vectors in each state.
///
/// The outcome is the sign of the long-run drift. When no sender can be
/// forgotten (a single sender) the drift vanishes identically and the sign of
/// the limiting belief `sum_i lambda_i` is used instead.
pub fn mislearning_probability<T: Real>(
    models: &[SignalModel<T>],
    rates: &[T],
    r: T,
) -> Result<Mislearning<T>> {
    let n = models.len();
    if n > MAX_EXACT_SENDERS {
        return Err(Error::EnumerationTooLarge { n, max: MAX_EXACT_SENDERS });
    }
    let drift = DriftModel::new(models, rates, r)?;
    let half = T::lit(0.5);
    let (mut wrong, mut correct, mut tie) = (T::zero(), T::zero(), T::zero());
    for theta in [WorldState::One, WorldState::Zero] {
        for mask in 0..(1u32 << n) {
            let weight: T = bit_signals(mask, n)
                .zip(models)
                .map(|(s, m)| m.likelihood(s, theta))
                .fold(T::one(), |acc, p| acc * p);
            let slot = match drift.classify(bit_signals(mask, n), theta) {
                Outcome::Wrong => &mut wrong,
                Outcome::Correct => &mut correct,
                Outcome::Tie => &mut tie,
            };
            *slot += half * weight;
        }
    }
    Ok(Mislearning {
        p_wrong: wrong,
        p_correct: correct,
        p_tie: tie,
        se_wrong: T::zero(),
        se_correct: T::zero(),
        se_tie: T::zero(),
    })
}

/// Monte Carlo estimate of the same masses: each draw picks the state uniformly
/// and then samples every signal.
pub fn mislearning_probability_mc<T: Real, R: Rng + ?Sized>(
    models: &[SignalModel<T>],
    rates: &[T],
    r: T,
    draws: usize,
    rng: &mut R,
) -> Result<Mislearning<T>> {
    if draws == 0 {
        return domain("Monte Carlo mislearning needs at least one draw");
    }
    let drift = DriftModel::new(models, rates, r)?;
    let mut counts = [0usize; 3];
    let mut signals = Vec::with_capacity(models.len());
    for _ in 0..draws {
        let theta = if rng.random::<bool>() { WorldState::One } else { WorldState::Zero };
        signals.clear();
        signals.extend(models.iter().map(|m| m.sample_signal(theta, rng)));
        let idx = match drift.classify(signals.iter().copied(), theta) {
            Outcome::Wrong => 0,
            Outcome::Correct => 1,
            Outcome::Tie => 2,
        };
        counts[idx] += 1;
    }
    let n = T::from_count(draws as u64);
    let p = |c: usize| T::from_count(c as u64) / n;
    let se = |c: usize| (p(c) * (T::one() - p(c)) / n).sqrt();
    Ok(Mislearning {
        p_wrong: p(counts[0]),
        p_correct: p(counts[1]),
        p_tie: p(counts[2]),
        se_wrong: se(counts[0]),
        se_correct: se(counts[1]),
        se_tie: se(counts[2]),
    })
}
