//! Interference-limited recall of message sources.
//!
//! A source with `m` earlier messages, competing with `T` earlier messages from
//! everyone else, is recalled with probability `m / (m + r T)`. A source that has
//! never been seen cannot be recalled, which also settles the `0 / 0` case.

use rand::Rng;

use crate::error::{domain, Result};
use crate::num::{unit, Real};

/// Interference strength `r >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InterferenceParam<T>(T);

impl<T: Real> InterferenceParam<T> {
    pub fn new(r: T) -> Result<Self> {
        if !(r.is_finite() && r >= T::zero()) {
            return domain(format!("interference r = {r} must be finite and >= 0"));
        }
        Ok(InterferenceParam(r))
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// `m / (m + r T)` with the `0 / 0` case mapped to zero.
pub(crate) fn recall_ratio<T: Real>(own: T, other: T, r: T) -> T {
    if own == T::zero() {
        return T::zero();
    }
    own / (own + r * other)
}

/// Probability that a source with `own` earlier messages is recalled given
/// `other` earlier messages from other sources.
pub fn recall_probability<T: Real>(own: T, other: T, r: T) -> Result<T> {
    for (name, v) in [("own count", own), ("other count", other), ("r", r)] {
        if !(v.is_finite() && v >= T::zero()) {
            return domain(format!("{name} = {v} must be finite and >= 0"));
        }
    }
    Ok(recall_ratio(own, other, r))
}

/// Long-run recall probability of a source transmitting at `alpha_i` when all
/// sources together transmit at `alpha_bar`.
pub fn asymptotic_recall<T: Real>(alpha_i: T, alpha_bar: T, r: T) -> Result<T> {
    let r = InterferenceParam::new(r)?.value();
    if !(alpha_i > T::zero() && alpha_i.is_finite()) {
        return domain(format!("alpha_i = {alpha_i} must be finite and > 0"));
    }
    if !(alpha_bar >= alpha_i && alpha_bar.is_finite()) {
        return domain(format!("alpha_i = {alpha_i} exceeds alpha_bar = {alpha_bar}"));
    }
    Ok(alpha_i / (alpha_i + r * (alpha_bar - alpha_i)))
}

/// Per-source counts of messages seen so far.
///
/// Updates return a new value so a trajectory can be replayed or forked from any point.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecallState {
    counts: Vec<u64>,
    total: u64,
}

impl RecallState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, source_id: usize) -> u64 {
        self.counts.get(source_id).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// State after one more message from `source_id`.
    #[must_use]
    pub fn record_message(mut self, source_id: usize) -> Self {
        if source_id >= self.counts.len() {
            self.counts.resize(source_id + 1, 0);
        }
        self.counts[source_id] += 1;
        self.total += 1;
        self
    }

    /// Recall probability of `source_id` under the current (strictly earlier) counts.
    pub fn recall_probability<T: Real>(&self, source_id: usize, r: InterferenceParam<T>) -> T {
        let own = self.count(source_id);
        recall_ratio(
            T::from_count(own),
            T::from_count(self.total - own),
            r.value(),
        )
    }

    /// Draws whether `source_id` is recalled. The state itself is not advanced.
    pub fn sample_recall<T: Real, R: Rng + ?Sized>(
        &self,
        source_id: usize,
        r: InterferenceParam<T>,
        rng: &mut R,
    ) -> bool {
        let p = self.recall_probability(source_id, r);
        unit::<T, R>(rng) < p
    }
}
