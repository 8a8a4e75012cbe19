//! Binary world state, sender signal models and populations.
//!
//! A sender's signal is a Bernoulli draw whose success probability depends on
//! the state: `P(s = 1 | θ = 1) = p_hi` and `P(s = 1 | θ = 0) = p_lo`. The
//! log-likelihood weight of a signal is then `log(p_hi / p_lo)` for `s = 1` and
//! `log((1 - p_hi) / (1 - p_lo))` for `s = 0`, and its mean under `θ = 1` is the
//! binary relative entropy `D(p_hi || p_lo)`.

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::num::{unit, Real};

/// The unknown binary state. Signals live in the same two-point space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WorldState {
    Zero,
    One,
}

/// A realized private signal.
pub type Signal = WorldState;

impl WorldState {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(WorldState::Zero),
            1 => Ok(WorldState::One),
            b => domain(format!("binary value must be 0 or 1, got {b}")),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            WorldState::Zero => 0,
            WorldState::One => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            WorldState::Zero => WorldState::One,
            WorldState::One => WorldState::Zero,
        }
    }
}

/// Strictly informative Bernoulli signal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalModel<T> {
    p_hi: T,
    p_lo: T,
}

/// Log-likelihood ratio carried by each of the two signal values (nats).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrWeights<T> {
    pub lambda_hi: T,
    pub lambda_lo: T,
}

impl<T: Real> LlrWeights<T> {
    pub fn for_signal(&self, signal: Signal) -> T {
        match signal {
            WorldState::One => self.lambda_hi,
            WorldState::Zero => self.lambda_lo,
        }
    }
}

fn check_probability<T: Real>(name: &str, p: T) -> Result<()> {
    let eps = T::prob_eps();
    if !(p.is_finite() && p > eps && p < T::one() - eps) {
        return domain(format!("{name} = {p} must lie strictly inside (0, 1)"));
    }
    Ok(())
}

impl<T: Real> SignalModel<T> {
    pub fn new(p_hi: T, p_lo: T) -> Result<Self> {
        check_probability("p_hi", p_hi)?;
        check_probability("p_lo", p_lo)?;
        if p_lo >= p_hi {
            return domain(format!(
                "signal must be strictly informative: p_lo = {p_lo} >= p_hi = {p_hi}"
            ));
        }
        Ok(SignalModel { p_hi, p_lo })
    }

    /// Symmetric model with `p_lo = 1 - p_hi`.
    pub fn symmetric(p_hi: T) -> Result<Self> {
        Self::new(p_hi, T::one() - p_hi)
    }

    pub fn p_hi(&self) -> T {
        self.p_hi
    }

    pub fn p_lo(&self) -> T {
        self.p_lo
    }

    pub fn weights(&self) -> LlrWeights<T> {
        let one = T::one();
        LlrWeights {
            lambda_hi: (self.p_hi / self.p_lo).ln(),
            lambda_lo: ((one - self.p_hi) / (one - self.p_lo)).ln(),
        }
    }

    /// `P(s | θ)`.
    pub fn likelihood(&self, signal: Signal, theta: WorldState) -> T {
        let p_one = match theta {
            WorldState::One => self.p_hi,
            WorldState::Zero => self.p_lo,
        };
        match signal {
            WorldState::One => p_one,
            WorldState::Zero => T::one() - p_one,
        }
    }

    pub fn sample_signal<R: Rng + ?Sized>(&self, theta: WorldState, rng: &mut R) -> Signal {
        let u: T = unit(rng);
        if u < self.likelihood(WorldState::One, theta) {
            WorldState::One
        } else {
            WorldState::Zero
        }
    }

    /// Binary relative entropy `D(p_hi || p_lo)` in nats.
    pub fn kl_binary(&self) -> T {
        let one = T::one();
        let w = self.weights();
        self.p_hi * w.lambda_hi + (one - self.p_hi) * w.lambda_lo
    }
}

/// `(lambda_hi, lambda_lo)` for a raw probability pair.
pub fn llr_weights<T: Real>(p_hi: T, p_lo: T) -> Result<LlrWeights<T>> {
    Ok(SignalModel::new(p_hi, p_lo)?.weights())
}

/// Binary relative entropy for a raw probability pair.
pub fn kl_binary<T: Real>(p_hi: T, p_lo: T) -> Result<T> {
    Ok(SignalModel::new(p_hi, p_lo)?.kl_binary())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sender<T> {
    id: usize,
    rate: T,
    model: SignalModel<T>,
    signal: Signal,
}

impl<T: Real> Sender<T> {
    pub fn new(id: usize, rate: T, model: SignalModel<T>, signal: Signal) -> Result<Self> {
        if id == 0 {
            return domain("sender ids start at 1");
        }
        if !(rate.is_finite() && rate > T::zero()) {
            return domain(format!("sender {id}: rate {rate} must be finite and > 0"));
        }
        Ok(Sender { id, rate, model, signal })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn model(&self) -> &SignalModel<T> {
        &self.model
    }

    pub fn signal(&self) -> Signal {
        self.signal
    }

    /// Log-likelihood contribution of this sender's realized signal.
    pub fn signal_llr(&self) -> T {
        self.model.weights().for_signal(self.signal)
    }

    pub fn with_rate(&self, rate: T) -> Result<Self> {
        Sender::new(self.id, rate, self.model, self.signal)
    }
}

/// Rate and signal model of a sender before its signal is realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenderProfile<T> {
    pub rate: T,
    pub model: SignalModel<T>,
}

/// Senders with ids `1..=n` and the true state.
///
/// An empty population is accepted; it produces empty feeds and zero beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<T> {
    senders: Vec<Sender<T>>,
    theta: WorldState,
}

impl<T: Real> Population<T> {
    pub fn new(senders: Vec<Sender<T>>, theta: WorldState) -> Result<Self> {
        for (idx, s) in senders.iter().enumerate() {
            if s.id != idx + 1 {
                return domain(format!(
                    "sender ids must be contiguous from 1; position {} holds id {}",
                    idx + 1,
                    s.id
                ));
            }
        }
        Ok(Population { senders, theta })
    }

    /// Realizes each sender's signal once from `rng`, in id order.
    pub fn sample<R: Rng + ?Sized>(
        profiles: &[SenderProfile<T>],
        theta: WorldState,
        rng: &mut R,
    ) -> Result<Self> {
        let senders = profiles
            .iter()
            .enumerate()
            .map(|(i, p)| Sender::new(i + 1, p.rate, p.model, p.model.sample_signal(theta, rng)))
            .collect::<Result<Vec<_>>>()?;
        Population::new(senders, theta)
    }

    /// Builds a population with the given signal vector.
    pub fn with_signals(
        profiles: &[SenderProfile<T>],
        signals: &[Signal],
        theta: WorldState,
    ) -> Result<Self> {
        if profiles.len() != signals.len() {
            return domain(format!(
                "{} profiles but {} signals",
                profiles.len(),
                signals.len()
            ));
        }
        let senders = profiles
            .iter()
            .zip(signals)
            .enumerate()
            .map(|(i, (p, &s))| Sender::new(i + 1, p.rate, p.model, s))
            .collect::<Result<Vec<_>>>()?;
        Population::new(senders, theta)
    }

    pub fn senders(&self) -> &[Sender<T>] {
        &self.senders
    }

    pub fn len(&self) -> usize {
        self.senders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.senders.is_empty()
    }

    pub fn theta(&self) -> WorldState {
        self.theta
    }

    pub fn sender(&self, id: usize) -> Result<&Sender<T>> {
        id.checked_sub(1)
            .and_then(|i| self.senders.get(i))
            .ok_or(Error::UnknownSender(id))
    }

    /// Sum of the transmission rates.
    pub fn total_rate(&self) -> T {
        self.senders.iter().map(|s| s.rate).sum()
    }

    pub fn profiles(&self) -> Vec<SenderProfile<T>> {
        self.senders
            .iter()
            .map(|s| SenderProfile { rate: s.rate, model: s.model })
            .collect()
    }

    /// Same senders and signals with one sender's rate replaced.
    pub fn with_rate(&self, id: usize, rate: T) -> Result<Self> {
        let mut senders = self.senders.clone();
        let idx = self.sender(id)?.id - 1;
        senders[idx] = senders[idx].with_rate(rate)?;
        Population::new(senders, self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weights_symmetric_and_asymmetric() {
        let w = llr_weights(0.75, 0.25).unwrap();
        assert_abs_diff_eq!(w.lambda_hi, 3f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.lambda_lo, -(3f64.ln()), epsilon = 1e-12);

        let w = llr_weights(0.9, 0.5).unwrap();
        assert_abs_diff_eq!(w.lambda_hi, 1.8f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.lambda_lo, 0.2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.lambda_hi, 0.5878, epsilon = 1e-4);
        assert_abs_diff_eq!(w.lambda_lo, -1.6094, epsilon = 1e-4);
    }

    #[test]
    fn rejects_uninformative_and_boundary_models() {
        assert!(SignalModel::new(0.5, 0.5).is_err());
        assert!(SignalModel::new(0.4, 0.6).is_err());
        assert!(SignalModel::new(1.0, 0.5).is_err());
        assert!(SignalModel::new(0.5, 0.0).is_err());
        assert!(SignalModel::new(f64::NAN, 0.1).is_err());
        assert!(SignalModel::new(1.0 - 1e-11, 0.5).is_ok());
    }

    #[test]
    fn signal_llr_selects_weight() {
        let m = SignalModel::new(0.75, 0.25).unwrap();
        let one = Sender::new(1, 1.0, m, WorldState::One).unwrap();
        let zero = Sender::new(2, 1.0, m, WorldState::Zero).unwrap();
        assert_abs_diff_eq!(one.signal_llr(), 1.0986, epsilon = 1e-4);
        assert_abs_diff_eq!(zero.signal_llr(), -1.0986, epsilon = 1e-4);
        let m = SignalModel::new(0.9, 0.5).unwrap();
        let s = Sender::new(1, 1.0, m, WorldState::One).unwrap();
        assert_abs_diff_eq!(s.signal_llr(), 0.5878, epsilon = 1e-4);
    }

    #[test]
    fn kl_values() {
        assert_abs_diff_eq!(kl_binary(0.75, 0.25).unwrap(), 0.5 * 3f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(kl_binary(0.75, 0.25).unwrap(), 0.5493, epsilon = 1e-4);
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert_abs_diff_eq!(kl_binary(0.9, 0.5).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(kl_binary(0.9, 0.5).unwrap(), 0.3681, epsilon = 1e-4);
    }

    #[test]
    fn kl_vanishes_as_models_merge() {
        let mut last = f64::INFINITY;
        for gap in [0.1, 0.01, 0.001, 1e-4] {
            let d = kl_binary(0.6 + gap, 0.6).unwrap();
            assert!(d > 0.0 && d < last);
            last = d;
        }
        assert!(last < 1e-7);
    }

    #[test]
    fn near_degenerate_signal_matches_state() {
        let m = SignalModel::symmetric(1.0 - 1e-12 * 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(m.sample_signal(WorldState::One, &mut rng), WorldState::One);
            assert_eq!(m.sample_signal(WorldState::Zero, &mut rng), WorldState::Zero);
        }
    }

    #[test]
    fn signal_frequency_matches_p_hi() {
        let m = SignalModel::new(0.75, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        for theta in [WorldState::One, WorldState::Zero] {
            let hits = (0..draws)
                .filter(|_| m.sample_signal(theta, &mut rng) == theta)
                .count();
            let freq = hits as f64 / draws as f64;
            assert!((freq - 0.75).abs() < 0.01, "{theta:?}: {freq}");
            let se = (0.75f64 * 0.25 / draws as f64).sqrt();
            assert!((freq - 0.75).abs() < 3.0 * se, "{theta:?}: {freq}");
        }
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let m = SignalModel::new(0.7, 0.4).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| m.sample_signal(WorldState::One, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn population_ids_must_be_contiguous() {
        let m = SignalModel::symmetric(0.75).unwrap();
        let a = Sender::new(1, 1.0, m, WorldState::One).unwrap();
        let c = Sender::new(3, 1.0, m, WorldState::One).unwrap();
        assert!(Population::new(vec![a.clone(), c], WorldState::One).is_err());
        let pop = Population::new(vec![a], WorldState::One).unwrap();
        assert_eq!(pop.total_rate(), 1.0);
        assert!(matches!(pop.sender(2), Err(Error::UnknownSender(2))));
        assert!(Sender::new(1, 0.0, m, WorldState::One).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let m = SignalModel::<f32>::new(0.75, 0.25).unwrap();
        assert!((m.weights().lambda_hi - 3f32.ln()).abs() < 1e-6);
        assert!((m.kl_binary() - 0.549_306_1).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn weights_have_opposite_signs(p_lo in 0.001f64..0.99, gap in 0.001f64..0.99) {
            let p_hi = p_lo + gap * (0.999 - p_lo);
            prop_assume!(p_hi > p_lo && p_hi < 0.999);
            let w = llr_weights(p_hi, p_lo).unwrap();
            prop_assert!(w.lambda_hi > 0.0);
            prop_assert!(w.lambda_lo < 0.0);
        }

        #[test]
        fn kl_is_mean_llr(p_lo in 0.001f64..0.99, gap in 0.001f64..0.99) {
            let p_hi = p_lo + gap * (0.999 - p_lo);
            prop_assume!(p_hi > p_lo && p_hi < 0.999);
            let m = SignalModel::new(p_hi, p_lo).unwrap();
            let w = m.weights();
            // Direct expansion of the binary relative entropy, not via the weights.
            let direct = p_hi * (p_hi / p_lo).ln() + (1.0 - p_hi) * ((1.0 - p_hi) / (1.0 - p_lo)).ln();
            let mean_llr = p_hi * w.lambda_hi + (1.0 - p_hi) * w.lambda_lo;
            prop_assert!((direct - mean_llr).abs() < 1e-12);
            prop_assert!(m.kl_binary() > 0.0);
        }
    }
}
