//! Learning-rate benchmarks as the sender population grows, with and without a
//! platform cap on the total delivery rate.
//!
//! Signals are averaged out, so every sender enters through its rate and the
//! relative entropy `D_i` of its signal model. The platform enforces a cap
//! `B_n` by dropping each message independently with probability
//! `1 - B_n / alpha_bar_n`.

use std::fmt;

use rand::Rng;

use crate::belief::influence_weight;
use crate::error::{domain, Result};
use crate::model::{Population, Sender, SignalModel, WorldState};
use crate::montecarlo::replicate_rng;
use crate::num::{unit, Real};
use crate::recall::InterferenceParam;

/// `sum_i D_i (1 - exp(-alpha_i t))`: the Bayesian log ratio with signals averaged out.
pub fn expected_bayesian_phi_marginal<T: Real>(population: &Population<T>, t: T) -> Result<T> {
    if !(t >= T::zero()) {
        return domain(format!("time {t} must be >= 0"));
    }
    Ok(population
        .senders()
        .iter()
        .map(|s| s.model().kl_binary() * -(-s.rate() * t).exp_m1())
        .sum())
}

fn per_capita<T: Real>(population: &Population<T>, total: T) -> Result<T> {
    if population.is_empty() {
        return domain("per-capita rate of an empty population");
    }
    Ok(total / T::from_count(population.len() as u64))
}

/// `(1/n) sum_i D_i (1 - exp(-alpha_i t))`.
pub fn bayesian_rate_per_capita<T: Real>(population: &Population<T>, t: T) -> Result<T> {
    if !(t > T::zero()) {
        return domain(format!("time {t} must be > 0"));
    }
    per_capita(population, expected_bayesian_phi_marginal(population, t)?)
}

/// `(1/n) sum_i D_i`.
pub fn bayesian_benchmark<T: Real>(population: &Population<T>) -> Result<T> {
    per_capita(
        population,
        population.senders().iter().map(|s| s.model().kl_binary()).sum(),
    )
}

/// `(1/n) sum_i alpha_i D_i`.
pub fn nonbayesian_benchmark<T: Real>(population: &Population<T>) -> Result<T> {
    per_capita(
        population,
        population
            .senders()
            .iter()
            .map(|s| s.rate() * s.model().kl_binary())
            .sum(),
    )
}

/// Non-Bayesian drift with signals averaged out:
/// `sum_i alpha_i D_i (1 - alpha_i / (alpha_i + r (alpha_bar - alpha_i)))`.
pub fn nonbayesian_rate_marginal<T: Real>(population: &Population<T>, r: InterferenceParam<T>) -> T {
    let alpha_bar = population.total_rate();
    population
        .senders()
        .iter()
        .map(|s| influence_weight(s.rate(), alpha_bar, r.value()) * s.model().kl_binary())
        .sum()
}

/// Total delivery rate allowed for a population of `n` senders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthSchedule<T> {
    /// `B_n = b`
    Constant(T),
    /// `B_n = b n`
    Linear(T),
    /// `B_n = c sqrt(n)`
    Sqrt(T),
    /// `B_n = scale n^exponent`
    Power { scale: T, exponent: T },
}

impl<T: Real> BandwidthSchedule<T> {
    pub fn bandwidth(&self, n: usize) -> T {
        let nt = T::from_count(n as u64);
        match *self {
            BandwidthSchedule::Constant(b) => b,
            BandwidthSchedule::Linear(b) => b * nt,
            BandwidthSchedule::Sqrt(c) => c * nt.sqrt(),
            BandwidthSchedule::Power { scale, exponent } => scale * nt.powf(exponent),
        }
    }
}

/// Keep probability and delivered per-sender rates under a bandwidth cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Thinning<T> {
    pub bandwidth: T,
    pub keep_prob: T,
    pub rates: Vec<T>,
}

impl<T: Real> Thinning<T> {
    /// Population with every rate scaled by the keep probability.
    pub fn apply(&self, population: &Population<T>) -> Result<Population<T>> {
        let senders = population
            .senders()
            .iter()
            .zip(&self.rates)
            .map(|(s, &rate)| s.with_rate(rate))
            .collect::<Result<Vec<_>>>()?;
        Population::new(senders, population.theta())
    }
}

/// `p_n = B_n / alpha_bar_n` and the thinned rates `p_n alpha_i`.
pub fn thinning_prob<T: Real>(
    schedule: &BandwidthSchedule<T>,
    population: &Population<T>,
) -> Result<Thinning<T>> {
    let n = population.len();
    let bandwidth = schedule.bandwidth(n);
    let total = population.total_rate();
    if !(bandwidth > T::zero() && bandwidth.is_finite()) {
        return domain(format!("bandwidth B_{n} = {bandwidth} must be finite and > 0"));
    }
    if bandwidth >= total {
        return domain(format!(
            "bandwidth B_{n} = {bandwidth} must be below the total rate {total}"
        ));
    }
    let keep_prob = bandwidth / total;
    Ok(Thinning {
        bandwidth,
        keep_prob,
        rates: population.senders().iter().map(|s| keep_prob * s.rate()).collect(),
    })
}

/// Inclusive uniform range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Range<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return domain(format!("invalid range [{lo}, {hi}]"));
        }
        Ok(Range { lo, hi })
    }

    pub fn point(v: T) -> Result<Self> {
        Self::new(v, v)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.lo + unit::<T, R>(rng) * (self.hi - self.lo)
    }

    pub fn mean(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }
}

/// An unbounded i.i.d. sequence of senders; population `n` is its first `n` members.
///
/// Sender `i` draws its rate, `p_hi`, `p_lo` and signal from its own stream
/// derived from `(seed, i)`, so populations of different sizes are nested.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSequence<T> {
    rate: Range<T>,
    p_hi: Range<T>,
    p_lo: Range<T>,
    theta: WorldState,
    seed: u64,
}

impl<T: Real> PopulationSequence<T> {
    pub fn new(rate: Range<T>, p_hi: Range<T>, p_lo: Range<T>, theta: WorldState, seed: u64) -> Result<Self> {
        if !(rate.lo > T::zero()) {
            return domain("sender rates must be > 0");
        }
        if !(p_lo.hi < p_hi.lo) {
            return domain("p_lo range must lie strictly below the p_hi range");
        }
        // Endpoints must form valid models.
        SignalModel::new(p_hi.lo, p_lo.lo)?;
        SignalModel::new(p_hi.hi, p_lo.hi)?;
        Ok(PopulationSequence { rate, p_hi, p_lo, theta, seed })
    }

    /// Every sender identical.
    pub fn homogeneous(rate: T, model: SignalModel<T>, theta: WorldState, seed: u64) -> Result<Self> {
        Self::new(
            Range::point(rate)?,
            Range::point(model.p_hi())?,
            Range::point(model.p_lo())?,
            theta,
            seed,
        )
    }

    /// Limit of `alpha_bar_n / n`.
    pub fn mean_rate(&self) -> T {
        self.rate.mean()
    }

    pub fn sender(&self, id: usize) -> Result<Sender<T>> {
        let mut rng = replicate_rng(self.seed, id as u64);
        let rate = self.rate.sample(&mut rng);
        let model = SignalModel::new(self.p_hi.sample(&mut rng), self.p_lo.sample(&mut rng))?;
        let signal = model.sample_signal(self.theta, &mut rng);
        Sender::new(id, rate, model, signal)
    }

    pub fn population(&self, n: usize) -> Result<Population<T>> {
        let senders = (1..=n).map(|i| self.sender(i)).collect::<Result<Vec<_>>>()?;
        Population::new(senders, self.theta)
    }
}

/// Growth of the capped non-Bayesian criterion across the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningVerdict {
    /// Criterion stays bounded: no learning from a growing population.
    Stalled,
    /// Criterion diverges but its per-capita value decays.
    SubExponential,
    /// Criterion diverges at least linearly in `n`.
    Exponential,
}

impl fmt::Display for LearningVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearningVerdict::Stalled => "stalled",
            LearningVerdict::SubExponential => "learning (sub-exponential in n)",
            LearningVerdict::Exponential => "learning (exponential in n)",
        })
    }
}

/// Successive grid values must grow at least this much to count as diverging.
pub const DIVERGENCE_RATIO: f64 = 1.5;
/// Per-capita criterion at the last grid point, relative to the first, above
/// which divergence is classified as linear in `n`.
pub const PER_CAPITA_RETENTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow<T> {
    pub n: usize,
    pub bandwidth: T,
    pub keep_prob: T,
    /// Observation time `t_n = c n ln(n) / B_n` used for the Bayesian column.
    pub time: T,
    /// Per-capita Bayesian log ratio at `t_n` under thinning.
    pub bayes_rate: T,
    /// Per-capita Bayesian benchmark `(1/n) sum D_i`.
    pub bayes_benchmark: T,
    /// Capped non-Bayesian criterion `p_n sum_i alpha_i D_i`.
    pub nonbayes_rate: T,
    pub nonbayes_per_capita: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic<T> {
    pub rows: Vec<DiagnosticRow<T>>,
    pub verdict: LearningVerdict,
}

/// Evaluates the capped learning criteria on an ascending grid of population sizes.
pub fn bandwidth_learning_diagnostic<T: Real>(
    sequence: &PopulationSequence<T>,
    schedule: &BandwidthSchedule<T>,
    n_grid: &[usize],
    time_factor: T,
) -> Result<Diagnostic<T>> {
    if n_grid.len() < 2 {
        return domain("diagnostic grid needs at least two population sizes");
    }
    if n_grid[0] < 2 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("diagnostic grid must be strictly ascending and start at n >= 2");
    }
    if !(time_factor > T::zero()) {
        return domain(format!("time factor {time_factor} must be > 0"));
    }
    let largest = sequence.population(*n_grid.last().unwrap())?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let pop = Population::new(largest.senders()[..n].to_vec(), largest.theta())?;
        let thin = thinning_prob(schedule, &pop)?;
        let nt = T::from_count(n as u64);
        let time = time_factor * nt * nt.ln() / thin.bandwidth;
        let thinned = thin.apply(&pop)?;
        let total: T = pop
            .senders()
            .iter()
            .map(|s| s.rate() * s.model().kl_binary())
            .sum();
        let nonbayes_rate = thin.keep_prob * total;
        rows.push(DiagnosticRow {
            n,
            bandwidth: thin.bandwidth,
            keep_prob: thin.keep_prob,
            time,
            bayes_rate: bayesian_rate_per_capita(&thinned, time)?,
            bayes_benchmark: bayesian_benchmark(&pop)?,
            nonbayes_rate,
            nonbayes_per_capita: nonbayes_rate / nt,
        });
    }
    let ratio = T::lit(DIVERGENCE_RATIO);
    let diverging = rows
        .windows(2)
        .all(|w| w[1].nonbayes_rate >= ratio * w[0].nonbayes_rate);
    let verdict = if !diverging {
        LearningVerdict::Stalled
    } else if rows.last().unwrap().nonbayes_per_capita
        >= T::lit(PER_CAPITA_RETENTION) * rows[0].nonbayes_per_capita
    {
        LearningVerdict::Exponential
    } else {
        LearningVerdict::SubExponential
    };
    Ok(Diagnostic { rows, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{expected_bayesian_phi, nonbayesian_rate};
    use crate::model::SenderProfile;
    use crate::montecarlo::mean_se;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hetero_sequence(seed: u64) -> PopulationSequence<f64> {
        PopulationSequence::new(
            Range::new(0.5, 1.5).unwrap(),
            Range::new(0.6, 0.9).unwrap(),
            Range::new(0.2, 0.5).unwrap(),
            WorldState::One,
            seed,
        )
        .unwrap()
    }

    fn homo(n: usize, rate: f64, p_hi: f64) -> Population<f64> {
        let m = SignalModel::symmetric(p_hi).unwrap();
        PopulationSequence::homogeneous(rate, m, WorldState::One, 1)
            .unwrap()
            .population(n)
            .unwrap()
    }

    fn r(v: f64) -> InterferenceParam<f64> {
        InterferenceParam::new(v).unwrap()
    }

    #[test]
    fn marginal_bayes_edges() {
        let pop = hetero_sequence(3).population(6).unwrap();
        assert_eq!(expected_bayesian_phi_marginal(&pop, 0.0).unwrap(), 0.0);
        let total_kl: f64 = pop.senders().iter().map(|s| s.model().kl_binary()).sum();
        assert_abs_diff_eq!(expected_bayesian_phi_marginal(&pop, 1e4).unwrap(), total_kl, epsilon = 1e-9);
    }

    #[test]
    fn marginal_bayes_averages_signals() {
        let pop = hetero_sequence(5).population(5).unwrap();
        let profiles: Vec<SenderProfile<f64>> = pop.profiles();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let vals: Vec<f64> = (0..20_000)
            .map(|_| {
                let p = Population::sample(&profiles, WorldState::One, &mut rng).unwrap();
                expected_bayesian_phi(&p, 1.0).unwrap()
            })
            .collect();
        let (mean, se) = mean_se(&vals);
        let want = expected_bayesian_phi_marginal(&pop, 1.0).unwrap();
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} ({se})");
    }

    #[test]
    fn marginal_nonbayes_averages_signals() {
        let pop = hetero_sequence(6).population(4).unwrap();
        let profiles = pop.profiles();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let vals: Vec<f64> = (0..20_000)
            .map(|_| {
                let p = Population::sample(&profiles, WorldState::One, &mut rng).unwrap();
                nonbayesian_rate(&p, r(0.7)).rate
            })
            .collect();
        let (mean, se) = mean_se(&vals);
        let want = nonbayesian_rate_marginal(&pop, r(0.7));
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} ({se})");
    }

    #[test]
    fn thinning_examples() {
        let pop = homo(10, 2.0, 0.75);
        let t = thinning_prob(&BandwidthSchedule::Constant(10.0), &pop).unwrap();
        assert_abs_diff_eq!(t.keep_prob, 0.5);
        assert_abs_diff_eq!(t.rates.iter().sum::<f64>(), 10.0, epsilon = 1e-12);
        let het = hetero_sequence(2).population(30).unwrap();
        let t = thinning_prob(&BandwidthSchedule::Sqrt(2.0), &het).unwrap();
        assert_abs_diff_eq!(t.rates.iter().sum::<f64>(), 2.0 * 30f64.sqrt(), epsilon = 1e-12);
        assert!(thinning_prob(&BandwidthSchedule::Constant(20.0), &pop).is_err());
        assert!(thinning_prob(&BandwidthSchedule::Constant(25.0), &pop).is_err());
    }

    #[test]
    fn per_capita_rates() {
        let pop = homo(8, 1.5, 0.75);
        let d = 0.5 * 3f64.ln();
        assert_abs_diff_eq!(bayesian_rate_per_capita(&pop, 2.0).unwrap(), d * (1.0 - (-3.0f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(bayesian_benchmark(&pop).unwrap(), d, epsilon = 1e-12);
        assert_abs_diff_eq!(nonbayesian_benchmark(&pop).unwrap(), 1.5 * d, epsilon = 1e-12);
        assert!(bayesian_rate_per_capita(&pop, 0.0).is_err());

        let unit_rates = homo(8, 1.0, 0.8);
        assert_abs_diff_eq!(
            nonbayesian_benchmark(&unit_rates).unwrap(),
            bayesian_benchmark(&unit_rates).unwrap(),
            epsilon = 1e-12
        );

        let het = hetero_sequence(9).population(50).unwrap();
        let mut last = 0.0;
        for t in [0.1, 0.5, 1.0, 5.0, 50.0] {
            let v = bayesian_rate_per_capita(&het, t).unwrap();
            assert!(v > last);
            last = v;
        }
        assert_abs_diff_eq!(
            bayesian_rate_per_capita(&het, 1e3).unwrap(),
            bayesian_benchmark(&het).unwrap(),
            epsilon = 1e-12
        );
        let kl_mean = het.senders().iter().map(|s| s.model().kl_binary()).sum::<f64>() / 50.0;
        assert_abs_diff_eq!(bayesian_benchmark(&het).unwrap(), kl_mean, epsilon = 1e-15);
        let direct = het.senders().iter().map(|s| s.rate() * s.model().kl_binary()).sum::<f64>() / 50.0;
        assert_abs_diff_eq!(nonbayesian_benchmark(&het).unwrap(), direct, epsilon = 1e-15);
    }

    #[test]
    fn per_capita_rate_stabilizes_with_n() {
        // Sample spread of the per-capita rate across independent sequences shrinks like 1/sqrt(n).
        // Seeds are spaced apart so the per-sender streams `seed + i` never overlap.
        let spread = |n: usize| {
            let vals: Vec<f64> = (0..60)
                .map(|s| bayesian_rate_per_capita(&hetero_sequence(1_000_000 * (s + 1)).population(n).unwrap(), 1.0).unwrap())
                .collect();
            let (_, se) = mean_se(&vals);
            se * (vals.len() as f64).sqrt()
        };
        let (s50, s800) = (spread(50), spread(800));
        let ratio = s50 / s800;
        assert!(ratio > 2.5 && ratio < 6.5, "ratio {ratio}");
    }

    #[test]
    fn marginal_rate_examples() {
        let n = 6;
        let pop = homo(n, 2.0, 0.7);
        let d = SignalModel::symmetric(0.7).unwrap().kl_binary();
        assert_abs_diff_eq!(nonbayesian_rate_marginal(&pop, r(1.0)), (n as f64 - 1.0) * 2.0 * d, epsilon = 1e-12);
        assert_eq!(nonbayesian_rate_marginal(&pop, r(0.0)), 0.0);
        let het = hetero_sequence(4).population(12).unwrap();
        let mut last = -1.0;
        for rv in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let v = nonbayesian_rate_marginal(&het, r(rv));
            assert!(v >= last);
            last = v;
        }
        let alpha_bar = het.total_rate();
        let unit_r: f64 = het
            .senders()
            .iter()
            .map(|s| s.rate() * s.model().kl_binary() * (alpha_bar - s.rate()) / alpha_bar)
            .sum();
        assert_abs_diff_eq!(nonbayesian_rate_marginal(&het, r(1.0)), unit_r, epsilon = 1e-12);
    }

    #[test]
    fn sequences_are_nested() {
        let seq = hetero_sequence(12);
        let small = seq.population(5).unwrap();
        let big = seq.population(9).unwrap();
        assert_eq!(small.senders(), &big.senders()[..5]);
        assert_abs_diff_eq!(seq.mean_rate(), 1.0);
    }

    const GRID: [usize; 4] = [10, 100, 1_000, 10_000];

    #[test]
    fn constant_bandwidth_stalls() {
        let seq = hetero_sequence(7);
        let diag = bandwidth_learning_diagnostic(&seq, &BandwidthSchedule::Constant(3.0), &GRID, 1.0).unwrap();
        assert_eq!(diag.verdict, LearningVerdict::Stalled);
        // Bounded by (phi_hat / alpha_bar) B evaluated on the largest population.
        for row in &diag.rows {
            let pop = seq.population(row.n).unwrap();
            let mean_rate = pop.total_rate() / row.n as f64;
            let bound = nonbayesian_benchmark(&pop).unwrap() / mean_rate * 3.0;
            assert_abs_diff_eq!(row.nonbayes_rate, bound, epsilon = 1e-9);
            assert!(row.nonbayes_rate < 3.0 * 2.0);
        }
    }

    #[test]
    fn linear_bandwidth_homogeneous_limit() {
        let m = SignalModel::<f64>::symmetric(0.75).unwrap();
        let d = m.kl_binary();
        let seq = PopulationSequence::homogeneous(2.0, m, WorldState::One, 3).unwrap();
        let diag = bandwidth_learning_diagnostic(&seq, &BandwidthSchedule::Linear(0.5), &GRID, 1.0).unwrap();
        assert_eq!(diag.verdict, LearningVerdict::Exponential);
        for row in &diag.rows {
            assert!((row.nonbayes_per_capita - 0.5 * d).abs() < 1e-9);
        }
    }

    #[test]
    fn sqrt_bandwidth_learns_slowly() {
        let seq = hetero_sequence(8);
        let diag = bandwidth_learning_diagnostic(&seq, &BandwidthSchedule::Sqrt(1.0), &GRID, 1.0).unwrap();
        assert_eq!(diag.verdict, LearningVerdict::SubExponential);
        assert_eq!(diag.verdict.to_string(), "learning (sub-exponential in n)");
    }

    #[test]
    fn bayesian_catches_up_with_enough_time() {
        let seq = hetero_sequence(10);
        for schedule in [BandwidthSchedule::Constant(3.0), BandwidthSchedule::Sqrt(1.0)] {
            let diag = bandwidth_learning_diagnostic(&seq, &schedule, &GRID, 1.0).unwrap();
            let gaps: Vec<f64> = diag
                .rows
                .iter()
                .map(|row| 1.0 - row.bayes_rate / row.bayes_benchmark)
                .collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
            assert!(*gaps.last().unwrap() < 0.01, "{gaps:?}");
            // Saturation factor 1 - exp(-p_n alpha_i t_n) for the slowest sender.
            let last = diag.rows.last().unwrap();
            let slowest = 0.5 * last.keep_prob * last.time;
            assert!(-(-slowest).exp_m1() > 0.9);
        }
    }

    #[test]
    fn diagnostic_rejects_bad_inputs() {
        let seq = hetero_sequence(1);
        assert!(bandwidth_learning_diagnostic(&seq, &BandwidthSchedule::Constant(100.0), &GRID, 1.0).is_err());
        assert!(bandwidth_learning_diagnostic(&seq, &BandwidthSchedule::Constant(1.0), &[100, 10], 1.0).is_err());
        assert!(bandwidth_learning_diagnostic(&seq, &BandwidthSchedule::Constant(1.0), &[10], 1.0).is_err());
    }
}
