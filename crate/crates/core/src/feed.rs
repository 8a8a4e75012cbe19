//! Poisson message feeds: per-sender arrivals, merging, and thinning.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{domain, Result};
use crate::model::{Population, Signal, WorldState};
use crate::num::{exp1, unit, Real};

/// One transmission: arrival time, source id and content.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message<T> {
    pub time: T,
    pub source_id: usize,
    pub content: Signal,
}

/// Messages observed on `(0, horizon)`, ordered by time and then by source id.
#[derive(Debug, Clone, PartialEq)]
pub struct Feed<T> {
    messages: Vec<Message<T>>,
    horizon: T,
}

fn message_order<T: Real>(a: &Message<T>, b: &Message<T>) -> Ordering {
    a.time
        .partial_cmp(&b.time)
        .unwrap_or(Ordering::Equal)
        .then(a.source_id.cmp(&b.source_id))
}

fn check_horizon<T: Real>(horizon: T) -> Result<()> {
    if !(horizon.is_finite() && horizon > T::zero()) {
        return domain(format!("horizon {horizon} must be finite and > 0"));
    }
    Ok(())
}

impl<T: Real> Feed<T> {
    /// Sorts `messages` into feed order and checks they fall inside `(0, horizon)`.
    pub fn new(mut messages: Vec<Message<T>>, horizon: T) -> Result<Self> {
        check_horizon(horizon)?;
        if let Some(m) = messages
            .iter()
            .find(|m| !(m.time > T::zero() && m.time < horizon))
        {
            return domain(format!(
                "message time {} outside (0, {horizon})",
                m.time
            ));
        }
        messages.sort_by(message_order);
        Ok(Feed { messages, horizon })
    }

    pub fn messages(&self) -> &[Message<T>] {
        &self.messages
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Number of messages per source id, indexed `0..=max_id` (slot 0 unused).
    pub fn counts_by_source(&self, n_sources: usize) -> Vec<usize> {
        let mut counts = vec![0; n_sources + 1];
        for m in &self.messages {
            if m.source_id >= counts.len() {
                counts.resize(m.source_id + 1, 0);
            }
            counts[m.source_id] += 1;
        }
        counts
    }

    /// Keeps each message independently with probability `keep_prob`.
    pub fn thin<R: Rng + ?Sized>(&self, keep_prob: T, rng: &mut R) -> Result<Feed<T>> {
        thin_feed(self, keep_prob, rng)
    }

    /// CSV with header `time,source_id,content`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,source_id,content")?;
        for m in &self.messages {
            writeln!(out, "{},{},{}", m.time, m.source_id, m.content.bit())?;
        }
        Ok(())
    }

    /// Reads the format written by [`Feed::write_csv`]; lines starting with `#` are skipped.
    pub fn read_csv<B: BufRead>(input: B, horizon: T) -> Result<Feed<T>> {
        let mut messages = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| crate::Error::Domain(format!("read error: {e}")))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                if line != "time,source_id,content" {
                    return domain(format!("unexpected feed header {line:?}"));
                }
                header_seen = true;
                continue;
            }
            let bad = || crate::Error::Domain(format!("malformed feed row {}: {line:?}", lineno + 1));
            let mut fields = line.split(',');
            let time: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let source_id: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let bit: u8 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            if fields.next().is_some() {
                return Err(bad());
            }
            messages.push(Message {
                time: T::lit(time),
                source_id,
                content: WorldState::from_bit(bit)?,
            });
        }
        Feed::new(messages, horizon)
    }
}

/// Arrival times of a homogeneous Poisson process on `(0, horizon)`.
///
/// Generated by accumulating exponential gaps; an arrival landing exactly on the
/// horizon is excluded.
pub fn sample_arrivals<T: Real, R: Rng + ?Sized>(
    rate: T,
    horizon: T,
    rng: &mut R,
) -> Result<Vec<T>> {
    if !(rate.is_finite() && rate >= T::zero()) {
        return domain(format!("rate {rate} must be finite and >= 0"));
    }
    check_horizon(horizon)?;
    let mut times = Vec::new();
    if rate == T::zero() {
        return Ok(times);
    }
    let mut t = T::zero();
    loop {
        t += exp1::<T, R>(rng) / rate;
        if t >= horizon {
            break;
        }
        // A zero gap at the origin is possible in f32; the process lives on (0, t).
        if t > T::zero() {
            times.push(t);
        }
    }
    Ok(times)
}

/// Superposes every sender's arrival process into one feed.
///
/// Senders are sampled in id order from the same stream, so the feed is a pure
/// function of `(population, horizon, rng state)`.
pub fn sample_feed<T: Real, R: Rng + ?Sized>(
    population: &Population<T>,
    horizon: T,
    rng: &mut R,
) -> Result<Feed<T>> {
    check_horizon(horizon)?;
    let mut messages = Vec::new();
    for sender in population.senders() {
        for time in sample_arrivals(sender.rate(), horizon, rng)? {
            messages.push(Message {
                time,
                source_id: sender.id(),
                content: sender.signal(),
            });
        }
    }
    Feed::new(messages, horizon)
}

pub fn thin_feed<T: Real, R: Rng + ?Sized>(
    feed: &Feed<T>,
    keep_prob: T,
    rng: &mut R,
) -> Result<Feed<T>> {
    if !(keep_prob >= T::zero() && keep_prob <= T::one()) {
        return domain(format!("keep probability {keep_prob} outside [0, 1]"));
    }
    let messages = feed
        .messages
        .iter()
        .filter(|_| unit::<T, R>(rng) < keep_prob)
        .copied()
        .collect();
    Ok(Feed {
        messages,
        horizon: feed.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sender, SignalModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pop(rates: &[f64]) -> Population<f64> {
        let m = SignalModel::symmetric(0.75).unwrap();
        let senders = rates
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let s = if i % 2 == 0 { WorldState::One } else { WorldState::Zero };
                Sender::new(i + 1, r, m, s).unwrap()
            })
            .collect();
        Population::new(senders, WorldState::One).unwrap()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_rate_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_arrivals(0.0, 10.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_arrivals(-1.0, 10.0, &mut rng).is_err());
        assert!(sample_arrivals(1.0, 0.0, &mut rng).is_err());
        assert!(sample_arrivals(1.0, -2.0, &mut rng).is_err());
    }

    #[test]
    fn counts_are_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let reps = 10_000;
        let counts: Vec<f64> = (0..reps)
            .map(|_| sample_arrivals(2.0, 100.0, &mut rng).unwrap().len() as f64)
            .collect();
        let (mean, var) = mean_var(&counts);
        assert!((mean - 200.0).abs() < 3.0 * 200f64.sqrt() / 100.0, "mean {mean}");
        assert!((var / mean - 1.0).abs() < 0.05, "dispersion {}", var / mean);
    }

    #[test]
    fn arrivals_sorted_inside_horizon() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let times = sample_arrivals(5.0, 3.0, &mut rng).unwrap();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times.iter().all(|&t| t > 0.0 && t < 3.0));
    }

    #[test]
    fn single_sender_feed_is_its_arrivals() {
        let p = pop(&[1.5]);
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let feed = sample_feed(&p, 20.0, &mut a).unwrap();
        let times = sample_arrivals(1.5, 20.0, &mut b).unwrap();
        assert_eq!(feed.messages().iter().map(|m| m.time).collect::<Vec<_>>(), times);
        assert!(feed.messages().iter().all(|m| m.source_id == 1 && m.content == WorldState::One));
    }

    #[test]
    fn empty_population_gives_empty_feed() {
        let p = Population::<f64>::new(vec![], WorldState::Zero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(sample_feed(&p, 20.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn superposition_share() {
        let p = pop(&[1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (mut first, mut total) = (0usize, 0usize);
        for _ in 0..200 {
            let feed = sample_feed(&p, 50.0, &mut rng).unwrap();
            first += feed.messages().iter().filter(|m| m.source_id == 1).count();
            total += feed.len();
            assert!(feed.messages().windows(2).all(|w| w[0].time <= w[1].time));
        }
        let share = first as f64 / total as f64;
        assert!((share - 0.5).abs() < 0.02, "share {share}");
    }

    #[test]
    fn merged_share_tracks_rates() {
        let p = pop(&[3.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let feed = sample_feed(&p, 5000.0, &mut rng).unwrap();
        let c = feed.counts_by_source(2);
        let share = c[1] as f64 / feed.len() as f64;
        assert!((share - 0.75).abs() < 0.01, "share {share}");
    }

    #[test]
    fn ties_break_by_source_id() {
        let msg = |time, source_id| Message { time, source_id, content: WorldState::One };
        let feed = Feed::new(vec![msg(1.0, 3), msg(0.5, 2), msg(1.0, 1)], 2.0).unwrap();
        let ids: Vec<_> = feed.messages().iter().map(|m| m.source_id).collect();
        assert_eq!(ids, vec![2, 1, 3]);
        assert!(Feed::new(vec![msg(2.0, 1)], 2.0).is_err());
    }

    #[test]
    fn thinning_edges() {
        let p = pop(&[2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let feed = sample_feed(&p, 100.0, &mut rng).unwrap();
        assert_eq!(thin_feed(&feed, 1.0, &mut rng).unwrap(), feed);
        assert!(thin_feed(&feed, 0.0, &mut rng).unwrap().is_empty());
        assert!(thin_feed(&feed, 1.5, &mut rng).is_err());
        assert!(thin_feed(&feed, -0.1, &mut rng).is_err());
    }

    #[test]
    fn thinning_is_binomial() {
        let msgs = (1..=10_000)
            .map(|i| Message { time: i as f64 * 1e-3, source_id: 1, content: WorldState::One })
            .collect();
        let feed = Feed::new(msgs, 11.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let kept = thin_feed(&feed, 0.5, &mut rng).unwrap();
        assert!((kept.len() as f64 - 5000.0).abs() <= 150.0, "kept {}", kept.len());
        assert!(kept.messages().windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn thinned_process_has_thinned_rate() {
        // Inter-arrival gaps of a p-thinned rate-a process are Exp(p a): mean 1/(pa), var 1/(pa)^2.
        let p = pop(&[4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let feed = sample_feed(&p, 5000.0, &mut rng).unwrap();
        let thinned = thin_feed(&feed, 0.25, &mut rng).unwrap();
        let times: Vec<f64> = thinned.messages().iter().map(|m| m.time).collect();
        let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let (mean, var) = mean_var(&gaps);
        let n = gaps.len() as f64;
        assert!((mean - 1.0).abs() < 3.0 / n.sqrt(), "mean gap {mean}");
        assert!((var - 1.0).abs() < 0.1, "gap variance {var}");
    }

    #[test]
    fn deterministic_given_seed() {
        let p = pop(&[2.0, 1.0, 1.0]);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            sample_feed(&p, 30.0, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn csv_round_trip() {
        let p = pop(&[2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let feed = sample_feed(&p, 10.0, &mut rng).unwrap();
        let mut buf = Vec::new();
        feed.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,source_id,content\n"));
        assert!(!text.contains('\r'));
        let back = Feed::<f64>::read_csv(&buf[..], 10.0).unwrap();
        assert_eq!(back, feed);
    }
}
