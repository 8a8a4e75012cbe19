//! Seeded replicate streams.
//!
//! Replicate `i` of a run seeded with `s` draws from its own ChaCha8 stream
//! seeded with `s + i`, so results do not depend on how replicates are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

pub fn replicate_rng(seed: u64, replicate: u64) -> SimRng {
    SimRng::seed_from_u64(seed.wrapping_add(replicate))
}

/// Runs `f(i, rng_i)` for `i in 0..count` on the current rayon pool and returns
/// the results in index order.
pub fn replicates<T, F>(count: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn order_independent_of_pool_size() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| replicates(64, 9, |i, rng| (i, rng.random::<u64>())))
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn mean_se_basic() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(mean_se(&[]).0.is_nan());
    }
}
