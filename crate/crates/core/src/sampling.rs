//! Exact discrete samplers built on `rand_distr`.
//!
//! Multinomial and multivariate hypergeometric draws are decomposed into
//! sequential conditional univariate draws, each of which is exact.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial").sample(rng)
    }
}

/// Draw `n` balls into `probs.len()` cells; `probs` need only be
/// non-negative (it is normalised on the fly).
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64], out: &mut [u64]) {
    assert_eq!(probs.len(), out.len());
    out.iter_mut().for_each(|x| *x = 0);
    if probs.is_empty() {
        return;
    }
    // Suffix sums avoid drift from repeatedly subtracting used mass.
    let mut suffix = vec![0.0; probs.len() + 1];
    for i in (0..probs.len()).rev() {
        suffix[i] = suffix[i + 1] + probs[i].max(0.0);
    }
    let mut left = n;
    let last = (0..probs.len()).rev().find(|&i| probs[i] > 0.0);
    let Some(last) = last else {
        return;
    };
    for i in 0..last {
        if left == 0 {
            return;
        }
        let p = probs[i].max(0.0) / suffix[i];
        let x = binomial(rng, left, p);
        out[i] = x;
        left -= x;
    }
    out[last] = left;
}

/// Marked items among `draws` drawn without replacement from `population`
/// items of which `marked` are marked.
pub fn hypergeometric<R: Rng + ?Sized>(rng: &mut R, population: u64, marked: u64, draws: u64) -> u64 {
    assert!(marked <= population && draws <= population);
    // The law is symmetric in `marked` and `draws`; rand_distr rejects some
    // large parameter sets in one orientation only.
    if let Ok(d) = Hypergeometric::new(population, marked, draws) {
        return d.sample(rng);
    }
    if let Ok(d) = Hypergeometric::new(population, draws, marked) {
        return d.sample(rng);
    }
    urn(rng, population, marked.max(draws), marked.min(draws))
}

/// Draw one item at a time.
fn urn<R: Rng + ?Sized>(rng: &mut R, population: u64, marked: u64, draws: u64) -> u64 {
    let mut hits = 0;
    for i in 0..draws {
        let left = marked - hits;
        if left == 0 {
            break;
        }
        if rng.random_range(0..population - i) < left {
            hits += 1;
        }
    }
    hits
}

/// Draw `draws` items without replacement from a population with the given
/// per-class `counts`.
pub fn multivariate_hypergeometric<R: Rng + ?Sized>(
    rng: &mut R,
    counts: &[u64],
    draws: u64,
    out: &mut [u64],
) {
    assert_eq!(counts.len(), out.len());
    let mut population: u64 = counts.iter().sum();
    assert!(draws <= population, "cannot draw more than the population");
    let mut left = draws;
    for (i, &c) in counts.iter().enumerate() {
        if left == 0 || c == 0 {
            out[i] = 0;
        } else if c == population {
            out[i] = left;
            left = 0;
        } else {
            let x = hypergeometric(rng, population, c, left);
            out[i] = x;
            left -= x;
        }
        population -= c;
    }
    debug_assert_eq!(left, 0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn multinomial_conserves_total() {
        let mut rng = RandomStream::new(1, 2);
        let mut out = [0u64; 4];
        for n in [0u64, 1, 17, 1000] {
            multinomial(&mut rng, n, &[0.1, 0.0, 0.6, 0.3], &mut out);
            assert_eq!(out.iter().sum::<u64>(), n);
            assert_eq!(out[1], 0);
        }
    }

    #[test]
    fn urn_matches_hypergeometric_mean() {
        let mut rng = RandomStream::new(3, 4);
        let trials = 20_000;
        let total: u64 = (0..trials).map(|_| urn(&mut rng, 50, 20, 10)).sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 4.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn large_populations_sample() {
        let mut rng = RandomStream::new(3, 5);
        for k in [1u64, 10, 1_000, 50_000, 99_990] {
            for d in [1u64, 3, 9, 20, 500, 99_000] {
                let x = hypergeometric(&mut rng, 100_000, k, d);
                assert!(x <= k.min(d));
            }
        }
    }

    #[test]
    fn hypergeometric_respects_classes() {
        let mut rng = RandomStream::new(1, 2);
        let counts = [5u64, 0, 3, 2];
        let mut out = [0u64; 4];
        for draws in 0..=10 {
            multivariate_hypergeometric(&mut rng, &counts, draws, &mut out);
            assert_eq!(out.iter().sum::<u64>(), draws);
            assert!(out.iter().zip(&counts).all(|(o, c)| o <= c));
        }
    }

    #[test]
    fn multinomial_means() {
        let mut rng = RandomStream::new(5, 0);
        let probs = [0.5, 0.3, 0.2];
        let mut acc = [0u64; 3];
        let mut out = [0u64; 3];
        for _ in 0..2000 {
            multinomial(&mut rng, 100, &probs, &mut out);
            acc.iter_mut().zip(&out).for_each(|(a, o)| *a += o);
        }
        for (a, p) in acc.iter().zip(probs) {
            let mean = *a as f64 / 2000.0;
            assert!((mean - 100.0 * p).abs() < 1.0, "{mean}");
        }
    }
}
