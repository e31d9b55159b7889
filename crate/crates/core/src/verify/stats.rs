//! Statistical primitives for the Monte Carlo checks.

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, Normal};

use crate::sampling;

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub confidence: f64,
    pub passed: bool,
}

/// Pearson goodness-of-fit of `observed` counts against `probs`.
/// Categories with expected count below 5 are pooled.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], confidence: f64) -> ChiSquareResult {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * total as f64).collect();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(&expected) {
        if e >= 5.0 {
            bins.push((o as f64, e));
        } else {
            pool.0 += o as f64;
            pool.1 += e;
        }
    }
    if pool.1 > 0.0 || pool.0 > 0.0 {
        if pool.1 >= 5.0 || bins.is_empty() {
            bins.push(pool);
        } else {
            let smallest = (0..bins.len())
                .min_by(|&a, &b| bins[a].1.total_cmp(&bins[b].1))
                .expect("non-empty");
            bins[smallest].0 += pool.0;
            bins[smallest].1 += pool.1;
        }
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = bins.len().saturating_sub(1).max(1);
    let critical = ChiSquared::new(dof as f64)
        .expect("positive dof")
        .inverse_cdf(confidence);
    ChiSquareResult {
        statistic,
        dof,
        critical,
        confidence,
        passed: statistic <= critical,
    }
}

/// Total variation distance between two empirical distributions.
pub fn tvd<K: Eq + Hash>(a: &HashMap<K, u64>, b: &HashMap<K, u64>) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let mut sum = 0.0;
    for (key, &ca) in a {
        let cb = b.get(key).copied().unwrap_or(0);
        sum += (ca as f64 / na as f64 - cb as f64 / nb as f64).abs();
    }
    for (key, &cb) in b {
        if !a.contains_key(key) {
            sum += cb as f64 / nb as f64;
        }
    }
    0.5 * sum
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub resamples: usize,
}

/// Percentile bootstrap interval for the TVD of two histograms.
/// Resampling `N` outcomes with replacement from a histogram of size `N` is
/// a multinomial draw over its cells, which is how resamples are taken.
pub fn bootstrap_tvd<K: Eq + Hash + Clone + Ord, R: Rng + ?Sized>(
    a: &HashMap<K, u64>,
    b: &HashMap<K, u64>,
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> BootstrapInterval {
    let mut keys: Vec<K> = a.keys().chain(b.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    let index: HashMap<&K, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let to_vec = |h: &HashMap<K, u64>| {
        let mut v = vec![0u64; keys.len()];
        for (k, &c) in h {
            v[index[k]] = c;
        }
        v
    };
    let (va, vb) = (to_vec(a), to_vec(b));
    let (na, nb) = (va.iter().sum::<u64>(), vb.iter().sum::<u64>());
    let pa: Vec<f64> = va.iter().map(|&c| c as f64 / na as f64).collect();
    let pb: Vec<f64> = vb.iter().map(|&c| c as f64 / nb as f64).collect();
    let estimate = 0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>();

    let mut ra = vec![0u64; keys.len()];
    let mut rb = vec![0u64; keys.len()];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            sampling::multinomial(rng, na, &pa, &mut ra);
            sampling::multinomial(rng, nb, &pb, &mut rb);
            0.5 * ra
                .iter()
                .zip(&rb)
                .map(|(&x, &y)| (x as f64 / na as f64 - y as f64 / nb as f64).abs())
                .sum::<f64>()
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let pick = |q: f64| {
        let idx = ((q * resamples as f64).floor() as usize).min(resamples - 1);
        stats[idx]
    };
    BootstrapInterval {
        estimate,
        lower: pick(tail),
        upper: pick(1.0 - tail),
        confidence,
        resamples,
    }
}

/// One-sided Clopper-Pearson upper confidence bound on a binomial rate.
pub fn rate_upper_bound(successes: u64, trials: u64, confidence: f64) -> f64 {
    if trials == 0 || successes >= trials {
        return 1.0;
    }
    Beta::new(successes as f64 + 1.0, (trials - successes) as f64)
        .expect("positive shapes")
        .inverse_cdf(confidence)
}
