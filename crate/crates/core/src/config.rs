//! Opinion configurations, their densities and summary metrics.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;

/// Per-opinion agent counts. Opinion labels are indices `0..k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpinionConfiguration {
    counts: Vec<u64>,
    n: u64,
}

impl OpinionConfiguration {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidConfig("at least one opinion is required".into()));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidConfig("at least one agent is required".into()));
        }
        Ok(OpinionConfiguration { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, label: usize) -> u64 {
        self.counts[label]
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Number of opinions with at least one supporter.
    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn is_consensus(&self) -> bool {
        self.counts.iter().any(|&c| c == self.n)
    }

    /// Largest count, ties broken towards the lowest label.
    pub fn plurality(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_count(&self) -> u64 {
        self.counts[self.plurality()]
    }

    pub fn norm2_sq(&self) -> u64 {
        self.counts.iter().map(|&c| c * c).sum()
    }

    /// Configuration sorted by non-increasing count (stable), together with
    /// the permutation mapping sorted position to original label.
    pub fn ordered_view(&self) -> (OpinionConfiguration, Vec<usize>) {
        let mut perm: Vec<usize> = (0..self.k()).collect();
        perm.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]));
        let counts = perm.iter().map(|&i| self.counts[i]).collect();
        (
            OpinionConfiguration { counts, n: self.n },
            perm,
        )
    }

    pub fn densities(&self) -> DensityVector {
        let n = self.n as f64;
        DensityVector {
            p: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    pub fn metrics(&self) -> ConfigMetrics {
        let (ordered, _) = self.ordered_view();
        let c = ordered.counts();
        let c1 = c[0];
        let c2 = c.get(1).copied().unwrap_or(0);
        let norm2_sq = self.norm2_sq();
        ConfigMetrics {
            bias: c1 - c2,
            bias_to: c.iter().map(|&ci| c1 - ci).collect(),
            norm2_sq,
            l2_norm: (norm2_sq as f64).sqrt(),
            c1,
            c2,
        }
    }
}

/// Densities `p_i = C_i / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    p: Vec<f64>,
}

impl DensityVector {
    /// Accepts any non-negative vector summing to one (within 1e-12).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        for (index, &value) in p.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let total: f64 = p.iter().sum();
        if p.is_empty() || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "densities must sum to one, got {total}"
            )));
        }
        Ok(DensityVector { p })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.p.iter().map(|x| x * x).sum()
    }
}

/// Summary statistics of a configuration, in its ordered view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigMetrics {
    /// `C_1 - C_2`; a lone opinion counts as having an empty runner-up.
    pub bias: u64,
    /// `C_1 - C_i` for each sorted position `i`.
    pub bias_to: Vec<u64>,
    pub norm2_sq: u64,
    pub l2_norm: f64,
    pub c1: u64,
    pub c2: u64,
}

/// Whether the initial bias satisfies
/// `C_1 - C_2 >= lambda * sqrt(max(n / h^2, C_1) * ln n)`.
pub fn bias_hypothesis(config: &OpinionConfiguration, h: u32, lambda: f64) -> bool {
    if config.k() == 1 {
        return true;
    }
    let m = config.metrics();
    let n = config.n() as f64;
    let h = h as f64;
    let scale = (n / (h * h)).max(m.c1 as f64);
    m.bias as f64 >= lambda * (scale * n.ln()).sqrt()
}

/// How to build the initial configuration of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `k` equal counts; the remainder goes to the lowest labels.
    Balanced { k: usize },
    /// Opinion 0 leads opinion 1 by exactly `delta`; the others are balanced.
    PlantedBias { k: usize, delta: u64 },
    /// Smallest planted bias satisfying [`bias_hypothesis`] for `lambda`.
    HypothesisBias { k: usize, lambda: f64 },
    /// Counts drawn as one agent per opinion plus a Dirichlet-multinomial
    /// split of the rest with concentration `alpha`.
    Dirichlet { k: usize, alpha: f64 },
    /// Opinion 0 holds `round(share * n)` agents, the other `k - 1` are
    /// balanced over the rest.
    LeaderShare { k: usize, share: f64 },
    /// Fixed counts.
    Explicit { counts: Vec<u64> },
}

impl InitialSpec {
    pub fn k(&self) -> usize {
        match self {
            InitialSpec::Balanced { k }
            | InitialSpec::PlantedBias { k, .. }
            | InitialSpec::HypothesisBias { k, .. }
            | InitialSpec::Dirichlet { k, .. }
            | InitialSpec::LeaderShare { k, .. } => *k,
            InitialSpec::Explicit { counts } => counts.len(),
        }
    }
}

fn balanced_counts(n: u64, k: usize) -> Vec<u64> {
    let base = n / k as u64;
    let rem = (n % k as u64) as usize;
    (0..k).map(|i| base + u64::from(i < rem)).collect()
}

/// Counts with `C_0 - C_1 == delta` and labels `1..k` balanced, if such a
/// split exists.
pub fn planted_counts(n: u64, k: usize, delta: u64) -> Option<Vec<u64>> {
    if k < 2 || delta > n {
        return None;
    }
    let m = (k - 1) as u64;
    // c - ceil((n - c) / m) is increasing in c; search near its root.
    let estimate = (m * delta + n) / (m + 1);
    let lo = estimate.saturating_sub(3);
    let hi = (estimate + 3).min(n);
    (lo..=hi).find_map(|c| {
        let rest = n - c;
        let top = rest.div_ceil(m);
        (c >= top && c - top == delta).then(|| {
            let mut counts = vec![c];
            counts.extend(balanced_counts(rest, k - 1));
            counts
        })
    })
}

/// Build an initial configuration on `n` agents.
pub fn generate_initial<R: Rng + ?Sized>(
    spec: &InitialSpec,
    n: u64,
    h: u32,
    rng: &mut R,
) -> Result<OpinionConfiguration> {
    let k = spec.k();
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if n < k as u64 && !matches!(spec, InitialSpec::Explicit { .. }) {
        return Err(Error::TooFewAgents { n, k });
    }
    let counts = match spec {
        InitialSpec::Balanced { k } => balanced_counts(n, *k),
        InitialSpec::PlantedBias { k, delta } => planted_counts(n, *k, *delta).ok_or_else(|| {
            Error::InfeasibleBias(format!(
                "no split of n = {n} into {k} opinions has leading gap {delta}"
            ))
        })?,
        InitialSpec::HypothesisBias { k, lambda } => {
            if *k < 2 {
                return Err(Error::InfeasibleBias("a planted bias needs k >= 2".into()));
            }
            (0..=n)
                .filter_map(|delta| planted_counts(n, *k, delta))
                .find(|c| {
                    OpinionConfiguration::new(c.clone())
                        .map(|cfg| bias_hypothesis(&cfg, h, *lambda))
                        .unwrap_or(false)
                })
                .ok_or_else(|| {
                    Error::InfeasibleBias(format!(
                        "no planted bias on n = {n}, k = {k} satisfies lambda = {lambda}"
                    ))
                })?
        }
        InitialSpec::Dirichlet { k, alpha } => dirichlet_counts(n, *k, *alpha, rng)?,
        InitialSpec::LeaderShare { k, share } => leader_share_counts(n, *k, *share)?,
        InitialSpec::Explicit { counts } => {
            let total: u64 = counts.iter().sum();
            if total != n {
                return Err(Error::InvalidConfig(format!(
                    "explicit counts sum to {total}, expected n = {n}"
                )));
            }
            counts.clone()
        }
    };
    OpinionConfiguration::new(counts)
}

fn leader_share_counts(n: u64, k: usize, share: f64) -> Result<Vec<u64>> {
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::InvalidParameter(format!("share must lie in [0, 1], got {share}")));
    }
    let c1 = (share * n as f64).round() as u64;
    let mut counts = vec![c1];
    if k > 1 {
        counts.extend(balanced_counts(n - c1, k - 1));
    } else if c1 != n {
        return Err(Error::InvalidConfig("a single opinion must hold every agent".into()));
    }
    if counts[1..].iter().any(|&c| c >= c1) {
        return Err(Error::InfeasibleBias(format!(
            "a leader of {c1} agents is not a strict plurality over {} others",
            k - 1
        )));
    }
    Ok(counts)
}

/// One agent per opinion, the remaining `n - k` split by a
/// Dirichlet(alpha)-multinomial draw. Every count is positive.
pub fn dirichlet_counts<R: Rng + ?Sized>(
    n: u64,
    k: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if n < k as u64 {
        return Err(Error::TooFewAgents { n, k });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let gamma = Gamma::new(alpha, 1.0).expect("positive shape");
    let mut w: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        w.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    let mut extra = vec![0u64; k];
    sampling::multinomial(rng, n - k as u64, &w, &mut extra);
    Ok(extra.into_iter().map(|e| e + 1).collect())
}
