use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::Tally;
use crate::config::{dirichlet_counts, OpinionConfiguration};
use crate::rng::RandomStream;

/// A configuration together with the sample budget to test it under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub config: OpinionConfiguration,
    pub h: u32,
}

/// Source of random test instances. Instance `i` is drawn from its own
/// stream, so results do not depend on evaluation order.
pub trait InstanceSource: Sync {
    fn sample(&self, rng: &mut RandomStream) -> Instance;
}

impl<F> InstanceSource for F
where
    F: Fn(&mut RandomStream) -> Instance + Sync,
{
    fn sample(&self, rng: &mut RandomStream) -> Instance {
        self(rng)
    }
}

/// `n` log-uniform, `k` uniform, counts one per opinion plus a
/// Dirichlet-multinomial split with log-uniform concentration, `h` uniform
/// in `2..=k+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomInstances {
    pub n_min: u64,
    pub n_max: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl RandomInstances {
    pub fn standard() -> Self {
        RandomInstances {
            n_min: 10,
            n_max: 10_000,
            k_min: 2,
            k_max: 64,
            alpha_min: 0.1,
            alpha_max: 10.0,
        }
    }

    /// Narrower opinion counts for the polynomial monotonicity checks.
    pub fn monotonicity() -> Self {
        RandomInstances {
            k_min: 5,
            k_max: 20,
            ..Self::standard()
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

impl InstanceSource for RandomInstances {
    fn sample(&self, rng: &mut RandomStream) -> Instance {
        let n_lo = self.n_min.max(self.k_min as u64);
        let n = (log_uniform(rng, n_lo as f64, self.n_max as f64).round() as u64).clamp(n_lo, self.n_max);
        let k_hi = self.k_max.min(n as usize);
        let k = rng.random_range(self.k_min..=k_hi);
        let alpha = log_uniform(rng, self.alpha_min, self.alpha_max);
        let counts = dirichlet_counts(n, k, alpha, rng).expect("n >= k");
        let h = rng.random_range(2..=k as u32 + 1);
        Instance {
            config: OpinionConfiguration::new(counts).expect("positive counts"),
            h,
        }
    }
}

/// Many opinions: one or two planted leaders with shares log-uniform in
/// `[leader_min, leader_max]` on a near-flat Dirichlet background, `h`
/// uniform in `2..=h_max`. Reaches the regimes where the leader's share
/// dominates the collision probability `|p|^2`, which need hundreds of
/// opinions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedLeaderInstances {
    pub n_min: u64,
    pub n_max: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub leader_min: f64,
    pub leader_max: f64,
    pub h_max: u32,
}

impl PlantedLeaderInstances {
    pub fn standard() -> Self {
        PlantedLeaderInstances {
            n_min: 100_000,
            n_max: 10_000_000,
            k_min: 1000,
            k_max: 5000,
            leader_min: 1.0 / 150.0,
            leader_max: 1.0 / 30.0,
            h_max: 64,
        }
    }
}

impl InstanceSource for PlantedLeaderInstances {
    fn sample(&self, rng: &mut RandomStream) -> Instance {
        let n = log_uniform(rng, self.n_min as f64, self.n_max as f64).round() as u64;
        let k = rng.random_range(self.k_min..=self.k_max);
        let x = log_uniform(rng, self.leader_min, self.leader_max);
        let mut leaders = vec![(x * n as f64).round() as u64];
        if rng.random_bool(0.5) {
            let y = x * rng.random_range(0.5..=1.0);
            leaders.push((y * n as f64).round() as u64);
        }
        let planted: u64 = leaders.iter().sum();
        let alpha = rng.random_range(5.0..=50.0);
        let rest = dirichlet_counts(n - planted, k - leaders.len(), alpha, rng).expect("n >> k");
        leaders.extend(rest);
        let h = rng.random_range(2..=self.h_max);
        Instance {
            config: OpinionConfiguration::new(leaders).expect("positive counts"),
            h,
        }
    }
}

const INSTANCE_SALT: u64 = 0x696e_7374;

/// Evaluate `check` on `num_instances` instances in parallel and merge the
/// tallies in instance order.
pub(crate) fn run_instances<S, F>(
    source: &S,
    num_instances: u64,
    seed: u64,
    tolerance: f64,
    check: F,
) -> Tally
where
    S: InstanceSource + ?Sized,
    F: Fn(&Instance, &mut Tally) + Sync,
{
    (0..num_instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::derive(seed, INSTANCE_SALT, i);
            let inst = source.sample(&mut rng);
            let mut t = Tally::new(tolerance);
            t.instance();
            check(&inst, &mut t);
            t
        })
        .reduce(|| Tally::new(tolerance), Tally::merge)
}
