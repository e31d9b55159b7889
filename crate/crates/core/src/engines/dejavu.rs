use rand::Rng;

use super::RoundOutcome;
use crate::config::OpinionConfiguration;
use crate::error::{Error, Result};
use crate::exact::adoption_cells;
use crate::protocol::SampleAccounting;
use crate::sampling;

/// Set of opinions seen by one agent in the current round.
#[derive(Clone, Debug)]
pub struct SeenSet {
    mask: u64,
    stamps: Vec<u32>,
    epoch: u32,
}

impl SeenSet {
    pub fn new(k: usize) -> Self {
        SeenSet {
            mask: 0,
            stamps: if k <= 64 { Vec::new() } else { vec![0; k] },
            epoch: 1,
        }
    }

    pub fn clear(&mut self) {
        if self.stamps.is_empty() {
            self.mask = 0;
        } else {
            self.epoch = self.epoch.wrapping_add(1);
            if self.epoch == 0 {
                self.stamps.iter_mut().for_each(|s| *s = 0);
                self.epoch = 1;
            }
        }
    }

    /// Record `x`; returns whether it had already been seen.
    pub fn insert(&mut self, x: usize) -> bool {
        if self.stamps.is_empty() {
            let bit = 1u64 << x;
            let seen = self.mask & bit != 0;
            self.mask |= bit;
            seen
        } else {
            let seen = self.stamps[x] == self.epoch;
            self.stamps[x] = self.epoch;
            seen
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgentStep {
    /// Opinion held after the round.
    pub next: usize,
    pub samples: u32,
    pub adopted: bool,
}

/// One agent's round: draw opinions from `draw` until one repeats or `h`
/// draws have been made. The agent's own opinion is not pre-seeded.
pub fn dejavu_agent_step(
    own: usize,
    h: u32,
    mut draw: impl FnMut() -> usize,
    seen: &mut SeenSet,
) -> AgentStep {
    seen.clear();
    for s in 1..=h {
        let x = draw();
        if seen.insert(x) {
            return AgentStep {
                next: x,
                samples: s,
                adopted: true,
            };
        }
    }
    AgentStep {
        next: own,
        samples: h,
        adopted: false,
    }
}

/// Opinion of every agent, agents grouped by label.
pub(crate) fn agent_opinions(config: &OpinionConfiguration) -> Vec<u32> {
    let mut out = Vec::with_capacity(config.n() as usize);
    for (label, &c) in config.counts().iter().enumerate() {
        out.extend(std::iter::repeat(label as u32).take(c as usize));
    }
    out
}

/// One synchronous round simulated agent by agent against a snapshot.
pub fn dejavu_agent_round<R: Rng + ?Sized>(
    config: &OpinionConfiguration,
    h: u32,
    rng: &mut R,
) -> Result<RoundOutcome> {
    if h < 2 {
        return Err(Error::InvalidParameter(format!("h must be >= 2, got {h}")));
    }
    let snapshot = agent_opinions(config);
    let n = snapshot.len();
    let mut seen = SeenSet::new(config.k());
    let mut next = vec![0u64; config.k()];
    let mut samples = 0u64;
    let mut updaters = 0u64;
    for &own in &snapshot {
        let step = dejavu_agent_step(
            own as usize,
            h,
            || snapshot[rng.random_range(0..n)] as usize,
            &mut seen,
        );
        next[step.next] += 1;
        samples += u64::from(step.samples);
        updaters += u64::from(step.adopted);
    }
    Ok(RoundOutcome {
        config: OpinionConfiguration::new(next)?,
        samples,
        updaters,
    })
}

/// One synchronous round drawn from the exact joint law: the number of
/// updaters is binomial, their (adopted opinion, sample count) pairs are
/// multinomial over the law's cells, and the agents who leave each opinion
/// are a uniform subset of the population.
pub fn dejavu_aggregate_round<R: Rng + ?Sized>(
    config: &OpinionConfiguration,
    h: u32,
    accounting: SampleAccounting,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let cells = adoption_cells(&config.densities(), h)?;
    let k = config.k();
    let n = config.n();
    let width = cells.max_len() - 1;
    let flat: Vec<f64> = (0..k).flat_map(|i| cells.row(i).iter().copied()).collect();
    let rho: f64 = flat.iter().sum::<f64>().min(1.0);

    let d = sampling::binomial(rng, n, rho);
    let mut joint = vec![0u64; flat.len()];
    sampling::multinomial(rng, d, &flat, &mut joint);
    let mut leaving = vec![0u64; k];
    sampling::multivariate_hypergeometric(rng, config.counts(), d, &mut leaving);

    let mut next = config.counts().to_vec();
    let mut drawn = 0u64;
    for i in 0..k {
        let row = &joint[i * width..(i + 1) * width];
        next[i] = next[i] - leaving[i] + row.iter().sum::<u64>();
        drawn += row
            .iter()
            .enumerate()
            .map(|(col, &c)| (col as u64 + 2) * c)
            .sum::<u64>();
    }
    let samples = match accounting {
        SampleAccounting::Exact => drawn + u64::from(h) * (n - d),
        SampleAccounting::Expected => {
            let per_agent = crate::exact::HDistribution::from(&cells).expected_samples;
            (per_agent * n as f64).round() as u64
        }
    };
    Ok(RoundOutcome {
        config: OpinionConfiguration::new(next)?,
        samples,
        updaters: d,
    })
}
