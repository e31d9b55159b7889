//! Poisson-clock realisation of the unbounded-budget repeat rule.
//!
//! Opinion `i` rings at the jump times of a rate-`C_i` Poisson process; the
//! first opinion to ring twice wins. Merging the clocks gives i.i.d. uniform
//! samples, so the winner has the law of the repeated opinion when `h` is
//! unbounded and the number of rings up to the win has the law of `H`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::RoundOutcome;
use crate::config::OpinionConfiguration;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RaceOutcome {
    pub winner: usize,
    /// Rings up to and including the winner's second ring.
    pub samples: u64,
}

pub fn poisson_race<R: Rng + ?Sized>(config: &OpinionConfiguration, rng: &mut R) -> RaceOutcome {
    let counts = config.counts();
    let mut first = vec![f64::INFINITY; counts.len()];
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let rate = c as f64;
        let e1: f64 = Exp1.sample(rng);
        let e2: f64 = Exp1.sample(rng);
        first[i] = e1 / rate;
        let t = first[i] + e2 / rate;
        // Strict comparison keeps the lowest label on exact ties.
        if t < best.0 {
            best = (t, i);
        }
    }
    let (t_win, winner) = best;
    let early = first
        .iter()
        .enumerate()
        .filter(|&(j, &f)| j != winner && f < t_win)
        .count() as u64;
    RaceOutcome {
        winner,
        samples: 2 + early,
    }
}

pub fn poisson_race_winner<R: Rng + ?Sized>(config: &OpinionConfiguration, rng: &mut R) -> usize {
    poisson_race(config, rng).winner
}

/// Every agent adopts the winner of its own independent race.
pub fn poisson_race_round<R: Rng + ?Sized>(
    config: &OpinionConfiguration,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let mut next = vec![0u64; config.k()];
    let mut samples = 0;
    for _ in 0..config.n() {
        let r = poisson_race(config, rng);
        next[r.winner] += 1;
        samples += r.samples;
    }
    Ok(RoundOutcome {
        config: OpinionConfiguration::new(next)?,
        samples,
        updaters: config.n(),
    })
}
