use rand::Rng;

use super::dejavu::agent_opinions;
use super::RoundOutcome;
use crate::config::OpinionConfiguration;
use crate::error::{Error, Result};
use crate::protocol::TieRule;

/// One synchronous h-majority round. `updaters` counts agents whose sample
/// had a unique plurality.
pub fn hmajority_round<R: Rng + ?Sized>(
    config: &OpinionConfiguration,
    h: u32,
    tie_rule: TieRule,
    rng: &mut R,
) -> Result<RoundOutcome> {
    if h < 2 {
        return Err(Error::InvalidParameter(format!("h must be >= 2, got {h}")));
    }
    let snapshot = agent_opinions(config);
    let n = snapshot.len();
    let mut tally = vec![0u32; config.k()];
    let mut touched: Vec<usize> = Vec::with_capacity(h as usize);
    let mut tied: Vec<usize> = Vec::with_capacity(h as usize);
    let mut next = vec![0u64; config.k()];
    let mut updaters = 0u64;

    for &own in &snapshot {
        touched.clear();
        for _ in 0..h {
            let x = snapshot[rng.random_range(0..n)] as usize;
            if tally[x] == 0 {
                touched.push(x);
            }
            tally[x] += 1;
        }
        let top = touched.iter().map(|&x| tally[x]).max().unwrap_or(0);
        tied.clear();
        tied.extend(touched.iter().copied().filter(|&x| tally[x] == top));
        let choice = if tied.len() == 1 {
            updaters += 1;
            tied[0]
        } else {
            match tie_rule {
                TieRule::KeepCurrent => own as usize,
                TieRule::UniformAmongTied => {
                    // Sorted so the draw does not depend on sampling order.
                    tied.sort_unstable();
                    tied[rng.random_range(0..tied.len())]
                }
            }
        };
        next[choice] += 1;
        for &x in &touched {
            tally[x] = 0;
        }
    }
    Ok(RoundOutcome {
        config: OpinionConfiguration::new(next)?,
        samples: u64::from(h) * n as u64,
        updaters,
    })
}
