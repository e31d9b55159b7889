//! Consensus-time dominance of the original process over its binary merge.
//!
//! `F(t)` is the probability that the initial plurality has taken over by
//! round `t`. Merging every other opinion into one should only slow the
//! leader down, so `F_orig(t) >= F_merged(t)` for every `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Tally};
use super::stats::normal_quantile;
use crate::config::OpinionConfiguration;
use crate::engines::{binary_merge, step};
use crate::error::Result;
use crate::protocol::{Engine, ProtocolSpec};
use crate::rng::RandomStream;

const ORIGINAL_SALT: u64 = 0x6f72_6967;
const MERGED_SALT: u64 = 0x6d72_6764;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub round: u64,
    pub f_original: f64,
    pub f_merged: f64,
    /// Largest tolerated `F_merged - F_orig` at this round.
    pub slack: f64,
}

/// Round at which the leader (label `leader`) took over, if within `horizon`.
fn takeover_round(
    spec: &ProtocolSpec,
    initial: &OpinionConfiguration,
    leader: usize,
    horizon: u64,
    rng: &mut RandomStream,
) -> Result<Option<u64>> {
    let mut config = initial.clone();
    for round in 0..=horizon {
        if config.is_consensus() {
            return Ok((config.count(leader) == config.n()).then_some(round));
        }
        if round == horizon {
            break;
        }
        config = step(spec, &config, rng)?.config;
    }
    Ok(None)
}

/// Empirical `F(t)` for `t = 0..=horizon`.
fn takeover_curve(
    spec: &ProtocolSpec,
    initial: &OpinionConfiguration,
    horizon: u64,
    num_trials: u64,
    seed: u64,
    salt: u64,
) -> Result<Vec<f64>> {
    let leader = initial.plurality();
    let rounds: Vec<Option<u64>> = (0..num_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RandomStream::derive(seed, salt, trial);
            takeover_round(spec, initial, leader, horizon, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut hits = vec![0u64; horizon as usize + 1];
    for r in rounds.into_iter().flatten() {
        hits[r as usize] += 1;
    }
    let mut acc = 0u64;
    Ok(hits
        .into_iter()
        .map(|h| {
            acc += h;
            acc as f64 / num_trials as f64
        })
        .collect())
}

/// One-sided per-round normal test with a Bonferroni correction over the
/// `horizon` sampled rounds. Proportions in the standard error use the
/// `(x + 1) / (N + 2)` estimate so curves at 0 or 1 keep a variance floor.
pub fn check_dominance(
    initial: &OpinionConfiguration,
    h: u32,
    horizon: u64,
    num_trials: u64,
    seed: u64,
    confidence: f64,
    engine: Engine,
) -> Result<(CheckReport, Vec<DominanceRow>)> {
    let spec = ProtocolSpec::dejavu(h, engine);
    spec.validate()?;
    let merged = binary_merge(initial);
    let f_orig = takeover_curve(&spec, initial, horizon, num_trials, seed, ORIGINAL_SALT)?;
    let f_merged = if merged.counts() == initial.counts() {
        f_orig.clone()
    } else {
        takeover_curve(&spec, &merged, horizon, num_trials, seed, MERGED_SALT)?
    };

    let tests = horizon.max(1) as f64;
    let z = normal_quantile(1.0 - (1.0 - confidence) / tests);
    let nt = num_trials as f64;
    let shrunk = |f: f64| (f * nt + 1.0) / (nt + 2.0);

    let mut t = Tally::new(0.0);
    let id = t.declare("takeover_dominance");
    let mut rows = Vec::with_capacity(f_orig.len());
    for (round, (&fo, &fm)) in f_orig.iter().zip(&f_merged).enumerate() {
        let (po, pm) = (shrunk(fo), shrunk(fm));
        let se = (po * (1.0 - po) / nt + pm * (1.0 - pm) / nt).sqrt();
        let slack = z * se;
        if round > 0 {
            t.check_margin(id, fm - fo, slack, slack - (fm - fo), || {
                format!("round {round}: F_orig={fo} F_merged={fm}")
            });
        }
        rows.push(DominanceRow {
            round: round as u64,
            f_original: fo,
            f_merged: fm,
            slack,
        });
    }
    t.instance();
    let mut report = t.into_report("dominance");
    report.statistical = true;
    report.confidence = Some(confidence);
    report.trials = Some(num_trials);
    report.notes.push(format!(
        "initial {:?}, merged {:?}, h = {h}, horizon {horizon}, per-round z = {z:.4}",
        initial.counts(),
        merged.counts()
    ));
    Ok((report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_opinions_give_identical_curves() {
        let c = OpinionConfiguration::new(vec![30, 20]).unwrap();
        let (report, rows) = check_dominance(&c, 3, 20, 200, 1, 0.99, Engine::Aggregate).unwrap();
        assert!(report.passed());
        assert!(rows.iter().all(|r| r.f_original == r.f_merged));
    }

    #[test]
    fn consensus_start_is_always_taken_over() {
        let c = OpinionConfiguration::new(vec![0, 40, 0]).unwrap();
        let (report, rows) = check_dominance(&c, 3, 5, 10, 1, 0.99, Engine::AgentLevel).unwrap();
        assert!(report.passed());
        assert!(rows.iter().all(|r| r.f_original == 1.0 && r.f_merged == 1.0));
    }
}
