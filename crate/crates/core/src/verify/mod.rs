//! Check suites: exact inequality sweeps over random instances and Monte
//! Carlo agreement tests, each producing a [`CheckReport`].

mod dominance;
mod equivalence;
mod growth;
mod inequalities;
mod instances;
mod report;
pub mod stats;

pub use dominance::{check_dominance, DominanceRow};
pub use equivalence::{
    agent_step_frequencies, check_engine_equivalence, EquivalenceSettings, MAX_TABULATED_OUTCOMES,
};
pub use growth::{check_growth_cap, growth_cap_violation, GrowthCapSettings, GrowthTrialRow};
pub use inequalities::{
    check_amplification, check_envelopes, check_submartingale, check_symmetric_monotonicity,
    AMPLIFICATION_GAMMA,
};
pub use instances::{Instance, InstanceSource, PlantedLeaderInstances, RandomInstances};
pub use report::{CheckReport, Slack, SubCheck, SubId, Tally, Violation};

use std::str::FromStr;

use crate::config::OpinionConfiguration;
use crate::error::{Error, Result};
use crate::protocol::Engine;

/// Absolute tolerance of the exact suites.
pub const EXACT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Envelopes,
    Monotonicity,
    Submartingale,
    Amplification,
    EngineEquivalence,
    GrowthCap,
    Dominance,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 8] = [
        "envelopes",
        "monotonicity",
        "submartingale",
        "amplification",
        "engine-equivalence",
        "growth-cap",
        "dominance",
        "all",
    ];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "envelopes" => Suite::Envelopes,
            "monotonicity" => Suite::Monotonicity,
            "submartingale" => Suite::Submartingale,
            "amplification" => Suite::Amplification,
            "engine-equivalence" => Suite::EngineEquivalence,
            "growth-cap" => Suite::GrowthCap,
            "dominance" => Suite::Dominance,
            "all" => Suite::All,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown suite `{other}`, expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Run a named suite. `instances` sets the instance count of the exact
/// suites and the trial count of the Monte Carlo ones; `None` keeps each
/// suite's standard size.
pub fn run_suite(suite: Suite, instances: Option<u64>, seed: u64) -> Result<Vec<CheckReport>> {
    let exact = instances.unwrap_or(10_000);
    Ok(match suite {
        Suite::Envelopes => vec![check_envelopes(&RandomInstances::standard(), exact, EXACT_TOLERANCE, seed)],
        Suite::Monotonicity => vec![check_symmetric_monotonicity(
            &RandomInstances::monotonicity(),
            exact,
            EXACT_TOLERANCE,
            seed,
        )],
        Suite::Submartingale => vec![check_submartingale(
            &RandomInstances::standard(),
            exact,
            EXACT_TOLERANCE,
            seed,
        )],
        Suite::Amplification => vec![
            check_amplification(&RandomInstances::standard(), exact, EXACT_TOLERANCE, seed),
            check_amplification(&PlantedLeaderInstances::standard(), exact, EXACT_TOLERANCE, seed),
        ],
        Suite::EngineEquivalence => {
            let mut s = EquivalenceSettings::default();
            if let Some(t) = instances {
                s.law_trials = t;
                s.tvd_trials = t;
                s.binary_trials = t;
            }
            vec![check_engine_equivalence(&s, seed)?]
        }
        Suite::GrowthCap => {
            let mut s = GrowthCapSettings::standard();
            if let Some(t) = instances {
                s.num_trials = t;
            }
            vec![check_growth_cap(&s, seed)?.0]
        }
        Suite::Dominance => {
            let c = OpinionConfiguration::new(vec![800, 100, 100])?;
            let trials = instances.unwrap_or(10_000);
            vec![check_dominance(&c, 3, 100, trials, seed, 0.99, Engine::Aggregate)?.0]
        }
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Envelopes,
                Suite::Monotonicity,
                Suite::Submartingale,
                Suite::Amplification,
                Suite::EngineEquivalence,
                Suite::GrowthCap,
                Suite::Dominance,
            ] {
                out.extend(run_suite(s, instances, seed)?);
            }
            out
        }
    })
}
