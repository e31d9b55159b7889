//! Round simulators and the run-to-consensus driver.

mod dejavu;
mod hmajority;
mod race;

pub use dejavu::{
    dejavu_agent_round, dejavu_agent_step, dejavu_aggregate_round, AgentStep, SeenSet,
};
pub use hmajority::hmajority_round;
pub use race::{poisson_race, poisson_race_round, poisson_race_winner, RaceOutcome};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::OpinionConfiguration;
use crate::error::Result;
use crate::protocol::{Engine, ProtocolKind, ProtocolSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub config: OpinionConfiguration,
    /// Opinions pulled during the round, over all agents.
    pub samples: u64,
    /// Agents whose opinion was set by their sample this round.
    pub updaters: u64,
}

/// Advance one synchronous round under `spec`.
pub fn step<R: Rng + ?Sized>(
    spec: &ProtocolSpec,
    config: &OpinionConfiguration,
    rng: &mut R,
) -> Result<RoundOutcome> {
    match spec.kind {
        ProtocolKind::Dejavu => match spec.engine {
            Engine::AgentLevel => dejavu_agent_round(config, spec.h, rng),
            Engine::Aggregate => dejavu_aggregate_round(config, spec.h, spec.sample_accounting, rng),
        },
        ProtocolKind::HMajority => hmajority_round(config, spec.h, spec.tie_rule, rng),
        ProtocolKind::PoissonRace => poisson_race_round(config, rng),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u64,
    pub c1: u64,
    pub c2: u64,
    pub bias: u64,
    pub norm2_sq: u64,
    /// Samples drawn in this round (zero for the initial row).
    pub samples: u64,
    pub updaters: u64,
}

impl RoundTrace {
    fn of(round: u64, config: &OpinionConfiguration, samples: u64, updaters: u64) -> Self {
        let m = config.metrics();
        RoundTrace {
            round,
            c1: m.c1,
            c2: m.c2,
            bias: m.bias,
            norm2_sq: m.norm2_sq,
            samples,
            updaters,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum RunOutcome {
    Consensus { winner: usize },
    MaxRoundsExceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub rounds: u64,
    pub total_samples: u64,
    pub per_node_samples: f64,
    pub final_config: OpinionConfiguration,
    pub trace: Vec<RoundTrace>,
}

/// Run rounds until some opinion holds every agent or `max_rounds` rounds
/// have elapsed. With `trace_stride > 0` the trace holds round 0, every
/// `trace_stride`-th round and the final round.
pub fn run_to_consensus<R: Rng + ?Sized>(
    spec: &ProtocolSpec,
    initial: &OpinionConfiguration,
    max_rounds: u64,
    rng: &mut R,
    trace_stride: u64,
) -> Result<RunResult> {
    spec.validate()?;
    let mut config = initial.clone();
    let mut trace = Vec::new();
    if trace_stride > 0 {
        trace.push(RoundTrace::of(0, &config, 0, 0));
    }
    let mut rounds = 0;
    let mut total_samples = 0u64;
    while !config.is_consensus() && rounds < max_rounds {
        let out = step(spec, &config, rng)?;
        rounds += 1;
        total_samples += out.samples;
        config = out.config;
        let last = config.is_consensus() || rounds == max_rounds;
        if trace_stride > 0 && (rounds % trace_stride == 0 || last) {
            trace.push(RoundTrace::of(rounds, &config, out.samples, out.updaters));
        }
    }
    let outcome = if config.is_consensus() {
        RunOutcome::Consensus {
            winner: config.plurality(),
        }
    } else {
        RunOutcome::MaxRoundsExceeded
    };
    Ok(RunResult {
        outcome,
        rounds,
        total_samples,
        per_node_samples: total_samples as f64 / config.n() as f64,
        final_config: config,
        trace,
    })
}

/// Collapse every non-plurality opinion into one: `(C_1, n - C_1)`.
pub fn binary_merge(config: &OpinionConfiguration) -> OpinionConfiguration {
    let c1 = config.max_count();
    OpinionConfiguration::new(vec![c1, config.n() - c1]).expect("n >= 1")
}

/// `ceil(64 (n / (h^2 C_1) + 1) ln n)`, at least one round.
pub fn default_max_rounds(config: &OpinionConfiguration, h: u32) -> u64 {
    let n = config.n() as f64;
    let h = h as f64;
    let c1 = config.max_count() as f64;
    let bound = 64.0 * (n / (h * h * c1) + 1.0) * n.ln();
    (bound.ceil() as u64).max(1)
}
