use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// Sample until the first repeated opinion, at most `h` samples.
    Dejavu,
    /// Sample exactly `h` agents and adopt the plurality of the sample.
    HMajority,
    /// Unbounded-budget repeat rule realised as a race of Poisson clocks.
    PoissonRace,
}

/// What an h-majority agent does when its sample's plurality is tied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    #[default]
    KeepCurrent,
    UniformAmongTied,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// One agent at a time, one draw at a time.
    AgentLevel,
    /// Whole-population update from the exact one-round law.
    #[default]
    Aggregate,
}

/// How the aggregate engine reports sample usage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleAccounting {
    /// Sample counts drawn jointly with the update (same law as agent level).
    #[default]
    Exact,
    /// Expected samples `n E[min(H, h)]` per round.
    Expected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub h: u32,
    pub tie_rule: TieRule,
    pub engine: Engine,
    pub sample_accounting: SampleAccounting,
}

impl ProtocolSpec {
    pub fn dejavu(h: u32, engine: Engine) -> Self {
        ProtocolSpec {
            kind: ProtocolKind::Dejavu,
            h,
            tie_rule: TieRule::default(),
            engine,
            sample_accounting: SampleAccounting::default(),
        }
    }

    pub fn hmajority(h: u32, tie_rule: TieRule) -> Self {
        ProtocolSpec {
            kind: ProtocolKind::HMajority,
            h,
            tie_rule,
            engine: Engine::AgentLevel,
            sample_accounting: SampleAccounting::Exact,
        }
    }

    /// The race has no budget; `h` is unused and kept at 2.
    pub fn poisson_race() -> Self {
        ProtocolSpec {
            kind: ProtocolKind::PoissonRace,
            h: 2,
            tie_rule: TieRule::default(),
            engine: Engine::AgentLevel,
            sample_accounting: SampleAccounting::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h < 2 {
            return Err(Error::InvalidParameter(format!("h must be >= 2, got {}", self.h)));
        }
        Ok(())
    }
}
