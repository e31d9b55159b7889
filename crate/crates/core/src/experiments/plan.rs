//! Experiment plans: a TOML file describing the protocol, the `(n, k, h)`
//! grid, the initial configuration and the output sinks.
//!
//! ```toml
//! name = "scaling"
//! trials = 50
//! base_seed = 7
//!
//! [protocol]
//! kind = "dejavu"
//!
//! [grid]
//! n = [100000]
//! k = [10]
//! h = [2, 4, 8, 16, 32]
//!
//! [initial]
//! kind = "hypothesis-bias"
//! lambda = 2.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{generate_initial, InitialSpec};
use crate::error::{Error, Result};
use crate::protocol::{Engine, ProtocolKind, ProtocolSpec, SampleAccounting, TieRule};
use crate::rng::RandomStream;

fn default_name() -> String {
    "experiment".into()
}

fn default_trials() -> u64 {
    50
}

fn default_h() -> Vec<u32> {
    vec![3]
}

fn default_k() -> Vec<usize> {
    vec![2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub base_seed: u64,
    /// Per-trial round cap; the default depends on the grid point.
    #[serde(default)]
    pub max_rounds: Option<u64>,
    /// Trace every `trace_stride`-th round; 0 disables tracing.
    #[serde(default)]
    pub trace_stride: u64,
    pub protocol: ProtocolSettings,
    /// Second protocol for paired comparisons.
    #[serde(default)]
    pub baseline: Option<ProtocolSettings>,
    pub grid: Grid,
    #[serde(default)]
    pub initial: InitialPlan,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSettings {
    pub kind: ProtocolKind,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default)]
    pub sample_accounting: SampleAccounting,
}

impl ProtocolSettings {
    pub fn at(&self, h: u32) -> ProtocolSpec {
        ProtocolSpec {
            kind: self.kind,
            h,
            tie_rule: self.tie_rule,
            engine: self.engine,
            sample_accounting: self.sample_accounting,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: Vec<u64>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_h")]
    pub h: Vec<u32>,
}

/// Initial configuration family; `k` comes from the grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialPlan {
    #[default]
    Balanced,
    PlantedBias {
        delta: u64,
    },
    HypothesisBias {
        lambda: f64,
    },
    Dirichlet {
        alpha: f64,
    },
    LeaderShare {
        share: f64,
    },
    Explicit {
        counts: Vec<u64>,
    },
}

impl InitialPlan {
    pub fn at(&self, k: usize) -> InitialSpec {
        match self {
            InitialPlan::Balanced => InitialSpec::Balanced { k },
            InitialPlan::PlantedBias { delta } => InitialSpec::PlantedBias { k, delta: *delta },
            InitialPlan::HypothesisBias { lambda } => InitialSpec::HypothesisBias { k, lambda: *lambda },
            InitialPlan::Dirichlet { alpha } => InitialSpec::Dirichlet { k, alpha: *alpha },
            InitialPlan::LeaderShare { share } => InitialSpec::LeaderShare { k, share: *share },
            InitialPlan::Explicit { counts } => InitialSpec::Explicit {
                counts: counts.clone(),
            },
        }
    }

    fn is_random(&self) -> bool {
        matches!(self, InitialPlan::Dirichlet { .. })
    }
}

/// Output file names, resolved against the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub trials: String,
    pub trace: String,
    pub summary: String,
    pub comparison: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            trials: "trials.csv".into(),
            trace: "trace.csv".into(),
            summary: "summary.json".into(),
            comparison: "comparison.csv".into(),
        }
    }
}

/// One `(n, k, h)` point of the grid. Points are numbered with `n` slowest
/// and `h` fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub grid_id: u32,
    pub n: u64,
    pub k: usize,
    pub h: u32,
}

/// Stream of trial `trial` at grid point `grid_id`: `(grid_id << 32) | trial`.
pub fn stream_id(grid_id: u32, trial: u64) -> u64 {
    (u64::from(grid_id) << 32) | (trial & 0xffff_ffff)
}

impl ExperimentPlan {
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n in &self.grid.n {
            for &k in &self.grid.k {
                for &h in &self.grid.h {
                    out.push(GridPoint {
                        grid_id: out.len() as u32,
                        n,
                        k,
                        h,
                    });
                }
            }
        }
        out
    }

    /// Check ranges and that every grid point admits its initial
    /// configuration.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::plan("trials", "trials must be ≥ 1"));
        }
        if self.trials > u64::from(u32::MAX) {
            return Err(Error::plan("trials", "at most 2^32 - 1 trials per grid point"));
        }
        if self.max_rounds == Some(0) {
            return Err(Error::plan("max_rounds", "max_rounds must be ≥ 1"));
        }
        for (key, empty) in [
            ("grid.n", self.grid.n.is_empty()),
            ("grid.k", self.grid.k.is_empty()),
            ("grid.h", self.grid.h.is_empty()),
        ] {
            if empty {
                return Err(Error::plan(key, "needs at least one value"));
            }
        }
        for (i, &h) in self.grid.h.iter().enumerate() {
            if h < 2 {
                return Err(Error::plan(format!("grid.h[{i}]"), "h must be ≥ 2"));
            }
        }
        for (i, &n) in self.grid.n.iter().enumerate() {
            if n == 0 {
                return Err(Error::plan(format!("grid.n[{i}]"), "n must be ≥ 1"));
            }
        }
        for (i, &k) in self.grid.k.iter().enumerate() {
            if k == 0 {
                return Err(Error::plan(format!("grid.k[{i}]"), "k must be ≥ 1"));
            }
        }
        if let InitialPlan::Explicit { counts } = &self.initial {
            let total: u64 = counts.iter().sum();
            if self.grid.n.iter().any(|&n| n != total) {
                return Err(Error::plan("grid.n", format!("explicit counts sum to {total}")));
            }
            if self.grid.k.iter().any(|&k| k != counts.len()) {
                return Err(Error::plan("grid.k", format!("explicit counts have {} opinions", counts.len())));
            }
        }
        let points = self.grid_points();
        if points.len() > u32::MAX as usize {
            return Err(Error::plan("grid", "too many grid points"));
        }
        for p in points {
            let spec = self.initial.at(p.k);
            let probe = if self.initial.is_random() {
                if p.n < p.k as u64 {
                    Err(Error::TooFewAgents { n: p.n, k: p.k })
                } else {
                    Ok(())
                }
            } else {
                let mut rng = RandomStream::new(self.base_seed, 0);
                generate_initial(&spec, p.n, p.h, &mut rng).map(|_| ())
            };
            probe.map_err(|e| {
                Error::plan("initial", format!("grid point n={} k={} h={}: {e}", p.n, p.k, p.h))
            })?;
        }
        Ok(())
    }
}

/// Parse and validate a plan from TOML text.
pub fn parse_plan_str(text: &str) -> Result<ExperimentPlan> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::plan("(syntax)", e.message()))?;
    let plan: ExperimentPlan = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "(root)".to_string() } else { path };
        Error::plan(key, e.into_inner().message())
    })?;
    plan.validate()?;
    Ok(plan)
}

pub fn parse_plan(path: &Path) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::plan("(file)", format!("cannot read {}: {e}", path.display())))?;
    parse_plan_str(&text)
}
