use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use super::plan::{stream_id, ExperimentPlan, GridPoint, InitialPlan, ProtocolSettings};
use crate::config::{generate_initial, OpinionConfiguration};
use crate::engines::{default_max_rounds, run_to_consensus, RoundTrace, RunOutcome};
use crate::error::{Error, Result};
use crate::protocol::ProtocolKind;
use crate::rng::RandomStream;

/// Salt of the streams that build initial configurations.
const INITIAL_SALT: u64 = 0x696e_6974;
/// Salt of the baseline protocol's streams in paired comparisons.
const BASELINE_SALT: u64 = 0x6261_7365;

/// Grid points qualifying for the scaling fit have `n / (h^2 C_1)` at least this.
pub const FIT_MIN_LOAD: f64 = 10.0;
/// Fewest qualifying grid points for which a fit is reported.
pub const FIT_MIN_POINTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub grid_id: u32,
    pub trial: u64,
    /// Stream id of the trial's dynamics.
    pub seed: u64,
    pub outcome: RunOutcome,
    pub rounds: u64,
    pub total_samples: u64,
    pub per_node_samples: f64,
    pub initial_plurality: usize,
    pub initial_c1: u64,
    pub max_rounds: u64,
    pub trace: Vec<RoundTrace>,
}

impl TrialRecord {
    pub fn winner(&self) -> Option<usize> {
        match self.outcome {
            RunOutcome::Consensus { winner } => Some(winner),
            RunOutcome::MaxRoundsExceeded => None,
        }
    }

    pub fn plurality_won(&self) -> bool {
        self.winner() == Some(self.initial_plurality)
    }

    pub fn timed_out(&self) -> bool {
        self.outcome == RunOutcome::MaxRoundsExceeded
    }
}

fn initial_for(plan: &ExperimentPlan, point: &GridPoint, trial: u64) -> Result<OpinionConfiguration> {
    let mut rng = RandomStream::derive(plan.base_seed, INITIAL_SALT, stream_id(point.grid_id, trial));
    generate_initial(&plan.initial.at(point.k), point.n, point.h, &mut rng)
}

fn run_trial(
    plan: &ExperimentPlan,
    protocol: &ProtocolSettings,
    point: &GridPoint,
    trial: u64,
    salt: Option<u64>,
    trace_stride: u64,
) -> Result<TrialRecord> {
    let initial = initial_for(plan, point, trial)?;
    let spec = protocol.at(point.h);
    let max_rounds = plan
        .max_rounds
        .unwrap_or_else(|| default_max_rounds(&initial, point.h));
    let id = stream_id(point.grid_id, trial);
    let mut rng = match salt {
        None => RandomStream::new(plan.base_seed, id),
        Some(s) => RandomStream::derive(plan.base_seed, s, id),
    };
    let run = run_to_consensus(&spec, &initial, max_rounds, &mut rng, trace_stride)?;
    Ok(TrialRecord {
        grid_id: point.grid_id,
        trial,
        seed: id,
        outcome: run.outcome,
        rounds: run.rounds,
        total_samples: run.total_samples,
        per_node_samples: run.per_node_samples,
        initial_plurality: initial.plurality(),
        initial_c1: initial.max_count(),
        max_rounds,
        trace: run.trace,
    })
}

fn run_point(
    plan: &ExperimentPlan,
    protocol: &ProtocolSettings,
    point: &GridPoint,
    salt: Option<u64>,
    trace_stride: u64,
) -> Result<Vec<TrialRecord>> {
    (0..plan.trials)
        .into_par_iter()
        .map(|t| run_trial(plan, protocol, point, t, salt, trace_stride))
        .collect()
}

struct Quartiles {
    median: f64,
    q1: f64,
    q3: f64,
}

fn quartiles(values: Vec<f64>) -> Quartiles {
    if values.is_empty() {
        return Quartiles {
            median: f64::NAN,
            q1: f64::NAN,
            q3: f64::NAN,
        };
    }
    let mut d = Data::new(values);
    Quartiles {
        median: d.median(),
        q1: d.lower_quartile(),
        q3: d.upper_quartile(),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = values.fold((0.0, 0u64), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

/// `n / (h^2 C_1)`.
pub fn load(n: u64, h: u32, c1: u64) -> f64 {
    n as f64 / ((h as f64).powi(2) * c1 as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub grid_id: u32,
    pub n: u64,
    pub k: usize,
    pub h: u32,
    /// Median initial `C_1` over trials.
    pub initial_c1: f64,
    /// `n / (h^2 C_1)` at the median initial `C_1`.
    pub load: f64,
    pub max_rounds: u64,
    pub trials: u64,
    pub median_rounds: f64,
    pub q1_rounds: f64,
    pub q3_rounds: f64,
    pub iqr_rounds: f64,
    /// Median rounds divided by `ln n`.
    pub normalised_median_rounds: f64,
    pub plurality_win_frequency: f64,
    pub mean_per_node_samples: f64,
    pub mean_total_samples: f64,
    pub timeout_frequency: f64,
}

pub fn summarise_point(point: &GridPoint, records: &[TrialRecord]) -> GridSummary {
    let q = quartiles(records.iter().map(|r| r.rounds as f64).collect());
    let c1 = quartiles(records.iter().map(|r| r.initial_c1 as f64).collect()).median;
    let trials = records.len() as u64;
    let frac = |f: &dyn Fn(&TrialRecord) -> bool| {
        if trials == 0 {
            f64::NAN
        } else {
            records.iter().filter(|r| f(r)).count() as f64 / trials as f64
        }
    };
    let ln_n = (point.n as f64).ln();
    GridSummary {
        grid_id: point.grid_id,
        n: point.n,
        k: point.k,
        h: point.h,
        initial_c1: c1,
        load: point.n as f64 / ((point.h as f64).powi(2) * c1),
        max_rounds: records.iter().map(|r| r.max_rounds).max().unwrap_or(0),
        trials,
        median_rounds: q.median,
        q1_rounds: q.q1,
        q3_rounds: q.q3,
        iqr_rounds: q.q3 - q.q1,
        normalised_median_rounds: q.median / ln_n,
        plurality_win_frequency: frac(&TrialRecord::plurality_won),
        mean_per_node_samples: mean(records.iter().map(|r| r.per_node_samples)),
        mean_total_samples: mean(records.iter().map(|r| r.total_samples as f64)),
        timeout_frequency: frac(&TrialRecord::timed_out),
    }
}

/// Ordinary least squares of `log(median rounds / ln n)` on `log(load)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub min_load: f64,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(x, y)` pairs; needs at least three points.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64, f64, f64)> {
    let m = xs.len();
    if m < 3 || ys.len() != m {
        return None;
    }
    let mf = m as f64;
    let mx = xs.iter().sum::<f64>() / mf;
    let my = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = sse / (mf - 2.0);
    let slope_se = (s2 / sxx).sqrt();
    let intercept_se = (s2 * (1.0 / mf + mx * mx / sxx)).sqrt();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Some((slope, intercept, slope_se, intercept_se, r2))
}

/// Fit over grid points with `load >= min_load`, reported only when at least
/// [`FIT_MIN_POINTS`] qualify.
pub fn scaling_fit(grid: &[GridSummary], min_load: f64) -> Option<ScalingFit> {
    let pts: Vec<&GridSummary> = grid
        .iter()
        .filter(|g| g.load >= min_load && g.median_rounds > 0.0 && g.n > 1)
        .collect();
    if pts.len() < FIT_MIN_POINTS {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|g| g.load.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|g| g.normalised_median_rounds.ln()).collect();
    let (slope, intercept, slope_stderr, intercept_stderr, r_squared) = ols(&xs, &ys)?;
    Some(ScalingFit {
        min_load,
        points: pts.len(),
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub version: String,
    pub plan: ExperimentPlan,
    pub grid: Vec<GridSummary>,
    /// Grid points with `load >= FIT_MIN_LOAD`.
    pub fit_points: usize,
    pub fit: Option<ScalingFit>,
    pub notes: Vec<String>,
}

pub struct SweepResult {
    pub summary: SweepSummary,
    pub trials: Vec<TrialRecord>,
}

/// Run every trial at every grid point.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<SweepResult> {
    run_grid(plan, plan.grid_points(), plan.trace_stride)
}

/// Run a single-point plan with tracing on every round unless the plan sets
/// a stride.
pub fn run_simulation(plan: &ExperimentPlan) -> Result<SweepResult> {
    let points = plan.grid_points();
    if points.len() != 1 {
        return Err(Error::plan(
            "grid",
            format!("simulate runs one grid point, this grid has {}", points.len()),
        ));
    }
    run_grid(plan, points, plan.trace_stride.max(1))
}

fn run_grid(plan: &ExperimentPlan, points: Vec<GridPoint>, stride: u64) -> Result<SweepResult> {
    plan.validate()?;
    let mut trials = Vec::new();
    let mut grid = Vec::new();
    for p in &points {
        let records = run_point(plan, &plan.protocol, p, None, stride)?;
        grid.push(summarise_point(p, &records));
        trials.extend(records);
    }
    let fit_points = grid.iter().filter(|g| g.load >= FIT_MIN_LOAD).count();
    let fit = scaling_fit(&grid, FIT_MIN_LOAD);
    let mut notes = vec![format!(
        "trial t at grid point g runs on stream (g << 32) | t of base seed {}",
        plan.base_seed
    )];
    if fit.is_none() {
        notes.push(format!(
            "no scaling fit: {fit_points} grid points have n/(h^2 C1) >= {FIT_MIN_LOAD}, {FIT_MIN_POINTS} needed"
        ));
    }
    Ok(SweepResult {
        summary: SweepSummary {
            version: crate::VERSION.to_string(),
            plan: plan.clone(),
            grid,
            fit_points,
            fit,
            notes,
        },
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub grid_id: u32,
    pub trial: u64,
    pub seed: u64,
    pub dejavu_outcome: RunOutcome,
    pub dejavu_rounds: u64,
    pub dejavu_total_samples: u64,
    pub dejavu_per_node_samples: f64,
    pub hmajority_outcome: RunOutcome,
    pub hmajority_rounds: u64,
    pub hmajority_total_samples: u64,
    pub hmajority_per_node_samples: f64,
}

impl ComparisonRow {
    /// `S_d / S_m` per node; `None` when neither protocol sampled.
    pub fn ratio(&self) -> Option<f64> {
        (self.hmajority_per_node_samples > 0.0)
            .then(|| self.dejavu_per_node_samples / self.hmajority_per_node_samples)
    }

    pub fn dejavu_fewer(&self) -> bool {
        self.dejavu_per_node_samples < self.hmajority_per_node_samples
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub grid_id: u32,
    pub n: u64,
    pub k: usize,
    pub h: u32,
    pub initial_c1: f64,
    pub initial_l2_norm: f64,
    pub pairs: u64,
    pub mean_dejavu_per_node_samples: f64,
    pub mean_hmajority_per_node_samples: f64,
    pub mean_dejavu_total_samples: f64,
    pub mean_hmajority_total_samples: f64,
    pub median_ratio: f64,
    pub q1_ratio: f64,
    pub q3_ratio: f64,
    /// Fraction of pairs in which DejaVu used fewer samples per node.
    pub fraction_dejavu_fewer: f64,
    /// `min(h, n / |C|_2) (n / (h^2 C_1) + 1) ln n`.
    pub envelope: f64,
    pub dejavu_timeouts: u64,
    pub hmajority_timeouts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub version: String,
    pub plan: ExperimentPlan,
    pub grid: Vec<ComparisonSummary>,
    pub notes: Vec<String>,
}

pub struct ComparisonResult {
    pub report: ComparisonReport,
    pub rows: Vec<ComparisonRow>,
}

/// Paired samples-to-consensus of DejaVu (`protocol`) and h-majority
/// (`baseline`) from the same initial configuration at each trial.
pub fn compare_samples(plan: &ExperimentPlan) -> Result<ComparisonResult> {
    plan.validate()?;
    let baseline = plan
        .baseline
        .ok_or_else(|| Error::plan("baseline", "compare needs a baseline protocol"))?;
    if plan.protocol.kind != ProtocolKind::Dejavu {
        return Err(Error::plan("protocol.kind", "compare expects the dejavu protocol here"));
    }
    if baseline.kind != ProtocolKind::HMajority {
        return Err(Error::plan("baseline.kind", "compare expects the h-majority protocol here"));
    }
    let mut rows = Vec::new();
    let mut grid = Vec::new();
    for p in plan.grid_points() {
        let d = run_point(plan, &plan.protocol, &p, None, 0)?;
        let m = run_point(plan, &baseline, &p, Some(BASELINE_SALT), 0)?;
        let initial = initial_for(plan, &p, 0)?;
        let point_rows: Vec<ComparisonRow> = d
            .iter()
            .zip(&m)
            .map(|(d, m)| ComparisonRow {
                grid_id: p.grid_id,
                trial: d.trial,
                seed: d.seed,
                dejavu_outcome: d.outcome,
                dejavu_rounds: d.rounds,
                dejavu_total_samples: d.total_samples,
                dejavu_per_node_samples: d.per_node_samples,
                hmajority_outcome: m.outcome,
                hmajority_rounds: m.rounds,
                hmajority_total_samples: m.total_samples,
                hmajority_per_node_samples: m.per_node_samples,
            })
            .collect();
        let pairs = point_rows.len() as u64;
        let rq = quartiles(point_rows.iter().filter_map(ComparisonRow::ratio).collect());
        let c1 = quartiles(d.iter().map(|r| r.initial_c1 as f64).collect()).median;
        let l2 = initial.metrics().l2_norm;
        let n = p.n as f64;
        let envelope = (p.h as f64).min(n / l2) * (n / ((p.h as f64).powi(2) * c1) + 1.0) * n.ln();
        grid.push(ComparisonSummary {
            grid_id: p.grid_id,
            n: p.n,
            k: p.k,
            h: p.h,
            initial_c1: c1,
            initial_l2_norm: l2,
            pairs,
            mean_dejavu_per_node_samples: mean(d.iter().map(|r| r.per_node_samples)),
            mean_hmajority_per_node_samples: mean(m.iter().map(|r| r.per_node_samples)),
            mean_dejavu_total_samples: mean(d.iter().map(|r| r.total_samples as f64)),
            mean_hmajority_total_samples: mean(m.iter().map(|r| r.total_samples as f64)),
            median_ratio: rq.median,
            q1_ratio: rq.q1,
            q3_ratio: rq.q3,
            fraction_dejavu_fewer: point_rows.iter().filter(|r| r.dejavu_fewer()).count() as f64
                / pairs as f64,
            envelope,
            dejavu_timeouts: d.iter().filter(|r| r.timed_out()).count() as u64,
            hmajority_timeouts: m.iter().filter(|r| r.timed_out()).count() as u64,
        });
        rows.extend(point_rows);
    }
    let mut notes = vec![
        "samples are compared per node; totals are reported alongside".to_string(),
        "both protocols start each trial from the same initial configuration".to_string(),
    ];
    if matches!(plan.initial, InitialPlan::Dirichlet { .. }) {
        notes.push("the envelope and l2 norm use trial 0's initial configuration".to_string());
    }
    Ok(ComparisonResult {
        report: ComparisonReport {
            version: crate::VERSION.to_string(),
            plan: plan.clone(),
            grid,
            notes,
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::plan::parse_plan_str;
    use super::*;

    #[test]
    fn ols_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (s, i, se, _, r2) = ols(&xs, &ys).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12);
        assert!(se.abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consensus_start_takes_no_rounds() {
        let plan = parse_plan_str(
            "base_seed = 1\ntrials = 5\n[protocol]\nkind = \"dejavu\"\n[grid]\nn = [10]\nk = [2]\n\
             [initial]\nkind = \"explicit\"\ncounts = [10, 0]\n",
        )
        .unwrap();
        let r = run_sweep(&plan).unwrap();
        assert!(r.trials.iter().all(|t| t.rounds == 0 && t.plurality_won()));
        assert_eq!(r.summary.grid[0].plurality_win_frequency, 1.0);
    }

    #[test]
    fn budget_two_samples_twice_per_round() {
        let plan = parse_plan_str(
            "base_seed = 2\ntrials = 4\n[protocol]\nkind = \"dejavu\"\n[baseline]\nkind = \"h-majority\"\n\
             [grid]\nn = [200]\nk = [3]\nh = [2]\n[initial]\nkind = \"planted-bias\"\ndelta = 30\n",
        )
        .unwrap();
        let c = compare_samples(&plan).unwrap();
        for r in &c.rows {
            assert_eq!(r.dejavu_per_node_samples, 2.0 * r.dejavu_rounds as f64);
        }
    }
}
