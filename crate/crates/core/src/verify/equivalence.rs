//! Monte Carlo agreement between the simulators and the exact law.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Slack, Tally};
use super::stats::{bootstrap_tvd, chi_square_gof};
use crate::config::OpinionConfiguration;
use crate::engines::{
    dejavu_agent_round, dejavu_agent_step, dejavu_aggregate_round, poisson_race, SeenSet,
};
use crate::error::{Error, Result};
use crate::exact::{adoption_cells, adoption_profile, HDistribution};
use crate::protocol::SampleAccounting;
use crate::rng::RandomStream;

/// Largest outcome space the one-round TVD comparison will tabulate.
pub const MAX_TABULATED_OUTCOMES: f64 = 1e5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSettings {
    /// Configuration for the adoption-law comparisons.
    pub law_counts: Vec<u64>,
    pub law_trials: u64,
    /// Configuration and budget for the one-round TVD comparison.
    pub tvd_counts: Vec<u64>,
    pub tvd_h: u32,
    pub tvd_trials: u64,
    pub tvd_threshold: f64,
    pub bootstrap_resamples: usize,
    /// Two-opinion configuration for the three-majority identity.
    pub binary_counts: Vec<u64>,
    pub binary_h: u32,
    pub binary_trials: u64,
    pub confidence: f64,
}

impl Default for EquivalenceSettings {
    fn default() -> Self {
        EquivalenceSettings {
            law_counts: vec![5, 3, 2],
            law_trials: 1_000_000,
            tvd_counts: vec![10, 6, 4],
            tvd_h: 3,
            tvd_trials: 1_000_000,
            tvd_threshold: 0.01,
            bootstrap_resamples: 1000,
            binary_counts: vec![7, 3],
            binary_h: 3,
            binary_trials: 1_000_000,
            confidence: 0.99,
        }
    }
}

/// Next-opinion frequencies of single agents drawn with the agent engine's
/// step rule: `[adopt_0, .., adopt_{k-1}, keep]`.
pub fn agent_step_frequencies<R: Rng + ?Sized>(
    config: &OpinionConfiguration,
    h: u32,
    trials: u64,
    rng: &mut R,
) -> Vec<u64> {
    let k = config.k();
    let n = config.n();
    let mut seen = SeenSet::new(k);
    let mut freq = vec![0u64; k + 1];
    // The stepping agent's own opinion does not affect which repeat occurs.
    let own = config.plurality();
    let cum: Vec<u64> = config
        .counts()
        .iter()
        .scan(0, |s, &c| {
            *s += c;
            Some(*s)
        })
        .collect();
    for _ in 0..trials {
        let step = dejavu_agent_step(
            own,
            h,
            || {
                let u = rng.random_range(0..n);
                cum.partition_point(|&c| c <= u)
            },
            &mut seen,
        );
        if step.adopted {
            freq[step.next] += 1;
        } else {
            freq[k] += 1;
        }
    }
    freq
}

fn outcome_space(n: u64, k: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let (a, b) = ((n + k as u64 - 1) as f64, (k - 1) as f64);
    (ln_gamma(a + 1.0) - ln_gamma(b + 1.0) - ln_gamma(a - b + 1.0)).exp()
}

fn one_round_histograms(
    config: &OpinionConfiguration,
    h: u32,
    trials: u64,
    seed: u64,
) -> Result<(HashMap<Vec<u64>, u64>, HashMap<Vec<u64>, u64>)> {
    let outcomes = outcome_space(config.n(), config.k());
    if outcomes > MAX_TABULATED_OUTCOMES {
        return Err(Error::TabulationInfeasible(format!(
            "{outcomes:.0} possible next configurations"
        )));
    }
    let mut agent = HashMap::new();
    let mut aggregate = HashMap::new();
    let mut ra = RandomStream::derive(seed, 0x6167_656e, 0);
    let mut rb = RandomStream::derive(seed, 0x6167_6772, 0);
    for _ in 0..trials {
        let a = dejavu_agent_round(config, h, &mut ra)?;
        *agent.entry(a.config.counts().to_vec()).or_insert(0) += 1;
        let b = dejavu_aggregate_round(config, h, SampleAccounting::Exact, &mut rb)?;
        *aggregate.entry(b.config.counts().to_vec()).or_insert(0) += 1;
    }
    Ok((agent, aggregate))
}

/// Race winners, agent-step frequencies and the aggregate engine against
/// the exact law and against each other.
pub fn check_engine_equivalence(settings: &EquivalenceSettings, seed: u64) -> Result<CheckReport> {
    let mut t = Tally::new(0.0);
    let conf = settings.confidence;

    let race_id = t.declare("race_winner_law");
    let race_samples_id = t.declare("race_sample_count_law");
    let agent_inf_id = t.declare("agent_step_law_unbounded");
    let agent_h_id = t.declare("agent_step_law_budget_two");
    let tvd_id = t.declare("one_round_tvd");
    let tvd_ci_id = t.declare("one_round_tvd_ci_lower");
    let binary_id = t.declare("binary_three_majority_identity");
    let mut notes = Vec::new();

    // Race winners against the unbounded-budget adoption law.
    let law_config = OpinionConfiguration::new(settings.law_counts.clone())?;
    let k = law_config.k();
    let full_h = law_config.support_size() as u32 + 1;
    let star = adoption_profile(&law_config, full_h)?;
    let stopping = HDistribution::from(&adoption_cells(&law_config.densities(), full_h)?);
    let mut rng = RandomStream::derive(seed, 0x7261_6365, 0);
    let mut winners = vec![0u64; k];
    let mut lengths = vec![0u64; full_h as usize - 1];
    for _ in 0..settings.law_trials {
        let r = poisson_race(&law_config, &mut rng);
        winners[r.winner] += 1;
        lengths[r.samples as usize - 2] += 1;
    }
    let chi = chi_square_gof(&winners, &star.adopt_prob, conf);
    t.check_margin(race_id, chi.statistic, chi.critical, chi.critical - chi.statistic, || {
        format!("counts={:?} winners={winners:?}", settings.law_counts)
    });
    notes.push(format!("race winners: {chi:?}"));
    let chi = chi_square_gof(&lengths, &stopping.pmf, conf);
    t.check_margin(race_samples_id, chi.statistic, chi.critical, chi.critical - chi.statistic, || {
        format!("counts={:?} lengths={lengths:?}", settings.law_counts)
    });
    notes.push(format!("race sample counts: {chi:?}"));

    // Agent steps, unbounded and smallest budget.
    for (id, h, salt) in [(agent_inf_id, full_h, 0x6167_3031u64), (agent_h_id, 2, 0x6167_3032)] {
        let mut rng = RandomStream::derive(seed, salt, 0);
        let freq = agent_step_frequencies(&law_config, h, settings.law_trials, &mut rng);
        let prof = adoption_profile(&law_config, h)?;
        let mut probs = prof.adopt_prob.clone();
        probs.push(1.0 - prof.repeat_prob);
        let chi = chi_square_gof(&freq, &probs, conf);
        t.check_margin(id, chi.statistic, chi.critical, chi.critical - chi.statistic, || {
            format!("counts={:?} h={h} freq={freq:?}", settings.law_counts)
        });
        notes.push(format!("agent steps at h={h}: {chi:?}"));
    }

    // Whole-round law: agent engine against aggregate engine.
    let tvd_config = OpinionConfiguration::new(settings.tvd_counts.clone())?;
    let (a, b) = one_round_histograms(&tvd_config, settings.tvd_h, settings.tvd_trials, seed)?;
    let mut rng = RandomStream::derive(seed, 0x626f_6f74, 0);
    let ci = bootstrap_tvd(&a, &b, settings.bootstrap_resamples, conf, &mut rng);
    let ctx = || format!("counts={:?} h={}", settings.tvd_counts, settings.tvd_h);
    t.le(tvd_id, ci.estimate, settings.tvd_threshold, Slack::Absolute, ctx);
    t.le(tvd_ci_id, ci.lower, settings.tvd_threshold, Slack::Absolute, ctx);
    notes.push(format!("one-round TVD: {ci:?}"));

    // Two opinions with budget >= 3 adopt opinion 0 w.p. p^2 (1 + 2q).
    let bin = OpinionConfiguration::new(settings.binary_counts.clone())?;
    if bin.k() != 2 || settings.binary_h < 3 {
        return Err(Error::InvalidParameter(
            "the three-majority identity needs two opinions and h >= 3".into(),
        ));
    }
    let mut rng = RandomStream::derive(seed, 0x6269_6e61, 0);
    let freq = agent_step_frequencies(&bin, settings.binary_h, settings.binary_trials, &mut rng);
    let p = bin.count(0) as f64 / bin.n() as f64;
    let target = p * p * (1.0 + 2.0 * (1.0 - p));
    let n = settings.binary_trials as f64;
    let observed = freq[0] as f64 / n;
    let sigma = (target * (1.0 - target) / n).sqrt();
    t.check_margin(binary_id, observed, target, 3.0 * sigma - (observed - target).abs(), || {
        format!("counts={:?} h={}", settings.binary_counts, settings.binary_h)
    });
    notes.push(format!(
        "three-majority identity: observed {observed}, exact {target}, sigma {sigma}"
    ));

    t.instance();
    let mut report = t.into_report("engine-equivalence");
    report.statistical = true;
    report.confidence = Some(conf);
    report.trials = Some(settings.law_trials.max(settings.tvd_trials));
    report.notes = notes;
    Ok(report)
}
