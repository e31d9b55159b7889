//! Per-round growth cap of the largest opinion under h-majority.
//!
//! While the largest opinion holds fewer than `100 C_1` agents (with `C_1`
//! the initial maximum), one round should not multiply it by more than
//! `1 + 100 h^2 C_1 / n`, except with probability vanishing in `n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Tally};
use super::stats::rate_upper_bound;
use crate::config::OpinionConfiguration;
use crate::engines::hmajority_round;
use crate::error::{Error, Result};
use crate::protocol::TieRule;
use crate::rng::RandomStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCapSettings {
    pub n: u64,
    pub c1: u64,
    pub k: usize,
    pub h: u32,
    pub epsilon: f64,
    pub num_rounds: u64,
    pub num_trials: u64,
    pub tie_rule: TieRule,
    pub max_violation_rate: f64,
    pub confidence: f64,
}

impl GrowthCapSettings {
    /// `n = 10^4`, `C_1 = 100`, `k = 100`, `h = ceil(n^0.8 / C_1)`,
    /// 100 trials of 50 rounds.
    pub fn standard() -> Self {
        let n = 10_000u64;
        let c1 = 100u64;
        GrowthCapSettings {
            n,
            c1,
            k: 100,
            h: ((n as f64).powf(0.8) / c1 as f64).ceil() as u32,
            epsilon: 0.05,
            num_rounds: 50,
            num_trials: 100,
            tie_rule: TieRule::KeepCurrent,
            max_violation_rate: 0.01,
            confidence: 0.99,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrialRow {
    pub trial: u64,
    pub stream: u64,
    pub rounds: u64,
    pub eligible_rounds: u64,
    pub violations: u64,
    /// Rounds in which the largest opinion outgrew `1 + h^2 X / n`, with
    /// `X` its size at the start of that round.
    pub sharp_exceedances: u64,
    pub final_max: u64,
}

/// `Some(true)` if the round violates the cap, `None` when the round is out
/// of scope because the maximum already reached `100 C_1`.
pub fn growth_cap_violation(x_now: u64, x_next: u64, c1: u64, h: u32, n: u64) -> Option<bool> {
    if x_now >= 100 * c1 {
        return None;
    }
    let factor = 1.0 + 100.0 * (h as f64).powi(2) * c1 as f64 / n as f64;
    Some(x_next as f64 > x_now as f64 * factor)
}

fn initial(settings: &GrowthCapSettings) -> Result<OpinionConfiguration> {
    let GrowthCapSettings { n, c1, k, .. } = *settings;
    if k < 2 || c1 > n {
        return Err(Error::InvalidParameter(format!("need k >= 2 and C1 <= n, got k = {k}")));
    }
    let rest = n - c1;
    let m = (k - 1) as u64;
    let (base, extra) = (rest / m, (rest % m) as usize);
    let mut counts = vec![c1];
    counts.extend((0..k - 1).map(|i| base + u64::from(i < extra)));
    if counts[1] > c1 {
        return Err(Error::InvalidParameter(format!(
            "balanced remainder {} exceeds C1 = {c1}",
            counts[1]
        )));
    }
    OpinionConfiguration::new(counts)
}

pub fn check_growth_cap(
    settings: &GrowthCapSettings,
    seed: u64,
) -> Result<(CheckReport, Vec<GrowthTrialRow>)> {
    let GrowthCapSettings { n, c1, h, epsilon, .. } = *settings;
    let needed = (n as f64).powf(0.75 + epsilon) / c1 as f64;
    if (h as f64) < needed || c1 * 100 > n {
        return Err(Error::OutsideRegime(format!(
            "need h >= n^(0.75+eps)/C1 = {needed:.3} and C1 <= n/100; got h = {h}, C1 = {c1}, n = {n}"
        )));
    }
    let start = initial(settings)?;
    let rows: Vec<GrowthTrialRow> = (0..settings.num_trials)
        .into_par_iter()
        .map(|trial| -> Result<GrowthTrialRow> {
            let mut rng = RandomStream::new(seed, trial);
            let mut config = start.clone();
            let mut row = GrowthTrialRow {
                trial,
                stream: trial,
                rounds: 0,
                eligible_rounds: 0,
                violations: 0,
                sharp_exceedances: 0,
                final_max: config.max_count(),
            };
            for _ in 0..settings.num_rounds {
                if config.is_consensus() {
                    break;
                }
                let x_now = config.max_count();
                config = hmajority_round(&config, h, settings.tie_rule, &mut rng)?.config;
                let x_next = config.max_count();
                row.rounds += 1;
                if let Some(bad) = growth_cap_violation(x_now, x_next, c1, h, n) {
                    row.eligible_rounds += 1;
                    row.violations += u64::from(bad);
                }
                let sharp = 1.0 + (h as f64).powi(2) * x_now as f64 / n as f64;
                row.sharp_exceedances += u64::from(x_next as f64 > x_now as f64 * sharp);
            }
            row.final_max = config.max_count();
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let eligible: u64 = rows.iter().map(|r| r.eligible_rounds).sum();
    let violations: u64 = rows.iter().map(|r| r.violations).sum();
    let sharp: u64 = rows.iter().map(|r| r.sharp_exceedances).sum();
    let total_rounds: u64 = rows.iter().map(|r| r.rounds).sum();
    let rate = if eligible == 0 { 0.0 } else { violations as f64 / eligible as f64 };
    let upper = rate_upper_bound(violations, eligible, settings.confidence);

    let mut t = Tally::new(0.0);
    let id = t.declare("violation_rate");
    t.check_margin(id, rate, settings.max_violation_rate, settings.max_violation_rate - rate, || {
        format!("{violations} violations in {eligible} eligible rounds")
    });
    for _ in 0..settings.num_trials {
        t.instance();
    }
    let mut report = t.into_report("growth-cap");
    report.statistical = true;
    report.confidence = Some(settings.confidence);
    report.trials = Some(settings.num_trials);
    report.notes.push(format!(
        "{violations} of {eligible} eligible rounds exceeded the cap factor {:.4}; \
         {}% upper confidence bound on the violation rate {upper:.3e}",
        1.0 + 100.0 * (h as f64).powi(2) * c1 as f64 / n as f64,
        settings.confidence * 100.0
    ));
    report.notes.push(format!(
        "informational: {sharp} of {total_rounds} rounds grew the maximum by more than 1 + h^2 X / n"
    ));
    Ok((report, rows))
}
