//! Exact one-round law of the repeat-sampling rule.
//!
//! An agent samples with replacement until some opinion appears twice or
//! `h` samples have been taken. With `H` the index of the first repeat,
//!
//! `Pr(repeat is opinion i, H = l) = (l-1)! * p_i^2 * e_{l-2}(p without p_i)`
//!
//! for `2 <= l <= min(h, k+1)`, where `k` counts opinions with positive
//! density. Everything else in this module is a marginal of these cells.

use serde::{Deserialize, Serialize};

use super::symmetric::{excluding_in_domain, SymmetricTable, LOG_DOMAIN_DEGREE};
use crate::config::{DensityVector, OpinionConfiguration};
use crate::error::{Error, Result};

/// Joint probabilities of (adopted opinion, stopping index).
#[derive(Clone, Debug)]
pub struct AdoptionCells {
    h: u32,
    k: usize,
    max_len: usize,
    support_size: usize,
    /// Row per label, column `l - 2` for `l = 2..=max_len`.
    cells: Vec<f64>,
    no_repeat: f64,
}

impl AdoptionCells {
    pub fn h(&self) -> u32 {
        self.h
    }

    /// Number of labels (including zero-density ones).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Largest stopping index with positive probability, `min(h, k_eff + 1)`.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    /// Cells of one label for `l = 2..=max_len`.
    pub fn row(&self, label: usize) -> &[f64] {
        let w = self.max_len - 1;
        &self.cells[label * w..(label + 1) * w]
    }

    /// `Pr(adopt label, H = l)`; zero outside `2..=max_len`.
    pub fn cell(&self, label: usize, l: usize) -> f64 {
        if l < 2 || l > self.max_len {
            0.0
        } else {
            self.row(label)[l - 2]
        }
    }

    /// `Pr(H > h)`, computed directly as `h! e_h(p)`.
    pub fn no_repeat_mass(&self) -> f64 {
        self.no_repeat
    }

    /// Probability of adopting `label` when the sample budget is `budget`
    /// instead of `h` (only budgets up to `h` are available).
    pub fn adopt_within(&self, label: usize, budget: usize) -> f64 {
        let top = budget.min(self.max_len);
        (2..=top).map(|l| self.cell(label, l)).sum()
    }
}

fn ln_factorials(up_to: usize) -> Vec<f64> {
    let mut out = vec![0.0; up_to + 1];
    for j in 2..=up_to {
        out[j] = out[j - 1] + (j as f64).ln();
    }
    out
}

/// Tabulate the joint law for densities `p` and budget `h >= 2`.
pub fn adoption_cells(p: &DensityVector, h: u32) -> Result<AdoptionCells> {
    if h < 2 {
        return Err(Error::InvalidParameter(format!("h must be >= 2, got {h}")));
    }
    let p = p.as_slice();
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let x: Vec<f64> = support.iter().map(|&i| p[i]).collect();
    let k_eff = x.len();
    let h_us = h as usize;
    let max_len = h_us.min(k_eff + 1);
    let degree = h_us.min(k_eff);
    let table = SymmetricTable::new(&x, degree)?;
    let log_mode = h_us > LOG_DOMAIN_DEGREE || table.is_log_domain();
    let ln_fact = ln_factorials(h_us);
    // Exact in f64 for the linear path, where h <= 20.
    let mut fact = vec![1.0f64; h_us + 1];
    for j in 2..=h_us {
        fact[j] = fact[j - 1] * j as f64;
    }

    let width = max_len - 1;
    let mut cells = vec![0.0; p.len() * width];
    for (idx, &label) in support.iter().enumerate() {
        let ex = excluding_in_domain(&table, &x, idx, max_len - 2);
        let row = &mut cells[label * width..(label + 1) * width];
        let pi = x[idx];
        for l in 2..=max_len {
            let e = ex[l - 2];
            let v = if log_mode {
                let le = if table.is_log_domain() { e } else { e.ln() };
                (ln_fact[l - 1] + 2.0 * pi.ln() + le).exp()
            } else {
                fact[l - 1] * pi * pi * e
            };
            row[l - 2] = v.clamp(0.0, 1.0);
        }
    }

    let no_repeat = if h_us > k_eff {
        0.0
    } else if log_mode {
        (ln_fact[h_us] + table.ln_get(k_eff, h_us)).exp().min(1.0)
    } else {
        (fact[h_us] * table.full(h_us)).min(1.0)
    };

    Ok(AdoptionCells {
        h,
        k: p.len(),
        max_len,
        support_size: k_eff,
        cells,
        no_repeat,
    })
}

/// Law of the stopping index `H`, truncated at the budget `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HDistribution {
    pub h: u32,
    /// `pmf[l - 2] = Pr(H = l)` for `l = 2..=h`.
    pub pmf: Vec<f64>,
    /// `Pr(H > h)`.
    pub no_repeat_mass: f64,
    /// `Pr(H <= h)`.
    pub repeat_prob: f64,
    /// `E[min(H, h)]`, the expected number of samples per agent.
    pub expected_samples: f64,
}

impl HDistribution {
    pub fn prob(&self, l: usize) -> f64 {
        if l < 2 || l > self.h as usize {
            0.0
        } else {
            self.pmf[l - 2]
        }
    }
}

impl From<&AdoptionCells> for HDistribution {
    fn from(cells: &AdoptionCells) -> Self {
        let h = cells.h as usize;
        let mut pmf = vec![0.0; h - 1];
        for label in 0..cells.k {
            for (slot, v) in pmf.iter_mut().zip(cells.row(label)) {
                *slot += v;
            }
        }
        let repeat_prob: f64 = pmf.iter().sum();
        let expected_samples = pmf
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 2) as f64 * v)
            .sum::<f64>()
            + h as f64 * cells.no_repeat;
        HDistribution {
            h: cells.h,
            pmf,
            no_repeat_mass: cells.no_repeat,
            repeat_prob,
            expected_samples,
        }
    }
}

pub fn h_distribution(p: &DensityVector, h: u32) -> Result<HDistribution> {
    Ok(HDistribution::from(&adoption_cells(p, h)?))
}

/// Per-opinion adoption probabilities of one agent in one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdoptionProfile {
    pub h: u32,
    /// `adopt_prob[i] = Pr(repeat happens within h samples and is opinion i)`.
    pub adopt_prob: Vec<f64>,
    /// `Pr(H <= h) = sum of adopt_prob`.
    pub repeat_prob: f64,
    pub expected_samples_per_agent: f64,
}

impl From<&AdoptionCells> for AdoptionProfile {
    fn from(cells: &AdoptionCells) -> Self {
        let adopt_prob: Vec<f64> = (0..cells.k).map(|i| cells.row(i).iter().sum()).collect();
        let dist = HDistribution::from(cells);
        AdoptionProfile {
            h: cells.h,
            repeat_prob: adopt_prob.iter().sum(),
            adopt_prob,
            expected_samples_per_agent: dist.expected_samples,
        }
    }
}

pub fn adoption_profile(config: &OpinionConfiguration, h: u32) -> Result<AdoptionProfile> {
    adoption_profile_from_densities(&config.densities(), h)
}

pub fn adoption_profile_from_densities(p: &DensityVector, h: u32) -> Result<AdoptionProfile> {
    Ok(AdoptionProfile::from(&adoption_cells(p, h)?))
}
