//! Exact one-round law of h-majority by enumerating sample compositions.

use serde::{Deserialize, Serialize};

use crate::config::DensityVector;
use crate::error::{Error, Result};
use crate::protocol::TieRule;

/// Enumeration is refused beyond this many compositions.
pub const MAX_COMPOSITIONS: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HMajorityLaw {
    pub h: u32,
    pub tie_rule: TieRule,
    /// Probability that opinion `j` is the unique plurality of the sample.
    pub unique: Vec<f64>,
    /// Probability that the sample's plurality is tied.
    pub tie_mass: f64,
    /// Tied mass split uniformly among the tied opinions.
    pub tie_split: Vec<f64>,
}

impl HMajorityLaw {
    /// Law of the next opinion of an agent currently holding `current`.
    pub fn adopt_given(&self, current: usize) -> Vec<f64> {
        match self.tie_rule {
            TieRule::UniformAmongTied => self
                .unique
                .iter()
                .zip(&self.tie_split)
                .map(|(u, s)| u + s)
                .collect(),
            TieRule::KeepCurrent => {
                let mut row = self.unique.clone();
                row[current] += self.tie_mass;
                row
            }
        }
    }

    /// Full transition matrix, row = current opinion.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.unique.len()).map(|c| self.adopt_given(c)).collect()
    }
}

fn ln_choose(n: f64, r: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n + 1.0) - ln_gamma(r + 1.0) - ln_gamma(n - r + 1.0)
}

pub fn hmajority_law(p: &DensityVector, h: u32, tie_rule: TieRule) -> Result<HMajorityLaw> {
    if h < 2 {
        return Err(Error::InvalidParameter(format!("h must be >= 2, got {h}")));
    }
    let p = p.as_slice();
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let k = support.len();
    let outcomes = ln_choose((h as usize + k - 1) as f64, (k - 1) as f64).exp();
    if outcomes > MAX_COMPOSITIONS {
        return Err(Error::InstanceTooLarge { outcomes });
    }
    let ln_p: Vec<f64> = support.iter().map(|&i| p[i].ln()).collect();
    let mut ln_fact = vec![0.0; h as usize + 1];
    for j in 2..=h as usize {
        ln_fact[j] = ln_fact[j - 1] + (j as f64).ln();
    }

    let mut unique = vec![0.0; p.len()];
    let mut tie_split = vec![0.0; p.len()];
    let mut tie_mass = 0.0;
    let mut parts = vec![0usize; k];
    let h = h as usize;

    // Odometer over compositions of h into k parts.
    fn visit(
        pos: usize,
        left: usize,
        parts: &mut [usize],
        f: &mut dyn FnMut(&[usize]),
    ) {
        if pos + 1 == parts.len() {
            parts[pos] = left;
            f(parts);
            return;
        }
        for x in 0..=left {
            parts[pos] = x;
            visit(pos + 1, left - x, parts, f);
        }
    }

    let mut record = |parts: &[usize]| {
        let mut lp = ln_fact[h];
        for (j, &x) in parts.iter().enumerate() {
            lp += x as f64 * ln_p[j] - ln_fact[x];
        }
        let prob = lp.exp();
        let top = *parts.iter().max().unwrap();
        let tied: Vec<usize> = (0..k).filter(|&j| parts[j] == top).collect();
        if tied.len() == 1 {
            unique[support[tied[0]]] += prob;
        } else {
            tie_mass += prob;
            let share = prob / tied.len() as f64;
            for &j in &tied {
                tie_split[support[j]] += share;
            }
        }
    };
    visit(0, h, &mut parts, &mut record);

    Ok(HMajorityLaw {
        h: h as u32,
        tie_rule,
        unique,
        tie_mass,
        tie_split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn binary_three_sample_example() {
        let p = DensityVector::new(vec![0.6, 0.4]).unwrap();
        let law = hmajority_law(&p, 3, TieRule::KeepCurrent).unwrap();
        assert_abs_diff_eq!(law.unique[0], 0.648, epsilon = 1e-12);
        assert_abs_diff_eq!(law.tie_mass, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rows_are_distributions() {
        let p = DensityVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        for rule in [TieRule::KeepCurrent, TieRule::UniformAmongTied] {
            let law = hmajority_law(&p, 4, rule).unwrap();
            for row in law.transition_matrix() {
                assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn refuses_huge_instances() {
        let p = DensityVector::new(vec![0.01; 100]).unwrap();
        let err = hmajority_law(&p, 50, TieRule::KeepCurrent).unwrap_err();
        assert!(err.to_string().contains("use Monte Carlo"));
    }
}
