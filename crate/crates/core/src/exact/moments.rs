//! Conditional moments of the next configuration under the repeat rule.
//!
//! Each agent updates independently with probability `rho`, so the number
//! of updaters is `D ~ Bin(n, rho)`; the updaters form a uniform subset and
//! adopt i.i.d. opinions with law `adopt_i / rho`, independent of who they
//! are. Both moments follow in closed form.

use serde::{Deserialize, Serialize};

use super::law::adoption_profile;
use crate::config::OpinionConfiguration;
use crate::error::Result;

/// `E[C'_i | C] = n adopt_i + (1 - rho) C_i`.
pub fn expected_next(config: &OpinionConfiguration, h: u32) -> Result<Vec<f64>> {
    let a = adoption_profile(config, h)?;
    let n = config.n() as f64;
    let keep = 1.0 - a.repeat_prob;
    Ok(a
        .adopt_prob
        .iter()
        .zip(config.counts())
        .map(|(&q, &c)| n * q + keep * c as f64)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    pub expected: Vec<f64>,
    pub variances: Vec<f64>,
    /// `E[|C'|^2 | C]`.
    pub expected_norm2_sq: f64,
}

pub fn second_moment_next(config: &OpinionConfiguration, h: u32) -> Result<SecondMoment> {
    let a = adoption_profile(config, h)?;
    let n = config.n() as f64;
    let rho = a.repeat_prob;
    let mut expected = Vec::with_capacity(config.k());
    let mut variances = Vec::with_capacity(config.k());
    for (&q, &c) in a.adopt_prob.iter().zip(config.counts()) {
        let p = c as f64 / n;
        let r = if rho > 0.0 { q / rho } else { 0.0 };
        let mean = n * q + (1.0 - rho) * c as f64;
        // Adopted mass given D, keepers lost given D, and the spread of D.
        let var = n * rho * r * (1.0 - r)
            + n * rho * (1.0 - rho) * p * (1.0 - p)
            + (r - p).powi(2) * n * rho * (1.0 - rho);
        expected.push(mean);
        variances.push(var.max(0.0));
    }
    let expected_norm2_sq = expected
        .iter()
        .zip(&variances)
        .map(|(m, v)| v + m * m)
        .sum();
    Ok(SecondMoment {
        expected,
        variances,
        expected_norm2_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expected_example() {
        let c = OpinionConfiguration::new(vec![5, 3, 2]).unwrap();
        let e = expected_next(&c, 4).unwrap();
        for (x, y) in e.iter().zip([5.9, 2.7, 1.4]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn consensus_is_absorbing() {
        let c = OpinionConfiguration::new(vec![0, 8]).unwrap();
        let m = second_moment_next(&c, 3).unwrap();
        assert_abs_diff_eq!(m.expected[1], 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.variances[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.expected_norm2_sq, 64.0, epsilon = 1e-9);
    }
}
