//! Closed-form bounds on the adoption law.

use serde::{Deserialize, Serialize};

use crate::config::DensityVector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEnvelope {
    pub lower: f64,
    pub upper: f64,
}

impl RatioEnvelope {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower * (1.0 - tol) && x <= self.upper * (1.0 + tol)
    }
}

/// Bounds on `adopt_i / adopt_j` under an unlimited sample budget, for
/// `p_i >= p_j > 0`:
/// `(p_i/p_j)^2 (p_i + 3p_j)/(3p_i + p_j) <= ratio <= (p_i/p_j)^2`.
/// The upper bound also holds for every finite budget.
pub fn race_ratio_envelope(p: &DensityVector, i: usize, j: usize) -> Result<RatioEnvelope> {
    let p = p.as_slice();
    let (pi, pj) = (p[i], p[j]);
    if pj <= 0.0 {
        return Err(Error::ZeroSupport { index: j });
    }
    if pi < pj {
        return Err(Error::InvalidParameter(format!(
            "expected p[{i}] >= p[{j}], got {pi} < {pj}"
        )));
    }
    let sq = (pi / pj).powi(2);
    Ok(RatioEnvelope {
        lower: sq * (pi + 3.0 * pj) / (3.0 * pi + pj),
        upper: sq,
    })
}

/// Bounds on the probability `Pr(H <= h)` that some opinion repeats within
/// `h` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthdayEnvelope {
    /// `2^-11 min(h^2 |p|^2, 1)`.
    pub lower: f64,
    /// `min(h^2 |p|^2, 1)`.
    pub upper: f64,
    /// Pairwise union bound `(h^2 / 2) |p|^2`.
    pub union_upper: f64,
    /// Upper bound on `Pr(H > h)`:
    /// `exp(-C^2/4) + (1 - exp(-C^2/2)) (2C^2/h + 2C)` with `C = h |p|`.
    pub no_repeat_upper: f64,
}

pub fn birthday_envelope(p: &DensityVector, h: u32) -> Result<BirthdayEnvelope> {
    if h < 2 {
        return Err(Error::InvalidParameter(format!("h must be >= 2, got {h}")));
    }
    let h = h as f64;
    let norm_sq = p.norm2_sq();
    let scale = (h * h * norm_sq).min(1.0);
    let c_sq = h * h * norm_sq;
    let c = c_sq.sqrt();
    Ok(BirthdayEnvelope {
        lower: scale / 2048.0,
        upper: scale,
        union_upper: 0.5 * h * h * norm_sq,
        no_repeat_upper: (-c_sq / 4.0).exp()
            + (-(-c_sq / 2.0).exp_m1()) * (2.0 * c_sq / h + 2.0 * c),
    })
}
