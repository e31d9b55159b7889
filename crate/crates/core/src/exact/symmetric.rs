//! Elementary symmetric polynomials of non-negative reals.

use crate::error::{Error, Result};

/// Tables with `max_degree` above this are kept in the log domain.
pub const LOG_DOMAIN_DEGREE: usize = 20;

/// Deflation is abandoned once its running error-amplification bound
/// (in units of machine epsilon) exceeds this, i.e. once less than a
/// millionth of the magnitude survives cancellation.
const DEFLATION_GUARD: f64 = 1e6;

/// Prefix table `e_m(x_1..x_j)` for `0 <= j <= len`, `0 <= m <= max_degree`.
#[derive(Clone, Debug)]
pub struct SymmetricTable {
    len: usize,
    max_degree: usize,
    log_domain: bool,
    values: Vec<f64>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn validate(x: &[f64]) -> Result<()> {
    for (index, &value) in x.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    Ok(())
}

/// Final row of the prefix recurrence over `x`, in the requested domain.
fn recurrence_row<'a>(
    x: impl Iterator<Item = &'a f64>,
    max_degree: usize,
    log_domain: bool,
) -> Vec<f64> {
    let zero = if log_domain { f64::NEG_INFINITY } else { 0.0 };
    let mut row = vec![zero; max_degree + 1];
    row[0] = if log_domain { 0.0 } else { 1.0 };
    for &xj in x {
        if log_domain {
            let lx = xj.ln();
            for m in (1..=max_degree).rev() {
                row[m] = log_add(row[m], lx + row[m - 1]);
            }
        } else {
            for m in (1..=max_degree).rev() {
                row[m] += xj * row[m - 1];
            }
        }
    }
    row
}

impl SymmetricTable {
    /// Build the table; the log domain is used when `max_degree > 20`.
    pub fn new(x: &[f64], max_degree: usize) -> Result<Self> {
        Self::with_domain(x, max_degree, max_degree > LOG_DOMAIN_DEGREE)
    }

    pub fn with_domain(x: &[f64], max_degree: usize, log_domain: bool) -> Result<Self> {
        validate(x)?;
        if max_degree > x.len() {
            return Err(Error::InvalidParameter(format!(
                "degree {max_degree} exceeds the {} variables",
                x.len()
            )));
        }
        let width = max_degree + 1;
        let zero = if log_domain { f64::NEG_INFINITY } else { 0.0 };
        let mut values = vec![zero; (x.len() + 1) * width];
        values[0] = if log_domain { 0.0 } else { 1.0 };
        for (j, &xj) in x.iter().enumerate() {
            let (prev, next) = values.split_at_mut((j + 1) * width);
            let prev = &prev[j * width..];
            let next = &mut next[..width];
            next[0] = prev[0];
            if log_domain {
                let lx = xj.ln();
                for m in 1..width {
                    next[m] = log_add(prev[m], lx + prev[m - 1]);
                }
            } else {
                for m in 1..width {
                    next[m] = prev[m] + xj * prev[m - 1];
                }
            }
        }
        Ok(SymmetricTable {
            len: x.len(),
            max_degree,
            log_domain,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn is_log_domain(&self) -> bool {
        self.log_domain
    }

    fn raw(&self, j: usize, m: usize) -> f64 {
        self.values[j * (self.max_degree + 1) + m]
    }

    /// `e_m(x_1..x_j)`.
    pub fn get(&self, j: usize, m: usize) -> f64 {
        let v = self.raw(j, m);
        if self.log_domain {
            v.exp()
        } else {
            v
        }
    }

    /// `ln e_m(x_1..x_j)` (negative infinity for zero).
    pub fn ln_get(&self, j: usize, m: usize) -> f64 {
        let v = self.raw(j, m);
        if self.log_domain {
            v
        } else {
            v.ln()
        }
    }

    /// `e_m` over all variables.
    pub fn full(&self, m: usize) -> f64 {
        self.get(self.len, m)
    }
}

/// `e_m(x without x_i)` for `m = 0..=max_degree`, in the table's domain.
pub(crate) fn excluding_in_domain(
    table: &SymmetricTable,
    x: &[f64],
    i: usize,
    max_degree: usize,
) -> Vec<f64> {
    let len = table.len;
    let reachable = max_degree.min(len.saturating_sub(1));
    let zero = if table.log_domain { f64::NEG_INFINITY } else { 0.0 };
    let mut out = vec![zero; max_degree + 1];
    out[0] = if table.log_domain { 0.0 } else { 1.0 };
    let xi = x[i];
    // Running relative error bound, in units of machine epsilon.
    let mut amplification = 0.0f64;
    let mut deflated = true;
    for m in 1..=reachable {
        let (full_over_v, t_over_v, value) = if table.log_domain {
            let lf = table.raw(len, m);
            let lt = xi.ln() + out[m - 1];
            if lf == f64::NEG_INFINITY || lt >= lf {
                deflated = false;
                break;
            }
            let r = (lt - lf).exp();
            let value = lf + (-r).ln_1p();
            (1.0 / (1.0 - r), r / (1.0 - r), value)
        } else {
            let f = table.raw(len, m);
            let t = xi * out[m - 1];
            let v = f - t;
            if !(v > 0.0) {
                deflated = false;
                break;
            }
            (f / v, t / v, v)
        };
        amplification = full_over_v + t_over_v * amplification;
        if amplification > DEFLATION_GUARD {
            deflated = false;
            break;
        }
        out[m] = value;
    }
    if !deflated {
        let others = x
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v);
        let row = recurrence_row(others, reachable, table.log_domain);
        out[..=reachable].copy_from_slice(&row);
    }
    out
}

/// `e_m(x without x_i)` for `m = 0..=max_degree`, derived from the full
/// table by deflation, falling back to a direct recurrence when deflation
/// would lose too much precision.
pub fn symmetric_excluding(
    table: &SymmetricTable,
    x: &[f64],
    i: usize,
    max_degree: usize,
) -> Result<Vec<f64>> {
    if x.len() != table.len {
        return Err(Error::InvalidParameter(format!(
            "table built over {} variables, got {}",
            table.len,
            x.len()
        )));
    }
    if i >= x.len() {
        return Err(Error::InvalidParameter(format!("index {i} out of range")));
    }
    if max_degree > table.max_degree {
        return Err(Error::InvalidParameter(format!(
            "degree {max_degree} exceeds the table's {}",
            table.max_degree
        )));
    }
    let mut out = excluding_in_domain(table, x, i, max_degree);
    if table.log_domain {
        out.iter_mut().for_each(|v| *v = v.exp());
    }
    Ok(out)
}
