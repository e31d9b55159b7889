//! Brute-force reference computations, independent of the library's
//! closed forms.
#![allow(dead_code)]

use std::collections::HashMap;

/// Coefficients of `prod_j (1 + x_j t)`, i.e. `e_0..e_len`.
pub fn poly_expand(x: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for &xj in x {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (m, c) in coeffs.iter().enumerate() {
            next[m] += c;
            next[m + 1] += c * xj;
        }
        coeffs = next;
    }
    coeffs
}

/// Joint law of (repeated opinion, stopping index) by walking every sample
/// path. Returns `cells[label][l]` (index `l` directly) and `Pr(no repeat)`.
pub fn enumerate_paths(p: &[f64], h: usize) -> (Vec<Vec<f64>>, f64) {
    let k = p.len();
    let mut cells = vec![vec![0.0; h + 1]; k];
    let mut no_repeat = 0.0;
    let mut seen = vec![false; k];

    fn walk(
        p: &[f64],
        h: usize,
        depth: usize,
        prob: f64,
        seen: &mut [bool],
        cells: &mut [Vec<f64>],
        no_repeat: &mut f64,
    ) {
        if depth == h {
            *no_repeat += prob;
            return;
        }
        for x in 0..p.len() {
            if p[x] == 0.0 {
                continue;
            }
            let q = prob * p[x];
            if seen[x] {
                cells[x][depth + 1] += q;
            } else {
                seen[x] = true;
                walk(p, h, depth + 1, q, seen, cells, no_repeat);
                seen[x] = false;
            }
        }
    }

    walk(p, h, 0, 1.0, &mut seen, &mut cells, &mut no_repeat);
    (cells, no_repeat)
}

/// Per-agent next-opinion law `[adopt_0, .., adopt_{k-1}, keep]`.
pub fn agent_law(p: &[f64], h: usize) -> Vec<f64> {
    let (cells, no_repeat) = enumerate_paths(p, h);
    let mut out: Vec<f64> = cells.iter().map(|r| r.iter().sum()).collect();
    out.push(no_repeat);
    out
}

/// Exact law of the next configuration, built agent by agent.
pub fn next_config_law(counts: &[u64], h: usize) -> HashMap<Vec<u64>, f64> {
    let n: u64 = counts.iter().sum();
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let law = agent_law(&p, h);
    let k = counts.len();
    let mut dist: HashMap<Vec<u64>, f64> = HashMap::new();
    dist.insert(vec![0; k], 1.0);
    for (own, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            let mut next = HashMap::new();
            for (state, prob) in &dist {
                for (j, &q) in law.iter().enumerate() {
                    if q == 0.0 {
                        continue;
                    }
                    let target = if j == k { own } else { j };
                    let mut s = state.clone();
                    s[target] += 1;
                    *next.entry(s).or_insert(0.0) += prob * q;
                }
            }
            dist = next;
        }
    }
    dist
}

/// h-majority next-opinion law for an agent holding `current`, by walking
/// all `k^h` ordered samples. `uniform_ties` selects the tie rule.
pub fn hmajority_by_sequences(p: &[f64], h: usize, current: usize, uniform_ties: bool) -> Vec<f64> {
    let k = p.len();
    let mut out = vec![0.0; k];
    let total = k.pow(h as u32);
    for code in 0..total {
        let mut c = code;
        let mut tally = vec![0usize; k];
        let mut prob = 1.0;
        for _ in 0..h {
            let x = c % k;
            c /= k;
            tally[x] += 1;
            prob *= p[x];
        }
        if prob == 0.0 {
            continue;
        }
        let top = *tally.iter().max().unwrap();
        let tied: Vec<usize> = (0..k).filter(|&j| tally[j] == top).collect();
        if tied.len() == 1 {
            out[tied[0]] += prob;
        } else if uniform_ties {
            for &j in &tied {
                out[j] += prob / tied.len() as f64;
            }
        } else {
            out[current] += prob;
        }
    }
    out
}
