//! Exact-arithmetic checks of the adoption law's inequalities over random
//! instances.

use super::instances::{run_instances, Instance, InstanceSource};
use super::report::{CheckReport, Slack};
use crate::config::OpinionConfiguration;
use crate::exact::{
    adoption_cells, adoption_profile, birthday_envelope, h_distribution,
    race_ratio_envelope, second_moment_next, symmetric_excluding, SymmetricTable,
};

/// Constant in the one-round bias amplification bounds.
pub const AMPLIFICATION_GAMMA: f64 = 1.0 / (1u64 << 19) as f64;

fn describe(inst: &Instance) -> String {
    format!("counts={:?} h={}", inst.config.counts(), inst.h)
}

fn describe_at(inst: &Instance, extra: String) -> String {
    format!("counts={:?} h={} {extra}", inst.config.counts(), inst.h)
}

/// Adoption probabilities under every budget `2..=k_eff+1`:
/// `adopt[label][h]`, with `rho[h]` their sum.
struct BudgetTable {
    support: Vec<usize>,
    hmax: usize,
    adopt: Vec<Vec<f64>>,
    rho: Vec<f64>,
}

impl BudgetTable {
    fn new(config: &OpinionConfiguration) -> Self {
        let p = config.densities();
        let support: Vec<usize> = (0..config.k()).filter(|&i| config.count(i) > 0).collect();
        let hmax = support.len() + 1;
        let cells = adoption_cells(&p, hmax as u32).expect("valid densities");
        let mut adopt = vec![vec![0.0; hmax + 1]; config.k()];
        let mut rho = vec![0.0; hmax + 1];
        for &i in &support {
            for h in 2..=hmax {
                adopt[i][h] = adopt[i][h - 1] + cells.cell(i, h);
                rho[h] += adopt[i][h];
            }
        }
        BudgetTable {
            support,
            hmax,
            adopt,
            rho,
        }
    }
}

/// Ratio and probability envelopes of the adoption law: the unbounded-budget
/// ratio envelope, the truncation sandwich
/// `ratio_inf <= adopt_i(h)/adopt_j(h) <= (p_i/p_j)^2`, the derived factor-3
/// bounds on pairwise and per-opinion shares, the leader's ratio bound, and
/// the repeat-probability bounds.
pub fn check_envelopes<S: InstanceSource + ?Sized>(
    source: &S,
    num_instances: u64,
    tolerance: f64,
    seed: u64,
) -> CheckReport {
    let tally = run_instances(source, num_instances, seed, tolerance, |inst, t| {
        let normalisation = t.declare("adoption_normalisation");
        let h_law = t.declare("stopping_law_normalisation");
        let consistency = t.declare("profile_matches_table");
        let race_lo = t.declare("race_envelope_lower");
        let race_hi = t.declare("race_envelope_upper");
        let trunc_lo = t.declare("truncation_lower");
        let trunc_hi = t.declare("truncation_upper");
        let pair_lo = t.declare("pairwise_factor_three_lower");
        let pair_hi = t.declare("pairwise_factor_three_upper");
        let share_lo = t.declare("share_lower");
        let share_hi = t.declare("share_upper");
        let share_floor = t.declare("share_floor");
        let leader = t.declare("leader_ratio");
        let leader_simple = t.declare("leader_ratio_simplified");
        let bday_lo = t.declare("repeat_prob_lower");
        let bday_hi = t.declare("repeat_prob_upper");
        let union = t.declare("repeat_prob_union_bound");
        let no_repeat = t.declare("no_repeat_upper");

        let c = &inst.config;
        let p = c.densities();
        let ps = p.as_slice();
        let norm2 = p.norm2_sq();
        let tab = BudgetTable::new(c);
        let hmax = tab.hmax;

        let total: f64 = tab.support.iter().map(|&i| tab.adopt[i][hmax]).sum();
        t.le(normalisation, (total - 1.0).abs(), 0.0, Slack::Absolute, || describe(inst));

        let d = h_distribution(&p, inst.h).expect("valid densities");
        let mass = d.pmf.iter().sum::<f64>() + d.no_repeat_mass;
        t.le(h_law, (mass - 1.0).abs(), 0.0, Slack::Absolute, || describe(inst));

        let prof = adoption_profile(c, inst.h).expect("valid configuration");
        let hh = (inst.h as usize).min(hmax);
        for &i in &tab.support {
            let diff = (prof.adopt_prob[i] - tab.adopt[i][hh]).abs();
            t.le(consistency, diff, 0.0, Slack::Absolute, || describe_at(inst, format!("i={i}")));
        }

        for &i in &tab.support {
            for &j in &tab.support {
                if i == j || ps[i] < ps[j] {
                    continue;
                }
                let sq = (ps[i] / ps[j]).powi(2);
                let star = tab.adopt[i][hmax] / tab.adopt[j][hmax];
                let env = race_ratio_envelope(&p, i, j).expect("ordered pair");
                let ctx = || describe_at(inst, format!("i={i} j={j}"));
                t.ge(race_lo, star, env.lower, Slack::Relative, ctx);
                t.le(race_hi, star, env.upper, Slack::Relative, ctx);
                // Track the worst budget per pair rather than every budget.
                let mut worst = [(f64::INFINITY, 0usize); 4];
                for h in 2..=hmax {
                    let r = tab.adopt[i][h] / tab.adopt[j][h];
                    let margins = [
                        (r - star) / r.max(star),
                        (sq - r) / r.max(sq),
                        (r - sq / 3.0) / r.max(sq / 3.0),
                        (3.0 * sq - r) / r.max(3.0 * sq),
                    ];
                    for (w, m) in worst.iter_mut().zip(margins) {
                        if m < w.0 {
                            *w = (m, h);
                        }
                    }
                }
                let bounds = [star, sq, sq / 3.0, 3.0 * sq];
                let ids = [trunc_lo, trunc_hi, pair_lo, pair_hi];
                for ((id, (m, h)), bound) in ids.into_iter().zip(worst).zip(bounds) {
                    if h == 0 {
                        continue;
                    }
                    let r = tab.adopt[i][h] / tab.adopt[j][h];
                    t.check_margin(id, r, bound, m, || {
                        describe_at(inst, format!("i={i} j={j} budget={h}"))
                    });
                }
            }
        }

        let top = c.plurality();
        let p1 = ps[top];
        for &i in &tab.support {
            let pi = ps[i];
            for h in 2..=hmax {
                let share = tab.adopt[i][h] / tab.rho[h];
                let ctx = || describe_at(inst, format!("i={i} budget={h}"));
                t.ge(share_lo, share, pi * pi / (3.0 * norm2), Slack::Relative, ctx);
                t.le(share_hi, share, 3.0 * pi * pi / norm2, Slack::Relative, ctx);
                t.ge(share_floor, share, pi * pi / (3.0 * p1), Slack::Relative, ctx);
                if i != top {
                    let ratio = tab.adopt[top][h] / tab.adopt[i][h];
                    let bound = (p1 / pi).powi(2) * (p1 + 3.0 * pi) / (3.0 * p1 + pi);
                    t.ge(leader, ratio, bound, Slack::Relative, ctx);
                    let simple = 2.0 * p1 * p1 / (pi * (p1 + pi));
                    t.ge(leader_simple, bound, simple, Slack::Relative, ctx);
                }
            }
        }

        for h in 2..=hmax + 2 {
            let rho = if h <= hmax { tab.rho[h] } else { 1.0 };
            let b = birthday_envelope(&p, h as u32).expect("h >= 2");
            let ctx = || describe_at(inst, format!("budget={h}"));
            t.ge(bday_lo, rho, b.lower, Slack::Absolute, ctx);
            t.le(bday_hi, rho, b.upper, Slack::Absolute, ctx);
            t.le(union, rho, b.union_upper, Slack::Absolute, ctx);
            t.le(no_repeat, 1.0 - rho, b.no_repeat_upper, Slack::Absolute, ctx);
        }
    });
    tally.into_report("envelopes")
}

/// Monotonicity facts about elementary symmetric polynomials behind the
/// truncation sandwich: the ratio `e_m(p without i) / e_m(p without j)` is
/// non-increasing in `m` when `p_i >= p_j`, the per-index cell ratio is
/// non-increasing in the stopping index, and Newton's inequalities hold.
pub fn check_symmetric_monotonicity<S: InstanceSource + ?Sized>(
    source: &S,
    num_instances: u64,
    tolerance: f64,
    seed: u64,
) -> CheckReport {
    let tally = run_instances(source, num_instances, seed, tolerance, |inst, t| {
        let poly_ratio = t.declare("excluded_polynomial_ratio_decreasing");
        let cell_ratio = t.declare("cell_ratio_decreasing");
        let newton = t.declare("newton_inequality");

        let c = &inst.config;
        let p = c.densities();
        let support: Vec<usize> = (0..c.k()).filter(|&i| c.count(i) > 0).collect();
        let x: Vec<f64> = support.iter().map(|&i| p.as_slice()[i]).collect();
        let k = x.len();
        if k < 2 {
            return;
        }
        let table = SymmetricTable::new(&x, k).expect("non-negative");
        let excl: Vec<Vec<f64>> = (0..k)
            .map(|i| symmetric_excluding(&table, &x, i, k - 1).expect("in range"))
            .collect();
        let cells = adoption_cells(&p, k as u32 + 1).expect("valid densities");

        let full: Vec<f64> = (0..=k).map(|m| table.full(m)).collect();
        let mut newton_check = |e: &[f64], who: &str| {
            for m in 1..e.len() - 1 {
                let lhs = e[m] * e[m];
                let rhs = e[m - 1] * e[m + 1];
                t.ge(newton, lhs, rhs, Slack::Relative, || {
                    describe_at(inst, format!("{who} m={m}"))
                });
            }
        };
        newton_check(&full, "all");
        for (i, e) in excl.iter().enumerate() {
            newton_check(e, &format!("without {i}"));
        }

        for i in 0..k {
            for j in 0..k {
                if i == j || x[i] < x[j] {
                    continue;
                }
                // e_m(p without i) / e_m(p without j) for 2 <= m <= k-2.
                for m in 2..k.saturating_sub(1) {
                    let now = excl[i][m] / excl[j][m];
                    let before = excl[i][m - 1] / excl[j][m - 1];
                    t.le(poly_ratio, now, before, Slack::Relative, || {
                        describe_at(inst, format!("i={i} j={j} m={m}"))
                    });
                }
                for l in 3..=k + 1 {
                    let (a, b) = (support[i], support[j]);
                    let now = cells.cell(a, l) / cells.cell(b, l);
                    let before = cells.cell(a, l - 1) / cells.cell(b, l - 1);
                    t.le(cell_ratio, now, before, Slack::Relative, || {
                        describe_at(inst, format!("i={i} j={j} l={l}"))
                    });
                }
            }
        }
    });
    tally.into_report("monotonicity")
}

/// `E[|C'|^2 | C] >= |C|^2`, and the premise that expected counts preserve
/// the order of any two opinions' ratios.
pub fn check_submartingale<S: InstanceSource + ?Sized>(
    source: &S,
    num_instances: u64,
    tolerance: f64,
    seed: u64,
) -> CheckReport {
    let tally = run_instances(source, num_instances, seed, tolerance, |inst, t| {
        let growth = t.declare("norm_growth");
        let ratio = t.declare("expected_ratio_preserved");
        let c = &inst.config;
        let m = second_moment_next(c, inst.h).expect("valid configuration");
        let now = c.norm2_sq() as f64;
        t.ge(growth, m.expected_norm2_sq, now, Slack::Relative, || describe(inst));
        for i in 0..c.k() {
            for j in 0..c.k() {
                let (ci, cj) = (c.count(i), c.count(j));
                if i == j || cj == 0 || ci < cj {
                    continue;
                }
                let lhs = m.expected[i] / m.expected[j];
                t.ge(ratio, lhs, ci as f64 / cj as f64, Slack::Relative, || {
                    describe_at(inst, format!("i={i} j={j}"))
                });
            }
        }
    });
    tally.into_report("submartingale")
}

/// One-round drift of the leader against every other opinion.
pub fn check_amplification<S: InstanceSource + ?Sized>(
    source: &S,
    num_instances: u64,
    tolerance: f64,
    seed: u64,
) -> CheckReport {
    let gamma = AMPLIFICATION_GAMMA;
    let tally = run_instances(source, num_instances, seed, tolerance, |inst, t| {
        let dir = t.declare("leader_ratio_grows");
        let strict = t.declare("leader_ratio_grows_strictly");
        let gap_dir = t.declare("gap_grows");
        let leader_dir = t.declare("leader_grows");
        let gap_rate = t.declare("gap_growth_rate");
        let norm_gap = t.declare("normalised_gap_grows");
        let leader_rate = t.declare("leader_growth_rate");
        let unbalanced = t.declare("unbalanced_gap_growth");
        let dominant = t.declare("dominant_leader_growth");

        let (c, _) = inst.config.ordered_view();
        let h = inst.h as f64;
        let n = c.n() as f64;
        let prof = adoption_profile(&c, inst.h).expect("valid configuration");
        let rho = prof.repeat_prob;
        let counts: Vec<f64> = c.counts().iter().map(|&x| x as f64).collect();
        let e: Vec<f64> = prof
            .adopt_prob
            .iter()
            .zip(&counts)
            .map(|(q, x)| n * q + (1.0 - rho) * x)
            .collect();
        let c1 = counts[0];
        let alpha = (c1 * h * h / n).min(1.0);
        let ctx = |extra: String| format!("ordered={:?} h={} {extra}", c.counts(), inst.h);

        for i in 1..c.k() {
            if counts[i] == 0.0 {
                continue;
            }
            let lhs = e[0] / e[i];
            let rhs = c1 / counts[i];
            t.ge(dir, lhs, rhs, Slack::Relative, || ctx(format!("i={i}")));
            if c1 > counts[i] && rho > 0.0 {
                t.gt(strict, lhs, rhs, || ctx(format!("i={i}")));
            }
        }

        let all_positive = counts.iter().all(|&x| x > 0.0);
        if all_positive && c1 < 0.75 * n && c.k() >= 2 {
            let e1 = e[0];
            let d2 = c1 - counts[1];
            for j in 1..c.k() {
                let dj = c1 - counts[j];
                let edj = e1 - e[j];
                t.ge(gap_dir, edj, dj, Slack::Relative, || ctx(format!("j={j}")));
                t.ge(gap_rate, edj, dj * (1.0 + gamma * alpha), Slack::Relative, || {
                    ctx(format!("j={j}"))
                });
                let lhs = edj / e1.sqrt();
                let rhs = d2 / c1.sqrt() * (1.0 + gamma / 21.0 * alpha);
                t.ge(norm_gap, lhs, rhs, Slack::Relative, || ctx(format!("j={j}")));
            }
            t.ge(leader_dir, e1, c1, Slack::Relative, || ctx(String::new()));
            t.ge(leader_rate, e1, c1 + gamma * alpha / 7.0 * d2, Slack::Relative, || {
                ctx(String::new())
            });
        }

        let p: Vec<f64> = counts.iter().map(|x| x / n).collect();
        let norm2: f64 = p.iter().map(|x| x * x).sum();
        if c1 <= 0.8 * n {
            for i in 1..c.k() {
                if counts[i] == 0.0 || norm2 >= (p[0] + p[i]) / 24.0 {
                    continue;
                }
                let di = c1 - counts[i];
                let edi = e[0] - e[i];
                let factor =
                    1.0 + (p[0] + p[i]) * (h * h * norm2).min(1.0) / (4096.0 * norm2);
                t.ge(unbalanced, edi, di * factor, Slack::Relative, || ctx(format!("i={i}")));
            }
        }

        let norm_c: f64 = counts.iter().map(|x| x * x).sum();
        if n * c1 >= 24.0 * norm_c {
            let rhs = c1 * (1.0 + gamma * alpha * 7.0 / 24.0 * n * c1 / norm_c);
            t.ge(dominant, e[0], rhs, Slack::Relative, || ctx(String::new()));
        }
    });
    let mut report = tally.into_report("amplification");
    report.notes.push(
        "normalised_gap_grows uses the constant gamma/21 that the argument actually \
         delivers; the sharper gamma/3 is not asserted"
            .into(),
    );
    report
}
