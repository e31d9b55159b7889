//! Acceptance criteria, run in order with one PASS/FAIL line each.
//!
//! `cargo test --test acceptance -- 2 5` runs only the listed criteria.

mod support;

use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dejavu_core::config::OpinionConfiguration;
use dejavu_core::engines::{dejavu_agent_step, SeenSet};
use dejavu_core::exact::{adoption_profile, adoption_profile_from_densities};
use dejavu_core::experiments::{
    compare_samples, parse_plan_str, run_sweep, scaling_fit, ComparisonSinks, Sink,
    SweepSinks,
};
use dejavu_core::verify::{
    check_amplification, check_dominance, check_engine_equivalence, check_envelopes,
    check_growth_cap, check_submartingale, check_symmetric_monotonicity, CheckReport,
    EquivalenceSettings, GrowthCapSettings, PlantedLeaderInstances, RandomInstances,
};
use dejavu_core::{DensityVector, Engine, RandomStream};
use rand::Rng;

const SCALING_PLAN: &str = include_str!("../../../plans/scaling.toml");
const SAMPLE_PLAN: &str = include_str!("../../../plans/sample_efficiency.toml");

const SUITE_SEED: u64 = 0x5eed_0001;
const GROWTH_SEED: u64 = 0x5eed_0009;
const DOMINANCE_SEED: u64 = 0x5eed_000a;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

fn report_line(r: &CheckReport) -> String {
    format!(
        "{}: {} instances, {} violations, worst margin {:.3e}",
        r.check_name, r.instances_tested, r.violations, r.worst_margin
    )
}

fn all_compositions(n: u64, k: usize, out: &mut Vec<Vec<u64>>, cur: &mut Vec<u64>) {
    if cur.len() + 1 == k {
        cur.push(n);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for c in 0..=n {
        cur.push(c);
        all_compositions(n - c, k, out, cur);
        cur.pop();
    }
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    let mut worst_norm = 0.0f64;
    let mut cases = 0u64;
    for k in 1..=5usize {
        for n in 1..=12u64 {
            let mut configs = Vec::new();
            all_compositions(n, k, &mut configs, &mut Vec::new());
            for counts in configs {
                let config = OpinionConfiguration::new(counts).unwrap();
                let p: Vec<f64> = config.densities().as_slice().to_vec();
                for h in 2..=k as u32 + 1 {
                    cases += 1;
                    let prof = adoption_profile(&config, h).unwrap();
                    let (cells, no_repeat) = support::enumerate_paths(&p, h as usize);
                    let mut expected_samples = h as f64 * no_repeat;
                    for i in 0..k {
                        let brute: f64 = cells[i].iter().sum();
                        worst = worst.max((prof.adopt_prob[i] - brute).abs());
                        for (l, c) in cells[i].iter().enumerate() {
                            expected_samples += l as f64 * c;
                        }
                    }
                    worst = worst.max((prof.repeat_prob - (1.0 - no_repeat)).abs());
                    worst = worst.max((prof.expected_samples_per_agent - expected_samples).abs());
                }
                let full = adoption_profile(&config, k as u32 + 1).unwrap();
                worst_norm = worst_norm.max((full.adopt_prob.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    Verdict::new(
        worst <= 1e-10 && worst_norm <= 1e-10,
        format!("{cases} (config, h) cases; max |law - enumeration| {worst:.2e}; max |sum - 1| {worst_norm:.2e}"),
    )
}

/// Every report clean and complete, and every sub-check exercised by at
/// least one report of the same check.
fn suite_verdict(reports: &[CheckReport], instances: u64) -> Verdict {
    let mut idle: Vec<&str> = Vec::new();
    for r in reports {
        for s in &r.sub_checks {
            let used = reports
                .iter()
                .filter(|o| o.check_name == r.check_name)
                .any(|o| o.sub_check(&s.name).is_some_and(|x| x.evaluated > 0));
            if !used && !idle.contains(&s.name.as_str()) {
                idle.push(&s.name);
            }
        }
    }
    let ok = idle.is_empty() && reports.iter().all(|r| r.passed() && r.instances_tested == instances);
    let mut detail = reports.iter().map(report_line).collect::<Vec<_>>().join("; ");
    if !idle.is_empty() {
        detail.push_str(&format!("; never exercised: {}", idle.join(", ")));
    }
    Verdict::new(ok, detail)
}

fn criterion_2() -> Verdict {
    let r = check_envelopes(&RandomInstances::standard(), 10_000, 1e-10, SUITE_SEED);
    suite_verdict(&[r], 10_000)
}

fn criterion_3() -> Verdict {
    let r = check_symmetric_monotonicity(&RandomInstances::monotonicity(), 10_000, 1e-10, SUITE_SEED);
    suite_verdict(&[r], 10_000)
}

fn criterion_4() -> Verdict {
    let s = check_submartingale(&RandomInstances::standard(), 10_000, 1e-10, SUITE_SEED);
    let a = check_amplification(&RandomInstances::standard(), 10_000, 1e-10, SUITE_SEED);
    let planted = check_amplification(&PlantedLeaderInstances::standard(), 10_000, 1e-10, SUITE_SEED);
    let regimes = ["unbalanced_gap_growth", "dominant_leader_growth"]
        .map(|name| format!("{name} evaluated {}", planted.sub_check(name).map_or(0, |s| s.evaluated)))
        .join(", ");
    let mut v = suite_verdict(&[s, a, planted], 10_000);
    v.detail.push_str(&format!(" (many-opinion instances: {regimes})"));
    v
}

fn criterion_5() -> Verdict {
    let settings = EquivalenceSettings::default();
    assert_eq!(settings.law_counts, vec![5, 3, 2]);
    assert_eq!(settings.tvd_counts.iter().sum::<u64>(), 20);
    assert_eq!(settings.binary_counts, vec![7, 3]);
    let r = check_engine_equivalence(&settings, SUITE_SEED).unwrap();
    let subs = r
        .sub_checks
        .iter()
        .map(|s| format!("{} margin {:.3e}", s.name, s.worst_margin))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict::new(r.passed(), format!("{} violations; {subs}", r.violations))
}

fn two_choices(own: usize, a: usize, b: usize) -> usize {
    if a == b {
        a
    } else {
        own
    }
}

fn criterion_6() -> Verdict {
    let k = 8;
    let mut seen = SeenSet::new(k);
    let mut mismatches = 0u64;
    for own in 0..k {
        for a in 0..k {
            for b in 0..k {
                let mut draws = [a, b].into_iter();
                let step = dejavu_agent_step(own, 2, || draws.next().unwrap(), &mut seen);
                mismatches += u64::from(step.next != two_choices(own, a, b) || step.samples != 2);
            }
        }
    }
    let mut rng = RandomStream::new(SUITE_SEED, 6);
    let mut worst_square = 0.0f64;
    for _ in 0..1000 {
        let w: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        let p = DensityVector::new(w.iter().map(|x| x / s).collect()).unwrap();
        let prof = adoption_profile_from_densities(&p, 2).unwrap();
        for (i, &q) in p.as_slice().iter().enumerate() {
            worst_square = worst_square.max((prof.adopt_prob[i] - q * q).abs());
        }
    }
    let mut worst_binary = 0.0f64;
    for _ in 0..1000 {
        let p1: f64 = rng.random();
        let p2 = 1.0 - p1;
        let h = rng.random_range(3..=40u32);
        let prof = adoption_profile_from_densities(&DensityVector::new(vec![p1, p2]).unwrap(), h).unwrap();
        worst_binary = worst_binary.max((prof.adopt_prob[0] - p1 * p1 * (1.0 + 2.0 * p2)).abs());
    }
    Verdict::new(
        mismatches == 0 && worst_square <= 1e-12 && worst_binary <= 1e-12,
        format!(
            "{mismatches} two-choices mismatches over {} sample pairs; h = 2 law vs p_i^2 {worst_square:.2e}; \
             binary law vs p1^2(1 + 2 p2) over 1000 draws {worst_binary:.2e}",
            k * k * k
        ),
    )
}

fn write_to_temp(write: impl FnOnce(&Path), file: &str) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path());
    std::fs::read(dir.path().join(file)).unwrap()
}

struct ScalingRun {
    csv: Vec<u8>,
    verdict: Verdict,
}

fn scaling_run() -> ScalingRun {
    let plan = parse_plan_str(SCALING_PLAN).unwrap();
    let result = run_sweep(&plan).unwrap();
    let csv = write_to_temp(
        |dir| SweepSinks::open(dir, &plan, false).unwrap().emit(&result).unwrap(),
        &plan.outputs.trials,
    );
    let s = &result.summary;
    let min_win = s.grid.iter().map(|g| g.plurality_win_frequency).fold(1.0, f64::min);
    let medians: Vec<String> = s
        .grid
        .iter()
        .map(|g| format!("h={} median {} load {:.3}", g.h, g.median_rounds, g.load))
        .collect();
    let decreasing = s.grid.windows(2).all(|w| w[1].median_rounds <= w[0].median_rounds);
    let slope_ok = s.fit.as_ref().is_some_and(|f| (0.8..=1.2).contains(&f.slope));
    let fit = match &s.fit {
        Some(f) => format!("slope {:.3} +- {:.3} over {} points", f.slope, f.slope_stderr, f.points),
        None => format!(
            "no fit: {} grid points have n/(h^2 C1) >= 10, max load {:.3}",
            s.fit_points,
            s.grid.iter().map(|g| g.load).fold(0.0, f64::max)
        ),
    };
    // Unrestricted fit, shown for context only.
    let loose = scaling_fit(&s.grid, 0.0)
        .map(|f| format!("all-points slope {:.3}", f.slope))
        .unwrap_or_default();
    ScalingRun {
        csv,
        verdict: Verdict::new(
            min_win >= 0.98 && slope_ok,
            format!(
                "min plurality-win frequency {min_win}; {fit}; {loose}; medians non-increasing in h: {decreasing}; [{}]",
                medians.join(", ")
            ),
        ),
    }
}

fn sample_run() -> (Vec<u8>, Verdict) {
    let plan = parse_plan_str(SAMPLE_PLAN).unwrap();
    let result = compare_samples(&plan).unwrap();
    let csv = write_to_temp(
        |dir| ComparisonSinks::open(dir, &plan).unwrap().emit(&result).unwrap(),
        &plan.outputs.comparison,
    );
    let n = plan.grid.n[0] as f64;
    let regime = result
        .report
        .grid
        .iter()
        .all(|g| g.h as f64 >= (n / g.initial_c1).sqrt() && g.initial_c1 == n / 2.0);
    let pairs: u64 = result.report.grid.iter().map(|g| g.pairs).sum();
    let fewer = result.rows.iter().filter(|r| r.dejavu_fewer()).count() as f64 / pairs as f64;
    let per_point: Vec<String> = result
        .report
        .grid
        .iter()
        .map(|g| {
            format!(
                "h={} S_d {:.2} S_m {:.2} fraction {}",
                g.h, g.mean_dejavu_per_node_samples, g.mean_hmajority_per_node_samples, g.fraction_dejavu_fewer
            )
        })
        .collect();
    let min_point = result
        .report
        .grid
        .iter()
        .map(|g| g.fraction_dejavu_fewer)
        .fold(1.0, f64::min);
    (
        csv,
        Verdict::new(
            regime && min_point >= 0.95,
            format!("{pairs} pairs, overall fraction S_d < S_m {fewer}; [{}]", per_point.join(", ")),
        ),
    )
}

fn growth_run() -> (Vec<u8>, Verdict) {
    let settings = GrowthCapSettings::standard();
    let (report, rows) = check_growth_cap(&settings, GROWTH_SEED).unwrap();
    let echo = vec![format!("growth cap {}", serde_json::to_string(&settings).unwrap())];
    let csv = write_to_temp(
        |dir| {
            Sink::create(dir.join("growth_cap.csv"))
                .unwrap()
                .write_records(&echo, &rows)
                .unwrap()
        },
        "growth_cap.csv",
    );
    let eligible: u64 = rows.iter().map(|r| r.eligible_rounds).sum();
    let violations: u64 = rows.iter().map(|r| r.violations).sum();
    let rate = violations as f64 / eligible.max(1) as f64;
    (
        csv,
        Verdict::new(
            report.passed() && rate <= 0.01,
            format!(
                "h = {}, {violations} violations in {eligible} eligible rounds (rate {rate}); {}",
                settings.h,
                report.notes.join("; ")
            ),
        ),
    )
}

fn dominance_run() -> (Vec<u8>, Verdict) {
    let c = OpinionConfiguration::new(vec![800, 100, 100]).unwrap();
    let (report, rows) = check_dominance(&c, 3, 100, 10_000, DOMINANCE_SEED, 0.99, Engine::Aggregate).unwrap();
    let echo = vec![format!("dominance counts={:?} h=3 horizon=100 trials=10000", c.counts())];
    let csv = write_to_temp(
        |dir| {
            Sink::create(dir.join("dominance.csv"))
                .unwrap()
                .write_records(&echo, &rows)
                .unwrap()
        },
        "dominance.csv",
    );
    let sub = report.sub_check("takeover_dominance").unwrap();
    let last = rows.last().unwrap();
    (
        csv,
        Verdict::new(
            report.passed(),
            format!(
                "{} significant violations over {} rounds, worst margin {:.3e}; F_orig(100) {} F_merged(100) {}",
                sub.violations, sub.evaluated, sub.worst_margin, last.f_original, last.f_merged
            ),
        ),
    )
}

static SCALING: OnceLock<ScalingRun> = OnceLock::new();
static SAMPLES: OnceLock<(Vec<u8>, Verdict)> = OnceLock::new();
static GROWTH: OnceLock<(Vec<u8>, Verdict)> = OnceLock::new();
static DOMINANCE: OnceLock<(Vec<u8>, Verdict)> = OnceLock::new();

fn cached(v: &Verdict) -> Verdict {
    Verdict::new(v.passed, v.detail.clone())
}

fn criterion_11() -> Verdict {
    let checks = [
        ("scaling", &SCALING.get_or_init(scaling_run).csv, scaling_run().csv),
        ("sample efficiency", &SAMPLES.get_or_init(sample_run).0, sample_run().0),
        ("growth cap", &GROWTH.get_or_init(growth_run).0, growth_run().0),
        ("dominance", &DOMINANCE.get_or_init(dominance_run).0, dominance_run().0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, first, second) in checks {
        let same = *first == second;
        ok &= same;
        parts.push(format!("{name} {} bytes {}", first.len(), if same { "identical" } else { "DIFFER" }));
    }
    Verdict::new(ok, parts.join(", "))
}

type Criterion = (u32, &'static str, Option<Duration>, fn() -> Verdict);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "exact law vs enumeration", Some(Duration::from_secs(60)), criterion_1),
        (2, "envelope suite", Some(Duration::from_secs(120)), criterion_2),
        (3, "monotonicity suite", Some(Duration::from_secs(120)), criterion_3),
        (4, "submartingale and amplification", Some(Duration::from_secs(120)), criterion_4),
        (5, "engine equivalence", Some(Duration::from_secs(180)), criterion_5),
        (6, "binary identities", Some(Duration::from_secs(60)), criterion_6),
        (7, "scaling sweep", Some(Duration::from_secs(900)), || cached(&SCALING.get_or_init(scaling_run).verdict)),
        (8, "sample efficiency", Some(Duration::from_secs(600)), || cached(&SAMPLES.get_or_init(sample_run).1)),
        (9, "growth cap", Some(Duration::from_secs(300)), || cached(&GROWTH.get_or_init(growth_run).1)),
        (10, "dominance", Some(Duration::from_secs(300)), || cached(&DOMINANCE.get_or_init(dominance_run).1)),
        (11, "reproducibility", None, criterion_11),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = v.passed && in_time;
        let limit = budget.map(|b| format!(" of {}s", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {id:>2} {name}: {} ({:.1}s{limit}) {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            v.detail
        );
        if !passed {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
