use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dejavu_core::exact::{
    adoption_profile, birthday_envelope, expected_next, h_distribution, race_ratio_envelope,
    second_moment_next,
};
use dejavu_core::experiments::{
    compare_samples, parse_plan, run_simulation, run_sweep, ComparisonReport, ComparisonSinks,
    ExperimentPlan, Sink, SweepSinks, SweepSummary,
};
use dejavu_core::verify::{
    check_dominance, check_growth_cap, run_suite, CheckReport, GrowthCapSettings, Suite,
};
use dejavu_core::{Engine, Error, OpinionConfiguration};

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "dejavu", version, about = "Simulate and verify DejaVu plurality consensus")]
struct Cli {
    /// Overrides the plan's base seed; seeds the verification suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Format of the report printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single-point plan with a trace of every round.
    Simulate { plan: PathBuf },
    /// Run every grid point of a plan.
    Sweep { plan: PathBuf },
    /// Paired samples-to-consensus of DejaVu and h-majority.
    Compare { plan: PathBuf },
    /// Run a check suite.
    Verify {
        /// One of envelopes, monotonicity, submartingale, amplification,
        /// engine-equivalence, growth-cap, dominance, all.
        suite: String,
        /// Instances for the exact suites, trials for the Monte Carlo ones.
        #[arg(long)]
        instances: Option<u64>,
    },
    /// Print the exact one-round law of a configuration.
    Exact {
        /// Comma-separated opinion counts.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<u64>,
        #[arg(long)]
        h: u32,
    },
}

enum Failure {
    Validation(Error),
    Violation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e)
    }
}

fn load_plan(path: &Path, seed: Option<u64>) -> Result<ExperimentPlan, Error> {
    let mut plan = parse_plan(path)?;
    if let Some(s) = seed {
        plan.base_seed = s;
    }
    Ok(plan)
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn print_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    println!("{}", header.join(","));
    for r in rows {
        println!("{}", r.join(","));
    }
}

fn report_sweep(summary: &SweepSummary, format: Format) -> Result<(), Error> {
    match format {
        Format::Json => print_json(summary),
        Format::Csv => {
            print_table(
                &[
                    "grid_id", "n", "k", "h", "initial_c1", "load", "median_rounds", "q1_rounds",
                    "q3_rounds", "plurality_win_frequency", "mean_per_node_samples",
                    "timeout_frequency",
                ],
                summary.grid.iter().map(|g| {
                    vec![
                        g.grid_id.to_string(),
                        g.n.to_string(),
                        g.k.to_string(),
                        g.h.to_string(),
                        g.initial_c1.to_string(),
                        g.load.to_string(),
                        g.median_rounds.to_string(),
                        g.q1_rounds.to_string(),
                        g.q3_rounds.to_string(),
                        g.plurality_win_frequency.to_string(),
                        g.mean_per_node_samples.to_string(),
                        g.timeout_frequency.to_string(),
                    ]
                }),
            );
            Ok(())
        }
    }
}

fn report_comparison(report: &ComparisonReport, format: Format) -> Result<(), Error> {
    match format {
        Format::Json => print_json(report),
        Format::Csv => {
            print_table(
                &[
                    "grid_id", "n", "k", "h", "pairs", "mean_dejavu_per_node_samples",
                    "mean_hmajority_per_node_samples", "median_ratio", "fraction_dejavu_fewer",
                    "envelope",
                ],
                report.grid.iter().map(|g| {
                    vec![
                        g.grid_id.to_string(),
                        g.n.to_string(),
                        g.k.to_string(),
                        g.h.to_string(),
                        g.pairs.to_string(),
                        g.mean_dejavu_per_node_samples.to_string(),
                        g.mean_hmajority_per_node_samples.to_string(),
                        g.median_ratio.to_string(),
                        g.fraction_dejavu_fewer.to_string(),
                        g.envelope.to_string(),
                    ]
                }),
            );
            Ok(())
        }
    }
}

fn report_checks(reports: &[CheckReport], format: Format) -> Result<(), Error> {
    for r in reports {
        eprintln!("{}", r.one_line());
    }
    match format {
        Format::Json => print_json(&reports),
        Format::Csv => {
            print_table(
                &["check", "passed", "instances", "violations", "worst_margin"],
                reports.iter().map(|r| {
                    vec![
                        r.check_name.clone(),
                        r.passed().to_string(),
                        r.instances_tested.to_string(),
                        r.violations.to_string(),
                        r.worst_margin.to_string(),
                    ]
                }),
            );
            Ok(())
        }
    }
}

/// Growth-cap and dominance runs also write their per-trial and per-round
/// rows when an output directory is given.
fn verify(
    suite: Suite,
    instances: Option<u64>,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<Vec<CheckReport>, Error> {
    match (suite, out_dir) {
        (Suite::GrowthCap, Some(dir)) => {
            let mut s = GrowthCapSettings::standard();
            if let Some(t) = instances {
                s.num_trials = t;
            }
            let sink = Sink::create(dir.join("growth_cap.csv"))?;
            let (report, rows) = check_growth_cap(&s, seed)?;
            let echo = vec![format!("growth cap seed={seed} {}", serde_json::to_string(&s)?)];
            sink.write_records(&echo, &rows)?;
            Ok(vec![report])
        }
        (Suite::Dominance, Some(dir)) => {
            let c = OpinionConfiguration::new(vec![800, 100, 100])?;
            let trials = instances.unwrap_or(10_000);
            let sink = Sink::create(dir.join("dominance.csv"))?;
            let (report, rows) = check_dominance(&c, 3, 100, trials, seed, 0.99, Engine::Aggregate)?;
            let echo = vec![format!(
                "dominance seed={seed} counts={:?} h=3 horizon=100 trials={trials}",
                c.counts()
            )];
            sink.write_records(&echo, &rows)?;
            Ok(vec![report])
        }
        _ => run_suite(suite, instances, seed),
    }
}

fn exact(counts: Vec<u64>, h: u32, format: Format) -> Result<(), Error> {
    let config = OpinionConfiguration::new(counts)?;
    let p = config.densities();
    let profile = adoption_profile(&config, h)?;
    let stopping = h_distribution(&p, h)?;
    let next = expected_next(&config, h)?;
    let moments = second_moment_next(&config, h)?;
    let birthday = birthday_envelope(&p, h)?;
    let leader = config.plurality();
    let mut races = Vec::new();
    for j in 0..config.k() {
        if j != leader && config.count(j) > 0 {
            let env = race_ratio_envelope(&p, leader, j)?;
            races.push(json!({ "i": leader, "j": j, "lower": env.lower, "upper": env.upper }));
        }
    }
    match format {
        Format::Json => print_json(&json!({
            "version": dejavu_core::VERSION,
            "counts": config.counts(),
            "h": h,
            "metrics": config.metrics(),
            "profile": profile,
            "stopping_law": stopping,
            "expected_next": next,
            "variances_next": moments.variances,
            "expected_norm2_sq_next": moments.expected_norm2_sq,
            "birthday_envelope": birthday,
            "leader_race_envelopes": Value::Array(races),
        })),
        Format::Csv => {
            print_table(
                &["label", "count", "adopt_prob", "expected_next", "variance_next"],
                (0..config.k()).map(|i| {
                    vec![
                        i.to_string(),
                        config.count(i).to_string(),
                        profile.adopt_prob[i].to_string(),
                        next[i].to_string(),
                        moments.variances[i].to_string(),
                    ]
                }),
            );
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {w} workers: {e}")))?;
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::Simulate { plan } => {
            let plan = load_plan(&plan, cli.seed)?;
            let sinks = SweepSinks::open(&out_dir, &plan, true)?;
            let result = run_simulation(&plan)?;
            sinks.emit(&result)?;
            report_sweep(&result.summary, cli.format)?;
        }
        Command::Sweep { plan } => {
            let plan = load_plan(&plan, cli.seed)?;
            let sinks = SweepSinks::open(&out_dir, &plan, plan.trace_stride > 0)?;
            let result = run_sweep(&plan)?;
            sinks.emit(&result)?;
            report_sweep(&result.summary, cli.format)?;
        }
        Command::Compare { plan } => {
            let plan = load_plan(&plan, cli.seed)?;
            let sinks = ComparisonSinks::open(&out_dir, &plan)?;
            let result = compare_samples(&plan)?;
            sinks.emit(&result)?;
            report_comparison(&result.report, cli.format)?;
        }
        Command::Verify { suite, instances } => {
            let suite: Suite = suite.parse()?;
            let seed = cli.seed.unwrap_or(DEFAULT_SEED);
            let reports = verify(suite, instances, seed, cli.out_dir.as_deref())?;
            report_checks(&reports, cli.format)?;
            if !reports.iter().all(CheckReport::passed) {
                return Err(Failure::Violation);
            }
        }
        Command::Exact { counts, h } => exact(counts, h, cli.format)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Violation) => {
            eprintln!("check suite reported violations");
            ExitCode::from(2)
        }
    }
}
