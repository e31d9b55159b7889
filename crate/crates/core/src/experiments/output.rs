//! CSV and JSON sinks. Every CSV starts with `#` lines carrying the version
//! string and the plan echo, followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::plan::ExperimentPlan;
use super::run::{ComparisonResult, SweepResult, TrialRecord};
use crate::engines::RunOutcome;
use crate::error::{Error, Result};

pub const TRIAL_HEADER: [&str; 8] = [
    "grid_id",
    "trial",
    "seed",
    "outcome",
    "winner",
    "rounds",
    "total_samples",
    "per_node_samples",
];

pub const TRACE_HEADER: [&str; 9] = [
    "grid_id", "trial", "round", "c1", "c2", "bias", "norm2_sq", "samples", "updaters",
];

pub const COMPARISON_HEADER: [&str; 12] = [
    "grid_id",
    "trial",
    "seed",
    "dejavu_outcome",
    "dejavu_rounds",
    "dejavu_total_samples",
    "dejavu_per_node_samples",
    "hmajority_outcome",
    "hmajority_rounds",
    "hmajority_total_samples",
    "hmajority_per_node_samples",
    "ratio",
];

fn outcome_label(o: &RunOutcome) -> &'static str {
    match o {
        RunOutcome::Consensus { .. } => "consensus",
        RunOutcome::MaxRoundsExceeded => "max-rounds-exceeded",
    }
}

/// An output file created up front, so that unwritable destinations fail
/// before any simulation runs.
pub struct Sink {
    path: PathBuf,
    file: BufWriter<File>,
}

impl Sink {
    pub fn create(path: PathBuf) -> Result<Sink> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| Error::Sink {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        let file = File::create(&path).map_err(|source| Error::Sink {
            path: path.clone(),
            source,
        })?;
        Ok(Sink {
            path,
            file: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn io<T>(&self, r: std::io::Result<T>) -> Result<T> {
        r.map_err(|source| Error::Sink {
            path: self.path.clone(),
            source,
        })
    }

    fn csv_err(&self, e: csv::Error) -> Error {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Sink {
                path: self.path.clone(),
                source,
            },
            other => Error::Sink {
                path: self.path.clone(),
                source: std::io::Error::other(format!("{other:?}")),
            },
        }
    }

    /// Write the echo lines, the header and every row.
    pub fn write_csv<I, R>(mut self, plan: &ExperimentPlan, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let echo = serde_json::to_string(plan)?;
        let r = writeln!(self.file, "# {}\n# plan: {echo}", crate::VERSION);
        self.io(r)?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut self.file);
        let mut result = w.write_record(header);
        for row in rows {
            if result.is_err() {
                break;
            }
            result = w.write_record(row);
        }
        let flushed = result.and_then(|_| w.flush().map_err(csv::Error::from));
        drop(w);
        flushed.map_err(|e| self.csv_err(e))?;
        let r = self.file.flush();
        self.io(r)
    }

    /// Write `# ` prefixed `echo` lines, then `rows` with a header taken from
    /// their field names.
    pub fn write_records<T: Serialize>(mut self, echo: &[String], rows: &[T]) -> Result<()> {
        let r = writeln!(self.file, "# {}", crate::VERSION)
            .and_then(|_| echo.iter().try_for_each(|l| writeln!(self.file, "# {l}")));
        self.io(r)?;
        let mut w = csv::Writer::from_writer(&mut self.file);
        let mut result = Ok(());
        for row in rows {
            result = w.serialize(row);
            if result.is_err() {
                break;
            }
        }
        let flushed = result.and_then(|_| w.flush().map_err(csv::Error::from));
        drop(w);
        flushed.map_err(|e| self.csv_err(e))?;
        let r = self.file.flush();
        self.io(r)
    }

    pub fn write_json<T: Serialize>(mut self, value: &T) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.file, value)?;
        let r = writeln!(self.file).and_then(|_| self.file.flush());
        self.io(r)
    }
}

fn resolve(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(name)
}

fn trial_row(r: &TrialRecord) -> Vec<String> {
    vec![
        r.grid_id.to_string(),
        r.trial.to_string(),
        r.seed.to_string(),
        outcome_label(&r.outcome).to_string(),
        r.winner().map(|w| w.to_string()).unwrap_or_default(),
        r.rounds.to_string(),
        r.total_samples.to_string(),
        r.per_node_samples.to_string(),
    ]
}

fn trace_rows(r: &TrialRecord) -> impl Iterator<Item = Vec<String>> + '_ {
    r.trace.iter().map(move |t| {
        vec![
            r.grid_id.to_string(),
            r.trial.to_string(),
            t.round.to_string(),
            t.c1.to_string(),
            t.c2.to_string(),
            t.bias.to_string(),
            t.norm2_sq.to_string(),
            t.samples.to_string(),
            t.updaters.to_string(),
        ]
    })
}

/// Sinks of a sweep or simulation: per-trial CSV, optional trace CSV and
/// summary JSON.
pub struct SweepSinks {
    trials: Sink,
    trace: Option<Sink>,
    summary: Sink,
}

impl SweepSinks {
    pub fn open(out_dir: &Path, plan: &ExperimentPlan, with_trace: bool) -> Result<Self> {
        Ok(SweepSinks {
            trials: Sink::create(resolve(out_dir, &plan.outputs.trials))?,
            trace: if with_trace {
                Some(Sink::create(resolve(out_dir, &plan.outputs.trace))?)
            } else {
                None
            },
            summary: Sink::create(resolve(out_dir, &plan.outputs.summary))?,
        })
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        let mut v = vec![self.trials.path().to_path_buf()];
        v.extend(self.trace.as_ref().map(|s| s.path().to_path_buf()));
        v.push(self.summary.path().to_path_buf());
        v
    }

    pub fn emit(self, result: &SweepResult) -> Result<()> {
        let plan = &result.summary.plan;
        self.trials
            .write_csv(plan, &TRIAL_HEADER, result.trials.iter().map(trial_row))?;
        if let Some(trace) = self.trace {
            trace.write_csv(plan, &TRACE_HEADER, result.trials.iter().flat_map(trace_rows))?;
        }
        self.summary.write_json(&result.summary)
    }
}

/// Sinks of a paired comparison: per-pair CSV and summary JSON.
pub struct ComparisonSinks {
    rows: Sink,
    summary: Sink,
}

impl ComparisonSinks {
    pub fn open(out_dir: &Path, plan: &ExperimentPlan) -> Result<Self> {
        Ok(ComparisonSinks {
            rows: Sink::create(resolve(out_dir, &plan.outputs.comparison))?,
            summary: Sink::create(resolve(out_dir, &plan.outputs.summary))?,
        })
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        vec![self.rows.path().to_path_buf(), self.summary.path().to_path_buf()]
    }

    pub fn emit(self, result: &ComparisonResult) -> Result<()> {
        let rows = result.rows.iter().map(|r| {
            vec![
                r.grid_id.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                outcome_label(&r.dejavu_outcome).to_string(),
                r.dejavu_rounds.to_string(),
                r.dejavu_total_samples.to_string(),
                r.dejavu_per_node_samples.to_string(),
                outcome_label(&r.hmajority_outcome).to_string(),
                r.hmajority_rounds.to_string(),
                r.hmajority_total_samples.to_string(),
                r.hmajority_per_node_samples.to_string(),
                r.ratio().map(|x| x.to_string()).unwrap_or_default(),
            ]
        });
        self.rows.write_csv(&result.report.plan, &COMPARISON_HEADER, rows)?;
        self.summary.write_json(&result.report)
    }
}
