use serde::{Deserialize, Serialize};

/// Violations kept per sub-check in a report.
const MAX_DETAILS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    pub name: String,
    pub evaluated: u64,
    pub violations: u64,
    /// Smallest observed margin; negative beyond the tolerance is a violation.
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sub_check: String,
    pub instance: String,
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub version: String,
    pub instances_tested: u64,
    pub violations: u64,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub statistical: bool,
    pub confidence: Option<f64>,
    pub trials: Option<u64>,
    pub sub_checks: Vec<SubCheck>,
    pub details: Vec<Violation>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn sub_check(&self, name: &str) -> Option<&SubCheck> {
        self.sub_checks.iter().find(|s| s.name == name)
    }

    pub fn one_line(&self) -> String {
        format!(
            "{}: {} ({} instances, {} violations, worst margin {:.3e})",
            self.check_name,
            if self.passed() { "pass" } else { "FAIL" },
            self.instances_tested,
            self.violations,
            self.worst_margin
        )
    }
}

/// How the gap between the two sides of an inequality is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slack {
    /// `rhs - lhs`; used for probability-scale quantities.
    Absolute,
    /// `(rhs - lhs) / max(|lhs|, |rhs|)`; used for ratios and counts.
    Relative,
}

/// Handle to a declared sub-check of a [`Tally`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubId(usize);

/// Accumulates inequality evaluations for one check.
#[derive(Clone, Debug)]
pub struct Tally {
    tolerance: f64,
    instances: u64,
    subs: Vec<SubCheck>,
    details: Vec<Violation>,
}

impl Tally {
    pub fn new(tolerance: f64) -> Self {
        Tally {
            tolerance,
            instances: 0,
            subs: Vec::new(),
            details: Vec::new(),
        }
    }

    pub fn instance(&mut self) {
        self.instances += 1;
    }

    fn slot(&mut self, name: &str) -> usize {
        match self.subs.iter().position(|s| s.name == name) {
            Some(i) => i,
            None => {
                self.subs.push(SubCheck {
                    name: name.to_string(),
                    evaluated: 0,
                    violations: 0,
                    worst_margin: f64::INFINITY,
                });
                self.subs.len() - 1
            }
        }
    }

    /// Register a sub-check and get its handle for recording.
    pub fn declare(&mut self, name: &str) -> SubId {
        SubId(self.slot(name))
    }

    fn record(
        &mut self,
        id: SubId,
        lhs: f64,
        rhs: f64,
        margin: f64,
        violated: bool,
        context: impl FnOnce() -> String,
    ) {
        let s = &mut self.subs[id.0];
        s.evaluated += 1;
        if margin < s.worst_margin || margin.is_nan() {
            s.worst_margin = margin;
        }
        if violated {
            s.violations += 1;
            if s.violations as usize <= MAX_DETAILS {
                let sub_check = s.name.clone();
                self.details.push(Violation {
                    sub_check,
                    instance: context(),
                    observed: lhs,
                    bound: rhs,
                    margin,
                });
            }
        }
    }

    fn margin(lhs: f64, rhs: f64, slack: Slack) -> f64 {
        match slack {
            Slack::Absolute => rhs - lhs,
            Slack::Relative => {
                let scale = lhs.abs().max(rhs.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (rhs - lhs) / scale
                }
            }
        }
    }

    /// Assert `lhs <= rhs` up to the tolerance.
    pub fn le(&mut self, id: SubId, lhs: f64, rhs: f64, slack: Slack, context: impl FnOnce() -> String) {
        let m = Self::margin(lhs, rhs, slack);
        let bad = !(m >= -self.tolerance);
        self.record(id, lhs, rhs, m, bad, context);
    }

    /// Assert `lhs >= rhs` up to the tolerance.
    pub fn ge(&mut self, id: SubId, lhs: f64, rhs: f64, slack: Slack, context: impl FnOnce() -> String) {
        let m = Self::margin(rhs, lhs, slack);
        let bad = !(m >= -self.tolerance);
        self.record(id, lhs, rhs, m, bad, context);
    }

    /// Assert `lhs > rhs` strictly, with no tolerance.
    pub fn gt(&mut self, id: SubId, lhs: f64, rhs: f64, context: impl FnOnce() -> String) {
        let m = Self::margin(rhs, lhs, Slack::Relative);
        let bad = !(lhs > rhs);
        self.record(id, lhs, rhs, m, bad, context);
    }

    /// Record a pre-computed margin; a violation when below `-tolerance`.
    pub fn check_margin(&mut self, id: SubId, observed: f64, bound: f64, margin: f64, context: impl FnOnce() -> String) {
        let bad = !(margin >= -self.tolerance);
        self.record(id, observed, bound, margin, bad, context);
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.instances += other.instances;
        for s in other.subs {
            let i = self.slot(&s.name);
            let mine = &mut self.subs[i];
            mine.evaluated += s.evaluated;
            mine.violations += s.violations;
            if s.worst_margin < mine.worst_margin || s.worst_margin.is_nan() {
                mine.worst_margin = s.worst_margin;
            }
        }
        for d in other.details {
            let kept = self.details.iter().filter(|x| x.sub_check == d.sub_check).count();
            if kept < MAX_DETAILS {
                self.details.push(d);
            }
        }
        self
    }

    pub fn into_report(self, check_name: &str) -> CheckReport {
        let violations = self.subs.iter().map(|s| s.violations).sum();
        let worst_margin = self
            .subs
            .iter()
            .filter(|s| s.evaluated > 0)
            .map(|s| s.worst_margin)
            .fold(f64::INFINITY, f64::min);
        CheckReport {
            check_name: check_name.to_string(),
            version: crate::VERSION.to_string(),
            instances_tested: self.instances,
            violations,
            worst_margin,
            tolerance: self.tolerance,
            statistical: false,
            confidence: None,
            trials: None,
            sub_checks: self.subs,
            details: self.details,
            notes: Vec::new(),
        }
    }
}
