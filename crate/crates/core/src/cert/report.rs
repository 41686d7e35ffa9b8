use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::exceeds_tolerance;

const MAX_LISTED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PassedOnSamples,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::PassedOnSamples => "passed_on_samples",
            Verdict::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    /// Evaluated on samples; counts toward the verdict.
    Checked,
    /// Not checkable on samples; listed so the caller can discharge it.
    Assumed,
    /// Implied by other conditions of the same report.
    Derived,
}

/// Tally of one condition. `worst_margin` is the largest observed value of
/// `lhs - rhs` (positive means violated); strict conditions `v > 0` store
/// `-v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: String,
    pub description: String,
    pub status: ConditionStatus,
    pub checked: usize,
    pub violations: usize,
    pub worst_margin: Option<f64>,
    pub violating_points: Vec<Vec<f64>>,
}

impl ConditionReport {
    pub(crate) fn checked(id: &str, description: &str) -> Self {
        Self::with_status(id, description, ConditionStatus::Checked)
    }

    pub(crate) fn with_status(id: &str, description: &str, status: ConditionStatus) -> Self {
        Self {
            id: id.to_string(),
            description: description.to_string(),
            status,
            checked: 0,
            violations: 0,
            worst_margin: None,
            violating_points: Vec::new(),
        }
    }

    fn note(&mut self, x: &[f64], margin: f64, violated: bool) {
        self.checked += 1;
        self.worst_margin = Some(match self.worst_margin {
            Some(w) if w.is_nan() || margin.is_nan() => f64::NAN,
            Some(w) => w.max(margin),
            None => margin,
        });
        if violated {
            self.violations += 1;
            if self.violating_points.len() < MAX_LISTED {
                self.violating_points.push(x.to_vec());
            }
        }
    }

    /// Records `lhs <= rhs` at `x` under the shared tolerance.
    pub(crate) fn le(&mut self, x: &[f64], lhs: f64, rhs: f64) {
        let margin = lhs - rhs;
        let scale = lhs.abs().max(rhs.abs());
        self.note(x, margin, exceeds_tolerance(margin, scale));
    }

    /// Like [`Self::le`], with an extra magnitude that the relative
    /// tolerance is taken against.
    pub(crate) fn le_scaled(&mut self, x: &[f64], lhs: f64, rhs: f64, scale: f64) {
        let margin = lhs - rhs;
        let scale = lhs.abs().max(rhs.abs()).max(scale.abs());
        self.note(x, margin, exceeds_tolerance(margin, scale));
    }

    /// Records the strict inequality `value > 0` at `x`; ties fail.
    pub(crate) fn positive(&mut self, x: &[f64], value: f64) {
        self.note(x, -value, !(value > 0.0));
    }

    /// Records a boolean requirement at `x`.
    pub(crate) fn holds(&mut self, x: &[f64], ok: bool) {
        self.note(x, if ok { 0.0 } else { 1.0 }, !ok);
    }

    pub fn passed(&self) -> bool {
        self.status != ConditionStatus::Checked || self.violations == 0
    }

    pub(crate) fn prefixed(mut self, prefix: &str) -> Self {
        self.id = format!("{prefix}{}", self.id);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub theorem: String,
    pub verdict: Verdict,
    /// Number of sampled states the sampler produced.
    pub samples: usize,
    pub conditions: Vec<ConditionReport>,
    pub parameters: BTreeMap<String, f64>,
    pub assumptions: Vec<String>,
    pub flags: Vec<String>,
}

impl CertificateReport {
    pub(crate) fn new(theorem: &str, samples: usize) -> Self {
        Self {
            theorem: theorem.to_string(),
            verdict: Verdict::PassedOnSamples,
            samples,
            conditions: Vec::new(),
            parameters: BTreeMap::new(),
            assumptions: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub(crate) fn param(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub(crate) fn assume(&mut self, text: &str) {
        self.assumptions.push(text.to_string());
    }

    pub(crate) fn flag(&mut self, name: &str) {
        if !self.flags.iter().any(|f| f == name) {
            self.flags.push(name.to_string());
        }
    }

    pub(crate) fn push(&mut self, c: ConditionReport) {
        self.conditions.push(c);
    }

    /// Sets the verdict from the conditions and flags `vacuous` when none of
    /// the `essential` conditions saw a sample.
    pub(crate) fn finish(mut self, essential: &[&str]) -> Self {
        self.verdict = if self.conditions.iter().all(ConditionReport::passed) {
            Verdict::PassedOnSamples
        } else {
            Verdict::Violated
        };
        if !essential.is_empty()
            && self
                .conditions
                .iter()
                .filter(|c| essential.contains(&c.id.as_str()))
                .all(|c| c.checked == 0)
        {
            self.flag("vacuous");
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::PassedOnSamples
    }

    pub fn condition(&self, id: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn has_flag(&self, name: &str) -> bool {
        self.flags.iter().any(|f| f == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.theorem)?;
        writeln!(f, "verdict: {} ({} sampled states)", self.verdict, self.samples)?;
        if !self.parameters.is_empty() {
            let p: Vec<String> = self
                .parameters
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            writeln!(f, "parameters: {}", p.join(", "))?;
        }
        for c in &self.conditions {
            let status = match c.status {
                ConditionStatus::Checked if c.violations == 0 => "ok",
                ConditionStatus::Checked => "FAIL",
                ConditionStatus::Assumed => "assumed",
                ConditionStatus::Derived => "derived",
            };
            write!(f, "  [{status}] {}: {}", c.id, c.description)?;
            if c.status == ConditionStatus::Checked {
                write!(f, " (checked {}, violations {}", c.checked, c.violations)?;
                if let Some(w) = c.worst_margin {
                    write!(f, ", worst margin {w:.3e}")?;
                }
                write!(f, ")")?;
                for p in &c.violating_points {
                    write!(f, "\n      at {p:?}")?;
                }
            }
            writeln!(f)?;
        }
        for a in &self.assumptions {
            writeln!(f, "  assumption: {a}")?;
        }
        if !self.flags.is_empty() {
            writeln!(f, "flags: {}", self.flags.join(", "))?;
        }
        Ok(())
    }
}
