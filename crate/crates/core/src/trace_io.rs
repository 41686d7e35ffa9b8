//! JSON trace files and CSV export.
//!
//! A trace file holds `dim`, the `phases` of the hybrid time domain, the
//! `samples` in domain order as `{t, j, x}` records, and free-form `meta`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::{ArcError, HybridArc, HybridTimeDomain, Phase};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("trace is inconsistent: {0}")]
    Arc(#[from] ArcError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub j: usize,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub dim: usize,
    pub phases: Vec<Phase>,
    pub samples: Vec<TraceSample>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl TraceFile {
    pub fn from_arc(arc: &HybridArc, meta: serde_json::Value) -> Self {
        Self {
            dim: arc.dim(),
            phases: arc.domain().phases().to_vec(),
            samples: arc
                .points()
                .map(|p| TraceSample {
                    t: p.time.t,
                    j: p.time.j,
                    x: p.x.to_vec(),
                })
                .collect(),
            meta,
        }
    }

    pub fn to_arc(&self) -> Result<HybridArc, TraceError> {
        let domain = HybridTimeDomain::validate(self.phases.clone()).map_err(ArcError::from)?;
        Ok(HybridArc::from_flat(
            self.dim,
            domain,
            self.samples.iter().map(|s| (s.t, s.j, s.x.clone())),
        )?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(src: &str) -> Result<Self, TraceError> {
        let file: TraceFile = serde_json::from_str(src)?;
        // Validate eagerly so that a bad file fails at load time.
        file.to_arc()?;
        Ok(file)
    }
}

/// Flat CSV with header `t,j,x1,...,xn`, one row per sample.
pub fn to_csv(arc: &HybridArc) -> String {
    let mut out = String::from("t,j");
    for i in 1..=arc.dim() {
        write!(out, ",x{i}").unwrap();
    }
    out.push('\n');
    for p in arc.points() {
        write!(out, "{:?},{}", p.time.t, p.time.j).unwrap();
        for v in p.x {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}
