//! Self-describing JSON documents and CSV tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::harness::{AnticoncentrationTable, DiscretizationRow, SizeDerivReport};
use crate::prg::Provenance;

/// Version of the JSON layout written by every command.
pub const SCHEMA_VERSION: u32 = 1;

pub const TOOL: &str = "ptfprg";

/// Leading block of every output: what produced it and from which inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub command: String,
    /// Effective configuration after file values and flag overrides.
    pub config: BTreeMap<String, String>,
    pub master_seed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<BTreeMap<String, Provenance>>,
}

impl Header {
    pub fn new(command: &str, config: BTreeMap<String, String>, master_seed: &str) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            master_seed: master_seed.into(),
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, provenance: BTreeMap<String, Provenance>) -> Self {
        self.provenance = Some(provenance);
        self
    }
}

/// A header followed by a command-specific body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub header: Header,
    pub body: T,
}

impl<T: Serialize> Document<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report types serialize")
    }
}

/// One lab check: what was measured, against what, and the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    /// Absent for quantities that are recorded rather than bounded.
    pub threshold: Option<f64>,
    pub verdict: bool,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub detail: serde_json::Value,
}

fn csv(headers: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = headers.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn anticoncentration_csv(tables: &[AnticoncentrationTable]) -> String {
    csv(
        &["id", "degree", "eps", "freq", "stderr", "ratio", "bound"],
        tables.iter().flat_map(|t| {
            t.rows.iter().map(move |r| {
                vec![
                    t.id.clone(),
                    t.degree.to_string(),
                    r.eps.to_string(),
                    r.freq.value.to_string(),
                    r.freq.stderr.to_string(),
                    r.ratio.to_string(),
                    opt(r.bound),
                ]
            })
        }),
    )
}

pub fn discretization_csv(rows: &[DiscretizationRow]) -> String {
    csv(
        &["M", "c0", "delta", "freq", "stderr", "pass"],
        rows.iter().map(|r| {
            vec![
                r.precision.to_string(),
                r.c0.to_string(),
                r.delta.to_string(),
                r.freq.value.to_string(),
                r.freq.stderr.to_string(),
                r.pass.to_string(),
            ]
        }),
    )
}

pub fn size_vs_derivative_csv(report: &SizeDerivReport) -> String {
    csv(
        &["id", "degree", "eps", "theta", "freq", "stderr", "ratio"],
        report.rows.iter().map(|r| {
            vec![
                r.id.clone(),
                r.degree.to_string(),
                r.eps.to_string(),
                r.theta.to_string(),
                r.freq.value.to_string(),
                r.freq.stderr.to_string(),
                r.ratio.to_string(),
            ]
        }),
    )
}
