//! Report containers and JSON/CSV rendering.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Experiment, Outcome};
use crate::calculus::DiffPair;
use crate::error::{Error, Result};
use crate::quadrature::{ShellIntegral, Verdict};
use crate::spaces::{LevelSetReport, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = Outcome>) -> Self {
        let mut s = Summary { total: 0, passed: 0, failed: 0, inconclusive: 0 };
        for o in outcomes {
            s.total += 1;
            match o {
                Outcome::Pass => s.passed += 1,
                Outcome::Fail => s.failed += 1,
                Outcome::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }

    /// 0 when everything passed, 1 on any failure, 2 when the only problems
    /// are inconclusive rows.
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            1
        } else if self.inconclusive > 0 {
            2
        } else {
            0
        }
    }
}

/// Full output of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport<C, R> {
    pub experiment: Experiment,
    pub config: C,
    pub rows: Vec<R>,
    pub summary: Summary,
}

pub trait HasOutcome {
    fn outcome(&self) -> Outcome;
}

impl<C: Serialize, R: Serialize + HasOutcome> ExperimentReport<C, R> {
    pub fn new(experiment: Experiment, config: C, rows: Vec<R>) -> Self {
        let summary = Summary::from_outcomes(rows.iter().map(HasOutcome::outcome));
        Self { experiment, config, rows, summary }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// One CSV line per row; nested objects become dotted columns and
    /// arrays are embedded as JSON text.
    pub fn to_csv(&self) -> Result<String> {
        let rows = self
            .rows
            .iter()
            .map(|r| serde_json::to_value(r).map(|v| flatten(&v)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut headers: Vec<String> = Vec::new();
        for row in &rows {
            for (k, _) in row {
                if !headers.contains(k) {
                    headers.push(k.clone());
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(&headers).map_err(csv_err)?;
        for row in &rows {
            let record = headers.iter().map(|h| row.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or(""));
            w.write_record(record).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

fn flatten(v: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    flatten_into("", v, &mut out);
    out
}

fn flatten_into(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&key, x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub j: usize,
    pub increment: f64,
    pub partial: f64,
}

/// Shell-by-shell record of one finiteness check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellReport {
    pub spec: SpaceKind,
    pub pair: DiffPair,
    pub shells: Vec<ShellRow>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
}

impl ShellReport {
    pub fn from_integral(spec: SpaceKind, pair: DiffPair, integral: &ShellIntegral) -> Self {
        let shells = integral
            .increments
            .iter()
            .zip(&integral.partial)
            .enumerate()
            .map(|(j, (&increment, &partial))| ShellRow { j, increment, partial })
            .collect();
        Self { spec, pair, shells, verdict: integral.verdict, epsilon: None }
    }

    pub fn from_level_set(alpha: f64, report: &LevelSetReport) -> Self {
        let shells = report.shells.iter().map(|s| ShellRow { j: s.j, increment: s.increment, partial: s.partial }).collect();
        Self {
            spec: SpaceKind::Bloch { alpha },
            pair: report.pair,
            shells,
            verdict: report.verdict,
            epsilon: Some(report.epsilon),
        }
    }
}
