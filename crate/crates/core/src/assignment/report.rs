//! JSON export of a solution and CSV export of its reward distribution.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AssignmentSolution, RiskParams, Tuple};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub vehicle: usize,
    pub demand: usize,
    pub path: usize,
    /// Risk weight the path was planned with, when known.
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tau: f64,
    pub h_value: f64,
    pub assignments: Vec<Tuple>,
    pub gains: Vec<f64>,
    pub nonpositive_gain_rounds: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub seed: Option<u64>,
    pub draws: usize,
    pub tau_star: f64,
    pub h_value: f64,
    pub assignments: Vec<AssignmentRecord>,
    pub trace: Vec<TraceRecord>,
}

impl SolutionReport {
    pub fn new(
        solution: &AssignmentSolution,
        params: &RiskParams,
        seed: Option<u64>,
        draws: usize,
        lambdas: Option<&[f64]>,
    ) -> Self {
        SolutionReport {
            alpha: params.alpha,
            gamma: params.gamma,
            delta: params.delta,
            seed,
            draws,
            tau_star: solution.tau_star,
            h_value: solution.h_value,
            assignments: solution
                .selected
                .iter()
                .map(|t| AssignmentRecord {
                    vehicle: t.vehicle,
                    demand: t.demand,
                    path: t.path,
                    lambda: lambdas.and_then(|l| l.get(t.path).copied()),
                })
                .collect(),
            trace: solution
                .trace
                .iter()
                .map(|e| TraceRecord {
                    tau: e.tau,
                    h_value: e.h_value,
                    assignments: e.selected.clone(),
                    gains: e.gains.clone(),
                    nonpositive_gain_rounds: e.nonpositive_rounds(),
                })
                .collect(),
        }
    }

    pub fn selected(&self) -> Vec<Tuple> {
        self.assignments
            .iter()
            .map(|a| Tuple::new(a.vehicle, a.demand, a.path))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("assignment json", e))
    }

    pub fn write(&self, file: impl AsRef<Path>) -> Result<()> {
        let file = file.as_ref();
        fs::write(file, self.to_json()).map_err(|e| Error::io(file, e))
    }

    pub fn read(file: impl AsRef<Path>) -> Result<Self> {
        let file = file.as_ref();
        Self::from_json(&fs::read_to_string(file).map_err(|e| Error::io(file, e))?)
    }
}

/// `draw,f` rows for histogramming the reward of a chosen assignment.
pub fn write_f_distribution_csv(file: impl AsRef<Path>, f: &[f64]) -> Result<()> {
    let mut out = String::from("draw,f\n");
    for (d, v) in f.iter().enumerate() {
        writeln!(out, "{d},{v}").unwrap();
    }
    let file = file.as_ref();
    fs::write(file, out).map_err(|e| Error::io(file, e))
}

pub fn read_f_distribution_csv(file: impl AsRef<Path>) -> Result<Vec<f64>> {
    let file = file.as_ref();
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, h)| h.trim()) != Some("draw,f") {
        return Err(Error::parse(file.display().to_string(), "expected header draw,f"));
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let ctx = format!("{}:{}", file.display(), n + 1);
        let (d, v) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(&ctx, "expected draw,f"))?;
        let d: usize = d.trim().parse().map_err(|e| Error::parse(&ctx, e))?;
        if d != out.len() {
            return Err(Error::parse(&ctx, format!("draw {d} out of order")));
        }
        out.push(v.trim().parse().map_err(|e| Error::parse(&ctx, e))?);
    }
    Ok(out)
}
