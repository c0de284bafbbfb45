use std::collections::BTreeMap;

use super::Tuple;
use crate::efficiency::EfficiencyMatrix;
use crate::error::{Error, Result};

/// f(S, d): sum over demands of the best draw-d efficiency among the tuples
/// of S serving that demand. The empty set scores 0.
pub fn total_efficiency(set: &[Tuple], matrix: &EfficiencyMatrix, draw: usize) -> Result<f64> {
    if draw >= matrix.draws() {
        return Err(Error::DimensionMismatch(format!(
            "draw {draw} outside {} draws",
            matrix.draws()
        )));
    }
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for &t in set {
        let e = matrix.get(t, draw)?;
        let slot = best.entry(t.demand).or_insert(0.0);
        *slot = slot.max(e);
    }
    Ok(best.values().sum())
}

/// f(S, d) for every draw.
pub fn f_samples(set: &[Tuple], matrix: &EfficiencyMatrix) -> Result<Vec<f64>> {
    let demands = set.iter().map(|t| t.demand + 1).max().unwrap_or(0);
    let mut cover = Coverage::new(demands, matrix.draws());
    for &t in set {
        cover.add(t.demand, matrix.samples_of(t)?);
    }
    Ok(cover.totals())
}

/// Sample estimate of τ − E[(τ − f)₊] / α from per-draw rewards.
pub fn h_from_f(f: &[f64], tau: f64, alpha: f64) -> f64 {
    let hinge: f64 = f.iter().map(|&v| (tau - v).max(0.0)).sum();
    tau - hinge / (alpha * f.len() as f64)
}

/// Ĥ(S, τ) over all draws of the matrix.
pub fn h_hat(set: &[Tuple], tau: f64, matrix: &EfficiencyMatrix, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha {alpha} outside (0, 1]")));
    }
    Ok(h_from_f(&f_samples(set, matrix)?, tau, alpha))
}

/// Per-demand, per-draw best efficiency of a partial assignment.
#[derive(Clone, Debug)]
pub(crate) struct Coverage {
    demands: usize,
    draws: usize,
    best: Vec<f64>,
}

impl Coverage {
    pub(crate) fn new(demands: usize, draws: usize) -> Self {
        Coverage {
            demands,
            draws,
            best: vec![0.0; demands * draws],
        }
    }

    pub(crate) fn add(&mut self, demand: usize, row: &[f64]) {
        let slot = &mut self.best[demand * self.draws..(demand + 1) * self.draws];
        for (b, &e) in slot.iter_mut().zip(row) {
            *b = b.max(e);
        }
    }

    fn total_at(&self, draw: usize, extra: Option<(usize, f64)>) -> f64 {
        (0..self.demands)
            .map(|j| {
                let b = self.best[j * self.draws + draw];
                match extra {
                    Some((demand, e)) if demand == j => b.max(e),
                    _ => b,
                }
            })
            .sum()
    }

    pub(crate) fn totals(&self) -> Vec<f64> {
        (0..self.draws).map(|d| self.total_at(d, None)).collect()
    }

    /// Totals if `row` were added for `demand`, without mutating.
    pub(crate) fn totals_with(&self, demand: usize, row: &[f64]) -> Vec<f64> {
        (0..self.draws)
            .map(|d| self.total_at(d, Some((demand, row[d]))))
            .collect()
    }
}
