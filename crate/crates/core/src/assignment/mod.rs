//! CVaR-aware redundant path assignment.
//!
//! The reward of an assignment set S in draw d is the total efficiency
//! f(S, d): the sum over demands of the best efficiency among tuples
//! assigned to that demand. CVaR of f is maximised through the auxiliary
//! function Ĥ(S, τ) = τ − E[(τ − f)₊] / α, searched over a τ grid with a
//! greedy set construction under a one-path-per-vehicle partition matroid.

mod brute;
mod cvar;
mod objective;
mod report;
mod sga;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::efficiency::EfficiencyMatrix;
use crate::error::{Error, Result};
use crate::planner::CandidateSet;

pub use brute::{brute_force_assign, feasible_subset_count, MAX_BRUTE_FORCE_SUBSETS};
pub use cvar::cvar_empirical;
pub use objective::{f_samples, h_from_f, h_hat, total_efficiency};
pub use report::{read_f_distribution_csv, write_f_distribution_csv, AssignmentRecord, SolutionReport, TraceRecord};
pub use sga::sga_assign;

/// One assignment: `vehicle` travels candidate `path` to `demand`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize, usize)", into = "(usize, usize, usize)")]
pub struct Tuple {
    pub vehicle: usize,
    pub demand: usize,
    pub path: usize,
}

impl Tuple {
    pub const fn new(vehicle: usize, demand: usize, path: usize) -> Self {
        Tuple {
            vehicle,
            demand,
            path,
        }
    }
}

impl From<(usize, usize, usize)> for Tuple {
    fn from((vehicle, demand, path): (usize, usize, usize)) -> Self {
        Tuple::new(vehicle, demand, path)
    }
}

impl From<Tuple> for (usize, usize, usize) {
    fn from(t: Tuple) -> Self {
        (t.vehicle, t.demand, t.path)
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.vehicle, self.demand, self.path)
    }
}

/// Dimensions of the ground set {(i, j, k)}: N vehicles, M demands, K paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundSet {
    pub vehicles: usize,
    pub demands: usize,
    pub paths: usize,
}

impl GroundSet {
    pub fn new(vehicles: usize, demands: usize, paths: usize) -> Self {
        GroundSet {
            vehicles,
            demands,
            paths,
        }
    }

    pub fn of(candidates: &CandidateSet) -> Self {
        Self::new(
            candidates.num_vehicles(),
            candidates.num_demands(),
            candidates.paths_per_pair(),
        )
    }

    /// Infers the dimensions from a matrix, which must hold the full
    /// product set.
    pub fn of_matrix(matrix: &EfficiencyMatrix) -> Result<Self> {
        let dim = |f: fn(&Tuple) -> usize| matrix.tuples().iter().map(f).max().map_or(0, |m| m + 1);
        let g = Self::new(dim(|t| t.vehicle), dim(|t| t.demand), dim(|t| t.path));
        g.check(matrix)?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.vehicles * self.demands * self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All tuples in lexicographic order.
    pub fn tuples(&self) -> impl Iterator<Item = Tuple> {
        let (m, k) = (self.demands, self.paths);
        (0..self.len()).map(move |n| Tuple::new(n / (m * k), (n / k) % m, n % k))
    }

    pub(crate) fn check(&self, matrix: &EfficiencyMatrix) -> Result<()> {
        for t in self.tuples() {
            matrix.position(t)?;
        }
        Ok(())
    }
}

/// Risk level α and the τ search grid {0, Δ, 2Δ, …, ⌈Γ/Δ⌉Δ}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// Default number of τ steps between 0 and Γ.
pub const DEFAULT_TAU_STEPS: f64 = 20.0;

impl RiskParams {
    pub fn new(alpha: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParams(format!("alpha {alpha} outside (0, 1]")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma {gamma} must be positive")));
        }
        if !(delta > 0.0 && delta <= gamma) {
            return Err(Error::InvalidParams(format!(
                "delta {delta} outside (0, gamma = {gamma}]"
            )));
        }
        Ok(RiskParams {
            alpha,
            gamma,
            delta,
        })
    }

    /// Fills in Γ = M · max efficiency (an upper bound on f, since each
    /// demand contributes at most the best efficiency) and Δ = Γ / 20.
    pub fn resolve(
        alpha: f64,
        gamma: Option<f64>,
        delta: Option<f64>,
        matrix: &EfficiencyMatrix,
        num_demands: usize,
    ) -> Result<Self> {
        let gamma = match gamma {
            Some(g) => g,
            None => {
                let g = num_demands as f64 * matrix.max_efficiency();
                if g <= 0.0 {
                    return Err(Error::InvalidParams(
                        "every sampled efficiency is zero; cannot derive gamma".into(),
                    ));
                }
                g
            }
        };
        Self::new(alpha, gamma, delta.unwrap_or(gamma / DEFAULT_TAU_STEPS))
    }

    /// Number of grid points beyond zero, ⌈Γ/Δ⌉, ignoring float noise in the
    /// ratio.
    pub fn steps(&self) -> usize {
        let ratio = self.gamma / self.delta;
        (ratio - 1e-9 * ratio.max(1.0)).ceil().max(0.0) as usize
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        (0..=self.steps()).map(|i| i as f64 * self.delta).collect()
    }
}

/// One (S^i, τ^i) pair collected during the τ search.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub tau: f64,
    pub selected: Vec<Tuple>,
    pub h_value: f64,
    /// Marginal gain of each greedy round, in selection order.
    pub gains: Vec<f64>,
}

impl TraceEntry {
    /// Rounds (0-based) whose chosen tuple had gain ≤ 0.
    pub fn nonpositive_rounds(&self) -> Vec<usize> {
        self.gains
            .iter()
            .enumerate()
            .filter(|(_, g)| **g <= 0.0)
            .map(|(n, _)| n)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentSolution {
    pub selected: Vec<Tuple>,
    pub tau_star: f64,
    pub h_value: f64,
    /// Per grid τ, in increasing τ order.
    pub trace: Vec<TraceEntry>,
}

impl AssignmentSolution {
    /// Picks the trace entry with the largest Ĥ; ties go to the smaller τ.
    pub(crate) fn from_trace(trace: Vec<TraceEntry>) -> Self {
        let mut best = 0;
        for (n, e) in trace.iter().enumerate().skip(1) {
            if e.h_value > trace[best].h_value {
                best = n;
            }
        }
        AssignmentSolution {
            selected: trace[best].selected.clone(),
            tau_star: trace[best].tau,
            h_value: trace[best].h_value,
            trace,
        }
    }

    /// Each vehicle appears at most once.
    pub fn is_feasible(&self) -> bool {
        let mut vehicles: Vec<usize> = self.selected.iter().map(|t| t.vehicle).collect();
        vehicles.sort_unstable();
        vehicles.windows(2).all(|w| w[0] != w[1])
    }
}
