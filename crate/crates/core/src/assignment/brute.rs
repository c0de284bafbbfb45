use super::objective::{h_from_f, Coverage};
use super::{AssignmentSolution, GroundSet, RiskParams, TraceEntry, Tuple};
use crate::efficiency::EfficiencyMatrix;
use crate::error::{Error, Result};

pub const MAX_BRUTE_FORCE_SUBSETS: u128 = 10_000_000;

/// Number of vehicle-disjoint subsets with at most M tuples:
/// Σ_{m=0..min(N,M)} C(N, m)·(M·K)^m.
pub fn feasible_subset_count(ground: &GroundSet) -> u128 {
    let per_vehicle = (ground.demands * ground.paths) as u128;
    let mut total = 0u128;
    let mut choose = 1u128;
    for m in 0..=ground.vehicles.min(ground.demands) {
        if m > 0 {
            choose = choose * (ground.vehicles - m + 1) as u128 / m as u128;
        }
        total = total.saturating_add(choose.saturating_mul(per_vehicle.saturating_pow(m as u32)));
    }
    total
}

/// Exhaustive maximiser of Ĥ over every feasible subset and every grid τ.
/// The trace holds, per τ, the best subset at that τ; ties keep the subset
/// enumerated first.
pub fn brute_force_assign(
    ground: &GroundSet,
    matrix: &EfficiencyMatrix,
    params: &RiskParams,
) -> Result<AssignmentSolution> {
    let count = feasible_subset_count(ground);
    if count > MAX_BRUTE_FORCE_SUBSETS {
        return Err(Error::InstanceTooLarge(count));
    }
    ground.check(matrix)?;
    let grid = params.tau_grid();
    let mut best: Vec<Option<(f64, Vec<Tuple>)>> = vec![None; grid.len()];

    // Odometer over per-vehicle choices: 0 = unassigned, 1 + j·K + k.
    let options = ground.demands * ground.paths + 1;
    let mut choice = vec![0usize; ground.vehicles];
    loop {
        let set: Vec<Tuple> = choice
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| Tuple::new(i, (c - 1) / ground.paths, (c - 1) % ground.paths))
            .collect();
        if set.len() <= ground.demands {
            let mut cover = Coverage::new(ground.demands, matrix.draws());
            for &t in &set {
                cover.add(t.demand, matrix.samples_of(t)?);
            }
            let f = cover.totals();
            for (slot, &tau) in best.iter_mut().zip(&grid) {
                let h = h_from_f(&f, tau, params.alpha);
                if slot.as_ref().is_none_or(|(b, _)| h > *b) {
                    *slot = Some((h, set.clone()));
                }
            }
        }
        // Advance the odometer; stop after the last combination.
        let mut v = 0;
        loop {
            if v == choice.len() {
                let trace = best
                    .into_iter()
                    .zip(&grid)
                    .map(|(b, &tau)| {
                        let (h_value, selected) = b.expect("empty set is always feasible");
                        TraceEntry {
                            tau,
                            selected,
                            h_value,
                            gains: Vec::new(),
                        }
                    })
                    .collect();
                return Ok(AssignmentSolution::from_trace(trace));
            }
            choice[v] += 1;
            if choice[v] < options {
                break;
            }
            choice[v] = 0;
            v += 1;
        }
    }
}
