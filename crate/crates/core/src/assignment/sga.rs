use super::objective::{h_from_f, Coverage};
use super::{AssignmentSolution, GroundSet, RiskParams, TraceEntry, Tuple};
use crate::efficiency::EfficiencyMatrix;
use crate::error::Result;
use crate::par;

/// Sequential greedy assignment over the τ grid.
///
/// For every τ^i = iΔ the greedy runs |D| rounds, each adding the tuple with
/// the largest marginal gain in Ĥ(·, τ^i) among vehicles not yet used and
/// then retiring that vehicle. Gains tie toward the lexicographically
/// smallest tuple. A round still adds its best tuple when the gain is not
/// positive; the trace records those gains. The (S^i, τ^i) pair with the
/// largest Ĥ is returned.
pub fn sga_assign(
    ground: &GroundSet,
    matrix: &EfficiencyMatrix,
    params: &RiskParams,
) -> Result<AssignmentSolution> {
    ground.check(matrix)?;
    let tuples: Vec<Tuple> = ground.tuples().collect();
    let rows: Vec<&[f64]> = tuples
        .iter()
        .map(|&t| matrix.samples_of(t))
        .collect::<Result<_>>()?;
    let grid = params.tau_grid();
    let trace = par::map_range(grid.len(), |i| {
        greedy_at(ground, &tuples, &rows, matrix.draws(), grid[i], params.alpha)
    });
    Ok(AssignmentSolution::from_trace(trace))
}

fn greedy_at(
    ground: &GroundSet,
    tuples: &[Tuple],
    rows: &[&[f64]],
    draws: usize,
    tau: f64,
    alpha: f64,
) -> TraceEntry {
    let mut cover = Coverage::new(ground.demands, draws);
    let mut available = vec![true; ground.vehicles];
    let mut selected = Vec::new();
    let mut gains = Vec::new();
    let mut current = h_from_f(&cover.totals(), tau, alpha);

    for _ in 0..ground.demands {
        let open: Vec<usize> = (0..tuples.len())
            .filter(|&n| available[tuples[n].vehicle])
            .collect();
        if open.is_empty() {
            break;
        }
        let values = par::map_range(open.len(), |n| {
            let t = tuples[open[n]];
            h_from_f(&cover.totals_with(t.demand, rows[open[n]]), tau, alpha)
        });
        // `open` is in lexicographic order, so the first maximum wins ties.
        let mut pick = 0;
        for n in 1..values.len() {
            if values[n] > values[pick] {
                pick = n;
            }
        }
        let chosen = open[pick];
        let t = tuples[chosen];
        cover.add(t.demand, rows[chosen]);
        available[t.vehicle] = false;
        gains.push(values[pick] - current);
        current = values[pick];
        selected.push(t);
    }
    TraceEntry {
        tau,
        selected,
        h_value: current,
        gains,
    }
}
