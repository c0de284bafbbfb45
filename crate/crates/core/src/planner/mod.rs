//! Grid path planning on risk cost maps.
//!
//! Paths are 8-connected. An edge between neighbouring pixels u and v costs
//! `(c(u) + c(v)) / 2`, times √2 on diagonals. Costs are accumulated as a
//! straight part and a diagonal part and combined as `straight + √2 * diagonal`,
//! so equal-cost routes evaluate to the same float regardless of edge order.

mod candidates;
mod export;
mod surprise;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::terrain::{Pixel, RiskCostMap};

pub use candidates::{generate_candidates, CandidateSet};
pub use export::{read_path_csv, render_svg, write_path_csv, PathRecord};
pub use surprise::{surprise, PixelSurprise, Surprise};

/// An 8-connected, loop-free pixel route from start to goal.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    pixels: Vec<Pixel>,
    planned_cost: f64,
    lambda: f64,
}

impl GridPath {
    /// Checks connectivity and that no pixel repeats.
    pub fn new(pixels: Vec<Pixel>, planned_cost: f64, lambda: f64) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::parse("path", "path has no pixels"));
        }
        for w in pixels.windows(2) {
            if !adjacent(w[0], w[1]) {
                return Err(Error::parse(
                    "path",
                    format!("{} and {} are not 8-adjacent", w[0], w[1]),
                ));
            }
        }
        let mut seen = pixels.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::parse("path", "path revisits a pixel"));
        }
        Ok(GridPath {
            pixels,
            planned_cost,
            lambda,
        })
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn start(&self) -> Pixel {
        self.pixels[0]
    }

    pub fn goal(&self) -> Pixel {
        *self.pixels.last().unwrap()
    }

    pub fn planned_cost(&self) -> f64 {
        self.planned_cost
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

pub(crate) fn adjacent(a: Pixel, b: Pixel) -> bool {
    a != b && a.row.abs_diff(b.row) <= 1 && a.col.abs_diff(b.col) <= 1
}

/// Running path cost split into straight and diagonal edge sums.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeCost {
    pub straight: f64,
    pub diagonal: f64,
}

impl EdgeCost {
    pub fn total(self) -> f64 {
        self.straight + SQRT_2 * self.diagonal
    }

    /// Adds the edge from `a` (cost `ca`) to its neighbour `b` (cost `cb`).
    pub fn step(self, a: Pixel, b: Pixel, ca: f64, cb: f64) -> Self {
        let half = (ca + cb) / 2.0;
        if a.row != b.row && a.col != b.col {
            EdgeCost {
                diagonal: self.diagonal + half,
                ..self
            }
        } else {
            EdgeCost {
                straight: self.straight + half,
                ..self
            }
        }
    }
}

/// Cost of a pixel sequence under the planner's edge weighting, or `None` as
/// soon as `cost` reports an impassable pixel.
pub fn weighted_path_cost(
    pixels: &[Pixel],
    mut cost: impl FnMut(Pixel) -> Option<f64>,
) -> Option<f64> {
    let mut acc = EdgeCost::default();
    let mut prev = cost(*pixels.first()?)?;
    for w in pixels.windows(2) {
        let next = cost(w[1])?;
        acc = acc.step(w[0], w[1], prev, next);
        prev = next;
    }
    Some(acc.total())
}

/// The 8-neighbourhood of `p` inside a `height` x `width` grid, in row-major
/// order.
pub(crate) fn neighbours(p: Pixel, height: usize, width: usize) -> impl Iterator<Item = Pixel> {
    let rows = p.row.saturating_sub(1)..=(p.row + 1).min(height - 1);
    rows.flat_map(move |r| {
        let cols = p.col.saturating_sub(1)..=(p.col + 1).min(width - 1);
        cols.map(move |c| Pixel::new(r, c))
    })
    .filter(move |&q| q != p)
}

fn octile(a: Pixel, b: Pixel) -> f64 {
    let dr = a.row.abs_diff(b.row) as f64;
    let dc = a.col.abs_diff(b.col) as f64;
    let (lo, hi) = if dr < dc { (dr, dc) } else { (dc, dr) };
    (hi - lo) + SQRT_2 * lo
}

#[derive(Debug)]
struct Frontier {
    f: f64,
    h: f64,
    g: f64,
    index: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // BinaryHeap is a max-heap: reverse so the smallest f (then h, then
    // row-major index) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.index.cmp(&self.index))
            .then_with(|| other.g.total_cmp(&self.g))
    }
}

/// Minimum-cost 8-connected path from `start` to `goal`.
///
/// The heuristic is octile distance times the cheapest finite pixel cost,
/// which never overestimates. Nodes are reopened if a cheaper route turns up,
/// so the result is optimal even when rounding breaks consistency.
pub fn astar(map: &RiskCostMap, start: Pixel, goal: Pixel) -> Result<GridPath> {
    for p in [start, goal] {
        if !map.is_passable(p) {
            return Err(Error::InvalidEndpoint(p));
        }
    }
    let (w, h) = (map.width(), map.height());
    let cost = map.raw();
    let min_cost = map.min_finite().expect("start is passable");
    let heuristic = |p: Pixel| min_cost * octile(p, goal);
    let index = |p: Pixel| p.row * w + p.col;
    let pixel = |i: usize| Pixel::new(i / w, i % w);

    let mut best = vec![EdgeCost::default(); w * h];
    let mut g_total = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut open = BinaryHeap::new();

    g_total[index(start)] = 0.0;
    let h0 = heuristic(start);
    open.push(Frontier {
        f: h0,
        h: h0,
        g: 0.0,
        index: index(start),
    });

    while let Some(Frontier { g, index: u, .. }) = open.pop() {
        if g > g_total[u] {
            continue;
        }
        let up = pixel(u);
        if up == goal {
            let mut route = vec![goal];
            let mut at = u;
            while parent[at] != usize::MAX {
                at = parent[at];
                route.push(pixel(at));
            }
            route.reverse();
            return GridPath::new(route, g_total[u], map.lambda());
        }
        for vp in neighbours(up, h, w) {
            let v = index(vp);
            if !cost[v].is_finite() {
                continue;
            }
            let next = best[u].step(up, vp, cost[u], cost[v]);
            let total = next.total();
            if total < g_total[v] {
                best[v] = next;
                g_total[v] = total;
                parent[v] = u;
                let hv = heuristic(vp);
                open.push(Frontier {
                    f: total + hv,
                    h: hv,
                    g: total,
                    index: v,
                });
            }
        }
    }
    Err(Error::NoPath { start, goal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(w: usize, h: usize, c: f64) -> RiskCostMap {
        RiskCostMap::from_costs(w, h, vec![Some(c); w * h]).unwrap()
    }

    #[test]
    fn start_equals_goal() {
        let map = uniform(3, 3, 1.0);
        let p = astar(&map, Pixel::new(1, 1), Pixel::new(1, 1)).unwrap();
        assert_eq!(p.pixels(), &[Pixel::new(1, 1)]);
        assert_eq!(p.planned_cost(), 0.0);
    }

    #[test]
    fn corridor_cost_is_edge_count() {
        let map = uniform(5, 1, 1.0);
        let p = astar(&map, Pixel::new(0, 0), Pixel::new(0, 4)).unwrap();
        assert_eq!(p.pixels().len(), 5);
        assert_eq!(p.planned_cost(), 4.0);
    }

    #[test]
    fn enclosed_goal_has_no_path() {
        let mut cost = vec![Some(1.0); 25];
        for r in 1..4 {
            for c in 1..4 {
                if (r, c) != (2, 2) {
                    cost[r * 5 + c] = None;
                }
            }
        }
        let map = RiskCostMap::from_costs(5, 5, cost).unwrap();
        let err = astar(&map, Pixel::new(0, 0), Pixel::new(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NoPath { .. }));
    }

    #[test]
    fn impassable_or_outside_endpoint_rejected() {
        let mut cost = vec![Some(1.0); 9];
        cost[4] = None;
        let map = RiskCostMap::from_costs(3, 3, cost).unwrap();
        assert!(matches!(
            astar(&map, Pixel::new(1, 1), Pixel::new(0, 0)),
            Err(Error::InvalidEndpoint(_))
        ));
        assert!(matches!(
            astar(&map, Pixel::new(0, 0), Pixel::new(3, 0)),
            Err(Error::InvalidEndpoint(_))
        ));
    }

    #[test]
    fn diagonal_costs_root_two() {
        let map = uniform(3, 3, 2.0);
        let p = astar(&map, Pixel::new(0, 0), Pixel::new(2, 2)).unwrap();
        assert_eq!(p.pixels().len(), 3);
        assert_eq!(p.planned_cost(), SQRT_2 * 4.0);
    }

    #[test]
    fn planned_cost_matches_weighted_sum() {
        let cost: Vec<_> = (0..64).map(|i| Some(1.0 + (i % 7) as f64)).collect();
        let map = RiskCostMap::from_costs(8, 8, cost).unwrap();
        let p = astar(&map, Pixel::new(0, 0), Pixel::new(7, 5)).unwrap();
        let again = weighted_path_cost(p.pixels(), |q| map.get(q)).unwrap();
        assert_eq!(again, p.planned_cost());
    }

    #[test]
    fn grid_path_rejects_gaps_and_loops() {
        let gap = vec![Pixel::new(0, 0), Pixel::new(0, 2)];
        assert!(GridPath::new(gap, 1.0, 0.0).is_err());
        let lp = vec![Pixel::new(0, 0), Pixel::new(0, 1), Pixel::new(0, 0)];
        assert!(GridPath::new(lp, 1.0, 0.0).is_err());
    }
}
