//! Independent oracles and instance generators shared by the integration
//! tests. Nothing here calls the code paths it is used to check.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use riskgrid::assignment::{GroundSet, Tuple};
use riskgrid::efficiency::{build_efficiency_matrix, EfficiencyMatrix};
use riskgrid::planner::generate_candidates;
use riskgrid::terrain::{
    mode_label, pixel_uncertainty, synth_scene, ClassCost, CostMapping, Pixel, Region,
    RiskCostMap, SampleStack, SceneSpec,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plain Dijkstra over the 8-connected grid with lazy deletion. Costs are
/// kept as (straight, diagonal) sums and compared as straight + √2·diagonal.
pub fn dijkstra_cost(map: &RiskCostMap, start: Pixel, goal: Pixel) -> Option<f64> {
    let (w, h) = (map.width(), map.height());
    map.get(start)?;
    map.get(goal)?;
    let mut best = vec![f64::INFINITY; w * h];
    let mut parts = vec![(0.0, 0.0); w * h];
    let mut heap = BinaryHeap::new();
    best[start.row * w + start.col] = 0.0;
    heap.push(Reverse((0u64, start.row * w + start.col)));
    while let Some(Reverse((bits, u))) = heap.pop() {
        if f64::from_bits(bits) > best[u] {
            continue;
        }
        if u == goal.row * w + goal.col {
            return Some(best[u]);
        }
        let (ur, uc) = ((u / w) as i64, (u % w) as i64);
        let cu = map.get(Pixel::new(u / w, u % w)).unwrap();
        for dr in -1..=1i64 {
            for dc in -1..=1i64 {
                let (vr, vc) = (ur + dr, uc + dc);
                if (dr, dc) == (0, 0) || vr < 0 || vc < 0 || vr >= h as i64 || vc >= w as i64 {
                    continue;
                }
                let v = vr as usize * w + vc as usize;
                let Some(cv) = map.get(Pixel::new(vr as usize, vc as usize)) else {
                    continue;
                };
                let half = (cu + cv) / 2.0;
                let (s, d) = parts[u];
                let (s, d) = if dr != 0 && dc != 0 { (s, d + half) } else { (s + half, d) };
                let total = s + SQRT_2 * d;
                if total < best[v] {
                    best[v] = total;
                    parts[v] = (s, d);
                    heap.push(Reverse((total.to_bits(), v)));
                }
            }
        }
    }
    None
}

/// Random map with integer costs 1..=9 and the given impassable fraction.
pub fn random_map(rng: &mut impl Rng, w: usize, h: usize, blocked: f64) -> RiskCostMap {
    let cost = (0..w * h)
        .map(|_| {
            if rng.gen::<f64>() < blocked {
                None
            } else {
                Some(rng.gen_range(1..=9) as f64)
            }
        })
        .collect();
    RiskCostMap::from_costs(w, h, cost).unwrap()
}

pub fn random_passable(rng: &mut impl Rng, map: &RiskCostMap) -> Pixel {
    loop {
        let p = Pixel::new(rng.gen_range(0..map.height()), rng.gen_range(0..map.width()));
        if map.get(p).is_some() {
            return p;
        }
    }
}

/// Random stack with S samples of random (non-normalised then normalised)
/// distributions.
pub fn random_stack(rng: &mut impl Rng, w: usize, h: usize, c: usize, s: usize) -> SampleStack {
    let mut probs = Vec::with_capacity(w * h * c * s);
    for _ in 0..w * h * s {
        let raw: Vec<f64> = (0..c).map(|_| rng.gen::<f64>().powi(3)).collect();
        let total: f64 = raw.iter().sum::<f64>().max(1e-9);
        probs.extend(raw.iter().map(|v| (v / total) as f32));
    }
    SampleStack::renormalized(w, h, c, s, probs, 1e-3).unwrap()
}

/// Stack from explicit per-sample, per-pixel distributions.
pub fn stack_from(w: usize, h: usize, c: usize, layers: &[Vec<Vec<f32>>]) -> SampleStack {
    let probs = layers.iter().flatten().flatten().copied().collect();
    SampleStack::new(w, h, c, layers.len(), probs).unwrap()
}

pub fn one_hot(c: usize, k: usize) -> Vec<f32> {
    (0..c).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
}

/// Population variance by the textbook two-loop formula.
pub fn variance_oracle(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Mean of the ⌈αn⌉ smallest values, by sorting.
pub fn cvar_oracle(values: &[f64], tail: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[..tail].iter().sum::<f64>() / tail as f64
}

/// f(S, d) by grouping tuples per demand and taking maxima in a loop.
pub fn f_oracle(set: &[Tuple], matrix: &EfficiencyMatrix, draw: usize) -> f64 {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for &t in set {
        let e = matrix.samples_of(t).unwrap()[draw];
        let b = best.entry(t.demand).or_insert(0.0);
        if e > *b {
            *b = e;
        }
    }
    best.values().sum()
}

pub fn h_oracle(set: &[Tuple], matrix: &EfficiencyMatrix, tau: f64, alpha: f64) -> f64 {
    let d = matrix.draws();
    let hinge: f64 = (0..d)
        .map(|k| {
            let f = f_oracle(set, matrix, k);
            if tau > f {
                tau - f
            } else {
                0.0
            }
        })
        .sum();
    tau - hinge / (alpha * d as f64)
}

pub fn demo_mapping() -> CostMapping {
    CostMapping::new(
        vec![
            ClassCost::Finite(1.0),
            ClassCost::Finite(1.0),
            ClassCost::Finite(2.0),
            ClassCost::Finite(3.0),
        ],
        0.0,
    )
    .unwrap()
}

/// A random small scene run through labels, candidates and sampling.
/// `zero_variance` uses confusion 0 everywhere.
pub fn random_instance(
    rng: &mut impl Rng,
    zero_variance: bool,
    draws: usize,
) -> (GroundSet, EfficiencyMatrix) {
    random_instance_shaped(rng, zero_variance, draws, None)
}

/// As [`random_instance`] with a fixed (N, M, K).
pub fn random_instance_shaped(
    rng: &mut impl Rng,
    zero_variance: bool,
    draws: usize,
    shape: Option<(usize, usize, usize)>,
) -> (GroundSet, EfficiencyMatrix) {
    let (w, h) = (16, 12);
    let regions = (0..rng.gen_range(2..6))
        .map(|_| {
            let (rows, cols) = (rng.gen_range(2..6), rng.gen_range(2..6));
            Region {
                row: rng.gen_range(0..h - rows),
                col: rng.gen_range(0..w - cols),
                rows,
                cols,
                class: rng.gen_range(1..4),
                confusion: if zero_variance { 0.0 } else { rng.gen_range(0.0..0.8) },
            }
        })
        .collect();
    let spec = SceneSpec {
        width: w,
        height: h,
        num_classes: 4,
        num_samples: 10,
        background_class: 0,
        background_confusion: if zero_variance { 0.0 } else { 0.05 },
        regions,
        ood: None,
    };
    let (_, stack) = synth_scene(&spec, rng.gen()).unwrap();
    let labels = mode_label(&stack);
    let variance = pixel_uncertainty(&stack);
    let (n, m, k) = match shape {
        Some(s) => s,
        None => (rng.gen_range(1..=4), rng.gen_range(1..=3), rng.gen_range(1..=2)),
    };
    let mut used = Vec::new();
    let mut pick = |rng: &mut dyn rand::RngCore| loop {
        let p = Pixel::new(rng.gen_range(0..h), rng.gen_range(0..w));
        if !used.contains(&p) {
            used.push(p);
            return p;
        }
    };
    let vehicles: Vec<Pixel> = (0..n).map(|_| pick(rng)).collect();
    let demands: Vec<Pixel> = (0..m).map(|_| pick(rng)).collect();
    let lambdas = [0.0, 30.0][..k].to_vec();
    let mapping = demo_mapping();
    let candidates =
        generate_candidates(&labels, &variance, &mapping, &lambdas, &vehicles, &demands).unwrap();
    let matrix = build_efficiency_matrix(&candidates, &stack, &mapping, draws, rng.gen()).unwrap();
    (GroundSet::of(&candidates), matrix)
}

/// Two paths to one demand: p1 always 0.5, p2 1.0 except 0.1 in one draw of
/// every twenty.
pub fn switching_matrix(draws: usize) -> EfficiencyMatrix {
    let p1 = vec![0.5; draws];
    let p2: Vec<f64> = (0..draws).map(|d| if d % 20 == 0 { 0.1 } else { 1.0 }).collect();
    EfficiencyMatrix::new(
        vec![Tuple::new(0, 0, 0), Tuple::new(0, 0, 1)],
        draws,
        p1.into_iter().chain(p2).collect(),
    )
    .unwrap()
}

/// Random efficiency matrix over a full ground set.
pub fn random_matrix(rng: &mut impl Rng, ground: GroundSet, draws: usize) -> EfficiencyMatrix {
    let tuples: Vec<Tuple> = ground.tuples().collect();
    let samples = tuples
        .iter()
        .flat_map(|_| {
            let base = rng.gen_range(0.05..1.0);
            let spread = rng.gen_range(0.0..0.5);
            (0..draws)
                .map(|_| (base * (1.0 + spread * (rng.gen::<f64>() - 0.5))).max(0.0))
                .collect::<Vec<_>>()
        })
        .collect();
    EfficiencyMatrix::new(tuples, draws, samples).unwrap()
}

/// Nearest-rank empirical quantile.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}
