mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use riskgrid::assignment::Tuple;
use riskgrid::planner::{
    astar, generate_candidates, read_path_csv, surprise, weighted_path_cost, write_path_csv,
    GridPath,
};
use riskgrid::terrain::{
    build_cost_map, mode_label, pixel_uncertainty, synth_scene, ClassCost, CostMapping, LabelMap,
    Pixel, RiskCostMap, SceneSpec, VarianceMap,
};
use riskgrid::Error;

fn adjacent(a: Pixel, b: Pixel) -> bool {
    a != b && a.row.abs_diff(b.row) <= 1 && a.col.abs_diff(b.col) <= 1
}

fn assert_valid(path: &GridPath, map: &RiskCostMap, start: Pixel, goal: Pixel) {
    let px = path.pixels();
    assert_eq!(px[0], start);
    assert_eq!(*px.last().unwrap(), goal);
    assert!(px.windows(2).all(|w| adjacent(w[0], w[1])));
    let mut seen = px.to_vec();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), px.len());
    assert!(px.iter().all(|&p| map.is_passable(p)));
}

#[test]
fn corridor_matches_dijkstra() {
    let map = RiskCostMap::from_costs(5, 1, vec![Some(1.0); 5]).unwrap();
    let (s, g) = (Pixel::new(0, 0), Pixel::new(0, 4));
    let path = astar(&map, s, g).unwrap();
    assert_eq!(path.pixels().len(), 5);
    assert_eq!(path.planned_cost(), 4.0);
    assert_eq!(dijkstra_cost(&map, s, g), Some(4.0));
}

#[test]
fn start_equals_goal() {
    let map = RiskCostMap::from_costs(3, 3, vec![Some(2.0); 9]).unwrap();
    let p = Pixel::new(1, 1);
    let path = astar(&map, p, p).unwrap();
    assert_eq!(path.pixels(), &[p]);
    assert_eq!(path.planned_cost(), 0.0);
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
    assert!(matches!(
        astar(&map, Pixel::new(0, 0), Pixel::new(2, 2)),
        Err(Error::NoPath { .. })
    ));
    assert_eq!(dijkstra_cost(&map, Pixel::new(0, 0), Pixel::new(2, 2)), None);
}

#[test]
fn invalid_endpoints() {
    let map = RiskCostMap::from_costs(2, 1, vec![Some(1.0), None]).unwrap();
    assert!(matches!(
        astar(&map, Pixel::new(0, 0), Pixel::new(0, 1)),
        Err(Error::InvalidEndpoint(_))
    ));
    assert!(matches!(
        astar(&map, Pixel::new(0, 0), Pixel::new(3, 0)),
        Err(Error::InvalidEndpoint(_))
    ));
}

#[test]
fn planned_cost_is_the_weighted_sum() {
    let mut r = rng(11);
    for _ in 0..100 {
        let map = random_map(&mut r, 16, 16, 0.15);
        let (s, g) = (random_passable(&mut r, &map), random_passable(&mut r, &map));
        if let Ok(path) = astar(&map, s, g) {
            assert_valid(&path, &map, s, g);
            assert_eq!(weighted_path_cost(path.pixels(), |p| map.get(p)), Some(path.planned_cost()));
        }
    }
}

#[test]
fn path_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let map = random_map(&mut rng(12), 10, 10, 0.0).with_lambda(12.5);
    let path = astar(&map, Pixel::new(0, 0), Pixel::new(9, 6)).unwrap();
    let file = dir.path().join("p.csv");
    let t = Tuple::new(2, 1, 0);
    write_path_csv(&file, t, &path).unwrap();
    let rec = read_path_csv(&file).unwrap();
    assert_eq!(rec.tuple, t);
    assert_eq!(rec.path, path);
    assert_eq!(rec.path.lambda(), 12.5);
}

fn demo_inputs() -> (LabelMap, VarianceMap) {
    let (_, stack) = synth_scene(&SceneSpec::demo(), 7).unwrap();
    (mode_label(&stack), pixel_uncertainty(&stack))
}

#[test]
fn candidates_shape_and_lambda_order() {
    let (labels, variance) = demo_inputs();
    let vehicles = vec![Pixel::new(24, 4), Pixel::new(18, 3), Pixel::new(40, 8)];
    let demands = vec![Pixel::new(24, 58), Pixel::new(30, 57)];
    let set = generate_candidates(&labels, &variance, &demo_mapping(), &[10.0, 50.0], &vehicles, &demands)
        .unwrap();
    assert_eq!(set.len(), 12);
    assert_eq!(set.tuples().count(), 12);
    for (t, path) in set.iter() {
        assert_eq!(path.start(), vehicles[t.vehicle]);
        assert_eq!(path.goal(), demands[t.demand]);
        assert_eq!(path.lambda(), [10.0, 50.0][t.path]);
    }
}

#[test]
fn lambda_zero_on_zero_variance_is_plain_shortest_path() {
    let (labels, _) = demo_inputs();
    let zero = VarianceMap::uniform(labels.width(), labels.height(), 0.0).unwrap();
    let (v, d) = (Pixel::new(24, 4), Pixel::new(24, 58));
    let set = generate_candidates(&labels, &zero, &demo_mapping(), &[0.0], &[v], &[d]).unwrap();
    let plain = build_cost_map(&labels, &zero, &demo_mapping()).unwrap();
    assert_eq!(
        set.get(Tuple::new(0, 0, 0)).planned_cost(),
        dijkstra_cost(&plain, v, d).unwrap()
    );
}

#[test]
fn candidate_no_path_is_tagged() {
    let labels = LabelMap::new(5, 1, 2, vec![0, 0, 1, 0, 0]).unwrap();
    let variance = VarianceMap::uniform(5, 1, 0.0).unwrap();
    let mapping = CostMapping::new(vec![ClassCost::Finite(1.0), ClassCost::Impassable], 0.0).unwrap();
    let err = generate_candidates(
        &labels,
        &variance,
        &mapping,
        &[0.0, 5.0],
        &[Pixel::new(0, 0)],
        &[Pixel::new(0, 1), Pixel::new(0, 4)],
    )
    .unwrap_err();
    match err {
        Error::CandidateNoPath { vehicle, demand, lambda } => {
            assert_eq!((vehicle, demand, lambda), (0, 1, 0.0));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn candidates_reject_bad_lambda_lists() {
    let (labels, variance) = demo_inputs();
    let v = [Pixel::new(24, 4)];
    let d = [Pixel::new(24, 58)];
    assert!(generate_candidates(&labels, &variance, &demo_mapping(), &[], &v, &d).is_err());
    assert!(generate_candidates(&labels, &variance, &demo_mapping(), &[1.0, 1.0], &v, &d).is_err());
}

#[test]
fn duplicates_are_kept_and_reported() {
    let labels = LabelMap::new(6, 1, 4, vec![0; 6]).unwrap();
    let variance = VarianceMap::uniform(6, 1, 0.0).unwrap();
    let set = generate_candidates(
        &labels,
        &variance,
        &demo_mapping(),
        &[0.0, 10.0],
        &[Pixel::new(0, 0)],
        &[Pixel::new(0, 5)],
    )
    .unwrap();
    assert_eq!(set.len(), 2);
    assert_eq!(set.duplicates(), vec![(Tuple::new(0, 0, 1), 0)]);
}

/// Naive surprise: loop over path pixels and sum both costs.
fn surprise_oracle(path: &GridPath, truth: &LabelMap, predicted: &LabelMap, costs: &[f64]) -> f64 {
    let mut t = 0.0;
    let mut p = 0.0;
    for &px in path.pixels() {
        t += costs[truth.get(px)];
        p += costs[predicted.get(px)];
    }
    t - p
}

#[test]
fn surprise_examples() {
    let costs = [1.0, 3.0, 2.0];
    let mapping = CostMapping::new(costs.iter().map(|&c| ClassCost::Finite(c)).collect(), 0.0).unwrap();
    let path = GridPath::new((0..4).map(|c| Pixel::new(0, c)).collect(), 0.0, 0.0).unwrap();
    let base = LabelMap::new(4, 1, 3, vec![0; 4]).unwrap();

    let s = surprise(&path, &base, &base, &mapping).unwrap();
    assert_eq!(s.value, 0.0);

    let truth = LabelMap::new(4, 1, 3, vec![0, 1, 0, 0]).unwrap();
    let s = surprise(&path, &truth, &base, &mapping).unwrap();
    assert_eq!(s.value, 2.0);
    assert_eq!(s.value, surprise_oracle(&path, &truth, &base, &costs));

    let predicted = LabelMap::new(4, 1, 3, vec![1, 0, 1, 0]).unwrap();
    let s = surprise(&path, &base, &predicted, &mapping).unwrap();
    assert_eq!(s.value, -4.0);
    assert_eq!(s.value, surprise_oracle(&path, &base, &predicted, &costs));
    assert_eq!(s.breakdown.len(), 4);
    assert_eq!(s.breakdown[0].difference(), Some(-2.0));
}

#[test]
fn surprise_flags_impassable_truth() {
    let mapping = CostMapping::new(vec![ClassCost::Finite(1.0), ClassCost::Impassable], 0.0).unwrap();
    let path = GridPath::new(vec![Pixel::new(0, 0), Pixel::new(0, 1)], 0.0, 0.0).unwrap();
    let truth = LabelMap::new(2, 1, 2, vec![0, 1]).unwrap();
    let predicted = LabelMap::new(2, 1, 2, vec![0, 0]).unwrap();
    let s = surprise(&path, &truth, &predicted, &mapping).unwrap();
    assert!(s.impassable_encountered);
    assert_eq!(s.value, 0.0);
}

#[test]
fn surprise_dimension_mismatch() {
    let mapping = demo_mapping();
    let path = GridPath::new(vec![Pixel::new(0, 0)], 0.0, 0.0).unwrap();
    let a = LabelMap::new(2, 1, 4, vec![0, 0]).unwrap();
    let b = LabelMap::new(1, 2, 4, vec![0, 0]).unwrap();
    assert!(matches!(surprise(&path, &a, &b, &mapping), Err(Error::DimensionMismatch(_))));
}

#[test]
fn grid_path_rejects_gaps_and_repeats() {
    assert!(GridPath::new(vec![Pixel::new(0, 0), Pixel::new(0, 2)], 0.0, 0.0).is_err());
    assert!(GridPath::new(
        vec![Pixel::new(0, 0), Pixel::new(0, 1), Pixel::new(0, 0)],
        0.0,
        0.0
    )
    .is_err());
}

fn map_strategy() -> impl Strategy<Value = (RiskCostMap, Pixel, Pixel)> {
    (4usize..14, 4usize..14, any::<u64>()).prop_map(|(w, h, seed)| {
        let mut r = rng(seed);
        let map = random_map(&mut r, w, h, 0.2);
        let s = random_passable(&mut r, &map);
        let g = random_passable(&mut r, &map);
        (map, s, g)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn astar_equals_dijkstra((map, s, g) in map_strategy()) {
        match astar(&map, s, g) {
            Ok(path) => {
                assert_valid(&path, &map, s, g);
                prop_assert_eq!(Some(path.planned_cost()), dijkstra_cost(&map, s, g));
            }
            Err(Error::NoPath { .. }) => prop_assert_eq!(dijkstra_cost(&map, s, g), None),
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }

    #[test]
    fn scaling_costs_keeps_optimal_geometry((map, s, g) in map_strategy(), k in 1u32..8) {
        // Power-of-two scale keeps every sum exact.
        let scale = f64::from(1u32 << k);
        let costs = (0..map.height())
            .flat_map(|r| (0..map.width()).map(move |c| Pixel::new(r, c)))
            .map(|p| map.get(p).map(|c| c * scale))
            .collect();
        let scaled = RiskCostMap::from_costs(map.width(), map.height(), costs).unwrap();
        if let (Ok(a), Ok(b)) = (astar(&map, s, g), astar(&scaled, s, g)) {
            // The scaled path is optimal under the original costs too.
            prop_assert_eq!(weighted_path_cost(b.pixels(), |p| map.get(p)), Some(a.planned_cost()));
            prop_assert_eq!(b.planned_cost(), a.planned_cost() * scale);
        }
    }

    #[test]
    fn planned_cost_nondecreasing_in_lambda(seed in any::<u64>(), l1 in 0.0f64..50.0, dl in 0.0f64..50.0) {
        let mut r = rng(seed);
        let stack = random_stack(&mut r, 10, 8, 4, 5);
        let labels = mode_label(&stack);
        let variance = pixel_uncertainty(&stack);
        let (s, g) = (Pixel::new(r.gen_range(0..8), 0), Pixel::new(r.gen_range(0..8), 9));
        let set = generate_candidates(&labels, &variance, &demo_mapping(), &[l1, l1 + dl + 1e-9], &[s], &[g]).unwrap();
        prop_assert!(set.get(Tuple::new(0, 0, 0)).planned_cost() <= set.get(Tuple::new(0, 0, 1)).planned_cost());
    }

    #[test]
    fn candidate_paths_are_valid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let stack = random_stack(&mut r, 9, 7, 4, 4);
        let labels = mode_label(&stack);
        let variance = pixel_uncertainty(&stack);
        let mut pixels: Vec<Pixel> = (0..7).flat_map(|row| (0..9).map(move |c| Pixel::new(row, c))).collect();
        rand::seq::SliceRandom::shuffle(pixels.as_mut_slice(), &mut r);
        let vehicles = pixels[..3].to_vec();
        let demands = pixels[3..5].to_vec();
        let lambdas = [0.0, 20.0];
        let set = generate_candidates(&labels, &variance, &demo_mapping(), &lambdas, &vehicles, &demands).unwrap();
        prop_assert_eq!(set.len(), 12);
        for (t, path) in set.iter() {
            let map = build_cost_map(&labels, &variance, &demo_mapping().with_lambda(lambdas[t.path]).unwrap()).unwrap();
            assert_valid(path, &map, vehicles[t.vehicle], demands[t.demand]);
        }
    }
}
