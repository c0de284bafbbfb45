use super::{astar, GridPath};
use crate::assignment::Tuple;
use crate::error::{Error, Result};
use crate::par;
use crate::terrain::{build_cost_map, CostMapping, LabelMap, Pixel, VarianceMap};

/// K candidate paths for every (vehicle, demand) pair, path k planned at the
/// k-th λ.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    vehicles: Vec<Pixel>,
    demands: Vec<Pixel>,
    lambdas: Vec<f64>,
    paths: Vec<GridPath>,
}

impl CandidateSet {
    /// Assembles a set from paths listed in (vehicle, demand, path) order.
    pub fn new(
        vehicles: Vec<Pixel>,
        demands: Vec<Pixel>,
        lambdas: Vec<f64>,
        paths: Vec<GridPath>,
    ) -> Result<Self> {
        let expected = vehicles.len() * demands.len() * lambdas.len();
        if lambdas.is_empty() || paths.len() != expected {
            return Err(Error::InvalidCandidates(format!(
                "need K >= 1 and N*M*K = {expected} paths, got K={} and {} paths",
                lambdas.len(),
                paths.len()
            )));
        }
        let set = CandidateSet {
            vehicles,
            demands,
            lambdas,
            paths,
        };
        for t in set.tuples() {
            let path = set.get(t);
            if path.start() != set.vehicles[t.vehicle] || path.goal() != set.demands[t.demand] {
                return Err(Error::InvalidCandidates(format!(
                    "path {t} runs {} -> {}, expected {} -> {}",
                    path.start(),
                    path.goal(),
                    set.vehicles[t.vehicle],
                    set.demands[t.demand]
                )));
            }
        }
        Ok(set)
    }

    pub fn vehicles(&self) -> &[Pixel] {
        &self.vehicles
    }

    pub fn demands(&self) -> &[Pixel] {
        &self.demands
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn num_demands(&self) -> usize {
        self.demands.len()
    }

    pub fn paths_per_pair(&self) -> usize {
        self.lambdas.len()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    fn slot(&self, t: Tuple) -> usize {
        (t.vehicle * self.demands.len() + t.demand) * self.lambdas.len() + t.path
    }

    pub fn get(&self, t: Tuple) -> &GridPath {
        &self.paths[self.slot(t)]
    }

    /// The ground set in lexicographic (vehicle, demand, path) order.
    pub fn tuples(&self) -> impl Iterator<Item = Tuple> + '_ {
        let (m, k) = (self.demands.len(), self.lambdas.len());
        (0..self.paths.len()).map(move |n| Tuple::new(n / (m * k), (n / k) % m, n % k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Tuple, &GridPath)> + '_ {
        self.tuples().zip(&self.paths)
    }

    /// Pairs of candidates for the same (vehicle, demand) whose geometry
    /// coincides, as (tuple, earlier path index).
    pub fn duplicates(&self) -> Vec<(Tuple, usize)> {
        self.tuples()
            .filter_map(|t| {
                (0..t.path)
                    .find(|&e| {
                        self.get(Tuple::new(t.vehicle, t.demand, e)).pixels()
                            == self.get(t).pixels()
                    })
                    .map(|e| (t, e))
            })
            .collect()
    }
}

/// Plans one path per (vehicle, demand, λ). `base` supplies the class costs;
/// its own λ is ignored.
pub fn generate_candidates(
    labels: &LabelMap,
    variance: &VarianceMap,
    base: &CostMapping,
    lambdas: &[f64],
    vehicles: &[Pixel],
    demands: &[Pixel],
) -> Result<CandidateSet> {
    if lambdas.is_empty() {
        return Err(Error::InvalidCandidates("lambda list is empty".into()));
    }
    for (n, l) in lambdas.iter().enumerate() {
        if lambdas[..n].contains(l) {
            return Err(Error::InvalidCandidates(format!("lambda {l} repeated")));
        }
    }
    if vehicles.is_empty() || demands.is_empty() {
        return Err(Error::InvalidCandidates(
            "need at least one vehicle and one demand".into(),
        ));
    }
    let maps = lambdas
        .iter()
        .map(|&l| build_cost_map(labels, variance, &base.with_lambda(l)?))
        .collect::<Result<Vec<_>>>()?;

    let (m, k) = (demands.len(), lambdas.len());
    let planned = par::map_range(vehicles.len() * m * k, |n| {
        let (i, j, kk) = (n / (m * k), (n / k) % m, n % k);
        astar(&maps[kk], vehicles[i], demands[j]).map_err(|e| match e {
            Error::NoPath { .. } => Error::CandidateNoPath {
                vehicle: i,
                demand: j,
                lambda: lambdas[kk],
            },
            other => other,
        })
    });
    let paths = planned.into_iter().collect::<Result<Vec<_>>>()?;
    CandidateSet::new(vehicles.to_vec(), demands.to_vec(), lambdas.to_vec(), paths)
}
