//! Monte Carlo travel efficiency of fixed candidate paths.
//!
//! A draw picks one whole sample layer of the stack, labels every path pixel
//! by that layer's argmax and prices the path with base class costs under
//! the planner's edge weighting. Efficiency is the reciprocal of that cost,
//! or zero when the layer makes some path pixel impassable. All tuples share
//! the layer chosen for a draw.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::assignment::Tuple;
use crate::error::{Error, Result};
use crate::planner::{weighted_path_cost, CandidateSet, GridPath};
use crate::terrain::{ClassCost, CostMapping, SampleStack};
use crate::{par, seed};

fn check_fits(path: &GridPath, stack: &SampleStack, mapping: &CostMapping) -> Result<()> {
    if let Some(p) = path.pixels().iter().find(|&&p| !stack.contains(p)) {
        return Err(Error::DimensionMismatch(format!(
            "path pixel {p} outside {}x{} stack",
            stack.width(),
            stack.height()
        )));
    }
    mapping.check_covers(stack.num_classes())
}

/// Realized cost of `path` if the world looks like sample layer `layer`.
/// `None` means some pixel's label is impassable.
pub fn path_cost_in_layer(
    path: &GridPath,
    stack: &SampleStack,
    mapping: &CostMapping,
    layer: usize,
) -> Result<Option<f64>> {
    check_fits(path, stack, mapping)?;
    if layer >= stack.num_samples() {
        return Err(Error::DimensionMismatch(format!(
            "layer {layer} outside {} samples",
            stack.num_samples()
        )));
    }
    let costs = mapping.class_costs();
    Ok(weighted_path_cost(path.pixels(), |p| {
        match costs[stack.argmax(layer, p)] {
            ClassCost::Finite(c) => Some(c),
            ClassCost::Impassable => None,
        }
    }))
}

/// One realized cost with the layer drawn uniformly from `rng`.
pub fn sample_path_cost<R: Rng + ?Sized>(
    path: &GridPath,
    stack: &SampleStack,
    mapping: &CostMapping,
    rng: &mut R,
) -> Result<Option<f64>> {
    let layer = rng.gen_range(0..stack.num_samples());
    path_cost_in_layer(path, stack, mapping, layer)
}

/// Layer index used by draw `draw` under `seed`.
pub fn draw_layer(seed: u64, draw: usize, num_samples: usize) -> usize {
    seed::stream_rng(seed, draw as u64).gen_range(0..num_samples)
}

/// Efficiency samples e_ijk[d] for every tuple of the ground set.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyMatrix {
    tuples: Vec<Tuple>,
    index: BTreeMap<Tuple, usize>,
    draws: usize,
    samples: Vec<f64>,
    seed: Option<u64>,
    layers: Option<Vec<usize>>,
}

impl EfficiencyMatrix {
    /// `samples` is tuple-major: row t holds the `draws` samples of `tuples[t]`.
    pub fn new(tuples: Vec<Tuple>, draws: usize, samples: Vec<f64>) -> Result<Self> {
        if draws == 0 {
            return Err(Error::EmptySamples);
        }
        if samples.len() != tuples.len() * draws {
            return Err(Error::DimensionMismatch(format!(
                "{} tuples x {draws} draws needs {} samples, got {}",
                tuples.len(),
                tuples.len() * draws,
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "efficiency {bad} is not finite and nonnegative"
            )));
        }
        let mut index = BTreeMap::new();
        for (n, &t) in tuples.iter().enumerate() {
            if index.insert(t, n).is_some() {
                return Err(Error::InvalidCandidates(format!("tuple {t} repeated")));
            }
        }
        Ok(EfficiencyMatrix {
            tuples,
            index,
            draws,
            samples,
            seed: None,
            layers: None,
        })
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Layer chosen for each draw, when the matrix was sampled here.
    pub fn layers(&self) -> Option<&[usize]> {
        self.layers.as_deref()
    }

    pub fn position(&self, t: Tuple) -> Result<usize> {
        self.index.get(&t).copied().ok_or(Error::UnknownTuple(t))
    }

    /// All draws for the tuple at `position`.
    pub fn row(&self, position: usize) -> &[f64] {
        &self.samples[position * self.draws..(position + 1) * self.draws]
    }

    pub fn samples_of(&self, t: Tuple) -> Result<&[f64]> {
        Ok(self.row(self.position(t)?))
    }

    pub fn get(&self, t: Tuple, draw: usize) -> Result<f64> {
        Ok(self.samples_of(t)?[draw])
    }

    /// Largest efficiency anywhere in the matrix.
    pub fn max_efficiency(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with header `i,j,k,draw,efficiency`, tuple-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,k,draw,efficiency\n");
        for (n, t) in self.tuples.iter().enumerate() {
            for (d, e) in self.row(n).iter().enumerate() {
                writeln!(out, "{},{},{},{d},{e}", t.vehicle, t.demand, t.path).unwrap();
            }
        }
        out
    }

    pub fn write_csv(&self, file: impl AsRef<Path>) -> Result<()> {
        let file = file.as_ref();
        fs::write(file, self.to_csv()).map_err(|e| Error::io(file, e))
    }

    /// Parses the CSV form. Every tuple must list draws 0..D exactly once,
    /// with the same D throughout; row order is free.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "i,j,k,draw,efficiency" => {}
            _ => {
                return Err(Error::parse(
                    "efficiency csv:1",
                    "expected header i,j,k,draw,efficiency",
                ))
            }
        }
        let mut rows: BTreeMap<Tuple, BTreeMap<usize, f64>> = BTreeMap::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let ctx = format!("efficiency csv:{}", n + 1);
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 5 {
                return Err(Error::parse(ctx, format!("expected 5 fields, got {}", cells.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(&ctx, e));
            let t = Tuple::new(int(cells[0])?, int(cells[1])?, int(cells[2])?);
            let d = int(cells[3])?;
            let e = cells[4].parse::<f64>().map_err(|e| Error::parse(&ctx, e))?;
            if rows.entry(t).or_default().insert(d, e).is_some() {
                return Err(Error::parse(ctx, format!("draw {d} of {t} repeated")));
            }
        }
        let draws = rows.values().next().map_or(0, BTreeMap::len);
        let mut tuples = Vec::with_capacity(rows.len());
        let mut samples = Vec::with_capacity(rows.len() * draws);
        for (t, row) in rows {
            if row.len() != draws || row.keys().next_back() != Some(&(draws - 1)) {
                return Err(Error::DimensionMismatch(format!(
                    "tuple {t} has draws that are not 0..{draws}"
                )));
            }
            tuples.push(t);
            samples.extend(row.into_values());
        }
        Self::new(tuples, draws, samples)
    }

    pub fn read_csv(file: impl AsRef<Path>) -> Result<Self> {
        let file = file.as_ref();
        let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
        Self::from_csv(&text)
    }
}

/// Samples `draws` efficiencies for every candidate. Draw d takes its layer
/// from an RNG stream keyed by (seed, d), so the matrix does not depend on
/// evaluation order.
pub fn build_efficiency_matrix(
    candidates: &CandidateSet,
    stack: &SampleStack,
    mapping: &CostMapping,
    draws: usize,
    seed: u64,
) -> Result<EfficiencyMatrix> {
    if draws == 0 {
        return Err(Error::EmptySamples);
    }
    let s = stack.num_samples();
    let layers = par::map_range(draws, |d| draw_layer(seed, d, s));
    let tuples: Vec<Tuple> = candidates.tuples().collect();

    // Efficiency of each tuple under each layer; draws only index into it.
    let per_layer = par::map_range(tuples.len(), |n| {
        let t = tuples[n];
        (0..s)
            .map(|layer| match path_cost_in_layer(candidates.get(t), stack, mapping, layer)? {
                None => Ok(0.0),
                Some(c) if c > 0.0 => Ok(1.0 / c),
                Some(_) => Err(Error::ZeroCostPath(t)),
            })
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let samples = per_layer
        .iter()
        .flat_map(|row| layers.iter().map(move |&l| row[l]))
        .collect();
    let mut matrix = EfficiencyMatrix::new(tuples, draws, samples)?;
    matrix.seed = Some(seed);
    matrix.layers = Some(layers);
    Ok(matrix)
}
