//! Per-pixel reduction of stochastic segmentation samples into labels,
//! uncertainty and risk-aware traversal cost.

mod io;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub use io::{
    read_cost_map_csv, read_label_map, read_label_map_csv, read_sample_stack,
    read_variance_map, read_variance_map_csv, write_cost_map_csv, write_label_map,
    write_label_map_csv, write_sample_stack, write_variance_map, write_variance_map_csv,
    LABEL_MAGIC, STACK_MAGIC, VARIANCE_MAGIC,
};
pub use synth::{synth_scene, Region, SceneSpec};

/// Per-pixel probability sums must be within this of one for a valid stack.
pub const SUM_TOLERANCE: f64 = 1e-5;
/// Files whose per-pixel sums drift by more than this are rejected on ingest.
pub const INGEST_DRIFT: f64 = 1e-3;
/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// A grid cell, addressed as (row, col).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub const fn new(row: usize, col: usize) -> Self {
        Pixel { row, col }
    }
}

impl From<(usize, usize)> for Pixel {
    fn from((row, col): (usize, usize)) -> Self {
        Pixel { row, col }
    }
}

impl From<Pixel> for (usize, usize) {
    fn from(p: Pixel) -> Self {
        (p.row, p.col)
    }
}

impl fmt::Display for Pixel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// S stochastic softmax outputs over a width x height grid, stored
/// sample-major, then row, col, class.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStack {
    width: usize,
    height: usize,
    num_classes: usize,
    num_samples: usize,
    probs: Vec<f32>,
}

impl SampleStack {
    /// Builds a stack, requiring every per-pixel distribution to sum to one
    /// within [`SUM_TOLERANCE`].
    pub fn new(
        width: usize,
        height: usize,
        num_classes: usize,
        num_samples: usize,
        probs: Vec<f32>,
    ) -> Result<Self> {
        let mut stack = Self::unchecked(width, height, num_classes, num_samples, probs)?;
        stack.check_sums(SUM_TOLERANCE, false)?;
        Ok(stack)
    }

    /// Builds a stack, renormalising each pixel whose sum is off by at most
    /// `tolerance` and rejecting anything worse.
    pub fn renormalized(
        width: usize,
        height: usize,
        num_classes: usize,
        num_samples: usize,
        probs: Vec<f32>,
        tolerance: f64,
    ) -> Result<Self> {
        let mut stack = Self::unchecked(width, height, num_classes, num_samples, probs)?;
        stack.check_sums(tolerance, true)?;
        Ok(stack)
    }

    fn unchecked(
        width: usize,
        height: usize,
        num_classes: usize,
        num_samples: usize,
        probs: Vec<f32>,
    ) -> Result<Self> {
        if num_samples < 1 || num_classes < 2 || width == 0 || height == 0 {
            return Err(Error::MalformedHeader(format!(
                "need width, height, samples >= 1 and classes >= 2; got {width}x{height}, C={num_classes}, S={num_samples}"
            )));
        }
        let expected = width * height * num_classes * num_samples;
        if probs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} probabilities, got {}",
                probs.len()
            )));
        }
        Ok(SampleStack {
            width,
            height,
            num_classes,
            num_samples,
            probs,
        })
    }

    fn check_sums(&mut self, tolerance: f64, renormalize: bool) -> Result<()> {
        let (c, plane, width) = (self.num_classes, self.width * self.height, self.width);
        for (cell, dist) in self.probs.chunks_mut(c).enumerate() {
            let sum: f64 = dist.iter().map(|&p| f64::from(p)).sum();
            let bad_value = dist.iter().any(|&p| !p.is_finite() || p < 0.0);
            if bad_value || (sum - 1.0).abs() > tolerance {
                let pixel = cell % plane;
                return Err(Error::ProbabilityDrift {
                    sample: cell / plane,
                    row: pixel / width,
                    col: pixel % width,
                    sum,
                });
            }
            if renormalize {
                dist.iter_mut()
                    .for_each(|p| *p = (f64::from(*p) / sum) as f32);
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn probs(&self) -> &[f32] {
        &self.probs
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.row < self.height && p.col < self.width
    }

    /// Class distribution of one pixel in one sample layer.
    pub fn distribution(&self, sample: usize, p: Pixel) -> &[f32] {
        let start = ((sample * self.height + p.row) * self.width + p.col) * self.num_classes;
        &self.probs[start..start + self.num_classes]
    }

    /// Most likely class of a pixel in one sample layer; ties go to the
    /// smallest class index.
    pub fn argmax(&self, sample: usize, p: Pixel) -> usize {
        argmax(self.distribution(sample, p))
    }
}

pub(crate) fn argmax(dist: &[f32]) -> usize {
    let mut best = 0;
    for (k, &v) in dist.iter().enumerate().skip(1) {
        if v > dist[best] {
            best = k;
        }
    }
    best
}

/// Per-pixel class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    num_classes: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, num_classes: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "label map {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::DimensionMismatch(format!(
                "label {bad} outside {num_classes} classes"
            )));
        }
        Ok(LabelMap {
            width,
            height,
            num_classes,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.row < self.height && p.col < self.width
    }

    pub fn get(&self, p: Pixel) -> usize {
        self.labels[p.row * self.width + p.col] as usize
    }
}

/// Per-pixel uncertainty: the class-averaged variance of P(c|x) across samples.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl VarianceMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "variance map {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=0.25).contains(*v)) {
            return Err(Error::DimensionMismatch(format!(
                "variance {bad} outside [0, 0.25]"
            )));
        }
        Ok(VarianceMap {
            width,
            height,
            values,
        })
    }

    /// A map with the same value everywhere.
    pub fn uniform(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: Pixel) -> f64 {
        self.values[p.row * self.width + p.col]
    }
}

/// Base cost of traversing a class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassCost {
    Finite(f64),
    Impassable,
}

impl ClassCost {
    pub fn finite(self) -> Option<f64> {
        match self {
            ClassCost::Finite(c) => Some(c),
            ClassCost::Impassable => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ClassCostRepr {
    Number(f64),
    Text(String),
}

impl Serialize for ClassCost {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            ClassCost::Finite(c) => ClassCostRepr::Number(c),
            ClassCost::Impassable => ClassCostRepr::Text("impassable".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassCost {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ClassCostRepr::deserialize(d)? {
            ClassCostRepr::Number(c) => Ok(ClassCost::Finite(c)),
            ClassCostRepr::Text(t) if t.eq_ignore_ascii_case("impassable") => {
                Ok(ClassCost::Impassable)
            }
            ClassCostRepr::Text(t) => Err(serde::de::Error::custom(format!(
                "class cost must be a number or \"impassable\", got {t:?}"
            ))),
        }
    }
}

/// Class cost table plus the weight λ placed on uncertainty.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMapping {
    class_costs: Vec<ClassCost>,
    lambda: f64,
}

impl CostMapping {
    pub fn new(class_costs: Vec<ClassCost>, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidMapping(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if let Some(c) = class_costs
            .iter()
            .filter_map(|c| c.finite())
            .find(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(Error::InvalidMapping(format!(
                "finite class costs must be positive, got {c}"
            )));
        }
        if class_costs.iter().all(|c| c.finite().is_none()) {
            return Err(Error::InvalidMapping(
                "at least one class needs a finite cost".into(),
            ));
        }
        Ok(CostMapping {
            class_costs,
            lambda,
        })
    }

    /// Same class costs, different λ.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.class_costs.clone(), lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn class_costs(&self) -> &[ClassCost] {
        &self.class_costs
    }

    pub fn class_cost(&self, class: usize) -> Result<ClassCost> {
        self.class_costs
            .get(class)
            .copied()
            .ok_or(Error::MissingClassCost(class))
    }

    pub(crate) fn check_covers(&self, num_classes: usize) -> Result<()> {
        if num_classes > self.class_costs.len() {
            Err(Error::MissingClassCost(self.class_costs.len()))
        } else {
            Ok(())
        }
    }
}

/// Per-pixel traversal cost. Impassable pixels hold `f64::INFINITY`.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskCostMap {
    width: usize,
    height: usize,
    lambda: f64,
    cost: Vec<f64>,
}

impl RiskCostMap {
    /// Wraps raw costs; `None` marks an impassable pixel.
    pub fn from_costs(width: usize, height: usize, cost: Vec<Option<f64>>) -> Result<Self> {
        if cost.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "cost map {width}x{height} needs {} values, got {}",
                width * height,
                cost.len()
            )));
        }
        let cost = cost
            .into_iter()
            .map(|c| match c {
                Some(v) if v.is_finite() && v > 0.0 => Ok(v),
                Some(v) => Err(Error::InvalidMapping(format!(
                    "pixel costs must be positive, got {v}"
                ))),
                None => Ok(f64::INFINITY),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RiskCostMap {
            width,
            height,
            lambda: 0.0,
            cost,
        })
    }

    /// Records the risk weight the map was built with.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.row < self.height && p.col < self.width
    }

    /// Cost of a pixel, `None` if impassable.
    pub fn get(&self, p: Pixel) -> Option<f64> {
        let c = self.cost[p.row * self.width + p.col];
        c.is_finite().then_some(c)
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.cost
    }

    pub fn is_passable(&self, p: Pixel) -> bool {
        self.contains(p) && self.get(p).is_some()
    }

    pub fn min_finite(&self) -> Option<f64> {
        self.cost
            .iter()
            .copied()
            .filter(|c| c.is_finite())
            .min_by(f64::total_cmp)
    }
}

/// Per-pixel mode over samples of the per-sample argmax class.
pub fn mode_label(stack: &SampleStack) -> LabelMap {
    let (w, h, c, s) = (
        stack.width,
        stack.height,
        stack.num_classes,
        stack.num_samples,
    );
    let rows = par::map_range(h, |row| {
        let mut counts = vec![0usize; c];
        (0..w)
            .map(|col| {
                counts.iter_mut().for_each(|n| *n = 0);
                for sample in 0..s {
                    counts[stack.argmax(sample, Pixel::new(row, col))] += 1;
                }
                let mut best = 0;
                for k in 1..c {
                    if counts[k] > counts[best] {
                        best = k;
                    }
                }
                best as u32
            })
            .collect::<Vec<_>>()
    });
    LabelMap {
        width: w,
        height: h,
        num_classes: c,
        labels: rows.concat(),
    }
}

/// Per-pixel mean over classes of the population variance of P(c|x) across
/// samples. A single-sample stack gives zeros.
pub fn pixel_uncertainty(stack: &SampleStack) -> VarianceMap {
    let (w, h, c, s) = (
        stack.width,
        stack.height,
        stack.num_classes,
        stack.num_samples,
    );
    let rows = par::map_range(h, |row| {
        (0..w)
            .map(|col| {
                let p = Pixel::new(row, col);
                let mut total = 0.0;
                for k in 0..c {
                    let mean = (0..s)
                        .map(|i| f64::from(stack.distribution(i, p)[k]))
                        .sum::<f64>()
                        / s as f64;
                    let var = (0..s)
                        .map(|i| {
                            let d = f64::from(stack.distribution(i, p)[k]) - mean;
                            d * d
                        })
                        .sum::<f64>()
                        / s as f64;
                    total += var;
                }
                (total / c as f64).clamp(0.0, 0.25)
            })
            .collect::<Vec<_>>()
    });
    VarianceMap {
        width: w,
        height: h,
        values: rows.concat(),
    }
}

/// Risk-aware cost C(l_x) + λ·uncertainty(x); impassable classes stay
/// impassable whatever the variance.
pub fn build_cost_map(
    labels: &LabelMap,
    variance: &VarianceMap,
    mapping: &CostMapping,
) -> Result<RiskCostMap> {
    if labels.width != variance.width || labels.height != variance.height {
        return Err(Error::DimensionMismatch(format!(
            "labels {}x{} vs variance {}x{}",
            labels.width, labels.height, variance.width, variance.height
        )));
    }
    let cost = labels
        .labels
        .iter()
        .zip(&variance.values)
        .map(|(&l, &v)| {
            Ok(match mapping.class_cost(l as usize)? {
                ClassCost::Finite(base) => base + mapping.lambda * v,
                ClassCost::Impassable => f64::INFINITY,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskCostMap {
        width: labels.width,
        height: labels.height,
        lambda: mapping.lambda,
        cost,
    })
}

/// Mean of −log P(true class | x) over samples and over the pixels of each
/// true class. Classes absent from `truth` give `None`.
pub fn class_cross_entropy(stack: &SampleStack, truth: &LabelMap) -> Result<Vec<Option<f64>>> {
    if stack.width != truth.width || stack.height != truth.height {
        return Err(Error::DimensionMismatch(format!(
            "stack {}x{} vs truth {}x{}",
            stack.width, stack.height, truth.width, truth.height
        )));
    }
    if truth.num_classes > stack.num_classes {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} classes, stack {}",
            truth.num_classes, stack.num_classes
        )));
    }
    let c = stack.num_classes;
    let mut sums = vec![0.0f64; c];
    let mut counts = vec![0usize; c];
    for row in 0..stack.height {
        for col in 0..stack.width {
            let p = Pixel::new(row, col);
            let class = truth.get(p);
            counts[class] += 1;
            for s in 0..stack.num_samples {
                let prob = f64::from(stack.distribution(s, p)[class]).max(PROB_FLOOR);
                sums[class] -= prob.ln();
            }
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(sum, n)| (n > 0).then(|| (sum / (n * stack.num_samples) as f64).max(0.0)))
        .collect())
}
