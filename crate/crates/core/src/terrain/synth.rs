//! Synthetic scenes standing in for Monte Carlo dropout output.
//!
//! Each sample layer draws one noise intensity per zone (background, each
//! region, the out-of-distribution region), so noise is spatially correlated
//! within a layer the way dropout samples are. A pixel's distribution is
//! `(1 - w) * onehot(truth) + w * u` with `w = min(1, 2 * confusion * U)` and
//! `u` a flat-Dirichlet draw over the classes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LabelMap, SampleStack};
use crate::error::{Error, Result};
use crate::{par, seed};

/// Axis-aligned block of one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
    pub class: usize,
    /// Noise level in [0, 1]; 0 gives exact one-hot samples.
    pub confusion: f64,
}

impl Region {
    fn contains(&self, row: usize, col: usize) -> bool {
        (self.row..self.row + self.rows).contains(&row)
            && (self.col..self.col + self.cols).contains(&col)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub num_classes: usize,
    pub num_samples: usize,
    pub background_class: usize,
    pub background_confusion: f64,
    /// Painted in order; later regions overwrite earlier ones.
    #[serde(default)]
    pub regions: Vec<Region>,
    /// Painted last.
    #[serde(default)]
    pub ood: Option<Region>,
}

impl SceneSpec {
    /// Canned 64x48 scene with classes road (0), grass (1), tree (2) and
    /// building (3). A building block splits the map left to right; a grass
    /// patch the model has never seen cuts straight through it, and roads
    /// run around both ends.
    pub fn demo() -> Self {
        let building = |row, col, rows, cols| Region {
            row,
            col,
            rows,
            cols,
            class: 3,
            confusion: 0.01,
        };
        SceneSpec {
            width: 64,
            height: 48,
            num_classes: 4,
            num_samples: 20,
            background_class: 0,
            background_confusion: 0.01,
            regions: vec![
                building(12, 20, 24, 24),
                Region {
                    row: 2,
                    col: 2,
                    rows: 4,
                    cols: 10,
                    class: 2,
                    confusion: 0.01,
                },
                Region {
                    row: 42,
                    col: 50,
                    rows: 4,
                    cols: 10,
                    class: 2,
                    confusion: 0.01,
                },
            ],
            ood: Some(Region {
                row: 20,
                col: 20,
                rows: 8,
                cols: 24,
                class: 1,
                confusion: 0.5,
            }),
        }
    }

    fn zones(&self) -> impl Iterator<Item = &Region> {
        self.regions.iter().chain(self.ood.iter())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.width == 0 || self.height == 0 {
            return fail(format!("grid {}x{} is empty", self.width, self.height));
        }
        if self.num_classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.num_samples < 1 {
            return fail("need at least one sample".into());
        }
        if self.background_class >= self.num_classes {
            return fail(format!(
                "background class {} outside {} classes",
                self.background_class, self.num_classes
            ));
        }
        if !(0.0..=1.0).contains(&self.background_confusion) {
            return fail(format!(
                "background confusion {} outside [0, 1]",
                self.background_confusion
            ));
        }
        for (n, r) in self.zones().enumerate() {
            if r.rows == 0 || r.cols == 0 {
                return fail(format!("region {n} is empty"));
            }
            if r.row + r.rows > self.height || r.col + r.cols > self.width {
                return fail(format!(
                    "region {n} ({}, {}) {}x{} exceeds {}x{} grid",
                    r.row, r.col, r.rows, r.cols, self.height, self.width
                ));
            }
            if r.class >= self.num_classes {
                return fail(format!("region {n} class {} out of range", r.class));
            }
            if !(0.0..=1.0).contains(&r.confusion) {
                return fail(format!("region {n} confusion {} outside [0, 1]", r.confusion));
            }
        }
        Ok(())
    }

    /// Zone index per pixel: 0 is background, 1.. the regions, last the OOD
    /// region.
    fn zone_map(&self) -> Vec<usize> {
        let mut zones = vec![0; self.width * self.height];
        for (n, r) in self.zones().enumerate() {
            for row in r.row..r.row + r.rows {
                for col in r.col..r.col + r.cols {
                    zones[row * self.width + col] = n + 1;
                }
            }
        }
        zones
    }

    /// Whether a pixel lies in the out-of-distribution region.
    pub fn in_ood(&self, row: usize, col: usize) -> bool {
        self.ood.as_ref().is_some_and(|r| r.contains(row, col))
    }
}

/// Generates ground-truth labels and a sample stack. Deterministic in `seed`.
pub fn synth_scene(spec: &SceneSpec, seed: u64) -> Result<(LabelMap, SampleStack)> {
    spec.validate()?;
    let zone_of = spec.zone_map();
    let classes: Vec<usize> = std::iter::once(spec.background_class)
        .chain(spec.zones().map(|r| r.class))
        .collect();
    let confusion: Vec<f64> = std::iter::once(spec.background_confusion)
        .chain(spec.zones().map(|r| r.confusion))
        .collect();
    let c = spec.num_classes;

    let layers = par::map_range(spec.num_samples, |s| {
        let mut rng = seed::stream_rng(seed, s as u64);
        let intensity: Vec<f64> = confusion
            .iter()
            .map(|&q| (2.0 * q * rng.gen::<f64>()).min(1.0))
            .collect();
        let mut layer = Vec::with_capacity(zone_of.len() * c);
        let mut noise = vec![0.0f64; c];
        for &zone in &zone_of {
            let (truth, w) = (classes[zone], intensity[zone]);
            if w == 0.0 {
                layer.extend((0..c).map(|k| if k == truth { 1.0f32 } else { 0.0 }));
                continue;
            }
            for n in noise.iter_mut() {
                *n = -(1.0 - rng.gen::<f64>()).ln();
            }
            let total: f64 = noise.iter().sum();
            layer.extend(noise.iter().enumerate().map(|(k, n)| {
                let base = if k == truth { 1.0 - w } else { 0.0 };
                (base + w * n / total) as f32
            }));
        }
        layer
    });

    let truth = LabelMap::new(
        spec.width,
        spec.height,
        c,
        zone_of.iter().map(|&z| classes[z] as u32).collect(),
    )?;
    let stack = SampleStack::renormalized(
        spec.width,
        spec.height,
        c,
        spec.num_samples,
        layers.concat(),
        super::INGEST_DRIFT,
    )?;
    Ok((truth, stack))
}
