use serde::Serialize;

use super::GridPath;
use crate::error::{Error, Result};
use crate::terrain::{CostMapping, LabelMap, Pixel};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PixelSurprise {
    pub pixel: Pixel,
    pub truth_class: usize,
    pub predicted_class: usize,
    /// `None` when the class is impassable.
    pub truth_cost: Option<f64>,
    pub predicted_cost: Option<f64>,
}

impl PixelSurprise {
    /// Truth minus predicted cost, if both are finite.
    pub fn difference(&self) -> Option<f64> {
        Some(self.truth_cost? - self.predicted_cost?)
    }
}

/// How much costlier a path really is than its predicted labels claimed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Surprise {
    /// Σ truth cost − Σ predicted cost over pixels where both are finite.
    pub value: f64,
    /// Some path pixel has an impassable class in the ground truth.
    pub impassable_encountered: bool,
    pub breakdown: Vec<PixelSurprise>,
}

/// Compares base class costs (λ = 0) of the true and predicted labels along
/// a path. The result may be negative.
pub fn surprise(
    path: &GridPath,
    truth: &LabelMap,
    predicted: &LabelMap,
    mapping: &CostMapping,
) -> Result<Surprise> {
    if truth.width() != predicted.width() || truth.height() != predicted.height() {
        return Err(Error::DimensionMismatch(format!(
            "truth {}x{} vs predicted {}x{}",
            truth.width(),
            truth.height(),
            predicted.width(),
            predicted.height()
        )));
    }
    if let Some(p) = path.pixels().iter().find(|&&p| !truth.contains(p)) {
        return Err(Error::DimensionMismatch(format!(
            "path pixel {p} outside {}x{} map",
            truth.width(),
            truth.height()
        )));
    }
    let breakdown = path
        .pixels()
        .iter()
        .map(|&pixel| {
            let (t, p) = (truth.get(pixel), predicted.get(pixel));
            Ok(PixelSurprise {
                pixel,
                truth_class: t,
                predicted_class: p,
                truth_cost: mapping.class_cost(t)?.finite(),
                predicted_cost: mapping.class_cost(p)?.finite(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (truth_sum, predicted_sum) = breakdown
        .iter()
        .filter_map(|b| Some((b.truth_cost?, b.predicted_cost?)))
        .fold((0.0, 0.0), |(a, b), (t, p)| (a + t, b + p));
    Ok(Surprise {
        value: truth_sum - predicted_sum,
        impassable_encountered: breakdown.iter().any(|b| b.truth_cost.is_none()),
        breakdown,
    })
}
