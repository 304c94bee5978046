//! Back-of-envelope latency budget for a capture, infer, overlay loop.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetInput {
    pub bandwidth_bps: f64,
    pub image_bits: f64,
    pub per_model_ms: Vec<f64>,
    pub target_fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub one_way_ms: f64,
    pub total_ms: f64,
    pub max_fps: u64,
    /// `floor(frame_ms / mean(per_model_ms))`: how many models of average
    /// cost fit in one frame interval, ignoring transfer time.
    pub max_models_at_target: Option<u64>,
    /// The same count when each model also pays a round trip:
    /// `floor(frame_ms / (2 * one_way_ms + mean(per_model_ms)))`.
    pub max_models_with_transfer: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field} must be a positive finite number, got {value}")]
pub struct BudgetError {
    pub field: &'static str,
    pub value: f64,
}

fn positive(field: &'static str, value: f64) -> Result<f64, BudgetError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BudgetError { field, value })
    }
}

pub fn latency_budget(input: &BudgetInput) -> Result<BudgetReport, BudgetError> {
    let bw = positive("bandwidth_bps", input.bandwidth_bps)?;
    let bits = positive("image_bits", input.image_bits)?;
    if input.per_model_ms.is_empty() {
        return Err(BudgetError {
            field: "per_model_ms",
            value: 0.0,
        });
    }
    for &m in &input.per_model_ms {
        positive("per_model_ms", m)?;
    }
    let target = input
        .target_fps
        .map(|f| positive("target_fps", f))
        .transpose()?;

    let one_way_ms = bits / bw * 1000.0;
    let model_sum: f64 = input.per_model_ms.iter().sum();
    let mean = model_sum / input.per_model_ms.len() as f64;
    let total_ms = 2.0 * one_way_ms + model_sum;
    let frame_ms = target.map(|f| 1000.0 / f);
    Ok(BudgetReport {
        one_way_ms,
        total_ms,
        max_fps: (1000.0 / total_ms).floor() as u64,
        max_models_at_target: frame_ms.map(|t| (t / mean).floor() as u64),
        max_models_with_transfer: frame_ms.map(|t| (t / (2.0 * one_way_ms + mean)).floor() as u64),
    })
}
