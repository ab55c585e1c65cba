use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean of `|estimate - truth| / truth` over the mask.
pub fn relative_error(estimate: &[f64], truth: &[f64], mask: &[bool]) -> Result<f64> {
    if estimate.len() != truth.len() || truth.len() != mask.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate {}, truth {}, mask {}",
            estimate.len(),
            truth.len(),
            mask.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..truth.len() {
        if !mask[i] {
            continue;
        }
        if !(truth[i] > 0.0) {
            return Err(Error::ZeroTruth(i));
        }
        sum += (estimate[i] - truth[i]).abs() / truth[i];
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRoi);
    }
    Ok(sum / count as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiStats {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator; 0 for one voxel).
    pub std: f64,
    pub normalized_std: f64,
}

pub fn roi_stats(map: &[f64], roi: &[bool]) -> Result<RoiStats> {
    if map.len() != roi.len() {
        return Err(Error::DimensionMismatch(format!("map {}, roi {}", map.len(), roi.len())));
    }
    let vals: Vec<f64> = map.iter().zip(roi).filter(|(_, &r)| r).map(|(&v, _)| v).collect();
    if vals.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = if vals.len() > 1 {
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(RoiStats {
        mean,
        std,
        normalized_std: if std == 0.0 { 0.0 } else { std / mean },
    })
}
