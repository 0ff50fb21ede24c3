//! Split conformal calibration of heuristic ranges into guaranteed ranges.

use std::path::Path;

use crate::error::{Error, Result};
use crate::perf::{heuristic_range, HeuristicRange, PerfEstimate};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

/// Calibrated corrective factor and the settings it was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalModel {
    pub alpha: f64,
    pub m: usize,
    pub q_hat: f64,
    pub sigma_floor: f64,
    pub created_from: String,
}

/// Clamped prediction interval for the true DSC.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfRange {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub heuristic: HeuristicRange,
}

impl PerfRange {
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

/// Standardized residual |y - y_hat| / max(sigma, sigma_floor).
pub fn score(y: f64, est: &PerfEstimate, sigma_floor: f64) -> f64 {
    (y - est.y_hat).abs() / est.sigma.max(sigma_floor)
}

/// k-th smallest calibration score with k = ceil((1-alpha)(M+1)), or
/// +infinity when k exceeds M.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    let m = scores.len();
    let k = ((1.0 - alpha) * (m as f64 + 1.0)).ceil() as usize;
    if k > m {
        return Ok(f64::INFINITY);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted[k - 1])
}

/// Computes q_hat from (estimate, true DSC) calibration pairs.
pub fn calibrate(
    calib: &[(PerfEstimate, f64)],
    alpha: f64,
    sigma_floor: f64,
    created_from: impl Into<String>,
) -> Result<ConformalModel> {
    if calib.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    let scores: Vec<f64> = calib
        .iter()
        .map(|(est, y)| score(*y, est, sigma_floor))
        .collect();
    let q_hat = conformal_quantile(&scores, alpha)?;
    Ok(ConformalModel {
        alpha,
        m: calib.len(),
        q_hat,
        sigma_floor,
        created_from: created_from.into(),
    })
}

/// Heuristic bounds scaled by q_hat and clamped to [0,1].
pub fn predict_range(est: &PerfEstimate, model: &ConformalModel) -> PerfRange {
    let heuristic = heuristic_range(est);
    let sigma_eff = est.sigma.max(model.sigma_floor);
    let (lower, upper) = if model.q_hat.is_infinite() {
        (0.0, 1.0)
    } else {
        (
            (est.y_hat - model.q_hat * sigma_eff).clamp(0.0, 1.0),
            (est.y_hat + model.q_hat * sigma_eff).clamp(0.0, 1.0),
        )
    };
    PerfRange {
        lower,
        upper,
        width: upper - lower,
        heuristic,
    }
}

fn fmt_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Writes the model as JSON with a fixed key order; q_hat = +infinity is
/// serialized as the string "inf".
pub fn save_model(model: &ConformalModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let q_hat = if model.q_hat.is_infinite() {
        "\"inf\"".to_string()
    } else {
        fmt_float(model.q_hat)
    };
    let json = format!(
        "{{\n  \"alpha\": {},\n  \"m\": {},\n  \"q_hat\": {},\n  \"sigma_floor\": {},\n  \"created_from\": {}\n}}\n",
        fmt_float(model.alpha),
        model.m,
        q_hat,
        fmt_float(model.sigma_floor),
        serde_json::to_string(&model.created_from).expect("string serialization"),
    );
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ConformalModel> {
    let path = path.as_ref();
    let malformed = |reason: &str| Error::MalformedModelFile {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| malformed(&e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed("not an object"))?;

    let number = |key: &str| -> Result<f64> {
        obj.get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| malformed(&format!("missing or non-numeric key \"{key}\"")))
    };
    let alpha = number("alpha")?;
    let sigma_floor = number("sigma_floor")?;
    let m = obj
        .get("m")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| malformed("missing or non-integer key \"m\""))? as usize;
    let q_hat = match obj.get("q_hat") {
        Some(serde_json::Value::String(s)) if s == "inf" => f64::INFINITY,
        Some(v) => v
            .as_f64()
            .ok_or_else(|| malformed("key \"q_hat\" must be a number or \"inf\""))?,
        None => return Err(malformed("missing key \"q_hat\"")),
    };
    let created_from = obj
        .get("created_from")
        .and_then(|v| v.as_str())
        .ok_or_else(|| malformed("missing or non-string key \"created_from\""))?
        .to_string();

    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(malformed("alpha must be in (0,1)"));
    }
    if sigma_floor <= 0.0 || sigma_floor.is_nan() {
        return Err(malformed("sigma_floor must be positive"));
    }
    if q_hat < 0.0 {
        return Err(malformed("q_hat must be non-negative"));
    }

    Ok(ConformalModel {
        alpha,
        m,
        q_hat,
        sigma_floor,
        created_from,
    })
}
