//! Per-sample performance estimates, the point estimate, and heuristic bounds.

use crate::error::{Error, Result};
use crate::maps::{ProbMap, SampleStack};
use crate::soft_metrics::{soft_confusion, soft_dsc};

/// Sampling-based performance estimate for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfEstimate {
    /// Point estimate from the averaged map.
    pub y_hat: f64,
    /// Per-sample soft-DSC estimates.
    pub per_sample: Vec<f64>,
    /// Sample standard deviation of `per_sample` (N-1 denominator).
    pub sigma: f64,
}

/// Unclamped heuristic interval y_hat +/- sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicRange {
    pub lower: f64,
    pub upper: f64,
}

/// Pixelwise arithmetic mean of the stack's probability maps.
pub fn mean_map(stack: &SampleStack) -> Result<ProbMap> {
    if stack.n_samples == 0 {
        return Err(Error::EmptyStack);
    }
    let px = stack.height * stack.width;
    let mut acc = vec![0.0_f64; px];
    for n in 0..stack.n_samples {
        for (a, &v) in acc.iter_mut().zip(stack.sample(n)) {
            *a += v;
        }
    }
    let inv = 1.0 / stack.n_samples as f64;
    ProbMap::new(
        stack.height,
        stack.width,
        acc.into_iter().map(|a| a * inv).collect(),
    )
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

/// Soft-DSC point estimate, per-sample estimates, and their spread.
pub fn estimate_performance(stack: &SampleStack) -> Result<PerfEstimate> {
    if stack.n_samples < 2 {
        return Err(Error::EmptyStack);
    }
    let mut per_sample = Vec::with_capacity(stack.n_samples);
    for n in 0..stack.n_samples {
        let map = stack.sample_map(n);
        per_sample.push(soft_dsc(&soft_confusion(&map)?));
    }
    let y_hat = soft_dsc(&soft_confusion(&mean_map(stack)?)?);
    let sigma = sample_std(&per_sample);
    Ok(PerfEstimate {
        y_hat,
        per_sample,
        sigma,
    })
}

/// y_hat +/- sigma, unclamped. Clamping happens after conformal adjustment.
pub fn heuristic_range(est: &PerfEstimate) -> HeuristicRange {
    HeuristicRange {
        lower: est.y_hat - est.sigma,
        upper: est.y_hat + est.sigma,
    }
}
