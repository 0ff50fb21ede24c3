//! Soft confusion-matrix estimators, soft/exact DSC, and temperature scaling.

use crate::error::{Error, Result};
use crate::maps::{BinaryMask, ProbMap};

/// Expected confusion-matrix counts derived from per-pixel probabilities.
///
/// With decision threshold 0.5, tp is the probability mass on positively
/// predicted pixels, fp the remaining count on those pixels, and fn_ the
/// probability mass on negatively predicted pixels. Pixels at exactly 0.5
/// count toward fn_.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftConfusion {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
    pub n_pixels: usize,
}

pub fn soft_confusion(map: &ProbMap) -> Result<SoftConfusion> {
    map.validate()?;
    let mut tp = 0.0_f64;
    let mut fn_ = 0.0_f64;
    let mut n_pos = 0_usize;
    for &p in &map.values {

        if p > 0.5 {
            tp += p;
            n_pos += 1;
        } else {
            fn_ += p;
        }
    }
    Ok(SoftConfusion {
        tp,
        fp: n_pos as f64 - tp,
        fn_,
        n_pixels: map.len(),
    })
}

/// 2TP / (2TP + FP + FN); 1.0 for the empty-vs-empty case.
pub fn soft_dsc(conf: &SoftConfusion) -> f64 {
    let denom = 2.0 * conf.tp + conf.fp + conf.fn_;
    if denom == 0.0 {
        1.0
    } else {
        2.0 * conf.tp / denom
    }
}

/// Exact DSC between two binary masks; 1.0 when both are empty.
pub fn true_dsc(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    if pred.height != gt.height || pred.width != gt.width {
        return Err(Error::ShapeMismatch(format!(
            "pred {}x{} vs gt {}x{}",
            pred.height, pred.width, gt.height, gt.width
        )));
    }
    let intersection = pred
        .values
        .iter()
        .zip(&gt.values)
        .filter(|(&a, &b)| a && b)
        .count();
    let denom = pred.foreground_count() + gt.foreground_count();
    if denom == 0 {
        Ok(1.0)
    } else {
        Ok(2.0 * intersection as f64 / denom as f64)
    }
}

/// Temperature-scaling parameter; t = 1 is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(pub f64);

impl Temperature {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::ProbabilityOutOfRange(t));
        }
        Ok(Temperature(t))
    }
}

const LOGIT_CLAMP: f64 = 1e-7;

/// Log-odds with probabilities clamped away from 0 and 1.
pub fn logit(p: f64) -> f64 {
    let p = p.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
    (p / (1.0 - p)).ln()
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Replaces each p by logistic(logit(p) / T). Exact 0 and 1 are fixed points.
pub fn apply_temperature(map: &ProbMap, temperature: Temperature) -> Result<ProbMap> {
    map.validate()?;
    if temperature.0 == 1.0 {
        return Ok(map.clone());
    }
    let values = map
        .values
        .iter()
        .map(|&p| {
            if p == 0.0 || p == 1.0 {
                p
            } else {
                logistic(logit(p) / temperature.0)
            }
        })
        .collect();
    ProbMap::new(map.height, map.width, values)
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean binary cross-entropy of the temperature-scaled maps against the masks.
fn bce_objective(pairs: &[(&ProbMap, &BinaryMask)], t: f64) -> f64 {
    let mut total = 0.0_f64;
    let mut count = 0_usize;
    for (map, gt) in pairs {
        for (&p, &y) in map.values.iter().zip(&gt.values) {
            let z = logit(p) / t;
            // -ln q for y=1 is softplus(-z); for y=0 it is softplus(z)
            total += if y { softplus(-z) } else { softplus(z) };
            count += 1;
        }
    }
    total / count as f64
}

const LOG_T_MIN: f64 = -2.995732273553991; // ln 0.05
const LOG_T_MAX: f64 = 2.995732273553991; // ln 20
const GOLDEN_ITERS: usize = 200;

/// Fits the temperature minimizing mean BCE of `apply_temperature` against
/// the ground-truth masks, by golden-section search on log-T.
pub fn fit_temperature(maps: &[ProbMap], gts: &[BinaryMask]) -> Result<Temperature> {
    if maps.is_empty() || gts.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    if maps.len() != gts.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} maps vs {} masks",
            maps.len(),
            gts.len()
        )));
    }
    let mut pairs = Vec::with_capacity(maps.len());
    for (map, gt) in maps.iter().zip(gts) {
        if map.height != gt.height || map.width != gt.width {
            return Err(Error::ShapeMismatch(format!(
                "map {}x{} vs mask {}x{}",
                map.height, map.width, gt.height, gt.width
            )));
        }
        map.validate()?;
        pairs.push((map, gt));
    }

    let invphi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = LOG_T_MIN;
    let mut b = LOG_T_MAX;
    for _ in 0..GOLDEN_ITERS {
        let c = b - (b - a) * invphi;
        let d = a + (b - a) * invphi;
        let fc = bce_objective(&pairs, c.exp());
        let fd = bce_objective(&pairs, d.exp());
        if fc < fd {
            b = d;
        } else if fd < fc {
            a = c;
        } else {
            // flat segment: shrink both ends, keeping the bracket symmetric
            a = c;
            b = d;
        }
    }
    Temperature::new(((a + b) / 2.0).exp())
}
