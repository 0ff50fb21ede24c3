//! Synthetic probabilistic segmenter.
//!
//! Generates ground-truth masks and sample stacks with controllable
//! miscalibration (temperature) and per-image difficulty (logit noise),
//! so coverage behavior can be exercised without trained networks.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::manifest::{Manifest, ManifestRecord, QualityLabel, Split};
use crate::maps::{BinaryMask, ProbMap, SampleStack};
use crate::rng::Lcg64;
use crate::tensor::{write_mask, write_sample_stack};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_images: usize,
    pub height: usize,
    pub width: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub difficulty_range: (f64, f64),
    pub miscal_temperature: f64,
    pub low_quality_fraction: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidDims(format!(
                "n_samples must be >= 2, got {}",
                self.n_samples
            )));
        }
        if self.height < 8 || self.width < 8 {
            return Err(Error::InvalidDims(format!(
                "dims must be >= 8x8, got {}x{}",
                self.height, self.width
            )));
        }
        let (d_min, d_max) = self.difficulty_range;
        if !(d_min.is_finite() && d_max.is_finite() && 0.0 <= d_min && d_min <= d_max) {
            return Err(Error::InvalidDims(format!(
                "difficulty range must satisfy 0 <= min <= max, got [{d_min}, {d_max}]"
            )));
        }
        if !(self.miscal_temperature.is_finite() && self.miscal_temperature > 0.0) {
            return Err(Error::InvalidDims(format!(
                "miscal temperature must be positive, got {}",
                self.miscal_temperature
            )));
        }
        if !(0.0..=1.0).contains(&self.low_quality_fraction) {
            return Err(Error::InvalidDims(format!(
                "low_quality_fraction must be in [0,1], got {}",
                self.low_quality_fraction
            )));
        }
        Ok(())
    }
}

const N_BUMPS: usize = 8;
const GT_PERCENTILE: f64 = 0.7;

/// One pass of the 3x3 majority vote used to stabilize masks; ties go to
/// background, matching the strict > 0.5 decision threshold.
fn majority_pass(mask: &[bool], height: usize, width: usize) -> Vec<bool> {
    let mut out = vec![false; height * width];
    for y in 0..height {
        for x in 0..width {
            let mut sum = 0i32;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let ny = y as i64 + dy;
                    let nx = x as i64 + dx;
                    if ny >= 0 && ny < height as i64 && nx >= 0 && nx < width as i64 {
                        sum += if mask[ny as usize * width + nx as usize] {
                            1
                        } else {
                            -1
                        };
                    }
                }
            }
            out[y * width + x] = sum > 0;
        }
    }
    out
}

/// Sum of random anisotropic gaussian bumps thresholded at its 70th
/// percentile, then cleaned until stable under a 3x3 majority vote so the
/// box-smoothed logit field reproduces the mask exactly when noiseless.
/// Deterministic in the rng state.
pub fn generate_ground_truth(height: usize, width: usize, rng: &mut Lcg64) -> BinaryMask {
    let mut field = vec![0.0_f64; height * width];
    let scale_max = (width as f64 / 4.0).max(3.0);
    for _ in 0..N_BUMPS {
        let cx = rng.uniform(0.0, width as f64);
        let cy = rng.uniform(0.0, height as f64);
        let sx = rng.uniform(3.0, scale_max.max(3.0 + 1e-9));
        let sy = rng.uniform(3.0, scale_max.max(3.0 + 1e-9));
        let theta = rng.uniform(0.0, std::f64::consts::PI);
        let (sin_t, cos_t) = theta.sin_cos();
        for y in 0..height {
            for x in 0..width {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let u = cos_t * dx + sin_t * dy;
                let v = -sin_t * dx + cos_t * dy;
                let q = (u / sx) * (u / sx) + (v / sy) * (v / sy);
                field[y * width + x] += (-0.5 * q).exp();
            }
        }
    }
    let mut sorted = field.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let idx = ((sorted.len() - 1) as f64 * GT_PERCENTILE).round() as usize;
    let threshold = sorted[idx];
    let mut values: Vec<bool> = field.into_iter().map(|v| v > threshold).collect();
    for _ in 0..16 {
        let next = majority_pass(&values, height, width);
        if next == values {
            break;
        }
        values = next;
    }
    BinaryMask {
        height,
        width,
        values,
    }
}

/// Logit magnitude of clean pixels (~0.982 confidence before smoothing).
const BASE_LOGIT: f64 = 4.0;

fn box3(field: &[f64], height: usize, width: usize) -> Vec<f64> {
    let mut out = vec![0.0_f64; height * width];
    for y in 0..height {
        for x in 0..width {
            let mut sum = 0.0;
            let mut count = 0u32;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let ny = y as i64 + dy;
                    let nx = x as i64 + dx;
                    if ny >= 0 && ny < height as i64 && nx >= 0 && nx < width as i64 {
                        sum += field[ny as usize * width + nx as usize];
                        count += 1;
                    }
                }
            }
            out[y * width + x] = sum / count as f64;
        }
    }
    out
}

/// Draws N probability maps around the ground truth.
///
/// Base logit field is +/- BASE_LOGIT smoothed with a 3x3 box filter; each
/// sample adds a smooth gaussian noise field of std `difficulty` and maps
/// logits through logistic(. / temperature).
pub fn generate_stack(
    gt: &BinaryMask,
    difficulty: f64,
    temperature: f64,
    n_samples: usize,
    rng: &mut Lcg64,
) -> SampleStack {
    let (h, w) = (gt.height, gt.width);
    let px = h * w;
    let base: Vec<f64> = gt
        .values
        .iter()
        .map(|&fg| if fg { BASE_LOGIT } else { -BASE_LOGIT })
        .collect();
    let base = box3(&base, h, w);

    let mut values = Vec::with_capacity(n_samples * px);
    let mut raw_noise = vec![0.0_f64; px];
    for _ in 0..n_samples {
        let noise = if difficulty > 0.0 {
            for v in raw_noise.iter_mut() {
                *v = rng.next_gaussian() * difficulty;
            }
            box3(&raw_noise, h, w)
        } else {
            vec![0.0; px]
        };
        for i in 0..px {
            let z = (base[i] + noise[i]) / temperature;
            values.push(1.0 / (1.0 + (-z).exp()));
        }
    }
    SampleStack {
        n_samples,
        height: h,
        width: w,
        values,
    }
}

/// Per-image difficulty and quality label assignment for a config.
///
/// A low_quality_fraction of images (round-half-up, taken from the front)
/// draw their difficulty from the top 20% of the range and are labeled low.
pub fn assign_difficulties(config: &SimConfig) -> Vec<(f64, QualityLabel)> {
    let (d_min, d_max) = config.difficulty_range;
    let n_low = (config.low_quality_fraction * config.n_images as f64 + 0.5).floor() as usize;
    let low_floor = d_max - 0.2 * (d_max - d_min);
    let mut rng = Lcg64::substream(config.seed, 0);
    (0..config.n_images)
        .map(|i| {
            if i < n_low {
                (rng.uniform(low_floor, d_max), QualityLabel::Low)
            } else {
                (rng.uniform(d_min, d_max), QualityLabel::High)
            }
        })
        .collect()
}

/// Generates one image's ground truth and sample stack from its sub-seed.
pub fn generate_image(
    config: &SimConfig,
    index: usize,
    difficulty: f64,
) -> (BinaryMask, SampleStack) {
    let mut rng = Lcg64::substream(config.seed, index as u64 + 1);
    let gt = generate_ground_truth(config.height, config.width, &mut rng);
    let stack = generate_stack(
        &gt,
        difficulty,
        config.miscal_temperature,
        config.n_samples,
        &mut rng,
    );
    (gt, stack)
}

/// Writes tensor pairs and a manifest.csv into `out_dir`; split left
/// unassigned. Returns the manifest.
pub fn simulate_dataset(config: &SimConfig, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let assignments = assign_difficulties(config);
    let mut records = Vec::with_capacity(config.n_images);
    for (i, (difficulty, quality)) in assignments.iter().enumerate() {
        let (gt, stack) = generate_image(config, i, *difficulty);
        let image_id = format!("img{i:05}");
        let stack_path = PathBuf::from(format!("{image_id}_stack.cprp"));
        let gt_path = PathBuf::from(format!("{image_id}_gt.cprp"));
        write_sample_stack(out_dir.join(&stack_path), &stack)?;
        write_mask(out_dir.join(&gt_path), &gt)?;
        records.push(ManifestRecord {
            image_id,
            stack_path,
            gt_path,
            quality_label: *quality,
            split: Split::Unassigned,
        });
    }
    let manifest = Manifest::new(records, out_dir)?;
    crate::manifest::write_manifest(out_dir.join("manifest.csv"), &manifest)?;
    Ok(manifest)
}

/// Mean of the stack's samples, thresholded. The delivered segmentation.
pub fn predicted_mask(stack: &SampleStack) -> Result<BinaryMask> {
    Ok(crate::perf::mean_map(stack)?.threshold())
}

/// Convenience: probability maps of a stack as owned ProbMaps.
pub fn stack_maps(stack: &SampleStack) -> Vec<ProbMap> {
    (0..stack.n_samples).map(|n| stack.sample_map(n)).collect()
}
