//! Pixel grids: probability maps, binary masks, and sample stacks.

use crate::error::{Error, Result};

/// Per-pixel foreground-probability field for one image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl ProbMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDims(format!("{height}x{width}")));
        }
        if values.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {height}x{width}, got {}",
                height * width,
                values.len()
            )));
        }
        Ok(ProbMap {
            height,
            width,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fails on the first non-finite value or value outside [0,1].
    pub fn validate(&self) -> Result<()> {
        for &p in &self.values {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange(p));
            }
        }
        Ok(())
    }

    /// Binary mask of pixels with p > 0.5.
    pub fn threshold(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&p| p > 0.5).collect(),
        }
    }
}

/// Binary segmentation mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub height: usize,
    pub width: usize,
    pub values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, values: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDims(format!("{height}x{width}")));
        }
        if values.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {height}x{width}, got {}",
                height * width,
                values.len()
            )));
        }
        Ok(BinaryMask {
            height,
            width,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn foreground_count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}

/// N probability maps for one image drawn from a probabilistic segmenter.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStack {
    pub n_samples: usize,
    pub height: usize,
    pub width: usize,
    /// n_samples * height * width values, sample-major.
    pub values: Vec<f64>,
}

impl SampleStack {
    pub fn new(n_samples: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if n_samples == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidDims(format!("{n_samples}x{height}x{width}")));
        }
        if values.len() != n_samples * height * width {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {n_samples}x{height}x{width}, got {}",
                n_samples * height * width,
                values.len()
            )));
        }
        Ok(SampleStack {
            n_samples,
            height,
            width,
            values,
        })
    }

    pub fn from_samples(samples: Vec<ProbMap>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyStack)?;
        let (h, w) = (first.height, first.width);
        let mut values = Vec::with_capacity(samples.len() * h * w);
        let n = samples.len();
        for s in &samples {
            if s.height != h || s.width != w {
                return Err(Error::ShapeMismatch(format!(
                    "sample dims {}x{} differ from {h}x{w}",
                    s.height, s.width
                )));
            }
            values.extend_from_slice(&s.values);
        }
        SampleStack::new(n, h, w, values)
    }

    /// Borrow the n-th sample as a flat pixel slice.
    pub fn sample(&self, n: usize) -> &[f64] {
        let px = self.height * self.width;
        &self.values[n * px..(n + 1) * px]
    }

    pub fn sample_map(&self, n: usize) -> ProbMap {
        ProbMap {
            height: self.height,
            width: self.width,
            values: self.sample(n).to_vec(),
        }
    }
}
