//! Dataset manifests and deterministic calibration/test splitting.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rng::Lcg64;

pub const MANIFEST_HEADER: &str = "image_id,stack_path,gt_path,quality_label,split";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QualityLabel {
    High,
    Low,
    Unknown,
}

impl QualityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::High => "high",
            QualityLabel::Low => "low",
            QualityLabel::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "high" => Ok(QualityLabel::High),
            "low" => Ok(QualityLabel::Low),
            "unknown" => Ok(QualityLabel::Unknown),
            other => Err(Error::MalformedManifest(format!(
                "unknown quality label {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Calibration,
    Test,
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Calibration => "calibration",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "calibration" => Ok(Split::Calibration),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(Error::MalformedManifest(format!(
                "unknown split {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image_id: String,
    pub stack_path: PathBuf,
    pub gt_path: PathBuf,
    pub quality_label: QualityLabel,
    pub split: Split,
}

/// Ordered dataset manifest. Paths resolve relative to `base_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::MalformedManifest(format!(
                    "duplicate image_id {:?}",
                    r.image_id
                )));
            }
        }
        Ok(Manifest {
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn calibration(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records
            .iter()
            .filter(|r| r.split == Split::Calibration)
    }

    pub fn test(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(|r| r.split == Split::Test)
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
    let expected: Vec<&str> = MANIFEST_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MalformedManifest(format!(
            "{}: header must be `{MANIFEST_HEADER}`",
            path.display()
        )));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
        if row.len() != 5 {
            return Err(Error::MalformedManifest(format!(
                "{}: expected 5 fields, got {}",
                path.display(),
                row.len()
            )));
        }
        records.push(ManifestRecord {
            image_id: row[0].to_string(),
            stack_path: PathBuf::from(&row[1]),
            gt_path: PathBuf::from(&row[2]),
            quality_label: QualityLabel::parse(&row[3])?,
            split: Split::parse(&row[4])?,
        });
    }

    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Manifest::new(records, base_dir)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for r in &manifest.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.image_id,
            r.stack_path.display(),
            r.gt_path.display(),
            r.quality_label.as_str(),
            r.split.as_str()
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Assigns calibration/test splits by a seeded shuffle of the sorted image ids.
///
/// Takes exactly round-half-up(calib_fraction * count) records as calibration.
/// The assignment depends only on the set of image ids and the seed, not on
/// the input record order.
pub fn split_manifest(manifest: &Manifest, calib_fraction: f64, seed: u64) -> Result<Manifest> {
    if !(calib_fraction > 0.0 && calib_fraction < 1.0) {
        return Err(Error::MalformedManifest(format!(
            "calib_fraction must be in (0,1), got {calib_fraction}"
        )));
    }
    if let Some(r) = manifest.records.iter().find(|r| r.split != Split::Unassigned) {
        return Err(Error::AlreadySplit(r.image_id.clone()));
    }

    let mut ids: Vec<&str> = manifest.records.iter().map(|r| r.image_id.as_str()).collect();
    ids.sort_unstable();
    let mut rng = Lcg64::new(seed);
    rng.shuffle(&mut ids);

    let n_calib = (calib_fraction * ids.len() as f64 + 0.5).floor() as usize;
    let calib_ids: HashSet<&str> = ids[..n_calib].iter().copied().collect();

    let records = manifest
        .records
        .iter()
        .map(|r| ManifestRecord {
            split: if calib_ids.contains(r.image_id.as_str()) {
                Split::Calibration
            } else {
                Split::Test
            },
            ..r.clone()
        })
        .collect();

    Manifest::new(records, manifest.base_dir.clone())
}
