//! Coverage, interval-size and quality-grouped evaluation, and report emission.

use std::path::Path;

use crate::error::{Error, Result};
use crate::manifest::QualityLabel;

pub const PREDICTIONS_HEADER: &str =
    "image_id,y_true,y_hat,sigma,lower,upper,width,covered,quality_label";

/// One test image's prediction outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub image_id: String,
    pub y_true: f64,
    pub y_hat: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub covered: bool,
    pub quality_label: QualityLabel,
}

impl PredictionRecord {
    /// Coverage membership is inclusive at both endpoints.
    pub fn new(
        image_id: impl Into<String>,
        y_true: f64,
        y_hat: f64,
        sigma: f64,
        lower: f64,
        upper: f64,
        quality_label: QualityLabel,
    ) -> Self {
        PredictionRecord {
            image_id: image_id.into(),
            y_true,
            y_hat,
            sigma,
            lower,
            upper,
            width: upper - lower,
            covered: lower <= y_true && y_true <= upper,
            quality_label,
        }
    }
}

/// Interval-size bins (0,0.1], (0.1,0.2], (0.2,0.5], (0.5,1].
/// Width exactly 0 falls in the first bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeBins {
    pub edges: Vec<f64>,
}

impl Default for SizeBins {
    fn default() -> Self {
        SizeBins {
            edges: vec![0.0, 0.1, 0.2, 0.5, 1.0],
        }
    }
}

impl SizeBins {
    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn label(&self, bin: usize) -> String {
        format!("({},{}]", self.edges[bin], self.edges[bin + 1])
    }

    pub fn bin_of(&self, width: f64) -> usize {
        if width <= self.edges[0] {
            return 0;
        }
        for bin in 0..self.n_bins() {
            if width <= self.edges[bin + 1] {
                return bin;
            }
        }
        self.n_bins() - 1
    }
}

/// Count and coverage within one interval-size bin; empty bins carry no
/// coverage value.
#[derive(Debug, Clone, PartialEq)]
pub struct BinCoverage {
    pub label: String,
    pub count: usize,
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCoverage {
    pub quality: QualityLabel,
    pub count: usize,
    pub coverage: Option<f64>,
    pub per_bin: Vec<BinCoverage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthStats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub alpha: f64,
    pub n_test: usize,
    pub marginal_coverage: f64,
    pub mae: f64,
    pub width_stats: WidthStats,
    pub per_bin: Vec<BinCoverage>,
    pub per_quality: Vec<GroupCoverage>,
}

pub fn marginal_coverage(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let covered = records.iter().filter(|r| r.covered).count();
    Ok(covered as f64 / records.len() as f64)
}

pub fn conditional_coverage(
    records: &[PredictionRecord],
    bins: &SizeBins,
) -> Result<Vec<BinCoverage>> {
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut counts = vec![0usize; bins.n_bins()];
    let mut covered = vec![0usize; bins.n_bins()];
    for r in records {
        let b = bins.bin_of(r.width);
        counts[b] += 1;
        if r.covered {
            covered[b] += 1;
        }
    }
    Ok((0..bins.n_bins())
        .map(|b| BinCoverage {
            label: bins.label(b),
            count: counts[b],
            coverage: (counts[b] > 0).then(|| covered[b] as f64 / counts[b] as f64),
        })
        .collect())
}

pub fn grouped_coverage(
    records: &[PredictionRecord],
    bins: &SizeBins,
) -> Result<Vec<GroupCoverage>> {
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let groups = [QualityLabel::High, QualityLabel::Low, QualityLabel::Unknown];
    let mut out = Vec::with_capacity(groups.len());
    for quality in groups {
        let subset: Vec<PredictionRecord> = records
            .iter()
            .filter(|r| r.quality_label == quality)
            .cloned()
            .collect();
        let (coverage, per_bin) = if subset.is_empty() {
            (
                None,
                (0..bins.n_bins())
                    .map(|b| BinCoverage {
                        label: bins.label(b),
                        count: 0,
                        coverage: None,
                    })
                    .collect(),
            )
        } else {
            (
                Some(marginal_coverage(&subset)?),
                conditional_coverage(&subset, bins)?,
            )
        };
        out.push(GroupCoverage {
            quality,
            count: subset.len(),
            coverage,
            per_bin,
        });
    }
    Ok(out)
}

pub fn mae(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    Ok(records
        .iter()
        .map(|r| (r.y_true - r.y_hat).abs())
        .sum::<f64>()
        / records.len() as f64)
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn width_stats(records: &[PredictionRecord]) -> Result<WidthStats> {
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut widths: Vec<f64> = records.iter().map(|r| r.width).collect();
    widths.sort_by(|a, b| a.total_cmp(b));
    Ok(WidthStats {
        mean: widths.iter().sum::<f64>() / widths.len() as f64,
        median: quantile_sorted(&widths, 0.5),
        q1: quantile_sorted(&widths, 0.25),
        q3: quantile_sorted(&widths, 0.75),
    })
}

pub fn build_report(
    records: &[PredictionRecord],
    bins: &SizeBins,
    alpha: f64,
) -> Result<CoverageReport> {
    Ok(CoverageReport {
        alpha,
        n_test: records.len(),
        marginal_coverage: marginal_coverage(records)?,
        mae: mae(records)?,
        width_stats: width_stats(records)?,
        per_bin: conditional_coverage(records, bins)?,
        per_quality: grouped_coverage(records, bins)?,
    })
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_f6(v: Option<f64>) -> String {
    match v {
        Some(v) => f6(v),
        None => "null".to_string(),
    }
}

fn bins_json(bins: &[BinCoverage], indent: &str) -> String {
    let items: Vec<String> = bins
        .iter()
        .map(|b| {
            format!(
                "{indent}  {{\"bin\": \"{}\", \"count\": {}, \"coverage\": {}}}",
                b.label,
                b.count,
                opt_f6(b.coverage)
            )
        })
        .collect();
    format!("[\n{}\n{indent}]", items.join(",\n"))
}

/// Writes the report JSON (fixed key order, 6-decimal floats, null markers
/// for empty bins) and the prediction-record CSV.
pub fn emit_report(
    report: &CoverageReport,
    records: &[PredictionRecord],
    path_json: impl AsRef<Path>,
    path_csv: impl AsRef<Path>,
) -> Result<()> {
    let mut json = String::new();
    json.push_str("{\n");
    json.push_str(&format!("  \"alpha\": {},\n", f6(report.alpha)));
    json.push_str(&format!("  \"n_test\": {},\n", report.n_test));
    json.push_str(&format!(
        "  \"marginal_coverage\": {},\n",
        f6(report.marginal_coverage)
    ));
    json.push_str(&format!("  \"mae\": {},\n", f6(report.mae)));
    json.push_str(&format!(
        "  \"width_stats\": {{\"mean\": {}, \"median\": {}, \"q1\": {}, \"q3\": {}}},\n",
        f6(report.width_stats.mean),
        f6(report.width_stats.median),
        f6(report.width_stats.q1),
        f6(report.width_stats.q3)
    ));
    json.push_str(&format!(
        "  \"per_bin\": {},\n",
        bins_json(&report.per_bin, "  ")
    ));
    let groups: Vec<String> = report
        .per_quality
        .iter()
        .map(|g| {
            format!(
                "    {{\"quality\": \"{}\", \"count\": {}, \"coverage\": {}, \"per_bin\": {}}}",
                g.quality.as_str(),
                g.count,
                opt_f6(g.coverage),
                bins_json(&g.per_bin, "    ")
            )
        })
        .collect();
    json.push_str(&format!(
        "  \"per_quality\": [\n{}\n  ]\n",
        groups.join(",\n")
    ));
    json.push_str("}\n");

    let path_json = path_json.as_ref();
    std::fs::write(path_json, json).map_err(|e| Error::io(path_json, e))?;
    write_predictions(path_csv, records)
}

pub fn write_predictions(
    path: impl AsRef<Path>,
    records: &[PredictionRecord],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(PREDICTIONS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.image_id,
            f6(r.y_true),
            f6(r.y_hat),
            f6(r.sigma),
            f6(r.lower),
            f6(r.upper),
            f6(r.width),
            r.covered,
            r.quality_label.as_str()
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
    let expected: Vec<&str> = PREDICTIONS_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MalformedManifest(format!(
            "{}: header must be `{PREDICTIONS_HEADER}`",
            path.display()
        )));
    }
    let parse_f64 = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::MalformedManifest(format!("{}: bad float {s:?}", path.display())))
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedManifest(format!("{}: {e}", path.display())))?;
        if row.len() != 9 {
            return Err(Error::MalformedManifest(format!(
                "{}: expected 9 fields, got {}",
                path.display(),
                row.len()
            )));
        }
        records.push(PredictionRecord {
            image_id: row[0].to_string(),
            y_true: parse_f64(&row[1])?,
            y_hat: parse_f64(&row[2])?,
            sigma: parse_f64(&row[3])?,
            lower: parse_f64(&row[4])?,
            upper: parse_f64(&row[5])?,
            width: parse_f64(&row[6])?,
            covered: match &row[7] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::MalformedManifest(format!(
                        "{}: bad covered flag {other:?}",
                        path.display()
                    )))
                }
            },
            quality_label: QualityLabel::parse(&row[8])?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn record(id: &str, y: f64, lower: f64, upper: f64, q: QualityLabel) -> PredictionRecord {
        PredictionRecord::new(id, y, (lower + upper) / 2.0, 0.05, lower, upper, q)
    }

    fn sample_records() -> Vec<PredictionRecord> {
        vec![
            record("a", 0.9, 0.85, 0.95, QualityLabel::High),
            record("b", 0.8, 0.82, 0.9, QualityLabel::High),
            record("c", 0.5, 0.2, 0.8, QualityLabel::Low),
            record("d", 0.4, 0.0, 1.0, QualityLabel::Low),
            record("e", 0.7, 0.7, 0.7, QualityLabel::Unknown),
        ]
    }

    #[test]
    fn marginal_counting() {
        let records: Vec<PredictionRecord> = (0..10)
            .map(|i| record(&format!("r{i}"), 0.5, 0.4, if i < 9 { 0.6 } else { 0.45 }, QualityLabel::High))
            .collect();
        assert!((marginal_coverage(&records).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn trivial_intervals_cover_everything() {
        let records: Vec<PredictionRecord> = (0..5)
            .map(|i| record(&format!("r{i}"), i as f64 / 4.0, 0.0, 1.0, QualityLabel::High))
            .collect();
        assert_eq!(marginal_coverage(&records).unwrap(), 1.0);
    }

    #[test]
    fn coverage_is_inclusive_at_endpoints() {
        let r = record("edge", 0.7, 0.7, 0.9, QualityLabel::High);
        assert!(r.covered);
        let r = record("edge2", 0.9, 0.7, 0.9, QualityLabel::High);
        assert!(r.covered);
    }

    #[test]
    fn bin_assignment() {
        let bins = SizeBins::default();
        assert_eq!(bins.bin_of(0.0), 0);
        assert_eq!(bins.bin_of(0.07), 0);
        assert_eq!(bins.bin_of(0.1), 0);
        assert_eq!(bins.bin_of(0.15), 1);
        assert_eq!(bins.bin_of(0.2), 1);
        assert_eq!(bins.bin_of(0.35), 2);
        assert_eq!(bins.bin_of(0.9), 3);
        assert_eq!(bins.bin_of(1.0), 3);
    }

    #[test]
    fn conditional_coverage_partitions() {
        let records = sample_records();
        let per_bin = conditional_coverage(&records, &SizeBins::default()).unwrap();
        let total: usize = per_bin.iter().map(|b| b.count).sum();
        assert_eq!(total, records.len());
        // no record has width in (0.1, 0.2]
        assert_eq!(per_bin[1].count, 0);
        assert_eq!(per_bin[1].coverage, None);
    }

    #[test]
    fn small_covered_record_lands_in_first_bin() {
        let records = vec![record("a", 0.9, 0.85, 0.92, QualityLabel::High)];
        let per_bin = conditional_coverage(&records, &SizeBins::default()).unwrap();
        assert_eq!(per_bin[0].count, 1);
        assert_eq!(per_bin[0].coverage, Some(1.0));
    }

    #[test]
    fn grouped_coverage_matches_filtering() {
        let records = sample_records();
        let groups = grouped_coverage(&records, &SizeBins::default()).unwrap();
        for g in &groups {
            let subset: Vec<PredictionRecord> = records
                .iter()
                .filter(|r| r.quality_label == g.quality)
                .cloned()
                .collect();
            assert_eq!(g.count, subset.len());
            match g.coverage {
                Some(c) => assert_eq!(c, marginal_coverage(&subset).unwrap()),
                None => assert!(subset.is_empty()),
            }
        }
        let total: usize = groups.iter().map(|g| g.count).sum();
        assert_eq!(total, records.len());
    }

    #[test]
    fn all_high_leaves_low_group_empty() {
        let records = vec![record("a", 0.9, 0.8, 1.0, QualityLabel::High)];
        let groups = grouped_coverage(&records, &SizeBins::default()).unwrap();
        let low = groups.iter().find(|g| g.quality == QualityLabel::Low).unwrap();
        assert_eq!(low.count, 0);
        assert_eq!(low.coverage, None);
    }

    #[test]
    fn mae_hand_values() {
        let records = vec![
            record("a", 0.6, 0.45, 0.55, QualityLabel::High), // y_hat 0.5, err 0.1
            record("b", 0.5, 0.45, 0.55, QualityLabel::High), // err 0.0
        ];
        assert!((mae(&records).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn marginal_equals_weighted_bin_mean() {
        let records = sample_records();
        let per_bin = conditional_coverage(&records, &SizeBins::default()).unwrap();
        let weighted: f64 = per_bin
            .iter()
            .filter_map(|b| b.coverage.map(|c| c * b.count as f64))
            .sum::<f64>()
            / records.len() as f64;
        assert!((weighted - marginal_coverage(&records).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn report_round_trip_and_determinism() {
        let dir = tempdir().unwrap();
        let records = sample_records();
        let report = build_report(&records, &SizeBins::default(), 0.1).unwrap();
        let json_a = dir.path().join("a.json");
        let csv_a = dir.path().join("a.csv");
        emit_report(&report, &records, &json_a, &csv_a).unwrap();
        let json_b = dir.path().join("b.json");
        let csv_b = dir.path().join("b.csv");
        emit_report(&report, &records, &json_b, &csv_b).unwrap();
        assert_eq!(
            std::fs::read(&json_a).unwrap(),
            std::fs::read(&json_b).unwrap()
        );
        assert_eq!(
            std::fs::read(&csv_a).unwrap(),
            std::fs::read(&csv_b).unwrap()
        );

        let back = read_predictions(&csv_a).unwrap();
        assert_eq!(back.len(), records.len());
        for (orig, got) in records.iter().zip(&back) {
            assert_eq!(orig.image_id, got.image_id);
            assert!((orig.y_true - got.y_true).abs() < 1e-6);
            assert!((orig.width - got.width).abs() < 1e-6);
            assert_eq!(orig.covered, got.covered);
            assert_eq!(orig.quality_label, got.quality_label);
        }

        // empty bins serialize as null, not 0
        let text = std::fs::read_to_string(&json_a).unwrap();
        assert!(text.contains("\"coverage\": null"));
        // valid JSON
        let _: serde_json::Value = serde_json::from_str(&text).unwrap();
    }

    #[test]
    fn empty_records_rejected() {
        assert!(matches!(marginal_coverage(&[]), Err(Error::EmptyTestSet)));
        assert!(matches!(mae(&[]), Err(Error::EmptyTestSet)));
        assert!(matches!(
            conditional_coverage(&[], &SizeBins::default()),
            Err(Error::EmptyTestSet)
        ));
    }
}
