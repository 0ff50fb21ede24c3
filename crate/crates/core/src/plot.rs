//! Sorted-case SVG plot: one vertical prediction band per test image.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::PredictionRecord;
use crate::manifest::QualityLabel;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

fn marker_color(quality: QualityLabel) -> &'static str {
    match quality {
        QualityLabel::High => "#2e8b57",
        QualityLabel::Low => "#d62728",
        QualityLabel::Unknown => "#808080",
    }
}

/// Writes a standalone SVG with cases sorted by ground-truth DSC descending:
/// gray band [lower, upper], black marker at y_true, quality-colored marker
/// at y_hat. Output is deterministic in the record set.
pub fn emit_case_plot(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut sorted: Vec<&PredictionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        b.y_true
            .total_cmp(&a.y_true)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let n = sorted.len();
    let step = plot_w / n as f64;
    let band_w = (step * 0.8).min(12.0);
    let to_y = |v: f64| MARGIN_TOP + (1.0 - v.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    // axes
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = to_y(0.0);
    let y1 = to_y(1.0);
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    for tick in 0..=4 {
        let v = tick as f64 * 0.25;
        let y = to_y(v);
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\" stroke-width=\"1\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{v:.2}</text>",
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">case (sorted by ground-truth DSC, descending)</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">DSC</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, r) in sorted.iter().enumerate() {
        let cx = MARGIN_LEFT + (i as f64 + 0.5) * step;
        let band_x = cx - band_w / 2.0;
        let top = to_y(r.upper);
        let bottom = to_y(r.lower);
        let _ = writeln!(
            svg,
            "  <rect class=\"band\" x=\"{band_x:.3}\" y=\"{top:.3}\" width=\"{band_w:.3}\" height=\"{:.3}\" fill=\"#c0c0c0\" fill-opacity=\"0.7\"/>",
            bottom - top
        );
        let _ = writeln!(
            svg,
            "  <circle class=\"truth\" cx=\"{cx:.3}\" cy=\"{:.3}\" r=\"2.5\" fill=\"black\"/>",
            to_y(r.y_true)
        );
        let _ = writeln!(
            svg,
            "  <circle class=\"estimate\" cx=\"{cx:.3}\" cy=\"{:.3}\" r=\"2.5\" fill=\"{}\"/>",
            to_y(r.y_hat),
            marker_color(r.quality_label)
        );
    }

    let _ = writeln!(svg, "</svg>");
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn record(id: &str, y: f64, q: QualityLabel) -> PredictionRecord {
        PredictionRecord::new(id, y, y + 0.02, 0.05, y - 0.1, y + 0.1, q)
    }

    #[test]
    fn single_record_valid_svg() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        emit_case_plot(&[record("a", 0.8, QualityLabel::High)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert_eq!(text.matches("class=\"band\"").count(), 1);
        assert_eq!(text.matches("class=\"truth\"").count(), 1);
        assert_eq!(text.matches("class=\"estimate\"").count(), 1);
        // well-formed XML: every tag closed
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("DSC"));
    }

    #[test]
    fn input_order_does_not_matter() {
        let dir = tempdir().unwrap();
        let records = vec![
            record("a", 0.9, QualityLabel::High),
            record("b", 0.5, QualityLabel::Low),
            record("c", 0.7, QualityLabel::High),
        ];
        let mut shuffled = records.clone();
        shuffled.reverse();
        let p1 = dir.path().join("a.svg");
        let p2 = dir.path().join("b.svg");
        emit_case_plot(&records, &p1).unwrap();
        emit_case_plot(&shuffled, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn marker_colors_follow_quality() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        let records = vec![
            record("hi", 0.9, QualityLabel::High),
            record("lo", 0.4, QualityLabel::Low),
            record("un", 0.6, QualityLabel::Unknown),
        ];
        emit_case_plot(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("fill=\"#2e8b57\""));
        assert!(text.contains("fill=\"#d62728\""));
        assert!(text.contains("fill=\"#808080\""));
    }

    #[test]
    fn empty_records_rejected() {
        let dir = tempdir().unwrap();
        assert!(matches!(
            emit_case_plot(&[], dir.path().join("x.svg")),
            Err(Error::EmptyTestSet)
        ));
    }
}
