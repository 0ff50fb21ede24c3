//! Statistically guaranteed segmentation-performance ranges from stacks of
//! probabilistic segmentation samples, via split conformal prediction.
//!
//! The crate covers the full pipeline: binary tensor and manifest IO,
//! soft-DSC estimation with optional temperature scaling, heuristic ranges
//! from per-sample spread, conformal calibration of a corrective factor,
//! coverage evaluation, and a synthetic probabilistic segmenter for
//! desk-scale experiments.

pub mod conformal;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod maps;
pub mod perf;
pub mod plot;
pub mod rng;
pub mod soft_metrics;
pub mod synth;
pub mod tensor;

pub use conformal::{
    calibrate, conformal_quantile, load_model, predict_range, save_model, score, ConformalModel,
    PerfRange, DEFAULT_ALPHA, DEFAULT_SIGMA_FLOOR,
};
pub use error::{Error, Result};
pub use eval::{
    build_report, conditional_coverage, emit_report, grouped_coverage, mae, marginal_coverage,
    read_predictions, write_predictions, CoverageReport, PredictionRecord, SizeBins,
};
pub use manifest::{
    read_manifest, split_manifest, write_manifest, Manifest, ManifestRecord, QualityLabel, Split,
};
pub use maps::{BinaryMask, ProbMap, SampleStack};
pub use perf::{estimate_performance, heuristic_range, mean_map, HeuristicRange, PerfEstimate};
pub use plot::emit_case_plot;
pub use soft_metrics::{
    apply_temperature, fit_temperature, soft_confusion, soft_dsc, true_dsc, SoftConfusion,
    Temperature,
};
pub use synth::{generate_ground_truth, generate_stack, predicted_mask, simulate_dataset, SimConfig};
pub use tensor::{read_mask, read_sample_stack, read_tensor, write_tensor, Tensor, TensorData};
