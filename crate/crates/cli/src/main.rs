use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use perfrange::conformal::{DEFAULT_ALPHA, DEFAULT_SIGMA_FLOOR};
use perfrange::manifest::{Manifest, ManifestRecord};
use perfrange::maps::SampleStack;
use perfrange::soft_metrics::Temperature;
use perfrange::{
    apply_temperature, build_report, calibrate, emit_case_plot, emit_report,
    estimate_performance, fit_temperature, load_model, mean_map, predict_range,
    read_manifest, read_mask, read_predictions, read_sample_stack, save_model,
    simulate_dataset, split_manifest, true_dsc, write_manifest, Error, PerfEstimate,
    PredictionRecord, SimConfig, SizeBins,
};

#[derive(Parser)]
#[command(
    name = "perfrange",
    about = "Conformal performance range prediction for segmentation outputs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset of sample stacks and ground-truth masks
    Simulate(SimulateArgs),
    /// Calibrate a conformal model on the calibration split
    Calibrate(CalibrateArgs),
    /// Predict performance ranges for the test split
    Predict(PredictArgs),
    /// Evaluate coverage and interval sizes of a predictions file
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    n_images: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    difficulty_min: f64,
    #[arg(long, default_value_t = 3.0)]
    difficulty_max: f64,
    #[arg(long, default_value_t = 1.0)]
    miscal_temp: f64,
    #[arg(long, default_value_t = 0.0)]
    low_quality_fraction: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Split the manifest in place before calibrating
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SIGMA_FLOOR)]
    sigma_floor: f64,
    /// Fit temperature scaling on the calibration maps and apply it before
    /// estimation
    #[arg(long)]
    fit_temperature: bool,
    /// Output model path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Apply this temperature to every map before estimation (use the value
    /// printed by `calibrate --fit-temperature`)
    #[arg(long)]
    temperature: Option<f64>,
    /// Output predictions CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    report_json: PathBuf,
    #[arg(long)]
    report_csv: PathBuf,
    #[arg(long)]
    plot_svg: PathBuf,
}

fn scale_stack(stack: &SampleStack, temperature: Temperature) -> Result<SampleStack, Error> {
    let maps = (0..stack.n_samples)
        .map(|n| apply_temperature(&stack.sample_map(n), temperature))
        .collect::<Result<Vec<_>, _>>()?;
    SampleStack::from_samples(maps)
}

/// Loads one record's stack and ground truth and computes the estimate and
/// the true DSC of the delivered (thresholded mean) segmentation.
fn evaluate_record(
    manifest: &Manifest,
    record: &ManifestRecord,
    temperature: Option<Temperature>,
) -> Result<(PerfEstimate, f64), Error> {
    let stack = read_sample_stack(manifest.resolve(&record.stack_path))?;
    let gt = read_mask(manifest.resolve(&record.gt_path))?;
    if stack.height != gt.height || stack.width != gt.width {
        return Err(Error::ShapeMismatch(format!(
            "image {}: stack {}x{} vs mask {}x{}",
            record.image_id, stack.height, stack.width, gt.height, gt.width
        )));
    }
    let stack = match temperature {
        Some(t) => scale_stack(&stack, t)?,
        None => stack,
    };
    let est = estimate_performance(&stack)?;
    let y_true = true_dsc(&mean_map(&stack)?.threshold(), &gt)?;
    Ok((est, y_true))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let config = SimConfig {
        n_images: args.n_images,
        height: args.height,
        width: args.width,
        n_samples: args.samples,
        seed: args.seed,
        difficulty_range: (args.difficulty_min, args.difficulty_max),
        miscal_temperature: args.miscal_temp,
        low_quality_fraction: args.low_quality_fraction,
    };
    config.validate()?;
    simulate_dataset(&config, &args.out_dir)?;
    println!("{}", args.out_dir.join("manifest.csv").display());
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), Error> {
    let mut manifest = read_manifest(&args.manifest)?;
    if let Some(fraction) = args.split_fraction {
        manifest = split_manifest(&manifest, fraction, args.seed)?;
        write_manifest(&args.manifest, &manifest)?;
    }
    let calib_records: Vec<&ManifestRecord> = manifest.calibration().collect();
    if calib_records.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }

    let temperature = if args.fit_temperature {
        let mut maps = Vec::with_capacity(calib_records.len());
        let mut gts = Vec::with_capacity(calib_records.len());
        for record in &calib_records {
            let stack = read_sample_stack(manifest.resolve(&record.stack_path))?;
            maps.push(mean_map(&stack)?);
            gts.push(read_mask(manifest.resolve(&record.gt_path))?);
        }
        let t = fit_temperature(&maps, &gts)?;
        println!("fitted temperature: {:.6}", t.0);
        Some(t)
    } else {
        None
    };

    let mut calib = Vec::with_capacity(calib_records.len());
    for record in &calib_records {
        calib.push(evaluate_record(&manifest, record, temperature)?);
    }
    let model = calibrate(
        &calib,
        args.alpha,
        args.sigma_floor,
        args.manifest.display().to_string(),
    )?;
    save_model(&model, &args.out)?;
    println!("M: {}", model.m);
    println!("q_hat: {}", model.q_hat);
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), Error> {
    let manifest = read_manifest(&args.manifest)?;
    let model = load_model(&args.model)?;
    let temperature = args.temperature.map(Temperature::new).transpose()?;

    let mut records = Vec::new();
    for record in manifest.test() {
        let (est, y_true) = evaluate_record(&manifest, record, temperature)?;
        let range = predict_range(&est, &model);
        records.push(PredictionRecord::new(
            record.image_id.clone(),
            y_true,
            est.y_hat,
            est.sigma,
            range.lower,
            range.upper,
            record.quality_label,
        ));
    }
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    perfrange::write_predictions(&args.out, &records)?;
    println!("{}", args.out.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let records = read_predictions(&args.predictions)?;
    if records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let bins = SizeBins::default();
    // alpha is echoed from the predictions context; reports carry the default
    let report = build_report(&records, &bins, DEFAULT_ALPHA)?;
    emit_report(&report, &records, &args.report_json, &args.report_csv)?;
    emit_case_plot(&records, &args.plot_svg)?;
    println!("marginal_coverage: {:.6}", report.marginal_coverage);
    println!("mean_width: {:.6}", report.width_stats.mean);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
