//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `-- --nocapture` to see the lines for passing
//! criteria as well).

use std::path::Path;
use std::process::Command;

use perfrange::maps::{BinaryMask, ProbMap};
use perfrange::rng::Lcg64;
use perfrange::soft_metrics::logit;
use perfrange::synth::{generate_ground_truth, generate_stack, predicted_mask};
use perfrange::{
    calibrate, conformal_quantile, estimate_performance, fit_temperature, predict_range, score,
    soft_confusion, soft_dsc, true_dsc, ConformalModel, PerfEstimate,
};

fn report(criterion: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("[{verdict}] {criterion}: {detail}");
    assert!(ok, "{criterion}: {detail}");
}

/// One synthetic case: estimate plus the true DSC of the delivered mask.
fn make_case(seed: u64, index: u64, difficulty: f64, miscal_t: f64) -> (PerfEstimate, f64) {
    let mut rng = Lcg64::substream(seed, index + 1);
    let gt = generate_ground_truth(32, 32, &mut rng);
    let stack = generate_stack(&gt, difficulty, miscal_t, 20, &mut rng);
    let est = estimate_performance(&stack).unwrap();
    let y = true_dsc(&predicted_mask(&stack).unwrap(), &gt).unwrap();
    (est, y)
}

/// Calibrates on the first `n_calib` cases and returns (coverage, mae,
/// widths, one (width, y_true) pair per test case).
fn run_trial(
    seed: u64,
    n_calib: usize,
    n_test: usize,
    difficulty_range: (f64, f64),
    miscal_t: f64,
) -> (f64, f64, Vec<(f64, f64)>) {
    let n = n_calib + n_test;
    let mut difficulty_rng = Lcg64::substream(seed, 0);
    let difficulties: Vec<f64> = (0..n)
        .map(|_| difficulty_rng.uniform(difficulty_range.0, difficulty_range.1))
        .collect();
    let cases: Vec<(PerfEstimate, f64)> = (0..n)
        .map(|i| make_case(seed, i as u64, difficulties[i], miscal_t))
        .collect();
    let model = calibrate(&cases[..n_calib], 0.1, 1e-6, "trial").unwrap();

    let mut covered = 0usize;
    let mut abs_err = 0.0;
    let mut per_case = Vec::with_capacity(n_test);
    for (est, y) in &cases[n_calib..] {
        let range = predict_range(est, &model);
        if range.contains(*y) {
            covered += 1;
        }
        abs_err += (est.y_hat - y).abs();
        per_case.push((range.width, *y));
    }
    (
        covered as f64 / n_test as f64,
        abs_err / n_test as f64,
        per_case,
    )
}

#[test]
fn criterion_coverage_guarantee() {
    let trials = 100;
    let mut sum = 0.0;
    for t in 0..trials {
        let (coverage, _, _) = run_trial(1000 + t, 500, 500, (0.5, 3.0), 1.5);
        sum += coverage;
    }
    let mean = sum / trials as f64;
    report(
        "coverage guarantee",
        (0.89..=0.915).contains(&mean),
        &format!("mean coverage over {trials} trials = {mean:.4}, want [0.89, 0.915]"),
    );
}

#[test]
fn criterion_quantile_oracle() {
    let mut rng = Lcg64::new(77);
    let mut failures = 0;
    for _ in 0..1000 {
        let m = 1 + rng.next_below(200) as usize;
        let alpha = rng.uniform(0.01, 0.5);
        let scores: Vec<f64> = (0..m).map(|_| rng.uniform(0.0, 25.0)).collect();
        let got = conformal_quantile(&scores, alpha).unwrap();
        let k = ((1.0 - alpha) * (m as f64 + 1.0)).ceil() as usize;
        let want = if k > m {
            f64::INFINITY
        } else {
            // brute force: smallest value with at least k values <= it
            scores
                .iter()
                .copied()
                .filter(|&s| scores.iter().filter(|&&o| o <= s).count() >= k)
                .fold(f64::INFINITY, f64::min)
        };
        if got != want {
            failures += 1;
        }
    }
    report(
        "quantile oracle",
        failures == 0,
        &format!("{failures} mismatches out of 1000 random cases"),
    );
}

#[test]
fn criterion_soft_dsc_hand_oracle() {
    let map = ProbMap::new(2, 2, vec![0.9, 0.8, 0.3, 0.1]).unwrap();
    let conf = soft_confusion(&map).unwrap();
    let dsc = soft_dsc(&conf);
    // tp = 0.9 + 0.8, fp = 2 - tp, fn = 0.3 + 0.1, dsc = 3.4 / 4.1
    let ok = (conf.tp - 1.7).abs() < 1e-12
        && (conf.fp - 0.3).abs() < 1e-12
        && (conf.fn_ - 0.4).abs() < 1e-12
        && (dsc - 3.4 / 4.1).abs() < 1e-12;
    report(
        "soft-DSC hand oracle",
        ok,
        &format!("tp={}, fp={}, fn={}, dsc={}", conf.tp, conf.fp, conf.fn_, dsc),
    );
}

#[test]
fn criterion_score_interval_duality() {
    let mut rng = Lcg64::new(4242);
    let mut failures = 0;
    let mut done = 0;
    while done < 10_000 {
        let y = rng.next_f64();
        let y_hat = rng.next_f64();
        let sigma = rng.uniform(0.0, 0.3);
        let q_hat = rng.uniform(0.0, 8.0);
        // only tuples whose unclamped interval stays inside [0, 1]
        let half = q_hat * sigma.max(1e-6);
        if y_hat - half < 0.0 || y_hat + half > 1.0 {
            continue;
        }
        done += 1;
        let est = PerfEstimate {
            y_hat,
            per_sample: vec![y_hat, y_hat],
            sigma,
        };
        let model = ConformalModel {
            alpha: 0.1,
            m: 50,
            q_hat,
            sigma_floor: 1e-6,
            created_from: String::new(),
        };
        let in_range = predict_range(&est, &model).contains(y);
        let below_quantile = score(y, &est, model.sigma_floor) <= q_hat;
        if in_range != below_quantile {
            failures += 1;
        }
    }
    report(
        "score/interval duality",
        failures == 0,
        &format!("{failures} disagreements out of 10000 random tuples"),
    );
}

#[test]
fn criterion_miscalibration_robustness() {
    let mut mae_cal = 0.0;
    let mut mae_mis = 0.0;
    let mut cov_cal = 0.0;
    let mut cov_mis = 0.0;
    // single-trial coverage is noisy because q_hat itself fluctuates, so
    // the criterion is checked on the trial mean
    let trials = 10;
    for t in 0..trials {
        let (c, m, _) = run_trial(9000 + t, 500, 500, (0.5, 3.0), 1.0);
        cov_cal += c;
        mae_cal += m;
        let (c, m, _) = run_trial(9000 + t, 500, 500, (0.5, 3.0), 2.5);
        cov_mis += c;
        mae_mis += m;
    }
    let n = trials as f64;
    let (mae_cal, mae_mis, cov_cal, cov_mis) =
        (mae_cal / n, mae_mis / n, cov_cal / n, cov_mis / n);
    let ok = mae_mis > mae_cal && cov_cal >= 0.89 && cov_mis >= 0.89;
    report(
        "miscalibration robustness",
        ok,
        &format!(
            "mae {mae_cal:.4} -> {mae_mis:.4} (must increase), \
             coverage {cov_cal:.4} / {cov_mis:.4} (both >= 0.89)"
        ),
    );
}

#[test]
fn criterion_temperature_recovery() {
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for (i, &t_star) in [0.5, 1.0, 2.0].iter().enumerate() {
        // calibrated probabilities, labels drawn from them, observed maps
        // distorted by sharpening/softening the logits by t_star
        let mut rng = Lcg64::new(600 + i as u64);
        let mut maps = Vec::new();
        let mut gts = Vec::new();
        for _ in 0..20 {
            let mut observed = Vec::with_capacity(500);
            let mut labels = Vec::with_capacity(500);
            for _ in 0..500 {
                let p_true = rng.uniform(0.02, 0.98);
                labels.push(rng.next_f64() < p_true);
                observed.push(1.0 / (1.0 + (-logit(p_true) * t_star).exp()));
            }
            maps.push(ProbMap::new(1, 500, observed).unwrap());
            gts.push(BinaryMask::new(1, 500, labels).unwrap());
        }
        let fitted = fit_temperature(&maps, &gts).unwrap().0;
        worst = worst.max((fitted - t_star).abs());
        detail.push_str(&format!("T*={t_star}: fitted {fitted:.4}; "));
    }
    report(
        "temperature recovery",
        worst <= 0.05,
        &format!("{detail}max error {worst:.4}, want <= 0.05"),
    );
}

fn spearman(pairs: &[(f64, f64)]) -> f64 {
    fn ranks(values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut out = vec![0.0; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && values[order[j + 1]] == values[order[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &idx in &order[i..=j] {
                out[idx] = avg;
            }
            i = j + 1;
        }
        out
    }
    let xs = ranks(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let ys = ranks(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let n = pairs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn criterion_width_tracks_difficulty() {
    let (_, _, per_case) = run_trial(31337, 300, 300, (0.5, 4.0), 1.0);
    let pairs: Vec<(f64, f64)> = per_case.iter().map(|&(w, y)| (w, 1.0 - y)).collect();
    let rho = spearman(&pairs);
    report(
        "width tracks difficulty",
        rho > 0.3,
        &format!("Spearman(width, 1 - DSC) = {rho:.4}, want > 0.3"),
    );
}

fn run_pipeline(dir: &Path) {
    let bin = env!("CARGO_BIN_EXE_perfrange");
    // relative paths with the run directory as cwd, so the artifacts (which
    // echo paths, e.g. the model's created_from) are comparable across runs
    let steps: &[&[&str]] = &[
        &[
            "simulate",
            "--n-images",
            "40",
            "--samples",
            "10",
            "--seed",
            "5",
            "--miscal-temp",
            "1.5",
            "--low-quality-fraction",
            "0.25",
            "--out-dir",
            ".",
        ],
        &[
            "calibrate",
            "--manifest",
            "manifest.csv",
            "--split-fraction",
            "0.5",
            "--seed",
            "5",
            "--out",
            "model.json",
        ],
        &[
            "predict",
            "--manifest",
            "manifest.csv",
            "--model",
            "model.json",
            "--out",
            "predictions.csv",
        ],
        &[
            "evaluate",
            "--predictions",
            "predictions.csv",
            "--report-json",
            "report.json",
            "--report-csv",
            "report.csv",
            "--plot-svg",
            "cases.svg",
        ],
    ];
    for step in steps {
        let out = Command::new(bin)
            .args(*step)
            .current_dir(dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "step {:?} failed: {}",
            step[0],
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn criterion_pipeline_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path());
    run_pipeline(b.path());
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut diffs = Vec::new();
    for name in &names {
        if std::fs::read(a.path().join(name)).unwrap() != std::fs::read(b.path().join(name)).unwrap()
        {
            diffs.push(name.clone());
        }
    }
    report(
        "pipeline determinism",
        diffs.is_empty() && names.len() == 86,
        &format!(
            "{} artifacts compared, differing: {:?}",
            names.len(),
            diffs
        ),
    );
}
