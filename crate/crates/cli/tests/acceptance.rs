//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cogspace::adapt::{
    recovery_statistics, CalibrationProtocol, SimulatedParticipant, DEFAULT_REFINEMENT_ROUNDS,
    PLANTED_OPTIMUM, RECOVERY_TOLERANCE,
};
use cogspace::eeg::{band_power, welch_psd, EegSession, FrequencyBand, DEFAULT_CHANNELS};
use cogspace::layout::{generate_layout, validate_layout};
use cogspace::model::{fit_cubic, optimal_cli, predict, LoadModel, ObservationSet};
use cogspace::space::{spatial_config_from_cli, VariableKind, VariableSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Id, name, runtime limit, check.
type Criterion = (u32, &'static str, Option<Duration>, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn spectral() -> Verdict {
    let fs = 256.0;
    let sine: Vec<f64> = (0..2560)
        .map(|i| (2.0 * PI * 20.0 * i as f64 / fs).sin())
        .collect();
    let psd = welch_psd(&sine, fs, 256, 0.5).unwrap();
    let fraction = band_power(&psd, &FrequencyBand::BETA).unwrap() / psd.total_power();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise: Vec<f64> = (0..65536)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mean = noise.iter().sum::<f64>() / noise.len() as f64;
    let var = noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / noise.len() as f64;
    let integral = welch_psd(&noise, fs, 256, 0.5).unwrap().total_power();
    let parseval = (integral - var).abs() / var;

    verdict(
        fraction >= 0.95 && parseval < 0.02,
        format!(
            "beta fraction {fraction:.4} (≥ 0.95), Parseval error {:.3}% (< 2%)",
            parseval * 100.0
        ),
    )
}

fn grid_argmax(model: &LoadModel) -> f64 {
    let (mut best_x, mut best_y) = (0.0, f64::NEG_INFINITY);
    for i in 0..=100_000 {
        let x = i as f64 * 0.001;
        let y = predict(model, x);
        if y > best_y {
            best_x = x;
            best_y = y;
        }
    }
    best_x
}

fn regression() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rel = 0.0f64;
    let mut worst_rmse = 0.0f64;
    let mut worst_r2 = 0.0f64;
    let mut cubics = vec![SimulatedParticipant::planted(0.0, 0).true_beta];
    for _ in 0..20 {
        let scaled: [f64; 4] = std::array::from_fn(|_| {
            rng.random_range(0.1..2.0) * if rng.random() { 1.0 } else { -1.0 }
        });
        cubics.push(std::array::from_fn(|k| scaled[k] / 100f64.powi(k as i32)));
    }
    for beta in &cubics {
        let truth = LoadModel::from_coefficients(*beta);
        let obs = ObservationSet::new(
            [0.0, 25.0, 50.0, 75.0, 100.0]
                .iter()
                .map(|&x| (x, predict(&truth, x)))
                .collect(),
        )
        .unwrap();
        let m = fit_cubic(&obs).unwrap();
        for (got, want) in m.coefficients().iter().zip(beta) {
            worst_rel = worst_rel.max((got - want).abs() / want.abs());
        }
        worst_rmse = worst_rmse.max(m.rmse);
        worst_r2 = worst_r2.max((m.r_squared - 1.0).abs());
    }

    let mut misses = 0;
    let mut worst_dx = 0.0f64;
    for _ in 0..1000 {
        let scaled: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let m = LoadModel::from_coefficients(std::array::from_fn(|k| {
            scaled[k] / 100f64.powi(k as i32)
        }));
        let dx = (optimal_cli(&m).optimum.x_star - grid_argmax(&m)).abs();
        worst_dx = worst_dx.max(dx);
        if dx > 1e-3 {
            misses += 1;
        }
    }
    verdict(
        worst_rel <= 1e-6 && worst_rmse < 1e-9 && worst_r2 < 1e-12 && misses == 0,
        format!(
            "max coef rel err {worst_rel:.2e}, max rmse {worst_rmse:.2e}, max |R²-1| {worst_r2:.1e}; \
             grid scan {}/1000 within 1e-3 (worst {worst_dx:.2e})",
            1000 - misses
        ),
    )
}

fn remap() -> Verdict {
    let mut matches = 0;
    let mut cases = 0;
    for cli in 0..=100i64 {
        for kind in VariableKind::ALL {
            let spec = VariableSpec::new(kind, 100);
            let v_max = spec.v_max as i64;
            // Integer half-away-from-zero rounding of v_max·(100 − cli)/100.
            let mut expected = (2 * v_max * (100 - cli) + 100) / 200;
            if kind == VariableKind::CeilingHeight {
                expected = expected.clamp(2, 10);
            }
            let got = cogspace::space::remap_variable(cli as f64, &spec).unwrap();
            cases += 1;
            if got == expected as f64 {
                matches += 1;
            }
        }
    }
    let row = spatial_config_from_cli(0.0, 100).unwrap();
    let row_ok = (
        row.ceiling_height_m,
        row.window_count,
        row.partition_count,
        row.furniture_area_m2,
    ) == (10, 10, 15, 50);
    verdict(
        matches == 404 && cases == 404 && row_ok,
        format!(
            "{matches}/{cases} exact, CLI=0 row (10 m, 10, 15, 50 m²) {}",
            if row_ok { "ok" } else { "wrong" }
        ),
    )
}

fn layouts() -> Verdict {
    let mut ok = 0;
    let mut total = 0;
    for cli in (0..=100).step_by(10) {
        let config = spatial_config_from_cli(cli as f64, 100).unwrap();
        for seed in 0..100 {
            total += 1;
            if generate_layout(&config, seed).is_ok_and(|l| validate_layout(&l).ok) {
                ok += 1;
            }
        }
    }
    verdict(
        ok == 1100 && total == 1100,
        format!("{ok}/{total} layouts valid"),
    )
}

/// Frozen participant family: optimum at the planted value, shape drawn from seed 2024.
fn family(sigma: f64) -> Vec<SimulatedParticipant> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100u64)
        .map(|seed| {
            let other_root = rng.random_range(-80.0..-20.0);
            let gain = rng.random_range(0.8..1.2);
            SimulatedParticipant::with_interior_peak(
                PLANTED_OPTIMUM,
                other_root,
                1.0,
                gain,
                sigma,
                seed,
            )
        })
        .collect()
}

fn recovery() -> Verdict {
    let protocol = CalibrationProtocol::default();
    let clean = recovery_statistics(&family(0.0), &protocol, DEFAULT_REFINEMENT_ROUNDS).unwrap();
    let within_one = clean
        .records
        .iter()
        .filter(|r| r.abs_error.is_some_and(|e| e <= 1.0))
        .count();
    let noisy = recovery_statistics(&family(0.1), &protocol, DEFAULT_REFINEMENT_ROUNDS).unwrap();
    verdict(
        within_one == 100 && noisy.fraction_within >= 0.8,
        format!(
            "noiseless {within_one}/100 within ±1.0; σ=0.1 {}/100 within ±{RECOVERY_TOLERANCE} \
             (mean |error| {:.2})",
            noisy.within_tolerance, noisy.mean_abs_error
        ),
    )
}

fn run(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_cogspace"))
        .args(args)
        .current_dir(dir)
        .output()
        .is_ok_and(|o| o.status.success())
}

fn determinism() -> Verdict {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let fs = 256.0;
    let x: Vec<f64> = (0..256 * 8)
        .map(|i| {
            (2.0 * PI * 20.0 * i as f64 / fs).sin() + 0.3 * (2.0 * PI * 7.0 * i as f64 / fs).cos()
        })
        .collect();
    let session = EegSession::new(
        fs,
        DEFAULT_CHANNELS.iter().map(|c| c.to_string()).collect(),
        vec![x; 4],
    )
    .unwrap();
    let batch: Vec<_> = (0..3)
        .map(|s| SimulatedParticipant::planted(0.1, s))
        .collect();

    let outputs = [
        "psd.csv",
        "spectrum.csv",
        "model.json",
        "fit_layout.json",
        "cli_layout.json",
        "scenes.json",
        "sim.json",
        "curves.csv",
    ];
    let mut all_ran = true;
    for dir in &runs {
        let d = dir.path();
        session
            .write_csv(std::fs::File::create(d.join("session.csv")).unwrap())
            .unwrap();
        std::fs::write(
            d.join("obs.csv"),
            "x,y\n0,0.1\n20,0.9\n45,1.3\n70,1.1\n100,0.2\n",
        )
        .unwrap();
        std::fs::write(d.join("batch.json"), serde_json::to_vec(&batch).unwrap()).unwrap();
        all_ran &= run(
            d,
            &[
                "psd",
                "session.csv",
                "--out",
                "psd.csv",
                "--spectrum",
                "spectrum.csv",
            ],
        );
        all_ran &= run(d, &["fit", "obs.csv", "--out", "model.json"]);
        all_ran &= run(
            d,
            &[
                "generate",
                "model.json",
                "--seed",
                "5",
                "--out",
                "fit_layout.json",
            ],
        );
        all_ran &= run(
            d,
            &[
                "generate",
                "--cli",
                "37",
                "--seed",
                "11",
                "--out",
                "cli_layout.json",
            ],
        );
        all_ran &= run(d, &["scenes", "--out", "scenes.json"]);
        all_ran &= run(
            d,
            &[
                "simulate",
                "batch.json",
                "--out",
                "sim.json",
                "--curves",
                "curves.csv",
            ],
        );
    }
    let identical = outputs
        .iter()
        .filter(|name| {
            let a = std::fs::read(runs[0].path().join(name));
            let b = std::fs::read(runs[1].path().join(name));
            matches!((a, b), (Ok(a), Ok(b)) if a == b)
        })
        .count();
    verdict(
        all_ran && identical == outputs.len(),
        format!(
            "{identical}/{} output files byte-identical across two runs",
            outputs.len()
        ),
    )
}

fn main() {
    println!("criterion 1: INFO human-subject outcomes are not reproducible in simulation; criteria 2-7 stand in");
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: [Criterion; 6] = [
        (2, "spectral correctness", secs(1), spectral),
        (3, "regression exactness", secs(30), regression),
        (4, "remap conformance", None, remap),
        (5, "layout validity", secs(60), layouts),
        (6, "closed-loop recovery", secs(120), recovery),
        (7, "determinism", None, determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && limit.is_none_or(|l| elapsed < l);
        if !pass {
            failed += 1;
        }
        let limit = limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
        println!(
            "criterion {id}: {} {name}: {} [{:.2} s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
