use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cogspace::adapt::{
    self, closed_loop_adapt, hidden_optimum, summarize, AdaptError, AdaptationResult,
    CalibrationProtocol, RecoveryRecord, RecoverySummary, SimulatedParticipant,
    DEFAULT_REFINEMENT_ROUNDS,
};
use cogspace::eeg::{
    self, ingest_session, segment_windows, BandPowerConfig, FrequencyBand, DEFAULT_SAMPLING_RATE,
};
use cogspace::layout::{generate_layout, serialize_layout, LayoutError};
use cogspace::model::{fit_cubic, optimal_cli, LoadModel, ObservationSet};
use cogspace::space::{extremum_scenes, spatial_config_from_cli, DEFAULT_FLOOR_AREA_M2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod output;

use output::{write_output, Output};

#[derive(Parser)]
#[command(
    name = "cogspace",
    version,
    about = "EEG-driven load modelling and adaptive room layouts"
)]
struct Cli {
    /// Print the effective run configuration to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-window band power of a recorded session (CSV).
    Psd(PsdArgs),
    /// Fit a cubic load model to an `x,y` observation table.
    Fit(FitArgs),
    /// Generate a layout from a CLI value or a fitted model.
    Generate(GenerateArgs),
    /// Emit the five calibration scene configurations.
    Scenes(ScenesArgs),
    /// Run the closed loop for a batch of simulated participants.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SignalArgs {
    /// Frequency band as LO:HI in Hz.
    #[arg(long, default_value = "13:30")]
    band: FrequencyBand,
    /// Analysis window length in seconds.
    #[arg(long, default_value_t = 2.0)]
    window: f64,
    /// Fractional overlap of consecutive windows.
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
}

impl SignalArgs {
    fn config(&self) -> BandPowerConfig {
        BandPowerConfig {
            window_seconds: self.window,
            overlap_fraction: self.overlap,
            band: self.band,
            ..BandPowerConfig::default()
        }
    }
}

#[derive(Args)]
struct PsdArgs {
    /// Session CSV, or `-` for stdin.
    session: PathBuf,
    #[command(flatten)]
    signal: SignalArgs,
    /// Also write the mean spectrum (frequency_hz,density) here.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Observation CSV with columns x,y, or `-` for stdin.
    observations: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Model JSON from `fit`, or `-` for stdin. Mutually exclusive with --cli.
    model: Option<PathBuf>,
    /// Cognitive Load Index in [0, 100].
    #[arg(long, conflicts_with = "model")]
    cli: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Floor area in m²; must be a perfect square.
    #[arg(long, default_value_t = DEFAULT_FLOOR_AREA_M2)]
    floor: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenesArgs {
    #[arg(long, default_value_t = DEFAULT_FLOOR_AREA_M2)]
    floor: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Batch JSON: a list of {seed, noise_sigma, true_beta}.
    batch: PathBuf,
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, default_value_t = DEFAULT_REFINEMENT_ROUNDS)]
    rounds: usize,
    #[arg(long, default_value_t = DEFAULT_FLOOR_AREA_M2)]
    floor: u32,
    /// Sampling rate of the synthesized sessions in Hz.
    #[arg(long, default_value_t = DEFAULT_SAMPLING_RATE)]
    fs: f64,
    /// Encoding session length per probe in seconds.
    #[arg(long, default_value_t = 300.0)]
    encoding: f64,
    /// Pre-adaptation session length per probe in seconds; 0 skips it.
    #[arg(long, default_value_t = 180.0)]
    pre_adaptation: f64,
    /// Write fitted curves (z-scored units) as CSV sampled at integer x.
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Generation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Generation(_) => 2,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::GenerationFailed { .. } => CliError::Generation(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn read_source(path: &Path) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    if path == Path::new("-") {
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(input("<stdin>"))?;
    } else {
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(input(path.display()))?;
    }
    Ok(buf)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage mistakes are input errors; 2 is reserved for generation failure.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Psd(a) => psd(a, cli.verbose),
        Command::Fit(a) => fit(a, cli.verbose),
        Command::Generate(a) => generate(a, cli.verbose),
        Command::Scenes(a) => scenes(a, cli.verbose),
        Command::Simulate(a) => simulate(a, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print_signal_config(config: &BandPowerConfig, sampling_rate: f64) {
    eprintln!(
        "fs {sampling_rate} Hz, band {}-{} Hz, window {} s, overlap {}, channels {}",
        config.band.low,
        config.band.high,
        config.window_seconds,
        config.overlap_fraction,
        config.channels.join("+"),
    );
}

fn print_space_config(floor: u32, seed: Option<u64>) {
    let side = (floor as f64).sqrt();
    eprint!("floor {floor} m² ({side}×{side}), rounding half-away-from-zero");
    match seed {
        Some(s) => eprintln!(", seed {s}"),
        None => eprintln!(),
    }
}

fn psd(args: &PsdArgs, verbose: bool) -> Result<(), CliError> {
    let name = args.session.display();
    let session = ingest_session(read_source(&args.session)?.as_slice()).map_err(input(&name))?;
    let config = args.signal.config();
    if verbose {
        print_signal_config(&config, session.sampling_rate);
    }
    let windows = segment_windows(&session, config.window_seconds, config.overlap_fraction)
        .map_err(input("windowing"))?;
    let power = eeg::band_power_series(&windows, &session, &config).map_err(input("band power"))?;

    let mut table = String::from("start_s,band_power,peak_uv\n");
    for (w, p) in windows.iter().zip(&power) {
        table.push_str(&format!("{},{},{}\n", w.start_time, p, w.peak_amplitude()));
    }
    write_output(Output::from(args.out.as_deref()), table.as_bytes())?;

    if let Some(path) = &args.spectrum {
        let spectrum = eeg::mean_spectrum(&session, &config)
            .map_err(input("spectrum"))?
            .ok_or_else(|| CliError::Input(format!("{name}: shorter than one window")))?;
        let mut text = String::from("frequency_hz,density\n");
        for (f, d) in spectrum.frequencies.iter().zip(&spectrum.density) {
            text.push_str(&format!("{f},{d}\n"));
        }
        write_output(Output::File(path), text.as_bytes())?;
    }
    eprintln!("{} windows from {:.1} s", power.len(), session.duration());
    Ok(())
}

#[derive(Deserialize)]
struct ObservationRow {
    x: f64,
    y: f64,
}

fn fit(args: &FitArgs, verbose: bool) -> Result<(), CliError> {
    let name = args.observations.display();
    let bytes = read_source(&args.observations)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let points = reader
        .deserialize::<ObservationRow>()
        .map(|r| r.map(|r| (r.x, r.y)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input(&name))?;
    if verbose {
        eprintln!("{} observations from {name}", points.len());
    }
    let obs = ObservationSet::new(points).map_err(input(&name))?;
    let model = fit_cubic(&obs).map_err(input(&name))?;
    let mut json = serde_json::to_vec_pretty(&model).expect("model serializes");
    json.push(b'\n');
    write_output(Output::from(args.out.as_deref()), &json)?;
    eprintln!(
        "R² {:.6}, RMSE {:.6}, inflection {}",
        model.r_squared,
        model.rmse,
        model
            .inflection
            .map_or("none".to_string(), |i| format!("{:.3}", i.x)),
    );
    Ok(())
}

fn generate(args: &GenerateArgs, verbose: bool) -> Result<(), CliError> {
    let cli = match (&args.model, args.cli) {
        (_, Some(cli)) => cli,
        (Some(path), None) => {
            let model: LoadModel =
                serde_json::from_slice(&read_source(path)?).map_err(input(path.display()))?;
            let best = optimal_cli(&model);
            eprintln!(
                "optimum x* = {:.3}, CLI* = {:.3}",
                best.optimum.x_star, best.cli_star
            );
            best.cli_star
        }
        (None, None) => return Err(CliError::Input("pass a model file or --cli".into())),
    };
    if verbose {
        print_space_config(args.floor, Some(args.seed));
    }
    let config = spatial_config_from_cli(cli, args.floor).map_err(input("remap"))?;
    eprintln!(
        "ceiling {} m, windows {}, partitions {}, furniture {} m²",
        config.ceiling_height_m,
        config.window_count,
        config.partition_count,
        config.furniture_area_m2
    );
    let layout = generate_layout(&config, args.seed)?;
    write_output(
        Output::from(args.out.as_deref()),
        &serialize_layout(&layout),
    )
}

fn scenes(args: &ScenesArgs, verbose: bool) -> Result<(), CliError> {
    if verbose {
        print_space_config(args.floor, None);
    }
    let scenes = extremum_scenes(args.floor).map_err(input("scenes"))?;
    let mut json = serde_json::to_vec_pretty(&scenes).expect("scenes serialize");
    json.push(b'\n');
    write_output(Output::from(args.out.as_deref()), &json)
}

#[derive(Serialize)]
struct ParticipantResult {
    seed: u64,
    noise_sigma: f64,
    true_beta: [f64; 4],
    hidden_x: f64,
    #[serde(flatten)]
    outcome: Outcome,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Outcome {
    Ok {
        x_star: f64,
        abs_error: f64,
        #[serde(flatten)]
        result: Box<AdaptationResult>,
    },
    Failed {
        error: String,
    },
}

#[derive(Serialize)]
struct SimulationSummary {
    participants: usize,
    failures: usize,
    within_tolerance: usize,
    fraction_within: f64,
    tolerance: f64,
    mean_abs_error: Option<f64>,
}

impl From<&RecoverySummary> for SimulationSummary {
    fn from(s: &RecoverySummary) -> Self {
        Self {
            participants: s.participants,
            failures: s.failures,
            within_tolerance: s.within_tolerance,
            fraction_within: s.fraction_within,
            tolerance: s.tolerance,
            mean_abs_error: s.mean_abs_error.is_finite().then_some(s.mean_abs_error),
        }
    }
}

#[derive(Serialize)]
struct SimulationReport {
    refinement_rounds: usize,
    floor_area_m2: u32,
    summary: SimulationSummary,
    results: Vec<ParticipantResult>,
}

fn simulate(args: &SimulateArgs, verbose: bool) -> Result<(), CliError> {
    let name = args.batch.display();
    let batch: Vec<SimulatedParticipant> =
        serde_json::from_slice(&read_source(&args.batch)?).map_err(input(&name))?;
    if batch.is_empty() {
        return Err(CliError::Input(format!(
            "{name}: {}",
            AdaptError::EmptyBatch
        )));
    }
    let protocol = CalibrationProtocol {
        pre_adaptation_s: args.pre_adaptation,
        encoding_s: args.encoding,
        sampling_rate: args.fs,
        analysis: args.signal.config(),
        floor_area_m2: args.floor,
        ..CalibrationProtocol::default()
    };
    if verbose {
        print_signal_config(&protocol.analysis, protocol.sampling_rate);
        print_space_config(args.floor, None);
        eprintln!(
            "{} probes, {} s pre-adaptation, {} s encoding, {} refinement rounds",
            protocol.probes.len(),
            protocol.pre_adaptation_s,
            protocol.encoding_s,
            args.rounds
        );
    }

    let mut results = Vec::with_capacity(batch.len());
    let mut records = Vec::with_capacity(batch.len());
    for p in &batch {
        let hidden_x = hidden_optimum(p);
        let (outcome, record) = match closed_loop_adapt(p, &protocol, args.rounds) {
            Ok(r) => {
                let x_star = r.optimum.x_star;
                let abs_error = (x_star - hidden_x).abs();
                (
                    Outcome::Ok {
                        x_star,
                        abs_error,
                        result: Box::new(r),
                    },
                    RecoveryRecord {
                        seed: p.seed,
                        hidden_x,
                        recovered_x: Some(x_star),
                        abs_error: Some(abs_error),
                        error: None,
                    },
                )
            }
            Err(e) => {
                let error = e.to_string();
                (
                    Outcome::Failed {
                        error: error.clone(),
                    },
                    RecoveryRecord {
                        seed: p.seed,
                        hidden_x,
                        recovered_x: None,
                        abs_error: None,
                        error: Some(error),
                    },
                )
            }
        };
        results.push(ParticipantResult {
            seed: p.seed,
            noise_sigma: p.noise_sigma,
            true_beta: p.true_beta,
            hidden_x,
            outcome,
        });
        records.push(record);
    }
    let summary = summarize(records);

    if let Some(path) = &args.curves {
        let mut text = String::from("seed,x,predicted_z\n");
        for r in &results {
            if let Outcome::Ok { result, .. } = &r.outcome {
                for x in 0..=100 {
                    text.push_str(&format!(
                        "{},{x},{}\n",
                        r.seed,
                        result.model.predict(x as f64)
                    ));
                }
            }
        }
        write_output(Output::File(path), text.as_bytes())?;
    }

    let report = SimulationReport {
        refinement_rounds: args.rounds,
        floor_area_m2: args.floor,
        summary: SimulationSummary::from(&summary),
        results,
    };
    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
    json.push(b'\n');
    write_output(Output::from(args.out.as_deref()), &json)?;

    print_summary(&summary);
    if summary.failures == summary.participants {
        return Err(CliError::Generation("every participant failed".into()));
    }
    Ok(())
}

fn print_summary(summary: &RecoverySummary) {
    let mut err = io::stderr().lock();
    let _ = writeln!(
        err,
        "{:>20}  {:>8}  {:>9}  {:>7}",
        "seed", "hidden", "recovered", "error"
    );
    for r in &summary.records {
        let _ = match (r.recovered_x, r.abs_error) {
            (Some(x), Some(e)) => {
                writeln!(
                    err,
                    "{:>20}  {:>8.3}  {:>9.3}  {:>7.3}",
                    r.seed, r.hidden_x, x, e
                )
            }
            _ => writeln!(
                err,
                "{:>20}  {:>8.3}  failed: {}",
                r.seed,
                r.hidden_x,
                r.error.as_deref().unwrap_or("")
            ),
        };
    }
    let _ = writeln!(
        err,
        "{}/{} within ±{}",
        summary.within_tolerance,
        summary.participants,
        adapt::RECOVERY_TOLERANCE
    );
}
