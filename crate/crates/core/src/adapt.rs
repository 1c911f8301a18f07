//! Desk-scale closed loop against simulated participants.
//!
//! A participant hides a cubic beta-power response over interference
//! intensity. Each probe synthesizes an EEG session whose beta-band power equals
//! the hidden response (plus Gaussian observation noise), the signal pipeline
//! measures it back, and the load model is fit and refined around its optimum.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eeg::{
    self, BandPowerConfig, EegSession, SignalError, DEFAULT_CHANNELS, DEFAULT_SAMPLING_RATE,
};
use crate::layout::{generate_layout, LayoutError, LayoutGeometry};
use crate::model::{fit_cubic, optimal_cli, LoadModel, ModelError, ObservationSet, Optimum};
use crate::space::{spatial_config_from_cli, SceneKind, SpaceError, DEFAULT_FLOOR_AREA_M2};

/// Success band for recovered optima, in intensity percent.
pub const RECOVERY_TOLERANCE: f64 = 4.7;
/// Interior optimum planted in the reference participant.
pub const PLANTED_OPTIMUM: f64 = 62.3;
/// Smallest synthesized beta power (µV²); lower targets are clipped here.
pub const POWER_FLOOR: f64 = 1e-6;
/// Offset of refinement probes from the current optimum.
pub const REFINEMENT_OFFSET: f64 = 10.0;

/// Beta carriers in Hz, 3 Hz apart.
const CARRIERS_HZ: [u32; 6] = [14, 17, 20, 23, 26, 29];
/// Background tones stay at least two bins outside 12–30 Hz.
const BACKGROUND_LOW_HZ: std::ops::RangeInclusive<u32> = 1..=10;
const BACKGROUND_HIGH_HZ: std::ops::RangeInclusive<u32> = 33..=64;
/// Background amplitude at 1 Hz in µV; falls as 1/√f.
const BACKGROUND_UV: f64 = 12.0;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("signal pipeline: {0}")]
    Signal(#[from] SignalError),
    #[error("load model: {source}")]
    Fit {
        source: ModelError,
        trace: Vec<TraceRecord>,
    },
    #[error("space: {0}")]
    Space(#[from] SpaceError),
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("session duration must be positive, got {0} s")]
    InvalidDuration(f64),
    #[error("simulation needs an integral sampling rate of at least 130 Hz, got {0}")]
    UnsupportedSamplingRate(f64),
    #[error("encoding session of {0} s is shorter than one analysis window")]
    NoWindows(f64),
    #[error("protocol has {0} distinct probe intensities; a cubic needs 4")]
    TooFewProbes(usize),
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error("invalid participant: {0}")]
    InvalidParticipant(String),
    #[error("empty participant batch")]
    EmptyBatch,
}

/// Simulated participant with a hidden cubic beta response (µV²) over `x ∈ [0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedParticipant {
    pub true_beta: [f64; 4],
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SimulatedParticipant {
    /// Cubic with its maximum on `[0, 100]` at `peak`, rising by `gain` from `x = 0`.
    ///
    /// The derivative is `-k (x - peak)(x - other_root)` with `other_root < 0`,
    /// so the curve climbs from 0 to `peak` and falls after it.
    pub fn with_interior_peak(
        peak: f64,
        other_root: f64,
        baseline: f64,
        gain: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let (p, q) = (peak, other_root);
        let k = 6.0 * gain / (p * p * (p - 3.0 * q));
        Self {
            true_beta: [baseline, -k * p * q, k * (p + q) / 2.0, -k / 3.0],
            noise_sigma,
            seed,
        }
    }

    /// Reference participant with its optimum at [`PLANTED_OPTIMUM`].
    pub fn planted(noise_sigma: f64, seed: u64) -> Self {
        Self::with_interior_peak(PLANTED_OPTIMUM, -40.0, 1.0, 1.0, noise_sigma, seed)
    }

    pub fn hidden_model(&self) -> LoadModel {
        LoadModel::from_coefficients(self.true_beta)
    }

    pub fn true_power(&self, x: f64) -> f64 {
        self.hidden_model().predict(x)
    }

    fn validate(&self) -> Result<(), AdaptError> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(AdaptError::InvalidParticipant(format!(
                "noise_sigma {} must be finite and non-negative",
                self.noise_sigma
            )));
        }
        if self.true_beta.iter().any(|b| !b.is_finite()) {
            return Err(AdaptError::InvalidParticipant(
                "non-finite coefficient".into(),
            ));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; decorrelates derived seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn probe_seed(seed: u64, intensity: f64, probe: u64, duration_s: f64) -> u64 {
    mix(mix(mix(mix(seed) ^ intensity.to_bits()) ^ probe) ^ duration_s.to_bits())
}

/// Synthesized session plus the beta power it was built to carry.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSession {
    pub session: EegSession,
    pub target_power: f64,
    /// Set when the noisy target fell below [`POWER_FLOOR`] and was clipped.
    pub clipped: bool,
}

/// Amplitude of each beta carrier that yields `target_power` µV² in the band.
pub fn carrier_amplitude(target_power: f64) -> f64 {
    // Each tone contributes A²/2.
    (2.0 * target_power / CARRIERS_HZ.len() as f64).sqrt()
}

/// Synthesizes a four-channel session for one probe.
///
/// Deterministic per `(participant.seed, intensity, probe, duration_s)`. `probe`
/// selects an independent noise stream for repeated probes at one intensity.
pub fn simulate_session(
    participant: &SimulatedParticipant,
    intensity: f64,
    probe: u64,
    duration_s: f64,
    sampling_rate: f64,
) -> Result<SimulatedSession, AdaptError> {
    participant.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(AdaptError::InvalidDuration(duration_s));
    }
    if !(sampling_rate.fract() == 0.0
        && sampling_rate >= 2.0 * (*BACKGROUND_HIGH_HZ.end() as f64 + 1.0))
    {
        return Err(AdaptError::UnsupportedSamplingRate(sampling_rate));
    }
    let mut rng =
        ChaCha8Rng::seed_from_u64(probe_seed(participant.seed, intensity, probe, duration_s));
    let noise = if participant.noise_sigma > 0.0 {
        Normal::new(0.0, participant.noise_sigma)
            .expect("sigma checked")
            .sample(&mut rng)
    } else {
        0.0
    };
    let raw_target = participant.true_power(intensity) + noise;
    let clipped = raw_target < POWER_FLOOR;
    let target_power = raw_target.max(POWER_FLOOR);
    let carrier = carrier_amplitude(target_power);

    let n = (duration_s * sampling_rate).round() as usize;
    // Every tone is an integer number of Hz, so one second is a full period.
    let period = (sampling_rate as usize).min(n);
    let samples = DEFAULT_CHANNELS
        .iter()
        .map(|_| {
            let mut tones: Vec<(f64, f64, f64)> = CARRIERS_HZ
                .iter()
                .map(|&f| (f as f64, carrier, rng.random_range(0.0..2.0 * PI)))
                .collect();
            tones.extend(BACKGROUND_LOW_HZ.chain(BACKGROUND_HIGH_HZ).map(|f| {
                (
                    f as f64,
                    BACKGROUND_UV / (f as f64).sqrt(),
                    rng.random_range(0.0..2.0 * PI),
                )
            }));
            let offset = rng.random_range(-5.0..5.0);
            let cycle: Vec<f64> = (0..period)
                .map(|i| {
                    let t = i as f64 / sampling_rate;
                    offset
                        + tones
                            .iter()
                            .map(|(f, a, ph)| a * (2.0 * PI * f * t + ph).sin())
                            .sum::<f64>()
                })
                .collect();
            cycle.iter().copied().cycle().take(n).collect()
        })
        .collect();
    let session = EegSession::new(
        sampling_rate,
        DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect(),
        samples,
    )?;
    Ok(SimulatedSession {
        session,
        target_power,
        clipped,
    })
}

/// One probe of the calibration protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub x: f64,
    /// Scene this probe realizes, or `None` for an intermediate intensity.
    pub scene: Option<SceneKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProtocol {
    pub probes: Vec<Probe>,
    pub pre_adaptation_s: f64,
    pub encoding_s: f64,
    pub sampling_rate: f64,
    pub analysis: BandPowerConfig,
    /// Synthesize (and discard) the pre-adaptation session for each probe.
    pub synthesize_pre_adaptation: bool,
    pub floor_area_m2: u32,
}

impl Default for CalibrationProtocol {
    /// Five calibration scenes plus intermediate probes at 25, 50 and 75 %.
    fn default() -> Self {
        let scene = |kind, x| Probe {
            x,
            scene: Some(kind),
        };
        let mid = |x| Probe { x, scene: None };
        Self {
            probes: vec![
                scene(SceneKind::Control, 0.0),
                scene(SceneKind::Ceiling, 100.0),
                scene(SceneKind::Windows, 100.0),
                scene(SceneKind::Partitions, 100.0),
                scene(SceneKind::Furniture, 100.0),
                mid(25.0),
                mid(50.0),
                mid(75.0),
            ],
            pre_adaptation_s: 180.0,
            encoding_s: 300.0,
            sampling_rate: DEFAULT_SAMPLING_RATE,
            analysis: BandPowerConfig::default(),
            synthesize_pre_adaptation: true,
            floor_area_m2: DEFAULT_FLOOR_AREA_M2,
        }
    }
}

impl CalibrationProtocol {
    fn validate(&self) -> Result<(), AdaptError> {
        if self.pre_adaptation_s.is_nan() || self.pre_adaptation_s < 0.0 {
            return Err(AdaptError::InvalidProtocol(format!(
                "pre-adaptation duration {} s is negative",
                self.pre_adaptation_s
            )));
        }
        if self.encoding_s.is_nan() || self.encoding_s <= 0.0 {
            return Err(AdaptError::InvalidProtocol(format!(
                "encoding duration {} s must be positive",
                self.encoding_s
            )));
        }
        if let Some(p) = self.probes.iter().find(|p| !(0.0..=100.0).contains(&p.x)) {
            return Err(AdaptError::InvalidProtocol(format!(
                "probe intensity {} outside [0, 100]",
                p.x
            )));
        }
        Ok(())
    }

    fn distinct_intensities(&self) -> usize {
        let mut xs: Vec<f64> = self.probes.iter().map(|p| p.x).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }
}

/// One measured probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub x: f64,
    /// Mean measured beta power over the encoding session, µV².
    pub beta_power: f64,
    pub scene: Option<SceneKind>,
    /// Refinement round that placed this probe; `None` for protocol probes.
    pub round: Option<usize>,
    pub clipped: bool,
}

/// Runs one probe: optional pre-adaptation session (discarded), then the
/// encoding session reduced to its mean band power.
pub fn measure_probe(
    participant: &SimulatedParticipant,
    protocol: &CalibrationProtocol,
    x: f64,
    probe: u64,
) -> Result<(f64, bool), AdaptError> {
    if protocol.synthesize_pre_adaptation && protocol.pre_adaptation_s > 0.0 {
        // Distinct probe tag so acclimatization data never aliases encoding data.
        let _ = simulate_session(
            participant,
            x,
            probe | 1 << 63,
            protocol.pre_adaptation_s,
            protocol.sampling_rate,
        )?;
    }
    let sim = simulate_session(
        participant,
        x,
        probe,
        protocol.encoding_s,
        protocol.sampling_rate,
    )?;
    let series = eeg::beta_power_series(&sim.session, &protocol.analysis)?;
    if series.is_empty() {
        return Err(AdaptError::NoWindows(protocol.encoding_s));
    }
    Ok((
        series.iter().sum::<f64>() / series.len() as f64,
        sim.clipped,
    ))
}

fn calibration_trace(
    participant: &SimulatedParticipant,
    protocol: &CalibrationProtocol,
) -> Result<Vec<TraceRecord>, AdaptError> {
    protocol.validate()?;
    let distinct = protocol.distinct_intensities();
    if distinct < 4 {
        return Err(AdaptError::TooFewProbes(distinct));
    }
    protocol
        .probes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (beta_power, clipped) = measure_probe(participant, protocol, p.x, i as u64)?;
            Ok(TraceRecord {
                x: p.x,
                beta_power,
                scene: p.scene,
                round: None,
                clipped,
            })
        })
        .collect()
}

/// z-scored observations from the trace.
fn observations(trace: &[TraceRecord]) -> Result<ObservationSet, AdaptError> {
    let raw: Vec<f64> = trace.iter().map(|r| r.beta_power).collect();
    let z = eeg::zscore_normalize(&raw)?;
    ObservationSet::new(trace.iter().zip(z).map(|(r, y)| (r.x, y)).collect()).map_err(|source| {
        AdaptError::Fit {
            source,
            trace: trace.to_vec(),
        }
    })
}

/// Measures every protocol probe and z-scores the collected means.
pub fn run_calibration(
    participant: &SimulatedParticipant,
    protocol: &CalibrationProtocol,
) -> Result<ObservationSet, AdaptError> {
    observations(&calibration_trace(participant, protocol)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationResult {
    pub model: LoadModel,
    pub cli_star: f64,
    pub optimum: Optimum,
    pub inflection_x: Option<f64>,
    pub layout: LayoutGeometry,
    pub trace: Vec<TraceRecord>,
}

/// Default number of refinement probes after calibration.
pub const DEFAULT_REFINEMENT_ROUNDS: usize = 2;

/// Calibrate, fit, then alternately probe 10 points below and above the
/// current optimum and refit, `refinement_rounds` times. The layout is
/// generated at the final CLI with the participant's seed.
pub fn closed_loop_adapt(
    participant: &SimulatedParticipant,
    protocol: &CalibrationProtocol,
    refinement_rounds: usize,
) -> Result<AdaptationResult, AdaptError> {
    let mut trace = calibration_trace(participant, protocol)?;
    let fit = |trace: &[TraceRecord]| -> Result<LoadModel, AdaptError> {
        let obs = observations(trace)?;
        fit_cubic(&obs).map_err(|source| AdaptError::Fit {
            source,
            trace: trace.to_vec(),
        })
    };

    let mut model = fit(&trace)?;
    let mut best = optimal_cli(&model);
    for round in 0..refinement_rounds {
        let offset = if round % 2 == 0 {
            -REFINEMENT_OFFSET
        } else {
            REFINEMENT_OFFSET
        };
        let x = (best.optimum.x_star + offset).clamp(0.0, 100.0);
        let (beta_power, clipped) = measure_probe(participant, protocol, x, trace.len() as u64)?;
        trace.push(TraceRecord {
            x,
            beta_power,
            scene: None,
            round: Some(round),
            clipped,
        });
        model = fit(&trace)?;
        best = optimal_cli(&model);
    }

    let config = spatial_config_from_cli(best.cli_star, protocol.floor_area_m2)?;
    let layout = generate_layout(&config, participant.seed)?;
    Ok(AdaptationResult {
        inflection_x: model.inflection.map(|i| i.x),
        model,
        cli_star: best.cli_star,
        optimum: best.optimum,
        layout,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub seed: u64,
    pub hidden_x: f64,
    pub recovered_x: Option<f64>,
    pub abs_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub participants: usize,
    pub failures: usize,
    /// Mean absolute optimum error over successful runs.
    pub mean_abs_error: f64,
    pub within_tolerance: usize,
    pub fraction_within: f64,
    pub tolerance: f64,
    pub records: Vec<RecoveryRecord>,
}

/// Hidden optimum of a participant: the maximizer of its true curve.
pub fn hidden_optimum(participant: &SimulatedParticipant) -> f64 {
    optimal_cli(&participant.hidden_model()).optimum.x_star
}

/// Runs the closed loop for each participant and scores the recovered optimum
/// against the hidden one. Failed runs count as outside the tolerance.
pub fn recovery_statistics(
    participants: &[SimulatedParticipant],
    protocol: &CalibrationProtocol,
    refinement_rounds: usize,
) -> Result<RecoverySummary, AdaptError> {
    if participants.is_empty() {
        return Err(AdaptError::EmptyBatch);
    }
    let records: Vec<RecoveryRecord> = participants
        .iter()
        .map(|p| {
            let hidden_x = hidden_optimum(p);
            match closed_loop_adapt(p, protocol, refinement_rounds) {
                Ok(r) => RecoveryRecord {
                    seed: p.seed,
                    hidden_x,
                    recovered_x: Some(r.optimum.x_star),
                    abs_error: Some((r.optimum.x_star - hidden_x).abs()),
                    error: None,
                },
                Err(e) => RecoveryRecord {
                    seed: p.seed,
                    hidden_x,
                    recovered_x: None,
                    abs_error: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(summarize(records))
}

pub fn summarize(records: Vec<RecoveryRecord>) -> RecoverySummary {
    let errors: Vec<f64> = records.iter().filter_map(|r| r.abs_error).collect();
    let within = errors.iter().filter(|e| **e <= RECOVERY_TOLERANCE).count();
    RecoverySummary {
        participants: records.len(),
        failures: records.len() - errors.len(),
        mean_abs_error: if errors.is_empty() {
            f64::NAN
        } else {
            errors.iter().sum::<f64>() / errors.len() as f64
        },
        within_tolerance: within,
        fraction_within: within as f64 / records.len().max(1) as f64,
        tolerance: RECOVERY_TOLERANCE,
        records,
    }
}
