//! EEG session ingestion, windowing, Welch spectral estimation and band power.
//!
//! Spectra are one-sided power spectral densities in µV²/Hz. Interior bins
//! (everything except DC and, for even segment lengths, Nyquist) are doubled so
//! that integrating the density over `[0, fs/2]` recovers the variance of a
//! zero-mean signal.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

/// Default sampling rate of the four-channel headband the file format targets.
pub const DEFAULT_SAMPLING_RATE: f64 = 256.0;

/// Default channel layout, in file column order.
pub const DEFAULT_CHANNELS: [&str; 4] = ["TP9", "AF7", "AF8", "TP10"];

/// Prefrontal pair averaged by default when extracting beta power.
pub const PREFRONTAL_CHANNELS: [&str; 2] = ["AF7", "AF8"];

/// Default peak-amplitude rejection threshold in µV.
pub const DEFAULT_ARTIFACT_THRESHOLD_UV: f64 = 200.0;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-numeric value {value:?}")]
    NonNumeric { line: usize, value: String },
    #[error("sampling rate must be positive, got {0}")]
    InvalidSamplingRate(f64),
    #[error("channels have unequal sample counts")]
    UnequalChannels,
    #[error("segment length must be at least 2 samples, got {0}")]
    SegmentTooShort(usize),
    #[error("signal has {len} samples, shorter than one segment of {segment}")]
    SignalTooShort { len: usize, segment: usize },
    #[error("overlap fraction must lie in [0, 1), got {0}")]
    InvalidOverlap(f64),
    #[error("window must span at least 2 samples, got {0}")]
    WindowTooShort(usize),
    #[error("invalid frequency band {low}..{high} Hz")]
    InvalidBand { low: f64, high: f64 },
    #[error("band {low}..{high} Hz lies outside the spectrum range 0..{max} Hz")]
    BandOutOfRange { low: f64, high: f64, max: f64 },
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("channel selection is empty")]
    EmptySelection,
    #[error("z-score needs at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("z-score of constant input is undefined")]
    ConstantInput,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SignalError {
    fn from(err: std::io::Error) -> Self {
        SignalError::Io(err.to_string())
    }
}

/// A recorded (or synthesized) multichannel session.
#[derive(Debug, Clone, PartialEq)]
pub struct EegSession {
    pub sampling_rate: f64,
    pub channels: Vec<String>,
    /// One sequence of microvolt values per channel, in `channels` order.
    pub samples: Vec<Vec<f64>>,
    /// Timestamp of the first sample in seconds.
    pub start_time: f64,
}

impl EegSession {
    pub fn new(
        sampling_rate: f64,
        channels: Vec<String>,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self, SignalError> {
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(SignalError::InvalidSamplingRate(sampling_rate));
        }
        if channels.len() != samples.len() {
            return Err(SignalError::MalformedHeader(format!(
                "{} channel labels for {} sample columns",
                channels.len(),
                samples.len()
            )));
        }
        if let Some(first) = samples.first() {
            if samples.iter().any(|c| c.len() != first.len()) {
                return Err(SignalError::UnequalChannels);
            }
        }
        Ok(Self {
            sampling_rate,
            channels,
            samples,
            start_time: 0.0,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn duration(&self) -> f64 {
        self.sample_count() as f64 / self.sampling_rate
    }

    pub fn channel_index(&self, label: &str) -> Result<usize, SignalError> {
        self.channels
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| SignalError::UnknownChannel(label.to_string()))
    }

    /// Writes the session in the CSV session format (`# fs=` line, header, rows).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# fs={}", self.sampling_rate)?;
        write!(out, "t")?;
        for c in &self.channels {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for i in 0..self.sample_count() {
            write!(out, "{}", self.start_time + i as f64 / self.sampling_rate)?;
            for ch in &self.samples {
                write!(out, ",{}", ch[i])?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// Parses a CSV session file.
///
/// Line 1 is `# fs=<Hz>`, line 2 is `t,<label>,...`, and every following row
/// holds a timestamp then one microvolt value per channel. Blank lines are
/// skipped.
pub fn ingest_session<R: Read>(source: R) -> Result<EegSession, SignalError> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();

    let (_, fs_line) = lines
        .next()
        .ok_or_else(|| SignalError::MalformedHeader("empty input".into()))?;
    let fs_line = fs_line?;
    let fs_text = fs_line
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("fs="))
        .ok_or_else(|| {
            SignalError::MalformedHeader(format!("expected `# fs=<Hz>`, got {fs_line:?}"))
        })?;
    let sampling_rate: f64 = fs_text
        .trim()
        .parse()
        .map_err(|_| SignalError::MalformedHeader(format!("bad sampling rate {fs_text:?}")))?;
    if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
        return Err(SignalError::InvalidSamplingRate(sampling_rate));
    }

    let (_, header) = lines
        .next()
        .ok_or_else(|| SignalError::MalformedHeader("missing column header".into()))?;
    let header = header?;
    let mut columns = header.trim().split(',').map(str::trim);
    if columns.next() != Some("t") {
        return Err(SignalError::MalformedHeader(format!(
            "first column must be `t`, got {header:?}"
        )));
    }
    let channels: Vec<String> = columns.map(str::to_string).collect();
    if channels.is_empty() || channels.iter().any(String::is_empty) {
        return Err(SignalError::MalformedHeader(format!(
            "no channel labels in {header:?}"
        )));
    }

    let expected = channels.len() + 1;
    let mut samples = vec![Vec::new(); channels.len()];
    let mut start_time = None;
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != expected {
            return Err(SignalError::RaggedRow {
                line: line_no,
                expected,
                found: fields.len(),
            });
        }
        let parse = |s: &str| -> Result<f64, SignalError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SignalError::NonNumeric {
                    line: line_no,
                    value: s.to_string(),
                })
        };
        let t = parse(fields[0])?;
        start_time.get_or_insert(t);
        for (ch, field) in samples.iter_mut().zip(&fields[1..]) {
            ch.push(parse(field)?);
        }
    }

    let mut session = EegSession::new(sampling_rate, channels, samples)?;
    session.start_time = start_time.unwrap_or(0.0);
    Ok(session)
}

/// A fixed-length slice of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct EegWindow {
    pub start_time: f64,
    pub samples: Vec<Vec<f64>>,
}

impl EegWindow {
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.samples
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Window length and hop in samples for the given window duration and overlap.
pub fn window_geometry(
    sampling_rate: f64,
    window_seconds: f64,
    overlap_fraction: f64,
) -> Result<(usize, usize), SignalError> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(SignalError::InvalidOverlap(overlap_fraction));
    }
    let len = (window_seconds * sampling_rate).round();
    if len.is_nan() || len < 2.0 {
        return Err(SignalError::WindowTooShort(len.max(0.0) as usize));
    }
    let len = len as usize;
    let hop = ((len as f64) * (1.0 - overlap_fraction)).round().max(1.0) as usize;
    Ok((len, hop))
}

/// Number of full windows of `len` samples at stride `hop` in `n` samples.
pub fn window_count(n: usize, len: usize, hop: usize) -> usize {
    if n < len {
        0
    } else {
        (n - len) / hop + 1
    }
}

/// Cuts the session into overlapping windows; a trailing partial window is dropped.
pub fn segment_windows(
    session: &EegSession,
    window_seconds: f64,
    overlap_fraction: f64,
) -> Result<Vec<EegWindow>, SignalError> {
    let (len, hop) = window_geometry(session.sampling_rate, window_seconds, overlap_fraction)?;
    let count = window_count(session.sample_count(), len, hop);
    Ok((0..count)
        .map(|w| {
            let start = w * hop;
            EegWindow {
                start_time: session.start_time + start as f64 / session.sampling_rate,
                samples: session
                    .samples
                    .iter()
                    .map(|ch| ch[start..start + len].to_vec())
                    .collect(),
            }
        })
        .collect())
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    /// Bin centres in Hz, ascending with uniform spacing.
    pub frequencies: Vec<f64>,
    /// Density in µV²/Hz, one value per bin.
    pub density: Vec<f64>,
}

impl PowerSpectrum {
    pub fn resolution(&self) -> f64 {
        match self.frequencies.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.last().copied().unwrap_or(0.0)
    }

    /// Rectangle-rule integral over every bin.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution()
    }
}

/// Closed frequency interval in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub low: f64,
    pub high: f64,
}

impl FrequencyBand {
    /// Beta band as used by the methods pipeline.
    pub const BETA: FrequencyBand = FrequencyBand {
        low: 13.0,
        high: 30.0,
    };
    /// Wider beta definition (12–30 Hz).
    pub const BETA_WIDE: FrequencyBand = FrequencyBand {
        low: 12.0,
        high: 30.0,
    };

    pub fn new(low: f64, high: f64) -> Result<Self, SignalError> {
        if !(low >= 0.0 && low < high && high.is_finite()) {
            return Err(SignalError::InvalidBand { low, high });
        }
        Ok(Self { low, high })
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

impl Default for FrequencyBand {
    fn default() -> Self {
        Self::BETA
    }
}

impl std::str::FromStr for FrequencyBand {
    type Err = SignalError;

    /// Parses `LO:HI`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SignalError::InvalidBand {
            low: f64::NAN,
            high: f64::NAN,
        };
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        FrequencyBand::new(lo, hi)
    }
}

/// Periodic Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reusable Welch estimator for a fixed segment length.
///
/// Holds the FFT plan and window so repeated estimates on equally sized
/// segments do not replan.
pub struct WelchEstimator {
    segment_length: usize,
    hop: usize,
    window: Vec<f64>,
    window_power: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl WelchEstimator {
    pub fn new(segment_length: usize, overlap_fraction: f64) -> Result<Self, SignalError> {
        if segment_length < 2 {
            return Err(SignalError::SegmentTooShort(segment_length));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(SignalError::InvalidOverlap(overlap_fraction));
        }
        let overlap = (segment_length as f64 * overlap_fraction).floor() as usize;
        let hop = (segment_length - overlap).max(1);
        let window = hamming(segment_length);
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(segment_length);
        Ok(Self {
            segment_length,
            hop,
            window,
            window_power,
            fft,
        })
    }

    pub fn segment_length(&self) -> usize {
        self.segment_length
    }

    pub fn estimate(
        &self,
        samples: &[f64],
        sampling_rate: f64,
    ) -> Result<PowerSpectrum, SignalError> {
        let n = self.segment_length;
        if samples.len() < n {
            return Err(SignalError::SignalTooShort {
                len: samples.len(),
                segment: n,
            });
        }
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(SignalError::InvalidSamplingRate(sampling_rate));
        }

        let bins = n / 2 + 1;
        let mut acc = vec![0.0; bins];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let segments = window_count(samples.len(), n, self.hop);
        for s in 0..segments {
            let seg = &samples[s * self.hop..s * self.hop + n];
            let mean = seg.iter().sum::<f64>() / n as f64;
            for ((b, x), w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex::new((x - mean) * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
        }

        let scale = 1.0 / (sampling_rate * self.window_power * segments as f64);
        let nyquist = n.is_multiple_of(2).then_some(n / 2);
        let density = acc
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let one_sided = if k == 0 || Some(k) == nyquist {
                    1.0
                } else {
                    2.0
                };
                p * scale * one_sided
            })
            .collect();
        let df = sampling_rate / n as f64;
        let frequencies = (0..bins).map(|k| k as f64 * df).collect();
        Ok(PowerSpectrum {
            frequencies,
            density,
        })
    }
}

/// Welch power spectral density with a periodic Hamming window and per-segment
/// mean removal.
pub fn welch_psd(
    samples: &[f64],
    sampling_rate: f64,
    segment_length: usize,
    overlap_fraction: f64,
) -> Result<PowerSpectrum, SignalError> {
    WelchEstimator::new(segment_length, overlap_fraction)?.estimate(samples, sampling_rate)
}

/// Integrates the density over bins whose centres lie in `[low, high]`.
///
/// A zero-width band integrates to 0.
pub fn band_power(spectrum: &PowerSpectrum, band: &FrequencyBand) -> Result<f64, SignalError> {
    let max = spectrum.max_frequency();
    if band.high < 0.0 || band.low > max || band.high < band.low {
        return Err(SignalError::BandOutOfRange {
            low: band.low,
            high: band.high,
            max,
        });
    }
    if band.high == band.low {
        return Ok(0.0);
    }
    let df = spectrum.resolution();
    Ok(spectrum
        .frequencies
        .iter()
        .zip(&spectrum.density)
        .filter(|(f, _)| **f >= band.low && **f <= band.high)
        .map(|(_, d)| d * df)
        .sum())
}

/// Settings for reducing a session to a per-window band-power series.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPowerConfig {
    pub window_seconds: f64,
    pub overlap_fraction: f64,
    pub band: FrequencyBand,
    pub channels: Vec<String>,
    /// Welch segment length inside each window, in seconds.
    pub segment_seconds: f64,
    /// Welch segment overlap inside each window.
    pub segment_overlap: f64,
}

impl Default for BandPowerConfig {
    fn default() -> Self {
        Self {
            window_seconds: 2.0,
            overlap_fraction: 0.5,
            band: FrequencyBand::BETA,
            channels: PREFRONTAL_CHANNELS.iter().map(|s| s.to_string()).collect(),
            segment_seconds: 1.0,
            segment_overlap: 0.5,
        }
    }
}

impl BandPowerConfig {
    fn segment_length(&self, sampling_rate: f64, window_len: usize) -> usize {
        ((self.segment_seconds * sampling_rate).round() as usize).clamp(2, window_len)
    }
}

/// Per-window band power averaged over the selected channels.
pub fn beta_power_series(
    session: &EegSession,
    config: &BandPowerConfig,
) -> Result<Vec<f64>, SignalError> {
    let windows = segment_windows(session, config.window_seconds, config.overlap_fraction)?;
    band_power_series(&windows, session, config)
}

/// Band power for already-segmented windows of `session`.
pub fn band_power_series(
    windows: &[EegWindow],
    session: &EegSession,
    config: &BandPowerConfig,
) -> Result<Vec<f64>, SignalError> {
    if config.channels.is_empty() {
        return Err(SignalError::EmptySelection);
    }
    let selected = config
        .channels
        .iter()
        .map(|c| session.channel_index(c))
        .collect::<Result<Vec<_>, _>>()?;
    let (window_len, _) = window_geometry(
        session.sampling_rate,
        config.window_seconds,
        config.overlap_fraction,
    )?;
    let estimator = WelchEstimator::new(
        config.segment_length(session.sampling_rate, window_len),
        config.segment_overlap,
    )?;
    windows
        .iter()
        .map(|w| {
            let mut total = 0.0;
            for &ch in &selected {
                let spectrum = estimator.estimate(&w.samples[ch], session.sampling_rate)?;
                total += band_power(&spectrum, &config.band)?;
            }
            Ok(total / selected.len() as f64)
        })
        .collect()
}

/// Mean spectrum over all windows for the selected channels.
pub fn mean_spectrum(
    session: &EegSession,
    config: &BandPowerConfig,
) -> Result<Option<PowerSpectrum>, SignalError> {
    let windows = segment_windows(session, config.window_seconds, config.overlap_fraction)?;
    if windows.is_empty() {
        return Ok(None);
    }
    let selected = config
        .channels
        .iter()
        .map(|c| session.channel_index(c))
        .collect::<Result<Vec<_>, _>>()?;
    if selected.is_empty() {
        return Err(SignalError::EmptySelection);
    }
    let estimator = WelchEstimator::new(
        config.segment_length(session.sampling_rate, windows[0].len()),
        config.segment_overlap,
    )?;
    let mut mean: Option<PowerSpectrum> = None;
    let count = (windows.len() * selected.len()) as f64;
    for w in &windows {
        for &ch in &selected {
            let s = estimator.estimate(&w.samples[ch], session.sampling_rate)?;
            match mean.as_mut() {
                None => {
                    mean = Some(PowerSpectrum {
                        density: s.density.iter().map(|d| d / count).collect(),
                        frequencies: s.frequencies,
                    })
                }
                Some(m) => m
                    .density
                    .iter_mut()
                    .zip(&s.density)
                    .for_each(|(a, d)| *a += d / count),
            }
        }
    }
    Ok(mean)
}

/// Result of peak-amplitude artifact rejection.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub retained: Vec<EegWindow>,
    pub rejected: usize,
}

/// Drops windows whose peak absolute amplitude on any channel exceeds the threshold.
pub fn artifact_reject(windows: Vec<EegWindow>, amplitude_threshold: f64) -> Rejection {
    let total = windows.len();
    let retained: Vec<EegWindow> = windows
        .into_iter()
        .filter(|w| w.peak_amplitude() <= amplitude_threshold)
        .collect();
    Rejection {
        rejected: total - retained.len(),
        retained,
    }
}

/// Standardizes to zero mean and unit population (1/N) deviation.
pub fn zscore_normalize(values: &[f64]) -> Result<Vec<f64>, SignalError> {
    let (mean, sd) = zscore_parameters(values)?;
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Mean and population standard deviation used by [`zscore_normalize`].
pub fn zscore_parameters(values: &[f64]) -> Result<(f64, f64), SignalError> {
    if values.len() < 2 {
        return Err(SignalError::TooFewValues(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd.is_nan() || sd <= f64::EPSILON * mean.abs() {
        return Err(SignalError::ConstantInput);
    }
    Ok((mean, sd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, amp: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn csv_session(rows: usize, fs: f64) -> String {
        let mut s = format!("# fs={fs}\nt,TP9,AF7,AF8,TP10\n");
        for i in 0..rows {
            s.push_str(&format!("{},1,2,3,4\n", i as f64 / fs));
        }
        s
    }

    #[test]
    fn ingest_duration_from_row_count() {
        let session = ingest_session(csv_session(2560, 256.0).as_bytes()).unwrap();
        assert_eq!(session.channels, DEFAULT_CHANNELS);
        assert_eq!(session.sample_count(), 2560);
        assert_eq!(session.duration(), 10.0);
        assert_eq!(session.samples[2][5], 3.0);
    }

    #[test]
    fn ingest_rejects_ragged_row() {
        let mut text = csv_session(4, 256.0);
        text.push_str("0.5,1,2,3\n");
        assert_eq!(
            ingest_session(text.as_bytes()),
            Err(SignalError::RaggedRow {
                line: 7,
                expected: 5,
                found: 4
            })
        );
    }

    #[test]
    fn ingest_header_only_is_empty_session() {
        let session = ingest_session(csv_session(0, 256.0).as_bytes()).unwrap();
        assert_eq!(session.sample_count(), 0);
        assert_eq!(session.duration(), 0.0);
    }

    #[test]
    fn ingest_errors() {
        assert!(matches!(
            ingest_session("# fs=0\nt,A\n".as_bytes()),
            Err(SignalError::InvalidSamplingRate(_))
        ));
        assert!(matches!(
            ingest_session("# fs=-4\nt,A\n".as_bytes()),
            Err(SignalError::InvalidSamplingRate(_))
        ));
        assert!(matches!(
            ingest_session("t,A\n0,1\n".as_bytes()),
            Err(SignalError::MalformedHeader(_))
        ));
        assert!(matches!(
            ingest_session("# fs=256\nx,A\n".as_bytes()),
            Err(SignalError::MalformedHeader(_))
        ));
        assert!(matches!(
            ingest_session("# fs=256\nt,A\n0,abc\n".as_bytes()),
            Err(SignalError::NonNumeric { line: 3, .. })
        ));
        assert!(matches!(
            ingest_session("".as_bytes()),
            Err(SignalError::MalformedHeader(_))
        ));
    }

    #[test]
    fn custom_labels_keep_header_order() {
        let session = ingest_session("# fs=128\nt,Fz,Cz\n0,1,2\n".as_bytes()).unwrap();
        assert_eq!(session.channels, ["Fz", "Cz"]);
        assert_eq!(session.sampling_rate, 128.0);
    }

    #[test]
    fn csv_round_trip() {
        let session = EegSession::new(
            256.0,
            vec!["A".into(), "B".into()],
            vec![vec![0.1, -2.5, 3.25], vec![1e-7, 4.0, -0.0]],
        )
        .unwrap();
        let mut buf = Vec::new();
        session.write_csv(&mut buf).unwrap();
        assert_eq!(ingest_session(buf.as_slice()).unwrap(), session);
    }

    fn flat_session(seconds: usize) -> EegSession {
        let n = seconds * 256;
        EegSession::new(
            256.0,
            DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect(),
            vec![vec![0.0; n]; 4],
        )
        .unwrap()
    }

    #[test]
    fn segment_window_counts() {
        let s = flat_session(10);
        let w = segment_windows(&s, 2.0, 0.5).unwrap();
        assert_eq!(w.len(), 9);
        let starts: Vec<f64> = w.iter().map(|w| w.start_time).collect();
        assert_eq!(starts, (0..9).map(f64::from).collect::<Vec<_>>());
        assert_eq!(segment_windows(&s, 2.0, 0.0).unwrap().len(), 5);
        assert!(segment_windows(&flat_session(1), 2.0, 0.5)
            .unwrap()
            .is_empty());
        assert!(segment_windows(&s, 2.0, 1.0).is_err());
        assert!(segment_windows(&s, 0.001, 0.0).is_err());
    }

    #[test]
    fn welch_zero_input() {
        let p = welch_psd(&vec![0.0; 1024], 256.0, 256, 0.5).unwrap();
        assert!(p.density.iter().all(|d| *d == 0.0));
        assert_eq!(p.frequencies.len(), 129);
        assert_eq!(p.resolution(), 1.0);
    }

    #[test]
    fn welch_errors() {
        assert_eq!(
            welch_psd(&[0.0; 10], 256.0, 1, 0.5),
            Err(SignalError::SegmentTooShort(1))
        );
        assert_eq!(
            welch_psd(&[0.0; 10], 256.0, 16, 0.5),
            Err(SignalError::SignalTooShort {
                len: 10,
                segment: 16
            })
        );
    }

    #[test]
    fn sine_power_lands_in_beta() {
        let x = sine(20.0, 1.0, 256.0, 2560);
        let p = welch_psd(&x, 256.0, 256, 0.5).unwrap();
        let beta = band_power(&p, &FrequencyBand::BETA).unwrap();
        assert!(beta / p.total_power() >= 0.95);
        assert!((p.total_power() - 0.5).abs() < 1e-9);

        let x = sine(5.0, 1.0, 256.0, 2560);
        let p = welch_psd(&x, 256.0, 256, 0.5).unwrap();
        let beta = band_power(&p, &FrequencyBand::BETA).unwrap();
        assert!(beta / p.total_power() < 0.02);
    }

    #[test]
    fn band_edge_cases() {
        let x = sine(20.0, 1.0, 256.0, 512);
        let p = welch_psd(&x, 256.0, 256, 0.5).unwrap();
        let zero = FrequencyBand {
            low: 20.0,
            high: 20.0,
        };
        assert_eq!(band_power(&p, &zero).unwrap(), 0.0);
        assert!(matches!(
            band_power(
                &p,
                &FrequencyBand {
                    low: 200.0,
                    high: 300.0
                }
            ),
            Err(SignalError::BandOutOfRange { .. })
        ));
        assert!(FrequencyBand::new(30.0, 13.0).is_err());
        assert!(FrequencyBand::new(-1.0, 13.0).is_err());
        assert_eq!(
            "12:30".parse::<FrequencyBand>().unwrap(),
            FrequencyBand::BETA_WIDE
        );
        assert!("12-30".parse::<FrequencyBand>().is_err());
    }

    #[test]
    fn unknown_channel_is_reported() {
        let cfg = BandPowerConfig {
            channels: vec!["Oz".into()],
            ..Default::default()
        };
        assert_eq!(
            beta_power_series(&flat_session(4), &cfg),
            Err(SignalError::UnknownChannel("Oz".into()))
        );
        let cfg = BandPowerConfig {
            channels: vec![],
            ..Default::default()
        };
        assert_eq!(
            beta_power_series(&flat_session(4), &cfg),
            Err(SignalError::EmptySelection)
        );
    }

    fn windows_with_peaks(peaks: &[f64]) -> Vec<EegWindow> {
        peaks
            .iter()
            .enumerate()
            .map(|(i, p)| EegWindow {
                start_time: i as f64,
                samples: vec![vec![0.0, -p, 1.0], vec![0.5, 0.0, 0.0]],
            })
            .collect()
    }

    #[test]
    fn artifact_rejection() {
        let w = windows_with_peaks(&[10.0, 50.0, 20.0]);
        let r = artifact_reject(w.clone(), DEFAULT_ARTIFACT_THRESHOLD_UV);
        assert_eq!(r.retained, w);
        assert_eq!(r.rejected, 0);

        let r = artifact_reject(windows_with_peaks(&[10.0, 500.0, 20.0]), 200.0);
        assert_eq!(r.rejected, 1);
        assert_eq!(
            r.retained.iter().map(|w| w.start_time).collect::<Vec<_>>(),
            [0.0, 2.0]
        );

        let r = artifact_reject(windows_with_peaks(&[10.0, 50.0]), 0.1);
        assert!(r.retained.is_empty());
        assert_eq!(r.rejected, 2);
    }

    #[test]
    fn zscore_examples() {
        let z = zscore_normalize(&[1.0, 2.0, 3.0]).unwrap();
        // Brute force: mean 2, population variance ((1)^2 + 0 + 1^2) / 3.
        let sd = (2.0_f64 / 3.0).sqrt();
        let expected = [-1.0 / sd, 0.0, 1.0 / sd];
        for (a, b) in z.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((z[2] - 1.224744871391589).abs() < 1e-12);

        let again = zscore_normalize(&z).unwrap();
        for (a, b) in again.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            zscore_normalize(&[5.0, 5.0, 5.0]),
            Err(SignalError::ConstantInput)
        );
        assert_eq!(zscore_normalize(&[5.0]), Err(SignalError::TooFewValues(1)));
    }
}
