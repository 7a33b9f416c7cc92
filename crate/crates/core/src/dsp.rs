//! Time and frequency domain primitives shared by the encoder and decoder.
//!
//! Everything here works on 20 ms frames of 160 samples at 8 kHz, so one
//! DFT bin is exactly 50 Hz wide.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Codec sample rate in Hz.
pub const SAMPLE_RATE_HZ: u32 = 8000;
/// Samples per 20 ms frame.
pub const FRAME_LEN: usize = 160;
/// Frequency spacing of adjacent DFT bins.
pub const BIN_HZ: f64 = SAMPLE_RATE_HZ as f64 / FRAME_LEN as f64;
/// Default pre-emphasis coefficient.
pub const DEFAULT_PRE_EMPHASIS: f64 = 0.95;

const DECIMATOR_TAPS: usize = 63;
const DECIMATOR_CUTOFF: f64 = 0.9;
const SYMMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("unsupported sample rate {actual} Hz (expected {expected} Hz)")]
    SampleRate { expected: u32, actual: u32 },
    #[error("emphasis coefficient {0} outside [0, 1)")]
    Coefficient(f64),
    #[error("sample rate {rate} Hz is not divisible by decimation factor {factor}")]
    Decimation { rate: u32, factor: u32 },
    #[error(
        "spectrum of frame {frame_index} is not conjugate symmetric \
         (imaginary residue {residue:e} vs real peak {real_peak:e})"
    )]
    SymmetryViolation {
        frame_index: usize,
        residue: f64,
        real_peak: f64,
    },
}

/// Mono signal with its sample rate. All samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, DspError> {
        if sample_rate_hz == 0 {
            return Err(DspError::ZeroSampleRate);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(DspError::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Result<Self, DspError> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// One 160-sample frame and its position in the source signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: [f64; FRAME_LEN],
    pub index: usize,
}

impl Frame {
    pub fn zeroed(index: usize) -> Self {
        Self {
            samples: [0.0; FRAME_LEN],
            index,
        }
    }
}

/// 160-point complex spectrum of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpectrum {
    pub bins: [Complex64; FRAME_LEN],
    pub frame_index: usize,
}

impl FrameSpectrum {
    pub fn zeroed(frame_index: usize) -> Self {
        Self {
            bins: [Complex64::new(0.0, 0.0); FRAME_LEN],
            frame_index,
        }
    }

    /// Magnitudes of bins 0..80 (DC up to, but excluding, Nyquist).
    pub fn half_magnitudes(&self) -> [f64; FRAME_LEN / 2] {
        let mut out = [0.0; FRAME_LEN / 2];
        for (o, b) in out.iter_mut().zip(self.bins.iter()) {
            *o = b.norm();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    Rectangular,
    #[default]
    Hamming,
}

fn check_coefficient(a: f64) -> Result<(), DspError> {
    if (0.0..1.0).contains(&a) {
        Ok(())
    } else {
        Err(DspError::Coefficient(a))
    }
}

/// First-difference pre-emphasis `y[n] = x[n] - a x[n-1]` with `y[0] = x[0]`.
pub fn pre_emphasize(signal: &SampleBuffer, a: f64) -> Result<SampleBuffer, DspError> {
    check_coefficient(a)?;
    let x = signal.samples();
    let mut y = Vec::with_capacity(x.len());
    if let Some(&first) = x.first() {
        y.push(first);
        y.extend(x.windows(2).map(|w| w[1] - a * w[0]));
    }
    SampleBuffer::new(y, signal.sample_rate_hz)
}

/// Inverse of [`pre_emphasize`]: `y[n] = x[n] + a y[n-1]` with `y[0] = x[0]`.
pub fn de_emphasize(signal: &SampleBuffer, a: f64) -> Result<SampleBuffer, DspError> {
    check_coefficient(a)?;
    let mut prev = 0.0;
    let y = signal
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            prev = if n == 0 { x } else { x + a * prev };
            prev
        })
        .collect();
    SampleBuffer::new(y, signal.sample_rate_hz)
}

/// Splits an 8 kHz signal into non-overlapping frames, zero-padding the last one.
pub fn segment(signal: &SampleBuffer) -> Result<Vec<Frame>, DspError> {
    if signal.sample_rate_hz != SAMPLE_RATE_HZ {
        return Err(DspError::SampleRate {
            expected: SAMPLE_RATE_HZ,
            actual: signal.sample_rate_hz,
        });
    }
    Ok(signal
        .samples()
        .chunks(FRAME_LEN)
        .enumerate()
        .map(|(index, chunk)| {
            let mut frame = Frame::zeroed(index);
            frame.samples[..chunk.len()].copy_from_slice(chunk);
            frame
        })
        .collect())
}

/// Hamming coefficient `0.54 - 0.46 cos(2 pi n / (len - 1))`.
pub fn hamming(n: usize, len: usize) -> f64 {
    if len <= 1 {
        return 1.0;
    }
    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
}

pub fn apply_window(frame: &Frame, kind: WindowKind) -> Frame {
    let mut out = frame.clone();
    if kind == WindowKind::Hamming {
        for (n, s) in out.samples.iter_mut().enumerate() {
            *s *= hamming(n, FRAME_LEN);
        }
    }
    out
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans() -> &'static Plans {
    static PLANS: OnceLock<Plans> = OnceLock::new();
    PLANS.get_or_init(|| {
        let mut planner = FftPlanner::new();
        Plans {
            forward: planner.plan_fft_forward(FRAME_LEN),
            inverse: planner.plan_fft_inverse(FRAME_LEN),
        }
    })
}

/// Forward DFT, `X[k] = sum_n x[n] exp(-2 pi i k n / 160)`.
pub fn dft(frame: &Frame) -> FrameSpectrum {
    let mut spectrum = FrameSpectrum::zeroed(frame.index);
    for (b, &s) in spectrum.bins.iter_mut().zip(frame.samples.iter()) {
        *b = Complex64::new(s, 0.0);
    }
    plans().forward.process(&mut spectrum.bins);
    spectrum
}

/// Inverse DFT with 1/N scaling, returning the real part.
///
/// Fails when the imaginary residue exceeds `1e-6 * max(1, max|real|)`,
/// which means the input was not conjugate symmetric.
pub fn idft(spectrum: &FrameSpectrum) -> Result<Frame, DspError> {
    let mut buf = spectrum.bins;
    plans().inverse.process(&mut buf);
    let scale = 1.0 / FRAME_LEN as f64;
    let residue = buf.iter().map(|c| (c.im * scale).abs()).fold(0.0, f64::max);
    let real_peak = buf.iter().map(|c| (c.re * scale).abs()).fold(0.0, f64::max);
    if residue > SYMMETRY_TOLERANCE * real_peak.max(1.0) {
        return Err(DspError::SymmetryViolation {
            frame_index: spectrum.frame_index,
            residue,
            real_peak,
        });
    }
    let mut frame = Frame::zeroed(spectrum.frame_index);
    for (s, c) in frame.samples.iter_mut().zip(buf.iter()) {
        *s = c.re * scale;
    }
    Ok(frame)
}

fn lowpass_taps(factor: u32) -> [f64; DECIMATOR_TAPS] {
    // cutoff in cycles/sample at the input rate
    let fc = DECIMATOR_CUTOFF * 0.5 / factor as f64;
    let centre = (DECIMATOR_TAPS - 1) as f64 / 2.0;
    let mut taps = [0.0; DECIMATOR_TAPS];
    for (n, t) in taps.iter_mut().enumerate() {
        let m = n as f64 - centre;
        let sinc = if m == 0.0 {
            2.0 * fc
        } else {
            (2.0 * PI * fc * m).sin() / (PI * m)
        };
        *t = sinc * hamming(n, DECIMATOR_TAPS);
    }
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    taps
}

/// Windowed-sinc low-pass followed by keeping every `factor`-th sample.
///
/// The filter is applied zero-phase (centred), so output sample `m` lines up
/// with input sample `m * factor`.
pub fn lowpass_decimate(signal: &SampleBuffer, factor: u32) -> Result<SampleBuffer, DspError> {
    let rate = signal.sample_rate_hz;
    if factor == 0 || !rate.is_multiple_of(factor) {
        return Err(DspError::Decimation { rate, factor });
    }
    if factor == 1 {
        return Ok(signal.clone());
    }
    let taps = lowpass_taps(factor);
    let half = (DECIMATOR_TAPS / 2) as isize;
    let x = signal.samples();
    let out = (0..x.len())
        .step_by(factor as usize)
        .map(|centre| {
            taps.iter()
                .enumerate()
                .filter_map(|(k, &h)| {
                    let idx = centre as isize + half - k as isize;
                    (idx >= 0 && (idx as usize) < x.len()).then(|| h * x[idx as usize])
                })
                .sum()
        })
        .collect();
    SampleBuffer::new(out, rate / factor)
}
