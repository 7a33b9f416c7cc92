//! Decoder side: beta-envelope spectral filling and frame reconstruction.

use std::fmt;

use thiserror::Error;

use crate::dsp::{self, DspError, Frame, FrameSpectrum, SampleBuffer, BIN_HZ, FRAME_LEN};
use crate::octave::{
    masked_spectrum, mirrored_spectrum, MaskedFrame, OctaveBand, OctavePlan, Survivor, BAND_COUNT,
};

pub const DEFAULT_ALPHA: f64 = 2.0;
pub const DEFAULT_MIX_WEIGHT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("alpha must exceed 1, got {0}")]
    Alpha(f64),
    #[error("mix weight must lie in [0, 1], got {0}")]
    MixWeight(f64),
    #[error("unknown synthesis technique {0} (expected 1..4)")]
    Technique(u8),
    #[error("survivor at {freq_hz} Hz is not inside the envelope of band {band} ({low_hz}..{high_hz} Hz)")]
    SurvivorOutsideBand {
        band: usize,
        freq_hz: f64,
        low_hz: f64,
        high_hz: f64,
    },
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Mode-fitted beta envelope spanning one octave band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEnvelope {
    pub alpha: f64,
    pub beta: f64,
    pub low_hz: f64,
    pub high_hz: f64,
    pub mode_hz: f64,
    pub peak: f64,
}

impl BetaEnvelope {
    /// Skew ratio `(f_M - f_c) / (f_c - f_m)`.
    pub fn skew(&self) -> f64 {
        (self.high_hz - self.mode_hz) / (self.mode_hz - self.low_hz)
    }

    /// Mode of the rescaled beta density, `(a-1)/(a+b-2) (f_M - f_m) + f_m`.
    pub fn fitted_mode_hz(&self) -> f64 {
        (self.alpha - 1.0) / (self.alpha + self.beta - 2.0) * (self.high_hz - self.low_hz)
            + self.low_hz
    }

    /// Envelope value at `freq_hz`, normalised so that the mode maps to `peak`.
    /// Zero at and outside the support edges.
    pub fn value(&self, freq_hz: f64) -> f64 {
        if freq_hz <= self.low_hz || freq_hz >= self.high_hz {
            return 0.0;
        }
        let rise = (freq_hz - self.low_hz) / (self.mode_hz - self.low_hz);
        let fall = (self.high_hz - freq_hz) / (self.high_hz - self.mode_hz);
        self.peak * rise.powf(self.alpha - 1.0) * fall.powf(self.beta - 1.0)
    }
}

/// Fits the envelope so its mode lands on the survivor frequency:
/// `beta - 1 = (alpha - 1) Q`.
pub fn fit_envelope(
    survivor: &Survivor,
    band: &OctaveBand,
    alpha: f64,
) -> Result<BetaEnvelope, SynthesisError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(SynthesisError::Alpha(alpha));
    }
    let mode_hz = survivor.frequency_hz();
    if !(band.env_low_hz < mode_hz && mode_hz < band.env_high_hz) {
        return Err(SynthesisError::SurvivorOutsideBand {
            band: band.index,
            freq_hz: mode_hz,
            low_hz: band.env_low_hz,
            high_hz: band.env_high_hz,
        });
    }
    let q = (band.env_high_hz - mode_hz) / (mode_hz - band.env_low_hz);
    Ok(BetaEnvelope {
        alpha,
        beta: 1.0 + (alpha - 1.0) * q,
        low_hz: band.env_low_hz,
        high_hz: band.env_high_hz,
        mode_hz,
        peak: survivor.magnitude,
    })
}

pub fn envelope_value(env: &BetaEnvelope, freq_hz: f64) -> f64 {
    env.value(freq_hz)
}

/// Fills every coded bin of each band from that band's envelope; DC, bins
/// below the first band and Nyquist stay zero.
pub fn fill_spectrum(
    masked: &MaskedFrame,
    plan: &OctavePlan,
    alphas: &[f64; BAND_COUNT],
) -> Result<FrameSpectrum, SynthesisError> {
    let mut values = Vec::with_capacity(plan.coded_bins());
    for ((survivor, band), &alpha) in masked.survivors.iter().zip(&plan.bands).zip(alphas) {
        let env = fit_envelope(survivor, band, alpha)?;
        for bin in band.bins() {
            let v = if bin == survivor.bin {
                survivor.magnitude
            } else {
                env.value(BIN_HZ * bin as f64)
            };
            values.push((bin, v));
        }
    }
    Ok(mirrored_spectrum(0, values))
}

/// The four reconstruction variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Technique {
    /// Survivors only.
    NoFill = 1,
    /// Beta-envelope fill.
    #[default]
    BetaFill = 2,
    /// Weighted blend of the two spectra above.
    Blend = 3,
    /// Beta fill with a Hamming window on the output frame.
    WindowedBetaFill = 4,
}

impl Technique {
    pub fn number(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for Technique {
    type Error = SynthesisError;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(Self::NoFill),
            2 => Ok(Self::BetaFill),
            3 => Ok(Self::Blend),
            4 => Ok(Self::WindowedBetaFill),
            other => Err(SynthesisError::Technique(other)),
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub technique: Technique,
    /// Per-band envelope shape; larger is narrower.
    pub alphas: [f64; BAND_COUNT],
    /// Weight of the unfilled spectrum in [`Technique::Blend`].
    pub mix_weight: f64,
    pub pre_emphasis_a: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            technique: Technique::default(),
            alphas: [DEFAULT_ALPHA; BAND_COUNT],
            mix_weight: DEFAULT_MIX_WEIGHT,
            pre_emphasis_a: dsp::DEFAULT_PRE_EMPHASIS,
        }
    }
}

impl SynthesisConfig {
    pub fn with_technique(technique: Technique) -> Self {
        Self {
            technique,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        if let Some(&a) = self.alphas.iter().find(|&&a| !(a > 1.0 && a.is_finite())) {
            return Err(SynthesisError::Alpha(a));
        }
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(SynthesisError::MixWeight(self.mix_weight));
        }
        if !(0.0..1.0).contains(&self.pre_emphasis_a) {
            return Err(DspError::Coefficient(self.pre_emphasis_a).into());
        }
        Ok(())
    }
}

pub fn synthesize_frame(
    masked: &MaskedFrame,
    plan: &OctavePlan,
    config: &SynthesisConfig,
) -> Result<Frame, SynthesisError> {
    config.validate()?;
    let spectrum = match config.technique {
        Technique::NoFill => masked_spectrum(masked, plan),
        Technique::BetaFill | Technique::WindowedBetaFill => {
            fill_spectrum(masked, plan, &config.alphas)?
        }
        Technique::Blend => {
            let w = config.mix_weight;
            let mut mixed = masked_spectrum(masked, plan);
            let filled = fill_spectrum(masked, plan, &config.alphas)?;
            for (m, f) in mixed.bins.iter_mut().zip(filled.bins.iter()) {
                *m = *m * w + *f * (1.0 - w);
            }
            mixed
        }
    };
    let frame = dsp::idft(&spectrum)?;
    Ok(match config.technique {
        Technique::WindowedBetaFill => dsp::apply_window(&frame, dsp::WindowKind::Hamming),
        _ => frame,
    })
}

/// Synthesises every frame, glues them back to back and de-emphasises.
pub fn reconstruct(
    frames: &[MaskedFrame],
    plan: &OctavePlan,
    config: &SynthesisConfig,
) -> Result<SampleBuffer, SynthesisError> {
    let mut samples = Vec::with_capacity(frames.len() * FRAME_LEN);
    for masked in frames {
        samples.extend_from_slice(&synthesize_frame(masked, plan, config)?.samples);
    }
    let glued = SampleBuffer::new(samples, dsp::SAMPLE_RATE_HZ)?;
    Ok(dsp::de_emphasize(&glued, config.pre_emphasis_a)?)
}
