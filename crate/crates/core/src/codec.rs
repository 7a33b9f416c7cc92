//! End-to-end encode and decode built from the stage modules.

use thiserror::Error;

use crate::dsp::{self, DspError, SampleBuffer, WindowKind, SAMPLE_RATE_HZ};
use crate::format::{self, VozError, VozStream, FLAG_HAMMING};
use crate::octave::{select_survivors, MaskedFrame, OctavePlan};
use crate::synthesis::{self, SynthesisConfig, SynthesisError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("unsupported sample rate {0} Hz (expected 8000 Hz or 16000 Hz)")]
    UnsupportedRate(u32),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Format(#[from] VozError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub pre_emphasis_a: f64,
    pub window: WindowKind,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pre_emphasis_a: dsp::DEFAULT_PRE_EMPHASIS,
            window: WindowKind::Hamming,
        }
    }
}

/// Brings 16 kHz input down to the codec rate; other rates are rejected.
pub fn to_codec_rate(signal: &SampleBuffer) -> Result<SampleBuffer, CodecError> {
    match signal.sample_rate_hz() {
        SAMPLE_RATE_HZ => Ok(signal.clone()),
        r if r == 2 * SAMPLE_RATE_HZ => Ok(dsp::lowpass_decimate(signal, 2)?),
        r => Err(CodecError::UnsupportedRate(r)),
    }
}

/// Pre-emphasis, framing, windowing, DFT and survivor selection.
pub fn analyze(
    signal: &SampleBuffer,
    plan: &OctavePlan,
    config: &AnalysisConfig,
) -> Result<Vec<MaskedFrame>, CodecError> {
    let emphasized = dsp::pre_emphasize(signal, config.pre_emphasis_a)?;
    Ok(dsp::segment(&emphasized)?
        .iter()
        .map(|f| select_survivors(&dsp::dft(&dsp::apply_window(f, config.window)), plan))
        .collect())
}

/// Analyses an 8 kHz signal and serialises it as a `.voz` stream.
pub fn encode(
    signal: &SampleBuffer,
    plan: &OctavePlan,
    config: &AnalysisConfig,
) -> Result<Vec<u8>, CodecError> {
    let frames = analyze(signal, plan, config)?;
    let flags = if config.window == WindowKind::Hamming {
        FLAG_HAMMING
    } else {
        0
    };
    Ok(format::write_voz(&frames, plan, flags)?)
}

/// Dequantises a parsed stream and synthesises audio from it.
pub fn synthesize_stream(
    stream: &VozStream,
    plan: &OctavePlan,
    config: &SynthesisConfig,
) -> Result<SampleBuffer, CodecError> {
    let frames = stream.masked_frames(plan)?;
    Ok(synthesis::reconstruct(&frames, plan, config)?)
}

pub fn decode(
    bytes: &[u8],
    plan: &OctavePlan,
    config: &SynthesisConfig,
) -> Result<SampleBuffer, CodecError> {
    synthesize_stream(&format::read_voz(bytes)?, plan, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::octave::standard_plan;

    #[test]
    fn rate_gate() {
        let s = SampleBuffer::new(vec![0.0; 320], 16000).unwrap();
        assert_eq!(to_codec_rate(&s).unwrap().sample_rate_hz(), 8000);
        let s = SampleBuffer::new(vec![0.0; 441], 44100).unwrap();
        assert_eq!(to_codec_rate(&s), Err(CodecError::UnsupportedRate(44100)));
    }

    #[test]
    fn encode_decode_lengths() {
        let plan = standard_plan();
        let s = SampleBuffer::new(
            (0..1000).map(|n| (n as f64 * 0.3).sin() * 0.4).collect(),
            8000,
        )
        .unwrap();
        let bytes = encode(&s, &plan, &AnalysisConfig::default()).unwrap();
        // ceil(1000 / 160) = 7 frames
        assert_eq!(bytes.len(), format::HEADER_LEN + format::payload_len(7));
        let out = decode(&bytes, &plan, &SynthesisConfig::default()).unwrap();
        assert_eq!(out.len(), 7 * 160);
    }

    #[test]
    fn window_flag_recorded() {
        let plan = standard_plan();
        let s = SampleBuffer::new(vec![0.1; 160], 8000).unwrap();
        let rect = AnalysisConfig {
            window: WindowKind::Rectangular,
            ..AnalysisConfig::default()
        };
        let bytes = encode(&s, &plan, &rect).unwrap();
        assert!(!format::read_voz(&bytes).unwrap().header.hamming_window());
        let bytes = encode(&s, &plan, &AnalysisConfig::default()).unwrap();
        assert!(format::read_voz(&bytes).unwrap().header.hamming_window());
    }
}
