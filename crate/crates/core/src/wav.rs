//! Minimal RIFF/WAVE PCM16 reader and writer.

use thiserror::Error;

use crate::dsp::{DspError, SampleBuffer};

const PCM: u16 = 1;
const EXTENSIBLE: u16 = 0xFFFE;
const CANONICAL_HEADER_LEN: usize = 44;
const FULL_SCALE: f64 = 32768.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavError {
    #[error("malformed WAV at byte offset {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("unsupported WAV format: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

fn parse_err(offset: usize, reason: impl Into<String>) -> WavError {
    WavError::Parse {
        offset,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavSpec {
    pub sample_rate_hz: u32,
    pub channels: u16,
    pub bits_per_sample: u16,
}

fn u16_at(b: &[u8], o: usize) -> u16 {
    u16::from_le_bytes([b[o], b[o + 1]])
}

fn u32_at(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]])
}

fn parse_fmt(body: &[u8], offset: usize) -> Result<WavSpec, WavError> {
    if body.len() < 16 {
        return Err(parse_err(offset, "fmt chunk shorter than 16 bytes"));
    }
    let mut tag = u16_at(body, 0);
    if tag == EXTENSIBLE {
        if body.len() < 40 {
            return Err(parse_err(
                offset,
                "extensible fmt chunk shorter than 40 bytes",
            ));
        }
        // first two bytes of the sub-format GUID carry the format tag
        tag = u16_at(body, 24);
    }
    let spec = WavSpec {
        channels: u16_at(body, 2),
        sample_rate_hz: u32_at(body, 4),
        bits_per_sample: u16_at(body, 14),
    };
    if tag != PCM {
        return Err(WavError::Unsupported(format!(
            "format tag {tag:#06x} is not PCM"
        )));
    }
    if spec.bits_per_sample != 16 {
        return Err(WavError::Unsupported(format!(
            "{} bits per sample (only 16-bit PCM is supported)",
            spec.bits_per_sample
        )));
    }
    if spec.channels == 0 {
        return Err(parse_err(offset, "zero channels"));
    }
    if spec.sample_rate_hz == 0 {
        return Err(parse_err(offset, "zero sample rate"));
    }
    Ok(spec)
}

/// Parses a PCM16 WAV file, averaging channels down to mono.
///
/// Chunks other than `fmt ` and `data` are skipped.
pub fn read_wav(bytes: &[u8]) -> Result<(WavSpec, SampleBuffer), WavError> {
    if bytes.len() < 12 {
        return Err(parse_err(bytes.len(), "file shorter than RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(parse_err(0, "missing RIFF tag"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(parse_err(8, "missing WAVE tag"));
    }
    let mut spec = None;
    let mut offset = 12;
    while offset + 8 <= bytes.len() {
        let id = &bytes[offset..offset + 4];
        let size = u32_at(bytes, offset + 4) as usize;
        let body_start = offset + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                parse_err(
                    offset,
                    format!(
                        "chunk {:?} declares {size} bytes but only {} remain",
                        String::from_utf8_lossy(id),
                        bytes.len() - body_start
                    ),
                )
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => spec = Some(parse_fmt(body, offset)?),
            b"data" => {
                let spec = spec.ok_or_else(|| parse_err(offset, "data chunk before fmt chunk"))?;
                let channels = spec.channels as usize;
                let frame_bytes = 2 * channels;
                if !body.len().is_multiple_of(frame_bytes) {
                    return Err(parse_err(
                        offset,
                        format!(
                            "data size {} is not a multiple of {frame_bytes}",
                            body.len()
                        ),
                    ));
                }
                let samples = body
                    .chunks_exact(frame_bytes)
                    .map(|frame| {
                        let sum: f64 = frame
                            .chunks_exact(2)
                            .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / FULL_SCALE)
                            .sum();
                        sum / channels as f64
                    })
                    .collect();
                return Ok((spec, SampleBuffer::new(samples, spec.sample_rate_hz)?));
            }
            _ => {}
        }
        // chunks are word aligned
        offset = body_end + (size & 1);
    }
    Err(parse_err(
        offset.min(bytes.len()),
        if spec.is_some() {
            "no data chunk"
        } else {
            "no fmt chunk"
        },
    ))
}

/// Encoded file plus the number of samples that had to be clipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WavOutput {
    pub bytes: Vec<u8>,
    pub clipped: usize,
}

fn to_pcm(v: f64) -> (i16, bool) {
    let max = 1.0 - 1.0 / FULL_SCALE;
    let clipped = !(-1.0..=max).contains(&v);
    let pcm = (v.clamp(-1.0, max) * FULL_SCALE).round() as i16;
    (pcm, clipped)
}

/// Writes a canonical 44-byte-header mono PCM16 file.
pub fn write_wav(signal: &SampleBuffer) -> WavOutput {
    let data_len = signal.len() * 2;
    let rate = signal.sample_rate_hz();
    let mut bytes = Vec::with_capacity(CANONICAL_HEADER_LEN + data_len);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    bytes.extend_from_slice(b"WAVEfmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&PCM.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&rate.to_le_bytes());
    bytes.extend_from_slice(&(rate * 2).to_le_bytes());
    bytes.extend_from_slice(&2u16.to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&(data_len as u32).to_le_bytes());
    let mut clipped = 0;
    for &s in signal.samples() {
        let (pcm, c) = to_pcm(s);
        clipped += c as usize;
        bytes.extend_from_slice(&pcm.to_le_bytes());
    }
    WavOutput { bytes, clipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Builds a PCM16 file with an optional extra chunk before `data`.
    fn build(rate: u32, channels: u16, pcm: &[i16], extra: Option<(&[u8; 4], &[u8])>) -> Vec<u8> {
        let mut chunks = Vec::new();
        chunks.extend_from_slice(b"fmt ");
        chunks.extend_from_slice(&16u32.to_le_bytes());
        chunks.extend_from_slice(&1u16.to_le_bytes());
        chunks.extend_from_slice(&channels.to_le_bytes());
        chunks.extend_from_slice(&rate.to_le_bytes());
        chunks.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
        chunks.extend_from_slice(&(2 * channels).to_le_bytes());
        chunks.extend_from_slice(&16u16.to_le_bytes());
        if let Some((id, body)) = extra {
            chunks.extend_from_slice(id);
            chunks.extend_from_slice(&(body.len() as u32).to_le_bytes());
            chunks.extend_from_slice(body);
            if body.len() % 2 == 1 {
                chunks.push(0);
            }
        }
        chunks.extend_from_slice(b"data");
        chunks.extend_from_slice(&((pcm.len() * 2) as u32).to_le_bytes());
        for s in pcm {
            chunks.extend_from_slice(&s.to_le_bytes());
        }
        let mut out = b"RIFF".to_vec();
        out.extend_from_slice(&((chunks.len() + 4) as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend(chunks);
        out
    }

    #[test]
    fn reads_mono_scaling() {
        let (spec, buf) = read_wav(&build(8000, 1, &[0, 16384, -32768], None)).unwrap();
        assert_eq!(
            spec,
            WavSpec {
                sample_rate_hz: 8000,
                channels: 1,
                bits_per_sample: 16
            }
        );
        assert_eq!(buf.samples(), &[0.0, 0.5, -1.0]);
    }

    #[test]
    fn stereo_is_averaged() {
        let (_, buf) = read_wav(&build(8000, 2, &[32767, 0], None)).unwrap();
        assert_eq!(buf.len(), 1);
        assert!((buf.samples()[0] - 0.5).abs() < 1e-4);
        let (_, buf) = read_wav(&build(8000, 2, &[16384, 0], None)).unwrap();
        assert_eq!(buf.samples(), &[0.25]);
    }

    #[test]
    fn skips_unknown_chunks() {
        let bytes = build(16000, 1, &[100, -100], Some((b"LIST", b"abc")));
        let (spec, buf) = read_wav(&bytes).unwrap();
        assert_eq!(spec.sample_rate_hz, 16000);
        assert_eq!(buf.len(), 2);
    }

    #[test]
    fn rejects_unsupported() {
        let mut bytes = build(8000, 1, &[0], None);
        bytes[20] = 3; // IEEE float
        assert!(matches!(read_wav(&bytes), Err(WavError::Unsupported(_))));
        let mut bytes = build(8000, 1, &[0], None);
        bytes[34] = 24;
        assert!(matches!(read_wav(&bytes), Err(WavError::Unsupported(_))));
    }

    #[test]
    fn malformed_reports_offset() {
        assert!(matches!(
            read_wav(b"RIFF"),
            Err(WavError::Parse { offset: 4, .. })
        ));
        let mut bytes = build(8000, 1, &[0, 1], None);
        bytes[0] = b'X';
        assert!(matches!(
            read_wav(&bytes),
            Err(WavError::Parse { offset: 0, .. })
        ));
        let bytes = build(8000, 1, &[0, 1, 2], None);
        let truncated = &bytes[..bytes.len() - 2];
        assert!(matches!(
            read_wav(truncated),
            Err(WavError::Parse { offset: 36, .. })
        ));
        let fmt_only = &bytes[..36];
        assert!(matches!(read_wav(fmt_only), Err(WavError::Parse { .. })));
    }

    #[test]
    fn write_scaling_and_clipping() {
        let buf = SampleBuffer::new(vec![0.0, 0.5, -1.0, 2.0, -3.0], 8000).unwrap();
        let out = write_wav(&buf);
        assert_eq!(out.bytes.len(), 44 + 10);
        assert_eq!(out.clipped, 2);
        let pcm: Vec<i16> = out.bytes[44..]
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        assert_eq!(pcm, [0, 16384, -32768, 32767, -32768]);
    }

    #[test]
    fn empty_buffer_is_valid() {
        let out = write_wav(&SampleBuffer::new(vec![], 8000).unwrap());
        assert_eq!(out.bytes.len(), 44);
        let (spec, buf) = read_wav(&out.bytes).unwrap();
        assert_eq!(spec.channels, 1);
        assert!(buf.is_empty());
    }

    proptest! {
        #[test]
        fn pcm16_round_trip_is_lossless(pcm in proptest::collection::vec(any::<i16>(), 0..500)) {
            let original = build(8000, 1, &pcm, None);
            let (_, buf) = read_wav(&original).unwrap();
            let out = write_wav(&buf);
            prop_assert_eq!(out.clipped, 0);
            prop_assert_eq!(&out.bytes[44..], &original[44..]);
            prop_assert_eq!(out.bytes, original);
        }
    }
}
