//! The `.voz` container.
//!
//! Layout: an 18-byte little-endian header followed by one continuous
//! MSB-first bitstream of 50-bit frames, zero-padded to a whole byte.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "VOZ1"
//!      4     1  version (1)
//!      5     4  sample rate (u32, always 8000)
//!      9     4  frame count (u32)
//!     13     4  global scale (f32)
//!     17     1  flags (bit 0: Hamming analysis window)
//!     18     -  payload, ceil(50 * frame_count / 8) bytes
//! ```
//!
//! Each frame is `[amp1:8][off1:3][amp2:8][off2:4][amp3:8][off3:5][amp4:8][off4:6]`.

use thiserror::Error;

use crate::dsp::SAMPLE_RATE_HZ;
use crate::octave::{MaskedFrame, OctavePlan, Survivor, BAND_COUNT};

pub const MAGIC: [u8; 4] = *b"VOZ1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
pub const AMPLITUDE_BITS: u32 = 8;
pub const FRAME_BITS: usize = 50;
/// Frame duration in milliseconds.
pub const FRAME_MS: u32 = 20;
pub const FLAG_HAMMING: u8 = 0b0000_0001;

const AMP_LEVELS: f64 = 255.0;
/// Position code widths, band 1 first.
const OFFSET_BITS: [u32; BAND_COUNT] = [3, 4, 5, 6];

/// Payload bit rate: 50 bits every 20 ms.
pub const fn bit_rate_bps() -> u32 {
    FRAME_BITS as u32 * 1000 / FRAME_MS
}

pub fn payload_len(frame_count: usize) -> usize {
    (frame_count * FRAME_BITS).div_ceil(8)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VozError {
    #[error("bad magic {found:02x?}, expected \"VOZ1\"")]
    Magic { found: Vec<u8> },
    #[error("unsupported version {0}, expected 1")]
    Version(u8),
    #[error("unsupported sample rate {0} Hz in header, expected 8000")]
    SampleRate(u32),
    #[error("invalid global scale {0}")]
    Scale(f32),
    #[error("truncated stream at byte offset {offset}: need {needed} bytes, have {available}")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("corrupt frame {frame}: band {band} position code {code} exceeds {line_count} lines")]
    CorruptFrame {
        frame: usize,
        band: usize,
        code: u8,
        line_count: usize,
    },
    #[error("frame bit sequence has {0} bits, expected 50")]
    FrameLength(usize),
    #[error("frame count {0} does not fit the header")]
    TooManyFrames(usize),
}

/// Amplitude and position codes of one band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct BandCode {
    pub amp: u8,
    pub offset: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct QuantizedFrame {
    pub bands: [BandCode; BAND_COUNT],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VozHeader {
    pub magic: [u8; 4],
    pub version: u8,
    pub sample_rate_hz: u32,
    pub frame_count: u32,
    pub global_scale: f32,
    pub flags: u8,
}

impl VozHeader {
    pub fn new(frame_count: u32, global_scale: f32, flags: u8) -> Self {
        Self {
            magic: MAGIC,
            version: VERSION,
            sample_rate_hz: SAMPLE_RATE_HZ,
            frame_count,
            global_scale,
            flags,
        }
    }

    pub fn hamming_window(&self) -> bool {
        self.flags & FLAG_HAMMING != 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.frame_count as f64 * FRAME_MS as f64 / 1000.0
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&self.magic);
        out[4] = self.version;
        out[5..9].copy_from_slice(&self.sample_rate_hz.to_le_bytes());
        out[9..13].copy_from_slice(&self.frame_count.to_le_bytes());
        out[13..17].copy_from_slice(&self.global_scale.to_le_bytes());
        out[17] = self.flags;
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, VozError> {
        let magic: [u8; 4] = bytes
            .get(0..4)
            .and_then(|m| m.try_into().ok())
            .unwrap_or([0; 4]);
        if bytes.len() < 4 || magic != MAGIC {
            return Err(VozError::Magic {
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(VozError::Truncated {
                offset: bytes.len(),
                needed: HEADER_LEN,
                available: bytes.len(),
            });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let header = Self {
            magic,
            version: bytes[4],
            sample_rate_hz: u32_at(5),
            frame_count: u32_at(9),
            global_scale: f32::from_le_bytes(bytes[13..17].try_into().unwrap()),
            flags: bytes[17],
        };
        if header.version != VERSION {
            return Err(VozError::Version(header.version));
        }
        if header.sample_rate_hz != SAMPLE_RATE_HZ {
            return Err(VozError::SampleRate(header.sample_rate_hz));
        }
        if !(header.global_scale.is_finite() && header.global_scale >= 0.0) {
            return Err(VozError::Scale(header.global_scale));
        }
        Ok(header)
    }
}

/// Largest survivor magnitude across all frames, 0 when empty.
pub fn compute_global_scale(frames: &[MaskedFrame]) -> f64 {
    frames
        .iter()
        .map(MaskedFrame::peak_magnitude)
        .fold(0.0, f64::max)
}

/// Smallest f32 not below `scale`, so every magnitude stays within the stored scale.
fn storable_scale(scale: f64) -> f32 {
    let s = scale as f32;
    if (s as f64) < scale {
        s.next_up()
    } else {
        s
    }
}

/// Uniform unipolar 8-bit quantiser, round half up.
pub fn quantize(masked: &MaskedFrame, plan: &OctavePlan, scale: f64) -> QuantizedFrame {
    let mut q = QuantizedFrame::default();
    for ((code, s), band) in q.bands.iter_mut().zip(&masked.survivors).zip(&plan.bands) {
        code.amp = if scale > 0.0 {
            (AMP_LEVELS * s.magnitude / scale + 0.5)
                .floor()
                .clamp(0.0, AMP_LEVELS) as u8
        } else {
            0
        };
        code.offset = (s.bin - band.first_bin) as u8;
    }
    q
}

/// Inverse of [`quantize`]; `frame` only labels errors.
pub fn dequantize(
    q: &QuantizedFrame,
    plan: &OctavePlan,
    scale: f64,
    frame: usize,
) -> Result<MaskedFrame, VozError> {
    let mut masked = MaskedFrame::silent(plan);
    for ((s, code), band) in masked.survivors.iter_mut().zip(&q.bands).zip(&plan.bands) {
        if code.offset as usize >= band.line_count() {
            return Err(VozError::CorruptFrame {
                frame,
                band: band.index,
                code: code.offset,
                line_count: band.line_count(),
            });
        }
        *s = Survivor {
            band_index: band.index,
            bin: band.first_bin + code.offset as usize,
            magnitude: code.amp as f64 * scale / AMP_LEVELS,
        };
    }
    Ok(masked)
}

fn frame_to_word(q: &QuantizedFrame) -> u64 {
    q.bands
        .iter()
        .zip(OFFSET_BITS)
        .fold(0u64, |acc, (c, bits)| {
            let acc = (acc << AMPLITUDE_BITS) | c.amp as u64;
            (acc << bits) | (c.offset as u64 & ((1 << bits) - 1))
        })
}

fn word_to_frame(word: u64) -> QuantizedFrame {
    let mut q = QuantizedFrame::default();
    let mut shift = FRAME_BITS as u32;
    for (c, bits) in q.bands.iter_mut().zip(OFFSET_BITS) {
        shift -= AMPLITUDE_BITS;
        c.amp = (word >> shift) as u8;
        shift -= bits;
        c.offset = ((word >> shift) & ((1 << bits) - 1)) as u8;
    }
    q
}

/// The 50 frame bits, most significant first.
pub fn pack_frame(q: &QuantizedFrame) -> [bool; FRAME_BITS] {
    let word = frame_to_word(q);
    std::array::from_fn(|i| (word >> (FRAME_BITS - 1 - i)) & 1 == 1)
}

/// Inverse of [`pack_frame`]. Position codes are not range-checked here.
pub fn unpack_frame(bits: &[bool]) -> Result<QuantizedFrame, VozError> {
    if bits.len() != FRAME_BITS {
        return Err(VozError::FrameLength(bits.len()));
    }
    Ok(word_to_frame(
        bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64),
    ))
}

struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    pending: u32,
}

impl BitWriter {
    fn with_capacity(n: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(n),
            acc: 0,
            pending: 0,
        }
    }

    fn write(&mut self, value: u64, bits: u32) {
        debug_assert!(bits <= 56);
        self.acc = (self.acc << bits) | (value & ((1u64 << bits) - 1));
        self.pending += bits;
        while self.pending >= 8 {
            self.pending -= 8;
            self.bytes.push((self.acc >> self.pending) as u8);
        }
        self.acc &= (1u64 << self.pending) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.pending > 0 {
            self.bytes.push((self.acc << (8 - self.pending)) as u8);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Caller guarantees enough bits remain.
    fn read(&mut self, bits: u32) -> u64 {
        let mut out = 0u64;
        for _ in 0..bits {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            out = (out << 1) | bit as u64;
            self.pos += 1;
        }
        out
    }
}

/// Packs already-quantised frames behind a header.
pub fn write_quantized(header: &VozHeader, frames: &[QuantizedFrame]) -> Vec<u8> {
    debug_assert_eq!(header.frame_count as usize, frames.len());
    let mut w = BitWriter::with_capacity(HEADER_LEN + payload_len(frames.len()));
    w.bytes.extend_from_slice(&header.to_bytes());
    for q in frames {
        w.write(frame_to_word(q), FRAME_BITS as u32);
    }
    w.finish()
}

/// Quantises `frames` against their common peak and serialises them.
pub fn write_voz(
    frames: &[MaskedFrame],
    plan: &OctavePlan,
    flags: u8,
) -> Result<Vec<u8>, VozError> {
    let count = u32::try_from(frames.len()).map_err(|_| VozError::TooManyFrames(frames.len()))?;
    let scale = storable_scale(compute_global_scale(frames));
    let quantized: Vec<_> = frames
        .iter()
        .map(|m| quantize(m, plan, scale as f64))
        .collect();
    Ok(write_quantized(
        &VozHeader::new(count, scale, flags),
        &quantized,
    ))
}

/// Non-fatal issues found while reading a stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    NonZeroPadding { bits: u8 },
    TrailingBytes { count: usize },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NonZeroPadding { bits } => {
                write!(f, "payload padding bits are not zero ({bits:#04x})")
            }
            Self::TrailingBytes { count } => {
                write!(f, "{count} trailing bytes after payload ignored")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VozStream {
    pub header: VozHeader,
    pub frames: Vec<QuantizedFrame>,
    pub diagnostics: Vec<Diagnostic>,
}

impl VozStream {
    /// Dequantises every frame with the header's scale.
    pub fn masked_frames(&self, plan: &OctavePlan) -> Result<Vec<MaskedFrame>, VozError> {
        let scale = self.header.global_scale as f64;
        self.frames
            .iter()
            .enumerate()
            .map(|(i, q)| dequantize(q, plan, scale, i))
            .collect()
    }

    /// Payload bytes exactly as they would be written for these frames.
    pub fn payload(&self) -> Vec<u8> {
        write_quantized(&self.header, &self.frames)[HEADER_LEN..].to_vec()
    }
}

pub fn read_voz(bytes: &[u8]) -> Result<VozStream, VozError> {
    let header = VozHeader::parse(bytes)?;
    let count = header.frame_count as usize;
    let needed = payload_len(count);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < needed {
        return Err(VozError::Truncated {
            offset: bytes.len(),
            needed: HEADER_LEN + needed,
            available: bytes.len(),
        });
    }
    let mut reader = BitReader::new(&payload[..needed]);
    let frames = (0..count)
        .map(|_| word_to_frame(reader.read(FRAME_BITS as u32)))
        .collect();
    let mut diagnostics = Vec::new();
    let pad = (needed * 8 - count * FRAME_BITS) as u32;
    if pad > 0 {
        let bits = reader.read(pad) as u8;
        if bits != 0 {
            diagnostics.push(Diagnostic::NonZeroPadding { bits });
        }
    }
    if payload.len() > needed {
        diagnostics.push(Diagnostic::TrailingBytes {
            count: payload.len() - needed,
        });
    }
    Ok(VozStream {
        header,
        frames,
        diagnostics,
    })
}
