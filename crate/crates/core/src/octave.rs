//! Octave band plan and full-masking survivor selection.
//!
//! Per frame and per coded octave only the strongest DFT line is kept; the
//! rest of the band is treated as masked and dropped along with the phase.

use num_complex::Complex64;

use crate::dsp::{FrameSpectrum, BIN_HZ, FRAME_LEN};

pub const BAND_COUNT: usize = 4;

/// One coded octave band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctaveBand {
    /// 1-based band number.
    pub index: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Inclusive 0-based DFT bin range.
    pub first_bin: usize,
    pub last_bin: usize,
    /// Width of the position code in bits.
    pub offset_bits: u32,
    /// Envelope support, one bin step outside the coded range.
    pub env_low_hz: f64,
    pub env_high_hz: f64,
}

impl OctaveBand {
    const fn new(index: usize, low_hz: f64, first_bin: usize, last_bin: usize, bits: u32) -> Self {
        Self {
            index,
            low_hz,
            high_hz: low_hz * 2.0,
            first_bin,
            last_bin,
            offset_bits: bits,
            env_low_hz: BIN_HZ * (first_bin - 1) as f64,
            env_high_hz: BIN_HZ * (last_bin + 1) as f64,
        }
    }

    pub fn line_count(&self) -> usize {
        self.last_bin - self.first_bin + 1
    }

    pub fn contains(&self, bin: usize) -> bool {
        (self.first_bin..=self.last_bin).contains(&bin)
    }

    pub fn bins(&self) -> std::ops::RangeInclusive<usize> {
        self.first_bin..=self.last_bin
    }
}

/// The four coded octave bands, 256 Hz to 4096 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct OctavePlan {
    pub bands: [OctaveBand; BAND_COUNT],
}

impl OctavePlan {
    pub fn position_bits(&self) -> u32 {
        self.bands.iter().map(|b| b.offset_bits).sum()
    }

    pub fn coded_bins(&self) -> usize {
        self.bands.iter().map(OctaveBand::line_count).sum()
    }
}

impl Default for OctavePlan {
    fn default() -> Self {
        standard_plan()
    }
}

pub fn standard_plan() -> OctavePlan {
    OctavePlan {
        bands: [
            OctaveBand::new(1, 256.0, 6, 10, 3),
            OctaveBand::new(2, 512.0, 11, 20, 4),
            OctaveBand::new(3, 1024.0, 21, 40, 5),
            OctaveBand::new(4, 2048.0, 41, 79, 6),
        ],
    }
}

/// The single retained line of one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Survivor {
    pub band_index: usize,
    pub bin: usize,
    pub magnitude: f64,
}

impl Survivor {
    pub fn frequency_hz(&self) -> f64 {
        BIN_HZ * self.bin as f64
    }
}

/// One frame reduced to its four masking tones, ordered by band.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedFrame {
    pub survivors: [Survivor; BAND_COUNT],
}

impl MaskedFrame {
    /// Frame with every survivor at its band's first bin with zero magnitude.
    pub fn silent(plan: &OctavePlan) -> Self {
        Self {
            survivors: plan.bands.map(|b| Survivor {
                band_index: b.index,
                bin: b.first_bin,
                magnitude: 0.0,
            }),
        }
    }

    /// Checks band order, bin ranges and magnitudes against `plan`.
    pub fn is_valid(&self, plan: &OctavePlan) -> bool {
        self.survivors.iter().zip(&plan.bands).all(|(s, b)| {
            s.band_index == b.index
                && b.contains(s.bin)
                && s.magnitude.is_finite()
                && s.magnitude >= 0.0
        })
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.survivors
            .iter()
            .map(|s| s.magnitude)
            .fold(0.0, f64::max)
    }
}

/// Picks the largest-magnitude bin of every band; ties go to the lowest bin.
pub fn select_survivors(spectrum: &FrameSpectrum, plan: &OctavePlan) -> MaskedFrame {
    MaskedFrame {
        survivors: plan.bands.map(|band| {
            let mut best = Survivor {
                band_index: band.index,
                bin: band.first_bin,
                magnitude: spectrum.bins[band.first_bin].norm(),
            };
            for bin in band.bins().skip(1) {
                let magnitude = spectrum.bins[bin].norm();
                if magnitude > best.magnitude {
                    best.bin = bin;
                    best.magnitude = magnitude;
                }
            }
            best
        }),
    }
}

/// Writes `values` (indexed by bin 1..80) into a real, even-mirrored spectrum.
pub(crate) fn mirrored_spectrum(
    frame_index: usize,
    values: impl IntoIterator<Item = (usize, f64)>,
) -> FrameSpectrum {
    let mut spectrum = FrameSpectrum::zeroed(frame_index);
    for (bin, v) in values {
        debug_assert!((1..FRAME_LEN / 2).contains(&bin));
        spectrum.bins[bin] = Complex64::new(v, 0.0);
        spectrum.bins[FRAME_LEN - bin] = Complex64::new(v, 0.0);
    }
    spectrum
}

/// Spectrum holding only the survivors (and their mirrors); DC and all other
/// lines are zero.
pub fn masked_spectrum(masked: &MaskedFrame, plan: &OctavePlan) -> FrameSpectrum {
    debug_assert!(masked.is_valid(plan));
    mirrored_spectrum(0, masked.survivors.iter().map(|s| (s.bin, s.magnitude)))
}
