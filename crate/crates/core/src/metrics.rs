//! Objective quality measures and per-stage spectrum dumps.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dsp::{self, DspError, Frame, SampleBuffer, WindowKind, FRAME_LEN};
use crate::octave::{masked_spectrum, select_survivors, standard_plan};
use crate::synthesis::{fill_spectrum, SynthesisConfig, SynthesisError};

/// Per-frame segmental SNR is clamped to this range (dB).
pub const SEG_SNR_FLOOR_DB: f64 = -10.0;
pub const SEG_SNR_CEILING_DB: f64 = 35.0;
/// Magnitude floor inside the log-spectral distance.
pub const LSD_EPSILON: f64 = 1e-10;

const HALF: usize = FRAME_LEN / 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("metric undefined: {0}")]
    Undefined(&'static str),
    #[error("sample rate mismatch: reference {reference} Hz, test {test} Hz")]
    RateMismatch { reference: u32, test: u32 },
    #[error("frame index {index} out of range ({count} frames)")]
    FrameRange { index: usize, count: usize },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub segmental_snr_db: f64,
    pub log_spectral_distortion_db: f64,
    pub frames_compared: usize,
    pub clipped_samples: usize,
}

/// Reference and test cut into aligned frames; the test is zero-padded or
/// truncated to the reference length.
fn paired_frames<'a>(
    reference: &'a SampleBuffer,
    test: &'a SampleBuffer,
) -> Result<impl Iterator<Item = (&'a [f64], Vec<f64>)> + 'a, MetricsError> {
    if reference.sample_rate_hz() != test.sample_rate_hz() {
        return Err(MetricsError::RateMismatch {
            reference: reference.sample_rate_hz(),
            test: test.sample_rate_hz(),
        });
    }
    if reference.is_empty() && test.is_empty() {
        return Err(MetricsError::Undefined("both signals are empty"));
    }
    let t = test.samples();
    Ok(reference
        .samples()
        .chunks(FRAME_LEN)
        .enumerate()
        .map(move |(i, r)| {
            let start = i * FRAME_LEN;
            let aligned = (start..start + r.len())
                .map(|n| t.get(n).copied().unwrap_or(0.0))
                .collect();
            (r, aligned)
        }))
}

/// Mean per-frame SNR in dB; silent reference frames are skipped.
pub fn segmental_snr(reference: &SampleBuffer, test: &SampleBuffer) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (r, t) in paired_frames(reference, test)? {
        let signal: f64 = r.iter().map(|x| x * x).sum();
        if signal == 0.0 {
            continue;
        }
        let noise: f64 = r.iter().zip(&t).map(|(x, y)| (x - y).powi(2)).sum();
        let db = if noise == 0.0 {
            SEG_SNR_CEILING_DB
        } else {
            10.0 * (signal / noise).log10()
        };
        total += db.clamp(SEG_SNR_FLOOR_DB, SEG_SNR_CEILING_DB);
        count += 1;
    }
    if count == 0 {
        return Err(MetricsError::Undefined(
            "reference has no non-silent frames",
        ));
    }
    Ok(total / count as f64)
}

fn to_frame(samples: &[f64], index: usize) -> Frame {
    let mut f = Frame::zeroed(index);
    f.samples[..samples.len()].copy_from_slice(samples);
    f
}

/// Frame-averaged RMS log-spectral distance over bins 1..79, in dB.
pub fn log_spectral_distortion(
    reference: &SampleBuffer,
    test: &SampleBuffer,
) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, (r, t)) in paired_frames(reference, test)?.enumerate() {
        let x = dsp::dft(&to_frame(r, i));
        let y = dsp::dft(&to_frame(&t, i));
        let sq: f64 = (1..HALF)
            .map(|k| {
                let d = 20.0
                    * ((x.bins[k].norm() + LSD_EPSILON) / (y.bins[k].norm() + LSD_EPSILON)).log10();
                d * d
            })
            .sum();
        total += (sq / (HALF - 1) as f64).sqrt();
        count += 1;
    }
    if count == 0 {
        return Err(MetricsError::Undefined("reference is empty"));
    }
    Ok(total / count as f64)
}

pub fn quality_report(
    reference: &SampleBuffer,
    test: &SampleBuffer,
    clipped_samples: usize,
) -> Result<QualityReport, MetricsError> {
    Ok(QualityReport {
        segmental_snr_db: segmental_snr(reference, test)?,
        log_spectral_distortion_db: log_spectral_distortion(reference, test)?,
        frames_compared: reference.len().div_ceil(FRAME_LEN),
        clipped_samples,
    })
}

/// Magnitudes of bins 0..79 at the three analysis/synthesis stages of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSpectra {
    pub original: [f64; HALF],
    pub masked: [f64; HALF],
    pub filled: [f64; HALF],
}

impl StageSpectra {
    pub fn rows(&self) -> [(&'static str, &[f64; HALF]); 3] {
        [
            ("original", &self.original),
            ("masked", &self.masked),
            ("filled", &self.filled),
        ]
    }

    /// CSV with a `stage,bin0..bin79` header and one row per stage.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage");
        for k in 0..HALF {
            write!(out, ",bin{k}").unwrap();
        }
        out.push('\n');
        for (name, row) in self.rows() {
            out.push_str(name);
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn dump_stages(
    signal: &SampleBuffer,
    frame_index: usize,
    window: WindowKind,
    config: &SynthesisConfig,
) -> Result<StageSpectra, MetricsError> {
    let plan = standard_plan();
    let emphasized = dsp::pre_emphasize(signal, config.pre_emphasis_a)?;
    let frames = dsp::segment(&emphasized)?;
    let frame = frames.get(frame_index).ok_or(MetricsError::FrameRange {
        index: frame_index,
        count: frames.len(),
    })?;
    let spectrum = dsp::dft(&dsp::apply_window(frame, window));
    let masked = select_survivors(&spectrum, &plan);
    Ok(StageSpectra {
        original: spectrum.half_magnitudes(),
        masked: masked_spectrum(&masked, &plan).half_magnitudes(),
        filled: fill_spectrum(&masked, &plan, &config.alphas)?.half_magnitudes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn buf(v: Vec<f64>) -> SampleBuffer {
        SampleBuffer::new(v, 8000).unwrap()
    }

    fn noise(len: usize, seed: u64, amp: f64) -> Vec<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-amp..amp)).collect()
    }

    /// Direct-summation LSD, independent of the FFT path.
    fn lsd_oracle(r: &[f64], t: &[f64]) -> f64 {
        let mag = |x: &[f64], k: usize| {
            let c: Complex64 = x
                .iter()
                .enumerate()
                .map(|(n, &v)| Complex64::from_polar(v, -2.0 * PI * (k * n) as f64 / 160.0))
                .sum();
            c.norm()
        };
        let frames = r.len().div_ceil(160);
        let mut total = 0.0;
        for f in 0..frames {
            let pick = |x: &[f64]| -> Vec<f64> {
                (f * 160..f * 160 + 160)
                    .map(|n| {
                        if n < r.len() {
                            x.get(n).copied().unwrap_or(0.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            };
            let (a, b) = (pick(r), pick(t));
            let mut sq = 0.0;
            for k in 1..80 {
                let d = 20.0 * ((mag(&a, k) + 1e-10) / (mag(&b, k) + 1e-10)).log10();
                sq += d * d;
            }
            total += (sq / 79.0).sqrt();
        }
        total / frames as f64
    }

    #[test]
    fn seg_snr_reference_cases() {
        let r = noise(800, 1, 0.5);
        assert_eq!(
            segmental_snr(&buf(r.clone()), &buf(r.clone())).unwrap(),
            35.0
        );
        assert!(segmental_snr(&buf(r.clone()), &buf(vec![])).unwrap().abs() < 1e-12);
        let half: Vec<f64> = r.iter().map(|x| 0.5 * x).collect();
        let v = segmental_snr(&buf(r.clone()), &buf(half)).unwrap();
        // 10 log10(4)
        assert!((v - 6.020_599_913_279_624).abs() < 1e-9, "{v}");
        let far: Vec<f64> = r.iter().map(|x| -10.0 * x).collect();
        assert_eq!(segmental_snr(&buf(r), &buf(far)).unwrap(), -10.0);
    }

    #[test]
    fn seg_snr_errors() {
        assert_eq!(
            segmental_snr(&buf(vec![]), &buf(vec![])),
            Err(MetricsError::Undefined("both signals are empty"))
        );
        assert!(matches!(
            segmental_snr(&buf(vec![0.0; 320]), &buf(vec![0.1; 320])),
            Err(MetricsError::Undefined(_))
        ));
        let other = SampleBuffer::new(vec![0.1; 10], 16000).unwrap();
        assert!(matches!(
            segmental_snr(&buf(vec![0.1; 10]), &other),
            Err(MetricsError::RateMismatch { .. })
        ));
    }

    #[test]
    fn lsd_reference_cases() {
        let r = noise(640, 2, 0.3);
        assert_eq!(
            log_spectral_distortion(&buf(r.clone()), &buf(r.clone())).unwrap(),
            0.0
        );
        let loud: Vec<f64> = r.iter().map(|x| 10.0 * x).collect();
        let v = log_spectral_distortion(&buf(r), &buf(loud)).unwrap();
        assert!((v - 20.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn lsd_matches_direct_summation() {
        for seed in 0..5 {
            let r = noise(500, seed, 1.0);
            let t = noise(450, seed + 100, 1.0);
            let fast = log_spectral_distortion(&buf(r.clone()), &buf(t.clone())).unwrap();
            let slow = lsd_oracle(&r, &t);
            assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
        }
    }

    #[test]
    fn metrics_degrade_with_noise() {
        let r: Vec<f64> = (0..1600)
            .map(|n| 0.5 * (2.0 * PI * 440.0 * n as f64 / 8000.0).sin())
            .collect();
        let mut snr_ok = 0;
        let mut lsd_ok = 0;
        for seed in 0..20 {
            let n = noise(r.len(), seed, 1.0);
            let at = |g: f64| buf(r.iter().zip(&n).map(|(x, e)| x + g * e).collect());
            let (low, high) = (at(0.01), at(0.1));
            let reference = buf(r.clone());
            if segmental_snr(&reference, &low).unwrap() > segmental_snr(&reference, &high).unwrap()
            {
                snr_ok += 1;
            }
            if log_spectral_distortion(&reference, &low).unwrap()
                < log_spectral_distortion(&reference, &high).unwrap()
            {
                lsd_ok += 1;
            }
        }
        assert_eq!((snr_ok, lsd_ok), (20, 20));
    }

    #[test]
    fn stage_dump_structure() {
        let s: Vec<f64> = (0..800)
            .map(|n| {
                let t = n as f64 / 8000.0;
                [400.0, 750.0, 1500.0, 3000.0]
                    .iter()
                    .map(|f| 0.2 * (2.0 * PI * f * t).sin())
                    .sum()
            })
            .collect();
        let cfg = SynthesisConfig::default();
        let stages = dump_stages(&buf(s.clone()), 2, WindowKind::Hamming, &cfg).unwrap();
        let nz: Vec<usize> = (0..80).filter(|&k| stages.masked[k] != 0.0).collect();
        assert_eq!(nz, vec![8, 15, 30, 60]);
        for &k in &nz {
            assert_eq!(stages.masked[k], stages.filled[k]);
            assert_eq!(stages.masked[k], stages.original[k]);
        }
        assert!((0..6).all(|k| stages.filled[k] == 0.0));
        for (_, row) in stages.rows() {
            assert!(row.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        let csv = stages.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("stage,bin0,"));
        assert!(lines[2].starts_with("masked,"));
        assert_eq!(lines[3].split(',').count(), 81);
        assert!(matches!(
            dump_stages(&buf(s), 5, WindowKind::Hamming, &cfg),
            Err(MetricsError::FrameRange { index: 5, count: 5 })
        ));
    }
}
