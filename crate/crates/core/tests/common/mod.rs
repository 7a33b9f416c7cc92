#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use voz::dsp::SampleBuffer;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn tone(freq_hz: f64, amp: f64, secs: f64, rate: u32) -> SampleBuffer {
    let len = (secs * rate as f64).round() as usize;
    let samples = (0..len)
        .map(|n| amp * (2.0 * PI * freq_hz * n as f64 / rate as f64).sin())
        .collect();
    SampleBuffer::new(samples, rate).unwrap()
}

/// Harmonics of 200 Hz with falling amplitudes plus a little white noise.
pub fn speech_like(secs: f64, seed: u64) -> SampleBuffer {
    let mut r = rng(seed);
    let len = (secs * 8000.0) as usize;
    let samples = (0..len)
        .map(|n| {
            let t = n as f64 / 8000.0;
            let voiced: f64 = (1..=19)
                .map(|h| 0.3 / h as f64 * (2.0 * PI * 200.0 * h as f64 * t + 0.7 * h as f64).sin())
                .sum();
            voiced + r.random_range(-0.02..0.02)
        })
        .collect();
    SampleBuffer::new(samples, 8000).unwrap()
}

pub fn random_signal(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.random_range(-1.0..1.0)).collect()
}

/// O(N^2) forward DFT.
pub fn direct_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    Complex64::from_polar(v, -2.0 * PI * ((k * t) % n) as f64 / n as f64)
                })
                .sum()
        })
        .collect()
}

/// O(N^2) inverse DFT with 1/N scaling.
pub fn direct_idft(bins: &[Complex64]) -> Vec<Complex64> {
    let n = bins.len();
    (0..n)
        .map(|t| {
            bins.iter()
                .enumerate()
                .map(|(k, &b)| {
                    b * Complex64::from_polar(1.0, 2.0 * PI * ((k * t) % n) as f64 / n as f64)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

pub fn pcm16_wav(rate: u32, samples: &[i16]) -> Vec<u8> {
    let data_len = samples.len() * 2;
    let mut out = b"RIFF".to_vec();
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn signal_wav(signal: &SampleBuffer) -> Vec<u8> {
    voz::wav::write_wav(signal).bytes
}
