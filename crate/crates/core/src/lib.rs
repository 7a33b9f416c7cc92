//! Octave full-masking voice codec.
//!
//! Each 20 ms frame of 8 kHz speech is reduced to the strongest DFT line in
//! each of four octave bands (256 Hz to 4 kHz). The four lines are coded in
//! 50 bits, for a fixed 2.5 kbps stream stored in the `.voz` container. The
//! decoder rebuilds each band either from the bare line or by filling the
//! band with a beta-shaped envelope peaked at the line.
//!
//! ```
//! use voz::{codec, dsp::SampleBuffer, octave::standard_plan, synthesis::SynthesisConfig};
//!
//! let tone: Vec<f64> = (0..8000)
//!     .map(|n| 0.5 * (2.0 * std::f64::consts::PI * 400.0 * n as f64 / 8000.0).sin())
//!     .collect();
//! let signal = SampleBuffer::new(tone, 8000).unwrap();
//! let plan = standard_plan();
//!
//! let bytes = codec::encode(&signal, &plan, &Default::default()).unwrap();
//! // 50 frames of 50 bits, rounded up to whole bytes
//! assert_eq!(bytes.len(), 18 + 313);
//!
//! let audio = codec::decode(&bytes, &plan, &SynthesisConfig::default()).unwrap();
//! assert_eq!(audio.len(), 8000);
//! ```

pub mod cli;
pub mod codec;
pub mod dsp;
pub mod format;
pub mod metrics;
pub mod octave;
pub mod synthesis;
pub mod wav;

pub use codec::{AnalysisConfig, CodecError};
pub use dsp::{Frame, FrameSpectrum, SampleBuffer, WindowKind};
pub use format::{QuantizedFrame, VozHeader, VozStream};
pub use octave::{MaskedFrame, OctaveBand, OctavePlan, Survivor};
pub use synthesis::{BetaEnvelope, SynthesisConfig, Technique};
