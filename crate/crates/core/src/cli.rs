//! `voz` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 format or parse error, 3 I/O error.
//! Every failure prints exactly one line starting with `error:` on stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec::{self, AnalysisConfig, CodecError};
use crate::dsp::{SampleBuffer, WindowKind, DEFAULT_PRE_EMPHASIS};
use crate::format::{self, VozStream};
use crate::metrics::{self, MetricsError, QualityReport};
use crate::octave::{standard_plan, BAND_COUNT};
use crate::synthesis::{SynthesisConfig, Technique, DEFAULT_MIX_WEIGHT};
use crate::wav::{self, WavError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Format(_) => EXIT_FORMAT,
            Self::Io { .. } => EXIT_IO,
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        Self::Format(e.to_string())
    }
}

impl From<WavError> for CliError {
    fn from(e: WavError) -> Self {
        Self::Format(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self::Format(e.to_string())
    }
}

impl From<format::VozError> for CliError {
    fn from(e: format::VozError) -> Self {
        Self::Format(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "voz",
    version,
    about = "2.5 kbps octave full-masking voice codec"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Hamming,
    #[value(alias = "rectangular")]
    Rect,
}

impl From<WindowArg> for WindowKind {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Hamming => WindowKind::Hamming,
            WindowArg::Rect => WindowKind::Rectangular,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EmphasisArgs {
    /// Pre-emphasis coefficient a in y[n] = x[n] - a x[n-1]
    #[arg(long = "pre-emphasis", default_value_t = DEFAULT_PRE_EMPHASIS)]
    pub pre_emphasis_a: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// Analysis window
    #[arg(long, value_enum, default_value_t = WindowArg::Hamming)]
    pub window: WindowArg,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesisArgs {
    /// 1 = survivors only, 2 = beta fill, 3 = blend of 1 and 2, 4 = beta fill + Hamming
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub technique: u8,
    /// Per-band beta alphas (four values > 1, comma separated)
    #[arg(long, value_delimiter = ',', default_value = "2,2,2,2")]
    pub alphas: Vec<f64>,
    /// Weight of the unfilled spectrum for technique 3
    #[arg(long = "mix-weight", default_value_t = DEFAULT_MIX_WEIGHT)]
    pub mix_weight: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode an 8 kHz (or 16 kHz, decimated) PCM16 WAV into a .voz stream
    Encode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        emphasis: EmphasisArgs,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Synthesise a .voz stream back to an 8 kHz PCM16 WAV
    Decode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        emphasis: EmphasisArgs,
        #[command(flatten)]
        synthesis: SynthesisArgs,
    },
    /// Print the header and position statistics of a .voz stream
    Info { input: PathBuf },
    /// Segmental SNR (per-frame clamp -10..35 dB) and log-spectral distortion
    /// (magnitude floor 1e-10) of TEST against REFERENCE
    Metrics { reference: PathBuf, test: PathBuf },
    /// Dump original, masked and filled magnitudes of one frame as CSV
    Spectrum {
        input: PathBuf,
        /// 0-based frame index
        #[arg(long)]
        frame: usize,
        #[command(flatten)]
        emphasis: EmphasisArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        synthesis: SynthesisArgs,
    },
    /// Encode, decode and compare in one step
    Roundtrip {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        emphasis: EmphasisArgs,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        synthesis: SynthesisArgs,
    },
}

fn analysis_config(
    emphasis: &EmphasisArgs,
    window: &WindowArgs,
) -> Result<AnalysisConfig, CliError> {
    if !(0.0..1.0).contains(&emphasis.pre_emphasis_a) {
        return Err(CliError::Usage(format!(
            "--pre-emphasis must lie in [0, 1), got {}",
            emphasis.pre_emphasis_a
        )));
    }
    Ok(AnalysisConfig {
        pre_emphasis_a: emphasis.pre_emphasis_a,
        window: window.window.into(),
    })
}

fn synthesis_config(
    emphasis: &EmphasisArgs,
    args: &SynthesisArgs,
) -> Result<SynthesisConfig, CliError> {
    let alphas: [f64; BAND_COUNT] = args.alphas.as_slice().try_into().map_err(|_| {
        CliError::Usage(format!(
            "--alphas needs {BAND_COUNT} values, got {}",
            args.alphas.len()
        ))
    })?;
    let config = SynthesisConfig {
        technique: Technique::try_from(args.technique)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        alphas,
        mix_weight: args.mix_weight,
        pre_emphasis_a: emphasis.pre_emphasis_a,
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_signal(path: &Path) -> Result<SampleBuffer, CliError> {
    let (_, signal) = wav::read_wav(&read_file(path)?)?;
    Ok(signal)
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

/// Reads a WAV and brings it to 8 kHz, noting any decimation on `out`.
fn load_codec_input(path: &Path, out: &mut dyn Write) -> Result<SampleBuffer, CliError> {
    let signal = read_signal(path)?;
    let converted = codec::to_codec_rate(&signal)?;
    if converted.sample_rate_hz() != signal.sample_rate_hz() {
        writeln!(
            out,
            "decimated {} Hz -> {} Hz",
            signal.sample_rate_hz(),
            converted.sample_rate_hz()
        )
        .map_err(stdout_err)?;
    }
    Ok(converted)
}

fn print_report(out: &mut dyn Write, report: &QualityReport) -> io::Result<()> {
    writeln!(out, "segmental_snr_db: {:.3}", report.segmental_snr_db)?;
    writeln!(
        out,
        "log_spectral_distortion_db: {:.3}",
        report.log_spectral_distortion_db
    )?;
    writeln!(out, "frames_compared: {}", report.frames_compared)?;
    writeln!(out, "clipped_samples: {}", report.clipped_samples)
}

fn warn_diagnostics(stream: &VozStream, err: &mut dyn Write) {
    for d in &stream.diagnostics {
        let _ = writeln!(err, "warning: {d}");
    }
}

fn cmd_encode(
    input: &Path,
    output: &Path,
    config: &AnalysisConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let signal = load_codec_input(input, out)?;
    let bytes = codec::encode(&signal, &standard_plan(), config)?;
    write_file(output, &bytes)?;
    let header = format::VozHeader::parse(&bytes)?;
    writeln!(
        out,
        "{} frames, {} payload bytes, {} bps, global scale {}",
        header.frame_count,
        bytes.len() - format::HEADER_LEN,
        format::bit_rate_bps(),
        header.global_scale
    )
    .map_err(stdout_err)
}

fn cmd_decode(
    input: &Path,
    output: &Path,
    config: &SynthesisConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let stream = format::read_voz(&read_file(input)?)?;
    warn_diagnostics(&stream, err);
    let signal = codec::synthesize_stream(&stream, &standard_plan(), config)?;
    let wav = wav::write_wav(&signal);
    write_file(output, &wav.bytes)?;
    writeln!(
        out,
        "{} samples, {:.3} s, technique {}, {} clipped",
        signal.len(),
        signal.duration_secs(),
        config.technique,
        wav.clipped
    )
    .map_err(stdout_err)
}

fn cmd_info(input: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let stream = format::read_voz(&read_file(input)?)?;
    warn_diagnostics(&stream, err);
    let h = &stream.header;
    let plan = standard_plan();
    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(text, "magic: {}", String::from_utf8_lossy(&h.magic));
    let _ = writeln!(text, "version: {}", h.version);
    let _ = writeln!(text, "sample rate: {} Hz", h.sample_rate_hz);
    let _ = writeln!(text, "frames: {}", h.frame_count);
    let _ = writeln!(text, "global scale: {}", h.global_scale);
    let _ = writeln!(
        text,
        "flags: {:#04x} ({} window)",
        h.flags,
        if h.hamming_window() {
            "hamming"
        } else {
            "rectangular"
        }
    );
    let _ = writeln!(text, "duration {:.3} s", h.duration_secs());
    let _ = writeln!(text, "bit rate {} bps", format::bit_rate_bps());
    let _ = writeln!(
        text,
        "payload bytes: {}",
        format::payload_len(stream.frames.len())
    );
    for (i, band) in plan.bands.iter().enumerate() {
        let mut hist = vec![0usize; 1 << band.offset_bits];
        for q in &stream.frames {
            hist[q.bands[i].offset as usize] += 1;
        }
        let cells: Vec<String> = hist
            .iter()
            .enumerate()
            .filter(|&(code, &n)| code < band.line_count() || n > 0)
            .map(|(code, n)| format!("{}:{n}", band.first_bin + code))
            .collect();
        let _ = writeln!(
            text,
            "band {} ({}-{} Hz) bin histogram: {}",
            band.index,
            band.low_hz,
            band.high_hz,
            cells.join(" ")
        );
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn cmd_metrics(reference: &Path, test: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let r = read_signal(reference)?;
    let t = read_signal(test)?;
    let report = metrics::quality_report(&r, &t, 0)?;
    print_report(out, &report).map_err(stdout_err)
}

fn cmd_spectrum(
    input: &Path,
    frame: usize,
    analysis: &AnalysisConfig,
    synthesis: &SynthesisConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let signal = codec::to_codec_rate(&read_signal(input)?)?;
    let config = SynthesisConfig {
        pre_emphasis_a: analysis.pre_emphasis_a,
        ..synthesis.clone()
    };
    let stages = metrics::dump_stages(&signal, frame, analysis.window, &config)?;
    out.write_all(stages.to_csv().as_bytes())
        .map_err(stdout_err)
}

fn cmd_roundtrip(
    input: &Path,
    output: &Path,
    analysis: &AnalysisConfig,
    synthesis: &SynthesisConfig,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let signal = load_codec_input(input, out)?;
    let plan = standard_plan();
    let bytes = codec::encode(&signal, &plan, analysis)?;
    let decoded = codec::decode(&bytes, &plan, synthesis)?;
    let wav_out = wav::write_wav(&decoded);
    write_file(output, &wav_out.bytes)?;
    let (_, written) = wav::read_wav(&wav_out.bytes)?;
    writeln!(
        out,
        "{} frames, {} payload bytes, {} bps",
        (bytes.len() - format::HEADER_LEN) * 8 / format::FRAME_BITS,
        bytes.len() - format::HEADER_LEN,
        format::bit_rate_bps()
    )
    .map_err(stdout_err)?;
    match metrics::quality_report(&signal, &written, wav_out.clipped) {
        Ok(report) => print_report(out, &report).map_err(stdout_err),
        Err(MetricsError::Undefined(why)) => {
            let lsd = metrics::log_spectral_distortion(&signal, &written).ok();
            let mut lines = format!("segmental_snr_db: undefined ({why})\n");
            match lsd {
                Some(v) => lines += &format!("log_spectral_distortion_db: {v:.3}\n"),
                None => lines += "log_spectral_distortion_db: undefined\n",
            }
            lines += &format!(
                "frames_compared: {}\nclipped_samples: {}\n",
                signal.len().div_ceil(crate::dsp::FRAME_LEN),
                wav_out.clipped
            );
            out.write_all(lines.as_bytes()).map_err(stdout_err)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Encode {
            input,
            output,
            emphasis,
            window,
        } => cmd_encode(input, output, &analysis_config(emphasis, window)?, out),
        Command::Decode {
            input,
            output,
            emphasis,
            synthesis,
        } => cmd_decode(
            input,
            output,
            &synthesis_config(emphasis, synthesis)?,
            out,
            err,
        ),
        Command::Info { input } => cmd_info(input, out, err),
        Command::Metrics { reference, test } => cmd_metrics(reference, test, out),
        Command::Spectrum {
            input,
            frame,
            emphasis,
            window,
            synthesis,
        } => cmd_spectrum(
            input,
            *frame,
            &analysis_config(emphasis, window)?,
            &synthesis_config(emphasis, synthesis)?,
            out,
        ),
        Command::Roundtrip {
            input,
            output,
            emphasis,
            window,
            synthesis,
        } => cmd_roundtrip(
            input,
            output,
            &analysis_config(emphasis, window)?,
            &synthesis_config(emphasis, synthesis)?,
            out,
        ),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            let rendered = e.render().to_string();
            let first = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("error: invalid usage");
            let line = first.strip_prefix("error: ").unwrap_or(first);
            let _ = writeln!(err, "error: {line}");
            return EXIT_USAGE;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error: {msg}");
            e.exit_code()
        }
    }
}
