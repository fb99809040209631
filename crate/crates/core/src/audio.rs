//! WAV container decoding/encoding and sample-rate conversion.
//!
//! Only the RIFF/WAVE subset the service accepts is handled: PCM 16-bit or
//! IEEE float (32/64-bit) samples, one or two channels, 8–48 kHz. Stereo is
//! folded to mono by averaging the channels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::DspError;

/// Rate every utterance is converted to before analysis.
pub const CANONICAL_RATE: u32 = 16_000;
pub const MIN_RATE: u32 = 8_000;
pub const MAX_RATE: u32 = 48_000;

/// Decoded mono PCM with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// Rate of the container the buffer was decoded from.
    pub original_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
            original_rate: sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, DspError> {
    if body.len() < 16 {
        return Err(DspError::Decode("fmt chunk shorter than 16 bytes".into()));
    }
    let mut format = u16_at(body, 0);
    let bits = u16_at(body, 14);
    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID.
        if body.len() < 26 {
            return Err(DspError::Decode("truncated WAVE_FORMAT_EXTENSIBLE".into()));
        }
        format = u16_at(body, 24);
    }
    Ok(FmtChunk {
        format,
        channels: u16_at(body, 2),
        sample_rate: u32_at(body, 4),
        block_align: u16_at(body, 12),
        bits,
    })
}

/// Decodes WAV bytes into a mono buffer at the container's own rate.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, DspError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(DspError::Decode("missing RIFF/WAVE signature".into()));
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = bytes.len() - body_start;
        if size > available {
            return Err(DspError::Decode(format!(
                "chunk {:?} declares {size} bytes but only {available} remain",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => {
                data = Some(body);
                break;
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_start + size + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| DspError::Decode("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| DspError::Decode("no data chunk".into()))?;

    let sample_kind = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 16) => SampleKind::Pcm16,
        (FORMAT_FLOAT, 32) => SampleKind::Float32,
        (FORMAT_FLOAT, 64) => SampleKind::Float64,
        (f, b) => {
            return Err(DspError::UnsupportedFormat(format!(
                "format tag {f} with {b} bits per sample"
            )))
        }
    };
    if !(1..=2).contains(&fmt.channels) {
        return Err(DspError::UnsupportedFormat(format!(
            "{} channels",
            fmt.channels
        )));
    }
    if !(MIN_RATE..=MAX_RATE).contains(&fmt.sample_rate) {
        return Err(DspError::UnsupportedFormat(format!(
            "sample rate {} Hz",
            fmt.sample_rate
        )));
    }
    let channels = fmt.channels as usize;
    let bytes_per_sample = sample_kind.width();
    let block = bytes_per_sample * channels;
    if fmt.block_align as usize != block {
        return Err(DspError::Decode(format!(
            "block align {} does not match {channels} x {bytes_per_sample} bytes",
            fmt.block_align
        )));
    }
    if data.is_empty() {
        return Err(DspError::EmptyAudio);
    }
    if data.len() % block != 0 {
        return Err(DspError::Decode("data chunk ends mid-sample".into()));
    }

    let mut samples = Vec::with_capacity(data.len() / block);
    for frame in data.chunks_exact(block) {
        let mut acc = 0.0;
        for ch in frame.chunks_exact(bytes_per_sample) {
            let v = sample_kind.read(ch);
            if !v.is_finite() {
                return Err(DspError::Decode("non-finite float sample".into()));
            }
            acc += v.clamp(-1.0, 1.0);
        }
        samples.push(acc / channels as f64);
    }
    Ok(AudioBuffer::new(samples, fmt.sample_rate))
}

#[derive(Debug, Clone, Copy)]
enum SampleKind {
    Pcm16,
    Float32,
    Float64,
}

impl SampleKind {
    fn width(self) -> usize {
        match self {
            SampleKind::Pcm16 => 2,
            SampleKind::Float32 => 4,
            SampleKind::Float64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            SampleKind::Pcm16 => i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
            SampleKind::Float32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            SampleKind::Float64 => {
                f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]])
            }
        }
    }
}

fn riff_header(out: &mut Vec<u8>, format: u16, channels: u16, rate: u32, bits: u16, data_len: u32) {
    let block_align = channels * bits / 8;
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
}

/// Encodes interleaved samples as 16-bit PCM.
pub fn encode_wav_pcm16(samples: &[f64], sample_rate: u32, channels: u16) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    riff_header(&mut out, FORMAT_PCM, channels, sample_rate, 16, data_len);
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Encodes mono samples as 32-bit IEEE float.
pub fn encode_wav_f32(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 4) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    riff_header(&mut out, FORMAT_FLOAT, 1, sample_rate, 32, data_len);
    for &s in samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

/// Zero crossings of the sinc kernel kept on each side of the centre tap.
const SINC_HALF_ZEROS: f64 = 16.0;

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    0.42 + 0.5 * (PI * x).cos() + 0.08 * (2.0 * PI * x).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited conversion with a Blackman-windowed sinc kernel whose cutoff
/// sits at the lower of the two Nyquist frequencies.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer, DspError> {
    if !(MIN_RATE..=MAX_RATE).contains(&target_rate) {
        return Err(DspError::Config(format!(
            "target rate {target_rate} Hz outside {MIN_RATE}..={MAX_RATE}"
        )));
    }
    if target_rate == buf.sample_rate {
        return Ok(buf.clone());
    }
    let ratio = target_rate as f64 / buf.sample_rate as f64;
    let cutoff = ratio.min(1.0);
    let half_width = SINC_HALF_ZEROS / cutoff;
    let out_len = (buf.samples.len() as f64 * ratio).round() as usize;
    let n_in = buf.samples.len() as isize;

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let t = j as f64 / ratio;
        let lo = (t - half_width).ceil().max(0.0) as isize;
        let hi = ((t + half_width).floor() as isize).min(n_in - 1);
        let mut acc = 0.0;
        for k in lo..=hi {
            let d = t - k as f64;
            acc += buf.samples[k as usize] * cutoff * sinc(cutoff * d) * blackman(d / half_width);
        }
        out.push(acc.clamp(-1.0, 1.0));
    }
    Ok(AudioBuffer {
        samples: out,
        sample_rate: target_rate,
        original_rate: buf.original_rate,
    })
}

/// Decodes and converts to the canonical analysis rate.
pub fn decode_canonical(bytes: &[u8]) -> Result<AudioBuffer, DspError> {
    let buf = decode_wav(bytes)?;
    resample(&buf, CANONICAL_RATE)
}
