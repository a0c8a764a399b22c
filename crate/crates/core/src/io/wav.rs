use std::io::{Cursor, Read, Seek};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::{AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

const PCM_SCALE: f64 = 32768.0;

fn wav_err(field: &'static str, message: impl Into<String>) -> Error {
    Error::Wav {
        field,
        message: message.into(),
    }
}

fn hound_err(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(e) => wav_err("data", e.to_string()),
        hound::Error::FormatError(m) => wav_err("header", m),
        hound::Error::Unsupported => wav_err("format", "unsupported encoding"),
        other => wav_err("header", other.to_string()),
    }
}

/// Walks the RIFF chunk list: declared sizes must tile the file exactly and
/// hold one `fmt ` and one `data` chunk.
fn check_riff(bytes: &[u8]) -> Result<()> {
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(wav_err("header", "not a RIFF/WAVE file"));
    }
    if u32_at(4) != bytes.len() - 8 {
        return Err(wav_err(
            "header",
            format!("RIFF size {} disagrees with file length {}", u32_at(4), bytes.len()),
        ));
    }
    let (mut pos, mut fmt, mut data) = (12, 0, 0);
    while pos < bytes.len() {
        if bytes.len() - pos < 8 {
            return Err(wav_err("header", format!("truncated chunk header at offset {pos}")));
        }
        let id = &bytes[pos..pos + 4];
        let size = u32_at(pos + 4);
        let end = (pos + 8).saturating_add(size).saturating_add(size & 1);
        if end > bytes.len() {
            return Err(wav_err(
                "header",
                format!("chunk {:?} of {size} bytes overruns the file", String::from_utf8_lossy(id)),
            ));
        }
        match id {
            b"fmt " => fmt += 1,
            b"data" => data += 1,
            _ => {}
        }
        pos = end;
    }
    if fmt != 1 || data != 1 {
        return Err(wav_err("header", format!("expected one fmt and one data chunk, found {fmt} and {data}")));
    }
    Ok(())
}

fn read_from<R: Read + Seek>(reader: R) -> Result<AudioSignal> {
    let reader = WavReader::new(reader).map_err(hound_err)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int {
        return Err(wav_err("sample_format", "expected integer PCM, found float"));
    }
    if spec.bits_per_sample != 16 {
        return Err(wav_err(
            "bits_per_sample",
            format!("expected 16, found {}", spec.bits_per_sample),
        ));
    }
    if spec.channels != 1 {
        return Err(wav_err("channels", format!("expected mono, found {}", spec.channels)));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(wav_err(
            "sample_rate",
            format!("expected {SAMPLE_RATE} Hz, found {} Hz", spec.sample_rate),
        ));
    }
    if reader.len() == 0 {
        return Err(wav_err("data", "no samples in data chunk"));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / PCM_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(hound_err)?;
    AudioSignal::new(samples, SAMPLE_RATE)
}

/// Reads a 16-bit mono 16 kHz PCM file, scaling samples by 1/32768.
pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_wav_bytes(&bytes).map_err(|e| match e {
        Error::Wav { field, message } => wav_err(field, format!("{}: {message}", path.display())),
        other => other,
    })
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<AudioSignal> {
    check_riff(bytes)?;
    read_from(Cursor::new(bytes))
}

fn quantize(x: f64) -> i16 {
    (x * PCM_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

fn spec() -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

pub fn wav_bytes(signal: &AudioSignal) -> Result<Vec<u8>> {
    signal.check_pipeline_rate()?;
    let mut buf = Cursor::new(Vec::new());
    {
        let mut w = WavWriter::new(&mut buf, spec()).map_err(hound_err)?;
        let mut w16 = w.get_i16_writer(signal.len() as u32);
        for &s in &signal.samples {
            w16.write_sample(quantize(s));
        }
        w16.flush().map_err(hound_err)?;
        w.finalize().map_err(hound_err)?;
    }
    Ok(buf.into_inner())
}

/// Writes 16-bit mono PCM; samples are clamped to the representable range.
pub fn write_wav(signal: &AudioSignal, path: &Path) -> Result<()> {
    let bytes = wav_bytes(signal)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
