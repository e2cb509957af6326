//! PCM WAV decoding to mono float samples at the analysis rate.

use std::path::Path;

use hound::{SampleFormat, WavReader};
use rubato::audioadapter_buffers::direct::SequentialSliceOfVecs;
use rubato::{Fft, FixedSync, Resampler};

use crate::error::{Error, Result};

/// Reads 16-bit (or other integer width) or float WAV, averages channels to mono
/// and resamples to `target_rate_hz` when the file rate differs.
pub fn load_wav_mono(path: &Path, target_rate_hz: u32) -> Result<Vec<f32>> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;

    let interleaved: Vec<f32> = match spec.sample_format {
        SampleFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>()?,
        SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()?
        }
    };
    let mono: Vec<f32> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();

    resample(&mono, spec.sample_rate, target_rate_hz)
}

pub fn resample(samples: &[f32], from_hz: u32, to_hz: u32) -> Result<Vec<f32>> {
    if from_hz == to_hz || samples.is_empty() {
        return Ok(samples.to_vec());
    }
    let resample_err = |e: &dyn std::fmt::Display| Error::Config(format!("resampling {from_hz} Hz -> {to_hz} Hz: {e}"));
    let mut resampler = Fft::<f32>::new(from_hz as usize, to_hz as usize, 1024, 1, FixedSync::Input)
        .map_err(|e| resample_err(&e))?;
    let channels = vec![samples.to_vec()];
    let input = SequentialSliceOfVecs::new(&channels, 1, samples.len()).map_err(|e| resample_err(&e))?;
    let out = resampler
        .process_all(&input, samples.len(), None)
        .map_err(|e| resample_err(&e))?;
    Ok(out.take_data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hound::{WavSpec, WavWriter};

    fn write_wav(path: &Path, rate: u32, channels: u16, frames: usize) {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for i in 0..frames {
            let v = ((i as f32 * 0.05).sin() * 16_000.0) as i16;
            for _ in 0..channels {
                w.write_sample(v).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn stereo_16k_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_wav(&p, 16_000, 2, 1600);
        let s = load_wav_mono(&p, 16_000).unwrap();
        assert_eq!(s.len(), 1600);
        assert!((s[10] - (0.5f32).sin() * 16_000.0 / 32_768.0).abs() < 1e-3);
    }

    #[test]
    fn resampled_length_tracks_ratio() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.wav");
        write_wav(&p, 48_000, 1, 48_000);
        let s = load_wav_mono(&p, 16_000).unwrap();
        assert!((s.len() as i64 - 16_000).abs() <= 2, "len {}", s.len());
    }
}
