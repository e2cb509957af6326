//! Waveform to normalized, segmented log-mel spectrograms.

pub mod container;
mod mel;
mod wav;

pub use mel::{
    compute_mel_spectrogram, crop_or_pad, hz_to_mel, loop_pad, mel_to_hz, normalize_mel, segment_mel,
    FeatureConfig, MelExtractor, MelFilterbank, MelSpectrogram,
};
pub use wav::{load_wav_mono, resample};
