//! Log-mel spectrogram extraction, normalization and fixed-length segmentation.

use std::sync::Arc;

use ndarray::{s, Array2, Axis};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the short-time mel analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub sample_rate_hz: u32,
    pub window_ms: f64,
    pub overlap_ratio: f64,
    pub n_mels: usize,
    pub log_floor_db: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 16_000,
            window_ms: 50.0,
            overlap_ratio: 0.5,
            n_mels: 128,
            log_floor_db: -80.0,
        }
    }
}

impl FeatureConfig {
    pub fn window_samples(&self) -> usize {
        (self.sample_rate_hz as f64 * self.window_ms / 1000.0).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.window_samples() as f64 * (1.0 - self.overlap_ratio)).round() as usize
    }

    /// FFT length: the window zero-padded to the next power of two.
    pub fn fft_len(&self) -> usize {
        self.window_samples().next_power_of_two()
    }

    /// Number of frames produced for `n_samples` of input.
    pub fn frame_count(&self, n_samples: usize) -> Option<usize> {
        let win = self.window_samples();
        (n_samples >= win).then(|| (n_samples - win) / self.hop_samples() + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFeatureConfig(m));
        if self.sample_rate_hz == 0 {
            return bad("sample_rate_hz must be positive".into());
        }
        if !(self.window_ms > 0.0) {
            return bad(format!("window_ms must be positive, got {}", self.window_ms));
        }
        if !(0.0..1.0).contains(&self.overlap_ratio) {
            return bad(format!("overlap_ratio must lie in [0, 1), got {}", self.overlap_ratio));
        }
        if self.n_mels == 0 {
            return bad("n_mels must be at least 1".into());
        }
        if !self.log_floor_db.is_finite() {
            return bad("log_floor_db must be finite".into());
        }
        if self.window_samples() < 2 {
            return bad(format!("window of {} samples is shorter than 2", self.window_samples()));
        }
        if self.hop_samples() < 1 {
            return bad("hop rounds to zero samples".into());
        }
        Ok(())
    }
}

/// Frames × mel-bands array of log energies (or their [0, 1] normalization).
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    values: Array2<f32>,
    config: FeatureConfig,
    normalized: bool,
}

impl MelSpectrogram {
    pub fn new(values: Array2<f32>, config: FeatureConfig, normalized: bool) -> Result<Self> {
        if values.ncols() != config.n_mels {
            return Err(Error::Shape {
                expected: format!("{} mel bands", config.n_mels),
                actual: format!("{} bands", values.ncols()),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if normalized && values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::NotNormalized);
        }
        Ok(Self {
            values,
            config,
            normalized,
        })
    }

    pub fn values(&self) -> &Array2<f32> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f32> {
        self.values
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn bands(&self) -> usize {
        self.values.ncols()
    }
}

/// Triangular filters on the HTK mel scale spanning 0 Hz to Nyquist.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// n_mels × (fft_len / 2 + 1)
    weights: Array2<f32>,
    centers_hz: Vec<f64>,
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

impl MelFilterbank {
    pub fn new(n_mels: usize, fft_len: usize, sample_rate_hz: u32) -> Self {
        let n_bins = fft_len / 2 + 1;
        let nyquist = sample_rate_hz as f64 / 2.0;
        let mel_max = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate_hz as f64 / fft_len as f64;

        let mut weights = Array2::<f32>::zeros((n_mels, n_bins));
        for m in 0..n_mels {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f <= center {
                    (f - lo) / (center - lo)
                } else if f > center && f < hi {
                    (hi - f) / (hi - center)
                } else {
                    0.0
                };
                weights[[m, k]] = w as f32;
            }
        }
        Self {
            weights,
            centers_hz: edges[1..=n_mels].to_vec(),
        }
    }

    pub fn weights(&self) -> &Array2<f32> {
        &self.weights
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }
}

fn hann(len: usize) -> Vec<f32> {
    (0..len)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / len as f64;
            (x.sin() * x.sin()) as f32
        })
        .collect()
}

/// Reusable extractor holding the FFT plan, window and filterbank.
pub struct MelExtractor {
    config: FeatureConfig,
    fft: Arc<dyn rustfft::Fft<f32>>,
    window: Vec<f32>,
    filterbank: MelFilterbank,
}

impl MelExtractor {
    pub fn new(config: FeatureConfig) -> Result<Self> {
        config.validate()?;
        let fft_len = config.fft_len();
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        let window = hann(config.window_samples());
        let filterbank = MelFilterbank::new(config.n_mels, fft_len, config.sample_rate_hz);
        Ok(Self {
            config,
            fft,
            window,
            filterbank,
        })
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Waveform (already at `config.sample_rate_hz`) to unnormalized log-mel energies in dB.
    pub fn compute(&self, waveform: &[f32]) -> Result<MelSpectrogram> {
        if let Some(index) = waveform.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let win = self.config.window_samples();
        let hop = self.config.hop_samples();
        let frames = self
            .config
            .frame_count(waveform.len())
            .ok_or(Error::UtteranceTooShort {
                samples: waveform.len(),
                window: win,
            })?;

        let fft_len = self.config.fft_len();
        let n_bins = fft_len / 2 + 1;
        let floor = self.config.log_floor_db;
        let mut buf = vec![Complex::new(0.0f32, 0.0); fft_len];
        let mut power = vec![0.0f32; n_bins];
        let mut out = Array2::<f32>::zeros((frames, self.config.n_mels));

        for t in 0..frames {
            let start = t * hop;
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (i, (s, w)) in waveform[start..start + win].iter().zip(&self.window).enumerate() {
                buf[i].re = s * w;
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            for (m, row) in self.filterbank.weights.axis_iter(Axis(0)).enumerate() {
                let e: f64 = row
                    .iter()
                    .zip(&power)
                    .map(|(&w, &p)| w as f64 * p as f64)
                    .sum();
                let db = if e > 0.0 { 10.0 * e.log10() } else { floor };
                out[[t, m]] = db.max(floor) as f32;
            }
        }
        MelSpectrogram::new(out, self.config.clone(), false)
    }
}

pub fn compute_mel_spectrogram(waveform: &[f32], config: &FeatureConfig) -> Result<MelSpectrogram> {
    MelExtractor::new(config.clone())?.compute(waveform)
}

/// Affine min-max map into [0, 1] using the utterance's own extrema or supplied `(min, max)`.
///
/// A constant spectrogram maps to all zeros. Values outside supplied stats are clamped.
pub fn normalize_mel(mel: &MelSpectrogram, stats: Option<(f32, f32)>) -> MelSpectrogram {
    let (lo, hi) = stats.unwrap_or_else(|| {
        mel.values.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    });
    let span = hi - lo;
    let values = if span > 0.0 && span.is_finite() {
        mel.values.mapv(|v| ((v - lo) / span).clamp(0.0, 1.0))
    } else {
        Array2::zeros(mel.values.raw_dim())
    };
    MelSpectrogram {
        values,
        config: mel.config.clone(),
        normalized: true,
    }
}

/// Cuts `frame_len`-frame windows every `hop_frames`; inputs shorter than one
/// window are loop-padded (repeated from the start) into a single segment.
pub fn segment_mel(mel: &MelSpectrogram, frame_len: usize, hop_frames: usize) -> Result<Vec<MelSpectrogram>> {
    if frame_len == 0 || hop_frames == 0 {
        return Err(Error::Config("frame_len and hop_frames must be at least 1".into()));
    }
    let t = mel.frames();
    if t == 0 {
        return Err(Error::EmptySpectrogram);
    }
    let wrap = |values: Array2<f32>| MelSpectrogram {
        values,
        config: mel.config.clone(),
        normalized: mel.normalized,
    };
    if t < frame_len {
        return Ok(vec![wrap(loop_pad(&mel.values, frame_len))]);
    }
    let count = (t - frame_len) / hop_frames + 1;
    Ok((0..count)
        .map(|i| {
            let start = i * hop_frames;
            wrap(mel.values.slice(s![start..start + frame_len, ..]).to_owned())
        })
        .collect())
}

/// Repeats rows from the start until `frames` rows exist.
pub fn loop_pad(values: &Array2<f32>, frames: usize) -> Array2<f32> {
    let t = values.nrows();
    let mut out = Array2::zeros((frames, values.ncols()));
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        row.assign(&values.row(i % t));
    }
    out
}

/// A `frames`-long window starting at `offset`, loop-padding when the input is shorter.
pub fn crop_or_pad(values: &Array2<f32>, offset: usize, frames: usize) -> Array2<f32> {
    if values.nrows() <= frames {
        loop_pad(values, frames)
    } else {
        values.slice(s![offset..offset + frames, ..]).to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FeatureConfig {
        FeatureConfig::default()
    }

    #[test]
    fn default_window_and_hop() {
        assert_eq!(cfg().window_samples(), 800);
        assert_eq!(cfg().hop_samples(), 400);
        assert_eq!(cfg().fft_len(), 1024);
    }

    #[test]
    fn four_seconds_gives_159_frames() {
        let wave = vec![0.1f32; 64_000];
        let mel = compute_mel_spectrogram(&wave, &cfg()).unwrap();
        assert_eq!(mel.frames(), 159);
        assert_eq!(mel.bands(), 128);
        assert!(!mel.is_normalized());
    }

    #[test]
    fn silence_hits_the_floor() {
        let mel = compute_mel_spectrogram(&vec![0.0; 4000], &cfg()).unwrap();
        assert!(mel.values().iter().all(|&v| v == -80.0));
    }

    #[test]
    fn too_short_and_non_finite_rejected() {
        assert!(matches!(
            compute_mel_spectrogram(&vec![0.0; 799], &cfg()),
            Err(Error::UtteranceTooShort { .. })
        ));
        let mut w = vec![0.0; 1600];
        w[7] = f32::NAN;
        assert!(matches!(compute_mel_spectrogram(&w, &cfg()), Err(Error::NonFinite { index: 7 })));
    }

    #[test]
    fn every_filter_has_support() {
        let fb = MelFilterbank::new(128, 1024, 16_000);
        for row in fb.weights().axis_iter(Axis(0)) {
            assert!(row.iter().any(|&w| w > 0.0));
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg();
        c.overlap_ratio = 1.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.n_mels = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.window_ms = 0.05;
        assert!(c.validate().is_err());
    }

    fn ramp(frames: usize, lo: f32, hi: f32) -> MelSpectrogram {
        let n = frames * 128;
        let v = Array2::from_shape_fn((frames, 128), |(t, m)| {
            lo + (hi - lo) * (t * 128 + m) as f32 / (n - 1) as f32
        });
        MelSpectrogram::new(v, cfg(), false).unwrap()
    }

    #[test]
    fn normalize_endpoints() {
        let n = normalize_mel(&ramp(10, -80.0, 0.0), None);
        assert!(n.is_normalized());
        assert_eq!(n.values()[[0, 0]], 0.0);
        assert_eq!(n.values()[[9, 127]], 1.0);
    }

    #[test]
    fn constant_normalizes_to_zero() {
        let m = MelSpectrogram::new(Array2::from_elem((4, 128), -3.0), cfg(), false).unwrap();
        assert!(normalize_mel(&m, None).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_stats_are_identity() {
        let m = ramp(6, 0.0, 1.0);
        assert_eq!(normalize_mel(&m, Some((0.0, 1.0))).values(), m.values());
    }

    #[test]
    fn segment_counts() {
        let m = ramp(512, 0.0, 1.0);
        assert_eq!(segment_mel(&m, 128, 128).unwrap().len(), 4);
        assert_eq!(segment_mel(&ramp(300, 0.0, 1.0), 128, 64).unwrap().len(), 3);
    }

    #[test]
    fn short_input_loop_pads() {
        let m = ramp(100, 0.0, 1.0);
        let segs = segment_mel(&m, 128, 64).unwrap();
        assert_eq!(segs.len(), 1);
        let seg = segs[0].values();
        assert_eq!(seg.nrows(), 128);
        for t in 100..128 {
            assert_eq!(seg.row(t), m.values().row(t - 100));
        }
    }

    #[test]
    fn segment_rejects_empty() {
        let m = MelSpectrogram::new(Array2::zeros((0, 128)), cfg(), false).unwrap();
        assert!(matches!(segment_mel(&m, 128, 64), Err(Error::EmptySpectrogram)));
    }
}
