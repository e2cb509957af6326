use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

const PALETTE: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Disc,
    Cross,
}

/// Scatter plot: color by `class`, marker shape by `marker`.
pub fn render_scatter(points: &[[f64; 2]], class: &[usize], marker: &[Marker], size: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(size, size, Rgb([255, 255, 255]));
    if points.is_empty() {
        return img;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let margin = size as f64 * 0.05;
    let span = size as f64 - 2.0 * margin;
    let to_px = |v: f64, k: usize| {
        let w = (hi[k] - lo[k]).max(1e-12);
        margin + (v - lo[k]) / w * span
    };
    let mut put = |x: i64, y: i64, c: Rgb<u8>| {
        if x >= 0 && y >= 0 && (x as u32) < size && (y as u32) < size {
            img.put_pixel(x as u32, y as u32, c);
        }
    };
    for ((p, &c), &m) in points.iter().zip(class).zip(marker) {
        let color = Rgb(PALETTE[c % PALETTE.len()]);
        let (cx, cy) = (to_px(p[0], 0) as i64, (size as f64 - to_px(p[1], 1)) as i64);
        match m {
            Marker::Disc => {
                for dx in -3i64..=3 {
                    for dy in -3i64..=3 {
                        if dx * dx + dy * dy <= 9 {
                            put(cx + dx, cy + dy, color);
                        }
                    }
                }
            }
            Marker::Cross => {
                for d in -4i64..=4 {
                    put(cx + d, cy + d, color);
                    put(cx + d, cy - d, color);
                }
            }
        }
    }
    img
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| Error::io(path, std::io::Error::other(e)))
}
