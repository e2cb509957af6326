//! Binary array container for one spectrogram.
//!
//! Layout (28-byte header, then data):
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 4    | magic `EMEL`                                 |
//! | 4      | 2    | format version, little-endian u16 (= 1)      |
//! | 6      | 1    | dtype code (1 = f32)                         |
//! | 7      | 1    | byte order of shape and data (0 = LE, 1 = BE)|
//! | 8      | 1    | normalized flag (0/1)                        |
//! | 9      | 3    | reserved, zero                               |
//! | 12     | 8    | frames (u64)                                 |
//! | 20     | 8    | bands (u64)                                  |
//! | 28     | 4·T·B| values, row-major (frame-major)              |
//!
//! The [`FeatureConfig`] travels in a sidecar JSON file with the same stem.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::mel::{FeatureConfig, MelSpectrogram};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMEL";
pub const VERSION: u16 = 1;
const DTYPE_F32: u8 = 1;
const HEADER_LEN: usize = 28;

pub fn encode(mel: &MelSpectrogram) -> Vec<u8> {
    let (t, b) = mel.values().dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * t * b);
    out.extend_from_slice(MAGIC);
    out.write_u16::<LittleEndian>(VERSION).unwrap();
    out.extend_from_slice(&[DTYPE_F32, 0, mel.is_normalized() as u8, 0, 0, 0]);
    out.write_u64::<LittleEndian>(t as u64).unwrap();
    out.write_u64::<LittleEndian>(b as u64).unwrap();
    for v in mel.values().iter() {
        out.write_f32::<LittleEndian>(*v).unwrap();
    }
    out
}

pub fn decode(bytes: &[u8], config: FeatureConfig) -> Result<MelSpectrogram> {
    let corrupt = |m: &str| Error::CorruptContainer(m.to_string());
    if bytes.len() < HEADER_LEN {
        return Err(corrupt("truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::CorruptContainer(format!("unsupported version {version}")));
    }
    if bytes[6] != DTYPE_F32 {
        return Err(Error::CorruptContainer(format!("unsupported dtype code {}", bytes[6])));
    }
    let big_endian = match bytes[7] {
        0 => false,
        1 => true,
        o => return Err(Error::CorruptContainer(format!("bad byte-order code {o}"))),
    };
    let normalized = bytes[8] == 1;
    let mut cur = Cursor::new(&bytes[12..]);
    let read_u64 = |c: &mut Cursor<&[u8]>| {
        if big_endian {
            c.read_u64::<BigEndian>()
        } else {
            c.read_u64::<LittleEndian>()
        }
    };
    let t = read_u64(&mut cur).map_err(|_| corrupt("truncated shape"))? as usize;
    let b = read_u64(&mut cur).map_err(|_| corrupt("truncated shape"))? as usize;
    let n = t.checked_mul(b).ok_or_else(|| corrupt("shape overflow"))?;
    if bytes.len() != HEADER_LEN + 4 * n {
        return Err(Error::CorruptContainer(format!(
            "expected {} data bytes for {t}x{b}, found {}",
            4 * n,
            bytes.len() - HEADER_LEN
        )));
    }
    let mut data = vec![0f32; n];
    let mut body = &bytes[HEADER_LEN..];
    if big_endian {
        body.read_f32_into::<BigEndian>(&mut data)
    } else {
        body.read_f32_into::<LittleEndian>(&mut data)
    }
    .map_err(|_| corrupt("truncated data"))?;
    let values = Array2::from_shape_vec((t, b), data).map_err(|e| Error::CorruptContainer(e.to_string()))?;
    MelSpectrogram::new(values, config, normalized)
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write(path: &Path, mel: &MelSpectrogram) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(mel)).map_err(|e| Error::io(path, e))?;
    let side = sidecar(path);
    fs::write(&side, serde_json::to_vec_pretty(mel.config())?).map_err(|e| Error::io(&side, e))
}

pub fn read(path: &Path) -> Result<MelSpectrogram> {
    let side = sidecar(path);
    let config: FeatureConfig =
        serde_json::from_slice(&fs::read(&side).map_err(|e| Error::io(&side, e))?)?;
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes, config)
}
