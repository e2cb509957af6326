//! Versioned parameter archive: a safetensors file whose string metadata
//! carries `format_version`, `kind` and caller-defined entries.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use safetensors::tensor::{Dtype, SafeTensors, TensorView};

use crate::error::{Error, Result};

pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug)]
pub struct Archive {
    pub tensors: BTreeMap<String, Tensor>,
    pub metadata: BTreeMap<String, String>,
}

pub fn write_archive(
    path: &Path,
    kind: &str,
    tensors: &BTreeMap<String, Tensor>,
    mut metadata: BTreeMap<String, String>,
) -> Result<()> {
    metadata.insert("format_version".into(), ARCHIVE_VERSION.to_string());
    metadata.insert("kind".into(), kind.to_string());

    let mut buffers = Vec::with_capacity(tensors.len());
    for (name, t) in tensors {
        let data = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
        let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        buffers.push((name.clone(), t.dims().to_vec(), bytes));
    }
    let views = buffers
        .iter()
        .map(|(name, shape, bytes)| Ok((name.as_str(), TensorView::new(Dtype::F32, shape.clone(), bytes).map_err(corrupt(path))?)))
        .collect::<Result<Vec<_>>>()?;
    let info: HashMap<String, String> = metadata.into_iter().collect();
    let out = safetensors::tensor::serialize(views, Some(info)).map_err(corrupt(path))?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn corrupt(path: &Path) -> impl Fn(safetensors::SafeTensorError) -> Error + '_ {
    move |e| Error::CorruptCheckpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn read_archive(path: &Path, expected_kind: &str) -> Result<Archive> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (_, header) = SafeTensors::read_metadata(&bytes).map_err(corrupt(path))?;
    let metadata: BTreeMap<String, String> = header
        .metadata()
        .clone()
        .unwrap_or_default()
        .into_iter()
        .collect();
    let found: u32 = metadata
        .get("format_version")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            message: "missing format_version".into(),
        })?;
    if found != ARCHIVE_VERSION {
        return Err(Error::CheckpointVersion {
            found,
            expected: ARCHIVE_VERSION,
        });
    }
    if metadata.get("kind").map(String::as_str) != Some(expected_kind) {
        return Err(Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            message: format!("expected a `{expected_kind}` archive, found {:?}", metadata.get("kind")),
        });
    }
    let st = SafeTensors::deserialize(&bytes).map_err(corrupt(path))?;
    let mut tensors = BTreeMap::new();
    for (name, view) in st.tensors() {
        if view.dtype() != Dtype::F32 {
            return Err(Error::CorruptCheckpoint {
                path: path.to_path_buf(),
                message: format!("tensor `{name}` is not f32"),
            });
        }
        let data: Vec<f32> = view
            .data()
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        tensors.insert(name, Tensor::from_vec(data, view.shape(), &Device::Cpu)?);
    }
    Ok(Archive { tensors, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_version_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.safetensors");
        let mut t = BTreeMap::new();
        t.insert("w".to_string(), Tensor::new(&[[1f32, 2.], [3., 4.]], &Device::Cpu).unwrap());
        write_archive(&p, "test", &t, BTreeMap::from([("k".into(), "v".into())])).unwrap();
        let a = read_archive(&p, "test").unwrap();
        assert_eq!(a.metadata["k"], "v");
        assert_eq!(a.tensors["w"].to_vec2::<f32>().unwrap(), vec![vec![1., 2.], vec![3., 4.]]);
        assert!(read_archive(&p, "other").is_err());

        write_archive(&p, "test", &t, BTreeMap::new()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        let needle = b"\"format_version\":\"1\"";
        let at = bytes.windows(needle.len()).position(|w| w == needle).unwrap();
        bytes[at + needle.len() - 2] = b'7';
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            read_archive(&p, "test"),
            Err(Error::CheckpointVersion { found: 7, expected: 1 })
        ));
    }
}
