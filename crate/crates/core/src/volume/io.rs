//! Header + raw payload volume files.
//!
//! `<name>.json` holds `dims`, `spacing_mm`, `origin_mm`, `dtype`, `order`
//! (always `"zyx-c-contiguous"`) and, for vector fields, `channels: 3`.
//! `<name>.raw` holds exactly `nx * ny * nz * channels` little-endian
//! elements with x varying fastest and channels interleaved innermost.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{label_volume, Geometry, Grid3, Label, LabelVolume, ScalarField, VectorField};
use crate::{Error, Result, Vec3};

pub const ORDER: &str = "zyx-c-contiguous";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub origin_mm: [f64; 3],
    pub dtype: String,
    pub order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<usize>,
}

impl VolumeHeader {
    fn new(g: &Geometry, dtype: &str, channels: Option<usize>) -> Self {
        VolumeHeader {
            dims: g.dims,
            spacing_mm: g.spacing,
            origin_mm: g.origin,
            dtype: dtype.to_string(),
            order: ORDER.to_string(),
            channels,
        }
    }
}

/// Resolves `<name>`, `<name>.json` or `<name>.raw` to the header/payload pair.
pub fn volume_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("raw") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut header = stem.clone().into_os_string();
    header.push(".json");
    let mut raw = stem.into_os_string();
    raw.push(".raw");
    (header.into(), raw.into())
}

fn read_header(path: &Path, dtype: &str, channels: usize) -> Result<(VolumeHeader, Geometry)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: VolumeHeader = serde_json::from_str(&text).map_err(|e| Error::Header {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let bad = |message: String| Error::Header {
        path: path.to_path_buf(),
        message,
    };
    if header.dtype != dtype {
        return Err(bad(format!("expected dtype {dtype}, found {}", header.dtype)));
    }
    if header.order != ORDER {
        return Err(bad(format!("unsupported order {}", header.order)));
    }
    if header.channels.unwrap_or(1) != channels {
        return Err(bad(format!(
            "expected {channels} channels, found {}",
            header.channels.unwrap_or(1)
        )));
    }
    let geometry = Geometry::new(header.dims, header.spacing_mm, header.origin_mm)
        .map_err(|e| bad(e.to_string()))?;
    Ok((header, geometry))
}

fn read_payload(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes)
}

fn write_pair(path: &Path, header: &VolumeHeader, payload: &[u8]) -> Result<()> {
    let (hp, rp) = volume_paths(path);
    if let Some(dir) = hp.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let text = serde_json::to_string_pretty(header)?;
    fs::write(&hp, text).map_err(|e| Error::io(&hp, e))?;
    fs::write(&rp, payload).map_err(|e| Error::io(&rp, e))?;
    Ok(())
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<LabelVolume> {
    let (hp, rp) = volume_paths(path.as_ref());
    let (_, geometry) = read_header(&hp, "u8", 1)?;
    let bytes = read_payload(&rp, geometry.len())?;
    let labels = bytes
        .iter()
        .enumerate()
        .map(|(index, &value)| Label::from_u8(value).ok_or(Error::InvalidLabel { value, index }))
        .collect::<Result<Vec<_>>>()?;
    label_volume(geometry, labels)
}

pub fn save_volume(path: impl AsRef<Path>, v: &LabelVolume) -> Result<()> {
    let header = VolumeHeader::new(v.geometry(), "u8", None);
    let payload: Vec<u8> = v.data().iter().map(|&l| l as u8).collect();
    write_pair(path.as_ref(), &header, &payload)
}

pub fn save_scalar_field(path: impl AsRef<Path>, f: &ScalarField) -> Result<()> {
    let header = VolumeHeader::new(f.geometry(), "f32", None);
    let payload: Vec<u8> = f
        .data()
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    write_pair(path.as_ref(), &header, &payload)
}

pub fn load_scalar_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let (hp, rp) = volume_paths(path.as_ref());
    let (_, geometry) = read_header(&hp, "f32", 1)?;
    let bytes = read_payload(&rp, geometry.len() * 4)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Grid3::from_vec(geometry, data)
}

pub fn save_vector_field(path: impl AsRef<Path>, f: &VectorField) -> Result<()> {
    let header = VolumeHeader::new(f.geometry(), "f32", Some(3));
    let payload: Vec<u8> = f
        .data()
        .iter()
        .flat_map(|v| [v.x, v.y, v.z])
        .flat_map(|c| (c as f32).to_le_bytes())
        .collect();
    write_pair(path.as_ref(), &header, &payload)
}

pub fn load_vector_field(path: impl AsRef<Path>) -> Result<VectorField> {
    let (hp, rp) = volume_paths(path.as_ref());
    let (_, geometry) = read_header(&hp, "f32", 3)?;
    let bytes = read_payload(&rp, geometry.len() * 12)?;
    let comps: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let data = comps
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect();
    Grid3::from_vec(geometry, data)
}
