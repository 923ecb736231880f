//! Raw float map stacks: planar little-endian f32 with a JSON sidecar.
//!
//! The data file is `height * width * channels` 32-bit IEEE-754 values,
//! one full channel after another (planar), each channel row-major. The
//! sidecar at `<path>.json` carries the shape, so any language can read
//! the stack without guessing. Planar layout keeps per-channel streaming
//! a single contiguous read.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::Grid2D;
use crate::io::{atomic_write, IoError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloatMapDescriptor {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub dtype: String,
    pub channel_names: Vec<String>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

/// Writes the stack and its descriptor. Values are narrowed to f32.
pub fn write_float_map(
    path: &Path,
    channels: &[Grid2D<f64>],
    channel_names: &[&str],
) -> Result<(), IoError> {
    assert!(!channels.is_empty(), "a float map needs at least one channel");
    assert_eq!(channels.len(), channel_names.len(), "one name per channel");
    let (height, width) = channels[0].dims();
    let mut bytes = Vec::with_capacity(channels.len() * height * width * 4);
    for channel in channels {
        assert!(
            channel.same_dims(&channels[0]),
            "all channels must share dimensions"
        );
        for &v in channel.iter() {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let desc = FloatMapDescriptor {
        width,
        height,
        channels: channels.len(),
        dtype: "f32le".to_owned(),
        channel_names: channel_names.iter().map(|s| s.to_string()).collect(),
    };
    let desc_path = sidecar(path);
    let desc_bytes = serde_json::to_vec_pretty(&desc)
        .map_err(|e| IoError::format(&desc_path, e.to_string()))?;
    atomic_write(path, &bytes)?;
    atomic_write(&desc_path, &desc_bytes)
}

/// Reads a stack back; every descriptor inconsistency is an error
/// naming the offending file.
pub fn read_float_map(path: &Path) -> Result<(Vec<Grid2D<f64>>, FloatMapDescriptor), IoError> {
    let desc_path = sidecar(path);
    let desc_text = std::fs::read_to_string(&desc_path).map_err(IoError::file(&desc_path))?;
    let desc: FloatMapDescriptor = serde_json::from_str(&desc_text)
        .map_err(|e| IoError::format(&desc_path, e.to_string()))?;
    if desc.dtype != "f32le" {
        return Err(IoError::format(
            &desc_path,
            format!("unsupported dtype {:?}", desc.dtype),
        ));
    }
    if desc.width == 0 || desc.height == 0 || desc.channels == 0 {
        return Err(IoError::format(&desc_path, "zero dimension"));
    }
    if desc.channel_names.len() != desc.channels {
        return Err(IoError::format(
            &desc_path,
            format!(
                "{} channel names for {} channels",
                desc.channel_names.len(),
                desc.channels
            ),
        ));
    }
    let bytes = std::fs::read(path).map_err(IoError::file(path))?;
    let expected = desc.width * desc.height * desc.channels * 4;
    if bytes.len() != expected {
        return Err(IoError::format(
            path,
            format!("file is {} bytes, descriptor implies {}", bytes.len(), expected),
        ));
    }
    let per_channel = desc.width * desc.height;
    let mut stack = Vec::with_capacity(desc.channels);
    for ch in 0..desc.channels {
        let mut data = Vec::with_capacity(per_channel);
        for i in 0..per_channel {
            let off = (ch * per_channel + i) * 4;
            let raw: [u8; 4] = bytes[off..off + 4].try_into().unwrap();
            data.push(f32::from_le_bytes(raw) as f64);
        }
        stack.push(
            Grid2D::from_vec(desc.height, desc.width, data)
                .expect("descriptor dims validated above"),
        );
    }
    Ok((stack, desc))
}
