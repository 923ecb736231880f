//! Instance label maps as 16-bit grayscale PNG: pixel value = label,
//! 0 = background. Lossless and big enough for any realistic tile
//! (tens of thousands of labels).

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};

use crate::grid::{Grid2D, InstanceMap};
use crate::io::{atomic_write, IoError};

pub fn write_label_map(path: &Path, instances: &InstanceMap) -> Result<(), IoError> {
    let (height, width) = instances.dims();
    let mut pixels = Vec::with_capacity(height * width);
    for &label in instances.grid().iter() {
        if label > u32::from(u16::MAX) {
            return Err(IoError::LabelOverflow { label });
        }
        pixels.push(label as u16);
    }
    let buffer: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, pixels)
            .expect("buffer sized from grid dims");
    let mut bytes = Vec::new();
    DynamicImage::ImageLuma16(buffer)
        .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .map_err(|e| IoError::format(path, e.to_string()))?;
    atomic_write(path, &bytes)
}

pub fn read_label_map(path: &Path) -> Result<InstanceMap, IoError> {
    let bytes = std::fs::read(path).map_err(IoError::file(path))?;
    let decoded = image::load_from_memory_with_format(&bytes, ImageFormat::Png)
        .map_err(|e| IoError::format(path, e.to_string()))?;
    let buffer = match decoded {
        DynamicImage::ImageLuma16(buffer) => buffer,
        other => {
            return Err(IoError::format(
                path,
                format!("expected 16-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    let (width, height) = buffer.dimensions();
    let data = buffer.into_raw().into_iter().map(u32::from).collect();
    let grid = Grid2D::from_vec(height as usize, width as usize, data)
        .map_err(|e| IoError::format(path, e.to_string()))?;
    Ok(InstanceMap::from_grid(grid))
}
