//! On-disk formats: raw float map stacks, 16-bit label images,
//! annotation tables, post-processing config files, and metric reports.
//!
//! Every writer goes through [`atomic_write`], so readers never observe
//! a half-written file, and every format round-trips bit-exactly.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

pub mod annotations;
pub mod config;
pub mod float_map;
pub mod label_map;
pub mod report;

pub use annotations::{read_annotations, write_annotations, Annotation, DEFAULT_CLASS_NAMES};
pub use config::{parse_postproc_config, read_postproc_config, render_postproc_config, write_postproc_config};
pub use float_map::{read_float_map, write_float_map, FloatMapDescriptor};
pub use label_map::{read_label_map, write_label_map};
pub use report::{render_class_report, render_seg_report, write_class_report, write_seg_report};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {cause}", path.display())]
    File {
        path: PathBuf,
        cause: std::io::Error,
    },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{}: duplicate label {label}", path.display())]
    DuplicateLabel { path: PathBuf, label: u32 },
    #[error("label {label} exceeds the 16-bit label-map limit")]
    LabelOverflow { label: u32 },
}

impl IoError {
    fn file(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |cause| Self::File {
            path: path.to_owned(),
            cause,
        }
    }

    fn format(path: &Path, reason: impl Into<String>) -> Self {
        Self::Format {
            path: path.to_owned(),
            reason: reason.into(),
        }
    }
}

/// Writes a sibling temp file then renames it over `path`, so the
/// destination is always either absent, the old content, or the
/// complete new content.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let name = path
        .file_name()
        .ok_or_else(|| IoError::format(path, "path has no file name"))?;
    let tmp_name = format!(
        ".{}.{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    );
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp, bytes).map_err(IoError::file(&tmp))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        IoError::file(path)(e)
    })?;
    Ok(())
}
