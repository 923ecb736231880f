//! Per-instance annotation tables.
//!
//! One CSV row per instance: `label,type,centroid_row,centroid_col`.
//! The type column holds a class id or the literal `UNLABELLED` for
//! instances a pathologist marked but did not classify. Centroids are
//! printed with Rust's shortest round-trippable float formatting, so
//! read∘write is exact.

use std::collections::BTreeSet;
use std::path::Path;

use crate::io::{atomic_write, IoError};

/// Default class vocabulary: colorectal nuclei grouped into four
/// super-classes (fibroblast/muscle/endothelial merged as
/// spindle-shaped).
pub const DEFAULT_CLASS_NAMES: [(u8, &str); 4] = [
    (1, "miscellaneous"),
    (2, "inflammatory"),
    (3, "epithelial"),
    (4, "spindle"),
];

pub const UNLABELLED: &str = "UNLABELLED";

const HEADER: &str = "label,type,centroid_row,centroid_col";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub label: u32,
    /// `None` for instances without a class assignment.
    pub class: Option<u8>,
    /// (row, col) in pixel coordinates.
    pub centroid: (f64, f64),
}

pub fn write_annotations(path: &Path, records: &[Annotation]) -> Result<(), IoError> {
    let mut text = String::from(HEADER);
    text.push('\n');
    for a in records {
        let class = match a.class {
            Some(c) => c.to_string(),
            None => UNLABELLED.to_owned(),
        };
        text.push_str(&format!(
            "{},{},{},{}\n",
            a.label, class, a.centroid.0, a.centroid.1
        ));
    }
    atomic_write(path, text.as_bytes())
}

/// Reads and validates a table: labels must be unique and class ids
/// within `1..=num_classes`.
pub fn read_annotations(path: &Path, num_classes: u8) -> Result<Vec<Annotation>, IoError> {
    let text = std::fs::read_to_string(path).map_err(IoError::file(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == HEADER => {}
        _ => {
            return Err(IoError::Parse {
                path: path.to_owned(),
                line: 1,
                reason: format!("expected header {HEADER:?}"),
            })
        }
    }
    let parse_err = |line: usize, reason: String| IoError::Parse {
        path: path.to_owned(),
        line: line + 1,
        reason,
    };
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(i, format!("expected 4 fields, found {}", fields.len())));
        }
        let label: u32 = fields[0]
            .parse()
            .map_err(|e| parse_err(i, format!("bad label {:?}: {e}", fields[0])))?;
        if label == 0 {
            return Err(parse_err(i, "label 0 is reserved for background".into()));
        }
        if !seen.insert(label) {
            return Err(IoError::DuplicateLabel {
                path: path.to_owned(),
                label,
            });
        }
        let class = if fields[1] == UNLABELLED {
            None
        } else {
            let c: u8 = fields[1]
                .parse()
                .map_err(|e| parse_err(i, format!("bad type {:?}: {e}", fields[1])))?;
            if c == 0 || c > num_classes {
                return Err(parse_err(
                    i,
                    format!("type {c} outside declared classes 1..={num_classes}"),
                ));
            }
            Some(c)
        };
        let row: f64 = fields[2]
            .parse()
            .map_err(|e| parse_err(i, format!("bad centroid row {:?}: {e}", fields[2])))?;
        let col: f64 = fields[3]
            .parse()
            .map_err(|e| parse_err(i, format!("bad centroid col {:?}: {e}", fields[3])))?;
        records.push(Annotation {
            label,
            class,
            centroid: (row, col),
        });
    }
    Ok(records)
}
