//! Post-processing config files: flat TOML key-value documents whose
//! keys mirror [`PostProcConfig`] field for field. Absent keys fall back
//! to the defaults; unknown keys are errors so typos can't silently
//! revert a setting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::{atomic_write, IoError};
use crate::postproc::{EnergyMode, MarkerMode, PostProcConfig};
use crate::sobel::SobelKsize;

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigDoc {
    h: f64,
    k: f64,
    sobel_ksize: u32,
    min_marker_area: usize,
    min_instance_area: usize,
    energy_mode: String,
    marker_mode: String,
    threshold_marker_range: (f64, f64),
}

impl Default for ConfigDoc {
    fn default() -> Self {
        Self::from(&PostProcConfig::default())
    }
}

impl From<&PostProcConfig> for ConfigDoc {
    fn from(cfg: &PostProcConfig) -> Self {
        Self {
            h: cfg.h,
            k: cfg.k,
            sobel_ksize: cfg.sobel_ksize.as_int(),
            min_marker_area: cfg.min_marker_area,
            min_instance_area: cfg.min_instance_area,
            energy_mode: match cfg.energy_mode {
                EnergyMode::Sobel => "sobel".to_owned(),
                EnergyMode::SqSum => "sqsum".to_owned(),
            },
            marker_mode: match cfg.marker_mode {
                MarkerMode::Sobel => "sobel".to_owned(),
                MarkerMode::Threshold => "threshold".to_owned(),
            },
            threshold_marker_range: cfg.threshold_marker_range,
        }
    }
}

impl ConfigDoc {
    fn into_config(self) -> Result<PostProcConfig, String> {
        let cfg = PostProcConfig {
            h: self.h,
            k: self.k,
            sobel_ksize: SobelKsize::from_int(self.sobel_ksize)
                .ok_or_else(|| format!("sobel_ksize must be 3 or 5, got {}", self.sobel_ksize))?,
            min_marker_area: self.min_marker_area,
            min_instance_area: self.min_instance_area,
            energy_mode: match self.energy_mode.as_str() {
                "sobel" => EnergyMode::Sobel,
                "sqsum" => EnergyMode::SqSum,
                other => return Err(format!("energy_mode must be sobel or sqsum, got {other:?}")),
            },
            marker_mode: match self.marker_mode.as_str() {
                "sobel" => MarkerMode::Sobel,
                "threshold" => MarkerMode::Threshold,
                other => {
                    return Err(format!("marker_mode must be sobel or threshold, got {other:?}"))
                }
            },
            threshold_marker_range: self.threshold_marker_range,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a config document; an empty string yields the defaults.
pub fn parse_postproc_config(text: &str) -> Result<PostProcConfig, String> {
    let doc: ConfigDoc = toml::from_str(text).map_err(|e| e.to_string())?;
    doc.into_config()
}

pub fn read_postproc_config(path: &Path) -> Result<PostProcConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(IoError::file(path))?;
    parse_postproc_config(&text).map_err(|reason| IoError::format(path, reason))
}

pub fn render_postproc_config(cfg: &PostProcConfig) -> String {
    toml::to_string(&ConfigDoc::from(cfg)).expect("plain scalar document")
}

pub fn write_postproc_config(path: &Path, cfg: &PostProcConfig) -> Result<(), IoError> {
    atomic_write(path, render_postproc_config(cfg).as_bytes())
}
