use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use qsup_core::config::GeometrySpec;
use qsup_core::interferometer::{SimulationGrid, VisibilityOptions, Windows};
use qsup_core::spectra::AtrConversionConfig;
use qsup_core::structfit::FitConfig;
use qsup_core::sweep::{SweepParameter, SweepValues};

use crate::UsageError;

/// Everything a run needs. Every field has a default, so `{}` is a valid
/// config. Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dispersion_file: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub geometry: GeometrySpec,
    pub grid: SimulationGrid,
    pub windows: Windows,
    pub visibility: VisibilityOptions,
    pub conversion: ConversionConfig,
    pub sample: Option<SampleSource>,
    pub sweep: Option<SweepSection>,
    pub fit: FitConfig,
    pub compare: CompareConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConversionConfig {
    pub penetration_depth_nm: f64,
    pub pass_count: u32,
    pub reference_file: Option<PathBuf>,
    pub reference_scale: f64,
    pub baseline_window_cm1: Option<[f64; 2]>,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        let atr = AtrConversionConfig::default();
        Self {
            penetration_depth_nm: atr.penetration_depth_nm,
            pass_count: atr.pass_count,
            reference_file: None,
            reference_scale: 1.0,
            baseline_window_cm1: None,
        }
    }
}

/// The sample placed in the biocell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SampleSource {
    /// Absorbance or transmissivity spectrum file (CSV or JSON).
    File { file: PathBuf },
    /// Spectrally flat amplitude transmissivity.
    Flat { tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Option<SweepValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Restrict the comparison to this wavenumber band.
    pub window_cm1: Option<[f64; 2]>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            window_cm1: Some([1500.0, 1700.0]),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            UsageError(format!(
                "{}:{}:{}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.dispersion_file {
            fix(p);
        }
        if let Some(p) = &mut self.out_dir {
            fix(p);
        }
        if let Some(p) = &mut self.conversion.reference_file {
            fix(p);
        }
        if let Some(SampleSource::File { file }) = &mut self.sample {
            fix(file);
        }
    }

    pub fn atr(&self, sample_path_um: f64) -> AtrConversionConfig {
        AtrConversionConfig {
            penetration_depth_nm: self.conversion.penetration_depth_nm,
            sample_path_um,
            pass_count: self.conversion.pass_count,
        }
    }
}

pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| "loading run config".to_string()),
        None => Ok(RunConfig::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.geometry.gap_l_a_mm, -8.75);
    }

    #[test]
    fn sample_sources() {
        let c: RunConfig = serde_json::from_str(r#"{"sample": {"tau": 0.5}}"#).unwrap();
        assert_eq!(c.sample, Some(SampleSource::Flat { tau: 0.5 }));
        let c: RunConfig = serde_json::from_str(r#"{"sample": {"file": "a.csv"}}"#).unwrap();
        assert_eq!(
            c.sample,
            Some(SampleSource::File {
                file: "a.csv".into()
            })
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"geometri": {}}"#).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"sample": {"file": "s.csv"}, "out_dir": "out"}"#).unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(
            c.sample,
            Some(SampleSource::File {
                file: dir.path().join("s.csv")
            })
        );
        assert_eq!(c.out_dir, Some(dir.path().join("out")));
    }
}
