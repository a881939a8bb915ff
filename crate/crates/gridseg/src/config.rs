//! Run configuration: analysis tolerances and thresholds plus output options.
//!
//! Sources, later ones winning: built-in defaults, the file named by
//! `GRIDSEG_CONFIG`, the file passed with `--config`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gridseg_core::AnalysisConfig;
use serde::{Deserialize, Serialize};

/// Partial configuration as found in a file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pf_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pf_max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_flow_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_phase_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opposing_phase_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_min_freq_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_max_freq_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_min_modulus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_participation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suppression_damping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suppression_window_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verbosity: Option<u8>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `other` wins wherever it sets a field.
    pub fn merged(mut self, other: &ConfigFile) -> ConfigFile {
        overlay!(
            self,
            other,
            pf_tolerance,
            pf_max_iter,
            eigen_residual_tol,
            zero_flow_eps,
            tie_tol,
            shape_threshold,
            group_phase_deg,
            opposing_phase_deg,
            em_min_freq_hz,
            em_max_freq_hz,
            em_min_modulus,
            em_participation,
            suppression_damping,
            suppression_window_hz,
            output_dir,
            verbosity
        );
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
    pub verbosity: u8,
    /// The overrides applied on top of the defaults, echoed into outputs.
    pub overrides: ConfigFile,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_overrides(ConfigFile::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn from_overrides(o: ConfigFile) -> Result<RunConfig> {
        let mut a = AnalysisConfig::default();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { a.$f = v; } )* };
        }
        set!(
            pf_tolerance,
            pf_max_iter,
            eigen_residual_tol,
            zero_flow_eps,
            tie_tol,
            shape_threshold,
            group_phase_deg,
            opposing_phase_deg,
            em_min_freq_hz,
            em_max_freq_hz,
            em_min_modulus,
            em_participation,
            suppression_damping,
            suppression_window_hz
        );
        a.validate()?;
        Ok(RunConfig {
            analysis: a,
            output_dir: o.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            verbosity: o.verbosity.unwrap_or(0),
            overrides: o,
        })
    }

    /// Resolves the configuration from `GRIDSEG_CONFIG` (if set) and an
    /// explicit `--config` file.
    pub fn resolve(env_file: Option<&Path>, cli_file: Option<&Path>) -> Result<RunConfig> {
        let mut o = ConfigFile::default();
        for path in [env_file, cli_file].into_iter().flatten() {
            o = o.merged(&ConfigFile::load(path)?);
        }
        RunConfig::from_overrides(o)
    }

    /// Analysis overrides as compact JSON, or `defaults`. Output location and
    /// verbosity are left out so that outputs do not depend on them.
    pub fn echo(&self) -> String {
        let mut o = self.overrides.clone();
        o.output_dir = None;
        o.verbosity = None;
        if o == ConfigFile::default() {
            "defaults".into()
        } else {
            serde_json::to_string(&o).expect("config serializes")
        }
    }
}
