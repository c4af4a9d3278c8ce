use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svj_core::montecarlo::PathConfig;
use svj_core::pricing::QuadratureControls;
use svj_core::{JumpSpec, MarketRequest, SvModel};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Price,
    Density,
    Charfn,
    Jumps,
    Mc,
    Validate,
    Report,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Everything a run needs. Every section is optional in the file; commands
/// name the sections they require.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub model: Option<SvModel>,
    #[serde(default)]
    pub jump_spec: JumpSpec,
    pub market: Option<MarketRequest>,
    pub quadrature: Option<QuadratureControls>,
    pub paths: Option<PathConfig>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn model(&self) -> Result<&SvModel, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config("missing field `model`".into()))
    }

    pub fn market(&self) -> Result<MarketRequest, CliError> {
        self.market.ok_or_else(|| CliError::Config("missing field `market`".into()))
    }

    /// Quadrature controls, defaulting the absolute tolerance to `1e-6·S₀`.
    pub fn controls(&self) -> QuadratureControls {
        self.quadrature.unwrap_or_else(|| {
            QuadratureControls::for_spot(self.market.map_or(100.0, |m| m.s0))
        })
    }

    pub fn paths(&self) -> PathConfig {
        self.paths.unwrap_or_default()
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub paths: Option<usize>,
    pub steps_per_year: Option<usize>,
    pub abs_tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if self.seed.is_some()
            || self.workers.is_some()
            || self.paths.is_some()
            || self.steps_per_year.is_some()
        {
            let mut p = cfg.paths();
            if let Some(seed) = self.seed {
                p.seed = seed;
            }
            if let Some(w) = self.workers {
                p.workers = Some(w);
            }
            if let Some(n) = self.paths {
                p.n_paths = n;
            }
            if let Some(n) = self.steps_per_year {
                p.n_steps = n;
            }
            cfg.paths = Some(p);
        }
        if let Some(tol) = self.abs_tol {
            cfg.quadrature = Some(cfg.controls().with_abs_tol(tol));
        }
        if self.output.is_some() {
            cfg.output.path = self.output.clone();
        }
        if self.format.is_some() {
            cfg.output.format = self.format;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"modle": {}}"#).unwrap_err();
        assert!(err.to_string().contains("modle"));
    }

    #[test]
    fn flags_override_file_values() {
        let mut cfg: RunConfig = serde_json::from_str(
            r#"{"paths": {"n_paths": 10, "seed": 1}, "quadrature": {"abs_tol": 1e-3}}"#,
        )
        .unwrap();
        Overrides {
            seed: Some(9),
            abs_tol: Some(1e-8),
            ..Overrides::default()
        }
        .apply(&mut cfg);
        let p = cfg.paths();
        assert_eq!((p.n_paths, p.seed, p.n_steps), (10, 9, 252));
        assert_eq!(cfg.controls().abs_tol, 1e-8);
        assert_eq!(cfg.controls().p_max_cap, 2000.0);
    }

    #[test]
    fn quadrature_default_scales_with_spot() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"market": {"s0": 50, "k": 50, "t": 1}}"#).unwrap();
        assert!((cfg.controls().abs_tol - 5e-5).abs() < 1e-18);
    }
}
