//! Declarative study configuration.
//!
//! Momenta given with a `_2pi` suffix are in units of `2π`. Every grid axis
//! a study does not need may be omitted; axes it needs fall back to the
//! scalar in `[model]` when one exists, and are otherwise required.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    ScatteringRate,
    RenormFlow,
    SpectrumGaps,
    WeylIdentity,
    LogTerm,
    Lhy,
    Expansion,
}

impl Study {
    pub fn subcommand(self) -> &'static str {
        match self {
            Study::ScatteringRate => "scatter",
            Study::RenormFlow => "flow",
            Study::SpectrumGaps => "spectrum",
            Study::WeylIdentity => "weyl",
            Study::LogTerm => "logterm",
            Study::Lhy => "lhy",
            Study::Expansion => "expand",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Study::ScatteringRate => "scattering_rate",
            Study::RenormFlow => "renorm_flow",
            Study::SpectrumGaps => "spectrum_gaps",
            Study::WeylIdentity => "weyl_identity",
            Study::LogTerm => "log_term",
            Study::Lhy => "lhy",
            Study::Expansion => "expansion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Optional in the file; the subcommand supplies it otherwise.
    #[serde(default)]
    pub study: Option<Study>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default)]
    pub output: Output,
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model {
    pub a_v: f64,
    pub a_w: f64,
    pub kappa_2pi: f64,
    pub p_total: [i32; 3],
    /// Number of low levels reported by spectral studies.
    pub levels: usize,
    /// Boson-number shells compared by the Weyl study; `None` drops the top two.
    pub keep_shells: Option<usize>,
    /// `bogoliubov` or `free` phonon dispersion in the log-term sum.
    pub dispersion: String,
    /// Exponent of the `N^α` split in the order-one scalar.
    pub alpha: f64,
}

impl Default for Model {
    fn default() -> Self {
        Model {
            a_v: 1.0,
            a_w: 0.5,
            kappa_2pi: 0.0,
            p_total: [0, 0, 0],
            levels: 3,
            keep_shells: None,
            dispersion: "bogoliubov".into(),
            alpha: polaron_core::asymptotics::DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub lambda_2pi: Vec<f64>,
    pub kappa_2pi: Vec<f64>,
    pub n_max: Vec<usize>,
    /// Particle numbers for the asymptotic studies, rescaling factors for
    /// the scattering study.
    pub n: Vec<f64>,
    pub a_v: Vec<f64>,
    pub a_w: Vec<f64>,
    pub p_total: Vec<[i32; 3]>,
    pub cutoff_2pi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eig: f64,
    pub scattering: f64,
    pub radial: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig: 1e-10,
            scattering: 1e-10,
            radial: polaron_core::scattering::RADIAL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Potential {
    /// `gaussian`, `compact_bump` or `tabulated`.
    pub kind: String,
    pub amplitude: f64,
    pub range: f64,
    /// Two-column `r v(r)` file for `tabulated`.
    pub table: Option<PathBuf>,
    /// Lattice radius in units of `n / range`.
    pub cutoff_factor: f64,
    pub radial_points: usize,
    /// Outer radius of the free-space integration; defaults to the
    /// effective range of the potential plus one.
    pub r_max: Option<f64>,
}

impl Default for Potential {
    fn default() -> Self {
        Potential {
            kind: "gaussian".into(),
            amplitude: 10.0,
            range: 0.75,
            table: None,
            cutoff_factor: 4.0,
            radial_points: 20_000,
            r_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
    /// Base name of the CSV file; the study name when absent.
    pub name: Option<String>,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: PathBuf::from("out"),
            name: None,
        }
    }
}

impl StudyConfig {
    /// Parses TOML, or the `config` object of a previously written manifest
    /// when the file is JSON.
    pub fn parse(text: &str, json: bool) -> Result<Self, UsageError> {
        if json {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| UsageError(format!("manifest: {e}")))?;
            let inner = value
                .get("config")
                .cloned()
                .ok_or_else(|| UsageError("manifest: missing field `config`".into()))?;
            serde_json::from_value(inner).map_err(|e| UsageError(format!("manifest.config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| UsageError(format!("config: {e}")))
        }
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|x| x == "json");
        Self::parse(&text, json)
    }

    pub fn study(&self) -> Result<Study, UsageError> {
        self.study.ok_or_else(|| UsageError("study: not set".into()))
    }

    /// Checks the invariants every study relies on.
    pub fn validate(&self) -> Result<(), UsageError> {
        let study = self.study()?;
        if self.workers == 0 {
            return Err(UsageError("workers: must be at least 1".into()));
        }
        for (name, v) in [
            ("tolerances.eig", self.tolerances.eig),
            ("tolerances.scattering", self.tolerances.scattering),
            ("tolerances.radial", self.tolerances.radial),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(UsageError(format!("{name}: must be finite and > 0, got {v}")));
            }
        }
        if self.model.levels == 0 {
            return Err(UsageError("model.levels: must be at least 1".into()));
        }
        if !matches!(self.model.dispersion.as_str(), "bogoliubov" | "free") {
            return Err(UsageError(format!(
                "model.dispersion: expected `bogoliubov` or `free`, got `{}`",
                self.model.dispersion
            )));
        }
        let required: &[(&str, usize)] = match study {
            Study::ScatteringRate => &[("grid.n", self.grid.n.len())],
            Study::RenormFlow | Study::SpectrumGaps => {
                &[("grid.lambda_2pi", self.grid.lambda_2pi.len()), ("grid.n_max", self.grid.n_max.len())]
            }
            Study::WeylIdentity => &[("grid.lambda_2pi", self.grid.lambda_2pi.len()), ("grid.n_max", self.grid.n_max.len())],
            Study::LogTerm | Study::Expansion => &[("grid.n", self.grid.n.len())],
            Study::Lhy => &[("grid.cutoff_2pi", self.grid.cutoff_2pi.len())],
        };
        for &(name, len) in required {
            if len == 0 {
                return Err(UsageError(format!("{name}: grid must be non-empty for study `{}`", study.name())));
            }
        }
        if study == Study::ScatteringRate {
            let p = &self.potential;
            if !matches!(p.kind.as_str(), "gaussian" | "compact_bump" | "tabulated") {
                return Err(UsageError(format!(
                    "potential.kind: expected `gaussian`, `compact_bump` or `tabulated`, got `{}`",
                    p.kind
                )));
            }
            if p.kind == "tabulated" && p.table.is_none() {
                return Err(UsageError("potential.table: required for a tabulated potential".into()));
            }
            if !(p.cutoff_factor > 0.0) {
                return Err(UsageError("potential.cutoff_factor: must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_flow_config() {
        let c = StudyConfig::parse(
            "study = \"renorm_flow\"\n[grid]\nlambda_2pi = [2.0]\nn_max = [1]\n",
            false,
        )
        .unwrap();
        assert_eq!(c.study, Some(Study::RenormFlow));
        assert_eq!(c.workers, 1);
        c.validate().unwrap();
    }

    #[test]
    fn empty_grid_names_the_field() {
        let c = StudyConfig::parse("study = \"lhy\"\n[grid]\ncutoff_2pi = []\n", false).unwrap();
        let err = c.validate().unwrap_err();
        assert!(err.0.starts_with("grid.cutoff_2pi"), "{}", err.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = StudyConfig::parse("study = \"lhy\"\n[grid]\ncutof_2pi = [1.0]\n", false).unwrap_err();
        assert!(err.0.contains("cutof_2pi"), "{}", err.0);
    }

    #[test]
    fn bad_tolerance() {
        let c = StudyConfig::parse("study = \"lhy\"\n[grid]\ncutoff_2pi = [1.0]\n[tolerances]\neig = 0.0\n", false).unwrap();
        assert!(c.validate().unwrap_err().0.starts_with("tolerances.eig"));
    }

    #[test]
    fn json_round_trip() {
        let c = StudyConfig::parse("study = \"expansion\"\nseed = 4\n[grid]\nn = [100.0]\n", false).unwrap();
        let manifest = serde_json::json!({ "config": c });
        let back = StudyConfig::parse(&manifest.to_string(), true).unwrap();
        assert_eq!(back, c);
    }
}
