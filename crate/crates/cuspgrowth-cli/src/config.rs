use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use cuspgrowth::profiles::CatalogParams;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ProfileValidate,
    CuspAnalyze,
    LatticeClassify,
    ExampleRun,
    OracleVerify,
}

/// Per-command inputs; the same keys work as flags and in a config file.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Example id, e.g. `exotic-div-5.3b`.
    #[arg(long)]
    pub name: Option<String>,
    /// Profile file (TOML).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Lattice description (TOML).
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    #[arg(long = "Rmax")]
    #[serde(rename = "Rmax")]
    pub r_max: Option<f64>,
    /// Enumeration radius for the Γ(2) oracle.
    #[arg(long = "Rcap")]
    #[serde(rename = "Rcap")]
    pub r_cap: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Exponent for convergence tests (cusp-analyze) or gauge Δ (oracle-verify).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Random samples for the lemma checks.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also write a gnuplot script for the CSV tables.
    #[arg(long)]
    pub gnuplot: bool,
}

impl Inputs {
    pub fn catalog_params(&self) -> CatalogParams {
        let mut p = CatalogParams::default();
        if let Some(v) = self.b {
            p.b = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.m {
            p.m = v;
        }
        if let Some(v) = self.mu {
            p.mu = v;
        }
        p
    }
}

/// Every tolerance an assertion uses.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Window agreement for exponent estimates, in units of `b/a`.
    pub window_tol: f64,
    /// Bisection width for Poincaré abscissae.
    pub abscissa_tol: f64,
    /// Relative margin of the sparseness test.
    pub sparse_rel_tol: f64,
    /// Allowed `|δ̂ − 1|` for Γ(2).
    pub delta_tol: f64,
    /// Allowed growth of the approximation defect from `d ∈ [5,10)` to `[10,14]`.
    pub lemma_growth: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            window_tol: 0.02,
            abscissa_tol: 1e-9,
            sparse_rel_tol: 0.02,
            delta_tol: 0.15,
            lemma_growth: 0.1,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub tolerances: Tolerances,
}

pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}

pub fn default_seed() -> u64 {
    7
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_input(path)?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
}

pub fn load_tolerances(path: Option<&Path>) -> Result<Tolerances, CliError> {
    path.map_or(Ok(Tolerances::default()), parse_toml)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("").is_err());
    }

    #[test]
    fn config_with_flags_names() {
        let c: ExperimentConfig = toml::from_str(
            "command = \"example-run\"\nseed = 3\n[inputs]\nname = \"exotic-div-5.3b\"\nRmax = 60\nM = 4\n[tolerances]\ndelta_tol = 0.1\n",
        )
        .unwrap();
        assert_eq!(c.command, Command::ExampleRun);
        assert_eq!(c.inputs.r_max, Some(60.0));
        assert_eq!(c.inputs.catalog_params().m, 4.0);
        assert_eq!(c.tolerances.delta_tol, 0.1);
        assert_eq!(c.tolerances.window_tol, 0.02);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Tolerances>("tau = 1").is_err());
        assert!(toml::from_str::<ExperimentConfig>("command = \"fly\"").is_err());
    }
}
