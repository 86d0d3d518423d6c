//! TOML experiment configuration with strict key checking.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::channel::PathLossModel;
use crate::geometry::{Vec3, SPEED_OF_LIGHT};

/// A configuration problem, carrying the offending key path where known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn missing(key: &str) -> Self {
        Self(format!("missing required key `{key}`"))
    }

    fn invalid(key: &str, why: impl std::fmt::Display) -> Self {
        Self(format!("invalid value for `{key}`: {why}"))
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub placement: PlacementBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub lambda: Option<f64>,
    /// Carrier frequency in Hz, an alternative to `lambda`.
    pub frequency: Option<f64>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    /// Element spacing; defaults to `λ/2`.
    pub spacing: Option<f64>,
    /// Aperture override for `region`.
    pub aperture: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementBlock {
    pub tx: Option<[f64; 3]>,
    pub rx: Option<[f64; 3]>,
    pub users: Option<Vec<[f64; 3]>>,
    /// Points to classify with `region`.
    pub points: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub kind: Option<String>,
    pub mode: Option<String>,
    pub sizes: Option<Vec<usize>>,
    pub surface: Option<String>,
    pub path_loss: Option<String>,
    pub seed: Option<u64>,
    // edof
    pub distances: Option<Vec<f64>>,
    pub rayleigh_multiples: Option<Vec<f64>>,
    pub rx_antennas: Option<usize>,
    pub rx_spacing: Option<f64>,
    pub apertures: Option<Vec<f64>>,
    pub rx_side: Option<f64>,
    pub surface_spacing: Option<f64>,
    pub threshold: Option<f64>,
    // train
    pub protocols: Option<Vec<String>>,
    pub l1: Option<usize>,
    pub l2: Option<usize>,
    pub distance_branches: Option<usize>,
    pub trials: Option<usize>,
    pub noise_variance: Option<f64>,
    pub on_grid: Option<bool>,
    pub domain: Option<[f64; 2]>,
    // beamform
    pub init: Option<String>,
    pub q: Option<usize>,
    pub star: Option<bool>,
    pub max_sweeps: Option<usize>,
    pub tol: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub noise: Option<f64>,
    pub tx_power: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

/// A parsed configuration together with the SHA-256 of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

pub fn parse_config(text: &str) -> CResult<LoadedConfig> {
    let de = toml::Deserializer::new(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path == "." || path.is_empty() {
            ConfigError(msg)
        } else {
            ConfigError(format!("`{path}`: {msg}"))
        }
    })?;
    let digest = Sha256::digest(text.as_bytes());
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(LoadedConfig { config, sha256 })
}

pub fn load_config(path: &Path) -> CResult<LoadedConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(key: &str, v: f64) -> CResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn required<T: Clone>(key: &str, v: &Option<T>) -> CResult<T> {
    v.clone().ok_or_else(|| ConfigError::missing(key))
}

fn to_vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

impl ExperimentConfig {
    pub fn lambda(&self) -> CResult<f64> {
        match (self.geometry.lambda, self.geometry.frequency) {
            (Some(_), Some(_)) => Err(ConfigError(
                "give only one of `geometry.lambda` and `geometry.frequency`".into(),
            )),
            (Some(l), None) => positive("geometry.lambda", l),
            (None, Some(f)) => Ok(SPEED_OF_LIGHT / positive("geometry.frequency", f)?),
            (None, None) => Err(ConfigError::missing("geometry.lambda")),
        }
    }

    pub fn spacing(&self) -> CResult<f64> {
        match self.geometry.spacing {
            Some(s) => positive("geometry.spacing", s),
            None => Ok(self.lambda()? / 2.0),
        }
    }

    pub fn rows(&self) -> CResult<usize> {
        count("geometry.rows", required("geometry.rows", &self.geometry.rows)?)
    }

    pub fn cols(&self) -> CResult<usize> {
        count("geometry.cols", required("geometry.cols", &self.geometry.cols)?)
    }

    pub fn tx(&self) -> CResult<Vec3> {
        required("placement.tx", &self.placement.tx).map(to_vec3)
    }

    pub fn rx(&self) -> CResult<Vec3> {
        required("placement.rx", &self.placement.rx).map(to_vec3)
    }

    pub fn users(&self) -> CResult<Vec<Vec3>> {
        let u = required("placement.users", &self.placement.users)?;
        if u.is_empty() {
            return Err(ConfigError::invalid("placement.users", "list is empty"));
        }
        Ok(u.into_iter().map(to_vec3).collect())
    }

    pub fn points(&self) -> Vec<Vec3> {
        self.placement
            .points
            .clone()
            .unwrap_or_default()
            .into_iter()
            .map(to_vec3)
            .collect()
    }

    pub fn sizes(&self) -> CResult<Vec<usize>> {
        let s = required("experiment.sizes", &self.experiment.sizes)?;
        if s.is_empty() {
            return Err(ConfigError::invalid("experiment.sizes", "list is empty"));
        }
        for &n in &s {
            count("experiment.sizes", n)?;
        }
        Ok(s)
    }

    pub fn path_loss(&self) -> CResult<PathLossModel> {
        match self.experiment.path_loss.as_deref() {
            None | Some("free_space") => Ok(PathLossModel::FreeSpaceCascaded),
            Some("unit") => Ok(PathLossModel::UnitGain),
            Some(other) => Err(ConfigError::invalid(
                "experiment.path_loss",
                format!("expected \"free_space\" or \"unit\", got \"{other}\""),
            )),
        }
    }

    /// The seed from the command line, falling back to `experiment.seed`.
    pub fn seed(&self, cli: Option<u64>) -> Option<u64> {
        cli.or(self.experiment.seed)
    }

    pub fn require_seed(&self, cli: Option<u64>) -> CResult<u64> {
        self.seed(cli).ok_or_else(|| ConfigError::missing("experiment.seed"))
    }

    /// Rejects an `experiment.kind` that names a different subcommand.
    pub fn check_kind(&self, subcommand: &str) -> CResult<()> {
        match self.experiment.kind.as_deref() {
            Some(k) if k != subcommand => Err(ConfigError::invalid(
                "experiment.kind",
                format!("config is for \"{k}\", not \"{subcommand}\""),
            )),
            _ => Ok(()),
        }
    }
}

pub fn positive_list(key: &str, v: &Option<Vec<f64>>) -> CResult<Vec<f64>> {
    let list = required(key, v)?;
    if list.is_empty() {
        return Err(ConfigError::invalid(key, "list is empty"));
    }
    list.into_iter().map(|x| positive(key, x)).collect()
}

pub fn required_positive(key: &str, v: Option<f64>) -> CResult<f64> {
    positive(key, required(key, &v)?)
}

pub fn positive_or(key: &str, v: Option<f64>, default: f64) -> CResult<f64> {
    v.map_or(Ok(default), |x| positive(key, x))
}

pub fn nonnegative_or(key: &str, v: Option<f64>, default: f64) -> CResult<f64> {
    match v {
        None => Ok(default),
        Some(x) if x >= 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(ConfigError::invalid(key, format!("must be non-negative, got {x}"))),
    }
}

pub fn choice<'a>(key: &str, v: &'a Option<String>, allowed: &[&str], default: &'a str) -> CResult<&'a str> {
    let s = v.as_deref().unwrap_or(default);
    if allowed.contains(&s) {
        Ok(s)
    } else {
        Err(ConfigError::invalid(
            key,
            format!("expected one of {allowed:?}, got \"{s}\""),
        ))
    }
}

fn count(key: &str, n: usize) -> CResult<usize> {
    if n == 0 {
        Err(ConfigError::invalid(key, "must be positive"))
    } else {
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_lambda_names_key() {
        let c = parse_config("[geometry]\nrows = 4\ncols = 4\n").unwrap();
        assert_eq!(
            c.config.lambda().unwrap_err().0,
            "missing required key `geometry.lambda`"
        );
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let e = parse_config("[geometry]\nlambda = 0.01\nlamda = 0.02\n").unwrap_err();
        assert!(e.0.contains("geometry") && e.0.contains("lamda"), "{}", e.0);
        let e = parse_config("[experment]\n").unwrap_err();
        assert!(e.0.contains("experment"), "{}", e.0);
    }

    #[test]
    fn type_errors_name_nested_key() {
        let e = parse_config("[experiment]\nsizes = [1, \"two\"]\n").unwrap_err();
        assert!(e.0.contains("experiment.sizes"), "{}", e.0);
    }

    #[test]
    fn frequency_alternative() {
        let c = parse_config("[geometry]\nfrequency = 28e9\n").unwrap();
        assert!((c.config.lambda().unwrap() - SPEED_OF_LIGHT / 28e9).abs() < 1e-15);
        let c = parse_config("[geometry]\nfrequency = 28e9\nlambda = 0.01\n").unwrap();
        assert!(c.config.lambda().is_err());
    }

    #[test]
    fn hash_tracks_text() {
        let a = parse_config("[geometry]\nlambda = 0.01\n").unwrap();
        let b = parse_config("[geometry]\nlambda = 0.01\n").unwrap();
        let c = parse_config("[geometry]\nlambda = 0.02\n").unwrap();
        assert_eq!(a.sha256, b.sha256);
        assert_ne!(a.sha256, c.sha256);
        assert_eq!(a.sha256.len(), 64);
    }

    #[test]
    fn value_checks() {
        let c = parse_config("[geometry]\nlambda = -1.0\nrows = 0\n[experiment]\nsizes = []\n").unwrap();
        assert!(c.config.lambda().unwrap_err().0.contains("geometry.lambda"));
        assert!(c.config.rows().unwrap_err().0.contains("geometry.rows"));
        assert!(c.config.sizes().unwrap_err().0.contains("experiment.sizes"));
        assert!(c.config.require_seed(None).unwrap_err().0.contains("experiment.seed"));
        assert_eq!(c.config.require_seed(Some(4)).unwrap(), 4);
    }
}
