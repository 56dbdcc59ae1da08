//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use dhlab_core::{direction_grid, LayoutSpec, SpinDirection};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config_version {0}, expected {CONFIG_VERSION}")]
    Version(u32),
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub centers: [f64; 3],
    pub widths: [f64; 3],
    pub aperture_threshold: f64,
    /// Points that get their own probe mode.
    pub probe_points: Vec<f64>,
    /// Points at which locality is reported, in addition to the probe points.
    pub locality_points: Vec<f64>,
    /// Packet–probe separations, in packet widths, for the construction without auxiliary modes.
    pub noaux_separations: Vec<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        let l = LayoutSpec::default();
        Geometry {
            start: l.start,
            end: l.end,
            points: l.points,
            centers: l.centers,
            widths: l.widths,
            aperture_threshold: l.aperture_threshold,
            probe_points: vec![32.0],
            locality_points: (-12..=12).map(|k| 2.5 * k as f64).collect(),
            noaux_separations: vec![10.0, 20.0, 40.0],
        }
    }
}

impl Geometry {
    pub fn layout_spec(&self) -> LayoutSpec {
        LayoutSpec {
            start: self.start,
            end: self.end,
            points: self.points,
            centers: self.centers,
            widths: self.widths,
            aperture_threshold: self.aperture_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub kappas: Vec<f64>,
    pub signs: [i32; 3],
}

impl Default for Physics {
    fn default() -> Self {
        Physics { kappas: vec![0.02, 0.05, 0.1], signs: [1, 1, -1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Directions {
    /// Grid used by the unentangled and usual-representation sweeps.
    pub n_theta: usize,
    pub n_phi: usize,
    /// Coarser grid used by the DH-representation sweeps and tables.
    pub dh_n_theta: usize,
    pub dh_n_phi: usize,
    /// Extra uniformly random directions appended to both grids.
    pub random: usize,
    pub seed: u64,
}

impl Default for Directions {
    fn default() -> Self {
        Directions { n_theta: 10, n_phi: 10, dh_n_theta: 6, dh_n_phi: 6, random: 4, seed: 2024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub exact: f64,
    pub wsw: f64,
    pub aperture: f64,
    /// C in the C·κ² bound for first-order results.
    pub perturbative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: 1e-10, wsw: 1e-10, aperture: 1e-8, perturbative: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    pub geometry: Geometry,
    pub physics: Physics,
    pub directions: Directions,
    pub tolerances: Tolerances,
    pub output: Output,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            config_version: CONFIG_VERSION,
            geometry: Geometry::default(),
            physics: Physics::default(),
            directions: Directions::default(),
            tolerances: Tolerances::default(),
            output: Output::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    /// Checks values that parse but cannot be run. The sign product is left
    /// to the verification suite, which reports it as a failed check.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.config_version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.config_version));
        }
        if self.physics.kappas.is_empty() || self.physics.kappas.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(ConfigError::Invalid(format!("kappas {:?}", self.physics.kappas)));
        }
        if self.physics.signs.iter().any(|s| s.abs() != 1) {
            return Err(ConfigError::Invalid(format!("signs {:?} must be +1 or -1", self.physics.signs)));
        }
        let d = &self.directions;
        if d.n_theta == 0 || d.n_phi == 0 || d.dh_n_theta == 0 || d.dh_n_phi == 0 {
            return Err(ConfigError::Invalid("direction grids need at least one point".into()));
        }
        let t = &self.tolerances;
        for (name, v) in
            [("exact", t.exact), ("wsw", t.wsw), ("aperture", t.aperture), ("perturbative", t.perturbative)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!("tolerance {name} = {v}")));
            }
        }
        if self.geometry.probe_points.len() > 3 {
            return Err(ConfigError::Invalid("at most 3 probe points fit the mode cap".into()));
        }
        Ok(())
    }

    fn random_directions(&self) -> Vec<SpinDirection> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.directions.seed);
        (0..self.directions.random)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                SpinDirection::new(z.acos(), phi).expect("sampled angles are in range")
            })
            .collect()
    }

    pub fn directions(&self) -> Vec<SpinDirection> {
        let mut d = direction_grid(self.directions.n_theta, self.directions.n_phi);
        d.extend(self.random_directions());
        d
    }

    pub fn dh_directions(&self) -> Vec<SpinDirection> {
        let mut d = direction_grid(self.directions.dh_n_theta, self.directions.dh_n_phi);
        d.extend(self.random_directions());
        d
    }

    /// Locality points plus probe points, sorted and deduplicated.
    pub fn locality_points(&self) -> Vec<f64> {
        let mut p: Vec<f64> =
            self.geometry.locality_points.iter().chain(&self.geometry.probe_points).copied().collect();
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }
}

/// Parses "a,b,c" into floats.
pub fn parse_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| ConfigError::Invalid(format!("{t:?}: {e}")))).collect()
}

/// Parses "s1,s2,s3" with each entry +1/-1 (or +/-).
pub fn parse_signs(s: &str) -> Result<[i32; 3], ConfigError> {
    let v: Vec<i32> = s
        .split(',')
        .map(|t| match t.trim() {
            "+" | "+1" | "1" => Ok(1),
            "-" | "-1" => Ok(-1),
            other => Err(ConfigError::Invalid(format!("sign {other:?}"))),
        })
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<i32>| ConfigError::Invalid(format!("need three signs, got {}", v.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let d = RunConfig::default();
        d.validate().unwrap();
        let text = toml::to_string(&d).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), d);
        assert_eq!(RunConfig::from_toml("config_version = 1").unwrap(), d);
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = RunConfig::from_toml("config_version = 1\n[physics]\nkappas = [0.0, 0.05]\n").unwrap();
        assert_eq!(c.physics.kappas, vec![0.0, 0.05]);
        assert_eq!(c.physics.signs, [1, 1, -1]);
        assert_eq!(c.geometry.points, 1401);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(RunConfig::from_toml("config_version = 2"), Err(ConfigError::Version(2))));
        assert!(matches!(RunConfig::from_toml("config_version = "), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::from_toml("bogus = 1"), Err(ConfigError::Parse(_))));
        assert!(RunConfig::from_toml("[physics]\nkappas = [-0.1]").is_err());
        assert!(RunConfig::from_toml("[physics]\nsigns = [1, 2, -1]").is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("0, 0.05,0.1").unwrap(), vec![0.0, 0.05, 0.1]);
        assert!(parse_list("a").is_err());
        assert_eq!(parse_signs("+1,-1,+").unwrap(), [1, -1, 1]);
        assert!(parse_signs("1,1").is_err());
        assert!(parse_signs("1,0,1").is_err());
    }

    #[test]
    fn random_directions_are_seeded() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.directions(), b.directions());
        b.directions.seed += 1;
        assert_ne!(a.directions(), b.directions());
        assert_eq!(a.directions().len(), 104);
    }
}
