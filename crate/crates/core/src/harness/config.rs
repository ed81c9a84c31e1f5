use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::connectivity::BoundaryCondition;
use crate::dynamics::{DynamicsParams, InitRule};
use crate::error::{Error, Result};
use crate::fk::FkParams;
use crate::geometry::{BoxGeometry, BoxSpec, Rotation};
use crate::spins::ising_p;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "FKDYN_OUTPUT_DIR";

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    LocalizationFk,
    LocalizationIsing,
    SpinMismatch,
    PivotalSpeed,
    SemidistanceDrift,
    PeierlsDecay,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::LocalizationFk,
        Statistic::LocalizationIsing,
        Statistic::SpinMismatch,
        Statistic::PivotalSpeed,
        Statistic::SemidistanceDrift,
        Statistic::PeierlsDecay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::LocalizationFk => "localization_fk",
            Statistic::LocalizationIsing => "localization_ising",
            Statistic::SpinMismatch => "spin_mismatch",
            Statistic::PivotalSpeed => "pivotal_speed",
            Statistic::SemidistanceDrift => "semidistance_drift",
            Statistic::PeierlsDecay => "peierls_decay",
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown statistic {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub dim: usize,
    pub side: f64,
    /// In-plane rotation angle (radians) between axes 0 and 1.
    #[serde(default)]
    pub angle: f64,
    /// Explicit rotation rows; overrides `angle`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_axis: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Ising inverse temperature; sets `p` through the random-cluster
    /// representation when `p` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_x_bc")]
    pub x_bc: BoundaryCondition,
}

fn default_q() -> f64 {
    2.0
}

fn default_x_bc() -> BoundaryCondition {
    BoundaryCondition::Wired
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default)]
    pub burn_in: u64,
    pub steps: u64,
    /// Ticks between samples; one sweep (`|E|`) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(default = "default_init")]
    pub init: InitRule,
}

fn default_init() -> InitRule {
    InitRule::XOpenYClosed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub replicas: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<Statistic>,
    /// Replica-bootstrap resamples for the summary intervals.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_statistics() -> Vec<Statistic> {
    vec![Statistic::LocalizationFk]
}

fn default_bootstrap() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    /// Distance thresholds for exceedance frequencies.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Collar width ignored by trimmed statistics.
    #[serde(default = "default_trim")]
    pub trim: f64,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<u64>,
    #[serde(default = "default_ell_grid")]
    pub ell_grid: Vec<f64>,
    /// Look-ahead of the semi-distance drift, in ticks; `|Λ|` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
    #[serde(default = "default_drift_ell")]
    pub drift_ell: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Probe edges for the closed-path statistic lie at least this far from
    /// the complement.
    #[serde(default = "default_probe_margin")]
    pub probe_margin: f64,
}

fn default_thresholds() -> Vec<f64> {
    (1..=10).map(f64::from).collect()
}
fn default_trim() -> f64 {
    2.0
}
fn default_s_grid() -> Vec<u64> {
    vec![1, 10, 100]
}
fn default_ell_grid() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 3.0]
}
fn default_drift_ell() -> f64 {
    2.0
}
fn default_n_max() -> usize {
    8
}
fn default_probe_margin() -> f64 {
    1.0
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            thresholds: default_thresholds(),
            trim: default_trim(),
            s_grid: default_s_grid(),
            ell_grid: default_ell_grid(),
            window: None,
            drift_ell: default_drift_ell(),
            n_max: default_n_max(),
            probe_margin: default_probe_margin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "box")]
    pub box_: BoxConfig,
    pub model: ModelConfig,
    pub dynamics: DynamicsConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub stats: StatsConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// A small 2D configuration.
    pub fn smoke() -> Self {
        ExperimentConfig {
            box_: BoxConfig {
                dim: 2,
                side: 8.0,
                angle: 0.0,
                rotation: None,
                center: None,
                face_axis: None,
            },
            model: ModelConfig {
                p: Some(0.9),
                beta: None,
                q: 2.0,
                x_bc: BoundaryCondition::Wired,
            },
            dynamics: DynamicsConfig {
                burn_in: 10_000,
                steps: 100_000,
                stride: None,
                init: InitRule::XOpenYClosed,
            },
            run: RunConfig {
                replicas: 2,
                seed: 1,
                output: None,
                statistics: Statistic::ALL.to_vec(),
                bootstrap: default_bootstrap(),
            },
            stats: StatsConfig {
                s_grid: vec![1, 10, 50],
                ..StatsConfig::default()
            },
        }
    }

    pub fn box_spec(&self) -> Result<BoxSpec> {
        let b = &self.box_;
        let rotation = match &b.rotation {
            Some(rows) => Rotation::from_rows(rows.clone())?,
            None if b.angle != 0.0 => Rotation::in_plane(b.dim, 0, 1, b.angle),
            None => Rotation::identity(b.dim),
        };
        let mut spec = BoxSpec::straight(b.dim, b.side).with_rotation(rotation);
        if let Some(c) = &b.center {
            spec = spec.with_center(c.clone());
        }
        if let Some(a) = b.face_axis {
            spec = spec.with_face_axis(a);
        }
        Ok(spec)
    }

    pub fn fk_params(&self) -> Result<FkParams> {
        let p = match (self.model.p, self.model.beta) {
            (Some(p), _) => p,
            (None, Some(beta)) if beta > 0.0 => ising_p(beta),
            (None, Some(beta)) => return Err(Error::Config(format!("beta must be positive, got {beta}"))),
            (None, None) => return Err(Error::Config("model needs p or beta".into())),
        };
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("p must lie strictly between 0 and 1, got {p}")));
        }
        FkParams::new(p, self.model.q).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn dynamics_params(&self) -> Result<DynamicsParams> {
        Ok(DynamicsParams {
            fk: self.fk_params()?,
            init: self.dynamics.init.clone(),
            x_bc: self.model.x_bc,
            burn_in: self.dynamics.burn_in,
            steps: self.dynamics.steps,
        })
    }

    pub fn stride(&self, geometry: &BoxGeometry) -> u64 {
        self.dynamics.stride.unwrap_or(geometry.edge_count() as u64).max(1)
    }

    pub fn window(&self, geometry: &BoxGeometry) -> u64 {
        self.stats.window.unwrap_or(geometry.vertex_count() as u64)
    }

    /// Output directory: the configured path, else the environment default,
    /// else `./fkdyn-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.run
            .output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("fkdyn-out"))
    }

    /// Checks everything, building the box; returns it for reuse.
    pub fn validate(&self) -> Result<BoxGeometry> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.run.replicas == 0 {
            return cfg("replicas must be at least 1".into());
        }
        if self.dynamics.steps == 0 {
            return cfg("steps must be positive".into());
        }
        if self.dynamics.stride == Some(0) {
            return cfg("stride must be positive".into());
        }
        if self.run.statistics.is_empty() {
            return cfg("no statistics selected".into());
        }
        self.fk_params()?;
        let geometry = BoxGeometry::build(self.box_spec().map_err(|e| Error::Config(e.to_string()))?)
            .map_err(|e| Error::Config(e.to_string()))?;
        let st = &self.stats;
        if st.thresholds.iter().any(|t| !t.is_finite()) || st.ell_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return cfg("threshold and ell grids must be finite and non-negative".into());
        }
        if !(st.trim >= 0.0 && st.drift_ell >= 0.0 && st.probe_margin >= 0.0) {
            return cfg("trim, drift_ell and probe_margin must be non-negative".into());
        }
        let stats = &self.run.statistics;
        if stats.contains(&Statistic::PivotalSpeed) {
            let cap = geometry.vertex_count() as u64;
            if st.s_grid.is_empty() || st.s_grid.iter().any(|&s| s == 0 || s > cap) {
                return cfg(format!("s_grid values must lie in 1..={cap}"));
            }
            if st.s_grid.iter().any(|&s| s > self.dynamics.steps) {
                return cfg("s_grid exceeds the run length".into());
            }
        }
        if stats.contains(&Statistic::SemidistanceDrift) && self.window(&geometry) > self.dynamics.steps {
            return cfg(format!(
                "drift window {} exceeds the run length {}",
                self.window(&geometry),
                self.dynamics.steps
            ));
        }
        if stats.contains(&Statistic::PeierlsDecay) && !(2..=40).contains(&st.n_max) {
            return cfg("n_max must lie in 2..=40".into());
        }
        Ok(geometry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_round_trips_through_toml() {
        let c = ExperimentConfig::smoke();
        let s = c.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&s).unwrap();
        assert_eq!(c, back);
        c.validate().unwrap();
    }

    #[test]
    fn minimal_file() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            [box]
            dim = 2
            side = 6
            [model]
            beta = 0.6931471805599453
            [dynamics]
            steps = 1000
            [run]
            replicas = 1
            seed = 3
            statistics = ["localization_fk", "peierls_decay"]
            "#,
        )
        .unwrap();
        assert!((c.fk_params().unwrap().p() - 0.75).abs() < 1e-12);
        assert_eq!(c.model.x_bc, BoundaryCondition::Wired);
        let g = c.validate().unwrap();
        assert_eq!(c.stride(&g), g.edge_count() as u64);
    }

    #[test]
    fn rejections() {
        let mut c = ExperimentConfig::smoke();
        c.run.replicas = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = ExperimentConfig::smoke();
        c.model.p = Some(1.0);
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::smoke();
        c.model.q = 0.5;
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::smoke();
        c.dynamics.steps = 10;
        c.stats.s_grid = vec![1];
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::smoke();
        c.box_.side = 0.5;
        assert!(c.validate().is_err());

        assert!(ExperimentConfig::from_toml_str("[box]\ndim = 2\nside = 4\nbogus = 1\n").is_err());
        assert!("nope".parse::<Statistic>().is_err());
        assert_eq!("pivotal-speed".parse::<Statistic>().unwrap(), Statistic::PivotalSpeed);
    }

    #[test]
    fn output_dir_precedence() {
        let mut c = ExperimentConfig::smoke();
        c.run.output = Some(PathBuf::from("/tmp/explicit"));
        assert_eq!(c.output_dir(), PathBuf::from("/tmp/explicit"));
    }
}
