//! Plain-text (TOML) problem configuration.

use std::path::Path;

use serde::Deserialize;

use super::params::MpetParameters;
use super::preset::physiological_preset;
use crate::error::{Error, Result};
use crate::mesh::BoundaryTag;

/// Named starting points that a configuration file refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Accuracy,
    Annulus,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSection {
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub storage: Option<Vec<f64>>,
    pub conductivity: Option<Vec<f64>>,
    pub exchange: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// Values of `1/h` for unit-square studies.
    pub levels: Option<Vec<usize>>,
    pub r_inner: Option<f64>,
    pub r_outer: Option<f64>,
    pub n_radial: Option<usize>,
    pub n_angular: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub final_time: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    /// `coupled` or `decoupled`.
    pub kind: Option<String>,
    pub iterations: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    /// Tags carrying Dirichlet data; the remaining unit-square sides get the
    /// natural data of the exact solution.
    pub dirichlet: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub preset: Preset,
    #[serde(default)]
    pub parameters: ParameterSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub boundary: BoundarySection,
}

impl ProblemConfig {
    pub fn new(preset: Preset) -> Self {
        Self {
            preset,
            parameters: ParameterSection::default(),
            mesh: MeshSection::default(),
            time: TimeSection::default(),
            scheme: SchemeSection::default(),
            boundary: BoundarySection::default(),
        }
    }

    /// Preset parameters with the overrides of the `[parameters]` section.
    pub fn parameters(&self) -> Result<MpetParameters> {
        let base = match self.preset {
            Preset::Accuracy => MpetParameters::accuracy(0.3, 1.0, 1.0)?,
            Preset::Annulus => physiological_preset()?.params,
        };
        let p = &self.parameters;
        MpetParameters::new(
            p.young.unwrap_or(base.young),
            p.poisson.unwrap_or(base.poisson),
            p.alpha.clone().unwrap_or(base.alpha),
            p.storage.clone().unwrap_or(base.storage),
            p.conductivity.clone().unwrap_or(base.conductivity),
            p.exchange.clone().unwrap_or(base.exchange),
        )
    }

    pub fn dirichlet_tags(&self) -> Result<Option<Vec<BoundaryTag>>> {
        self.boundary
            .dirichlet
            .as_ref()
            .map(|names| names.iter().map(|n| n.parse()).collect())
            .transpose()
    }
}

pub fn parse_config(text: &str) -> Result<ProblemConfig> {
    let cfg: ProblemConfig = toml::from_str(text).map_err(|e| Error::Configuration(e.message().to_string()))?;
    // surface parameter errors at load time
    cfg.parameters()?;
    cfg.dirichlet_tags()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_overrides() {
        let cfg = parse_config(
            r#"
            preset = "accuracy"
            [parameters]
            poisson = 0.49999
            storage = [0.0, 0.0]
            [mesh]
            levels = [4, 8]
            [boundary]
            dirichlet = ["Gamma1", "gamma3"]
            "#,
        )
        .unwrap();
        let p = cfg.parameters().unwrap();
        assert_eq!(p.poisson, 0.49999);
        assert_eq!(p.storage, vec![0.0, 0.0]);
        assert_eq!(p.conductivity, vec![1.0, 1.0]);
        assert_eq!(cfg.mesh.levels, Some(vec![4, 8]));
        assert_eq!(cfg.dirichlet_tags().unwrap(), Some(vec![BoundaryTag::Gamma1, BoundaryTag::Gamma3]));
    }

    #[test]
    fn annulus_defaults() {
        let cfg = parse_config("preset = \"annulus\"").unwrap();
        assert_eq!(cfg.parameters().unwrap().networks(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_config("preset = \"cube\""), Err(Error::Configuration(_))));
        assert!(matches!(parse_config("preset = \"accuracy\"\nfoo = 1"), Err(Error::Configuration(_))));
        assert!(matches!(
            parse_config("preset = \"accuracy\"\n[parameters]\npoisson = 0.5"),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            parse_config("preset = \"accuracy\"\n[boundary]\ndirichlet = [\"Gamma9\"]"),
            Err(Error::Argument(_))
        ));
    }
}
