//! Run configuration read from TOML, with command-line overrides applied by
//! the caller.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smagvem_core::assembly::{EddyScaling, Smagorinsky, SMAGORINSKY_CONSTANT};
use smagvem_core::mesh::{MeshFamily, MeshKind};

use crate::error::{Result, SolverError};
use crate::newton::{InitialGuess, NewtonConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    #[serde(rename = "h_T")]
    CellDiameter,
    #[serde(rename = "h_star_F")]
    MinFace,
}

impl From<Scaling> for EddyScaling {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::CellDiameter => EddyScaling::CellDiameter,
            Scaling::MinFace => EddyScaling::MinFace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmagorinskyConfig {
    pub enabled: bool,
    pub cs: f64,
    pub scaling: Scaling,
}

impl Default for SmagorinskyConfig {
    fn default() -> Self {
        Self { enabled: true, cs: SMAGORINSKY_CONSTANT, scaling: Scaling::CellDiameter }
    }
}

impl SmagorinskyConfig {
    pub fn model(&self) -> Option<Smagorinsky> {
        self.enabled.then(|| Smagorinsky { cs: self.cs, scaling: self.scaling.into() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Usm,
    Arm,
    Imh,
}

impl From<Family> for MeshKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Usm => MeshKind::Usm,
            Family::Arm => MeshKind::Arm,
            Family::Imh => MeshKind::Imh,
        }
    }
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Usm => "usm",
            Family::Arm => "arm",
            Family::Imh => "imh",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub family: Family,
    /// Segments per side; the base grid for `imh`.
    pub n: usize,
    pub levels: usize,
    pub delta0: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { family: Family::Usm, n: 31, levels: 1, delta0: MeshFamily::DEFAULT_DELTA0 }
    }
}

impl MeshConfig {
    pub fn family(&self) -> MeshFamily {
        MeshFamily { kind: self.family.into(), n: self.n, imh_levels: self.levels, imh_delta0: self.delta0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guess {
    Zero,
    Stokes,
    Continuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSection {
    pub epsilon: f64,
    pub max_iters: usize,
    pub guess: Guess,
    /// Reynolds ladder for `continuation`; empty selects the default one.
    pub ramp: Vec<f64>,
}

impl Default for NewtonSection {
    fn default() -> Self {
        let d = NewtonConfig::default();
        Self { epsilon: d.epsilon, max_iters: d.max_iters, guess: Guess::Stokes, ramp: Vec::new() }
    }
}

impl NewtonSection {
    /// Solver settings; `default_ramp` fills an empty continuation ladder.
    pub fn solver(&self, default_ramp: impl FnOnce() -> Vec<f64>) -> NewtonConfig {
        let (initial_guess, re_ramp) = match self.guess {
            Guess::Zero => (InitialGuess::Zero, None),
            Guess::Stokes => (InitialGuess::Stokes, None),
            Guess::Continuation => {
                let ramp = if self.ramp.is_empty() { default_ramp() } else { self.ramp.clone() };
                (InitialGuess::Continuation, Some(ramp))
            }
        };
        NewtonConfig { epsilon: self.epsilon, max_iters: self.max_iters, initial_guess, re_ramp, ..NewtonConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub k: usize,
    /// Manufactured case name (`irrotational` or `p2p1`).
    pub case: Option<String>,
    /// Case parameter: `λ` for `irrotational`, `Re` for `p2p1`.
    pub case_param: Option<f64>,
    /// Cavity Reynolds number.
    pub re: Option<f64>,
    pub mesh: MeshConfig,
    pub smagorinsky: SmagorinskyConfig,
    pub newton: NewtonSection,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 2,
            case: None,
            case_param: None,
            re: None,
            mesh: MeshConfig::default(),
            smagorinsky: SmagorinskyConfig::default(),
            newton: NewtonSection::default(),
            output: None,
            seed: 0,
        }
    }
}

fn config_error(key: &str, msg: impl std::fmt::Display) -> SolverError {
    SolverError::Config(format!("`{key}`: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| SolverError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SolverError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.k) {
            return Err(config_error("k", format!("unsupported order {}, expected 2, 3 or 4", self.k)));
        }
        if !(self.smagorinsky.cs >= 0.0 && self.smagorinsky.cs.is_finite()) {
            return Err(config_error("smagorinsky.cs", "must be a non-negative number"));
        }
        if let Some(re) = self.re {
            if !(re > 0.0 && re.is_finite()) {
                return Err(config_error("re", "must be positive"));
            }
        }
        if self.mesh.n == 0 {
            return Err(config_error("mesh.n", "must be at least 1"));
        }
        if !(self.newton.epsilon > 0.0) {
            return Err(config_error("newton.epsilon", "must be positive"));
        }
        if self.newton.max_iters == 0 {
            return Err(config_error("newton.max_iters", "must be at least 1"));
        }
        if self.newton.ramp.windows(2).any(|w| w[0] >= w[1]) || self.newton.ramp.iter().any(|r| !(*r > 0.0)) {
            return Err(config_error("newton.ramp", "must be positive and increasing"));
        }
        Ok(())
    }

    /// Cavity Reynolds number, which has no default.
    pub fn cavity_re(&self) -> Result<f64> {
        self.re.ok_or_else(|| config_error("re", "required for the cavity problem"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.smagorinsky.cs, 0.1);
        assert_eq!(cfg.smagorinsky.scaling, Scaling::CellDiameter);
        assert_eq!(cfg.newton.epsilon, 1e-10);
        assert_eq!(cfg.newton.guess, Guess::Stokes);
        let err = cfg.cavity_re().unwrap_err();
        assert!(err.to_string().contains("`re`"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn anisotropic_scaling_selected() {
        let cfg = RunConfig::parse("[smagorinsky]\nscaling = \"h_star_F\"\n").unwrap();
        assert_eq!(cfg.smagorinsky.model().unwrap().scaling, EddyScaling::MinFace);
    }

    #[test]
    fn unsupported_order_rejected() {
        let err = RunConfig::parse("k = 1").unwrap_err();
        assert!(err.to_string().contains("`k`"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::parse("[newton]\ntolerance = 1e-8\n").unwrap_err();
        assert!(err.to_string().contains("tolerance"), "{err}");
        assert!(RunConfig::parse("smagorinsky.cs = -1.0").is_err());
    }

    #[test]
    fn continuation_uses_default_ramp_when_empty() {
        let cfg = RunConfig::parse("re = 1000\n[newton]\nguess = \"continuation\"\n").unwrap();
        let n = cfg.newton.solver(|| vec![100.0, 400.0]);
        assert_eq!(n.re_ramp, Some(vec![100.0, 400.0]));
        assert_eq!(n.initial_guess, InitialGuess::Continuation);
    }
}
