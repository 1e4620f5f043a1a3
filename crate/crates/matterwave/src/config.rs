//! Run configuration: the JSON schema consumed by the command line, with
//! defaults matching the reference interferometer run, and conversions into
//! the solver-facing types.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::prop::PropagatorConfig;
use crate::pulses::Pulse;
use crate::states::{Potential, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Mean-field (single orbital).
    Gp,
    /// Two-orbital many-body dynamics.
    Mb2,
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Solver::Gp => write!(f, "gp"),
            Solver::Mb2 => write!(f, "mb2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda0: f64,
    pub gamma: f64,
    pub trap_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub k: f64,
    pub chi: f64,
}

/// Recombination pulse. Its momentum defaults to the splitter's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse2Section {
    #[serde(default)]
    pub k: Option<f64>,
    pub chi: f64,
    #[serde(default = "default_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecollisionSection {
    /// 1-based re-collision index; the j-th return to the trap center.
    pub j: usize,
    /// Width of the timing band swept around the detected re-collision.
    #[serde(default = "default_window")]
    pub window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub eps_reg: f64,
}

fn default_true() -> bool {
    true
}

fn default_window() -> f64 {
    0.1
}

fn default_t_sep() -> f64 {
    4.0
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let p = PropagatorConfig::default();
        IntegratorSection {
            dt: p.dt,
            rtol: p.rtol,
            atol: p.atol,
            eps_reg: p.eps_reg,
        }
    }
}

impl Default for Pulse2Section {
    fn default() -> Self {
        Pulse2Section {
            k: None,
            chi: std::f64::consts::PI,
            enabled: true,
        }
    }
}

impl Default for RecollisionSection {
    fn default() -> Self {
        RecollisionSection {
            j: 1,
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub system: SystemSection,
    pub grid: GridSection,
    pub solver: Solver,
    pub pulse1: PulseSection,
    #[serde(default)]
    pub pulse2: Pulse2Section,
    #[serde(default)]
    pub recollision: RecollisionSection,
    /// Free-flight time between recombination and channel readout.
    #[serde(default = "default_t_sep")]
    pub t_sep: f64,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl Default for ProtocolConfig {
    /// The reference run: 100 weakly attractive atoms in a shallow trap,
    /// split and recombined by k = 5 pi-pulses at the first re-collision.
    fn default() -> Self {
        ProtocolConfig {
            system: SystemSection {
                n: 100,
                lambda0: -0.04,
                gamma: 1.0,
                trap_a: 0.1,
            },
            grid: GridSection {
                length: 128.0,
                n: 1024,
            },
            solver: Solver::Gp,
            pulse1: PulseSection {
                k: 5.0,
                chi: std::f64::consts::PI,
            },
            pulse2: Pulse2Section::default(),
            recollision: RecollisionSection::default(),
            t_sep: default_t_sep(),
            integrator: IntegratorSection::default(),
            output_dir: None,
        }
    }
}

impl ProtocolConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProtocolConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        SystemParams::new(
            self.system.n,
            self.system.lambda0,
            self.system.gamma,
            self.system.trap_a,
        )
    }

    pub fn build_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.length, self.grid.n)
    }

    pub fn potential(&self) -> Potential {
        Potential::harmonic(self.system.trap_a)
    }

    pub fn pulse1(&self) -> Result<Pulse> {
        Pulse::splitter(self.pulse1.k, self.pulse1.chi)
    }

    pub fn pulse2_momentum(&self) -> f64 {
        self.pulse2.k.unwrap_or(self.pulse1.k)
    }

    pub fn pulse2(&self) -> Result<Pulse> {
        Pulse::splitter(self.pulse2_momentum(), self.pulse2.chi)
    }

    /// Propagator settings for a segment ending at `t_end`.
    pub fn propagator(&self, t_end: f64) -> PropagatorConfig {
        PropagatorConfig {
            dt: self.integrator.dt,
            t_end,
            rtol: self.integrator.rtol,
            atol: self.integrator.atol,
            eps_reg: self.integrator.eps_reg,
            ..PropagatorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system_params()?;
        let grid = self.build_grid()?;
        grid.pulse_headroom(self.pulse1.k.max(self.pulse2_momentum()), self.system.gamma)?;
        self.pulse1()?;
        self.pulse2()?;
        self.propagator(0.0).validate()?;
        if !(self.t_sep > 0.0) || !self.t_sep.is_finite() {
            return Err(Error::Config(format!(
                "t_sep must be positive, got {}",
                self.t_sep
            )));
        }
        if self.recollision.j == 0 {
            return Err(Error::Config(
                "recollision index j is 1-based and must be at least 1".into(),
            ));
        }
        if !(self.recollision.window >= 0.0) || !self.recollision.window.is_finite() {
            return Err(Error::Config(format!(
                "recollision window must be non-negative, got {}",
                self.recollision.window
            )));
        }
        if self.recollision.j > 0 && !(self.system.trap_a > 0.0) {
            return Err(Error::Config(
                "re-collisions need a trap; set system.trap_a > 0".into(),
            ));
        }
        Ok(())
    }
}
