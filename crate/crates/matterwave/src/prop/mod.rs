//! Time evolution: split-step Fourier mean-field propagation (real and
//! imaginary time) and adaptive joint orbital+CI integration for the
//! two-orbital many-body model.

mod gp;
pub(crate) mod mb2;
mod rk45;

pub use gp::{gp_energy, gp_propagate, gp_propagate_observed, gp_relax};
pub use mb2::{mb2_energy, mb2_propagate, mb2_propagate_observed};
pub use rk45::AdaptiveRk45;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Energy-rate threshold ending imaginary-time relaxation.
pub const RELAX_ENERGY_RATE: f64 = 1e-10;
/// Abort threshold for norm and orthonormality drift during propagation.
pub const DRIFT_LIMIT: f64 = 1e-6;
/// Abort threshold for relative energy drift in many-body runs. An
/// instability catcher, not an accuracy target: at the default tolerances the
/// worst honest accumulation (post-recombination flights, where the energy
/// scale is kinetic-dominated) stays near 1e-5, while genuine blowups pass
/// 1e-2 within a few steps.
pub const ENERGY_DRIFT_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    /// Split-step size; also the initial step of the adaptive integrator.
    pub dt: f64,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Density-matrix eigenvalue floor, in units of the particle number.
    pub eps_reg: f64,
    pub snapshot_stride: f64,
    pub max_relax_steps: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            dt: 1e-3,
            t_end: 0.0,
            rtol: 1e-8,
            atol: 1e-10,
            eps_reg: 1e-8,
            snapshot_stride: 0.05,
            max_relax_steps: 400_000,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.snapshot_stride > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "snapshot stride must be positive, got {}",
                self.snapshot_stride
            )));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive, got rtol = {}, atol = {}",
                self.rtol, self.atol
            )));
        }
        if !(self.eps_reg >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization must be non-negative, got {}",
                self.eps_reg
            )));
        }
        Ok(())
    }
}

/// Observables recorded at one snapshot time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub norm: f64,
    /// Energy per particle.
    pub energy: f64,
    /// Natural occupation fractions, descending; `[1, 0]` for mean-field runs.
    pub occupations: [f64; 2],
    pub centroid: f64,
    /// Density averaged over the central core |x| <= 1/gamma. A point sample
    /// at x = 0 would be useless: odd split states keep an exact node there.
    pub central_density: f64,
    /// Position density, unit normalized.
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn push(&mut self, s: Snapshot) {
        if let Some(last) = self.snapshots.last() {
            assert!(s.time > last.time, "snapshot times must increase");
        }
        self.snapshots.push(s);
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Keeps only snapshots with `t <= t_cut + tolerance`.
    pub fn truncate_after(&mut self, t_cut: f64) {
        self.snapshots.retain(|s| s.time <= t_cut + 1e-9);
    }

    /// Appends another trajectory, skipping a duplicated boundary snapshot.
    pub fn extend(&mut self, other: Trajectory) {
        let t_last = self.snapshots.last().map(|s| s.time);
        for s in other.snapshots {
            if let Some(t) = t_last {
                if s.time <= t + 1e-9 {
                    continue;
                }
            }
            self.snapshots.push(s);
        }
    }
}

/// Snapshot boundary times for a run from `t0` to `t_end`: multiples of the
/// stride relative to `t0`, plus the exact endpoint.
pub(crate) fn segment_ends(t0: f64, t_end: f64, stride: f64) -> Vec<f64> {
    let mut ends = Vec::new();
    let mut i = 1u64;
    loop {
        let t = t0 + i as f64 * stride;
        if t >= t_end - 1e-12 {
            break;
        }
        ends.push(t);
        i += 1;
    }
    if t_end > t0 + 1e-12 {
        ends.push(t_end);
    }
    ends
}

pub(crate) fn centroid_of(density: &[f64], grid: &Grid1D) -> f64 {
    grid.dx()
        * density
            .iter()
            .zip(grid.x())
            .map(|(&rho, &x)| rho * x)
            .sum::<f64>()
}

pub(crate) fn central_density_of(density: &[f64], grid: &Grid1D, gamma: f64) -> f64 {
    let half = 1.0 / gamma;
    let mass: f64 = density
        .iter()
        .zip(grid.x())
        .filter(|(_, &x)| x.abs() <= half)
        .map(|(&rho, _)| rho)
        .sum();
    mass * grid.dx() / (2.0 * half)
}

pub(crate) fn check_finite(y: &[Complex64], t: f64) -> Result<()> {
    if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFiniteState { t });
    }
    Ok(())
}
