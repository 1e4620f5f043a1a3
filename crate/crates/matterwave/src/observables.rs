//! Measurements: densities, the reduced one-body density matrix and its
//! natural occupations, momentum-channel populations, fringe visibility and
//! the fragmentation inferred from it, re-collision detection, and split
//! completeness.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::grid::Grid1D;
use crate::prop::mb2::{hermitian2_eigvals_desc, mb2_density};
use crate::prop::Trajectory;
use crate::states::{GPState, MB2State};

/// Half-width of the search window around the ideal re-collision time.
pub const RECOLLISION_HALF_WINDOW: f64 = 0.5;
/// Maximum density at the window boundary, relative to the peak, for the
/// side clouds to count as separated.
pub const SEPARATION_BOUNDARY_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    /// Integrate the position density over three windows split at half the
    /// side-cloud centroid.
    PositionWindows,
    /// Integrate the momentum density over (-inf, -k], (-k, k), [k, inf).
    MomentumBins,
}

/// Fractions of atoms in the -2k, 0k, +2k channels; sums to 1.
#[derive(Debug, Clone, Copy)]
pub struct ChannelPopulations {
    pub minus_2k: f64,
    pub zero_k: f64,
    pub plus_2k: f64,
    pub mode: MeasureMode,
}

impl ChannelPopulations {
    pub fn as_array(&self) -> [f64; 3] {
        [self.minus_2k, self.zero_k, self.plus_2k]
    }
}

/// `|phi|^2`, integrating to 1.
pub fn density_gp(s: &GPState) -> Vec<f64> {
    s.orbital.iter().map(|a| a.norm_sqr()).collect()
}

/// Per-particle density `(1/N) sum_jk rho_jk phi_j^* phi_k`, integrating to 1.
pub fn density_mb2(s: &MB2State, grid: &Grid1D) -> Vec<f64> {
    let fock = FockSpace::new(s.n_particles());
    mb2_density(s, &fock, grid)
}

/// Momentum-space density of the mean-field state, integrating to 1 in dp.
pub fn momentum_density_gp(s: &GPState, grid: &Grid1D) -> Result<Vec<f64>> {
    grid.fourier_density(&s.orbital)
}

/// Per-particle momentum density `(1/N) sum_jk rho_jk phit_j^* phit_k` built
/// from the momentum-space orbitals, integrating to 1 in dp.
pub fn momentum_density_mb2(s: &MB2State, grid: &Grid1D) -> Result<Vec<f64>> {
    let fock = FockSpace::new(s.n_particles());
    let rho = fock.one_body_rdm(&s.coeffs);
    let phit = [
        grid.to_momentum(&s.orbitals[0])?,
        grid.to_momentum(&s.orbitals[1])?,
    ];
    let inv_n = 1.0 / s.n_particles() as f64;
    let mut density = vec![0.0; grid.n()];
    for j in 0..2 {
        for k in 0..2 {
            let coef = rho[j][k] * inv_n;
            if coef == Complex64::default() {
                continue;
            }
            for (d, i) in density.iter_mut().zip(0..grid.n()) {
                *d += (coef * phit[j][i].conj() * phit[k][i]).re;
            }
        }
    }
    Ok(density)
}

/// One-body density matrix `rho_jk = <a^dag_j a_k>` in the orbital basis;
/// Hermitian with trace N.
pub fn rdm(s: &MB2State) -> [[Complex64; 2]; 2] {
    FockSpace::new(s.n_particles()).one_body_rdm(&s.coeffs)
}

/// Natural occupations `(n1/N, n2/N)`, descending. The mean-field state is
/// `(1, 0)` by construction.
pub fn natural_occupations(s: &MB2State) -> (f64, f64) {
    let eig = hermitian2_eigvals_desc(&rdm(s));
    let inv_n = 1.0 / s.n_particles() as f64;
    (eig[0] * inv_n, eig[1] * inv_n)
}

/// Channel populations from a position density: windows split at
/// `x_b` = half the centroid of the positive side cloud (density restricted
/// to x > 2/gamma). Fails unless the density at the window boundary is below
/// `SEPARATION_BOUNDARY_LIMIT` of the peak.
pub fn channel_populations_position(
    density: &[f64],
    gamma: f64,
    grid: &Grid1D,
) -> Result<ChannelPopulations> {
    if density.len() != grid.n() {
        return Err(Error::LengthMismatch {
            len: density.len(),
            n: grid.n(),
        });
    }
    let core = 2.0 / gamma;
    let (mut mass, mut moment) = (0.0, 0.0);
    for (&x, &d) in grid.x().iter().zip(density) {
        if x > core {
            mass += d;
            moment += x * d;
        }
    }
    let total = grid.integrate(density);
    if mass * grid.dx() < 1e-6 * total {
        // No positive side cloud at all.
        return Err(Error::CloudsNotSeparated {
            boundary_fraction: 1.0,
        });
    }
    let x_b = 0.5 * moment / mass;
    let peak = density.iter().cloned().fold(0.0, f64::max);
    let nearest = |target: f64| -> f64 {
        let idx = ((target - grid.x()[0]) / grid.dx()).round() as usize;
        density[idx.min(grid.n() - 1)]
    };
    let boundary = nearest(x_b).max(nearest(-x_b));
    if boundary > SEPARATION_BOUNDARY_LIMIT * peak {
        return Err(Error::CloudsNotSeparated {
            boundary_fraction: boundary / peak,
        });
    }
    let (mut minus, mut zero, mut plus) = (0.0, 0.0, 0.0);
    for (&x, &d) in grid.x().iter().zip(density) {
        if x <= -x_b {
            minus += d;
        } else if x >= x_b {
            plus += d;
        } else {
            zero += d;
        }
    }
    let sum = minus + zero + plus;
    Ok(ChannelPopulations {
        minus_2k: minus / sum,
        zero_k: zero / sum,
        plus_2k: plus / sum,
        mode: MeasureMode::PositionWindows,
    })
}

/// Channel populations from a momentum density, binned at p = -k and p = +k.
pub fn channel_populations_momentum(
    p_density: &[f64],
    k: f64,
    grid: &Grid1D,
) -> Result<ChannelPopulations> {
    if p_density.len() != grid.n() {
        return Err(Error::LengthMismatch {
            len: p_density.len(),
            n: grid.n(),
        });
    }
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "momentum bins need k > 0, got {k}"
        )));
    }
    let (mut minus, mut zero, mut plus) = (0.0, 0.0, 0.0);
    for (&p, &d) in grid.p().iter().zip(p_density) {
        if p <= -k {
            minus += d;
        } else if p >= k {
            plus += d;
        } else {
            zero += d;
        }
    }
    let sum = minus + zero + plus;
    Ok(ChannelPopulations {
        minus_2k: minus / sum,
        zero_k: zero / sum,
        plus_2k: plus / sum,
        mode: MeasureMode::MomentumBins,
    })
}

pub fn channel_populations_gp(
    s: &GPState,
    k: f64,
    mode: MeasureMode,
    gamma: f64,
    grid: &Grid1D,
) -> Result<ChannelPopulations> {
    match mode {
        MeasureMode::PositionWindows => {
            channel_populations_position(&density_gp(s), gamma, grid)
        }
        MeasureMode::MomentumBins => {
            channel_populations_momentum(&momentum_density_gp(s, grid)?, k, grid)
        }
    }
}

pub fn channel_populations_mb2(
    s: &MB2State,
    k: f64,
    mode: MeasureMode,
    gamma: f64,
    grid: &Grid1D,
) -> Result<ChannelPopulations> {
    match mode {
        MeasureMode::PositionWindows => {
            channel_populations_position(&density_mb2(s, grid), gamma, grid)
        }
        MeasureMode::MomentumBins => {
            channel_populations_momentum(&momentum_density_mb2(s, grid)?, k, grid)
        }
    }
}

/// Fringe visibility: the 0k-channel fraction.
pub fn visibility(c: &ChannelPopulations) -> f64 {
    c.zero_k
}

/// Fragmentation inferred from the visibility: `n2/N = 1 - (3/2) nu`.
/// Valid for nu in [0, 2/3]; larger values cannot arise from the two-mode
/// interference picture.
pub fn frag_from_visibility(nu: f64) -> Result<f64> {
    if !(-1e-9..=2.0 / 3.0 + 1e-9).contains(&nu) {
        return Err(Error::VisibilityOutOfRange { nu });
    }
    Ok((1.0 - 1.5 * nu).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct Recollision {
    pub time: f64,
    /// Snapshot index within the trajectory.
    pub index: usize,
    pub central_density: f64,
}

/// Finds the j-th re-collision: the snapshot maximizing the core-averaged
/// trap-center density within `j pi/omega +- RECOLLISION_HALF_WINDOW`.
pub fn detect_recollision(traj: &Trajectory, j: usize, omega: f64) -> Result<Recollision> {
    if j == 0 || !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "re-collision index must be >= 1 and omega positive, got j = {j}, omega = {omega}"
        )));
    }
    let center = j as f64 * std::f64::consts::PI / omega;
    let (lo, hi) = (
        center - RECOLLISION_HALF_WINDOW,
        center + RECOLLISION_HALF_WINDOW,
    );
    let (t_first, t_last) = match (traj.snapshots.first(), traj.snapshots.last()) {
        (Some(a), Some(b)) => (a.time, b.time),
        _ => (f64::NAN, f64::NAN),
    };
    if !(t_first <= lo + 1e-9 && t_last >= hi - 1e-9) {
        return Err(Error::RecollisionWindowNotCovered {
            t_first,
            t_last,
            lo,
            hi,
        });
    }
    let best = traj
        .snapshots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.time >= lo - 1e-12 && s.time <= hi + 1e-12)
        .max_by(|(_, a), (_, b)| a.central_density.total_cmp(&b.central_density))
        .expect("window coverage was checked");
    Ok(Recollision {
        time: best.1.time,
        index: best.0,
        central_density: best.1.central_density,
    })
}

/// Fraction of density outside the central region |x| < 2/gamma.
pub fn split_completeness(density: &[f64], gamma: f64, grid: &Grid1D) -> Result<f64> {
    if density.len() != grid.n() {
        return Err(Error::LengthMismatch {
            len: density.len(),
            n: grid.n(),
        });
    }
    let core = 2.0 / gamma;
    let outside: f64 = grid
        .x()
        .iter()
        .zip(density)
        .filter(|(&x, _)| x.abs() >= core)
        .map(|(_, &d)| d)
        .sum();
    Ok(outside * grid.dx() / grid.integrate(density))
}
