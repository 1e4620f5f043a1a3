//! Coupled orbital + configuration-interaction dynamics of the two-orbital
//! many-body model, integrated jointly by the adaptive Runge-Kutta stepper.
//!
//! Working equations, in the gauge `<phi_j | d/dt phi_k> = 0`:
//!
//! orbitals:  `i d/dt phi_j = P [ h phi_j
//!                + lambda0 sum_{ksql} (rho^-1)_jk rho_ksql phi_s^* phi_l phi_q ]`
//! with the projector `P = 1 - sum_m |phi_m><phi_m|`, `h = -1/2 d^2/dx^2 + V`;
//!
//! coefficients:  `i d/dt C = H C`, `H` assembled from `h_jk = <phi_j|h|phi_k>`
//! and `W_jksl = lambda0 dx sum phi_j^* phi_k^* phi_s phi_l` through the
//! ladder algebra, banded with `|m - m'| <= 2`.
//!
//! `rho^-1` is the eigenvalue-floored inverse of the one-body matrix (floor
//! `eps * N`), which regularizes the singular start from `|N, 0>`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{tb_index, FockSpace};
use crate::grid::{Field, Grid1D};
use crate::states::{MB2State, Potential, SystemParams};

use super::{
    central_density_of, centroid_of, check_finite, segment_ends, AdaptiveRk45,
    PropagatorConfig, Snapshot, Trajectory, DRIFT_LIMIT, ENERGY_DRIFT_LIMIT,
};

/// Eigenvalues of a Hermitian 2x2 matrix, descending.
pub(crate) fn hermitian2_eigvals_desc(m: &[[Complex64; 2]; 2]) -> [f64; 2] {
    let a = m[0][0].re;
    let c = m[1][1].re;
    let b = 0.5 * (m[0][1] + m[1][0].conj());
    let half_tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
    [half_tr + disc, half_tr - disc]
}

/// Inverse of a Hermitian 2x2 matrix with eigenvalues floored from below.
fn floored_inverse(rho: &[[Complex64; 2]; 2], floor: f64) -> [[Complex64; 2]; 2] {
    let a = rho[0][0].re;
    let c = rho[1][1].re;
    let b = 0.5 * (rho[0][1] + rho[1][0].conj());
    let half_diff = 0.5 * (a - c);
    let disc = (half_diff * half_diff + b.norm_sqr()).sqrt();
    let l1 = 0.5 * (a + c) + disc;
    let l2 = 0.5 * (a + c) - disc;
    let il1 = 1.0 / l1.max(floor);
    let il2 = 1.0 / l2.max(floor);

    if disc <= 1e-14 * (a + c).abs().max(1.0) {
        // Numerically proportional to the identity: diagonal inverse.
        return [
            [Complex64::new(il1, 0.0), Complex64::default()],
            [Complex64::default(), Complex64::new(il2, 0.0)],
        ];
    }
    // Columns of (rho - l2 I) span the l1 eigenspace; take the larger one.
    let col1 = (Complex64::new(a - l2, 0.0), b.conj());
    let col2 = (b, Complex64::new(c - l2, 0.0));
    let (mut u0, mut u1) =
        if col1.0.norm_sqr() + col1.1.norm_sqr() >= col2.0.norm_sqr() + col2.1.norm_sqr() {
            col1
        } else {
            col2
        };
    let inv_len = 1.0 / (u0.norm_sqr() + u1.norm_sqr()).sqrt();
    u0 *= inv_len;
    u1 *= inv_len;
    let (v0, v1) = (-u1.conj(), u0.conj());
    [
        [
            il1 * u0 * u0.conj() + il2 * v0 * v0.conj(),
            il1 * u0 * u1.conj() + il2 * v0 * v1.conj(),
        ],
        [
            il1 * u1 * u0.conj() + il2 * v1 * v0.conj(),
            il1 * u1 * u1.conj() + il2 * v1 * v1.conj(),
        ],
    ]
}

/// One-body matrix elements, interaction integrals, and `h phi_j` fields for
/// the current orbitals. Used by the equations of motion and by the energy.
pub(crate) fn hamiltonian_matrices(
    phi1: &[Complex64],
    phi2: &[Complex64],
    vgrid: &[f64],
    lambda0: f64,
    grid: &Grid1D,
) -> Result<([Field; 2], [[Complex64; 2]; 2], [Complex64; 16])> {
    let orbs = [phi1, phi2];
    let mut hphi: [Field; 2] = [grid.kinetic_apply(phi1)?, grid.kinetic_apply(phi2)?];
    for (hp, orb) in hphi.iter_mut().zip(orbs) {
        for ((a, &vi), b) in hp.iter_mut().zip(vgrid).zip(orb) {
            *a += vi * b;
        }
    }
    let mut h = [[Complex64::default(); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            h[j][k] = grid.inner(orbs[j], &hphi[k]);
        }
    }
    let mut w = [Complex64::default(); 16];
    let scale = lambda0 * grid.dx();
    for j in 0..2 {
        for k in 0..2 {
            for s in 0..2 {
                for l in 0..2 {
                    let mut acc = Complex64::default();
                    for i in 0..grid.n() {
                        acc += (orbs[j][i] * orbs[k][i]).conj() * orbs[s][i] * orbs[l][i];
                    }
                    w[tb_index(j, k, s, l)] = scale * acc;
                }
            }
        }
    }
    Ok((hphi, h, w))
}

/// Many-body energy per particle, `<H>/N`.
pub fn mb2_energy(
    s: &MB2State,
    v: &Potential,
    params: &SystemParams,
    grid: &Grid1D,
) -> Result<f64> {
    let vgrid = v.on_grid(grid);
    let (_, h, w) = hamiltonian_matrices(&s.orbitals[0], &s.orbitals[1], &vgrid, params.lambda0, grid)?;
    let fock = FockSpace::new(s.n_particles());
    Ok(fock.expectation(&h, &w, &s.coeffs) / s.n_particles() as f64)
}

struct Mb2Rhs<'g> {
    grid: &'g Grid1D,
    vgrid: Vec<f64>,
    lambda0: f64,
    floor: f64,
    fock: FockSpace,
    n: usize,
    /// Constant gauge shift subtracted from the diagonal of `h`. It removes
    /// the conserved total energy's global phase rotation from the CI vector
    /// (observables are invariant; the projector makes it a no-op for the
    /// orbitals), which would otherwise force integrator steps at the
    /// `1/(N e)` scale.
    e_shift: f64,
    mix: [Vec<Complex64>; 2],
}

impl Mb2Rhs<'_> {
    fn eval(&mut self, y: &[Complex64], dy: &mut [Complex64]) -> Result<()> {
        let n = self.n;
        let (phi1, rest) = y.split_at(n);
        let (phi2, c) = rest.split_at(n);

        let (hphi, mut h, w) =
            hamiltonian_matrices(phi1, phi2, &self.vgrid, self.lambda0, self.grid)?;
        h[0][0] -= self.e_shift;
        h[1][1] -= self.e_shift;

        let rho = self.fock.one_body_rdm(c);
        let rho_inv = floored_inverse(&rho, self.floor);
        let rho2 = self.fock.two_body_rdm(c);

        let orbs = [phi1, phi2];
        for k in 0..2 {
            self.mix[k].clear();
            self.mix[k].resize(n, Complex64::default());
            for s in 0..2 {
                for q in 0..2 {
                    for l in 0..2 {
                        let coef = rho2[tb_index(k, s, q, l)];
                        if coef == Complex64::default() {
                            continue;
                        }
                        let (ps, pq, pl) = (orbs[s], orbs[q], orbs[l]);
                        for (i, m) in self.mix[k].iter_mut().enumerate() {
                            *m += coef * ps[i].conj() * pl[i] * pq[i];
                        }
                    }
                }
            }
        }

        let minus_i = Complex64::new(0.0, -1.0);
        let (dphi1, drest) = dy.split_at_mut(n);
        let (dphi2, dc) = drest.split_at_mut(n);
        for (j, dphi) in [dphi1, dphi2].into_iter().enumerate() {
            for i in 0..n {
                dphi[i] = hphi[j][i]
                    + self.lambda0 * (rho_inv[j][0] * self.mix[0][i] + rho_inv[j][1] * self.mix[1][i]);
            }
            // Project out both orbitals: enforces <phi_m | d/dt phi_j> = 0.
            for m in 0..2 {
                let ov = self.grid.inner(orbs[m], dphi);
                for (d, o) in dphi.iter_mut().zip(orbs[m]) {
                    *d -= ov * o;
                }
            }
            for d in dphi.iter_mut() {
                *d *= minus_i;
            }
        }

        self.fock.apply_hamiltonian(&h, &w, c, dc);
        for d in dc.iter_mut() {
            *d *= minus_i;
        }
        Ok(())
    }
}

fn pack(s: &MB2State) -> Vec<Complex64> {
    let mut y = Vec::with_capacity(2 * s.orbitals[0].len() + s.coeffs.len());
    y.extend_from_slice(&s.orbitals[0]);
    y.extend_from_slice(&s.orbitals[1]);
    y.extend_from_slice(&s.coeffs);
    y
}

fn unpack(y: &[Complex64], n: usize, time: f64) -> MB2State {
    MB2State {
        orbitals: [y[..n].to_vec(), y[n..2 * n].to_vec()],
        coeffs: y[2 * n..].to_vec(),
        time,
    }
}

/// Per-particle position density `(1/N) sum_jk rho_jk phi_j^* phi_k`.
pub(crate) fn mb2_density(s: &MB2State, fock: &FockSpace, grid: &Grid1D) -> Vec<f64> {
    let rho = fock.one_body_rdm(&s.coeffs);
    let inv_n = 1.0 / s.n_particles() as f64;
    let n = grid.n();
    let mut density = vec![0.0; n];
    for j in 0..2 {
        for k in 0..2 {
            let coef = rho[j][k] * inv_n;
            if coef == Complex64::default() {
                continue;
            }
            let (pj, pk) = (&s.orbitals[j], &s.orbitals[k]);
            for (d, i) in density.iter_mut().zip(0..n) {
                *d += (coef * pj[i].conj() * pk[i]).re;
            }
        }
    }
    density
}

fn mb2_snapshot(
    s: &MB2State,
    fock: &FockSpace,
    v: &Potential,
    params: &SystemParams,
    grid: &Grid1D,
) -> Result<Snapshot> {
    let density = mb2_density(s, fock, grid);
    let rho = fock.one_body_rdm(&s.coeffs);
    let occ = hermitian2_eigvals_desc(&rho);
    let inv_n = 1.0 / s.n_particles() as f64;
    Ok(Snapshot {
        time: s.time,
        norm: s.coeff_norm(),
        energy: mb2_energy(s, v, params, grid)?,
        occupations: [occ[0] * inv_n, occ[1] * inv_n],
        centroid: centroid_of(&density, grid),
        central_density: central_density_of(&density, grid, params.gamma),
        density,
    })
}

pub fn mb2_propagate(
    s: &MB2State,
    v: &Potential,
    params: &SystemParams,
    cfg: &PropagatorConfig,
    grid: &Grid1D,
) -> Result<(MB2State, Trajectory)> {
    mb2_propagate_observed(s, v, params, cfg, grid, |_| {})
}

/// Propagates to `cfg.t_end` with snapshots every `cfg.snapshot_stride`.
///
/// After every accepted step the orbitals are re-orthonormalized
/// (Gram-Schmidt, first orbital as reference) and the coefficient vector is
/// renormalized; the corrections are of integrator-error size and keeping
/// them from accumulating is what holds the orthonormality invariant over
/// long runs. Pre-correction deviations are monitored and abort the run if
/// they ever exceed the drift limits.
pub fn mb2_propagate_observed(
    s: &MB2State,
    v: &Potential,
    params: &SystemParams,
    cfg: &PropagatorConfig,
    grid: &Grid1D,
    mut observer: impl FnMut(&MB2State),
) -> Result<(MB2State, Trajectory)> {
    cfg.validate()?;
    let n = grid.n();
    if s.orbitals[0].len() != n || s.orbitals[1].len() != n {
        return Err(Error::LengthMismatch {
            len: s.orbitals[0].len(),
            n,
        });
    }
    if s.coeffs.len() != params.n_particles + 1 {
        return Err(Error::InvalidParameter(format!(
            "coefficient vector length {} does not match N + 1 = {}",
            s.coeffs.len(),
            params.n_particles + 1
        )));
    }
    let residual = s.orthonormality_residual(grid);
    if residual > DRIFT_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "initial orbitals not orthonormal (residual {residual:.3e})"
        )));
    }

    let npart = params.n_particles;
    let fock = FockSpace::new(npart);
    let e0 = mb2_energy(s, v, params, grid)?;
    let mut rhs = Mb2Rhs {
        grid,
        vgrid: v.on_grid(grid),
        lambda0: params.lambda0,
        floor: cfg.eps_reg * npart as f64,
        fock: fock.clone(),
        n,
        e_shift: e0,
        mix: [Vec::new(), Vec::new()],
    };

    let rk = AdaptiveRk45::new(cfg.rtol, cfg.atol);
    let mut y = pack(s);
    let mut dt = cfg.dt;
    let mut state = s.clone();
    let mut trajectory = Trajectory::default();
    trajectory.push(mb2_snapshot(&state, &fock, v, params, grid)?);
    observer(&state);

    let mut max_norm_dev = 0.0f64;
    let mut max_ortho_dev = 0.0f64;

    for t_target in segment_ends(s.time, cfg.t_end, cfg.snapshot_stride) {
        {
            let rhs = &mut rhs;
            let max_norm_dev = &mut max_norm_dev;
            let max_ortho_dev = &mut max_ortho_dev;
            rk.integrate_segment(
                state.time,
                t_target,
                &mut y,
                &mut dt,
                |_t, y, dy| {
                    // Non-finite input surfaces as a rejected step upstream.
                    if rhs.eval(y, dy).is_err() {
                        dy.fill(Complex64::new(f64::NAN, 0.0));
                    }
                },
                |_t, y| {
                    let (phi1, rest) = y.split_at_mut(n);
                    let (phi2, c) = rest.split_at_mut(n);
                    let n1 = grid.norm(phi1);
                    *max_norm_dev = max_norm_dev.max((n1 - 1.0).abs());
                    if n1 > 0.0 {
                        let inv = 1.0 / n1;
                        phi1.iter_mut().for_each(|a| *a *= inv);
                    }
                    let ov = grid.inner(phi1, phi2);
                    *max_ortho_dev = max_ortho_dev.max(ov.norm());
                    for (b, a) in phi2.iter_mut().zip(phi1.iter()) {
                        *b -= ov * *a;
                    }
                    let n2 = grid.norm(phi2);
                    *max_ortho_dev = max_ortho_dev.max((n2 - 1.0).abs());
                    if n2 > 0.0 {
                        let inv = 1.0 / n2;
                        phi2.iter_mut().for_each(|a| *a *= inv);
                    }
                    let cn = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                    *max_norm_dev = max_norm_dev.max((cn - 1.0).abs());
                    if cn > 0.0 {
                        let inv = 1.0 / cn;
                        c.iter_mut().for_each(|x| *x *= inv);
                    }
                },
            )?;
        }

        check_finite(&y, t_target)?;
        if max_norm_dev > DRIFT_LIMIT {
            return Err(Error::NormDrift {
                t: t_target,
                drift: max_norm_dev,
                limit: DRIFT_LIMIT,
            });
        }
        if max_ortho_dev > DRIFT_LIMIT {
            return Err(Error::OrthonormalityDrift {
                t: t_target,
                drift: max_ortho_dev,
                limit: DRIFT_LIMIT,
            });
        }
        state = unpack(&y, n, t_target);
        let snap = mb2_snapshot(&state, &fock, v, params, grid)?;
        let e_drift = (snap.energy - e0).abs() / e0.abs().max(1e-9);
        if e_drift > ENERGY_DRIFT_LIMIT {
            return Err(Error::EnergyDrift {
                t: t_target,
                drift: e_drift,
                limit: ENERGY_DRIFT_LIMIT,
            });
        }
        trajectory.push(snap);
        observer(&state);
    }
    Ok((state, trajectory))
}
