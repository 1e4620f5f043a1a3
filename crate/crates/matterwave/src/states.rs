//! System parameters, trap potential, and the mean-field / two-orbital
//! many-body state types with their initial-state constructors.
//!
//! The many-body state lives in the two-mode Fock basis `|N-m, m>`: `coeffs[m]`
//! is the amplitude for `m` particles in the second orbital. Orbitals are kept
//! orthonormal; the coefficient vector is kept at unit norm.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};

/// Physical parameters of the attractive 1D gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub n_particles: usize,
    /// Two-body contact coupling; negative for attraction.
    pub lambda0: f64,
    /// Inverse width of the reference soliton, `phi = sqrt(gamma/2) sech(gamma x)`.
    pub gamma: f64,
    /// Trap prefactor in `V(x) = a x^2`.
    pub trap_a: f64,
}

impl SystemParams {
    pub fn new(n_particles: usize, lambda0: f64, gamma: f64, trap_a: f64) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 particles, got {n_particles}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "soliton width parameter gamma must be positive, got {gamma}"
            )));
        }
        if !(trap_a >= 0.0) || !trap_a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "trap coefficient must be non-negative, got {trap_a}"
            )));
        }
        if !lambda0.is_finite() {
            return Err(Error::InvalidParameter("lambda0 must be finite".into()));
        }
        Ok(SystemParams {
            n_particles,
            lambda0,
            gamma,
            trap_a,
        })
    }

    /// Mean-field coupling `Lambda = lambda0 (N - 1)`.
    pub fn gp_nonlinearity(&self) -> f64 {
        self.lambda0 * (self.n_particles as f64 - 1.0)
    }

    /// Trap frequency `omega = sqrt(2a)` of `V = a x^2`.
    pub fn omega(&self) -> f64 {
        (2.0 * self.trap_a).sqrt()
    }
}

impl Default for SystemParams {
    /// N = 100 weakly attractive atoms (`lambda0 = -0.04`, so `Lambda = -3.96`)
    /// in the shallow trap `V = 0.1 x^2`.
    fn default() -> Self {
        SystemParams {
            n_particles: 100,
            lambda0: -0.04,
            gamma: 1.0,
            trap_a: 0.1,
        }
    }
}

/// Static harmonic trap `V(x) = a x^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub a: f64,
}

impl Potential {
    pub fn harmonic(a: f64) -> Self {
        Potential { a }
    }

    pub fn free() -> Self {
        Potential { a: 0.0 }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.a * x * x
    }

    pub fn on_grid(&self, grid: &Grid1D) -> Vec<f64> {
        grid.x().iter().map(|&x| self.evaluate(x)).collect()
    }
}

/// Mean-field (single-orbital) state.
#[derive(Debug, Clone)]
pub struct GPState {
    pub orbital: Field,
    pub time: f64,
}

/// Two-orbital many-body state: working orbitals plus the Fock-basis
/// coefficient vector of length `N + 1`.
#[derive(Debug, Clone)]
pub struct MB2State {
    pub orbitals: [Field; 2],
    pub coeffs: Vec<Complex64>,
    pub time: f64,
}

impl MB2State {
    pub fn n_particles(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Largest deviation from orbital orthonormality.
    pub fn orthonormality_residual(&self, grid: &Grid1D) -> f64 {
        let [p1, p2] = &self.orbitals;
        let d1 = (grid.norm_sq(p1) - 1.0).abs();
        let d2 = (grid.norm_sq(p2) - 1.0).abs();
        let off = grid.inner(p1, p2).norm();
        d1.max(d2).max(off)
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Bright-soliton profile `sqrt(gamma/2) sech(gamma x)`, renormalized on the
/// grid so the state carries exactly unit norm.
pub fn sech_soliton(gamma: f64, grid: &Grid1D) -> Result<GPState> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "soliton width parameter gamma must be positive, got {gamma}"
        )));
    }
    let amp = (gamma / 2.0).sqrt();
    let mut orbital: Field = grid
        .x()
        .iter()
        .map(|&x| Complex64::new(amp / (gamma * x).cosh(), 0.0))
        .collect();
    grid.normalize(&mut orbital);
    Ok(GPState { orbital, time: 0.0 })
}

/// Embeds a mean-field state into the two-orbital model as `|N, 0>`.
///
/// The second working orbital is the seed orthonormalized against the
/// condensate orbital; with no seed given, `tanh(gamma x) sech(gamma x)` is
/// used, which for a symmetric condensate is already orthogonal. A seed that
/// is numerically parallel to the condensate orbital is rejected.
pub fn mb2_from_gp(
    gp: &GPState,
    params: &SystemParams,
    seed: Option<&[Complex64]>,
    grid: &Grid1D,
) -> Result<MB2State> {
    let mut phi1 = gp.orbital.clone();
    grid.normalize(&mut phi1);

    let mut phi2: Field = match seed {
        Some(s) => {
            if s.len() != grid.n() {
                return Err(Error::LengthMismatch {
                    len: s.len(),
                    n: grid.n(),
                });
            }
            s.to_vec()
        }
        None => grid
            .x()
            .iter()
            .map(|&x| {
                let g = params.gamma * x;
                Complex64::new(g.tanh() / g.cosh(), 0.0)
            })
            .collect(),
    };
    grid.normalize(&mut phi2);
    let overlap = grid.inner(&phi1, &phi2);
    for (b, a) in phi2.iter_mut().zip(&phi1) {
        *b -= overlap * a;
    }
    let residual = grid.norm(&phi2);
    if residual < 1e-8 {
        return Err(Error::DegenerateSeed { residual });
    }
    let inv = 1.0 / residual;
    for b in phi2.iter_mut() {
        *b *= inv;
    }

    let mut coeffs = vec![Complex64::new(0.0, 0.0); params.n_particles + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    Ok(MB2State {
        orbitals: [phi1, phi2],
        coeffs,
        time: gp.time,
    })
}

/// Ungerade/gerade pair built from two sech humps centered at `+-d/2`:
/// `phi_u ~ s_+ - s_-`, `phi_g ~ s_+ + s_-`. Requires `gamma d > 8` so the
/// humps overlap only at the `e^{-gamma d}` level.
pub fn two_hump_orbitals(gamma: f64, d: f64, grid: &Grid1D) -> Result<(Field, Field)> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "soliton width parameter gamma must be positive, got {gamma}"
        )));
    }
    if gamma * d <= 8.0 {
        return Err(Error::InvalidParameter(format!(
            "humps too close: gamma*d = {:.3} <= 8, orbitals would hybridize",
            gamma * d
        )));
    }
    let hump = |center: f64| -> Field {
        grid.x()
            .iter()
            .map(|&x| Complex64::new(1.0 / (gamma * (x - center)).cosh(), 0.0))
            .collect()
    };
    let plus = hump(0.5 * d);
    let minus = hump(-0.5 * d);
    let mut ungerade: Field = plus.iter().zip(&minus).map(|(a, b)| a - b).collect();
    let mut gerade: Field = plus.iter().zip(&minus).map(|(a, b)| a + b).collect();
    grid.normalize(&mut ungerade);
    grid.normalize(&mut gerade);
    Ok((ungerade, gerade))
}

/// Number state `|n1, n2>` over an explicitly supplied orthonormal orbital pair.
pub fn fock_state(
    n1: usize,
    n2: usize,
    phi1: &[Complex64],
    phi2: &[Complex64],
    grid: &Grid1D,
) -> Result<MB2State> {
    let n = n1 + n2;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 particles, got {n}"
        )));
    }
    let pair = [phi1.to_vec(), phi2.to_vec()];
    let probe = MB2State {
        orbitals: pair,
        coeffs: vec![Complex64::new(1.0, 0.0); 1],
        time: 0.0,
    };
    let residual = probe.orthonormality_residual(grid);
    if residual > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "orbital pair is not orthonormal (residual {residual:.3e})"
        )));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n2] = Complex64::new(1.0, 0.0);
    Ok(MB2State {
        orbitals: probe.orbitals,
        coeffs,
        time: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn grid() -> Grid1D {
        Grid1D::new(128.0, 1024).unwrap()
    }

    #[test]
    fn params_validate() {
        assert!(SystemParams::new(100, -0.04, 1.0, 0.1).is_ok());
        assert!(SystemParams::new(1, -0.04, 1.0, 0.1).is_err());
        assert!(SystemParams::new(100, -0.04, 0.0, 0.1).is_err());
        assert!(SystemParams::new(100, -0.04, 1.0, -0.2).is_err());
        let p = SystemParams::default();
        assert_abs_diff_eq!(p.gp_nonlinearity(), -3.96, epsilon = 1e-12);
        assert_abs_diff_eq!(p.omega(), 0.2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn soliton_profile() {
        let g = grid();
        let s = sech_soliton(1.0, &g).unwrap();
        assert_relative_eq!(g.norm_sq(&s.orbital), 1.0, epsilon = 1e-12);
        let peak = s.orbital.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert_relative_eq!(peak, (0.5f64).sqrt(), epsilon = 1e-9);
        // Density half-maximum sits at x = arccosh(sqrt(2))/gamma, so the full
        // width is 2 * 0.88137; locate it by linear interpolation.
        let rho: Vec<f64> = s.orbital.iter().map(|c| c.norm_sqr()).collect();
        let half = 0.5 * rho.iter().cloned().fold(0.0, f64::max);
        let mut x_half = 0.0;
        for i in g.n() / 2..g.n() - 1 {
            if rho[i] >= half && rho[i + 1] < half {
                let t = (rho[i] - half) / (rho[i] - rho[i + 1]);
                x_half = g.x()[i] + t * g.dx();
                break;
            }
        }
        assert_abs_diff_eq!(2.0 * x_half, 1.76275, epsilon = 5e-3);
    }

    #[test]
    fn soliton_scales_with_gamma() {
        let g = grid();
        let s = sech_soliton(2.5, &g).unwrap();
        assert_relative_eq!(g.norm_sq(&s.orbital), 1.0, epsilon = 1e-12);
        let peak = s.orbital.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert_relative_eq!(peak, (2.5f64 / 2.0).sqrt(), epsilon = 1e-9);
        assert!(sech_soliton(0.0, &g).is_err());
        assert!(sech_soliton(-1.0, &g).is_err());
    }

    #[test]
    fn mb2_embedding_default_seed() {
        let g = grid();
        let params = SystemParams::default();
        let gp = sech_soliton(params.gamma, &g).unwrap();
        let mb = mb2_from_gp(&gp, &params, None, &g).unwrap();
        assert!(mb.orthonormality_residual(&g) < 1e-12);
        assert_eq!(mb.n_particles(), 100);
        assert_abs_diff_eq!(mb.coeffs[0].norm(), 1.0, epsilon = 1e-15);
        assert!(mb.coeffs[1..].iter().all(|c| c.norm() == 0.0));
        // Default seed is odd, the condensate even: the embedding must not
        // have needed any actual orthogonalization.
        let odd_check: f64 = mb.orbitals[1]
            .iter()
            .zip(g.x())
            .map(|(c, &x)| c.re * x.signum())
            .sum::<f64>();
        assert!(odd_check.abs() > 0.0);
        assert!(g.inner(&gp.orbital, &mb.orbitals[1]).norm() < 1e-13);
    }

    #[test]
    fn mb2_embedding_custom_seed_is_orthonormalized() {
        let g = grid();
        let params = SystemParams::default();
        let gp = sech_soliton(params.gamma, &g).unwrap();
        let seed: Field = g
            .x()
            .iter()
            .map(|&x| Complex64::new((-0.5 * (x - 1.0) * (x - 1.0)).exp(), 0.0))
            .collect();
        let mb = mb2_from_gp(&gp, &params, Some(&seed), &g).unwrap();
        assert!(mb.orthonormality_residual(&g) < 1e-12);
    }

    #[test]
    fn mb2_embedding_rejects_parallel_seed() {
        let g = grid();
        let params = SystemParams::default();
        let gp = sech_soliton(params.gamma, &g).unwrap();
        let seed = gp.orbital.clone();
        assert!(matches!(
            mb2_from_gp(&gp, &params, Some(&seed), &g),
            Err(Error::DegenerateSeed { .. })
        ));
    }

    #[test]
    fn two_hump_pair_is_orthonormal_with_parity() {
        let g = grid();
        let (u, ge) = two_hump_orbitals(1.0, 20.0, &g).unwrap();
        assert_relative_eq!(g.norm_sq(&u), 1.0, epsilon = 1e-12);
        assert_relative_eq!(g.norm_sq(&ge), 1.0, epsilon = 1e-12);
        assert!(g.inner(&u, &ge).norm() < 1e-12);
        let n = g.n();
        for i in 1..n {
            // x[n - i] = -x[i]
            assert_abs_diff_eq!(u[n - i].re, -u[i].re, epsilon = 1e-13);
            assert_abs_diff_eq!(ge[n - i].re, ge[i].re, epsilon = 1e-13);
        }
        // Equal mass in each half-box.
        let left: f64 = ge[..n / 2].iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dx();
        assert_relative_eq!(left, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn two_hump_normalization_deviation_tracks_overlap() {
        // For well-separated humps the normalization differs from the
        // independent-hump value sqrt(4/gamma) by ~ gamma*O/4, where O is the
        // hump overlap integral. Check sign, size, and smallness.
        let g = grid();
        let gamma = 1.0;
        let d = 20.0;
        let s_plus: Vec<f64> = g.x().iter().map(|&x| 1.0 / (gamma * (x - 0.5 * d)).cosh()).collect();
        let s_minus: Vec<f64> = g.x().iter().map(|&x| 1.0 / (gamma * (x + 0.5 * d)).cosh()).collect();
        let overlap = g.integrate(&s_plus.iter().zip(&s_minus).map(|(a, b)| a * b).collect::<Vec<_>>());
        assert!(overlap > 0.0 && overlap < 1e-6);

        let raw_gerade: Field = s_plus
            .iter()
            .zip(&s_minus)
            .map(|(a, b)| Complex64::new(a + b, 0.0))
            .collect();
        let norm = g.norm(&raw_gerade);
        let ideal = (4.0 / gamma).sqrt();
        let deviation = norm / ideal - 1.0;
        let predicted = gamma * overlap / 4.0;
        assert!(deviation > 0.0);
        assert!(deviation < 1e-6);
        assert_relative_eq!(deviation, predicted, max_relative = 0.05);
    }

    #[test]
    fn two_hump_rejects_close_humps() {
        let g = grid();
        assert!(two_hump_orbitals(1.0, 6.0, &g).is_err());
        assert!(two_hump_orbitals(0.5, 14.0, &g).is_err());
        assert!(two_hump_orbitals(1.0, 8.5, &g).is_ok());
    }

    #[test]
    fn fock_state_sets_single_coefficient() {
        let g = grid();
        let (u, ge) = two_hump_orbitals(1.0, 20.0, &g).unwrap();
        let s = fock_state(60, 40, &u, &ge, &g).unwrap();
        assert_eq!(s.n_particles(), 100);
        assert_abs_diff_eq!(s.coeffs[40].norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.coeff_norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fock_state_rejects_bad_orbitals() {
        let g = grid();
        let (u, ge) = two_hump_orbitals(1.0, 20.0, &g).unwrap();
        // Not orthogonal: mix gerade into ungerade.
        let skewed: Field = u.iter().zip(&ge).map(|(a, b)| a + 0.1 * b).collect();
        assert!(fock_state(50, 50, &skewed, &ge, &g).is_err());
        // Not normalized.
        let shrunk: Field = u.iter().map(|a| 0.9 * a).collect();
        assert!(fock_state(50, 50, &shrunk, &ge, &g).is_err());
        assert!(fock_state(1, 0, &u, &ge, &g).is_err());
    }
}
