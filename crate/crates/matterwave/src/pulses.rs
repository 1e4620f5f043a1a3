//! Sudden laser pulses: splitter `e^{ikx} + e^{-ikx - i chi}` and boost
//! `e^{ikx}` multipliers, applied to mean-field and two-orbital states.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D, TWO_PI};
use crate::states::{GPState, MB2State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseForm {
    Splitter,
    Boost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    /// Imparted momentum, non-negative.
    pub k: f64,
    /// Imprinted phase, stored in `[0, 2 pi)`.
    pub chi: f64,
    pub form: PulseForm,
}

impl Pulse {
    pub fn splitter(k: f64, chi: f64) -> Result<Pulse> {
        Self::validate_k(k)?;
        Ok(Pulse {
            k,
            chi: chi.rem_euclid(TWO_PI),
            form: PulseForm::Splitter,
        })
    }

    pub fn boost(k: f64) -> Result<Pulse> {
        Self::validate_k(k)?;
        Ok(Pulse {
            k,
            chi: 0.0,
            form: PulseForm::Boost,
        })
    }

    fn validate_k(k: f64) -> Result<()> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pulse momentum must be finite and non-negative, got {k}"
            )));
        }
        Ok(())
    }

    pub fn multiplier(&self, x: f64) -> Complex64 {
        match self.form {
            PulseForm::Splitter => {
                Complex64::from_polar(1.0, self.k * x)
                    + Complex64::from_polar(1.0, -self.k * x - self.chi)
            }
            PulseForm::Boost => Complex64::from_polar(1.0, self.k * x),
        }
    }

    /// Pulse multiplier sampled on the grid. Warns when `k` is off the
    /// momentum grid, which leaves small periodic-boundary imprinting
    /// artifacts.
    pub fn on_grid(&self, grid: &Grid1D) -> Field {
        let ratio = self.k / grid.dp();
        if (ratio - ratio.round()).abs() > 1e-9 {
            log::warn!(
                "pulse momentum k = {} is not an integer multiple of 2*pi/L = {:.6}; \
                 imprint acquires boundary artifacts",
                self.k,
                grid.dp()
            );
        }
        grid.x().iter().map(|&x| self.multiplier(x)).collect()
    }
}

/// Multiplies the condensate orbital by the pulse function and renormalizes.
pub fn apply_pulse_gp(s: &GPState, pulse: &Pulse, grid: &Grid1D) -> GPState {
    let m = pulse.on_grid(grid);
    let mut orbital: Field = s.orbital.iter().zip(&m).map(|(a, b)| a * b).collect();
    grid.normalize(&mut orbital);
    GPState {
        orbital,
        time: s.time,
    }
}

/// Multiplies both working orbitals by the pulse function, then restores
/// orthonormality by Gram-Schmidt with the first orbital as reference. The
/// coefficient vector is kept and renormalized.
///
/// A splitter is not unitary per orbital, so keeping `C` fixed is exact only
/// when the multiplied orbitals stay (nearly) orthogonal, i.e. the
/// parity-definite configurations. Cases where the multiplier strongly mixes
/// the pair are refused instead of silently reinterpreted.
pub fn apply_pulse_mb(s: &MB2State, pulse: &Pulse, grid: &Grid1D) -> Result<MB2State> {
    let m = pulse.on_grid(grid);
    let mut phi1: Field = s.orbitals[0].iter().zip(&m).map(|(a, b)| a * b).collect();
    let mut phi2: Field = s.orbitals[1].iter().zip(&m).map(|(a, b)| a * b).collect();
    grid.normalize(&mut phi1);
    grid.normalize(&mut phi2);

    let overlap = grid.inner(&phi1, &phi2);
    if overlap.norm() > 0.5 {
        return Err(Error::PulseOverlapTooLarge {
            overlap: overlap.norm(),
        });
    }
    for (b, a) in phi2.iter_mut().zip(&phi1) {
        *b -= overlap * a;
    }
    grid.normalize(&mut phi2);

    let mut coeffs = s.coeffs.clone();
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        let inv = 1.0 / norm;
        for c in coeffs.iter_mut() {
            *c *= inv;
        }
    }
    Ok(MB2State {
        orbitals: [phi1, phi2],
        coeffs,
        time: s.time,
    })
}

/// Populations of the `-2k, 0, +2k` momentum channels produced by the
/// coherent double pulse, from expanding
/// `(e^{ikx} + e^{-ikx - i chi1})(e^{ikx} + e^{-ikx - i chi2})`
/// and assuming the three channels are orthogonal.
pub fn pulse_channel_algebra(chi1: f64, chi2: f64) -> [f64; 3] {
    let a_plus = Complex64::new(1.0, 0.0);
    let a_zero = Complex64::from_polar(1.0, -chi1) + Complex64::from_polar(1.0, -chi2);
    let a_minus = Complex64::from_polar(1.0, -(chi1 + chi2));
    let w = [a_minus.norm_sqr(), a_zero.norm_sqr(), a_plus.norm_sqr()];
    let total: f64 = w.iter().sum();
    [w[0] / total, w[1] / total, w[2] / total]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{mb2_from_gp, sech_soliton, SystemParams};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(128.0, 1024).unwrap()
    }

    #[test]
    fn pulse_construction() {
        let p = Pulse::splitter(5.0, -PI).unwrap();
        assert_abs_diff_eq!(p.chi, PI, epsilon = 1e-12);
        let q = Pulse::splitter(5.0, 3.0 * PI).unwrap();
        assert_abs_diff_eq!(q.chi, PI, epsilon = 1e-12);
        assert!(Pulse::splitter(-1.0, 0.0).is_err());
        assert!(Pulse::boost(f64::NAN).is_err());
    }

    #[test]
    fn pi_splitter_turns_even_into_odd() {
        let g = grid();
        let s = sech_soliton(1.0, &g).unwrap();
        let out = apply_pulse_gp(&s, &Pulse::splitter(5.0, PI).unwrap(), &g);
        let n = g.n();
        for i in 1..n {
            let a = out.orbital[i];
            let b = out.orbital[n - i];
            assert_abs_diff_eq!((a + b).norm(), 0.0, epsilon = 1e-12);
        }
        // e^{ikx} - e^{-ikx} = 2i sin(kx): moduli match sin(5x) sech(x).
        let mut expected: Vec<f64> = g
            .x()
            .iter()
            .map(|&x| ((5.0 * x).sin() / x.cosh()).abs())
            .collect();
        let scale = 1.0 / g.integrate(&expected.iter().map(|e| e * e).collect::<Vec<_>>()).sqrt();
        for e in expected.iter_mut() {
            *e *= scale;
        }
        for (a, e) in out.orbital.iter().zip(&expected) {
            assert_abs_diff_eq!(a.norm(), *e, epsilon = 1e-10);
        }
        assert_relative_eq!(g.norm_sq(&out.orbital), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn boost_shifts_momentum_centroid_by_k() {
        let g = grid();
        let s = sech_soliton(1.0, &g).unwrap();
        let out = apply_pulse_gp(&s, &Pulse::boost(5.0).unwrap(), &g);
        let nd = g.fourier_density(&out.orbital).unwrap();
        let centroid: f64 = nd.iter().zip(g.p()).map(|(v, &p)| v * p).sum::<f64>() * g.dp();
        assert_abs_diff_eq!(centroid, 5.0, epsilon = 1e-8);
        // Boost leaves the position density untouched.
        for (a, b) in out.orbital.iter().zip(&s.orbital) {
            assert_abs_diff_eq!(a.norm_sqr(), b.norm_sqr(), epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_phase_splitter_matches_direct_multiplication() {
        let g = grid();
        let s = sech_soliton(1.0, &g).unwrap();
        let pulse = Pulse::splitter(5.0, 0.0).unwrap();
        let out = apply_pulse_gp(&s, &pulse, &g);

        let mut direct: Field = s
            .orbital
            .iter()
            .zip(g.x())
            .map(|(a, &x)| a * (Complex64::from_polar(1.0, 5.0 * x) + Complex64::from_polar(1.0, -5.0 * x)))
            .collect();
        g.normalize(&mut direct);
        for (a, b) in out.orbital.iter().zip(&direct) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-13);
        }

        // Position density is the input modulated by cos^2(kx); momentum
        // density develops peaks at +-k with equal masses.
        let nd = g.fourier_density(&out.orbital).unwrap();
        let peak_p = nd
            .iter()
            .zip(g.p())
            .filter(|(_, &p)| p > 2.0)
            .max_by(|a, b| a.0.partial_cmp(b.0).unwrap())
            .map(|(_, &p)| p)
            .unwrap();
        assert_abs_diff_eq!(peak_p, 5.0, epsilon = g.dp());
        let plus: f64 = nd.iter().zip(g.p()).filter(|(_, &p)| p > 0.0).map(|(v, _)| v).sum();
        let minus: f64 = nd.iter().zip(g.p()).filter(|(_, &p)| p < 0.0).map(|(v, _)| v).sum();
        assert_relative_eq!(plus, minus, epsilon = 1e-10);
    }

    #[test]
    fn mb_pi_splitter_swaps_parities_without_correction() {
        let g = grid();
        let params = SystemParams::default();
        let gp = sech_soliton(1.0, &g).unwrap();
        let s = mb2_from_gp(&gp, &params, None, &g).unwrap();
        let pulse = Pulse::splitter(5.0, PI).unwrap();
        let out = apply_pulse_mb(&s, &pulse, &g).unwrap();
        assert!(out.orthonormality_residual(&g) < 1e-12);
        let n = g.n();
        for i in 1..n {
            // phi1 becomes odd, phi2 becomes even.
            assert!((out.orbitals[0][i] + out.orbitals[0][n - i]).norm() < 1e-10);
            assert!((out.orbitals[1][i] - out.orbitals[1][n - i]).norm() < 1e-10);
        }
        // Gram-Schmidt was a no-op: phi2 equals the bare multiplied orbital.
        let m = pulse.on_grid(&g);
        let mut bare: Field = s.orbitals[1].iter().zip(&m).map(|(a, b)| a * b).collect();
        g.normalize(&mut bare);
        let correction: f64 = out.orbitals[1]
            .iter()
            .zip(&bare)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * g.dx();
        assert!(correction.sqrt() < 1e-10);
        assert_abs_diff_eq!(out.coeffs[0].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mb_boost_preserves_gram_matrix() {
        let g = grid();
        let params = SystemParams::default();
        let gp = sech_soliton(1.0, &g).unwrap();
        let seed: Field = g
            .x()
            .iter()
            .map(|&x| Complex64::new((-0.3 * (x - 0.8).powi(2)).exp(), 0.2 * (-0.1 * x * x).exp()))
            .collect();
        let s = mb2_from_gp(&gp, &params, Some(&seed), &g).unwrap();
        let out = apply_pulse_mb(&s, &Pulse::boost(5.0).unwrap(), &g).unwrap();
        assert!(out.orthonormality_residual(&g) < 1e-12);
        for (c_out, c_in) in out.coeffs.iter().zip(&s.coeffs) {
            assert_abs_diff_eq!((c_out - c_in).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn mb_splitter_on_two_even_orbitals_needs_correction() {
        let g = grid();
        let gp = sech_soliton(1.0, &g).unwrap();
        let phi1 = gp.orbital.clone();
        // Even partner: x^2-weighted soliton, orthogonalized.
        let mut phi2: Field = g
            .x()
            .iter()
            .map(|&x| Complex64::new(x * x / x.cosh(), 0.0))
            .collect();
        g.normalize(&mut phi2);
        let ov = g.inner(&phi1, &phi2);
        for (b, a) in phi2.iter_mut().zip(&phi1) {
            *b -= ov * a;
        }
        g.normalize(&mut phi2);
        let s = crate::states::fock_state(50, 50, &phi1, &phi2, &g).unwrap();

        let pulse = Pulse::splitter(5.0, 0.0).unwrap();
        let m = pulse.on_grid(&g);
        let mut bare: Field = s.orbitals[1].iter().zip(&m).map(|(a, b)| a * b).collect();
        g.normalize(&mut bare);

        let out = apply_pulse_mb(&s, &pulse, &g).unwrap();
        assert!(out.orthonormality_residual(&g) < 1e-12);
        let correction: f64 = (out.orbitals[1]
            .iter()
            .zip(&bare)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * g.dx())
        .sqrt();
        assert!(correction > 1e-8, "correction = {correction:.3e}");
    }

    #[test]
    fn mb_splitter_refuses_strongly_mixed_orbitals() {
        let g = grid();
        let gp = sech_soliton(1.0, &g).unwrap();
        let phi1 = gp.orbital.clone();
        // Second orbital deliberately built from the splitter's own overlap
        // kernel cos(2kx), so the multiplied pair is far from orthogonal.
        let mut phi2: Field = phi1
            .iter()
            .zip(g.x())
            .map(|(a, &x)| a * (10.0 * x).cos())
            .collect();
        let ov = g.inner(&phi1, &phi2);
        for (b, a) in phi2.iter_mut().zip(&phi1) {
            *b -= ov * a;
        }
        g.normalize(&mut phi2);
        let s = crate::states::fock_state(50, 50, &phi1, &phi2, &g).unwrap();
        let err = apply_pulse_mb(&s, &Pulse::splitter(5.0, 0.0).unwrap(), &g);
        assert!(matches!(err, Err(Error::PulseOverlapTooLarge { .. })));
    }

    #[test]
    fn channel_algebra_reference_points() {
        let w = pulse_channel_algebra(PI, PI);
        assert_abs_diff_eq!(w[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 4.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 1.0 / 6.0, epsilon = 1e-12);

        let w = pulse_channel_algebra(0.0, PI);
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn channel_algebra_visibility_curve() {
        for i in 0..32 {
            let chi2 = TWO_PI * i as f64 / 32.0;
            let w = pulse_channel_algebra(PI, chi2);
            let expected = (1.0 - chi2.cos()) / (2.0 - chi2.cos());
            assert_abs_diff_eq!(w[1], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn channel_algebra_is_normalized_and_exchange_symmetric() {
        for i in 0..13 {
            for j in 0..13 {
                let c1 = TWO_PI * i as f64 / 13.0;
                let c2 = TWO_PI * j as f64 / 13.0;
                let w = pulse_channel_algebra(c1, c2);
                let x = pulse_channel_algebra(c2, c1);
                assert_abs_diff_eq!(w[0] + w[1] + w[2], 1.0, epsilon = 1e-12);
                for (a, b) in w.iter().zip(&x) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-12);
                }
            }
        }
    }
}
