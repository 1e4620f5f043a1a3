//! Uniform periodic 1D grid with cached FFT plans and spectral operators.
//!
//! Conventions: `x[i] = -L/2 + i*dx`, momenta in standard FFT ordering
//! `p[i] = 2*pi/L * i` for `i < n/2` and `2*pi/L * (i - n)` otherwise, so the
//! Nyquist momentum `-pi/dx` sits at index `n/2`. Forward transforms use the
//! `e^{-ipx}` kernel; inverse transforms carry the `1/n` normalization.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Complex field sampled on a [`Grid1D`], position or momentum representation.
pub type Field = Vec<Complex64>;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone)]
pub struct Grid1D {
    length: f64,
    n: usize,
    dx: f64,
    x: Vec<f64>,
    p: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("length", &self.length)
            .field("n", &self.n)
            .field("dx", &self.dx)
            .finish()
    }
}

impl Grid1D {
    /// Builds a grid of `n` points spanning `[-length/2, length/2)`.
    ///
    /// `n` must be a power of two (and at least 8) so the box always admits
    /// radix-2 transforms and an exact Nyquist index at `n/2`.
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::GridLengthNotPositive(length));
        }
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
        if !n.is_power_of_two() {
            return Err(Error::GridSizeNotPowerOfTwo(n));
        }
        let dx = length / n as f64;
        let dp = TWO_PI / length;
        let x = (0..n).map(|i| -0.5 * length + i as f64 * dx).collect();
        let p = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                m as f64 * dp
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Grid1D {
            length,
            n,
            dx,
            x,
            p,
            fft_fwd: planner.plan_fft_forward(n),
            fft_inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Momentum-grid spacing `2*pi/L`.
    pub fn dp(&self) -> f64 {
        TWO_PI / self.length
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Checks that a pulse of momentum `k` leaves spectral headroom for the
    /// `+-2k` channels plus the soliton bandwidth: `pi/dx > 2k + 10*gamma^{-1}...`
    /// stated as `2|k| + 10/gamma` against the Nyquist momentum.
    pub fn pulse_headroom(&self, k: f64, gamma: f64) -> Result<()> {
        let nyquist = std::f64::consts::PI / self.dx;
        let required = 2.0 * k.abs() + 10.0 / gamma;
        if nyquist <= required {
            return Err(Error::MomentumHeadroom { nyquist, required });
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch { len, n: self.n });
        }
        Ok(())
    }

    /// Riemann sum `dx * sum f_i`; spectrally accurate for smooth fields that
    /// decay inside the box.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.dx * f.iter().sum::<f64>()
    }

    /// Momentum-space counterpart of [`integrate`](Self::integrate), `dp * sum`.
    pub fn integrate_p(&self, f: &[f64]) -> f64 {
        self.dp() * f.iter().sum::<f64>()
    }

    /// Inner product `dx * sum conj(f_i) g_i`.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        self.dx
            * f.iter()
                .zip(g)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
    }

    pub fn norm_sq(&self, f: &[Complex64]) -> f64 {
        self.dx * f.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self, f: &[Complex64]) -> f64 {
        self.norm_sq(f).sqrt()
    }

    /// Rescales `f` to unit norm; returns the norm it had.
    pub fn normalize(&self, f: &mut [Complex64]) -> f64 {
        let norm = self.norm(f);
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in f.iter_mut() {
                *a *= inv;
            }
        }
        norm
    }

    /// Unnormalized forward DFT in place, `F_j = sum_i f_i e^{-2 pi i ij/n}`.
    pub fn fft_forward(&self, f: &mut [Complex64]) {
        self.fft_fwd.process(f);
    }

    /// Inverse DFT in place, including the `1/n` factor.
    pub fn fft_inverse(&self, f: &mut [Complex64]) {
        self.fft_inv.process(f);
        let inv_n = 1.0 / self.n as f64;
        for a in f.iter_mut() {
            *a *= inv_n;
        }
    }

    pub fn fft_forward_with(&self, f: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        scratch.resize(self.fft_fwd.get_inplace_scratch_len(), Complex64::default());
        self.fft_fwd.process_with_scratch(f, scratch);
    }

    pub fn fft_inverse_with(&self, f: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        scratch.resize(self.fft_inv.get_inplace_scratch_len(), Complex64::default());
        self.fft_inv.process_with_scratch(f, scratch);
        let inv_n = 1.0 / self.n as f64;
        for a in f.iter_mut() {
            *a *= inv_n;
        }
    }

    /// Applies the kinetic operator `-1/2 d^2/dx^2` spectrally.
    pub fn kinetic_apply(&self, f: &[Complex64]) -> Result<Field> {
        self.check_len(f.len())?;
        let mut g = f.to_vec();
        self.fft_forward(&mut g);
        for (a, &pi) in g.iter_mut().zip(&self.p) {
            *a *= 0.5 * pi * pi;
        }
        self.fft_inverse(&mut g);
        Ok(g)
    }

    /// Continuum Fourier transform sampled on the momentum grid,
    /// `f~(p_j) = 1/sqrt(2 pi) * integral f(x) e^{-i p_j x} dx`,
    /// including the `e^{-i p_j x_0}` phase from the box offset.
    pub fn to_momentum(&self, f: &[Complex64]) -> Result<Field> {
        self.check_len(f.len())?;
        let mut g = f.to_vec();
        self.fft_forward(&mut g);
        let scale = self.dx / TWO_PI.sqrt();
        let x0 = -0.5 * self.length;
        for (a, &pj) in g.iter_mut().zip(&self.p) {
            *a *= scale * Complex64::from_polar(1.0, -pj * x0);
        }
        Ok(g)
    }

    /// Momentum-space density `|f~(p_j)|^2` in FFT ordering, normalized so that
    /// `dp * sum` equals `dx * sum |f|^2`.
    pub fn fourier_density(&self, f: &[Complex64]) -> Result<Vec<f64>> {
        let g = self.to_momentum(f)?;
        Ok(g.iter().map(|a| a.norm_sqr()).collect())
    }
}
