//! Embedded Dormand-Prince 5(4) integrator on complex state vectors, with a
//! WRMS error controller and exact segment-endpoint landing.

use num_complex::Complex64;

use crate::error::{Error, Result};

const STAGES: usize = 7;

// Dormand-Prince coefficients.
const C: [f64; STAGES] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order solution weights (same as the last A row: first-same-as-last pair).
const B5: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Embedded 4th-order weights.
const B4: [f64; STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveRk45 {
    pub rtol: f64,
    pub atol: f64,
    pub dt_min: f64,
}

impl AdaptiveRk45 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        AdaptiveRk45 {
            rtol,
            atol,
            dt_min: 1e-13,
        }
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t1`, landing on `t1` exactly.
    ///
    /// `dt` carries the adaptive step across calls. `post_accept` runs after
    /// every accepted step (used for state hygiene such as
    /// re-orthonormalization), so no first-same-as-last reuse is attempted.
    pub fn integrate_segment<F, P>(
        &self,
        t0: f64,
        t1: f64,
        y: &mut [Complex64],
        dt: &mut f64,
        mut rhs: F,
        mut post_accept: P,
    ) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
        P: FnMut(f64, &mut [Complex64]),
    {
        assert!(t1 > t0);
        let dim = y.len();
        let mut k: Vec<Vec<Complex64>> = (0..STAGES).map(|_| vec![Complex64::default(); dim]).collect();
        let mut y_stage = vec![Complex64::default(); dim];
        let mut y_new = vec![Complex64::default(); dim];

        let mut t = t0;
        while t < t1 - 1e-12 {
            if *dt < self.dt_min {
                return Err(Error::StepSizeUnderflow { t, dt: *dt });
            }
            let h = dt.min(t1 - t);

            for stage in 0..STAGES {
                if stage == 0 {
                    y_stage.copy_from_slice(y);
                } else {
                    for i in 0..dim {
                        let mut acc = Complex64::default();
                        for (s, ks) in k.iter().enumerate().take(stage) {
                            let a = A[stage][s];
                            if a != 0.0 {
                                acc += a * ks[i];
                            }
                        }
                        y_stage[i] = y[i] + h * acc;
                    }
                }
                rhs(t + C[stage] * h, &y_stage, &mut k[stage]);
            }

            // 5th-order candidate and embedded error estimate.
            let mut err_sq = 0.0;
            for i in 0..dim {
                let mut acc5 = Complex64::default();
                let mut acc_err = Complex64::default();
                for s in 0..STAGES {
                    if B5[s] != 0.0 {
                        acc5 += B5[s] * k[s][i];
                    }
                    let diff = B5[s] - B4[s];
                    if diff != 0.0 {
                        acc_err += diff * k[s][i];
                    }
                }
                y_new[i] = y[i] + h * acc5;
                let scale = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                let e = (h * acc_err).norm() / scale;
                err_sq += e * e;
            }
            let err = (err_sq / dim as f64).sqrt();

            if !err.is_finite() {
                *dt = h * MIN_FACTOR;
                continue;
            }
            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&y_new);
                post_accept(t, y);
                // Only adapt from steps of natural size, not endpoint-clamped
                // ones whose tiny error would inflate the next step.
                if h >= *dt * (1.0 - 1e-12) {
                    let factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    *dt = h * factor;
                }
            } else {
                *dt = h * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
        Ok(())
    }
}
