//! Bosonic ladder algebra on the two-mode Fock ladder `|N-m, m>`.
//!
//! Every operator here is built by literally applying creation/annihilation
//! steps to occupation pairs, so matrix elements carry the exact
//! `sqrt(n)` factors and the configuration Hamiltonian inherits its banded
//! structure (|m - m'| <= 2) instead of having it hard-coded.

use num_complex::Complex64;

/// Per-string ladder table: entry `m` holds the target index and amplitude of
/// `string |N-m, m>`, or `None` when an annihilator hits an empty mode.
type LadderTable = Vec<Option<(usize, f64)>>;

/// Flat index for the one-body string `adag_j a_k`, orbital indices in {0, 1}.
#[inline]
pub fn ob_index(j: usize, k: usize) -> usize {
    2 * j + k
}

/// Flat index for the two-body string `adag_j adag_k a_s a_l`.
#[inline]
pub fn tb_index(j: usize, k: usize, s: usize, l: usize) -> usize {
    8 * j + 4 * k + 2 * s + l
}

#[derive(Debug, Clone)]
pub struct FockSpace {
    n: usize,
    one_body: [LadderTable; 4],
    two_body: [LadderTable; 16],
}

/// Applies one ladder step to occupations `(n1, n2)`; `dagger` raises.
fn step(occ: &mut [i64; 2], mode: usize, dagger: bool) -> Option<f64> {
    if dagger {
        occ[mode] += 1;
        Some((occ[mode] as f64).sqrt())
    } else {
        if occ[mode] == 0 {
            return None;
        }
        let amp = (occ[mode] as f64).sqrt();
        occ[mode] -= 1;
        Some(amp)
    }
}

/// Runs a whole operator string (rightmost factor first) on `|N-m, m>`.
fn run_string(n: usize, m: usize, ops: &[(usize, bool)]) -> Option<(usize, f64)> {
    let mut occ = [(n - m) as i64, m as i64];
    let mut amp = 1.0;
    for &(mode, dagger) in ops.iter().rev() {
        amp *= step(&mut occ, mode, dagger)?;
    }
    debug_assert_eq!(occ[0] + occ[1], n as i64);
    Some((occ[1] as usize, amp))
}

impl FockSpace {
    pub fn new(n_particles: usize) -> Self {
        assert!(n_particles >= 1);
        let n = n_particles;
        let build = |ops: &[(usize, bool)]| -> LadderTable {
            (0..=n).map(|m| run_string(n, m, ops)).collect()
        };
        let one_body = std::array::from_fn(|idx| {
            let (j, k) = (idx / 2, idx % 2);
            build(&[(j, true), (k, false)])
        });
        let two_body = std::array::from_fn(|idx| {
            let (j, k, s, l) = (idx / 8, (idx / 4) % 2, (idx / 2) % 2, idx % 2);
            build(&[(j, true), (k, true), (s, false), (l, false)])
        });
        FockSpace {
            n,
            one_body,
            two_body,
        }
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// One-body reduced density matrix `rho_jk = <adag_j a_k>`.
    pub fn one_body_rdm(&self, c: &[Complex64]) -> [[Complex64; 2]; 2] {
        assert_eq!(c.len(), self.dim());
        let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                let table = &self.one_body[ob_index(j, k)];
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, entry) in table.iter().enumerate() {
                    if let Some((mt, amp)) = entry {
                        acc += c[*mt].conj() * *amp * c[m];
                    }
                }
                rho[j][k] = acc;
            }
        }
        rho
    }

    /// Two-body reduced density matrix elements
    /// `rho_jksl = <adag_j adag_k a_s a_l>`, flat layout [`tb_index`].
    pub fn two_body_rdm(&self, c: &[Complex64]) -> [Complex64; 16] {
        assert_eq!(c.len(), self.dim());
        let mut rho = [Complex64::new(0.0, 0.0); 16];
        for (idx, table) in self.two_body.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, entry) in table.iter().enumerate() {
                if let Some((mt, amp)) = entry {
                    acc += c[*mt].conj() * *amp * c[m];
                }
            }
            rho[idx] = acc;
        }
        rho
    }

    /// Accumulates `out = H c` for
    /// `H = sum h_jk adag_j a_k + 1/2 sum w_jksl adag_j adag_k a_s a_l`.
    pub fn apply_hamiltonian(
        &self,
        h: &[[Complex64; 2]; 2],
        w: &[Complex64; 16],
        c: &[Complex64],
        out: &mut [Complex64],
    ) {
        assert_eq!(c.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        out.fill(Complex64::new(0.0, 0.0));
        for j in 0..2 {
            for k in 0..2 {
                let coeff = h[j][k];
                if coeff == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (m, entry) in self.one_body[ob_index(j, k)].iter().enumerate() {
                    if let Some((mt, amp)) = entry {
                        out[*mt] += coeff * *amp * c[m];
                    }
                }
            }
        }
        for (idx, table) in self.two_body.iter().enumerate() {
            let coeff = 0.5 * w[idx];
            if coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (m, entry) in table.iter().enumerate() {
                if let Some((mt, amp)) = entry {
                    out[*mt] += coeff * *amp * c[m];
                }
            }
        }
    }

    /// `<c| H |c>`, dropping the numerically vanishing imaginary part.
    pub fn expectation(
        &self,
        h: &[[Complex64; 2]; 2],
        w: &[Complex64; 16],
        c: &[Complex64],
    ) -> f64 {
        let mut hc = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_hamiltonian(h, w, c, &mut hc);
        let e: Complex64 = c.iter().zip(&hc).map(|(a, b)| a.conj() * b).sum();
        e.re
    }
}
