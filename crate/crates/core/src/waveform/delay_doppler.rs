//! Delay-Doppler operator `D(tau, f) = (1/L) K(f/fs) P^H K(-tau fs / L) P`,
//! where `P` is the unnormalized DFT matrix (`P[m,n] = exp(-j 2 pi m n / L)`)
//! and `K(x) = diag(1, e^{j 2 pi x}, ..., e^{j 2 pi (L-1) x})`.
//!
//! [`delay_doppler_operator`] materializes the dense L x L matrix;
//! [`DelayDopplerKernel`] applies the same operator in O(L log L) with two FFTs.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::linalg::{CMat, C64, J};

/// Dense delay-Doppler operator.
#[derive(Debug, Clone)]
pub struct DelayDopplerOp {
    pub matrix: CMat,
    pub tau: f64,
    pub doppler: f64,
}

pub fn delay_doppler_operator(tau: f64, doppler: f64, l: usize, fs: f64) -> DelayDopplerOp {
    assert!(l >= 1, "operator length must be positive");
    let shift = tau * fs;
    let lf = l as f64;
    // Entry (n, k) only depends on (n - k) mod L through the circular kernel g.
    let g: Vec<C64> = (0..l)
        .map(|d| {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..l {
                let ph = 2.0 * PI * (m as f64) * ((d as f64) - shift) / lf;
                acc += C64::new(ph.cos(), ph.sin());
            }
            acc / lf
        })
        .collect();
    let dop: Vec<C64> = (0..l)
        .map(|n| (J * (2.0 * PI * doppler / fs * n as f64)).exp())
        .collect();
    let matrix = CMat::from_fn(l, l, |n, k| dop[n] * g[(n + l - k) % l]);
    DelayDopplerOp { matrix, tau, doppler }
}

/// FFT-backed application of `D(tau, f)` for a fixed length and sample rate.
#[derive(Clone)]
pub struct DelayDopplerKernel {
    len: usize,
    fs: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DelayDopplerKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DelayDopplerKernel")
            .field("len", &self.len)
            .field("fs", &self.fs)
            .finish()
    }
}

impl DelayDopplerKernel {
    pub fn new(len: usize, fs: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            fs,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sample_rate(&self) -> f64 {
        self.fs
    }

    fn ramp(&self, x: &mut [C64], cycles_per_sample: f64) {
        if cycles_per_sample == 0.0 {
            return;
        }
        for (n, v) in x.iter_mut().enumerate() {
            let ph = 2.0 * PI * cycles_per_sample * n as f64;
            *v *= C64::new(ph.cos(), ph.sin());
        }
    }

    /// `x <- D(tau, f) x`.
    pub fn apply(&self, x: &mut [C64], tau: f64, doppler: f64) {
        assert_eq!(x.len(), self.len);
        let l = self.len as f64;
        self.fwd.process(x);
        self.ramp(x, -tau * self.fs / l);
        self.inv.process(x);
        for v in x.iter_mut() {
            *v /= l;
        }
        self.ramp(x, doppler / self.fs);
    }

    /// `x <- D(tau, f)^H x`.
    pub fn apply_adjoint(&self, x: &mut [C64], tau: f64, doppler: f64) {
        assert_eq!(x.len(), self.len);
        let l = self.len as f64;
        self.ramp(x, -doppler / self.fs);
        self.fwd.process(x);
        self.ramp(x, tau * self.fs / l);
        self.inv.process(x);
        for v in x.iter_mut() {
            *v /= l;
        }
    }

    /// Forward DFT of `x`, reusable across many delay hypotheses.
    pub fn spectrum(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.len);
        let mut out = x.to_vec();
        self.fwd.process(&mut out);
        out
    }

    /// `out <- D(tau, 0)^H x` given `spectrum = DFT(x)`.
    pub fn apply_adjoint_from_spectrum(&self, spectrum: &[C64], tau: f64, out: &mut [C64]) {
        assert_eq!(spectrum.len(), self.len);
        assert_eq!(out.len(), self.len);
        let l = self.len as f64;
        out.copy_from_slice(spectrum);
        self.ramp(out, tau * self.fs / l);
        self.inv.process(out);
        for v in out.iter_mut() {
            *v /= l;
        }
    }

    /// Row-vector form used by the signal model: `row <- row D^T`.
    pub fn delay_row(&self, row: &mut [C64], tau: f64, doppler: f64) {
        self.apply(row, tau, doppler);
    }

    /// Compensation: `row <- row D^*`.
    pub fn compensate_row(&self, row: &mut [C64], tau: f64, doppler: f64) {
        self.apply_adjoint(row, tau, doppler);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cn_vector;
    use crate::random::master_rng;

    #[test]
    fn zero_shift_is_identity() {
        for l in [1usize, 8, 33] {
            let d = delay_doppler_operator(0.0, 0.0, l, 1.0);
            assert!((d.matrix - CMat::identity(l, l)).norm() < 1e-12);
        }
    }

    #[test]
    fn factored_matches_dense() {
        let mut rng = master_rng(1);
        let l = 40;
        let fs = 1e6;
        for &(tau, f) in &[(0.0, 0.0), (3.0 / fs, 0.0), (2.37e-6, 1234.5), (1e-7, -5e3)] {
            let dense = delay_doppler_operator(tau, f, l, fs);
            let kern = DelayDopplerKernel::new(l, fs);
            let x = cn_vector(&mut rng, l, 1.0);
            let want = &dense.matrix * &x;
            let mut got: Vec<C64> = x.iter().copied().collect();
            kern.apply(&mut got, tau, f);
            let err: f64 = got
                .iter()
                .zip(want.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10, "apply err {err}");

            let want_h = dense.matrix.adjoint() * &x;
            let mut got_h: Vec<C64> = x.iter().copied().collect();
            kern.apply_adjoint(&mut got_h, tau, f);
            let err_h: f64 = got_h
                .iter()
                .zip(want_h.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err_h < 1e-10, "adjoint err {err_h}");
        }
    }
}
