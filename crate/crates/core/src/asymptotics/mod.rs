//! Large-sample behaviour of the passive GLRT.
//!
//! For long blocks the statistic is approximately `chi2(nu)/2` without a
//! target and `chi2'(nu, kappa)/2` with one, where `nu = 2MC` and `kappa`
//! depends on the equivalent channels. This module evaluates `kappa` (two
//! algebraically equivalent ways), the SNR aggregates, and the resulting
//! false-alarm / detection probabilities.

pub mod special;

use serde::Serialize;

pub use special::{gamma_lower_regularized, gamma_tail_regularized, ln_gamma, marcum_q};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, solve_hpd, CMat};

/// Eigen-terms of the non-centrality decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct KappaTerms {
    /// Eigenvalues of `H_d^H H_d / sigma_r^2`, decreasing.
    pub sigma_bar: Vec<f64>,
    /// Target energy `v_n^H H_t^H H_t v_n` along each eigenvector.
    pub delta: Vec<f64>,
    #[serde(skip)]
    pub vectors: CMat,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticPerf {
    pub nu: usize,
    pub kappa: f64,
    pub eigen_decomp: Option<KappaTerms>,
}

fn check_pair(h_t: &CMat, h_d: &CMat) -> Result<()> {
    if h_t.shape() != h_d.shape() {
        return Err(Error::DimensionMismatch(format!(
            "H_t is {:?} but H_d is {:?}",
            h_t.shape(),
            h_d.shape()
        )));
    }
    Ok(())
}

/// `kappa = (2L/sigma^2) tr[H_t H_d^H (sigma^2 I + H_d H_d^H)^{-1} H_d H_t^H]`.
pub fn kappa_general(h_t: &CMat, h_d: &CMat, sigma_r2: f64, l: usize) -> Result<f64> {
    check_pair(h_t, h_d)?;
    let m = h_t.nrows();
    let gram = CMat::identity(m, m).scale(sigma_r2) + h_d * h_d.adjoint();
    let inner = solve_hpd(&gram, &(h_d * h_t.adjoint()))?;
    let t = (h_t * h_d.adjoint() * inner).trace().re;
    Ok((2.0 * l as f64 / sigma_r2 * t).max(0.0))
}

/// Same `kappa` through the eigen-decomposition of `H_d^H H_d / sigma^2`:
/// `kappa = (2L/sigma^2) sum_n sigma_n/(1+sigma_n) delta_n`.
pub fn kappa_eigform(h_t: &CMat, h_d: &CMat, sigma_r2: f64, l: usize) -> Result<AsymptoticPerf> {
    check_pair(h_t, h_d)?;
    let (m, c) = h_t.shape();
    let eig = hermitian_eigen(&(h_d.adjoint() * h_d).unscale(sigma_r2))?;
    let tt = h_t.adjoint() * h_t;
    let mut kappa = 0.0;
    let mut delta = Vec::with_capacity(c);
    let sigma_bar: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    for (n, &s) in sigma_bar.iter().enumerate() {
        let v = eig.vectors.column(n);
        let d = (v.adjoint() * &tt * v)[(0, 0)].re;
        delta.push(d);
        kappa += s / (1.0 + s) * d;
    }
    Ok(AsymptoticPerf {
        nu: 2 * m * c,
        kappa: (2.0 * l as f64 / sigma_r2 * kappa).max(0.0),
        eigen_decomp: Some(KappaTerms {
            sigma_bar,
            delta,
            vectors: eig.vectors,
        }),
    })
}

/// Single-user closed form `2 L M^2 SNR_t SNR_d / (1 + M SNR_d)`.
pub fn kappa_single_cu(l: usize, m: usize, snr_t: f64, snr_d: f64) -> f64 {
    let m = m as f64;
    2.0 * l as f64 * m * m * snr_t * snr_d / (1.0 + m * snr_d)
}

/// Non-centrality of the active detector, `2 L M SNR_t`.
pub fn kappa_active(l: usize, m: usize, snr_t: f64) -> f64 {
    2.0 * l as f64 * m as f64 * snr_t
}

/// Average per-path SNR `tr(H H^H) / (M sigma^2)`.
pub fn average_snr(h: &CMat, sigma_r2: f64, m: usize) -> f64 {
    h.norm_squared() / (m as f64 * sigma_r2)
}

pub fn snr_t(h_t: &CMat, sigma_r2: f64, m: usize) -> f64 {
    average_snr(h_t, sigma_r2, m)
}

pub fn snr_d(h_d: &CMat, sigma_r2: f64, m: usize) -> f64 {
    average_snr(h_d, sigma_r2, m)
}

/// Right tail of `chi2(nu)` at `2 rho`, i.e. `Q(nu/2, rho)`.
pub fn asymptotic_pfa(rho: f64, nu: usize) -> Result<f64> {
    if rho <= 0.0 {
        return Ok(1.0);
    }
    gamma_tail_regularized(nu as f64 / 2.0, rho)
}

/// `Q_{nu/2}(sqrt(kappa), sqrt(2 rho))`.
pub fn asymptotic_pd(rho: f64, nu: usize, kappa: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Ok(1.0);
    }
    marcum_q(nu as f64 / 2.0, kappa.max(0.0).sqrt(), (2.0 * rho).sqrt())
}

/// Threshold `rho` with `asymptotic_pfa(rho, nu) = pfa`, by bisection to 1e-12.
pub fn asymptotic_threshold(pfa: f64, nu: usize) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::Config(format!("false-alarm target {pfa} not in (0, 1)")));
    }
    let mut lo = 0.0;
    let mut hi = (nu as f64).max(1.0);
    while asymptotic_pfa(hi, nu)? > pfa {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if asymptotic_pfa(mid, nu)? > pfa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest `kappa` reaching `pd` at the given threshold (bisection).
pub fn kappa_for_pd(pd: f64, rho: f64, nu: usize) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while asymptotic_pd(rho, nu, hi)? < pd {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::NumericalFailure("detection target unreachable".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if asymptotic_pd(rho, nu, mid)? < pd {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_matrix, C64};
    use crate::random::master_rng;

    #[test]
    fn zero_target_channel_gives_zero_kappa() {
        let mut rng = master_rng(4);
        let h_d = cn_matrix(&mut rng, 4, 2, 1.0);
        let h_t = CMat::zeros(4, 2);
        assert_eq!(kappa_general(&h_t, &h_d, 1.0, 100).unwrap(), 0.0);
    }

    #[test]
    fn kappa_linear_in_block_length() {
        let mut rng = master_rng(8);
        let h_t = cn_matrix(&mut rng, 3, 2, 0.1);
        let h_d = cn_matrix(&mut rng, 3, 2, 2.0);
        let k1 = kappa_general(&h_t, &h_d, 0.5, 250).unwrap();
        let k2 = kappa_general(&h_t, &h_d, 0.5, 500).unwrap();
        assert!((k2 - 2.0 * k1).abs() < 1e-12 * k2);
    }

    #[test]
    fn single_cu_hand_values() {
        assert!((kappa_single_cu(500, 4, 0.01, 1.0) - 32.0).abs() < 1e-12);
        assert_eq!(kappa_single_cu(500, 4, 0.0, 3.0), 0.0);
        let big = kappa_single_cu(500, 4, 0.01, 1e12);
        assert!((big - kappa_active(500, 4, 0.01)).abs() < 1e-9 * big);
    }

    #[test]
    fn scalar_case_matches_closed_form() {
        // M = C = 1, SNR_t = 0.01, SNR_d = 10, L = 500
        let h_t = CMat::from_element(1, 1, C64::new(0.1, 0.0));
        let h_d = CMat::from_element(1, 1, C64::new(0.0, 10f64.sqrt()));
        let k = kappa_general(&h_t, &h_d, 1.0, 500).unwrap();
        let want = 2.0 * 500.0 * 0.01 * (10.0 / 11.0);
        assert!((k - want).abs() < 1e-12 * want);
        assert!((want - 9.090_909_090_909).abs() < 1e-9);
    }

    #[test]
    fn pfa_special_cases() {
        assert_eq!(asymptotic_pfa(0.0, 8).unwrap(), 1.0);
        for &rho in &[0.1, 1.0, 4.0] {
            assert!((asymptotic_pfa(rho, 2).unwrap() - (-rho).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn pd_reduces_to_pfa_without_target() {
        for &rho in &[0.5, 3.0, 9.0] {
            let pd = asymptotic_pd(rho, 8, 0.0).unwrap();
            let pfa = asymptotic_pfa(rho, 8).unwrap();
            assert!((pd - pfa).abs() < 1e-12);
        }
        assert_eq!(asymptotic_pd(0.0, 8, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn pd_monotone_in_kappa_and_rho() {
        let mut prev = 0.0;
        for i in 0..60 {
            let k = i as f64 * 0.75;
            let pd = asymptotic_pd(6.0, 8, k).unwrap();
            assert!(pd >= prev - 1e-15);
            prev = pd;
        }
        let mut prev = 1.0;
        for i in 1..60 {
            let pd = asymptotic_pd(i as f64 * 0.5, 8, 10.0).unwrap();
            assert!(pd <= prev + 1e-15);
            prev = pd;
        }
    }
}
