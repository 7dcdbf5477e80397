//! Passive GLRT, the active benchmark statistic, and threshold handling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::asymptotic_threshold;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::random::{trial_rng, SimRng};
use crate::waveform::{Observation, SymbolBlock};

const MAX_GRAM_CONDITION: f64 = 1e12;

/// Statistic value and the eigenvalue bookkeeping behind it.
#[derive(Debug, Clone, Serialize)]
pub struct GlrtResult {
    pub statistic: f64,
    /// Eigenvalues of `X / sigma^2`, decreasing (length 2M).
    pub psi: Vec<f64>,
    /// Eigenvalues of `X_d / sigma^2`, decreasing (length M).
    pub phi: Vec<f64>,
    pub epsilon0: usize,
    pub zeta0: usize,
}

/// `sum_{i<k} (ln v_i - v_i + 1)`, each term is <= 0.
fn log_excess(values: &[f64], k: usize) -> f64 {
    values[..k].iter().map(|&v| v.ln() - v + 1.0).sum()
}

/// Assembles the statistic from precomputed (decreasing) eigenvalues.
pub fn glrt_from_eigenvalues(psi: Vec<f64>, phi: Vec<f64>, c: usize, l: usize) -> GlrtResult {
    let epsilon0 = psi.iter().filter(|&&v| v >= 1.0).count().min(c).min(psi.len());
    let zeta0 = phi.iter().filter(|&&v| v >= 1.0).count().min(c).min(phi.len());
    let statistic = l as f64 * (log_excess(&phi, zeta0) - log_excess(&psi, epsilon0));
    GlrtResult {
        statistic,
        psi,
        phi,
        epsilon0,
        zeta0,
    }
}

/// Passive GLRT on a stacked `2M x L` observation (target rows first).
pub fn glrt_statistic(y: &Observation, sigma_r2: f64, c: usize) -> Result<GlrtResult> {
    glrt_statistic_matrix(&y.y, sigma_r2, c)
}

pub fn glrt_statistic_matrix(y: &CMat, sigma_r2: f64, c: usize) -> Result<GlrtResult> {
    let (rows, l) = y.shape();
    if rows == 0 || rows % 2 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "observation must have 2M rows, got {rows}"
        )));
    }
    if !(sigma_r2 > 0.0) {
        return Err(Error::Config(format!("noise power must be positive, got {sigma_r2}")));
    }
    let m = rows / 2;
    if l < rows {
        return Err(Error::DimensionMismatch(format!(
            "block length {l} shorter than 2M = {rows}"
        )));
    }
    let scale = l as f64 * sigma_r2;
    let x = (y * y.adjoint()).unscale(scale);
    let psi = hermitian_eigenvalues(&x)?;
    let x_d = x.view((m, m), (m, m)).into_owned();
    let phi = hermitian_eigenvalues(&x_d)?;
    Ok(glrt_from_eigenvalues(psi, phi, c, l))
}

/// Active-detection log-statistic `tr[Y P_S Y^H] / sigma^2` with `P_S` the
/// projector onto the row space of the known symbols.
pub fn active_statistic(y: &CMat, s: &SymbolBlock, sigma_r2: f64) -> Result<f64> {
    active_statistic_raw(y, &s.data, sigma_r2)
}

pub fn active_statistic_raw(y: &CMat, s: &CMat, sigma_r2: f64) -> Result<f64> {
    let (c, l) = s.shape();
    if y.ncols() != l {
        return Err(Error::DimensionMismatch(format!(
            "Y has {} columns, S has {l}",
            y.ncols()
        )));
    }
    if l <= c {
        return Err(Error::DimensionMismatch(format!("need L > C, got L = {l}, C = {c}")));
    }
    let gram = s * s.adjoint();
    let eig = hermitian_eigenvalues(&gram)?;
    let (hi, lo) = (eig[0], *eig.last().unwrap_or(&0.0));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_GRAM_CONDITION) {
        return Err(Error::SingularGram(cond));
    }
    let ys = y * s.adjoint();
    let chol = gram.cholesky().ok_or(Error::SingularGram(cond))?;
    let t = chol.solve(&ys.adjoint());
    let value = (ys * t).trace().re / sigma_r2;
    Ok(value.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Empirical,
    Asymptotic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Threshold {
    pub rho: f64,
    pub pfa_target: f64,
    pub n_trials: usize,
    pub method: ThresholdMethod,
    pub seed: u64,
}

impl Threshold {
    /// Threshold from the large-sample null distribution with `nu` degrees of freedom.
    pub fn asymptotic(pfa: f64, nu: usize) -> Result<Self> {
        Ok(Self {
            rho: asymptotic_threshold(pfa, nu)?,
            pfa_target: pfa,
            n_trials: 0,
            method: ThresholdMethod::Asymptotic,
            seed: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    TargetPresent,
    Absent,
}

/// Strict comparison against the threshold.
pub fn decide(statistic: f64, threshold: &Threshold) -> Decision {
    if statistic > threshold.rho {
        Decision::TargetPresent
    } else {
        Decision::Absent
    }
}

/// `k`-th largest sample with `k = ceil(n * pfa)`. No trial-count floor.
pub fn order_statistic_threshold(samples: &[f64], pfa: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientTrials(0.0));
    }
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::Config(format!("false-alarm target {pfa} not in (0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(threshold_from_sorted_desc(&sorted, pfa))
}

/// Same as [`order_statistic_threshold`] on samples already sorted in decreasing order.
pub fn threshold_from_sorted_desc(sorted: &[f64], pfa: f64) -> f64 {
    let n = sorted.len();
    let k = ((n as f64 * pfa).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Null statistics for `n_trials` independent trials, each with its own RNG stream.
pub fn null_samples<F>(sampler: F, n_trials: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&mut SimRng) -> Result<f64> + Sync,
{
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            sampler(&mut rng)
        })
        .collect()
}

pub fn check_trial_budget(n_trials: usize, pfa: f64) -> Result<()> {
    let budget = n_trials as f64 * pfa;
    if budget < 10.0 - 1e-9 {
        return Err(Error::InsufficientTrials(budget));
    }
    Ok(())
}

/// Empirical threshold from Monte Carlo trials under the null hypothesis.
pub fn calibrate_threshold<F>(sampler: F, pfa: f64, n_trials: usize, seed: u64) -> Result<Threshold>
where
    F: Fn(&mut SimRng) -> Result<f64> + Sync,
{
    check_trial_budget(n_trials, pfa)?;
    let samples = null_samples(sampler, n_trials, seed)?;
    calibrate_from_samples(&samples, pfa, seed)
}

pub fn calibrate_from_samples(samples: &[f64], pfa: f64, seed: u64) -> Result<Threshold> {
    check_trial_budget(samples.len(), pfa)?;
    Ok(Threshold {
        rho: order_statistic_threshold(samples, pfa)?,
        pfa_target: pfa,
        n_trials: samples.len(),
        method: ThresholdMethod::Empirical,
        seed,
    })
}

/// Fraction of samples strictly above `rho`.
pub fn exceedance_rate(samples: &[f64], rho: f64) -> f64 {
    samples.iter().filter(|&&s| s > rho).count() as f64 / samples.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_matrix, C64};
    use crate::random::master_rng;

    #[test]
    fn all_small_eigenvalues_give_zero() {
        let r = glrt_from_eigenvalues(vec![0.9, 0.5], vec![0.8], 1, 100);
        assert_eq!((r.epsilon0, r.zeta0), (0, 0));
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn hand_example() {
        let r = glrt_from_eigenvalues(vec![4.0, 2.0], vec![3.0], 1, 100);
        let want = 100.0 * (1.0 - (4.0f64 / 3.0).ln());
        assert!((r.statistic - want).abs() < 1e-10);
        assert!((r.statistic - 71.232).abs() < 1e-3);
    }

    #[test]
    fn counts_capped_by_users() {
        let r = glrt_from_eigenvalues(vec![5.0, 4.0, 3.0, 2.0], vec![6.0, 2.0], 1, 10);
        assert_eq!((r.epsilon0, r.zeta0), (1, 1));
        let r = glrt_from_eigenvalues(vec![5.0, 4.0, 3.0, 2.0], vec![6.0, 2.0], 3, 10);
        assert_eq!((r.epsilon0, r.zeta0), (3, 2));
    }

    #[test]
    fn rejects_odd_rows_and_short_blocks() {
        let y = CMat::zeros(3, 10);
        assert!(matches!(
            glrt_statistic_matrix(&y, 1.0, 1),
            Err(Error::DimensionMismatch(_))
        ));
        let y = CMat::zeros(4, 3);
        assert!(matches!(
            glrt_statistic_matrix(&y, 1.0, 1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn active_zero_and_noiseless() {
        let mut rng = master_rng(3);
        let s = cn_matrix(&mut rng, 2, 40, 1.0);
        assert_eq!(active_statistic_raw(&CMat::zeros(3, 40), &s, 1.0).unwrap(), 0.0);
        let h = cn_matrix(&mut rng, 3, 2, 1.0);
        let y = &h * &s;
        let got = active_statistic_raw(&y, &s, 0.5).unwrap();
        let want = (&h * &s * s.adjoint() * h.adjoint()).trace().re / 0.5;
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn active_singular_gram() {
        let mut s = CMat::zeros(2, 10);
        for l in 0..10 {
            s[(0, l)] = C64::new(1.0, l as f64);
            s[(1, l)] = s[(0, l)] * 2.0;
        }
        assert!(matches!(
            active_statistic_raw(&CMat::zeros(1, 10), &s, 1.0),
            Err(Error::SingularGram(_))
        ));
    }

    #[test]
    fn order_statistic_example() {
        let samples: Vec<f64> = (1..=100).map(f64::from).collect();
        let rho = order_statistic_threshold(&samples, 0.05).unwrap();
        assert_eq!(rho, 96.0);
        assert!((exceedance_rate(&samples, rho) - 0.04).abs() < 1e-15);
        assert!(matches!(
            calibrate_from_samples(&samples, 0.05, 0),
            Err(Error::InsufficientTrials(_))
        ));
    }

    #[test]
    fn strict_decision() {
        let t = Threshold {
            rho: 5.0,
            pfa_target: 0.01,
            n_trials: 1000,
            method: ThresholdMethod::Empirical,
            seed: 0,
        };
        assert_eq!(decide(6.0, &t), Decision::TargetPresent);
        assert_eq!(decide(5.0, &t), Decision::Absent);
        assert_eq!(decide(4.999, &t), Decision::Absent);
    }

    #[test]
    fn calibration_is_deterministic() {
        let sampler = |rng: &mut SimRng| {
            let y = cn_matrix(rng, 2, 20, 1.0);
            Ok(glrt_statistic_matrix(&y, 1.0, 1)?.statistic)
        };
        let a = calibrate_threshold(sampler, 0.05, 400, 11).unwrap();
        let b = calibrate_threshold(sampler, 0.05, 400, 11).unwrap();
        assert_eq!(a.rho.to_bits(), b.rho.to_bits());
    }
}
