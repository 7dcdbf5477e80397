//! Joint transmit beamforming designs.
//!
//! All designs work with per-user covariances `R_n = w_n w_n^H`, relax the
//! rank-one requirement to an SDP and recover `W` by Gaussian randomization.
//! Inside the SDPs covariances are expressed as `R = P_t R~` and user channels
//! as `h~ = h sqrt(P_t / sigma_c^2)`, so every constraint is O(1).

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::asymptotics::{kappa_general, snr_d, snr_t};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_part, outer, psd_sqrt, quad_form, solve_hpd, CMat, CVec, C64};
use crate::random::{master_rng, SimRng};
use crate::scenario::ChannelSet;
use crate::sdp::{solve_sdp, SdpConstraint, SdpProblem, Sense};

pub const DEFAULT_EPS: f64 = 1e-4;
pub const DEFAULT_K_MAX: usize = 50;
pub const DEFAULT_CANDIDATES: usize = 1000;
const RANK_ONE_RATIO: f64 = 1e-6;
const POWER_SLACK: f64 = 1e-9;
const SINR_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    MaxPd,
    MaxPdSensingOnly,
    SnrdThreshold,
    Active,
    ActiveSensingOnly,
    CommOnly,
}

impl Design {
    pub fn label(&self) -> &'static str {
        match self {
            Design::MaxPd => "max_pd",
            Design::MaxPdSensingOnly => "max_pd_sensing_only",
            Design::SnrdThreshold => "snrd_threshold",
            Design::Active => "active",
            Design::ActiveSensingOnly => "active_sensing_only",
            Design::CommOnly => "comm_only",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BeamformerResult {
    #[serde(skip)]
    pub w: CMat,
    #[serde(skip)]
    pub r_c: CMat,
    pub kappa_achieved: f64,
    pub sinrs: Vec<f64>,
    pub power: f64,
    pub design: Design,
    /// Objective after each outer iteration (kappa for the alternating design).
    pub trace: Vec<f64>,
    pub gamma_d_used: Option<f64>,
    pub snr_t: f64,
    pub snr_d: f64,
    /// Value of the last SDP relaxation, in the design's own objective.
    pub sdp_objective: f64,
    pub converged: bool,
}

/// Tuning knobs shared by the designs.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerOptions {
    pub eps: f64,
    pub k_max: usize,
    pub n_candidates: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            k_max: DEFAULT_K_MAX,
            n_candidates: DEFAULT_CANDIDATES,
            seed: 7,
        }
    }
}

/// `gamma_n = |h_n^H w_n|^2 / (sigma_c^2 + sum_{k != n} |h_n^H w_k|^2)`.
pub fn eval_sinr(w: &CMat, h: &[CVec], sigma_c2: f64) -> Vec<f64> {
    h.iter()
        .enumerate()
        .map(|(n, hn)| {
            let gains: Vec<f64> = (0..w.ncols()).map(|k| hn.dotc(&w.column(k)).norm_sqr()).collect();
            let interference: f64 = gains.iter().enumerate().filter(|&(k, _)| k != n).map(|(_, g)| g).sum();
            gains[n] / (sigma_c2 + interference)
        })
        .collect()
}

/// Auxiliary vector maximizing the quadratic-transform surrogate:
/// `u* = (I + B R B^H)^{-1} B R a_t`.
pub fn quadratic_transform_u(r_c: &CMat, b_matrix: &CMat, a_t: &CVec) -> Result<CVec> {
    let m = b_matrix.nrows();
    let gram = CMat::identity(m, m) + b_matrix * r_c * b_matrix.adjoint();
    let rhs = b_matrix * r_c * a_t;
    let sol = solve_hpd(&gram, &CMat::from_column_slice(m, 1, rhs.as_slice()))?;
    Ok(sol.column(0).into_owned())
}

/// Surrogate `g(R, u) = 2 Re{u^H B R a} - u^H (I + B R B^H) u`.
pub fn surrogate_g(r_c: &CMat, b_matrix: &CMat, a_t: &CVec, u: &CVec) -> f64 {
    let bra = b_matrix * r_c * a_t;
    let lin = 2.0 * u.dotc(&bra).re;
    let quad = u.norm_squared() + quad_form(&(b_matrix * r_c * b_matrix.adjoint()), u);
    lin - quad
}

/// `kappa(R) = 2 L mu0 a^H R B^H (I + B R B^H)^{-1} B R a`.
pub fn kappa_of_covariance(r_c: &CMat, channels: &ChannelSet) -> Result<f64> {
    let b = &channels.b_matrix;
    let m = b.nrows();
    let y = b * r_c * &channels.a_t;
    let gram = CMat::identity(m, m) + b * r_c * b.adjoint();
    let sol = solve_hpd(&gram, &CMat::from_column_slice(m, 1, y.as_slice()))?;
    let q = y.dotc(&sol.column(0).into_owned()).re;
    Ok((2.0 * channels.block_length as f64 * channels.mu0 * q).max(0.0))
}

/// P1.2 objective matrix `a u^H B + B^H u a^H - B^H u u^H B` (Hermitian).
pub fn surrogate_matrix(u: &CVec, b_matrix: &CMat, a_t: &CVec) -> CMat {
    let bu = b_matrix.adjoint() * u;
    hermitian_part(&(outer(a_t, &bu) + outer(&bu, a_t) - outer(&bu, &bu)))
}

fn covariance(w: &CMat) -> CMat {
    w * w.adjoint()
}

fn power_of(w: &CMat) -> f64 {
    w.norm_squared()
}

/// Normalized user channels `h sqrt(P_t / sigma_c^2)`.
fn scaled_channels(channels: &ChannelSet, p_t: f64) -> Vec<CVec> {
    let s = (p_t / channels.sigma_c2).sqrt();
    channels.comm_channels.iter().map(|h| h.scale(s)).collect()
}

/// `(1/Gamma) h~^H R~_n h~ - sum_{k != n} h~^H R~_k h~ >= 1` for every user.
fn sinr_constraints(channels: &ChannelSet, gamma_c: f64, p_t: f64) -> Vec<SdpConstraint> {
    let c = channels.n_cu();
    if gamma_c <= 0.0 {
        return Vec::new();
    }
    scaled_channels(channels, p_t)
        .iter()
        .enumerate()
        .map(|(n, h)| {
            let hh = hermitian_part(&outer(h, h));
            let matrices = (0..c)
                .map(|k| Some(if k == n { hh.unscale(gamma_c) } else { -hh.clone() }))
                .collect();
            SdpConstraint {
                matrices,
                sense: Sense::Ge,
                rhs: 1.0,
            }
        })
        .collect()
}

fn power_constraint(channels: &ChannelSet) -> SdpConstraint {
    let n = channels.n_t();
    SdpConstraint {
        matrices: vec![Some(CMat::identity(n, n)); channels.n_cu()],
        sense: Sense::Le,
        rhs: 1.0,
    }
}

/// `tr(B^H B R) / M >= Gamma_d` in normalized variables.
fn snrd_constraint(channels: &ChannelSet, gamma_d: f64, p_t: f64) -> SdpConstraint {
    let m = channels.n_sr() as f64;
    let bb = hermitian_part(&(channels.b_matrix.adjoint() * &channels.b_matrix)).scale(p_t / m);
    SdpConstraint {
        matrices: vec![Some(bb); channels.n_cu()],
        sense: Sense::Ge,
        rhs: gamma_d,
    }
}

fn check_inputs(channels: &ChannelSet, gamma_c: f64, p_t: f64) -> Result<()> {
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(Error::Config(format!("power budget must be positive, got {p_t}")));
    }
    if !(gamma_c >= 0.0 && gamma_c.is_finite()) {
        return Err(Error::Config(format!(
            "SINR target must be non-negative, got {gamma_c}"
        )));
    }
    if channels.n_cu() == 0 {
        return Err(Error::Config("no communication users".into()));
    }
    Ok(())
}

/// What the randomization step optimizes over candidate beamformers.
#[derive(Debug, Clone)]
pub enum CandidateObjective {
    /// Surrogate matrix for the power LP, candidates ranked by true kappa.
    Kappa(CMat),
    /// Transmit gain toward the target, `a^H R a`.
    TargetGain,
    /// Total transmit power (minimized).
    MinPower,
}

/// Constraints every recovered beamformer must satisfy.
#[derive(Debug, Clone, Copy)]
pub struct CandidateConstraints {
    /// `None` disables the SINR constraints.
    pub gamma_c: Option<f64>,
    pub p_t: f64,
    pub snr_d_min: Option<f64>,
}

/// Maximizes `c^T x` over `{x >= 0, G x <= h}` by vertex enumeration. Only
/// meant for a handful of variables. Returns `None` when infeasible.
pub fn small_lp(c: &[f64], g: &[Vec<f64>], h: &[f64]) -> Option<Vec<f64>> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = g.iter().cloned().zip(h.iter().copied()).collect();
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = -1.0;
        rows.push((r, 0.0));
    }
    let feasible = |x: &[f64]| {
        rows.iter().all(|(r, b)| {
            let lhs: f64 = r.iter().zip(x).map(|(a, v)| a * v).sum();
            let scale = r
                .iter()
                .zip(x)
                .map(|(a, v)| (a * v).abs())
                .sum::<f64>()
                .max(b.abs())
                .max(1e-300);
            lhs <= b + 1e-10 * scale
        })
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    let total = rows.len();
    if total < n {
        return None;
    }
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| rows[idx[i]].0[j]);
        let b = nalgebra::DVector::from_fn(n, |i, _| rows[idx[i]].1);
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().map(|v| if v.abs() < 1e-300 { 0.0 } else { *v }).collect();
            if x.iter().all(|v| v.is_finite()) && feasible(&x) {
                let val: f64 = c.iter().zip(&x).map(|(a, v)| a * v).sum();
                if best.as_ref().is_none_or(|(bv, _)| val > *bv) {
                    best = Some((val, x));
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best.map(|(_, x)| x);
            }
            i -= 1;
            if idx[i] < total - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Optimal per-user powers for fixed unit-norm directions, or `None` if the
/// directions cannot meet the constraints.
fn repair_powers(
    dirs: &CMat,
    channels: &ChannelSet,
    cons: &CandidateConstraints,
    objective: &CandidateObjective,
) -> Option<CMat> {
    let c = dirs.ncols();
    let p_t = cons.p_t;
    let mut g = Vec::new();
    let mut h = Vec::new();
    if let Some(gamma) = cons.gamma_c {
        let hs = scaled_channels(channels, p_t);
        for (n, hn) in hs.iter().enumerate() {
            let gains: Vec<f64> = (0..c).map(|k| hn.dotc(&dirs.column(k)).norm_sqr()).collect();
            let row: Vec<f64> = (0..c)
                .map(|k| if k == n { -gains[k] } else { gamma * gains[k] })
                .collect();
            g.push(row);
            h.push(-gamma);
        }
    }
    g.push(vec![1.0; c]);
    h.push(1.0);
    if let Some(snr_min) = cons.snr_d_min {
        let m = channels.n_sr() as f64;
        let row: Vec<f64> = (0..c)
            .map(|k| -(&channels.b_matrix * dirs.column(k)).norm_squared() * p_t / m)
            .collect();
        g.push(row);
        h.push(-snr_min);
    }
    let obj: Vec<f64> = (0..c)
        .map(|k| {
            let d = dirs.column(k).into_owned();
            match objective {
                CandidateObjective::Kappa(gm) => quad_form(gm, &d),
                CandidateObjective::TargetGain => channels.a_t.dotc(&d).norm_sqr(),
                CandidateObjective::MinPower => -1.0,
            }
        })
        .collect();
    let q = small_lp(&obj, &g, &h)?;
    let mut w = dirs.clone();
    for (k, qk) in q.iter().enumerate() {
        let s = (qk.max(0.0) * p_t).sqrt();
        w.column_mut(k).scale_mut(s);
    }
    Some(w)
}

fn unit_columns(w: &CMat) -> Option<CMat> {
    let mut d = w.clone();
    for k in 0..d.ncols() {
        let n = d.column(k).norm();
        if !n.is_finite() {
            return None;
        }
        if n > 0.0 {
            d.column_mut(k).unscale_mut(n);
        }
    }
    Some(d)
}

fn candidate_score(w: &CMat, channels: &ChannelSet, objective: &CandidateObjective) -> Result<f64> {
    let r = covariance(w);
    Ok(match objective {
        CandidateObjective::Kappa(_) => kappa_of_covariance(&r, channels)?,
        CandidateObjective::TargetGain => quad_form(&r, &channels.a_t),
        CandidateObjective::MinPower => -power_of(w),
    })
}

/// Whether `w` meets the power budget and SINR / SNR_d targets.
pub fn satisfies_constraints(w: &CMat, channels: &ChannelSet, cons: &CandidateConstraints) -> bool {
    if power_of(w) > cons.p_t * (1.0 + POWER_SLACK) {
        return false;
    }
    if let Some(gamma) = cons.gamma_c {
        let s = eval_sinr(w, &channels.comm_channels, channels.sigma_c2);
        if s.iter().any(|&v| v < gamma * (1.0 - SINR_SLACK)) {
            return false;
        }
    }
    if let Some(min) = cons.snr_d_min {
        let (_, hd) = match channels.equivalent_channels(w) {
            Ok(v) => v,
            Err(_) => return false,
        };
        if snr_d(&hd, channels.sigma_r2, channels.n_sr()) < min * (1.0 - 1e-6) {
            return false;
        }
    }
    true
}

/// Recovers a rank-one beamformer from SDP covariance blocks.
///
/// Rank-one blocks give `sqrt(lambda_1) v_1` directly. Otherwise candidate
/// columns are drawn from `CN(0, X_n)` (plus the principal eigenvectors),
/// their powers re-optimized by a small LP, and the best feasible set kept.
pub fn gaussian_randomization(
    x_blocks: &[CMat],
    channels: &ChannelSet,
    cons: &CandidateConstraints,
    objective: &CandidateObjective,
    n_candidates: usize,
    rng: &mut SimRng,
) -> Result<CMat> {
    let n_t = channels.n_t();
    let c = x_blocks.len();
    let mut principal = CMat::zeros(n_t, c);
    let mut rank_one = true;
    for (k, x) in x_blocks.iter().enumerate() {
        let eig = hermitian_eigen(&hermitian_part(x))?;
        let l1 = eig.values[0].max(0.0);
        let l2 = eig.values.get(1).copied().unwrap_or(0.0).max(0.0);
        if l2 > RANK_ONE_RATIO * l1 {
            rank_one = false;
        }
        principal.set_column(k, &eig.vectors.column(0).scale(l1.sqrt()));
    }
    if rank_one {
        let mut w = principal.clone();
        let p = power_of(&w);
        if p > cons.p_t {
            w.scale_mut((cons.p_t / p).sqrt());
        }
        if satisfies_constraints(&w, channels, cons) {
            return Ok(w);
        }
    }

    let roots: Vec<CMat> = x_blocks
        .iter()
        .map(|x| psd_sqrt(&hermitian_part(x)))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, CMat)> = None;
    let consider = |dirs: Option<CMat>, best: &mut Option<(f64, CMat)>| -> Result<()> {
        let Some(dirs) = dirs else { return Ok(()) };
        let Some(w) = repair_powers(&dirs, channels, cons, objective) else {
            return Ok(());
        };
        if !satisfies_constraints(&w, channels, cons) {
            return Ok(());
        }
        let score = candidate_score(&w, channels, objective)?;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            *best = Some((score, w));
        }
        Ok(())
    };
    consider(unit_columns(&principal), &mut best)?;
    for _ in 0..n_candidates {
        let mut w = CMat::zeros(n_t, c);
        for (k, root) in roots.iter().enumerate() {
            let xi = CVec::from_fn(n_t, |_, _| crate::random::complex_normal(rng, 1.0));
            w.set_column(k, &(root * xi));
        }
        consider(unit_columns(&w), &mut best)?;
    }
    best.map(|(_, w)| w).ok_or(Error::RandomizationFailure(n_candidates))
}

fn finish(
    w: CMat,
    channels: &ChannelSet,
    design: Design,
    trace: Vec<f64>,
    gamma_d_used: Option<f64>,
    sdp_objective: f64,
    converged: bool,
) -> Result<BeamformerResult> {
    let with = channels.with_beamformer(&w)?;
    let m = channels.n_sr();
    let kappa = kappa_general(
        &with.h_t_tilde,
        &with.h_d_tilde,
        channels.sigma_r2,
        channels.block_length,
    )?;
    Ok(BeamformerResult {
        r_c: covariance(&w),
        kappa_achieved: kappa,
        sinrs: eval_sinr(&w, &channels.comm_channels, channels.sigma_c2),
        power: power_of(&w),
        design,
        trace,
        gamma_d_used,
        snr_t: snr_t(&with.h_t_tilde, channels.sigma_r2, m),
        snr_d: snr_d(&with.h_d_tilde, channels.sigma_r2, m),
        sdp_objective,
        converged,
        w,
    })
}

fn blocks_to_watts(x: &[CMat], p_t: f64) -> Vec<CMat> {
    x.iter().map(|b| b.scale(p_t)).collect()
}

fn sum_blocks(x: &[CMat]) -> CMat {
    let n = x[0].nrows();
    x.iter().fold(CMat::zeros(n, n), |acc, b| acc + b)
}

/// Minimum-power beamformer meeting every SINR target. Infeasible if that
/// power exceeds the budget.
pub fn comm_only(channels: &ChannelSet, gamma_c: f64, p_t: f64, opts: &OptimizerOptions) -> Result<BeamformerResult> {
    check_inputs(channels, gamma_c, p_t)?;
    let (w, min_power) = comm_only_covariances(channels, gamma_c, p_t).and_then(|blocks| {
        let min_power: f64 = blocks.iter().map(|b| b.trace().re).sum();
        let cons = CandidateConstraints {
            gamma_c: Some(gamma_c),
            p_t,
            snr_d_min: None,
        };
        let mut rng = master_rng(opts.seed);
        let w = gaussian_randomization(
            &blocks,
            channels,
            &cons,
            &CandidateObjective::MinPower,
            opts.n_candidates,
            &mut rng,
        )?;
        Ok((w, min_power))
    })?;
    finish(w, channels, Design::CommOnly, vec![], None, min_power, true)
}

/// SDP stage of [`comm_only`]: minimum-power covariances (watts).
pub fn comm_only_covariances(channels: &ChannelSet, gamma_c: f64, p_t: f64) -> Result<Vec<CMat>> {
    let n = channels.n_t();
    let c = channels.n_cu();
    let problem = SdpProblem {
        block_dim: n,
        n_blocks: c,
        objective: vec![-CMat::identity(n, n); c],
        constraints: sinr_constraints(channels, gamma_c, p_t),
    };
    let sol = solve_sdp(&problem)?.require_optimal()?;
    let rel_power = -sol.objective_value;
    if rel_power > 1.0 + POWER_SLACK {
        return Err(Error::Infeasible(format!(
            "SINR target needs {:.4e} W but the budget is {:.4e} W",
            rel_power * p_t,
            p_t
        )));
    }
    Ok(blocks_to_watts(&sol.x_blocks, p_t))
}

/// Alternating maximization of kappa (quadratic transform + SDP), followed by
/// Gaussian randomization. `sensing_only` drops the SINR constraints.
pub fn optimize_max_pd(
    channels: &ChannelSet,
    gamma_c: f64,
    p_t: f64,
    sensing_only: bool,
    opts: &OptimizerOptions,
) -> Result<BeamformerResult> {
    check_inputs(channels, gamma_c, p_t)?;
    let n = channels.n_t();
    let c = channels.n_cu();
    let isotropic = vec![CMat::identity(n, n).scale(p_t / (n * c) as f64); c];
    let first: Vec<CMat> = if sensing_only {
        isotropic.clone()
    } else {
        let base = comm_only_covariances(channels, gamma_c, p_t)?;
        let used: f64 = base.iter().map(|b| b.trace().re).sum();
        if used > 1e-12 * p_t {
            base.iter().map(|b| b.scale(p_t / used)).collect()
        } else {
            isotropic.clone()
        }
    };
    // the target-gain solution is feasible too; start from whichever is better
    let second = target_gain_blocks(channels, (!sensing_only).then_some(gamma_c), None, p_t)?.0;
    let k1 = kappa_of_covariance(&sum_blocks(&first), channels)?;
    let k2 = kappa_of_covariance(&sum_blocks(&second), channels)?;
    let mut r_blocks = if k2 > k1 { second } else { first };
    let mut constraints = vec![power_constraint(channels)];
    if !sensing_only {
        constraints.extend(sinr_constraints(channels, gamma_c, p_t));
    }

    let mut kappa = kappa_of_covariance(&sum_blocks(&r_blocks), channels)?;
    let mut trace = vec![kappa];
    let mut converged = false;
    let mut last_g = CMat::zeros(n, n);
    let mut last_obj = f64::NAN;
    for _ in 0..opts.k_max {
        let r_c = sum_blocks(&r_blocks);
        let u = quadratic_transform_u(&r_c, &channels.b_matrix, &channels.a_t)?;
        let g = surrogate_matrix(&u, &channels.b_matrix, &channels.a_t);
        let problem = SdpProblem {
            block_dim: n,
            n_blocks: c,
            objective: vec![g.scale(p_t); c],
            constraints: constraints.clone(),
        };
        let sol = solve_sdp(&problem)?.require_optimal()?;
        r_blocks = blocks_to_watts(&sol.x_blocks, p_t);
        last_obj = sol.objective_value - u.norm_squared();
        last_g = g;
        let next = kappa_of_covariance(&sum_blocks(&r_blocks), channels)?;
        trace.push(next);
        let rel = (next - kappa) / kappa.abs().max(f64::MIN_POSITIVE);
        kappa = next;
        if rel < opts.eps {
            converged = true;
            break;
        }
    }

    let cons = CandidateConstraints {
        gamma_c: (!sensing_only).then_some(gamma_c),
        p_t,
        snr_d_min: None,
    };
    let mut rng = master_rng(opts.seed);
    let w = gaussian_randomization(
        &r_blocks,
        channels,
        &cons,
        &CandidateObjective::Kappa(last_g),
        opts.n_candidates,
        &mut rng,
    )?;
    let design = if sensing_only {
        Design::MaxPdSensingOnly
    } else {
        Design::MaxPd
    };
    finish(w, channels, design, trace, None, last_obj, converged)
}

fn target_gain_design(
    channels: &ChannelSet,
    gamma_c: Option<f64>,
    gamma_d: Option<f64>,
    p_t: f64,
    design: Design,
    opts: &OptimizerOptions,
) -> Result<BeamformerResult> {
    let (blocks, sdp_objective) = target_gain_blocks(channels, gamma_c, gamma_d, p_t)?;
    let cons = CandidateConstraints {
        gamma_c,
        p_t,
        snr_d_min: gamma_d,
    };
    let mut rng = master_rng(opts.seed);
    let w = gaussian_randomization(
        &blocks,
        channels,
        &cons,
        &CandidateObjective::TargetGain,
        opts.n_candidates,
        &mut rng,
    )?;
    let gain = quad_form(&covariance(&w), &channels.a_t);
    finish(w, channels, design, vec![gain], gamma_d, sdp_objective, true)
}

/// SDP stage of the target-gain designs: covariances (watts) and the relaxed objective.
fn target_gain_blocks(
    channels: &ChannelSet,
    gamma_c: Option<f64>,
    gamma_d: Option<f64>,
    p_t: f64,
) -> Result<(Vec<CMat>, f64)> {
    let n = channels.n_t();
    let c = channels.n_cu();
    let at = hermitian_part(&outer(&channels.a_t, &channels.a_t));
    let mut constraints = vec![power_constraint(channels)];
    if let Some(g) = gamma_c {
        constraints.extend(sinr_constraints(channels, g, p_t));
    }
    if let Some(gd) = gamma_d {
        constraints.push(snrd_constraint(channels, gd, p_t));
    }
    let problem = SdpProblem {
        block_dim: n,
        n_blocks: c,
        objective: vec![at.scale(p_t); c],
        constraints,
    };
    let sol = solve_sdp(&problem)?.require_optimal()?;
    Ok((blocks_to_watts(&sol.x_blocks, p_t), sol.objective_value))
}

/// Maximizes the transmit gain toward the target under SINR and power constraints.
pub fn optimize_active(
    channels: &ChannelSet,
    gamma_c: f64,
    p_t: f64,
    opts: &OptimizerOptions,
) -> Result<BeamformerResult> {
    check_inputs(channels, gamma_c, p_t)?;
    target_gain_design(channels, Some(gamma_c), None, p_t, Design::Active, opts)
}

/// Target gain maximization with the power constraint only.
pub fn optimize_active_sensing_only(
    channels: &ChannelSet,
    p_t: f64,
    opts: &OptimizerOptions,
) -> Result<BeamformerResult> {
    check_inputs(channels, 0.0, p_t)?;
    target_gain_design(channels, None, None, p_t, Design::ActiveSensingOnly, opts)
}

/// Target gain maximization with an additional floor on the direct-path SNR.
pub fn optimize_snrd_threshold(
    channels: &ChannelSet,
    gamma_c: f64,
    gamma_d: f64,
    p_t: f64,
    opts: &OptimizerOptions,
) -> Result<BeamformerResult> {
    check_inputs(channels, gamma_c, p_t)?;
    if !(gamma_d >= 0.0 && gamma_d.is_finite()) {
        return Err(Error::Config(format!(
            "SNR_d threshold must be non-negative, got {gamma_d}"
        )));
    }
    target_gain_design(channels, Some(gamma_c), Some(gamma_d), p_t, Design::SnrdThreshold, opts)
}

/// Log-spaced thresholds between `lo_factor` and `hi_factor` times `reference`.
pub fn gamma_d_grid(reference: f64, lo_factor: f64, hi_factor: f64, points: usize) -> Vec<f64> {
    let (a, b) = ((reference * lo_factor).ln(), (reference * hi_factor).ln());
    (0..points)
        .map(|i| {
            let t = if points > 1 {
                i as f64 / (points - 1) as f64
            } else {
                0.0
            };
            (a + t * (b - a)).exp()
        })
        .collect()
}

/// Result of a threshold sweep: every attempted value and the best design.
#[derive(Debug, Clone)]
pub struct GammaDSweep {
    pub points: Vec<(f64, Option<f64>)>,
    pub best: BeamformerResult,
}

/// Sweeps 20 log-spaced SNR_d thresholds (0.1x to 100x the active design's
/// SNR_d) and keeps the one with the largest kappa. Infeasible points are
/// recorded with `None`.
pub fn sweep_gamma_d(channels: &ChannelSet, gamma_c: f64, p_t: f64, opts: &OptimizerOptions) -> Result<GammaDSweep> {
    let active = optimize_active(channels, gamma_c, p_t, opts)?;
    let grid = gamma_d_grid(active.snr_d.max(1e-12), 0.1, 100.0, 20);
    sweep_gamma_d_over(channels, gamma_c, p_t, &grid, opts)
}

pub fn sweep_gamma_d_over(
    channels: &ChannelSet,
    gamma_c: f64,
    p_t: f64,
    grid: &[f64],
    opts: &OptimizerOptions,
) -> Result<GammaDSweep> {
    let mut points = Vec::with_capacity(grid.len());
    let mut best: Option<BeamformerResult> = None;
    for &gd in grid {
        match optimize_snrd_threshold(channels, gamma_c, gd, p_t, opts) {
            Ok(r) => {
                points.push((gd, Some(r.kappa_achieved)));
                if best.as_ref().is_none_or(|b| r.kappa_achieved > b.kappa_achieved) {
                    best = Some(r);
                }
            }
            Err(Error::Infeasible(_)) | Err(Error::RandomizationFailure(_)) => points.push((gd, None)),
            Err(e) => return Err(e),
        }
    }
    let best = best.ok_or_else(|| Error::Infeasible("no SNR_d threshold in the sweep is attainable".into()))?;
    Ok(GammaDSweep { points, best })
}

/// Writes `W` as CSV with one column per user and `"re,im"` cells.
pub fn write_beamformer_csv<W: Write>(w: &CMat, mut out: W) -> Result<()> {
    let header: Vec<String> = (0..w.ncols()).map(|k| format!("cu{k}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for r in 0..w.nrows() {
        let cells: Vec<String> = (0..w.ncols())
            .map(|k| {
                let v: C64 = w[(r, k)];
                format!("\"{:e},{:e}\"", v.re, v.im)
            })
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Draws a random rank-one beamformer with the given total power.
pub fn random_beamformer<R: Rng + ?Sized>(rng: &mut R, n_t: usize, c: usize, power: f64) -> CMat {
    let w = crate::linalg::cn_matrix(rng, n_t, c, 1.0);
    let p = w.norm_squared();
    w.scale((power / p).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cn_vector;
    use crate::scenario::{build_channels, ScenarioConfig};

    #[test]
    fn sinr_single_user_and_orthogonal() {
        let h = vec![CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)])];
        let w = CMat::from_column_slice(2, 1, &[C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((eval_sinr(&w, &h, 0.5)[0] - 8.0).abs() < 1e-12);
        let w = CMat::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let h = vec![CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0)])];
        assert!(eval_sinr(&w, &h, 1.0)[0].abs() < 1e-15);
    }

    #[test]
    fn sinr_two_users_by_hand() {
        let mut rng = master_rng(5);
        let h = vec![cn_vector(&mut rng, 3, 1.0), cn_vector(&mut rng, 3, 1.0)];
        let w = crate::linalg::cn_matrix(&mut rng, 3, 2, 1.0);
        let got = eval_sinr(&w, &h, 0.3);
        for n in 0..2 {
            let mut g = [0.0; 2];
            for k in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..3 {
                    acc += h[n][i].conj() * w[(i, k)];
                }
                g[k] = acc.re * acc.re + acc.im * acc.im;
            }
            let want = g[n] / (0.3 + g[1 - n]);
            assert!((got[n] - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn small_lp_picks_best_vertex() {
        // max x + 2y s.t. x + y <= 1
        let x = small_lp(&[1.0, 2.0], &[vec![1.0, 1.0]], &[1.0]).unwrap();
        assert!((x[0]).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        // infeasible: x >= 2 and x <= 1
        assert!(small_lp(&[1.0], &[vec![-1.0], vec![1.0]], &[-2.0, 1.0]).is_none());
    }

    #[test]
    fn zero_covariance_gives_zero_u() {
        let mut rng = master_rng(2);
        let b = crate::linalg::cn_matrix(&mut rng, 3, 4, 1.0);
        let a = cn_vector(&mut rng, 4, 1.0);
        let u = quadratic_transform_u(&CMat::zeros(4, 4), &b, &a).unwrap();
        assert_eq!(u.norm(), 0.0);
    }

    #[test]
    fn surrogate_matches_kappa_at_optimal_u() {
        let cfg = ScenarioConfig::default();
        let mut rng = master_rng(3);
        let w = random_beamformer(&mut rng, cfg.n_t, cfg.n_cu(), cfg.p_t);
        let ch = build_channels(&cfg, C64::new(1.0, 0.0), &w).unwrap();
        let r = covariance(&w);
        let u = quadratic_transform_u(&r, &ch.b_matrix, &ch.a_t).unwrap();
        let g = surrogate_g(&r, &ch.b_matrix, &ch.a_t, &u);
        let via_g = 2.0 * ch.block_length as f64 * ch.mu0 * g;
        let direct = kappa_general(&ch.h_t_tilde, &ch.h_d_tilde, ch.sigma_r2, ch.block_length).unwrap();
        assert!((via_g - direct).abs() < 1e-9 * direct);
        let gm = surrogate_matrix(&u, &ch.b_matrix, &ch.a_t);
        let lin = crate::linalg::trace_product_re(&gm, &r) - u.norm_squared();
        assert!((lin - g).abs() < 1e-9 * g.abs());
    }

    #[test]
    fn beamformer_csv_layout() {
        let w = CMat::from_column_slice(2, 1, &[C64::new(1.0, -2.0), C64::new(0.5, 0.0)]);
        let mut buf = Vec::new();
        write_beamformer_csv(&w, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "cu0");
        assert_eq!(lines[1], "\"1e0,-2e0\"");
    }
}
