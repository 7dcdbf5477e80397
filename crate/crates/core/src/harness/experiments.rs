use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{CurveTable, DesignConfig, ExperimentConfig, Scheme, SweepAxis};
use crate::asymptotics::{
    asymptotic_pd, asymptotic_threshold, kappa_active, kappa_for_pd, kappa_general, kappa_single_cu,
};
use crate::beamform::{
    comm_only, optimize_active, optimize_max_pd, optimize_snrd_threshold, sweep_gamma_d, BeamformerResult,
    OptimizerOptions,
};
use crate::detector::{
    active_statistic, calibrate_from_samples, exceedance_rate, glrt_statistic, null_samples, threshold_from_sorted_desc,
};
use crate::error::{Error, Result};
use crate::linalg::{cn_matrix, db_to_linear, linear_to_db, quad_form, CMat, C64};
use crate::random::{complex_normal, derive_seed, master_rng, trial_rng, SimRng};
use crate::scenario::{build_channels, steering_vector, ScenarioConfig};
use crate::waveform::{gen_symbols_gaussian, synth_equivalent_from, Hypothesis, Observation};

/// Monte Carlo detection-probability estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdEstimate {
    pub pd: f64,
    pub se: f64,
    pub n_trials: usize,
}

impl PdEstimate {
    pub fn from_samples(samples: &[f64], rho: f64) -> Self {
        let pd = exceedance_rate(samples, rho);
        let n = samples.len();
        Self {
            pd,
            se: (pd * (1.0 - pd) / n.max(1) as f64).sqrt(),
            n_trials: n,
        }
    }
}

/// Designs the beamformer of `scheme` on one channel realization.
pub fn design_scheme(
    scheme: Scheme,
    channels: &crate::scenario::ChannelSet,
    gamma_c: f64,
    p_t: f64,
    design: &DesignConfig,
    opts: &OptimizerOptions,
) -> Result<BeamformerResult> {
    match scheme {
        Scheme::Active | Scheme::MaxSnrT => optimize_active(channels, gamma_c, p_t, opts),
        Scheme::MaxPd => optimize_max_pd(channels, gamma_c, p_t, false, opts),
        Scheme::SensingOnly => optimize_max_pd(channels, gamma_c, p_t, true, opts),
        Scheme::SnrdThreshold => match design.gamma_d {
            Some(gd) => optimize_snrd_threshold(channels, gamma_c, gd, p_t, opts),
            None => sweep_gamma_d(channels, gamma_c, p_t, opts).map(|s| s.best),
        },
        Scheme::CommOnly => comm_only(channels, gamma_c, p_t, opts),
    }
}

/// A designed scheme ready for Monte Carlo: equivalent channels for a unit
/// reflection coefficient plus the detector to run.
#[derive(Debug, Clone)]
pub struct SchemeSetup {
    pub scheme: Scheme,
    pub design: BeamformerResult,
    pub h_t_unit: CMat,
    pub h_d: CMat,
    pub sigma_r2: f64,
    pub rcs_variance: f64,
    pub block_length: usize,
}

impl SchemeSetup {
    /// Designs with the nominal reflection coefficient `sqrt(rcs_variance)`.
    pub fn new(
        scheme: Scheme,
        scenario: &ScenarioConfig,
        gamma_c: f64,
        design: &DesignConfig,
        opts: &OptimizerOptions,
    ) -> Result<Self> {
        let nominal = C64::new(scenario.rcs_variance.sqrt(), 0.0);
        let w0 = CMat::zeros(scenario.n_t, scenario.n_cu());
        let channels = build_channels(scenario, nominal, &w0)?;
        let result = design_scheme(scheme, &channels, gamma_c, scenario.p_t, design, opts)?;
        let with = channels.with_beamformer(&result.w)?;
        let unit = with.with_rcs(C64::new(1.0, 0.0));
        Ok(Self {
            scheme,
            design: result,
            h_t_unit: unit.h_t_tilde,
            h_d: with.h_d_tilde,
            sigma_r2: scenario.sigma_r2,
            rcs_variance: scenario.rcs_variance,
            block_length: scenario.block_length,
        })
    }

    pub fn n_sr(&self) -> usize {
        self.h_t_unit.nrows()
    }

    pub fn n_streams(&self) -> usize {
        self.h_t_unit.ncols()
    }

    /// Degrees of freedom of the large-sample statistic.
    pub fn nu(&self) -> usize {
        2 * self.n_sr() * self.n_streams()
    }
}

/// One detection statistic. Under `H1` the reflection coefficient is redrawn
/// from CN(0, rcs_variance).
pub fn trial_statistic(setup: &SchemeSetup, hypothesis: Hypothesis, rng: &mut SimRng) -> Result<f64> {
    let c = setup.n_streams();
    let m = setup.n_sr();
    let symbols = gen_symbols_gaussian(rng, c, setup.block_length);
    let h_t = match hypothesis {
        Hypothesis::H1 => {
            let alpha = complex_normal(rng, setup.rcs_variance);
            setup.h_t_unit.map(|v| v * alpha)
        }
        Hypothesis::H0 => setup.h_t_unit.clone(),
    };
    let obs = synth_equivalent_from(&h_t, &setup.h_d, setup.sigma_r2, &symbols, hypothesis, rng)?;
    if setup.scheme.uses_active_detector() {
        let top = obs.y.rows(0, m).into_owned();
        active_statistic(&top, &symbols, setup.sigma_r2)
    } else {
        Ok(glrt_statistic(&obs, setup.sigma_r2, c)?.statistic)
    }
}

fn statistics(setup: &SchemeSetup, hypothesis: Hypothesis, n: usize, seed: u64) -> Result<Vec<f64>> {
    null_samples(|rng| trial_statistic(setup, hypothesis, rng), n, seed)
}

/// Calibrates the scheme's threshold on `n_cal` null trials and estimates the
/// detection probability on `n_det` alternative trials. Returns the estimate
/// and the threshold.
pub fn estimate_pd(setup: &SchemeSetup, pfa: f64, n_cal: usize, n_det: usize, seed: u64) -> Result<(PdEstimate, f64)> {
    let null = statistics(setup, Hypothesis::H0, n_cal, derive_seed(seed, 1))?;
    let rho = calibrate_from_samples(&null, pfa, seed)?.rho;
    let alt = statistics(setup, Hypothesis::H1, n_det, derive_seed(seed, 2))?;
    Ok((PdEstimate::from_samples(&alt, rho), rho))
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn options(config: &ExperimentConfig) -> OptimizerOptions {
    config.design.options(derive_seed(config.seed, 0xBEA4))
}

/// Null and alternative statistics of every scheme at one operating point.
struct PointStats {
    setup: Result<SchemeSetup>,
    null_sorted: Vec<f64>,
    alt: Vec<f64>,
}

fn point_stats(
    config: &ExperimentConfig,
    scenario: &ScenarioConfig,
    gamma_c: f64,
    point: u64,
) -> Result<Vec<PointStats>> {
    let opts = options(config);
    let mut out = Vec::with_capacity(config.design.schemes.len());
    for &scheme in &config.design.schemes {
        let setup = SchemeSetup::new(scheme, scenario, gamma_c, &config.design, &opts);
        let setup = match setup {
            Err(e @ (Error::Infeasible(_) | Error::RandomizationFailure(_))) => Err(e),
            Err(e) => return Err(e),
            ok => ok,
        };
        let (null_sorted, alt) = match &setup {
            Ok(s) => {
                let base = derive_seed(config.seed, point.wrapping_mul(64) + scheme_salt(scheme));
                let null = statistics(s, Hypothesis::H0, config.calibration_trials(), derive_seed(base, 1))?;
                let alt = statistics(s, Hypothesis::H1, config.detection_trials(), derive_seed(base, 2))?;
                (sorted_desc(null), alt)
            }
            Err(_) => (vec![], vec![]),
        };
        out.push(PointStats {
            setup,
            null_sorted,
            alt,
        });
    }
    Ok(out)
}

fn scheme_salt(s: Scheme) -> u64 {
    s.salt()
}

fn scheme_columns(schemes: &[Scheme]) -> Vec<String> {
    schemes
        .iter()
        .flat_map(|s| [format!("pd_{}", s.label()), format!("se_{}", s.label())])
        .collect()
}

fn design_summary(stats: &[PointStats]) -> BTreeMap<String, serde_json::Value> {
    stats
        .iter()
        .filter_map(|p| p.setup.as_ref().ok())
        .map(|s| {
            (
                s.scheme.label().to_string(),
                serde_json::to_value(&s.design).unwrap_or(serde_json::Value::Null),
            )
        })
        .collect()
}

/// Empirical and asymptotic thresholds of every scheme at the configured false-alarm rate.
pub fn run_calibrate(config: &ExperimentConfig) -> Result<CurveTable> {
    let pfa = config.pfa();
    let scenario = config.scenario();
    let opts = options(config);
    let mut table = CurveTable::new(["scheme_index", "rho", "rho_asymptotic", "nu", "pfa", "n_trials"]);
    let mut thresholds = BTreeMap::new();
    for (k, &scheme) in config.design.schemes.iter().enumerate() {
        let setup = SchemeSetup::new(scheme, &scenario, config.gamma_c(), &config.design, &opts)?;
        let seed = derive_seed(config.seed, scheme_salt(scheme));
        let samples = statistics(&setup, Hypothesis::H0, config.calibration_trials(), seed)?;
        let th = calibrate_from_samples(&samples, pfa, seed)?;
        let rho_asym = asymptotic_threshold(pfa, setup.nu())?;
        table.push_labeled(
            vec![k as f64, th.rho, rho_asym, setup.nu() as f64, pfa, th.n_trials as f64],
            scheme.label(),
        );
        thresholds.insert(scheme.label().to_string(), th);
    }
    table.set_meta("thresholds", &thresholds);
    Ok(table)
}

/// Detection probability against false-alarm rate for every scheme.
pub fn run_roc(config: &ExperimentConfig) -> Result<CurveTable> {
    let scenario = config.scenario();
    let stats = point_stats(config, &scenario, config.gamma_c(), 0)?;
    for (p, s) in stats.iter().zip(&config.design.schemes) {
        if let Err(e) = &p.setup {
            return Err(Error::Infeasible(format!("{} design: {e}", s.label())));
        }
    }
    let mut pfas = config.axes.pfa_grid.clone();
    pfas.sort_by(f64::total_cmp);
    let mut cols = vec!["pfa".to_string()];
    cols.extend(scheme_columns(&config.design.schemes));
    let mut table = CurveTable::new(cols);
    let mut rhos: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &pfa in &pfas {
        let mut row = vec![pfa];
        for (p, s) in stats.iter().zip(&config.design.schemes) {
            let rho = threshold_from_sorted_desc(&p.null_sorted, pfa);
            let est = PdEstimate::from_samples(&p.alt, rho);
            row.extend([est.pd, est.se]);
            rhos.entry(s.label().to_string()).or_default().push(rho);
        }
        table.push(row);
    }
    table.set_meta("thresholds", &rhos);
    table.set_meta("designs", design_summary(&stats));
    Ok(table)
}

fn push_point(table: &mut CurveTable, x: f64, stats: &[PointStats], schemes: &[Scheme], pfa: f64) {
    let mut row = vec![x];
    let mut infeasible = Vec::new();
    for (p, s) in stats.iter().zip(schemes) {
        if p.setup.is_ok() {
            let rho = threshold_from_sorted_desc(&p.null_sorted, pfa);
            let est = PdEstimate::from_samples(&p.alt, rho);
            row.extend([est.pd, est.se]);
        } else {
            row.extend([f64::NAN, f64::NAN]);
            infeasible.push(s.label());
        }
    }
    if infeasible.is_empty() {
        table.push(row);
    } else {
        table.push_labeled(row, format!("infeasible: {}", infeasible.join(" ")));
    }
}

/// Detection probability against the SINR requirement. Every scheme is
/// re-designed and re-calibrated at each point; infeasible points are kept
/// and flagged.
pub fn run_tradeoff(config: &ExperimentConfig) -> Result<CurveTable> {
    let scenario = config.scenario();
    let mut axis = config.axes.gamma_c_db.clone();
    axis.sort_by(f64::total_cmp);
    let mut cols = vec!["gamma_c_db".to_string()];
    cols.extend(scheme_columns(&config.design.schemes));
    let mut table = CurveTable::new(cols);
    let mut kappas = Vec::new();
    for (i, &g_db) in axis.iter().enumerate() {
        let stats = point_stats(config, &scenario, db_to_linear(g_db), i as u64)?;
        kappas.push(
            stats
                .iter()
                .map(|p| p.setup.as_ref().map(|s| s.design.kappa_achieved).ok())
                .collect::<Vec<_>>(),
        );
        push_point(&mut table, g_db, &stats, &config.design.schemes, config.pfa());
    }
    table.set_meta("kappa", &kappas);
    Ok(table)
}

/// Detection probability against RCS variance or transmit power.
pub fn run_sweep(config: &ExperimentConfig) -> Result<CurveTable> {
    let base = config.scenario();
    let (name, mut axis) = match config.axes.sweep {
        SweepAxis::Rcs => ("rcs_dbsm", config.axes.rcs_dbsm.clone()),
        SweepAxis::Power => ("power_dbw", config.axes.power_dbw.clone()),
    };
    axis.sort_by(f64::total_cmp);
    let mut cols = vec![name.to_string()];
    cols.extend(scheme_columns(&config.design.schemes));
    let mut table = CurveTable::new(cols);
    for (i, &v) in axis.iter().enumerate() {
        let mut scenario = base.clone();
        match config.axes.sweep {
            SweepAxis::Rcs => scenario.rcs_variance = db_to_linear(v),
            SweepAxis::Power => scenario.p_t = db_to_linear(v),
        }
        let stats = point_stats(config, &scenario, config.gamma_c(), i as u64)?;
        push_point(&mut table, v, &stats, &config.design.schemes, config.pfa());
    }
    Ok(table)
}

/// Unit-Frobenius random channel shape.
fn unit_shape(rng: &mut SimRng, m: usize, c: usize) -> CMat {
    let h = cn_matrix(rng, m, c, 1.0);
    let n = h.norm();
    h.unscale(n)
}

/// Scales a unit-Frobenius shape so that `||H||^2 / (M sigma^2) = snr`.
fn scaled_shape(shape: &CMat, snr: f64, sigma_r2: f64) -> CMat {
    shape.scale((snr * shape.nrows() as f64 * sigma_r2).sqrt())
}

/// Passive (asymptotic and empirical) and active detection probability over an
/// (SNR_t, SNR_d) grid. Channel shapes are drawn at random and scaled to hit
/// each grid point exactly; the asymptotic value averages over the shapes.
pub fn run_contour(config: &ExperimentConfig) -> Result<CurveTable> {
    let scenario = config.scenario();
    let m = scenario.n_sr();
    let c = config.axes.contour_users;
    let l = scenario.block_length;
    let sigma_r2 = scenario.sigma_r2;
    let pfa = config.pfa();
    let nu = 2 * m * c;
    let rho_asym = asymptotic_threshold(pfa, nu)?;

    let mut shape_rng = master_rng(derive_seed(config.seed, 0x5A9E));
    let shapes: Vec<(CMat, CMat)> = (0..config.axes.contour_shapes)
        .map(|_| (unit_shape(&mut shape_rng, m, c), unit_shape(&mut shape_rng, m, c)))
        .collect();

    let mut snr_t = config.axes.snr_t_db.clone();
    let mut snr_d = config.axes.snr_d_db.clone();
    snr_t.sort_by(f64::total_cmp);
    snr_d.sort_by(f64::total_cmp);

    let n_det = config.detection_trials();
    let n_cal = config.calibration_trials();
    let glrt = |h_t: &CMat, h_d: &CMat, hyp: Hypothesis, rng: &mut SimRng| -> Result<f64> {
        let s = gen_symbols_gaussian(rng, c, l);
        let obs: Observation = synth_equivalent_from(h_t, h_d, sigma_r2, &s, hyp, rng)?;
        Ok(glrt_statistic(&obs, sigma_r2, c)?.statistic)
    };

    // the null distribution depends on H_d only
    let mut rho_emp = Vec::with_capacity(snr_d.len());
    for (j, &d_db) in snr_d.iter().enumerate() {
        let d_lin = db_to_linear(d_db);
        let seed = derive_seed(config.seed, 0x1000 + j as u64);
        let samples = null_samples(
            |rng| {
                let k = rng_index(rng, shapes.len());
                let h_d = scaled_shape(&shapes[k].1, d_lin, sigma_r2);
                glrt(&h_d.map(|_| C64::new(0.0, 0.0)), &h_d, Hypothesis::H0, rng)
            },
            n_cal,
            seed,
        )?;
        rho_emp.push(calibrate_from_samples(&samples, pfa, seed)?.rho);
    }

    let mut table = CurveTable::new([
        "snr_t_db",
        "snr_d_db",
        "pd_asymptotic",
        "pd_empirical",
        "se_empirical",
        "pd_active",
    ]);
    let rho_act = rho_asym;
    for (i, &t_db) in snr_t.iter().enumerate() {
        let t_lin = db_to_linear(t_db);
        let pd_active = asymptotic_pd(rho_act, nu, kappa_active(l, m, t_lin))?;
        for (j, &d_db) in snr_d.iter().enumerate() {
            let d_lin = db_to_linear(d_db);
            let pd_asym = shapes
                .par_iter()
                .map(|(st, sd)| {
                    let kappa = kappa_general(
                        &scaled_shape(st, t_lin, sigma_r2),
                        &scaled_shape(sd, d_lin, sigma_r2),
                        sigma_r2,
                        l,
                    )?;
                    asymptotic_pd(rho_asym, nu, kappa)
                })
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .sum::<f64>()
                / shapes.len() as f64;
            let seed = derive_seed(config.seed, 0x2000 + (i * snr_d.len() + j) as u64);
            let alt: Vec<f64> = (0..n_det)
                .into_par_iter()
                .map(|k| {
                    let mut rng = trial_rng(seed, k as u64);
                    let (st, sd) = &shapes[k % shapes.len()];
                    glrt(
                        &scaled_shape(st, t_lin, sigma_r2),
                        &scaled_shape(sd, d_lin, sigma_r2),
                        Hypothesis::H1,
                        &mut rng,
                    )
                })
                .collect::<Result<_>>()?;
            let est = PdEstimate::from_samples(&alt, rho_emp[j]);
            table.push(vec![t_db, d_db, pd_asym, est.pd, est.se, pd_active]);
        }
    }
    table.set_meta("rho_asymptotic", rho_asym);
    table.set_meta("rho_empirical", &rho_emp);
    table.set_meta("nu", nu);
    Ok(table)
}

fn rng_index(rng: &mut SimRng, n: usize) -> usize {
    use rand::Rng;
    rng.random_range(0..n)
}

fn crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    if ys.first().is_some_and(|&y| y >= level) {
        return xs.first().copied();
    }
    for k in 1..xs.len() {
        let (y0, y1) = (ys[k - 1], ys[k]);
        if y0 < level && y1 >= level {
            let t = (level - y0) / (y1 - y0);
            return Some(xs[k - 1] + t * (xs[k] - xs[k - 1]));
        }
    }
    None
}

/// SNR_t (dB) at which each detection surface first reaches `level`, per
/// SNR_d row. Values are linearly interpolated between neighbouring SNR_t grid
/// points; rows without a crossing are flagged.
pub fn extract_contour(surface: &CurveTable, level: f64) -> Result<CurveTable> {
    let col = |name: &str| {
        surface
            .column(name)
            .ok_or_else(|| Error::Config(format!("surface table lacks column {name}")))
    };
    let t = col("snr_t_db")?;
    let d = col("snr_d_db")?;
    let surfaces = ["pd_asymptotic", "pd_empirical", "pd_active"];
    let values: Vec<Vec<f64>> = surfaces.iter().map(|s| col(s)).collect::<Result<_>>()?;
    let mut d_axis = d.clone();
    d_axis.sort_by(f64::total_cmp);
    d_axis.dedup();

    let mut table = CurveTable::new([
        "snr_d_db",
        "snr_t_db_asymptotic",
        "snr_t_db_empirical",
        "snr_t_db_active",
    ]);
    for &dv in &d_axis {
        let idx: Vec<usize> = (0..d.len()).filter(|&k| d[k] == dv).collect();
        let xs: Vec<f64> = idx.iter().map(|&k| t[k]).collect();
        let mut row = vec![dv];
        let mut missing = Vec::new();
        for (s, v) in surfaces.iter().zip(&values) {
            let ys: Vec<f64> = idx.iter().map(|&k| v[k]).collect();
            match crossing(&xs, &ys, level) {
                Some(x) => row.push(x),
                None => {
                    row.push(f64::NAN);
                    missing.push(*s);
                }
            }
        }
        if missing.is_empty() {
            table.push(row);
        } else {
            table.push_labeled(row, format!("no crossing: {}", missing.join(" ")));
        }
    }
    table.set_meta("level", level);
    Ok(table)
}

/// Linear SNR_t at which the single-user asymptotic detection probability
/// equals `pd`. `snr_d = None` gives the active-detection contour.
pub fn asymptotic_contour_snr_t(pd: f64, pfa: f64, l: usize, m: usize, snr_d: Option<f64>) -> Result<f64> {
    let nu = 2 * m;
    let rho = asymptotic_threshold(pfa, nu)?;
    let kappa = kappa_for_pd(pd, rho, nu)?;
    let per_unit = match snr_d {
        Some(d) => kappa_single_cu(l, m, 1.0, d),
        None => kappa_active(l, m, 1.0),
    };
    Ok(kappa / per_unit)
}

/// Transmit beampattern `a(theta)^H R_c a(theta)` in dB over `angles_deg`.
pub fn run_beampattern(w: &CMat, scenario: &ScenarioConfig, angles_deg: &[f64]) -> Result<CurveTable> {
    if w.nrows() != scenario.n_t {
        return Err(Error::DimensionMismatch(format!(
            "beamformer has {} rows, expected {}",
            w.nrows(),
            scenario.n_t
        )));
    }
    let r = w * w.adjoint();
    let mut table = CurveTable::new(["angle_deg", "gain", "gain_db"]);
    let mut angles = angles_deg.to_vec();
    angles.sort_by(f64::total_cmp);
    for a in angles {
        let g = pattern_value(&r, scenario, a);
        table.push(vec![a, g, linear_to_db(g.max(f64::MIN_POSITIVE))]);
    }
    table.set_meta("power", r.trace().re);
    Ok(table)
}

fn pattern_value(r: &CMat, scenario: &ScenarioConfig, angle_deg: f64) -> f64 {
    let a = steering_vector(
        angle_deg.to_radians(),
        scenario.n_t,
        scenario.antenna_spacing,
        scenario.carrier_wavelength,
    );
    quad_form(r, &a).max(0.0)
}

/// Beampatterns of every configured scheme, one dB column each.
pub fn run_beampattern_experiment(config: &ExperimentConfig) -> Result<CurveTable> {
    let scenario = config.scenario();
    let opts = options(config);
    let mut angles = config.axes.angles.angles_deg();
    angles.sort_by(f64::total_cmp);
    let mut covs = Vec::new();
    for &s in &config.design.schemes {
        let setup = SchemeSetup::new(s, &scenario, config.gamma_c(), &config.design, &opts)?;
        covs.push(setup.design.r_c.clone());
    }
    let mut cols = vec!["angle_deg".to_string()];
    cols.extend(config.design.schemes.iter().map(|s| format!("{}_db", s.label())));
    let mut table = CurveTable::new(cols);
    for &a in &angles {
        let mut row = vec![a];
        row.extend(
            covs.iter()
                .map(|r| linear_to_db(pattern_value(r, &scenario, a).max(f64::MIN_POSITIVE))),
        );
        table.push(row);
    }
    let w0 = CMat::zeros(scenario.n_t, scenario.n_cu());
    let ch = build_channels(&scenario, C64::new(1.0, 0.0), &w0)?;
    table.set_meta("theta_t_deg", ch.theta_t.to_degrees());
    table.set_meta(
        "theta_d_deg",
        ch.paths.iter().map(|p| p.theta_d.to_degrees()).collect::<Vec<_>>(),
    );
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.1, 0.5, 0.9];
        assert!((crossing(&x, &y, 0.7).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(crossing(&x, &y, 0.95), None);
        assert_eq!(crossing(&x, &y, 0.05), Some(0.0));
    }

    #[test]
    fn pd_estimate_standard_error() {
        let s = [1.0, 2.0, 3.0, 4.0];
        let e = PdEstimate::from_samples(&s, 2.5);
        assert_eq!(e.pd, 0.5);
        assert!((e.se - 0.25).abs() < 1e-12);
    }

    #[test]
    fn active_and_strong_direct_contours_meet() {
        let act = asymptotic_contour_snr_t(0.9, 1e-3, 500, 4, None).unwrap();
        let pas = asymptotic_contour_snr_t(0.9, 1e-3, 500, 4, Some(1e4 / 4.0)).unwrap();
        assert!((pas / act - 1.0).abs() < 0.01);
    }
}
