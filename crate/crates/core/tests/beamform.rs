use passive_isac::asymptotics::{kappa_general, kappa_single_cu, snr_d, snr_t};
use passive_isac::beamform::{
    comm_only, eval_sinr, optimize_active, optimize_active_sensing_only, optimize_max_pd, optimize_snrd_threshold,
    random_beamformer, sweep_gamma_d, OptimizerOptions,
};
use passive_isac::linalg::{db_to_linear, CMat, C64};
use passive_isac::random::master_rng;
use passive_isac::scenario::{build_channels, ChannelSet, ScenarioConfig};
use passive_isac::Error;

fn channels(cfg: &ScenarioConfig) -> ChannelSet {
    let w0 = CMat::zeros(cfg.n_t, cfg.n_cu());
    build_channels(cfg, C64::new(1.0, 0.0), &w0).unwrap()
}

fn opts() -> OptimizerOptions {
    OptimizerOptions {
        n_candidates: 300,
        ..OptimizerOptions::default()
    }
}

#[test]
fn single_user_comm_only_power_is_closed_form() {
    let cfg = ScenarioConfig {
        cu_positions: vec![[60.0, 40.0]],
        ..ScenarioConfig::default()
    };
    let ch = channels(&cfg);
    let gamma = db_to_linear(10.0);
    let r = comm_only(&ch, gamma, cfg.p_t, &opts()).unwrap();
    let h = &ch.comm_channels[0];
    let want = gamma * ch.sigma_c2 / h.norm_squared();
    assert!((r.power / want - 1.0).abs() < 1e-4, "power {} vs {}", r.power, want);
    assert!(r.sinrs[0] >= gamma * (1.0 - 1e-6));
}

#[test]
fn every_design_meets_its_constraints() {
    let cfg = ScenarioConfig::default();
    let ch = channels(&cfg);
    let gamma = db_to_linear(12.0);
    let o = opts();
    let designs = [
        comm_only(&ch, gamma, cfg.p_t, &o).unwrap(),
        optimize_active(&ch, gamma, cfg.p_t, &o).unwrap(),
        optimize_max_pd(&ch, gamma, cfg.p_t, false, &o).unwrap(),
        optimize_snrd_threshold(&ch, gamma, 1.0, cfg.p_t, &o).unwrap(),
    ];
    for d in &designs {
        assert!(d.power <= cfg.p_t * (1.0 + 1e-6), "{:?} power {}", d.design, d.power);
        let sinr = eval_sinr(&d.w, &ch.comm_channels, ch.sigma_c2);
        assert!(
            sinr.iter().all(|&s| s >= gamma * (1.0 - 1e-6)),
            "{:?} sinr {:?}",
            d.design,
            sinr
        );
    }
}

#[test]
fn max_pd_design_dominates_the_benchmarks_in_kappa() {
    let cfg = ScenarioConfig::default();
    let ch = channels(&cfg);
    let gamma = db_to_linear(12.0);
    let o = opts();
    let max_pd = optimize_max_pd(&ch, gamma, cfg.p_t, false, &o).unwrap();
    let active = optimize_active(&ch, gamma, cfg.p_t, &o).unwrap();
    let comm = comm_only(&ch, gamma, cfg.p_t, &o).unwrap();
    assert!(max_pd.converged);
    assert!(max_pd.kappa_achieved >= active.kappa_achieved * (1.0 - 1e-3));
    assert!(max_pd.kappa_achieved > comm.kappa_achieved);

    let sensing = optimize_max_pd(&ch, gamma, cfg.p_t, true, &o).unwrap();
    assert!(sensing.kappa_achieved >= max_pd.kappa_achieved * (1.0 - 1e-3));
    let ao = optimize_active_sensing_only(&ch, cfg.p_t, &o).unwrap();
    assert!(ao.snr_t >= active.snr_t * (1.0 - 1e-6));
}

#[test]
fn alternating_trace_is_non_decreasing() {
    let cfg = ScenarioConfig::default();
    let ch = channels(&cfg);
    let r = optimize_max_pd(&ch, db_to_linear(8.0), cfg.p_t, false, &opts()).unwrap();
    assert!(!r.trace.is_empty());
    for pair in r.trace.windows(2) {
        assert!(pair[1] >= pair[0] * (1.0 - 1e-6), "trace {:?}", r.trace);
    }
}

#[test]
fn reported_snrs_and_kappa_agree_with_the_channels() {
    let cfg = ScenarioConfig::default();
    let ch = channels(&cfg);
    let r = optimize_active(&ch, db_to_linear(6.0), cfg.p_t, &opts()).unwrap();
    let eq = ch.with_beamformer(&r.w).unwrap();
    let m = ch.n_sr();
    assert!((snr_t(&eq.h_t_tilde, ch.sigma_r2, m) / r.snr_t - 1.0).abs() < 1e-9);
    assert!((snr_d(&eq.h_d_tilde, ch.sigma_r2, m) / r.snr_d - 1.0).abs() < 1e-9);
    let k = kappa_general(&eq.h_t_tilde, &eq.h_d_tilde, ch.sigma_r2, ch.block_length).unwrap();
    assert!((k / r.kappa_achieved - 1.0).abs() < 1e-9);
}

#[test]
fn single_user_kappa_uses_the_closed_form() {
    let cfg = ScenarioConfig {
        cu_positions: vec![[60.0, 40.0]],
        ..ScenarioConfig::default()
    };
    let ch = channels(&cfg);
    let mut rng = master_rng(2);
    let w = random_beamformer(&mut rng, cfg.n_t, 1, cfg.p_t);
    let eq = ch.with_beamformer(&w).unwrap();
    let m = ch.n_sr();
    let st = snr_t(&eq.h_t_tilde, ch.sigma_r2, m);
    let sd = snr_d(&eq.h_d_tilde, ch.sigma_r2, m);
    let general = kappa_general(&eq.h_t_tilde, &eq.h_d_tilde, ch.sigma_r2, ch.block_length).unwrap();
    let closed = kappa_single_cu(ch.block_length, m, st, sd);
    assert!((general / closed - 1.0).abs() < 1e-10, "{general} vs {closed}");
}

#[test]
fn unreachable_sinr_is_reported_infeasible() {
    let cfg = ScenarioConfig::default();
    let ch = channels(&cfg);
    let gamma = db_to_linear(80.0);
    let o = opts();
    assert!(matches!(comm_only(&ch, gamma, cfg.p_t, &o), Err(Error::Infeasible(_))));
    assert!(matches!(
        optimize_max_pd(&ch, gamma, cfg.p_t, false, &o),
        Err(Error::Infeasible(_))
    ));
    assert!(matches!(
        optimize_active(&ch, gamma, cfg.p_t, &o),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn snrd_sweep_keeps_the_best_threshold() {
    let cfg = ScenarioConfig::default();
    let ch = channels(&cfg);
    let sweep = sweep_gamma_d(&ch, db_to_linear(12.0), cfg.p_t, &opts()).unwrap();
    let best = sweep
        .points
        .iter()
        .filter_map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best, sweep.best.kappa_achieved);
    assert!(sweep.points.iter().any(|p| p.1.is_some()));
}
