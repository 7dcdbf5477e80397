use proptest::prelude::*;

use passive_isac::asymptotics::{asymptotic_pd, asymptotic_pfa, kappa_eigform, kappa_general, snr_t};
use passive_isac::beamform::{comm_only, comm_only_covariances, optimize_max_pd, OptimizerOptions};
use passive_isac::detector::glrt_statistic_matrix;
use passive_isac::harness::validate::random_layout;
use passive_isac::linalg::{cn_matrix, db_to_linear, hermitian_eigenvalues, random_unitary, CMat, C64};
use passive_isac::random::master_rng;
use passive_isac::scenario::build_channels;
use passive_isac::waveform::delay_doppler_operator;

fn stacked(seed: u64, m: usize, l: usize, signal: f64) -> CMat {
    let mut rng = master_rng(seed);
    let c = 2;
    let s = cn_matrix(&mut rng, c, l, 1.0);
    let h_t = cn_matrix(&mut rng, m, c, signal);
    let h_d = cn_matrix(&mut rng, m, c, 5.0);
    let mut y = cn_matrix(&mut rng, 2 * m, l, 1.0);
    let mut top = y.rows_mut(0, m);
    top += &h_t * &s;
    let mut bottom = y.rows_mut(m, m);
    bottom += &h_d * &s;
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn glrt_statistic_is_non_negative(seed in any::<u64>(), m in 1usize..5, c in 1usize..4, l in 10usize..80, signal in 0.0f64..3.0) {
        let l = l.max(2 * m);
        let y = stacked(seed, m, l, signal);
        let r = glrt_statistic_matrix(&y, 1.0, c).unwrap();
        prop_assert!(r.statistic >= -1e-9, "statistic {}", r.statistic);
    }

    #[test]
    fn glrt_is_invariant_to_a_right_unitary(seed in any::<u64>(), m in 1usize..4, l in 8usize..40) {
        let l = l.max(2 * m);
        let y = stacked(seed, m, l, 0.5);
        let mut rng = master_rng(seed.wrapping_add(7));
        let u = random_unitary(&mut rng, l);
        let a = glrt_statistic_matrix(&y, 1.0, 2).unwrap().statistic;
        let b = glrt_statistic_matrix(&(&y * u), 1.0, 2).unwrap().statistic;
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn glrt_is_invariant_to_sr_relabeling(seed in any::<u64>(), m in 2usize..5, shift in 1usize..4) {
        let l = 30;
        let y = stacked(seed, m, l, 0.5);
        let perm: Vec<usize> = (0..m).map(|i| (i + shift) % m).collect();
        let mut p = CMat::zeros(2 * m, l);
        for (i, &src) in perm.iter().enumerate() {
            p.set_row(i, &y.row(src));
            p.set_row(m + i, &y.row(m + src));
        }
        let a = glrt_statistic_matrix(&y, 1.0, 2).unwrap().statistic;
        let b = glrt_statistic_matrix(&p, 1.0, 2).unwrap().statistic;
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
    }

    #[test]
    fn kappa_forms_agree_and_respect_the_active_bound(seed in any::<u64>(), m in 1usize..9, c in 1usize..5, l in 1usize..3000, vt in -2.0f64..1.0, vd in -2.0f64..2.0) {
        let mut rng = master_rng(seed);
        let h_t = cn_matrix(&mut rng, m, c, 10f64.powf(vt));
        let h_d = cn_matrix(&mut rng, m, c, 10f64.powf(vd));
        let sigma2 = 0.7;
        let general = kappa_general(&h_t, &h_d, sigma2, l).unwrap();
        let eig = kappa_eigform(&h_t, &h_d, sigma2, l).unwrap();
        prop_assert_eq!(eig.nu, 2 * m * c);
        prop_assert!(general >= 0.0);
        prop_assert!((general - eig.kappa).abs() <= 1e-10 * general.max(1e-300));
        let terms = eig.eigen_decomp.unwrap();
        let recon: f64 = terms.sigma_bar.iter().zip(&terms.delta).map(|(s, d)| s / (1.0 + s) * d).sum::<f64>()
            * 2.0 * l as f64 / sigma2;
        prop_assert!((recon - eig.kappa).abs() <= 1e-10 * eig.kappa.max(1e-300));
        let bound = 2.0 * l as f64 * m as f64 * snr_t(&h_t, sigma2, m);
        prop_assert!(general <= bound * (1.0 + 1e-12));

        let u = random_unitary(&mut rng, c);
        let rotated = kappa_general(&(&h_t * &u), &(&h_d * &u), sigma2, l).unwrap();
        prop_assert!((rotated - general).abs() <= 1e-9 * general.max(1e-300));
    }

    #[test]
    fn asymptotic_curves_are_monotone(nu in 1usize..40, rho in 0.1f64..60.0, kappa in 0.0f64..200.0, step in 0.1f64..10.0) {
        let pd = asymptotic_pd(rho, nu, kappa).unwrap();
        prop_assert!(asymptotic_pd(rho + step, nu, kappa).unwrap() <= pd + 1e-12);
        prop_assert!(asymptotic_pd(rho, nu, kappa + step).unwrap() >= pd - 1e-12);
        let pfa = asymptotic_pfa(rho, nu).unwrap();
        prop_assert!(asymptotic_pfa(rho + step, nu).unwrap() <= pfa + 1e-15);
        prop_assert!(pd >= pfa - 1e-12);
    }

    #[test]
    fn delay_doppler_operators_are_unitary(tau in 0.0f64..50.0, doppler in -3e3f64..3e3, l in 2usize..48) {
        let fs = 1e5;
        let d = delay_doppler_operator(tau / fs, doppler, l, fs);
        let gram = &d.matrix * d.matrix.adjoint();
        prop_assert!((gram - CMat::identity(l, l)).norm() < 1e-10 * l as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_scenarios_satisfy_geometric_invariants(seed in any::<u64>()) {
        let mut rng = master_rng(seed);
        let cfg = random_layout(&mut rng);
        let w = cn_matrix(&mut rng, cfg.n_t, cfg.n_cu(), 1e-3);
        let ch = build_channels(&cfg, C64::new(1.0, 0.0), &w).unwrap();
        for p in &ch.paths {
            prop_assert!(p.q_t.dotc(&p.b_d1).norm() < 1e-10);
            prop_assert!(p.q_d.dotc(&p.b_t2).norm() < 1e-10);
            prop_assert!(p.tau_t >= p.tau_d);
        }
        let sv = ch.h_t_tilde.clone().svd(false, false).singular_values;
        let top = sv.max();
        prop_assert!(sv.iter().filter(|&&s| s > 1e-8 * top.max(1e-300)).count() <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn design_dominance_holds_on_random_layouts(seed in any::<u64>()) {
        let mut rng = master_rng(seed);
        let cfg = random_layout(&mut rng);
        let w0 = CMat::zeros(cfg.n_t, cfg.n_cu());
        let ch = build_channels(&cfg, C64::new(1.0, 0.0), &w0).unwrap();
        let opts = OptimizerOptions { n_candidates: 200, ..OptimizerOptions::default() };
        let gamma = db_to_linear(12.0);
        let sensing = optimize_max_pd(&ch, gamma, cfg.p_t, true, &opts).unwrap();
        let joint = optimize_max_pd(&ch, gamma, cfg.p_t, false, &opts).unwrap();
        let comm = comm_only(&ch, gamma, cfg.p_t, &opts).unwrap();
        prop_assert!(sensing.kappa_achieved >= joint.kappa_achieved * (1.0 - 1e-3));
        prop_assert!(joint.kappa_achieved >= comm.kappa_achieved * (1.0 - 1e-3));
        for pair in joint.trace.windows(2) {
            prop_assert!(pair[1] >= pair[0] * (1.0 - 1e-8));
        }
    }

    #[test]
    fn sdp_solutions_are_deterministic_and_psd(seed in any::<u64>()) {
        let mut rng = master_rng(seed);
        let cfg = random_layout(&mut rng);
        let w0 = CMat::zeros(cfg.n_t, cfg.n_cu());
        let ch = build_channels(&cfg, C64::new(1.0, 0.0), &w0).unwrap();
        let a = comm_only_covariances(&ch, db_to_linear(10.0), cfg.p_t).unwrap();
        let b = comm_only_covariances(&ch, db_to_linear(10.0), cfg.p_t).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(1e-300));
            let ev = hermitian_eigenvalues(x).unwrap();
            let tr = x.trace().re;
            prop_assert!(ev.iter().all(|&v| v >= -1e-8 * tr));
        }
    }
}

#[test]
fn statistic_grows_with_the_target_signal() {
    let m = 2;
    let l = 200;
    let mean = |gain: f64| -> f64 {
        (0..1000u64)
            .map(|k| {
                glrt_statistic_matrix(&stacked(k, m, l, gain), 1.0, 2)
                    .unwrap()
                    .statistic
            })
            .sum::<f64>()
            / 1000.0
    };
    let levels = [0.0, 0.005, 0.02, 0.08];
    let means: Vec<f64> = levels.iter().map(|&g| mean(g)).collect();
    for pair in means.windows(2) {
        assert!(pair[1] > pair[0], "means {means:?}");
    }
}
