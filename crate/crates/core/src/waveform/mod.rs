//! Transmit symbols, the two-channel received signal model and the SR front end.

mod delay_doppler;
pub mod ofdm;

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use delay_doppler::{delay_doppler_operator, DelayDopplerKernel, DelayDopplerOp};
pub use ofdm::{OfdmParams, OfdmPayload};

use crate::error::{Error, Result};
use crate::linalg::{cn_matrix, CMat, C64};
use crate::scenario::ChannelSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Target absent.
    H0,
    /// Target present.
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    Gaussian,
    Qam16Ofdm(OfdmPayload),
}

/// Transmitted symbols, one row per user and one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub data: CMat,
    pub modulation: Modulation,
}

impl SymbolBlock {
    pub fn n_streams(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    /// Sample rate implied by the waveform, if it fixes one.
    pub fn sample_rate(&self) -> Option<f64> {
        match &self.modulation {
            Modulation::Gaussian => None,
            Modulation::Qam16Ofdm(p) => Some(p.params.sample_rate()),
        }
    }
}

/// Aggregated observation. Rows `0..M` are the compensated surveillance
/// outputs, rows `M..2M` the compensated reference outputs.
#[derive(Debug, Clone)]
pub struct Observation {
    pub y: CMat,
    /// Raw per-SR array outputs `(surveillance n_1 x L, reference n_2 x L)`.
    pub per_sr_raw: Option<Vec<(CMat, CMat)>>,
}

impl Observation {
    pub fn from_matrix(y: CMat) -> Self {
        Self { y, per_sr_raw: None }
    }

    pub fn n_sr(&self) -> usize {
        self.y.nrows() / 2
    }

    pub fn block_length(&self) -> usize {
        self.y.ncols()
    }

    pub fn target_rows(&self) -> CMat {
        let m = self.n_sr();
        self.y.rows(0, m).into_owned()
    }

    pub fn direct_rows(&self) -> CMat {
        let m = self.n_sr();
        self.y.rows(m, m).into_owned()
    }

    /// Writes the aggregated matrix as CSV, one row per channel, `re,im` column pairs.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.y.ncols())
            .flat_map(|l| [format!("re{l}"), format!("im{l}")])
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for r in 0..self.y.nrows() {
            let cells: Vec<String> = (0..self.y.ncols())
                .flat_map(|c| {
                    let v = self.y[(r, c)];
                    [format!("{:e}", v.re), format!("{:e}", v.im)]
                })
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// i.i.d. CN(0, 1) symbols.
pub fn gen_symbols_gaussian<R: Rng + ?Sized>(rng: &mut R, c: usize, l: usize) -> SymbolBlock {
    SymbolBlock {
        data: cn_matrix(rng, c, l, 1.0),
        modulation: Modulation::Gaussian,
    }
}

/// 16-QAM OFDM symbols for `c` users. `l` must equal `params.block_len()`.
pub fn gen_symbols_ofdm<R: Rng + ?Sized>(rng: &mut R, c: usize, params: &OfdmParams, l: usize) -> Result<SymbolBlock> {
    params.validate()?;
    if l != params.block_len() {
        return Err(Error::Config(format!(
            "block length {l} does not match {} frames of {} samples",
            params.n_frames,
            params.frame_len()
        )));
    }
    let (data, payload) = ofdm::modulate(rng, c, params)?;
    Ok(SymbolBlock {
        data,
        modulation: Modulation::Qam16Ofdm(payload),
    })
}

fn check_dims(channels: &ChannelSet, w: &CMat, symbols: &SymbolBlock) -> Result<()> {
    if w.nrows() != channels.n_t() {
        return Err(Error::DimensionMismatch(format!(
            "beamformer has {} rows, BS has {} antennas",
            w.nrows(),
            channels.n_t()
        )));
    }
    if w.ncols() != symbols.n_streams() {
        return Err(Error::DimensionMismatch(format!(
            "beamformer has {} columns, symbol block has {} streams",
            w.ncols(),
            symbols.n_streams()
        )));
    }
    Ok(())
}

/// Full physical model: per-SR surveillance and reference array outputs with
/// delay-Doppler operators and CN(0, sigma_r^2) noise. Under `H0` the target
/// echo is absent from both arrays.
pub fn synth_received<R: Rng + ?Sized>(
    channels: &ChannelSet,
    w: &CMat,
    symbols: &SymbolBlock,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<Observation> {
    check_dims(channels, w, symbols)?;
    let l = symbols.len();
    let kernel = DelayDopplerKernel::new(l, channels.sample_rate);
    let x = w * &symbols.data;
    let tx_toward = |a: &crate::linalg::CVec| -> Vec<C64> { (a.adjoint() * &x).iter().copied().collect() };
    let target_tx = tx_toward(&channels.a_t);

    let mut raw = Vec::with_capacity(channels.n_sr());
    for p in &channels.paths {
        let mut target_row = target_tx.clone();
        kernel.delay_row(&mut target_row, p.tau_t, p.doppler);
        let mut direct_row = tx_toward(&p.a_d);
        kernel.delay_row(&mut direct_row, p.tau_d, 0.0);

        let build = |b_t: &crate::linalg::CVec, b_d: &crate::linalg::CVec, rng: &mut R| -> CMat {
            let n = b_t.len();
            let mut y = cn_matrix(rng, n, l, channels.sigma_r2);
            for col in 0..l {
                let d = direct_row[col] * p.alpha_d;
                let t = target_row[col] * p.alpha_t;
                for r in 0..n {
                    y[(r, col)] += b_d[r] * d;
                    if hypothesis == Hypothesis::H1 {
                        y[(r, col)] += b_t[r] * t;
                    }
                }
            }
            y
        };
        let surv = build(&p.b_t1, &p.b_d1, rng);
        let refr = build(&p.b_t2, &p.b_d2, rng);
        raw.push((surv, refr));
    }
    Ok(Observation {
        y: CMat::zeros(0, l),
        per_sr_raw: Some(raw),
    })
}

/// Hypothesized target delay and Doppler at one SR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayDopplerHypothesis {
    pub tau: f64,
    pub doppler: f64,
}

/// Receive combining only: returns `(surveillance rows, reference rows)`, each M x L.
pub fn combine_arrays(raw: &Observation, channels: &ChannelSet) -> Result<(CMat, CMat)> {
    let blocks = raw
        .per_sr_raw
        .as_ref()
        .ok_or_else(|| Error::DimensionMismatch("observation carries no raw array outputs".into()))?;
    if blocks.len() != channels.n_sr() {
        return Err(Error::DimensionMismatch(format!(
            "{} raw blocks for {} SRs",
            blocks.len(),
            channels.n_sr()
        )));
    }
    let l = blocks.first().map(|b| b.0.ncols()).unwrap_or(0);
    let m = channels.n_sr();
    let mut t = CMat::zeros(m, l);
    let mut d = CMat::zeros(m, l);
    for (i, ((surv, refr), p)) in blocks.iter().zip(&channels.paths).enumerate() {
        if surv.nrows() != p.q_t.len() || refr.nrows() != p.q_d.len() || surv.ncols() != l || refr.ncols() != l {
            return Err(Error::DimensionMismatch(format!(
                "raw block {i} does not match array sizes"
            )));
        }
        t.set_row(i, &(p.q_t.adjoint() * surv));
        d.set_row(i, &(p.q_d.adjoint() * refr));
    }
    Ok((t, d))
}

/// Right-multiplies every row by `D(tau_i, f_i)^*` in place.
pub fn compensate_rows(rows: &mut CMat, kernel: &DelayDopplerKernel, tuples: &[DelayDopplerHypothesis]) -> Result<()> {
    if rows.nrows() != tuples.len() || rows.ncols() != kernel.len() {
        return Err(Error::DimensionMismatch("compensation tuples do not match rows".into()));
    }
    let mut buf = vec![C64::new(0.0, 0.0); kernel.len()];
    for (i, h) in tuples.iter().enumerate() {
        for (k, v) in buf.iter_mut().enumerate() {
            *v = rows[(i, k)];
        }
        kernel.compensate_row(&mut buf, h.tau, h.doppler);
        for (k, v) in buf.iter().enumerate() {
            rows[(i, k)] = *v;
        }
    }
    Ok(())
}

/// Stacks compensated target rows over compensated direct rows.
pub fn stack_observation(target: &CMat, direct: &CMat) -> CMat {
    let m = target.nrows();
    let l = target.ncols();
    let mut y = CMat::zeros(2 * m, l);
    y.rows_mut(0, m).copy_from(target);
    y.rows_mut(m, m).copy_from(direct);
    y
}

/// Receive combining, delay-Doppler compensation and aggregation.
///
/// Target rows are compensated with the hypothesized tuples. Direct rows use the
/// known BS-to-SR delays, since both ends of that path are at surveyed positions.
pub fn frontend_process(
    raw: &Observation,
    channels: &ChannelSet,
    hypothesized: &[DelayDopplerHypothesis],
) -> Result<Observation> {
    let (mut t, mut d) = combine_arrays(raw, channels)?;
    if hypothesized.len() != channels.n_sr() {
        return Err(Error::DimensionMismatch(format!(
            "{} hypothesized tuples for {} SRs",
            hypothesized.len(),
            channels.n_sr()
        )));
    }
    let kernel = DelayDopplerKernel::new(t.ncols(), channels.sample_rate);
    compensate_rows(&mut t, &kernel, hypothesized)?;
    let direct: Vec<DelayDopplerHypothesis> = channels
        .paths
        .iter()
        .map(|p| DelayDopplerHypothesis {
            tau: p.tau_d,
            doppler: 0.0,
        })
        .collect();
    compensate_rows(&mut d, &kernel, &direct)?;
    Ok(Observation {
        y: stack_observation(&t, &d),
        per_sr_raw: raw.per_sr_raw.clone(),
    })
}

/// True target tuples of every SR.
pub fn matched_hypotheses(channels: &ChannelSet) -> Vec<DelayDopplerHypothesis> {
    channels
        .paths
        .iter()
        .map(|p| DelayDopplerHypothesis {
            tau: p.tau_t,
            doppler: p.doppler,
        })
        .collect()
}

/// Equivalent-model fast path: `Y = [H_t; H_d] S + Z`, with `H_t` zeroed under `H0`.
pub fn synth_equivalent<R: Rng + ?Sized>(
    channels: &ChannelSet,
    symbols: &SymbolBlock,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<Observation> {
    synth_equivalent_from(
        &channels.h_t_tilde,
        &channels.h_d_tilde,
        channels.sigma_r2,
        symbols,
        hypothesis,
        rng,
    )
}

/// Same as [`synth_equivalent`] but with explicit equivalent channels.
pub fn synth_equivalent_from<R: Rng + ?Sized>(
    h_t: &CMat,
    h_d: &CMat,
    sigma_r2: f64,
    symbols: &SymbolBlock,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<Observation> {
    let m = h_t.nrows();
    if h_d.nrows() != m || h_t.ncols() != symbols.n_streams() || h_d.ncols() != symbols.n_streams() {
        return Err(Error::DimensionMismatch(
            "equivalent channels do not match the symbol block".into(),
        ));
    }
    let l = symbols.len();
    let mut y = cn_matrix(rng, 2 * m, l, sigma_r2);
    if hypothesis == Hypothesis::H1 {
        let mut top = y.rows_mut(0, m);
        top += h_t * &symbols.data;
    }
    {
        let mut bottom = y.rows_mut(m, m);
        bottom += h_d * &symbols.data;
    }
    Ok(Observation::from_matrix(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::master_rng;
    use crate::scenario::{build_channels, ScenarioConfig};

    fn noiseless_channels(velocity: [f64; 2]) -> (ChannelSet, CMat) {
        let cfg = ScenarioConfig {
            block_length: 64,
            target_velocity: velocity,
            ..ScenarioConfig::default()
        };
        let mut rng = master_rng(3);
        let w = cn_matrix(&mut rng, cfg.n_t, cfg.n_cu(), 0.01);
        let mut ch = build_channels(&cfg, C64::new(0.7, -0.2), &w).unwrap();
        ch.sigma_r2 = 0.0;
        (ch, w)
    }

    #[test]
    fn matched_front_end_recovers_the_equivalent_model() {
        for velocity in [[0.0, 0.0], [15.0, -4.0]] {
            let (ch, w) = noiseless_channels(velocity);
            let mut rng = master_rng(11);
            let s = gen_symbols_gaussian(&mut rng, w.ncols(), ch.block_length);
            let raw = synth_received(&ch, &w, &s, Hypothesis::H1, &mut rng).unwrap();
            let y = frontend_process(&raw, &ch, &matched_hypotheses(&ch)).unwrap();
            let m = ch.n_sr();
            let want_t = &ch.h_t_tilde * &s.data;
            let want_d = &ch.h_d_tilde * &s.data;
            let scale = want_t.norm().max(want_d.norm());
            assert!((y.target_rows() - want_t).norm() < 1e-9 * scale);
            assert!((y.direct_rows() - want_d).norm() < 1e-9 * scale);
            assert_eq!(y.y.nrows(), 2 * m);

            let raw0 = synth_received(&ch, &w, &s, Hypothesis::H0, &mut rng).unwrap();
            let y0 = frontend_process(&raw0, &ch, &matched_hypotheses(&ch)).unwrap();
            assert!(y0.target_rows().norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn equivalent_model_noise_has_the_configured_power() {
        let (mut ch, w) = noiseless_channels([0.0, 0.0]);
        ch.sigma_r2 = 2.5;
        let mut rng = master_rng(4);
        let s = gen_symbols_gaussian(&mut rng, w.ncols(), 4000);
        let obs = synth_equivalent(&ch, &s, Hypothesis::H0, &mut rng).unwrap();
        let top = obs.target_rows();
        let power = top.norm_squared() / (top.nrows() * top.ncols()) as f64;
        assert!((power / 2.5 - 1.0).abs() < 0.03, "noise power {power}");
    }

    #[test]
    fn gaussian_symbols_have_unit_power() {
        let mut rng = master_rng(9);
        let s = gen_symbols_gaussian(&mut rng, 3, 20_000);
        let p = s.data.norm_squared() / 60_000.0;
        assert!((p - 1.0).abs() < 0.02);
        assert_eq!(s.sample_rate(), None);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let (ch, w) = noiseless_channels([0.0, 0.0]);
        let mut rng = master_rng(1);
        let s = gen_symbols_gaussian(&mut rng, w.ncols() + 1, ch.block_length);
        assert!(matches!(
            synth_received(&ch, &w, &s, Hypothesis::H1, &mut rng),
            Err(Error::DimensionMismatch(_))
        ));
        let params = OfdmParams::new(64, 30e3, 1);
        assert!(matches!(
            gen_symbols_ofdm(&mut rng, 1, &params, 10),
            Err(Error::Config(_))
        ));
    }
}
