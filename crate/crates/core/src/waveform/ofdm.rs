//! 16-QAM OFDM symbol generation and demodulation.

use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Gray-mapped amplitude levels per axis, before normalization.
const LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

fn qam_scale() -> f64 {
    // average energy of the 16-point grid is 10
    1.0 / 10f64.sqrt()
}

/// Maps four bits (b0 b1 on I, b2 b3 on Q) to a unit-energy 16-QAM point.
pub fn qam16_map(bits: [bool; 4]) -> C64 {
    let idx = |a: bool, b: bool| (a as usize) << 1 | b as usize;
    let i = LEVELS[idx(bits[0], bits[1])];
    let q = LEVELS[idx(bits[2], bits[3])];
    C64::new(i, q) * qam_scale()
}

/// Nearest-point hard decision.
pub fn qam16_demap(symbol: C64) -> [bool; 4] {
    let axis = |v: f64| -> (bool, bool) {
        let v = v / qam_scale();
        let (best, _) = LEVELS
            .iter()
            .enumerate()
            .map(|(k, &lvl)| (k, (v - lvl).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        (best & 2 != 0, best & 1 != 0)
    };
    let (b0, b1) = axis(symbol.re);
    let (b2, b3) = axis(symbol.im);
    [b0, b1, b2, b3]
}

/// All 16 normalized constellation points.
pub fn qam16_constellation() -> Vec<C64> {
    (0..16u8)
        .map(|v| qam16_map([v & 8 != 0, v & 4 != 0, v & 2 != 0, v & 1 != 0]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmParams {
    pub n_subcarriers: usize,
    pub subcarrier_spacing: f64,
    pub cp_len: usize,
    pub n_frames: usize,
}

impl OfdmParams {
    /// Cyclic prefix defaults to `n_subcarriers / 8`.
    pub fn new(n_subcarriers: usize, subcarrier_spacing: f64, n_frames: usize) -> Self {
        Self {
            n_subcarriers,
            subcarrier_spacing,
            cp_len: n_subcarriers / 8,
            n_frames,
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing
    }

    pub fn frame_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    pub fn block_len(&self) -> usize {
        self.n_frames * self.frame_len()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_subcarriers.is_power_of_two() {
            return Err(Error::Config(format!(
                "subcarrier count {} is not a power of two",
                self.n_subcarriers
            )));
        }
        if self.cp_len > self.n_subcarriers {
            return Err(Error::Config("cyclic prefix longer than the OFDM symbol".into()));
        }
        if !(self.subcarrier_spacing > 0.0) || self.n_frames == 0 {
            return Err(Error::Config(
                "subcarrier spacing and frame count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Transmitted bits, `bits[user][frame * n_sc * 4 + sc * 4 + b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmPayload {
    pub params: OfdmParams,
    pub bits: Vec<Vec<bool>>,
}

/// Generates `c` independent OFDM streams of length `params.block_len()`,
/// each time-domain sample with unit average power.
pub fn modulate<R: Rng + ?Sized>(rng: &mut R, c: usize, params: &OfdmParams) -> Result<(CMat, OfdmPayload)> {
    params.validate()?;
    let n = params.n_subcarriers;
    let cp = params.cp_len;
    let l = params.block_len();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let norm = 1.0 / (n as f64).sqrt();
    let mut data = CMat::zeros(c, l);
    let mut bits = vec![Vec::with_capacity(params.n_frames * n * 4); c];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for user in 0..c {
        for frame in 0..params.n_frames {
            for sc in buf.iter_mut() {
                let b: [bool; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
                bits[user].extend_from_slice(&b);
                *sc = qam16_map(b);
            }
            ifft.process(&mut buf);
            let start = frame * params.frame_len();
            for k in 0..cp {
                data[(user, start + k)] = buf[n - cp + k] * norm;
            }
            for k in 0..n {
                data[(user, start + cp + k)] = buf[k] * norm;
            }
        }
    }
    Ok((data, OfdmPayload { params: *params, bits }))
}

/// Strips the cyclic prefix, FFTs each frame and hard-decides every subcarrier.
pub fn demodulate(samples: &CMat, params: &OfdmParams) -> Result<Vec<Vec<bool>>> {
    params.validate()?;
    if samples.ncols() != params.block_len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples per stream, expected {}",
            samples.ncols(),
            params.block_len()
        )));
    }
    let n = params.n_subcarriers;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let norm = 1.0 / (n as f64).sqrt();
    let mut out = Vec::with_capacity(samples.nrows());
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for user in 0..samples.nrows() {
        let mut bits = Vec::with_capacity(params.n_frames * n * 4);
        for frame in 0..params.n_frames {
            let start = frame * params.frame_len() + params.cp_len;
            for k in 0..n {
                buf[k] = samples[(user, start + k)];
            }
            fft.process(&mut buf);
            for sc in &buf {
                bits.extend_from_slice(&qam16_demap(sc * norm));
            }
        }
        out.push(bits);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constellation_has_unit_energy() {
        let pts = qam16_constellation();
        let e: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-15);
        let s = 1.0 / 10f64.sqrt();
        for p in &pts {
            for v in [p.re, p.im] {
                let lvl = v / s;
                assert!([-3.0, -1.0, 1.0, 3.0].iter().any(|&x| (lvl - x).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn map_demap_roundtrip() {
        for v in 0..16u8 {
            let b = [v & 8 != 0, v & 4 != 0, v & 2 != 0, v & 1 != 0];
            assert_eq!(qam16_demap(qam16_map(b)), b);
        }
    }

    #[test]
    fn sample_rate_of_30khz_grid() {
        let p = OfdmParams::new(1024, 30e3, 1);
        assert!((p.sample_rate() - 30.72e6).abs() < 1e-6);
        assert_eq!(p.cp_len, 128);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(OfdmParams::new(1000, 30e3, 1).validate().is_err());
    }
}
