//! Multi-static geometry, array responses and equivalent channels.
//!
//! One base station (BS) with an `n_t`-element ULA serves `C` single-antenna
//! users while `M` sensing receivers (SRs) listen. Each SR carries a
//! surveillance array (`n_1` elements) and a reference array (`n_2`
//! elements). All arrays are ULAs whose broadside points along +x, so every
//! angle below is `atan2(dy, dx)` of the propagation direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cn_vector, db_to_linear, CMat, CVec, C64, J};
use crate::random::{derive_seed, master_rng, SimRng};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_CARRIER_HZ: f64 = 3.5e9;

const PARALLEL_TOL: f64 = 1e-10;

/// Everything needed to lay out one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub bs_position: [f64; 2],
    pub sr_positions: Vec<[f64; 2]>,
    pub target_position: [f64; 2],
    pub cu_positions: Vec<[f64; 2]>,
    pub n_t: usize,
    pub n_1: usize,
    pub n_2: usize,
    /// Receive antennas of the active-detection benchmark.
    pub n_r: usize,
    pub carrier_wavelength: f64,
    pub antenna_spacing: f64,
    /// Transmit power budget (W).
    pub p_t: f64,
    /// Sensing noise power (W).
    pub sigma_r2: f64,
    /// Communication noise power (W).
    pub sigma_c2: f64,
    /// Variance of the complex Gaussian reflection coefficient (m^2).
    pub rcs_variance: f64,
    pub block_length: usize,
    pub sample_rate: f64,
    pub target_velocity: [f64; 2],
    /// Multiplier on the free-space gain used as the Rayleigh variance of each CU channel.
    pub cu_channel_gain_scale: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let wavelength = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ;
        Self {
            bs_position: [0.0, 0.0],
            sr_positions: vec![[141.4, 141.4], [141.4, -141.4], [-141.4, 141.4], [-141.4, -141.4]],
            target_position: [0.0, -100.0],
            cu_positions: vec![[50.0, 86.6025], [-50.0, 86.6025]],
            n_t: 16,
            n_1: 14,
            n_2: 2,
            n_r: 14,
            carrier_wavelength: wavelength,
            antenna_spacing: wavelength / 2.0,
            p_t: db_to_linear(-10.0),
            sigma_r2: db_to_linear(-114.0),
            sigma_c2: db_to_linear(-114.0),
            rcs_variance: 1.0,
            block_length: 500,
            sample_rate: 30.72e6,
            target_velocity: [0.0, 0.0],
            cu_channel_gain_scale: 1.0,
            seed: 2024,
        }
    }
}

impl ScenarioConfig {
    /// Two-SR OFDM layout with one user at 150 m, -60 degrees.
    pub fn ofdm_preset() -> Self {
        let d = 150.0_f64;
        let cu_angle = (-60.0_f64).to_radians();
        Self {
            sr_positions: vec![[225.0, 129.9], [225.0, -129.9]],
            target_position: [150.0, 0.0],
            cu_positions: vec![[d * cu_angle.cos(), d * cu_angle.sin()]],
            block_length: 1152,
            ..Self::default()
        }
    }

    pub fn n_sr(&self) -> usize {
        self.sr_positions.len()
    }

    pub fn n_cu(&self) -> usize {
        self.cu_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sr_positions.is_empty() {
            return Err(Error::Config("at least one sensing receiver is required".into()));
        }
        if self.cu_positions.is_empty() {
            return Err(Error::Config("at least one communication user is required".into()));
        }
        if self.n_t < self.n_cu() {
            return Err(Error::Config(format!(
                "n_t = {} must be at least the number of users {}",
                self.n_t,
                self.n_cu()
            )));
        }
        if self.n_1 == 0 || self.n_2 == 0 || self.n_t == 0 {
            return Err(Error::Config("antenna counts must be positive".into()));
        }
        if self.block_length == 0 {
            return Err(Error::Config("block length must be positive".into()));
        }
        let positive = [
            ("p_t", self.p_t),
            ("sigma_r2", self.sigma_r2),
            ("sigma_c2", self.sigma_c2),
            ("rcs_variance", self.rcs_variance),
            ("carrier_wavelength", self.carrier_wavelength),
            ("antenna_spacing", self.antenna_spacing),
            ("sample_rate", self.sample_rate),
            ("cu_channel_gain_scale", self.cu_channel_gain_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let bs = self.bs_position;
        let coincide = |p: [f64; 2]| distance(bs, p) == 0.0;
        if coincide(self.target_position) {
            return Err(Error::DegenerateGeometry("target coincides with the BS".into()));
        }
        for (i, &p) in self.sr_positions.iter().enumerate() {
            if coincide(p) {
                return Err(Error::DegenerateGeometry(format!("SR {i} coincides with the BS")));
            }
            if distance(p, self.target_position) == 0.0 {
                return Err(Error::DegenerateGeometry(format!("SR {i} coincides with the target")));
            }
        }
        for (i, &p) in self.cu_positions.iter().enumerate() {
            if coincide(p) {
                return Err(Error::DegenerateGeometry(format!("CU {i} coincides with the BS")));
            }
        }
        Ok(())
    }

    /// Rayleigh variance of CU `idx`: free-space gain at its distance times the configured scale.
    pub fn cu_channel_variance(&self, idx: usize) -> f64 {
        let d = distance(self.bs_position, self.cu_positions[idx]);
        let fs = (self.carrier_wavelength / (4.0 * std::f64::consts::PI * d)).powi(2);
        fs * self.cu_channel_gain_scale
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Direction angle of the vector `from -> to`.
pub fn direction_angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// ULA response: element `k` is `exp(j 2 pi / lambda * spacing * k * sin(angle))`.
pub fn steering_vector(angle: f64, n: usize, spacing: f64, wavelength: f64) -> CVec {
    let phase = 2.0 * std::f64::consts::PI / wavelength * spacing * angle.sin();
    CVec::from_fn(n, |k, _| {
        if k == 0 {
            C64::new(1.0, 0.0)
        } else {
            (J * (phase * k as f64)).exp()
        }
    })
}

/// Which propagation leg a path-loss evaluation refers to.
#[derive(Debug, Clone, Copy)]
pub enum PathGeometry {
    /// BS -> target -> SR.
    Target {
        bs: [f64; 2],
        target: [f64; 2],
        sr: [f64; 2],
    },
    /// BS -> SR line of sight.
    Direct { bs: [f64; 2], sr: [f64; 2] },
}

/// Free-space power gain of a target (bistatic radar) or direct path.
pub fn path_loss(geometry: PathGeometry, wavelength: f64) -> Result<f64> {
    let four_pi = 4.0 * std::f64::consts::PI;
    match geometry {
        PathGeometry::Target { bs, target, sr } => {
            let d1 = distance(bs, target);
            let d2 = distance(target, sr);
            if d1 == 0.0 || d2 == 0.0 {
                return Err(Error::DegenerateGeometry("zero-length target path leg".into()));
            }
            Ok(wavelength.powi(2) / (four_pi.powi(3) * d1.powi(2) * d2.powi(2)))
        }
        PathGeometry::Direct { bs, sr } => {
            let d = distance(bs, sr);
            if d == 0.0 {
                return Err(Error::DegenerateGeometry("zero-length direct path".into()));
            }
            Ok(wavelength.powi(2) / (four_pi.powi(2) * d.powi(2)))
        }
    }
}

/// Normalized projection of `v` onto the orthogonal complement of `span{interferer}`.
fn orthogonal_combiner(v: &CVec, interferer: &CVec, what: &str) -> Result<CVec> {
    let denom = interferer.norm_squared();
    let residual = if denom > 0.0 {
        v - interferer * (interferer.dotc(v) / denom)
    } else {
        v.clone()
    };
    let r = residual.norm();
    if r <= PARALLEL_TOL * v.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateGeometry(format!(
            "{what}: target and direct paths arrive from indistinguishable directions"
        )));
    }
    Ok(residual.unscale(r))
}

/// Receive combiners of one SR: `q_t` nulls the direct path on the surveillance
/// array, `q_d` nulls the target echo on the reference array. Both are unit norm.
pub fn receive_beamformers(b_t1: &CVec, b_d1: &CVec, b_t2: &CVec, b_d2: &CVec) -> Result<(CVec, CVec)> {
    if b_t1.len() != b_d1.len() || b_t2.len() != b_d2.len() {
        return Err(Error::DimensionMismatch(
            "steering vector lengths differ within an array".into(),
        ));
    }
    let q_t = orthogonal_combiner(b_t1, b_d1, "surveillance array")?;
    let q_d = orthogonal_combiner(b_d2, b_t2, "reference array")?;
    Ok((q_t, q_d))
}

/// i.i.d. CN(0, variance) channel vectors, one per user.
pub fn synth_comm_channels(rng: &mut SimRng, c: usize, n_t: usize, variance: f64) -> Vec<CVec> {
    (0..c).map(|_| cn_vector(rng, n_t, variance)).collect()
}

/// Per-SR geometry and gains.
#[derive(Debug, Clone, Serialize)]
pub struct SrPath {
    /// Departure angle of the direct path at the BS.
    pub theta_d: f64,
    /// Arrival angle of the target echo at the SR.
    pub phi_t: f64,
    /// Arrival angle of the direct path at the SR.
    pub phi_d: f64,
    pub tau_t: f64,
    pub tau_d: f64,
    pub doppler: f64,
    pub alpha_t: C64,
    pub alpha_d: f64,
    #[serde(skip)]
    pub a_d: CVec,
    #[serde(skip)]
    pub b_t1: CVec,
    #[serde(skip)]
    pub b_d1: CVec,
    #[serde(skip)]
    pub b_t2: CVec,
    #[serde(skip)]
    pub b_d2: CVec,
    #[serde(skip)]
    pub q_t: CVec,
    #[serde(skip)]
    pub q_d: CVec,
}

/// Channels of one scenario realization.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// Equivalent target channel, M x C (zero until a beamformer is attached).
    pub h_t_tilde: CMat,
    /// Equivalent direct channel, M x C.
    pub h_d_tilde: CMat,
    /// Direct-path matrix with rows `mu_d,i a_d,i^H / sigma_r`, M x n_t.
    pub b_matrix: CMat,
    /// `sum_i |mu_t,i|^2 / sigma_r^2`.
    pub mu0: f64,
    pub mu_t: CVec,
    pub mu_d: CVec,
    pub comm_channels: Vec<CVec>,
    pub theta_t: f64,
    pub a_t: CVec,
    pub paths: Vec<SrPath>,
    pub sigma_r2: f64,
    pub sigma_c2: f64,
    pub p_t: f64,
    pub block_length: usize,
    pub sample_rate: f64,
    pub rcs_draw: C64,
    /// Beamformer the equivalent channels were formed with.
    pub beamformer: CMat,
    /// `sqrt(PL_t,i)` per SR, i.e. target amplitudes for a unit reflection coefficient.
    pub unit_target_amplitudes: Vec<f64>,
}

impl ChannelSet {
    pub fn n_sr(&self) -> usize {
        self.paths.len()
    }

    pub fn n_cu(&self) -> usize {
        self.comm_channels.len()
    }

    pub fn n_t(&self) -> usize {
        self.a_t.len()
    }

    /// Equivalent channels `(H_t, H_d)` for an arbitrary beamformer.
    pub fn equivalent_channels(&self, w: &CMat) -> Result<(CMat, CMat)> {
        if w.nrows() != self.n_t() {
            return Err(Error::DimensionMismatch(format!(
                "beamformer has {} rows, expected n_t = {}",
                w.nrows(),
                self.n_t()
            )));
        }
        let m = self.n_sr();
        let c = w.ncols();
        let at_w = self.a_t.adjoint() * w;
        let mut h_t = CMat::zeros(m, c);
        let mut h_d = CMat::zeros(m, c);
        for (i, p) in self.paths.iter().enumerate() {
            let ad_w = p.a_d.adjoint() * w;
            for k in 0..c {
                h_t[(i, k)] = self.mu_t[i] * at_w[(0, k)];
                h_d[(i, k)] = self.mu_d[i] * ad_w[(0, k)];
            }
        }
        Ok((h_t, h_d))
    }

    /// Same channels with a different beamformer attached.
    pub fn with_beamformer(&self, w: &CMat) -> Result<ChannelSet> {
        let (h_t, h_d) = self.equivalent_channels(w)?;
        let mut out = self.clone();
        out.h_t_tilde = h_t;
        out.h_d_tilde = h_d;
        out.beamformer = w.clone();
        Ok(out)
    }

    /// Same realization with a different reflection coefficient. Only target
    /// quantities change.
    pub fn with_rcs(&self, rcs_draw: C64) -> ChannelSet {
        let mut out = self.clone();
        for (i, p) in out.paths.iter_mut().enumerate() {
            p.alpha_t = rcs_draw * self.unit_target_amplitudes[i];
            out.mu_t[i] = p.alpha_t * p.q_t.dotc(&p.b_t1);
        }
        out.mu0 = out.mu_t.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.sigma_r2;
        let at_w = self.a_t.adjoint() * &self.beamformer;
        for i in 0..out.n_sr() {
            for k in 0..at_w.ncols() {
                out.h_t_tilde[(i, k)] = out.mu_t[i] * at_w[(0, k)];
            }
        }
        out.rcs_draw = rcs_draw;
        out
    }
}

/// Builds geometry, gains, combiners and equivalent channels.
///
/// Communication channels are drawn from a stream derived from `config.seed`,
/// so two calls with the same configuration see the same users.
pub fn build_channels(config: &ScenarioConfig, rcs_draw: C64, beamformer: &CMat) -> Result<ChannelSet> {
    config.validate()?;
    let lambda = config.carrier_wavelength;
    let spacing = config.antenna_spacing;
    let bs = config.bs_position;
    let tar = config.target_position;
    let theta_t = direction_angle(bs, tar);
    let a_t = steering_vector(theta_t, config.n_t, spacing, lambda);

    let u_bs_tar = unit(bs, tar);
    let mut paths = Vec::with_capacity(config.n_sr());
    let mut unit_amps = Vec::with_capacity(config.n_sr());
    for &sr in &config.sr_positions {
        let theta_d = direction_angle(bs, sr);
        let phi_t = direction_angle(sr, tar);
        let phi_d = direction_angle(sr, bs);
        let tau_t = (distance(bs, tar) + distance(tar, sr)) / SPEED_OF_LIGHT;
        let tau_d = distance(bs, sr) / SPEED_OF_LIGHT;
        let u_sr_tar = unit(sr, tar);
        let range_rate = config.target_velocity[0] * (u_bs_tar[0] + u_sr_tar[0])
            + config.target_velocity[1] * (u_bs_tar[1] + u_sr_tar[1]);
        let doppler = -range_rate / lambda;

        let pl_t = path_loss(PathGeometry::Target { bs, target: tar, sr }, lambda)?;
        let pl_d = path_loss(PathGeometry::Direct { bs, sr }, lambda)?;
        let b_t1 = steering_vector(phi_t, config.n_1, spacing, lambda);
        let b_d1 = steering_vector(phi_d, config.n_1, spacing, lambda);
        let b_t2 = steering_vector(phi_t, config.n_2, spacing, lambda);
        let b_d2 = steering_vector(phi_d, config.n_2, spacing, lambda);
        let (q_t, q_d) = receive_beamformers(&b_t1, &b_d1, &b_t2, &b_d2)?;
        unit_amps.push(pl_t.sqrt());
        paths.push(SrPath {
            theta_d,
            phi_t,
            phi_d,
            tau_t,
            tau_d,
            doppler,
            alpha_t: rcs_draw * pl_t.sqrt(),
            alpha_d: pl_d.sqrt(),
            a_d: steering_vector(theta_d, config.n_t, spacing, lambda),
            b_t1,
            b_d1,
            b_t2,
            b_d2,
            q_t,
            q_d,
        });
    }

    let m = paths.len();
    let mu_t = CVec::from_fn(m, |i, _| paths[i].alpha_t * paths[i].q_t.dotc(&paths[i].b_t1));
    let mu_d = CVec::from_fn(m, |i, _| paths[i].q_d.dotc(&paths[i].b_d2) * paths[i].alpha_d);
    let sigma_r = config.sigma_r2.sqrt();
    let mut b_matrix = CMat::zeros(m, config.n_t);
    for (i, p) in paths.iter().enumerate() {
        for k in 0..config.n_t {
            b_matrix[(i, k)] = mu_d[i] * p.a_d[k].conj() / sigma_r;
        }
    }
    let mu0 = mu_t.iter().map(|v| v.norm_sqr()).sum::<f64>() / config.sigma_r2;

    let mut rng = master_rng(derive_seed(config.seed, 0xC0FFEE));
    let comm_channels: Vec<CVec> = synth_comm_channels(&mut rng, config.n_cu(), config.n_t, 1.0)
        .into_iter()
        .enumerate()
        .map(|(n, h)| h.scale(config.cu_channel_variance(n).sqrt()))
        .collect();

    let base = ChannelSet {
        h_t_tilde: CMat::zeros(m, beamformer.ncols()),
        h_d_tilde: CMat::zeros(m, beamformer.ncols()),
        b_matrix,
        mu0,
        mu_t,
        mu_d,
        comm_channels,
        theta_t,
        a_t,
        paths,
        sigma_r2: config.sigma_r2,
        sigma_c2: config.sigma_c2,
        p_t: config.p_t,
        block_length: config.block_length,
        sample_rate: config.sample_rate,
        rcs_draw,
        beamformer: beamformer.clone(),
        unit_target_amplitudes: unit_amps,
    };
    base.with_beamformer(beamformer)
}

fn unit(from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
    let d = distance(from, to);
    [(to[0] - from[0]) / d, (to[1] - from[1]) / d]
}
