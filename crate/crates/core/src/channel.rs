//! Air-to-ground Rician links and pilot-based MMSE estimation statistics.
//!
//! Large-scale quantities (gain, K-factor, estimate/error variances) are
//! deterministic functions of geometry; small-scale realizations are drawn
//! per slot. The estimate/error split uses the Gaussian-equivalent
//! construction: estimate and error are drawn independently with variances
//! γ and c = r - γ, and the channel is their sum, so all second-order
//! statistics the receiver analysis depends on hold exactly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::ChannelSection;
use crate::error::{CoreError, Result};
use crate::geom::Vec3;

/// Large-scale statistics of one UAV-AP pair.
#[derive(Clone, Copy, Debug)]
pub struct LinkStats {
    /// 3D distance (m).
    pub distance: f64,
    /// Channel power gain r = β0 / d^κ.
    pub gain: f64,
    /// Rician factor (linear).
    pub rician_k: f64,
    /// MMSE estimate variance γ.
    pub est_var: f64,
    /// Estimation error variance c = r - γ.
    pub err_var: f64,
}

/// Derived channel constants in linear units.
#[derive(Clone, Copy, Debug)]
pub struct ChannelParams {
    pub pathloss_ref: f64,
    pub pathloss_exp: f64,
    pub noise_power: f64,
    pub rician_a1: f64,
    pub rician_a2: f64,
    pub elevation_from_ap: bool,
    pub pilot_energy: f64,
}

impl ChannelParams {
    pub fn from_config(cfg: &ChannelSection) -> Self {
        Self {
            pathloss_ref: 10f64.powf(cfg.pathloss_ref_db / 10.0),
            pathloss_exp: cfg.pathloss_exp,
            noise_power: 10f64.powf((cfg.noise_dbm - 30.0) / 10.0),
            rician_a1: 10f64.powf(cfg.rician_a1_db / 10.0),
            rician_a2: 10f64.powf(cfg.rician_a2_db / 10.0),
            elevation_from_ap: cfg.elevation_from_ap,
            pilot_energy: cfg.pilot_power * cfg.pilot_length,
        }
    }
}

/// Large-scale statistics for a single pair.
pub fn link_stats(uav: Vec3, ap: Vec3, params: &ChannelParams) -> Result<LinkStats> {
    let distance = uav.distance(ap);
    if distance <= 0.0 {
        return Err(CoreError::DegenerateGeometry);
    }
    let gain = params.pathloss_ref / distance.powf(params.pathloss_exp);
    let height_gap = if params.elevation_from_ap { ap.z - uav.z } else { uav.z - ap.z };
    let elevation = (height_gap / distance).clamp(-1.0, 1.0).asin();
    let rician_k = params.rician_a1 * (params.rician_a2 * elevation).exp();
    let est_var = gain * gain / (gain + params.noise_power / params.pilot_energy);
    Ok(LinkStats { distance, gain, rician_k, est_var, err_var: gain - est_var })
}

/// Per-pair statistics for the whole swarm/AP layout, stored row-major by AP.
#[derive(Clone, Debug)]
pub struct LinkGrid {
    pub num_aps: usize,
    pub num_uavs: usize,
    stats: Vec<LinkStats>,
}

impl LinkGrid {
    pub fn build(uavs: &[Vec3], aps: &[Vec3], params: &ChannelParams) -> Result<Self> {
        let mut stats = Vec::with_capacity(uavs.len() * aps.len());
        for &ap in aps {
            for &uav in uavs {
                stats.push(link_stats(uav, ap, params)?);
            }
        }
        Ok(Self { num_aps: aps.len(), num_uavs: uavs.len(), stats })
    }

    #[inline]
    pub fn pair(&self, ap: usize, uav: usize) -> &LinkStats {
        &self.stats[ap * self.num_uavs + uav]
    }

    /// Estimate variances of one UAV across all APs.
    pub fn est_var_column(&self, uav: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_aps).map(move |l| self.pair(l, uav).est_var)
    }
}

/// One slot's channel matrices, row-major `num_aps x num_uavs`.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub num_aps: usize,
    pub num_uavs: usize,
    /// Channel coefficients G.
    pub channel: Vec<Complex64>,
    /// MMSE estimate and error, satisfying channel = estimate + error.
    pub estimate: Vec<Complex64>,
    pub error: Vec<Complex64>,
}

impl ChannelRealization {
    #[inline]
    pub fn idx(&self, ap: usize, uav: usize) -> usize {
        ap * self.num_uavs + uav
    }

    /// Estimate column of one UAV across APs.
    pub fn estimate_column(&self, uav: usize) -> Vec<Complex64> {
        (0..self.num_aps).map(|l| self.estimate[self.idx(l, uav)]).collect()
    }
}

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Exact Rician draw of G: LoS phase uniform, unit-variance scatter,
/// E{|g|^2} = r per pair. The estimate/error parts are left empty.
pub fn draw_channel<R: Rng>(grid: &LinkGrid, rng: &mut R) -> ChannelRealization {
    let n = grid.num_aps * grid.num_uavs;
    let mut channel = Vec::with_capacity(n);
    for l in 0..grid.num_aps {
        for m in 0..grid.num_uavs {
            let s = grid.pair(l, m);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let los = Complex64::from_polar(s.rician_k.sqrt(), phase);
            let scatter = complex_normal(rng, 1.0);
            let g = (los + scatter) * (s.gain / (s.rician_k + 1.0)).sqrt();
            channel.push(g);
        }
    }
    ChannelRealization {
        num_aps: grid.num_aps,
        num_uavs: grid.num_uavs,
        channel,
        estimate: Vec::new(),
        error: Vec::new(),
    }
}

/// Fill the estimate/error split: estimate ~ CN(0, γ), error ~ CN(0, c),
/// independent, with the channel redefined as their sum. When c = 0 the
/// estimate equals the channel exactly.
pub fn split_estimate<R: Rng>(realization: &mut ChannelRealization, grid: &LinkGrid, rng: &mut R) {
    let n = grid.num_aps * grid.num_uavs;
    let mut estimate = Vec::with_capacity(n);
    let mut error = Vec::with_capacity(n);
    for l in 0..grid.num_aps {
        for m in 0..grid.num_uavs {
            let s = grid.pair(l, m);
            estimate.push(complex_normal(rng, s.est_var));
            error.push(if s.err_var > 0.0 { complex_normal(rng, s.err_var) } else { Complex64::new(0.0, 0.0) });
        }
    }
    realization.channel = estimate.iter().zip(&error).map(|(a, b)| a + b).collect();
    realization.estimate = estimate;
    realization.error = error;
}

/// Convenience: draw a Gaussian-equivalent realization directly.
pub fn draw_split<R: Rng>(grid: &LinkGrid, rng: &mut R) -> ChannelRealization {
    let mut real = ChannelRealization {
        num_aps: grid.num_aps,
        num_uavs: grid.num_uavs,
        channel: Vec::new(),
        estimate: Vec::new(),
        error: Vec::new(),
    };
    split_estimate(&mut real, grid, rng);
    real
}
