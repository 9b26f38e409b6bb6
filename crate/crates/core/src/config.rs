//! Scenario configuration: every physical, radio, fire and learning parameter
//! in one schema-validated structure. An empty TOML file runs the reference
//! scenario; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Region, swarm and mission-level parameters.
///
/// Units: meters, seconds, watts, joules unless stated otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Side length S of the square region (m).
    pub region_size: f64,
    /// Number of UAVs (M).
    pub num_uavs: usize,
    /// Number of ground access points (L).
    pub num_aps: usize,
    /// Number of charging stations (C).
    pub num_stations: usize,
    /// Slot duration δ (s).
    pub slot_duration: f64,
    /// Evaluation episode length in slots.
    pub episode_slots: usize,
    /// Altitude band while tracking (m).
    pub altitude_min: f64,
    pub altitude_max: f64,
    /// Speed cap (m/s).
    pub max_speed: f64,
    /// Per-axis acceleration cap (m/s^2).
    pub max_accel: f64,
    /// Minimum inter-UAV distance (m).
    pub safety_distance: f64,
    /// Docking radius around a station (m).
    pub arrival_tolerance: f64,
    /// Height of APs and charging stations (m).
    pub ground_node_height: f64,
    /// Battery capacity bounds for random initialization (J).
    pub energy_max: f64,
    pub energy_min_init: f64,
    /// Skip energy bookkeeping and mode switching entirely.
    pub unlimited_energy: bool,
    /// Side of the centered sub-square used for ignition draws, as a
    /// fraction of the region side.
    pub ignition_fraction: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            region_size: 300.0,
            num_uavs: 3,
            num_aps: 10,
            num_stations: 4,
            slot_duration: 0.5,
            episode_slots: 400,
            altitude_min: 100.0,
            altitude_max: 150.0,
            max_speed: 20.0,
            max_accel: 1.0,
            safety_distance: 4.0,
            arrival_tolerance: 2.0,
            ground_node_height: 10.0,
            energy_max: 125e3,
            energy_min_init: 3.5e3,
            unlimited_energy: false,
            ignition_fraction: 2.0 / 3.0,
        }
    }
}

/// Downward camera model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSection {
    /// Half-view angles (degrees).
    pub half_angle1_deg: f64,
    pub half_angle2_deg: f64,
    /// Area-per-pixel coefficient a.
    pub pixel_area_coeff: f64,
    /// Focal-length parameter b (m).
    pub focal_param: f64,
    /// Image compression ratio in (0, 1].
    pub compression: f64,
    /// Regularizer Δ for the multi-camera area per pixel.
    pub fov_regularizer: f64,
}

impl Default for CameraSection {
    fn default() -> Self {
        Self {
            half_angle1_deg: 17.5,
            half_angle2_deg: 13.125,
            pixel_area_coeff: 1e-6,
            focal_param: 10.0,
            compression: 0.4,
            fov_regularizer: 1e-5,
        }
    }
}

/// Air-to-ground channel and pilot-based estimation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Pathloss at a 1 m reference (dB).
    pub pathloss_ref_db: f64,
    /// Pathloss exponent κ.
    pub pathloss_exp: f64,
    /// Receiver noise power (dBm).
    pub noise_dbm: f64,
    /// Rician K-factor coefficients (dB); converted to linear before use.
    pub rician_a1_db: f64,
    pub rician_a2_db: f64,
    /// When true, use the elevation angle sign (h_ap - h_uav)/d instead of
    /// the default (h_uav - h_ap)/d.
    pub elevation_from_ap: bool,
    /// Pilot transmit power (W) and sequence length (symbols).
    pub pilot_power: f64,
    pub pilot_length: f64,
    /// Channel uses per coherence block.
    pub coherence_block: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            pathloss_ref_db: -30.0,
            pathloss_exp: 2.5,
            noise_dbm: -96.0,
            rician_a1_db: 0.0,
            rician_a2_db: 6.4,
            elevation_from_ap: false,
            pilot_power: 0.1,
            pilot_length: 200.0,
            coherence_block: 6250.0,
        }
    }
}

/// Uplink data-plane parameters and the deterministic-equivalent solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellfreeSection {
    /// Transmission bandwidth W (Hz).
    pub bandwidth: f64,
    /// Image forwarding period N (slots per image).
    pub forward_period: f64,
    /// Maximum uplink transmit power (W).
    pub max_power: f64,
    /// Fixed-point stopping rule.
    pub fp_tolerance: f64,
    pub fp_max_iterations: usize,
}

impl Default for CellfreeSection {
    fn default() -> Self {
        Self {
            bandwidth: 10e6,
            forward_period: 2.0,
            max_power: 0.1,
            fp_tolerance: 1e-9,
            fp_max_iterations: 500,
        }
    }
}

/// Rotary-wing propulsion constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    /// Blade profile power (W).
    pub blade_profile: f64,
    /// Induced power (W).
    pub induced: f64,
    /// Rotor tip speed (m/s).
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover (m/s).
    pub rotor_induced_velocity: f64,
    /// Fuselage drag ratio.
    pub fuselage_drag_ratio: f64,
    /// Rotor solidity.
    pub rotor_solidity: f64,
    /// Air density (kg/m^3).
    pub air_density: f64,
    /// Rotor disc area (m^2).
    pub rotor_disc_area: f64,
    /// Aircraft weight m·g (N).
    pub weight: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        Self {
            blade_profile: 79.86,
            induced: 88.63,
            tip_speed: 120.0,
            rotor_induced_velocity: 4.03,
            fuselage_drag_ratio: 0.6,
            rotor_solidity: 0.05,
            air_density: 1.225,
            rotor_disc_area: 0.503,
            weight: 20.0,
        }
    }
}

/// Fire-spread model and its rasterization.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FireSection {
    /// Steady-state spread rate (m/min).
    pub spread_rate: f64,
    /// Midflame wind speed prior (m/s).
    pub wind_speed_mean: f64,
    pub wind_speed_std: f64,
    /// Mean wind direction (radians). Absent means: draw uniformly in
    /// [0, 2π) once per realization.
    pub wind_direction_mean: Option<f64>,
    pub wind_direction_std: f64,
    /// Points sampled on each local ellipse.
    pub ellipse_samples: usize,
    /// Cap on front vertices after each advance.
    pub max_front_vertices: usize,
    /// Density histogram cell side (m).
    pub cell_size: f64,
}

impl Default for FireSection {
    fn default() -> Self {
        Self {
            spread_rate: 35.0,
            wind_speed_mean: 5.0,
            wind_speed_std: 1.0,
            wind_direction_mean: None,
            wind_direction_std: 0.1,
            ellipse_samples: 64,
            max_front_vertices: 256,
            cell_size: 3.0,
        }
    }
}

/// TD3 hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Section {
    /// Discount factor γ.
    pub discount: f64,
    /// Target-network soft-update rate τ_T.
    pub soft_update: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Policy/target update period F (critic updates per policy update).
    pub policy_period: usize,
    /// Exploration noise std σ_a (normalized action units).
    pub exploration_noise: f64,
    /// Target smoothing noise std and clip (normalized action units).
    pub target_noise: f64,
    pub noise_clip: f64,
    pub minibatch: usize,
    pub replay_capacity: usize,
    /// Episodes of uniform-random actions that only fill the buffer.
    pub warmup_episodes: usize,
    pub hidden_sizes: Vec<usize>,
    pub train_episodes: usize,
    /// Slot cap for charging episodes.
    pub charging_episode_cap: usize,
    /// Slot length of tracking training episodes.
    pub tracking_episode_slots: usize,
    /// Store transitions from every tracking UAV rather than only the first.
    pub store_peer_transitions: bool,
    /// What the non-trained UAVs do during training.
    pub peer_behavior: PeerBehavior,
    /// Checkpoint period in episodes; 0 disables checkpointing.
    pub checkpoint_every: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeerBehavior {
    Policy,
    Random,
    Static,
}

impl Default for Td3Section {
    fn default() -> Self {
        Self {
            discount: 0.85,
            soft_update: 0.01,
            actor_lr: 5e-4,
            critic_lr: 5e-3,
            policy_period: 2,
            exploration_noise: 0.1,
            target_noise: 0.1,
            noise_clip: 0.5,
            minibatch: 256,
            replay_capacity: 100_000,
            warmup_episodes: 750,
            hidden_sizes: vec![256, 256, 256],
            train_episodes: 6000,
            charging_episode_cap: 200,
            tracking_episode_slots: 400,
            store_peer_transitions: false,
            peer_behavior: PeerBehavior::Policy,
            checkpoint_every: 0,
        }
    }
}

/// Reward and state-normalization constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSection {
    /// Coverage-cost gain K_c.
    pub k_cost: f64,
    /// Collision penalty K_coll.
    pub k_collision: f64,
    /// Rate-constraint penalty K_f.
    pub k_rate: f64,
    /// Out-of-limits penalty K_h.
    pub k_limits: f64,
    /// Overspeed penalty K_v.
    pub k_speed: f64,
    /// Arrival reward K_fin.
    pub k_arrival: f64,
    /// Energy-use weight K_e (per kJ consumed in a slot).
    pub k_energy: f64,
    /// Distance-progress weight K_d (per m).
    pub k_distance: f64,
    /// Battery-exhaustion penalty K_en.
    pub k_exhausted: f64,
    /// Remaining-energy normalization E_0 (J).
    pub energy_norm: f64,
    /// Peer-distance normalization C_d (m); defaults to the region side.
    pub peer_norm: Option<f64>,
    /// Divide the peer distance by C_d in the charging state too.
    pub normalize_peer_distance: bool,
}

impl Default for RewardSection {
    fn default() -> Self {
        Self {
            k_cost: 50.0,
            k_collision: 100.0,
            k_rate: 15.0,
            k_limits: 60.0,
            k_speed: 60.0,
            k_arrival: 200.0,
            k_energy: 1.0,
            k_distance: 0.1,
            k_exhausted: 100.0,
            energy_norm: 12_000.0,
            peer_norm: None,
            normalize_peer_distance: true,
        }
    }
}

/// Evaluation protocol knobs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Independent fire realizations per evaluation.
    pub realizations: usize,
    /// Slot at which CDFs are recorded.
    pub cdf_slot: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { realizations: 100, cdf_slot: 350 }
    }
}

/// The full run configuration. `ScenarioConfig::default()` reproduces the
/// reference scenario; TOML files override individual fields.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub camera: CameraSection,
    pub channel: ChannelSection,
    pub cellfree: CellfreeSection,
    pub power: PowerSection,
    pub fire: FireSection,
    pub td3: Td3Section,
    pub rewards: RewardSection,
    pub eval: EvalSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| CoreError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Peer-distance normalization constant C_d.
    pub fn peer_norm(&self) -> f64 {
        self.rewards.peer_norm.unwrap_or(self.scenario.region_size)
    }

    /// Spread rate in meters per slot.
    pub fn spread_per_slot(&self) -> f64 {
        self.fire.spread_rate * self.scenario.slot_duration / 60.0
    }

    /// Image bits that must be delivered per slot (B/N).
    pub fn bits_per_slot(&self) -> f64 {
        let cam = crate::sensing::CameraParams::from_config(&self.camera);
        crate::sensing::image_bits(&cam) / self.cellfree.forward_period
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, what: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(CoreError::InvalidConfig(what.to_string()))
            }
        }
        let s = &self.scenario;
        check(s.region_size > 0.0, "scenario.region_size must be positive")?;
        check(s.num_uavs >= 1, "scenario.num_uavs must be at least 1")?;
        check(s.num_aps >= 1, "scenario.num_aps must be at least 1")?;
        check(s.slot_duration > 0.0, "scenario.slot_duration must be positive")?;
        check(
            s.altitude_min > 0.0 && s.altitude_min < s.altitude_max,
            "scenario altitude band must satisfy 0 < min < max",
        )?;
        check(s.max_speed > 0.0 && s.max_accel > 0.0, "scenario speed/accel caps must be positive")?;
        check(
            s.ignition_fraction > 0.0 && s.ignition_fraction <= 1.0,
            "scenario.ignition_fraction must be in (0, 1]",
        )?;
        let c = &self.camera;
        check(
            c.half_angle1_deg > 0.0 && c.half_angle1_deg < 90.0 && c.half_angle2_deg > 0.0 && c.half_angle2_deg < 90.0,
            "camera half-view angles must be in (0, 90) degrees",
        )?;
        check(c.pixel_area_coeff > 0.0, "camera.pixel_area_coeff must be positive")?;
        check(
            c.compression > 0.0 && c.compression <= 1.0,
            "camera.compression must be in (0, 1]",
        )?;
        check(c.fov_regularizer > 0.0, "camera.fov_regularizer must be positive")?;
        check(self.channel.pathloss_exp > 0.0, "channel.pathloss_exp must be positive")?;
        check(self.channel.pilot_power > 0.0, "channel.pilot_power must be positive")?;
        check(
            self.channel.pilot_length > 0.0 && self.channel.pilot_length < self.channel.coherence_block,
            "channel pilot length must be in (0, coherence_block)",
        )?;
        check(self.cellfree.max_power > 0.0, "cellfree.max_power must be positive")?;
        check(self.cellfree.fp_tolerance > 0.0, "cellfree.fp_tolerance must be positive")?;
        check(self.fire.spread_rate > 0.0, "fire.spread_rate must be positive")?;
        check(self.fire.wind_speed_std >= 0.0, "fire.wind_speed_std must be nonnegative")?;
        check(self.fire.ellipse_samples >= 8, "fire.ellipse_samples must be at least 8")?;
        check(self.fire.max_front_vertices >= 16, "fire.max_front_vertices must be at least 16")?;
        check(self.fire.cell_size > 0.0, "fire.cell_size must be positive")?;
        let t = &self.td3;
        check(
            (0.0..=1.0).contains(&t.discount),
            "td3.discount must be in [0, 1]",
        )?;
        check(
            t.soft_update > 0.0 && t.soft_update <= 1.0,
            "td3.soft_update must be in (0, 1]",
        )?;
        check(t.policy_period >= 1, "td3.policy_period must be at least 1")?;
        check(t.minibatch >= 1, "td3.minibatch must be at least 1")?;
        check(
            t.replay_capacity >= t.minibatch,
            "td3.replay_capacity must be at least the minibatch size",
        )?;
        check(!t.hidden_sizes.is_empty(), "td3.hidden_sizes must not be empty")?;
        check(self.rewards.energy_norm > 0.0, "rewards.energy_norm must be positive")?;
        Ok(())
    }
}
