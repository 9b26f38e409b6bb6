//! The per-slot world: fire advance, UAV motion, connectivity, rewards,
//! energy bookkeeping and mission-mode switching.
//!
//! One `World` is one episode. Construction draws the layout (UAVs, APs,
//! stations, ignition, wind) from per-episode seed streams; `step` applies
//! one slot in a fixed order so runs replay bit-exactly.

pub mod threshold;

pub use threshold::{ThresholdTable, SWITCH_SAFETY_FACTOR};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::airframe::{
    check_constraints, consume_energy, propulsion_power, step_kinematics, MotionLimits, PowerParams,
    UavMode, UavState,
};
use crate::cellfree::{deterministic_sinr, spectral_efficiency};
use crate::channel::{ChannelParams, LinkGrid};
use crate::config::ScenarioConfig;
use crate::error::{CoreError, Result};
use crate::fire::{
    advance_front, rasterize_density, sample_wind, DensityGrid, FireFront, FrontGeometry,
    SpreadParams, WindState,
};
use crate::geom::{Vec2, Vec3};
use crate::rng::{stream, SeedTree};
use crate::sensing::{self, CameraParams};

/// Physical-unit action for one UAV: acceleration and transmit power.
#[derive(Clone, Copy, Debug, Default)]
pub struct Action {
    pub accel: Vec3,
    pub power: f64,
}

/// Per-UAV reward with its shaped components `r1..r5`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RewardBreakdown {
    pub total: f64,
    pub components: [f64; 5],
}

impl RewardBreakdown {
    fn from_components(components: [f64; 5]) -> Self {
        Self { total: components.iter().sum(), components }
    }
}

/// One logged slot.
#[derive(Clone, Debug)]
pub struct SlotRecord {
    pub slot: u32,
    pub cost: f64,
    pub coverage: f64,
    pub violations: usize,
    pub modes: Vec<UavMode>,
    pub se: Vec<f64>,
    pub excess: Vec<f64>,
    pub energy: Vec<f64>,
}

/// Episode log: one record per executed slot.
#[derive(Clone, Debug, Default)]
pub struct EpisodeLog {
    pub records: Vec<SlotRecord>,
}

impl EpisodeLog {
    pub fn push(&mut self, r: SlotRecord) {
        self.records.push(r);
    }

    pub fn write_tsv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let m = self.records.first().map_or(0, |r| r.modes.len());
        write!(f, "slot\tcost\tcoverage\tviolations")?;
        for u in 0..m {
            write!(f, "\tmode_{u}\tse_{u}\texcess_{u}\tenergy_{u}")?;
        }
        writeln!(f)?;
        for r in &self.records {
            write!(f, "{}\t{:.9e}\t{:.9e}\t{}", r.slot, r.cost, r.coverage, r.violations)?;
            for u in 0..m {
                let mode = match r.modes[u] {
                    UavMode::Tracking => 0,
                    UavMode::Charging => 1,
                    UavMode::Docked => 2,
                };
                write!(f, "\t{mode}\t{:.9e}\t{:.9e}\t{:.9e}", r.se[u], r.excess[u], r.energy[u])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// What one `step` produced.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub rewards: Vec<RewardBreakdown>,
    /// Episode-terminal flag per UAV (docked or exhausted this slot).
    pub terminals: Vec<bool>,
    /// Reached its assigned station this slot.
    pub arrived: Vec<bool>,
    /// Battery emptied this slot.
    pub exhausted: Vec<bool>,
    pub record: SlotRecord,
}

/// Which parts of the world an episode exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mission {
    /// Fire on; all UAVs track. Energy per config (`unlimited_energy`).
    Tracking,
    /// No fire; UAV 0 starts in charging mode, peers wander.
    Charging,
    /// Fire on, finite energy, threshold-driven switching.
    Mixed,
}

/// Index of the closest station (ties to the lowest index).
pub fn assign_station(position: Vec3, stations: &[Vec3]) -> Option<usize> {
    stations
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| position.distance(**a).partial_cmp(&position.distance(**b)).unwrap())
        .map(|(i, _)| i)
}

/// Fraction by which the delivered rate exceeds the per-slot image budget;
/// zero while not transmitting.
pub fn excess_rate_fraction(
    se: f64,
    transmitting: bool,
    slot_duration: f64,
    bandwidth: f64,
    bits_per_slot: f64,
) -> f64 {
    if !transmitting {
        return 0.0;
    }
    (slot_duration * bandwidth * se - bits_per_slot) / bits_per_slot
}

pub struct World {
    pub cfg: ScenarioConfig,
    pub mission: Mission,
    pub slot: u32,
    pub wind: WindState,
    pub front: FireFront,
    pub density: DensityGrid,
    pub uavs: Vec<UavState>,
    pub aps: Vec<Vec3>,
    pub stations: Vec<Vec3>,
    /// Station index a UAV committed to when it switched to charging.
    pub assignments: Vec<Option<usize>>,
    /// Spectral efficiency observed in the previous slot (drives the
    /// untransmitted-fraction state feature).
    pub last_se: Vec<f64>,
    pub threshold: Option<ThresholdTable>,
    cam: CameraParams,
    chan: ChannelParams,
    power_params: PowerParams,
    limits: MotionLimits,
    spread: SpreadParams,
    front_geometry: FrontGeometry,
    sigma2: f64,
    bits_per_slot: f64,
    wind_prior: WindState,
    wind_rng: ChaCha12Rng,
}

impl World {
    pub const TRACKING_STATE_DIM: usize = 10;
    pub const CHARGING_STATE_DIM: usize = 5;

    /// Build an episode world. `seeds` should already be scoped to the
    /// episode (e.g. `run_tree.child(&[stream::EPISODE, e])`).
    pub fn new(cfg: &ScenarioConfig, seeds: &SeedTree, mission: Mission) -> Result<Self> {
        cfg.validate()?;
        let s = &cfg.scenario;
        let mut layout_rng = seeds.stream(&[stream::LAYOUT]);
        let wind_rng = seeds.stream(&[stream::WIND]);

        let region = s.region_size;
        let ignition_side = region * s.ignition_fraction;
        let lo = (region - ignition_side) / 2.0;
        let ignition = Vec2::new(
            layout_rng.gen_range(lo..lo + ignition_side),
            layout_rng.gen_range(lo..lo + ignition_side),
        );
        let mean_direction = cfg
            .fire
            .wind_direction_mean
            .unwrap_or_else(|| layout_rng.gen_range(0.0..std::f64::consts::TAU));
        let wind_prior = WindState::from_priors(
            cfg.fire.wind_speed_mean,
            cfg.fire.wind_speed_std,
            mean_direction,
            cfg.fire.wind_direction_std,
        );

        let mut uavs = Vec::with_capacity(s.num_uavs);
        for id in 0..s.num_uavs {
            let position = Vec3::new(
                layout_rng.gen_range(0.0..region),
                layout_rng.gen_range(0.0..region),
                layout_rng.gen_range(s.altitude_min..s.altitude_max),
            );
            let energy = if s.unlimited_energy {
                f64::INFINITY
            } else {
                layout_rng.gen_range(s.energy_min_init..s.energy_max)
            };
            uavs.push(UavState::new(id, position, energy));
        }
        let aps: Vec<Vec3> = (0..s.num_aps)
            .map(|_| {
                Vec3::new(
                    layout_rng.gen_range(0.0..region),
                    layout_rng.gen_range(0.0..region),
                    s.ground_node_height,
                )
            })
            .collect();
        let stations: Vec<Vec3> = (0..s.num_stations)
            .map(|_| {
                Vec3::new(
                    layout_rng.gen_range(0.0..region),
                    layout_rng.gen_range(0.0..region),
                    s.ground_node_height,
                )
            })
            .collect();

        let mut assignments = vec![None; s.num_uavs];
        if mission == Mission::Charging {
            if stations.is_empty() {
                return Err(CoreError::InvalidConfig("charging mission needs a station".into()));
            }
            uavs[0].mode = UavMode::Charging;
            assignments[0] = assign_station(uavs[0].position, &stations);
        }

        let front = FireFront::ignite(ignition);
        let density = if mission == Mission::Charging {
            DensityGrid::empty(region, cfg.fire.cell_size, 0)
        } else {
            rasterize_density(&front, region, cfg.fire.cell_size)
        };

        Ok(Self {
            mission,
            slot: 0,
            wind: wind_prior,
            front,
            density,
            uavs,
            aps,
            stations,
            assignments,
            last_se: vec![0.0; s.num_uavs],
            threshold: None,
            cam: CameraParams::from_config(&cfg.camera),
            chan: ChannelParams::from_config(&cfg.channel),
            power_params: PowerParams::from_config(&cfg.power),
            limits: MotionLimits {
                altitude_min: s.altitude_min,
                altitude_max: s.altitude_max,
                max_speed: s.max_speed,
                max_accel: s.max_accel,
                safety_distance: s.safety_distance,
            },
            spread: SpreadParams::new(cfg.fire.spread_rate, s.slot_duration)?,
            front_geometry: FrontGeometry::from_config(&cfg.fire, region),
            sigma2: ChannelParams::from_config(&cfg.channel).noise_power,
            bits_per_slot: cfg.bits_per_slot(),
            wind_prior,
            wind_rng,
            cfg: cfg.clone(),
        })
    }

    pub fn fire_enabled(&self) -> bool {
        self.mission != Mission::Charging
    }

    /// Positions of UAVs currently in tracking mode.
    pub fn tracking_positions(&self) -> Vec<Vec3> {
        self.uavs
            .iter()
            .filter(|u| u.mode == UavMode::Tracking)
            .map(|u| u.position)
            .collect()
    }

    /// Minimum distance from UAV `m` to any other airborne UAV; falls back
    /// to the peer normalization constant when there is no airborne peer.
    fn peer_distance(&self, m: usize) -> f64 {
        let me = &self.uavs[m];
        let best = self
            .uavs
            .iter()
            .filter(|u| u.id != m && u.airborne())
            .map(|u| u.position.distance(me.position))
            .fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            best
        } else {
            self.cfg.peer_norm()
        }
    }

    /// Normalized tracking-stage state of UAV `m`:
    /// `[x/S, y/S, h/h_max, v/v_max (3), com_x/S, com_y/S, d_peer/C_d, i_m]`.
    pub fn tracking_state(&self, m: usize) -> Result<Vec<f64>> {
        let s = &self.cfg.scenario;
        let u = &self.uavs[m];
        let com = sensing::coverage_center_of_mass(
            &self.tracking_positions(),
            &self.density,
            &self.cam,
            self.cfg.camera.fov_regularizer,
        )?;
        let untransmitted = (1.0
            - s.slot_duration * self.cfg.cellfree.bandwidth * self.last_se[m] / self.bits_per_slot)
            .max(0.0);
        Ok(vec![
            u.position.x / s.region_size,
            u.position.y / s.region_size,
            u.position.z / s.altitude_max,
            u.velocity.x / s.max_speed,
            u.velocity.y / s.max_speed,
            u.velocity.z / s.max_speed,
            com.x / s.region_size,
            com.y / s.region_size,
            self.peer_distance(m) / self.cfg.peer_norm(),
            untransmitted,
        ])
    }

    /// Normalized charging-stage state of UAV `m`:
    /// `[Δx/S, Δy/S, Δh/h_max, d_peer, E/E_0]`.
    pub fn charging_state(&self, m: usize) -> Result<Vec<f64>> {
        let s = &self.cfg.scenario;
        let u = &self.uavs[m];
        let station = self.assignments[m]
            .and_then(|i| self.stations.get(i))
            .ok_or_else(|| CoreError::InvalidConfig(format!("uav {m} has no assigned station")))?;
        let peer = if self.cfg.rewards.normalize_peer_distance {
            self.peer_distance(m) / self.cfg.peer_norm()
        } else {
            self.peer_distance(m)
        };
        Ok(vec![
            (station.x - u.position.x) / s.region_size,
            (station.y - u.position.y) / s.region_size,
            (station.z - u.position.z) / s.altitude_max,
            peer,
            u.energy / self.cfg.rewards.energy_norm,
        ])
    }

    fn altitude_floor(&self, u: &UavState, m: usize) -> f64 {
        match u.mode {
            UavMode::Charging => self.assignments[m]
                .and_then(|i| self.stations.get(i))
                .map(|st| st.z.min(self.limits.altitude_min))
                .unwrap_or(self.limits.altitude_min),
            _ => self.limits.altitude_min,
        }
    }

    /// Advance one slot. `actions` must have one entry per UAV; docked
    /// entries are ignored. Charging/docked UAVs never transmit.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome> {
        let s = self.cfg.scenario.clone();
        let m_all = self.uavs.len();
        if actions.len() != m_all {
            return Err(CoreError::ShapeMismatch(format!("{} actions for {m_all} UAVs", actions.len())));
        }

        // (1) environment dynamics
        if self.fire_enabled() {
            self.wind = sample_wind(&self.wind_prior, &mut self.wind_rng);
            self.front = advance_front(&self.front, &self.wind, &self.spread, &self.front_geometry)?;
            self.density = rasterize_density(&self.front, s.region_size, self.cfg.fire.cell_size);
        }

        // (2) kinematics with projection; remember raw breaches for rewards
        let mut raw_out_of_limits = vec![false; m_all];
        let mut raw_overspeed = vec![false; m_all];
        let mut dist_before = vec![0.0; m_all];
        for m in 0..m_all {
            if !self.uavs[m].airborne() {
                continue;
            }
            if let Some(st) = self.assignments[m].and_then(|i| self.stations.get(i)) {
                dist_before[m] = self.uavs[m].position.distance(*st);
            }
            let floor = self.altitude_floor(&self.uavs[m], m);
            let step = step_kinematics(&self.uavs[m], actions[m].accel, s.slot_duration, &self.limits, floor);
            let raw = step.raw_position;
            raw_out_of_limits[m] = raw.x < 0.0
                || raw.x > s.region_size
                || raw.y < 0.0
                || raw.y > s.region_size
                || raw.z < floor
                || raw.z > self.limits.altitude_max;
            raw_overspeed[m] = step.raw_speed > self.limits.max_speed + 1e-12;
            self.uavs[m] = step.state;
            self.uavs[m].tx_power = if self.uavs[m].mode == UavMode::Tracking {
                actions[m].power.clamp(0.0, self.cfg.cellfree.max_power)
            } else {
                0.0
            };
        }

        // (3) connectivity for the tracking subset
        let tracking_ids: Vec<usize> =
            (0..m_all).filter(|&m| self.uavs[m].mode == UavMode::Tracking).collect();
        let mut se = vec![0.0; m_all];
        if self.fire_enabled() && !tracking_ids.is_empty() {
            let positions: Vec<Vec3> = tracking_ids.iter().map(|&m| self.uavs[m].position).collect();
            let powers: Vec<f64> = tracking_ids.iter().map(|&m| self.uavs[m].tx_power).collect();
            let grid = LinkGrid::build(&positions, &self.aps, &self.chan)?;
            let (sinr, _) = deterministic_sinr(
                &grid,
                &powers,
                self.sigma2,
                self.cfg.cellfree.fp_tolerance,
                self.cfg.cellfree.fp_max_iterations,
            )?;
            for (k, &m) in tracking_ids.iter().enumerate() {
                se[m] =
                    spectral_efficiency(sinr[k], self.cfg.channel.pilot_length, self.cfg.channel.coherence_block);
            }
        }

        // propulsion power and prospective exhaustion feed the rewards
        let mut power_draw = vec![0.0; m_all];
        let mut exhausted = vec![false; m_all];
        let mut arrived = vec![false; m_all];
        for m in 0..m_all {
            let u = &self.uavs[m];
            if !u.airborne() {
                continue;
            }
            power_draw[m] = propulsion_power(u.velocity, &self.power_params);
            if !s.unlimited_energy {
                exhausted[m] = u.energy - power_draw[m] * s.slot_duration <= 0.0;
            }
            if u.mode == UavMode::Charging {
                if let Some(st) = self.assignments[m].and_then(|i| self.stations.get(i)) {
                    arrived[m] = u.position.distance(*st) <= s.arrival_tolerance;
                }
            }
        }

        // (4) rewards on the post-move world
        let tracking_positions = self.tracking_positions();
        let (cost, coverage) = if self.fire_enabled() {
            let cost = sensing::tracking_cost(
                &tracking_positions,
                &self.density,
                &self.cam,
                self.cfg.camera.fov_regularizer,
            );
            let coverage = sensing::coverage(&tracking_positions, &self.density, &self.cam).unwrap_or(0.0);
            (cost, coverage)
        } else {
            (0.0, 0.0)
        };
        let importance_budget =
            self.density.total_weight() * self.density.cell_area() / self.cfg.camera.fov_regularizer;

        let r = &self.cfg.rewards;
        let mut rewards = vec![RewardBreakdown::default(); m_all];
        for m in 0..m_all {
            let u = &self.uavs[m];
            if !u.airborne() {
                continue;
            }
            let collided = self
                .uavs
                .iter()
                .any(|o| o.id != m && o.airborne() && o.position.distance(u.position) <= s.safety_distance);
            let r2 = if collided { -r.k_collision } else { 0.0 };
            let r4 = if raw_out_of_limits[m] { -r.k_limits } else { 0.0 };
            let r5 = if raw_overspeed[m] { -r.k_speed } else { 0.0 };
            rewards[m] = match u.mode {
                UavMode::Tracking if self.fire_enabled() => {
                    let r1 = r.k_cost * (1.0 - cost / importance_budget);
                    let deficit =
                        self.bits_per_slot >= s.slot_duration * self.cfg.cellfree.bandwidth * se[m];
                    let r3 = if deficit { -r.k_rate } else { 0.0 };
                    RewardBreakdown::from_components([r1, r2, r3, r4, r5])
                }
                UavMode::Tracking => RewardBreakdown::from_components([0.0, r2, 0.0, r4, r5]),
                UavMode::Charging => {
                    let st = self.assignments[m].and_then(|i| self.stations.get(i)).copied();
                    let dist_after = st.map(|p| u.position.distance(p)).unwrap_or(0.0);
                    let r1 = if arrived[m] {
                        r.k_arrival
                    } else {
                        // energy term in kJ so the shaped scale matches the
                        // arrival bonus
                        let mut v = -r.k_energy * power_draw[m] * s.slot_duration / 1000.0
                            + r.k_distance * (dist_before[m] - dist_after);
                        if exhausted[m] {
                            v -= r.k_exhausted;
                        }
                        v
                    };
                    RewardBreakdown::from_components([r1, r2, 0.0, r4, r5])
                }
                UavMode::Docked => RewardBreakdown::default(),
            };
        }

        // (5) energy bookkeeping
        if !s.unlimited_energy {
            for m in 0..m_all {
                if self.uavs[m].airborne() {
                    self.uavs[m] = consume_energy(&self.uavs[m], power_draw[m], s.slot_duration);
                }
            }
        }

        // (6) mode machine: Tracking -> Charging -> Docked
        let mut terminals = vec![false; m_all];
        for m in 0..m_all {
            match self.uavs[m].mode {
                UavMode::Tracking => {
                    if self.uavs[m].exhausted {
                        self.uavs[m].mode = UavMode::Docked;
                        terminals[m] = true;
                    } else if let Some(table) = &self.threshold {
                        if let Some(nearest) = assign_station(self.uavs[m].position, &self.stations) {
                            let d = self.uavs[m].position.distance(self.stations[nearest]);
                            if self.uavs[m].energy < table.threshold(d, SWITCH_SAFETY_FACTOR) {
                                self.uavs[m].mode = UavMode::Charging;
                                self.uavs[m].tx_power = 0.0;
                                self.assignments[m] = Some(nearest);
                            }
                        }
                    }
                }
                UavMode::Charging => {
                    if arrived[m] {
                        self.uavs[m].mode = UavMode::Docked;
                        self.uavs[m].velocity = Vec3::ZERO;
                        terminals[m] = true;
                    } else if self.uavs[m].exhausted {
                        self.uavs[m].mode = UavMode::Docked;
                        terminals[m] = true;
                    }
                }
                UavMode::Docked => {}
            }
        }

        // (7) log
        let violations = check_constraints(
            &self.uavs,
            &actions.iter().map(|a| a.accel).collect::<Vec<_>>(),
            &self.limits,
        )
        .len();
        self.slot += 1;
        let record = SlotRecord {
            slot: self.slot,
            cost,
            coverage,
            violations,
            modes: self.uavs.iter().map(|u| u.mode).collect(),
            se: se.clone(),
            excess: (0..m_all)
                .map(|m| {
                    excess_rate_fraction(
                        se[m],
                        self.uavs[m].mode == UavMode::Tracking && self.fire_enabled(),
                        s.slot_duration,
                        self.cfg.cellfree.bandwidth,
                        self.bits_per_slot,
                    )
                })
                .collect(),
            energy: self.uavs.iter().map(|u| u.energy).collect(),
        };
        self.last_se = se;
        Ok(StepOutcome { rewards, terminals, arrived, exhausted, record })
    }
}
