//! UAV kinematics, rotary-wing propulsion power and constraint checks.
//!
//! Altitude and speed are hard-projected after integration so the physics
//! stays well-posed; collisions and region breaches are left to the reward
//! layer to penalize.

use crate::config::PowerSection;
use crate::geom::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UavMode {
    Tracking,
    Charging,
    Docked,
}

#[derive(Clone, Debug)]
pub struct UavState {
    pub id: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Remaining battery energy (J).
    pub energy: f64,
    pub mode: UavMode,
    /// Current uplink transmit power (W).
    pub tx_power: f64,
    /// Set once the battery hits zero while airborne.
    pub exhausted: bool,
}

impl UavState {
    pub fn new(id: usize, position: Vec3, energy: f64) -> Self {
        Self {
            id,
            position,
            velocity: Vec3::ZERO,
            energy,
            mode: UavMode::Tracking,
            tx_power: 0.0,
            exhausted: false,
        }
    }

    pub fn airborne(&self) -> bool {
        self.mode != UavMode::Docked
    }
}

/// Rotary-wing power constants.
#[derive(Clone, Copy, Debug)]
pub struct PowerParams {
    pub blade_profile: f64,
    pub induced: f64,
    pub tip_speed: f64,
    pub rotor_induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    pub rotor_solidity: f64,
    pub air_density: f64,
    pub rotor_disc_area: f64,
    pub weight: f64,
}

impl PowerParams {
    pub fn from_config(cfg: &PowerSection) -> Self {
        Self {
            blade_profile: cfg.blade_profile,
            induced: cfg.induced,
            tip_speed: cfg.tip_speed,
            rotor_induced_velocity: cfg.rotor_induced_velocity,
            fuselage_drag_ratio: cfg.fuselage_drag_ratio,
            rotor_solidity: cfg.rotor_solidity,
            air_density: cfg.air_density,
            rotor_disc_area: cfg.rotor_disc_area,
            weight: cfg.weight,
        }
    }

    pub fn hover_power(&self) -> f64 {
        self.blade_profile + self.induced
    }
}

/// Kinematic caps used for projection and violation checks.
#[derive(Clone, Copy, Debug)]
pub struct MotionLimits {
    pub altitude_min: f64,
    pub altitude_max: f64,
    pub max_speed: f64,
    pub max_accel: f64,
    pub safety_distance: f64,
}

/// Raw and projected states after one integration step.
#[derive(Clone, Debug)]
pub struct KinematicsStep {
    /// Projected state: altitude clamped, speed rescaled.
    pub state: UavState,
    /// Position before projection (for out-of-limits penalties).
    pub raw_position: Vec3,
    /// Speed magnitude before projection.
    pub raw_speed: f64,
}

/// First-order integration `q' = q + vδ + a δ²/2`, `v' = v + aδ`, with the
/// acceleration clamped per axis, followed by projection onto
/// `[altitude_floor, altitude_max]` and the speed ball.
pub fn step_kinematics(
    state: &UavState,
    accel: Vec3,
    delta: f64,
    limits: &MotionLimits,
    altitude_floor: f64,
) -> KinematicsStep {
    let a = Vec3::new(
        accel.x.clamp(-limits.max_accel, limits.max_accel),
        accel.y.clamp(-limits.max_accel, limits.max_accel),
        accel.z.clamp(-limits.max_accel, limits.max_accel),
    );
    let raw_position = state.position + state.velocity * delta + a * (0.5 * delta * delta);
    let mut velocity = state.velocity + a * delta;
    let raw_speed = velocity.norm();
    if raw_speed > limits.max_speed {
        velocity = velocity * (limits.max_speed / raw_speed);
    }
    let mut position = raw_position;
    position.z = position.z.clamp(altitude_floor, limits.altitude_max);
    let mut next = state.clone();
    next.position = position;
    next.velocity = velocity;
    KinematicsStep { state: next, raw_position, raw_speed }
}

/// Rotary-wing power draw at the given velocity: blade profile, induced,
/// parasitic drag and climb terms. Clamped at zero so steep descents do not
/// recharge the battery.
pub fn propulsion_power(velocity: Vec3, params: &PowerParams) -> f64 {
    let v = velocity.norm();
    let v2 = v * v;
    let blade = params.blade_profile * (1.0 + 3.0 * v2 / (params.tip_speed * params.tip_speed));
    let v0_2 = params.rotor_induced_velocity * params.rotor_induced_velocity;
    let induced = params.induced * ((1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2)).sqrt();
    let drag = 0.5
        * params.fuselage_drag_ratio
        * params.air_density
        * params.rotor_solidity
        * params.rotor_disc_area
        * v2
        * v;
    // v sin(climb angle) is just the vertical rate; zero speed means level
    let climb = params.weight * velocity.z;
    (blade + induced + drag + climb).max(0.0)
}

/// Drain `power * delta` joules; returns the updated state with the
/// exhaustion flag set when the battery empties while airborne.
pub fn consume_energy(state: &UavState, power: f64, delta: f64) -> UavState {
    let mut next = state.clone();
    let drained = (state.energy - power * delta).max(0.0);
    if drained == 0.0 && state.energy > 0.0 && state.airborne() {
        next.exhausted = true;
    }
    next.energy = drained;
    next
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    Altitude { id: usize, altitude: f64 },
    Speed { id: usize, speed: f64 },
    Acceleration { id: usize, magnitude: f64 },
    Collision { a: usize, b: usize, distance: f64 },
}

/// Report every constraint breach across the swarm. Docked UAVs are ignored.
/// Pass an empty `accels` slice when accelerations are not being audited.
pub fn check_constraints(states: &[UavState], accels: &[Vec3], limits: &MotionLimits) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in states.iter().filter(|s| s.airborne()) {
        let h = s.position.z;
        if h < limits.altitude_min || h > limits.altitude_max {
            out.push(Violation::Altitude { id: s.id, altitude: h });
        }
        let v = s.velocity.norm();
        if v > limits.max_speed + 1e-12 {
            out.push(Violation::Speed { id: s.id, speed: v });
        }
    }
    for (k, a) in accels.iter().enumerate() {
        let m = a.max_abs_component();
        if m > limits.max_accel + 1e-12 {
            let id = states.get(k).map(|s| s.id).unwrap_or(k);
            out.push(Violation::Acceleration { id, magnitude: m });
        }
    }
    let airborne: Vec<&UavState> = states.iter().filter(|s| s.airborne()).collect();
    for i in 0..airborne.len() {
        for j in (i + 1)..airborne.len() {
            let d = airborne[i].position.distance(airborne[j].position);
            if d < limits.safety_distance {
                out.push(Violation::Collision { a: airborne[i].id, b: airborne[j].id, distance: d });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PowerSection;

    fn params() -> PowerParams {
        PowerParams::from_config(&PowerSection::default())
    }

    fn limits() -> MotionLimits {
        MotionLimits {
            altitude_min: 100.0,
            altitude_max: 150.0,
            max_speed: 20.0,
            max_accel: 1.0,
            safety_distance: 4.0,
        }
    }

    #[test]
    fn hover_does_not_move() {
        let s = UavState::new(0, Vec3::new(10.0, 20.0, 120.0), 1e4);
        let step = step_kinematics(&s, Vec3::ZERO, 0.5, &limits(), 100.0);
        assert_eq!(step.state.position, s.position);
        assert_eq!(step.state.velocity, Vec3::ZERO);
    }

    #[test]
    fn linear_motion_integrates_exactly() {
        let mut s = UavState::new(0, Vec3::new(0.0, 0.0, 100.0), 1e4);
        s.velocity = Vec3::new(2.0, 0.0, 0.0);
        let step = step_kinematics(&s, Vec3::ZERO, 0.5, &limits(), 100.0);
        assert_eq!(step.state.position, Vec3::new(1.0, 0.0, 100.0));
        // constant-velocity motion stays exact over many slots
        let mut state = s.clone();
        for _ in 0..100 {
            state = step_kinematics(&state, Vec3::ZERO, 0.5, &limits(), 100.0).state;
        }
        assert!((state.position.x - 100.0).abs() < 1e-12);
    }

    #[test]
    fn acceleration_step_matches_taylor_oracle() {
        let s = UavState::new(0, Vec3::new(0.0, 0.0, 100.0), 1e4);
        let step = step_kinematics(&s, Vec3::new(1.0, 0.0, 0.0), 0.5, &limits(), 100.0);
        assert!((step.state.position.x - 0.125).abs() < 1e-15);
        assert!((step.state.velocity.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_is_idempotent_on_feasible_states() {
        let mut s = UavState::new(0, Vec3::new(5.0, 5.0, 120.0), 1e4);
        s.velocity = Vec3::new(3.0, 0.0, 0.0);
        let once = step_kinematics(&s, Vec3::ZERO, 0.5, &limits(), 100.0);
        assert_eq!(once.raw_position, once.state.position);
        assert_eq!(once.raw_speed, once.state.velocity.norm());
    }

    #[test]
    fn altitude_and_speed_are_projected() {
        let mut s = UavState::new(0, Vec3::new(0.0, 0.0, 100.2), 1e4);
        s.velocity = Vec3::new(0.0, 0.0, -5.0);
        let step = step_kinematics(&s, Vec3::ZERO, 0.5, &limits(), 100.0);
        assert_eq!(step.state.position.z, 100.0);
        assert!(step.raw_position.z < 100.0);

        let mut fast = UavState::new(1, Vec3::new(0.0, 0.0, 120.0), 1e4);
        fast.velocity = Vec3::new(19.9, 0.0, 0.0);
        let step = step_kinematics(&fast, Vec3::new(1.0, 0.0, 0.0), 0.5, &limits(), 100.0);
        assert!(step.raw_speed > 20.0);
        assert!((step.state.velocity.norm() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn hover_power_is_the_two_constant_terms() {
        let p = propulsion_power(Vec3::ZERO, &params());
        assert!((p - 168.49).abs() < 1e-12, "hover power {p}");
    }

    #[test]
    fn level_flight_has_no_climb_term() {
        let p = params();
        let vel = Vec3::new(10.0, 0.0, 0.0);
        let weightless = PowerParams { weight: 0.0, ..p };
        assert_eq!(propulsion_power(vel, &p), propulsion_power(vel, &weightless));
        // and a vertical rate contributes exactly weight * v_z
        let climb = Vec3::new(10.0, 0.0, 1.0);
        let diff = propulsion_power(climb, &p) - propulsion_power(climb, &weightless);
        assert!((diff - p.weight * 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_is_never_negative() {
        let p = params();
        let dive = propulsion_power(Vec3::new(0.0, 0.0, -20.0), &p);
        assert_eq!(dive, 0.0);
    }

    #[test]
    fn energy_drain_is_exact_and_clamped() {
        let s = UavState::new(0, Vec3::new(0.0, 0.0, 120.0), 1000.0);
        let next = consume_energy(&s, 200.0, 0.5);
        assert_eq!(next.energy, 900.0);
        assert!(!next.exhausted);
        let low = UavState { energy: 50.0, ..s.clone() };
        let dead = consume_energy(&low, 200.0, 0.5);
        assert_eq!(dead.energy, 0.0);
        assert!(dead.exhausted);
    }

    #[test]
    fn hover_energy_is_linear_in_slots() {
        let p = params();
        let mut s = UavState::new(0, Vec3::new(0.0, 0.0, 120.0), 1e4);
        let n = 37;
        for _ in 0..n {
            let pw = propulsion_power(s.velocity, &p);
            s = consume_energy(&s, pw, 0.5);
        }
        let expected = 1e4 - n as f64 * p.hover_power() * 0.5;
        assert!((s.energy - expected).abs() < 1e-9);
    }

    #[test]
    fn docked_uavs_do_not_exhaust() {
        let mut s = UavState::new(0, Vec3::new(0.0, 0.0, 10.0), 10.0);
        s.mode = UavMode::Docked;
        let next = consume_energy(&s, 100.0, 0.5);
        assert!(!next.exhausted);
    }

    #[test]
    fn violations_are_reported_per_kind() {
        let mut a = UavState::new(0, Vec3::new(0.0, 0.0, 99.9), 1e4);
        let b = UavState::new(1, Vec3::new(3.0, 0.0, 99.9), 1e4);
        a.velocity = Vec3::new(25.0, 0.0, 0.0);
        let v = check_constraints(&[a, b], &[], &limits());
        assert!(v.iter().any(|x| matches!(x, Violation::Altitude { id: 0, .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::Altitude { id: 1, .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::Speed { id: 0, .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::Collision { a: 0, b: 1, .. })));
    }

    #[test]
    fn nominal_swarm_has_no_violations() {
        let mut a = UavState::new(0, Vec3::new(0.0, 0.0, 120.0), 1e4);
        let b = UavState::new(1, Vec3::new(50.0, 0.0, 130.0), 1e4);
        a.velocity = Vec3::new(5.0, 0.0, 0.0);
        assert!(check_constraints(&[a, b], &[Vec3::new(0.5, 0.0, 0.0)], &limits()).is_empty());
    }

    #[test]
    fn docked_uavs_are_invisible_to_collision_checks() {
        let a = UavState::new(0, Vec3::new(0.0, 0.0, 120.0), 1e4);
        let mut b = UavState::new(1, Vec3::new(1.0, 0.0, 120.0), 1e4);
        b.mode = UavMode::Docked;
        b.position = Vec3::new(0.5, 0.0, 120.0);
        let v = check_constraints(&[a, b], &[], &limits());
        assert!(v.iter().all(|x| !matches!(x, Violation::Collision { .. })));
    }
}
