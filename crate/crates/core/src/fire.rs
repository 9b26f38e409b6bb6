//! Fire-front propagation.
//!
//! Each front vertex sprouts a wind-shaped ellipse every slot; the new front
//! is the convex hull of all sprouted points (plus the old vertices, so the
//! burned region never shrinks), clipped to the region and resampled to a
//! bounded vertex count. The perimeter is rasterized into a density
//! histogram that downstream modules integrate against.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::FireSection;
use crate::error::{CoreError, Result};
use crate::geom::{self, Vec2};

const TAU: f64 = std::f64::consts::TAU;

/// Midflame wind: the current draw plus the priors it was drawn from.
#[derive(Clone, Copy, Debug)]
pub struct WindState {
    /// Current wind speed (m/s), always nonnegative.
    pub speed: f64,
    /// Current direction (radians), wrapped to [0, 2π).
    pub direction: f64,
    /// Speed prior: folded-normal location and scale.
    pub mean_speed: f64,
    pub speed_std: f64,
    /// Direction prior: normal location and scale.
    pub mean_direction: f64,
    pub direction_std: f64,
}

impl WindState {
    pub fn from_priors(mean_speed: f64, speed_std: f64, mean_direction: f64, direction_std: f64) -> Self {
        Self {
            speed: mean_speed.abs(),
            direction: mean_direction.rem_euclid(TAU),
            mean_speed,
            speed_std,
            mean_direction,
            direction_std,
        }
    }
}

/// Draw the next slot's wind from the priors carried in `state`.
pub fn sample_wind<R: Rng>(state: &WindState, rng: &mut R) -> WindState {
    let speed = if state.speed_std > 0.0 {
        Normal::new(state.mean_speed, state.speed_std).expect("finite std").sample(rng).abs()
    } else {
        state.mean_speed.abs()
    };
    let direction = if state.direction_std > 0.0 {
        Normal::new(state.mean_direction, state.direction_std)
            .expect("finite std")
            .sample(rng)
            .rem_euclid(TAU)
    } else {
        state.mean_direction.rem_euclid(TAU)
    };
    WindState { speed, direction, ..*state }
}

/// Length-to-breadth and head-to-back ratios from the wind speed.
///
/// LB is 1 exactly in still air and grows with wind; HB follows from LB.
pub fn eccentricity_coeffs(wind_speed: f64) -> Result<(f64, f64)> {
    if wind_speed < 0.0 {
        return Err(CoreError::NonFinite(format!("negative wind speed {wind_speed}")));
    }
    let lb = 0.936 * (0.2566 * wind_speed).exp() + 0.461 * (-0.1548 * wind_speed).exp() - 0.397;
    // guard the U≈0 branch against the constants summing to 1 - 1e-17
    let lb = lb.max(1.0);
    let root = (lb * lb - 1.0).sqrt();
    let hb = if root < lb * 1e-12 { 1.0 } else { (lb + root) / (lb - root) };
    Ok((lb, hb))
}

/// Semi-axes of the local spread ellipse, in the same unit as `rate`
/// (meters per slot here). The minor axis `a` is across-wind, the major
/// axis `b` along-wind, with a ≤ b.
pub fn ellipse_axes(rate: f64, lb: f64, hb: f64) -> (f64, f64) {
    let along = 0.5 * (rate + rate / hb);
    (along / lb, along)
}

/// Downwind drift of the ellipse center per slot.
pub fn spread_gradient(rate: f64, hb: f64) -> f64 {
    0.5 * rate * (1.0 - 1.0 / hb)
}

/// Steady-state spread rate, stored in m/min and converted to m/slot.
#[derive(Clone, Copy, Debug)]
pub struct SpreadParams {
    rate_m_per_min: f64,
    slot_duration: f64,
}

impl SpreadParams {
    pub fn new(rate_m_per_min: f64, slot_duration: f64) -> Result<Self> {
        if rate_m_per_min <= 0.0 {
            return Err(CoreError::InvalidConfig("spread rate must be positive".into()));
        }
        Ok(Self { rate_m_per_min, slot_duration })
    }

    /// Rate in meters per slot.
    pub fn per_slot(&self) -> f64 {
        self.rate_m_per_min * self.slot_duration / 60.0
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }
}

/// The burning perimeter: counter-clockwise convex polygon vertices.
#[derive(Clone, Debug)]
pub struct FireFront {
    pub points: Vec<Vec2>,
    pub ignition: Vec2,
    pub slot: u32,
}

impl FireFront {
    pub fn ignite(ignition: Vec2) -> Self {
        Self { points: vec![ignition], ignition, slot: 0 }
    }

    pub fn area(&self) -> f64 {
        geom::polygon_area(&self.points)
    }

    pub fn centroid(&self) -> Vec2 {
        geom::polygon_centroid(&self.points)
    }

    /// True when every vertex lies strictly inside the open region, at
    /// distance at least `margin` from the boundary.
    pub fn interior_to(&self, region: f64, margin: f64) -> bool {
        self.points
            .iter()
            .all(|p| p.x > margin && p.y > margin && p.x < region - margin && p.y < region - margin)
    }
}

/// Discretization knobs for one advance step.
#[derive(Clone, Copy, Debug)]
pub struct FrontGeometry {
    /// Samples per local ellipse (≥ 8).
    pub ellipse_samples: usize,
    /// Vertex cap after hulling.
    pub max_vertices: usize,
    /// Region side; vertices are clamped into [0, region]^2.
    pub region: f64,
}

impl FrontGeometry {
    pub fn from_config(fire: &FireSection, region: f64) -> Self {
        Self {
            ellipse_samples: fire.ellipse_samples,
            max_vertices: fire.max_front_vertices,
            region,
        }
    }
}

/// Advance the perimeter by one slot.
///
/// The local ellipse is axis-aligned with the wind: drift and major axis
/// point downwind, minor axis across-wind. With the direction measured from
/// the +y axis this reduces to the axis-aligned form at θ = 0.
pub fn advance_front(
    front: &FireFront,
    wind: &WindState,
    params: &SpreadParams,
    geometry: &FrontGeometry,
) -> Result<FireFront> {
    if front.points.is_empty() {
        return Err(CoreError::MalformedFront("front has no points".into()));
    }
    if geometry.ellipse_samples < 8 {
        return Err(CoreError::InvalidConfig("need at least 8 ellipse samples".into()));
    }
    let (lb, hb) = eccentricity_coeffs(wind.speed)?;
    let rate = params.per_slot();
    let (minor, major) = ellipse_axes(rate, lb, hb);
    let drift = spread_gradient(rate, hb);
    let delta = params.slot_duration();

    let downwind = Vec2::new(wind.direction.sin(), wind.direction.cos());
    let crosswind = Vec2::new(downwind.y, -downwind.x);

    let k = geometry.ellipse_samples;
    let mut samples = Vec::with_capacity(front.points.len() * (k + 1));
    for &z in &front.points {
        samples.push(z);
        for s in 0..k {
            let omega = TAU * s as f64 / k as f64;
            let along = drift + major * omega.sin();
            let across = minor * omega.cos();
            let p = z + (downwind * along + crosswind * across) * delta;
            samples.push(p.clamp_to(0.0, geometry.region));
        }
    }

    let mut hull = geom::convex_hull(&samples);
    if hull.len() < 3 {
        return Err(CoreError::MalformedFront(format!(
            "degenerate hull with {} vertices at slot {}",
            hull.len(),
            front.slot + 1
        )));
    }
    if hull.len() > geometry.max_vertices {
        hull = geom::resample_closed(&hull, geometry.max_vertices);
    }
    Ok(FireFront { points: hull, ignition: front.ignition, slot: front.slot + 1 })
}

/// Density histogram over the region: cell weights are nonzero exactly on
/// cells crossed by the perimeter polyline.
#[derive(Clone, Debug)]
pub struct DensityGrid {
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    pub weights: Vec<f64>,
    pub slot: u32,
}

impl DensityGrid {
    pub fn empty(region: f64, cell_size: f64, slot: u32) -> Self {
        let n = (region / cell_size).ceil() as usize;
        Self { cell_size, nx: n, ny: n, weights: vec![0.0; n * n], slot }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[self.index(i, j)]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new((i as f64 + 0.5) * self.cell_size, (j as f64 + 0.5) * self.cell_size)
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    /// Indices of cells with positive weight.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.nx;
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(move |(k, _)| (k % nx, k / nx))
    }

    pub fn support_len(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Reweight cells with an importance map; weights stay nonnegative and
    /// the support can only shrink where the map is zero.
    pub fn apply_importance(&mut self, importance: impl Fn(usize, usize) -> f64) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                if self.weights[k] > 0.0 {
                    self.weights[k] *= importance(i, j).max(0.0);
                }
            }
        }
    }
}

/// Mark every cell the perimeter passes through with weight 1.
pub fn rasterize_density(front: &FireFront, region: f64, cell_size: f64) -> DensityGrid {
    let mut grid = DensityGrid::empty(region, cell_size, front.slot);
    let pts = &front.points;
    if pts.is_empty() {
        return grid;
    }
    if pts.len() == 1 {
        let i = (pts[0].x / cell_size).floor();
        let j = (pts[0].y / cell_size).floor();
        if i >= 0.0 && j >= 0.0 && (i as usize) < grid.nx && (j as usize) < grid.ny {
            let k = grid.index(i as usize, j as usize);
            grid.weights[k] = 1.0;
        }
        return grid;
    }
    let n = pts.len();
    let (nx, ny) = (grid.nx, grid.ny);
    for e in 0..n {
        let a = pts[e];
        let b = pts[(e + 1) % n];
        geom::cells_on_segment(a, b, cell_size, nx, ny, |i, j| {
            let k = j * nx + i;
            grid.weights[k] = 1.0;
        });
    }
    grid
}
