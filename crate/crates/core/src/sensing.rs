//! Camera geometry and the coverage metrics built on it: per-pixel ground
//! area, the multi-camera harmonic combination, the density-weighted cost
//! integral, the covered fraction of the burning perimeter, and the
//! cost-weighted center of mass used as a policy feature.

use crate::config::CameraSection;
use crate::error::{CoreError, Result};
use crate::fire::DensityGrid;
use crate::geom::{Vec2, Vec3};

/// Downward camera intrinsics.
#[derive(Clone, Copy, Debug)]
pub struct CameraParams {
    /// Half-view angles (radians), each in (0, π/2).
    pub half_angle1: f64,
    pub half_angle2: f64,
    /// Area-per-pixel coefficient a.
    pub pixel_area_coeff: f64,
    /// Focal-length parameter b (m).
    pub focal_param: f64,
    /// Compression ratio in (0, 1].
    pub compression: f64,
}

impl CameraParams {
    pub fn from_config(cfg: &CameraSection) -> Self {
        Self {
            half_angle1: cfg.half_angle1_deg.to_radians(),
            half_angle2: cfg.half_angle2_deg.to_radians(),
            pixel_area_coeff: cfg.pixel_area_coeff,
            focal_param: cfg.focal_param,
            compression: cfg.compression,
        }
    }
}

/// Ground rectangle seen by a camera at `position`.
#[derive(Clone, Copy, Debug)]
pub struct FovRect {
    pub center: Vec2,
    pub half_width: f64,
    pub half_height: f64,
}

impl FovRect {
    pub fn new(position: Vec3, cam: &CameraParams) -> Self {
        Self {
            center: position.xy(),
            half_width: position.z * cam.half_angle1.tan(),
            half_height: position.z * cam.half_angle2.tan(),
        }
    }

    pub fn contains(&self, v: Vec2) -> bool {
        (v.x - self.center.x).abs() <= self.half_width && (v.y - self.center.y).abs() <= self.half_height
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_height
    }
}

/// Ground area imaged by one pixel at `v`, infinite outside the FoV.
pub fn area_per_pixel(position: Vec3, v: Vec2, cam: &CameraParams) -> f64 {
    if FovRect::new(position, cam).contains(v) {
        let d = cam.focal_param - position.z;
        cam.pixel_area_coeff * d * d
    } else {
        f64::INFINITY
    }
}

/// Sensor pixel count; the altitude cancels out of the FoV/area ratio.
pub fn pixel_count(cam: &CameraParams) -> f64 {
    4.0 * cam.half_angle1.tan() * cam.half_angle2.tan() / cam.pixel_area_coeff
}

/// Bits per compressed 24-bit image.
pub fn image_bits(cam: &CameraParams) -> f64 {
    24.0 * pixel_count(cam) * cam.compression
}

/// Joint area per pixel when several cameras may cover `v`: harmonic
/// combination of the single-camera values, regularized by `delta` so an
/// uncovered point contributes 1/delta instead of diverging.
pub fn multi_area_per_pixel(positions: &[Vec3], v: Vec2, cam: &CameraParams, delta: f64) -> f64 {
    let mut acc = delta;
    for &q in positions {
        let f = area_per_pixel(q, v, cam);
        if f.is_finite() {
            acc += 1.0 / f;
        }
    }
    1.0 / acc
}

/// Density-weighted integral of the joint area per pixel over the grid
/// (midpoint rule on the histogram cells).
pub fn tracking_cost(positions: &[Vec3], grid: &DensityGrid, cam: &CameraParams, delta: f64) -> f64 {
    let cell_area = grid.cell_area();
    let mut acc = 0.0;
    for (i, j) in grid.support() {
        let w = grid.weight(i, j);
        acc += multi_area_per_pixel(positions, grid.cell_center(i, j), cam, delta) * w * cell_area;
    }
    acc
}

/// Fraction of positive-density cells whose center lies inside at least one
/// FoV. Errors when the grid has no support.
pub fn coverage(positions: &[Vec3], grid: &DensityGrid, cam: &CameraParams) -> Result<f64> {
    let rects: Vec<FovRect> = positions.iter().map(|&q| FovRect::new(q, cam)).collect();
    let mut total = 0usize;
    let mut covered = 0usize;
    for (i, j) in grid.support() {
        total += 1;
        let center = grid.cell_center(i, j);
        if rects.iter().any(|r| r.contains(center)) {
            covered += 1;
        }
    }
    if total == 0 {
        return Err(CoreError::NoFire);
    }
    Ok(covered as f64 / total as f64)
}

/// Cost-weighted mean ground position over the density support. Uncovered
/// cells carry weight 1/delta, so the center of mass is pulled toward the
/// parts of the perimeter no camera sees.
pub fn coverage_center_of_mass(
    positions: &[Vec3],
    grid: &DensityGrid,
    cam: &CameraParams,
    delta: f64,
) -> Result<Vec2> {
    let cell_area = grid.cell_area();
    let mut num = Vec2::ZERO;
    let mut den = 0.0;
    for (i, j) in grid.support() {
        let center = grid.cell_center(i, j);
        let w = multi_area_per_pixel(positions, center, cam, delta) * grid.weight(i, j) * cell_area;
        num += center * w;
        den += w;
    }
    if den <= 0.0 {
        return Err(CoreError::NoFire);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CameraSection;
    use crate::fire::{rasterize_density, FireFront};
    use crate::rng::SeedTree;
    use rand::Rng;

    fn cam() -> CameraParams {
        CameraParams::from_config(&CameraSection::default())
    }

    const DELTA: f64 = 1e-5;

    #[test]
    fn area_per_pixel_at_nadir_matches_oracle() {
        let f = area_per_pixel(Vec3::new(50.0, 50.0, 100.0), Vec2::new(50.0, 50.0), &cam());
        assert!((f - 8.1e-3).abs() < 1e-15, "f = {f}");
    }

    #[test]
    fn area_per_pixel_outside_fov_is_infinite() {
        let f = area_per_pixel(Vec3::new(50.0, 50.0, 100.0), Vec2::new(200.0, 50.0), &cam());
        assert!(f.is_infinite());
    }

    #[test]
    fn area_per_pixel_grows_with_altitude() {
        let v = Vec2::new(50.0, 50.0);
        let low = area_per_pixel(Vec3::new(50.0, 50.0, 100.0), v, &cam());
        let high = area_per_pixel(Vec3::new(50.0, 50.0, 150.0), v, &cam());
        assert!(high > low);
    }

    #[test]
    fn pixel_count_matches_oracle_and_ignores_altitude() {
        // frozen from 4 tan(17.5°) tan(13.125°) / 1e-6
        let i = pixel_count(&cam());
        assert!((i - 294_069.465_615_798_4).abs() / i < 1e-12, "I = {i}");
        let b = image_bits(&cam());
        assert!((b - 2_823_066.869_911_665).abs() / b < 1e-12, "B = {b}");
    }

    #[test]
    fn multi_area_per_pixel_handles_empty_and_single() {
        let v = Vec2::new(50.0, 50.0);
        assert!((multi_area_per_pixel(&[], v, &cam(), DELTA) - 1e5).abs() < 1e-6);
        let one = multi_area_per_pixel(&[Vec3::new(50.0, 50.0, 100.0)], v, &cam(), DELTA);
        assert!((one - 0.008099999343900053).abs() < 1e-15, "one = {one}");
    }

    #[test]
    fn two_identical_cameras_halve_the_area() {
        let v = Vec2::new(50.0, 50.0);
        let q = Vec3::new(50.0, 50.0, 100.0);
        let single = area_per_pixel(q, v, &cam());
        let joint = multi_area_per_pixel(&[q, q], v, &cam(), DELTA);
        assert!((joint - single / 2.0).abs() < 1e-6);
        assert!(joint <= single);
        assert!(joint <= 1.0 / DELTA);
    }

    fn ring_grid() -> DensityGrid {
        let front = FireFront {
            points: vec![
                Vec2::new(130.0, 130.0),
                Vec2::new(170.0, 130.0),
                Vec2::new(170.0, 170.0),
                Vec2::new(130.0, 170.0),
            ],
            ignition: Vec2::new(150.0, 150.0),
            slot: 0,
        };
        rasterize_density(&front, 300.0, 3.0)
    }

    #[test]
    fn zero_density_cost_is_zero() {
        let grid = DensityGrid::empty(300.0, 3.0, 0);
        assert_eq!(tracking_cost(&[Vec3::new(150.0, 150.0, 100.0)], &grid, &cam(), DELTA), 0.0);
    }

    #[test]
    fn full_coverage_cost_matches_closed_form() {
        let grid = ring_grid();
        // h=100 FoV spans ±31.5 x ±23.3 m... raise altitude so one camera
        // covers the whole 40 m ring
        let q = Vec3::new(150.0, 150.0, 140.0);
        let rect = FovRect::new(q, &cam());
        for (i, j) in grid.support() {
            assert!(rect.contains(grid.cell_center(i, j)));
        }
        let f = cam().pixel_area_coeff * (cam().focal_param - 140.0).powi(2);
        let expected = grid.total_weight() * grid.cell_area() * (1.0 / (1.0 / f + DELTA));
        let cost = tracking_cost(&[q], &grid, &cam(), DELTA);
        assert!((cost - expected).abs() / expected < 1e-12, "{cost} vs {expected}");
    }

    #[test]
    fn removing_a_camera_never_decreases_cost() {
        let grid = ring_grid();
        let mut rng = SeedTree::new(5).stream(&[3]);
        for _ in 0..200 {
            let swarm: Vec<Vec3> = (0..3)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(100.0..200.0),
                        rng.gen_range(100.0..200.0),
                        rng.gen_range(100.0..150.0),
                    )
                })
                .collect();
            let full = tracking_cost(&swarm, &grid, &cam(), DELTA);
            let fewer = tracking_cost(&swarm[..2], &grid, &cam(), DELTA);
            assert!(fewer >= full - 1e-9, "cost fell from {fewer} to {full}");
        }
    }

    #[test]
    fn coverage_bounds_and_monotonicity() {
        let grid = ring_grid();
        assert_eq!(coverage(&[], &grid, &cam()).unwrap(), 0.0);
        let all = coverage(&[Vec3::new(150.0, 150.0, 140.0)], &grid, &cam()).unwrap();
        assert_eq!(all, 1.0);
        let mut rng = SeedTree::new(6).stream(&[4]);
        for _ in 0..200 {
            let swarm: Vec<Vec3> = (0..3)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(0.0..300.0),
                        rng.gen_range(0.0..300.0),
                        rng.gen_range(100.0..150.0),
                    )
                })
                .collect();
            let less = coverage(&swarm[..2], &grid, &cam()).unwrap();
            let more = coverage(&swarm, &grid, &cam()).unwrap();
            assert!(more >= less);
        }
    }

    #[test]
    fn coverage_requires_support() {
        let grid = DensityGrid::empty(300.0, 3.0, 0);
        assert!(coverage(&[], &grid, &cam()).is_err());
        assert!(coverage_center_of_mass(&[], &grid, &cam(), DELTA).is_err());
    }

    #[test]
    fn center_of_mass_of_symmetric_ring_is_its_centroid() {
        let grid = ring_grid();
        let com = coverage_center_of_mass(&[], &grid, &cam(), DELTA).unwrap();
        assert!((com.x - 150.0).abs() < 0.5, "com.x = {}", com.x);
        assert!((com.y - 150.0).abs() < 0.5, "com.y = {}", com.y);
        // full uniform coverage keeps the centroid in place
        let com2 = coverage_center_of_mass(&[Vec3::new(150.0, 150.0, 140.0)], &grid, &cam(), DELTA).unwrap();
        assert!((com2.x - 150.0).abs() < 0.5 && (com2.y - 150.0).abs() < 0.5);
    }

    #[test]
    fn covering_the_west_arc_shifts_the_center_east() {
        let grid = ring_grid();
        // camera low over the west edge of the ring
        let west = Vec3::new(130.0, 150.0, 100.0);
        let com = coverage_center_of_mass(&[west], &grid, &cam(), DELTA).unwrap();

        // brute-force oracle: direct cell loop
        let mut num = Vec2::ZERO;
        let mut den = 0.0;
        for (i, j) in grid.support() {
            let c = grid.cell_center(i, j);
            let f = multi_area_per_pixel(&[west], c, &cam(), DELTA);
            let w = f * grid.weight(i, j) * grid.cell_area();
            num += c * w;
            den += w;
        }
        let oracle = num / den;
        assert!((com.x - oracle.x).abs() < 1e-9);
        assert!((com.y - oracle.y).abs() < 1e-9);
        assert!(com.x > 150.0, "center of mass should move away from the covered arc: {}", com.x);
    }

    #[test]
    fn riemann_cost_is_stable_under_grid_refinement() {
        let front = FireFront {
            points: vec![
                Vec2::new(130.0, 130.0),
                Vec2::new(170.0, 130.0),
                Vec2::new(170.0, 170.0),
                Vec2::new(130.0, 170.0),
            ],
            ignition: Vec2::new(150.0, 150.0),
            slot: 0,
        };
        let swarm = [Vec3::new(150.0, 150.0, 140.0)];
        let coarse = rasterize_density(&front, 300.0, 3.0);
        let fine = rasterize_density(&front, 300.0, 1.5);
        // per-unit-length cost: normalize by total weight x cell area
        let c0 = tracking_cost(&swarm, &coarse, &cam(), DELTA) / (coarse.total_weight() * coarse.cell_area());
        let c1 = tracking_cost(&swarm, &fine, &cam(), DELTA) / (fine.total_weight() * fine.cell_area());
        assert!((c0 - c1).abs() / c0 < 0.02, "refinement moved cost {c0} -> {c1}");
    }
}
