//! Pooled-reception SINR for the cell-free uplink.
//!
//! Two routes are provided: the exact per-realization MMSE SINR (Hermitian
//! positive-definite solve, no explicit inverse) and its deterministic
//! equivalent driven only by large-scale statistics, computed through the
//! standard fixed point. The general resolvent-trace limit is exposed
//! separately so the mapping onto the SINR specialization can be tested in
//! isolation.

use num_complex::Complex64;

use crate::channel::{ChannelRealization, LinkGrid};
use crate::error::{CoreError, Result};

/// Effective-noise diagonal: per AP, error-variance-weighted transmit power
/// plus thermal noise.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    pub sigma2: f64,
    /// Diagonal entries of the effective-noise covariance, one per AP.
    pub effective: Vec<f64>,
}

impl NoiseModel {
    pub fn build(grid: &LinkGrid, powers: &[f64], sigma2: f64) -> Self {
        let effective = (0..grid.num_aps)
            .map(|l| {
                sigma2
                    + (0..grid.num_uavs)
                        .map(|m| grid.pair(l, m).err_var * powers[m])
                        .sum::<f64>()
            })
            .collect();
        Self { sigma2, effective }
    }
}

/// Solve `A x = b` for Hermitian positive-definite `A` (row-major, n x n)
/// via an in-place Cholesky factorization.
fn cholesky_solve(a: &mut [Complex64], n: usize, b: &mut [Complex64]) -> Result<()> {
    // factorize A = L L^H, L lower-triangular stored in-place
    for j in 0..n {
        let mut diag = a[j * n + j].re;
        for k in 0..j {
            diag -= a[j * n + k].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(CoreError::NonFinite(format!("cholesky pivot {diag} at {j}")));
        }
        let ljj = diag.sqrt();
        a[j * n + j] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut acc = a[i * n + j];
            for k in 0..j {
                acc -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = acc / ljj;
        }
    }
    // forward substitution L y = b
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= a[i * n + k] * b[k];
        }
        b[i] = acc / a[i * n + i].re;
    }
    // back substitution L^H x = y
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in (i + 1)..n {
            acc -= a[k * n + i].conj() * b[k];
        }
        b[i] = acc / a[i * n + i].re;
    }
    Ok(())
}

/// Exact MMSE SINR of UAV `m` for one channel realization.
pub fn mmse_sinr_exact(
    realization: &ChannelRealization,
    powers: &[f64],
    noise: &NoiseModel,
    m: usize,
) -> Result<f64> {
    let l_dim = realization.num_aps;
    let m_dim = realization.num_uavs;
    if powers.len() != m_dim || noise.effective.len() != l_dim {
        return Err(CoreError::ShapeMismatch(format!(
            "powers {} / noise {} vs {}x{}",
            powers.len(),
            noise.effective.len(),
            l_dim,
            m_dim
        )));
    }
    if realization.estimate.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
        return Err(CoreError::NonFinite("channel estimate".into()));
    }
    // A = sum_{i != m} p_i ghat_i ghat_i^H + diag(effective noise)
    let mut a = vec![Complex64::new(0.0, 0.0); l_dim * l_dim];
    for (l, &d) in noise.effective.iter().enumerate() {
        a[l * l_dim + l] = Complex64::new(d, 0.0);
    }
    for i in 0..m_dim {
        if i == m || powers[i] == 0.0 {
            continue;
        }
        let col = realization.estimate_column(i);
        for r in 0..l_dim {
            for c in 0..=r {
                a[r * l_dim + c] += col[r] * col[c].conj() * powers[i];
            }
        }
    }
    // mirror the lower triangle (factorization reads the lower part, but
    // keep A fully formed for clarity)
    for r in 0..l_dim {
        for c in (r + 1)..l_dim {
            a[r * l_dim + c] = a[c * l_dim + r].conj();
        }
    }
    let g_m = realization.estimate_column(m);
    let mut x = g_m.clone();
    cholesky_solve(&mut a, l_dim, &mut x)?;
    let quad: Complex64 = g_m.iter().zip(&x).map(|(g, xi)| g.conj() * xi).sum();
    Ok(quad.re * powers[m])
}

/// Fixed-point bookkeeping for the deterministic equivalents.
#[derive(Clone, Debug)]
pub struct FixedPointState {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn iterate_fixed_point(
    mut current: Vec<f64>,
    tol: f64,
    max_iterations: usize,
    mut step: impl FnMut(&[f64], &mut [f64]),
) -> Result<FixedPointState> {
    let mut next = vec![0.0; current.len()];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        step(&current, &mut next);
        residual = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut current, &mut next);
        if residual < tol {
            return Ok(FixedPointState { coefficients: current, iterations: it, residual });
        }
    }
    Err(CoreError::ConvergenceFailure { residual, iterations: max_iterations })
}

/// Deterministic-equivalent SINR for every UAV, plus the converged fixed
/// point. `powers` are the uplink transmit powers; matrices are diagonal so
/// traces reduce to sums over APs.
pub fn deterministic_sinr(
    grid: &LinkGrid,
    powers: &[f64],
    sigma2: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, FixedPointState)> {
    let m_dim = grid.num_uavs;
    let l_dim = grid.num_aps;
    if powers.len() != m_dim {
        return Err(CoreError::ShapeMismatch(format!("{} powers for {m_dim} UAVs", powers.len())));
    }
    let noise = NoiseModel::build(grid, powers, sigma2);
    let fp = iterate_fixed_point(vec![l_dim as f64; m_dim], tol, max_iterations, |e, out| {
        for j in 0..m_dim {
            let mut acc = 0.0;
            for l in 0..l_dim {
                let mut den = noise.effective[l];
                for i in 0..m_dim {
                    if i != j {
                        den += grid.pair(l, i).est_var * powers[i] / (1.0 + e[i]);
                    }
                }
                acc += grid.pair(l, j).est_var / den;
            }
            out[j] = powers[j] * acc;
        }
    })?;
    let e = &fp.coefficients;
    let sinr = (0..m_dim)
        .map(|m| {
            (0..l_dim)
                .map(|l| {
                    let mut den = noise.effective[l];
                    for i in 0..m_dim {
                        if i != m {
                            den += grid.pair(l, i).est_var * powers[i] / (1.0 + e[i]);
                        }
                    }
                    grid.pair(l, m).est_var * powers[m] / den
                })
                .sum()
        })
        .collect();
    Ok((sinr, fp))
}

/// Pilot-overhead-discounted spectral efficiency (bits/s/Hz).
pub fn spectral_efficiency(sinr: f64, pilot_length: f64, coherence_block: f64) -> f64 {
    (1.0 - pilot_length / coherence_block) * (1.0 + sinr).log2()
}

/// General deterministic equivalent of `(1/M) tr[D (H H^* + S + zI)^{-1}]`
/// for diagonal `D`, `S` and per-user covariances `R_k / M`, via the
/// self-consistent coefficients `e_k` started at `M`.
///
/// Used to cross-check the SINR specialization: with `D = Γ_m p_m`,
/// `R_j = L Γ_j p_j` and `S + zI = Σ / L` it reproduces the single-user SINR
/// exactly and the multi-user one up to the self-exclusion convention.
pub fn rmt_resolvent_trace(
    d_diag: &[f64],
    s_diag: &[f64],
    r_diags: &[Vec<f64>],
    z: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<(f64, FixedPointState)> {
    let m_dim = d_diag.len();
    if z <= 0.0 {
        return Err(CoreError::InvalidConfig("z must be positive".into()));
    }
    if s_diag.len() != m_dim || r_diags.iter().any(|r| r.len() != m_dim) {
        return Err(CoreError::ShapeMismatch("diagonal lengths differ".into()));
    }
    let k_users = r_diags.len();
    let scale = 1.0 / m_dim as f64;
    let fp = if k_users == 0 {
        FixedPointState { coefficients: Vec::new(), iterations: 0, residual: 0.0 }
    } else {
        iterate_fixed_point(vec![m_dim as f64; k_users], tol, max_iterations, |e, out| {
            for (k, r_k) in r_diags.iter().enumerate() {
                let mut acc = 0.0;
                for i in 0..m_dim {
                    let mut den = s_diag[i] + z;
                    for (j, r_j) in r_diags.iter().enumerate() {
                        den += scale * r_j[i] / (1.0 + e[j]);
                    }
                    acc += r_k[i] / den;
                }
                out[k] = scale * acc;
            }
        })?
    };
    let e = &fp.coefficients;
    let mut trace = 0.0;
    for i in 0..m_dim {
        let mut den = s_diag[i] + z;
        for (j, r_j) in r_diags.iter().enumerate() {
            den += scale * r_j[i] / (1.0 + e[j]);
        }
        trace += d_diag[i] / den;
    }
    Ok((scale * trace, fp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_split, ChannelParams, LinkGrid};
    use crate::config::ChannelSection;
    use crate::geom::Vec3;
    use crate::rng::SeedTree;
    use rand::Rng;

    const SIGMA2: f64 = 2.511886431509582e-13; // -96 dBm in watts

    fn random_layout(rng: &mut impl Rng, m: usize, l: usize) -> LinkGrid {
        let params = ChannelParams::from_config(&ChannelSection::default());
        let uavs: Vec<Vec3> = (0..m)
            .map(|_| Vec3::new(rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0), rng.gen_range(100.0..150.0)))
            .collect();
        let aps: Vec<Vec3> = (0..l)
            .map(|_| Vec3::new(rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0), 10.0))
            .collect();
        LinkGrid::build(&uavs, &aps, &params).unwrap()
    }

    #[test]
    fn scalar_case_reduces_to_closed_form() {
        let mut rng = SeedTree::new(3).stream(&[0]);
        let grid = random_layout(&mut rng, 1, 1);
        let noise = NoiseModel::build(&grid, &[0.1], SIGMA2);
        let real = draw_split(&grid, &mut rng);
        let sinr = mmse_sinr_exact(&real, &[0.1], &noise, 0).unwrap();
        let g = real.estimate[0].norm_sqr();
        let expected = g * 0.1 / (grid.pair(0, 0).err_var * 0.1 + SIGMA2);
        assert!((sinr - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn zero_power_means_zero_sinr() {
        let mut rng = SeedTree::new(4).stream(&[0]);
        let grid = random_layout(&mut rng, 2, 3);
        let powers = [0.0, 0.1];
        let noise = NoiseModel::build(&grid, &powers, SIGMA2);
        let real = draw_split(&grid, &mut rng);
        assert_eq!(mmse_sinr_exact(&real, &powers, &noise, 0).unwrap(), 0.0);
    }

    /// Brute-force oracle: explicit Gauss-Jordan inverse of the interference
    /// covariance, then the quadratic form.
    fn sinr_by_explicit_inverse(real: &ChannelRealization, powers: &[f64], noise: &NoiseModel, m: usize) -> f64 {
        let n = real.num_aps;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for l in 0..n {
            a[l * n + l] = Complex64::new(noise.effective[l], 0.0);
        }
        for i in 0..real.num_uavs {
            if i == m {
                continue;
            }
            let col = real.estimate_column(i);
            for r in 0..n {
                for c in 0..n {
                    a[r * n + c] += col[r] * col[c].conj() * powers[i];
                }
            }
        }
        // Gauss-Jordan inverse
        let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            inv[i * n + i] = Complex64::new(1.0, 0.0);
        }
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if a[r * n + col].norm() > a[pivot * n + col].norm() {
                    pivot = r;
                }
            }
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
                inv.swap(col * n + c, pivot * n + c);
            }
            let p = a[col * n + col];
            for c in 0..n {
                a[col * n + c] /= p;
                inv[col * n + c] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r * n + col];
                    for c in 0..n {
                        let ac = a[col * n + c];
                        let ic = inv[col * n + c];
                        a[r * n + c] -= f * ac;
                        inv[r * n + c] -= f * ic;
                    }
                }
            }
        }
        let g = real.estimate_column(m);
        let mut quad = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                quad += g[r].conj() * inv[r * n + c] * g[c];
            }
        }
        quad.re * powers[m]
    }

    #[test]
    fn spd_solve_matches_explicit_inverse() {
        let mut rng = SeedTree::new(5).stream(&[1]);
        for trial in 0..100 {
            let m = rng.gen_range(1..=4);
            let l = rng.gen_range(1..=8);
            let grid = random_layout(&mut rng, m, l);
            let powers: Vec<f64> = (0..m).map(|_| rng.gen_range(0.001..0.1)).collect();
            let noise = NoiseModel::build(&grid, &powers, SIGMA2);
            let real = draw_split(&grid, &mut rng);
            for u in 0..m {
                let fast = mmse_sinr_exact(&real, &powers, &noise, u).unwrap();
                let slow = sinr_by_explicit_inverse(&real, &powers, &noise, u);
                assert!(
                    (fast - slow).abs() / slow.max(1e-30) < 1e-10,
                    "trial {trial} uav {u}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn single_user_deterministic_sinr_is_closed_form() {
        let mut rng = SeedTree::new(6).stream(&[2]);
        let grid = random_layout(&mut rng, 1, 5);
        let (sinr, fp) = deterministic_sinr(&grid, &[0.1], SIGMA2, 1e-9, 500).unwrap();
        let expected: f64 = (0..5)
            .map(|l| {
                let s = grid.pair(l, 0);
                s.est_var * 0.1 / (s.err_var * 0.1 + SIGMA2)
            })
            .sum();
        assert!((sinr[0] - expected).abs() / expected < 1e-12);
        assert!(fp.residual < 1e-9);
    }

    #[test]
    fn fixed_point_is_insensitive_to_initialization() {
        // run the iteration by hand from e = 1 and compare coefficients
        let mut rng = SeedTree::new(7).stream(&[3]);
        for _ in 0..20 {
            let m = rng.gen_range(2..=8);
            let l = rng.gen_range(2..=32);
            let grid = random_layout(&mut rng, m, l);
            let powers: Vec<f64> = (0..m).map(|_| rng.gen_range(0.001..0.1)).collect();
            let (_, fp_default) = deterministic_sinr(&grid, &powers, SIGMA2, 1e-9, 500).unwrap();
            let noise = NoiseModel::build(&grid, &powers, SIGMA2);
            let fp_ones = iterate_fixed_point(vec![1.0; m], 1e-9, 500, |e, out| {
                for j in 0..m {
                    let mut acc = 0.0;
                    for li in 0..l {
                        let mut den = noise.effective[li];
                        for i in 0..m {
                            if i != j {
                                den += grid.pair(li, i).est_var * powers[i] / (1.0 + e[i]);
                            }
                        }
                        acc += grid.pair(li, j).est_var / den;
                    }
                    out[j] = powers[j] * acc;
                }
            })
            .unwrap();
            for (a, b) in fp_default.coefficients.iter().zip(&fp_ones.coefficients) {
                assert!((a - b).abs() < 1e-8, "init sensitivity: {a} vs {b}");
            }
        }
    }

    #[test]
    fn deterministic_sinr_power_monotonicity() {
        let mut rng = SeedTree::new(8).stream(&[4]);
        let grid = random_layout(&mut rng, 3, 8);
        let base = [0.05, 0.05, 0.05];
        let (s0, _) = deterministic_sinr(&grid, &base, SIGMA2, 1e-9, 500).unwrap();
        let mut up_own = base;
        up_own[0] = 0.06;
        let (s1, _) = deterministic_sinr(&grid, &up_own, SIGMA2, 1e-9, 500).unwrap();
        assert!(s1[0] > s0[0], "own power up should raise own SINR");
        let mut up_other = base;
        up_other[1] = 0.06;
        let (s2, _) = deterministic_sinr(&grid, &up_other, SIGMA2, 1e-9, 500).unwrap();
        assert!(s2[0] <= s0[0] + 1e-12, "peer power up should not raise SINR");
    }

    #[test]
    fn spectral_efficiency_prefactor_and_values() {
        assert_eq!(spectral_efficiency(0.0, 200.0, 6250.0), 0.0);
        let se = spectral_efficiency(3.0, 200.0, 6250.0);
        assert!((se - 0.968 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_trace_with_no_users_is_exact() {
        let d = vec![2.0, 3.0];
        let s = vec![0.5, 1.5];
        let z = 0.25;
        let (trace, fp) = rmt_resolvent_trace(&d, &s, &[], z, 1e-12, 10).unwrap();
        let expected = 0.5 * (2.0 / 0.75 + 3.0 / 1.75);
        assert!((trace - expected).abs() < 1e-15);
        assert_eq!(fp.iterations, 0);
    }

    #[test]
    fn resolvent_trace_matches_single_user_sinr_exactly() {
        let mut rng = SeedTree::new(9).stream(&[5]);
        let grid = random_layout(&mut rng, 1, 6);
        let p = 0.1;
        let l = 6usize;
        let (sinr, _) = deterministic_sinr(&grid, &[p], SIGMA2, 1e-9, 500).unwrap();
        // map: D = Γ p, S + zI = Σ / L, no interfering users
        let noise = NoiseModel::build(&grid, &[p], SIGMA2);
        let d: Vec<f64> = (0..l).map(|li| grid.pair(li, 0).est_var * p).collect();
        let z = SIGMA2 / l as f64;
        let s: Vec<f64> = noise.effective.iter().map(|&e| e / l as f64 - z).collect();
        let (trace, _) = rmt_resolvent_trace(&d, &s, &[], z, 1e-12, 10).unwrap();
        // (1/L) tr[D (Σ/L)^{-1}] = tr[Γ p Σ^{-1}]
        assert!((trace - sinr[0]).abs() / sinr[0] < 1e-12, "{trace} vs {}", sinr[0]);
    }

    #[test]
    fn resolvent_trace_matches_monte_carlo() {
        // diagonal 2x2 instance against a sampled resolvent trace
        let d = vec![1.0, 2.0];
        let s = vec![0.3, 0.6];
        let r1 = vec![1.5, 0.7];
        let r2 = vec![0.4, 1.1];
        let z = 0.5;
        let (det, _) = rmt_resolvent_trace(&d, &s, &[r1.clone(), r2.clone()], z, 1e-12, 1000).unwrap();

        let mut rng = SeedTree::new(10).stream(&[6]);
        let draws = 100_000;
        let mut acc = 0.0;
        let m_dim = 2usize;
        let normal = |rng: &mut rand_chacha::ChaCha12Rng| -> f64 { rng.sample(rand_distr::StandardNormal) };
        for _ in 0..draws {
            // h_k ~ CN(0, R_k / M): build H H^* + S + zI and invert (2x2)
            let mut a = [
                Complex64::new(s[0] + z, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(s[1] + z, 0.0),
            ];
            for r in [&r1, &r2] {
                let s0 = (r[0] / (2.0 * m_dim as f64)).sqrt();
                let s1 = (r[1] / (2.0 * m_dim as f64)).sqrt();
                let h0 = Complex64::new(normal(&mut rng) * s0, normal(&mut rng) * s0);
                let h1 = Complex64::new(normal(&mut rng) * s1, normal(&mut rng) * s1);
                a[0] += h0 * h0.conj();
                a[1] += h0 * h1.conj();
                a[2] += h1 * h0.conj();
                a[3] += h1 * h1.conj();
            }
            let det2 = a[0] * a[3] - a[1] * a[2];
            let inv00 = a[3] / det2;
            let inv11 = a[0] / det2;
            acc += 0.5 * (d[0] * inv00.re + d[1] * inv11.re);
        }
        let mc = acc / draws as f64;
        // the deterministic equivalent is a large-dimension limit; at 2x2 it
        // sits within a few percent of the sampled mean
        assert!((mc - det).abs() < 0.05 * det.max(1.0), "MC {mc} vs deterministic {det}");
    }
}
