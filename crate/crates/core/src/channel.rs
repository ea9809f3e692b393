//! Clustered (extended Saleh-Valenzuela) frequency-selective channel with
//! uniform square planar arrays at both ends.
//!
//! Each cluster `i` contributes `N_ray` rays whose angles are Laplacian
//! perturbations of a cluster mean. The cluster index doubles as the delay
//! tap, so subcarrier `m` (zero-based) sees the cluster rotated by
//! `exp(-j·2π·i·m/M)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexTensor3, ComplexVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_subcarriers: usize,
    pub n_clusters: usize,
    pub n_rays: usize,
    /// Standard deviation of every ray angle around its cluster mean, in degrees.
    pub angular_spread_deg: f64,
    /// Element spacing in wavelengths (d/λ).
    pub spacing: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            n_tx: 16,
            n_rx: 16,
            n_subcarriers: 64,
            n_clusters: 5,
            n_rays: 10,
            angular_spread_deg: 10.0,
            spacing: 0.5,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_tx", self.n_tx), ("n_rx", self.n_rx)] {
            if square_side(n).is_none() {
                return Err(Error::config(format!(
                    "{name} = {n} is not a positive perfect square"
                )));
            }
        }
        for (name, n) in [
            ("n_subcarriers", self.n_subcarriers),
            ("n_clusters", self.n_clusters),
            ("n_rays", self.n_rays),
        ] {
            if n == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if !(self.angular_spread_deg >= 0.0 && self.angular_spread_deg.is_finite()) {
            return Err(Error::config(format!(
                "angular spread must be finite and non-negative, got {}",
                self.angular_spread_deg
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::config(format!(
                "element spacing must be positive, got {}",
                self.spacing
            )));
        }
        Ok(())
    }

    /// Laplacian scale `b` giving a standard deviation of `angular_spread_deg`.
    pub fn laplacian_scale(&self) -> f64 {
        self.angular_spread_deg.to_radians() / std::f64::consts::SQRT_2
    }
}

/// Side length of a square array with `n` elements.
pub fn square_side(n: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let side = (n as f64).sqrt().round() as usize;
    (side * side == n).then_some(side)
}

/// One propagation path: complex gain plus departure and arrival angles (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub gain: Complex64,
    pub aod_azimuth: f64,
    pub aod_elevation: f64,
    pub aoa_azimuth: f64,
    pub aoa_elevation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Variance of the complex gains of this cluster's rays.
    pub power: f64,
    pub rays: Vec<Ray>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub clusters: Vec<Cluster>,
}

/// USPA steering vector for `n` elements on a `√n × √n` grid.
///
/// Element `(h, v)` sits at index `h + √n·v`.
pub fn uspa_response(phi: f64, theta: f64, n: usize, spacing: f64) -> Result<ComplexVector> {
    let side = square_side(n)
        .ok_or_else(|| Error::arg(format!("USPA needs a perfect-square element count, got {n}")))?;
    let k = 2.0 * PI * spacing;
    let h_step = phi.sin() * theta.sin();
    let v_step = theta.cos();
    let amp = 1.0 / (n as f64).sqrt();
    Ok(ComplexVector::from_fn(n, |idx, _| {
        let h = (idx % side) as f64;
        let v = (idx / side) as f64;
        Complex64::from_polar(amp, k * (h * h_step + v * v_step))
    }))
}

fn laplacian<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-PI..PI)
}

/// Draws cluster means, per-ray Laplacian deviations and complex gains.
///
/// Every cluster has unit power so that `E[‖H_m‖²_F] = N_r·N_t`.
pub fn sample_paths<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> PathSet {
    let scale = params.laplacian_scale();
    let clusters = (0..params.n_clusters)
        .map(|_| {
            let power = 1.0;
            let gain_std = (power / 2.0_f64).sqrt();
            let aod_az = uniform_angle(rng);
            let aod_el = uniform_angle(rng);
            let aoa_az = uniform_angle(rng);
            let aoa_el = uniform_angle(rng);
            let rays = (0..params.n_rays)
                .map(|_| {
                    let aod_azimuth = aod_az + laplacian(rng, scale);
                    let aod_elevation = aod_el + laplacian(rng, scale);
                    let aoa_azimuth = aoa_az + laplacian(rng, scale);
                    let aoa_elevation = aoa_el + laplacian(rng, scale);
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Ray {
                        gain: Complex64::new(re, im) * gain_std,
                        aod_azimuth,
                        aod_elevation,
                        aoa_azimuth,
                        aoa_elevation,
                    }
                })
                .collect();
            Cluster { power, rays }
        })
        .collect();
    PathSet { clusters }
}

/// Assembles the `N_r × N_t × M` channel tensor from a path set.
pub fn channel_from_paths(params: &ChannelParams, paths: &PathSet) -> Result<ComplexTensor3> {
    params.validate()?;
    let (nr, nt, m) = (params.n_rx, params.n_tx, params.n_subcarriers);
    let n_paths: usize = paths.clusters.iter().map(|c| c.rays.len()).sum();
    if n_paths == 0 {
        return Ok(ComplexTensor3::zeros(nr, nt, m));
    }
    let prefactor = ((nr * nt) as f64 / n_paths as f64).sqrt();

    // Per-cluster narrowband response, shared by every subcarrier up to the tap phase.
    let mut taps = Vec::with_capacity(paths.clusters.len());
    for cluster in &paths.clusters {
        let mut g = ComplexMatrix::zeros(nr, nt);
        for ray in &cluster.rays {
            let ar = uspa_response(ray.aoa_azimuth, ray.aoa_elevation, nr, params.spacing)?;
            let at = uspa_response(ray.aod_azimuth, ray.aod_elevation, nt, params.spacing)?;
            g.ger(ray.gain, &ar, &at.conjugate(), Complex64::new(1.0, 0.0));
        }
        g *= Complex64::new(prefactor, 0.0);
        taps.push(g);
    }

    let mut h = ComplexTensor3::zeros(nr, nt, m);
    for sc in 0..m {
        let mut slice = h.slice_mut(sc);
        for (i, g) in taps.iter().enumerate() {
            // Reduce i·m modulo M first so the phase argument stays small.
            let turns = ((i * sc) % m) as f64 / m as f64;
            let rot = Complex64::from_polar(1.0, -2.0 * PI * turns);
            slice.zip_apply(g, |acc, x| *acc += x * rot);
        }
    }
    Ok(h)
}

pub fn generate_channel<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Result<ComplexTensor3> {
    params.validate()?;
    let paths = sample_paths(params, rng);
    channel_from_paths(params, &paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{svd, FrobeniusNormSq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn broadside_response_is_flat() {
        let a = uspa_response(0.0, PI / 2.0, 4, 0.5).unwrap();
        for z in a.iter() {
            assert!((z - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn endfire_elevation_alternates_with_v() {
        let a = uspa_response(0.0, 0.0, 4, 0.5).unwrap();
        // index = h + 2v
        let expect = [0.5, 0.5, -0.5, -0.5];
        for (z, e) in a.iter().zip(expect) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-15, "{z} vs {e}");
        }
    }

    #[test]
    fn steering_vectors_have_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let phi = rng.random_range(-10.0..10.0);
            let theta = rng.random_range(-10.0..10.0);
            for n in [1, 4, 16, 64] {
                let a = uspa_response(phi, theta, n, 0.5).unwrap();
                assert!((a.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_square_array_is_rejected() {
        assert!(uspa_response(0.1, 0.2, 8, 0.5).is_err());
        let p = ChannelParams {
            n_tx: 12,
            ..ChannelParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn zero_spread_collapses_rays_onto_cluster_mean() {
        let p = ChannelParams {
            angular_spread_deg: 0.0,
            ..ChannelParams::default()
        };
        let paths = sample_paths(&p, &mut ChaCha8Rng::seed_from_u64(1));
        for c in &paths.clusters {
            let first = c.rays[0];
            for r in &c.rays {
                assert_eq!(r.aod_azimuth, first.aod_azimuth);
                assert_eq!(r.aod_elevation, first.aod_elevation);
                assert_eq!(r.aoa_azimuth, first.aoa_azimuth);
                assert_eq!(r.aoa_elevation, first.aoa_elevation);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = ChannelParams::default();
        let a = sample_paths(&p, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_paths(&p, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
        let c = sample_paths(&p, &mut ChaCha8Rng::seed_from_u64(43));
        assert_ne!(a, c);
    }

    #[test]
    fn laplacian_deviation_std_matches_spread() {
        let p = ChannelParams {
            angular_spread_deg: 10.0,
            ..ChannelParams::default()
        };
        let b = p.laplacian_scale();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| laplacian(&mut rng, b)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std_deg = var.sqrt().to_degrees();
        assert!((std_deg - 10.0).abs() <= 0.2, "sample std {std_deg}°");
    }

    #[test]
    fn single_path_channel_is_rank_one_and_flat_across_subcarriers() {
        let p = ChannelParams {
            n_clusters: 1,
            n_rays: 1,
            n_subcarriers: 4,
            ..ChannelParams::default()
        };
        let h = generate_channel(&p, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for k in 1..4 {
            assert_eq!(h.slice(k), h.slice(0));
        }
        let s = svd(&h.slice(0).into_owned()).unwrap().s;
        assert!(s[1] <= 1e-10 * s[0]);
    }

    #[test]
    fn single_path_energy_closed_form() {
        let p = ChannelParams {
            n_clusters: 1,
            n_rays: 1,
            n_subcarriers: 2,
            ..ChannelParams::default()
        };
        let paths = PathSet {
            clusters: vec![Cluster {
                power: 1.0,
                rays: vec![Ray {
                    gain: Complex64::new(1.0, 0.0),
                    aod_azimuth: 0.3,
                    aod_elevation: 1.1,
                    aoa_azimuth: -0.7,
                    aoa_elevation: 2.0,
                }],
            }],
        };
        let h = channel_from_paths(&p, &paths).unwrap();
        // ‖√(NrNt)·α·a_r a_t^H‖² = NrNt·|α|² for unit-norm steering vectors.
        let want = (p.n_rx * p.n_tx) as f64;
        for sl in h.slices() {
            assert!((sl.frobenius_norm_sq() - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn slice_rank_bounded_by_path_count() {
        let p = ChannelParams {
            n_clusters: 2,
            n_rays: 3,
            n_subcarriers: 3,
            ..ChannelParams::default()
        };
        let h = generate_channel(&p, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert!(h.is_finite());
        for sl in h.slices() {
            let s = svd(&sl.into_owned()).unwrap().s;
            assert!(s[6] <= 1e-9 * s[0]);
        }
    }

    #[test]
    fn mean_energy_matches_target() {
        let p = ChannelParams {
            n_subcarriers: 4,
            ..ChannelParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 1000;
        let mut total = 0.0;
        for _ in 0..trials {
            let h = generate_channel(&p, &mut rng).unwrap();
            total += h.slice(0).frobenius_norm_sq();
        }
        let mean = total / trials as f64;
        let target = (p.n_rx * p.n_tx) as f64;
        assert!((mean / target - 1.0).abs() <= 0.05, "mean {mean} vs {target}");
    }
}
