//! Clustered (Saleh-Valenzuela) narrowband channel synthesis.
//!
//! `H = γ Σ_ij α_ij g_R g_T a_R(Θ_R) a_T(Θ_T)^H`, rescaled so that
//! `‖H‖_F² = N_R·N_T`. Cluster centres are uniform over the configured
//! azimuth/elevation boxes; ray angles scatter around them with a Gaussian
//! of standard deviation `angle_spread_deg`.

mod dump;

pub use dump::{read_channel, write_channel, ChannelDumpMeta};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, ComplexMatrix};
use crate::rng::{complex_normal, stream};

/// How an array is laid out, in units of the carrier wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySpec {
    /// Half-wavelength uniform linear array along x.
    Ula { count: usize },
    /// Half-wavelength uniform planar array in the x-y plane, x fastest.
    Upa { nx: usize, ny: usize },
    Custom { positions: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct ArrayGeometry {
    spec: GeometrySpec,
    positions: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    pub fn ula(count: usize) -> Self {
        Self::try_from(GeometrySpec::Ula { count }).expect("ula is always valid for count > 0")
    }

    pub fn upa(nx: usize, ny: usize) -> Self {
        Self::try_from(GeometrySpec::Upa { nx, ny }).expect("upa is always valid for nx, ny > 0")
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }
}

impl TryFrom<GeometrySpec> for ArrayGeometry {
    type Error = Error;

    fn try_from(spec: GeometrySpec) -> Result<Self> {
        let positions: Vec<[f64; 3]> = match &spec {
            GeometrySpec::Ula { count } => (0..*count).map(|n| [n as f64 * 0.5, 0.0, 0.0]).collect(),
            GeometrySpec::Upa { nx, ny } => (0..*ny)
                .flat_map(|y| (0..*nx).map(move |x| [x as f64 * 0.5, y as f64 * 0.5, 0.0]))
                .collect(),
            GeometrySpec::Custom { positions } => positions.clone(),
        };
        if positions.is_empty() {
            return Err(Error::InvalidParams("array geometry has no elements".into()));
        }
        Ok(Self { spec, positions })
    }
}

impl From<ArrayGeometry> for GeometrySpec {
    fn from(g: ArrayGeometry) -> Self {
        g.spec
    }
}

/// An azimuth/elevation direction in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

/// Array response `[a]_n = exp(-j 2π p_nᵀ r(Θ))` with
/// `r(Θ) = [sinφ cosθ, sinφ sinθ, cosθ]ᵀ`.
pub fn steering_vector(geometry: &ArrayGeometry, azimuth_deg: f64, elevation_deg: f64) -> Vec<Complex64> {
    let (phi, theta) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    let r = [phi.sin() * theta.cos(), phi.sin() * theta.sin(), theta.cos()];
    geometry
        .positions()
        .iter()
        .map(|p| {
            let proj = p[0] * r[0] + p[1] * r[1] + p[2] * r[2];
            Complex64::from_polar(1.0, -2.0 * PI * proj)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub n_clusters: usize,
    pub n_rays: usize,
    pub angle_spread_deg: f64,
    pub az_range_deg: [f64; 2],
    pub el_range_deg: [f64; 2],
    pub tx_geometry: ArrayGeometry,
    pub rx_geometry: ArrayGeometry,
    /// Constant element gains g_T and g_R.
    pub tx_gain: f64,
    pub rx_gain: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            n_clusters: 4,
            n_rays: 5,
            angle_spread_deg: 5.0,
            az_range_deg: [-60.0, 60.0],
            el_range_deg: [-20.0, 20.0],
            tx_geometry: ArrayGeometry::ula(16),
            rx_geometry: ArrayGeometry::ula(8),
            tx_gain: 1.0,
            rx_gain: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn with_arrays(n_t: usize, n_r: usize) -> Self {
        Self {
            tx_geometry: ArrayGeometry::ula(n_t),
            rx_geometry: ArrayGeometry::ula(n_r),
            ..Self::default()
        }
    }

    pub fn n_t(&self) -> usize {
        self.tx_geometry.count()
    }

    pub fn n_r(&self) -> usize {
        self.rx_geometry.count()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.n_clusters == 0 || self.n_rays == 0 {
            return bad("n_clusters and n_rays must be positive");
        }
        if !(self.angle_spread_deg >= 0.0) {
            return bad("angle_spread_deg must be non-negative");
        }
        for (name, r) in [("az_range_deg", self.az_range_deg), ("el_range_deg", self.el_range_deg)] {
            if !(r[0] <= r[1]) || !r[0].is_finite() || !r[1].is_finite() {
                return Err(Error::InvalidParams(format!("{name}: min {} > max {}", r[0], r[1])));
            }
        }
        Ok(())
    }
}

/// One propagation path: angle of arrival, angle of departure and complex gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub cluster: usize,
    pub arrival: Direction,
    pub departure: Direction,
    pub gain: Complex64,
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `N_R × N_T`.
    pub h: ComplexMatrix,
    pub params: ChannelParams,
    pub seed: u64,
    pub paths: Vec<PathParams>,
}

impl ChannelRealization {
    /// `(Θ_R, Θ_T)` per path.
    pub fn path_angles(&self) -> Vec<(Direction, Direction)> {
        self.paths.iter().map(|p| (p.arrival, p.departure)).collect()
    }

    pub fn gains(&self) -> Vec<Complex64> {
        self.paths.iter().map(|p| p.gain).collect()
    }
}

/// Builds `H` from an explicit path list and normalizes it to `‖H‖_F² = N_R·N_T`.
pub fn synthesize_channel(params: &ChannelParams, paths: &[PathParams]) -> Result<ComplexMatrix> {
    let (n_r, n_t) = (params.n_r(), params.n_t());
    let gamma = ((n_t * n_r) as f64 / paths.len().max(1) as f64).sqrt();
    let mut h = ComplexMatrix::zeros(n_r, n_t);
    for p in paths {
        let a_r = steering_vector(&params.rx_geometry, p.arrival.azimuth_deg, p.arrival.elevation_deg);
        let a_t = steering_vector(&params.tx_geometry, p.departure.azimuth_deg, p.departure.elevation_deg);
        let coeff = p.gain * (gamma * params.rx_gain * params.tx_gain);
        for j in 0..n_t {
            let t = coeff * a_t[j].conj();
            for i in 0..n_r {
                h[(i, j)] += a_r[i] * t;
            }
        }
    }
    let energy = frobenius_sq(&h);
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::InvalidParams("channel has zero energy".into()));
    }
    let scale = ((n_r * n_t) as f64 / energy).sqrt();
    Ok(h.scale(scale))
}

/// Draws a clustered channel; deterministic in `(params, seed)`.
pub fn generate_channel(params: &ChannelParams, seed: u64) -> Result<ChannelRealization> {
    params.validate()?;
    let mut rng = stream(seed, &[]);
    let spread = Normal::new(0.0, params.angle_spread_deg).expect("spread validated non-negative");
    let uniform = |r: [f64; 2], rng: &mut crate::rng::SimRng| {
        if r[0] == r[1] {
            r[0]
        } else {
            rng.random_range(r[0]..r[1])
        }
    };
    let mut paths = Vec::with_capacity(params.n_clusters * params.n_rays);
    for cluster in 0..params.n_clusters {
        let rx_center = Direction {
            azimuth_deg: uniform(params.az_range_deg, &mut rng),
            elevation_deg: uniform(params.el_range_deg, &mut rng),
        };
        let tx_center = Direction {
            azimuth_deg: uniform(params.az_range_deg, &mut rng),
            elevation_deg: uniform(params.el_range_deg, &mut rng),
        };
        for _ in 0..params.n_rays {
            let jitter = |c: Direction, rng: &mut crate::rng::SimRng| Direction {
                azimuth_deg: c.azimuth_deg + spread.sample(rng),
                elevation_deg: c.elevation_deg + spread.sample(rng),
            };
            let arrival = jitter(rx_center, &mut rng);
            let departure = jitter(tx_center, &mut rng);
            let gain = complex_normal(&mut rng);
            paths.push(PathParams { cluster, arrival, departure, gain });
        }
    }
    let h = synthesize_channel(params, &paths)?;
    Ok(ChannelRealization { h, params: params.clone(), seed, paths })
}

/// Adds per-element noise `n_ij ~ CN(0, |H_ij|² 10^(-snr_db/10))`.
pub fn corrupt_channel(h: &ComplexMatrix, snr_db: f64, seed: u64) -> ComplexMatrix {
    let ratio = 10f64.powf(-snr_db / 10.0);
    let mut rng = stream(seed, &[]);
    // Column-major iteration fixes the draw order.
    ComplexMatrix::from_iterator(
        h.nrows(),
        h.ncols(),
        h.iter().map(|&z| {
            let noise = complex_normal(&mut rng);
            z + noise * (z.norm_sqr() * ratio).sqrt()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;

    #[test]
    fn broadside_ula_is_all_ones() {
        let a = steering_vector(&ArrayGeometry::ula(4), 0.0, 90.0);
        for z in a {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn steering_matches_scalar_formula() {
        let g = ArrayGeometry::ula(8);
        // At zero elevation the x-component of r(Θ) is sin φ.
        let a = steering_vector(&g, 30.0, 0.0);
        for (n, z) in a.iter().enumerate() {
            let expect = Complex64::from_polar(1.0, -PI * n as f64 * 30f64.to_radians().sin());
            assert!((z - expect).norm() < 1e-12);
        }
        // At θ = 90° the x-component vanishes.
        let a = steering_vector(&g, 30.0, 90.0);
        for z in a {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_entries_have_unit_modulus_on_planar_array() {
        let g = ArrayGeometry::upa(4, 3);
        assert_eq!(g.count(), 12);
        for (az, el) in [(13.0, -7.0), (-59.0, 20.0), (0.0, 0.0)] {
            for z in steering_vector(&g, az, el) {
                assert!((z.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_path_channel_is_rank_one() {
        let params = ChannelParams { n_clusters: 1, n_rays: 1, ..ChannelParams::default() };
        let path = PathParams {
            cluster: 0,
            arrival: Direction { azimuth_deg: 12.0, elevation_deg: 3.0 },
            departure: Direction { azimuth_deg: -25.0, elevation_deg: -4.0 },
            gain: Complex64::new(1.0, 0.0),
        };
        let h = synthesize_channel(&params, &[path]).unwrap();
        let s = svd(&h).singular_values;
        assert!(s[1] < 1e-10 * s[0]);
        let a_r = steering_vector(&params.rx_geometry, 12.0, 3.0);
        let a_t = steering_vector(&params.tx_geometry, -25.0, -4.0);
        // H = c · a_R a_T^H with c = sqrt(N_R N_T) / (‖a_R‖ ‖a_T‖) = 1.
        for i in 0..8 {
            for j in 0..16 {
                assert!((h[(i, j)] - a_r[i] * a_t[j].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn default_channel_energy_and_determinism() {
        let p = ChannelParams::default();
        let a = generate_channel(&p, 42).unwrap();
        assert!((frobenius_sq(&a.h) - 128.0).abs() < 1e-8);
        let b = generate_channel(&p, 42).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.paths.len(), 20);
        let c = generate_channel(&p, 43).unwrap();
        assert_ne!(a.h, c.h);
    }

    #[test]
    fn inverted_ranges_are_rejected() {
        let p = ChannelParams { az_range_deg: [10.0, -10.0], ..ChannelParams::default() };
        assert!(matches!(generate_channel(&p, 1), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn rank_is_bounded_by_path_count() {
        let p = ChannelParams { n_clusters: 1, n_rays: 3, ..ChannelParams::default() };
        let h = generate_channel(&p, 9).unwrap().h;
        let s = svd(&h).singular_values;
        assert!(s[3..].iter().all(|&x| x < 1e-8 * s[0]));
    }

    #[test]
    fn high_snr_corruption_is_negligible() {
        let h = generate_channel(&ChannelParams::default(), 5).unwrap().h;
        let ht = corrupt_channel(&h, 300.0, 1);
        let max_h = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dev = h.iter().zip(ht.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10 * max_h);
    }

    #[test]
    fn zero_entries_stay_zero() {
        let mut h = ComplexMatrix::from_element(2, 2, Complex64::new(1.0, -1.0));
        h[(1, 0)] = Complex64::new(0.0, 0.0);
        let ht = corrupt_channel(&h, -5.0, 3);
        assert_eq!(ht[(1, 0)], Complex64::new(0.0, 0.0));
        assert_ne!(ht[(0, 0)], h[(0, 0)]);
    }

    #[test]
    fn zero_db_noise_has_unit_relative_variance() {
        let h = ComplexMatrix::from_element(1, 1, Complex64::new(0.3, 0.4));
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|s| (corrupt_channel(&h, 0.0, s)[(0, 0)] - h[(0, 0)]).norm_sqr() / h[(0, 0)].norm_sqr())
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn geometry_round_trips_through_json() {
        let p = ChannelParams::default();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"ula\""));
        let q: ChannelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let partial: ChannelParams = serde_json::from_str(r#"{"n_clusters": 2, "rx_geometry": {"ula": {"count": 4}}}"#).unwrap();
        assert_eq!(partial.n_r(), 4);
        assert_eq!(partial.n_clusters, 2);
    }
}
