//! Geometric multipath channel between a fixed base station and a mobile UE.
//!
//! The channel is a sum over a small set of point scatterers, each
//! contributing one path with a complex gain, departure/arrival steering
//! vectors and a Doppler phase rotation driven by the UE velocity. Scatterer
//! positions are fixed in space for the lifetime of a run; angles and Doppler
//! are recomputed from the current UE position whenever the channel is
//! evaluated. Large-scale attenuation combines a 3GPP urban-macro NLOS
//! pathloss with distance-correlated log-normal shadowing.

use num_complex::Complex64;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Uniform planar array described by its two axis element counts.
///
/// A single-axis array (`n_elements_elevation == 1`) degenerates to a
/// uniform linear array; a 1x1 geometry is a single omnidirectional element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_elements_azimuth: usize,
    pub n_elements_elevation: usize,
    /// Element spacing in wavelengths (d / lambda).
    pub element_spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(n_az: usize, n_el: usize, spacing: f64) -> Result<Self> {
        if n_az == 0 || n_el == 0 {
            return Err(Error::config(format!(
                "array element counts must be positive, got {n_az}x{n_el}"
            )));
        }
        if !(spacing > 0.0) {
            return Err(Error::config(format!(
                "element_spacing_wavelengths must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            n_elements_azimuth: n_az,
            n_elements_elevation: n_el,
            element_spacing_wavelengths: spacing,
        })
    }

    /// Total number of antenna elements.
    pub fn total_elements(&self) -> usize {
        self.n_elements_azimuth * self.n_elements_elevation
    }
}

/// Unit-norm array response for a planar array, as the Kronecker product of
/// an elevation-axis and an azimuth-axis uniform-linear response.
///
/// Angles follow the spherical convention: `azimuth` in [0, 2pi) measured in
/// the horizontal plane, `elevation` in [0, pi] measured from zenith such
/// that pi/2 is the horizon. Element (m, n) of the grid carries the phase
/// `2*pi*(d/lambda)*(m*sin(el)*sin(az) + n*cos(el))`, so a broadside
/// direction (az = 0, el = pi/2) yields the all-equal vector `1/sqrt(N)`.
pub fn steering_vector(
    geometry: &ArrayGeometry,
    azimuth: f64,
    elevation: f64,
) -> Result<Vec<Complex64>> {
    let n_az = geometry.n_elements_azimuth;
    let n_el = geometry.n_elements_elevation;
    if n_az == 0 || n_el == 0 {
        return Err(Error::config("steering vector needs positive element counts"));
    }
    let n_total = n_az * n_el;
    let norm = 1.0 / (n_total as f64).sqrt();
    let d = geometry.element_spacing_wavelengths;
    let psi_az = elevation.sin() * azimuth.sin();
    let psi_el = elevation.cos();
    let mut v = Vec::with_capacity(n_total);
    for n in 0..n_el {
        for m in 0..n_az {
            let phase =
                2.0 * std::f64::consts::PI * d * (m as f64 * psi_az + n as f64 * psi_el);
            v.push(Complex64::from_polar(norm, phase));
        }
    }
    Ok(v)
}

/// One multipath component: a point reflector with a fixed complex gain and
/// a fixed position in space. The gain magnitude is constant over a run;
/// motion of the UE only rotates its phase through the Doppler term.
#[derive(Debug, Clone)]
pub struct Scatterer {
    pub complex_gain: Complex64,
    /// Fixed position in meters, (x, y, height).
    pub position_m: [f64; 3],
}

impl Scatterer {
    /// Doppler frequency in Hz for the current UE position and velocity:
    /// `(v . u) / lambda` where `u` is the unit vector from the UE toward
    /// the scatterer, so motion toward the scatterer gives a positive shift.
    pub fn doppler_hz(&self, ue_position_m: [f64; 3], ue_velocity_mps: [f64; 3], wavelength_m: f64) -> f64 {
        let u = unit3(sub3(self.position_m, ue_position_m));
        dot3(ue_velocity_mps, u) / wavelength_m
    }
}

/// The per-run multipath state: `S` scatterers plus the large-scale
/// attenuation sampled for the current UE position. Scatterers are drawn
/// once per run; pathloss and shadowing are refreshed once per frame.
#[derive(Debug, Clone)]
pub struct ScattererSet {
    pub scatterers: Vec<Scatterer>,
    pub pathloss_db: f64,
    pub shadowing_db: f64,
}

impl ScattererSet {
    /// Combined pathloss + shadowing as a linear power gain (<= 1 in practice).
    pub fn large_scale_linear(&self) -> f64 {
        10f64.powf(-(self.pathloss_db + self.shadowing_db) / 10.0)
    }
}

/// Narrowband MIMO channel snapshot `H_t` (n_rx x n_tx, row-major).
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    entries: Vec<Complex64>,
    n_rx: usize,
    n_tx: usize,
    pub timestamp_symbols: u64,
}

impl ChannelMatrix {
    pub fn from_entries(entries: Vec<Complex64>, n_rx: usize, n_tx: usize, t: u64) -> Self {
        assert_eq!(entries.len(), n_rx * n_tx);
        Self { entries, n_rx, n_tx, timestamp_symbols: t }
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n_tx + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Bilinear form `w^H H f` used for beamforming.
    pub fn bilinear(&self, w: &[Complex64], f: &[Complex64]) -> Complex64 {
        assert_eq!(w.len(), self.n_rx);
        assert_eq!(f.len(), self.n_tx);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..self.n_rx {
            let mut row_acc = Complex64::new(0.0, 0.0);
            for c in 0..self.n_tx {
                row_acc += self.entries[r * self.n_tx + c] * f[c];
            }
            acc += w[r].conj() * row_acc;
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Channel-section configuration. Defaults mirror the simulated scenario:
/// 64-element base station array at 15 m (16x4: the wide azimuth axis pairs
/// with the 16-beam sweep codebook, the short elevation axis keeps the
/// elevation sector inside its mainlobe), single-antenna UE at 1.5 m, 28 GHz
/// carrier, 10 paths within a 120-degree azimuth sector and a 60-degree
/// elevation sector, UMa-NLOS pathloss with 6 dB shadowing.
#[derive(Debug, Clone, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub n_paths: usize,
    pub azimuth_mean_deg: f64,
    /// Full width of the azimuth sector, centered on the mean.
    pub azimuth_spread_deg: f64,
    pub elevation_mean_deg: f64,
    /// Full width of the elevation sector, centered on the mean.
    pub elevation_spread_deg: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub carrier_ghz: f64,
    pub subcarrier_spacing_khz: f64,
    pub element_spacing_wavelengths: f64,
    pub shadowing_std_db: f64,
    pub shadowing_corr_dist_m: f64,
    /// Ground-plane distance range from the BS within which scatterers are placed.
    pub scatterer_range_m: [f64; 2],
    /// BS array as (azimuth elements, elevation elements).
    pub bs_array: [usize; 2],
    /// UE array as (azimuth elements, elevation elements).
    pub ue_array: [usize; 2],
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_paths: 10,
            azimuth_mean_deg: 0.0,
            azimuth_spread_deg: 120.0,
            elevation_mean_deg: 90.0,
            elevation_spread_deg: 60.0,
            bs_height_m: 15.0,
            ue_height_m: 1.5,
            carrier_ghz: 28.0,
            subcarrier_spacing_khz: 120.0,
            element_spacing_wavelengths: 0.5,
            shadowing_std_db: 6.0,
            shadowing_corr_dist_m: 10.0,
            scatterer_range_m: [10.0, 120.0],
            bs_array: [16, 4],
            ue_array: [1, 1],
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::config("channel.n_paths must be >= 1"));
        }
        for (name, v) in [
            ("channel.azimuth_spread_deg", self.azimuth_spread_deg),
            ("channel.elevation_spread_deg", self.elevation_spread_deg),
            ("channel.carrier_ghz", self.carrier_ghz),
            ("channel.subcarrier_spacing_khz", self.subcarrier_spacing_khz),
            ("channel.element_spacing_wavelengths", self.element_spacing_wavelengths),
            ("channel.shadowing_corr_dist_m", self.shadowing_corr_dist_m),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.shadowing_std_db < 0.0 {
            return Err(Error::config("channel.shadowing_std_db must be >= 0"));
        }
        if !(self.scatterer_range_m[0] > 0.0 && self.scatterer_range_m[1] >= self.scatterer_range_m[0]) {
            return Err(Error::config("channel.scatterer_range_m must be an increasing positive range"));
        }
        if self.bs_height_m <= self.ue_height_m {
            return Err(Error::config("channel.bs_height_m must exceed channel.ue_height_m"));
        }
        ArrayGeometry::new(self.bs_array[0], self.bs_array[1], self.element_spacing_wavelengths)?;
        ArrayGeometry::new(self.ue_array[0], self.ue_array[1], self.element_spacing_wavelengths)?;
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / (self.carrier_ghz * 1e9)
    }

    /// OFDM symbol period, the reciprocal of the subcarrier spacing.
    pub fn symbol_period_s(&self) -> f64 {
        1.0 / (self.subcarrier_spacing_khz * 1e3)
    }
}

/// 3GPP urban-macro NLOS pathloss in dB (TR 38.901 Table 7.4.1-1), taken as
/// `max(PL_LOS, PL'_NLOS)` with the sub-breakpoint LOS branch (the breakpoint
/// distance is beyond any distance this simulator uses). Distances below the
/// 10 m validity floor are clamped to it.
pub fn pathloss_uma_nlos(distance_2d_m: f64, bs_height_m: f64, ue_height_m: f64, carrier_ghz: f64) -> f64 {
    let d2d = distance_2d_m.max(10.0);
    let dh = bs_height_m - ue_height_m;
    let d3d = (d2d * d2d + dh * dh).sqrt();
    let pl_los = 28.0 + 22.0 * d3d.log10() + 20.0 * carrier_ghz.log10();
    let pl_nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * carrier_ghz.log10() - 0.6 * (ue_height_m - 1.5);
    pl_los.max(pl_nlos)
}

/// Log-normal shadowing evolved as a first-order Gauss-Markov process with
/// exponential decorrelation over traveled distance.
#[derive(Debug, Clone)]
pub struct ShadowingProcess {
    std_db: f64,
    corr_dist_m: f64,
    pub value_db: f64,
}

impl ShadowingProcess {
    pub fn init<R: Rng>(std_db: f64, corr_dist_m: f64, rng: &mut R) -> Self {
        let value_db = if std_db > 0.0 {
            Normal::new(0.0, std_db).expect("valid shadowing std").sample(rng)
        } else {
            0.0
        };
        Self { std_db, corr_dist_m, value_db }
    }

    /// Resume a process from an already-sampled value, e.g. the one stored in
    /// a freshly drawn [`ScattererSet`].
    pub fn with_value(std_db: f64, corr_dist_m: f64, value_db: f64) -> Self {
        Self { std_db, corr_dist_m, value_db }
    }

    /// Advance the process after the UE moved `dist_m` meters.
    pub fn advance<R: Rng>(&mut self, dist_m: f64, rng: &mut R) -> f64 {
        if self.std_db > 0.0 && dist_m > 0.0 {
            let rho = (-dist_m / self.corr_dist_m).exp();
            let innovation = Normal::new(0.0, self.std_db)
                .expect("valid shadowing std")
                .sample(rng);
            self.value_db = rho * self.value_db + (1.0 - rho * rho).sqrt() * innovation;
        }
        self.value_db
    }
}

/// Geometry and numerology shared by every channel evaluation of a run.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    cfg: ChannelConfig,
    bs_geometry: ArrayGeometry,
    ue_geometry: ArrayGeometry,
}

impl ChannelModel {
    pub fn new(cfg: ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let bs_geometry =
            ArrayGeometry::new(cfg.bs_array[0], cfg.bs_array[1], cfg.element_spacing_wavelengths)?;
        let ue_geometry =
            ArrayGeometry::new(cfg.ue_array[0], cfg.ue_array[1], cfg.element_spacing_wavelengths)?;
        Ok(Self { cfg, bs_geometry, ue_geometry })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn bs_geometry(&self) -> &ArrayGeometry {
        &self.bs_geometry
    }

    pub fn ue_geometry(&self) -> &ArrayGeometry {
        &self.ue_geometry
    }

    /// BS array reference point.
    pub fn bs_position(&self) -> [f64; 3] {
        [0.0, 0.0, self.cfg.bs_height_m]
    }

    /// Lift a ground-plane UE position to 3D at the configured UE height.
    pub fn ue_position_3d(&self, ue_xy_m: [f64; 2]) -> [f64; 3] {
        [ue_xy_m[0], ue_xy_m[1], self.cfg.ue_height_m]
    }

    /// Draw the per-run scatterer set: departure azimuths and elevations
    /// uniform over the configured sectors, ground distances uniform over the
    /// scatterer range, and i.i.d. circularly-symmetric complex Gaussian
    /// gains with unit mean power per path. Pathloss and shadowing are
    /// sampled for the initial UE position.
    pub fn draw_scatterer_set<R: Rng>(&self, ue_xy_m: [f64; 2], rng: &mut R) -> ScattererSet {
        let cfg = &self.cfg;
        let az_lo = (cfg.azimuth_mean_deg - cfg.azimuth_spread_deg / 2.0).to_radians();
        let az_hi = (cfg.azimuth_mean_deg + cfg.azimuth_spread_deg / 2.0).to_radians();
        let el_lo = (cfg.elevation_mean_deg - cfg.elevation_spread_deg / 2.0).to_radians();
        let el_hi = (cfg.elevation_mean_deg + cfg.elevation_spread_deg / 2.0).to_radians();
        let bs = self.bs_position();
        // Unit mean power per path: E|gain|^2 = 1.
        let per_path_sigma = 0.5f64.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut scatterers = Vec::with_capacity(cfg.n_paths);
        for _ in 0..cfg.n_paths {
            let az = rng.random_range(az_lo..=az_hi);
            let el = rng.random_range(el_lo..=el_hi);
            let ground = rng.random_range(cfg.scatterer_range_m[0]..=cfg.scatterer_range_m[1]);
            // Place the reflector so that the BS sees exactly the drawn angles.
            let position_m = [
                bs[0] + ground * az.cos(),
                bs[1] + ground * az.sin(),
                bs[2] + ground * el.cos() / el.sin(),
            ];
            let gain = Complex64::new(
                per_path_sigma * normal.sample(rng),
                per_path_sigma * normal.sample(rng),
            );
            scatterers.push(Scatterer { complex_gain: gain, position_m });
        }
        let dist = (ue_xy_m[0].powi(2) + ue_xy_m[1].powi(2)).sqrt();
        let pathloss_db =
            pathloss_uma_nlos(dist, cfg.bs_height_m, cfg.ue_height_m, cfg.carrier_ghz);
        let shadowing_db = if cfg.shadowing_std_db > 0.0 {
            Normal::new(0.0, cfg.shadowing_std_db).expect("valid shadowing std").sample(rng)
        } else {
            0.0
        };
        ScattererSet { scatterers, pathloss_db, shadowing_db }
    }

    /// Advance every path gain by the Doppler phase accumulated over
    /// `elapsed_s` seconds at the current geometry. Called once per frame so
    /// the phase evolution stays continuous across frames while
    /// [`ChannelModel::channel_at`] keeps its frame-local time origin.
    /// Gain magnitudes are untouched.
    pub fn advance_gain_phases(
        &self,
        set: &mut ScattererSet,
        ue_xy_m: [f64; 2],
        ue_velocity_mps: [f64; 2],
        elapsed_s: f64,
    ) {
        let ue = self.ue_position_3d(ue_xy_m);
        let vel = [ue_velocity_mps[0], ue_velocity_mps[1], 0.0];
        let lambda = self.cfg.wavelength_m();
        for sc in &mut set.scatterers {
            let f_i = sc.doppler_hz(ue, vel, lambda);
            let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f_i * elapsed_s);
            sc.complex_gain *= rot;
        }
    }

    /// Refresh the large-scale state of `set` for a UE that has moved
    /// `moved_m` meters since the last refresh and now sits at `ue_xy_m`.
    pub fn update_large_scale<R: Rng>(
        &self,
        set: &mut ScattererSet,
        shadowing: &mut ShadowingProcess,
        ue_xy_m: [f64; 2],
        moved_m: f64,
        rng: &mut R,
    ) {
        let dist = (ue_xy_m[0].powi(2) + ue_xy_m[1].powi(2)).sqrt();
        set.pathloss_db =
            pathloss_uma_nlos(dist, self.cfg.bs_height_m, self.cfg.ue_height_m, self.cfg.carrier_ghz);
        set.shadowing_db = shadowing.advance(moved_m, rng);
    }

    /// Evaluate `H_t` for the given UE state at symbol time `t_symbols`.
    ///
    /// Departure and arrival angles are recomputed from the current UE
    /// position relative to the fixed scatterer positions; each path is
    /// weighted by `gain * exp(j*2*pi*f_i*t*T_s)` with the Doppler `f_i`
    /// derived from the current geometry, and the whole sum carries
    /// `sqrt(rho)` for the combined pathloss and shadowing.
    pub fn channel_at(
        &self,
        set: &ScattererSet,
        ue_xy_m: [f64; 2],
        ue_velocity_mps: [f64; 2],
        t_symbols: u64,
    ) -> ChannelMatrix {
        let n_rx = self.ue_geometry.total_elements();
        let n_tx = self.bs_geometry.total_elements();
        let s = set.scatterers.len();
        let bs = self.bs_position();
        let ue = self.ue_position_3d(ue_xy_m);
        let vel = [ue_velocity_mps[0], ue_velocity_mps[1], 0.0];
        let lambda = self.cfg.wavelength_m();
        let t_s = self.cfg.symbol_period_s();

        // Factored form: A_rx * diag(b_t) * A_tx^H with the Doppler-rotated
        // gains folded into b_t and the steering vectors stacked per path.
        let mut a_rx_cols: Vec<Vec<Complex64>> = Vec::with_capacity(s);
        let mut a_tx_cols: Vec<Vec<Complex64>> = Vec::with_capacity(s);
        let mut b = Vec::with_capacity(s);
        for sc in &set.scatterers {
            let (az_d, el_d) = angles_of(sub3(sc.position_m, bs));
            let (az_a, el_a) = angles_of(sub3(sc.position_m, ue));
            a_tx_cols.push(
                steering_vector(&self.bs_geometry, az_d, el_d).expect("validated geometry"),
            );
            a_rx_cols.push(
                steering_vector(&self.ue_geometry, az_a, el_a).expect("validated geometry"),
            );
            let f_i = sc.doppler_hz(ue, vel, lambda);
            let phase = 2.0 * std::f64::consts::PI * f_i * (t_symbols as f64) * t_s;
            b.push(sc.complex_gain * Complex64::from_polar(1.0, phase));
        }

        let amp = set.large_scale_linear().sqrt();
        let mut entries = vec![Complex64::new(0.0, 0.0); n_rx * n_tx];
        for r in 0..n_rx {
            for c in 0..n_tx {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..s {
                    acc += a_rx_cols[i][r] * b[i] * a_tx_cols[i][c].conj();
                }
                entries[r * n_tx + c] = acc * amp;
            }
        }
        ChannelMatrix::from_entries(entries, n_rx, n_tx, t_symbols)
    }
}

/// Azimuth in [0, 2pi) and elevation-from-zenith in [0, pi] of a direction.
fn angles_of(v: [f64; 3]) -> (f64, f64) {
    let mut az = v[1].atan2(v[0]);
    if az < 0.0 {
        az += 2.0 * std::f64::consts::PI;
    }
    let norm = norm3(v);
    let el = if norm > 0.0 { (v[2] / norm).clamp(-1.0, 1.0).acos() } else { 0.0 };
    (az, el)
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn unit3(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> ChannelModel {
        ChannelModel::new(ChannelConfig::default()).unwrap()
    }

    // Independent per-path summation of the channel, written against the
    // closed-form expression rather than the library's factored evaluation.
    fn brute_force_channel(
        model: &ChannelModel,
        set: &ScattererSet,
        ue_xy: [f64; 2],
        vel_xy: [f64; 2],
        t: u64,
    ) -> Vec<Complex64> {
        let cfg = model.config();
        let n_rx = cfg.ue_array[0] * cfg.ue_array[1];
        let n_tx = cfg.bs_array[0] * cfg.bs_array[1];
        let bs = [0.0, 0.0, cfg.bs_height_m];
        let ue = [ue_xy[0], ue_xy[1], cfg.ue_height_m];
        let lambda = SPEED_OF_LIGHT_M_S / (cfg.carrier_ghz * 1e9);
        let t_s = 1.0 / (cfg.subcarrier_spacing_khz * 1e3);
        let rho = 10f64.powf(-(set.pathloss_db + set.shadowing_db) / 10.0);
        let mut h = vec![Complex64::new(0.0, 0.0); n_rx * n_tx];
        for sc in &set.scatterers {
            let d = sub3(sc.position_m, bs);
            let a = sub3(sc.position_m, ue);
            let (az_d, el_d) = angles_of(d);
            let (az_a, el_a) = angles_of(a);
            let a_tx = steering_vector(model.bs_geometry(), az_d, el_d).unwrap();
            let a_rx = steering_vector(model.ue_geometry(), az_a, el_a).unwrap();
            let u = unit3(a);
            let f_i = (vel_xy[0] * u[0] + vel_xy[1] * u[1]) / lambda;
            let rot = Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * f_i * t as f64 * t_s,
            );
            for r in 0..n_rx {
                for c in 0..n_tx {
                    h[r * n_tx + c] += rho.sqrt() * sc.complex_gain * rot * a_rx[r] * a_tx[c].conj();
                }
            }
        }
        h
    }

    #[test]
    fn steering_single_element_is_one() {
        let g = ArrayGeometry::new(1, 1, 0.5).unwrap();
        let v = steering_vector(&g, 1.234, 0.77).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_unit_norm_64_elements() {
        let g = ArrayGeometry::new(8, 8, 0.5).unwrap();
        for &(az, el) in &[(0.0, 1.57), (1.0, 0.3), (4.5, 2.9), (6.1, 1.2)] {
            let v = steering_vector(&g, az, el).unwrap();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "norm {norm} at ({az}, {el})");
            for z in &v {
                assert!((z.norm() - 0.125).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_broadside_is_uniform() {
        // Zero phase argument: az = 0 (so sin(el)*sin(az) = 0) at the horizon.
        let g = ArrayGeometry::new(8, 1, 0.5).unwrap();
        let v = steering_vector(&g, 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        for z in &v {
            assert!((z - Complex64::new(0.35355339059327373, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_rejects_zero_elements() {
        assert!(ArrayGeometry::new(0, 4, 0.5).is_err());
        assert!(ArrayGeometry::new(4, 0, 0.5).is_err());
    }

    #[test]
    fn scatterer_angles_within_sector() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let set = m.draw_scatterer_set([30.0, 0.0], &mut rng);
        assert_eq!(set.scatterers.len(), 10);
        for sc in &set.scatterers {
            let (az, el) = angles_of(sub3(sc.position_m, m.bs_position()));
            let az_signed = if az > std::f64::consts::PI { az - 2.0 * std::f64::consts::PI } else { az };
            assert!(az_signed.to_degrees() >= -60.0 - 1e-9 && az_signed.to_degrees() <= 60.0 + 1e-9);
            assert!(el.to_degrees() >= 60.0 - 1e-9 && el.to_degrees() <= 120.0 + 1e-9);
        }
    }

    #[test]
    fn scatterer_draw_is_deterministic() {
        let m = model();
        let a = m.draw_scatterer_set([30.0, 0.0], &mut ChaCha8Rng::seed_from_u64(42));
        let b = m.draw_scatterer_set([30.0, 0.0], &mut ChaCha8Rng::seed_from_u64(42));
        for (x, y) in a.scatterers.iter().zip(&b.scatterers) {
            assert_eq!(x.complex_gain, y.complex_gain);
            assert_eq!(x.position_m, y.position_m);
        }
        assert_eq!(a.pathloss_db, b.pathloss_db);
        assert_eq!(a.shadowing_db, b.shadowing_db);
    }

    #[test]
    fn zero_velocity_channel_is_static() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = m.draw_scatterer_set([40.0, 5.0], &mut rng);
        let h0 = m.channel_at(&set, [40.0, 5.0], [0.0, 0.0], 0);
        let h1 = m.channel_at(&set, [40.0, 5.0], [0.0, 0.0], 123_456);
        for (a, b) in h0.entries().iter().zip(h1.entries()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn channel_matches_independent_sum_s2() {
        // Hand-picked two-path set checked against the brute-force summation.
        let m = model();
        let set = ScattererSet {
            scatterers: vec![
                Scatterer { complex_gain: Complex64::new(0.8, -0.3), position_m: [40.0, 10.0, 18.0] },
                Scatterer { complex_gain: Complex64::new(-0.1, 0.55), position_m: [25.0, -12.0, 9.0] },
            ],
            pathloss_db: 100.0,
            shadowing_db: -2.5,
        };
        let ue = [60.0, 4.0];
        let vel = [3.0, -1.0];
        for &t in &[0u64, 17, 600, 44_000] {
            let h = m.channel_at(&set, ue, vel, t);
            let oracle = brute_force_channel(&m, &set, ue, vel, t);
            let mut err = 0.0f64;
            let mut norm = 0.0f64;
            for (a, b) in h.entries().iter().zip(&oracle) {
                err += (a - b).norm_sqr();
                norm += b.norm_sqr();
            }
            assert!(err.sqrt() / norm.sqrt() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn reconstruction_invariant_100_draws() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..100 {
            let ue = [rng.random_range(15.0..100.0), rng.random_range(-30.0..30.0)];
            let set = m.draw_scatterer_set(ue, &mut rng);
            let vel = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
            let t = rng.random_range(0..100_000u64);
            let h = m.channel_at(&set, ue, vel, t);
            let oracle = brute_force_channel(&m, &set, ue, vel, t);
            let mut err = 0.0f64;
            let mut norm = 0.0f64;
            for (a, b) in h.entries().iter().zip(&oracle) {
                err += (a - b).norm_sqr();
                norm += b.norm_sqr();
            }
            assert!(err.sqrt() / norm.sqrt() <= 1e-10, "draw {i}");
        }
    }

    #[test]
    fn doppler_rotation_preserves_gain_magnitude() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ue = [50.0, 0.0];
        let set = m.draw_scatterer_set(ue, &mut rng);
        // One path at a time: |H| entries must be t-invariant.
        for sc in &set.scatterers {
            let single = ScattererSet {
                scatterers: vec![sc.clone()],
                pathloss_db: set.pathloss_db,
                shadowing_db: set.shadowing_db,
            };
            let h0 = m.channel_at(&single, ue, [4.0, 2.0], 0);
            let h1 = m.channel_at(&single, ue, [4.0, 2.0], 77_777);
            for (a, b) in h0.entries().iter().zip(h1.entries()) {
                assert!((a.norm() - b.norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_path_channel_is_rank_one() {
        let cfg = ChannelConfig { n_paths: 1, ue_array: [4, 1], ..ChannelConfig::default() };
        let m = ChannelModel::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let set = m.draw_scatterer_set([30.0, 0.0], &mut rng);
        let h = m.channel_at(&set, [30.0, 0.0], [2.0, 0.0], 40);
        assert_eq!(numerical_rank(&h, 1e-8), 1);
    }

    #[test]
    fn rank_bounded_by_path_count_100_draws() {
        let cfg = ChannelConfig { n_paths: 3, ue_array: [8, 1], ..ChannelConfig::default() };
        let m = ChannelModel::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let ue = [rng.random_range(15.0..90.0), rng.random_range(-20.0..20.0)];
            let set = m.draw_scatterer_set(ue, &mut rng);
            let h = m.channel_at(&set, ue, [3.0, 3.0], rng.random_range(0..10_000u64));
            assert!(numerical_rank(&h, 1e-8) <= 3);
        }
    }

    // Row-space numerical rank via modified Gram-Schmidt with pivoting,
    // counting directions above `rel_tol` times the dominant row norm.
    fn numerical_rank(h: &ChannelMatrix, rel_tol: f64) -> usize {
        let n_rx = h.n_rx();
        let n_tx = h.n_tx();
        let mut rows: Vec<Vec<Complex64>> =
            (0..n_rx).map(|r| (0..n_tx).map(|c| h.get(r, c)).collect()).collect();
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let max0 = rows.iter().map(|r| norm(r)).fold(0.0f64, f64::max);
        if max0 == 0.0 {
            return 0;
        }
        let mut rank = 0;
        for _ in 0..n_rx {
            let (best, best_norm) = rows
                .iter()
                .enumerate()
                .map(|(i, r)| (i, norm(r)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if best_norm <= rel_tol * max0 {
                break;
            }
            rank += 1;
            let q: Vec<Complex64> = rows[best].iter().map(|z| z / best_norm).collect();
            rows.remove(best);
            for row in &mut rows {
                let proj: Complex64 =
                    q.iter().zip(row.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, qq) in row.iter_mut().zip(&q) {
                    *x -= proj * qq;
                }
            }
        }
        rank
    }

    #[test]
    fn pathloss_monotone_in_distance() {
        let p20 = pathloss_uma_nlos(20.0, 15.0, 1.5, 28.0);
        let p100 = pathloss_uma_nlos(100.0, 15.0, 1.5, 28.0);
        assert!(p100 > p20);
        let mut last = 0.0;
        for d in 1..200 {
            let p = pathloss_uma_nlos(d as f64, 15.0, 1.5, 28.0);
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn pathloss_monotone_in_frequency() {
        assert!(pathloss_uma_nlos(50.0, 15.0, 1.5, 28.0) > pathloss_uma_nlos(50.0, 15.0, 1.5, 2.0));
    }

    #[test]
    fn pathloss_matches_scripted_oracle_at_50m() {
        // Independent evaluation of the pinned closed form.
        assert!((pathloss_uma_nlos(50.0, 15.0, 1.5, 28.0) - 109.47603604928517).abs() < 1e-9);
    }

    #[test]
    fn pathloss_clamps_below_validity_floor() {
        assert_eq!(
            pathloss_uma_nlos(3.0, 15.0, 1.5, 28.0),
            pathloss_uma_nlos(10.0, 15.0, 1.5, 28.0)
        );
    }

    proptest::proptest! {
        #[test]
        fn steering_always_unit_norm(
            n_az in 1usize..16,
            n_el in 1usize..16,
            spacing in 0.1f64..2.0,
            az in 0.0f64..std::f64::consts::TAU,
            el in 0.0f64..std::f64::consts::PI,
        ) {
            let g = ArrayGeometry::new(n_az, n_el, spacing).unwrap();
            let v = steering_vector(&g, az, el).unwrap();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            proptest::prop_assert!((norm - 1.0).abs() < 1e-12);
            let per_element = 1.0 / ((n_az * n_el) as f64).sqrt();
            for z in &v {
                proptest::prop_assert!((z.norm() - per_element).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shadowing_is_smooth_and_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut p = ShadowingProcess::init(6.0, 10.0, &mut rng);
        let v0 = p.value_db;
        p.advance(1e-6, &mut rng);
        assert!((p.value_db - v0).abs() < 0.1, "tiny move must barely change the value");
        // Long-run sample std stays near the configured 6 dB.
        let mut q = ShadowingProcess::init(6.0, 10.0, &mut rng);
        let samples: Vec<f64> = (0..20_000).map(|_| q.advance(5.0, &mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples.len() as f64;
        assert!((var.sqrt() - 6.0).abs() < 0.5, "sample std {}", var.sqrt());
    }
}
