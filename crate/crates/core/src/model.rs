//! Physical configuration of the attocell network and pointwise channel/SINR
//! quantities.
//!
//! LEDs sit on a square lattice `(u a, v a, h)`; the receiver lies on the
//! floor at `(x, y, 0)` and is served by the LED at the origin. All lengths
//! are metres, powers watts, currents amperes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// LED and photodiode parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticalConfig {
    /// Average optical power per LED (W).
    pub optical_power: f64,
    /// Photodiode area (m^2).
    pub pd_area: f64,
    /// Photodiode responsivity (A/W).
    pub responsivity: f64,
    /// LED half-power semi-angle (rad).
    pub half_power_angle: f64,
    /// Noise power spectral density at the photodiode (A^2/Hz).
    pub noise_psd: f64,
    /// Modulation bandwidth (Hz).
    pub bandwidth: f64,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        OpticalConfig {
            optical_power: 1.0,
            pd_area: 1e-4,
            responsivity: 0.1,
            half_power_angle: PI / 3.0,
            noise_psd: 4.14e-21,
            bandwidth: 40e6,
        }
    }
}

impl OpticalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("optical_power", self.optical_power),
            ("pd_area", self.pd_area),
            ("responsivity", self.responsivity),
            ("noise_psd", self.noise_psd),
            ("bandwidth", self.bandwidth),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    format!("optical.{field}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if !(self.half_power_angle > 0.0 && self.half_power_angle < PI / 2.0) {
            return Err(Error::config(
                "optical.half_power_angle",
                format!("must lie in (0, pi/2), got {}", self.half_power_angle),
            ));
        }
        Ok(())
    }
}

/// Lattice pitch, mounting height and the number of lattice rings kept when
/// summing over the (conceptually infinite) lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub pitch: f64,
    pub height: f64,
    pub trunc: u32,
}

pub const DEFAULT_TRUNC: u32 = 200;

impl NetworkGeometry {
    pub fn new(pitch: f64, height: f64, trunc: u32) -> Result<Self> {
        let g = NetworkGeometry {
            pitch,
            height,
            trunc,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::config("geometry.pitch", format!("must be > 0, got {}", self.pitch)));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::config("geometry.height", format!("must be > 0, got {}", self.height)));
        }
        if self.trunc < 1 {
            return Err(Error::config("geometry.trunc", "must be >= 1"));
        }
        Ok(())
    }

    pub fn height_ratio(&self) -> f64 {
        self.height / self.pitch
    }

    pub fn with_height(self, height: f64) -> Self {
        NetworkGeometry { height, ..self }
    }

    pub fn with_trunc(self, trunc: u32) -> Self {
        NetworkGeometry { trunc, ..self }
    }

    /// Whether `pos` lies inside the served attocell `[-a/2, a/2]^2`.
    pub fn contains(&self, pos: ReceiverPosition) -> bool {
        let half = 0.5 * self.pitch;
        pos.x.abs() <= half && pos.y.abs() <= half
    }

    /// Squared horizontal distance from `pos` to the LED at lattice site `(u, v)`.
    #[inline]
    pub fn horizontal_dist2(&self, u: i64, v: i64, pos: ReceiverPosition) -> f64 {
        let dx = u as f64 * self.pitch + pos.x;
        let dy = v as f64 * self.pitch + pos.y;
        dx * dx + dy * dy
    }
}

/// Receiver location on the floor plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReceiverPosition {
    pub x: f64,
    pub y: f64,
}

impl ReceiverPosition {
    pub const ORIGIN: ReceiverPosition = ReceiverPosition { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        ReceiverPosition { x, y }
    }

    pub fn radius2(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Image under element `k` (0..8) of the dihedral group of the square.
    pub fn dihedral(&self, k: usize) -> Self {
        let (x, y) = dihedral_map(k, self.x, self.y);
        ReceiverPosition { x, y }
    }
}

/// Element `k` of D4 acting on a pair: rotations by `k * 90` degrees for
/// `k < 4`, followed by the swap `(x, y) -> (y, x)` for `k >= 4`.
pub(crate) fn dihedral_map<T: std::ops::Neg<Output = T> + Copy>(k: usize, x: T, y: T) -> (T, T) {
    let (x, y) = if k >= 4 { (y, x) } else { (x, y) };
    match k % 4 {
        0 => (x, y),
        1 => (-y, x),
        2 => (-x, -y),
        _ => (y, -x),
    }
}

/// Lambertian emission order `m = -ln 2 / ln cos(theta_h)`.
pub fn lambertian_order(half_power_angle: f64) -> Result<f64> {
    if !(half_power_angle > 0.0 && half_power_angle < PI / 2.0) {
        return Err(Error::domain(
            "lambertian_order",
            format!("half-power angle must lie in (0, pi/2), got {half_power_angle}"),
        ));
    }
    Ok(-(2.0_f64.ln()) / half_power_angle.cos().ln())
}

/// Constants derived from an [`OpticalConfig`] and [`NetworkGeometry`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub lambertian_order: f64,
    /// Path-loss exponent `m + 3` of the squared gain.
    pub beta: f64,
    /// Gain constant `K = (m+1) A_pd h^(m+1) / (2 pi)`.
    pub gain_const: f64,
    /// Receiver noise variance `N_o W` (A^2).
    pub noise_var: f64,
}

impl DerivedConstants {
    pub fn new(optical: &OpticalConfig, geometry: &NetworkGeometry) -> Result<Self> {
        let m = lambertian_order(optical.half_power_angle)?;
        Ok(DerivedConstants {
            lambertian_order: m,
            beta: m + 3.0,
            gain_const: (m + 1.0) * optical.pd_area * geometry.height.powf(m + 1.0) / (2.0 * PI),
            noise_var: optical.noise_psd * optical.bandwidth,
        })
    }
}

/// A validated optical configuration and geometry with derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttocellNetwork {
    pub optical: OpticalConfig,
    pub geometry: NetworkGeometry,
    pub derived: DerivedConstants,
}

impl AttocellNetwork {
    pub fn new(optical: OpticalConfig, geometry: NetworkGeometry) -> Result<Self> {
        optical.validate()?;
        geometry.validate()?;
        let derived = DerivedConstants::new(&optical, &geometry)?;
        Ok(AttocellNetwork {
            optical,
            geometry,
            derived,
        })
    }

    pub fn beta(&self) -> f64 {
        self.derived.beta
    }

    /// Line-of-sight DC gain `K (d^2 + h^2)^(-beta/2)` at horizontal distance `d`.
    pub fn channel_gain(&self, d_horiz: f64) -> f64 {
        let h = self.geometry.height;
        self.derived.gain_const * (d_horiz * d_horiz + h * h).powf(-0.5 * self.derived.beta)
    }

    fn gain_from_dist2(&self, d2: f64) -> f64 {
        let h = self.geometry.height;
        self.derived.gain_const * (d2 + h * h).powf(-0.5 * self.derived.beta)
    }

    /// Electrical SINR at `pos` for one thinning realisation of the
    /// interferers.
    pub fn sinr(&self, pos: ReceiverPosition, thinning: &Realization) -> f64 {
        let po2 = self.optical.optical_power.powi(2);
        let r2 = self.optical.responsivity.powi(2);
        let g0 = self.gain_from_dist2(pos.radius2());
        let signal = po2 * g0 * g0 * r2;
        let interference: f64 = thinning
            .active_sites()
            .map(|(u, v)| {
                let g = self.gain_from_dist2(self.geometry.horizontal_dist2(u, v, pos));
                po2 * g * g * r2
            })
            .sum();
        signal / (interference + self.derived.noise_var)
    }

    /// SINR with no active interferers.
    pub fn snr(&self, pos: ReceiverPosition) -> f64 {
        let g0 = self.gain_from_dist2(pos.radius2());
        (self.optical.optical_power * g0 * self.optical.responsivity).powi(2) / self.derived.noise_var
    }
}

/// Interfering lattice sites `(u, v)` with `|u|, |v| <= trunc`, origin
/// excluded, row-major in `u` then `v`.
pub fn lattice_sites(trunc: u32) -> impl Iterator<Item = (i64, i64)> {
    let t = trunc as i64;
    (-t..=t).flat_map(move |u| (-t..=t).map(move |v| (u, v))).filter(|&s| s != (0, 0))
}

/// Number of interfering sites within `trunc` rings.
pub fn site_count(trunc: u32) -> usize {
    let side = 2 * trunc as usize + 1;
    side * side - 1
}

/// On/off state of every LED within the truncated lattice. The origin entry
/// is ignored: the serving LED always transmits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    trunc: u32,
    active: Vec<bool>,
}

impl Realization {
    pub fn uniform(trunc: u32, active: bool) -> Self {
        let side = 2 * trunc as usize + 1;
        Realization {
            trunc,
            active: vec![active; side * side],
        }
    }

    pub fn from_fn(trunc: u32, mut f: impl FnMut(i64, i64) -> bool) -> Self {
        let mut r = Self::uniform(trunc, false);
        for (u, v) in lattice_sites(trunc) {
            let i = r.index(u, v);
            r.active[i] = f(u, v);
        }
        r
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    fn index(&self, u: i64, v: i64) -> usize {
        let t = self.trunc as i64;
        let side = 2 * t + 1;
        ((u + t) * side + (v + t)) as usize
    }

    pub fn get(&self, u: i64, v: i64) -> bool {
        (u, v) != (0, 0) && self.active[self.index(u, v)]
    }

    pub fn set(&mut self, u: i64, v: i64, on: bool) {
        let i = self.index(u, v);
        self.active[i] = on;
    }

    pub fn active_sites(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        lattice_sites(self.trunc).filter(move |&(u, v)| self.get(u, v))
    }

    /// The realisation carried along with the receiver under dihedral
    /// element `k`, so that `sinr(pos.dihedral(k), r.dihedral(k))` is
    /// unchanged.
    pub fn dihedral(&self, k: usize) -> Self {
        // r'(t) = r(g^-1 t); reflections are involutions
        let inv = if k < 4 { (4 - k) % 4 } else { k };
        Realization::from_fn(self.trunc, |u, v| {
            let (a, b) = dihedral_map(inv, u, v);
            self.get(a, b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_one(h: f64) -> AttocellNetwork {
        AttocellNetwork::new(OpticalConfig::default(), NetworkGeometry::new(0.5, h, 200).unwrap()).unwrap()
    }

    #[test]
    fn lambertian_order_values() {
        assert!((lambertian_order(PI / 3.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((lambertian_order(PI / 4.0).unwrap() - 2.0).abs() < 1e-14);
        // m -> 0 as theta_h -> pi/2, but only logarithmically
        let m157 = lambertian_order(1.57).unwrap();
        assert!((m157 - 0.097_08).abs() < 1e-4, "{m157}");
        assert!(lambertian_order(PI / 2.0 - 1e-12).unwrap() < 0.03);
        assert!(lambertian_order(1.5).unwrap() > m157);
        assert!(lambertian_order(0.0).is_err());
        assert!(lambertian_order(PI / 2.0).is_err());
        assert!(lambertian_order(-0.3).is_err());
    }

    #[test]
    fn table_one_constants() {
        let net = table_one(1.5);
        assert!((net.derived.lambertian_order - 1.0).abs() < 1e-14);
        assert!((net.beta() - 4.0).abs() < 1e-14);
        assert!((net.derived.noise_var - 1.656e-13).abs() < 1e-25);
        // K = (m+1) A h^(m+1) / 2pi with m = 1
        let k = 2.0 * 1e-4 * 1.5 * 1.5 / (2.0 * PI);
        assert!((net.derived.gain_const - k).abs() < 1e-18);
    }

    #[test]
    fn gain_at_origin() {
        let net = table_one(1.5);
        let k = 1e-4 * 2.25 / PI;
        let g0 = net.channel_gain(0.0);
        assert_eq!(g0, net.derived.gain_const * 1.5f64.powf(-4.0));
        assert!((g0 - k / 1.5f64.powi(4)).abs() < 1e-18);
        assert!((g0 - 1.414_71e-5).abs() < 1e-10);
        assert!(net.channel_gain(0.5) < g0);
        assert!(net.channel_gain(1e6) < 1e-25);
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let bad = OpticalConfig {
            pd_area: -1.0,
            ..Default::default()
        };
        match bad.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "optical.pd_area"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(NetworkGeometry::new(0.5, 1.5, 0).is_err());
        assert!(NetworkGeometry::new(0.0, 1.5, 3).is_err());
        let wide = OpticalConfig {
            half_power_angle: 2.0,
            ..Default::default()
        };
        assert!(wide.validate().is_err());
    }

    #[test]
    fn sinr_limits() {
        let net = AttocellNetwork::new(OpticalConfig::default(), NetworkGeometry::new(0.5, 1.5, 10).unwrap()).unwrap();
        let pos = ReceiverPosition::new(0.1, -0.2);
        let none = Realization::uniform(10, false);
        let all = Realization::uniform(10, true);
        let snr = net.snr(pos);
        assert!((net.sinr(pos, &none) - snr).abs() <= 1e-12 * snr);
        assert!(net.sinr(ReceiverPosition::ORIGIN, &all) < net.snr(ReceiverPosition::ORIGIN));
        assert!(net.sinr(pos, &all) > 0.0);
    }

    #[test]
    fn lattice_site_enumeration() {
        assert_eq!(lattice_sites(2).count(), site_count(2));
        assert_eq!(site_count(200), 401 * 401 - 1);
        assert!(lattice_sites(3).all(|s| s != (0, 0)));
    }

    #[test]
    fn dihedral_is_a_group_action() {
        let p = ReceiverPosition::new(0.1, 0.2);
        let images: Vec<_> = (0..8).map(|k| p.dihedral(k)).collect();
        for (i, a) in images.iter().enumerate() {
            for b in &images[i + 1..] {
                assert_ne!(a, b);
            }
            assert!((a.radius2() - p.radius2()).abs() < 1e-15);
        }
    }
}
