//! Experiment geometry and validated configuration.
//!
//! A scenario pins down everything the other modules need: array sizes,
//! 3-D positions, Rician factors, transmit powers, the hardware profile and
//! the RNG seed. Configurations are loaded from a TOML file whose keys match
//! the field names below exactly; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::{DerivedHardware, HardwareProfile};
use crate::rng::{self, stream};
use rand::Rng;

pub type Vec3 = [f64; 3];

/// Azimuth/elevation angles (radians) of every propagation path. Stored
/// explicitly so a run is reproducible independent of how the angles were
/// obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleSet {
    /// Arrival at the BS from the surface (azimuth, elevation).
    pub phi_r_a: f64,
    pub phi_r_e: f64,
    /// Departure from the surface towards the BS.
    pub phi_t_a: f64,
    pub phi_t_e: f64,
    /// Arrival at the surface from each user.
    pub phi_kr_a: Vec<f64>,
    pub phi_kr_e: Vec<f64>,
}

impl AngleSet {
    fn validate(&self, k: usize) -> Result<()> {
        if self.phi_kr_a.len() != k || self.phi_kr_e.len() != k {
            return Err(Error::Config(format!(
                "angles: expected {k} per-user entries, got {} azimuth / {} elevation",
                self.phi_kr_a.len(),
                self.phi_kr_e.len()
            )));
        }
        let all_finite = [self.phi_r_a, self.phi_r_e, self.phi_t_a, self.phi_t_e]
            .iter()
            .chain(self.phi_kr_a.iter())
            .chain(self.phi_kr_e.iter())
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::Config("angles must all be finite".into()));
        }
        Ok(())
    }

    /// Draw every angle uniformly in [0, 2 pi) from the scenario seed.
    fn sample(seed: u64, k: usize) -> Self {
        let mut rng = stream(seed, 0, rng::tag::ANGLES);
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut draw = || rng.random_range(0.0..two_pi);
        let phi_r_a = draw();
        let phi_r_e = draw();
        let phi_t_a = draw();
        let phi_t_e = draw();
        let mut phi_kr_a = Vec::with_capacity(k);
        let mut phi_kr_e = Vec::with_capacity(k);
        for _ in 0..k {
            phi_kr_a.push(draw());
            phi_kr_e.push(draw());
        }
        AngleSet {
            phi_r_a,
            phi_r_e,
            phi_t_a,
            phi_t_e,
            phi_kr_a,
            phi_kr_e,
        }
    }
}

/// A field that may be given once and broadcast to all K users, or per user.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerUser {
    fn expand(&self, k: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerUser::Scalar(v) => Ok(vec![*v; k]),
            PerUser::Vector(v) if v.len() == k => Ok(v.clone()),
            PerUser::Vector(v) => Err(Error::Config(format!(
                "{what}: expected {k} values, got {}",
                v.len()
            ))),
        }
    }
}

/// Configuration file contents, prior to validation and derivation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub bs_pos: Vec3,
    pub ris_pos: Vec3,
    /// Explicit user positions; mutually exclusive with `user_circle_radius`.
    pub user_positions: Option<Vec<Vec3>>,
    /// Radius of the random user disc (meters) at height 1.6 m below the BS.
    pub user_circle_radius: Option<f64>,
    pub spacing_ratio: f64,
    pub rician_delta: f64,
    pub rician_mu: PerUser,
    pub tx_power: PerUser,
    pub pathloss_exponent: f64,
    pub hardware: HardwareProfile,
    pub angles: Option<AngleSet>,
    pub seed: u64,
    pub mc_realizations: usize,
}

/// Fully resolved, immutable experiment description. Safe to share across
/// worker threads.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub bs_pos: Vec3,
    pub ris_pos: Vec3,
    pub user_positions: Vec<Vec3>,
    pub spacing_ratio: f64,
    pub rician_delta: f64,
    pub rician_mu: Vec<f64>,
    pub tx_power: Vec<f64>,
    pub pathloss_exponent: f64,
    pub hardware: HardwareProfile,
    pub derived: DerivedHardware,
    pub angles: AngleSet,
    pub seed: u64,
    pub mc_realizations: usize,
    /// Large-scale fading user -> surface, from the path-loss law.
    pub alpha: Vec<f64>,
    /// Large-scale fading surface -> BS.
    pub beta: f64,
}

/// Large-scale fading coefficient `l^(-exponent) / 1000` for a link of
/// length `l` meters.
pub fn pathloss(l: f64, exponent: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Domain(format!("path length must be > 0, got {l}")));
    }
    if !(exponent > 0.0) {
        return Err(Error::Domain(format!(
            "path-loss exponent must be > 0, got {exponent}"
        )));
    }
    Ok(l.powf(-exponent) / 1000.0)
}

fn distance(a: &Vec3, b: &Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

const DEFAULT_USER_CIRCLE_RADIUS: f64 = 5.0;
const USER_PLANE_HEIGHT: f64 = 1.6;

impl ScenarioConfig {
    /// Validate a raw configuration and fill in every derived quantity.
    pub fn from_raw(raw: &RawScenario) -> Result<Self> {
        if crate::arrays::integer_sqrt(raw.m).is_none() {
            return Err(Error::Config(format!(
                "M = {} is not a perfect square",
                raw.m
            )));
        }
        if crate::arrays::integer_sqrt(raw.n).is_none() {
            return Err(Error::Config(format!(
                "N = {} is not a perfect square",
                raw.n
            )));
        }
        if raw.k == 0 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if raw.mc_realizations == 0 {
            return Err(Error::Config("mc_realizations must be >= 1".into()));
        }
        if !(raw.spacing_ratio > 0.0 && raw.spacing_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "spacing_ratio must be > 0, got {}",
                raw.spacing_ratio
            )));
        }
        if !(raw.rician_delta >= 0.0) {
            return Err(Error::Config(format!(
                "rician_delta must be >= 0, got {}",
                raw.rician_delta
            )));
        }
        let rician_mu = raw.rician_mu.expand(raw.k, "rician_mu")?;
        if rician_mu.iter().any(|&mu| !(mu >= 0.0)) {
            return Err(Error::Config("rician_mu entries must be >= 0".into()));
        }
        let tx_power = raw.tx_power.expand(raw.k, "tx_power")?;
        if tx_power.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Config("tx_power entries must be > 0".into()));
        }
        raw.hardware.validate()?;
        let derived = raw.hardware.derive()?;

        let user_positions = match (&raw.user_positions, raw.user_circle_radius) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either user_positions or user_circle_radius, not both".into(),
                ))
            }
            (Some(pos), None) => {
                if pos.len() != raw.k {
                    return Err(Error::Config(format!(
                        "user_positions: expected {} entries, got {}",
                        raw.k,
                        pos.len()
                    )));
                }
                pos.clone()
            }
            (None, radius) => {
                let radius = radius.unwrap_or(DEFAULT_USER_CIRCLE_RADIUS);
                if !(radius > 0.0) {
                    return Err(Error::Config("user_circle_radius must be > 0".into()));
                }
                let mut rng = stream(raw.seed, 0, rng::tag::USER_POSITIONS);
                (0..raw.k)
                    .map(|_| {
                        let r = radius * rng.random::<f64>().sqrt();
                        let ang = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                        [
                            raw.bs_pos[0] + r * ang.cos(),
                            raw.bs_pos[1] + r * ang.sin(),
                            USER_PLANE_HEIGHT,
                        ]
                    })
                    .collect()
            }
        };

        let angles = match &raw.angles {
            Some(a) => {
                a.validate(raw.k)?;
                a.clone()
            }
            None => AngleSet::sample(raw.seed, raw.k),
        };

        let ris_bs = distance(&raw.ris_pos, &raw.bs_pos);
        if ris_bs == 0.0 {
            return Err(Error::Config("surface and BS share a position".into()));
        }
        let beta = pathloss(ris_bs, raw.pathloss_exponent).map_err(|e| match e {
            Error::Domain(msg) => Error::Config(msg),
            other => other,
        })?;
        let alpha = user_positions
            .iter()
            .enumerate()
            .map(|(k, pos)| {
                let d = distance(pos, &raw.ris_pos);
                if d == 0.0 {
                    return Err(Error::Config(format!(
                        "user {k} sits exactly at the surface position"
                    )));
                }
                pathloss(d, raw.pathloss_exponent)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(ScenarioConfig {
            m: raw.m,
            n: raw.n,
            k: raw.k,
            bs_pos: raw.bs_pos,
            ris_pos: raw.ris_pos,
            user_positions,
            spacing_ratio: raw.spacing_ratio,
            rician_delta: raw.rician_delta,
            rician_mu,
            tx_power,
            pathloss_exponent: raw.pathloss_exponent,
            hardware: raw.hardware.clone(),
            derived,
            angles,
            seed: raw.seed,
            mc_realizations: raw.mc_realizations,
            alpha,
            beta,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_raw(&raw)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Rebuild with a different element count, reusing the same seed (and
    /// re-deriving whatever depends on it). Used by parameter sweeps.
    pub fn with_dimensions(&self, m: usize, n: usize) -> Result<Self> {
        let mut next = self.clone();
        if crate::arrays::integer_sqrt(m).is_none() || crate::arrays::integer_sqrt(n).is_none() {
            return Err(Error::Config(format!(
                "array sizes must be perfect squares, got M = {m}, N = {n}"
            )));
        }
        next.m = m;
        next.n = n;
        Ok(next)
    }

    pub fn with_hardware(&self, hardware: HardwareProfile) -> Result<Self> {
        hardware.validate()?;
        let derived = hardware.derive()?;
        let mut next = self.clone();
        next.hardware = hardware;
        next.derived = derived;
        Ok(next)
    }

    pub fn with_tx_power(&self, tx_power: Vec<f64>) -> Result<Self> {
        if tx_power.len() != self.k || tx_power.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Config("invalid per-user power vector".into()));
        }
        let mut next = self.clone();
        next.tx_power = tx_power;
        Ok(next)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        // Angles and positions were already resolved; only the Monte Carlo
        // draws change. (Use RawScenario to re-sample geometry instead.)
        let mut next = self.clone();
        next.seed = seed;
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn baseline_toml() -> String {
        r#"
M = 64
N = 16
K = 4
bs_pos = [0.0, 0.0, 25.0]
ris_pos = [5.0, 100.0, 30.0]
user_circle_radius = 5.0
spacing_ratio = 0.5
rician_delta = 1.0
rician_mu = 10.0
tx_power = 1.0
pathloss_exponent = 2.8
seed = 20240901
mc_realizations = 2000

[hardware]
upsilon = 20.0
kappa = 0.9
eta = 0.5235987755982988
sigma_rf_sq = 3.9810717055349695e-14
sigma_sq = 3.9810717055349695e-14
b = 2
"#
        .to_string()
    }

    #[test]
    fn pathloss_values() {
        assert_relative_eq!(pathloss(1.0, 2.8).unwrap(), 1.0e-3, max_relative = 1e-12);
        assert_relative_eq!(
            pathloss(100.0, 2.8).unwrap(),
            2.511_886_431_509_58e-9,
            max_relative = 1e-4
        );
        assert!(pathloss(0.0, 2.8).is_err());
        assert!(pathloss(-3.0, 2.8).is_err());
        assert!(pathloss(10.0, 0.0).is_err());
    }

    #[test]
    fn pathloss_monotone() {
        let mut prev = f64::INFINITY;
        for l in [1.5, 2.0, 10.0, 50.0, 200.0] {
            let v = pathloss(l, 2.8).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // Decreasing in the exponent for l > 1.
        assert!(pathloss(10.0, 3.0).unwrap() < pathloss(10.0, 2.0).unwrap());
    }

    #[test]
    fn baseline_config_builds() {
        let sc = ScenarioConfig::from_toml_str(&baseline_toml()).unwrap();
        assert_eq!(sc.m, 64);
        assert_eq!(sc.n, 16);
        assert_eq!(sc.k, 4);
        assert_eq!(sc.rician_mu, vec![10.0; 4]);
        assert_eq!(sc.tx_power, vec![1.0; 4]);
        // beta = pathloss(dist(ris, bs)) with straight-line geometry.
        let d = ((5.0f64).powi(2) + (100.0f64).powi(2) + (5.0f64).powi(2)).sqrt();
        assert_relative_eq!(sc.beta, pathloss(d, 2.8).unwrap(), max_relative = 1e-12);
        assert_eq!(sc.alpha.len(), 4);
        for (&a, pos) in sc.alpha.iter().zip(&sc.user_positions) {
            assert!(a > 0.0);
            assert_relative_eq!(pos[2], 1.6, max_relative = 1e-12);
        }
        // Derived hardware for upsilon = 20, eta = pi/6, b = 2.
        assert_relative_eq!(sc.derived.rho, 0.974667, epsilon = 1e-5);
        assert_relative_eq!(sc.derived.iota, 0.954_929_658, epsilon = 1e-8);
        assert_eq!(sc.derived.varrho, 0.1175);
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let a = ScenarioConfig::from_toml_str(&baseline_toml()).unwrap();
        let b = ScenarioConfig::from_toml_str(&baseline_toml()).unwrap();
        assert_eq!(a.angles, b.angles);
        assert_eq!(a.user_positions, b.user_positions);
        assert_eq!(a.alpha, b.alpha);
        assert!(a.beta == b.beta);
    }

    #[test]
    fn non_square_m_rejected() {
        let bad = baseline_toml().replace("M = 64", "M = 10");
        match ScenarioConfig::from_toml_str(&bad) {
            Err(Error::Config(msg)) => assert!(msg.contains("perfect square")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn zero_users_rejected() {
        let bad = baseline_toml().replace("K = 4", "K = 0");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn negative_power_rejected() {
        let bad = baseline_toml().replace("tx_power = 1.0", "tx_power = -1.0");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn user_at_surface_rejected() {
        let bad = baseline_toml().replace(
            "user_circle_radius = 5.0",
            "user_positions = [[5.0, 100.0, 30.0], [1.0, 0.0, 1.6], [2.0, 0.0, 1.6], [3.0, 0.0, 1.6]]",
        );
        match ScenarioConfig::from_toml_str(&bad) {
            Err(Error::Config(msg)) => assert!(msg.contains("surface position")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = baseline_toml() + "\nnot_a_field = 3\n";
        match ScenarioConfig::from_toml_str(&bad) {
            Err(Error::Parse(_)) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn explicit_angles_roundtrip() {
        let extra = r#"
[angles]
phi_r_a = 0.1
phi_r_e = 0.2
phi_t_a = 0.3
phi_t_e = 0.4
phi_kr_a = [0.5, 0.6, 0.7, 0.8]
phi_kr_e = [0.9, 1.0, 1.1, 1.2]
"#;
        let sc = ScenarioConfig::from_toml_str(&(baseline_toml() + extra)).unwrap();
        assert_eq!(sc.angles.phi_t_e, 0.4);
        assert_eq!(sc.angles.phi_kr_a[3], 0.8);
    }
}
