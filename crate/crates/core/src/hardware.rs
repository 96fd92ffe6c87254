//! Hardware impairment models.
//!
//! Three impairments are modelled:
//! - phase noise at the reflecting surface: per-element Von Mises phase
//!   errors with concentration `upsilon`;
//! - RF-chain imperfections at the base station: per-chain gain `kappa` and
//!   a random phase uniform on `[-eta, eta]`, plus additive distortion noise
//!   of power `sigma_rf_sq`;
//! - low-resolution ADCs: additive quantization noise with gain `tau = 1 -
//!   varrho`, where `varrho` is the inverse signal-to-quantization-noise
//!   ratio of a `b`-bit quantizer.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

/// Static description of the impairment levels of one setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareProfile {
    /// Von Mises concentration of the surface phase noise (>= 0).
    pub upsilon: f64,
    /// RF-chain amplitude attenuation, in [0, 1].
    pub kappa: f64,
    /// RF-chain phase error bound, in [0, pi).
    pub eta: f64,
    /// RF distortion-noise power in watts.
    pub sigma_rf_sq: f64,
    /// AWGN power in watts.
    pub sigma_sq: f64,
    /// ADC resolution in bits (>= 1).
    pub b: u32,
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.upsilon >= 0.0) {
            return Err(Error::Config(format!(
                "phase-noise concentration upsilon must be >= 0, got {}",
                self.upsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::Config(format!(
                "RF amplitude kappa must lie in [0, 1], got {}",
                self.kappa
            )));
        }
        if !(self.eta >= 0.0 && self.eta < std::f64::consts::PI) {
            return Err(Error::Config(format!(
                "RF phase bound eta must lie in [0, pi), got {}",
                self.eta
            )));
        }
        if !(self.sigma_rf_sq >= 0.0) {
            return Err(Error::Config(format!(
                "sigma_rf_sq must be >= 0, got {}",
                self.sigma_rf_sq
            )));
        }
        if !(self.sigma_sq > 0.0) {
            return Err(Error::Config(format!(
                "sigma_sq must be > 0, got {}",
                self.sigma_sq
            )));
        }
        if self.b < 1 {
            return Err(Error::Config("ADC bits b must be >= 1".into()));
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedHardware> {
        self.validate()?;
        let (varrho, tau) = quantizer_params(self.b)?;
        Ok(DerivedHardware {
            rho: bessel_ratio_rho(self.upsilon)?,
            iota: iota(self.eta)?,
            varrho,
            tau,
        })
    }
}

/// Scalars derived from a [`HardwareProfile`] that enter the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedHardware {
    /// Mean phasor of the surface phase noise, I1(upsilon)/I0(upsilon).
    pub rho: f64,
    /// Mean phasor of the RF phase error, sin(eta)/eta.
    pub iota: f64,
    /// Inverse SQNR of the ADC.
    pub varrho: f64,
    /// ADC gain, 1 - varrho.
    pub tau: f64,
}

fn bessel_i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn bessel_i1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..200 {
        term *= q / ((k * (k + 1)) as f64);
        sum += term;
        if term < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

/// `rho = I1(upsilon) / I0(upsilon)`, the mean resultant length of a
/// Von Mises distribution with concentration `upsilon`.
///
/// Power series below the switch point; above it, the ratio of the
/// exponentially scaled asymptotic expansions (stable up to 1e8 and beyond,
/// where the naive series would overflow).
pub fn bessel_ratio_rho(upsilon: f64) -> Result<f64> {
    if !(upsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "Bessel ratio requires upsilon >= 0, got {upsilon}"
        )));
    }
    if upsilon == 0.0 {
        return Ok(0.0);
    }
    if upsilon < 15.0 {
        return Ok(bessel_i1_series(upsilon) / bessel_i0_series(upsilon));
    }
    // I_nu(x) ~ e^x/sqrt(2 pi x) * sum_k t_k / x^k; the shared prefactor
    // cancels in the ratio.
    let u = 1.0 / upsilon;
    let num = 1.0
        + u * (-3.0 / 8.0
            + u * (-15.0 / 128.0
                + u * (-315.0 / 3072.0
                    + u * (-14175.0 / 98304.0
                        + u * (-1_091_475.0 / 3_932_160.0
                            + u * (-127_702_575.0 / 188_743_680.0))))));
    let den = 1.0
        + u * (1.0 / 8.0
            + u * (9.0 / 128.0
                + u * (225.0 / 3072.0
                    + u * (11025.0 / 98304.0
                        + u * (893_025.0 / 3_932_160.0
                            + u * (108_056_025.0 / 188_743_680.0))))));
    Ok(num / den)
}

/// `iota = sin(eta) / eta`, the mean phasor of a phase uniform on
/// `[-eta, eta]`; equals 1 at `eta = 0`.
pub fn iota(eta: f64) -> Result<f64> {
    if !(eta >= 0.0 && eta < std::f64::consts::PI) {
        return Err(Error::Domain(format!(
            "iota requires eta in [0, pi), got {eta}"
        )));
    }
    if eta < 1e-12 {
        return Ok(1.0);
    }
    Ok(eta.sin() / eta)
}

/// Inverse SQNR per quantizer resolution: exact values for `b <= 5`,
/// `(pi sqrt(3) / 2) * 2^(-2b)` beyond.
const VARRHO_TABLE: [f64; 5] = [0.3634, 0.1175, 0.03454, 0.009497, 0.002499];

/// Returns `(varrho, tau)` for a `b`-bit ADC, with `tau = 1 - varrho`.
pub fn quantizer_params(b: u32) -> Result<(f64, f64)> {
    if b < 1 {
        return Err(Error::Domain("quantizer bits must be >= 1".into()));
    }
    let varrho = if b <= 5 {
        VARRHO_TABLE[(b - 1) as usize]
    } else {
        0.5 * std::f64::consts::PI * 3.0_f64.sqrt() * 2.0_f64.powi(-2 * (b as i32))
    };
    Ok((varrho, 1.0 - varrho))
}

/// Draw one zero-mean Von Mises angle with concentration `kappa` using the
/// Best–Fisher rejection sampler.
pub fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    use std::f64::consts::PI;
    if kappa < 1e-9 {
        return rng.random_range(-PI..PI);
    }
    let a = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let b = (a - (2.0 * a).sqrt()) / (2.0 * kappa);
    let r = (1.0 + b * b) / (2.0 * b);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let angle = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { angle } else { -angle };
        }
    }
}

/// Sample the diagonal of the surface phase-noise matrix: unit-modulus
/// phasors `e^{j eps_n}` with `eps_n` i.i.d. Von Mises(0, upsilon).
pub fn sample_phase_noise<R: Rng + ?Sized>(
    upsilon: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(upsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "phase noise requires upsilon >= 0, got {upsilon}"
        )));
    }
    Ok((0..n)
        .map(|_| Complex64::from_polar(1.0, sample_von_mises(upsilon, rng)))
        .collect())
}

/// Sample the diagonal of the RF-chain matrix: `chi_m = kappa e^{j phi_m}`
/// with `phi_m` i.i.d. uniform on `[-eta, eta]`.
pub fn sample_rf_chains<R: Rng + ?Sized>(
    kappa: f64,
    eta: f64,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(0.0..=1.0).contains(&kappa) || !(eta >= 0.0 && eta < std::f64::consts::PI) {
        return Err(Error::Domain(format!(
            "RF chain parameters out of range: kappa = {kappa}, eta = {eta}"
        )));
    }
    Ok((0..m)
        .map(|_| {
            let phi = if eta == 0.0 {
                0.0
            } else {
                rng.random_range(-eta..eta)
            };
            Complex64::from_polar(kappa, phi)
        })
        .collect())
}

/// Diagonal of the pre-quantizer covariance for one channel/impairment
/// realization, with the expectation taken over data symbols and additive
/// noises only:
///
/// `[S_Q]_mm = sum_k p_k |row_m(chi G Phi Theta H) e_k|^2 + sigma_rf_sq + sigma_sq`.
pub fn sq_diagonal(
    realization: &ChannelRealization,
    chi: &[Complex64],
    theta_noise: &[Complex64],
    phi: &[Complex64],
    powers: &[f64],
    sigma_rf_sq: f64,
    sigma_sq: f64,
) -> Result<Vec<f64>> {
    let (n, k) = realization.h.dim();
    let (m, n_g) = realization.g.dim();
    if n_g != n || chi.len() != m || theta_noise.len() != n || phi.len() != n || powers.len() != k {
        return Err(Error::Dimension(format!(
            "sq_diagonal: H is {n}x{k}, G is {m}x{n_g}, chi {}, theta {}, phi {}, powers {}",
            chi.len(),
            theta_noise.len(),
            phi.len(),
            powers.len()
        )));
    }
    let effective = effective_matrix(realization, chi, theta_noise, phi);
    Ok(sq_from_effective(&effective, powers, sigma_rf_sq, sigma_sq))
}

/// `chi G Phi Theta H`: the end-to-end matrix from user symbols to RF-chain
/// inputs for one realization.
pub(crate) fn effective_matrix(
    realization: &ChannelRealization,
    chi: &[Complex64],
    theta_noise: &[Complex64],
    phi: &[Complex64],
) -> ndarray::Array2<Complex64> {
    let (n, _k) = realization.h.dim();
    // Scale the rows of H by the combined surface phasors, then multiply by G
    // and scale the rows of the product by the RF-chain gains.
    let mut h_scaled = realization.h.clone();
    for i in 0..n {
        let s = phi[i] * theta_noise[i];
        h_scaled.row_mut(i).mapv_inplace(|v| v * s);
    }
    let mut out = realization.g.dot(&h_scaled);
    for (mut row, &c) in out.rows_mut().into_iter().zip(chi.iter()) {
        row.mapv_inplace(|v| v * c);
    }
    out
}

pub(crate) fn sq_from_effective(
    effective: &ndarray::Array2<Complex64>,
    powers: &[f64],
    sigma_rf_sq: f64,
    sigma_sq: f64,
) -> Vec<f64> {
    effective
        .rows()
        .into_iter()
        .map(|row| {
            let signal: f64 = row
                .iter()
                .zip(powers.iter())
                .map(|(v, &p)| p * v.norm_sqr())
                .sum();
            signal + sigma_rf_sq + sigma_sq
        })
        .collect()
}
