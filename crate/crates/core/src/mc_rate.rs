//! Monte Carlo estimation of the exact per-user ergodic achievable rate.
//!
//! With maximum-ratio combining `W = H^H Phi^H G^H`, the instantaneous SINR
//! of user k is
//!
//! `p_k tau^2 |v_k^H u_k|^2 / ( sum_{i != k} p_i tau^2 |v_k^H u_i|^2 + DN_k + AN_k + QN_k )`
//!
//! with `v_k = G Phi h_k` (combiner column, impairment-free) and
//! `u_i = chi G Phi Theta h_i` (impaired signal path). The ergodic rate is
//! the average of `log2(1 + SINR)` over channel and impairment draws.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{los_components, sample_channels, ChannelRealization};
use crate::error::{Error, Result};
use crate::hardware::{effective_matrix, sample_phase_noise, sample_rf_chains, sq_from_effective};
use crate::rng::{self, pairwise_sum, stream};
use crate::scenario::ScenarioConfig;

/// How the quantization-noise covariance diagonal is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SqMode {
    /// Per-realization diagonal: expectation over symbols and noises only,
    /// conditioned on the drawn channel and impairments (default).
    Conditional,
    /// Channel-marginalized diagonal `zeta + sigma_rf_sq + sigma_sq`, with
    /// the mean received power `zeta` supplied by the caller.
    Marginal { zeta: f64 },
}

/// Which route produced a rate report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    Mc,
    Closed,
    Limit,
}

impl std::fmt::Display for RateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateMethod::Mc => "mc",
            RateMethod::Closed => "closed",
            RateMethod::Limit => "limit",
        })
    }
}

/// Per-user rates (bits/s/Hz) plus their sum, tagged with the method.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub per_user: Vec<f64>,
    pub sum_rate: f64,
    pub method: RateMethod,
    /// Standard error of each per-user mean; only present for Monte Carlo.
    pub mc_stderr: Option<Vec<f64>>,
}

impl RateReport {
    pub fn new(per_user: Vec<f64>, method: RateMethod, mc_stderr: Option<Vec<f64>>) -> Self {
        let sum_rate = pairwise_sum(&per_user);
        RateReport {
            per_user,
            sum_rate,
            method,
            mc_stderr,
        }
    }

    pub fn has_nan(&self) -> bool {
        self.per_user.iter().any(|x| x.is_nan()) || self.sum_rate.is_nan()
    }
}

/// Signal, interference and noise powers of one realization, all in watts.
#[derive(Debug, Clone)]
pub struct InstantaneousTerms {
    /// `p_k tau^2 |v_k^H u_k|^2` per user.
    pub desired: Vec<f64>,
    /// `interference[k][i] = p_i tau^2 |v_k^H u_i|^2` for `i != k`, 0 on the
    /// diagonal.
    pub interference: Vec<Vec<f64>>,
    pub distortion_noise: Vec<f64>,
    pub awgn: Vec<f64>,
    pub quantization_noise: Vec<f64>,
}

/// Evaluate the instantaneous SINR of every user for one realization and one
/// impairment draw.
pub fn instantaneous_sinr(
    realization: &ChannelRealization,
    theta_noise: &[Complex64],
    chi: &[Complex64],
    phi: &[Complex64],
    sc: &ScenarioConfig,
    sq_mode: SqMode,
) -> Result<(InstantaneousTerms, Vec<f64>)> {
    let (n, k) = realization.h.dim();
    let (m, n_g) = realization.g.dim();
    if n_g != n || theta_noise.len() != n || phi.len() != n || chi.len() != m || sc.k != k {
        return Err(Error::Dimension(format!(
            "instantaneous_sinr: H {n}x{k}, G {m}x{n_g}, theta {}, phi {}, chi {}, K {}",
            theta_noise.len(),
            phi.len(),
            chi.len(),
            sc.k
        )));
    }
    if phi.iter().any(|p| (p.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::Domain("phase-shift diagonal must be unit modulus".into()));
    }
    let tau = sc.derived.tau;
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Domain(format!("tau must lie in (0, 1], got {tau}")));
    }

    // Combiner columns v_k = G Phi h_k (no impairments).
    let mut h_phased = realization.h.clone();
    for i in 0..n {
        let s = phi[i];
        h_phased.row_mut(i).mapv_inplace(|v| v * s);
    }
    let combiner: Array2<Complex64> = realization.g.dot(&h_phased); // M x K

    // Impaired signal path u_i = chi G Phi Theta h_i.
    let effective = effective_matrix(realization, chi, theta_noise, phi); // M x K

    let sq = match sq_mode {
        SqMode::Conditional => sq_from_effective(
            &effective,
            &sc.tx_power,
            sc.hardware.sigma_rf_sq,
            sc.hardware.sigma_sq,
        ),
        SqMode::Marginal { zeta } => {
            vec![zeta + sc.hardware.sigma_rf_sq + sc.hardware.sigma_sq; m]
        }
    };

    let tau_sq = tau * tau;
    let mut desired = vec![0.0; k];
    let mut interference = vec![vec![0.0; k]; k];
    let mut dn = vec![0.0; k];
    let mut an = vec![0.0; k];
    let mut qn = vec![0.0; k];
    for kk in 0..k {
        let v_k = combiner.column(kk);
        for i in 0..k {
            let cross: Complex64 = v_k
                .iter()
                .zip(effective.column(i).iter())
                .map(|(v, u)| v.conj() * u)
                .sum();
            let pow = sc.tx_power[i] * tau_sq * cross.norm_sqr();
            if i == kk {
                desired[kk] = pow;
            } else {
                interference[kk][i] = pow;
            }
        }
        let combiner_norm_sq: f64 = v_k.iter().map(|v| v.norm_sqr()).sum();
        let base = tau_sq * combiner_norm_sq;
        dn[kk] = sc.hardware.sigma_rf_sq * base;
        an[kk] = sc.hardware.sigma_sq * base;
        qn[kk] = tau
            * (1.0 - tau)
            * v_k
                .iter()
                .zip(sq.iter())
                .map(|(v, &s)| s * v.norm_sqr())
                .sum::<f64>();
    }

    let sinr = (0..k)
        .map(|kk| {
            let denom = pairwise_sum(&interference[kk]) + dn[kk] + an[kk] + qn[kk];
            desired[kk] / denom
        })
        .collect();
    Ok((
        InstantaneousTerms {
            desired,
            interference,
            distortion_noise: dn,
            awgn: an,
            quantization_noise: qn,
        },
        sinr,
    ))
}

/// Average `log2(1 + SINR)` over `t` independent realizations. Each
/// realization redraws the channel scattering, the surface phase noise and
/// the RF-chain phases; geometry and the phase-shift vector stay fixed.
///
/// Realizations are keyed by their index, so the result is independent of
/// thread scheduling; the reduction is a fixed-order pairwise sum.
pub fn ergodic_rate_mc(
    sc: &ScenarioConfig,
    phases: &[f64],
    t: usize,
    sq_mode: SqMode,
) -> Result<RateReport> {
    if t == 0 {
        return Err(Error::Domain("need at least one realization".into()));
    }
    if phases.len() != sc.n {
        return Err(Error::Dimension(format!(
            "phase vector has {} entries, surface has {}",
            phases.len(),
            sc.n
        )));
    }
    let los = los_components(sc)?;
    let phi: Vec<Complex64> = phases
        .iter()
        .map(|&th| Complex64::from_polar(1.0, th))
        .collect();

    let samples: Vec<Vec<f64>> = (0..t as u64)
        .into_par_iter()
        .map(|idx| {
            let realization = sample_channels(sc, &los, idx);
            let mut pn_rng = stream(sc.seed, idx, rng::tag::PHASE_NOISE);
            let theta_noise = sample_phase_noise(sc.hardware.upsilon, sc.n, &mut pn_rng)?;
            let mut rf_rng = stream(sc.seed, idx, rng::tag::RF_PHASE);
            let chi = sample_rf_chains(sc.hardware.kappa, sc.hardware.eta, sc.m, &mut rf_rng)?;
            let (_, sinr) =
                instantaneous_sinr(&realization, &theta_noise, &chi, &phi, sc, sq_mode)?;
            Ok(sinr.iter().map(|s| (1.0 + s).log2()).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let tf = t as f64;
    let mut per_user = Vec::with_capacity(sc.k);
    let mut stderr = Vec::with_capacity(sc.k);
    let mut column = vec![0.0; t];
    for k in 0..sc.k {
        for (row, s) in samples.iter().zip(column.iter_mut()) {
            *s = row[k];
        }
        let mean = pairwise_sum(&column) / tf;
        let sq: Vec<f64> = column.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if t > 1 {
            pairwise_sum(&sq) / (tf - 1.0)
        } else {
            0.0
        };
        per_user.push(mean);
        stderr.push((var / tf).sqrt());
    }
    Ok(RateReport::new(per_user, RateMethod::Mc, Some(stderr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardware::HardwareProfile;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn scenario(m: usize, n: usize, k: usize, sigma_scale: f64) -> ScenarioConfig {
        let toml = format!(
            r#"
M = {m}
N = {n}
K = {k}
bs_pos = [0.0, 0.0, 25.0]
ris_pos = [5.0, 100.0, 30.0]
user_circle_radius = 5.0
spacing_ratio = 0.5
rician_delta = 1.0
rician_mu = 10.0
tx_power = 1.0
pathloss_exponent = 2.8
seed = 4242
mc_realizations = 100

[hardware]
upsilon = 20.0
kappa = 0.9
eta = 0.5235987755982988
sigma_rf_sq = 3.9810717055349695e-14
sigma_sq = {sigma}
b = 2
"#,
            sigma = 3.9810717055349695e-14 * sigma_scale,
        );
        ScenarioConfig::from_toml_str(&toml).unwrap()
    }

    fn random_phases(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, 0, rng::tag::PHASE_INIT);
        (0..n)
            .map(|_| rng.random_range(0.0..2.0 * std::f64::consts::PI))
            .collect()
    }

    fn draw_parts(
        sc: &ScenarioConfig,
        idx: u64,
    ) -> (ChannelRealization, Vec<Complex64>, Vec<Complex64>) {
        let los = los_components(sc).unwrap();
        let real = sample_channels(sc, &los, idx);
        let mut pn = stream(sc.seed, idx, rng::tag::PHASE_NOISE);
        let theta = sample_phase_noise(sc.hardware.upsilon, sc.n, &mut pn).unwrap();
        let mut rf = stream(sc.seed, idx, rng::tag::RF_PHASE);
        let chi = sample_rf_chains(sc.hardware.kappa, sc.hardware.eta, sc.m, &mut rf).unwrap();
        (real, theta, chi)
    }

    #[test]
    fn single_user_has_no_interference() {
        let sc = scenario(16, 16, 1, 1.0);
        let (real, theta, chi) = draw_parts(&sc, 0);
        let phi: Vec<Complex64> = random_phases(sc.n, 1)
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        let (terms, sinr) =
            instantaneous_sinr(&real, &theta, &chi, &phi, &sc, SqMode::Conditional).unwrap();
        assert_eq!(terms.interference[0][0], 0.0);
        let expect = terms.desired[0]
            / (terms.distortion_noise[0] + terms.awgn[0] + terms.quantization_noise[0]);
        assert_relative_eq!(sinr[0], expect, max_relative = 1e-12);
    }

    #[test]
    fn dead_rf_chains_zero_sinr() {
        let sc = scenario(16, 16, 2, 1.0);
        let sc = sc
            .with_hardware(HardwareProfile {
                kappa: 0.0,
                ..sc.hardware.clone()
            })
            .unwrap();
        let (real, theta, chi) = draw_parts(&sc, 0);
        let phi: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); sc.n];
        let (terms, sinr) =
            instantaneous_sinr(&real, &theta, &chi, &phi, &sc, SqMode::Conditional).unwrap();
        for k in 0..sc.k {
            assert_eq!(terms.desired[k], 0.0);
            assert!(terms.interference[k].iter().all(|&x| x == 0.0));
            assert_eq!(sinr[k], 0.0);
        }
    }

    #[test]
    fn scalar_chain_hand_check() {
        // M = N = K = 1: every quantity reduces to scalar algebra.
        let sc = scenario(1, 1, 1, 1.0);
        let (real, theta, chi) = draw_parts(&sc, 3);
        let phi = vec![Complex64::from_polar(1.0, 0.7)];
        let (terms, sinr) =
            instantaneous_sinr(&real, &theta, &chi, &phi, &sc, SqMode::Conditional).unwrap();
        let h = real.h[[0, 0]];
        let g = real.g[[0, 0]];
        let tau = sc.derived.tau;
        let v = g * phi[0] * h;
        let u = chi[0] * g * phi[0] * theta[0] * h;
        let desired = sc.tx_power[0] * tau * tau * (v.conj() * u).norm_sqr();
        assert_relative_eq!(terms.desired[0], desired, max_relative = 1e-12);
        let s_q = sc.tx_power[0] * u.norm_sqr() + sc.hardware.sigma_rf_sq + sc.hardware.sigma_sq;
        let qn = tau * (1.0 - tau) * s_q * v.norm_sqr();
        assert_relative_eq!(terms.quantization_noise[0], qn, max_relative = 1e-12);
        let dn = tau * tau * sc.hardware.sigma_rf_sq * v.norm_sqr();
        let an = tau * tau * sc.hardware.sigma_sq * v.norm_sqr();
        assert_relative_eq!(sinr[0], desired / (dn + an + qn), max_relative = 1e-12);
    }

    #[test]
    fn dn_an_ratio_is_noise_power_ratio() {
        let mut hw = scenario(16, 16, 3, 1.0).hardware.clone();
        hw.sigma_rf_sq = 2.5 * hw.sigma_sq;
        let sc = scenario(16, 16, 3, 1.0).with_hardware(hw).unwrap();
        let (real, theta, chi) = draw_parts(&sc, 1);
        let phi: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); sc.n];
        let (terms, _) =
            instantaneous_sinr(&real, &theta, &chi, &phi, &sc, SqMode::Conditional).unwrap();
        for k in 0..sc.k {
            assert_relative_eq!(
                terms.distortion_noise[k] / terms.awgn[k],
                sc.hardware.sigma_rf_sq / sc.hardware.sigma_sq,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn sinr_invariant_under_global_phase_rotation() {
        let sc = scenario(16, 16, 3, 1.0);
        let (real, theta, chi) = draw_parts(&sc, 2);
        let base = random_phases(sc.n, 5);
        let phi: Vec<Complex64> = base
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        let (_, sinr0) =
            instantaneous_sinr(&real, &theta, &chi, &phi, &sc, SqMode::Conditional).unwrap();
        let mut rng = stream(99, 0, 12345);
        for _ in 0..5 {
            let psi: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            let rotated: Vec<Complex64> = base
                .iter()
                .map(|&t| Complex64::from_polar(1.0, t + psi))
                .collect();
            let (_, sinr) =
                instantaneous_sinr(&real, &theta, &chi, &rotated, &sc, SqMode::Conditional)
                    .unwrap();
            for k in 0..sc.k {
                assert_relative_eq!(sinr[k], sinr0[k], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn more_awgn_strictly_lowers_sinr() {
        let sc_lo = scenario(16, 16, 3, 1.0);
        let sc_hi = scenario(16, 16, 3, 100.0);
        let (real, theta, chi) = draw_parts(&sc_lo, 4);
        let phi: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); sc_lo.n];
        let (_, lo) =
            instantaneous_sinr(&real, &theta, &chi, &phi, &sc_lo, SqMode::Conditional).unwrap();
        let (_, hi) =
            instantaneous_sinr(&real, &theta, &chi, &phi, &sc_hi, SqMode::Conditional).unwrap();
        for k in 0..sc_lo.k {
            assert!(hi[k] < lo[k]);
        }
    }

    #[test]
    fn single_realization_deterministic() {
        let sc = scenario(16, 16, 2, 1.0);
        let phases = random_phases(sc.n, 8);
        let a = ergodic_rate_mc(&sc, &phases, 1, SqMode::Conditional).unwrap();
        let b = ergodic_rate_mc(&sc, &phases, 1, SqMode::Conditional).unwrap();
        assert_eq!(a.per_user, b.per_user);
        assert_eq!(a.method, RateMethod::Mc);
        assert_eq!(a.mc_stderr.as_ref().unwrap(), &vec![0.0; sc.k]);
    }

    #[test]
    fn stderr_shrinks_with_realizations() {
        // Quadrupling the sample count should halve the standard error
        // (within a generous band, the draws differ).
        let sc = scenario(16, 16, 2, 1.0);
        let phases = random_phases(sc.n, 9);
        let small = ergodic_rate_mc(&sc, &phases, 500, SqMode::Conditional).unwrap();
        let large = ergodic_rate_mc(&sc, &phases, 2000, SqMode::Conditional).unwrap();
        for k in 0..sc.k {
            let ratio = small.mc_stderr.as_ref().unwrap()[k] / large.mc_stderr.as_ref().unwrap()[k];
            assert!(
                (ratio - 2.0).abs() < 0.4,
                "user {k}: stderr ratio {ratio} not ~2"
            );
        }
    }
}
