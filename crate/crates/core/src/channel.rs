//! Rician-fading channel construction.
//!
//! The user -> surface channels `h_k` and the surface -> BS channel `G` mix a
//! deterministic steering-vector line-of-sight part with i.i.d. complex
//! Gaussian scattering, weighted by the Rician factors:
//!
//! `h_k = sqrt(alpha_k) ( sqrt(mu_k/(mu_k+1)) hbar_k + sqrt(1/(mu_k+1)) htilde_k )`
//! `G   = sqrt(beta)    ( sqrt(delta/(delta+1)) Gbar  + sqrt(1/(delta+1)) Gtilde )`

use ndarray::Array2;
use num_complex::Complex64;

use crate::arrays::steering_vector;
use crate::error::Result;
use crate::rng::{self, complex_gaussian, stream};
use crate::scenario::ScenarioConfig;

/// Deterministic line-of-sight parts shared by all realizations of one
/// scenario: `hbar_k` columns (N x K) and the rank-one `Gbar` (M x N).
#[derive(Debug, Clone)]
pub struct LosComponents {
    pub h_bar: Array2<Complex64>,
    pub g_bar: Array2<Complex64>,
}

/// One draw of the fading state.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// N x K, columns are the user channels `h_k`.
    pub h: Array2<Complex64>,
    /// M x N surface -> BS channel.
    pub g: Array2<Complex64>,
    pub h_bar: Array2<Complex64>,
    pub g_bar: Array2<Complex64>,
    pub h_tilde: Array2<Complex64>,
    pub g_tilde: Array2<Complex64>,
    pub realization_index: u64,
}

/// Build the line-of-sight parts from the scenario angles:
/// `hbar_k` is the surface steering vector towards user k, and
/// `Gbar = a_M(BS arrival) a_N^H(surface departure)`.
pub fn los_components(sc: &ScenarioConfig) -> Result<LosComponents> {
    let a_m = steering_vector(sc.m, sc.angles.phi_r_a, sc.angles.phi_r_e, sc.spacing_ratio)?;
    let a_t = steering_vector(sc.n, sc.angles.phi_t_a, sc.angles.phi_t_e, sc.spacing_ratio)?;
    let mut h_bar = Array2::zeros((sc.n, sc.k));
    for k in 0..sc.k {
        let a_kr = steering_vector(
            sc.n,
            sc.angles.phi_kr_a[k],
            sc.angles.phi_kr_e[k],
            sc.spacing_ratio,
        )?;
        for (i, v) in a_kr.elements.iter().enumerate() {
            h_bar[[i, k]] = *v;
        }
    }
    let mut g_bar = Array2::zeros((sc.m, sc.n));
    for i in 0..sc.m {
        for j in 0..sc.n {
            g_bar[[i, j]] = a_m.elements[i] * a_t.elements[j].conj();
        }
    }
    Ok(LosComponents { h_bar, g_bar })
}

/// Draw realization `index` of the channels. The draw is a pure function of
/// `(scenario seed, index)`, so realizations can be generated concurrently.
pub fn sample_channels(
    sc: &ScenarioConfig,
    los: &LosComponents,
    index: u64,
) -> ChannelRealization {
    let mut rng_h = stream(sc.seed, index, rng::tag::CHANNEL_H);
    let mut rng_g = stream(sc.seed, index, rng::tag::CHANNEL_G);

    let mut h_tilde = Array2::zeros((sc.n, sc.k));
    for k in 0..sc.k {
        for i in 0..sc.n {
            h_tilde[[i, k]] = complex_gaussian(&mut rng_h);
        }
    }
    let mut g_tilde = Array2::zeros((sc.m, sc.n));
    for i in 0..sc.m {
        for j in 0..sc.n {
            g_tilde[[i, j]] = complex_gaussian(&mut rng_g);
        }
    }

    let mut h = Array2::zeros((sc.n, sc.k));
    for k in 0..sc.k {
        let mu = sc.rician_mu[k];
        let los_w = (sc.alpha[k] * mu / (mu + 1.0)).sqrt();
        let nlos_w = (sc.alpha[k] / (mu + 1.0)).sqrt();
        for i in 0..sc.n {
            h[[i, k]] = los_w * los.h_bar[[i, k]] + nlos_w * h_tilde[[i, k]];
        }
    }
    let delta = sc.rician_delta;
    let glos_w = (sc.beta * delta / (delta + 1.0)).sqrt();
    let gnlos_w = (sc.beta / (delta + 1.0)).sqrt();
    let mut g = Array2::zeros((sc.m, sc.n));
    for i in 0..sc.m {
        for j in 0..sc.n {
            g[[i, j]] = glos_w * los.g_bar[[i, j]] + gnlos_w * g_tilde[[i, j]];
        }
    }

    ChannelRealization {
        h,
        g,
        h_bar: los.h_bar.clone(),
        g_bar: los.g_bar.clone(),
        h_tilde,
        g_tilde,
        realization_index: index,
    }
}
