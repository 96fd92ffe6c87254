//! Steering vectors for uniform square planar arrays and the per-user
//! surface gain scalars.
//!
//! Element `i` (0-based internally) of an `X`-element square array sits at
//! grid position `x_i = i mod sqrt(X)`, `y_i = floor(i / sqrt(X))` and
//! responds with phase `2 pi (d/lambda) (x_i sin(phi1) sin(phi2) + y_i
//! cos(phi2))`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Array response of a uniform square planar array for one direction.
#[derive(Debug, Clone)]
pub struct SteeringVector {
    pub elements: Vec<Complex64>,
    pub phi1: f64,
    pub phi2: f64,
    pub spacing_ratio: f64,
}

pub(crate) fn integer_sqrt(x: usize) -> Option<usize> {
    let r = (x as f64).sqrt().round() as usize;
    (r * r == x).then_some(r)
}

/// Build the steering vector of an `x_count`-element square array
/// (`x_count` must be a perfect square). The first element is always 1.
pub fn steering_vector(
    x_count: usize,
    phi1: f64,
    phi2: f64,
    spacing_ratio: f64,
) -> Result<SteeringVector> {
    let root = integer_sqrt(x_count).ok_or_else(|| {
        Error::Domain(format!("array size {x_count} is not a perfect square"))
    })?;
    if !(phi1.is_finite() && phi2.is_finite() && spacing_ratio.is_finite()) {
        return Err(Error::Domain("steering angles must be finite".into()));
    }
    let s = phi1.sin() * phi2.sin();
    let t = phi2.cos();
    let twopi_d = 2.0 * std::f64::consts::PI * spacing_ratio;
    let elements = (0..x_count)
        .map(|i| {
            let x = (i % root) as f64;
            let y = (i / root) as f64;
            Complex64::from_polar(1.0, twopi_d * (x * s + y * t))
        })
        .collect();
    Ok(SteeringVector {
        elements,
        phi1,
        phi2,
        spacing_ratio,
    })
}

/// `sinc(x) = sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        return 1.0;
    }
    let px = std::f64::consts::PI * x;
    px.sin() / px
}

/// Direct inner product `a^H b` of two same-size steering vectors.
pub fn steering_inner_product(a: &SteeringVector, b: &SteeringVector) -> Result<Complex64> {
    if a.elements.len() != b.elements.len() {
        return Err(Error::Dimension(format!(
            "steering vectors of length {} and {}",
            a.elements.len(),
            b.elements.len()
        )));
    }
    Ok(a.elements
        .iter()
        .zip(b.elements.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// One axis factor `sum_{x=0}^{root-1} e^{j 2 pi u x}` of the factored inner
/// product. Equals `sqrt(X) sinc(sqrt(X) u) / sinc(u) * e^{j pi (sqrt(X)-1) u}`,
/// with the removable singularity at integer `u` handled explicitly.
pub(crate) fn axis_geometric_sum(u: f64, root: usize) -> Complex64 {
    let r = root as f64;
    let p = u.round();
    let phase = Complex64::from_polar(1.0, std::f64::consts::PI * (r - 1.0) * u);
    if (u - p).abs() < 1e-9 {
        // sin-ratio limit at integer u: magnitude root, sign (-1)^{p (root-1)}.
        let sign = if ((p as i64).rem_euclid(2) * ((root as i64 - 1) % 2)) % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        return phase * sign * r;
    }
    let ratio = (std::f64::consts::PI * r * u).sin() / (std::f64::consts::PI * u).sin();
    phase * ratio
}

/// Factored closed form of `a^H b`: the double sum over the planar grid
/// separates into one geometric sum per axis.
pub fn steering_inner_product_closed(
    a: &SteeringVector,
    b: &SteeringVector,
) -> Result<Complex64> {
    let len = a.elements.len();
    if len != b.elements.len() {
        return Err(Error::Dimension(format!(
            "steering vectors of length {} and {}",
            len,
            b.elements.len()
        )));
    }
    if a.spacing_ratio != b.spacing_ratio {
        return Err(Error::Dimension(
            "steering vectors with different spacing ratios".into(),
        ));
    }
    let root = integer_sqrt(len)
        .ok_or_else(|| Error::Domain(format!("array size {len} is not a perfect square")))?;
    let s = b.phi1.sin() * b.phi2.sin() - a.phi1.sin() * a.phi2.sin();
    let t = b.phi2.cos() - a.phi2.cos();
    let d = a.spacing_ratio;
    Ok(axis_geometric_sum(d * s, root) * axis_geometric_sum(d * t, root))
}

/// Per-user gain of the phase-shifted surface.
#[derive(Debug, Clone)]
pub struct RisGain {
    /// `f_k = sum_n f_{k,n}`.
    pub total: Complex64,
    /// `f_{k,n} = conj(a_n(towards BS)) e^{j theta_n} a_n(from user)`,
    /// unit modulus each.
    pub per_element: Vec<Complex64>,
}

/// Surface gain for phase shifts `theta` between the departure steering
/// vector `a_t` (surface towards BS) and the arrival steering vector `a_kr`
/// (user towards surface). `|total| <= N` with equality when the shifts
/// align the surface to this user.
pub fn ris_gain(theta: &[f64], a_t: &SteeringVector, a_kr: &SteeringVector) -> Result<RisGain> {
    let n = theta.len();
    if a_t.elements.len() != n || a_kr.elements.len() != n {
        return Err(Error::Dimension(format!(
            "ris_gain: theta has {n} entries, steering vectors {} and {}",
            a_t.elements.len(),
            a_kr.elements.len()
        )));
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("phase shifts must be finite".into()));
    }
    let per_element: Vec<Complex64> = (0..n)
        .map(|i| a_t.elements[i].conj() * Complex64::from_polar(1.0, theta[i]) * a_kr.elements[i])
        .collect();
    let total = per_element.iter().sum();
    Ok(RisGain { total, per_element })
}
