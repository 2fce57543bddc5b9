//! The cross-domain energy and its gradients with respect to the estimate.
//!
//! The unary term lives in k-space: squared complex residual between the
//! estimate's spectrum and the acquired coefficients, summed over sampled
//! bins. The pairwise term lives in the spatial domain: over each active
//! clique `(i, j)` the penalty `1 - f(y_i, y_j)` with
//!
//! ```text
//! f(y_i, y_j) = exp(-(y_i - y_j)^2 * (x_i - x_j)^2 / (3 sigma^2))
//! ```
//!
//! where `x` is the spatial representation of the observations (the
//! zero-filled image, fixed throughout inference). `f` is 1 when neighbors
//! agree, so the penalty form gives smoothing while keeping the feature
//! function intact. Both gradients are closed-form; the unary one is
//! `2 Re{ F^-1( mask . (F(Y) - X) ) }`, exact because the transforms are
//! unitary.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::CliqueSet;
use crate::transform::{dft2_forward, ifft2_centered_complex, Image, KSpace, SamplingMask};

/// Weights of the two potentials plus the pairwise kernel scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Unary (k-space fidelity) weight, >= 0.
    pub lambda_u: f64,
    /// Pairwise (spatial smoothness) weight, >= 0.
    pub lambda_p: f64,
    /// Pairwise kernel scale, > 0.
    pub sigma: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams { lambda_u: 1.0, lambda_p: 1.2, sigma: 0.08 }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_u >= 0.0) || !self.lambda_u.is_finite() {
            return Err(Error::Parameter(format!("lambda_u = {} must be >= 0", self.lambda_u)));
        }
        if !(self.lambda_p >= 0.0) || !self.lambda_p.is_finite() {
            return Err(Error::Parameter(format!("lambda_p = {} must be >= 0", self.lambda_p)));
        }
        if self.lambda_u + self.lambda_p <= 0.0 {
            return Err(Error::Parameter("lambda_u + lambda_p must be > 0".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Parameter(format!("sigma = {} must be > 0", self.sigma)));
        }
        Ok(())
    }
}

/// One energy evaluation, split by term. `total` is exactly
/// `lambda_u * unary + lambda_p * pairwise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub unary: f64,
    pub pairwise: f64,
    pub total: f64,
}

fn check_unary_dims(y: &Image, x: &KSpace, mask: &SamplingMask) -> Result<()> {
    if y.width() != x.width()
        || y.height() != x.height()
        || y.width() != mask.width()
        || y.height() != mask.height()
    {
        return Err(Error::Dimension(format!(
            "image {}x{}, k-space {}x{}, mask {}x{} must agree",
            y.width(),
            y.height(),
            x.width(),
            x.height(),
            mask.width(),
            mask.height()
        )));
    }
    Ok(())
}

fn check_pairwise_dims(y: &Image, obs_spatial: &Image, cliques: &CliqueSet) -> Result<()> {
    if y.width() != obs_spatial.width() || y.height() != obs_spatial.height() {
        return Err(Error::Dimension(format!(
            "estimate {}x{} vs observation image {}x{}",
            y.width(),
            y.height(),
            obs_spatial.width(),
            obs_spatial.height()
        )));
    }
    if cliques.width() != y.width() || cliques.height() != y.height() {
        return Err(Error::Dimension(format!(
            "clique set over {}x{} vs image {}x{}",
            cliques.width(),
            cliques.height(),
            y.width(),
            y.height()
        )));
    }
    Ok(())
}

/// Sum over kept bins of `|F(Y) - X|^2`. Zero exactly when the estimate's
/// spectrum matches the observations on every kept bin.
pub fn unary_energy(y: &Image, x: &KSpace, mask: &SamplingMask) -> Result<f64> {
    check_unary_dims(y, x, mask)?;
    let fy = dft2_forward(y);
    let mut sum = 0.0;
    for ((&f, &o), &keep) in fy.as_slice().iter().zip(x.as_slice()).zip(mask.as_slice()) {
        if keep {
            sum += (f - o).norm_sqr();
        }
    }
    Ok(sum)
}

/// Analytic gradient of [`unary_energy`]: `2 Re{ F^-1( mask . (F(Y) - X) ) }`.
pub fn unary_gradient(y: &Image, x: &KSpace, mask: &SamplingMask) -> Result<Image> {
    check_unary_dims(y, x, mask)?;
    let fy = dft2_forward(y);
    let resid: Vec<Complex64> = fy
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .zip(mask.as_slice())
        .map(|((&f, &o), &keep)| if keep { f - o } else { Complex64::new(0.0, 0.0) })
        .collect();
    let ks = KSpace::from_vec_unchecked(y.width(), y.height(), resid);
    let field = ifft2_centered_complex(&ks);
    let grad: Vec<f64> = field.iter().map(|c| 2.0 * c.re).collect();
    Ok(Image::from_vec_unchecked(y.width(), y.height(), grad))
}

#[inline]
fn pair_feature(dy: f64, dx_obs: f64, inv_3s2: f64) -> f64 {
    (-(dy * dy) * (dx_obs * dx_obs) * inv_3s2).exp()
}

/// Sum over active pairs of `1 - f(y_i, y_j)`; bounded by the pair count.
pub fn pairwise_energy(
    y: &Image,
    obs_spatial: &Image,
    cliques: &CliqueSet,
    sigma: f64,
) -> Result<f64> {
    check_pairwise_dims(y, obs_spatial, cliques)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("sigma = {sigma} must be > 0")));
    }
    let inv_3s2 = 1.0 / (3.0 * sigma * sigma);
    let yv = y.as_slice();
    let xv = obs_spatial.as_slice();
    let mut sum = 0.0;
    for i in 0..cliques.num_nodes() {
        for &j in cliques.neighbors_of(i) {
            let j = j as usize;
            if j <= i {
                continue;
            }
            sum += 1.0 - pair_feature(yv[i] - yv[j], xv[i] - xv[j], inv_3s2);
        }
    }
    Ok(sum)
}

/// Analytic gradient of [`pairwise_energy`]. Pixel `i` accumulates
/// `f * 2 (y_i - y_j) (x_i - x_j)^2 / (3 sigma^2)` over its cliques; the
/// pair `(i, j)` contributes equal and opposite terms to its two ends.
pub fn pairwise_gradient(
    y: &Image,
    obs_spatial: &Image,
    cliques: &CliqueSet,
    sigma: f64,
) -> Result<Image> {
    check_pairwise_dims(y, obs_spatial, cliques)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("sigma = {sigma} must be > 0")));
    }
    let inv_3s2 = 1.0 / (3.0 * sigma * sigma);
    let yv = y.as_slice();
    let xv = obs_spatial.as_slice();
    let mut grad = vec![0.0; yv.len()];
    for i in 0..cliques.num_nodes() {
        for &j in cliques.neighbors_of(i) {
            let j = j as usize;
            if j <= i {
                continue;
            }
            let dy = yv[i] - yv[j];
            let dx = xv[i] - xv[j];
            let f = pair_feature(dy, dx, inv_3s2);
            let term = f * 2.0 * dy * dx * dx * inv_3s2;
            grad[i] += term;
            grad[j] -= term;
        }
    }
    Ok(Image::from_vec_unchecked(y.width(), y.height(), grad))
}

/// Weighted sum of both terms.
pub fn total_energy(
    y: &Image,
    x: &KSpace,
    mask: &SamplingMask,
    obs_spatial: &Image,
    cliques: &CliqueSet,
    params: &EnergyParams,
) -> Result<EnergyBreakdown> {
    params.validate()?;
    let unary = unary_energy(y, x, mask)?;
    let pairwise = pairwise_energy(y, obs_spatial, cliques, params.sigma)?;
    Ok(EnergyBreakdown {
        unary,
        pairwise,
        total: params.lambda_u * unary + params.lambda_p * pairwise,
    })
}

/// Gradient of the weighted total:
/// `lambda_u * unary_gradient + lambda_p * pairwise_gradient`.
pub fn total_gradient(
    y: &Image,
    x: &KSpace,
    mask: &SamplingMask,
    obs_spatial: &Image,
    cliques: &CliqueSet,
    params: &EnergyParams,
) -> Result<Image> {
    params.validate()?;
    let gu = unary_gradient(y, x, mask)?;
    let gp = pairwise_gradient(y, obs_spatial, cliques, params.sigma)?;
    let data: Vec<f64> = gu
        .as_slice()
        .iter()
        .zip(gp.as_slice())
        .map(|(&u, &p)| params.lambda_u * u + params.lambda_p * p)
        .collect();
    Ok(Image::from_vec_unchecked(y.width(), y.height(), data))
}
