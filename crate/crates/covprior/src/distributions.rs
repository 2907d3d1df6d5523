//! Samplers and fully normalized log-densities for the base distributions
//! the covariance priors are built from, plus the reproducible RNG stream.
//!
//! Sampling of normal and gamma variates is delegated to `rand_distr`
//! (gamma via the Marsaglia–Tsang squeeze method with the shape < 1 boost);
//! everything matrix-variate is built here on the Bartlett decomposition.

use crate::error::{Error, Result};
use crate::matrix::{tri, SPDMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

const LN_PI: f64 = 1.1447298858494001741_f64;
const LN_2PI: f64 = 1.8378770664093454836_f64;

// ---------------------------------------------------------------------------
// RngStream
// ---------------------------------------------------------------------------

/// A splittable, counter-based random stream. Identical `(seed, stream_id)`
/// yield identical draw sequences across runs and platforms; distinct
/// stream ids give non-overlapping ChaCha streams, so parallel consumers
/// never share state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, stream_id: 0 }
    }

    /// Derives a child stream from a sequence of tag words. Children of
    /// distinct tag sequences are distinct regardless of the order in which
    /// they are created or consumed.
    pub fn substream(&self, words: &[u64]) -> RngStream {
        let mut s = self.stream_id;
        for &w in words {
            s = splitmix64(s ^ splitmix64(w));
        }
        RngStream {
            seed: self.seed,
            stream_id: s,
        }
    }

    /// Instantiates the generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }
}

// ---------------------------------------------------------------------------
// scalar samplers
// ---------------------------------------------------------------------------

pub fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma draw in the rate parameterization, mean `shape / rate`.
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if shape <= 0.0 || rate <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma requires shape > 0 and rate > 0, got {shape}, {rate}"
        )));
    }
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Domain(format!("gamma construction: {e}")))?;
    Ok(g.sample(rng))
}

/// χ²_k draw via gamma(k/2, rate 1/2); k may be non-integer.
pub fn sample_chi_square(k: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    sample_gamma(0.5 * k, 0.5, rng)
}

/// exp(N(b, ξ²)); the sample median is exp(b).
pub fn sample_lognormal(b: f64, xi: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if xi <= 0.0 {
        return Err(Error::Domain(format!("lognormal requires xi > 0, got {xi}")));
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok((b + xi * z).exp())
}

// ---------------------------------------------------------------------------
// scalar log-densities (fully normalized)
// ---------------------------------------------------------------------------

pub fn logpdf_gamma(x: f64, shape: f64, rate: f64) -> Result<f64> {
    if shape <= 0.0 || rate <= 0.0 || x <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma logpdf requires positive arguments, got x={x}, shape={shape}, rate={rate}"
        )));
    }
    Ok(shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x)
}

pub fn logpdf_lognormal(x: f64, b: f64, xi: f64) -> Result<f64> {
    if x <= 0.0 || xi <= 0.0 {
        return Err(Error::Domain(format!(
            "lognormal logpdf requires x > 0 and xi > 0, got x={x}, xi={xi}"
        )));
    }
    let z = (x.ln() - b) / xi;
    Ok(-x.ln() - xi.ln() - 0.5 * LN_2PI - 0.5 * z * z)
}

/// Scaled inverse chi-square inv-χ²(ν, s²):
/// p(x) = (ν/2)^{ν/2} / Γ(ν/2) · s^ν · x^{-(ν/2+1)} · exp(-ν s² / 2x).
pub fn logpdf_scaled_inv_chi2(x: f64, nu: f64, s2: f64) -> Result<f64> {
    if x <= 0.0 || nu <= 0.0 || s2 <= 0.0 {
        return Err(Error::Domain(format!(
            "scaled-inv-chi2 logpdf requires positive arguments, got x={x}, nu={nu}, s2={s2}"
        )));
    }
    let half_nu = 0.5 * nu;
    Ok(half_nu * half_nu.ln() - ln_gamma(half_nu) + half_nu * s2.ln()
        - (half_nu + 1.0) * x.ln()
        - nu * s2 / (2.0 * x))
}

/// Half-t density on x ≥ 0: 2·t_ν(x / scale) / scale.
pub fn logpdf_half_t(x: f64, nu: f64, scale: f64) -> Result<f64> {
    if x < 0.0 || nu <= 0.0 || scale <= 0.0 {
        return Err(Error::Domain(format!(
            "half-t logpdf requires x >= 0, nu > 0, scale > 0, got x={x}, nu={nu}, scale={scale}"
        )));
    }
    let z = x / scale;
    Ok(std::f64::consts::LN_2 + ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - scale.ln()
        - 0.5 * (nu + 1.0) * (1.0 + z * z / nu).ln())
}

/// Normalized marginal correlation density p(ρ) ∝ (1-ρ²)^exponent on (-1, 1).
/// The normalizer is √π·Γ(e+1)/Γ(e+3/2).
pub fn logpdf_corr_marginal(rho: f64, exponent: f64) -> Result<f64> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain(format!("correlation {rho} outside (-1, 1)")));
    }
    if exponent <= -1.0 {
        return Err(Error::Domain(format!(
            "correlation marginal exponent {exponent} is not integrable"
        )));
    }
    let log_norm = 0.5 * LN_PI + ln_gamma(exponent + 1.0) - ln_gamma(exponent + 1.5);
    Ok(exponent * (1.0 - rho * rho).ln() - log_norm)
}

/// log of the multivariate gamma function Γ_d(a).
pub fn ln_multigamma(d: usize, a: f64) -> f64 {
    let mut s = 0.25 * (d * (d - 1)) as f64 * LN_PI;
    for j in 1..=d {
        s += ln_gamma(a + 0.5 * (1.0 - j as f64));
    }
    s
}

// ---------------------------------------------------------------------------
// Wishart family
// ---------------------------------------------------------------------------

fn check_dof(nu: f64, d: usize) -> Result<()> {
    if !(nu > d as f64 - 1.0) {
        return Err(Error::InvalidDegreesOfFreedom { nu, d });
    }
    Ok(())
}

/// Wishart(ν, scale) draw via the Bartlett decomposition: A lower-triangular
/// with χ²_{ν-i} diagonal (0-based row i) and standard-normal strict lower
/// entries; the returned factor is L_scale·A.
pub fn sample_wishart(nu: f64, scale: &SPDMatrix, rng: &mut ChaCha8Rng) -> Result<SPDMatrix> {
    let d = scale.dim();
    check_dof(nu, d)?;
    let mut a = vec![0.0; crate::matrix::tri_len(d)];
    for i in 0..d {
        for j in 0..i {
            a[tri(i, j)] = sample_standard_normal(rng);
        }
        a[tri(i, i)] = sample_chi_square(nu - i as f64, rng)?.sqrt();
    }
    // chol(W) = L_scale · A, lower times lower
    let ls = scale.chol_packed();
    let mut chol = vec![0.0; crate::matrix::tri_len(d)];
    for i in 0..d {
        for j in 0..=i {
            let mut s = 0.0;
            for k in j..=i {
                s += ls[tri(i, k)] * a[tri(k, j)];
            }
            chol[tri(i, j)] = s;
        }
    }
    SPDMatrix::from_chol_packed(d, chol)
}

/// Inverse Wishart draw: the inverse of a Wishart(ν, Λ⁻¹) draw.
pub fn sample_inverse_wishart(
    nu: f64,
    lambda: &SPDMatrix,
    rng: &mut ChaCha8Rng,
) -> Result<SPDMatrix> {
    check_dof(nu, lambda.dim())?;
    let scale = lambda.inverse();
    let w = sample_wishart(nu, &scale, rng)?;
    Ok(w.inverse())
}

/// Fully normalized inverse Wishart log-density:
/// -(ν+d+1)/2·log|Σ| - tr(ΛΣ⁻¹)/2 + (ν/2)·log|Λ| - (νd/2)·log 2 - log Γ_d(ν/2).
pub fn logpdf_inverse_wishart(
    sigma_mat: &SPDMatrix,
    nu: f64,
    lambda: &SPDMatrix,
) -> Result<f64> {
    let d = sigma_mat.dim();
    if lambda.dim() != d {
        return Err(Error::Domain(format!(
            "lambda dim {} does not match sigma dim {d}",
            lambda.dim()
        )));
    }
    check_dof(nu, d)?;
    let sigma_inv = sigma_mat.inverse();
    let lam = lambda.to_dense();
    let sinv = sigma_inv.to_dense();
    let trace: f64 = (0..d * d).map(|k| lam[k] * sinv[k]).sum();
    Ok(-0.5 * (nu + d as f64 + 1.0) * sigma_mat.log_det() - 0.5 * trace
        + 0.5 * nu * lambda.log_det()
        - 0.5 * nu * d as f64 * std::f64::consts::LN_2
        - ln_multigamma(d, 0.5 * nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_determinism() {
        let s = RngStream::new(7).substream(&[3, 9]);
        let mut a = s.rng();
        let mut b = s.rng();
        for _ in 0..10 {
            assert_eq!(sample_standard_normal(&mut a), sample_standard_normal(&mut b));
        }
    }

    #[test]
    fn substreams_differ_and_commute_not() {
        let root = RngStream::new(1);
        assert_ne!(root.substream(&[1, 2]), root.substream(&[2, 1]));
        assert_ne!(root.substream(&[1]), root.substream(&[2]));
    }

    #[test]
    fn lognormal_analytic_point() {
        // at x = 1, b = 0, xi = 1 the density is exp(-log(2π)/2)
        let lp = logpdf_lognormal(1.0, 0.0, 1.0).unwrap();
        assert!((lp + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(logpdf_gamma(-1.0, 1.0, 1.0).is_err());
        assert!(logpdf_gamma(1.0, 0.0, 1.0).is_err());
        assert!(sample_gamma(1.0, -1.0, &mut RngStream::new(0).rng()).is_err());
    }

    #[test]
    fn corr_marginal_uniform_case() {
        // exponent 0 is the uniform density on (-1, 1)
        for rho in [-0.9, 0.0, 0.7] {
            let lp = logpdf_corr_marginal(rho, 0.0).unwrap();
            assert!((lp - (-std::f64::consts::LN_2)).abs() < 1e-14);
        }
    }

    #[test]
    fn corr_marginal_exponent_one_at_zero() {
        // p(0) = 3/4 when the exponent is 1
        let lp = logpdf_corr_marginal(0.0, 1.0).unwrap();
        assert!((lp - (0.75f64).ln()).abs() < 1e-13, "{lp}");
    }

    #[test]
    fn half_t_limits_to_half_normal_at_zero() {
        // large ν at x=0 approaches 2/(scale·sqrt(2π))
        let scale = 1.3;
        let lp = logpdf_half_t(0.0, 1e7, scale).unwrap();
        let expected = (2.0 / (scale * (2.0 * std::f64::consts::PI).sqrt())).ln();
        assert!((lp - expected).abs() < 1e-6, "{lp} vs {expected}");
    }

    #[test]
    fn scaled_inv_chi2_matches_inverse_wishart_d1() {
        // d=1: IW(ν, λ) is inv-χ²(ν, λ/ν)
        let nu = 3.0;
        let lambda = 1.7;
        for x in [0.3, 1.0, 2.5] {
            let m = SPDMatrix::from_dense(&[x], 1).unwrap();
            let lam = SPDMatrix::from_dense(&[lambda], 1).unwrap();
            let a = logpdf_inverse_wishart(&m, nu, &lam).unwrap();
            let b = logpdf_scaled_inv_chi2(x, nu, lambda / nu).unwrap();
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn wishart_rejects_small_dof() {
        let scale = SPDMatrix::identity(3);
        let err = sample_wishart(1.5, &scale, &mut RngStream::new(0).rng()).unwrap_err();
        assert!(matches!(err, Error::InvalidDegreesOfFreedom { .. }));
    }

    #[test]
    fn fixed_seed_reproduces_wishart_draw() {
        let scale = SPDMatrix::identity(2);
        let d1 = sample_wishart(7.0, &scale, &mut RngStream::new(42).rng()).unwrap();
        let d2 = sample_wishart(7.0, &scale, &mut RngStream::new(42).rng()).unwrap();
        assert_eq!(d1.chol_packed(), d2.chol_packed());
    }
}
