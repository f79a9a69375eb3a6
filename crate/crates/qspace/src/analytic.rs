//! Exact and quadrature reference values.
//!
//! The two-coordinate swap under isotropic Gaussian noise admits an exact
//! consistency bias, a one-dimensional integral over the radial Gaussian
//! density weighted by an angular folding kernel. This module evaluates it to
//! certified accuracy, together with the rotation-action references (the chi
//! mean and the radial Monte Carlo bias), so the estimators elsewhere in the
//! crate can be checked against independent routes.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::estimators::EstimateWithCI;
use crate::quad;
use crate::stream::{map_chunks, SampleStream, Welford};

/// Tolerances for the exact-bias quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub absolute_tol: f64,
    pub relative_tol: f64,
    /// Upper integration limit; `None` means `d/s + 9`, where the certified
    /// Gaussian tail bound is far below `absolute_tol`.
    pub truncation_radius: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            absolute_tol: 1e-12,
            relative_tol: 1e-10,
            truncation_radius: None,
        }
    }
}

/// Quadrature value with its certified error budget (rule estimate plus the
/// analytic tail remainder).
#[derive(Debug, Clone, Copy)]
pub struct BiasQuadrature {
    pub value: f64,
    pub error_bound: f64,
}

/// Angular folding kernel `sin(arccos x) - x arccos x` on `[0, 1]`.
///
/// Decreases from 1 at `x = 0` to 0 at `x = 1`; it weighs how much of the
/// rotated mass at relative offset `x` survives the fold.
pub fn fold_kernel(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "fold kernel argument must lie in [0, 1], got {x}"
        )));
    }
    Ok((1.0 - x * x).max(0.0).sqrt() - x * x.acos())
}

/// Exact consistency bias of the two-coordinate swap with `N(t0, s^2 Id_2)`
/// noise, as a function of `d = dist(t0, diagonal)` and `s`:
///
/// `s (2/pi) Int_{d/s}^inf r^2 exp(-r^2/2) k(d/(r s)) dr`,
///
/// with `k` the [`fold_kernel`].
pub fn swap_gaussian_bias(d: f64, s: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(swap_gaussian_bias_detailed(d, s, spec)?.value)
}

/// As [`swap_gaussian_bias`], also reporting the certified error bound.
pub fn swap_gaussian_bias_detailed(
    d: f64,
    s: f64,
    spec: &QuadratureSpec,
) -> Result<BiasQuadrature> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "distance to the fixed line must be non-negative, got {d}"
        )));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise scale must be positive, got {s}"
        )));
    }
    if !(spec.absolute_tol > 0.0) || !(spec.relative_tol > 0.0) {
        return Err(Error::InvalidArgument(
            "quadrature tolerances must be positive".into(),
        ));
    }
    let lower = d / s;
    let mut upper = spec.truncation_radius.unwrap_or(lower + 9.0);
    if upper <= lower {
        return Err(Error::InvalidArgument(
            "truncation radius must exceed d/s".into(),
        ));
    }
    let prefactor = s * std::f64::consts::FRAC_2_PI;
    // Tail of the integrand is bounded by r^2 exp(-r^2/2) (kernel <= 1), whose
    // integral beyond R is below (R + 1/R) exp(-R^2/2). Extend R until the
    // certified remainder is negligible against the absolute tolerance.
    let mut tail = prefactor * tail_bound(upper);
    while tail > 0.1 * spec.absolute_tol && upper < lower + 40.0 {
        upper += 2.0;
        tail = prefactor * tail_bound(upper);
    }
    let integrand = |r: f64| {
        let ratio = (d / (r * s)).clamp(0.0, 1.0);
        let kernel = (1.0 - ratio * ratio).max(0.0).sqrt() - ratio * ratio.acos();
        r * r * (-0.5 * r * r).exp() * kernel
    };
    let rule = quad::integrate(
        integrand,
        lower,
        upper,
        spec.absolute_tol / prefactor.max(f64::MIN_POSITIVE),
        spec.relative_tol,
    );
    Ok(BiasQuadrature {
        value: prefactor * rule.value,
        error_bound: prefactor * rule.error + tail,
    })
}

fn tail_bound(radius: f64) -> f64 {
    (radius + 1.0 / radius) * (-0.5 * radius * radius).exp()
}

/// Mean of the chi distribution with `n` degrees of freedom,
/// `sqrt(2) Gamma((n+1)/2) / Gamma(n/2)`, evaluated through log-gamma.
///
/// This is the large-noise limit of (consistency bias / per-coordinate scale)
/// for the rotation action on `R^n`; its ratio to `sqrt(n)` tends to 1.
pub fn chi_mean(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "rotation references need dimension >= 2, got {n}"
        )));
    }
    let half = n as f64 / 2.0;
    Ok(std::f64::consts::SQRT_2 * (ln_gamma(half + 0.5) - ln_gamma(half)).exp())
}

/// Consistency bias of the rotation action on `R^n` with `N(t0, s^2 Id)`
/// noise: `E|X| - |t0|`, estimated by radial Monte Carlo.
///
/// The quotient variance depends only on `|m|` and is minimised at
/// `|m| = E|X|`, so the norm distribution carries the whole answer:
/// `|X|^2 = (|t0| + s z)^2 + s^2 q` with `z` standard normal and `q` a
/// chi-square with `n - 1` degrees of freedom.
pub fn rotation_bias(
    n: usize,
    t0_norm: f64,
    s: f64,
    n_mc: usize,
    stream: &SampleStream,
) -> Result<EstimateWithCI> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "rotation references need dimension >= 2, got {n}"
        )));
    }
    if !(t0_norm > 0.0) || !(s >= 0.0) {
        return Err(Error::InvalidArgument(
            "rotation bias needs |t0| > 0 and s >= 0".into(),
        ));
    }
    if s == 0.0 {
        return Ok(EstimateWithCI {
            value: 0.0,
            stderr: 0.0,
            n_samples: n_mc,
        });
    }
    if n_mc < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let chi_sq = ChiSquared::new((n - 1) as f64)
        .map_err(|e| Error::InvalidArgument(format!("chi-square setup: {e}")))?;
    let partials = map_chunks(stream, n_mc, |_, count, rng| {
        let mut w = Welford::default();
        for _ in 0..count {
            let z: f64 = rng.sample(StandardNormal);
            let q: f64 = chi_sq.sample(rng);
            let radial = t0_norm + s * z;
            w.push((radial * radial + s * s * q).sqrt());
        }
        w
    });
    let mut total = Welford::default();
    for w in partials {
        total.merge(w);
    }
    Ok(EstimateWithCI {
        value: total.mean() - t0_norm,
        stderr: total.stderr(),
        n_samples: n_mc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

    #[test]
    fn fold_kernel_endpoints() {
        assert!((fold_kernel(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(fold_kernel(1.0).unwrap().abs() < 1e-15);
        // k(1/2) = sqrt(3)/2 - pi/6
        let expected = 3.0f64.sqrt() / 2.0 - std::f64::consts::PI / 6.0;
        assert!((fold_kernel(0.5).unwrap() - expected).abs() < 1e-15);
        assert!(fold_kernel(-0.1).is_err());
        assert!(fold_kernel(1.1).is_err());
    }

    #[test]
    fn fold_kernel_decreasing_and_nonnegative() {
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let v = fold_kernel(x).unwrap();
            assert!(v >= -1e-15);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn fixed_point_case_is_linear() {
        let spec = QuadratureSpec::default();
        for &s in &[0.1, 1.0, 10.0] {
            let v = swap_gaussian_bias(0.0, s, &spec).unwrap();
            assert!(
                (v / s - SQRT_2_OVER_PI).abs() < 1e-10,
                "s={s}: {}",
                v / s
            );
        }
    }

    #[test]
    fn small_noise_vanishes_fast() {
        let spec = QuadratureSpec::default();
        assert!(swap_gaussian_bias(1.0, 0.2, &spec).unwrap() < 1e-5);
        assert!(swap_gaussian_bias(1.0, 0.1, &spec).unwrap() < 1e-15);
    }

    #[test]
    fn error_budget_is_honest() {
        let spec = QuadratureSpec::default();
        let detailed = swap_gaussian_bias_detailed(1.0, 1.0, &spec).unwrap();
        // halving tolerances moves the value by less than 10x the budget
        let tighter = QuadratureSpec {
            absolute_tol: spec.absolute_tol / 2.0,
            relative_tol: spec.relative_tol / 2.0,
            truncation_radius: None,
        };
        let refined = swap_gaussian_bias_detailed(1.0, 1.0, &tighter).unwrap();
        let budget = detailed
            .error_bound
            .max(spec.absolute_tol.max(spec.relative_tol * detailed.value.abs()));
        assert!((detailed.value - refined.value).abs() < 10.0 * budget);
    }

    #[test]
    fn monotone_in_s_and_d() {
        let spec = QuadratureSpec::default();
        let mut prev = 0.0;
        for &s in &[0.5, 1.0, 2.0, 4.0] {
            let v = swap_gaussian_bias(1.0, s, &spec).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for &d in &[0.0, 0.5, 1.0, 2.0, 4.0] {
            let v = swap_gaussian_bias(d, 1.0, &spec).unwrap();
            assert!(v < prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn chi_mean_values() {
        // n = 2: sqrt(2) Gamma(1.5) / Gamma(1) = sqrt(pi/2)
        assert!((chi_mean(2).unwrap() - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
        // n = 100 is close to sqrt(n)
        let v = chi_mean(100).unwrap();
        assert!((v - 9.975).abs() < 1e-3, "{v}");
        // ratio to sqrt(n) tends to one
        let big = chi_mean(10_000).unwrap();
        assert!((big / 100.0 - 1.0).abs() < 1e-4);
        assert!(chi_mean(1).is_err());
    }

    #[test]
    fn rotation_bias_zero_noise() {
        let stream = SampleStream::new(5);
        let est = rotation_bias(3, 1.0, 0.0, 100, &stream).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn rotation_bias_matches_chi_mean_at_large_noise() {
        let stream = SampleStream::new(17);
        let s = 1000.0;
        for &n in &[2usize, 10] {
            let est = rotation_bias(n, 1.0, s, 200_000, &stream).unwrap();
            let limit = chi_mean(n).unwrap();
            let ratio = est.value / s / limit;
            assert!((ratio - 1.0).abs() < 0.01, "n={n}: ratio {ratio}");
        }
    }
}
