//! Experiment pipelines: one function per harness table row, combining the
//! estimators, the bound calculators, and the exact references.

use serde::Serialize;

use crate::action::ActionSpec;
use crate::analytic::{chi_mean, rotation_bias, swap_gaussian_bias, QuadratureSpec};
use crate::bounds::{
    asymptotic_slope, gaussian_upper_bound, general_upper_bound, lower_bound_delta,
    lower_bound_delta_star, BiasReport, BoundInputs,
};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_a_star, estimate_nu, mc_fold_probability, mc_gradient_at, mc_quotient_variance,
    measure_bias, EstimateWithCI,
};
use crate::noise::NoiseSpec;
use crate::point::{dist_sq, dot, Point};
use crate::stream::{map_chunks, SampleStream, Welford};

// substream tags, one per independent estimate inside a pipeline
const TAG_MEASURE: u64 = 1;
const TAG_BOUND_INPUTS: u64 = 2;
const TAG_NU_TEMPLATE: u64 = 3;
const TAG_FOLD: u64 = 4;
const TAG_NU_SHIFTED: u64 = 5;

/// One row of a bias sweep, with the minimiser that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct BiasSweepPoint {
    pub report: BiasReport,
    pub estimate: Point,
}

fn mean_norm_x(noise: &NoiseSpec, t0: &Point, n: usize, stream: &SampleStream) -> Welford {
    let dim = noise.dim();
    let mut total = Welford::default();
    for w in map_chunks(stream, n, |_, count, rng| {
        let mut eps = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            noise.sample_into(rng, &mut eps);
            let mut acc = 0.0;
            for (&ti, &ei) in t0.coords().iter().zip(&eps) {
                let v = ti + ei;
                acc += v * v;
            }
            w.push(acc.sqrt());
        }
        w
    }) {
        total.merge(w);
    }
    total
}

/// Runs the full pipeline for one `(action, template, noise scale)` point:
/// measured bias, both lower bounds, the applicable upper bounds, the exact
/// value when one exists, plus the fold probability, `a_star` and `nu`
/// diagnostics.
#[allow(clippy::too_many_arguments)]
pub fn bias_report_point(
    action: &ActionSpec,
    base_noise: &NoiseSpec,
    scale: f64,
    t0: &Point,
    n_samples: usize,
    restarts: usize,
    fold_tol: f64,
    stream: &SampleStream,
) -> Result<BiasSweepPoint> {
    if t0.norm() == 0.0 {
        return Err(Error::ZeroTemplate);
    }
    let noise = base_noise.scaled(scale)?;
    let (noise_unit, sigma) = noise.normalize_to_unit_energy()?;

    let measure = measure_bias(
        action,
        &noise,
        t0,
        n_samples,
        restarts,
        &stream.derive(TAG_MEASURE),
    )?;

    // bound inputs share one substream (common random numbers)
    let bound_stream = stream.derive(TAG_BOUND_INPUTS);
    let a_star = estimate_a_star(action, &noise, t0, n_samples, &bound_stream)?;
    let norm_x = mean_norm_x(&noise, t0, n_samples, &bound_stream);

    let nu_t0 = estimate_nu(
        action,
        &noise_unit,
        t0,
        n_samples,
        &stream.derive(TAG_NU_TEMPLATE),
    )?;
    let fold = mc_fold_probability(
        action,
        &noise,
        t0,
        n_samples,
        &stream.derive(TAG_FOLD),
        fold_tol,
    )?;

    let cs_envelope = (t0.norm() * t0.norm() + sigma * sigma).sqrt();
    let inputs = BoundInputs {
        norm_t0: t0.norm(),
        expected_norm_x: norm_x.mean().min(cs_envelope),
        sigma,
        a_star: a_star.value.max(1.0),
        nu: nu_t0.value.clamp(0.0, 1.0),
        group_cardinality: action.group_size(),
        dist_t0_fixed: action.dist_to_fixed(t0)?,
        per_coordinate_scale: noise.gaussian_scale(),
        dim: Some(action.ambient_dim()),
    };
    let lower_delta = lower_bound_delta(&inputs)?;
    let lower_delta_star = lower_bound_delta_star(&inputs)?;

    // Prop-4.7-style upper bound, evaluated at the max-max estimate in place
    // of the unknown minimiser (reported as such by the harness docs).
    let m0 = action.fixed_point_projection(t0)?;
    let shifted = measure.estimate.sub(&m0);
    let upper_general = if shifted.norm() > 1e-12 * (1.0 + measure.estimate.norm()) {
        let nu_shift = estimate_nu(
            action,
            &noise_unit,
            &shifted,
            n_samples,
            &stream.derive(TAG_NU_SHIFTED),
        )?;
        Some(
            general_upper_bound(sigma, nu_shift.value.clamp(0.0, 1.0), inputs.dist_t0_fixed)?
                .bound,
        )
    } else {
        None
    };

    let upper_gaussian = match (noise.gaussian_scale(), action.group_size()) {
        (Some(s), Some(size)) if size >= 2 => Some(gaussian_upper_bound(s, size)?),
        _ => None,
    };

    let analytic_exact = match (action, noise.gaussian_scale()) {
        (ActionSpec::SwapR2, Some(s)) => Some(swap_gaussian_bias(
            action.dist_to_fixed(t0)?,
            s,
            &QuadratureSpec::default(),
        )?),
        _ => None,
    };

    let slope = asymptotic_slope(nu_t0.value.clamp(1e-12, 1.0))?;

    Ok(BiasSweepPoint {
        report: BiasReport {
            scale,
            sigma,
            measured: measure.bias,
            lower_delta,
            lower_delta_star,
            upper_general,
            upper_gaussian,
            analytic_exact,
            asymptotic_slope: slope,
            fold_probability: fold,
            a_star,
            nu: nu_t0,
        },
        estimate: measure.estimate,
    })
}

/// One row of the per-template `nu` table.
#[derive(Debug, Clone, Serialize)]
pub struct NuRow {
    pub label: String,
    /// Figure-scale estimate (10^3 samples by default).
    pub nu_small: EstimateWithCI,
    /// High-precision re-run.
    pub nu_large: EstimateWithCI,
    /// `dist(t0/|t0|, Fix(M))`.
    pub dist_to_fixed_unit: f64,
    pub mean_norm_eps: EstimateWithCI,
    /// `dist(t0/|t0|, Fix(M)) * E|eps|`, the projection bound on `nu`.
    pub nu_upper_bound: f64,
}

pub fn nu_table_row(
    action: &ActionSpec,
    label: &str,
    template: &Point,
    normalized_noise: &NoiseSpec,
    n_small: usize,
    n_large: usize,
    stream: &SampleStream,
) -> Result<NuRow> {
    let nu_small = estimate_nu(action, normalized_noise, template, n_small, &stream.derive(1))?;
    let nu_large = estimate_nu(action, normalized_noise, template, n_large, &stream.derive(2))?;
    let dim = normalized_noise.dim();
    let norm_stream = stream.derive(3);
    let mut mean_norm = Welford::default();
    for w in map_chunks(&norm_stream, n_large, |_, count, rng| {
        let mut eps = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            normalized_noise.sample_into(rng, &mut eps);
            w.push(dot(&eps, &eps).sqrt());
        }
        w
    }) {
        mean_norm.merge(w);
    }
    let dist_unit = action.dist_to_fixed(&template.scaled(1.0 / template.norm()))?;
    Ok(NuRow {
        label: label.to_string(),
        nu_small,
        nu_large,
        dist_to_fixed_unit: dist_unit,
        mean_norm_eps: EstimateWithCI::from_welford(&mean_norm),
        nu_upper_bound: dist_unit * mean_norm.mean(),
    })
}

/// One row of the rotation-action comparison: measured bias over `s` against
/// the chi-mean limit, with the lower-bound slope it must dominate.
#[derive(Debug, Clone, Serialize)]
pub struct RotationRow {
    pub dim: usize,
    pub noise_scale: f64,
    pub cb_over_s: EstimateWithCI,
    /// `sqrt(2) Gamma((n+1)/2) / Gamma(n/2)`, the exact large-noise limit.
    pub exact_limit: f64,
    /// `sqrt(n) (sqrt(1 + nu^2) - 1)` at the estimated `nu`.
    pub lower_slope: f64,
    pub nu: EstimateWithCI,
}

pub fn rotation_comparison_row(
    dim: usize,
    t0_norm: f64,
    s: f64,
    n_mc: usize,
    n_nu: usize,
    stream: &SampleStream,
) -> Result<RotationRow> {
    let action = ActionSpec::rotation(dim)?;
    let cb = rotation_bias(dim, t0_norm, s, n_mc, &stream.derive(1))?;
    let cb_over_s = if s > 0.0 {
        EstimateWithCI {
            value: cb.value / s,
            stderr: cb.stderr / s,
            n_samples: cb.n_samples,
        }
    } else {
        EstimateWithCI {
            value: 0.0,
            stderr: 0.0,
            n_samples: n_mc,
        }
    };
    let (noise_unit, _) = NoiseSpec::gaussian(dim, 1.0)?.normalize_to_unit_energy()?;
    let direction = Point::basis(dim, 0).scaled(t0_norm);
    let nu = estimate_nu(&action, &noise_unit, &direction, n_nu, &stream.derive(2))?;
    let lower_slope =
        (dim as f64).sqrt() * asymptotic_slope(nu.value.clamp(1e-12, 1.0))?;
    Ok(RotationRow {
        dim,
        noise_scale: s,
        cb_over_s,
        exact_limit: chi_mean(dim)?,
        lower_slope,
        nu,
    })
}

/// Gradient audit at the template: direct Monte Carlo gradient, its
/// common-random-number central-difference check, the folding probability,
/// and the certification verdict (`<grad, t0> < -3 stderr`).
#[derive(Debug, Clone, Serialize)]
pub struct GradientAudit {
    pub gradient: Vec<f64>,
    pub gradient_stderr: Vec<f64>,
    pub fd_gradient: Vec<f64>,
    /// `|grad - fd| / |grad|`.
    pub rel_error: f64,
    pub inner_product: f64,
    pub inner_stderr: f64,
    pub fold_probability: EstimateWithCI,
    pub certified: bool,
    pub n_samples: usize,
    pub fd_step: f64,
}

pub fn gradient_audit(
    action: &ActionSpec,
    noise: &NoiseSpec,
    t0: &Point,
    n: usize,
    step_rel: f64,
    fold_tol: f64,
    stream: &SampleStream,
) -> Result<GradientAudit> {
    if !(step_rel > 0.0) {
        return Err(Error::InvalidArgument(
            "finite-difference step must be positive".into(),
        ));
    }
    // one substream for the gradient, the difference quotients, and the
    // inner-product pass: the draws cancel in every comparison
    let grad_stream = stream.derive(1);
    let grad = mc_gradient_at(action, noise, t0, t0, n, &grad_stream)?;

    let h = step_rel * t0.norm();
    if h == 0.0 {
        return Err(Error::ZeroTemplate);
    }
    let dim = action.ambient_dim();
    let mut fd = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut plus = t0.coords().to_vec();
        plus[j] += h;
        let mut minus = t0.coords().to_vec();
        minus[j] -= h;
        let fp = mc_quotient_variance(action, noise, t0, &plus.into(), n, &grad_stream)?;
        let fm = mc_quotient_variance(action, noise, t0, &minus.into(), n, &grad_stream)?;
        fd.push((fp.value - fm.value) / (2.0 * h));
    }

    // per-sample inner product <2 (t0 - g(X).X), t0> on the same draws
    let aligner = action.aligner();
    let mut inner = Welford::default();
    for w in map_chunks(&grad_stream, n, |_, count, rng| {
        let mut scratch = aligner.scratch();
        let mut eps = vec![0.0; dim];
        let mut x = vec![0.0; dim];
        let mut aligned = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            noise.sample_into(rng, &mut eps);
            for ((xi, &ti), &ei) in x.iter_mut().zip(t0.coords()).zip(&eps) {
                *xi = ti + ei;
            }
            aligner.align_into(&x, t0.coords(), &mut aligned, &mut scratch);
            let mut acc = 0.0;
            for ((&ti, &ai), &ti2) in t0.coords().iter().zip(&aligned).zip(t0.coords()) {
                acc += 2.0 * (ti - ai) * ti2;
            }
            w.push(acc);
        }
        w
    }) {
        inner.merge(w);
    }

    let fold = mc_fold_probability(action, noise, t0, n, &stream.derive(2), fold_tol)?;

    let grad_norm = dot(grad.value.coords(), grad.value.coords()).sqrt();
    let diff = dist_sq(grad.value.coords(), &fd).sqrt();
    let rel_error = if grad_norm > 0.0 { diff / grad_norm } else { diff };
    let certified = inner.mean() < -3.0 * inner.stderr();

    Ok(GradientAudit {
        gradient: grad.value.coords().to_vec(),
        gradient_stderr: grad.stderr,
        fd_gradient: fd,
        rel_error,
        inner_product: inner.mean(),
        inner_stderr: inner.stderr(),
        fold_probability: fold,
        certified,
        n_samples: n,
        fd_step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::swap_template;

    #[test]
    fn gradient_audit_two_point() {
        let action = ActionSpec::SwapR2;
        let noise = NoiseSpec::finite_mixture(
            vec![
                Point::new(vec![1.0, -1.0]).unwrap(),
                Point::new(vec![-1.0, 1.0]).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let t0 = Point::new(vec![2.0, 1.0]).unwrap();
        let audit = gradient_audit(
            &action,
            &noise,
            &t0,
            100_000,
            1e-4,
            0.0,
            &SampleStream::new(3),
        )
        .unwrap();
        assert!(audit.rel_error < 1e-3, "rel error {}", audit.rel_error);
        assert!(audit.certified);
        assert!((audit.inner_product + 1.0).abs() < 4.0 * audit.inner_stderr);
    }

    #[test]
    fn gradient_audit_no_fold_not_certified() {
        let action = ActionSpec::SwapR2;
        let noise = NoiseSpec::finite_mixture(
            vec![
                Point::new(vec![0.1, 0.1]).unwrap(),
                Point::new(vec![-0.1, -0.1]).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let t0 = Point::new(vec![2.0, 1.0]).unwrap();
        let audit = gradient_audit(
            &action,
            &noise,
            &t0,
            10_000,
            1e-4,
            0.0,
            &SampleStream::new(5),
        )
        .unwrap();
        assert!(!audit.certified);
        assert_eq!(audit.fold_probability.value, 0.0);
    }

    #[test]
    fn bias_point_swap_gaussian_is_consistent() {
        let action = ActionSpec::SwapR2;
        let noise = NoiseSpec::gaussian(2, 1.0).unwrap();
        let t0 = swap_template(1.0, 1.0).unwrap();
        let point = bias_report_point(
            &action,
            &noise,
            1.0,
            &t0,
            40_000,
            4,
            0.0,
            &SampleStream::new(11),
        )
        .unwrap();
        let report = &point.report;
        report.validate().unwrap();
        let exact = report.analytic_exact.unwrap();
        assert!(
            (report.measured.value - exact).abs()
                < (0.03 * exact).max(3.0 * report.measured.stderr),
            "measured {} exact {exact}",
            report.measured.value
        );
        assert!(report.upper_gaussian.is_some());
        assert!(report.fold_probability.value > 0.0);
        assert!(report.a_star.value > 1.0);
    }
}
