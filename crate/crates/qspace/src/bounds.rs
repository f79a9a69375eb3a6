//! Closed-form and semi-closed-form bias bounds.
//!
//! The two lower bounds are roots of quadratics in the bias; the upper bounds
//! are the finite-group Gaussian bound `s sqrt(8 ln |G|)` and the general
//! `sigma nu` bound with its nu-free envelope. The fixed-point case has an
//! exactly linear bias estimated by alternating maximisation over unit
//! directions.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::action::ActionSpec;
use crate::error::{Error, Result};
use crate::estimators::{positive_quadratic_root, EstimateWithCI};
use crate::noise::NoiseSpec;
use crate::point::{dot, Point};
use crate::stream::{map_chunks, SampleStream, Welford};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Scalar inputs shared by the bound calculators.
#[derive(Debug, Clone, Serialize)]
pub struct BoundInputs {
    pub norm_t0: f64,
    pub expected_norm_x: f64,
    /// Variability `sqrt(E |X - t0|^2)`.
    pub sigma: f64,
    pub a_star: f64,
    pub nu: f64,
    pub group_cardinality: Option<usize>,
    pub dist_t0_fixed: f64,
    pub per_coordinate_scale: Option<f64>,
    pub dim: Option<usize>,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("norm_t0", self.norm_t0),
            ("expected_norm_x", self.expected_norm_x),
            ("sigma", self.sigma),
            ("a_star", self.a_star),
            ("nu", self.nu),
            ("dist_t0_fixed", self.dist_t0_fixed),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "bound input `{name}` must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.a_star < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "a_star must be >= 1, got {}",
                self.a_star
            )));
        }
        // Cauchy-Schwarz: E|X| <= sqrt(|t0|^2 + sigma^2)
        let cs = (self.norm_t0 * self.norm_t0 + self.sigma * self.sigma).sqrt();
        if self.expected_norm_x > cs * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "expected_norm_x = {} exceeds the Cauchy-Schwarz envelope {}",
                self.expected_norm_x, cs
            )));
        }
        Ok(())
    }
}

/// Lower bound `delta`: positive root of
/// `delta^2 + 2 delta (|t0| + E|X|) - |t0|^2 (a_star - 1)^2 = 0`.
pub fn lower_bound_delta(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let b = inputs.norm_t0 + inputs.expected_norm_x;
    let gap = inputs.norm_t0 * (inputs.a_star - 1.0);
    Ok(positive_quadratic_root(b, gap * gap))
}

/// Lower bound `delta_star`: positive root of
/// `delta^2 + 2 delta |t0| (1 + sqrt(1 + sigma^2/|t0|^2)) - |t0|^2 (a_star - 1)^2 = 0`.
///
/// Its linear coefficient dominates the one of [`lower_bound_delta`] by
/// Cauchy-Schwarz, so `delta_star <= delta`.
pub fn lower_bound_delta_star(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let b = inputs.norm_t0 + (inputs.norm_t0 * inputs.norm_t0 + inputs.sigma * inputs.sigma).sqrt();
    let gap = inputs.norm_t0 * (inputs.a_star - 1.0);
    Ok(positive_quadratic_root(b, gap * gap))
}

/// Large-noise slope of `delta_star / sigma`: `sqrt(1 + nu^2) - 1`.
pub fn asymptotic_slope(nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nu must lie in (0, 1], got {nu}"
        )));
    }
    // sqrt(1 + nu^2) - 1 without cancellation
    Ok(nu * nu / (1.0 + (1.0 + nu * nu).sqrt()))
}

/// Finite-group Gaussian upper bound `s sqrt(8 ln |G|)`.
pub fn gaussian_upper_bound(per_coordinate_scale: f64, group_cardinality: usize) -> Result<f64> {
    if group_cardinality < 2 {
        return Err(Error::InvalidArgument(format!(
            "the Gaussian bound needs |G| >= 2, got {group_cardinality}; with a trivial group the bound is vacuous"
        )));
    }
    if !(per_coordinate_scale >= 0.0) || !per_coordinate_scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "per-coordinate scale must be non-negative, got {per_coordinate_scale}"
        )));
    }
    Ok(per_coordinate_scale * (8.0 * (group_cardinality as f64).ln()).sqrt())
}

/// General upper bound with its nu-free envelope.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeneralUpperBound {
    /// `sigma nu + sqrt(sigma^2 nu^2 + 2 dist(t0, Fix) sigma nu)`, with `nu`
    /// taken at the shifted minimiser.
    pub bound: f64,
    /// `sigma + sqrt(sigma^2 + 2 sigma dist(t0, Fix))`: O(sigma) for large
    /// noise, O(sqrt(sigma)) for small noise.
    pub envelope: f64,
}

pub fn general_upper_bound(
    sigma: f64,
    nu_at_shifted_minimizer: f64,
    dist_t0_fixed: f64,
) -> Result<GeneralUpperBound> {
    let nu = nu_at_shifted_minimizer;
    if !(sigma >= 0.0) || !(dist_t0_fixed >= 0.0) || !(0.0..=1.0 + 1e-12).contains(&nu) {
        return Err(Error::InvalidArgument(format!(
            "general bound needs sigma, dist >= 0 and nu in [0, 1]; got sigma={sigma}, nu={nu}, dist={dist_t0_fixed}"
        )));
    }
    let sn = sigma * nu;
    let bound = sn + (sn * sn + 2.0 * dist_t0_fixed * sn).sqrt();
    let envelope = sigma + (sigma * sigma + 2.0 * sigma * dist_t0_fixed).sqrt();
    Ok(GeneralUpperBound { bound, envelope })
}

/// Number of alternating-maximisation restarts used when none is specified.
pub const DEFAULT_FIXED_POINT_RESTARTS: usize = 16;

/// Consistency bias when the template is a fixed point:
/// `sigma * sup_{|v|=1} E sup_g <v, g eps>`, estimated by alternating
/// maximisation over the unit direction from random restarts. Exactly linear
/// in `sigma` by construction.
pub fn fixed_point_bias(
    action: &ActionSpec,
    template: &Point,
    normalized_noise: &NoiseSpec,
    sigma: f64,
    n_mc: usize,
    n_directions: usize,
    stream: &SampleStream,
) -> Result<EstimateWithCI> {
    let dim = action.ambient_dim();
    template.check_dim(dim)?;
    if normalized_noise.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: normalized_noise.dim(),
        });
    }
    if !action.is_fixed_point(template)? {
        return Err(Error::TemplateNotFixed);
    }
    let energy = normalized_noise.second_moment();
    if (energy - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidNoise(format!(
            "noise must be normalized to unit second moment, got {energy}"
        )));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    if n_mc < 2 || n_directions == 0 {
        return Err(Error::InvalidArgument(
            "fixed-point bias needs n_mc >= 2 and at least one direction".into(),
        ));
    }

    // materialize the sample once; every direction pass reuses it
    let samples: Vec<Vec<f64>> = map_chunks(stream, n_mc, |_, count, rng| {
        let mut buf = vec![0.0; count * dim];
        for k in 0..count {
            normalized_noise.sample_into(rng, &mut buf[k * dim..(k + 1) * dim]);
        }
        buf
    });
    let mut eps = Vec::with_capacity(n_mc * dim);
    for chunk in samples {
        eps.extend(chunk);
    }

    let aligner = action.aligner();
    let pass = |v: &[f64]| -> (Welford, Vec<f64>) {
        let body = |rows: &[f64]| {
            let mut scratch = aligner.scratch();
            let mut aligned = vec![0.0; dim];
            let mut sum = vec![0.0; dim];
            let mut w = Welford::default();
            for row in rows.chunks_exact(dim) {
                let (sup, _) = aligner.align_into(row, v, &mut aligned, &mut scratch);
                w.push(sup);
                for (s, &a) in sum.iter_mut().zip(&aligned) {
                    *s += a;
                }
            }
            (w, sum)
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<(Welford, Vec<f64>)> =
            eps.par_chunks(4096 * dim).map(body).collect();
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<(Welford, Vec<f64>)> = eps.chunks(4096 * dim).map(body).collect();
        let mut w = Welford::default();
        let mut sum = vec![0.0; dim];
        for (pw, ps) in parts {
            w.merge(pw);
            for (s, v) in sum.iter_mut().zip(ps) {
                *s += v;
            }
        }
        (w, sum)
    };

    let dir_stream = stream.derive(0xd12e_c710);
    let mut best: Option<Welford> = None;
    for start in 0..n_directions {
        let mut rng = dir_stream.chunk_rng(start as u64);
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm == 0.0 {
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }

        let mut value: Option<f64> = None;
        let mut w = Welford::default();
        for _ in 0..200 {
            let (pass_w, sum) = pass(&v);
            w = pass_w;
            let new_value = w.mean();
            let sum_norm = dot(&sum, &sum).sqrt();
            let improved = match value {
                None => true,
                Some(old) => new_value > old + 1e-9 * old.abs().max(f64::MIN_POSITIVE),
            };
            value = Some(new_value);
            if sum_norm == 0.0 || !improved {
                break;
            }
            for (vi, s) in v.iter_mut().zip(&sum) {
                *vi = s / sum_norm;
            }
        }
        let better = match &best {
            None => true,
            Some(b) => w.mean() > b.mean(),
        };
        if better {
            best = Some(w);
        }
    }
    let best = best.ok_or_else(|| Error::InvalidArgument("no usable start direction".into()))?;
    Ok(EstimateWithCI {
        value: sigma * best.mean(),
        stderr: sigma * best.stderr(),
        n_samples: n_mc,
    })
}

/// All measured and bound values for one (action, template, noise scale)
/// configuration. Bounds that do not apply (for example the Gaussian bound
/// under mixture noise) are absent, never substituted.
#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub scale: f64,
    pub sigma: f64,
    pub measured: EstimateWithCI,
    pub lower_delta: f64,
    pub lower_delta_star: f64,
    pub upper_general: Option<f64>,
    pub upper_gaussian: Option<f64>,
    pub analytic_exact: Option<f64>,
    pub asymptotic_slope: f64,
    pub fold_probability: EstimateWithCI,
    pub a_star: EstimateWithCI,
    pub nu: EstimateWithCI,
}

impl BiasReport {
    /// The ordering chain every configuration must satisfy:
    /// `delta_star <= delta <= measured + 3 stderr <= upper + 3 stderr`.
    pub fn validate(&self) -> Result<()> {
        let slack = 1e-9 * (1.0 + self.lower_delta.abs());
        if self.lower_delta_star > self.lower_delta + slack {
            return Err(Error::InvalidArgument(format!(
                "bound ordering violated: delta_star {} > delta {}",
                self.lower_delta_star, self.lower_delta
            )));
        }
        let measured_high = self.measured.value + 3.0 * self.measured.stderr;
        if self.lower_delta > measured_high + slack {
            return Err(Error::InvalidArgument(format!(
                "bound ordering violated: delta {} > measured bias {} + 3 stderr",
                self.lower_delta, self.measured.value
            )));
        }
        for (name, upper) in [
            ("general", self.upper_general),
            ("gaussian", self.upper_gaussian),
        ] {
            if let Some(upper) = upper {
                if upper < 0.0 || !upper.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "{name} upper bound must be finite and non-negative, got {upper}"
                    )));
                }
                if self.measured.value > upper + 3.0 * self.measured.stderr + slack {
                    return Err(Error::InvalidArgument(format!(
                        "bound ordering violated: measured bias {} > {name} upper bound {} + 3 stderr",
                        self.measured.value, upper
                    )));
                }
            }
        }
        Ok(())
    }
}
