//! Monte Carlo estimators for the quotient-space statistics: variances,
//! gradient, folding probability, the ray-minimiser scale `a_star`, the
//! registered-alignment coefficient `nu`, and the consistency-bias
//! measurement built on the max-max alternation.
//!
//! Every estimator draws through the chunked [`SampleStream`] contract, so
//! results are deterministic for a given seed and chunk size whatever the
//! worker count.

mod maxmax;

pub use maxmax::{max_max, MaxMaxResult};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::ActionSpec;
use crate::error::{Error, Result};
use crate::noise::{sample_noise, NoiseSpec};
use crate::point::{dist_sq, dot, Point};
use crate::stream::{map_chunks, SampleStream, VecWelford, Welford};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A scalar Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl EstimateWithCI {
    pub(crate) fn from_welford(w: &Welford) -> Self {
        Self {
            value: w.mean(),
            stderr: w.stderr(),
            n_samples: w.count() as usize,
        }
    }
}

/// Vector-valued Monte Carlo estimate with per-coordinate standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub value: Point,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
}

/// Number of bootstrap resamples behind every reported bias standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Outcome of [`measure_bias`]: the quotient distance from the template orbit
/// to the best empirical Fréchet mean found by multi-start max-max.
#[derive(Debug, Clone, Serialize)]
pub struct BiasMeasurement {
    /// Distance with a bootstrap standard error over the observation set.
    pub bias: EstimateWithCI,
    /// The best minimiser found (top-space representative).
    pub estimate: Point,
    /// Final empirical quotient variance at the estimate.
    pub best_objective: f64,
    /// Empirical ray-minimiser scale of the observation set.
    pub a_star_empirical: f64,
    /// Number of alternation starts actually run.
    pub restarts_used: usize,
}

fn validate_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!(
            "need at least {min} samples, got {n}"
        )));
    }
    Ok(())
}

fn check_template_nonzero(t0: &Point) -> Result<()> {
    if t0.norm() == 0.0 {
        return Err(Error::ZeroTemplate);
    }
    Ok(())
}

fn check_noise_dim(action: &ActionSpec, noise: &NoiseSpec) -> Result<()> {
    if noise.dim() != action.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: action.ambient_dim(),
            actual: noise.dim(),
        });
    }
    Ok(())
}

fn check_normalized(noise: &NoiseSpec) -> Result<()> {
    let energy = noise.second_moment();
    if (energy - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidNoise(format!(
            "noise must be normalized to unit second moment, got {energy}"
        )));
    }
    Ok(())
}

fn merged<I: IntoIterator<Item = Welford>>(parts: I) -> Welford {
    let mut total = Welford::default();
    for w in parts {
        total.merge(w);
    }
    total
}

/// Runs `per_sample(rng, eps)` over `n` chunked noise draws and merges the
/// per-chunk accumulators in order.
fn mc_welford<F>(noise: &NoiseSpec, stream: &SampleStream, n: usize, per_sample: F) -> Welford
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> f64 + Sync,
{
    let dim = noise.dim();
    merged(map_chunks(stream, n, |_, count, rng| {
        let mut eps = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            noise.sample_into(rng, &mut eps);
            w.push(per_sample(rng, &mut eps));
        }
        w
    }))
}

/// Monte Carlo estimate of the quotient variance
/// `F(m) = E d_Q([m], [X])^2` with `X = t0 + eps`.
pub fn mc_quotient_variance(
    action: &ActionSpec,
    noise: &NoiseSpec,
    t0: &Point,
    m: &Point,
    n: usize,
    stream: &SampleStream,
) -> Result<EstimateWithCI> {
    let dim = action.ambient_dim();
    t0.check_dim(dim)?;
    m.check_dim(dim)?;
    check_noise_dim(action, noise)?;
    validate_n(n, 2)?;
    let aligner = action.aligner();
    let mc = noise;
    let w = merged(map_chunks(stream, n, |_, count, rng| {
        let mut scratch = aligner.scratch();
        let mut eps = vec![0.0; dim];
        let mut x = vec![0.0; dim];
        let mut aligned = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            mc.sample_into(rng, &mut eps);
            for ((xi, &ti), &ei) in x.iter_mut().zip(t0.coords()).zip(&eps) {
                *xi = ti + ei;
            }
            aligner.align_into(&x, m.coords(), &mut aligned, &mut scratch);
            w.push(dist_sq(m.coords(), &aligned));
        }
        w
    }));
    Ok(EstimateWithCI::from_welford(&w))
}

/// Monte Carlo estimate of the top-space variance `E |m - X|^2`.
pub fn mc_top_variance(
    noise: &NoiseSpec,
    t0: &Point,
    m: &Point,
    n: usize,
    stream: &SampleStream,
) -> Result<EstimateWithCI> {
    let dim = noise.dim();
    t0.check_dim(dim)?;
    m.check_dim(dim)?;
    validate_n(n, 2)?;
    let w = mc_welford(noise, stream, n, |_, eps| {
        let mut acc = 0.0;
        for ((&mi, &ti), &ei) in m.coords().iter().zip(t0.coords()).zip(eps.iter()) {
            let d = mi - (ti + ei);
            acc += d * d;
        }
        acc
    });
    Ok(EstimateWithCI::from_welford(&w))
}

/// Monte Carlo estimate of the quotient-variance gradient at a regular point
/// `m0` of a finite-group action: the average of `2 (m0 - g(X, m0) . X)`.
pub fn mc_gradient_at(
    action: &ActionSpec,
    noise: &NoiseSpec,
    t0: &Point,
    m0: &Point,
    n: usize,
    stream: &SampleStream,
) -> Result<GradientEstimate> {
    if !action.is_finite() {
        return Err(Error::NotFiniteGroup {
            op: "mc_gradient_at",
            action: action.name(),
        });
    }
    let dim = action.ambient_dim();
    t0.check_dim(dim)?;
    m0.check_dim(dim)?;
    check_noise_dim(action, noise)?;
    validate_n(n, 2)?;
    if !action.is_regular(m0)? {
        return Err(Error::SingularPoint);
    }
    let aligner = action.aligner();
    let parts = map_chunks(stream, n, |_, count, rng| {
        let mut scratch = aligner.scratch();
        let mut eps = vec![0.0; dim];
        let mut x = vec![0.0; dim];
        let mut aligned = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        let mut w = VecWelford::new(dim);
        for _ in 0..count {
            noise.sample_into(rng, &mut eps);
            for ((xi, &ti), &ei) in x.iter_mut().zip(t0.coords()).zip(&eps) {
                *xi = ti + ei;
            }
            aligner.align_into(&x, m0.coords(), &mut aligned, &mut scratch);
            for ((g, &mi), &ai) in grad.iter_mut().zip(m0.coords()).zip(&aligned) {
                *g = 2.0 * (mi - ai);
            }
            w.push(&grad);
        }
        w
    });
    let mut total = VecWelford::new(dim);
    for p in parts {
        total.merge(p);
    }
    Ok(GradientEstimate {
        value: total.means().into(),
        stderr: total.stderrs(),
        n_samples: n,
    })
}

/// Monte Carlo estimate of the folding probability
/// `P(sup_g <g X, t0> > <X, t0> + tol)`. A strictly positive lower
/// confidence bound certifies the inconsistency condition.
pub fn mc_fold_probability(
    action: &ActionSpec,
    noise: &NoiseSpec,
    t0: &Point,
    n: usize,
    stream: &SampleStream,
    tol: f64,
) -> Result<EstimateWithCI> {
    let dim = action.ambient_dim();
    t0.check_dim(dim)?;
    check_noise_dim(action, noise)?;
    check_template_nonzero(t0)?;
    validate_n(n, 2)?;
    let aligner = action.aligner();
    let w = merged(map_chunks(stream, n, |_, count, rng| {
        let mut scratch = aligner.scratch();
        let mut eps = vec![0.0; dim];
        let mut x = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            noise.sample_into(rng, &mut eps);
            for ((xi, &ti), &ei) in x.iter_mut().zip(t0.coords()).zip(&eps) {
                *xi = ti + ei;
            }
            let sup = aligner.sup_inner(&x, t0.coords(), &mut scratch);
            let base = dot(&x, t0.coords());
            w.push(if sup > base + tol { 1.0 } else { 0.0 });
        }
        w
    }));
    Ok(EstimateWithCI::from_welford(&w))
}

/// Monte Carlo estimate of `a_star = E(sup_g <g X, t0>) / |t0|^2`, the scale
/// at which the quotient variance restricted to the template ray is
/// minimised. Always `>= 1` in expectation; `> 1` certifies inconsistency.
pub fn estimate_a_star(
    action: &ActionSpec,
    noise: &NoiseSpec,
    t0: &Point,
    n: usize,
    stream: &SampleStream,
) -> Result<EstimateWithCI> {
    let dim = action.ambient_dim();
    t0.check_dim(dim)?;
    check_noise_dim(action, noise)?;
    check_template_nonzero(t0)?;
    validate_n(n, 2)?;
    let norm_sq = t0.norm() * t0.norm();
    let aligner = action.aligner();
    let w = merged(map_chunks(stream, n, |_, count, rng| {
        let mut scratch = aligner.scratch();
        let mut eps = vec![0.0; dim];
        let mut x = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            noise.sample_into(rng, &mut eps);
            for ((xi, &ti), &ei) in x.iter_mut().zip(t0.coords()).zip(&eps) {
                *xi = ti + ei;
            }
            w.push(aligner.sup_inner(&x, t0.coords(), &mut scratch) / norm_sq);
        }
        w
    }));
    Ok(EstimateWithCI::from_welford(&w))
}

/// Monte Carlo estimate of `nu(direction) = E sup_g <g eps, direction/|direction|>`
/// for unit-energy noise.
pub fn estimate_nu(
    action: &ActionSpec,
    normalized_noise: &NoiseSpec,
    direction: &Point,
    n: usize,
    stream: &SampleStream,
) -> Result<EstimateWithCI> {
    let dim = action.ambient_dim();
    direction.check_dim(dim)?;
    check_noise_dim(action, normalized_noise)?;
    check_normalized(normalized_noise)?;
    validate_n(n, 2)?;
    let norm = direction.norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument(
            "nu needs a non-zero direction".into(),
        ));
    }
    let aligner = action.aligner();
    let w = merged(map_chunks(stream, n, |_, count, rng| {
        let mut scratch = aligner.scratch();
        let mut eps = vec![0.0; dim];
        let mut w = Welford::default();
        for _ in 0..count {
            normalized_noise.sample_into(rng, &mut eps);
            w.push(aligner.sup_inner(&eps, direction.coords(), &mut scratch) / norm);
        }
        w
    }));
    Ok(EstimateWithCI::from_welford(&w))
}

/// Mean of `f` over a fixed observation set, chunked and merged in order.
pub(crate) fn obs_welford<F>(obs: &[Point], f: F) -> Welford
where
    F: Fn(&Point) -> f64 + Sync,
{
    const OBS_CHUNK: usize = 4096;
    #[cfg(feature = "parallel")]
    let parts: Vec<Welford> = obs
        .par_chunks(OBS_CHUNK)
        .map(|chunk| {
            let mut w = Welford::default();
            for p in chunk {
                w.push(f(p));
            }
            w
        })
        .collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Welford> = obs
        .chunks(OBS_CHUNK)
        .map(|chunk| {
            let mut w = Welford::default();
            for p in chunk {
                w.push(f(p));
            }
            w
        })
        .collect();
    merged(parts)
}

/// Empirical `a_star` of a fixed observation set.
fn empirical_a_star(action: &ActionSpec, obs: &[Point], t0: &Point) -> f64 {
    let aligner = action.aligner();
    let norm_sq = t0.norm() * t0.norm();
    obs_welford(obs, |y| {
        let mut scratch = aligner.scratch();
        aligner.sup_inner(y.coords(), t0.coords(), &mut scratch) / norm_sq
    })
    .mean()
}

/// Measures the consistency bias: draws `n_samples` observations
/// `X_i = t0 + eps_i`, minimises the empirical quotient variance by max-max
/// from several starts (the template, the empirical `a_star` rescaling of it,
/// and random observations), and reports the quotient distance from `[t0]` to
/// the best minimiser with a nonparametric bootstrap standard error
/// ([`BOOTSTRAP_RESAMPLES`] resamples, warm-started from the point estimate).
pub fn measure_bias(
    action: &ActionSpec,
    noise: &NoiseSpec,
    t0: &Point,
    n_samples: usize,
    restarts: usize,
    stream: &SampleStream,
) -> Result<BiasMeasurement> {
    let dim = action.ambient_dim();
    t0.check_dim(dim)?;
    check_noise_dim(action, noise)?;
    validate_n(n_samples, 2)?;
    if restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }

    let mut observations = sample_noise(noise, stream, n_samples)?;
    for obs in &mut observations {
        *obs = obs.add(t0);
    }

    let a_star = if t0.norm() > 0.0 {
        empirical_a_star(action, &observations, t0)
    } else {
        1.0
    };

    let mut inits: Vec<Point> = vec![t0.clone()];
    if t0.norm() > 0.0 && restarts >= 2 {
        inits.push(t0.scaled(a_star));
    }
    let mut pick_rng = stream.derive(0x5eed_1e57).chunk_rng(0);
    while inits.len() < restarts {
        let idx = pick_rng.gen_range(0..observations.len());
        inits.push(observations[idx].clone());
    }

    let mut best: Option<MaxMaxResult> = None;
    for init in &inits {
        let run = max_max(action, &observations, init, 1000, 1e-9)?;
        let better = match &best {
            None => true,
            Some(b) => run.final_objective() < b.final_objective(),
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart ran");
    let bias_value = action.quotient_distance(&best.estimate, t0)?;

    // Bootstrap over the observation set, re-running max-max warm-started
    // from the point estimate.
    let boot_stream = stream.derive(0xb007_5742);
    let n = observations.len();
    let replicate = |b: usize| -> Result<f64> {
        let mut rng = boot_stream.chunk_rng(b as u64);
        let resample: Vec<Point> = (0..n)
            .map(|_| observations[rng.gen_range(0..n)].clone())
            .collect();
        let run = max_max(action, &resample, &best.estimate, 1000, 1e-9)?;
        action.quotient_distance(&run.estimate, t0)
    };
    #[cfg(feature = "parallel")]
    let boot: Result<Vec<f64>> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(replicate)
        .collect();
    #[cfg(not(feature = "parallel"))]
    let boot: Result<Vec<f64>> = (0..BOOTSTRAP_RESAMPLES).map(replicate).collect();
    let boot = boot?;
    let mut w = Welford::default();
    for d in boot {
        w.push(d);
    }

    Ok(BiasMeasurement {
        bias: EstimateWithCI {
            value: bias_value,
            stderr: w.sample_std(),
            n_samples,
        },
        estimate: best.estimate.clone(),
        best_objective: best.final_objective(),
        a_star_empirical: a_star,
        restarts_used: inits.len(),
    })
}

/// Empirical lower bound `delta_n` for the quotient distance between the
/// template orbit and any empirical Fréchet mean of the given observations:
/// the positive root of
/// `delta^2 + 2 (|t0| + mean |X_i|) delta - |t0|^2 (a_nstar - 1)^2 = 0`.
pub fn empirical_lower_bound(action: &ActionSpec, obs: &[Point], t0: &Point) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let dim = action.ambient_dim();
    t0.check_dim(dim)?;
    check_template_nonzero(t0)?;
    for o in obs {
        o.check_dim(dim)?;
    }
    let mean_norm = obs_welford(obs, Point::norm).mean();
    let a_n = empirical_a_star(action, obs, t0);
    let b = t0.norm() + mean_norm;
    let c = t0.norm() * t0.norm() * (a_n - 1.0) * (a_n - 1.0);
    Ok(positive_quadratic_root(b, c))
}

/// Positive root of `delta^2 + 2 b delta - c = 0` for `b, c >= 0`, written to
/// avoid cancellation.
pub(crate) fn positive_quadratic_root(b: f64, c: f64) -> f64 {
    // -b + sqrt(b^2 + c) = c / (b + sqrt(b^2 + c))
    if b == 0.0 && c == 0.0 {
        return 0.0;
    }
    c / (b + (b * b + c).sqrt())
}
