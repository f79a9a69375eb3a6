//! Estimator checks against independent oracles: radial reductions for the
//! rotation action, common-random-number finite differences for the gradient,
//! the variance comparison between quotient and top space, and the
//! empirical-bound self-consistency.

use rand::Rng;
use rand_distr::StandardNormal;

use qspace::action::ActionSpec;
use qspace::bounds::{lower_bound_delta, BoundInputs};
use qspace::estimators::{
    empirical_lower_bound, estimate_a_star, mc_fold_probability, mc_gradient_at,
    mc_quotient_variance, mc_top_variance, measure_bias,
};
use qspace::noise::{sample_noise, NoiseSpec};
use qspace::point::Point;
use qspace::stream::SampleStream;
use qspace::templates::swap_template;

#[test]
fn rotation_quotient_variance_reduces_to_radius() {
    // F(m) = E (|X| - |m|)^2; oracle by independent radial sampling
    let n = 3usize;
    let action = ActionSpec::rotation(n).unwrap();
    let s = 0.8;
    let noise = NoiseSpec::gaussian(n, s).unwrap();
    let t0 = Point::new(vec![1.0, -0.5, 2.0]).unwrap();
    let m = Point::new(vec![0.5, 0.5, 0.5]).unwrap();
    let est =
        mc_quotient_variance(&action, &noise, &t0, &m, 300_000, &SampleStream::new(7)).unwrap();

    let mut rng = SampleStream::new(977).chunk_rng(0);
    let mut acc = 0.0;
    let oracle_n = 300_000;
    for _ in 0..oracle_n {
        let x: Vec<f64> = t0
            .coords()
            .iter()
            .map(|&t| t + s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        acc += (norm - m.norm()).powi(2);
    }
    let oracle = acc / oracle_n as f64;
    assert!(
        (est.value - oracle).abs() < 5.0 * est.stderr.max(0.002),
        "estimator {} oracle {oracle}",
        est.value
    );
}

#[test]
fn rotation_a_star_is_mean_norm_ratio() {
    let n = 4usize;
    let action = ActionSpec::rotation(n).unwrap();
    let s = 1.3;
    let noise = NoiseSpec::gaussian(n, s).unwrap();
    let t0 = Point::new(vec![2.0, 0.0, 0.0, 0.0]).unwrap();
    let est = estimate_a_star(&action, &noise, &t0, 200_000, &SampleStream::new(11)).unwrap();

    // oracle: a_star = E|X| / |t0| by radial MC
    let mut rng = SampleStream::new(991).chunk_rng(0);
    let mut acc = 0.0;
    for _ in 0..200_000 {
        let x: Vec<f64> = t0
            .coords()
            .iter()
            .map(|&t| t + s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        acc += x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let oracle = acc / 200_000.0 / t0.norm();
    assert!((est.value - oracle).abs() < 5.0 * est.stderr.max(1e-3));
}

#[test]
fn gradient_matches_central_differences_with_crn() {
    let action = ActionSpec::SwapR2;
    let noise = NoiseSpec::gaussian(2, 1.0).unwrap();
    let t0 = swap_template(1.0, 1.0).unwrap();
    let stream = SampleStream::new(13);
    let n = 200_000;
    let grad = mc_gradient_at(&action, &noise, &t0, &t0, n, &stream).unwrap();

    let h = 1e-4 * t0.norm();
    let mut fd = Vec::new();
    for j in 0..2 {
        let mut plus = t0.coords().to_vec();
        plus[j] += h;
        let mut minus = t0.coords().to_vec();
        minus[j] -= h;
        let fp = mc_quotient_variance(&action, &noise, &t0, &plus.into(), n, &stream).unwrap();
        let fm = mc_quotient_variance(&action, &noise, &t0, &minus.into(), n, &stream).unwrap();
        fd.push((fp.value - fm.value) / (2.0 * h));
    }
    let diff = (0..2)
        .map(|j| (grad.value.coords()[j] - fd[j]).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = grad.value.norm();
    assert!(diff / norm < 1e-3, "rel error {}", diff / norm);
}

#[test]
fn quotient_variance_never_exceeds_top_variance() {
    let action = ActionSpec::SwapR2;
    let t0 = swap_template(1.0, 1.0).unwrap();
    let stream = SampleStream::new(17);

    // full-support noise: strict inequality, folding certainly present
    let noise = NoiseSpec::gaussian(2, 1.0).unwrap();
    let fq = mc_quotient_variance(&action, &noise, &t0, &t0, 100_000, &stream).unwrap();
    let ft = mc_top_variance(&noise, &t0, &t0, 100_000, &stream).unwrap();
    let sigma_sq = noise.second_moment();
    assert!(fq.value <= sigma_sq + 3.0 * fq.stderr);
    assert!((ft.value - sigma_sq).abs() < 4.0 * ft.stderr);
    let fold = mc_fold_probability(&action, &noise, &t0, 100_000, &stream, 0.0).unwrap();
    assert!(fold.value > 0.0);
    assert!(fq.value < ft.value - 2.0 * (fq.stderr + ft.stderr));

    // in-cone noise: equality within CI and zero folding
    let margin = action.cone_margin(&t0).unwrap();
    let ball = NoiseSpec::uniform_ball(2, 0.9 * margin).unwrap();
    let fq = mc_quotient_variance(&action, &ball, &t0, &t0, 100_000, &stream).unwrap();
    let ft = mc_top_variance(&ball, &t0, &t0, 100_000, &stream).unwrap();
    let fold = mc_fold_probability(&action, &ball, &t0, 100_000, &stream, 0.0).unwrap();
    assert_eq!(fold.value, 0.0);
    assert!((fq.value - ft.value).abs() <= 2.0 * (fq.stderr + ft.stderr));
}

#[test]
fn no_fold_bias_vanishes() {
    let action = ActionSpec::SwapR2;
    let t0 = swap_template(1.0, 1.0).unwrap();
    let margin = action.cone_margin(&t0).unwrap();
    let ball = NoiseSpec::uniform_ball(2, 0.9 * margin).unwrap();
    let run = measure_bias(&action, &ball, &t0, 100_000, 4, &SampleStream::new(19)).unwrap();
    assert!(
        run.bias.value < 3.0 * run.bias.stderr,
        "bias {} stderr {}",
        run.bias.value,
        run.bias.stderr
    );
}

#[test]
fn empirical_bound_converges_to_population_bound() {
    let action = ActionSpec::SwapR2;
    let noise = NoiseSpec::gaussian(2, 1.0).unwrap();
    let t0 = swap_template(1.0, 1.0).unwrap();
    let n = 1_000_000;

    let mut observations = sample_noise(&noise, &SampleStream::new(23), n).unwrap();
    for o in &mut observations {
        *o = o.add(&t0);
    }
    let delta_n = empirical_lower_bound(&action, &observations, &t0).unwrap();

    // population delta from an independent stream
    let stream = SampleStream::new(29);
    let a_star = estimate_a_star(&action, &noise, &t0, n, &stream).unwrap();
    let mut rng = SampleStream::new(31).chunk_rng(0);
    let mut acc = 0.0;
    for _ in 0..n {
        let x: Vec<f64> = t0
            .coords()
            .iter()
            .map(|&t| t + rng.sample::<f64, _>(StandardNormal))
            .collect();
        acc += x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let inputs = BoundInputs {
        norm_t0: t0.norm(),
        expected_norm_x: acc / n as f64,
        sigma: noise.second_moment().sqrt(),
        a_star: a_star.value.max(1.0),
        nu: 0.5,
        group_cardinality: Some(2),
        dist_t0_fixed: 1.0,
        per_coordinate_scale: Some(1.0),
        dim: Some(2),
    };
    let delta = lower_bound_delta(&inputs).unwrap();
    assert!(
        (delta_n - delta).abs() < 0.01 * delta.max(1e-6),
        "delta_n {delta_n} delta {delta}"
    );
}
