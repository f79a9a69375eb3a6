//! Cross-module agreement: the exact swap bias quadrature against the
//! max-max measurement and the fixed-point estimator.

use qspace::action::ActionSpec;
use qspace::analytic::{swap_gaussian_bias, QuadratureSpec};
use qspace::bounds::fixed_point_bias;
use qspace::estimators::measure_bias;
use qspace::noise::NoiseSpec;
use qspace::point::Point;
use qspace::stream::SampleStream;
use qspace::templates::swap_template;

#[test]
fn measured_bias_matches_exact_value_on_grid() {
    let action = ActionSpec::SwapR2;
    let quad = QuadratureSpec::default();
    let mut seed = 9000u64;
    for &d in &[0.5, 1.0, 2.0] {
        for &s in &[0.5, 1.0, 2.0] {
            seed += 1;
            let t0 = swap_template(1.0, d).unwrap();
            let noise = NoiseSpec::gaussian(2, s).unwrap();
            let run =
                measure_bias(&action, &noise, &t0, 200_000, 4, &SampleStream::new(seed)).unwrap();
            let exact = swap_gaussian_bias(d, s, &quad).unwrap();
            let tol = 3.0 * run.bias.stderr;
            assert!(
                (run.bias.value - exact).abs() <= tol.max(0.03 * exact),
                "d={d} s={s}: measured {} exact {exact} (3 stderr = {tol})",
                run.bias.value
            );
        }
    }
}

#[test]
fn fixed_point_estimator_matches_linear_exact_value() {
    let action = ActionSpec::SwapR2;
    let template = Point::new(vec![1.0, 1.0]).unwrap();
    let quad = QuadratureSpec::default();
    for &s in &[0.5, 1.0, 2.0] {
        let (unit, sigma) = NoiseSpec::gaussian(2, s)
            .unwrap()
            .normalize_to_unit_energy()
            .unwrap();
        let est = fixed_point_bias(
            &action,
            &template,
            &unit,
            sigma,
            150_000,
            8,
            &SampleStream::new(61),
        )
        .unwrap();
        let exact = swap_gaussian_bias(0.0, s, &quad).unwrap();
        assert!(
            (est.value - exact).abs() < 0.02 * exact,
            "s={s}: estimator {} exact {exact}",
            est.value
        );
    }
}
