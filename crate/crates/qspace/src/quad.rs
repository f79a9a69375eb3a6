//! Adaptive Gauss-Kronrod quadrature (15-point rule with interval bisection).

/// Nodes of the 15-point Kronrod rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Weights of the embedded 7-point Gauss rule.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Weights of the 15-point Kronrod rule.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// One application of the 15-point Kronrod rule on [a, b], with the QUADPACK
/// error rescaling.
fn qk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> QuadResult {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = WG[3] * f_center;
    let mut res_kronrod = WGK[7] * f_center;
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0f64; 7];
    let mut fv2 = [0.0f64; 7];

    for j in 0..7 {
        let abscissa = half * XGK[j];
        let y1 = f(center - abscissa);
        let y2 = f(center + abscissa);
        fv1[j] = y1;
        fv2[j] = y2;
        let sum = y1 + y2;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (y1.abs() + y2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * sum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    res_kronrod *= half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    QuadResult {
        value: res_kronrod,
        error: err,
    }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total estimate meets the tolerances.
pub(crate) fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
        };
    }
    const MAX_SEGMENTS: usize = 512;
    let mut segments = vec![(a, b, qk15(&f, a, b))];
    loop {
        let value: f64 = segments.iter().map(|s| s.2.value).sum();
        let error: f64 = segments.iter().map(|s| s.2.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || segments.len() >= MAX_SEGMENTS {
            return QuadResult { value, error };
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .map(|(i, _)| i)
            .expect("non-empty segment list");
        let (lo, hi, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        segments.push((lo, mid, qk15(&f, lo, mid)));
        segments.push((mid, hi, qk15(&f, mid, hi)));
    }
}
