//! Named template generators used by the experiment harness.
//!
//! The periodic-signal generators live on the 1-D torus of the given length;
//! the swap and rotation helpers place templates at a prescribed distance
//! from the fixed-point set.

use rand::Rng;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::stream::SampleStream;

/// Step signal: 1 on the first half of the circle, 0 on the second.
pub fn step_signal(dim: usize) -> Result<Point> {
    if dim < 2 {
        return Err(Error::InvalidArgument("signal needs dim >= 2".into()));
    }
    Point::new((0..dim).map(|i| if i < dim / 2 { 1.0 } else { 0.0 }).collect())
}

/// One full period of a sine wave.
pub fn sine_signal(dim: usize) -> Result<Point> {
    if dim < 2 {
        return Err(Error::InvalidArgument("signal needs dim >= 2".into()));
    }
    let w = 2.0 * std::f64::consts::PI / dim as f64;
    Point::new((0..dim).map(|i| (w * i as f64).sin()).collect())
}

/// Random band-limited signal: seeded Gaussian coefficients on the first
/// `modes` Fourier modes, with a 1/k amplitude roll-off. No constant term, so
/// the signal is orthogonal to the fixed directions.
pub fn random_smooth_signal(dim: usize, seed: u64, modes: usize) -> Result<Point> {
    if dim < 2 || modes == 0 {
        return Err(Error::InvalidArgument(
            "random smooth signal needs dim >= 2 and modes >= 1".into(),
        ));
    }
    let mut rng = SampleStream::new(seed).chunk_rng(0);
    let w = 2.0 * std::f64::consts::PI / dim as f64;
    let coefs: Vec<(f64, f64)> = (1..=modes)
        .map(|_| (rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0))
        .collect();
    Point::new(
        (0..dim)
            .map(|i| {
                coefs
                    .iter()
                    .enumerate()
                    .map(|(k, &(a, b))| {
                        let phase = w * ((k + 1) * i) as f64;
                        (a * phase.cos() + b * phase.sin()) / (k + 1) as f64
                    })
                    .sum()
            })
            .collect(),
    )
}

/// Swap template at distance `dist` from the diagonal, centred at `mid`.
pub fn swap_template(mid: f64, dist: f64) -> Result<Point> {
    if !(dist >= 0.0) {
        return Err(Error::InvalidArgument(
            "distance to the diagonal must be non-negative".into(),
        ));
    }
    let half = dist / 2.0f64.sqrt();
    Point::new(vec![mid + half, mid - half])
}

/// Rotation template of the given norm along the first axis.
pub fn rotation_template(dim: usize, norm: f64) -> Result<Point> {
    if dim < 2 || !(norm > 0.0) {
        return Err(Error::InvalidArgument(
            "rotation template needs dim >= 2 and positive norm".into(),
        ));
    }
    Ok(Point::basis(dim, 0).scaled(norm))
}
