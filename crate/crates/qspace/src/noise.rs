//! Noise models for the generative model `X = t0 + eps`, `E(eps) = 0`.
//!
//! Every model has a closed-form second moment `E|eps|^2`, so the
//! decomposition `X = t0 + sigma * eps_normalized` with `E|eps|^2 = 1` is
//! exact rather than estimated.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::stream::{map_chunks, SampleStream};

/// Tolerance for the construction-time checks (probabilities summing to one,
/// mixture mean vanishing).
const CONSTRUCTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// `N(0, scale^2 Id)`.
    IsotropicGaussian { scale: f64 },
    /// Uniform on the solid ball of the given radius.
    UniformBall { radius: f64 },
    /// Finitely supported, mean-zero by construction.
    FiniteMixture { points: Vec<Point>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    kind: NoiseKind,
    dim: usize,
}

impl NoiseSpec {
    pub fn gaussian(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNoise("dimension must be positive".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidNoise(format!(
                "gaussian scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::IsotropicGaussian { scale },
            dim,
        })
    }

    pub fn uniform_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNoise("dimension must be positive".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidNoise(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::UniformBall { radius },
            dim,
        })
    }

    pub fn finite_mixture(points: Vec<Point>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidNoise(
                "mixture needs the same positive number of points and probabilities".into(),
            ));
        }
        let dim = points[0].dim();
        if dim == 0 || points.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidNoise(
                "mixture points must share one positive dimension".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidNoise("probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::InvalidNoise(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mut mean = vec![0.0; dim];
        let mut max_norm: f64 = 1.0;
        for (point, &prob) in points.iter().zip(&probs) {
            max_norm = max_norm.max(point.norm());
            for (m, &c) in mean.iter_mut().zip(point.coords()) {
                *m += prob * c;
            }
        }
        let mean_norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
        if mean_norm > CONSTRUCTION_TOL * max_norm {
            return Err(Error::InvalidNoise(format!(
                "mixture mean has norm {mean_norm:.3e}, expected zero"
            )));
        }
        Ok(Self {
            kind: NoiseKind::FiniteMixture { points, probs },
            dim,
        })
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-coordinate scale for Gaussian noise (used by the finite-group
    /// Gaussian bound and the exact swap bias), `None` otherwise.
    pub fn gaussian_scale(&self) -> Option<f64> {
        match &self.kind {
            NoiseKind::IsotropicGaussian { scale } => Some(*scale),
            _ => None,
        }
    }

    /// Closed-form `E|eps|^2`.
    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            NoiseKind::IsotropicGaussian { scale } => self.dim as f64 * scale * scale,
            NoiseKind::UniformBall { radius } => {
                radius * radius * self.dim as f64 / (self.dim as f64 + 2.0)
            }
            NoiseKind::FiniteMixture { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(p, &w)| w * p.norm() * p.norm())
                .sum(),
        }
    }

    /// The same family of distributions scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidNoise(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        let kind = match &self.kind {
            NoiseKind::IsotropicGaussian { scale } => NoiseKind::IsotropicGaussian {
                scale: scale * factor,
            },
            NoiseKind::UniformBall { radius } => NoiseKind::UniformBall {
                radius: radius * factor,
            },
            NoiseKind::FiniteMixture { points, probs } => NoiseKind::FiniteMixture {
                points: points.iter().map(|p| p.scaled(factor)).collect(),
                probs: probs.clone(),
            },
        };
        Ok(Self {
            kind,
            dim: self.dim,
        })
    }

    /// Splits the model into `(eps_normalized, sigma)` with
    /// `E|eps_normalized|^2 = 1` and `sigma * eps_normalized ~ eps`.
    pub fn normalize_to_unit_energy(&self) -> Result<(Self, f64)> {
        let energy = self.second_moment();
        if energy <= 0.0 {
            return Err(Error::ZeroEnergyNoise);
        }
        let sigma = energy.sqrt();
        Ok((self.scaled(1.0 / sigma)?, sigma))
    }

    /// Draws one sample into `out` (`out.len() == dim`).
    pub fn sample_into(&self, rng: &mut impl Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            NoiseKind::IsotropicGaussian { scale } => {
                for slot in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *slot = scale * z;
                }
            }
            NoiseKind::UniformBall { radius } => {
                let mut norm_sq = 0.0;
                for slot in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *slot = z;
                    norm_sq += z * z;
                }
                let norm = norm_sq.sqrt();
                let u: f64 = rng.gen();
                let r = radius * u.powf(1.0 / self.dim as f64);
                let factor = if norm > 0.0 { r / norm } else { 0.0 };
                for slot in out.iter_mut() {
                    *slot *= factor;
                }
            }
            NoiseKind::FiniteMixture { points, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = points.len() - 1;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                out.copy_from_slice(points[chosen].coords());
            }
        }
    }
}

/// Draws `count` samples with the chunked stream layout: sample `i` lives in
/// chunk `i / chunk_size` and is identical however the chunks are executed.
pub fn sample_noise(spec: &NoiseSpec, stream: &SampleStream, count: usize) -> Result<Vec<Point>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let dim = spec.dim();
    let chunks = map_chunks(stream, count, |_, chunk_count, rng| {
        let mut buf = vec![0.0; chunk_count * dim];
        for k in 0..chunk_count {
            spec.sample_into(rng, &mut buf[k * dim..(k + 1) * dim]);
        }
        buf
    });
    let mut out = Vec::with_capacity(count);
    for chunk in chunks {
        for coords in chunk.chunks_exact(dim) {
            out.push(coords.to_vec().into());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_must_be_centered() {
        let points = vec![
            Point::new(vec![1.0, -1.0]).unwrap(),
            Point::new(vec![-1.0, 1.0]).unwrap(),
        ];
        assert!(NoiseSpec::finite_mixture(points.clone(), vec![0.5, 0.5]).is_ok());
        assert!(NoiseSpec::finite_mixture(points.clone(), vec![0.7, 0.3]).is_err());
        assert!(NoiseSpec::finite_mixture(points, vec![0.6, 0.5]).is_err());
    }

    #[test]
    fn second_moments() {
        let g = NoiseSpec::gaussian(3, 2.0).unwrap();
        assert!((g.second_moment() - 12.0).abs() < 1e-12);
        let b = NoiseSpec::uniform_ball(2, 1.0).unwrap();
        assert!((b.second_moment() - 0.5).abs() < 1e-12);
        let m = NoiseSpec::finite_mixture(
            vec![
                Point::new(vec![1.0, -1.0]).unwrap(),
                Point::new(vec![-1.0, 1.0]).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!((m.second_moment() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_extracts_sigma() {
        // Gaussian in dimension n: sigma = scale * sqrt(n)
        let g = NoiseSpec::gaussian(4, 0.5).unwrap();
        let (norm, sigma) = g.normalize_to_unit_energy().unwrap();
        assert!((sigma - 1.0).abs() < 1e-12);
        assert!((norm.second_moment() - 1.0).abs() < 1e-12);

        let m = NoiseSpec::finite_mixture(
            vec![
                Point::new(vec![1.0, -1.0]).unwrap(),
                Point::new(vec![-1.0, 1.0]).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let (norm, sigma) = m.normalize_to_unit_energy().unwrap();
        assert!((sigma - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((norm.second_moment() - 1.0).abs() < 1e-12);
        // scaling back by sigma reproduces the original second moment
        assert!((norm.scaled(sigma).unwrap().second_moment() - m.second_moment()).abs() < 1e-12);

        // already-normalized spec comes back unchanged (up to rounding)
        let (again, sigma) = norm.normalize_to_unit_energy().unwrap();
        assert!((sigma - 1.0).abs() < 1e-12);
        assert!((again.second_moment() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_energy_rejected() {
        let m = NoiseSpec::finite_mixture(vec![Point::zeros(2)], vec![1.0]).unwrap();
        assert!(matches!(
            m.normalize_to_unit_energy(),
            Err(Error::ZeroEnergyNoise)
        ));
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = NoiseSpec::gaussian(3, 1.0).unwrap();
        let stream = SampleStream::with_chunk_size(11, 16);
        let a = sample_noise(&spec, &stream, 100).unwrap();
        let b = sample_noise(&spec, &stream, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let spec = NoiseSpec::uniform_ball(5, 0.7).unwrap();
        let stream = SampleStream::new(3);
        for p in sample_noise(&spec, &stream, 1000).unwrap() {
            assert!(p.norm() <= 0.7 + 1e-12);
        }
    }
}
