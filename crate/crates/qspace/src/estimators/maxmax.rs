//! Max-max alternation for the empirical Fréchet mean in the quotient space.
//!
//! Minimises `J(m, (g_i)) = (1/n) sum_i |m - g_i . Y_i|^2` by alternating the
//! registration step (each `g_i` registers `Y_i` onto the current `m`) with
//! the mean step (`m` becomes the mean of the registered observations). Both
//! half-steps minimise `J` in one block of variables, so the objective never
//! increases.

use serde::Serialize;

use crate::action::{ActionSpec, Aligner, CONTINUOUS_TAG};
use crate::error::{Error, Result};
use crate::point::{dist_sq, Point};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Observations per parallel registration block.
const BLOCK: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct MaxMaxResult {
    /// Final mean point (a top-space representative of the estimated orbit).
    pub estimate: Point,
    /// Empirical quotient variance after every mean update; non-increasing,
    /// with the objective at the initial point in front.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the registration assignments stopped changing (finite groups;
    /// continuous alignments never report stability, they converge through
    /// the objective criterion).
    pub final_assignments_stable: bool,
}

impl MaxMaxResult {
    pub fn final_objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("trace holds at least the initial objective")
    }
}

/// Registers every observation onto `m`; returns the mean objective with the
/// fresh assignments.
fn register_all(
    aligner: &Aligner,
    obs: &[Point],
    m: &[f64],
    aligned: &mut [f64],
    tags: &mut [usize],
) -> f64 {
    let dim = m.len();
    let body = |((obs_block, aligned_block), tag_block): ((&[Point], &mut [f64]), &mut [usize])| {
        let mut scratch = aligner.scratch();
        let mut acc = 0.0;
        for ((y, out), tag) in obs_block
            .iter()
            .zip(aligned_block.chunks_exact_mut(dim))
            .zip(tag_block.iter_mut())
        {
            let (_, t) = aligner.align_into(y.coords(), m, out, &mut scratch);
            *tag = t;
            acc += dist_sq(m, out);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let total: f64 = obs
        .par_chunks(BLOCK)
        .zip(aligned.par_chunks_mut(BLOCK * dim))
        .zip(tags.par_chunks_mut(BLOCK))
        .map(body)
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    #[cfg(not(feature = "parallel"))]
    let total: f64 = obs
        .chunks(BLOCK)
        .zip(aligned.chunks_mut(BLOCK * dim))
        .zip(tags.chunks_mut(BLOCK))
        .map(body)
        .sum();
    total / obs.len() as f64
}

/// Runs the alternation from `init` until the assignments stabilise, the
/// relative objective decrease drops below `tol`, or `max_iter` is reached.
pub fn max_max(
    action: &ActionSpec,
    observations: &[Point],
    init: &Point,
    max_iter: usize,
    tol: f64,
) -> Result<MaxMaxResult> {
    if observations.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let dim = action.ambient_dim();
    init.check_dim(dim)?;
    for y in observations {
        y.check_dim(dim)?;
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }

    let aligner = action.aligner();
    let n = observations.len();
    let finite = action.is_finite();
    let mut m: Vec<f64> = init.coords().to_vec();
    let mut aligned = vec![0.0; n * dim];
    let mut tags = vec![0usize; n];
    let mut prev_tags: Option<Vec<usize>> = None;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut stable = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        let objective_at_m = register_all(&aligner, observations, &m, &mut aligned, &mut tags);
        if trace.is_empty() {
            trace.push(objective_at_m);
        }
        iterations += 1;

        // mean step
        for slot in m.iter_mut() {
            *slot = 0.0;
        }
        for row in aligned.chunks_exact(dim) {
            for (slot, &v) in m.iter_mut().zip(row) {
                *slot += v;
            }
        }
        for slot in m.iter_mut() {
            *slot /= n as f64;
        }

        let mut objective = 0.0;
        for row in aligned.chunks_exact(dim) {
            objective += dist_sq(&m, row);
        }
        objective /= n as f64;
        let previous = *trace.last().expect("trace seeded above");
        trace.push(objective);

        stable = finite
            && tags[0] != CONTINUOUS_TAG
            && prev_tags.as_deref().is_some_and(|p| p == tags.as_slice());
        let decrease = previous - objective;
        if stable || decrease.abs() <= tol * previous.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        prev_tags = Some(tags.clone());
    }

    Ok(MaxMaxResult {
        estimate: m.into(),
        objective_trace: trace,
        iterations,
        converged,
        final_assignments_stable: stable,
    })
}
