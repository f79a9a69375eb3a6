//! Plane rotations stored in alignment form.
//!
//! An element is the minimal rotation taking one unit vector (`source`) to
//! another (`target`): it rotates in `span{source, target}` and is the
//! identity on the orthogonal complement. Applying it is O(n); no matrix is
//! ever materialized.

use crate::point::dot;

/// Residual norms below this mean `source` and `target` are parallel (or
/// antipodal) to working precision.
const DEGENERATE_EPS: f64 = 1e-12;

/// Applies the aligning rotation to `x`, writing into `out`.
///
/// `source` and `target` must be unit vectors. The plane basis is built with
/// twice-applied Gram-Schmidt so the map stays orthogonal to machine
/// precision even for nearly (anti)parallel pairs. When they are antipodal
/// the rotation plane is completed with a deterministic companion axis (the
/// standard basis vector least aligned with `source`, lowest index first).
pub(crate) fn apply_alignment(source: &[f64], target: &[f64], x: &[f64], out: &mut [f64]) {
    let c = dot(source, target);
    let mut e2: Vec<f64> = target
        .iter()
        .zip(source)
        .map(|(&vi, &ui)| vi - c * ui)
        .collect();
    if !orthonormalize_against(&mut e2, source) {
        if c >= 0.0 {
            out.copy_from_slice(x);
        } else {
            half_turn(source, x, out);
        }
        return;
    }
    let s = dot(target, &e2);
    rotate_in_plane(source, &e2, c, s, x, out);
}

/// Half-turn in `span{u, companion(u)}`; maps `u` to `-u`.
fn half_turn(u: &[f64], x: &[f64], out: &mut [f64]) {
    let e2 = companion_axis(u);
    let a = dot(u, x);
    let b = dot(&e2, x);
    for (o, (&xi, (&ui, &wi))) in out.iter_mut().zip(x.iter().zip(u.iter().zip(&e2))) {
        *o = xi - 2.0 * a * ui - 2.0 * b * wi;
    }
}

/// Rotation by the angle with cosine `c` and sine `s` in the oriented
/// orthonormal plane `(e1, e2)`, identity on the complement.
fn rotate_in_plane(e1: &[f64], e2: &[f64], c: f64, s: f64, x: &[f64], out: &mut [f64]) {
    let a = dot(e1, x);
    let b = dot(e2, x);
    let coef1 = a * (c - 1.0) - b * s;
    let coef2 = a * s + b * (c - 1.0);
    for (o, (&xi, (&ui, &wi))) in out.iter_mut().zip(x.iter().zip(e1.iter().zip(e2))) {
        *o = xi + coef1 * ui + coef2 * wi;
    }
}

/// Projects `w` against the unit vector `u` a second time, then normalizes.
/// Returns false when `w` is degenerate (below [`DEGENERATE_EPS`]).
fn orthonormalize_against(w: &mut [f64], u: &[f64]) -> bool {
    let r = dot(w, u);
    for (wi, &ui) in w.iter_mut().zip(u) {
        *wi -= r * ui;
    }
    let norm = dot(w, w).sqrt();
    if norm <= DEGENERATE_EPS {
        return false;
    }
    for wi in w.iter_mut() {
        *wi /= norm;
    }
    true
}

/// Unit vector orthogonal to `u`, chosen deterministically.
fn companion_axis(u: &[f64]) -> Vec<f64> {
    let mut best = 0;
    for (i, &ui) in u.iter().enumerate() {
        if ui.abs() < u[best].abs() {
            best = i;
        }
    }
    let mut w: Vec<f64> = u.iter().map(|&ui| -u[best] * ui).collect();
    w[best] += 1.0;
    let ok = orthonormalize_against(&mut w, u);
    debug_assert!(ok, "companion axis degenerate");
    w
}
