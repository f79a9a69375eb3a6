//! Isometric group actions: application, registration, quotient distance,
//! cone membership and fixed-point projections.
//!
//! Three actions are supported:
//! - cyclic translation of a signal on a D-dimensional discrete torus,
//! - the coordinate swap on R^2 (translation on a two-point torus, kept as
//!   its own variant because it is the fully worked analytic example),
//! - the rotation group on R^n, acting transitively on spheres.

mod fft;
mod rotation;
mod torus;

pub(crate) use fft::TorusCorrelator;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{dist_sq, dot, norm, Point};
use torus::TorusLayout;

/// Relative threshold below which a point is declared singular (its isotropy
/// group is non-trivial up to rounding).
pub const REGULARITY_REL_TOL: f64 = 1e-9;

/// Candidate window for FFT registration: lags whose correlation is within
/// this relative slack of the maximum are re-checked with exact dot products
/// so that tie-breaking matches the exhaustive scan.
const FFT_CANDIDATE_REL_TOL: f64 = 1e-7;

/// A configured group action on a finite-dimensional space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSpec {
    /// `(tau . x)(sigma) = x(sigma + tau)` on a torus of the given shape,
    /// flattened row-major into `R^(prod shape)`.
    TorusTranslation { shape: Vec<usize> },
    /// `b = 1` swaps the two coordinates of `R^2`.
    SwapR2,
    /// Rotations of `R^n`, `n >= 2`.
    FullRotation { n: usize },
}

/// One transformation, tagged by the action it belongs to.
///
/// Rotations are stored in alignment form: the minimal rotation carrying
/// `source` to `target` (both unit vectors), identity on the orthogonal
/// complement. `source == target` is the identity map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupElement {
    TorusShift { offsets: Vec<usize> },
    SwapBit { b: bool },
    RotationAlign { source: Point, target: Point },
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::TorusShift { offsets } => offsets.iter().all(|&o| o == 0),
            GroupElement::SwapBit { b } => !b,
            GroupElement::RotationAlign { source, target } => source == target,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            GroupElement::TorusShift { .. } => "torus_shift",
            GroupElement::SwapBit { .. } => "swap_bit",
            GroupElement::RotationAlign { .. } => "rotation_align",
        }
    }
}

impl ActionSpec {
    pub fn torus(shape: Vec<usize>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument(
                "torus shape must be a non-empty list of positive integers".into(),
            ));
        }
        Ok(ActionSpec::TorusTranslation { shape })
    }

    pub fn rotation(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "rotation action needs ambient dimension >= 2".into(),
            ));
        }
        Ok(ActionSpec::FullRotation { n })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActionSpec::TorusTranslation { .. } => "torus_translation",
            ActionSpec::SwapR2 => "swap_r2",
            ActionSpec::FullRotation { .. } => "full_rotation",
        }
    }

    /// Dimension of the space the action operates on.
    pub fn ambient_dim(&self) -> usize {
        match self {
            ActionSpec::TorusTranslation { shape } => shape.iter().product(),
            ActionSpec::SwapR2 => 2,
            ActionSpec::FullRotation { n } => *n,
        }
    }

    /// Number of elements for finite groups, `None` for rotations.
    pub fn group_size(&self) -> Option<usize> {
        match self {
            ActionSpec::TorusTranslation { shape } => Some(shape.iter().product()),
            ActionSpec::SwapR2 => Some(2),
            ActionSpec::FullRotation { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.group_size().is_some()
    }

    /// The neutral element.
    pub fn identity(&self) -> GroupElement {
        match self {
            ActionSpec::TorusTranslation { shape } => GroupElement::TorusShift {
                offsets: vec![0; shape.len()],
            },
            ActionSpec::SwapR2 => GroupElement::SwapBit { b: false },
            ActionSpec::FullRotation { n } => {
                let e1 = Point::basis(*n, 0);
                GroupElement::RotationAlign {
                    source: e1.clone(),
                    target: e1,
                }
            }
        }
    }

    /// All elements of a finite group in canonical (lexicographic) order.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        match self {
            ActionSpec::TorusTranslation { shape } => {
                let layout = TorusLayout::new(shape);
                Ok((0..layout.size())
                    .map(|flat| GroupElement::TorusShift {
                        offsets: layout.unflatten(flat),
                    })
                    .collect())
            }
            ActionSpec::SwapR2 => Ok(vec![
                GroupElement::SwapBit { b: false },
                GroupElement::SwapBit { b: true },
            ]),
            ActionSpec::FullRotation { .. } => Err(Error::NotFiniteGroup {
                op: "elements",
                action: self.name(),
            }),
        }
    }

    /// Applies `g . x`.
    pub fn act(&self, g: &GroupElement, x: &Point) -> Result<Point> {
        x.check_dim(self.ambient_dim())?;
        match (self, g) {
            (ActionSpec::TorusTranslation { shape }, GroupElement::TorusShift { offsets }) => {
                if offsets.len() != shape.len()
                    || offsets.iter().zip(shape).any(|(&o, &n)| o >= n)
                {
                    return Err(Error::IncompatibleElement {
                        element: g.kind(),
                        action: self.name(),
                    });
                }
                let layout = TorusLayout::new(shape);
                let mut out = vec![0.0; layout.size()];
                layout.apply_shift(offsets, x.coords(), &mut out);
                Ok(out.into())
            }
            (ActionSpec::SwapR2, GroupElement::SwapBit { b }) => {
                let c = x.coords();
                Ok(if *b {
                    vec![c[1], c[0]].into()
                } else {
                    c.to_vec().into()
                })
            }
            (ActionSpec::FullRotation { n }, GroupElement::RotationAlign { source, target }) => {
                source.check_dim(*n)?;
                target.check_dim(*n)?;
                let mut out = vec![0.0; *n];
                rotation::apply_alignment(source.coords(), target.coords(), x.coords(), &mut out);
                Ok(out.into())
            }
            _ => Err(Error::IncompatibleElement {
                element: g.kind(),
                action: self.name(),
            }),
        }
    }

    /// Composition `g . g'` (acting first with `g'`). Only finite groups
    /// compose in closed form; a product of two plane rotations is generally
    /// not a plane rotation, so alignment-form elements do not compose.
    pub fn compose(&self, g: &GroupElement, g2: &GroupElement) -> Result<GroupElement> {
        match (self, g, g2) {
            (
                ActionSpec::TorusTranslation { shape },
                GroupElement::TorusShift { offsets: a },
                GroupElement::TorusShift { offsets: b },
            ) => {
                let layout = TorusLayout::new(shape);
                Ok(GroupElement::TorusShift {
                    offsets: layout.compose(a, b),
                })
            }
            (ActionSpec::SwapR2, GroupElement::SwapBit { b: a }, GroupElement::SwapBit { b }) => {
                Ok(GroupElement::SwapBit { b: a ^ b })
            }
            (ActionSpec::FullRotation { .. }, _, _) => Err(Error::UnsupportedAction {
                op: "compose",
                action: self.name(),
            }),
            _ => Err(Error::IncompatibleElement {
                element: g.kind(),
                action: self.name(),
            }),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        match (self, g) {
            (ActionSpec::TorusTranslation { shape }, GroupElement::TorusShift { offsets }) => {
                let layout = TorusLayout::new(shape);
                Ok(GroupElement::TorusShift {
                    offsets: layout.inverse(offsets),
                })
            }
            (ActionSpec::SwapR2, GroupElement::SwapBit { b }) => {
                Ok(GroupElement::SwapBit { b: *b })
            }
            (ActionSpec::FullRotation { .. }, GroupElement::RotationAlign { source, target }) => {
                Ok(GroupElement::RotationAlign {
                    source: target.clone(),
                    target: source.clone(),
                })
            }
            _ => Err(Error::IncompatibleElement {
                element: g.kind(),
                action: self.name(),
            }),
        }
    }

    /// Registers `x` onto `m`: returns the element `g` minimising
    /// `|m - g . x|` together with the minimal distance.
    ///
    /// Finite groups are scanned exhaustively in canonical order, keeping the
    /// first (lexicographically smallest) minimiser. For rotations the
    /// minimum is `| |m| - |x| |`, attained by aligning `x` with `m`; if
    /// either is zero every rotation attains it and the identity is returned.
    pub fn register(&self, x: &Point, m: &Point) -> Result<(GroupElement, f64)> {
        let dim = self.ambient_dim();
        x.check_dim(dim)?;
        m.check_dim(dim)?;
        match self {
            ActionSpec::TorusTranslation { shape } => {
                let layout = TorusLayout::new(shape);
                let mut best_flat = 0usize;
                let mut best = f64::INFINITY;
                for flat in 0..layout.size() {
                    let tau = layout.unflatten(flat);
                    let d2 = layout.dist_sq_shifted(m.coords(), x.coords(), &tau);
                    if d2 < best {
                        best = d2;
                        best_flat = flat;
                    }
                }
                Ok((
                    GroupElement::TorusShift {
                        offsets: layout.unflatten(best_flat),
                    },
                    best.max(0.0).sqrt(),
                ))
            }
            ActionSpec::SwapR2 => {
                let d0 = dist_sq(m.coords(), x.coords());
                let sw = [x.coords()[1], x.coords()[0]];
                let d1 = dist_sq(m.coords(), &sw);
                if d0 <= d1 {
                    Ok((GroupElement::SwapBit { b: false }, d0.sqrt()))
                } else {
                    Ok((GroupElement::SwapBit { b: true }, d1.sqrt()))
                }
            }
            ActionSpec::FullRotation { .. } => {
                let nx = x.norm();
                let nm = m.norm();
                if nx == 0.0 || nm == 0.0 {
                    return Ok((self.identity(), (nm - nx).abs()));
                }
                Ok((
                    GroupElement::RotationAlign {
                        source: x.scaled(1.0 / nx),
                        target: m.scaled(1.0 / nm),
                    },
                    (nm - nx).abs(),
                ))
            }
        }
    }

    /// Fast registration on the torus via circular cross-correlation.
    /// Returns the same element and distance as [`ActionSpec::register`].
    pub fn register_fft(&self, x: &Point, m: &Point) -> Result<(GroupElement, f64)> {
        let shape = match self {
            ActionSpec::TorusTranslation { shape } => shape,
            _ => {
                return Err(Error::UnsupportedAction {
                    op: "register_fft",
                    action: self.name(),
                })
            }
        };
        let dim = self.ambient_dim();
        x.check_dim(dim)?;
        m.check_dim(dim)?;
        let corr = TorusCorrelator::new(shape);
        let mut c = Vec::new();
        let (flat, _) = fft_best_lag(&corr, x.coords(), m.coords(), &mut c);
        let layout = corr.layout();
        let tau = layout.unflatten(flat);
        let d2 = layout.dist_sq_shifted(m.coords(), x.coords(), &tau);
        Ok((
            GroupElement::TorusShift { offsets: tau },
            d2.max(0.0).sqrt(),
        ))
    }

    /// Quotient distance `d_Q([x], [m]) = min_g |m - g . x|`.
    pub fn quotient_distance(&self, x: &Point, m: &Point) -> Result<f64> {
        Ok(self.register(x, m)?.1)
    }

    /// `sup_g <g . x, m>`. Computed by an independent route from
    /// [`ActionSpec::register`]: FFT correlation for the torus, two-element
    /// enumeration for the swap, `|x||m|` for rotations.
    pub fn sup_inner(&self, x: &Point, m: &Point) -> Result<f64> {
        let dim = self.ambient_dim();
        x.check_dim(dim)?;
        m.check_dim(dim)?;
        match self {
            ActionSpec::TorusTranslation { shape } => {
                let corr = TorusCorrelator::new(shape);
                let mut c = Vec::new();
                let (_, sup) = fft_best_lag(&corr, x.coords(), m.coords(), &mut c);
                Ok(sup)
            }
            ActionSpec::SwapR2 => {
                let c = x.coords();
                let d0 = dot(c, m.coords());
                let d1 = c[1] * m.coords()[0] + c[0] * m.coords()[1];
                Ok(d0.max(d1))
            }
            ActionSpec::FullRotation { .. } => Ok(x.norm() * m.norm()),
        }
    }

    /// `min_{g != e} |g . t0 - t0|`, the distance of `t0` to the rest of its
    /// orbit. Finite groups only.
    fn orbit_separation(&self, t0: &Point) -> Result<f64> {
        let mut min = f64::INFINITY;
        for g in self.elements()? {
            if g.is_identity() {
                continue;
            }
            let moved = self.act(&g, t0)?;
            min = min.min(moved.sub(t0).norm());
        }
        Ok(min)
    }

    /// Whether the isotropy group of `t0` is trivial, up to rounding
    /// ([`REGULARITY_REL_TOL`]). Finite groups only.
    pub fn is_regular(&self, t0: &Point) -> Result<bool> {
        let sep = self.orbit_separation(t0)?;
        Ok(sep >= REGULARITY_REL_TOL * t0.norm().max(f64::MIN_POSITIVE))
    }

    /// Half the orbit separation: the distance from a regular `t0` to the
    /// boundary of its cone (the nearest bisecting hyperplane).
    pub fn cone_margin(&self, t0: &Point) -> Result<f64> {
        if !self.is_regular(t0)? {
            return Err(Error::SingularPoint);
        }
        Ok(self.orbit_separation(t0)? / 2.0)
    }

    /// Whether `x` lies in the cone of points registered with `t0`
    /// (`<t0, x> >= <g . t0, x> - tol` for all `g`). `t0` must be a regular
    /// point of a finite group.
    pub fn cone_contains(&self, t0: &Point, x: &Point, tol: f64) -> Result<bool> {
        let dim = self.ambient_dim();
        t0.check_dim(dim)?;
        x.check_dim(dim)?;
        if !self.is_regular(t0)? {
            return Err(Error::SingularPoint);
        }
        let base = dot(t0.coords(), x.coords());
        for g in self.elements()? {
            if g.is_identity() {
                continue;
            }
            let moved = self.act(&g, t0)?;
            if dot(moved.coords(), x.coords()) > base + tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Orthogonal projection of `x` onto the set of fixed points.
    ///
    /// Torus: the constant signal at the mean value. Swap: the midpoint on
    /// the diagonal. Rotations: the origin.
    pub fn fixed_point_projection(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.ambient_dim())?;
        match self {
            ActionSpec::TorusTranslation { .. } => {
                let mean = x.coords().iter().sum::<f64>() / x.dim() as f64;
                Ok(vec![mean; x.dim()].into())
            }
            ActionSpec::SwapR2 => {
                let mid = (x.coords()[0] + x.coords()[1]) / 2.0;
                Ok(vec![mid, mid].into())
            }
            ActionSpec::FullRotation { n } => Ok(Point::zeros(*n)),
        }
    }

    /// `dist(x, Fix(M)) = |x - p(x)|`.
    pub fn dist_to_fixed(&self, x: &Point) -> Result<f64> {
        let p = self.fixed_point_projection(x)?;
        Ok(x.sub(&p).norm())
    }

    /// Whether `x` is a fixed point of the whole group, up to rounding.
    pub fn is_fixed_point(&self, x: &Point) -> Result<bool> {
        Ok(self.dist_to_fixed(x)? <= 1e-12 * x.norm().max(1.0))
    }

    pub(crate) fn aligner(&self) -> Aligner {
        Aligner::new(self)
    }
}

/// Scans the FFT correlation array and returns the best lag under the exact
/// tie-break rule. Lags within a small relative window of the raw maximum are
/// re-evaluated with direct dot products (identical arithmetic to the
/// exhaustive route), keeping the smallest flat index among exact ties.
fn fft_best_lag(
    corr: &TorusCorrelator,
    x: &[f64],
    m: &[f64],
    scratch: &mut Vec<f64>,
) -> (usize, f64) {
    corr.correlation(x, m, scratch);
    let mut raw_max = f64::NEG_INFINITY;
    for &v in scratch.iter() {
        if v > raw_max {
            raw_max = v;
        }
    }
    let slack = FFT_CANDIDATE_REL_TOL * (norm(x) * norm(m) + 1.0);
    let layout = corr.layout();
    let mut best_flat = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (flat, &v) in scratch.iter().enumerate() {
        if v >= raw_max - slack {
            let tau = layout.unflatten(flat);
            let exact = layout.dot_shifted(m, x, &tau);
            if exact > best {
                best = exact;
                best_flat = flat;
            }
        }
    }
    (best_flat, best)
}

/// Internal helper for hot loops: per-sample registration values without
/// constructing `GroupElement`s or re-planning FFTs.
pub(crate) enum Aligner {
    Swap,
    Rotation,
    /// Direct scan, used for small torus groups.
    TorusScan(TorusLayout),
    /// FFT correlation with exact re-evaluation of near-maximal lags.
    TorusFft(TorusCorrelator),
}

/// Group sizes up to this use the direct scan instead of FFTs.
const TORUS_SCAN_MAX: usize = 16;

/// Per-thread scratch for [`Aligner`] calls.
pub(crate) struct AlignScratch {
    corr: Vec<f64>,
}

impl Aligner {
    pub fn new(spec: &ActionSpec) -> Self {
        match spec {
            ActionSpec::SwapR2 => Aligner::Swap,
            ActionSpec::FullRotation { .. } => Aligner::Rotation,
            ActionSpec::TorusTranslation { shape } => {
                let layout = TorusLayout::new(shape);
                if layout.size() <= TORUS_SCAN_MAX {
                    Aligner::TorusScan(layout)
                } else {
                    Aligner::TorusFft(TorusCorrelator::new(shape))
                }
            }
        }
    }

    pub fn scratch(&self) -> AlignScratch {
        AlignScratch { corr: Vec::new() }
    }

    /// `sup_g <g . x, m>`, exact under the same tie rules as registration.
    pub fn sup_inner(&self, x: &[f64], m: &[f64], scratch: &mut AlignScratch) -> f64 {
        match self {
            Aligner::Swap => {
                let d0 = x[0] * m[0] + x[1] * m[1];
                let d1 = x[1] * m[0] + x[0] * m[1];
                d0.max(d1)
            }
            Aligner::Rotation => norm(x) * norm(m),
            Aligner::TorusScan(layout) => {
                let mut best = f64::NEG_INFINITY;
                for flat in 0..layout.size() {
                    let tau = layout.unflatten(flat);
                    let d = layout.dot_shifted(m, x, &tau);
                    if d > best {
                        best = d;
                    }
                }
                best
            }
            Aligner::TorusFft(corr) => fft_best_lag(corr, x, m, &mut scratch.corr).1,
        }
    }

    /// Writes the registered point `g(x, m) . x` into `out` and returns the
    /// attained `sup_g <g . x, m>` together with a canonical tag of the
    /// chosen element (flat element index for finite groups,
    /// [`CONTINUOUS_TAG`] for rotations). For rotations with `m = 0` (or
    /// `x = 0`) the identity is used: `out = x`.
    pub fn align_into(
        &self,
        x: &[f64],
        m: &[f64],
        out: &mut [f64],
        scratch: &mut AlignScratch,
    ) -> (f64, usize) {
        match self {
            Aligner::Swap => {
                let d0 = x[0] * m[0] + x[1] * m[1];
                let d1 = x[1] * m[0] + x[0] * m[1];
                if d1 > d0 {
                    out[0] = x[1];
                    out[1] = x[0];
                    (d1, 1)
                } else {
                    out.copy_from_slice(x);
                    (d0, 0)
                }
            }
            Aligner::Rotation => {
                let nx = norm(x);
                let nm = norm(m);
                if nx == 0.0 || nm == 0.0 {
                    out.copy_from_slice(x);
                    return (0.0, CONTINUOUS_TAG);
                }
                let scale = nx / nm;
                for (o, &mi) in out.iter_mut().zip(m) {
                    *o = mi * scale;
                }
                (nx * nm, CONTINUOUS_TAG)
            }
            Aligner::TorusScan(layout) => {
                let mut best = f64::NEG_INFINITY;
                let mut best_flat = 0usize;
                for flat in 0..layout.size() {
                    let tau = layout.unflatten(flat);
                    let d = layout.dot_shifted(m, x, &tau);
                    if d > best {
                        best = d;
                        best_flat = flat;
                    }
                }
                layout.apply_shift(&layout.unflatten(best_flat), x, out);
                (best, best_flat)
            }
            Aligner::TorusFft(corr) => {
                let (flat, sup) = fft_best_lag(corr, x, m, &mut scratch.corr);
                let layout = corr.layout();
                layout.apply_shift(&layout.unflatten(flat), x, out);
                (sup, flat)
            }
        }
    }
}

/// Tag used by [`Aligner::align_into`] when the aligning element lives in a
/// continuous group and has no canonical index.
pub(crate) const CONTINUOUS_TAG: usize = usize::MAX;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_shift_example() {
        let a = ActionSpec::torus(vec![4]).unwrap();
        let g = GroupElement::TorusShift { offsets: vec![1] };
        let x = Point::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.act(&g, &x).unwrap().coords(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn swap_example() {
        let a = ActionSpec::SwapR2;
        let g = GroupElement::SwapBit { b: true };
        let x = Point::new(vec![3.0, 7.0]).unwrap();
        assert_eq!(a.act(&g, &x).unwrap().coords(), &[7.0, 3.0]);
    }

    #[test]
    fn rotation_scales_basis() {
        let a = ActionSpec::rotation(3).unwrap();
        let g = GroupElement::RotationAlign {
            source: Point::basis(3, 0),
            target: Point::basis(3, 1),
        };
        let x = Point::basis(3, 0).scaled(5.0);
        let y = a.act(&g, &x).unwrap();
        assert!((y.coords()[1] - 5.0).abs() < 1e-12);
        assert!(y.coords()[0].abs() < 1e-12 && y.coords()[2].abs() < 1e-12);
    }

    #[test]
    fn register_examples() {
        let a = ActionSpec::torus(vec![4]).unwrap();
        let x = Point::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let m = Point::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let (g, d) = a.register(&x, &m).unwrap();
        assert_eq!(g, GroupElement::TorusShift { offsets: vec![1] });
        assert!(d.abs() < 1e-15);

        let a = ActionSpec::SwapR2;
        let x = Point::new(vec![0.0, 3.0]).unwrap();
        let m = Point::new(vec![3.0, 0.0]).unwrap();
        let (g, d) = a.register(&x, &m).unwrap();
        assert_eq!(g, GroupElement::SwapBit { b: true });
        assert!(d.abs() < 1e-15);

        let a = ActionSpec::rotation(2).unwrap();
        let x = Point::new(vec![3.0, 4.0]).unwrap();
        let m = Point::new(vec![0.0, 2.0]).unwrap();
        let (g, d) = a.register(&x, &m).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
        let aligned = a.act(&g, &x).unwrap();
        assert!((aligned.coords()[0]).abs() < 1e-12);
        assert!((aligned.coords()[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_register_degenerate_cases() {
        let a = ActionSpec::rotation(3).unwrap();
        let x = Point::new(vec![1.0, 2.0, 2.0]).unwrap();
        let zero = Point::zeros(3);
        let (g, d) = a.register(&x, &zero).unwrap();
        assert!(g.is_identity());
        assert!((d - 3.0).abs() < 1e-15);
        let (g, d) = a.register(&zero, &x).unwrap();
        assert!(g.is_identity());
        assert!((d - 3.0).abs() < 1e-15);
    }

    #[test]
    fn sup_inner_examples() {
        let a = ActionSpec::rotation(2).unwrap();
        let x = Point::new(vec![3.0, 4.0]).unwrap();
        let m = Point::new(vec![0.0, 2.0]).unwrap();
        assert!((a.sup_inner(&x, &m).unwrap() - 10.0).abs() < 1e-12);

        let a = ActionSpec::SwapR2;
        let x = Point::new(vec![1.0, 2.0]).unwrap();
        let m = Point::new(vec![2.0, 1.0]).unwrap();
        assert!((a.sup_inner(&x, &m).unwrap() - 5.0).abs() < 1e-15);

        let zero = Point::zeros(2);
        assert_eq!(a.sup_inner(&zero, &m).unwrap(), 0.0);
    }

    #[test]
    fn cone_examples() {
        let a = ActionSpec::SwapR2;
        let t0 = Point::new(vec![2.0, 1.0]).unwrap();
        assert!(a
            .cone_contains(&t0, &Point::new(vec![3.0, 0.0]).unwrap(), 0.0)
            .unwrap());
        assert!(!a
            .cone_contains(&t0, &Point::new(vec![0.0, 3.0]).unwrap(), 0.0)
            .unwrap());
        assert!(a.cone_contains(&t0, &t0, 0.0).unwrap());
        // singular template is rejected
        let sing = Point::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            a.cone_contains(&sing, &t0, 0.0),
            Err(Error::SingularPoint)
        ));
    }

    #[test]
    fn cone_rejected_for_rotations() {
        let a = ActionSpec::rotation(2).unwrap();
        let t0 = Point::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            a.cone_contains(&t0, &t0, 0.0),
            Err(Error::NotFiniteGroup { .. })
        ));
    }

    #[test]
    fn fixed_point_projections() {
        let a = ActionSpec::torus(vec![4]).unwrap();
        let x = Point::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = a.fixed_point_projection(&x).unwrap();
        assert_eq!(p.coords(), &[2.5, 2.5, 2.5, 2.5]);
        assert!((a.dist_to_fixed(&x).unwrap() - 5.0f64.sqrt()).abs() < 1e-12);
        // projection is idempotent and the residual is orthogonal to Fix(M)
        let p2 = a.fixed_point_projection(&p).unwrap();
        assert_eq!(p.coords(), p2.coords());
        let residual = x.sub(&p);
        assert!(residual.dot(&p).abs() < 1e-12);

        let a = ActionSpec::SwapR2;
        let x = Point::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(a.fixed_point_projection(&x).unwrap().coords(), &[2.0, 2.0]);
        assert!((a.dist_to_fixed(&x).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);

        let a = ActionSpec::rotation(3).unwrap();
        let x = Point::new(vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(a.fixed_point_projection(&x).unwrap().coords(), &[0.0; 3]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = ActionSpec::SwapR2;
        let x = Point::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            a.quotient_distance(&x, &x),
            Err(Error::DimensionMismatch { .. })
        ));
        let g = GroupElement::TorusShift { offsets: vec![0] };
        let y = Point::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            a.act(&g, &y),
            Err(Error::IncompatibleElement { .. })
        ));
    }
}
