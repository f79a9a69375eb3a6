//! Row-major indexing for the D-dimensional discrete torus.
//!
//! A signal on the torus with shape `(n_0, ..., n_{D-1})` is stored flat in
//! row-major order. A shift `tau` acts by `(tau . x)(sigma) = x(sigma + tau)`
//! with per-axis wrap-around.

#[derive(Debug, Clone)]
pub(crate) struct TorusLayout {
    shape: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl TorusLayout {
    pub fn new(shape: &[usize]) -> Self {
        let mut strides = vec![1usize; shape.len()];
        for axis in (0..shape.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * shape[axis + 1];
        }
        let size = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            strides,
            size,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        self.strides
            .iter()
            .map(|&s| {
                let q = rem / s;
                rem %= s;
                q
            })
            .collect()
    }

    #[cfg(test)]
    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Per-axis lookup `tables[a][i] = ((i + tau_a) mod n_a) * stride_a`, so
    /// that `flat(sigma + tau) = sum_a tables[a][sigma_a]`.
    fn shift_tables(&self, tau: &[usize]) -> Vec<Vec<usize>> {
        self.shape
            .iter()
            .zip(tau)
            .zip(&self.strides)
            .map(|((&n, &t), &s)| (0..n).map(|i| ((i + t) % n) * s).collect())
            .collect()
    }

    /// Visits every lattice point `sigma`, calling `f(flat(sigma), flat(sigma + tau))`.
    fn for_each_shifted(&self, tau: &[usize], mut f: impl FnMut(usize, usize)) {
        let tables = self.shift_tables(tau);
        let ndim = self.ndim();
        let mut idx = vec![0usize; ndim];
        for flat in 0..self.size {
            let shifted: usize = (0..ndim).map(|a| tables[a][idx[a]]).sum();
            f(flat, shifted);
            for a in (0..ndim).rev() {
                idx[a] += 1;
                if idx[a] < self.shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// `(tau . x)` written into `out`.
    pub fn apply_shift(&self, tau: &[usize], x: &[f64], out: &mut [f64]) {
        self.for_each_shifted(tau, |flat, shifted| out[flat] = x[shifted]);
    }

    /// `<m, tau . x> = sum_sigma m(sigma) x(sigma + tau)`.
    pub fn dot_shifted(&self, m: &[f64], x: &[f64], tau: &[usize]) -> f64 {
        let mut acc = 0.0;
        self.for_each_shifted(tau, |flat, shifted| acc += m[flat] * x[shifted]);
        acc
    }

    /// `|m - tau . x|^2`.
    pub fn dist_sq_shifted(&self, m: &[f64], x: &[f64], tau: &[usize]) -> f64 {
        let mut acc = 0.0;
        self.for_each_shifted(tau, |flat, shifted| {
            let d = m[flat] - x[shifted];
            acc += d * d;
        });
        acc
    }

    /// Offsets of the composition `tau + tau'` (acting first with `tau'`).
    pub fn compose(&self, tau: &[usize], tau2: &[usize]) -> Vec<usize> {
        self.shape
            .iter()
            .zip(tau.iter().zip(tau2))
            .map(|(&n, (&a, &b))| (a + b) % n)
            .collect()
    }

    pub fn inverse(&self, tau: &[usize]) -> Vec<usize> {
        self.shape
            .iter()
            .zip(tau)
            .map(|(&n, &a)| (n - a) % n)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dim_shift() {
        let lay = TorusLayout::new(&[4]);
        let x = [0.0, 1.0, 0.0, 0.0];
        let mut out = [0.0; 4];
        lay.apply_shift(&[1], &x, &mut out);
        assert_eq!(out, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_dim_roundtrip() {
        let lay = TorusLayout::new(&[3, 4]);
        assert_eq!(lay.size(), 12);
        for flat in 0..12 {
            assert_eq!(lay.flatten(&lay.unflatten(flat)), flat);
        }
    }

    #[test]
    fn shifted_dot_matches_manual() {
        let lay = TorusLayout::new(&[2, 2]);
        // x laid out as [x00, x01, x10, x11]
        let x = [1.0, 2.0, 3.0, 4.0];
        let m = [1.0, 0.0, 0.0, 0.0];
        // tau = (1, 0): (tau.x)(0,0) = x(1,0) = 3
        assert_eq!(lay.dot_shifted(&m, &x, &[1, 0]), 3.0);
        // tau = (0, 1): (tau.x)(0,0) = x(0,1) = 2
        assert_eq!(lay.dot_shifted(&m, &x, &[0, 1]), 2.0);
    }
}
