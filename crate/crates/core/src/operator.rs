//! Matrix-free linear operators.

use nalgebra::DMatrix;

/// A real linear map `x ↦ Ax` with its exact adjoint.
pub trait LinearOperator: Sync {
    /// Length of the input vector `x`.
    fn n_in(&self) -> usize;
    /// Length of the output vector `Ax`.
    fn n_out(&self) -> usize;
    /// Writes `A x` into `out` (overwriting it).
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// Writes `Aᵀ y` into `out` (overwriting it).
    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_out()];
        self.apply(x, &mut out);
        out
    }

    fn apply_adjoint_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_in()];
        self.apply_adjoint(y, &mut out);
        out
    }
}

/// The identity on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn n_in(&self) -> usize {
        self.0
    }

    fn n_out(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

impl LinearOperator for DMatrix<f64> {
    fn n_in(&self) -> usize {
        self.ncols()
    }

    fn n_out(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (c, &xc) in x.iter().enumerate() {
            if xc != 0.0 {
                for (o, a) in out.iter_mut().zip(self.column(c).iter()) {
                    *o += a * xc;
                }
            }
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.column(c).iter().zip(y).map(|(a, b)| a * b).sum();
        }
    }
}

/// `A ∘ B`: applies `inner` first, then `outer`.
pub struct Composed<'a> {
    pub outer: &'a dyn LinearOperator,
    pub inner: &'a dyn LinearOperator,
}

impl LinearOperator for Composed<'_> {
    fn n_in(&self) -> usize {
        self.inner.n_in()
    }

    fn n_out(&self) -> usize {
        self.outer.n_out()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mid = self.inner.apply_vec(x);
        self.outer.apply(&mid, out);
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        let mid = self.outer.apply_adjoint_vec(y);
        self.inner.apply_adjoint(&mid, out);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_adjoint_is_transpose() {
        let a = DMatrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64 - 5.0);
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = [0.3, 1.0, -1.0];
        let ax = a.apply_vec(&x);
        let aty = a.apply_adjoint_vec(&y);
        assert!((dot(&ax, &y) - dot(&x, &aty)).abs() < 1e-12);
        let direct = &a * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(ax, direct.as_slice());
    }
}
