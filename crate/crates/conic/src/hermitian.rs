//! Complex Hermitian matrices carried by real symmetric cones.
//!
//! An `n x n` Hermitian `H = A + jB` maps to the `2n x 2n` real block
//! `[[A, -B], [B, A]]`, which is PSD exactly when `H` is and satisfies
//! `tr(embed(C) embed(X)) = 2 Re tr(C X)`.
//!
//! Inside a program the complex variable is read off a free real PSD block
//! `Y` by averaging, `X = ((Y11 + Y22) + j (Y21 - Y12)) / 2`. The map is
//! linear, sends PSD `Y` to PSD `X` and returns `X` unchanged when `Y` is
//! already an embedding, so no structural equalities are needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ConicError, Result};
use crate::program::{LinExpr, VarId};

const HERMITIAN_TOL: f64 = 1e-10;

pub fn hermitian_defect(h: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn embed_hermitian(h: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    if h.nrows() != h.ncols() {
        return Err(ConicError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let defect = hermitian_defect(h);
    let scale = 1.0 + h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > HERMITIAN_TOL * scale {
        return Err(ConicError::NotHermitian(defect));
    }
    let n = h.nrows();
    let mut y = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            y[(i, j)] = z.re;
            y[(n + i, n + j)] = z.re;
            y[(i, n + j)] = -z.im;
            y[(n + i, j)] = z.im;
        }
    }
    Ok(y)
}

/// Inverse of [`embed_hermitian`], extended to arbitrary symmetric `Y` by
/// the averaging map described in the module docs.
pub fn extract_hermitian(y: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = y.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (y[(i, j)] + y[(n + i, n + j)]),
            0.5 * (y[(n + i, j)] - y[(i, n + j)]),
        )
    })
}

/// Complex `n x n` Hermitian variable backed by a real PSD block of
/// dimension `2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianVar {
    pub var: VarId,
    pub n: usize,
}

impl HermitianVar {
    pub fn new(var: VarId, n: usize) -> Self {
        Self { var, n }
    }

    /// Adds `coef * Re X[i, j]` to `expr`.
    pub fn add_re(&self, expr: &mut LinExpr, i: usize, j: usize, coef: f64) {
        let n = self.n;
        expr.add_entry(self.var, i, j, 0.5 * coef);
        expr.add_entry(self.var, n + i, n + j, 0.5 * coef);
    }

    /// Adds `coef * Im X[i, j]` to `expr`.
    pub fn add_im(&self, expr: &mut LinExpr, i: usize, j: usize, coef: f64) {
        if i == j {
            return;
        }
        let n = self.n;
        expr.add_entry(self.var, n + i, j, 0.5 * coef);
        expr.add_entry(self.var, i, n + j, -0.5 * coef);
    }

    pub fn re(&self, i: usize, j: usize) -> LinExpr {
        let mut e = LinExpr::new();
        self.add_re(&mut e, i, j, 1.0);
        e
    }

    pub fn im(&self, i: usize, j: usize) -> LinExpr {
        let mut e = LinExpr::new();
        self.add_im(&mut e, i, j, 1.0);
        e
    }

    /// Adds `scale * Re(c * X[i, j])`.
    pub fn add_scaled_entry(&self, expr: &mut LinExpr, i: usize, j: usize, c: Complex64, scale: f64) {
        self.add_re(expr, i, j, scale * c.re);
        self.add_im(expr, i, j, -scale * c.im);
    }

    /// Adds `scale * Im(c * X[i, j])`.
    pub fn add_scaled_entry_im(
        &self,
        expr: &mut LinExpr,
        i: usize,
        j: usize,
        c: Complex64,
        scale: f64,
    ) {
        self.add_re(expr, i, j, scale * c.im);
        self.add_im(expr, i, j, scale * c.re);
    }

    /// `Re tr(C X)`; equals `tr(C X)` when `C` is Hermitian.
    pub fn trace_with(&self, c: &DMatrix<Complex64>) -> LinExpr {
        let mut e = LinExpr::new();
        self.add_trace_with(&mut e, c, 1.0);
        e.compact();
        e
    }

    pub fn add_trace_with(&self, expr: &mut LinExpr, c: &DMatrix<Complex64>, scale: f64) {
        debug_assert_eq!(c.nrows(), self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                // Re(C_ij X_ji)
                self.add_scaled_entry(expr, j, i, c[(i, j)], scale);
            }
        }
    }

    pub fn trace(&self) -> LinExpr {
        let mut e = LinExpr::new();
        self.add_trace(&mut e, 1.0);
        e
    }

    pub fn add_trace(&self, expr: &mut LinExpr, scale: f64) {
        for i in 0..self.n {
            self.add_re(expr, i, i, scale);
        }
    }

    /// Real and imaginary parts of `X v`, stacked as `[Re; Im]`.
    pub fn mat_vec(&self, v: &DVector<Complex64>) -> Vec<LinExpr> {
        let n = self.n;
        let mut out = vec![LinExpr::new(); 2 * n];
        for i in 0..n {
            for j in 0..n {
                let c = v[j];
                self.add_scaled_entry(&mut out[i], i, j, c, 1.0);
                self.add_scaled_entry_im(&mut out[n + i], i, j, c, 1.0);
            }
        }
        out.iter_mut().for_each(LinExpr::compact);
        out
    }

    pub fn value(&self, y: &DMatrix<f64>) -> DMatrix<Complex64> {
        extract_hermitian(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::VarValue;

    fn pauli_y() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        )
    }

    #[test]
    fn identity_embeds_to_identity() {
        let id = DMatrix::<Complex64>::identity(3, 3);
        assert_eq!(embed_hermitian(&id).unwrap(), DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn pauli_spectrum_is_doubled() {
        let y = embed_hermitian(&pauli_y()).unwrap();
        let mut eig: Vec<f64> = y.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [-1.0, -1.0, 1.0, 1.0];
        for (got, want) in eig.iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = pauli_y();
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(embed_hermitian(&h), Err(ConicError::NotHermitian(_))));
    }

    #[test]
    fn expression_helpers_match_extracted_values() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.5, -0.25),
                Complex64::new(0.5, 0.25),
                Complex64::new(1.0, 0.0),
            ],
        );
        let y = embed_hermitian(&h).unwrap();
        let values = vec![VarValue::Matrix(y)];
        let x = HermitianVar::new(VarId(0), 2);
        assert!((x.re(1, 0).evaluate(&values) - 0.5).abs() < 1e-15);
        assert!((x.im(1, 0).evaluate(&values) - 0.25).abs() < 1e-15);
        assert!((x.im(0, 1).evaluate(&values) + 0.25).abs() < 1e-15);
        assert!((x.trace().evaluate(&values) - 3.0).abs() < 1e-15);

        let c = pauli_y();
        let direct = (&c * &h).trace().re;
        assert!((x.trace_with(&c).evaluate(&values) - direct).abs() < 1e-14);

        let v = DVector::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(-2.0, 0.5)]);
        let hv = &h * &v;
        let parts = x.mat_vec(&v);
        for i in 0..2 {
            assert!((parts[i].evaluate(&values) - hv[i].re).abs() < 1e-14);
            assert!((parts[2 + i].evaluate(&values) - hv[i].im).abs() < 1e-14);
        }
    }
}
