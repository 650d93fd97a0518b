//! Small complex linear-algebra helpers shared by the model code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn cholesky(m: &CMat, what: &str) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(hermitize(m)).ok_or_else(|| CoreError::NotPositiveDefinite(what.to_string()))
}

pub fn log_det_pd(m: &CMat, what: &str) -> Result<f64> {
    let chol = cholesky(m, what)?;
    Ok(chol_log_det(&chol))
}

pub fn chol_log_det(chol: &Cholesky<Complex64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>()
}

pub fn inverse_pd(m: &CMat, what: &str) -> Result<CMat> {
    Ok(hermitize(&cholesky(m, what)?.inverse()))
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// decreasing order.
pub fn eigh_desc(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitize(m).symmetric_eigenvalues().min()
}

/// Principal square root of a PSD matrix; small negative eigenvalues from
/// round-off are clamped to zero.
pub fn sqrt_psd(m: &CMat) -> CMat {
    let (values, vectors) = eigh_desc(m);
    let d = DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c64(v.max(0.0).sqrt(), 0.0)),
    );
    &vectors * CMat::from_diagonal(&d) * vectors.adjoint()
}

/// `CN(0, I)` sample of length `n`.
pub fn sample_cn<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(s * re, s * im)
    })
}

pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

/// Block-diagonal Hermitian matrix stored block by block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiag {
    pub blocks: Vec<CMat>,
}

impl BlockDiag {
    pub fn new(blocks: Vec<CMat>) -> Self {
        Self { blocks }
    }

    pub fn zeros(count: usize, dim: usize) -> Self {
        Self {
            blocks: vec![CMat::zeros(dim, dim); count],
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let d = b.nrows();
            out.view_mut((off, off), (d, d)).copy_from(b);
            off += d;
        }
        out
    }

    pub fn add(&self, other: &BlockDiag) -> BlockDiag {
        BlockDiag {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> BlockDiag {
        BlockDiag {
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn inverse(&self, what: &str) -> Result<BlockDiag> {
        Ok(BlockDiag {
            blocks: self
                .blocks
                .iter()
                .map(|b| inverse_pd(b, what))
                .collect::<Result<_>>()?,
        })
    }

    pub fn log_det(&self, what: &str) -> Result<f64> {
        self.blocks.iter().map(|b| log_det_pd(b, what)).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}
