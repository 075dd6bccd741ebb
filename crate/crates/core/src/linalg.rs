//! Dense Hermitian linear algebra helpers.
//!
//! [`HermitianCholesky`] keeps its lower factor row-major so that both the
//! factorization and the forward substitution run over contiguous row
//! prefixes. The factor is plain data, which lets estimator state be written
//! to disk and reloaded without refactorizing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::{Error, Result};

/// Rows below this count are updated serially.
const PAR_ROWS: usize = 192;

/// `A = L L^H` factorization of a Hermitian positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCholesky {
    n: usize,
    /// Row-major lower triangle, entries above the diagonal are zero.
    lower: Vec<Complex64>,
}

#[inline]
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // sum a_i * conj(b_i)
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.im * y.re - x.re * y.im;
    }
    Complex64::new(re, im)
}

impl HermitianCholesky {
    /// Factorizes `a`, reading only its lower triangle.
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dim(
                "cholesky",
                format!("{n}x{n}"),
                format!("{n}x{}", a.ncols()),
            ));
        }
        let mut lower = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..=i {
                lower[i * n + j] = a[(i, j)];
            }
        }
        for j in 0..n {
            let (head, tail) = lower.split_at_mut((j + 1) * n);
            let row_j = &mut head[j * n..];
            let d = row_j[j].re - row_j[..j].iter().map(|v| v.norm_sqr()).sum::<f64>();
            if !d.is_finite() || d <= 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let pivot = d.sqrt();
            row_j[j] = Complex64::new(pivot, 0.0);
            let prefix = &row_j[..j];
            let update = |row_i: &mut [Complex64]| {
                let s = row_i[j] - dot_conj(&row_i[..j], prefix);
                row_i[j] = s / pivot;
            };
            if n - j > PAR_ROWS {
                tail.par_chunks_mut(n).for_each(update);
            } else {
                tail.chunks_mut(n).for_each(update);
            }
        }
        Ok(Self { n, lower })
    }

    /// Factorizes `a`; on failure retries once with `jitter * I` added.
    pub fn with_jitter(a: &DMatrix<Complex64>, jitter: f64) -> Result<Self> {
        match Self::new(a) {
            Ok(f) => Ok(f),
            Err(Error::NotPositiveDefinite { pivot, value }) => {
                log::warn!(
                    "cholesky failed at pivot {pivot} ({value:e}); retrying with jitter {jitter:e}"
                );
                let mut shifted = a.clone();
                for i in 0..shifted.nrows() {
                    shifted[(i, i)] += Complex64::new(jitter, 0.0);
                }
                Self::new(&shifted)
            }
            Err(e) => Err(e),
        }
    }

    /// Rebuilds a factor from its row-major lower triangle.
    pub fn from_lower(n: usize, lower: Vec<Complex64>) -> Result<Self> {
        if lower.len() != n * n {
            return Err(Error::dim("cholesky factor", n * n, lower.len()));
        }
        Ok(Self { n, lower })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major lower triangle of `L`.
    pub fn lower_row_major(&self) -> &[Complex64] {
        &self.lower
    }

    pub fn l(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.n, self.n, &self.lower)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length");
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i + 1];
            let mut s = b[i];
            for (l, y) in row[..i].iter().zip(&b[..i]) {
                s -= l * y;
            }
            b[i] = s / row[i].re;
        }
        for i in (0..n).rev() {
            let row = &self.lower[i * n..i * n + i + 1];
            let xi = b[i] / row[i].re;
            b[i] = xi;
            for (l, y) in row[..i].iter().zip(&mut b[..i]) {
                *y -= l.conj() * xi;
            }
        }
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(b.nrows(), self.n, "rhs rows");
        let mut x = b.clone();
        // column-major storage: each column is a contiguous slice
        x.as_mut_slice()
            .par_chunks_mut(self.n.max(1))
            .for_each(|col| self.solve_in_place(col));
        x
    }
}

/// Principal square root of a Hermitian PSD matrix via eigendecomposition;
/// negative eigenvalues are clipped to zero.
pub fn hermitian_sqrt(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = a.clone().symmetric_eigen();
    let roots = eig
        .eigenvalues
        .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(r.re);
    }
    &scaled * v.adjoint()
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest entrywise deviation of `a` from its conjugate transpose.
pub fn hermitian_defect(a: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..=i {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hpd(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut a = &g * g.adjoint();
        for i in 0..n {
            a[(i, i)] += Complex64::new(0.1, 0.0);
        }
        a
    }

    #[test]
    fn factor_reconstructs_input() {
        for n in [1, 3, 17, 260] {
            let a = random_hpd(n, n as u64);
            let f = HermitianCholesky::new(&a).unwrap();
            let l = f.l();
            let err = (&l * l.adjoint() - &a).map(|v| v.norm()).max();
            assert!(err < 1e-10 * a.map(|v| v.norm()).max(), "n={n} err={err}");
        }
    }

    #[test]
    fn solve_residual() {
        let a = random_hpd(300, 7);
        let f = HermitianCholesky::new(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = DMatrix::from_fn(300, 4, |_, _| Complex64::new(rng.random(), rng.random()));
        let x = f.solve(&b);
        let res = (&a * &x - &b).norm() / b.norm();
        assert!(res < 1e-10, "{res}");
    }

    #[test]
    fn matches_nalgebra_factor() {
        let a = random_hpd(40, 3);
        let ours = HermitianCholesky::new(&a).unwrap().l();
        let theirs = a.clone().cholesky().unwrap().l();
        assert!((ours - theirs).map(|v| v.norm()).max() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            HermitianCholesky::new(&a),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn jitter_rescues_singular_psd() {
        let ones = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        assert!(HermitianCholesky::new(&ones).is_err());
        assert!(HermitianCholesky::with_jitter(&ones, 1e-9).is_ok());
    }

    #[test]
    fn sqrt_squares_back() {
        let a = random_hpd(12, 9);
        let s = hermitian_sqrt(&a);
        assert!((&s * &s - &a).map(|v| v.norm()).max() < 1e-10);
        assert!(hermitian_defect(&s) < 1e-12);
    }
}
