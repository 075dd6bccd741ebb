//! Orthogonal unit-modulus pilot matrices built from Zadoff-Chu sequences.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

fn is_prime(n: usize) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Root-`root` Zadoff-Chu sequence of odd prime length `tau`:
/// `exp(-j pi root n (n + 1) / tau)`.
pub fn zadoff_chu(tau: usize, root: usize) -> Result<Vec<Complex64>> {
    if tau.is_multiple_of(2) || !is_prime(tau) {
        return Err(Error::Usage(format!(
            "Zadoff-Chu length must be an odd prime, got {tau}"
        )));
    }
    if root == 0 || root >= tau || gcd(root, tau) != 1 {
        return Err(Error::Usage(format!(
            "Zadoff-Chu root must be in [1, {tau}) and coprime with {tau}, got {root}"
        )));
    }
    Ok((0..tau)
        .map(|n| {
            // reduce the exponent modulo 2*tau before going to floating point
            let e = (root * n % (2 * tau)) * (n + 1) % (2 * tau);
            Complex64::from_polar(1.0, -PI * e as f64 / tau as f64)
        })
        .collect())
}

/// `tau x K` pilot matrix `P` with unit-modulus entries and `P^H P = tau I_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    matrix: DMatrix<Complex64>,
    root: usize,
}

impl PilotMatrix {
    /// Column `k` is the root sequence cyclically shifted by `k * floor(tau / K)`.
    pub fn zadoff_chu(tau: usize, users: usize, root: usize) -> Result<Self> {
        if users == 0 || users > tau {
            return Err(Error::Usage(format!(
                "need 1 <= K <= tau, got K = {users}, tau = {tau}"
            )));
        }
        let seq = zadoff_chu(tau, root)?;
        let stride = tau / users;
        let matrix = DMatrix::from_fn(tau, users, |u, k| seq[(u + k * stride) % tau]);
        Ok(Self { matrix, root })
    }

    /// DFT columns `exp(-j 2 pi u k / tau)`, for pilot lengths that are not
    /// odd primes.
    pub fn dft(tau: usize, users: usize) -> Result<Self> {
        if users == 0 || users > tau {
            return Err(Error::Usage(format!(
                "need 1 <= K <= tau, got K = {users}, tau = {tau}"
            )));
        }
        let matrix = DMatrix::from_fn(tau, users, |u, k| {
            Complex64::from_polar(1.0, -2.0 * PI * ((u * k) % tau) as f64 / tau as f64)
        });
        Ok(Self { matrix, root: 0 })
    }

    /// Wraps an arbitrary `tau x K` matrix after checking unit modulus and
    /// orthogonality.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let (tau, users) = matrix.shape();
        if users == 0 || users > tau {
            return Err(Error::Usage(format!(
                "need 1 <= K <= tau, got {tau}x{users}"
            )));
        }
        if matrix.iter().any(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Usage("pilot entries must have unit modulus".into()));
        }
        let gram = matrix.adjoint() * &matrix;
        for i in 0..users {
            for j in 0..users {
                let want = if i == j { tau as f64 } else { 0.0 };
                if (gram[(i, j)] - want).norm() > 1e-9 * tau as f64 {
                    return Err(Error::Usage("pilot columns are not orthogonal".into()));
                }
            }
        }
        Ok(Self { matrix, root: 0 })
    }

    pub fn tau(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn users(&self) -> usize {
        self.matrix.ncols()
    }

    /// Zadoff-Chu root, 0 for non-ZC pilots.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `P_{u,k}`.
    #[inline]
    pub fn entry(&self, u: usize, k: usize) -> Complex64 {
        self.matrix[(u, k)]
    }

    /// Dense `P_bar = P (x) I_M`, `M tau x M K`.
    pub fn expanded(&self, antennas: usize) -> DMatrix<Complex64> {
        self.matrix
            .kronecker(&DMatrix::identity(antennas, antennas))
    }

    /// Dense `p_bar_k = p_k (x) I_M`, `M tau x M`.
    pub fn expanded_column(&self, k: usize, antennas: usize) -> DMatrix<Complex64> {
        self.matrix
            .column(k)
            .kronecker(&DMatrix::<Complex64>::identity(antennas, antennas))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_defect(pm: &PilotMatrix) -> f64 {
        let g = pm.matrix().adjoint() * pm.matrix();
        let tau = pm.tau() as f64;
        let mut worst = 0.0f64;
        for i in 0..pm.users() {
            for j in 0..pm.users() {
                let want = if i == j { tau } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).norm());
            }
        }
        worst
    }

    #[test]
    fn zc_basic_properties() {
        let z = zadoff_chu(5, 1).unwrap();
        assert_eq!(z[0], Complex64::new(1.0, 0.0));
        assert!(z.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zc_has_ideal_cyclic_autocorrelation() {
        for (tau, root) in [(31, 1), (31, 7), (61, 5)] {
            let z = zadoff_chu(tau, root).unwrap();
            for lag in 1..tau {
                let c: Complex64 = (0..tau).map(|n| z[n] * z[(n + lag) % tau].conj()).sum();
                assert!(c.norm() <= 1e-9, "tau={tau} lag={lag} |c|={}", c.norm());
            }
        }
    }

    #[test]
    fn zc_rejects_bad_parameters() {
        assert!(zadoff_chu(9, 1).is_err());
        assert!(zadoff_chu(2, 1).is_err());
        assert!(zadoff_chu(7, 0).is_err());
        assert!(zadoff_chu(7, 7).is_err());
    }

    #[test]
    fn pilot_matrices_are_orthogonal() {
        for (tau, k, tol) in [
            (5, 2, 1e-12),
            (31, 3, 1e-9),
            (5, 1, 1e-12),
            (61, 3, 1e-9),
            (31, 31, 1e-9),
        ] {
            let pm = PilotMatrix::zadoff_chu(tau, k, 1).unwrap();
            assert_eq!(pm.matrix().shape(), (tau, k));
            assert!(identity_defect(&pm) < tol, "tau={tau} K={k}");
        }
        assert!(PilotMatrix::zadoff_chu(5, 6, 1).is_err());
        assert!(PilotMatrix::zadoff_chu(5, 0, 1).is_err());
    }

    #[test]
    fn dft_fallback_is_orthogonal() {
        let pm = PilotMatrix::dft(8, 3).unwrap();
        assert!(identity_defect(&pm) < 1e-9);
        assert!(PilotMatrix::from_matrix(pm.matrix().clone()).is_ok());
        let mut bad = pm.matrix().clone();
        bad[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!(PilotMatrix::from_matrix(bad).is_err());
    }

    #[test]
    fn kronecker_expansion() {
        let one = Complex64::new(1.0, 0.0);
        let pm = PilotMatrix {
            matrix: DMatrix::from_element(2, 1, one),
            root: 0,
        };
        let pbar = pm.expanded(2);
        let z = Complex64::new(0.0, 0.0);
        let want = DMatrix::from_row_slice(4, 2, &[one, z, z, one, one, z, z, one]);
        assert_eq!(pbar, want);

        let pm = PilotMatrix::zadoff_chu(5, 2, 1).unwrap();
        let pbar = pm.expanded(3);
        assert_eq!(pbar.shape(), (15, 6));
        for k in 0..2 {
            let col = pm.expanded_column(k, 3);
            assert_eq!(col, pbar.columns(3 * k, 3));
            let g = col.adjoint() * &col;
            assert!(
                (g - DMatrix::identity(3, 3) * Complex64::new(5.0, 0.0))
                    .map(|v| v.norm())
                    .max()
                    < 1e-12
            );
            // each 3x3 block is P_{u,k} I_3
            for u in 0..5 {
                let block = col.rows(3 * u, 3);
                assert!(
                    (block - DMatrix::identity(3, 3) * pm.entry(u, k))
                        .map(|v| v.norm())
                        .max()
                        == 0.0
                );
            }
        }
        let gram = pbar.adjoint() * &pbar;
        assert!(
            (gram - DMatrix::identity(6, 6) * Complex64::new(5.0, 0.0))
                .map(|v| v.norm())
                .max()
                < 1e-12
        );
    }
}
