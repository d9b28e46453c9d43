//! The real embedding `Psi(A_1 + i A_2) = [[A_1, -A_2], [A_2, A_1]]`.
//!
//! `Psi` is an injective ring homomorphism and `det Psi(A) = |det A|^2`.

use std::ops::{Index, Mul};

use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, PIVOT_FLOOR};

/// Square real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl Mul for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.n, rhs.n, "order mismatch");
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for r in 0..n {
            for j in 0..n {
                let a = self.get(r, j);
                for c in 0..n {
                    data[r * n + c] += a * rhs.get(j, c);
                }
            }
        }
        RealMatrix { n, data }
    }
}

impl std::fmt::Debug for RealMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n)).finish()
    }
}

pub fn psi(a: &ComplexMatrix) -> RealMatrix {
    let k = a.order();
    let n = 2 * k;
    let mut data = vec![0.0; n * n];
    for r in 0..k {
        for c in 0..k {
            let z = a.get(r, c);
            data[r * n + c] = z.re;
            data[r * n + c + k] = -z.im;
            data[(r + k) * n + c] = z.im;
            data[(r + k) * n + c + k] = z.re;
        }
    }
    RealMatrix { n, data }
}

/// Determinant by LU with partial pivoting; zero once a pivot drops below
/// [`PIVOT_FLOOR`].
pub fn real_det(m: &RealMatrix) -> f64 {
    let n = m.n;
    let mut a = m.data.clone();
    let mut det = 1.0;
    for col in 0..n {
        let (p, max) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if max < PIVOT_FLOOR {
            return 0.0;
        }
        if p != col {
            for c in 0..n {
                a.swap(col * n + c, p * n + c);
            }
            det = -det;
        }
        let pivot = a[col * n + col];
        det *= pivot;
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor != 0.0 {
                for c in col + 1..n {
                    a[r * n + c] -= factor * a[col * n + c];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::lu_det;
    use crate::matcore::tests::{gated_strategy, matrix_strategy};
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn psi_examples() {
        for k in 1..=4 {
            assert_eq!(
                psi(&ComplexMatrix::identity(k)),
                RealMatrix::identity(2 * k)
            );
        }
        let i = ComplexMatrix::new(1, vec![Complex64::new(0.0, 1.0)]).unwrap();
        assert_eq!(psi(&i).as_slice(), &[0.0, -1.0, 1.0, 0.0]);

        let a = ComplexMatrix::new(
            2,
            vec![Complex64::new(1.0, 1.0), 0.0.into(), 0.0.into(), 1.0.into()],
        )
        .unwrap();
        #[rustfmt::skip]
        let expected = [
            1.0, 0.0, -1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            1.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        ];
        assert_eq!(psi(&a).as_slice(), &expected);
    }

    #[test]
    fn real_det_examples() {
        assert_eq!(real_det(&RealMatrix::identity(4)), 1.0);
        assert_eq!(
            real_det(&RealMatrix::new(2, vec![0.0, -1.0, 1.0, 0.0]).unwrap()),
            1.0
        );
        assert_eq!(
            real_det(&RealMatrix::new(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap()),
            0.0
        );
        let m = RealMatrix::new(3, vec![2.0, 0.0, 1.0, 1.0, 3.0, 2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((real_det(&m) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(RealMatrix::new(0, vec![]).is_err());
        assert!(RealMatrix::new(2, vec![1.0; 3]).is_err());
        assert!(RealMatrix::new(1, vec![f64::NAN]).is_err());
    }

    fn close(a: &RealMatrix, b: &RealMatrix, tol: f64) -> bool {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| (x - y).abs() <= tol)
    }

    proptest! {
        #[test]
        fn determinant_identity(a in (1usize..=4).prop_flat_map(|k| matrix_strategy(k, 2.0))) {
            let d = lu_det(&a).norm_sqr();
            prop_assert!((real_det(&psi(&a)) - d).abs() <= 1e-9 * (1.0 + d));
        }

        #[test]
        fn determinant_identity_gated(a in (1usize..=4).prop_flat_map(gated_strategy)) {
            let d = lu_det(&a).norm_sqr();
            prop_assert!((real_det(&psi(&a)) - d).abs() <= 1e-10 * (1.0 + d));
        }

        #[test]
        fn psi_is_multiplicative(
            (a, b) in (1usize..=4).prop_flat_map(|k| (matrix_strategy(k, 1.0), matrix_strategy(k, 1.0)))
        ) {
            prop_assert!(close(&psi(&(&a * &b)), &(&psi(&a) * &psi(&b)), 1e-12));
        }

        #[test]
        fn trace_is_twice_real_trace(a in (1usize..=4).prop_flat_map(|k| matrix_strategy(k, 5.0))) {
            prop_assert!((psi(&a).trace() - 2.0 * a.trace().re).abs() <= 1e-12);
        }
    }
}
