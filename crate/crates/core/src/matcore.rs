//! Dense complex matrices, the identity gate, and LU determinants.
//!
//! Matrices here are small (k rarely above 8) and stored row-major. The gate
//! measures the Frobenius distance to the identity against the radius `1/k`
//! inside which both representation formulas hold.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute floor below which a pivot is treated as zero.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Square complex matrix of order `k >= 1`, stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    k: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(k: usize, data: Vec<Complex64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        if data.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                found: data.len(),
            });
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                pos / k,
                pos % k
            )));
        }
        Ok(Self { k, data })
    }

    /// Real matrix from row-major values. Panics on a shape mismatch.
    pub fn from_real(k: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), k * k, "expected {} values", k * k);
        Self::new(k, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .expect("finite real entries")
    }

    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(k > 0, "order must be at least 1");
        let data = (0..k * k).map(|i| f(i / k, i % k)).collect();
        Self { k, data }
    }

    pub fn zeros(k: usize) -> Self {
        Self::from_fn(k, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn identity(k: usize) -> Self {
        Self::from_fn(k, |r, c| {
            if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        Self::from_fn(values.len(), |r, c| {
            if r == c {
                values[r]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Order `k` of the matrix.
    #[inline]
    pub fn order(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.k + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            k: self.k,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    /// `self - 1`, the deviation from the identity.
    pub fn minus_identity(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.k {
            out[(i, i)] -= 1.0;
        }
        out
    }

    /// `1 + self`.
    pub fn plus_identity(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.k {
            out[(i, i)] += 1.0;
        }
        out
    }

    /// Writes `self * z` into `out`.
    #[inline]
    pub fn mul_vec_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(z.len(), self.k);
        debug_assert_eq!(out.len(), self.k);
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.k];
        self.mul_vec_into(z, &mut out);
        out
    }

    /// Row sums `sum_l m[r][l]`.
    pub fn row_sums(&self) -> Vec<Complex64> {
        (0..self.k).map(|r| self.row(r).iter().sum()).collect()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.k, other.k, "matrix orders differ");
        Self {
            k: self.k,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.k + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.k + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.k, rhs.k, "matrix orders differ");
        let k = self.k;
        ComplexMatrix::from_fn(k, |r, c| {
            (0..k).map(|i| self.get(r, i) * rhs.get(i, c)).sum()
        })
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[Complex64]> = (0..self.k).map(|r| self.row(r)).collect();
        f.debug_struct("ComplexMatrix")
            .field("k", &self.k)
            .field("rows", &rows)
            .finish()
    }
}

/// Frobenius norm `(sum |m_rl|^2)^(1/2)`.
pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.as_slice()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Position of a matrix relative to the ball `|A - 1| < 1/k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateStatus {
    pub norm_of_deviation: f64,
    pub threshold: f64,
    pub inside_strict: bool,
    pub inside_closed: bool,
}

impl GateStatus {
    /// Gate status of `1 + m` computed directly from the deviation `m`.
    pub fn of_deviation(m: &ComplexMatrix) -> Self {
        let norm = frobenius_norm(m);
        let threshold = 1.0 / m.order() as f64;
        Self {
            norm_of_deviation: norm,
            threshold,
            inside_strict: norm < threshold,
            inside_closed: norm <= threshold,
        }
    }

    /// `norm_of_deviation` as a fraction of `threshold`.
    pub fn fraction(&self) -> f64 {
        self.norm_of_deviation / self.threshold
    }
}

pub fn gate(a: &ComplexMatrix) -> GateStatus {
    GateStatus::of_deviation(&a.minus_identity())
}

/// Returns an error unless `a` lies strictly inside the gate.
pub fn require_strict_gate(a: &ComplexMatrix) -> Result<GateStatus> {
    let g = gate(a);
    if g.inside_strict {
        Ok(g)
    } else {
        Err(Error::GateViolation {
            norm: g.norm_of_deviation,
            threshold: g.threshold,
        })
    }
}

/// Determinant by LU factorisation with partial pivoting on modulus.
///
/// Returns zero when every candidate pivot in a column is below [`PIVOT_FLOOR`].
pub fn lu_det(a: &ComplexMatrix) -> Complex64 {
    let k = a.order();
    let mut lu = a.as_slice().to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..k {
        let (piv_row, piv_mod) =
            (col..k)
                .map(|r| (r, lu[r * k + col].norm()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_mod < PIVOT_FLOOR {
            return Complex64::new(0.0, 0.0);
        }
        if piv_row != col {
            for c in 0..k {
                lu.swap(col * k + c, piv_row * k + c);
            }
            det = -det;
        }
        let pivot = lu[col * k + col];
        det *= pivot;
        for r in col + 1..k {
            let factor = lu[r * k + col] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col + 1..k {
                let upper = lu[col * k + c];
                lu[r * k + c] -= factor * upper;
            }
        }
    }
    det
}

/// One step of Gaussian elimination on the first column.
///
/// Returns `a[0][0]` and the `(k-1)x(k-1)` matrix
/// `b[r][l] = a[r][l] - a[r][0] a[0][l] / a[0][0]` for `r, l >= 1`,
/// so that `det(a) = pivot * det(b)`.
pub fn schur_reduce_step(a: &ComplexMatrix) -> Result<(Complex64, ComplexMatrix)> {
    let k = a.order();
    if k < 2 {
        return Err(Error::InvalidMatrix(
            "elimination step needs order at least 2".into(),
        ));
    }
    let pivot = a.get(0, 0);
    if pivot.norm() < PIVOT_FLOOR {
        return Err(Error::PivotZero {
            modulus: pivot.norm(),
        });
    }
    let b = ComplexMatrix::from_fn(k - 1, |r, l| {
        let (r, l) = (r + 1, l + 1);
        a.get(r, l) - a.get(r, 0) / pivot * a.get(0, l)
    });
    Ok((pivot, b))
}
