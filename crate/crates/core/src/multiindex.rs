//! Multi-indices and multi-index matrices.
//!
//! A multi-index matrix `alpha` assigns a non-negative exponent to each entry
//! of a `k x k` matrix. The *balanced* ones, whose r-th row sum equals their
//! r-th column sum for every r, index the nonzero Taylor coefficients of
//! `1/det(1 + M)` at `M = 0`. They are the contingency tables whose row and
//! column margins are both `J`.

use std::fmt;

use num_complex::Complex64;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;

/// Vector of non-negative integers `J = (j_1, ..., j_k)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        Self(components)
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `|J| = sum j_r`.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&j| u64::from(j)).sum()
    }

    /// `J! = prod j_r!` when it fits in a `u64`.
    pub fn factorial(&self) -> Option<u64> {
        self.0
            .iter()
            .try_fold(1u64, |acc, &j| acc.checked_mul(factorial_u64(j)?))
    }

    /// `ln(J!)`, valid for any size.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&j| ln_factorial(u64::from(j))).sum()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// `n!` for `n <= 20`.
pub fn factorial_u64(n: u32) -> Option<u64> {
    (1..=u64::from(n)).try_fold(1u64, |acc, i| acc.checked_mul(i))
}

/// Binomial coefficient with checked arithmetic.
pub fn binomial_u64(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// Multinomial coefficient `(sum parts)! / prod parts!` with checked arithmetic.
pub fn multinomial_u64(parts: &[u32]) -> Option<u64> {
    let mut total = 0u64;
    let mut acc = 1u64;
    for &p in parts {
        total += u64::from(p);
        acc = acc.checked_mul(binomial_u64(total, u64::from(p))?)?;
    }
    Some(acc)
}

/// `k x k` matrix of non-negative exponents with cached margins.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndexMatrix {
    k: usize,
    entries: Vec<u32>,
    row_sums: MultiIndex,
    col_sums: MultiIndex,
}

impl MultiIndexMatrix {
    pub fn new(k: usize, entries: Vec<u32>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        if entries.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                found: entries.len(),
            });
        }
        let row_sums = (0..k)
            .map(|r| entries[r * k..(r + 1) * k].iter().sum())
            .collect();
        let col_sums = (0..k)
            .map(|c| (0..k).map(|r| entries[r * k + c]).sum())
            .collect();
        Ok(Self {
            k,
            entries,
            row_sums: MultiIndex(row_sums),
            col_sums: MultiIndex(col_sums),
        })
    }

    pub fn zeros(k: usize) -> Self {
        Self::new(k, vec![0; k * k]).expect("k >= 1")
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.k + c]
    }

    /// The r-th row `alpha_r`.
    pub fn row(&self, r: usize) -> &[u32] {
        &self.entries[r * self.k..(r + 1) * self.k]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// `(|alpha_1|, ..., |alpha_k|)`.
    pub fn row_sums(&self) -> &MultiIndex {
        &self.row_sums
    }

    /// `alpha_1 + ... + alpha_k`.
    pub fn col_sums(&self) -> &MultiIndex {
        &self.col_sums
    }

    pub fn balanced(&self) -> bool {
        self.row_sums == self.col_sums
    }

    /// `|alpha|`.
    pub fn total(&self) -> u64 {
        self.row_sums.total()
    }

    /// `alpha! = prod alpha_{r,l}!` when it fits in a `u64`.
    pub fn factorial(&self) -> Option<u64> {
        self.entries
            .iter()
            .try_fold(1u64, |acc, &a| acc.checked_mul(factorial_u64(a)?))
    }

    pub fn ln_factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&a| ln_factorial(u64::from(a)))
            .sum()
    }
}

impl fmt::Debug for MultiIndexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[u32]> = (0..self.k).map(|r| self.row(r)).collect();
        write!(f, "{rows:?}")
    }
}

/// Greedy left fill: the lexicographically largest vector summing to `total`
/// with `c[i] <= caps[i]`. Returns false when the caps cannot hold `total`.
pub(crate) fn first_bounded(total: u32, caps: &[u32], out: &mut [u32]) -> bool {
    let mut rem = total;
    for (o, &cap) in out.iter_mut().zip(caps) {
        *o = cap.min(rem);
        rem -= *o;
    }
    rem == 0
}

/// Steps `c` to its lexicographic predecessor among vectors with the same sum
/// and `c[i] <= caps[i]`. Returns false when `c` is already the smallest.
pub(crate) fn next_bounded(c: &mut [u32], caps: &[u32]) -> bool {
    let k = c.len();
    if k < 2 {
        return false;
    }
    let mut suffix_sum = c[k - 1];
    let mut suffix_cap = caps[k - 1];
    for i in (0..k - 1).rev() {
        if c[i] > 0 && suffix_cap > suffix_sum {
            c[i] -= 1;
            let ok = first_bounded(suffix_sum + 1, &caps[i + 1..], &mut c[i + 1..]);
            debug_assert!(ok);
            return true;
        }
        suffix_sum += c[i];
        suffix_cap = suffix_cap.saturating_add(caps[i]);
    }
    false
}

/// Iterator over weak compositions of `j` into `k` parts, from `(j, 0, ..., 0)`
/// down to `(0, ..., 0, j)` in lexicographic order.
#[derive(Debug, Clone)]
pub struct WeakCompositions {
    current: Option<Vec<u32>>,
    caps: Vec<u32>,
}

impl Iterator for WeakCompositions {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.current.as_mut()?;
        let out = MultiIndex(cur.clone());
        if !next_bounded(cur, &self.caps) {
            self.current = None;
        }
        Some(out)
    }
}

/// Every length-`k` vector of non-negative integers summing to `j`, each once.
/// There are `C(j + k - 1, k - 1)` of them.
pub fn enumerate_weak_compositions(j: u32, k: usize) -> WeakCompositions {
    assert!(k > 0, "k must be positive");
    let caps = vec![j; k];
    let mut first = vec![0; k];
    first_bounded(j, &caps, &mut first);
    WeakCompositions {
        current: Some(first),
        caps,
    }
}

/// Iterator over all `k x k` non-negative integer matrices whose row-sum and
/// column-sum vectors both equal a given margin `J`.
///
/// Rows `0..k-1` are enumerated by backtracking, each row running through its
/// bounded compositions in lexicographically decreasing order, with column
/// capacities equal to what the rows above left over. The last row is forced
/// to the remaining column capacities.
#[derive(Debug, Clone)]
pub struct BalancedMatrices {
    k: usize,
    margins: Vec<u32>,
    /// rows[r] for r in 0..k-1
    rows: Vec<Vec<u32>>,
    /// caps[r] = column capacity available to row r; caps[k-1] is the forced last row
    caps: Vec<Vec<u32>>,
    done: bool,
}

impl BalancedMatrices {
    fn new(margins: &MultiIndex) -> Self {
        let k = margins.len();
        assert!(k > 0, "margins must be non-empty");
        let mut it = Self {
            k,
            margins: margins.as_slice().to_vec(),
            rows: vec![vec![0; k]; k - 1],
            caps: vec![margins.as_slice().to_vec(); k],
            done: false,
        };
        it.fill_from(0);
        it
    }

    /// Resets rows `from..k-1` to their first compositions.
    fn fill_from(&mut self, from: usize) {
        for r in from..self.k - 1 {
            let ok = first_bounded(self.margins[r], &self.caps[r], &mut self.rows[r]);
            // Remaining capacity always sums to the remaining margins.
            debug_assert!(ok);
            let next_caps: Vec<u32> = self.caps[r]
                .iter()
                .zip(&self.rows[r])
                .map(|(c, x)| c - x)
                .collect();
            self.caps[r + 1] = next_caps;
        }
    }

    fn current(&self) -> MultiIndexMatrix {
        let mut entries = Vec::with_capacity(self.k * self.k);
        for row in &self.rows {
            entries.extend_from_slice(row);
        }
        entries.extend_from_slice(&self.caps[self.k - 1]);
        MultiIndexMatrix::new(self.k, entries).expect("consistent shape")
    }

    fn advance(&mut self) -> bool {
        for r in (0..self.k - 1).rev() {
            if next_bounded(&mut self.rows[r], &self.caps[r]) {
                let next_caps: Vec<u32> = self.caps[r]
                    .iter()
                    .zip(&self.rows[r])
                    .map(|(c, x)| c - x)
                    .collect();
                self.caps[r + 1] = next_caps;
                self.fill_from(r + 1);
                return true;
            }
        }
        false
    }
}

impl Iterator for BalancedMatrices {
    type Item = MultiIndexMatrix;

    fn next(&mut self) -> Option<MultiIndexMatrix> {
        if self.done {
            return None;
        }
        let out = self.current();
        if !self.advance() {
            self.done = true;
        }
        Some(out)
    }
}

/// Every balanced multi-index matrix with margins `j_margins`, each once.
pub fn enumerate_balanced(j_margins: &MultiIndex) -> BalancedMatrices {
    BalancedMatrices::new(j_margins)
}

/// Weight `(-1)^{|J|} J!/alpha!` of a monomial in the balanced series,
/// with `J` taken as the row sums of `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeight {
    pub sign: i8,
    /// Exact coefficient, or `None` once it leaves the `u64` range.
    pub exact: Option<u64>,
    pub log_coefficient: f64,
}

impl TermWeight {
    pub fn coefficient(&self) -> f64 {
        match self.exact {
            Some(c) => c as f64,
            None => self.log_coefficient.exp(),
        }
    }

    pub fn signed(&self) -> f64 {
        f64::from(self.sign) * self.coefficient()
    }
}

/// `prod_r j_r!/alpha_r!` as a product of row multinomials, falling back to
/// log-factorials when the exact integer overflows.
pub fn term_weight(alpha: &MultiIndexMatrix) -> TermWeight {
    let sign = if alpha.total().is_multiple_of(2) {
        1
    } else {
        -1
    };
    let exact = (0..alpha.order()).try_fold(1u64, |acc, r| {
        acc.checked_mul(multinomial_u64(alpha.row(r))?)
    });
    let log_coefficient = alpha.row_sums().ln_factorial() - alpha.ln_factorial();
    TermWeight {
        sign,
        exact,
        log_coefficient,
    }
}

/// `M^alpha = prod m_{r,l}^{alpha_{r,l}}` with `0^0 = 1`.
pub fn monomial_value(m: &ComplexMatrix, alpha: &MultiIndexMatrix) -> Result<Complex64> {
    if m.order() != alpha.order() {
        return Err(Error::DimensionMismatch {
            expected: m.order(),
            found: alpha.order(),
        });
    }
    Ok(m.as_slice()
        .iter()
        .zip(alpha.entries())
        .map(|(z, &a)| z.powu(a))
        .product())
}
