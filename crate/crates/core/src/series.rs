//! Power-series evaluations of `1/det(1 + M)`.
//!
//! * [`eval_series_r`]: the balanced multi-index series, summed degree by
//!   degree over `|J|`.
//! * [`eval_series_s`] and [`eval_s_closed`]: the relaxed series without the
//!   balance constraint, which collapses to a product of geometric series in
//!   the row sums.
//! * [`eval_tracelog`]: `exp(sum_{j>=1} (-1)^j tr(M^j)/j)`.
//! * [`charpoly_inverse_series`]: `1/det(M - lambda 1)` as a series in `1/lambda`.
//!
//! Every sum is truncated by total degree and accumulated with compensated
//! summation in a fixed order, so results are reproducible bit for bit.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::value::RawValue;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::io::json_num;
use crate::matcore::{frobenius_norm, ComplexMatrix, GateStatus};
use crate::multiindex::{
    binomial_u64, enumerate_weak_compositions, first_bounded, next_bounded, MultiIndexMatrix,
};
use crate::sum::CompensatedSum;

/// Default truncation degree of the balanced series for a matrix of order `k`.
pub fn default_max_degree(k: usize) -> u32 {
    if k <= 3 {
        16
    } else {
        10
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesMethod {
    BalancedR,
    RelaxedS,
    TraceLog,
}

/// Partial sum after all terms of one total degree (or one trace power).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOrder {
    pub total_degree: u32,
    pub partial_sum: Complex64,
    pub terms_added: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub method: SeriesMethod,
    pub orders: Vec<SeriesOrder>,
    pub final_value: Complex64,
    pub truncation_degree: u32,
    /// Gate of `1 + M`. Outside the closed gate the series may diverge.
    pub gate: GateStatus,
}

#[derive(Serialize)]
struct OrderJson {
    degree: u32,
    re: Box<RawValue>,
    im: Box<RawValue>,
    terms: u64,
}

#[derive(Serialize)]
struct ComplexJson {
    re: Box<RawValue>,
    im: Box<RawValue>,
}

#[derive(Serialize)]
struct ReportJson {
    method: SeriesMethod,
    orders: Vec<OrderJson>,
    #[serde(rename = "final")]
    final_value: ComplexJson,
}

impl SeriesReport {
    fn from_blocks(method: SeriesMethod, m: &ComplexMatrix, blocks: &[(Complex64, u64)]) -> Self {
        let mut acc = CompensatedSum::new();
        let orders: Vec<SeriesOrder> = blocks
            .iter()
            .enumerate()
            .map(|(d, &(block, terms))| {
                acc.add(block);
                SeriesOrder {
                    total_degree: d as u32,
                    partial_sum: acc.value(),
                    terms_added: terms,
                }
            })
            .collect();
        Self {
            method,
            final_value: orders
                .last()
                .map_or(Complex64::new(0.0, 0.0), |o| o.partial_sum),
            truncation_degree: blocks.len().saturating_sub(1) as u32,
            orders,
            gate: GateStatus::of_deviation(m),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            method: self.method,
            orders: self
                .orders
                .iter()
                .map(|o| OrderJson {
                    degree: o.total_degree,
                    re: json_num(o.partial_sum.re),
                    im: json_num(o.partial_sum.im),
                    terms: o.terms_added,
                })
                .collect(),
            final_value: ComplexJson {
                re: json_num(self.final_value.re),
                im: json_num(self.final_value.im),
            },
        };
        serde_json::to_string(&doc).expect("report serialises")
    }
}

/// Per-entry power tables and factorial tables for one series evaluation.
struct Tables {
    k: usize,
    /// powers[(r*k + l) * stride + p] = m_{r,l}^p
    powers: Vec<Complex64>,
    stride: usize,
    fact: Vec<f64>,
    ln_fact: Vec<f64>,
}

/// Largest n with n! finite in f64.
const MAX_F64_FACTORIAL: usize = 170;

impl Tables {
    fn new(m: &ComplexMatrix, max_power: u32) -> Self {
        let k = m.order();
        let stride = max_power as usize + 1;
        let mut powers = Vec::with_capacity(k * k * stride);
        for &z in m.as_slice() {
            let mut p = Complex64::new(1.0, 0.0);
            for _ in 0..stride {
                powers.push(p);
                p *= z;
            }
        }
        let mut fact = vec![1.0f64; stride.min(MAX_F64_FACTORIAL + 1)];
        for n in 1..fact.len() {
            fact[n] = fact[n - 1] * n as f64;
        }
        let ln_fact = (0..stride as u64).map(ln_factorial).collect();
        Self {
            k,
            powers,
            stride,
            fact,
            ln_fact,
        }
    }

    /// `j!/alpha_r! * prod_l m_{r,l}^{alpha_{r,l}}` for one row.
    #[inline]
    fn row_factor(&self, r: usize, j: u32, row: &[u32]) -> Complex64 {
        let j = j as usize;
        let mut mono = Complex64::new(1.0, 0.0);
        for (l, &a) in row.iter().enumerate() {
            mono *= self.powers[(r * self.k + l) * self.stride + a as usize];
        }
        let weight = if j <= MAX_F64_FACTORIAL {
            row.iter()
                .fold(self.fact[j], |w, &a| w / self.fact[a as usize])
        } else {
            let ln = row
                .iter()
                .fold(self.ln_fact[j], |w, &a| w - self.ln_fact[a as usize]);
            ln.exp()
        };
        mono * weight
    }
}

/// Depth-first walk over balanced matrices with margins `j`, visiting them in
/// the same order as [`crate::multiindex::enumerate_balanced`] and carrying
/// the product of row factors down the recursion.
struct BalancedWalk<'a> {
    tables: &'a Tables,
    j: Vec<u32>,
    rows: Vec<Vec<u32>>,
    caps: Vec<Vec<u32>>,
}

impl<'a> BalancedWalk<'a> {
    fn new(tables: &'a Tables) -> Self {
        let k = tables.k;
        Self {
            tables,
            j: vec![0; k],
            rows: vec![vec![0; k]; k],
            caps: vec![vec![0; k]; k],
        }
    }

    fn run(&mut self, margins: &[u32], acc: &mut CompensatedSum, count: &mut u64) {
        self.j.copy_from_slice(margins);
        self.caps[0].copy_from_slice(margins);
        self.visit(0, Complex64::new(1.0, 0.0), acc, count);
    }

    fn visit(&mut self, r: usize, partial: Complex64, acc: &mut CompensatedSum, count: &mut u64) {
        let k = self.tables.k;
        if r == k - 1 {
            let f = self.tables.row_factor(r, self.j[r], &self.caps[r]);
            acc.add(partial * f);
            *count += 1;
            return;
        }
        let ok = first_bounded(self.j[r], &self.caps[r], &mut self.rows[r]);
        debug_assert!(ok);
        loop {
            let f = self.tables.row_factor(r, self.j[r], &self.rows[r]);
            let (head, tail) = self.caps.split_at_mut(r + 1);
            for ((next, cap), x) in tail[0].iter_mut().zip(&head[r]).zip(&self.rows[r]) {
                *next = cap - x;
            }
            self.visit(r + 1, partial * f, acc, count);
            if !next_bounded(&mut self.rows[r], &self.caps[r]) {
                break;
            }
        }
    }
}

/// Degree blocks of the balanced series: entry `d` holds
/// `(-1)^d sum_{|J|=d} J! sum_alpha M^alpha/alpha!` and its term count.
pub(crate) fn balanced_blocks(m: &ComplexMatrix, max_degree: u32) -> Vec<(Complex64, u64)> {
    let k = m.order();
    let tables = Tables::new(m, max_degree);
    let mut walk = BalancedWalk::new(&tables);
    (0..=max_degree)
        .map(|d| {
            let mut acc = CompensatedSum::new();
            let mut count = 0u64;
            for margins in enumerate_weak_compositions(d, k) {
                walk.run(margins.as_slice(), &mut acc, &mut count);
            }
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            (acc.value() * sign, count)
        })
        .collect()
}

/// Balanced series truncated after total degree `max_degree`.
///
/// Inputs outside the closed gate are still evaluated; divergence shows up
/// in the per-degree partial sums rather than as an error.
pub fn eval_series_r(m: &ComplexMatrix, max_degree: u32) -> SeriesReport {
    let blocks = balanced_blocks(m, max_degree);
    SeriesReport::from_blocks(SeriesMethod::BalancedR, m, &blocks)
}

/// Upper bound on the work of [`eval_series_r`] for order `k`: one unit per
/// margin `J` plus `prod_{r<k-1} C(j_r + k - 1, k - 1)` candidate matrices
/// for it (the last row is forced). Stops counting once `cap` is exceeded.
pub fn balanced_cost_bound(k: usize, max_degree: u32, cap: u64) -> u128 {
    let cap = u128::from(cap);
    let mut total: u128 = 0;
    for d in 0..=max_degree {
        for j in enumerate_weak_compositions(d, k) {
            let free = j.as_slice()[..k - 1]
                .iter()
                .map(|&jr| binomial_u64(u64::from(jr) + k as u64 - 1, k as u64 - 1).map(u128::from))
                .try_fold(1u128, |acc, c| acc.checked_mul(c?));
            total = total
                .saturating_add(1)
                .saturating_add(free.unwrap_or(u128::MAX));
            if total > cap {
                return total;
            }
        }
    }
    total
}

/// Number of margins `J` with `|J| <= max_degree`, the work of [`eval_series_s`].
pub fn relaxed_cost(k: usize, max_degree: u32) -> u128 {
    binomial_u64(u64::from(max_degree) + k as u64, k as u64).map_or(u128::MAX, u128::from)
}

fn guard(required: u128, budget: u64) -> Result<()> {
    if required > u128::from(budget) {
        Err(Error::CostGuard { required, budget })
    } else {
        Ok(())
    }
}

/// [`eval_series_r`] after checking [`balanced_cost_bound`] against `budget`.
pub fn eval_series_r_with_budget(
    m: &ComplexMatrix,
    max_degree: u32,
    budget: u64,
) -> Result<SeriesReport> {
    guard(balanced_cost_bound(m.order(), max_degree, budget), budget)?;
    Ok(eval_series_r(m, max_degree))
}

/// [`eval_series_s`] after checking [`relaxed_cost`] against `budget`.
pub fn eval_series_s_with_budget(
    m: &ComplexMatrix,
    max_degree: u32,
    budget: u64,
) -> Result<SeriesReport> {
    guard(relaxed_cost(m.order(), max_degree), budget)?;
    Ok(eval_series_s(m, max_degree))
}

/// `d^alpha [1/det(1+M)]` at `M = 0`: `(-1)^{|alpha|} prod_r |alpha_r|!` when
/// `alpha` is balanced, zero otherwise.
pub fn taylor_coefficient(alpha: &MultiIndexMatrix) -> Complex64 {
    if !alpha.balanced() {
        return Complex64::new(0.0, 0.0);
    }
    let sign = if alpha.total().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let magnitude = match alpha.row_sums().factorial() {
        Some(f) => f as f64,
        None => alpha.row_sums().ln_factorial().exp(),
    };
    Complex64::new(sign * magnitude, 0.0)
}

/// Relaxed series truncated after total degree `max_degree`, in the row-sum
/// power form `sum_{|J|<=N} prod_r (-s_r)^{j_r}`. `terms_added` counts the
/// margins `J` of each degree.
pub fn eval_series_s(m: &ComplexMatrix, max_degree: u32) -> SeriesReport {
    let k = m.order();
    let stride = max_degree as usize + 1;
    let powers: Vec<Vec<Complex64>> = m
        .row_sums()
        .into_iter()
        .map(|s| {
            std::iter::successors(Some(Complex64::new(1.0, 0.0)), |p| Some(p * -s))
                .take(stride)
                .collect()
        })
        .collect();
    let blocks: Vec<(Complex64, u64)> = (0..=max_degree)
        .map(|d| {
            let mut acc = CompensatedSum::new();
            let mut count = 0;
            for j in enumerate_weak_compositions(d, k) {
                acc.add(
                    j.as_slice()
                        .iter()
                        .enumerate()
                        .map(|(r, &jr)| powers[r][jr as usize])
                        .product(),
                );
                count += 1;
            }
            (acc.value(), count)
        })
        .collect();
    SeriesReport::from_blocks(SeriesMethod::RelaxedS, m, &blocks)
}

/// Modulus below which `1 + s_r` is treated as a pole.
pub const ROW_SUM_POLE: f64 = 1e-14;

/// `prod_r 1/(1 + sum_l m_{r,l})`.
pub fn eval_s_closed(m: &ComplexMatrix) -> Result<Complex64> {
    m.row_sums()
        .into_iter()
        .enumerate()
        .try_fold(Complex64::new(1.0, 0.0), |acc, (row, s)| {
            let f = s + 1.0;
            if f.norm() < ROW_SUM_POLE {
                Err(Error::RowSumPole {
                    row,
                    modulus: f.norm(),
                })
            } else {
                Ok(acc / f)
            }
        })
}

/// Tolerance on `|z_r| = 1` for conjugation phases.
pub const PHASE_TOLERANCE: f64 = 1e-12;

/// `D^{-1} M D` for `D = diag(z)`: entry `(r, l)` becomes `z_r^{-1} z_l m_{r,l}`.
pub fn conjugate_by_phase(m: &ComplexMatrix, phases: &[Complex64]) -> Result<ComplexMatrix> {
    let k = m.order();
    if phases.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: phases.len(),
        });
    }
    if let Some((index, z)) = phases
        .iter()
        .enumerate()
        .find(|(_, z)| (z.norm() - 1.0).abs() > PHASE_TOLERANCE)
    {
        return Err(Error::NonUnitPhase {
            index,
            modulus: z.norm(),
        });
    }
    let inv: Vec<Complex64> = phases.iter().map(|z| z.inv()).collect();
    Ok(ComplexMatrix::from_fn(k, |r, l| {
        inv[r] * phases[l] * m.get(r, l)
    }))
}

/// `exp(sum_{j=1}^{max_power} (-1)^j tr(M^j)/j)`.
///
/// Converges when the spectral radius of `M` is below one; the report's gate
/// is only a sufficient check. `orders[p]` holds the value after `p` powers.
pub fn eval_tracelog(m: &ComplexMatrix, max_power: u32) -> SeriesReport {
    let mut log_sum = CompensatedSum::new();
    let mut orders = Vec::with_capacity(max_power as usize + 1);
    orders.push(SeriesOrder {
        total_degree: 0,
        partial_sum: Complex64::new(1.0, 0.0),
        terms_added: 0,
    });
    let mut power = m.clone();
    for j in 1..=max_power {
        if j > 1 {
            power = &power * m;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        log_sum.add(power.trace() * (sign / f64::from(j)));
        orders.push(SeriesOrder {
            total_degree: j,
            partial_sum: log_sum.value().exp(),
            terms_added: 1,
        });
    }
    SeriesReport {
        method: SeriesMethod::TraceLog,
        final_value: orders.last().expect("non-empty").partial_sum,
        truncation_degree: max_power,
        orders,
        gate: GateStatus::of_deviation(m),
    }
}

/// Coefficients of `1/det(M - lambda 1) = sum_j c_j lambda^{-(k+j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharpolySeries {
    /// `c_j = (-1)^k sum_{|J|=j} J! sum_alpha M^alpha/alpha!`
    pub coefficients: Vec<Complex64>,
    /// Power of `lambda` attached to `c_0`, i.e. `-k`.
    pub degree_offset: i32,
    pub truncation: u32,
}

/// Required margin in `|lambda| >= k |M| (1 + margin)`.
pub const CHARPOLY_MARGIN: f64 = 0.05;

/// `1/det(M - lambda 1)` summed to `lambda^{-(k + max_j)}`.
///
/// Valid for `|lambda| >= k |M| (1 + 0.05)` and `lambda != 0`, where the
/// expansion of `1/det(1 - M/lambda)` in the balanced series converges.
pub fn charpoly_inverse_series(
    m: &ComplexMatrix,
    lambda: Complex64,
    max_j: u32,
) -> Result<(Complex64, CharpolySeries)> {
    let k = m.order();
    let bound = k as f64 * frobenius_norm(m) * (1.0 + CHARPOLY_MARGIN);
    if !(lambda.norm() >= bound && lambda.norm() > 0.0) {
        return Err(Error::DomainViolation(format!(
            "|lambda| = {} must be nonzero and at least {bound}",
            lambda.norm()
        )));
    }
    let sign_k = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    // c_j is homogeneous of degree j, so c_j(M) lambda^{-j} = c_j(M/lambda).
    // Summing the scaled blocks avoids overflow in lambda^{-j}.
    let inv = lambda.inv();
    let scaled = m.scale(inv);
    let mut acc = CompensatedSum::new();
    let mut lambda_pow = Complex64::new(1.0, 0.0);
    let coefficients: Vec<Complex64> = balanced_blocks(&scaled, max_j)
        .into_iter()
        .enumerate()
        .map(|(j, (block, _))| {
            // block carries (-1)^j from the balanced series
            let sign_j = if j % 2 == 0 { 1.0 } else { -1.0 };
            let term = block * (sign_k * sign_j);
            acc.add(term);
            let c = term * lambda_pow;
            lambda_pow *= lambda;
            c
        })
        .collect();
    let value = acc.value() * inv.powu(k as u32);
    Ok((
        value,
        CharpolySeries {
            coefficients,
            degree_offset: -(k as i32),
            truncation: max_j,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::lu_det;
    use crate::matcore::tests::gated_strategy;
    use crate::multiindex::{enumerate_balanced, monomial_value, term_weight, MultiIndex};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn example() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[0.1, 0.2, 0.0, -0.1])
    }

    /// Balanced series through the public enumerator and per-term weights.
    fn balanced_by_stream(m: &ComplexMatrix, max_degree: u32) -> Vec<(Complex64, u64)> {
        (0..=max_degree)
            .map(|d| {
                let mut acc = CompensatedSum::new();
                let mut n = 0;
                for j in enumerate_weak_compositions(d, m.order()) {
                    for alpha in enumerate_balanced(&j) {
                        let w = term_weight(&alpha);
                        acc.add(monomial_value(m, &alpha).unwrap() * w.signed());
                        n += 1;
                    }
                }
                (acc.value(), n)
            })
            .collect()
    }

    /// Relaxed series over every alpha with row sums J, no balance constraint.
    fn relaxed_by_multi_index(m: &ComplexMatrix, max_degree: u32) -> Complex64 {
        let k = m.order();
        let mut acc = CompensatedSum::new();
        for d in 0..=max_degree {
            for j in enumerate_weak_compositions(d, k) {
                let row_choices: Vec<Vec<MultiIndex>> = j
                    .as_slice()
                    .iter()
                    .map(|&jr| enumerate_weak_compositions(jr, k).collect())
                    .collect();
                let mut idx = vec![0usize; k];
                'outer: loop {
                    let entries: Vec<u32> = (0..k)
                        .flat_map(|r| row_choices[r][idx[r]].as_slice().to_vec())
                        .collect();
                    let alpha = MultiIndexMatrix::new(k, entries).unwrap();
                    acc.add(monomial_value(m, &alpha).unwrap() * term_weight(&alpha).signed());
                    for r in 0..k {
                        idx[r] += 1;
                        if idx[r] < row_choices[r].len() {
                            continue 'outer;
                        }
                        idx[r] = 0;
                    }
                    break;
                }
            }
        }
        acc.value()
    }

    #[test]
    fn series_r_examples() {
        for d in [0, 3, 9] {
            assert_eq!(
                eval_series_r(&ComplexMatrix::zeros(3), d).final_value,
                c(1.0, 0.0)
            );
        }

        let half = ComplexMatrix::from_real(1, &[0.5]);
        let r = eval_series_r(&half, 10);
        assert!((r.final_value - c(0.666_992_187_5, 0.0)).norm() < 1e-15);
        assert!((eval_series_r(&half, 60).final_value - c(2.0 / 3.0, 0.0)).norm() < 1e-15);

        let r = eval_series_r(&example(), 12);
        assert!((r.final_value - c(1.0 / 0.99, 0.0)).norm() < 1e-10);
        assert_eq!(r.orders.len(), 13);
        assert_eq!(r.truncation_degree, 12);
        assert!(r.gate.inside_closed);
    }

    #[test]
    fn nilpotent_partial_sums_stay_at_one() {
        let n = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        let r = eval_series_r(&n, 20);
        assert!(!r.gate.inside_closed);
        for o in &r.orders {
            assert_eq!(o.partial_sum, c(1.0, 0.0), "degree {}", o.total_degree);
        }
    }

    #[test]
    fn walk_matches_public_enumerator() {
        let m = ComplexMatrix::from_fn(3, |r, l| {
            c(0.03 * (r as f64 + 1.0), -0.02 * l as f64 + 0.01)
        });
        let fast = balanced_blocks(&m, 7);
        let slow = balanced_by_stream(&m, 7);
        for (d, (a, b)) in fast.iter().zip(&slow).enumerate() {
            assert_eq!(a.1, b.1, "term count at degree {d}");
            assert!(
                (a.0 - b.0).norm() < 1e-15,
                "degree {d}: {:?} vs {:?}",
                a.0,
                b.0
            );
        }
    }

    #[test]
    fn report_orders_are_consistent() {
        let r = eval_series_r(&example(), 6);
        assert!(r
            .orders
            .windows(2)
            .all(|w| w[0].total_degree < w[1].total_degree));
        assert_eq!(r.final_value, r.orders.last().unwrap().partial_sum);
        // 2x2 balanced counts by degree: alpha12 = alpha21, so floor(d/2)+1 choices
        // of the pair times (d - 2p + 1) diagonal splits.
        let expect: Vec<u64> = (0..=6u64)
            .map(|d| (0..=d / 2).map(|p| d - 2 * p + 1).sum())
            .collect();
        let got: Vec<u64> = r.orders.iter().map(|o| o.terms_added).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn report_json_shape() {
        let r = eval_series_r(&ComplexMatrix::zeros(1), 1);
        assert_eq!(
            r.to_json(),
            "{\"method\":\"BalancedR\",\"orders\":[\
             {\"degree\":0,\"re\":1.0000000000000000e0,\"im\":0.0000000000000000e0,\"terms\":1},\
             {\"degree\":1,\"re\":1.0000000000000000e0,\"im\":0.0000000000000000e0,\"terms\":1}],\
             \"final\":{\"re\":1.0000000000000000e0,\"im\":0.0000000000000000e0}}"
        );
        let v: serde_json::Value =
            serde_json::from_str(&eval_series_s(&example(), 3).to_json()).unwrap();
        assert_eq!(v["method"], "RelaxedS");
        assert_eq!(v["orders"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn cost_bounds() {
        // k = 1: margins 0..=N, one candidate each
        assert_eq!(balanced_cost_bound(1, 5, u64::MAX), 12);
        // k = 2: sum over |J| <= N of 1 + (j_0 + 1)
        let expected: u128 = (0..=4u128)
            .map(|d| (0..=d).map(|j0| 2 + j0).sum::<u128>())
            .sum();
        assert_eq!(balanced_cost_bound(2, 4, u64::MAX), expected);
        for (k, n) in [(2, 6), (3, 5), (4, 3)] {
            let m = ComplexMatrix::identity(k).scale(c(0.01, 0.0));
            let terms: u64 = eval_series_r(&m, n)
                .orders
                .iter()
                .map(|o| o.terms_added)
                .sum();
            assert!(u128::from(terms) <= balanced_cost_bound(k, n, u64::MAX));
        }
        assert!(balanced_cost_bound(3, 400, 1000) > 1000);
        assert_eq!(relaxed_cost(3, 2), 10);
        let m = example();
        assert!(matches!(
            eval_series_r_with_budget(&m, 12, 10),
            Err(Error::CostGuard { budget: 10, .. })
        ));
        assert_eq!(
            eval_series_r_with_budget(&m, 12, 1_000_000).unwrap(),
            eval_series_r(&m, 12)
        );
        assert!(eval_series_s_with_budget(&m, 12, 10).is_err());
    }

    #[test]
    fn taylor_coefficient_examples() {
        let m = |v: &[u32]| MultiIndexMatrix::new(2, v.to_vec()).unwrap();
        assert_eq!(taylor_coefficient(&m(&[0, 0, 0, 0])), c(1.0, 0.0));
        assert_eq!(taylor_coefficient(&m(&[0, 1, 1, 0])), c(1.0, 0.0));
        assert_eq!(taylor_coefficient(&m(&[0, 1, 0, 0])), c(0.0, 0.0));
        assert_eq!(taylor_coefficient(&m(&[1, 1, 0, 1])), c(0.0, 0.0));
        // rows (2,1): (-1)^3 2! 1!
        assert_eq!(taylor_coefficient(&m(&[1, 1, 1, 0])), c(-2.0, 0.0));
        assert_eq!(taylor_coefficient(&m(&[3, 0, 0, 0])), c(-6.0, 0.0));
    }

    #[test]
    fn series_s_examples() {
        assert_eq!(
            eval_series_s(&ComplexMatrix::zeros(2), 5).final_value,
            c(1.0, 0.0)
        );

        let n = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        let r = eval_series_s(&n, 7);
        let sums: Vec<f64> = r.orders.iter().map(|o| o.partial_sum.re).collect();
        assert_eq!(sums, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);

        let closed = eval_s_closed(&example()).unwrap();
        assert!((eval_series_s(&example(), 60).final_value - closed).norm() < 1e-13);
    }

    #[test]
    fn relaxed_power_form_matches_multi_index_form() {
        let m = ComplexMatrix::from_fn(3, |r, l| c(0.05 * r as f64 - 0.04, 0.03 * l as f64 - 0.02));
        for n in [0, 1, 4, 6] {
            let fast = eval_series_s(&m, n).final_value;
            let slow = relaxed_by_multi_index(&m, n);
            assert!((fast - slow).norm() < 1e-14, "degree {n}");
        }
    }

    #[test]
    fn s_closed_examples() {
        assert_eq!(
            eval_s_closed(&ComplexMatrix::zeros(3)).unwrap(),
            c(1.0, 0.0)
        );
        let d = ComplexMatrix::from_real(2, &[0.2, 0.0, 0.0, -0.2]);
        assert!((eval_s_closed(&d).unwrap() - c(1.041_666_666_666_666_7, 0.0)).norm() < 1e-15);
        let v = eval_s_closed(&example()).unwrap();
        assert!((v - c(0.854_700_854_700_854_7, 0.0)).norm() < 1e-15);
        assert!((v - c(1.0 / 0.99, 0.0)).norm() > 0.1);

        let pole = ComplexMatrix::from_real(2, &[-0.5, -0.5, 0.0, 0.0]);
        assert!(matches!(
            eval_s_closed(&pole),
            Err(Error::RowSumPole { row: 0, .. })
        ));
    }

    #[test]
    fn conjugation_examples() {
        let m = example();
        let ones = vec![c(1.0, 0.0); 2];
        assert_eq!(conjugate_by_phase(&m, &ones).unwrap(), m);

        let d = ComplexMatrix::from_real(2, &[0.3, 0.0, 0.0, -0.7]);
        let phases = [
            Complex64::from_polar(1.0, 0.4),
            Complex64::from_polar(1.0, -2.0),
        ];
        let out = conjugate_by_phase(&d, &phases).unwrap();
        assert!((&out - &d).as_slice().iter().all(|z| z.norm() < 1e-15));

        let n = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        let out = conjugate_by_phase(&n, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(
            out,
            ComplexMatrix::new(2, vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)])
                .unwrap()
        );

        assert!(matches!(
            conjugate_by_phase(&m, &[c(1.0, 0.0), c(1.1, 0.0)]),
            Err(Error::NonUnitPhase { index: 1, .. })
        ));
        assert!(conjugate_by_phase(&m, &[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn tracelog_examples() {
        assert_eq!(
            eval_tracelog(&ComplexMatrix::zeros(2), 10).final_value,
            c(1.0, 0.0)
        );
        let half = ComplexMatrix::from_real(1, &[0.5]);
        assert!((eval_tracelog(&half, 30).final_value - c(2.0 / 3.0, 0.0)).norm() < 1e-9);
        assert!((eval_tracelog(&example(), 40).final_value - c(1.0 / 0.99, 0.0)).norm() < 1e-10);
        assert_eq!(eval_tracelog(&example(), 5).orders.len(), 6);
    }

    #[test]
    fn charpoly_examples() {
        let (v, s) = charpoly_inverse_series(&ComplexMatrix::zeros(2), c(2.0, 0.0), 6).unwrap();
        assert!((v - c(0.25, 0.0)).norm() < 1e-16);
        assert_eq!(s.coefficients[0], c(1.0, 0.0));
        assert!(s.coefficients[1..].iter().all(|z| z.norm() == 0.0));
        assert_eq!(s.degree_offset, -2);

        let (v, s) =
            charpoly_inverse_series(&ComplexMatrix::from_real(1, &[0.3]), c(2.0, 0.0), 40).unwrap();
        assert!((v - c(-0.588_235_294_117_647_1, 0.0)).norm() < 1e-15);
        assert_eq!(s.coefficients[0], c(-1.0, 0.0));

        let m = example();
        let (v, _) = charpoly_inverse_series(&m, c(3.0, 0.0), 20).unwrap();
        let oracle = lu_det(&(&m - &ComplexMatrix::identity(2).scale(c(3.0, 0.0)))).inv();
        assert!((v - oracle).norm() < 1e-10);
        assert!((v - c(0.111_234_705_228_031_15, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn charpoly_rejects_small_lambda() {
        let m = example();
        let bound = 2.0 * frobenius_norm(&m) * 1.05;
        assert!(matches!(
            charpoly_inverse_series(&m, c(bound * 0.99, 0.0), 5),
            Err(Error::DomainViolation(_))
        ));
        assert!(charpoly_inverse_series(&m, c(0.0, bound * 1.01), 5).is_ok());
        assert!(charpoly_inverse_series(&ComplexMatrix::zeros(2), c(0.0, 0.0), 5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn balanced_series_matches_lu(a in (2usize..=3).prop_flat_map(gated_strategy)) {
            let m = a.minus_identity();
            let rate = m.order() as f64 * frobenius_norm(&m);
            prop_assume!(rate < 0.35);
            let n = ((1e-12f64).ln() / rate.ln()).ceil() as u32;
            let r = eval_series_r(&m, n);
            prop_assert!((r.final_value - lu_det(&a).inv()).norm() <= 1e-9);
        }

        #[test]
        fn conjugation_leaves_balanced_series_unchanged(
            a in (2usize..=3).prop_flat_map(gated_strategy),
            angles in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 3),
        ) {
            let m = a.minus_identity();
            let phases: Vec<Complex64> = angles[..m.order()].iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
            let conj = conjugate_by_phase(&m, &phases).unwrap();
            prop_assert!((frobenius_norm(&conj) - frobenius_norm(&m)).abs() < 1e-15);
            let x = eval_series_r(&m, 8);
            let y = eval_series_r(&conj, 8);
            for (p, q) in x.orders.iter().zip(&y.orders) {
                prop_assert!((p.partial_sum - q.partial_sum).norm() < 1e-12);
            }
            let ident = ComplexMatrix::identity(m.order());
            let d1 = lu_det(&(&ident + &m));
            let d2 = lu_det(&(&ident + &conj));
            prop_assert!((d1 - d2).norm() < 1e-14);
        }

        #[test]
        fn tracelog_agrees_with_balanced_series(a in (2usize..=3).prop_flat_map(gated_strategy)) {
            let m = a.minus_identity();
            let rate = m.order() as f64 * frobenius_norm(&m);
            prop_assume!(rate < 0.35);
            let n = ((1e-12f64).ln() / rate.ln()).ceil() as u32;
            let t = eval_tracelog(&m, 60).final_value;
            prop_assert!((t - eval_series_r(&m, n).final_value).norm() <= 1e-8);
        }

        #[test]
        fn charpoly_matches_lu(
            m in (1usize..=3).prop_flat_map(|k| crate::matcore::tests::matrix_strategy(k, 1.0)),
            stretch in 1.05f64..3.0,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let k = m.order();
            let lambda = Complex64::from_polar(stretch * k as f64 * frobenius_norm(&m), angle);
            prop_assume!(lambda.norm() > 0.0);
            let q: f64 = 1.0 / (1.05 * k as f64);
            let n = ((1e-14f64).ln() / q.ln()).ceil() as u32 + 8;
            let (v, _) = charpoly_inverse_series(&m, lambda, n).unwrap();
            let oracle = lu_det(&(&m - &ComplexMatrix::identity(k).scale(lambda))).inv();
            prop_assert!((v - oracle).norm() <= 1e-9 * oracle.norm().max(1.0));
        }
    }
}
