//! Trapezoidal quadrature on the polytorus `(dD)^k`.
//!
//! With `w = A z`, the integral `(2 pi i)^{-k} oint f(z) / (w_1 ... w_k) dz`
//! over the product of unit circles equals `f(0)/det(A)` whenever
//! `|A - 1| < 1/k`. Substituting `z_r = e^{i theta_r}` turns `dz_r` into
//! `i z_r d theta_r`, so the integral is the plain average of
//! `f(z) prod_r z_r / w_r` over the torus. Equally spaced angles make the
//! rule spectrally accurate for integrands analytic near `|z_r| = 1`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::io::json_num;
use crate::matcore::{lu_det, require_strict_gate, ComplexMatrix};
use crate::multiindex::{MultiIndex, MultiIndexMatrix};
use crate::sum::CompensatedSum;

/// Default nodes per dimension.
pub const DEFAULT_NODES: usize = 32;
/// Default cap on the number of integrand evaluations.
pub const DEFAULT_EVAL_BUDGET: u64 = 100_000_000;
/// `|w_r|` below this at a node means the caller bypassed the gate.
pub const NEAR_POLE: f64 = 1e-8;
/// Default entry-circle radius for [`cauchy_coefficient`] at `k = 2`.
pub const DEFAULT_CAUCHY_RADIUS: f64 = 0.1;

/// Tensor-product grid of `n` equally spaced angles per dimension.
#[derive(Debug, Clone)]
pub struct TorusRule {
    dims: usize,
    nodes_per_dim: usize,
    angles: Vec<f64>,
    roots: Vec<Complex64>,
}

impl TorusRule {
    pub fn new(dims: usize, nodes_per_dim: usize) -> Self {
        assert!(dims > 0 && nodes_per_dim > 0, "empty torus rule");
        let angles: Vec<f64> = (0..nodes_per_dim)
            .map(|s| TAU * s as f64 / nodes_per_dim as f64)
            .collect();
        let roots = angles
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        Self {
            dims,
            nodes_per_dim,
            angles,
            roots,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// `e^{i theta_s}` for each node index `s`.
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// `n^k`, or `None` past `u128`.
    pub fn total_nodes(&self) -> Option<u128> {
        (self.nodes_per_dim as u128).checked_pow(u32::try_from(self.dims).ok()?)
    }

    pub fn node(&self, index: &[usize]) -> Vec<Complex64> {
        assert_eq!(index.len(), self.dims);
        index.iter().map(|&s| self.roots[s]).collect()
    }

    /// Visits every node in lexicographic index order, last index fastest.
    pub fn for_each_node(&self, mut f: impl FnMut(&[usize], &[Complex64])) {
        let n = self.nodes_per_dim;
        let mut idx = vec![0usize; self.dims];
        let mut z = vec![self.roots[0]; self.dims];
        loop {
            f(&idx, &z);
            let mut d = self.dims;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < n {
                    z[d] = self.roots[idx[d]];
                    break;
                }
                idx[d] = 0;
                z[d] = self.roots[0];
            }
        }
    }

    fn check_budget(&self, budget: u64) -> Result<u64> {
        match self.total_nodes() {
            Some(total) if total <= u128::from(budget) => Ok(total as u64),
            total => Err(Error::CostGuard {
                required: total.unwrap_or(u128::MAX),
                budget,
            }),
        }
    }
}

/// Entire test functions on `C^k` for the weighted integral.
#[derive(Debug, Clone, PartialEq)]
pub enum HolomorphicTestFn {
    One,
    /// `z_r` (0-based).
    Coordinate(usize),
    /// `z^beta`.
    MonomialPower(MultiIndex),
    /// `exp(sum_r c_r z_r)`.
    ExpLinear(Vec<Complex64>),
    /// `sum_i coeff_i z^{beta_i}`.
    Polynomial(Vec<(MultiIndex, Complex64)>),
    Sum(Vec<HolomorphicTestFn>),
}

impl HolomorphicTestFn {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            Self::One => Complex64::new(1.0, 0.0),
            Self::Coordinate(r) => z[*r],
            Self::MonomialPower(beta) => monomial(z, beta),
            Self::ExpLinear(c) => c.iter().zip(z).map(|(a, b)| a * b).sum::<Complex64>().exp(),
            Self::Polynomial(terms) => terms.iter().map(|(beta, c)| c * monomial(z, beta)).sum(),
            Self::Sum(parts) => parts.iter().map(|f| f.eval(z)).sum(),
        }
    }

    /// `f(0)`.
    pub fn at_origin(&self) -> Complex64 {
        match self {
            Self::One | Self::ExpLinear(_) => Complex64::new(1.0, 0.0),
            Self::Coordinate(_) => Complex64::new(0.0, 0.0),
            Self::MonomialPower(beta) => {
                Complex64::new(if beta.total() == 0 { 1.0 } else { 0.0 }, 0.0)
            }
            Self::Polynomial(terms) => terms
                .iter()
                .filter(|(beta, _)| beta.total() == 0)
                .map(|(_, c)| *c)
                .sum(),
            Self::Sum(parts) => parts.iter().map(|f| f.at_origin()).sum(),
        }
    }

    fn check_dims(&self, k: usize) -> Result<()> {
        let mismatch = |found| Err(Error::DimensionMismatch { expected: k, found });
        match self {
            Self::One => Ok(()),
            Self::Coordinate(r) if *r >= k => mismatch(*r + 1),
            Self::Coordinate(_) => Ok(()),
            Self::MonomialPower(beta) if beta.len() != k => mismatch(beta.len()),
            Self::MonomialPower(_) => Ok(()),
            Self::ExpLinear(c) if c.len() != k => mismatch(c.len()),
            Self::ExpLinear(_) => Ok(()),
            Self::Polynomial(terms) => match terms.iter().find(|(b, _)| b.len() != k) {
                Some((b, _)) => mismatch(b.len()),
                None => Ok(()),
            },
            Self::Sum(parts) => parts.iter().try_for_each(|f| f.check_dims(k)),
        }
    }
}

impl std::ops::Add for HolomorphicTestFn {
    type Output = HolomorphicTestFn;
    fn add(self, rhs: Self) -> Self {
        HolomorphicTestFn::Sum(vec![self, rhs])
    }
}

fn monomial(z: &[Complex64], beta: &MultiIndex) -> Complex64 {
    z.iter()
        .zip(beta.as_slice())
        .map(|(zi, &b)| zi.powu(b))
        .product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub nodes_per_dim: usize,
    pub evaluations: u64,
    /// `|value_n - value_{n/2}|` for even `n`, from the even-index subgrid.
    pub refinement_delta: Option<f64>,
}

#[derive(Serialize)]
struct QuadJson {
    value: ValueJson,
    n: usize,
    evaluations: u64,
    refinement_delta: Option<Box<RawValue>>,
}

#[derive(Serialize)]
struct ValueJson {
    re: Box<RawValue>,
    im: Box<RawValue>,
}

impl QuadResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&QuadJson {
            value: ValueJson {
                re: json_num(self.value.re),
                im: json_num(self.value.im),
            },
            n: self.nodes_per_dim,
            evaluations: self.evaluations,
            refinement_delta: self.refinement_delta.map(json_num),
        })
        .expect("quadrature result serialises")
    }
}

/// `1/det(a)` by the torus rule with `n` nodes per dimension.
pub fn eval_contour(a: &ComplexMatrix, n: usize) -> Result<QuadResult> {
    eval_contour_f(a, &HolomorphicTestFn::One, n)
}

/// `f(0)/det(a)` by the torus rule with `n` nodes per dimension.
pub fn eval_contour_f(a: &ComplexMatrix, f: &HolomorphicTestFn, n: usize) -> Result<QuadResult> {
    eval_contour_f_with_budget(a, f, n, DEFAULT_EVAL_BUDGET)
}

/// As [`eval_contour_f`], failing with `CostGuard` when `n^k > budget`.
pub fn eval_contour_f_with_budget(
    a: &ComplexMatrix,
    f: &HolomorphicTestFn,
    n: usize,
    budget: u64,
) -> Result<QuadResult> {
    require_strict_gate(a)?;
    let k = a.order();
    f.check_dims(k)?;
    if n == 0 {
        return Err(Error::DomainViolation(
            "need at least one node per dimension".into(),
        ));
    }
    let rule = TorusRule::new(k, n);
    let evaluations = rule.check_budget(budget)?;

    let mut full = CompensatedSum::new();
    let mut half = CompensatedSum::new();
    let track_half = n.is_multiple_of(2);
    let mut w = vec![Complex64::new(0.0, 0.0); k];
    let mut failure = None;
    rule.for_each_node(|idx, z| {
        if failure.is_some() {
            return;
        }
        a.mul_vec_into(z, &mut w);
        let mut v = f.eval(z);
        for (row, (zr, wr)) in z.iter().zip(&w).enumerate() {
            let modulus = wr.norm();
            if modulus < NEAR_POLE {
                failure = Some(Error::NearPole { row, modulus });
                return;
            }
            v *= zr / wr;
        }
        full.add(v);
        if track_half && idx.iter().all(|s| s % 2 == 0) {
            half.add(v);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let value = full.value() / evaluations as f64;
    let refinement_delta = track_half.then(|| {
        let coarse = half.value() / ((n / 2) as f64).powi(k as i32);
        (value - coarse).norm()
    });
    Ok(QuadResult {
        value,
        nodes_per_dim: n,
        evaluations,
        refinement_delta,
    })
}

/// `(2 pi i)^{-1} oint dz_1 / w_row` with `z_2..z_k` held at `fixed`.
///
/// Tends to `1/a[0][0]` for `row == 0` and to zero for every other row.
/// `row` is 0-based and `fixed` holds the `k - 1` remaining coordinates.
pub fn lemma1_integral(
    a: &ComplexMatrix,
    row: usize,
    fixed: &[Complex64],
    n: usize,
) -> Result<Complex64> {
    require_strict_gate(a)?;
    let k = a.order();
    if row >= k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: row + 1,
        });
    }
    if fixed.len() + 1 != k {
        return Err(Error::DimensionMismatch {
            expected: k - 1,
            found: fixed.len(),
        });
    }
    if let Some((index, z)) = fixed
        .iter()
        .enumerate()
        .find(|(_, z)| (z.norm() - 1.0).abs() > crate::series::PHASE_TOLERANCE)
    {
        return Err(Error::NonUnitPhase {
            index: index + 1,
            modulus: z.norm(),
        });
    }
    if n == 0 {
        return Err(Error::DomainViolation("need at least one node".into()));
    }
    let coeffs = a.row(row);
    let rest: Complex64 = coeffs[1..].iter().zip(fixed).map(|(c, z)| c * z).sum();
    let rule = TorusRule::new(1, n);
    let mut acc = CompensatedSum::new();
    for &z1 in rule.roots() {
        let w = coeffs[0] * z1 + rest;
        if w.norm() < NEAR_POLE {
            return Err(Error::NearPole {
                row,
                modulus: w.norm(),
            });
        }
        acc.add(z1 / w);
    }
    Ok(acc.value() / n as f64)
}

/// Minimum of `|w_r(t)| - (1 - t)` along the linear deformation
/// `A(t) = 1 + t (A - 1)` of the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyReport {
    /// Minimum slack over grid points with `t > 0`.
    pub min_slack: f64,
    /// The `t` at which `min_slack` occurs.
    pub argmin_t: f64,
    /// Minimum slack at `t = 0`, where `|w_r| = 1 - t` holds with equality
    /// (nonzero only through rounding of `|z_r|`).
    pub boundary_slack: f64,
    pub t_samples: usize,
    pub z_samples: usize,
}

impl HomotopyReport {
    /// True when the deformation stays clear of every coordinate hyperplane.
    pub fn certified(&self) -> bool {
        self.min_slack > 0.0
    }
}

/// Samples the deformation on a uniform `t` grid (endpoints included) and
/// `z_samples` seeded uniform points of the torus.
pub fn homotopy_safety_check(
    a: &ComplexMatrix,
    t_samples: usize,
    z_samples: usize,
    seed: u64,
) -> Result<HomotopyReport> {
    require_strict_gate(a)?;
    if t_samples < 2 || z_samples == 0 {
        return Err(Error::DomainViolation(
            "need at least two t samples and one torus point".into(),
        ));
    }
    let k = a.order();
    let dev = a.minus_identity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = HomotopyReport {
        min_slack: f64::INFINITY,
        argmin_t: f64::NAN,
        boundary_slack: f64::INFINITY,
        t_samples,
        z_samples,
    };
    let mut z = vec![Complex64::new(0.0, 0.0); k];
    let mut dz = vec![Complex64::new(0.0, 0.0); k];
    for _ in 0..z_samples {
        for zr in z.iter_mut() {
            *zr = Complex64::from_polar(1.0, rng.random_range(0.0..TAU));
        }
        dev.mul_vec_into(&z, &mut dz);
        for i in 0..t_samples {
            let t = i as f64 / (t_samples - 1) as f64;
            for (zr, dr) in z.iter().zip(&dz) {
                let slack = (zr + dr * t).norm() - (1.0 - t);
                if i == 0 {
                    report.boundary_slack = report.boundary_slack.min(slack);
                } else if slack < report.min_slack {
                    report.min_slack = slack;
                    report.argmin_t = t;
                }
            }
        }
    }
    Ok(report)
}

/// `d^alpha [1/det(1 + M)]` at `M = 0` by the Cauchy integral over circles of
/// the given radius in each of the `k^2` entries of `M`.
///
/// Computes `alpha! * mean(det(1+M)^{-1} prod m_{r,l}^{-alpha_{r,l}})` over an
/// `n^{k^2}` grid; requires `radius <= 0.9/k^2` so `1 + M` stays invertible.
pub fn cauchy_coefficient(
    alpha: &MultiIndexMatrix,
    radius: f64,
    n: usize,
    budget: u64,
) -> Result<Complex64> {
    let k = alpha.order();
    let limit = 0.9 / (k * k) as f64;
    if !(radius > 0.0 && radius <= limit) {
        return Err(Error::DomainViolation(format!(
            "radius {radius} must lie in (0, {limit}]"
        )));
    }
    if n == 0 {
        return Err(Error::DomainViolation(
            "need at least one node per dimension".into(),
        ));
    }
    let rule = TorusRule::new(k * k, n);
    let evaluations = rule.check_budget(budget)?;
    let roots = rule.roots();
    let exps = alpha.entries();
    let ident = ComplexMatrix::identity(k);
    let mut acc = CompensatedSum::new();
    let mut entries = vec![Complex64::new(0.0, 0.0); k * k];
    rule.for_each_node(|idx, _| {
        let mut phase = Complex64::new(1.0, 0.0);
        for (e, (&s, &a)) in entries.iter_mut().zip(idx.iter().zip(exps)) {
            *e = roots[s] * radius;
            // e^{-i a theta_s} = root[(n - a s mod n) mod n]
            let back = (n - (a as usize % n) * s % n) % n;
            phase *= roots[back];
        }
        let m = ComplexMatrix::new(k, entries.clone()).expect("finite entries");
        acc.add(lu_det(&(&ident + &m)).inv() * phase);
    });
    let factorial = match alpha.factorial() {
        Some(f) => f as f64,
        None => alpha.ln_factorial().exp(),
    };
    let scale = factorial * radius.powi(-(alpha.total() as i32)) / evaluations as f64;
    Ok(acc.value() * scale)
}
