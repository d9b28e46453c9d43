//! Seeded property suite behind `invdet verify`.
//!
//! Each property draws its inputs from its own ChaCha8 stream derived from the
//! suite seed, so adding or reordering properties never perturbs the others,
//! and the report for a given seed is reproducible byte for byte.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::distr::uniform::SampleRange;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::contour::{
    cauchy_coefficient, eval_contour, eval_contour_f, homotopy_safety_check, lemma1_integral,
    HolomorphicTestFn, DEFAULT_CAUCHY_RADIUS, DEFAULT_EVAL_BUDGET,
};
use crate::error::Result;
use crate::generate::{gated_deviation, gated_matrix, gaussian_matrix, with_row_sum_moduli};
use crate::io::{fmt_f64, json_num};
use crate::matcore::{frobenius_norm, gate, lu_det, schur_reduce_step, ComplexMatrix, PIVOT_FLOOR};
use crate::multiindex::{
    enumerate_balanced, enumerate_weak_compositions, MultiIndex, MultiIndexMatrix,
};
use crate::realify::{psi, real_det};
use crate::series::{
    charpoly_inverse_series, conjugate_by_phase, eval_s_closed, eval_series_r, eval_series_s,
    eval_tracelog, taylor_coefficient, CHARPOLY_MARGIN,
};

pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest observed deviation, in the units `tolerance` is stated in.
    pub worst: f64,
    pub tolerance: f64,
    /// Error kind when a case failed with an error instead of a deviation.
    pub error: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
}

#[derive(Serialize)]
struct PropertyJson<'a> {
    name: &'a str,
    passed: bool,
    cases: usize,
    worst: Box<RawValue>,
    tolerance: Box<RawValue>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct SuiteJson<'a> {
    seed: u64,
    passed: bool,
    properties: Vec<PropertyJson<'a>>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SuiteJson {
            seed: self.seed,
            passed: self.passed(),
            properties: self
                .properties
                .iter()
                .map(|p| PropertyJson {
                    name: p.name,
                    passed: p.passed,
                    cases: p.cases,
                    worst: json_num(p.worst),
                    tolerance: json_num(p.tolerance),
                    error: p.error,
                })
                .collect(),
        })
        .expect("suite report serialises")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,passed,cases,worst,tolerance,error\n");
        for p in &self.properties {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.name,
                p.passed,
                p.cases,
                fmt_f64(p.worst),
                fmt_f64(p.tolerance),
                p.error.unwrap_or("")
            ));
        }
        out
    }
}

/// Running maximum of a property: tracks the worst deviation and the first
/// error, and decides pass/fail against `tolerance`.
struct Tracker {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
    error: Option<&'static str>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            cases: 0,
            worst: f64::NEG_INFINITY,
            error: None,
        }
    }

    fn record(&mut self, deviation: f64) {
        self.cases += 1;
        // NaN must fail
        if deviation.is_nan() {
            self.worst = f64::INFINITY;
        } else if deviation > self.worst {
            self.worst = deviation;
        }
    }

    fn check(&mut self, outcome: Result<f64>) {
        match outcome {
            Ok(d) => self.record(d),
            Err(e) => {
                self.cases += 1;
                self.worst = f64::INFINITY;
                self.error.get_or_insert(e.kind());
            }
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name,
            passed: self.error.is_none() && self.worst <= self.tolerance,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
            error: self.error,
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `1 + M` with `|M| / (1/k)` drawn from `range`.
fn gated_in(rng: &mut ChaCha8Rng, k: usize, range: impl SampleRange<f64>) -> ComplexMatrix {
    let frac = rng.random_range(range);
    gated_matrix(rng, k, frac)
}

fn unit(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

/// Laplace expansion along the first row, independent of the LU path.
pub fn cofactor_det(a: &ComplexMatrix) -> Complex64 {
    fn rec(m: &[Complex64], k: usize) -> Complex64 {
        if k == 1 {
            return m[0];
        }
        (0..k)
            .map(|col| {
                let minor: Vec<Complex64> = (1..k)
                    .flat_map(|r| (0..k).filter(move |&c| c != col).map(move |c| (r, c)))
                    .map(|(r, c)| m[r * k + c])
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                m[col] * rec(&minor, k - 1) * sign
            })
            .sum()
    }
    rec(a.as_slice(), a.order())
}

/// Number of `k x k` matrices with row and column sums `j`, by exhaustive
/// filtering over entries `<= min(j_r, j_c)`.
pub fn brute_force_balanced_count(j: &[u32]) -> u64 {
    let k = j.len();
    let caps: Vec<u32> = (0..k * k).map(|i| j[i / k].min(j[i % k])).collect();
    let mut e = vec![0u32; k * k];
    let mut count = 0;
    loop {
        let ok = (0..k).all(|r| {
            (0..k).map(|c| e[r * k + c]).sum::<u32>() == j[r]
                && (0..k).map(|c| e[c * k + r]).sum::<u32>() == j[r]
        });
        count += u64::from(ok);
        let mut i = 0;
        loop {
            if i == e.len() {
                return count;
            }
            if e[i] < caps[i] {
                e[i] += 1;
                break;
            }
            e[i] = 0;
            i += 1;
        }
    }
}

/// Worst per-step geometric decay rate of a truncation-error sequence.
///
/// Works on the tail envelope `max_{d' >= d} e_{d'}`, which removes
/// oscillation, and measures `(env[d + w] / env[d])^{1/w}` over every window
/// of length `window` starting at or after `burn_in` whose far end is still
/// above `floor`. `None` when no such window exists.
pub fn tail_decay_rate(errors: &[f64], floor: f64, burn_in: usize, window: usize) -> Option<f64> {
    let mut envelope = errors.to_vec();
    for d in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[d] = envelope[d].max(envelope[d + 1]);
    }
    (burn_in..envelope.len().saturating_sub(window))
        .filter(|&d| envelope[d + window] > floor)
        .map(|d| (envelope[d + window] / envelope[d]).powf(1.0 / window as f64))
        .reduce(f64::max)
}

/// Truncation degree with `rate^N < 1e-12`.
pub fn series_degree_for(rate: f64) -> u32 {
    ((1e-12f64).ln() / rate.ln()).ceil() as u32
}

/// Nodes per dimension of the Cauchy oracle. Eight aliases degree-8
/// neighbours of `alpha` at `radius^8 ~ 1e-8`; sixteen pushes that to 1e-16.
pub const CAUCHY_NODES: usize = 16;

/// All `k x k` multi-index matrices of total degree `<= max_total`.
pub fn multi_indices_up_to(k: usize, max_total: u32) -> Vec<MultiIndexMatrix> {
    (0..=max_total)
        .flat_map(|d| enumerate_weak_compositions(d, k * k))
        .map(|c| MultiIndexMatrix::new(k, c.as_slice().to_vec()).expect("k*k entries"))
        .collect()
}

type Property = fn(&mut ChaCha8Rng) -> PropertyResult;

const PROPERTIES: &[Property] = &[
    lu_matches_cofactor,
    det_is_multiplicative,
    gate_implies_invertible,
    schur_step_contracts,
    balanced_enumeration_is_complete,
    balanced_count_permutation_symmetric,
    series_r_matches_lu,
    series_r_decays_geometrically,
    series_r_conjugation_invariant,
    series_s_matches_closed_form,
    tracelog_matches_series_r,
    charpoly_matches_lu,
    contour_matches_lu,
    contour_node_count_stable,
    contour_weighted_matches_f0,
    contour_is_linear_in_f,
    first_variable_rows,
    homotopy_slack_positive,
    cauchy_matches_taylor,
    psi_det_identity,
    psi_is_multiplicative,
    psi_trace,
];

pub fn run_suite(seed: u64) -> SuiteReport {
    SuiteReport {
        seed,
        properties: PROPERTIES
            .iter()
            .enumerate()
            .map(|(i, p)| p(&mut stream(seed, i as u64)))
            .collect(),
    }
}

fn lu_matches_cofactor(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("lu_matches_cofactor", 1e-10);
    for _ in 0..100 {
        let k = rng.random_range(1..=4);
        let a = gaussian_matrix(rng, k);
        let d = cofactor_det(&a);
        t.record((lu_det(&a) - d).norm() / (1.0 + d.norm()));
    }
    t.finish()
}

fn det_is_multiplicative(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("det_is_multiplicative", 1e-9);
    for _ in 0..100 {
        let k = rng.random_range(1..=5);
        let a = gated_in(rng, k, 0.01..0.999);
        let b = gated_in(rng, k, 0.01..0.999);
        let prod = lu_det(&a) * lu_det(&b);
        t.record((lu_det(&(&a * &b)) - prod).norm() / (1.0 + prod.norm()));
    }
    t.finish()
}

fn gate_implies_invertible(rng: &mut ChaCha8Rng) -> PropertyResult {
    // deviation: 0 when |det| clears the pivot floor, 1 otherwise
    let mut t = Tracker::new("gate_implies_invertible", 0.0);
    for _ in 0..200 {
        let k = rng.random_range(1..=6);
        let a = gated_in(rng, k, 0.9..1.0 - 1e-9);
        let inside = gate(&a).inside_strict;
        t.record(if inside && lu_det(&a).norm() < PIVOT_FLOOR {
            1.0
        } else {
            0.0
        });
    }
    t.finish()
}

fn schur_step_contracts(rng: &mut ChaCha8Rng) -> PropertyResult {
    // worst of |B - 1| (k-1) - 1 and the relative determinant defect; both <= 0 / 1e-10
    let mut t = Tracker::new("schur_step_contracts", 1e-10);
    for _ in 0..200 {
        let k = rng.random_range(2..=5);
        let a = gated_in(rng, k, 0.01..1.0 - 1e-12);
        t.check(schur_reduce_step(&a).map(|(pivot, b)| {
            let excess = frobenius_norm(&b.minus_identity()) * (k - 1) as f64 - 1.0;
            let det_a = lu_det(&a);
            let defect = (pivot * lu_det(&b) - det_a).norm() / (1.0 + det_a.norm());
            if excess > 0.0 {
                f64::INFINITY
            } else {
                defect
            }
        }));
    }
    t.finish()
}

fn random_margins(rng: &mut ChaCha8Rng, k: usize, max: u32) -> Vec<u32> {
    (0..k).map(|_| rng.random_range(0..=max)).collect()
}

fn balanced_enumeration_is_complete(rng: &mut ChaCha8Rng) -> PropertyResult {
    // counts must match exactly; deviation is |stream - brute| plus any
    // emitted matrix with wrong margins
    let mut t = Tracker::new("balanced_enumeration_is_complete", 0.0);
    for _ in 0..20 {
        let k = rng.random_range(1..=3);
        let j = random_margins(rng, k, 3);
        let margins = MultiIndex::new(j.clone());
        let mut bad = 0u64;
        let mut count = 0u64;
        for alpha in enumerate_balanced(&margins) {
            count += 1;
            bad += u64::from(!alpha.balanced() || alpha.row_sums() != &margins);
        }
        t.record((count.abs_diff(brute_force_balanced_count(&j)) + bad) as f64);
    }
    t.finish()
}

fn balanced_count_permutation_symmetric(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("balanced_count_permutation_symmetric", 0.0);
    for _ in 0..20 {
        let k = rng.random_range(2..=4);
        let j = random_margins(rng, k, 3);
        let mut p = j.clone();
        p.rotate_left(rng.random_range(0..k));
        p.swap(0, k - 1);
        let a = enumerate_balanced(&MultiIndex::new(j)).count();
        let b = enumerate_balanced(&MultiIndex::new(p)).count();
        t.record(a.abs_diff(b) as f64);
    }
    t.finish()
}

/// Gated deviation with `k |M|` in `[0.05, 0.35]` so the balanced series
/// reaches 1e-12 at a modest degree.
fn fast_deviation(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let k = rng.random_range(2..=3);
    let frac = rng.random_range(0.05..0.35);
    gated_deviation(rng, k, frac)
}

fn series_r_matches_lu(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("series_r_matches_lu", 1e-9);
    for _ in 0..30 {
        let m = fast_deviation(rng);
        let n = series_degree_for(m.order() as f64 * frobenius_norm(&m));
        let oracle = lu_det(&m.plus_identity()).inv();
        t.record((eval_series_r(&m, n).final_value - oracle).norm());
    }
    t.finish()
}

fn series_r_decays_geometrically(rng: &mut ChaCha8Rng) -> PropertyResult {
    // worst of (observed rate) - (k|M| + 0.1); passes when <= 0
    let mut t = Tracker::new("series_r_decays_geometrically", 0.0);
    for _ in 0..30 {
        let m = fast_deviation(rng);
        let rate = m.order() as f64 * frobenius_norm(&m);
        let n = series_degree_for(rate);
        let oracle = lu_det(&m.plus_identity()).inv();
        let errors: Vec<f64> = eval_series_r(&m, n)
            .orders
            .iter()
            .map(|o| (o.partial_sum - oracle).norm())
            .collect();
        let observed = tail_decay_rate(&errors, 1e-13, 2, 4).unwrap_or(0.0);
        t.record(observed - (rate + 0.1));
    }
    t.finish()
}

fn series_r_conjugation_invariant(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("series_r_conjugation_invariant", 1e-12);
    for _ in 0..30 {
        let m = fast_deviation(rng);
        let phases: Vec<Complex64> = (0..m.order()).map(|_| unit(rng)).collect();
        t.check(conjugate_by_phase(&m, &phases).map(|c| {
            let x = eval_series_r(&m, 8);
            let y = eval_series_r(&c, 8);
            x.orders
                .iter()
                .zip(&y.orders)
                .map(|(p, q)| (p.partial_sum - q.partial_sum).norm())
                .fold(0.0, f64::max)
        }));
    }
    t.finish()
}

/// Degree at which the relaxed series has converged for row sums up to 0.9.
pub const RELAXED_DEGREE: u32 = 400;

/// Random `k x k` matrix whose row sums have moduli drawn from `[0.05, 0.9]`.
pub fn relaxed_input(rng: &mut ChaCha8Rng, k: usize) -> ComplexMatrix {
    let m = gaussian_matrix(rng, k);
    let targets: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..=0.9)).collect();
    with_row_sum_moduli(&m, &targets)
}

fn series_s_matches_closed_form(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("series_s_matches_closed_form", 1e-9);
    for _ in 0..10 {
        let k = rng.random_range(1..=3);
        let m = relaxed_input(rng, k);
        t.check(eval_s_closed(&m).map(|closed| {
            let rho = m.row_sums().iter().map(|s| s.norm()).fold(0.0, f64::max);
            let errors: Vec<f64> = eval_series_s(&m, RELAXED_DEGREE)
                .orders
                .iter()
                .map(|o| (o.partial_sum - closed).norm())
                .collect();
            let observed = tail_decay_rate(&errors, 1e-12, 40, 16).unwrap_or(0.0);
            let final_error = *errors.last().expect("non-empty");
            // a decay rate above rho + 0.05 counts as a failure
            if observed > rho + 0.05 {
                f64::INFINITY
            } else {
                final_error
            }
        }));
    }
    t.finish()
}

fn tracelog_matches_series_r(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("tracelog_matches_series_r", 1e-8);
    for _ in 0..30 {
        let m = fast_deviation(rng);
        let n = series_degree_for(m.order() as f64 * frobenius_norm(&m));
        let r = eval_series_r(&m, n).final_value;
        t.record((eval_tracelog(&m, 60).final_value - r).norm());
    }
    t.finish()
}

/// Degree for which `(1/(1.05 k))^N` is far below 1e-14.
pub fn charpoly_degree(k: usize) -> u32 {
    let q = 1.0 / ((1.0 + CHARPOLY_MARGIN) * k as f64);
    ((1e-14f64).ln() / q.ln()).ceil() as u32 + 8
}

fn charpoly_matches_lu(rng: &mut ChaCha8Rng) -> PropertyResult {
    // relative to max(1, |oracle|)
    let mut t = Tracker::new("charpoly_matches_lu", 1e-9);
    for _ in 0..30 {
        let k = rng.random_range(1..=3);
        let m = gaussian_matrix(rng, k);
        let lambda = unit(rng)
            * (k as f64
                * frobenius_norm(&m)
                * (1.0 + CHARPOLY_MARGIN)
                * rng.random_range(1.0..3.0));
        let oracle = lu_det(&(&m - &ComplexMatrix::identity(k).scale(lambda))).inv();
        t.check(
            charpoly_inverse_series(&m, lambda, charpoly_degree(k))
                .map(|(v, _)| (v - oracle).norm() / oracle.norm().max(1.0)),
        );
    }
    t.finish()
}

fn contour_matches_lu(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("contour_matches_lu", 1e-12);
    for _ in 0..10 {
        let k = rng.random_range(1..=3);
        let a = gated_in(rng, k, 0.01..=0.9);
        let oracle = lu_det(&a).inv();
        t.check(eval_contour(&a, 64).map(|r| (r.value - oracle).norm()));
    }
    t.finish()
}

fn contour_node_count_stable(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("contour_node_count_stable", 1e-12);
    for _ in 0..10 {
        let k = rng.random_range(1..=3);
        let a = gated_in(rng, k, 0.01..=0.9);
        // n = 32 is not yet converged everywhere in the gate (1.6e-11 seen at
        // k = 2, |A - 1| = 0.877/k), so the pair is taken at n = 64
        t.check(eval_contour(&a, 64).and_then(|coarse| {
            eval_contour(&a, 128).map(|fine| (fine.value - coarse.value).norm())
        }));
    }
    t.finish()
}

fn test_functions(rng: &mut ChaCha8Rng, k: usize) -> Vec<HolomorphicTestFn> {
    let beta: Vec<u32> = (0..k).map(|_| rng.random_range(0..=2)).collect();
    let c: Vec<Complex64> = (0..k)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    vec![
        HolomorphicTestFn::One,
        HolomorphicTestFn::MonomialPower(MultiIndex::new(beta)),
        HolomorphicTestFn::ExpLinear(c),
    ]
}

fn contour_weighted_matches_f0(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("contour_weighted_matches_f0", 1e-10);
    for _ in 0..10 {
        let k = rng.random_range(1..=3);
        let a = gated_in(rng, k, 0.01..=0.9);
        let det_inv = lu_det(&a).inv();
        for f in test_functions(rng, k) {
            let expected = f.at_origin() * det_inv;
            t.check(eval_contour_f(&a, &f, 32).map(|r| (r.value - expected).norm()));
        }
    }
    t.finish()
}

fn contour_is_linear_in_f(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("contour_is_linear_in_f", 1e-12);
    for _ in 0..10 {
        let k = rng.random_range(1..=3);
        let a = gated_in(rng, k, 0.01..=0.9);
        let fs = test_functions(rng, k);
        let (f, g) = (fs[2].clone(), fs[1].clone());
        t.check((|| -> Result<f64> {
            let lhs = eval_contour_f(&a, &(f.clone() + g.clone()), 16)?.value;
            let rhs = eval_contour_f(&a, &f, 16)?.value + eval_contour_f(&a, &g, 16)?.value;
            Ok((lhs - rhs).norm())
        })());
    }
    t.finish()
}

fn first_variable_rows(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("first_variable_rows", 1e-10);
    for _ in 0..30 {
        let k = rng.random_range(1..=4);
        let a = gated_in(rng, k, 0.01..=0.9);
        let fixed: Vec<Complex64> = (1..k).map(|_| unit(rng)).collect();
        for row in 0..k {
            let target = if row == 0 {
                a.get(0, 0).inv()
            } else {
                Complex64::new(0.0, 0.0)
            };
            t.check(lemma1_integral(&a, row, &fixed, 64).map(|v| (v - target).norm()));
        }
    }
    t.finish()
}

fn homotopy_slack_positive(rng: &mut ChaCha8Rng) -> PropertyResult {
    // deviation is -min_slack, so any sample with zero slack fails
    let mut t = Tracker::new("homotopy_slack_positive", 0.0);
    for _ in 0..20 {
        let k = rng.random_range(1..=4);
        let a = gated_in(rng, k, 0.01..1.0 - 1e-9);
        let seed: u64 = rng.random();
        t.check(homotopy_safety_check(&a, 50, 200, seed).map(|r| {
            if r.certified() {
                -r.min_slack
            } else {
                f64::INFINITY
            }
        }));
    }
    t.finish()
}

fn cauchy_matches_taylor(_: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("cauchy_matches_taylor", 1e-7);
    for alpha in multi_indices_up_to(2, 3) {
        let exact = taylor_coefficient(&alpha);
        t.check(
            cauchy_coefficient(
                &alpha,
                DEFAULT_CAUCHY_RADIUS,
                CAUCHY_NODES,
                DEFAULT_EVAL_BUDGET,
            )
            .map(|v| (v - exact).norm()),
        );
    }
    t.finish()
}

fn psi_det_identity(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("psi_det_identity", 1e-9);
    for i in 0..100 {
        let k = rng.random_range(1..=4);
        let a = if i % 2 == 0 {
            gaussian_matrix(rng, k)
        } else {
            gated_in(rng, k, 0.01..1.0)
        };
        let d = lu_det(&a).norm_sqr();
        t.record((real_det(&psi(&a)) - d).abs() / (1.0 + d));
    }
    t.finish()
}

fn psi_is_multiplicative(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("psi_is_multiplicative", 1e-12);
    for _ in 0..50 {
        let k = rng.random_range(1..=4);
        let a = gated_deviation(rng, k, 1.0);
        let b = gated_deviation(rng, k, 1.0);
        let lhs = psi(&(&a * &b));
        let rhs = &psi(&a) * &psi(&b);
        t.record(
            lhs.as_slice()
                .iter()
                .zip(rhs.as_slice())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        );
        let id = psi(&ComplexMatrix::identity(k));
        t.record(if id == crate::realify::RealMatrix::identity(2 * k) {
            0.0
        } else {
            1.0
        });
    }
    t.finish()
}

fn psi_trace(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut t = Tracker::new("psi_trace", 1e-12);
    for _ in 0..50 {
        let k = rng.random_range(1..=4);
        let a = gaussian_matrix(rng, k);
        t.record((psi(&a).trace() - 2.0 * a.trace().re).abs());
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_counts() {
        assert_eq!(brute_force_balanced_count(&[0, 0]), 1);
        assert_eq!(brute_force_balanced_count(&[1, 1]), 2);
        assert_eq!(brute_force_balanced_count(&[2, 1]), 2);
        assert_eq!(brute_force_balanced_count(&[1, 1, 1]), 6);
    }

    #[test]
    fn cofactor_examples() {
        let a = ComplexMatrix::from_real(3, &[2.0, 0.0, 1.0, 1.0, 3.0, 2.0, 1.0, 1.0, 2.0]);
        assert!((cofactor_det(&a) - Complex64::new(6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn decay_rate_of_geometric_sequence() {
        let e: Vec<f64> = (0..60).map(|d| 0.5f64.powi(d)).collect();
        let r = tail_decay_rate(&e, 1e-13, 0, 4).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        // oscillation is smoothed by the envelope
        let e: Vec<f64> = (0..60)
            .map(|d| if d % 2 == 0 { 0.5f64.powi(d) } else { 0.0 })
            .collect();
        assert!(tail_decay_rate(&e, 1e-13, 0, 4).unwrap() <= 0.5 + 1e-12);
        assert_eq!(tail_decay_rate(&[1e-20; 10], 1e-13, 0, 4), None);
    }

    #[test]
    fn multi_index_listing() {
        // compositions of 0..=3 into 4 parts: 1 + 4 + 10 + 20
        assert_eq!(multi_indices_up_to(2, 3).len(), 35);
    }

    #[test]
    fn default_seed_passes_and_is_deterministic() {
        let a = run_suite(DEFAULT_SEED);
        for p in &a.properties {
            assert!(p.passed, "{p:?}");
        }
        assert_eq!(a.properties.len(), PROPERTIES.len());
        let b = run_suite(DEFAULT_SEED);
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.to_json(), run_suite(DEFAULT_SEED + 1).to_json());
    }

    #[test]
    fn failing_tracker() {
        let mut t = Tracker::new("x", 1.0);
        t.record(f64::NAN);
        assert!(!t.finish().passed);
        let mut t = Tracker::new("x", 1.0);
        t.check(Err(crate::Error::Parse("p".into())));
        let r = t.finish();
        assert!(!r.passed);
        assert_eq!(r.error, Some("Parse"));
    }
}
