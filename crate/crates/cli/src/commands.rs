use std::time::Instant;

use invdet::contour::{eval_contour_f_with_budget, HolomorphicTestFn, DEFAULT_NODES};
use invdet::io::{fmt_f64, json_num, parse_matrix_json};
use invdet::matcore::{frobenius_norm, gate, lu_det};
use invdet::series::{
    balanced_cost_bound, charpoly_inverse_series, default_max_degree, eval_s_closed,
    eval_series_r_with_budget, eval_series_s_with_budget, eval_tracelog, SeriesReport,
    CHARPOLY_MARGIN,
};
use invdet::verify::run_suite;
use invdet::{Complex64, ComplexMatrix, Error, GateStatus};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::args::{BenchArgs, CharpolyArgs, EvalArgs, Format, MatrixSource, Method, VerifyArgs};

/// Orders above this skip the LU comparison.
pub const ORACLE_MAX_ORDER: usize = 6;
pub const DEFAULT_TRACE_POWERS: u32 = 60;
pub const DEFAULT_CONVERGENCE_NODES: u32 = 64;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_CONFIG,
            kind,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Inner<'a> {
            kind: &'a str,
            message: &'a str,
            exit_code: u8,
        }
        #[derive(Serialize)]
        struct Outer<'a> {
            error: Inner<'a>,
        }
        serde_json::to_string(&Outer {
            error: Inner {
                kind: self.kind,
                message: &self.message,
                exit_code: self.exit_code,
            },
        })
        .expect("error serialises")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit_code = match e {
            Error::Parse(_) | Error::InvalidMatrix(_) | Error::DimensionMismatch { .. } => {
                EXIT_CONFIG
            }
            _ => EXIT_PRECONDITION,
        };
        Self {
            exit_code,
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

/// Rendered report and the exit code to finish with.
pub struct Rendered {
    pub body: String,
    pub exit_code: u8,
}

impl Rendered {
    fn ok(body: String) -> Self {
        Self { body, exit_code: 0 }
    }
}

pub struct Input {
    pub matrix: ComplexMatrix,
    pub source: String,
}

pub fn load(source: &MatrixSource) -> Result<Input, CliError> {
    match (&source.matrix, &source.gen) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config("Io", format!("{}: {e}", path.display())))?;
            Ok(Input {
                matrix: parse_matrix_json(&text)?,
                source: path.display().to_string(),
            })
        }
        (None, Some(spec)) => Ok(Input {
            matrix: spec.matrix(),
            source: spec.to_string(),
        }),
        _ => Err(CliError::config(
            "Usage",
            "give exactly one of --matrix and --gen",
        )),
    }
}

#[derive(Serialize)]
struct ComplexJson {
    re: Box<RawValue>,
    im: Box<RawValue>,
}

fn cj(z: Complex64) -> ComplexJson {
    ComplexJson {
        re: json_num(z.re),
        im: json_num(z.im),
    }
}

#[derive(Serialize)]
struct GateJson {
    norm: Box<RawValue>,
    threshold: Box<RawValue>,
    inside: bool,
}

fn gate_json(g: &GateStatus) -> GateJson {
    GateJson {
        norm: json_num(g.norm_of_deviation),
        threshold: json_num(g.threshold),
        inside: g.inside_strict,
    }
}

/// One evaluation and the quantities reported with it.
#[derive(Debug)]
pub struct Evaluation {
    pub method: Method,
    pub value: Complex64,
    /// Name of the reference value and the reference itself, when computed.
    pub oracle: Option<(&'static str, Complex64)>,
    pub order: Option<u32>,
    pub nodes: Option<u32>,
    pub terms: Option<u64>,
    pub evaluations: Option<u64>,
    pub refinement_delta: Option<f64>,
}

impl Evaluation {
    fn new(method: Method, value: Complex64) -> Self {
        Self {
            method,
            value,
            oracle: None,
            order: None,
            nodes: None,
            terms: None,
            evaluations: None,
            refinement_delta: None,
        }
    }

    pub fn deviation(&self) -> Option<f64> {
        self.oracle.map(|(_, o)| (self.value - o).norm())
    }
}

fn lu_oracle(a: &ComplexMatrix) -> Option<(&'static str, Complex64)> {
    (a.order() <= ORACLE_MAX_ORDER).then(|| ("lu", lu_det(a).inv()))
}

fn lu_value(a: &ComplexMatrix) -> Result<Complex64, CliError> {
    let d = lu_det(a);
    if d.norm() == 0.0 {
        return Err(Error::DomainViolation("matrix is numerically singular".into()).into());
    }
    Ok(d.inv())
}

/// Series methods need the strict gate unless forced. The relaxed series
/// instead needs every row sum of `M` inside the unit disc.
fn precondition(a: &ComplexMatrix, method: Method, force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match method {
        Method::Series | Method::Tracelog => {
            let g = gate(a);
            if !g.inside_strict {
                return Err(Error::GateViolation {
                    norm: g.norm_of_deviation,
                    threshold: g.threshold,
                }
                .into());
            }
        }
        Method::Relaxed => {
            let m = a.minus_identity();
            if let Some((row, s)) = m
                .row_sums()
                .iter()
                .enumerate()
                .find(|(_, s)| s.norm() >= 1.0)
            {
                return Err(Error::DomainViolation(format!(
                    "row sum {row} of A - 1 has modulus {} >= 1",
                    s.norm()
                ))
                .into());
            }
        }
        Method::Contour | Method::Lu => {}
    }
    Ok(())
}

fn series_report(
    a: &ComplexMatrix,
    method: Method,
    order: Option<u32>,
    budget: u64,
) -> Result<SeriesReport, CliError> {
    let m = a.minus_identity();
    let k = a.order();
    // every block past degree 0 vanishes identically at M = 0
    let order = if m.as_slice().iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        Some(0)
    } else {
        order
    };
    Ok(match method {
        Method::Series => {
            eval_series_r_with_budget(&m, order.unwrap_or(default_max_degree(k)), budget)?
        }
        Method::Relaxed => {
            eval_series_s_with_budget(&m, order.unwrap_or(default_max_degree(k)), budget)?
        }
        Method::Tracelog => eval_tracelog(&m, order.unwrap_or(DEFAULT_TRACE_POWERS)),
        Method::Contour | Method::Lu => unreachable!("not a series method"),
    })
}

fn relaxed_oracle(a: &ComplexMatrix) -> Option<(&'static str, Complex64)> {
    eval_s_closed(&a.minus_identity())
        .ok()
        .map(|v| ("closed_form", v))
}

pub fn evaluate(
    a: &ComplexMatrix,
    method: Method,
    order: Option<u32>,
    nodes: Option<u32>,
    budget: u64,
    force: bool,
) -> Result<Evaluation, CliError> {
    precondition(a, method, force)?;
    match method {
        Method::Lu => {
            let mut e = Evaluation::new(method, lu_value(a)?);
            e.oracle = lu_oracle(a);
            Ok(e)
        }
        Method::Contour => {
            let n = nodes.unwrap_or(DEFAULT_NODES as u32);
            let r = eval_contour_f_with_budget(a, &HolomorphicTestFn::One, n as usize, budget)?;
            let mut e = Evaluation::new(method, r.value);
            e.oracle = lu_oracle(a);
            e.nodes = Some(n);
            e.evaluations = Some(r.evaluations);
            e.refinement_delta = r.refinement_delta;
            Ok(e)
        }
        Method::Series | Method::Relaxed | Method::Tracelog => {
            let report = series_report(a, method, order, budget)?;
            let mut e = Evaluation::new(method, report.final_value);
            e.oracle = if method == Method::Relaxed {
                relaxed_oracle(a)
            } else {
                lu_oracle(a)
            };
            e.order = Some(report.truncation_degree);
            e.terms = Some(report.orders.iter().map(|o| o.terms_added).sum());
            Ok(e)
        }
    }
}

#[derive(Serialize)]
struct EvalJson<'a> {
    command: &'a str,
    method: &'a str,
    source: &'a str,
    k: usize,
    value: ComplexJson,
    gate: GateJson,
    oracle: Option<&'a str>,
    deviation: Option<Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement_delta: Option<Box<RawValue>>,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Rendered, CliError> {
    let input = load(&args.source)?;
    let a = &input.matrix;
    let e = evaluate(
        a,
        args.method,
        args.order,
        args.nodes,
        args.budget,
        args.force,
    )?;
    let body = match args.output.format {
        Format::Json => {
            let mut s = serde_json::to_string(&EvalJson {
                command: "eval",
                method: e.method.name(),
                source: &input.source,
                k: a.order(),
                value: cj(e.value),
                gate: gate_json(&gate(a)),
                oracle: e.oracle.map(|(name, _)| name),
                deviation: e.deviation().map(json_num),
                order: e.order,
                terms: e.terms,
                nodes: e.nodes,
                evaluations: e.evaluations,
                refinement_delta: e.refinement_delta.map(json_num),
            })
            .expect("eval report serialises");
            s.push('\n');
            s
        }
        Format::Csv => format!(
            "method,re,im,abs_error\n{},{},{},{}\n",
            e.method.name(),
            fmt_f64(e.value.re),
            fmt_f64(e.value.im),
            e.deviation().map_or_else(String::new, fmt_f64)
        ),
    };
    Ok(Rendered::ok(body))
}

/// `(index, value)` rows of a convergence table.
pub fn convergence_rows(
    a: &ComplexMatrix,
    method: Method,
    order: Option<u32>,
    nodes: Option<u32>,
    budget: u64,
    force: bool,
) -> Result<Vec<(u64, Complex64)>, CliError> {
    precondition(a, method, force)?;
    match method {
        Method::Lu => Err(CliError::config(
            "Usage",
            "lu is direct and has no convergence sequence",
        )),
        Method::Contour => {
            let max = nodes.unwrap_or(DEFAULT_CONVERGENCE_NODES);
            std::iter::successors(Some(1u32), |n| n.checked_mul(2))
                .take_while(|&n| n <= max)
                .map(|n| {
                    eval_contour_f_with_budget(a, &HolomorphicTestFn::One, n as usize, budget)
                        .map(|r| (u64::from(n), r.value))
                        .map_err(CliError::from)
                })
                .collect()
        }
        _ => Ok(series_report(a, method, order, budget)?
            .orders
            .iter()
            .map(|o| (u64::from(o.total_degree), o.partial_sum))
            .collect()),
    }
}

#[derive(Serialize)]
struct RowJson {
    index: u64,
    re: Box<RawValue>,
    im: Box<RawValue>,
    abs_error: Option<Box<RawValue>>,
}

#[derive(Serialize)]
struct ConvergenceJson<'a> {
    command: &'a str,
    method: &'a str,
    source: &'a str,
    k: usize,
    oracle: Option<&'a str>,
    rows: Vec<RowJson>,
}

pub fn cmd_convergence(args: &EvalArgs) -> Result<Rendered, CliError> {
    let input = load(&args.source)?;
    let a = &input.matrix;
    let rows = convergence_rows(
        a,
        args.method,
        args.order,
        args.nodes,
        args.budget,
        args.force,
    )?;
    let oracle = if args.method == Method::Relaxed {
        relaxed_oracle(a)
    } else {
        lu_oracle(a)
    };
    let err = |v: Complex64| oracle.map(|(_, o)| (v - o).norm());
    let body = match args.output.format {
        Format::Csv => {
            let mut s = String::from("index,re,im,abs_error\n");
            for (i, v) in &rows {
                s.push_str(&format!(
                    "{i},{},{},{}\n",
                    fmt_f64(v.re),
                    fmt_f64(v.im),
                    err(*v).map_or_else(String::new, fmt_f64)
                ));
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string(&ConvergenceJson {
                command: "convergence",
                method: args.method.name(),
                source: &input.source,
                k: a.order(),
                oracle: oracle.map(|(n, _)| n),
                rows: rows
                    .iter()
                    .map(|&(index, v)| RowJson {
                        index,
                        re: json_num(v.re),
                        im: json_num(v.im),
                        abs_error: err(v).map(json_num),
                    })
                    .collect(),
            })
            .expect("convergence report serialises");
            s.push('\n');
            s
        }
    };
    Ok(Rendered::ok(body))
}

/// Degree at which `(k|M|/|lambda|)^N` drops below 1e-14, plus a margin.
pub fn charpoly_default_order(m: &ComplexMatrix, lambda: Complex64) -> u32 {
    let q = m.order() as f64 * frobenius_norm(m) / lambda.norm();
    if q <= 0.0 {
        return 0;
    }
    let q = q.min(1.0 / (1.0 + CHARPOLY_MARGIN));
    ((1e-14f64).ln() / q.ln()).ceil() as u32 + 8
}

#[derive(Serialize)]
struct CoefficientJson {
    power: i64,
    re: Box<RawValue>,
    im: Box<RawValue>,
}

#[derive(Serialize)]
struct CharpolyJson<'a> {
    command: &'a str,
    source: &'a str,
    k: usize,
    lambda: ComplexJson,
    order: u32,
    value: ComplexJson,
    oracle: Option<&'a str>,
    deviation: Option<Box<RawValue>>,
    coefficients: Vec<CoefficientJson>,
}

pub fn cmd_charpoly(args: &CharpolyArgs) -> Result<Rendered, CliError> {
    let input = load(&args.source)?;
    let m = &input.matrix;
    let k = m.order();
    let order = args
        .order
        .unwrap_or_else(|| charpoly_default_order(m, args.lambda));
    let required = balanced_cost_bound(k, order, args.budget);
    if required > u128::from(args.budget) {
        return Err(Error::CostGuard {
            required,
            budget: args.budget,
        }
        .into());
    }
    let (value, series) = charpoly_inverse_series(m, args.lambda, order)?;
    let oracle = (k <= ORACLE_MAX_ORDER)
        .then(|| lu_det(&(m - &ComplexMatrix::identity(k).scale(args.lambda))).inv());
    let deviation = oracle.map(|o| (value - o).norm());
    let body = match args.output.format {
        Format::Csv => format!(
            "re,im,abs_error\n{},{},{}\n",
            fmt_f64(value.re),
            fmt_f64(value.im),
            deviation.map_or_else(String::new, fmt_f64)
        ),
        Format::Json => {
            let mut s = serde_json::to_string(&CharpolyJson {
                command: "charpoly",
                source: &input.source,
                k,
                lambda: cj(args.lambda),
                order,
                value: cj(value),
                oracle: oracle.map(|_| "lu"),
                deviation: deviation.map(json_num),
                coefficients: series
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, c)| CoefficientJson {
                        power: i64::from(series.degree_offset) - j as i64,
                        re: json_num(c.re),
                        im: json_num(c.im),
                    })
                    .collect(),
            })
            .expect("charpoly report serialises");
            s.push('\n');
            s
        }
    };
    Ok(Rendered::ok(body))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Rendered, CliError> {
    let report = run_suite(args.seed);
    let body = match args.output.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
    };
    Ok(Rendered {
        body,
        exit_code: if report.passed() { 0 } else { EXIT_VERIFY },
    })
}

#[derive(Serialize)]
struct BenchRow<'a> {
    method: &'a str,
    status: &'a str,
    value: Option<ComplexJson>,
    abs_error: Option<Box<RawValue>>,
    seconds: Option<Box<RawValue>>,
}

/// Wall-clock timings; unlike every other command the output varies between runs.
pub fn cmd_bench(args: &BenchArgs) -> Result<Rendered, CliError> {
    let input = load(&args.source)?;
    let a = &input.matrix;
    let methods = [
        Method::Lu,
        Method::Series,
        Method::Tracelog,
        Method::Contour,
    ];
    let mut rows = Vec::new();
    for method in methods {
        let start = Instant::now();
        let mut last = None;
        for _ in 0..args.repeats.max(1) {
            last = Some(evaluate(
                a,
                method,
                args.order,
                args.nodes,
                args.budget,
                false,
            ));
        }
        let seconds = start.elapsed().as_secs_f64() / f64::from(args.repeats.max(1));
        rows.push(match last.expect("at least one repeat") {
            Ok(e) => (method, Ok((e.value, e.deviation(), seconds))),
            Err(err) => (method, Err(err.kind)),
        });
    }
    let body = match args.output.format {
        Format::Csv => {
            let mut s = String::from("method,status,re,im,abs_error,seconds\n");
            for (method, row) in &rows {
                match row {
                    Ok((v, dev, secs)) => s.push_str(&format!(
                        "{},ok,{},{},{},{}\n",
                        method.name(),
                        fmt_f64(v.re),
                        fmt_f64(v.im),
                        dev.map_or_else(String::new, fmt_f64),
                        fmt_f64(*secs)
                    )),
                    Err(kind) => s.push_str(&format!("{},{kind},,,,\n", method.name())),
                }
            }
            s
        }
        Format::Json => {
            let rows: Vec<BenchRow> = rows
                .iter()
                .map(|(method, row)| match row {
                    Ok((v, dev, secs)) => BenchRow {
                        method: method.name(),
                        status: "ok",
                        value: Some(cj(*v)),
                        abs_error: dev.map(json_num),
                        seconds: Some(json_num(*secs)),
                    },
                    Err(kind) => BenchRow {
                        method: method.name(),
                        status: kind,
                        value: None,
                        abs_error: None,
                        seconds: None,
                    },
                })
                .collect();
            serde_json::to_string(&rows).expect("bench report serialises") + "\n"
        }
    };
    Ok(Rendered::ok(body))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[1.1, 0.2, 0.0, 0.9])
    }

    #[test]
    fn lu_on_identity() {
        let e = evaluate(
            &ComplexMatrix::identity(3),
            Method::Lu,
            None,
            None,
            10,
            false,
        )
        .unwrap();
        assert_eq!(e.value, Complex64::new(1.0, 0.0));
        assert_eq!(e.deviation(), Some(0.0));
    }

    #[test]
    fn series_on_example() {
        let e = evaluate(&example(), Method::Series, Some(12), None, 1_000_000, false).unwrap();
        assert!((e.value.re - 1.0101).abs() < 1e-4);
        assert!(e.deviation().unwrap() < 1e-10);
    }

    #[test]
    fn contour_on_generated_matrix() {
        let a = "seed=11,k=3,frac=0.7"
            .parse::<invdet::generate::GenSpec>()
            .unwrap()
            .matrix();
        let e = evaluate(&a, Method::Contour, None, Some(32), 100_000, false).unwrap();
        assert!(e.deviation().unwrap() < 1e-12);
        assert_eq!(e.evaluations, Some(32768));
        let err = evaluate(&a, Method::Contour, None, Some(32), 1000, false).unwrap_err();
        assert_eq!((err.kind, err.exit_code), ("CostGuard", EXIT_PRECONDITION));
    }

    #[test]
    fn gating_and_force() {
        let nil = ComplexMatrix::from_real(2, &[1.0, 1.0, 0.0, 1.0]);
        let err = evaluate(&nil, Method::Series, Some(8), None, 1_000_000, false).unwrap_err();
        assert_eq!(
            (err.kind, err.exit_code),
            ("GateViolation", EXIT_PRECONDITION)
        );
        let e = evaluate(&nil, Method::Series, Some(8), None, 1_000_000, true).unwrap();
        assert_eq!(e.value, Complex64::new(1.0, 0.0));
        let err = evaluate(&nil, Method::Contour, None, Some(8), 1_000_000, true).unwrap_err();
        assert_eq!(err.kind, "GateViolation");
        assert!(evaluate(&nil, Method::Lu, None, None, 1, false).is_ok());
        let singular = ComplexMatrix::zeros(2);
        assert_eq!(
            evaluate(&singular, Method::Lu, None, None, 1, false)
                .unwrap_err()
                .kind,
            "DomainViolation"
        );
    }

    #[test]
    fn relaxed_uses_closed_form_oracle() {
        let e = evaluate(
            &example(),
            Method::Relaxed,
            Some(60),
            None,
            1_000_000,
            false,
        )
        .unwrap();
        assert_eq!(e.oracle.unwrap().0, "closed_form");
        assert!(e.deviation().unwrap() < 1e-12);
        let big = ComplexMatrix::from_real(2, &[2.5, 0.0, 0.0, 1.0]);
        assert_eq!(
            evaluate(&big, Method::Relaxed, None, None, 1_000_000, false)
                .unwrap_err()
                .kind,
            "DomainViolation"
        );
    }

    #[test]
    fn convergence_tables() {
        let zero = ComplexMatrix::identity(3);
        let rows = convergence_rows(&zero, Method::Series, None, None, 10, false).unwrap();
        assert_eq!(rows, vec![(0, Complex64::new(1.0, 0.0))]);

        let scalar = ComplexMatrix::from_real(1, &[1.5]);
        let rows = convergence_rows(&scalar, Method::Series, Some(20), None, 1000, true).unwrap();
        let oracle = 1.0 / 1.5;
        for w in rows.windows(2).skip(1) {
            let ratio = (w[1].1.re - oracle).abs() / (w[0].1.re - oracle).abs();
            assert!((ratio - 0.5).abs() < 1e-9, "{ratio}");
        }

        let a = "seed=5,k=2,frac=0.5"
            .parse::<invdet::generate::GenSpec>()
            .unwrap()
            .matrix();
        let rows = convergence_rows(&a, Method::Contour, None, Some(64), 1 << 20, false).unwrap();
        let idx: Vec<u64> = rows.iter().map(|r| r.0).collect();
        assert_eq!(idx, vec![1, 2, 4, 8, 16, 32, 64]);

        assert_eq!(
            convergence_rows(&a, Method::Lu, None, None, 1, false)
                .unwrap_err()
                .exit_code,
            EXIT_CONFIG
        );
    }

    #[test]
    fn charpoly_order_defaults() {
        let m = ComplexMatrix::zeros(2);
        assert_eq!(charpoly_default_order(&m, Complex64::new(2.0, 0.0)), 0);
        let m = ComplexMatrix::from_real(1, &[0.5]);
        let n = charpoly_default_order(&m, Complex64::new(1.0, 0.0));
        assert_eq!(n, ((1e-14f64).ln() / 0.5f64.ln()).ceil() as u32 + 8);
    }

    #[test]
    fn error_json_shape() {
        let e = CliError::from(Error::Parse("bad".into()));
        assert_eq!(
            e.to_json(),
            r#"{"error":{"kind":"Parse","message":"parse error: bad","exit_code":2}}"#
        );
    }
}
