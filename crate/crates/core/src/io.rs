//! Text formats: the matrix JSON file, the `--lambda` argument, and number
//! formatting shared by every report.
//!
//! Matrix files look like `{"k": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}`
//! with row-major `k x k` arrays. Both arrays are mandatory.

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;

/// Formats a double with 17 significant digits, enough to round-trip exactly.
/// Non-finite values become `null` so the output stays valid JSON and CSV.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// JSON number token for `x`, see [`fmt_f64`].
pub fn json_num(x: f64) -> Box<RawValue> {
    RawValue::from_string(fmt_f64(x)).expect("formatted float is valid JSON")
}

#[derive(Deserialize)]
struct MatrixFile {
    k: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn check_rows(name: &str, rows: &[Vec<f64>], k: usize) -> Result<()> {
    if rows.len() != k {
        return Err(Error::Parse(format!(
            "`{name}` has {} rows, expected {k}",
            rows.len()
        )));
    }
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != k) {
        return Err(Error::Parse(format!(
            "`{name}` row {r} has {} entries, expected {k}",
            row.len()
        )));
    }
    Ok(())
}

/// Parses a matrix JSON document.
pub fn parse_matrix_json(text: &str) -> Result<ComplexMatrix> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix JSON: {e}")))?;
    if file.k == 0 {
        return Err(Error::Parse("`k` must be at least 1".into()));
    }
    check_rows("re", &file.re, file.k)?;
    check_rows("im", &file.im, file.k)?;
    let data = file
        .re
        .iter()
        .flatten()
        .zip(file.im.iter().flatten())
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    ComplexMatrix::new(file.k, data)
}

/// Serialises a matrix in the same format [`parse_matrix_json`] reads.
pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    let rows = |part: fn(&Complex64) -> f64| {
        let rows: Vec<String> = (0..m.order())
            .map(|r| {
                let cells: Vec<String> = m.row(r).iter().map(|z| fmt_f64(part(z))).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        format!("[{}]", rows.join(","))
    };
    format!(
        "{{\"k\":{},\"re\":{},\"im\":{}}}",
        m.order(),
        rows(|z| z.re),
        rows(|z| z.im)
    )
}

/// Parses `<re>,<im>`.
pub fn parse_lambda(text: &str) -> Result<Complex64> {
    let (re, im) = text
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("expected `<re>,<im>`, got `{text}`")))?;
    let parse = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("`{}`: {e}", s.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parse(format!("`{}` is not finite", s.trim())))
        }
    };
    Ok(Complex64::new(parse(re)?, parse(im)?))
}
