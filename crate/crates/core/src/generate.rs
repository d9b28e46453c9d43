//! Seeded random matrices.
//!
//! A deviation `M` is drawn with i.i.d. standard complex Gaussian entries and
//! rescaled to `|M| = frac / k`; the direction is then uniform on the sphere
//! of that radius. Streams come from ChaCha8 so they are stable across
//! platforms.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matcore::{frobenius_norm, ComplexMatrix};

/// Upper bound on `k` accepted by [`GenSpec`].
pub const MAX_GEN_ORDER: usize = 64;

/// Parsed `seed=<u64>,k=<int>,frac=<float>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub k: usize,
    /// Target `|M|` as a fraction of `1/k`, in `(0, 1]`.
    pub frac: f64,
}

impl GenSpec {
    pub fn new(seed: u64, k: usize, frac: f64) -> Result<Self> {
        if k == 0 || k > MAX_GEN_ORDER {
            return Err(Error::Parse(format!(
                "k must lie in 1..={MAX_GEN_ORDER}, got {k}"
            )));
        }
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(Error::Parse(format!("frac must lie in (0, 1], got {frac}")));
        }
        Ok(Self { seed, k, frac })
    }

    /// `1 + M` with `|M| = frac / k`.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        gated_deviation(&mut rng, self.k, self.frac).plus_identity()
    }
}

impl FromStr for GenSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut seed, mut k, mut frac) = (None, None, None);
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
            let value = value.trim();
            let bad = |e: &dyn fmt::Display| Error::Parse(format!("`{}`: {e}", part.trim()));
            let slot_taken = match key.trim() {
                "seed" => seed
                    .replace(value.parse::<u64>().map_err(|e| bad(&e))?)
                    .is_some(),
                "k" => k
                    .replace(value.parse::<usize>().map_err(|e| bad(&e))?)
                    .is_some(),
                "frac" => frac
                    .replace(value.parse::<f64>().map_err(|e| bad(&e))?)
                    .is_some(),
                other => return Err(Error::Parse(format!("unknown key `{other}`"))),
            };
            if slot_taken {
                return Err(Error::Parse(format!("duplicate key `{}`", key.trim())));
            }
        }
        let missing = |name: &str| Error::Parse(format!("missing `{name}`"));
        Self::new(
            seed.ok_or_else(|| missing("seed"))?,
            k.ok_or_else(|| missing("k"))?,
            frac.ok_or_else(|| missing("frac"))?,
        )
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seed={},k={},frac={}", self.seed, self.k, self.frac)
    }
}

/// Matrix with i.i.d. standard complex Gaussian entries (unit variance in
/// each of the real and imaginary parts).
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(k, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Gaussian direction rescaled to `|M| = frac / k`.
pub fn gated_deviation<R: Rng + ?Sized>(rng: &mut R, k: usize, frac: f64) -> ComplexMatrix {
    loop {
        let m = gaussian_matrix(rng, k);
        let norm = frobenius_norm(&m);
        // a zero draw has probability zero but would divide by zero
        if norm > 0.0 {
            return m.scale(Complex64::new(frac / (k as f64 * norm), 0.0));
        }
    }
}

/// `1 + M` with `|M| = frac / k`.
pub fn gated_matrix<R: Rng + ?Sized>(rng: &mut R, k: usize, frac: f64) -> ComplexMatrix {
    gated_deviation(rng, k, frac).plus_identity()
}

/// Rescales each row of `m` so its row sum has modulus `targets[r]`.
/// Rows summing to (numerically) zero are shifted first.
pub fn with_row_sum_moduli(m: &ComplexMatrix, targets: &[f64]) -> ComplexMatrix {
    let k = m.order();
    assert_eq!(targets.len(), k);
    let mut data = m.as_slice().to_vec();
    for (r, &t) in targets.iter().enumerate() {
        let row = &mut data[r * k..(r + 1) * k];
        let mut s: Complex64 = row.iter().sum();
        if s.norm() < 1e-12 {
            row[0] += 1.0;
            s = row.iter().sum();
        }
        let factor = t / s.norm();
        row.iter_mut().for_each(|x| *x *= factor);
    }
    ComplexMatrix::new(k, data).expect("finite after rescale")
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
