//! Neumaier compensated accumulation for complex values.

use num_complex::Complex64;

#[inline]
fn neumaier_add(sum: &mut f64, c: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *c += (*sum - t) + v;
    } else {
        *c += (v - t) + *sum;
    }
    *sum = t;
}

/// Running compensated sum. Results depend only on the order of `add` calls.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        neumaier_add(&mut self.re, &mut self.re_c, v.re);
        neumaier_add(&mut self.im, &mut self.im_c, v.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

impl Extend<Complex64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = Complex64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_lost_by_naive_sum() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        let naive: f64 = vals.iter().sum();
        let s: CompensatedSum = vals.iter().map(|&x| Complex64::new(x, -x)).collect();
        assert_ne!(naive, 2.0);
        assert_eq!(s.value(), Complex64::new(2.0, -2.0));
    }
}
