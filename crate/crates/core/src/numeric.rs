//! Small numerically stable building blocks shared by the tiers.

use std::f64::consts::PI;

/// Streaming log-sum-exp accumulator for positive weights given as logs.
///
/// Keeps a running maximum so that sums over 10^7 Boltzmann factors with
/// exponents of either sign never overflow.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, ln_w: f64) {
        if ln_w == f64::NEG_INFINITY {
            return;
        }
        if ln_w <= self.max {
            self.scaled += (ln_w - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - ln_w).exp() + 1.0;
            self.max = ln_w;
        }
    }

    /// ln of the accumulated sum (`-inf` when empty).
    pub fn ln(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut acc = LogSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.ln()
}

/// ln(2 cosh x) without overflow.
pub fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// ln sinh x for x > 0.
pub fn ln_sinh(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1e-4 {
        x.ln() + x * x / 6.0
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
    }
}

/// tanh(x)/x, finite at x = 0.
pub fn tanhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}

/// ln of sinh(y)/y continued to imaginary arguments, as a function of
/// `y2 = y^2` (negative for imaginary y). Returns `None` once the sine branch
/// reaches its first zero (|y| >= pi).
pub fn ln_sinhc_sq(y2: f64) -> Option<f64> {
    if y2.abs() < 1e-3 {
        // sinh(y)/y = 1 + y^2/6 + y^4/120 + y^6/5040 + ...
        let s = 1.0 + y2 / 6.0 + y2 * y2 / 120.0 + y2 * y2 * y2 / 5040.0;
        return Some(s.ln());
    }
    if y2 > 0.0 {
        let y = y2.sqrt();
        Some(ln_sinh(y) - y.ln())
    } else {
        let y = (-y2).sqrt();
        if y >= PI {
            None
        } else {
            Some((y.sin() / y).ln())
        }
    }
}

/// ln[ sinh(beta*w/2) / w ] for a (possibly imaginary) energy given by w^2.
///
/// This is the per-mode factor of the RPA correction. It is even in w, equal
/// to ln(beta/2) at w = 0 and becomes ln[ sin(beta|w|/2)/|w| ] for w^2 < 0.
pub fn ln_mode_factor(w2: f64, beta: f64) -> Option<f64> {
    ln_sinhc_sq(0.25 * beta * beta * w2).map(|s| s + (0.5 * beta).ln())
}

/// Binomial log-coefficients ln C(n, k) for k = 0..=n by cumulative sums.
pub fn ln_binomial_row(n: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    row.push(0.0);
    for k in 1..=n {
        acc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        row.push(acc);
    }
    // Symmetrize to suppress drift of the cumulative sum.
    for k in 0..=n / 2 {
        let avg = 0.5 * (row[k] + row[n - k]);
        row[k] = avg;
        row[n - k] = avg;
    }
    row
}

/// Exact binomial coefficient, `None` on u128 overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is always an integer at this step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_matches_naive() {
        let xs = [0.1, -3.0, 2.5, 1.0];
        let naive: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn log_sum_survives_huge_exponents() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn ln_2cosh_agrees() {
        for x in [-3.0, 0.0, 0.2, 5.0] {
            assert!((ln_2cosh(x) - (2.0 * f64::cosh(x)).ln()).abs() < 1e-14);
        }
        assert!((ln_2cosh(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn mode_factor_limits() {
        let beta = 3.0;
        // w -> 0 limit
        assert!((ln_mode_factor(0.0, beta).unwrap() - (beta / 2.0).ln()).abs() < 1e-15);
        // real w
        let w: f64 = 0.7;
        let expect = ((beta * w / 2.0).sinh() / w).ln();
        assert!((ln_mode_factor(w * w, beta).unwrap() - expect).abs() < 1e-13);
        // imaginary w
        let expect = ((beta * w / 2.0).sin() / w).ln();
        assert!((ln_mode_factor(-w * w, beta).unwrap() - expect).abs() < 1e-13);
        // sine zero
        let wc = 2.0 * PI / beta;
        assert!(ln_mode_factor(-wc * wc * 1.0001, beta).is_none());
    }

    #[test]
    fn mode_factor_is_continuous_through_zero() {
        let beta = 2.0;
        let lo = ln_mode_factor(-1e-9, beta).unwrap();
        let hi = ln_mode_factor(1e-9, beta).unwrap();
        assert!((lo - hi).abs() < 1e-9);
        // Around the series switch point.
        let a = ln_mode_factor(0.999e-3 * 4.0 / (beta * beta), beta).unwrap();
        let b = ln_mode_factor(1.001e-3 * 4.0 / (beta * beta), beta).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(4, 2), Some(6));
        assert_eq!(binomial_u128(64, 32), Some(1_832_624_140_942_590_534));
        let row = ln_binomial_row(10);
        assert!((row[5] - (252f64).ln()).abs() < 1e-13);
    }
}
