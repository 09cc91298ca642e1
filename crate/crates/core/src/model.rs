//! Fully connected XXZ model: parameters, collective spectrum, multiplicities
//! and ground-state level crossings.
//!
//! H = b S_z - (v/n)[S_x^2 + S_y^2 + (1-gamma) S_z^2] + E0, E0 = v(3-gamma)/4.
//! Energies are in units of v, temperatures in the same units (k = 1).
//! Spins are carried as doubled integers (2S, 2M) so odd n needs no
//! half-integer floating point bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial_u128, ln_binomial_row};

/// Largest n for which multiplicities are produced as exact integers.
pub const EXACT_MULTIPLICITY_MAX_N: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub v: f64,
    pub gamma: f64,
    pub b: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl ModelParams {
    pub fn new(n: usize, v: f64, gamma: f64, b: f64, t: f64) -> Result<Self> {
        let p = Self { n, v, gamma, b, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Domain(format!("n = {} must be at least 2", self.n)));
        }
        if !(self.v.is_finite() && self.v > 0.0) {
            return Err(Error::Domain(format!("v = {} must be positive", self.v)));
        }
        if !(self.gamma.is_finite() && self.gamma <= 1.0) {
            return Err(Error::Domain(format!("gamma = {} must satisfy gamma <= 1", self.gamma)));
        }
        if !self.b.is_finite() {
            return Err(Error::Domain("b must be finite".into()));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::Domain(format!("T = {} must be non-negative", self.t)));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.t
    }

    /// Internal pair coupling V = v/n.
    pub fn coupling(&self) -> f64 {
        self.v / self.n as f64
    }

    /// Constant shift E0 = n V (3 - gamma)/4 = v (3 - gamma)/4.
    pub fn e0(&self) -> f64 {
        self.v * (3.0 - self.gamma) / 4.0
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_v(mut self, v: f64) -> Self {
        self.v = v;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Smallest doubled total spin: 0 for even n, 1 for odd n.
    pub fn min_two_s(&self) -> i64 {
        (self.n % 2) as i64
    }

    pub fn max_two_s(&self) -> i64 {
        self.n as i64
    }
}

/// One (S, M) level of the collective spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinLevel {
    pub two_s: i64,
    pub two_m: i64,
    pub energy: f64,
    /// ln Y(S); exact integer multiplicity is available through [`multiplicity`].
    pub ln_multiplicity: f64,
}

impl SpinLevel {
    pub fn s(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn m(&self) -> f64 {
        self.two_m as f64 / 2.0
    }
}

fn check_spin(n: usize, two_s: i64, two_m: i64) -> Result<()> {
    let parity = (n % 2) as i64;
    if two_s < parity || two_s > n as i64 || (two_s - parity) % 2 != 0 {
        return Err(Error::Domain(format!("2S = {two_s} is not a valid total spin for n = {n}")));
    }
    if two_m.abs() > two_s || (two_s - two_m) % 2 != 0 {
        return Err(Error::Domain(format!("2M = {two_m} incompatible with 2S = {two_s}")));
    }
    Ok(())
}

/// E_{SM} = bM - (v/n)[S(S+1) - gamma M^2] + E0, with spins given doubled.
pub fn level_energy(params: &ModelParams, two_s: i64, two_m: i64) -> Result<f64> {
    check_spin(params.n, two_s, two_m)?;
    Ok(level_energy_unchecked(params, two_s, two_m))
}

#[inline]
pub(crate) fn level_energy_unchecked(params: &ModelParams, two_s: i64, two_m: i64) -> f64 {
    let s = two_s as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    params.b * m - params.coupling() * (s * (s + 1.0) - params.gamma * m * m) + params.e0()
}

/// Multiplicity Y(S) of spin-S multiplets among n spins 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplicity {
    /// Exact integer value when n <= [`EXACT_MULTIPLICITY_MAX_N`].
    pub exact: Option<u128>,
    pub ln: f64,
}

/// Y(S) = C(n, n/2 - S) - C(n, n/2 - S - 1).
pub fn multiplicity(n: usize, two_s: i64) -> Result<Multiplicity> {
    check_spin(n, two_s, two_s)?;
    let k = ((n as i64 - two_s) / 2) as u64;
    let exact = if n <= EXACT_MULTIPLICITY_MAX_N {
        let hi = binomial_u128(n as u64, k).expect("fits u128 for n <= 120");
        let lo = if k == 0 { 0 } else { binomial_u128(n as u64, k - 1).expect("fits u128") };
        Some(hi - lo)
    } else {
        None
    };
    let ln = match exact {
        Some(y) => (y as f64).ln(),
        None => ln_multiplicity_from_binomial(n, two_s, ln_binom(n, k as usize)),
    };
    Ok(Multiplicity { exact, ln })
}

fn ln_binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
}

// Y(S) = C(n, k) (2S + 1)/(n/2 + S + 1) with k = n/2 - S.
fn ln_multiplicity_from_binomial(n: usize, two_s: i64, ln_c: f64) -> f64 {
    let num = (two_s + 1) as f64;
    let den = (n as i64 + two_s + 2) as f64 / 2.0;
    ln_c + num.ln() - den.ln()
}

/// ln Y(S) for every allowed S of an n-spin system, indexed by
/// `(2S - 2S_min)/2`.
#[derive(Debug, Clone)]
pub struct SpectrumTable {
    n: usize,
    ln_y: Vec<f64>,
}

impl SpectrumTable {
    pub fn new(n: usize) -> Self {
        let parity = (n % 2) as i64;
        let row = if n > EXACT_MULTIPLICITY_MAX_N { Some(ln_binomial_row(n)) } else { None };
        let ln_y = (parity..=n as i64)
            .step_by(2)
            .map(|two_s| match &row {
                Some(r) => {
                    let k = ((n as i64 - two_s) / 2) as usize;
                    ln_multiplicity_from_binomial(n, two_s, r[k])
                }
                None => multiplicity(n, two_s).expect("valid spin").ln,
            })
            .collect();
        Self { n, ln_y }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// (2S, ln Y(S)) pairs from the smallest to the largest total spin.
    pub fn spins(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let parity = (self.n % 2) as i64;
        self.ln_y
            .iter()
            .enumerate()
            .map(move |(i, &ly)| (parity + 2 * i as i64, ly))
    }

    /// Every (S, M) level for the given parameters (lazily; there are ~n^2/4).
    pub fn levels<'a>(&'a self, params: &'a ModelParams) -> impl Iterator<Item = SpinLevel> + 'a {
        self.spins().flat_map(move |(two_s, ln_y)| {
            (-two_s..=two_s).step_by(2).map(move |two_m| SpinLevel {
                two_s,
                two_m,
                energy: level_energy_unchecked(params, two_s, two_m),
                ln_multiplicity: ln_y,
            })
        })
    }
}

/// Ground-state level crossings inside the S = n/2 multiplet.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingFields {
    /// b_M = gamma v (1 - 2M)/n, ascending.
    pub fields: Vec<f64>,
    /// b_c = gamma v (1 - 1/n), absent when gamma <= 0.
    pub critical: Option<f64>,
    /// gamma <= 0: the ground state is fully aligned for every b != 0.
    pub aligned: bool,
}

pub fn crossing_fields(params: &ModelParams) -> CrossingFields {
    if params.gamma <= 0.0 {
        return CrossingFields {
            fields: Vec::new(),
            critical: None,
            aligned: true,
        };
    }
    let n = params.n as i64;
    let scale = params.gamma * params.v / params.n as f64;
    // Transitions M -> M - 1 for M = n/2, ..., -n/2 + 1; 1 - 2M = 1 - twoM.
    let mut fields: Vec<f64> = (0..n)
        .map(|j| {
            let two_m = n - 2 * j;
            scale * (1 - two_m) as f64
        })
        .collect();
    fields.sort_by(|a, b| a.partial_cmp(b).unwrap());
    CrossingFields {
        fields,
        critical: Some(params.gamma * params.v * (1.0 - 1.0 / params.n as f64)),
        aligned: false,
    }
}

/// Doubled magnetic quantum numbers 2M minimizing E_{n/2, M}; two entries
/// exactly at a crossing, more when gamma = 0 and b = 0.
pub fn ground_projections(params: &ModelParams) -> Vec<i64> {
    let n = params.n as i64;
    let vg = params.gamma * params.coupling();
    // Only the M-dependent part b M + (v/n) gamma M^2 matters.
    let f = |two_m: i64| {
        let m = two_m as f64 / 2.0;
        params.b * m + vg * m * m
    };
    let tol = 1e-12 * (params.b.abs() + params.v) * params.n as f64;
    let values: Vec<(i64, f64)> = (-n..=n).step_by(2).map(|tm| (tm, f(tm))).collect();
    let min = values.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    values
        .into_iter()
        .filter(|&(_, e)| e - min <= tol)
        .map(|(tm, _)| tm)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, gamma: f64, b: f64) -> ModelParams {
        ModelParams::new(n, 1.0, gamma, b, 0.1).unwrap()
    }

    #[test]
    fn two_spin_levels() {
        let params = p(2, 1.0, 0.0);
        assert!((level_energy(&params, 2, 0).unwrap() + 0.5).abs() < 1e-15);
        assert!((level_energy(&params, 0, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn level_energy_rejects_bad_spins() {
        let params = p(4, 1.0, 0.0);
        assert!(level_energy(&params, 6, 0).is_err());
        assert!(level_energy(&params, 2, 4).is_err());
        assert!(level_energy(&params, 1, 1).is_err());
        assert!(level_energy(&p(3, 1.0, 0.0), 2, 0).is_err());
    }

    #[test]
    fn zero_field_is_symmetric_in_m() {
        let params = p(7, 0.4, 0.0);
        for two_s in (1..=7).step_by(2) {
            for two_m in (-two_s..=two_s).step_by(2) {
                let a = level_energy(&params, two_s, two_m).unwrap();
                let b = level_energy(&params, two_s, -two_m).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn small_multiplicities() {
        let y = |n, ts| multiplicity(n, ts).unwrap().exact.unwrap();
        assert_eq!((y(4, 4), y(4, 2), y(4, 0)), (1, 3, 2));
        assert_eq!((y(3, 3), y(3, 1)), (1, 2));
        for n in 2..40 {
            assert_eq!(y(n, n as i64), 1);
        }
    }

    #[test]
    fn degeneracy_sum_rule_exact() {
        for n in 2..=64usize {
            let parity = (n % 2) as i64;
            let total: u128 = (parity..=n as i64)
                .step_by(2)
                .map(|ts| multiplicity(n, ts).unwrap().exact.unwrap() * (ts as u128 + 1))
                .sum();
            assert_eq!(total, 1u128 << n, "n = {n}");
        }
    }

    #[test]
    fn log_multiplicity_large_n() {
        // Log-domain sum rule at n = 10^4: ln sum Y(2S+1) = n ln 2.
        let table = SpectrumTable::new(10_000);
        let mut acc = crate::numeric::LogSum::new();
        for (ts, ly) in table.spins() {
            acc.add(ly + ((ts + 1) as f64).ln());
        }
        let expect = 10_000.0 * std::f64::consts::LN_2;
        assert!((acc.ln() - expect).abs() < 1e-9 * expect);
        // Log-domain branch matches the exact branch where both exist.
        let exact = multiplicity(120, 20).unwrap().ln;
        let k = 50;
        let approx = ln_multiplicity_from_binomial(120, 20, ln_binom(120, k));
        assert!((exact - approx).abs() < 1e-12);
    }

    #[test]
    fn crossings() {
        let c = crossing_fields(&p(20, 1.0, 0.0));
        assert!((c.critical.unwrap() - 0.95).abs() < 1e-15);
        assert_eq!(c.fields.len(), 20);
        assert!((c.fields.last().unwrap() - 0.95).abs() < 1e-15);
        assert_eq!(c.fields.iter().filter(|&&b| b > 0.0).count(), 10);

        let c2 = crossing_fields(&p(2, 1.0, 0.0));
        // n = 2: M = 0 is the ground level for |b| < b_c = gamma v/2.
        assert!((c2.critical.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(c2.fields, vec![-0.5, 0.5]);

        let c3 = crossing_fields(&p(10, -0.5, 0.3));
        assert!(c3.fields.is_empty() && c3.aligned && c3.critical.is_none());
    }

    #[test]
    fn ground_projection_constant_between_crossings() {
        let base = p(12, 0.7, 0.0);
        let cf = crossing_fields(&base);
        for w in cf.fields.windows(2) {
            for frac in [0.1, 0.5, 0.9] {
                let b = w[0] + frac * (w[1] - w[0]);
                let g = ground_projections(&base.with_b(b));
                assert_eq!(g.len(), 1);
                let mid = ground_projections(&base.with_b(0.5 * (w[0] + w[1])));
                assert_eq!(g, mid);
            }
            // Degenerate exactly at the crossing.
            assert_eq!(ground_projections(&base.with_b(w[1])).len(), 2);
        }
    }

    #[test]
    fn intensive_scaling() {
        // E/n at fixed (m, s) is stable under n -> 2n up to O(1/n).
        let params = p(100, 0.6, 0.3);
        let e1 = level_energy(&params, 80, -20).unwrap() / 100.0;
        let params2 = params.with_n(200);
        let e2 = level_energy(&params2, 160, -40).unwrap() / 200.0;
        assert!((e1 - e2).abs() < 2.0 / 100.0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 1.0, 1.0, 0.0, 0.1).is_err());
        assert!(ModelParams::new(4, -1.0, 1.0, 0.0, 0.1).is_err());
        assert!(ModelParams::new(4, 1.0, 1.5, 0.0, 0.1).is_err());
        assert!(ModelParams::new(4, 1.0, 1.0, 0.0, -0.1).is_err());
        assert!(ModelParams::new(4, 1.0, -3.0, 0.0, 0.0).is_ok());
    }
}
