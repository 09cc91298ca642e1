//! Two-spin reduced density of a permutation-symmetric state and its
//! concurrence / entanglement of formation.
//!
//! In the s^z_i s^z_j basis the pair density is
//!
//! ```text
//!  | p+  0  0  0  |
//!  | 0   p  a  0  |
//!  | 0   a  p  0  |
//!  | 0   0  0  p- |
//! ```
//!
//! and is fixed by the collective averages <S_z>, <S_z^2>, <S^2>.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Roundoff allowance for the positivity check of the pair density.
pub const PSD_TOLERANCE: f64 = 1e-12;
/// Concurrence above which a pair is reported as entangled.
pub const ENTANGLED_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMoments {
    pub sz: f64,
    pub sz2: f64,
    pub s2: f64,
    #[serde(rename = "logZ")]
    pub log_z: f64,
}

impl CollectiveMoments {
    /// Fluctuation <S_z^2> - <S_z>^2.
    pub fn sz_variance(&self) -> f64 {
        self.sz2 - self.sz * self.sz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairState {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p: f64,
    pub alpha: f64,
}

impl PairState {
    /// Builds the pair density from collective moments and checks that it is
    /// positive semidefinite to within [`PSD_TOLERANCE`].
    pub fn from_moments(m: &CollectiveMoments, n: usize) -> Result<Self> {
        let pair = Self::from_moments_unchecked(m, n);
        let min = pair.min_eigenvalue();
        if min < -PSD_TOLERANCE {
            return Err(Error::InconsistentMoments { eigenvalue: min });
        }
        Ok(pair)
    }

    pub fn from_moments_unchecked(m: &CollectiveMoments, n: usize) -> Self {
        let nf = n as f64;
        let nn1 = nf * (nf - 1.0);
        let base = (m.sz2 - nf / 4.0) / nn1 + 0.25;
        let p_plus = base + m.sz / nf;
        let p_minus = base - m.sz / nf;
        let alpha = (m.s2 - m.sz2 - nf / 2.0) / nn1;
        let p = 0.5 * (1.0 - p_plus - p_minus);
        Self {
            p_plus,
            p_minus,
            p,
            alpha,
        }
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        [self.p_plus, self.p_minus, self.p + self.alpha, self.p - self.alpha]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> f64 {
        self.p_plus + 2.0 * self.p + self.p_minus
    }

    /// Dense 4x4 matrix in the basis |uu>, |ud>, |du>, |dd>.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        [
            [self.p_plus, 0.0, 0.0, 0.0],
            [0.0, self.p, self.alpha, 0.0],
            [0.0, self.alpha, self.p, 0.0],
            [0.0, 0.0, 0.0, self.p_minus],
        ]
    }

    /// Scale-free entanglement margin (|a| - sqrt(p+ p-))/(|a| + sqrt(p+ p-)).
    /// Positive exactly when the pair is entangled; `None` for a null pair.
    pub fn margin(&self) -> Option<f64> {
        let a = self.alpha.abs();
        let g = (self.p_plus * self.p_minus).max(0.0).sqrt();
        let den = a + g;
        if den > 0.0 && den.is_finite() {
            Some((a - g) / den)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Bruteforce,
    Exact,
    Cspa,
    Spa,
    Cmfa,
    Mfa,
}

impl Tier {
    pub const ALL: [Tier; 6] = [
        Tier::Bruteforce,
        Tier::Exact,
        Tier::Cspa,
        Tier::Spa,
        Tier::Cmfa,
        Tier::Mfa,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Tier::Bruteforce => "bruteforce",
            Tier::Exact => "exact",
            Tier::Cspa => "cspa",
            Tier::Spa => "spa",
            Tier::Cmfa => "cmfa",
            Tier::Mfa => "mfa",
        }
    }

    /// Tiers whose density is a mixture of product states.
    pub fn is_separable(&self) -> bool {
        matches!(self, Tier::Spa | Tier::Mfa)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Domain(format!("unknown tier '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    NotApplicable,
    Breakdown,
    Error,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotApplicable => "not-applicable",
            Status::Breakdown => "breakdown",
            Status::Error => "error",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceResult {
    pub concurrence: f64,
    pub eof: f64,
    pub entangled: bool,
    pub tier: Tier,
    pub status: Status,
}

impl ConcurrenceResult {
    pub fn from_value(c: f64, tier: Tier) -> Self {
        let c = c.clamp(0.0, 1.0);
        Self {
            concurrence: c,
            eof: entanglement_of_formation(c),
            entangled: c > ENTANGLED_THRESHOLD,
            tier,
            status: Status::Ok,
        }
    }

    pub fn unavailable(tier: Tier, status: Status) -> Self {
        Self {
            concurrence: 0.0,
            eof: 0.0,
            entangled: false,
            tier,
            status,
        }
    }
}

/// C = 2 [ |alpha| - sqrt(p+ p-) ]_+
pub fn concurrence_value(pair: &PairState) -> f64 {
    let g = (pair.p_plus * pair.p_minus).max(0.0).sqrt();
    (2.0 * (pair.alpha.abs() - g)).max(0.0)
}

pub fn concurrence(pair: &PairState, tier: Tier) -> ConcurrenceResult {
    ConcurrenceResult::from_value(concurrence_value(pair), tier)
}

/// E = -sum q log2 q with q = (1 +- sqrt(1 - C^2))/2.
pub fn entanglement_of_formation(c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let root = (1.0 - c * c).max(0.0).sqrt();
    let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    h(0.5 * (1.0 + root)) + h(0.5 * (1.0 - root))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sharp(_n: usize, s: f64, m: f64) -> CollectiveMoments {
        CollectiveMoments {
            sz: m,
            sz2: m * m,
            s2: s * (s + 1.0),
            log_z: 0.0,
        }
    }

    #[test]
    fn aligned_state_is_separable() {
        let n = 10;
        let pair = PairState::from_moments(&sharp(n, 5.0, -5.0), n).unwrap();
        assert!((pair.p_minus - 1.0).abs() < 1e-15);
        assert!(pair.p_plus.abs() < 1e-15 && pair.p.abs() < 1e-15 && pair.alpha.abs() < 1e-15);
        assert_eq!(concurrence(&pair, Tier::Exact).concurrence, 0.0);
    }

    #[test]
    fn singlet() {
        let pair = PairState::from_moments(&sharp(2, 0.0, 0.0), 2).unwrap();
        assert!((pair.alpha + 0.5).abs() < 1e-15);
        assert!((pair.p - 0.5).abs() < 1e-15);
        assert!(pair.p_plus.abs() < 1e-15 && pair.p_minus.abs() < 1e-15);
        let c = concurrence(&pair, Tier::Exact);
        assert!((c.concurrence - 1.0).abs() < 1e-15);
        assert!((c.eof - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w_state_reaches_symmetric_bound() {
        for n in [3usize, 8, 20, 101] {
            let s = n as f64 / 2.0;
            let pair = PairState::from_moments(&sharp(n, s, s - 1.0), n).unwrap();
            assert!((pair.alpha - 1.0 / n as f64).abs() < 1e-15);
            // p- vanishes up to roundoff, which the square root amplifies.
            let c = concurrence_value(&pair);
            assert!((c - 2.0 / n as f64).abs() < 1e-7, "n={n} c={c}");
        }
    }

    #[test]
    fn zero_alpha_gives_zero() {
        let pair = PairState {
            p_plus: 0.3,
            p_minus: 0.2,
            p: 0.25,
            alpha: 0.0,
        };
        let c = concurrence(&pair, Tier::Exact);
        assert_eq!((c.concurrence, c.eof, c.entangled), (0.0, 0.0, false));
    }

    #[test]
    fn inconsistent_moments_rejected() {
        // <S^2> far above its maximum drives p - alpha negative.
        let m = CollectiveMoments {
            sz: 0.0,
            sz2: 0.0,
            s2: 100.0,
            log_z: 0.0,
        };
        assert!(matches!(
            PairState::from_moments(&m, 4),
            Err(Error::InconsistentMoments { .. })
        ));
    }

    #[test]
    fn eof_is_monotone() {
        let mut prev = 0.0;
        for i in 1..=100 {
            let e = entanglement_of_formation(i as f64 / 100.0);
            assert!(e > prev);
            prev = e;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tier_names_round_trip() {
        for t in Tier::ALL {
            assert_eq!(t.name().parse::<Tier>().unwrap(), t);
        }
        assert!("foo".parse::<Tier>().is_err());
    }
}
