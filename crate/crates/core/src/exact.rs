//! Exact thermodynamics from the collective spectrum sum and the closed-form
//! asymptotics of the exact concurrence.

use crate::entanglement::{
    CollectiveMoments, ConcurrenceResult, PairState, Status, Tier,
};
use crate::error::{Error, Result};
use crate::model::{crossing_fields, ground_projections, ModelParams, SpectrumTable};
use crate::numeric::LogSum;
use crate::roots::bisect;

/// Pair density kept as logs of its non-negative pieces so that the
/// entanglement sign survives Boltzmann weights far below f64 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPair {
    pub ln_p_plus: f64,
    pub ln_p_minus: f64,
    /// ln of the positive and negative parts of alpha.
    pub ln_alpha_pos: f64,
    pub ln_alpha_neg: f64,
}

impl LogPair {
    /// Sign-exact entanglement margin, see [`PairState::margin`].
    pub fn margin(&self) -> Option<f64> {
        let (hi, lo) = if self.ln_alpha_pos >= self.ln_alpha_neg {
            (self.ln_alpha_pos, self.ln_alpha_neg)
        } else {
            (self.ln_alpha_neg, self.ln_alpha_pos)
        };
        if hi == f64::NEG_INFINITY {
            return if self.ln_p_plus + self.ln_p_minus > f64::NEG_INFINITY {
                Some(-1.0)
            } else {
                None
            };
        }
        // ln|alpha| = hi + ln(1 - e^{lo - hi})
        let ln_a = hi + (-(lo - hi).exp()).ln_1p();
        let ln_g = 0.5 * (self.ln_p_plus + self.ln_p_minus);
        if ln_a == f64::NEG_INFINITY && ln_g == f64::NEG_INFINITY {
            return None;
        }
        // (a - g)/(a + g) = tanh((ln a - ln g)/2)
        Some((0.5 * (ln_a - ln_g)).tanh())
    }
}

/// Moments together with the pair density accumulated level by level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactThermal {
    pub moments: CollectiveMoments,
    pub pair: PairState,
    pub log_pair: LogPair,
}

fn require_positive_t(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.t <= 0.0 {
        return Err(Error::Domain(
            "T must be positive; use ground_state_moments for T = 0".into(),
        ));
    }
    Ok(())
}

/// ln Z and <S_z>, <S_z^2>, <S^2> as Boltzmann sums over (S, M) with Y(S)
/// weights.
pub fn exact_moments(params: &ModelParams) -> Result<CollectiveMoments> {
    Ok(exact_thermal(params)?.moments)
}

pub fn exact_thermal(params: &ModelParams) -> Result<ExactThermal> {
    require_positive_t(params)?;
    let table = SpectrumTable::new(params.n);
    Ok(thermal_sums(params, &table))
}

pub(crate) fn thermal_sums(params: &ModelParams, table: &SpectrumTable) -> ExactThermal {
    let beta = params.beta();
    let nf = params.n as f64;
    let nn1 = nf * (nf - 1.0);

    let mut ln_max = f64::NEG_INFINITY;
    for lvl in table.levels(params) {
        ln_max = ln_max.max(lvl.ln_multiplicity - beta * lvl.energy);
    }

    let (mut z, mut sz, mut sz2, mut s2) = (0.0, 0.0, 0.0, 0.0);
    let (mut pp, mut pm, mut al) = (0.0, 0.0, 0.0);
    let mut lp = LogSum::new();
    let mut lm = LogSum::new();
    let mut la_pos = LogSum::new();
    let mut la_neg = LogSum::new();

    for (two_s, ln_y) in table.spins() {
        let s = two_s as f64 / 2.0;
        let ss1 = s * (s + 1.0);
        for two_m in (-two_s..=two_s).step_by(2) {
            let m = two_m as f64 / 2.0;
            let e = crate::model::level_energy_unchecked(params, two_s, two_m);
            let ln_w = ln_y - beta * e - ln_max;
            let w = ln_w.exp();
            z += w;
            sz += w * m;
            sz2 += w * m * m;
            s2 += w * ss1;

            // Up-spin count k = n/2 + M; p+ per level is k(k-1)/(n(n-1)).
            let k_up = (params.n as i64 + two_m) / 2;
            let k_dn = params.n as i64 - k_up;
            let lvl_pp = (k_up * (k_up - 1)) as f64 / nn1;
            let lvl_pm = (k_dn * (k_dn - 1)) as f64 / nn1;
            // 4(S(S+1) - M^2 - n/2) is an exact integer.
            let a4 = two_s * (two_s + 2) - two_m * two_m - 2 * params.n as i64;
            let lvl_al = a4 as f64 / (4.0 * nn1);
            pp += w * lvl_pp;
            pm += w * lvl_pm;
            al += w * lvl_al;
            if lvl_pp > 0.0 {
                lp.add(ln_w + lvl_pp.ln());
            }
            if lvl_pm > 0.0 {
                lm.add(ln_w + lvl_pm.ln());
            }
            if a4 > 0 {
                la_pos.add(ln_w + lvl_al.ln());
            } else if a4 < 0 {
                la_neg.add(ln_w + (-lvl_al).ln());
            }
        }
    }

    let ln_z_scaled = z.ln();
    let moments = CollectiveMoments {
        sz: sz / z,
        sz2: sz2 / z,
        s2: s2 / z,
        log_z: ln_max + ln_z_scaled,
    };
    let p_plus = pp / z;
    let p_minus = pm / z;
    let pair = PairState {
        p_plus,
        p_minus,
        p: 0.5 * (1.0 - p_plus - p_minus),
        alpha: al / z,
    };
    let log_pair = LogPair {
        ln_p_plus: lp.ln() - ln_z_scaled,
        ln_p_minus: lm.ln() - ln_z_scaled,
        ln_alpha_pos: la_pos.ln() - ln_z_scaled,
        ln_alpha_neg: la_neg.ln() - ln_z_scaled,
    };
    ExactThermal {
        moments,
        pair,
        log_pair,
    }
}

/// T = 0 moments: equal mixture over the degenerate ground levels of the
/// S = n/2 multiplet (two levels exactly at a crossing field).
///
/// `log_z` is not defined at T = 0 and is reported as NaN.
pub fn ground_state_moments(params: &ModelParams) -> CollectiveMoments {
    let ms = ground_projections(params);
    let s = params.n as f64 / 2.0;
    let k = ms.len() as f64;
    let sz = ms.iter().map(|&tm| tm as f64 / 2.0).sum::<f64>() / k;
    let sz2 = ms.iter().map(|&tm| (tm as f64 / 2.0).powi(2)).sum::<f64>() / k;
    CollectiveMoments {
        sz,
        sz2,
        s2: s * (s + 1.0),
        log_z: f64::NAN,
    }
}

/// Exact concurrence at any T >= 0.
pub fn exact_concurrence(params: &ModelParams) -> Result<ConcurrenceResult> {
    params.validate()?;
    let pair = if params.t == 0.0 {
        PairState::from_moments(&ground_state_moments(params), params.n)?
    } else {
        exact_thermal(params)?.pair
    };
    Ok(crate::entanglement::concurrence(&pair, Tier::Exact))
}

/// eta = 1 - (n-1) e^{-beta v} + n(n-3)/2 e^{-2 beta v (1 - 1/n)}
pub fn large_field_eta(n: usize, v: f64, t: f64) -> f64 {
    let nf = n as f64;
    let beta = 1.0 / t;
    1.0 - (nf - 1.0) * (-beta * v).exp() + 0.5 * nf * (nf - 3.0) * (-2.0 * beta * v * (1.0 - 1.0 / nf)).exp()
}

/// Bracket 1 - e^{-beta v} - sqrt(2 n eta/(n-1)) e^{-beta gamma v/n} whose
/// sign controls weak entanglement beyond the critical field.
pub fn large_field_bracket(n: usize, v: f64, gamma: f64, t: f64) -> f64 {
    let nf = n as f64;
    let beta = 1.0 / t;
    let eta = large_field_eta(n, v, t).max(0.0);
    1.0 - (-beta * v).exp() - (2.0 * nf * eta / (nf - 1.0)).sqrt() * (-beta * gamma * v / nf).exp()
}

/// Low-order concurrence for |b| - b_c >> T, keeping only states with up to
/// two spins flipped against the field. Requires |b| - b_c > 5T.
pub fn large_field_expansion(params: &ModelParams) -> ConcurrenceResult {
    let na = |_| ConcurrenceResult::unavailable(Tier::Exact, Status::NotApplicable);
    if params.validate().is_err() || params.t <= 0.0 || params.gamma <= 0.0 {
        return na(());
    }
    let bc = crossing_fields(params).critical.expect("gamma > 0");
    let excess = params.b.abs() - bc;
    if excess <= 5.0 * params.t {
        return na(());
    }
    let nf = params.n as f64;
    let bracket = large_field_bracket(params.n, params.v, params.gamma, params.t);
    let c = 2.0 * (-excess / params.t).exp() / nf * bracket.max(0.0);
    ConcurrenceResult::from_value(c, Tier::Exact)
}

/// 2 gamma v / (n ln[2n/(n-1)]), the field-independent limit temperature far
/// beyond b_c when e^{-beta v} is negligible.
pub fn large_field_limit_temperature_estimate(n: usize, v: f64, gamma: f64) -> f64 {
    let nf = n as f64;
    2.0 * gamma * v / (nf * (2.0 * nf / (nf - 1.0)).ln())
}

/// Root in T of the full large-field bracket (with eta).
pub fn large_field_limit_temperature(n: usize, v: f64, gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::NotApplicable("gamma <= 0 has no large-field entanglement".into()));
    }
    let guess = large_field_limit_temperature_estimate(n, v, gamma);
    let f = |t: f64| large_field_bracket(n, v, gamma, t);
    let lo = 1e-3 * guess;
    let mut hi = 2.0 * guess;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e3 * v {
            return Err(Error::Bracket("large-field bracket stays positive".into()));
        }
    }
    bisect(f, lo, hi, 1e-12 * guess)
}

/// 1/(n-1) + [4m^2/(1-4m^2)]/(n-1)^2, the T = 0 concurrence with m = M/n.
pub fn zero_t_concurrence_approx(n: usize, m: f64) -> Result<f64> {
    let nf = n as f64;
    if n < 2 || !(m.abs() < 0.5 - 1.0 / nf) {
        return Err(Error::Domain(format!(
            "expansion needs |m| < 1/2 - 1/n, got m = {m} for n = {n}"
        )));
    }
    let m2 = 4.0 * m * m;
    Ok(1.0 / (nf - 1.0) + m2 / (1.0 - m2) / ((nf - 1.0) * (nf - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::concurrence_value;

    fn params(n: usize, gamma: f64, b: f64, t: f64) -> ModelParams {
        ModelParams::new(n, 1.0, gamma, b, t).unwrap()
    }

    #[test]
    fn infinite_temperature_two_spins() {
        let m = exact_moments(&params(2, 1.0, 0.0, 1e6)).unwrap();
        assert!(m.sz.abs() < 1e-12);
        assert!((m.sz2 - 0.5).abs() < 1e-6);
        assert!((m.s2 - 1.5).abs() < 1e-6);
        assert!((m.log_z - 4f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn zero_field_has_no_magnetization() {
        for n in [3usize, 8, 15] {
            for t in [0.05, 0.4, 2.0] {
                let m = exact_moments(&params(n, 0.6, 0.0, t)).unwrap();
                assert!(m.sz.abs() < 1e-12, "n={n} T={t}");
            }
        }
    }

    #[test]
    fn rejects_zero_temperature() {
        assert!(exact_moments(&params(4, 1.0, 0.1, 0.0)).is_err());
    }

    #[test]
    fn direct_pair_matches_moment_pair() {
        let th = exact_thermal(&params(9, 0.8, 0.3, 0.17)).unwrap();
        let via = PairState::from_moments(&th.moments, 9).unwrap();
        for (a, b) in th.pair.eigenvalues().iter().zip(via.eigenvalues()) {
            assert!((a - b).abs() < 1e-13);
        }
        let m1 = th.pair.margin().unwrap();
        let m2 = th.log_pair.margin().unwrap();
        assert!((m1 - m2).abs() < 1e-10);
    }

    #[test]
    fn log_pair_survives_underflow() {
        // Far field, very low T: weights of flipped states underflow f64
        // but the pair stays (weakly) entangled.
        let th = exact_thermal(&params(20, 1.0, 3.0, 0.002)).unwrap();
        assert_eq!(th.pair.p_plus, 0.0);
        assert!(th.log_pair.margin().unwrap() > 0.0);
    }

    #[test]
    fn ground_state_cases() {
        let p = params(20, 1.0, 0.97, 0.0);
        let g = ground_state_moments(&p);
        assert_eq!(g.sz, -10.0);
        assert_eq!(exact_concurrence(&p).unwrap().concurrence, 0.0);

        let g0 = ground_state_moments(&params(20, 1.0, 0.0, 0.0));
        assert_eq!((g0.sz, g0.sz2, g0.s2), (0.0, 0.0, 110.0));

        // At every crossing field the fluctuation is 1/4 and nC = 1.
        let cf = crossing_fields(&p);
        for &bm in cf.fields.iter().filter(|&&b| b > 0.0) {
            let pm = params(20, 1.0, bm, 0.0);
            let g = ground_state_moments(&pm);
            assert!((g.sz_variance() - 0.25).abs() < 1e-12);
            let c = exact_concurrence(&pm).unwrap().concurrence;
            assert!((20.0 * c - 1.0).abs() < 1e-12, "b = {bm}: nC = {}", 20.0 * c);
        }
    }

    #[test]
    fn ground_state_stepwise_values() {
        let n = 20;
        // M = 0: exact value from sharp moments vs the two-term expansion.
        let c0 = exact_concurrence(&params(n, 1.0, 0.01, 0.0)).unwrap().concurrence;
        assert!((c0 - 1.0 / 19.0).abs() < 1.0 / 361.0);
        // |M| = n/2 - 1 gives the symmetric bound 2/n.
        let c = exact_concurrence(&params(n, 1.0, 0.9, 0.0)).unwrap().concurrence;
        assert!((c - 0.1).abs() < 1e-14);
        // m = 1/4 (M = -5) against the expansion.
        let cf = crossing_fields(&params(n, 1.0, 0.0, 0.0));
        let b = 0.5 * (0.45 + 0.55);
        assert!(cf.fields.iter().all(|&x| (x - b).abs() > 1e-3));
        let c5 = exact_concurrence(&params(n, 1.0, b, 0.0)).unwrap().concurrence;
        let approx = zero_t_concurrence_approx(n, 0.25).unwrap();
        assert!((approx - 0.053_554).abs() < 1e-5);
        assert!((c5 - approx).abs() < 2e-4);
    }

    #[test]
    fn aligned_for_nonpositive_gamma() {
        for g in [-0.5, 0.0] {
            let c = exact_concurrence(&params(12, g, 0.2, 0.0)).unwrap();
            assert_eq!(c.concurrence, 0.0);
        }
    }

    #[test]
    fn large_field_expansion_properties() {
        let p = params(20, 1.0, 2.0, 0.05);
        let c = large_field_expansion(&p);
        assert_eq!(c.status, Status::Ok);
        assert!(c.concurrence > 0.0);
        // Not applicable too close to b_c.
        let near = large_field_expansion(&params(20, 1.0, 1.0, 0.05));
        assert_eq!(near.status, Status::NotApplicable);
        // Agrees with the exact sum to leading order.
        let exact = concurrence_value(&exact_thermal(&p).unwrap().pair);
        assert!((c.concurrence - exact).abs() < 0.05 * exact, "{} vs {exact}", c.concurrence);
    }

    #[test]
    fn large_field_limit_temperature_n20() {
        let est = large_field_limit_temperature_estimate(20, 1.0, 1.0);
        assert!((est - 0.1343).abs() < 5e-4, "{est}");
        let full = large_field_limit_temperature(20, 1.0, 1.0).unwrap();
        assert!((full - est).abs() < 0.05 * est, "{full} vs {est}");
    }

    #[test]
    fn zero_t_approx_domain() {
        assert!((zero_t_concurrence_approx(30, 0.0).unwrap() - 1.0 / 29.0).abs() < 1e-15);
        assert!(zero_t_concurrence_approx(30, 0.49).is_err());
        assert!(zero_t_concurrence_approx(1_000_000, 0.0).unwrap() < 2e-6);
    }
}
