//! Mean field plus static and RPA fluctuation corrections in closed form.
//!
//! The mean-field static field has a transverse part r and a longitudinal
//! shift z; the linearized spin sees the gap lambda = sqrt((b-z)^2 + r^2).
//! In the deformed phase (r > 0, gamma > 0, |b| < gamma v, T < T_c(b/gamma))
//! lambda = v tanh(beta lambda/2) and b - z = b/gamma. Otherwise r = 0 and
//! u = b - z solves u - (1-gamma) v tanh(beta u/2) = b.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::derivatives::{moments_from_log_z, FdSteps};
use crate::entanglement::{
    concurrence, CollectiveMoments, ConcurrenceResult, PairState, Status, Tier,
};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::{ln_2cosh, ln_sinh, ln_sinhc_sq, tanhc};
use crate::roots::{bisect, linspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Deformed,
    Normal,
}

/// Full CMFA or plain mean field (first two factors only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanFieldMode {
    Cmfa,
    Mfa,
}

impl MeanFieldMode {
    pub fn tier(&self) -> Tier {
        match self {
            MeanFieldMode::Cmfa => Tier::Cmfa,
            MeanFieldMode::Mfa => Tier::Mfa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldSolution {
    pub phase: Phase,
    /// Gap of the linearized single-spin Hamiltonian.
    pub lambda: f64,
    pub r: f64,
    /// Longitudinal shift; b - z is the effective field along z.
    pub z: f64,
    /// chi = (beta v/2) sech^2(beta lambda/2)
    pub chi: f64,
    /// T_c(b/gamma); zero when no deformed phase exists at this field.
    pub tc: f64,
    /// False when T <= T~ and |b| > b*.
    pub applicable: bool,
    /// Applicability edge, reported when T <= T~ = gamma v/(2n).
    pub b_star: Option<f64>,
    /// Two mirror-image normal solutions +-u of equal free energy (b = 0).
    pub degenerate: bool,
}

/// T_c(b) = |b| / ln[(1 + |b|/v)/(1 - |b|/v)] for |b| < v, v/2 at b = 0 and
/// zero for |b| >= v.
pub fn critical_temperature(b: f64, v: f64) -> f64 {
    let y = b.abs() / v;
    if y >= 1.0 {
        0.0
    } else if y < 1e-8 {
        0.5 * v * (1.0 - y * y / 3.0)
    } else {
        0.5 * v * y / y.atanh()
    }
}

/// Root of lambda = v tanh(beta lambda/2) on [1e-12 v, v]; `None` for T >= v/2.
pub fn gap(v: f64, t: f64) -> Option<f64> {
    if t >= 0.5 * v {
        return None;
    }
    let beta = 1.0 / t;
    let g = |l: f64| l - v * (0.5 * beta * l).tanh();
    bisect(g, 1e-12 * v, v, 1e-15 * v).ok()
}

/// T~ = gamma v/(2n), below which CMFA is limited to |b| <= b*.
pub fn t_tilde(params: &ModelParams) -> f64 {
    params.gamma * params.v / (2.0 * params.n as f64)
}

/// b* = b_c - gamma v sqrt(1 - T/T~)/n for T <= T~.
pub fn b_star(params: &ModelParams) -> Option<f64> {
    let tt = t_tilde(params);
    if params.gamma <= 0.0 || params.t > tt {
        return None;
    }
    let nf = params.n as f64;
    let bc = params.gamma * params.v * (1.0 - 1.0 / nf);
    Some(bc - params.gamma * params.v * (1.0 - params.t / tt).sqrt() / nf)
}

fn sech2(x: f64) -> f64 {
    let c = (-2.0 * x.abs()).exp();
    4.0 * c / ((1.0 + c) * (1.0 + c))
}

/// Roots of u - (1-gamma) v tanh(beta u/2) = b, returning the one of lowest
/// F = n z^2/(4v(1-gamma)) - nT ln 2cosh(beta u/2) and whether its mirror
/// image is an equivalent minimum.
fn normal_field(params: &ModelParams) -> (f64, bool) {
    let b = params.b;
    let g = 1.0 - params.gamma;
    if g <= 0.0 {
        return (b, false);
    }
    let beta = params.beta();
    let v = params.v;
    let f = |u: f64| u - g * v * (0.5 * beta * u).tanh() - b;
    // Any root satisfies |u - b| <= (1 - gamma) v.
    let lo = b - g * v - 1e-9 * v;
    let hi = b + g * v + 1e-9 * v;
    let grid = linspace(lo, hi, 4001);
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let (fa, fb) = (f(w[0]), f(w[1]));
        if fa == 0.0 {
            roots.push(w[0]);
        } else if fa.signum() != fb.signum() {
            if let Ok(r) = bisect(f, w[0], w[1], 1e-15 * v) {
                roots.push(r);
            }
        }
    }
    if roots.is_empty() {
        return (b, false);
    }
    let free = |u: f64| {
        let z = b - u;
        params.n as f64 * (z * z / (4.0 * v * g) - params.t * ln_2cosh(0.5 * beta * u))
    };
    let best = roots
        .iter()
        .copied()
        .min_by(|a, c| free(*a).total_cmp(&free(*c)))
        .unwrap();
    let degenerate = b == 0.0 && best.abs() > 1e-9 * v;
    (best, degenerate)
}

/// Mean-field solution and phase for T > 0.
pub fn gap_solve(params: &ModelParams) -> Result<MeanFieldSolution> {
    params.validate()?;
    if params.t <= 0.0 {
        return Err(Error::Domain("mean-field solution needs T > 0".into()));
    }
    let beta = params.beta();
    let v = params.v;
    let gamma = params.gamma;
    let chi_of = |l: f64| 0.5 * beta * v * sech2(0.5 * beta * l);

    if gamma > 0.0 && params.b.abs() < gamma * v {
        let b_eff = params.b / gamma;
        let tc = critical_temperature(b_eff, v);
        if params.t < tc {
            if let Some(lambda) = gap(v, params.t) {
                if lambda > b_eff.abs() {
                    let b_star = b_star(params);
                    let applicable = b_star.map_or(true, |bs| params.b.abs() <= bs);
                    return Ok(MeanFieldSolution {
                        phase: Phase::Deformed,
                        lambda,
                        r: (lambda * lambda - b_eff * b_eff).sqrt(),
                        z: params.b - b_eff,
                        chi: chi_of(lambda),
                        tc,
                        applicable,
                        b_star,
                        degenerate: false,
                    });
                }
            }
        }
    }

    let tc = if gamma > 0.0 {
        critical_temperature(params.b / gamma, v)
    } else {
        0.0
    };
    let (u, degenerate) = normal_field(params);
    Ok(MeanFieldSolution {
        phase: Phase::Normal,
        lambda: u.abs(),
        r: 0.0,
        z: params.b - u,
        chi: chi_of(u),
        tc,
        applicable: true,
        b_star: None,
        degenerate,
    })
}

/// ln Z in the deformed phase:
/// -n beta(lambda^2 - b^2/gamma)/(4v) - beta E0 + n ln 2cosh(beta lambda/2)
/// [+ ln sinh(beta lambda/2) + 1/2 ln(4 pi n/(beta v (1-chi))) - 1/2 ln gamma].
fn deformed_log_z(params: &ModelParams, sol: &MeanFieldSolution, mode: MeanFieldMode) -> Result<f64> {
    let beta = params.beta();
    let nf = params.n as f64;
    let v = params.v;
    let g = params.gamma;
    let l = sol.lambda;
    let mfa = -nf * beta * (l * l - params.b * params.b / g) / (4.0 * v) - beta * params.e0()
        + nf * ln_2cosh(0.5 * beta * l);
    if mode == MeanFieldMode::Mfa {
        return Ok(mfa);
    }
    if sol.chi >= 1.0 {
        return Err(Error::Phase(format!("chi = {} >= 1 in the deformed phase", sol.chi)));
    }
    let corr = ln_sinh(0.5 * beta * l) + 0.5 * (4.0 * PI * nf / (beta * v * (1.0 - sol.chi))).ln()
        - 0.5 * g.ln();
    Ok(mfa + corr)
}

/// ln Z in the normal phase:
/// -n beta z^2/(4v(1-gamma)) - beta E0 + n ln 2cosh(beta u/2)
/// [+ ln(sinh(beta|u|/2)/sinh(beta omega/2)) - 1/2 ln h_z],
/// omega = |u| - v tanh(beta|u|/2), h_z = 1 - (1-gamma)(beta v/2) sech^2(beta u/2).
fn normal_log_z(params: &ModelParams, sol: &MeanFieldSolution, mode: MeanFieldMode) -> Result<f64> {
    let beta = params.beta();
    let nf = params.n as f64;
    let v = params.v;
    let g1 = 1.0 - params.gamma;
    let u = params.b - sol.z;
    let hartree = if g1 > 0.0 {
        -nf * beta * sol.z * sol.z / (4.0 * v * g1)
    } else {
        0.0
    };
    let mfa = hartree - beta * params.e0() + nf * ln_2cosh(0.5 * beta * u);
    if mode == MeanFieldMode::Mfa {
        return Ok(mfa);
    }
    let a = 0.5 * beta * u.abs();
    let h_xy = 1.0 - 0.5 * beta * v * tanhc(a);
    if h_xy <= 0.0 {
        return Err(Error::Phase(format!(
            "normal solution unstable against transverse order (1 - v tanh/|u| = {h_xy})"
        )));
    }
    // sinh(a)/sinh(a h) = [sinhc(a)/sinhc(a h)] / h
    let ratio = ln_sinhc_sq(a * a).unwrap() - ln_sinhc_sq(a * a * h_xy * h_xy).unwrap() - h_xy.ln();
    let h_z = if g1 > 0.0 {
        1.0 - g1 * 0.5 * beta * v * sech2(0.5 * beta * u)
    } else {
        1.0
    };
    if h_z <= 0.0 {
        return Err(Error::Phase(format!("longitudinal curvature {h_z} <= 0")));
    }
    let mirror = if sol.degenerate { std::f64::consts::LN_2 } else { 0.0 };
    Ok(mfa + ratio - 0.5 * h_z.ln() + mirror)
}

/// ln Z_CMFA (or the plain mean-field ln Z).
pub fn cmfa_log_z(params: &ModelParams, mode: MeanFieldMode) -> Result<f64> {
    let sol = gap_solve(params)?;
    log_z_at(params, &sol, mode)
}

fn log_z_at(params: &ModelParams, sol: &MeanFieldSolution, mode: MeanFieldMode) -> Result<f64> {
    match sol.phase {
        Phase::Deformed => deformed_log_z(params, sol, mode),
        Phase::Normal => normal_log_z(params, sol, mode),
    }
}

/// ln Z with the phase held fixed at `phase`, for difference stencils that
/// must not straddle the phase boundary.
pub fn cmfa_log_z_in_phase(params: &ModelParams, mode: MeanFieldMode, phase: Phase) -> Result<f64> {
    let sol = gap_solve(params)?;
    if sol.phase != phase {
        return Err(Error::Phase(format!(
            "stencil point b = {}, T = {} left the {:?} phase",
            params.b, params.t, phase
        )));
    }
    log_z_at(params, &sol, mode)
}

/// Moments of the product state of identical spins with Bloch vector
/// (m_perp, m_z).
pub(crate) fn product_moments(n: usize, m_perp: f64, m_z: f64, log_z: f64) -> CollectiveMoments {
    let nf = n as f64;
    CollectiveMoments {
        sz: nf * m_z,
        sz2: nf * (nf - 1.0) * m_z * m_z + nf / 4.0,
        s2: nf * (nf - 1.0) * (m_perp * m_perp + m_z * m_z) + 0.75 * nf,
        log_z,
    }
}

/// Collective moments at the CMFA (or plain MFA) level.
///
/// Deformed phase, CMFA: <S_z> = -nb/(2 gamma v), <S_z^2> = <S_z>^2 + nT/(2 gamma v),
/// <S^2> = (n lambda/2v)^2 + (n/2)[1 - chi(2 - (1+chi)T/v)]/(1-chi)^2.
/// Normal phase, CMFA: differences of ln Z. MFA: the separable product state.
pub fn cmfa_moments(params: &ModelParams, mode: MeanFieldMode) -> Result<CollectiveMoments> {
    let sol = gap_solve(params)?;
    let log_z = log_z_at(params, &sol, mode)?;
    let nf = params.n as f64;
    let v = params.v;
    let t = params.t;

    if mode == MeanFieldMode::Mfa {
        let u = params.b - sol.z;
        let th = (0.5 * params.beta() * sol.lambda).tanh();
        let (m_perp, m_z) = if sol.lambda > 0.0 {
            (0.5 * sol.r / sol.lambda * th, -0.5 * u / sol.lambda * th)
        } else {
            (0.0, 0.0)
        };
        return Ok(product_moments(params.n, m_perp, m_z, log_z));
    }

    match sol.phase {
        Phase::Deformed => {
            if !sol.applicable {
                return Err(Error::NotApplicable(format!(
                    "|b| = {} exceeds b* = {:.6} at T = {} <= T~",
                    params.b.abs(),
                    sol.b_star.unwrap_or(f64::NAN),
                    t
                )));
            }
            let g = params.gamma;
            let sz = -nf * params.b / (2.0 * g * v);
            let sz2 = sz * sz + nf * t / (2.0 * g * v);
            let chi = sol.chi;
            let hart = nf * sol.lambda / (2.0 * v);
            let s2 = hart * hart
                + 0.5 * nf * (1.0 - chi * (2.0 - (1.0 + chi) * t / v)) / ((1.0 - chi) * (1.0 - chi));
            Ok(CollectiveMoments { sz, sz2, s2, log_z })
        }
        Phase::Normal => {
            let lz = |q: &ModelParams| cmfa_log_z_in_phase(q, mode, Phase::Normal);
            moments_from_log_z(lz, params, FdSteps::for_params(params))
        }
    }
}

/// CMFA / MFA concurrence. Zero in the normal phase and for plain MFA;
/// not-applicable beyond b* at T <= T~.
pub fn cmfa_concurrence(params: &ModelParams, mode: MeanFieldMode) -> Result<ConcurrenceResult> {
    let tier = mode.tier();
    if mode == MeanFieldMode::Mfa {
        return Ok(ConcurrenceResult::from_value(0.0, tier));
    }
    let sol = gap_solve(params)?;
    if sol.phase == Phase::Normal {
        return Ok(ConcurrenceResult::from_value(0.0, tier));
    }
    if !sol.applicable {
        return Ok(ConcurrenceResult::unavailable(tier, Status::NotApplicable));
    }
    let m = cmfa_moments(params, mode)?;
    match PairState::from_moments(&m, params.n) {
        Ok(pair) => Ok(concurrence(&pair, tier)),
        Err(_) => Ok(ConcurrenceResult::unavailable(tier, Status::NotApplicable)),
    }
}

/// Large-n, T << T_c expansions of the CMFA concurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmfaAsymptotics {
    /// (1/n)[1 - 2n e^{-beta v} - (2T/gamma v)/(1 - b^2/(gamma v)^2)]_+
    pub c_large_n: f64,
    /// gamma v sqrt(1 - (2T/gamma v)/(1 - 2n e^{-beta v})); `None` when no
    /// field keeps the bracket positive.
    pub b_limit: Option<f64>,
    /// gamma v - |b|, the limit temperature just below |b| = gamma v.
    pub t_limit_edge: f64,
    /// (gamma v/2)(1 - b^2/(gamma v)^2), the limit temperature when
    /// 2n e^{-v/T} is negligible.
    pub t_limit_small: f64,
    /// (v/ln 2n)[1 - (2/gamma)/((ln 2n)^2 (1 - b^2/(gamma v)^2))]
    pub t_limit_large_n: f64,
    /// n above which entanglement disappears: (1/2) e^{beta v}(1 - 2T/(gamma v)).
    pub vanishing_n: f64,
}

pub fn c_large_n(params: &ModelParams) -> f64 {
    let nf = params.n as f64;
    let gv = params.gamma * params.v;
    let y2 = (params.b / gv).powi(2);
    let bracket = 1.0 - 2.0 * nf * (-params.v / params.t).exp() - 2.0 * params.t / gv / (1.0 - y2);
    bracket.max(0.0) / nf
}

pub fn limit_field_estimate(params: &ModelParams) -> Option<f64> {
    let nf = params.n as f64;
    let gv = params.gamma * params.v;
    let den = 1.0 - 2.0 * nf * (-params.v / params.t).exp();
    if den <= 0.0 {
        return None;
    }
    let rad = 1.0 - 2.0 * params.t / gv / den;
    (rad > 0.0).then(|| gv * rad.sqrt())
}

pub fn cmfa_asymptotics(params: &ModelParams) -> Result<CmfaAsymptotics> {
    params.validate()?;
    let gv = params.gamma * params.v;
    if params.gamma <= 0.0 || params.b.abs() >= gv || params.t <= 0.0 {
        return Err(Error::NotApplicable("expansions need gamma > 0, |b| < gamma v, T > 0".into()));
    }
    if params.t >= critical_temperature(params.b / params.gamma, params.v) {
        return Err(Error::NotApplicable("expansions need T < T_c".into()));
    }
    let nf = params.n as f64;
    let y2 = (params.b / gv).powi(2);
    let l2n = (2.0 * nf).ln();
    Ok(CmfaAsymptotics {
        c_large_n: c_large_n(params),
        b_limit: limit_field_estimate(params),
        t_limit_edge: gv - params.b.abs(),
        t_limit_small: 0.5 * gv * (1.0 - y2),
        t_limit_large_n: params.v / l2n * (1.0 - 2.0 / params.gamma / (l2n * l2n * (1.0 - y2))),
        vanishing_n: 0.5 * (params.v / params.t).exp() * (1.0 - 2.0 * params.t / gv),
    })
}
