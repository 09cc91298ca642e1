//! Static-path integral with the RPA correction (CSPA) and without it (SPA).
//!
//! For gamma = 1 the static integral reduces to one radial variable,
//!
//! ```text
//! Z = (n beta/2v) int_0^inf r dr e^{-n beta r^2/4v} Z(lambda) C_RPA(lambda, omega),
//! ```
//!
//! and for gamma < 1 a longitudinal shift z is added,
//!
//! ```text
//! Z = (1/4) sqrt(n^3 beta^3/(pi v^3 (1-gamma)))
//!     int_0^inf r dr int dz e^{-n beta (r^2 + z^2/(1-gamma))/4v} Z(lambda) C_RPA,
//! ```
//!
//! with lambda = sqrt((b-z)^2 + r^2), Z(lambda) = e^{-beta E0} (2cosh(beta lambda/2))^n
//! and C_RPA = [sinh(beta lambda/2)/lambda] / [sinh(beta omega/2)/omega].

use std::cell::Cell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmfa::product_moments;
use crate::derivatives::{moments_from_log_z, FdSteps};
use crate::entanglement::{concurrence, CollectiveMoments, ConcurrenceResult, PairState, Tier};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::{ln_2cosh, ln_mode_factor, tanhc};
use crate::quadrature::{integrate_vec, QuadOptions};
use crate::roots::linspace;

/// Log-units kept below the integrand peak (plus ln n).
pub const TAIL_LOG_UNITS: f64 = 40.0;
pub const BREAKDOWN_SCAN_R: usize = 256;
pub const BREAKDOWN_SCAN_Z: usize = 64;
/// Largest acceptable estimated error on ln Z for an `ok` evaluation.
pub const MAX_QUADRATURE_ERROR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CspaMode {
    Cspa,
    Spa,
}

impl CspaMode {
    pub fn tier(&self) -> Tier {
        match self {
            CspaMode::Cspa => Tier::Cspa,
            CspaMode::Spa => Tier::Spa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CspaEvaluation {
    #[serde(rename = "logZ")]
    pub log_z: f64,
    /// Breakdown temperature T* at this field (cspa mode only).
    pub breakdown_t: Option<f64>,
    pub mode: CspaMode,
    /// Estimated absolute error on ln Z.
    pub quadrature_error: f64,
}

/// omega^2 = (lambda - v tanh(beta lambda/2))(lambda - v(1 - gamma r^2/lambda^2) tanh(beta lambda/2)),
/// lambda = sqrt((b-z)^2 + r^2).
pub fn rpa_frequency_squared(params: &ModelParams, r: f64, z: f64) -> Result<f64> {
    let lambda = (params.b - z).hypot(r);
    if lambda == 0.0 {
        return Err(Error::Domain("degenerate gap: lambda = 0 at r = 0, z = b".into()));
    }
    Ok(omega_squared(params, lambda, r))
}

/// The collective RPA energy; purely imaginary when omega^2 < 0.
pub fn rpa_frequency(params: &ModelParams, r: f64, z: f64) -> Result<Complex64> {
    let w2 = rpa_frequency_squared(params, r, z)?;
    Ok(if w2 >= 0.0 {
        Complex64::new(w2.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-w2).sqrt())
    })
}

fn omega_squared(params: &ModelParams, lambda: f64, r: f64) -> f64 {
    let k = 0.5 * params.beta() * params.v * tanhc(0.5 * params.beta() * lambda);
    let s = (r / lambda).powi(2);
    lambda * lambda * (1.0 - k) * (1.0 - (1.0 - params.gamma * s) * k)
}

struct Integrand {
    params: ModelParams,
    mode: CspaMode,
    beta: f64,
    nf: f64,
    two_d: bool,
}

impl Integrand {
    fn new(params: &ModelParams, mode: CspaMode) -> Self {
        Self {
            params: *params,
            mode,
            beta: params.beta(),
            nf: params.n as f64,
            two_d: params.gamma < 1.0,
        }
    }

    fn ln_prefactor(&self) -> f64 {
        let v = self.params.v;
        if self.two_d {
            let g1 = 1.0 - self.params.gamma;
            0.5 * (self.nf.powi(3) * self.beta.powi(3) / (std::f64::consts::PI * v.powi(3) * g1)).ln()
                - 4f64.ln()
        } else {
            (self.nf * self.beta / (2.0 * v)).ln()
        }
    }

    /// ln of the integrand without the prefactor; `None` past the breakdown
    /// (beta|omega|/2 >= pi).
    fn ln_value(&self, r: f64, z: f64) -> Option<f64> {
        if r <= 0.0 {
            return Some(f64::NEG_INFINITY);
        }
        let p = &self.params;
        let lambda = (p.b - z).hypot(r);
        let mut gauss = r * r;
        if self.two_d {
            gauss += z * z / (1.0 - p.gamma);
        }
        let mut g = r.ln() - self.nf * self.beta * gauss / (4.0 * p.v) - self.beta * p.e0()
            + self.nf * ln_2cosh(0.5 * self.beta * lambda);
        if self.mode == CspaMode::Cspa {
            let w2 = omega_squared(p, lambda, r);
            g += ln_mode_factor(lambda * lambda, self.beta)? - ln_mode_factor(w2, self.beta)?;
        }
        Some(g)
    }

    /// Bloch vector (|m_perp|, m_z) of the linearized spin at (r, z).
    fn bloch(&self, r: f64, z: f64) -> (f64, f64) {
        let u = self.params.b - z;
        let lambda = u.hypot(r);
        if lambda == 0.0 {
            return (0.0, 0.0);
        }
        let th = 0.5 * (0.5 * self.beta * lambda).tanh() / lambda;
        (r * th, -u * th)
    }

    fn breakdown_ranges(&self) -> (f64, Option<(f64, f64)>) {
        let p = &self.params;
        let width = (4.0 * p.v * (TAIL_LOG_UNITS + self.nf.ln()) / (self.nf * self.beta)).sqrt();
        let r_max = p.v + p.b.abs() + width;
        let z = if self.two_d {
            let g1 = 1.0 - p.gamma;
            let half = g1 * p.v + (g1 * width * width).sqrt();
            Some((-half, half))
        } else {
            None
        };
        (r_max, z)
    }

    /// First (r, z) on the scan grid with beta|omega|/2 >= pi.
    fn scan_breakdown(&self) -> Option<(f64, f64)> {
        if self.mode == CspaMode::Spa {
            return None;
        }
        let (r_max, zr) = self.breakdown_ranges();
        let rs = linspace(r_max / BREAKDOWN_SCAN_R as f64, r_max, BREAKDOWN_SCAN_R);
        let zs = match zr {
            Some((lo, hi)) => linspace(lo, hi, BREAKDOWN_SCAN_Z),
            None => vec![0.0],
        };
        let lim = -(2.0 * std::f64::consts::PI / self.beta).powi(2);
        for &z in &zs {
            for &r in &rs {
                let lambda = (self.params.b - z).hypot(r);
                if omega_squared(&self.params, lambda, r) <= lim {
                    return Some((r, z));
                }
            }
        }
        None
    }
}

/// Scans `g` on `[lo, hi]`, widening `hi` until the tail is negligible, and
/// returns the region where g > max - cut, padded by one grid step, with the
/// maximum found.
fn significant_range<G>(g: G, lo: f64, mut hi: f64, cut: f64, floor: Option<f64>) -> Result<(f64, f64, f64)>
where
    G: Fn(f64) -> Option<f64>,
{
    let n = BREAKDOWN_SCAN_R;
    for _ in 0..40 {
        let xs = linspace(lo, hi, n);
        let mut vals = Vec::with_capacity(n);
        for &x in &xs {
            vals.push(g(x).ok_or(Error::Breakdown { r: x, z: f64::NAN })?);
        }
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Quadrature { estimate: f64::NAN });
        }
        let level = max - cut;
        if vals[n - 1] > level {
            hi = lo + 2.0 * (hi - lo);
            continue;
        }
        let first = vals.iter().position(|&v| v > level).unwrap();
        let last = vals.iter().rposition(|&v| v > level).unwrap();
        let step = xs[1] - xs[0];
        let mut a = xs[first] - step;
        if let Some(f) = floor {
            a = a.max(f);
        }
        let b = xs[last] + step;
        return Ok((a, b, max));
    }
    Err(Error::Quadrature { estimate: f64::INFINITY })
}

/// Moments of the SPA mixture accumulated alongside Z: weights for
/// 1, m_z, m_z^2, |m|^2.
struct Accumulated {
    ln_z: f64,
    error: f64,
    mz: f64,
    mz2: f64,
    m2: f64,
}

fn integrate(params: &ModelParams, mode: CspaMode) -> Result<Accumulated> {
    params.validate()?;
    if params.t <= 0.0 {
        return Err(Error::Domain("the static-path integral needs T > 0".into()));
    }
    let f = Integrand::new(params, mode);
    if let Some((r, z)) = f.scan_breakdown() {
        return Err(Error::Breakdown { r, z });
    }
    let cut = TAIL_LOG_UNITS + f.nf.ln();
    let width = (4.0 * params.v / (f.nf * f.beta)).sqrt();
    let r_guess = 2.0 * (params.v + params.b.abs()) + 10.0 * width;

    let broke: Cell<Option<(f64, f64)>> = Cell::new(None);
    let opts_for = |scale: f64| QuadOptions {
        abs_tol: 1e-14 * scale,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };

    let result = if !f.two_d {
        let g = |r: f64| f.ln_value(r, 0.0);
        let (a, b, _) = significant_range(g, 0.0, r_guess, cut, Some(0.0))?;
        // Zoom for a finer maximum and range.
        let (a, b, max) = significant_range(g, a, b, cut, Some(0.0))?;
        let comps = |r: f64| -> [f64; 4] {
            match f.ln_value(r, 0.0) {
                Some(lv) => {
                    let w = (lv - max).exp();
                    let (mp, mz) = f.bloch(r, 0.0);
                    [w, w * mz, w * mz * mz, w * (mp * mp + mz * mz)]
                }
                None => {
                    broke.set(Some((r, 0.0)));
                    [0.0; 4]
                }
            }
        };
        let breaks = linspace(a, b, 33);
        let res = integrate_vec(comps, &breaks, opts_for((b - a) * 1e-3))?;
        (res.value, res.error, max)
    } else {
        let g1 = 1.0 - params.gamma;
        let z_width = (4.0 * params.v * g1 / (f.nf * f.beta)).sqrt();
        let z_half = g1 * params.v + 10.0 * z_width;
        // Profile over z of the r-maximum, on a coarse r grid.
        let r_grid = linspace(0.0, r_guess, BREAKDOWN_SCAN_R);
        let profile = |z: f64| -> Option<f64> {
            let mut m = f64::NEG_INFINITY;
            for &r in &r_grid[1..] {
                m = m.max(f.ln_value(r, z)?);
            }
            Some(m)
        };
        let (za, zb, _) = significant_range_sym(&profile, z_half, cut)?;
        let (za, zb, _) = significant_range(&profile, za, zb, cut, None)?;
        // r-range as the union over the z grid.
        let zs = linspace(za, zb, BREAKDOWN_SCAN_Z);
        let mut ra = f64::INFINITY;
        let mut rb: f64 = 0.0;
        let mut max = f64::NEG_INFINITY;
        for &z in &zs {
            let (a, b, m) = significant_range(|r| f.ln_value(r, z), 0.0, r_guess, cut, Some(0.0))?;
            max = max.max(m);
            ra = ra.min(a);
            rb = rb.max(b);
        }
        for &z in &zs {
            let (_, _, m) = significant_range(|r| f.ln_value(r, z), ra, rb, cut, Some(0.0))?;
            max = max.max(m);
        }
        let r_breaks = linspace(ra, rb, 33);
        let inner_opts = opts_for((rb - ra) * 1e-3);
        let inner_failed: Cell<Option<Error>> = Cell::new(None);
        let outer = |z: f64| -> [f64; 4] {
            let comps = |r: f64| -> [f64; 4] {
                match f.ln_value(r, z) {
                    Some(lv) => {
                        let w = (lv - max).exp();
                        let (mp, mz) = f.bloch(r, z);
                        [w, w * mz, w * mz * mz, w * (mp * mp + mz * mz)]
                    }
                    None => {
                        broke.set(Some((r, z)));
                        [0.0; 4]
                    }
                }
            };
            match integrate_vec(comps, &r_breaks, inner_opts) {
                Ok(res) => res.value,
                Err(e) => {
                    inner_failed.set(Some(e));
                    [0.0; 4]
                }
            }
        };
        let z_breaks = linspace(za, zb, 17);
        let res = integrate_vec(outer, &z_breaks, opts_for((zb - za) * (rb - ra) * 1e-3))?;
        if let Some(e) = inner_failed.take() {
            return Err(e);
        }
        (res.value, res.error, max)
    };

    if let Some((r, z)) = broke.get() {
        return Err(Error::Breakdown { r, z });
    }
    let (value, error, max) = result;
    if !(value[0] > 0.0) {
        return Err(Error::Quadrature { estimate: f64::NAN });
    }
    let rel = error[0] / value[0];
    if rel > MAX_QUADRATURE_ERROR {
        return Err(Error::Quadrature { estimate: rel });
    }
    Ok(Accumulated {
        ln_z: f.ln_prefactor() + max + value[0].ln(),
        error: rel,
        mz: value[1] / value[0],
        mz2: value[2] / value[0],
        m2: value[3] / value[0],
    })
}

/// `significant_range` on a window symmetric about zero that may widen on
/// either side.
fn significant_range_sym<G>(g: &G, half: f64, cut: f64) -> Result<(f64, f64, f64)>
where
    G: Fn(f64) -> Option<f64>,
{
    let mut h = half;
    for _ in 0..40 {
        let xs = linspace(-h, h, BREAKDOWN_SCAN_R);
        let mut vals = Vec::with_capacity(xs.len());
        for &x in &xs {
            vals.push(g(x).ok_or(Error::Breakdown { r: f64::NAN, z: x })?);
        }
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let level = max - cut;
        if vals[0] > level || vals[vals.len() - 1] > level {
            h *= 2.0;
            continue;
        }
        let first = vals.iter().position(|&v| v > level).unwrap();
        let last = vals.iter().rposition(|&v| v > level).unwrap();
        let step = xs[1] - xs[0];
        return Ok((xs[first] - step, xs[last] + step, max));
    }
    Err(Error::Quadrature { estimate: f64::INFINITY })
}

/// ln Z_CSPA (or ln Z_SPA) together with the breakdown temperature.
pub fn cspa_log_z(params: &ModelParams, mode: CspaMode) -> Result<CspaEvaluation> {
    let acc = integrate(params, mode)?;
    let breakdown_t = match mode {
        CspaMode::Cspa => Some(breakdown_temperature(params)?),
        CspaMode::Spa => None,
    };
    Ok(CspaEvaluation {
        log_z: acc.ln_z,
        breakdown_t,
        mode,
        quadrature_error: acc.error,
    })
}

/// ln Z only, without the breakdown-temperature search.
pub fn cspa_log_z_value(params: &ModelParams, mode: CspaMode) -> Result<f64> {
    integrate(params, mode).map(|a| a.ln_z)
}

/// Whether the breakdown scan finds beta|omega|/2 >= pi at temperature t.
pub fn breaks_down(params: &ModelParams) -> bool {
    Integrand::new(params, CspaMode::Cspa).scan_breakdown().is_some()
}

/// Largest temperature at which the breakdown scan still fails, located on a
/// log grid in [1e-3 v, v] and refined by bisection (0 if none).
pub fn breakdown_temperature(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let v = params.v;
    let grid = crate::roots::logspace(1e-3 * v, v, 61);
    let fails = |t: f64| breaks_down(&params.with_t(t));
    let Some(idx) = grid.iter().rposition(|&t| fails(t)) else {
        return Ok(0.0);
    };
    if idx + 1 == grid.len() {
        return Ok(grid[idx]);
    }
    crate::roots::bisect_predicate(fails, grid[idx], grid[idx + 1], 1e-6 * v)
}

/// Collective moments: in cspa mode by differences of ln Z_CSPA, in spa mode
/// as averages over the SPA mixture of product states.
pub fn cspa_moments(params: &ModelParams, mode: CspaMode) -> Result<CollectiveMoments> {
    match mode {
        CspaMode::Spa => {
            let acc = integrate(params, mode)?;
            let nf = params.n as f64;
            Ok(CollectiveMoments {
                sz: nf * acc.mz,
                sz2: nf * (nf - 1.0) * acc.mz2 + nf / 4.0,
                s2: nf * (nf - 1.0) * acc.m2 + 0.75 * nf,
                log_z: acc.ln_z,
            })
        }
        // A stencil point past the breakdown surfaces as Error::Breakdown; a
        // smaller step or the spa mode avoids it.
        CspaMode::Cspa => moments_from_log_z(
            |q: &ModelParams| cspa_log_z_value(q, CspaMode::Cspa),
            params,
            FdSteps::for_params(params),
        ),
    }
}

pub fn cspa_concurrence(params: &ModelParams, mode: CspaMode) -> Result<ConcurrenceResult> {
    let m = cspa_moments(params, mode)?;
    let pair = PairState::from_moments(&m, params.n)?;
    Ok(concurrence(&pair, mode.tier()))
}

/// Product-state moments at one static point, exposed for tests of the
/// separability of the SPA mixture.
pub fn static_point_moments(params: &ModelParams, r: f64, z: f64) -> CollectiveMoments {
    let f = Integrand::new(params, CspaMode::Spa);
    let (mp, mz) = f.bloch(r, z);
    product_moments(params.n, mp, mz, f64::NAN)
}
