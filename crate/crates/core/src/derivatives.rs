//! Collective moments from derivatives of ln Z.
//!
//! With H = b S_z - (v/n)[S^2 - gamma S_z^2] + v(3-gamma)/4:
//!
//! ```text
//! <S_z>   = -T d lnZ/db
//! <S_z^2> = T^2 d^2 lnZ/db^2 + <S_z>^2
//!         = n/4 - (nT/v) d lnZ/dgamma
//! <S^2>   = nT d lnZ/dv + gamma <S_z^2> + n(3-gamma)/4
//! ```
//!
//! Derivatives are central differences with one level of Richardson
//! extrapolation.

use crate::entanglement::CollectiveMoments;
use crate::error::Result;
use crate::model::ModelParams;

/// Step sizes for the b, v and gamma differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub b1: f64,
    pub b2: f64,
    pub v: f64,
    pub gamma: f64,
}

impl FdSteps {
    /// 1e-4 max(v, |b|) for first and 1e-3 max(v, |b|) for second
    /// derivatives, both capped at a fraction of T so that the stencil stays
    /// inside one thermal scale.
    pub fn for_params(p: &ModelParams) -> Self {
        let scale = p.v.max(p.b.abs());
        let cap = 0.02 * p.t;
        Self {
            b1: (1e-4 * scale).min(cap),
            b2: (1e-3 * scale).min(5.0 * cap),
            v: (1e-4 * p.v).min(cap),
            gamma: (1e-4_f64).min(cap / p.v),
        }
    }
}

/// Richardson-extrapolated central first derivative.
pub fn first_derivative<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let d1 = d(h)?;
    let d2 = d(2.0 * h)?;
    Ok((4.0 * d1 - d2) / 3.0)
}

/// Richardson-extrapolated second-order backward first derivative; `f0` is f(x).
pub fn backward_first_derivative<F>(f: F, x: f64, f0: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = |h: f64| -> Result<f64> { Ok((3.0 * f0 - 4.0 * f(x - h)? + f(x - 2.0 * h)?) / (2.0 * h)) };
    let d1 = d(h)?;
    let d2 = d(2.0 * h)?;
    Ok((4.0 * d1 - d2) / 3.0)
}

/// Richardson-extrapolated central second derivative; `f0` is f(x).
pub fn second_derivative<F>(f: F, x: f64, f0: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - 2.0 * f0 + f(x - h)?) / (h * h)) };
    let d1 = d(h)?;
    let d2 = d(2.0 * h)?;
    Ok((4.0 * d1 - d2) / 3.0)
}

/// Moments from a log-partition function: <S_z>, <S_z^2> by the b route and
/// <S^2> by the v route.
pub fn moments_from_log_z<F>(log_z: F, p: &ModelParams, steps: FdSteps) -> Result<CollectiveMoments>
where
    F: Fn(&ModelParams) -> Result<f64>,
{
    let nf = p.n as f64;
    let t = p.t;
    let f0 = log_z(p)?;
    let in_b = |b: f64| log_z(&p.with_b(b));
    let sz = -t * first_derivative(in_b, p.b, steps.b1)?;
    let sz2 = t * t * second_derivative(in_b, p.b, f0, steps.b2)? + sz * sz;
    let dv = first_derivative(|v: f64| log_z(&p.with_v(v)), p.v, steps.v)?;
    let s2 = nf * t * dv + p.gamma * sz2 + nf * (3.0 - p.gamma) / 4.0;
    Ok(CollectiveMoments {
        sz,
        sz2,
        s2,
        log_z: f0,
    })
}

/// <S_z^2> by the gamma route. Uses a backward stencil when a central one
/// would leave gamma <= 1.
pub fn sz2_from_gamma<F>(log_z: F, p: &ModelParams, steps: FdSteps) -> Result<f64>
where
    F: Fn(&ModelParams) -> Result<f64>,
{
    let nf = p.n as f64;
    let h = steps.gamma;
    let in_g = |g: f64| log_z(&p.with_gamma(g));
    let dg = if p.gamma + 4.0 * h <= 1.0 {
        first_derivative(in_g, p.gamma, h)?
    } else {
        backward_first_derivative(in_g, p.gamma, log_z(p)?, h)?
    };
    Ok(nf / 4.0 - nf * p.t / p.v * dg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_accuracy() {
        let f = |x: f64| Ok(x.sin() * x.exp());
        let d = first_derivative(f, 0.7, 1e-3).unwrap();
        let exact = 0.7f64.exp() * (0.7f64.sin() + 0.7f64.cos());
        assert!((d - exact).abs() < 1e-11);
        let db = backward_first_derivative(f, 0.7, f(0.7).unwrap(), 1e-3).unwrap();
        assert!((db - exact).abs() < 1e-8);
        let d2 = second_derivative(f, 0.7, f(0.7).unwrap(), 1e-3).unwrap();
        let exact2 = 2.0 * 0.7f64.exp() * 0.7f64.cos();
        assert!((d2 - exact2).abs() < 1e-8);
    }

    #[test]
    fn free_spins() {
        // v -> 0 limit handled through a tiny coupling: lnZ = n ln 2cosh(beta b/2) - beta E0.
        let p = ModelParams::new(6, 1e-9, 1.0, 0.4, 0.5).unwrap();
        let lz = |q: &ModelParams| Ok(q.n as f64 * (2.0 * (q.b / (2.0 * q.t)).cosh()).ln() - q.e0() / q.t);
        let m = moments_from_log_z(lz, &p, FdSteps::for_params(&p)).unwrap();
        let mz = -0.5 * (0.4f64).tanh();
        assert!((m.sz - 6.0 * mz).abs() < 1e-9);
        assert!((m.sz2 - (30.0 * mz * mz + 1.5)).abs() < 1e-6);
    }
}
