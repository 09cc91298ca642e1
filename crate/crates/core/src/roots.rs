//! Bracketing root finders.

use crate::error::{Error, Result};

/// Bisection on [lo, hi]; f(lo) and f(hi) must differ in sign.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo:.3e}, {fhi:.3e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection on a boolean predicate: returns the switch point between
/// `pred(lo)` and `pred(hi)`, which must differ.
pub fn bisect_predicate<F>(pred: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> bool,
{
    let plo = pred(lo);
    if plo == pred(hi) {
        return Err(Error::Bracket(format!("predicate constant on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) == plo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A maximal run of grid points where the sign function is positive,
/// with its ends refined by bisection. `None` ends extend past the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveInterval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Scans `sign` on `grid` (ascending) and refines each change of
/// positivity. Points where `sign` is `None` are skipped.
pub fn positive_intervals<F>(sign: F, grid: &[f64], tol: f64) -> Vec<PositiveInterval>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let samples: Vec<(f64, bool)> = grid
        .iter()
        .filter_map(|&x| sign(x).map(|s| (x, s > 0.0)))
        .collect();
    let is_pos = |x: f64| sign(x).map(|s| s > 0.0);

    let mut out = Vec::new();
    let mut current: Option<PositiveInterval> = None;
    for (i, &(x, pos)) in samples.iter().enumerate() {
        let prev = if i > 0 { Some(samples[i - 1]) } else { None };
        match (prev, pos) {
            (None, true) => {
                current = Some(PositiveInterval {
                    lower: None,
                    upper: None,
                })
            }
            (Some((xp, false)), true) => {
                let edge = refine(&is_pos, xp, x, tol);
                current = Some(PositiveInterval {
                    lower: Some(edge),
                    upper: None,
                });
            }
            (Some((xp, true)), false) => {
                let edge = refine(&is_pos, xp, x, tol);
                if let Some(mut c) = current.take() {
                    c.upper = Some(edge);
                    out.push(c);
                }
            }
            _ => {}
        }
    }
    if let Some(c) = current {
        out.push(c);
    }
    out
}

fn refine<F>(is_pos: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> Option<bool>,
{
    let plo = is_pos(lo).unwrap_or(false);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match is_pos(mid) {
            Some(p) if p == plo => lo = mid,
            Some(_) => hi = mid,
            // Undefined points are treated as the non-positive side.
            None => {
                if plo {
                    hi = mid
                } else {
                    lo = mid
                }
            }
        }
    }
    0.5 * (lo + hi)
}

pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    (0..count)
        .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
        .collect()
}

pub fn logspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    linspace(min.ln(), max.ln(), count).into_iter().map(f64::exp).collect()
}
