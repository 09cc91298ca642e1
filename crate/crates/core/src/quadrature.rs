//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The integrand may return several components at once; they share the
//! abscissae and the subdivision is driven by the largest component error.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];

// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
}

impl<const K: usize> Panel<K> {
    fn worst(&self) -> f64 {
        self.error.iter().fold(0.0, |m, &e| m.max(e))
    }
}

fn gk15<const K: usize, F>(f: &F, a: f64, b: f64) -> Panel<K>
where
    F: Fn(f64) -> [f64; K],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        value[k] = kron[k] * h;
        // Plain |K - G| is pessimistic but safe for smooth integrands.
        error[k] = ((kron[k] - gauss[k]) * h).abs();
    }
    Panel { a, b, value, error }
}

/// Integrates `f` over the consecutive panels given by `breaks`
/// (ascending, at least two points), refining the worst panel until the
/// total error of every component is below `max(abs_tol, rel_tol |I|)`.
pub fn integrate_vec<const K: usize, F>(
    f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult<K>>
where
    F: Fn(f64) -> [f64; K],
{
    if breaks.len() < 2 {
        return Err(Error::Domain("quadrature needs at least two break points".into()));
    }
    let mut panels: Vec<Panel<K>> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();

    loop {
        let mut value = [0.0; K];
        let mut error = [0.0; K];
        for p in &panels {
            for k in 0..K {
                value[k] += p.value[k];
                error[k] += p.error[k];
            }
        }
        if value.iter().chain(error.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Quadrature { estimate: f64::NAN });
        }
        let converged = (0..K).all(|k| error[k] <= opts.abs_tol.max(opts.rel_tol * value[k].abs()));
        if converged {
            return Ok(QuadResult {
                value,
                error,
                intervals: panels.len(),
            });
        }
        if panels.len() >= opts.max_intervals {
            let worst = error.iter().fold(0.0f64, |m, &e| m.max(e));
            return Err(Error::Quadrature { estimate: worst });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.worst().total_cmp(&y.1.worst()))
            .expect("non-empty");
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Quadrature { estimate: p.worst() });
        }
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(f: F, breaks: &[f64], opts: QuadOptions) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_vec(|x| [f(x)], breaks, opts)?;
    Ok((r.value[0], r.error[0]))
}
