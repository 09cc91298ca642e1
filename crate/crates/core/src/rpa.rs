//! Generic static-path/RPA machinery for H = sum_i H0_i - 1/2 sum_nu v_nu (Q^nu)^2
//! with Q^nu = sum_i Q^nu_i.
//!
//! Sites are grouped into classes of identical sites. For identical sites the
//! RPA matrix splits into one collective block per class (coupled through the
//! interaction) plus `count - 1` copies of the bare local excitations, whose
//! energies equal their lambda and drop out of C_RPA. Only the collective block
//! is diagonalized.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::{ln_mode_factor, LogSum};

type CMat = DMatrix<Complex64>;

/// Relative size below which a local excitation energy is treated as a
/// degeneracy and left out of the RPA space.
pub const DEGENERATE_LAMBDA: f64 = 1e-12;
/// Hessian eigenvalues below this fraction of the trace are Goldstone modes.
pub const GOLDSTONE_FRACTION: f64 = 1e-8;
pub const HARTREE_DAMPING: f64 = 0.5;
pub const HARTREE_TOLERANCE: f64 = 1e-12;
pub const HARTREE_MAX_ITERATIONS: usize = 10_000;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn hermitian_deviation(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// One subsystem: its bare Hamiltonian and the operators it couples through.
#[derive(Debug, Clone)]
pub struct LocalSite {
    pub h0: CMat,
    pub q_ops: Vec<CMat>,
}

impl LocalSite {
    pub fn new(h0: CMat, q_ops: Vec<CMat>) -> Result<Self> {
        let d = h0.nrows();
        if h0.ncols() != d || q_ops.iter().any(|q| q.nrows() != d || q.ncols() != d) {
            return Err(Error::Domain("local matrices must share one square dimension".into()));
        }
        let scale = 1.0 + max_abs(&h0);
        if hermitian_deviation(&h0) > 1e-12 * scale {
            return Err(Error::NonHermitian {
                deviation: hermitian_deviation(&h0),
            });
        }
        for q in &q_ops {
            let s = 1.0 + max_abs(q);
            let herm = hermitian_deviation(q);
            let anti = max_abs(&(q + q.adjoint()));
            if herm > 1e-12 * s && anti > 1e-12 * s {
                return Err(Error::NonHermitian { deviation: herm.min(anti) });
            }
        }
        Ok(Self { h0, q_ops })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// h(x) = H0 - sum_nu x_nu Q^nu
    pub fn linearized(&self, x: &[f64]) -> CMat {
        let mut h = self.h0.clone();
        for (q, &xv) in self.q_ops.iter().zip(x) {
            h -= q * c(xv);
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct SiteGroup {
    pub site: LocalSite,
    pub count: usize,
}

/// Sites plus the couplings v_nu (all positive).
#[derive(Debug, Clone)]
pub struct RpaSystem {
    pub groups: Vec<SiteGroup>,
    pub couplings: Vec<f64>,
}

impl RpaSystem {
    pub fn new(groups: Vec<SiteGroup>, couplings: Vec<f64>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Domain("at least one site group is required".into()));
        }
        if couplings.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain("couplings v_nu must be positive".into()));
        }
        for g in &groups {
            if g.site.q_ops.len() != couplings.len() {
                return Err(Error::Domain(format!(
                    "site has {} coupling operators but {} couplings were given",
                    g.site.q_ops.len(),
                    couplings.len()
                )));
            }
            if g.count == 0 {
                return Err(Error::Domain("empty site group".into()));
            }
        }
        Ok(Self { groups, couplings })
    }

    pub fn channels(&self) -> usize {
        self.couplings.len()
    }

    /// Upper bound on |v_nu <Q^nu>| used to bracket radial searches.
    fn field_bound(&self) -> f64 {
        let mut b: f64 = 0.0;
        for (nu, &v) in self.couplings.iter().enumerate() {
            let q: f64 = self
                .groups
                .iter()
                .map(|g| g.count as f64 * spectral_norm(&g.site.q_ops[nu]))
                .sum();
            b = b.max(v * q);
        }
        b
    }
}

fn spectral_norm(m: &CMat) -> f64 {
    m.clone().singular_values().iter().fold(0.0, |a: f64, &s| a.max(s))
}

/// Spin-1/2 operators (s_x, s_y, s_z) in the basis |up>, |down>.
pub fn spin_half_operators() -> [CMat; 3] {
    let h = 0.5;
    let z = Complex64::new(0.0, 0.0);
    let sx = CMat::from_row_slice(2, 2, &[z, c(h), c(h), z]);
    let sy = CMat::from_row_slice(2, 2, &[z, Complex64::new(0.0, -h), Complex64::new(0.0, h), z]);
    let sz = CMat::from_row_slice(2, 2, &[c(h), z, z, c(-h)]);
    [sx, sy, sz]
}

/// The fully connected XXZ model in the form sum_i H0_i - 1/2 sum v_nu (Q^nu)^2:
/// H0_i = b s_z + E0/n, Q = (S_x, S_y[, S_z]), v = (2v/n, 2v/n[, 2v(1-gamma)/n]).
/// The S_z channel is present only for gamma < 1.
pub fn xxz_system(params: &ModelParams) -> Result<RpaSystem> {
    params.validate()?;
    let nf = params.n as f64;
    let [sx, sy, sz] = spin_half_operators();
    let h0 = &sz * c(params.b) + CMat::identity(2, 2) * c(params.e0() / nf);
    let mut q_ops = vec![sx, sy];
    let mut couplings = vec![2.0 * params.v / nf, 2.0 * params.v / nf];
    if params.gamma < 1.0 {
        q_ops.push(sz);
        couplings.push(2.0 * params.v * (1.0 - params.gamma) / nf);
    }
    let site = LocalSite::new(h0, q_ops)?;
    RpaSystem::new(
        vec![SiteGroup {
            site,
            count: params.n,
        }],
        couplings,
    )
}

/// Eigensystem of one linearized local Hamiltonian.
#[derive(Debug, Clone)]
pub struct LocalEigensystem {
    pub energies: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// ln tr exp(-beta h_i(x))
    pub ln_trace: f64,
    /// Coupling operators in the local eigenbasis.
    pub q_eigen: Vec<CMat>,
    pub count: usize,
}

impl LocalEigensystem {
    fn mean(&self, nu: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.q_eigen[nu][(k, k)].re)
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct StaticConfiguration {
    pub x: Vec<f64>,
    pub beta: f64,
    pub sites: Vec<LocalEigensystem>,
}

impl StaticConfiguration {
    /// ln Z(x) = sum_i ln tr exp(-beta h_i(x))
    pub fn log_z(&self) -> f64 {
        self.sites.iter().map(|s| s.count as f64 * s.ln_trace).sum()
    }

    /// <Q^nu>_x summed over all sites.
    pub fn expectation(&self, nu: usize) -> f64 {
        self.sites.iter().map(|s| s.count as f64 * s.mean(nu)).sum()
    }

    /// -beta sum_nu x_nu^2/(2 v_nu) + ln Z(x)
    pub fn log_weight(&self, couplings: &[f64]) -> f64 {
        let gauss: f64 = self.x.iter().zip(couplings).map(|(x, v)| x * x / (2.0 * v)).sum();
        -self.beta * gauss + self.log_z()
    }

    /// F(x) = sum_nu x_nu^2/(2 v_nu) - T ln Z(x)
    pub fn free_energy(&self, couplings: &[f64]) -> f64 {
        -self.log_weight(couplings) / self.beta
    }

    /// Largest local excitation energy, used as the energy scale.
    fn scale(&self) -> f64 {
        self.sites
            .iter()
            .map(|s| s.energies.last().unwrap() - s.energies[0])
            .fold(0.0, f64::max)
            .max(1e-300)
    }
}

/// Diagonalizes every h_i(x) and forms the local Boltzmann occupations.
pub fn linearize(system: &RpaSystem, x: &[f64], beta: f64) -> Result<StaticConfiguration> {
    if x.len() != system.channels() {
        return Err(Error::Domain(format!(
            "expected {} static variables, got {}",
            system.channels(),
            x.len()
        )));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain("linearization needs 0 < T < inf".into()));
    }
    let mut sites = Vec::with_capacity(system.groups.len());
    for g in &system.groups {
        let h = g.site.linearized(x);
        let dev = hermitian_deviation(&h);
        if dev > 1e-12 * (1.0 + max_abs(&h)) {
            return Err(Error::NonHermitian { deviation: dev });
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMat::from_fn(g.site.dim(), order.len(), |r, col| {
            eig.eigenvectors[(r, order[col])]
        });
        let mut acc = LogSum::new();
        for &e in &energies {
            acc.add(-beta * e);
        }
        let ln_trace = acc.ln();
        let probabilities = energies.iter().map(|&e| (-beta * e - ln_trace).exp()).collect();
        let q_eigen = g
            .site
            .q_ops
            .iter()
            .map(|q| vectors.adjoint() * q * &vectors)
            .collect();
        sites.push(LocalEigensystem {
            energies,
            probabilities,
            ln_trace,
            q_eigen,
            count: g.count,
        });
    }
    Ok(StaticConfiguration {
        x: x.to_vec(),
        beta,
        sites,
    })
}

/// R_{nu nu'}(x, w) = sum_{i, k != k'} <k|Q^nu|k'><k'|Q^nu'|k> (p_k - p_k')/(e_k - e_k' + w)
pub fn response_matrix(config: &StaticConfiguration, omega: Complex64) -> Result<CMat> {
    let nq = config.sites[0].q_eigen.len();
    let scale = config.scale();
    let mut r = CMat::zeros(nq, nq);
    for s in &config.sites {
        let d = s.energies.len();
        for k in 0..d {
            for kp in 0..d {
                if k == kp {
                    continue;
                }
                let dp = s.probabilities[k] - s.probabilities[kp];
                if dp == 0.0 {
                    continue;
                }
                let den = c(s.energies[k] - s.energies[kp]) + omega;
                if den.norm() < 1e-12 * scale {
                    return Err(Error::Pole { omega: omega.re });
                }
                let w = c(s.count as f64 * dp) / den;
                for a in 0..nq {
                    for b in 0..nq {
                        r[(a, b)] += s.q_eigen[a][(k, kp)] * s.q_eigen[b][(kp, k)] * w;
                    }
                }
            }
        }
    }
    Ok(r)
}

/// Static limit of R with the degenerate-level limit
/// (p_k - p_k')/(e_k - e_k') -> -beta p_k.
fn static_response(config: &StaticConfiguration) -> DMatrix<f64> {
    let nq = config.sites[0].q_eigen.len();
    let scale = config.scale();
    let mut r = DMatrix::<f64>::zeros(nq, nq);
    for s in &config.sites {
        let d = s.energies.len();
        for k in 0..d {
            for kp in 0..d {
                if k == kp {
                    continue;
                }
                let de = s.energies[k] - s.energies[kp];
                let ratio = if de.abs() < DEGENERATE_LAMBDA * scale {
                    -config.beta * s.probabilities[k]
                } else {
                    (s.probabilities[k] - s.probabilities[kp]) / de
                };
                for a in 0..nq {
                    for b in 0..nq {
                        let qq = s.q_eigen[a][(k, kp)] * s.q_eigen[b][(kp, k)];
                        r[(a, b)] += s.count as f64 * ratio * qq.re;
                    }
                }
            }
        }
    }
    r
}

/// Local excitation (k, k') of one site class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excitation {
    pub group: usize,
    pub k: usize,
    pub k_prime: usize,
    /// lambda = e_k - e_k'
    pub lambda: f64,
    /// p_k - p_k'
    pub dp: f64,
}

#[derive(Debug, Clone)]
pub struct RpaSpectrum {
    pub excitations: Vec<Excitation>,
    /// Eigenvalues of the collective RPA block, in the order returned by the
    /// eigensolver.
    pub omegas: Vec<Complex64>,
    /// Excitations dropped as degenerate (|lambda| below tolerance).
    pub excluded: usize,
    /// Largest normalized |Det[1 + v R(w)]| over the real RPA energies that
    /// are not bare poles.
    pub root_residual: f64,
    /// omega^2 + (2 pi T)^2 > 0 for every mode and no complex quartets.
    pub valid: bool,
    pub beta: f64,
}

impl RpaSpectrum {
    /// omega^2 per mode (real part; complex quartets make the spectrum invalid).
    pub fn omega_squared(&self) -> Vec<f64> {
        self.omegas.iter().map(|w| (w * w).re).collect()
    }

    /// Smallest |omega^2|^{1/2} in the spectrum.
    pub fn lowest(&self) -> f64 {
        self.omegas.iter().map(|w| w.norm()).fold(f64::INFINITY, f64::min)
    }
}

fn excitations(config: &StaticConfiguration) -> (Vec<Excitation>, usize) {
    let scale = config.scale();
    let mut out = Vec::new();
    let mut excluded = 0;
    for (g, s) in config.sites.iter().enumerate() {
        let d = s.energies.len();
        for k in 0..d {
            for kp in 0..d {
                if k == kp {
                    continue;
                }
                let lambda = s.energies[k] - s.energies[kp];
                if lambda.abs() < DEGENERATE_LAMBDA * scale {
                    excluded += 1;
                    continue;
                }
                out.push(Excitation {
                    group: g,
                    k,
                    k_prime: kp,
                    lambda,
                    dp: s.probabilities[k] - s.probabilities[kp],
                });
            }
        }
    }
    (out, excluded)
}

/// Collective block of A_{aa'} = lambda_a delta + p_a sum_nu v_nu Q^nu_{-a} Q^nu_{a'}
/// with the interaction summed over the `count` sites of the partner class.
pub fn collective_a_matrix(config: &StaticConfiguration, couplings: &[f64]) -> (CMat, Vec<Excitation>, usize) {
    let (ex, excluded) = excitations(config);
    let m = ex.len();
    let mut a = CMat::zeros(m, m);
    for (i, ei) in ex.iter().enumerate() {
        let si = &config.sites[ei.group];
        for (j, ej) in ex.iter().enumerate() {
            let sj = &config.sites[ej.group];
            let mut sum = c(0.0);
            for (nu, &v) in couplings.iter().enumerate() {
                sum += si.q_eigen[nu][(ei.k_prime, ei.k)] * sj.q_eigen[nu][(ej.k, ej.k_prime)] * c(v);
            }
            a[(i, j)] = sum * c(ei.dp * sj.count as f64);
            if i == j {
                a[(i, j)] += c(ei.lambda);
            }
        }
    }
    (a, ex, excluded)
}

/// Normalized |Det M|: the determinant divided by the product of column norms
/// (Hadamard ratio), in [0, 1] and zero exactly at singular M.
fn normalized_det(m: &CMat) -> f64 {
    let det = m.clone().determinant().norm();
    let norms: f64 = m.column_iter().map(|col| col.norm()).product();
    if norms == 0.0 {
        0.0
    } else {
        det / norms
    }
}

/// RPA energies as eigenvalues of the collective A-matrix, each real one
/// cross-checked as a root of Det[1 + v R(-w)] = 0.
pub fn rpa_energies(config: &StaticConfiguration, couplings: &[f64]) -> Result<RpaSpectrum> {
    let (a, ex, excluded) = collective_a_matrix(config, couplings);
    let scale = config.scale();
    let omegas: Vec<Complex64> = if ex.is_empty() {
        Vec::new()
    } else {
        let schur = a
            .try_schur(1e-15, 100_000)
            .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
        schur
            .eigenvalues()
            .ok_or_else(|| Error::Eigen("Schur form is not triangular".into()))?
            .iter()
            .copied()
            .collect()
    };

    let two_pi_t = 2.0 * std::f64::consts::PI / config.beta;
    let mut valid = true;
    for w in &omegas {
        let w2 = w * w;
        if w2.im.abs() > 1e-8 * scale * scale {
            valid = false;
        }
        if w2.re + two_pi_t * two_pi_t <= 0.0 {
            valid = false;
        }
    }

    let mut root_residual: f64 = 0.0;
    let nq = couplings.len();
    for w in &omegas {
        if w.im.abs() > 1e-9 * scale {
            continue;
        }
        // Bare poles (uncoupled excitations) make R singular; skip them.
        let near_pole = ex.iter().any(|e| (e.lambda - w.re).abs() < 1e-6 * scale);
        if near_pole {
            continue;
        }
        if let Ok(r) = response_matrix(config, c(-w.re)) {
            let mut m = CMat::identity(nq, nq);
            for a in 0..nq {
                for b in 0..nq {
                    m[(a, b)] += c(couplings[a]) * r[(a, b)];
                }
            }
            root_residual = root_residual.max(normalized_det(&m));
        }
    }

    Ok(RpaSpectrum {
        excitations: ex,
        omegas,
        excluded,
        root_residual,
        valid,
        beta: config.beta,
    })
}

/// ln C_RPA = sum_{a>0} ln[ f(lambda_a)/f(omega_a) ], f(w) = sinh(beta w/2)/w,
/// evaluated as half the sum over all +-pairs. f is continued to imaginary
/// w as sin(beta|w|/2)/|w| and equals beta/2 at w = 0.
pub fn ln_c_rpa(spectrum: &RpaSpectrum) -> Result<f64> {
    let beta = spectrum.beta;
    let mut total = 0.0;
    for e in &spectrum.excitations {
        total += ln_mode_factor(e.lambda * e.lambda, beta).expect("real lambda");
    }
    for (i, w) in spectrum.omegas.iter().enumerate() {
        let w2 = w * w;
        if w2.im.abs() > 1e-8 * (1.0 + w2.norm()) {
            return Err(Error::ComplexRpaEnergy { re: w.re, im: w.im });
        }
        match ln_mode_factor(w2.re, beta) {
            Some(f) => total -= f,
            None => {
                return Err(Error::RpaBreakdown {
                    mode: i,
                    omega2: w2.re,
                })
            }
        }
    }
    Ok(0.5 * total)
}

pub fn c_rpa(spectrum: &RpaSpectrum) -> Result<f64> {
    ln_c_rpa(spectrum).map(f64::exp)
}

/// v_nu d^2F/dx_nu dx_nu' from the static response and the occupation
/// derivatives dp_k/dx_nu' = beta p_k (Q_kk - <Q>), symmetrized with sqrt(v).
pub fn static_hessian(config: &StaticConfiguration, couplings: &[f64]) -> DMatrix<f64> {
    let nq = couplings.len();
    let r0 = static_response(config);
    let mut cov = DMatrix::<f64>::zeros(nq, nq);
    for s in &config.sites {
        let means: Vec<f64> = (0..nq).map(|nu| s.mean(nu)).collect();
        for a in 0..nq {
            for b in 0..nq {
                let mut acc = 0.0;
                for (k, p) in s.probabilities.iter().enumerate() {
                    acc += p * (s.q_eigen[a][(k, k)].re - means[a]) * (s.q_eigen[b][(k, k)].re - means[b]);
                }
                cov[(a, b)] += s.count as f64 * config.beta * acc;
            }
        }
    }
    DMatrix::from_fn(nq, nq, |a, b| {
        let delta = if a == b { 1.0 } else { 0.0 };
        delta + couplings[a].sqrt() * (r0[(a, b)] - cov[(a, b)]) * couplings[b].sqrt()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticFluctuation {
    /// Det[v d^2F]^{-1/2} over the intrinsic directions.
    pub c0: f64,
    /// Hessian eigenvalues treated as intrinsic.
    pub intrinsic: Vec<f64>,
    /// Number of Goldstone directions removed.
    pub goldstone: usize,
    /// Integral over the degenerate orbit in units of the d(x) measure, when
    /// there is exactly one Goldstone direction rotating two equal channels.
    pub orbit: Option<f64>,
}

/// C_0 at a minimum of F, excluding Goldstone directions.
pub fn c0_factor(config: &StaticConfiguration, couplings: &[f64]) -> Result<StaticFluctuation> {
    let h = static_hessian(config, couplings);
    let eig = SymmetricEigen::new(h.clone());
    let trace = h.trace().abs().max(1e-300);
    let mut intrinsic = Vec::new();
    let mut goldstone_vecs = Vec::new();
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e.abs() < GOLDSTONE_FRACTION * trace {
            goldstone_vecs.push(eig.eigenvectors.column(i).clone_owned());
        } else if e < 0.0 {
            return Err(Error::Saddle { determinant: e });
        } else {
            intrinsic.push(e);
        }
    }
    let ln_c0: f64 = -0.5 * intrinsic.iter().map(|e| e.ln()).sum::<f64>();

    let orbit = if goldstone_vecs.len() == 1 {
        let g = &goldstone_vecs[0];
        let active: Vec<usize> = (0..g.len()).filter(|&i| g[i].abs() > 0.1).collect();
        if active.len() == 2 && (couplings[active[0]] - couplings[active[1]]).abs() <= 1e-12 * couplings[active[0]] {
            let r0 = config.x[active[0]].hypot(config.x[active[1]]);
            Some(r0 * (2.0 * std::f64::consts::PI * config.beta / couplings[active[0]]).sqrt())
        } else {
            None
        }
    } else {
        None
    };

    Ok(StaticFluctuation {
        c0: ln_c0.exp(),
        intrinsic,
        goldstone: goldstone_vecs.len(),
        orbit,
    })
}

#[derive(Debug, Clone)]
pub struct HartreeSolution {
    pub config: StaticConfiguration,
    pub free_energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn hartree_map(system: &RpaSystem, x: &[f64], beta: f64) -> Result<(Vec<f64>, StaticConfiguration)> {
    let cfg = linearize(system, x, beta)?;
    let g = (0..system.channels())
        .map(|nu| system.couplings[nu] * cfg.expectation(nu))
        .collect();
    Ok((g, cfg))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Damped iteration x <- (1-d) x + d v<Q>_x from one seed.
fn iterate(system: &RpaSystem, seed: &[f64], beta: f64) -> Result<HartreeSolution> {
    let scale = system.field_bound().max(1e-300);
    let mut x = seed.to_vec();
    for it in 1..=HARTREE_MAX_ITERATIONS {
        let (g, cfg) = hartree_map(system, &x, beta)?;
        let diff: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a - b).collect();
        let residual = norm(&diff);
        if residual < HARTREE_TOLERANCE * scale {
            return Ok(HartreeSolution {
                free_energy: cfg.free_energy(&system.couplings),
                config: cfg,
                iterations: it,
                residual,
            });
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi = (1.0 - HARTREE_DAMPING) * *xi + HARTREE_DAMPING * gi;
        }
    }
    radial_fallback(system, &x, beta)
}

/// Bisection on s for u . v<Q>(s u) = s along the direction u of `x`.
fn radial_fallback(system: &RpaSystem, x: &[f64], beta: f64) -> Result<HartreeSolution> {
    let r = norm(x);
    let bound = system.field_bound();
    let fail = |residual: f64| Error::NoConvergence {
        iterations: HARTREE_MAX_ITERATIONS,
        residual,
    };
    if r == 0.0 {
        return Err(fail(f64::NAN));
    }
    let u: Vec<f64> = x.iter().map(|a| a / r).collect();
    let g = |s: f64| -> f64 {
        let xs: Vec<f64> = u.iter().map(|a| a * s).collect();
        match hartree_map(system, &xs, beta) {
            Ok((gv, _)) => gv.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - s,
            Err(_) => f64::NAN,
        }
    };
    let lo = 1e-12 * bound;
    let hi = bound * (1.0 + 1e-9);
    let s = crate::roots::bisect(g, lo, hi, 1e-15 * bound).map_err(|_| fail(f64::NAN))?;
    let xs: Vec<f64> = u.iter().map(|a| a * s).collect();
    let (gv, cfg) = hartree_map(system, &xs, beta)?;
    let residual = norm(&gv.iter().zip(&xs).map(|(a, b)| a - b).collect::<Vec<_>>());
    if residual > 1e-8 * bound {
        return Err(fail(residual));
    }
    Ok(HartreeSolution {
        free_energy: cfg.free_energy(&system.couplings),
        config: cfg,
        iterations: HARTREE_MAX_ITERATIONS,
        residual,
    })
}

/// Self-consistent x_nu = v_nu <Q^nu>_x. Iterates from `x0`, from x = 0 and
/// from a seed along each channel, and returns the solution of lowest F.
pub fn hartree_solve(system: &RpaSystem, t: f64, x0: &[f64]) -> Result<HartreeSolution> {
    if !(t > 0.0) {
        return Err(Error::Domain("Hartree solution needs T > 0".into()));
    }
    let beta = 1.0 / t;
    let nq = system.channels();
    let bound = system.field_bound();
    let mut seeds = vec![x0.to_vec(), vec![0.0; nq]];
    for nu in 0..nq {
        let mut s = vec![0.0; nq];
        s[nu] = 0.5 * bound;
        seeds.push(s);
    }
    let mut best: Option<HartreeSolution> = None;
    let mut last_err = None;
    for seed in &seeds {
        match iterate(system, seed, beta) {
            Ok(sol) => {
                if best.as_ref().map_or(true, |b| sol.free_energy < b.free_energy - 1e-14 * sol.free_energy.abs()) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::NoConvergence { iterations: 0, residual: f64::NAN }))
}

/// ln of the saddle-point partition function
/// e^{-beta sum x^2/2v} Z(x) C_0 C_RPA at a Hartree solution, with the
/// orbit integral included for a single Goldstone direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleTerms {
    pub hartree: f64,
    pub ln_c0: f64,
    pub ln_c_rpa: f64,
}

impl SaddleTerms {
    pub fn total(&self) -> f64 {
        self.hartree + self.ln_c0 + self.ln_c_rpa
    }
}

pub fn saddle_terms(system: &RpaSystem, config: &StaticConfiguration) -> Result<SaddleTerms> {
    let fluct = c0_factor(config, &system.couplings)?;
    let ln_c0 = match (fluct.goldstone, fluct.orbit) {
        (0, _) => fluct.c0.ln(),
        (1, Some(orbit)) => fluct.c0.ln() + orbit.ln(),
        _ => {
            return Err(Error::Saddle {
                determinant: 0.0,
            })
        }
    };
    let spectrum = rpa_energies(config, &system.couplings)?;
    Ok(SaddleTerms {
        hartree: config.log_weight(&system.couplings),
        ln_c0,
        ln_c_rpa: ln_c_rpa(&spectrum)?,
    })
}
