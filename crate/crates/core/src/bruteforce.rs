//! Full Hilbert-space verification oracle.
//!
//! Builds the site-resolved Hamiltonian
//! H = b sum_i s^z_i - (v/n) sum_{i != j} [s^x_i s^x_j + s^y_i s^y_j + (1-gamma) s^z_i s^z_j]
//! in the computational basis, diagonalizes each fixed-S_z block densely and
//! forms thermal averages and the two-site reduced density by partial trace.
//! Nothing here uses the total-spin multiplet structure.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};

use crate::entanglement::CollectiveMoments;
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const BRUTE_FORCE_MAX_N: usize = 14;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub moments: CollectiveMoments,
    /// Reduced density of sites 0 and 1 in the basis |uu>, |ud>, |du>, |dd>.
    pub rho2: Matrix4<f64>,
}

struct Eigenpair {
    energy: f64,
    vector: Vec<f64>,
}

struct Sector {
    basis: Vec<u32>,
    hamiltonian: DMatrix<f64>,
    s2_op: DMatrix<f64>,
}

fn spin(state: u32, site: usize) -> f64 {
    if state >> site & 1 == 1 {
        0.5
    } else {
        -0.5
    }
}

fn build_sector(params: &ModelParams, ups: u32) -> Sector {
    let n = params.n;
    let basis: Vec<u32> = (0u32..1 << n).filter(|s| s.count_ones() == ups).collect();
    let index: HashMap<u32, usize> = basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let dim = basis.len();
    let coupling = params.v / n as f64;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut s2 = DMatrix::<f64>::zeros(dim, dim);

    for (col, &state) in basis.iter().enumerate() {
        let mut diag = 0.0;
        let mut s2_diag = 0.75 * n as f64;
        for i in 0..n {
            diag += params.b * spin(state, i);
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let zz = spin(state, i) * spin(state, j);
                diag -= coupling * (1.0 - params.gamma) * zz;
                s2_diag += zz;
                // s^x_i s^x_j + s^y_i s^y_j = (s+_i s-_j + s-_i s+_j)/2
                if (state >> i & 1) != (state >> j & 1) {
                    let flipped = state ^ (1 << i) ^ (1 << j);
                    let row = index[&flipped];
                    h[(row, col)] -= coupling * 0.5;
                    s2[(row, col)] += 0.5;
                }
            }
        }
        h[(col, col)] += diag;
        s2[(col, col)] += s2_diag;
    }
    Sector {
        basis,
        hamiltonian: h,
        s2_op: s2,
    }
}

/// Thermal moments and the exact two-site density for n <= 14.
pub fn brute_force(params: &ModelParams) -> Result<BruteForceResult> {
    params.validate()?;
    if params.n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            n: params.n,
            cap: BRUTE_FORCE_MAX_N,
        });
    }
    if params.t <= 0.0 {
        return Err(Error::Domain("brute-force oracle needs T > 0".into()));
    }
    let n = params.n;
    let beta = params.beta();

    let mut sectors = Vec::with_capacity(n + 1);
    for ups in 0..=n as u32 {
        let sector = build_sector(params, ups);
        let eig = SymmetricEigen::new(sector.hamiltonian.clone());
        let pairs: Vec<Eigenpair> = (0..sector.basis.len())
            .map(|k| Eigenpair {
                energy: eig.eigenvalues[k],
                vector: eig.eigenvectors.column(k).iter().copied().collect(),
            })
            .collect();
        sectors.push((ups, sector, pairs));
    }

    let e_min = sectors
        .iter()
        .flat_map(|(_, _, p)| p.iter().map(|e| e.energy))
        .fold(f64::INFINITY, f64::min);

    let (mut z, mut sz, mut sz2, mut s2) = (0.0, 0.0, 0.0, 0.0);
    let mut rho2 = Matrix4::<f64>::zeros();
    for (ups, sector, pairs) in &sectors {
        let m = *ups as f64 - n as f64 / 2.0;
        for pair in pairs {
            let w = (-beta * (pair.energy - e_min)).exp();
            z += w;
            sz += w * m;
            sz2 += w * m * m;
            let psi = nalgebra::DVector::from_column_slice(&pair.vector);
            s2 += w * psi.dot(&(&sector.s2_op * &psi));
            accumulate_pair_density(&mut rho2, &sector.basis, &pair.vector, w);
        }
    }

    Ok(BruteForceResult {
        moments: CollectiveMoments {
            sz: sz / z,
            sz2: sz2 / z,
            s2: s2 / z,
            log_z: -beta * e_min + z.ln(),
        },
        rho2: rho2 / z,
    })
}

fn accumulate_pair_density(rho2: &mut Matrix4<f64>, basis: &[u32], psi: &[f64], w: f64) {
    let mut by_rest: HashMap<u32, [f64; 4]> = HashMap::new();
    for (&state, &amp) in basis.iter().zip(psi) {
        let up0 = state & 1;
        let up1 = state >> 1 & 1;
        let a = (2 * (1 - up0) + (1 - up1)) as usize;
        by_rest.entry(state >> 2).or_insert([0.0; 4])[a] += amp;
    }
    for amps in by_rest.values() {
        for a in 0..4 {
            for c in 0..4 {
                rho2[(a, c)] += w * amps[a] * amps[c];
            }
        }
    }
}

/// Wootters concurrence of a real symmetric two-qubit density:
/// max(0, l1 - l2 - l3 - l4) with l the square roots of the eigenvalues of
/// sqrt(rho) rho~ sqrt(rho), rho~ = (sy x sy) rho (sy x sy).
pub fn wootters_concurrence(rho: &Matrix4<f64>) -> f64 {
    let eig = SymmetricEigen::new(*rho);
    let sqrt_vals = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    let sqrt_rho =
        eig.eigenvectors * Matrix4::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    #[rustfmt::skip]
    let flip = Matrix4::new(
        0.0, 0.0, 0.0, -1.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
    );
    let tilde = flip * rho * flip;
    let m = sqrt_rho * tilde * sqrt_rho;
    let m = 0.5 * (m + m.transpose());
    let mut l: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    l.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Concurrence of an X-shaped density (only the diagonal and the
/// rho_{14}, rho_{23} coherences nonzero):
/// 2 max(0, |rho_23| - sqrt(rho_11 rho_44), |rho_14| - sqrt(rho_22 rho_33)).
/// `None` if other off-diagonal elements exceed 1e-13 of the trace.
pub fn x_state_concurrence(rho: &Matrix4<f64>) -> Option<f64> {
    let tol = 1e-13 * rho.trace().abs().max(f64::MIN_POSITIVE);
    for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        if rho[(i, j)].abs() > tol || rho[(j, i)].abs() > tol {
            return None;
        }
    }
    let a = rho[(1, 2)].abs() - (rho[(0, 0)] * rho[(3, 3)]).max(0.0).sqrt();
    let b = rho[(0, 3)].abs() - (rho[(1, 1)] * rho[(2, 2)]).max(0.0).sqrt();
    Some((2.0 * a.max(b)).max(0.0))
}

/// X-state closed form when it applies (it always does for this model,
/// which conserves S_z), general Wootters otherwise. The closed form avoids
/// the square roots of near-zero eigenvalues that limit the general route to
/// about 1e-8.
pub fn pair_density_concurrence(rho: &Matrix4<f64>) -> f64 {
    x_state_concurrence(rho).unwrap_or_else(|| wootters_concurrence(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{concurrence_value, PairState};

    #[test]
    fn two_spin_spectrum() {
        // n = 2, gamma = 1, b = 0: |S=1,M=0> at -1/2, singlet at +1/2,
        // |S=1,M=+-1> at 0.
        let p = ModelParams::new(2, 1.0, 1.0, 0.0, 1.0).unwrap();
        let r = brute_force(&p).unwrap();
        let expect = (2.0 + 0.5f64.exp() + (-0.5f64).exp()).ln();
        assert!((r.moments.log_z - expect).abs() < 1e-14, "{} {}", r.moments.log_z, expect);
    }

    #[test]
    fn refuses_large_n() {
        let p = ModelParams::new(15, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(matches!(brute_force(&p), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn pair_density_structure_at_zero_field() {
        let p = ModelParams::new(6, 1.0, 0.4, 0.0, 0.3).unwrap();
        let rho = brute_force(&p).unwrap().rho2;
        let zeros = [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)];
        for (a, c) in zeros {
            assert!(rho[(a, c)].abs() < 1e-12 && rho[(c, a)].abs() < 1e-12);
        }
        assert!((rho[(1, 1)] - rho[(2, 2)]).abs() < 1e-12);
        assert!((rho[(0, 0)] - rho[(3, 3)]).abs() < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wootters_matches_closed_form() {
        let p = ModelParams::new(2, 1.0, 1.0, 0.0, 0.1).unwrap();
        let r = brute_force(&p).unwrap();
        let pair = PairState::from_moments(&r.moments, 2).unwrap();
        let c_formula = concurrence_value(&pair);
        let c_wootters = wootters_concurrence(&r.rho2);
        assert!(c_formula > 0.9);
        assert!((c_formula - c_wootters).abs() < 1e-10);
    }

    #[test]
    fn x_state_form_agrees_with_wootters() {
        for (b, t) in [(0.0, 0.05), (0.4, 0.1), (0.9, 0.02), (1.3, 0.3)] {
            let p = ModelParams::new(8, 1.0, 0.8, b, t).unwrap();
            let r = brute_force(&p).unwrap();
            let x = x_state_concurrence(&r.rho2).expect("S_z conserved");
            assert!((x - wootters_concurrence(&r.rho2)).abs() < 1e-7);
        }
        let mut rho = Matrix4::identity() * 0.25;
        rho[(0, 1)] = 0.1;
        rho[(1, 0)] = 0.1;
        assert!(x_state_concurrence(&rho).is_none());
    }

    #[test]
    fn wootters_on_bell_and_product() {
        let mut bell = Matrix4::zeros();
        bell[(1, 1)] = 0.5;
        bell[(2, 2)] = 0.5;
        bell[(1, 2)] = 0.5;
        bell[(2, 1)] = 0.5;
        assert!((wootters_concurrence(&bell) - 1.0).abs() < 1e-7);
        let mixed = Matrix4::identity() * 0.25;
        assert!(wootters_concurrence(&mixed) < 1e-12);
    }
}
