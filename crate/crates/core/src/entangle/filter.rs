//! Local filtering of a witness: `W -> F W F^dagger` with `F = F_1 (x) ... (x) F_N`.
//!
//! Each `F_q` is invertible, so positivity on biseparable states carries over.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{conjugate_local, DensityMatrix, HermitianOperator, C64, ONE, ZERO};
use crate::optim::NelderMead;

const MAX_SWEEPS: usize = 50;
const SWEEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FilteredWitness {
    /// `F W F^dagger`, rescaled to maximally mixed expectation one.
    pub witness: HermitianOperator,
    pub filters: Vec<DMatrix<C64>>,
    /// Normalized expectation on `rho` before and after filtering.
    pub before: f64,
    pub after: f64,
    pub sweeps: usize,
}

/// `R(theta) diag(e^s, e^t)`.
fn filter_matrix(p: &[f64]) -> DMatrix<C64> {
    let (s, t, theta) = (p[0], p[1], p[2]);
    let (c, sn) = (theta.cos(), theta.sin());
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c * s.exp(), 0.0),
            C64::new(-sn * t.exp(), 0.0),
            C64::new(sn * s.exp(), 0.0),
            C64::new(c * t.exp(), 0.0),
        ],
    )
}

/// `T[p][a][b][q]` with `Tr(W F^dagger X F) = sum conj(F_ap) F_bq T[p][a][b][q]`
/// for `F` acting on qubit `k`.
fn contraction(w: &DMatrix<C64>, x: &DMatrix<C64>, k: usize) -> [C64; 16] {
    let d = w.nrows();
    let bit = 1usize << k;
    let mut t = [ZERO; 16];
    for col in 0..d {
        let q = (col >> k) & 1;
        for row in 0..d {
            let wv = w[(col, row)];
            if wv == ZERO {
                continue;
            }
            let p = (row >> k) & 1;
            for a in 0..2 {
                let ra = (row & !bit) | (a << k);
                for b in 0..2 {
                    let cb = (col & !bit) | (b << k);
                    t[p * 8 + a * 4 + b * 2 + q] += wv * x[(ra, cb)];
                }
            }
        }
    }
    t
}

fn contract(t: &[C64; 16], f: &DMatrix<C64>) -> f64 {
    let mut acc = ZERO;
    for p in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                for q in 0..2 {
                    acc += f[(a, p)].conj() * f[(b, q)] * t[p * 8 + a * 4 + b * 2 + q];
                }
            }
        }
    }
    acc.re
}

/// Normalized expectation `2^n Tr(W F^dagger rho F) / Tr(W F^dagger F)`,
/// infinite when the filtered witness has non-positive trace.
fn ratio(num: f64, den: f64, d: f64) -> f64 {
    if den > 1e-12 {
        d * num / den
    } else {
        f64::INFINITY
    }
}

/// Minimizes the expectation of the renormalized filtered witness on `rho` by
/// alternating Nelder-Mead updates of one qubit filter at a time. A qubit's
/// filter only changes when that lowers the expectation, so `after <= before`.
pub fn local_filter_optimize(
    w: &HermitianOperator,
    rho: &DensityMatrix,
) -> Result<FilteredWitness> {
    if w.dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "witness dims {:?} vs state dims {:?}",
            w.dims(),
            rho.dims()
        )));
    }
    let n = rho.n_qubits().ok_or_else(|| {
        Error::DimensionMismatch(format!("expected qubits, got dims {:?}", rho.dims()))
    })?;
    let dims = rho.dims().to_vec();
    let d = rho.dim() as f64;
    let wm = w.entries();
    let identity = DMatrix::<C64>::identity(rho.dim(), rho.dim());

    let before = ratio(w.expectation(rho)?, w.trace(), d);
    let mut params = vec![[0.0f64; 3]; n];
    let mut filters: Vec<DMatrix<C64>> =
        vec![DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]); n];
    let mut current = before;
    let mut sweeps = 0;

    if before.is_finite() {
        let nm = NelderMead {
            max_iterations: 600,
            ftol: 1e-13,
            xtol: 1e-8,
        };
        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            let start = current;
            for k in 0..n {
                // F_rest^dagger X F_rest for the other qubits' filters
                let mut x_rho = rho.entries().clone();
                let mut x_id = identity.clone();
                for (j, f) in filters.iter().enumerate().filter(|&(j, _)| j != k) {
                    let fd = f.adjoint();
                    conjugate_local(&mut x_rho, &dims, j, &fd);
                    conjugate_local(&mut x_id, &dims, j, &fd);
                }
                let t_rho = contraction(wm, &x_rho, k);
                let t_id = contraction(wm, &x_id, k);
                let objective = |p: &[f64]| {
                    let f = filter_matrix(p);
                    ratio(contract(&t_rho, &f), contract(&t_id, &f), d)
                };
                let m = nm.minimize(objective, &params[k], 0.2);
                if m.value < current {
                    current = m.value;
                    params[k].copy_from_slice(&m.x);
                    filters[k] = filter_matrix(&m.x);
                }
            }
            if start - current < SWEEP_TOL {
                break;
            }
        }
    }

    let mut fw = wm.clone();
    for (k, f) in filters.iter().enumerate() {
        conjugate_local(&mut fw, &dims, k, f);
    }
    let tr = fw.trace().re;
    let witness = if tr > 1e-12 {
        HermitianOperator::from_raw(fw * C64::new(d / tr, 0.0), dims)
    } else {
        w.clone()
    };
    let after = witness.expectation(rho)?;
    Ok(FilteredWitness {
        witness,
        filters,
        before,
        after,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entangle::{advanced_witness, WitnessSpec};
    use crate::hilbert::qubit_dims;
    use crate::ionsim::w_state;
    use approx::assert_abs_diff_eq;

    #[test]
    fn contraction_matches_direct_trace() {
        let n = 3;
        let w = advanced_witness(&WitnessSpec::published_recomputed(n).unwrap()).unwrap();
        let rho = w_state(n)
            .unwrap()
            .to_density()
            .mix(&DensityMatrix::maximally_mixed(qubit_dims(n)), 0.6)
            .unwrap();
        let f = filter_matrix(&[0.3, -0.2, 0.4]);
        for k in 0..n {
            let t = contraction(w.entries(), rho.entries(), k);
            let mut m = w.entries().clone();
            conjugate_local(&mut m, &qubit_dims(n), k, &f);
            let direct = (&m * rho.entries()).trace().re;
            assert_abs_diff_eq!(contract(&t, &f), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn filtering_does_not_increase_expectation() {
        let n = 4;
        let w = advanced_witness(&WitnessSpec::published_recomputed(n).unwrap()).unwrap();
        let rho = w_state(n)
            .unwrap()
            .to_density()
            .mix(&DensityMatrix::maximally_mixed(qubit_dims(n)), 0.7)
            .unwrap();
        let res = local_filter_optimize(&w, &rho).unwrap();
        assert_abs_diff_eq!(res.before, w.expectation(&rho).unwrap(), epsilon = 1e-9);
        assert!(res.after <= res.before + 1e-9);
        assert_abs_diff_eq!(res.witness.trace() / 16.0, 1.0, epsilon = 1e-9);
    }
}
