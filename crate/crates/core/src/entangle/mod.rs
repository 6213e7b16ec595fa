//! Entanglement analysis: phase-optimized fidelity, witnesses, concurrences.
//!
//! Qubit indices in this module are zero-based subsystem indices.

mod filter;
mod report;
mod witness;

pub use filter::{local_filter_optimize, FilteredWitness};
pub use report::{
    entanglement_report, entanglement_report_with, ConcurrenceSummary, EntanglementReport,
    PairValue,
};
pub use witness::{
    advanced_witness, build_bs_states, gamma_biseparable, q_operator, random_biseparable_state,
    witness_expectation, GammaResult, WitnessSpec, GAMMA_CONSISTENCY_TOL, PUBLISHED_WITNESS_ROWS,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{
    conjugate_local, eigh, fidelity_pure, level, partial_trace, pauli, project_and_condition,
    psd_factor, qubit_dims, DensityMatrix, HermitianOperator, C64, ONE, ZERO,
};
use crate::ionsim::w_state;

const PHASE_SWEEPS: usize = 1000;

fn qubit_count(rho: &DensityMatrix) -> Result<usize> {
    rho.n_qubits().filter(|&n| n >= 1).ok_or_else(|| {
        Error::DimensionMismatch(format!("expected qubits, got dims {:?}", rho.dims()))
    })
}

/// `diag(1, e^{i phi})`.
pub fn phase_gate(phi: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, phi)])
}

/// `Phi rho Phi^dagger` with `Phi = (x)_k diag(1, e^{i phi_k})`.
pub fn apply_local_phases(rho: &DensityMatrix, phases: &[f64]) -> Result<DensityMatrix> {
    let n = qubit_count(rho)?;
    if phases.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {n} qubits",
            phases.len()
        )));
    }
    let mut m = rho.entries().clone();
    for (k, &phi) in phases.iter().enumerate() {
        conjugate_local(&mut m, rho.dims(), k, &phase_gate(phi));
    }
    DensityMatrix::new(m, rho.dims().to_vec())
}

/// `u^dagger B u / n`.
fn sector_value(b: &DMatrix<C64>, u: &[C64]) -> f64 {
    let n = u.len();
    let mut acc = ZERO;
    for k in 0..n {
        for l in 0..n {
            acc += u[k].conj() * b[(k, l)] * u[l];
        }
    }
    acc.re / n as f64
}

fn unit(z: C64) -> C64 {
    if z.norm() > 1e-300 {
        z / z.norm()
    } else {
        ONE
    }
}

/// Coordinate ascent: `u_k` aligned with `sum_{l != k} B_kl u_l` until stable.
fn coordinate_ascent(b: &DMatrix<C64>, mut u: Vec<C64>) -> Vec<C64> {
    let n = u.len();
    for _ in 0..PHASE_SWEEPS {
        let mut moved = 0.0f64;
        for k in 0..n {
            let field: C64 = (0..n).filter(|&l| l != k).map(|l| b[(k, l)] * u[l]).sum();
            if field.norm() < 1e-300 {
                continue;
            }
            let next = unit(field);
            moved = moved.max((next - u[k]).norm());
            u[k] = next;
        }
        if moved < 1e-14 {
            break;
        }
    }
    u
}

/// Phases `phi_k` of `diag(1, e^{i phi_k})` on each qubit maximizing
/// `<W_n| Phi rho Phi^dagger |W_n>`, with `phi` of qubit 0 fixed to zero,
/// together with that fidelity.
///
/// Only the single-excitation block `B_kl = rho[2^k, 2^l]` enters. The search
/// starts from the phases of the leading eigenvector of `B` and from zero
/// phases, runs coordinate ascent from both and keeps the better result.
pub fn optimize_local_phases(rho: &DensityMatrix) -> Result<(Vec<f64>, f64)> {
    let n = qubit_count(rho)?;
    let b = DMatrix::from_fn(n, n, |k, l| rho.entries()[(1 << k, 1 << l)]);

    let (_, vecs) = eigh(&b);
    let spectral: Vec<C64> = (0..n).map(|k| unit(vecs[(k, 0)])).collect();
    let zero = vec![ONE; n];
    let zero_value = sector_value(&b, &zero);

    let mut best = zero.clone();
    let mut best_value = zero_value;
    for start in [spectral, zero] {
        let u = coordinate_ascent(&b, start);
        let v = sector_value(&b, &u);
        if v > best_value {
            best = u;
            best_value = v;
        }
    }
    // gauge: e^{-i phi_k} = u_k, and phi_0 = 0
    let g = best[0].conj();
    let phases: Vec<f64> = best
        .iter()
        .enumerate()
        .map(|(k, &uk)| if k == 0 { 0.0 } else { -(uk * g).arg() })
        .collect();
    let fidelity = fidelity_pure(&apply_local_phases(rho, &phases)?, &w_state(n)?)?;
    Ok((phases, fidelity))
}

/// `(n - 1)/n - <W_n|rho|W_n>`; negative values certify genuine multipartite
/// entanglement.
pub fn simple_witness_value(rho: &DensityMatrix) -> Result<f64> {
    let n = qubit_count(rho)?;
    let f = fidelity_pure(rho, &w_state(n)?)?;
    Ok((n as f64 - 1.0) / n as f64 - f)
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho2: &DensityMatrix) -> Result<f64> {
    if rho2.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "concurrence needs dims [2, 2], got {:?}",
            rho2.dims()
        )));
    }
    // With rho = V V^dag, the lambdas are the singular values of V^T (Y x Y) V.
    // Round-off in near-zero eigenvalues then enters only at second order.
    let yy = pauli::y().kronecker(&pauli::y());
    let v = psd_factor(rho2.entries());
    let tau = v.transpose() * yy * &v;
    let mut l: Vec<f64> = tau.singular_values().iter().copied().collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

fn check_pair(n: usize, k: usize, l: usize) -> Result<()> {
    if k == l {
        return Err(Error::InvalidArgument(format!(
            "pair ({k}, {l}) repeats a qubit"
        )));
    }
    for q in [k, l] {
        if q >= n {
            return Err(Error::SubsystemOutOfRange { index: q, count: n });
        }
    }
    Ok(())
}

/// Conditions every qubit other than `k`, `l` on `|D>` and reduces to the
/// pair. Returns the pair state and the joint conditioning probability.
pub fn projected_pair_state(
    rho: &DensityMatrix,
    k: usize,
    l: usize,
) -> Result<(DensityMatrix, f64)> {
    let n = qubit_count(rho)?;
    check_pair(n, k, l)?;
    let mut p_d = DMatrix::<C64>::zeros(2, 2);
    p_d[(level::D, level::D)] = ONE;
    let p_d = HermitianOperator::from_raw(p_d, vec![2]);
    let mut state = rho.clone();
    let mut probability = 1.0;
    for q in (0..n).filter(|&q| q != k && q != l) {
        let (next, p) = project_and_condition(&state, q, &p_d)?;
        state = next;
        probability *= p;
    }
    let pair = reduced_pair_state(&state, k, l)?;
    Ok((pair, probability))
}

/// Partial trace onto qubits `k`, `l`; the lower index is the less significant.
pub fn reduced_pair_state(rho: &DensityMatrix, k: usize, l: usize) -> Result<DensityMatrix> {
    let n = qubit_count(rho)?;
    check_pair(n, k, l)?;
    let r = partial_trace(rho, &[k, l])?;
    debug_assert_eq!(r.dims(), qubit_dims(2).as_slice());
    Ok(r)
}
