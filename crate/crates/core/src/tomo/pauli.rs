//! Pauli-basis transforms for product-projector tomography.
//!
//! An outcome projector of a local Pauli setting factorizes as
//! `Pi = (x)_q (1 + (-1)^{o_q} sigma_{a_q}) / 2`. Expanding the product gives a
//! Walsh-Hadamard transform between the 2^N outcome probabilities of a
//! setting and the 2^N Pauli expectations obtained by switching each axis on
//! or off. Both the Born probabilities and the `R` operator of the MLE
//! iteration therefore reduce to one 4^N Pauli transform plus a size-2^N
//! Walsh-Hadamard transform per setting, without materializing projectors.

use nalgebra::DMatrix;

use super::Axis;
use crate::hilbert::{C64, I, ZERO};

/// Pauli digit of each qubit in a Pauli-string index (base 4, qubit 1 least
/// significant): identity 0, X 1, Y 2, Z 3.
fn pauli_digit(axis: Axis) -> usize {
    match axis {
        Axis::X => 1,
        Axis::Y => 2,
        Axis::Z => 3,
    }
}

/// Places bit `q` of `x` at bit `2q`.
fn spread_bits(x: usize) -> usize {
    let mut out = 0;
    let mut q = 0;
    let mut v = x;
    while v != 0 {
        out |= (v & 1) << (2 * q);
        v >>= 1;
        q += 1;
    }
    out
}

fn interleave_table(n: usize) -> Vec<usize> {
    (0..1usize << n).map(spread_bits).collect()
}

/// `Tr(rho sigma_P)` for every Pauli string `P` of an `n`-qubit matrix.
pub(crate) fn pauli_expectations(rho: &DMatrix<C64>, n: usize) -> Vec<f64> {
    let d = 1usize << n;
    let spread = interleave_table(n);
    let mut t = vec![ZERO; d * d];
    for c in 0..d {
        for r in 0..d {
            t[2 * spread[r] + spread[c]] = rho[(r, c)];
        }
    }
    for q in 0..n {
        let s = 1usize << (2 * q);
        for base in 0..d * d {
            if !(base / s).is_multiple_of(4) {
                continue;
            }
            let v0 = t[base];
            let v1 = t[base + s];
            let v2 = t[base + 2 * s];
            let v3 = t[base + 3 * s];
            t[base] = v0 + v3;
            t[base + s] = v1 + v2;
            t[base + 2 * s] = I * (v1 - v2);
            t[base + 3 * s] = v0 - v3;
        }
    }
    t.into_iter().map(|z| z.re).collect()
}

/// `(1/2^n) sum_P c_P sigma_P`.
pub(crate) fn from_pauli_coefficients(coeffs: &[f64], n: usize) -> DMatrix<C64> {
    let d = 1usize << n;
    let mut t: Vec<C64> = coeffs.iter().map(|&c| C64::new(c, 0.0)).collect();
    for q in 0..n {
        let s = 1usize << (2 * q);
        for base in 0..d * d {
            if !(base / s).is_multiple_of(4) {
                continue;
            }
            let ci = t[base];
            let cx = t[base + s];
            let cy = t[base + 2 * s];
            let cz = t[base + 3 * s];
            t[base] = (ci + cz) * 0.5;
            t[base + s] = (cx - I * cy) * 0.5;
            t[base + 2 * s] = (cx + I * cy) * 0.5;
            t[base + 3 * s] = (ci - cz) * 0.5;
        }
    }
    let spread = interleave_table(n);
    DMatrix::from_fn(d, d, |r, c| t[2 * spread[r] + spread[c]])
}

/// In-place unnormalized Walsh-Hadamard transform:
/// `v[T] <- sum_o (-1)^{popcount(o & T)} v[o]`.
pub(crate) fn walsh_hadamard(v: &mut [f64]) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Pauli-string index of every subset `T` of the setting's axes.
pub(crate) fn subset_indices(axes: &[Axis]) -> Vec<usize> {
    let n = axes.len();
    let mut idx = vec![0usize; 1 << n];
    for t in 1..1usize << n {
        let low = t.trailing_zeros() as usize;
        idx[t] = idx[t & (t - 1)] + pauli_digit(axes[low]) * (1 << (2 * low));
    }
    idx
}

/// Born probabilities of one setting from a Pauli expectation table.
pub(crate) fn setting_probabilities(table: &[f64], subsets: &[usize], out: &mut [f64]) {
    for (o, &p) in out.iter_mut().zip(subsets) {
        *o = table[p];
    }
    walsh_hadamard(out);
    let scale = 1.0 / out.len() as f64;
    out.iter_mut().for_each(|p| *p *= scale);
}

/// Adds `sum_o w_o Pi_o` (as Pauli coefficients scaled by 2^n) to `coeffs`.
/// `weights` is consumed as scratch space.
pub(crate) fn accumulate_projectors(coeffs: &mut [f64], subsets: &[usize], weights: &mut [f64]) {
    walsh_hadamard(weights);
    for (&p, &w) in subsets.iter().zip(weights.iter()) {
        coeffs[p] += w;
    }
}
