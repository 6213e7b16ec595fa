use rayon::prelude::*;

use super::{
    advanced_witness, apply_local_phases, concurrence, optimize_local_phases, projected_pair_state,
    reduced_pair_state, simple_witness_value, WitnessSpec, PUBLISHED_WITNESS_ROWS,
};
use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PairValue {
    pub k: usize,
    pub l: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrenceSummary {
    /// Pairs `k < l` in lexicographic order.
    pub pairs: Vec<PairValue>,
    pub min: f64,
    pub mean: f64,
}

impl ConcurrenceSummary {
    fn new(pairs: Vec<PairValue>) -> Self {
        let min = pairs.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
        let mean = pairs.iter().map(|p| p.value).sum::<f64>() / pairs.len() as f64;
        Self {
            pairs,
            min: min.min(mean),
            mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    pub n: usize,
    /// Fidelity with `|W_n>` after local phase optimization.
    pub fidelity: f64,
    pub phases: Vec<f64>,
    pub simple_witness: f64,
    /// `None` when no witness applies (two qubits).
    pub advanced_witness: Option<f64>,
    pub witness_spec: Option<WitnessSpec>,
    /// Pair concurrences after conditioning the rest on `|D>`; a pair whose
    /// conditioning outcome never occurs counts as zero.
    pub projected: ConcurrenceSummary,
    pub reduced: ConcurrenceSummary,
    pub distillable: bool,
}

/// Report using the published alpha and beta with gamma recomputed.
pub fn entanglement_report(rho: &DensityMatrix) -> Result<EntanglementReport> {
    let n = rho.n_qubits().unwrap_or(0);
    let spec = if PUBLISHED_WITNESS_ROWS.iter().any(|r| r.0 == n) {
        Some(WitnessSpec::published_recomputed(n)?)
    } else {
        None
    };
    entanglement_report_with(rho, spec.as_ref())
}

pub fn entanglement_report_with(
    rho: &DensityMatrix,
    spec: Option<&WitnessSpec>,
) -> Result<EntanglementReport> {
    let n = match rho.n_qubits() {
        Some(n) if (2..=8).contains(&n) => n,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "report needs 2..=8 qubits, got dims {:?}",
                rho.dims()
            )))
        }
    };
    let (phases, fidelity) = optimize_local_phases(rho)?;
    let adjusted = apply_local_phases(rho, &phases)?;
    let simple_witness = simple_witness_value(&adjusted)?;
    let advanced = match spec {
        Some(s) => {
            if s.n != n {
                return Err(Error::DimensionMismatch(format!(
                    "witness for {} qubits applied to {n}",
                    s.n
                )));
            }
            Some(advanced_witness(s)?.expectation(&adjusted)?)
        }
        None => None,
    };

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|k| (k + 1..n).map(move |l| (k, l)))
        .collect();
    let values: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(k, l)| -> Result<(f64, f64)> {
            let projected = match projected_pair_state(rho, k, l) {
                Ok((pair, _)) => concurrence(&pair)?,
                Err(Error::ZeroProbability(_)) => 0.0,
                Err(e) => return Err(e),
            };
            let reduced = concurrence(&reduced_pair_state(rho, k, l)?)?;
            Ok((projected, reduced))
        })
        .collect::<Result<_>>()?;
    let collect = |pick: fn(&(f64, f64)) -> f64| {
        ConcurrenceSummary::new(
            pairs
                .iter()
                .zip(&values)
                .map(|(&(k, l), v)| PairValue {
                    k,
                    l,
                    value: pick(v),
                })
                .collect(),
        )
    };
    let projected = collect(|v| v.0);
    let reduced = collect(|v| v.1);
    let distillable = projected.pairs.iter().all(|p| p.value > 0.0);

    Ok(EntanglementReport {
        n,
        fidelity,
        phases,
        simple_witness,
        advanced_witness: advanced,
        witness_spec: spec.cloned(),
        projected,
        reduced,
        distillable,
    })
}
