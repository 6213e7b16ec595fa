//! Iterative maximum-likelihood reconstruction (the R rho R iteration).

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{pauli, TomographyDataset};
use crate::error::{Error, Result};
use crate::hilbert::{qubit_dims, DensityMatrix, C64};

/// Lower bound on outcome probabilities inside `R` and the log-likelihood.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Settings per parallel work unit; partial sums are combined pairwise in
/// chunk order so results are independent of the thread count.
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct MleConfig {
    pub max_iterations: usize,
    /// Stop once an accepted step improves the log-likelihood by less than this.
    pub loglik_tolerance: f64,
    /// Mixing weight `d` of `R` in `(1 - d) 1 + d R`.
    pub dilution: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            loglik_tolerance: 1e-10,
            dilution: 1.0,
        }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be > 0".into()));
        }
        if !(self.loglik_tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "loglik_tolerance must be > 0".into(),
            ));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dilution {} outside (0, 1]",
                self.dilution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Accepted iterations.
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood of the start point and after every accepted step.
    pub history: Vec<f64>,
    /// How many times a step lowered the likelihood and the dilution was halved.
    pub dilution_fallbacks: usize,
    pub converged: bool,
}

/// Per-dataset constants reused across iterations.
struct Prepared<'a> {
    n: usize,
    subsets: Vec<Vec<usize>>,
    data: &'a TomographyDataset,
    total: f64,
}

impl<'a> Prepared<'a> {
    fn new(data: &'a TomographyDataset) -> Result<Self> {
        let total = data.total_shots();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("dataset has no counts".into()));
        }
        Ok(Self {
            n: data.n(),
            subsets: data
                .records()
                .iter()
                .map(|r| pauli::subset_indices(r.setting.axes()))
                .collect(),
            data,
            total,
        })
    }

    /// Log-likelihood of `rho` and, when `with_r`, the operator `R(rho)` as
    /// Pauli coefficients.
    fn evaluate(&self, rho: &DMatrix<C64>, with_r: bool) -> (f64, Option<DMatrix<C64>>) {
        let table = pauli::pauli_expectations(rho, self.n);
        let d = 1usize << self.n;
        let coeff_len = if with_r { d * d } else { 0 };
        let records = self.data.records();
        let partials: Vec<(f64, Vec<f64>)> = (0..records.len().div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut ll = 0.0;
                let mut coeffs = vec![0.0; coeff_len];
                let mut p = vec![0.0; d];
                for i in c * CHUNK..((c + 1) * CHUNK).min(records.len()) {
                    let subsets = &self.subsets[i];
                    pauli::setting_probabilities(&table, subsets, &mut p);
                    let counts = &records[i].counts;
                    for (pj, &nj) in p.iter_mut().zip(counts) {
                        let floored = pj.max(PROBABILITY_FLOOR);
                        if nj > 0.0 {
                            ll += nj * floored.ln();
                        }
                        *pj = nj / self.total / floored;
                    }
                    if with_r {
                        pauli::accumulate_projectors(&mut coeffs, subsets, &mut p);
                    }
                }
                (ll, coeffs)
            })
            .collect();
        let ll = pairwise(partials.iter().map(|(l, _)| *l).collect(), |a, b| a + b);
        let r = with_r.then(|| {
            let sum = pairwise(
                partials.into_iter().map(|(_, c)| c).collect(),
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            );
            pauli::from_pauli_coefficients(&sum, self.n)
        });
        (ll, r)
    }
}

fn pairwise<T>(mut items: Vec<T>, add: impl Fn(T, T) -> T) -> T {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => add(a, b),
                None => a,
            });
        }
        items = next;
    }
    items.pop().expect("non-empty")
}

fn check_state(rho: &DensityMatrix, data: &TomographyDataset) -> Result<()> {
    if rho.dims() != qubit_dims(data.n()).as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} vs {}-qubit dataset",
            rho.dims(),
            data.n()
        )));
    }
    Ok(())
}

/// `sum_j n_j ln max(Tr(rho Pi_j), floor)`.
pub fn log_likelihood(rho: &DensityMatrix, data: &TomographyDataset) -> Result<f64> {
    check_state(rho, data)?;
    Ok(Prepared::new(data)?.evaluate(rho.entries(), false).0)
}

fn diluted_step(rho: &DMatrix<C64>, r: &DMatrix<C64>, dilution: f64) -> DMatrix<C64> {
    let d = rho.nrows();
    let a = DMatrix::<C64>::identity(d, d) * C64::new(1.0 - dilution, 0.0)
        + r * C64::new(dilution, 0.0);
    let mut next = &a * rho * &a;
    let adj = next.adjoint();
    next = (next + adj) * C64::new(0.5, 0.0);
    let tr = next.trace().re;
    next / C64::new(tr, 0.0)
}

/// One `rho -> N[A rho A]` update with `A = (1 - d) 1 + d R(rho)`.
pub fn rrhor_step(
    rho: &DensityMatrix,
    data: &TomographyDataset,
    dilution: f64,
) -> Result<DensityMatrix> {
    check_state(rho, data)?;
    let prep = Prepared::new(data)?;
    let (_, r) = prep.evaluate(rho.entries(), true);
    Ok(DensityMatrix::from_raw(
        diluted_step(rho.entries(), &r.expect("requested"), dilution),
        rho.dims().to_vec(),
    ))
}

/// Maximum-likelihood density matrix for a complete Pauli dataset, starting
/// from the maximally mixed state.
///
/// A step that lowers the log-likelihood beyond round-off is rejected and the
/// dilution halved, so the accepted sequence in `history` never decreases.
pub fn mle_reconstruct(data: &TomographyDataset, config: &MleConfig) -> Result<MleResult> {
    config.validate()?;
    let prep = Prepared::new(data)?;
    let dims = qubit_dims(data.n());
    let d = 1usize << data.n();
    let mut rho = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
    let (mut ll, r) = prep.evaluate(&rho, true);
    let mut r = r.expect("requested");
    let mut history = vec![ll];
    let mut dilution = config.dilution;
    let mut fallbacks = 0;
    let mut converged = false;
    let mut attempts = 0;

    while history.len() <= config.max_iterations && attempts < 2 * config.max_iterations {
        attempts += 1;
        let candidate = diluted_step(&rho, &r, dilution);
        let (ll_next, r_next) = prep.evaluate(&candidate, true);
        let gain = ll_next - ll;
        // Round-off in a sum over all outcomes scales with |ll|.
        let noise = config.loglik_tolerance.max(1e-12 * ll.abs());
        if gain < -noise {
            fallbacks += 1;
            dilution *= 0.5;
            if dilution < 1e-6 {
                break;
            }
            continue;
        }
        if gain < config.loglik_tolerance {
            if gain >= 0.0 {
                rho = candidate;
                ll = ll_next;
                history.push(ll);
            }
            converged = true;
            break;
        }
        rho = candidate;
        ll = ll_next;
        r = r_next.expect("requested");
        history.push(ll);
    }

    Ok(MleResult {
        rho: DensityMatrix::from_raw_cleaned(rho, dims),
        iterations: history.len() - 1,
        log_likelihood: ll,
        history,
        dilution_fallbacks: fallbacks,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::fidelity_pure;
    use crate::ionsim::w_state;
    use crate::tomo::{enumerate_bases, expected_dataset, sample_dataset, CountRecord};

    #[test]
    fn exact_w3_data_reconstructs_w3() {
        let w = w_state(3).unwrap();
        let ds = expected_dataset(&w.to_density(), 100).unwrap();
        let res = mle_reconstruct(&ds, &MleConfig::default()).unwrap();
        let f = fidelity_pure(&res.rho, &w).unwrap();
        assert!(f >= 0.999, "fidelity {f}");
        res.rho.validate().unwrap();
    }

    #[test]
    fn uniform_counts_give_maximally_mixed() {
        let n = 2;
        let records = enumerate_bases(n)
            .unwrap()
            .into_iter()
            .map(|setting| CountRecord {
                setting,
                counts: vec![25.0; 4],
            })
            .collect();
        let ds = TomographyDataset::new(n, 100, records).unwrap();
        let res = mle_reconstruct(&ds, &MleConfig::default()).unwrap();
        let mixed = DensityMatrix::maximally_mixed(qubit_dims(n));
        let diff = (res.rho.entries() - mixed.entries())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-6);
    }

    #[test]
    fn history_is_monotone_on_sampled_data() {
        let w = w_state(3).unwrap().to_density();
        for seed in 0..5 {
            let ds = sample_dataset(&w, 100, seed).unwrap();
            let res = mle_reconstruct(&ds, &MleConfig::default()).unwrap();
            assert!(res.history.windows(2).all(|p| p[1] >= p[0]));
            res.rho.validate().unwrap();
        }
    }

    #[test]
    fn floor_keeps_loglik_finite() {
        let d = crate::hilbert::PureState::basis(qubit_dims(1), &[0]).unwrap();
        let s = crate::hilbert::PureState::basis(qubit_dims(1), &[1]).unwrap();
        let ds = expected_dataset(&s.to_density(), 10).unwrap();
        let ll = log_likelihood(&d.to_density(), &ds).unwrap();
        assert!(ll.is_finite());
        assert!(ll < -100.0);
    }

    #[test]
    fn config_validation() {
        for dilution in [0.0, 1.5, f64::NAN] {
            let c = MleConfig {
                dilution,
                ..MleConfig::default()
            };
            assert!(c.validate().is_err());
        }
    }
}
