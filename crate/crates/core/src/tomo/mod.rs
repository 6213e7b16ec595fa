//! Full local-Pauli tomography: measurement settings, shot statistics,
//! iterative maximum-likelihood reconstruction and Monte Carlo error bars.

mod mle;
mod montecarlo;
pub(crate) mod pauli;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{conjugate_local, DensityMatrix, C64};
use crate::ionsim::carrier_matrix;
use crate::seed::{derive_seed, stream};

pub use mle::{
    log_likelihood, mle_reconstruct, rrhor_step, MleConfig, MleResult, PROBABILITY_FLOOR,
};
pub use montecarlo::{monte_carlo_resample, Analysis, QuantityStats};

/// Measurement axis of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Z,
    X,
    Y,
}

impl Axis {
    const ORDER: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];

    fn rank(self) -> usize {
        match self {
            Axis::Z => 0,
            Axis::X => 1,
            Axis::Y => 2,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::Z => 'Z',
            Axis::X => 'X',
            Axis::Y => 'Y',
        }
    }
}

/// Per-qubit axes; element `k` belongs to qubit `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisSetting(Vec<Axis>);

impl BasisSetting {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("empty basis setting".into()));
        }
        Ok(Self(axes))
    }

    pub fn axes(&self) -> &[Axis] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    /// Position in [`enumerate_bases`] order.
    pub fn index(&self) -> usize {
        self.0.iter().rev().fold(0, |acc, a| acc * 3 + a.rank())
    }
}

impl fmt::Display for BasisSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for BasisSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|c| match c {
                'Z' => Ok(Axis::Z),
                'X' => Ok(Axis::X),
                'Y' => Ok(Axis::Y),
                other => Err(Error::InvalidArgument(format!(
                    "invalid axis label {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }
}

/// All 3^n settings, qubit 1 varying fastest, `Z < X < Y`.
pub fn enumerate_bases(n: usize) -> Result<Vec<BasisSetting>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let count = 3usize.pow(n as u32);
    Ok((0..count)
        .map(|mut i| {
            let axes = (0..n)
                .map(|_| {
                    let a = Axis::ORDER[i % 3];
                    i /= 3;
                    a
                })
                .collect();
            BasisSetting(axes)
        })
        .collect())
}

/// Readout rotation for one axis: after applying it, outcome `|D>` of the
/// z-measurement corresponds to the +1 eigenvalue of the requested Pauli.
pub fn axis_rotation(axis: Axis) -> DMatrix<C64> {
    use std::f64::consts::FRAC_PI_2;
    match axis {
        Axis::Z => DMatrix::identity(2, 2),
        Axis::X => carrier_matrix(FRAC_PI_2, -FRAC_PI_2),
        Axis::Y => carrier_matrix(FRAC_PI_2, 0.0),
    }
}

pub fn setting_rotation(setting: &BasisSetting) -> Vec<DMatrix<C64>> {
    setting.axes().iter().map(|&a| axis_rotation(a)).collect()
}

fn check_qubits(rho: &DensityMatrix, n: usize) -> Result<()> {
    match rho.n_qubits() {
        Some(m) if m == n => Ok(()),
        _ => Err(Error::DimensionMismatch(format!(
            "setting for {n} qubits applied to state with dims {:?}",
            rho.dims()
        ))),
    }
}

/// Outcome probabilities of one setting, indexed with qubit 1 as the least
/// significant bit and `|S>` as bit value 1. Computed by rotating the state.
pub fn born_probabilities(rho: &DensityMatrix, setting: &BasisSetting) -> Result<Vec<f64>> {
    check_qubits(rho, setting.n_qubits())?;
    let mut m = rho.entries().clone();
    for (k, u) in setting_rotation(setting).iter().enumerate() {
        conjugate_local(&mut m, rho.dims(), k, u);
    }
    Ok((0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect())
}

/// Counts of one setting. Counts are stored as reals so that the
/// infinite-statistics variant from [`expected_dataset`] fits the same record.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting: BasisSetting,
    pub counts: Vec<f64>,
}

impl CountRecord {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

fn multinomial<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<f64>> {
    let mut counts = vec![0.0; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining as f64;
            break;
        }
        let p = p.max(0.0);
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(rng);
        counts[i] = k as f64;
        remaining -= k;
        mass -= p;
    }
    Ok(counts)
}

/// Multinomial draw of `shots` outcomes for one setting.
pub fn sample_counts(
    rho: &DensityMatrix,
    setting: &BasisSetting,
    shots: u64,
    seed: u64,
) -> Result<CountRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let probs = born_probabilities(rho, setting)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(CountRecord {
        setting: setting.clone(),
        counts: multinomial(&probs, shots, &mut rng)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    n: usize,
    shots_per_basis: u64,
    records: Vec<CountRecord>,
}

impl TomographyDataset {
    /// Requires one record for each of the 3^n settings, every record summing
    /// to `shots_per_basis`.
    pub fn new(n: usize, shots_per_basis: u64, records: Vec<CountRecord>) -> Result<Self> {
        let expected = 3usize.pow(n as u32);
        if records.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} records, expected {expected}",
                records.len()
            )));
        }
        let mut seen = vec![false; expected];
        for r in &records {
            if r.setting.n_qubits() != n || r.counts.len() != 1 << n {
                return Err(Error::InvalidArgument(format!(
                    "record {} does not match n = {n}",
                    r.setting
                )));
            }
            let idx = r.setting.index();
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate setting {}",
                    r.setting
                )));
            }
            if r.counts.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "negative count in setting {}",
                    r.setting
                )));
            }
            let total = r.total();
            if (total - shots_per_basis as f64).abs() > 1e-9 * (shots_per_basis as f64).max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "setting {} has {total} shots, expected {shots_per_basis}",
                    r.setting
                )));
            }
        }
        Ok(Self {
            n,
            shots_per_basis,
            records,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shots_per_basis(&self) -> u64 {
        self.shots_per_basis
    }

    pub fn records(&self) -> &[CountRecord] {
        &self.records
    }

    pub fn total_shots(&self) -> f64 {
        self.records.iter().map(CountRecord::total).sum()
    }
}

/// Born probabilities of every setting, in [`enumerate_bases`] order, via the
/// Pauli-transform route.
pub(crate) fn all_probabilities(rho: &DensityMatrix, settings: &[BasisSetting]) -> Vec<Vec<f64>> {
    let n = settings[0].n_qubits();
    let table = pauli::pauli_expectations(rho.entries(), n);
    settings
        .par_iter()
        .map(|s| {
            let subsets = pauli::subset_indices(s.axes());
            let mut p = vec![0.0; 1 << n];
            pauli::setting_probabilities(&table, &subsets, &mut p);
            p.iter_mut().for_each(|x| *x = x.max(0.0));
            p
        })
        .collect()
}

/// Samples a complete dataset; setting `i` uses the seed derived from
/// `(seed, i)`.
pub fn sample_dataset(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<TomographyDataset> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let n = rho
        .n_qubits()
        .ok_or_else(|| Error::DimensionMismatch("tomography needs a qubit register".into()))?;
    let settings = enumerate_bases(n)?;
    let probs = all_probabilities(rho, &settings);
    let records = settings
        .into_par_iter()
        .zip(probs)
        .map(|(setting, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                stream::TOMOGRAPHY,
                setting.index() as u64,
            ));
            Ok(CountRecord {
                counts: multinomial(&p, shots, &mut rng)?,
                setting,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TomographyDataset::new(n, shots, records)
}

/// Dataset with counts equal to `shots` times the exact probabilities.
pub fn expected_dataset(rho: &DensityMatrix, shots: u64) -> Result<TomographyDataset> {
    let n = rho
        .n_qubits()
        .ok_or_else(|| Error::DimensionMismatch("tomography needs a qubit register".into()))?;
    let settings = enumerate_bases(n)?;
    let probs = all_probabilities(rho, &settings);
    let records = settings
        .into_iter()
        .zip(probs)
        .map(|(setting, p)| {
            let total: f64 = p.iter().sum();
            CountRecord {
                setting,
                counts: p.iter().map(|x| shots as f64 * x / total).collect(),
            }
        })
        .collect();
    TomographyDataset::new(n, shots, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{level, qubit_dims, PureState};
    use crate::ionsim::w_state;
    use approx::assert_abs_diff_eq;

    fn plus_x() -> DensityMatrix {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState::new(vec![h, h], vec![2]).unwrap().to_density()
    }

    #[test]
    fn base_enumeration() {
        let one: Vec<String> = enumerate_bases(1)
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(one, ["Z", "X", "Y"]);
        let two = enumerate_bases(2).unwrap();
        assert_eq!(two.len(), 9);
        assert_eq!(two[1].to_string(), "XZ");
        assert_eq!(two[3].to_string(), "ZX");
        for (i, s) in two.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        assert_eq!(enumerate_bases(8).unwrap().len() * 100, 656_100);
        assert!(enumerate_bases(0).is_err());
    }

    #[test]
    fn rotations() {
        assert_eq!(axis_rotation(Axis::Z), DMatrix::identity(2, 2));
        let x: BasisSetting = "X".parse().unwrap();
        let p = born_probabilities(&plus_x(), &x).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-15);
        let y: BasisSetting = "Y".parse().unwrap();
        let p = born_probabilities(&plus_x(), &y).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        let plus_y = PureState::normalized(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)], vec![2])
            .unwrap()
            .to_density();
        assert_abs_diff_eq!(
            born_probabilities(&plus_y, &y).unwrap()[0],
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn born_examples() {
        let mixed = DensityMatrix::maximally_mixed(qubit_dims(3));
        for s in enumerate_bases(3).unwrap() {
            for p in born_probabilities(&mixed, &s).unwrap() {
                assert_abs_diff_eq!(p, 0.125, epsilon = 1e-15);
            }
        }
        let w2 = w_state(2).unwrap().to_density();
        let p = born_probabilities(&w2, &"ZZ".parse().unwrap()).unwrap();
        for (a, b) in p.iter().zip([0.0, 0.5, 0.5, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let d = PureState::basis(vec![2], &[level::D]).unwrap().to_density();
        assert_eq!(
            born_probabilities(&d, &"Z".parse().unwrap()).unwrap(),
            [1.0, 0.0]
        );
        assert!(born_probabilities(&d, &"ZZ".parse().unwrap()).is_err());
    }

    #[test]
    fn fast_and_rotation_routes_agree() {
        let rho = w_state(3)
            .unwrap()
            .to_density()
            .mix(&DensityMatrix::maximally_mixed(qubit_dims(3)), 0.7)
            .unwrap();
        let rho = rho
            .apply_local_unitary(1, &carrier_matrix(0.4, 1.1))
            .unwrap();
        let settings = enumerate_bases(3).unwrap();
        let fast = all_probabilities(&rho, &settings);
        for (s, pf) in settings.iter().zip(&fast) {
            let pr = born_probabilities(&rho, s).unwrap();
            for (a, b) in pf.iter().zip(&pr) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn sampling_examples() {
        let d = PureState::basis(vec![2], &[level::D]).unwrap().to_density();
        let z: BasisSetting = "Z".parse().unwrap();
        assert_eq!(sample_counts(&d, &z, 100, 1).unwrap().counts, [100.0, 0.0]);
        let w = w_state(2).unwrap().to_density();
        let xx: BasisSetting = "XY".parse().unwrap();
        assert_eq!(
            sample_counts(&w, &xx, 100, 42).unwrap(),
            sample_counts(&w, &xx, 100, 42).unwrap()
        );
        assert!(sample_counts(&w, &xx, 0, 42).is_err());
    }

    #[test]
    fn sampling_converges_to_born_rule() {
        let rho = w_state(2).unwrap().to_density();
        let s: BasisSetting = "XY".parse().unwrap();
        let shots = 1_000_000u64;
        let rec = sample_counts(&rho, &s, shots, 5).unwrap();
        let probs = born_probabilities(&rho, &s).unwrap();
        for (c, p) in rec.counts.iter().zip(&probs) {
            let sigma = (shots as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((c - shots as f64 * p).abs() <= 4.0 * sigma, "{c} vs {p}");
        }
    }

    #[test]
    fn expected_dataset_examples() {
        let w = w_state(2).unwrap().to_density();
        let ds = expected_dataset(&w, 100).unwrap();
        let zz = &ds.records()[0];
        assert_eq!(zz.setting.to_string(), "ZZ");
        for (a, b) in zz.counts.iter().zip([0.0, 50.0, 50.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let dd = PureState::basis(qubit_dims(3), &[0, 0, 0])
            .unwrap()
            .to_density();
        let ds = expected_dataset(&dd, 10).unwrap();
        assert_abs_diff_eq!(ds.records()[0].counts[0], 10.0, epsilon = 1e-12);
    }

    #[test]
    fn dataset_validation() {
        let w = w_state(2).unwrap().to_density();
        let ds = sample_dataset(&w, 10, 3).unwrap();
        let mut recs = ds.records().to_vec();
        recs.pop();
        assert!(TomographyDataset::new(2, 10, recs.clone()).is_err());
        recs.push(ds.records()[0].clone());
        assert!(TomographyDataset::new(2, 10, recs).is_err());
        assert!(TomographyDataset::new(2, 11, ds.records().to_vec()).is_err());
    }
}
