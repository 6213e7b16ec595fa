//! Trapped-ion W-state preparation on the joint qubits (x) motional-mode space.
//!
//! The joint register has subsystems `0..n` for ions `1..=n` and subsystem `n`
//! for the centre-of-mass Fock mode, so the mode is the most significant digit
//! as in the ket label `|n, x_N ... x_1>`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_local_to_vector, level, partial_trace, qubit_dims, DensityMatrix, PureState, C64, I, ONE,
    ZERO,
};
use crate::seed::{rng_for, stream};

pub const DEFAULT_N_MAX: usize = 2;
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Registers of this size and above are initialized with the fluorescence herald.
pub const HERALD_MIN_IONS: usize = 6;

/// `|W_n>`: equal superposition of all basis states with exactly one ion in `|S>`.
pub fn w_state(n: usize) -> Result<PureState> {
    if !(1..=12).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "W state needs 1 <= n <= 12, got {n}"
        )));
    }
    let a = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut amps = vec![ZERO; 1 << n];
    for q in 0..n {
        amps[1 << q] = a;
    }
    Ok(PureState::from_raw(amps, qubit_dims(n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Carrier,
    BlueSideband,
}

/// One laser pulse. `ion` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseOp {
    pub kind: PulseKind,
    pub ion: usize,
    pub theta: f64,
    pub phase: f64,
}

impl PulseOp {
    pub fn carrier(ion: usize, theta: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::Carrier,
            ion,
            theta,
            phase,
        }
    }

    pub fn blue(ion: usize, theta: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::BlueSideband,
            ion,
            theta,
            phase,
        }
    }
}

/// Pure state of `n` ions and one truncated motional mode.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    state: PureState,
    n_ions: usize,
    n_max: usize,
}

impl JointState {
    /// Basis state `|fock, x_N ... x_1>`; `levels[k]` is the level of ion `k + 1`.
    pub fn basis(levels: &[usize], fock: usize, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidArgument("n_max must be >= 1".into()));
        }
        if fock > n_max {
            return Err(Error::InvalidArgument(format!(
                "Fock level {fock} above truncation {n_max}"
            )));
        }
        let n = levels.len();
        let mut dims = qubit_dims(n);
        dims.push(n_max + 1);
        let mut digits = levels.to_vec();
        digits.push(fock);
        Ok(Self {
            state: PureState::basis(dims, &digits)?,
            n_ions: n,
            n_max,
        })
    }

    /// `|0, S S ... S>`, the optically pumped starting point.
    pub fn ground(n: usize, n_max: usize) -> Result<Self> {
        Self::basis(&vec![level::S; n], 0, n_max)
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Only for norm-preserving propagators.
    fn amps_mut(&mut self) -> &mut [C64] {
        self.state.amplitudes_mut()
    }

    fn index(&self, qubits: usize, fock: usize) -> usize {
        qubits + (fock << self.n_ions)
    }

    /// Population of motional level `fock`.
    pub fn fock_population(&self, fock: usize) -> f64 {
        let amps = self.state.amplitudes();
        (0..1usize << self.n_ions)
            .map(|q| amps[self.index(q, fock)].norm_sqr())
            .sum()
    }

    fn check_ion(&self, ion: usize) -> Result<()> {
        if ion == 0 || ion > self.n_ions {
            return Err(Error::InvalidArgument(format!(
                "ion {ion} outside 1..={}",
                self.n_ions
            )));
        }
        Ok(())
    }

    fn apply_qubit_op(&mut self, ion: usize, u: &DMatrix<C64>) {
        let dims = self.state.dims().to_vec();
        apply_local_to_vector(self.amps_mut(), &dims, ion - 1, u);
    }

    /// Applies `|S,n> <-> |D,n+1>` rotations; `u(n)` gives the 2x2 propagator
    /// on `(|S,n>, |D,n+1>)`. Returns the population that would leave the
    /// truncated space.
    fn apply_sideband_manifolds(&mut self, ion: usize, u: impl Fn(usize) -> [[C64; 2]; 2]) -> f64 {
        let bit = 1usize << (ion - 1);
        let n_ions = self.n_ions;
        let n_max = self.n_max;
        let mut leaked = 0.0;
        let amps = self.amps_mut();
        for q in 0..1usize << n_ions {
            if q & bit == 0 {
                continue;
            }
            // q has the ion in S, q ^ bit in D
            for n in 0..n_max {
                let i_s = q + (n << n_ions);
                let i_d = (q ^ bit) + ((n + 1) << n_ions);
                let m = u(n);
                let (a, b) = (amps[i_s], amps[i_d]);
                amps[i_s] = m[0][0] * a + m[0][1] * b;
                amps[i_d] = m[1][0] * a + m[1][1] * b;
            }
            // |S, n_max> would couple out of the truncated space.
            let top = amps[q + (n_max << n_ions)];
            let m = u(n_max);
            leaked += (m[1][0] * top).norm_sqr();
        }
        leaked
    }
}

/// Carrier propagator `exp(-i theta/2 (cos(phi) sx + sin(phi) sy))` on `(|D>, |S>)`.
pub fn carrier_matrix(theta: f64, phase: f64) -> DMatrix<C64> {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let e = C64::from_polar(1.0, phase);
    DMatrix::from_row_slice(2, 2, &[c, -I * s * e.conj(), -I * s * e, c])
}

/// Detuned two-level propagator over `tau` with Rabi frequency `omega`,
/// detuning `delta` (rad/s), drive phase `phase`: `exp(-i tau (omega s_phi + delta sz)/2)`.
fn detuned_matrix(omega: f64, delta: f64, phase: f64, tau: f64) -> [[C64; 2]; 2] {
    let gen = (omega * omega + delta * delta).sqrt();
    if gen == 0.0 {
        return [[ONE, ZERO], [ZERO, ONE]];
    }
    let c = (gen * tau / 2.0).cos();
    let s = (gen * tau / 2.0).sin();
    let e = C64::from_polar(1.0, phase);
    let (nx, nz) = (omega / gen, delta / gen);
    // s_phi = e^{-i phi}|D><S| + e^{i phi}|S><D|, sz = diag(1, -1) on (D, S)
    [
        [C64::new(c, -s * nz), -I * s * nx * e.conj()],
        [-I * s * nx * e, C64::new(c, s * nz)],
    ]
}

fn to_dmatrix(m: [[C64; 2]; 2]) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// Resonant carrier pulse on one ion; identity on the motional mode.
pub fn carrier_pulse(state: &JointState, ion: usize, theta: f64, phase: f64) -> Result<JointState> {
    state.check_ion(ion)?;
    let mut out = state.clone();
    out.apply_qubit_op(ion, &carrier_matrix(theta, phase));
    Ok(out)
}

/// 2x2 blue-sideband propagator on `(|S,n>, |D,n+1>)` for nominal angle
/// `theta` (defined on the `n = 0 <-> 1` manifold).
fn sideband_block(theta: f64, phase: f64, n: usize) -> [[C64; 2]; 2] {
    let t = theta * ((n + 1) as f64).sqrt();
    let c = C64::new((t / 2.0).cos(), 0.0);
    let s = (t / 2.0).sin();
    let e = C64::from_polar(1.0, phase);
    [[c, -I * s * e.conj()], [-I * s * e, c]]
}

/// Resonant blue-sideband pulse coupling `|S,n> <-> |D,n+1>` on one ion.
pub fn blue_sideband_pulse(
    state: &JointState,
    ion: usize,
    theta: f64,
    phase: f64,
) -> Result<JointState> {
    state.check_ion(ion)?;
    let mut out = state.clone();
    let leaked = out.apply_sideband_manifolds(ion, |n| sideband_block(theta, phase, n));
    if leaked > TRUNCATION_TOL {
        return Err(Error::TruncationOverflow(leaked));
    }
    Ok(out)
}

pub fn apply_pulse(state: &JointState, pulse: &PulseOp) -> Result<JointState> {
    if pulse.theta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "negative pulse angle {}",
            pulse.theta
        )));
    }
    match pulse.kind {
        PulseKind::Carrier => carrier_pulse(state, pulse.ion, pulse.theta, pulse.phase),
        PulseKind::BlueSideband => blue_sideband_pulse(state, pulse.ion, pulse.theta, pulse.phase),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Carrier pi pulses to `|0, D...D>` (fluorescence check follows when heralded).
    I1,
    /// Blue-sideband pi on ion 1: probes the motional ground state.
    I2,
    /// Carrier pi on ion N: `|0, S D ... D>`.
    I3,
    /// Entangling sideband pulse `k` (1-based).
    Entangle(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceStep {
    pub step: Step,
    pub pulses: Vec<PulseOp>,
}

/// Pulse sequence preparing `|W_n>` from `|0, S...S>`.
///
/// With `heralded`, steps i1, i2, i3 run as separate checked stages; without,
/// i1 and i3 are merged (ion N is never flipped) and i2 is omitted.
///
/// Phases: all carrier pulses use phase 0. The first sideband pulse uses phase
/// 0 and the others phase pi, which makes every branch of the final state carry
/// the same phase, so the output equals `|W_n>` up to a global phase.
pub fn w_sequence(n: usize, heralded: bool) -> Result<Vec<SequenceStep>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "W sequence needs n >= 2, got {n}"
        )));
    }
    let mut steps = Vec::with_capacity(n + 3);
    if heralded {
        steps.push(SequenceStep {
            step: Step::I1,
            pulses: (1..=n).map(|ion| PulseOp::carrier(ion, PI, 0.0)).collect(),
        });
        steps.push(SequenceStep {
            step: Step::I2,
            pulses: vec![PulseOp::blue(1, PI, 0.0)],
        });
        steps.push(SequenceStep {
            step: Step::I3,
            pulses: vec![PulseOp::carrier(n, PI, 0.0)],
        });
    } else {
        steps.push(SequenceStep {
            step: Step::I1,
            pulses: (1..n).map(|ion| PulseOp::carrier(ion, PI, 0.0)).collect(),
        });
    }
    steps.push(SequenceStep {
        step: Step::Entangle(1),
        pulses: vec![PulseOp::blue(
            n,
            2.0 * (1.0 / (n as f64).sqrt()).acos(),
            0.0,
        )],
    });
    for k in 2..=n {
        let ion = n + 1 - k;
        steps.push(SequenceStep {
            step: Step::Entangle(k),
            pulses: vec![PulseOp::blue(
                ion,
                2.0 * (1.0 / (ion as f64).sqrt()).asin(),
                PI,
            )],
        });
    }
    Ok(steps)
}

pub fn run_steps(state: &JointState, steps: &[SequenceStep]) -> Result<JointState> {
    let mut s = state.clone();
    for step in steps {
        for p in &step.pulses {
            s = apply_pulse(&s, p)?;
        }
    }
    Ok(s)
}

/// Noiseless Table-1 preparation of `|W_n> (x) |0>`.
pub fn prepare_w_sequence(n: usize, n_max: usize) -> Result<JointState> {
    let steps = w_sequence(n, true)?;
    run_steps(&JointState::ground(n, n_max)?, &steps)
}

/// Reduced qubit state after discarding the motional mode.
pub fn trace_out_motion(state: &JointState) -> DensityMatrix {
    let keep: Vec<usize> = (0..state.n_ions).collect();
    partial_trace(&state.state.to_density(), &keep).expect("qubit subsystems exist")
}

/// Sum of sideband pulse areas in the entangling part of the sequence.
pub fn total_sideband_pulse_area(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let first = 2.0 * (1.0 / (n as f64).sqrt()).acos();
    let rest: f64 = (1..n).map(|k| 2.0 * (1.0 / (k as f64).sqrt()).asin()).sum();
    Ok(first + rest)
}

/// Fluorescence check of the initialization.
///
/// Each ion independently fails optical pumping with `pumping_error_per_ion`;
/// any failure rejects the run. Otherwise the state is projected onto
/// `|0, D...D>` with the Born probability of that outcome.
pub fn herald_initialization<R: Rng + ?Sized>(
    state: &JointState,
    pumping_error_per_ion: f64,
    rng: &mut R,
) -> Result<(bool, JointState)> {
    if !(0.0..=1.0).contains(&pumping_error_per_ion) {
        return Err(Error::InvalidArgument(format!(
            "pumping error {pumping_error_per_ion} is not a probability"
        )));
    }
    let pumped = (0..state.n_ions).all(|_| rng.random::<f64>() >= pumping_error_per_ion);
    let target = JointState::basis(&vec![level::D; state.n_ions], 0, state.n_max)?;
    let overlap = state.state.amplitudes()[target.index(0, 0)];
    let p = overlap.norm_sqr();
    let dark = p > 0.0 && rng.random::<f64>() < p;
    if pumped && dark {
        Ok((true, target))
    } else {
        Ok((false, state.clone()))
    }
}

/// Which imperfections [`simulate_noisy_preparation`] includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseChannels {
    pub addressing: bool,
    pub off_resonant: bool,
    pub frequency: bool,
    pub pumping: bool,
}

impl NoiseChannels {
    pub const ALL: Self = Self {
        addressing: true,
        off_resonant: true,
        frequency: true,
        pumping: true,
    };
    pub const NONE: Self = Self {
        addressing: false,
        off_resonant: false,
        frequency: false,
        pumping: false,
    };
}

impl Default for NoiseChannels {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Rabi-frequency ratio between a neighbouring ion and the addressed ion.
    pub addressing_ratio: f64,
    /// Centre-of-mass trap frequency in Hz.
    pub trap_frequency: f64,
    /// Duration of a 2 pi pulse on the blue sideband, seconds.
    pub sideband_2pi_time: f64,
    /// RMS of the quasi-static laser detuning, Hz.
    pub frequency_noise_rms: f64,
    pub pumping_error_per_ion: f64,
    pub lamb_dicke: f64,
    pub channels: NoiseChannels,
    /// Trotter slices per pulse.
    pub slices_per_pulse: usize,
    /// Registers with at least this many ions use the heralded initialization.
    pub herald_min_ions: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            addressing_ratio: 0.0,
            trap_frequency: 1.0e6,
            sideband_2pi_time: 300e-6,
            frequency_noise_rms: 0.0,
            pumping_error_per_ion: 0.0,
            lamb_dicke: 0.05,
            channels: NoiseChannels::ALL,
            slices_per_pulse: 64,
            herald_min_ions: HERALD_MIN_IONS,
        }
    }
}

impl NoiseConfig {
    /// Trap frequency and sideband timing used for `n` ions.
    pub fn for_ions(n: usize) -> Result<Self> {
        let (nu, t2pi) = match n {
            4 => (1.123e6, 220e-6),
            5 => (1.055e6, 300e-6),
            6 => (0.905e6, 350e-6),
            7 | 8 => (0.813e6, 380e-6),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "no published trap parameters for n = {n}"
                )))
            }
        };
        Ok(Self {
            trap_frequency: nu,
            sideband_2pi_time: t2pi,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("addressing_ratio", self.addressing_ratio),
            ("trap_frequency", self.trap_frequency),
            ("sideband_2pi_time", self.sideband_2pi_time),
            ("frequency_noise_rms", self.frequency_noise_rms),
            ("pumping_error_per_ion", self.pumping_error_per_ion),
            ("lamb_dicke", self.lamb_dicke),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be >= 0")));
            }
        }
        if self.addressing_ratio >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "addressing_ratio {} must be < 1",
                self.addressing_ratio
            )));
        }
        if self.pumping_error_per_ion > 1.0 {
            return Err(Error::InvalidArgument(
                "pumping_error_per_ion must be <= 1".into(),
            ));
        }
        if self.sideband_2pi_time <= 0.0 {
            return Err(Error::InvalidArgument(
                "sideband_2pi_time must be > 0".into(),
            ));
        }
        if self.lamb_dicke <= 0.0 {
            return Err(Error::InvalidArgument("lamb_dicke must be > 0".into()));
        }
        if self.slices_per_pulse == 0 {
            return Err(Error::InvalidArgument(
                "slices_per_pulse must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Sideband Rabi frequency on the `0 <-> 1` manifold, rad/s.
    fn sideband_rabi(&self) -> f64 {
        2.0 * PI / self.sideband_2pi_time
    }

    fn carrier_rabi(&self) -> f64 {
        self.sideband_rabi() / self.lamb_dicke
    }
}

struct Trajectory<'a> {
    cfg: &'a NoiseConfig,
    /// Quasi-static laser detuning of this trial, rad/s.
    detuning: f64,
}

impl Trajectory<'_> {
    fn neighbours(&self, state: &JointState, ion: usize) -> Vec<usize> {
        [ion.wrapping_sub(1), ion + 1]
            .into_iter()
            .filter(|&i| i >= 1 && i <= state.n_ions)
            .collect()
    }

    /// Global `exp(-i dt detuning/2 sum sz)` with `sz = diag(1, -1)` on `(D, S)`.
    fn free_phase(&self, state: &mut JointState, dt: f64) {
        if self.detuning == 0.0 {
            return;
        }
        let n = state.n_ions;
        let half = self.detuning * dt / 2.0;
        let amps = state.amps_mut();
        for (idx, a) in amps.iter_mut().enumerate() {
            let q = idx & ((1 << n) - 1);
            let s_count = q.count_ones() as f64;
            let d_count = n as f64 - s_count;
            *a *= C64::from_polar(1.0, -half * (d_count - s_count));
        }
    }

    fn run(&self, state: &mut JointState, pulse: &PulseOp) -> Result<()> {
        let cfg = self.cfg;
        let ch = cfg.channels;
        let omega = match pulse.kind {
            PulseKind::Carrier => cfg.carrier_rabi(),
            PulseKind::BlueSideband => cfg.sideband_rabi(),
        };
        let duration = pulse.theta / omega;
        let neighbours = if ch.addressing && cfg.addressing_ratio > 0.0 {
            self.neighbours(state, pulse.ion)
        } else {
            Vec::new()
        };
        let off_resonant =
            ch.off_resonant && pulse.kind == PulseKind::BlueSideband && cfg.trap_frequency > 0.0;

        if neighbours.is_empty() && !off_resonant && self.detuning == 0.0 {
            *state = apply_pulse(state, pulse)?;
            return Ok(());
        }

        let slices = cfg.slices_per_pulse;
        let tau = duration / slices as f64;
        let delta = 2.0 * PI * cfg.trap_frequency;
        let omega_c = cfg.carrier_rabi();
        let mut leaked = 0.0;
        for j in 0..slices {
            self.free_phase(state, tau / 2.0);
            let slice_theta = omega * tau;
            match pulse.kind {
                PulseKind::Carrier => {
                    state.apply_qubit_op(pulse.ion, &carrier_matrix(slice_theta, pulse.phase));
                    for &nb in &neighbours {
                        state.apply_qubit_op(
                            nb,
                            &carrier_matrix(slice_theta * cfg.addressing_ratio, pulse.phase),
                        );
                    }
                }
                PulseKind::BlueSideband => {
                    leaked += state.apply_sideband_manifolds(pulse.ion, |n| {
                        sideband_block(slice_theta, pulse.phase, n)
                    });
                    for &nb in &neighbours {
                        leaked += state.apply_sideband_manifolds(nb, |n| {
                            sideband_block(slice_theta * cfg.addressing_ratio, pulse.phase, n)
                        });
                    }
                    if off_resonant {
                        // Interaction-picture propagator of the detuned carrier
                        // from t0 to t1 = t0 + tau.
                        let t0 = j as f64 * tau;
                        let t1 = t0 + tau;
                        let m = detuned_matrix(omega_c, delta, pulse.phase, tau);
                        let pre = C64::from_polar(1.0, -delta * t0 / 2.0);
                        let post = C64::from_polar(1.0, delta * t1 / 2.0);
                        // diag(post, post*) . m . diag(pre, pre*)
                        let u = [
                            [post * m[0][0] * pre, post * m[0][1] * pre.conj()],
                            [
                                post.conj() * m[1][0] * pre,
                                post.conj() * m[1][1] * pre.conj(),
                            ],
                        ];
                        state.apply_qubit_op(pulse.ion, &to_dmatrix(u));
                    }
                }
            }
            self.free_phase(state, tau / 2.0);
        }
        if leaked > TRUNCATION_TOL {
            return Err(Error::TruncationOverflow(leaked));
        }
        Ok(())
    }
}

/// Trajectory average of the W preparation with imperfections.
///
/// Registers of at least `herald_min_ions` ions use the heralded
/// initialization, repeated until accepted; smaller ones use the merged
/// sequence and suffer pumping errors directly (an unpumped ion starts in
/// `|D>`). Trial `i` draws its randomness from `(seed, i)` only, and trials are
/// summed in fixed-size chunks combined pairwise, so the result does not
/// depend on thread scheduling.
pub fn simulate_noisy_preparation(
    n: usize,
    n_max: usize,
    noise: &NoiseConfig,
    trials: usize,
    seed: u64,
) -> Result<DensityMatrix> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    noise.validate()?;
    let heralded = n >= noise.herald_min_ions;
    let steps = w_sequence(n, heralded)?;

    let run_trial = |trial: usize| -> Result<DensityMatrix> {
        let mut rng = rng_for(seed, stream::NOISY_PREPARATION, trial as u64);
        let detuning = if noise.channels.frequency && noise.frequency_noise_rms > 0.0 {
            let normal = Normal::new(0.0, 2.0 * PI * noise.frequency_noise_rms)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            normal.sample(&mut rng)
        } else {
            0.0
        };
        let traj = Trajectory {
            cfg: noise,
            detuning,
        };
        let pumping = if noise.channels.pumping {
            noise.pumping_error_per_ion
        } else {
            0.0
        };

        let mut state;
        let mut remaining = steps.as_slice();
        if heralded {
            let (init, rest) = steps.split_at(2);
            let mut attempts = 0;
            loop {
                let mut s = JointState::ground(n, n_max)?;
                for p in init.iter().flat_map(|s| &s.pulses) {
                    traj.run(&mut s, p)?;
                }
                let (ok, s) = herald_initialization(&s, pumping, &mut rng)?;
                if ok {
                    state = s;
                    break;
                }
                attempts += 1;
                if attempts >= 100_000 {
                    return Err(Error::InvalidArgument(
                        "initialization herald never succeeded".into(),
                    ));
                }
            }
            remaining = rest;
        } else {
            let levels: Vec<usize> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < pumping {
                        level::D
                    } else {
                        level::S
                    }
                })
                .collect();
            state = JointState::basis(&levels, 0, n_max)?;
        }
        for p in remaining.iter().flat_map(|s| &s.pulses) {
            traj.run(&mut state, p)?;
        }
        Ok(trace_out_motion(&state))
    };

    const CHUNK: usize = 16;
    let chunk_count = trials.div_ceil(CHUNK);
    let partials: Vec<DMatrix<C64>> = (0..chunk_count)
        .into_par_iter()
        .map(|c| -> Result<DMatrix<C64>> {
            let d = 1usize << n;
            let mut acc = DMatrix::<C64>::zeros(d, d);
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                acc += run_trial(t)?.entries();
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let sum = pairwise_sum(partials);
    Ok(DensityMatrix::from_raw_cleaned(
        sum / C64::new(trials as f64, 0.0),
        qubit_dims(n),
    ))
}

pub(crate) fn pairwise_sum(mut items: Vec<DMatrix<C64>>) -> DMatrix<C64> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop().expect("at least one item")
}
