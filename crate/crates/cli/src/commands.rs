use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use wstate::entangle::{
    advanced_witness, apply_local_phases, entanglement_report, entanglement_report_with,
    gamma_biseparable, optimize_local_phases, simple_witness_value, WitnessSpec,
    PUBLISHED_WITNESS_ROWS,
};
use wstate::io::{self, sci};
use wstate::ionsim::{
    prepare_w_sequence, simulate_noisy_preparation, trace_out_motion, w_state, DEFAULT_N_MAX,
};
use wstate::tomo::{mle_reconstruct, monte_carlo_resample, sample_dataset, Analysis, MleConfig};
use wstate::{fidelity_pure, DensityMatrix};

use crate::{AnalyzeArgs, McErrorsArgs, MleArgs, PrepareArgs, TomographyArgs, WitnessGammaArgs};

const DEFAULT_TRIALS: usize = 200;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_matrix(path: &Path) -> Result<DensityMatrix> {
    io::parse_density_matrix(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn qubits(rho: &DensityMatrix, path: &Path) -> Result<usize> {
    match rho.n_qubits() {
        Some(n) if n >= 1 => Ok(n),
        _ => bail!(
            "{} is not a qubit register (dims {:?})",
            path.display(),
            rho.dims()
        ),
    }
}

fn sibling(out: &Path, extension: &str) -> PathBuf {
    out.with_extension(extension)
}

impl MleArgs {
    fn config(&self) -> Result<MleConfig> {
        let cfg = MleConfig {
            max_iterations: self.max_iter as usize,
            loglik_tolerance: self.tol,
            ..MleConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn prepare(a: PrepareArgs) -> Result<()> {
    let noise = match &a.noise {
        Some(p) => Some(
            io::parse_noise_config(&read(p)?)
                .with_context(|| format!("parsing {}", p.display()))?,
        ),
        None => None,
    };
    let file_n = noise.as_ref().and_then(|f| f.n);
    let n = match (a.n.map(|n| n as usize), file_n) {
        (Some(x), Some(y)) if x != y => bail!("--n {x} conflicts with n = {y} in the noise file"),
        (Some(x), _) | (None, Some(x)) => x,
        (None, None) => bail!("--n is required without a noise file that sets n"),
    };
    if !(2..=12).contains(&n) {
        bail!("n = {n} outside 2..=12");
    }

    let rho = match &noise {
        None => trace_out_motion(&prepare_w_sequence(n, DEFAULT_N_MAX)?),
        Some(f) => {
            let trials = a
                .trials
                .map(|t| t as usize)
                .or(f.trials)
                .unwrap_or(DEFAULT_TRIALS);
            let seed = a.seed.or(f.seed).unwrap_or(0);
            simulate_noisy_preparation(n, f.n_max_for(n), &f.noise, trials, seed)?
        }
    };
    write(&a.out, &io::write_density_matrix(&rho))?;

    let w = w_state(n)?;
    let (_, optimized) = optimize_local_phases(&rho)?;
    println!("n = {n}");
    println!("fidelity = {}", sci(fidelity_pure(&rho, &w)?));
    println!("fidelity_phase_optimized = {}", sci(optimized));
    Ok(())
}

pub fn tomography(a: TomographyArgs) -> Result<()> {
    let rho = read_matrix(&a.input)?;
    let n = qubits(&rho, &a.input)?;
    let cfg = a.mle.config()?;
    let data = sample_dataset(&rho, a.shots, a.seed)?;
    let result = mle_reconstruct(&data, &cfg)?;

    let dataset_path = a
        .dataset
        .clone()
        .unwrap_or_else(|| sibling(&a.out, "dataset.txt"));
    write(&dataset_path, &io::write_dataset(&data))?;
    write(&a.out, &io::write_density_matrix(&result.rho))?;

    let w = w_state(n)?;
    let (_, optimized) = optimize_local_phases(&result.rho)?;
    println!("records = {}", data.records().len());
    println!("iterations = {}", result.iterations);
    println!("log_likelihood = {}", sci(result.log_likelihood));
    println!("converged = {}", result.converged);
    println!("dilution_fallbacks = {}", result.dilution_fallbacks);
    println!("fidelity = {}", sci(fidelity_pure(&result.rho, &w)?));
    println!("fidelity_phase_optimized = {}", sci(optimized));
    Ok(())
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let rho = read_matrix(&a.input)?;
    qubits(&rho, &a.input)?;
    let report = entanglement_report(&rho)?;
    let text = io::write_report(&report);
    let plot_path = a
        .plot
        .clone()
        .unwrap_or_else(|| sibling(&a.out, "plot.txt"));
    write(&a.out, &text)?;
    write(&plot_path, &io::write_plot_data(&rho))?;
    print!("{}", text.split("\n\n").next().unwrap_or(&text));
    println!();
    Ok(())
}

pub fn mc_errors(a: McErrorsArgs) -> Result<()> {
    let rho = read_matrix(&a.input)?;
    let n = qubits(&rho, &a.input)?;
    if !(2..=8).contains(&n) {
        bail!("mc-errors supports 2..=8 qubits, got {n}");
    }
    let cfg = a.mle.config()?;
    let spec = if n >= 3 {
        Some(WitnessSpec::published_recomputed(n)?)
    } else {
        None
    };
    let witness = spec.as_ref().map(advanced_witness).transpose()?;

    let fidelity = |r: &DensityMatrix| optimize_local_phases(r).map(|p| p.1).unwrap_or(f64::NAN);
    let simple = |r: &DensityMatrix| {
        optimize_local_phases(r)
            .and_then(|(phases, _)| simple_witness_value(&apply_local_phases(r, &phases)?))
            .unwrap_or(f64::NAN)
    };
    let advanced = |r: &DensityMatrix| {
        let w = witness.as_ref().expect("n >= 3");
        optimize_local_phases(r)
            .and_then(|(phases, _)| w.expectation(&apply_local_phases(r, &phases)?))
            .unwrap_or(f64::NAN)
    };
    let report = |r: &DensityMatrix| entanglement_report_with(r, None).ok();
    let proj_min = |r: &DensityMatrix| report(r).map_or(f64::NAN, |x| x.projected.min);
    let proj_mean = |r: &DensityMatrix| report(r).map_or(f64::NAN, |x| x.projected.mean);
    let red_min = |r: &DensityMatrix| report(r).map_or(f64::NAN, |x| x.reduced.min);
    let red_mean = |r: &DensityMatrix| report(r).map_or(f64::NAN, |x| x.reduced.mean);

    let mut analyses: Vec<Analysis> = vec![("fidelity", &fidelity), ("simple_witness", &simple)];
    if witness.is_some() {
        analyses.push(("advanced_witness", &advanced));
    }
    analyses.extend([
        ("projected_concurrence_min", &proj_min as _),
        ("projected_concurrence_mean", &proj_mean as _),
        ("reduced_concurrence_min", &red_min as _),
        ("reduced_concurrence_mean", &red_mean as _),
    ]);

    let stats = monte_carlo_resample(&rho, a.shots, a.trials as usize, a.seed, &analyses, &cfg)?;
    let header = [
        ("n", n.to_string()),
        ("shots", a.shots.to_string()),
        ("trials", a.trials.to_string()),
        ("seed", a.seed.to_string()),
    ];
    let text = io::write_uncertainty_report(&header, &stats);
    write(&a.out, &text)?;
    print!("{}", text.split("\n\n").next().unwrap_or(&text));
    println!();
    Ok(())
}

pub fn witness_gamma(a: WitnessGammaArgs) -> Result<()> {
    let mut table = format!(
        "{:<4}{:<17}{:<17}{:<17}{:<17}{}\n",
        "n", "alpha", "beta", "gamma_published", "gamma_computed", "deviation"
    );
    let mut failures = Vec::new();
    for (n, alpha, beta, published) in PUBLISHED_WITNESS_ROWS {
        let row_prefix = format!(
            "{n:<4}{:<17}{:<17}{:<17}",
            sci(alpha),
            sci(beta),
            sci(published)
        );
        match gamma_biseparable(n, alpha, beta) {
            Ok(g) => writeln!(
                table,
                "{row_prefix}{:<17}{}",
                sci(g.gamma),
                sci(g.gamma - published)
            )?,
            Err(e) => {
                writeln!(table, "{row_prefix}error: {e}")?;
                failures.push(n);
            }
        }
    }
    print!("{table}");
    if let Some(out) = &a.out {
        write(out, &table)?;
    }
    if !failures.is_empty() {
        bail!("gamma optimization failed for n = {failures:?}");
    }
    Ok(())
}
