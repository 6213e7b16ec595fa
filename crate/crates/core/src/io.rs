//! Text formats for density matrices, tomography datasets, noise
//! configurations and analysis reports. Readers report the offending line
//! (1-based) on malformed input.

use std::collections::BTreeMap;
use std::fmt::Write;

use nalgebra::DMatrix;

use crate::entangle::{ConcurrenceSummary, EntanglementReport};
use crate::error::{Error, Result};
use crate::hilbert::{total_dim, DensityMatrix, C64};
use crate::ionsim::{NoiseChannels, NoiseConfig};
use crate::tomo::{CountRecord, QuantityStats, TomographyDataset};

/// Fixed scientific notation with nine significant digits and a signed
/// two-digit exponent, e.g. `-1.25000000e-03`.
pub fn sci(x: f64) -> String {
    let s = format!("{x:.8e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let exp: i32 = exp.parse().expect("float exponent");
            format!("{mantissa}e{exp:+03}")
        }
        None => s,
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::format(line, format!("cannot parse {what} from {token:?}")))
}

/// `dims d1 .. dk`, then one row per line of whitespace-separated `re,im`.
/// Seventeen significant digits make the text round-trip exactly.
pub fn write_density_matrix(rho: &DensityMatrix) -> String {
    let mut out = String::from("dims");
    for d in rho.dims() {
        write!(out, " {d}").unwrap();
    }
    out.push('\n');
    let m = rho.entries();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:.16e},{:.16e}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_density_matrix(text: &str) -> Result<DensityMatrix> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::format(1, "empty file"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("dims") {
        return Err(Error::format(hline, "expected header \"dims d1 .. dk\""));
    }
    let dims: Vec<usize> = tokens
        .map(|t| parse_num(hline, t, "dimension"))
        .collect::<Result<_>>()?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::format(hline, "dimensions must be positive"));
    }
    let d = total_dim(&dims);
    let mut m = DMatrix::<C64>::zeros(d, d);
    let mut last = hline;
    for r in 0..d {
        let (line, row) = lines
            .next()
            .ok_or_else(|| Error::format(last + 1, format!("expected {d} rows, found {r}")))?;
        last = line;
        let entries: Vec<&str> = row.split_whitespace().collect();
        if entries.len() != d {
            return Err(Error::format(
                line,
                format!("expected {d} entries, found {}", entries.len()),
            ));
        }
        for (c, e) in entries.iter().enumerate() {
            let (re, im) = e
                .split_once(',')
                .ok_or_else(|| Error::format(line, format!("entry {e:?} is not \"re,im\"")))?;
            m[(r, c)] = C64::new(
                parse_num(line, re, "real part")?,
                parse_num(line, im, "imaginary part")?,
            );
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::format(line, "unexpected content after the last row"));
    }
    DensityMatrix::new(m, dims)
}

/// `n N shots S`, then one line per setting: the setting string followed by
/// the 2^N outcome counts.
pub fn write_dataset(data: &TomographyDataset) -> String {
    let mut out = format!("n {} shots {}\n", data.n(), data.shots_per_basis());
    for r in data.records() {
        write!(out, "{}", r.setting).unwrap();
        for c in &r.counts {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<TomographyDataset> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::format(1, "empty file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "n" || tokens[2] != "shots" {
        return Err(Error::format(hline, "expected header \"n N shots S\""));
    }
    let n: usize = parse_num(hline, tokens[1], "n")?;
    let shots: u64 = parse_num(hline, tokens[3], "shots")?;
    if n == 0 || n > 12 {
        return Err(Error::format(hline, format!("n = {n} outside 1..=12")));
    }
    let mut records = Vec::with_capacity(3usize.pow(n as u32));
    for (line, l) in lines {
        let mut tokens = l.split_whitespace();
        let setting = tokens
            .next()
            .expect("content lines are non-empty")
            .parse()
            .map_err(|e: Error| Error::format(line, e.to_string()))?;
        let counts: Vec<f64> = tokens
            .map(|t| parse_num(line, t, "count"))
            .collect::<Result<_>>()?;
        if counts.len() != 1 << n {
            return Err(Error::format(
                line,
                format!("expected {} counts, found {}", 1 << n, counts.len()),
            ));
        }
        records.push(CountRecord { setting, counts });
    }
    TomographyDataset::new(n, shots, records)
}

/// Contents of a noise configuration file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseFile {
    pub n: Option<usize>,
    /// Fock cutoff; see [`NoiseFile::n_max_for`].
    pub n_max: Option<usize>,
    pub noise: NoiseConfig,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

impl NoiseFile {
    /// The configured cutoff, else `n + 1`: each of the `n` sideband pulses
    /// adds at most one phonon, so noise can never leak past it.
    pub fn n_max_for(&self, n: usize) -> usize {
        self.n_max.unwrap_or(n + 1)
    }
}

fn parse_channels(line: usize, value: &str) -> Result<NoiseChannels> {
    match value {
        "all" => return Ok(NoiseChannels::ALL),
        "none" => return Ok(NoiseChannels::NONE),
        _ => {}
    }
    let mut ch = NoiseChannels::NONE;
    for name in value.split(',').map(str::trim) {
        match name {
            "addressing" => ch.addressing = true,
            "off_resonant" => ch.off_resonant = true,
            "frequency" => ch.frequency = true,
            "pumping" => ch.pumping = true,
            other => {
                return Err(Error::format(
                    line,
                    format!("unknown noise channel {other:?}"),
                ))
            }
        }
    }
    Ok(ch)
}

fn write_channels(ch: NoiseChannels) -> String {
    if ch == NoiseChannels::ALL {
        return "all".into();
    }
    if ch == NoiseChannels::NONE {
        return "none".into();
    }
    let names = [
        (ch.addressing, "addressing"),
        (ch.off_resonant, "off_resonant"),
        (ch.frequency, "frequency"),
        (ch.pumping, "pumping"),
    ];
    names
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, name)| *name)
        .collect::<Vec<_>>()
        .join(",")
}

/// `key = value` lines; `#` starts a comment line. Missing keys keep their
/// defaults.
pub fn parse_noise_config(text: &str) -> Result<NoiseFile> {
    let mut f = NoiseFile::default();
    let mut seen = BTreeMap::new();
    for (line, l) in content_lines(text) {
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| Error::format(line, "expected \"key = value\""))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(Error::format(
                line,
                format!("{key} already set on line {first}"),
            ));
        }
        let num = |what| parse_num::<f64>(line, value, what);
        match key {
            "n" => f.n = Some(parse_num(line, value, "n")?),
            "n_max" => f.n_max = Some(parse_num(line, value, "n_max")?),
            "addressing_ratio" => f.noise.addressing_ratio = num(key)?,
            "trap_frequency_hz" => f.noise.trap_frequency = num(key)?,
            "sideband_2pi_time_s" => f.noise.sideband_2pi_time = num(key)?,
            "frequency_noise_rms_hz" => f.noise.frequency_noise_rms = num(key)?,
            "pumping_error_per_ion" => f.noise.pumping_error_per_ion = num(key)?,
            "lamb_dicke" => f.noise.lamb_dicke = num(key)?,
            "slices_per_pulse" => f.noise.slices_per_pulse = parse_num(line, value, key)?,
            "herald_min_ions" => f.noise.herald_min_ions = parse_num(line, value, key)?,
            "channels" => f.noise.channels = parse_channels(line, value)?,
            "trials" => f.trials = Some(parse_num(line, value, "trials")?),
            "seed" => f.seed = Some(parse_num(line, value, "seed")?),
            other => return Err(Error::format(line, format!("unknown key {other:?}"))),
        }
    }
    f.noise.validate()?;
    Ok(f)
}

pub fn write_noise_config(f: &NoiseFile) -> String {
    let mut out = String::new();
    if let Some(n) = f.n {
        writeln!(out, "n = {n}").unwrap();
    }
    if let Some(m) = f.n_max {
        writeln!(out, "n_max = {m}").unwrap();
    }
    let c = &f.noise;
    writeln!(out, "addressing_ratio = {}", c.addressing_ratio).unwrap();
    writeln!(out, "trap_frequency_hz = {}", c.trap_frequency).unwrap();
    writeln!(out, "sideband_2pi_time_s = {}", c.sideband_2pi_time).unwrap();
    writeln!(out, "frequency_noise_rms_hz = {}", c.frequency_noise_rms).unwrap();
    writeln!(out, "pumping_error_per_ion = {}", c.pumping_error_per_ion).unwrap();
    writeln!(out, "lamb_dicke = {}", c.lamb_dicke).unwrap();
    writeln!(out, "slices_per_pulse = {}", c.slices_per_pulse).unwrap();
    writeln!(out, "herald_min_ions = {}", c.herald_min_ions).unwrap();
    writeln!(out, "channels = {}", write_channels(c.channels)).unwrap();
    if let Some(t) = f.trials {
        writeln!(out, "trials = {t}").unwrap();
    }
    if let Some(s) = f.seed {
        writeln!(out, "seed = {s}").unwrap();
    }
    out
}

fn summary_rows(out: &mut String, label: &str, s: &ConcurrenceSummary) {
    writeln!(out, "{:<28}{}", format!("min {label}"), sci(s.min)).unwrap();
    writeln!(out, "{:<28}{}", format!("mean {label}"), sci(s.mean)).unwrap();
}

/// Table of the headline quantities followed by a `key = value` block with
/// every field. Qubits are labelled from 1.
pub fn write_report(r: &EntanglementReport) -> String {
    let mut out = format!("# entanglement report, n = {}\n", r.n);
    writeln!(out, "{:<28}{}", "fidelity", sci(r.fidelity)).unwrap();
    writeln!(out, "{:<28}{}", "simple witness", sci(r.simple_witness)).unwrap();
    let adv = r.advanced_witness.map(sci).unwrap_or_else(|| "n/a".into());
    writeln!(out, "{:<28}{}", "advanced witness", adv).unwrap();
    summary_rows(&mut out, "projected C", &r.projected);
    summary_rows(&mut out, "reduced C'", &r.reduced);
    writeln!(out, "{:<28}{}", "distillable", r.distillable).unwrap();

    out.push_str("\n[values]\n");
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("n", r.n.to_string());
    kv("fidelity", sci(r.fidelity));
    for (k, p) in r.phases.iter().enumerate() {
        kv(&format!("phase.{}", k + 1), sci(*p));
    }
    kv("simple_witness", sci(r.simple_witness));
    kv("advanced_witness", adv);
    if let Some(s) = &r.witness_spec {
        kv("witness.alpha", sci(s.alpha));
        kv("witness.beta", sci(s.beta));
        kv("witness.gamma", sci(s.gamma));
    }
    for (name, s) in [("projected", &r.projected), ("reduced", &r.reduced)] {
        kv(&format!("{name}.min"), sci(s.min));
        kv(&format!("{name}.mean"), sci(s.mean));
        for p in &s.pairs {
            kv(&format!("{name}.{}.{}", p.k + 1, p.l + 1), sci(p.value));
        }
    }
    kv("distillable", r.distillable.to_string());
    out
}

/// The `key = value` block of a report or uncertainty file.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let mut inside = false;
    for (line, l) in content_lines(text) {
        if l.starts_with('[') {
            inside = true;
            continue;
        }
        if !inside {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| Error::format(line, "expected \"key = value\""))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// `index value` with `index = r D + c` and `value = |rho_rc|`.
pub fn write_plot_data(rho: &DensityMatrix) -> String {
    let m = rho.entries();
    let d = m.nrows();
    let mut out = String::from("# index |rho_rc|, index = r * D + c\n");
    for r in 0..d {
        for c in 0..d {
            writeln!(out, "{} {}", r * d + c, sci(m[(r, c)].norm())).unwrap();
        }
    }
    out
}

/// Mean and standard deviation per quantity.
pub fn write_uncertainty_report(header: &[(&str, String)], stats: &[QuantityStats]) -> String {
    let mut out = String::from("# monte carlo uncertainties\n");
    for s in stats {
        writeln!(out, "{:<28}{} +- {}", s.name, sci(s.mean), sci(s.std)).unwrap();
    }
    out.push_str("\n[values]\n");
    for (k, v) in header {
        writeln!(out, "{k} = {v}").unwrap();
    }
    for s in stats {
        writeln!(out, "{}.mean = {}", s.name, sci(s.mean)).unwrap();
        writeln!(out, "{}.std = {}", s.name, sci(s.std)).unwrap();
    }
    out
}
