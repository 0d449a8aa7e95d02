//! Command-line front end: six subcommands over one flat config format.
//!
//! Exit codes: 0 success, 2 invalid configuration or input, 3 numerical
//! instability, 4 scan where no cell survived.

mod journal;

pub use journal::Journal;

use crate::adk::{adk_contours, AdkParams};
use crate::atom::{bound_states, Potential};
use crate::config::{PotentialChoice, RunConfig};
use crate::error::{Error, Result};
use crate::numerics::fmt_full;
use crate::rates::{self, ScanResult};
use clap::{Args, Parser, Subcommand};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "ionrate",
    version,
    about = "Strong-field ionization lab: pulse propagation, kick-response scans, delay analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (flat dotted keys); omitted keys take the
    /// production defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding run.out_dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding run.workers
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Field-free bound-state energies for every channel up to the
    /// projector cutoff
    Eigen(CommonArgs),
    /// Propagate the base pulse once and record probability and norms
    Propagate(CommonArgs),
    /// Kick-response scan over the (E0, tau) grid, journaled and resumable
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        /// Reuse finished cells from the journal in the output directory
        #[arg(long)]
        resume: bool,
    },
    /// Quasistatic-rate response surface on the same axes and schema as
    /// scan
    Adk(CommonArgs),
    /// Peak and contour-midpoint delay analysis of a scan surface
    Delay {
        /// Surface CSV produced by scan or adk
        input: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Contour levels, comma separated, overriding analysis.levels
        #[arg(long)]
        levels: Option<String>,
    },
    /// Sweep one parameter and tabulate a fixed observable against it
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// One of: dr, dt, Lmax, Lb, eps, alpha
        parameter: String,
        /// Strictly monotone comma-separated values
        #[arg(allow_hyphen_values = true)]
        values: String,
    },
}

/// Parse the process arguments, run the chosen command, and reduce the
/// outcome to an exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Unstable(_) => 3,
                _ => 2,
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Eigen(c) => cmd_eigen(&load_config(c)?),
        Command::Propagate(c) => cmd_propagate(&load_config(c)?),
        Command::Scan { common, resume } => cmd_scan(&load_config(common)?, *resume),
        Command::Adk(c) => cmd_adk(&load_config(c)?),
        Command::Delay { input, common, levels } => {
            cmd_delay(&load_config(common)?, input, levels.as_deref())
        }
        Command::Converge { common, parameter, values } => {
            cmd_converge(&load_config(common)?, parameter, values)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        cfg.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.display().to_string();
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(
        File::create(path).map_err(|e| Error::Io(format!("cannot create {}: {e}", path.display())))?,
    );
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Bound-state energy table: one row per (channel, state), energies
/// ascending within a channel. A potential that binds nothing on this
/// grid yields a header-only file, which is an answer, not an error.
fn cmd_eigen(cfg: &RunConfig) -> Result<i32> {
    let dir = out_dir(cfg)?;
    let grid = cfg.grid()?;
    let pot = cfg.resolve_potential()?;
    const STATES_PER_CHANNEL: usize = 8;

    write_file(&dir.join("eigen.csv"), |w| {
        writeln!(w, "l,n,energy_au")?;
        for ell in 0..=cfg.l_b {
            for (i, state) in bound_states(&grid, &pot, ell, STATES_PER_CHANNEL).iter().enumerate()
            {
                writeln!(w, "{},{},{}", ell, ell + 1 + i, fmt_full(state.energy))?;
            }
        }
        Ok(())
    })?;
    write_file(&dir.join("eigen.meta"), |w| {
        writeln!(w, "fingerprint = {}", cfg.fingerprint())?;
        match &pot {
            Potential::Coulomb => writeln!(w, "potential = coulomb")?,
            Potential::Yukawa { amplitude, screening } => {
                writeln!(w, "potential = yukawa")?;
                writeln!(w, "screening_length = {}", fmt_full(*screening))?;
                writeln!(w, "amplitude = {}", fmt_full(*amplitude))?;
                let calibrated = matches!(
                    &cfg.potential,
                    PotentialChoice::Yukawa { amplitude: None, .. }
                );
                writeln!(w, "calibrated = {calibrated}")?;
            }
        }
        Ok(())
    })?;
    Ok(0)
}

/// One kick-free propagation; the structured record keeps the health
/// numbers next to the probability so a run can be audited later.
fn cmd_propagate(cfg: &RunConfig) -> Result<i32> {
    let dir = out_dir(cfg)?;
    let ctx = cfg.scan_context()?;
    let pulse = cfg.base_pulse()?;
    let start = Instant::now();
    let path = dir.join("propagate.json");
    match ctx.propagator().propagate(ctx.initial_state(), &pulse) {
        Err(e) => {
            let record = serde_json::json!({
                "error": e.to_string(),
                "wall_seconds": start.elapsed().as_secs_f64(),
                "fingerprint": cfg.fingerprint(),
            });
            write_file(&path, |w| Ok(serde_json::to_writer_pretty(w, &record)?))?;
            Err(e)
        }
        Ok(o) => {
            let probability = ctx.projector().ionization_probability(&o.psi)?;
            let bound = ctx.projector().bound_population(&o.psi)?;
            let record = serde_json::json!({
                "probability": probability,
                "final_norm": o.psi.norm(),
                "bound_population": bound,
                "steps": o.steps,
                "max_step_drift": o.max_step_drift,
                "run_drift": o.run_drift,
                "outer_fraction": o.outer_fraction,
                "reflection_flagged": o.reflection_flagged,
                "wall_seconds": start.elapsed().as_secs_f64(),
                "fingerprint": cfg.fingerprint(),
            });
            write_file(&path, |w| Ok(serde_json::to_writer_pretty(w, &record)?))?;
            Ok(0)
        }
    }
}

fn cmd_scan(cfg: &RunConfig, resume: bool) -> Result<i32> {
    let dir = out_dir(cfg)?;
    let ctx = cfg.scan_context()?;
    let tau_values = cfg.tau_values()?;
    let journal_path = dir.join("scan.journal");

    let (seed, journal) = if resume && journal_path.exists() {
        let seed = Journal::load(&journal_path, cfg.fingerprint())?;
        (seed, Journal::append(&journal_path, cfg.fingerprint())?)
    } else {
        (Vec::new(), Journal::create(&journal_path, cfg.fingerprint())?)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {}-thread pool: {e}", cfg.workers)))?;
    let result = pool.install(|| {
        rates::scan_resumable(&ctx, &cfg.e0_values, &tau_values, &seed, |job| journal.record(job))
    })?;

    write_file(&dir.join("scan.csv"), |w| result.write_csv(w))?;
    write_file(&dir.join("scan.meta"), |w| result.write_meta(w))?;

    let survived = result.delta_p.iter().flatten().filter(|c| c.is_some()).count();
    if survived == 0 {
        eprintln!("scan produced no usable cell; see scan.meta");
        return Ok(4);
    }
    Ok(0)
}

fn cmd_adk(cfg: &RunConfig) -> Result<i32> {
    let dir = out_dir(cfg)?;
    let base = cfg.base_pulse()?;
    let pulse = base.with_signal(base.duration() / 2.0, cfg.alpha, cfg.epsilon())?;
    let ip = match &cfg.potential {
        PotentialChoice::Coulomb => 0.5,
        PotentialChoice::Yukawa { target_ip, .. } => *target_ip,
    };
    let params = AdkParams::new(ip, 1.0)?;
    let mut table = adk_contours(&cfg.e0_values, &cfg.tau_values()?, &pulse, &params)?;
    table.fingerprint = cfg.fingerprint().to_string();
    write_file(&dir.join("adk.csv"), |w| table.write_csv(w))?;
    write_file(&dir.join("adk.meta"), |w| table.write_meta(w))?;
    Ok(0)
}

fn parse_number_list(label: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{label}: invalid number '{}'", s.trim())))
        })
        .collect()
}

/// Rebuild a scan surface from its CSV. The file must carry the shared
/// header and a complete rectangular table: every row over the same tau
/// axis. Anything else is malformed input.
fn read_surface(text: &str, cfg: &RunConfig) -> Result<ScanResult> {
    let bad = |msg: String| Error::Config(msg);
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(bad("surface file is empty".into()));
    };
    if header.trim() != "E0_au,tau_au,deltaP,baselineP" {
        return Err(bad(format!("unexpected surface header '{}'", header.trim())));
    }

    let mut e0_values: Vec<f64> = Vec::new();
    let mut taus_per_row: Vec<Vec<f64>> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut baselines: Vec<f64> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("line {n}: expected 4 columns, got {}", fields.len())));
        }
        let num = |k: usize| {
            fields[k].trim().parse::<f64>().map_err(|_| {
                bad(format!("line {n}: invalid number '{}'", fields[k].trim()))
            })
        };
        let (e0, tau, dp, bp) = (num(0)?, num(1)?, num(2)?, num(3)?);
        if e0_values.last() != Some(&e0) {
            e0_values.push(e0);
            taus_per_row.push(Vec::new());
            rows.push(Vec::new());
            baselines.push(bp);
        }
        taus_per_row.last_mut().unwrap().push(tau);
        rows.last_mut().unwrap().push(dp);
    }
    if rows.is_empty() {
        return Err(bad("surface file has no data rows".into()));
    }
    let tau_values = taus_per_row[0].clone();
    for (k, taus) in taus_per_row.iter().enumerate() {
        if *taus != tau_values {
            return Err(bad(format!(
                "row for E0 = {} does not share the first row's tau axis",
                fmt_full(e0_values[k])
            )));
        }
    }
    let surface = ScanResult {
        e0_values,
        tau_values,
        delta_p: rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
        baseline_p: baselines.into_iter().map(Some).collect(),
        alpha: cfg.alpha,
        epsilon: cfg.epsilon(),
        fingerprint: cfg.fingerprint().to_string(),
        failures: Vec::new(),
        flagged_cells: Vec::new(),
        flagged_baselines: Vec::new(),
    };
    surface.validate()?;
    Ok(surface)
}

/// Delay analysis of an existing surface. Pulse geometry comes from the
/// config, so run this with the same config that produced the surface.
fn cmd_delay(cfg: &RunConfig, input: &Path, levels_override: Option<&str>) -> Result<i32> {
    let dir = out_dir(cfg)?;
    let text = fs::read_to_string(input)
        .map_err(|e| Error::Config(format!("cannot read surface {}: {e}", input.display())))?;
    let surface = read_surface(&text, cfg)?;
    let levels = match levels_override {
        Some(s) => {
            let ls = parse_number_list("--levels", s)?;
            if ls.is_empty() || ls.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
                return Err(Error::Config(
                    "--levels must lie strictly between 0 and 1".into(),
                ));
            }
            ls
        }
        None => cfg.levels.clone(),
    };
    let report = rates::delay_report(&surface, &levels, &cfg.base_pulse()?);
    write_file(&dir.join("delay.csv"), |w| report.write_csv(w))?;
    write_file(&dir.join("delay.meta"), |w| {
        writeln!(w, "fingerprint = {}", report.fingerprint)?;
        writeln!(w, "field_peak_time = {}", fmt_full(report.field_peak_time))?;
        writeln!(w, "tau_step = {}", fmt_full(report.tau_step))?;
        writeln!(w, "rows_analyzed = {}", report.rows.len())?;
        for e in &report.errors {
            writeln!(w, "row_error = {e}")?;
        }
        Ok(())
    })?;
    Ok(0)
}

#[derive(Clone, Copy, PartialEq)]
enum SweepParam {
    Dr,
    Dt,
    LMax,
    LB,
    Eps,
    Alpha,
}

fn parse_param(name: &str) -> Result<SweepParam> {
    match name {
        "dr" => Ok(SweepParam::Dr),
        "dt" => Ok(SweepParam::Dt),
        "Lmax" | "lmax" => Ok(SweepParam::LMax),
        "Lb" | "lb" => Ok(SweepParam::LB),
        "eps" => Ok(SweepParam::Eps),
        "alpha" => Ok(SweepParam::Alpha),
        other => Err(Error::Config(format!(
            "unknown sweep parameter '{other}'; expected dr, dt, Lmax, Lb, eps, or alpha"
        ))),
    }
}

fn as_count(label: &str, v: f64) -> Result<usize> {
    if v.fract() != 0.0 || !(v >= 1.0) || v > 1e6 {
        return Err(Error::Config(format!("{label} must be a small positive integer, got {v}")));
    }
    Ok(v as usize)
}

/// One observable per sweep value: total ionization probability for the
/// discretization parameters, the peak-kick response for the kick
/// parameters. Each value runs from scratch; nothing is shared, so a
/// pathological setting cannot poison its neighbors.
fn sweep_observable(cfg: &RunConfig, param: SweepParam, v: f64) -> Result<f64> {
    let mut c = cfg.clone();
    match param {
        SweepParam::Dr => {
            if !(v > 0.0) {
                return Err(Error::Config(format!("dr must be positive, got {v}")));
            }
            c.dr = v;
        }
        SweepParam::Dt => {
            if !(v > 0.0) {
                return Err(Error::Config(format!("dt must be positive, got {v}")));
            }
            c.dt = v;
        }
        SweepParam::LMax => {
            c.l_max = as_count("Lmax", v)?;
            if c.l_b > c.l_max {
                c.l_b = c.l_max;
            }
        }
        SweepParam::LB => {
            let lb = as_count("Lb", v)?;
            if lb > c.l_max {
                return Err(Error::Config(format!(
                    "Lb = {lb} exceeds the propagation cutoff {}",
                    c.l_max
                )));
            }
            c.l_b = lb;
        }
        SweepParam::Eps => {
            if !(v > 0.0) {
                return Err(Error::Config(format!("eps must be positive, got {v}")));
            }
            c.set_epsilon(v);
        }
        SweepParam::Alpha => {
            if !v.is_finite() || v == 0.0 {
                return Err(Error::Config(format!("alpha must be finite and nonzero, got {v}")));
            }
            c.alpha = v;
        }
    }
    let ctx = c.scan_context()?;
    match param {
        SweepParam::Dr | SweepParam::Dt | SweepParam::LMax | SweepParam::LB => {
            Ok(ctx.baseline(c.peak_field)?.probability)
        }
        SweepParam::Eps | SweepParam::Alpha => {
            let tau = c.base_pulse()?.field_peak_time();
            Ok(ctx.delta_p(c.peak_field, tau)?.delta)
        }
    }
}

fn cmd_converge(cfg: &RunConfig, parameter: &str, values: &str) -> Result<i32> {
    let dir = out_dir(cfg)?;
    let param = parse_param(parameter)?;
    let values = parse_number_list("values", values)?;
    if values.is_empty() {
        return Err(Error::Config("values list is empty".into()));
    }
    let ascending = values.windows(2).all(|w| w[1] > w[0]);
    let descending = values.windows(2).all(|w| w[1] < w[0]);
    if !(ascending || descending) {
        return Err(Error::Config("values must be strictly monotone".into()));
    }

    let table: Vec<(f64, Result<f64>)> =
        values.iter().map(|&v| (v, sweep_observable(cfg, param, v))).collect();

    write_file(&dir.join("converge.csv"), |w| {
        writeln!(w, "value,observable,rel_change")?;
        let mut prev: Option<f64> = None;
        for (v, res) in &table {
            if let Ok(obs) = res {
                let rel = prev.map(|p| ((obs - p) / p).abs());
                writeln!(
                    w,
                    "{},{},{}",
                    fmt_full(*v),
                    fmt_full(*obs),
                    rel.map(fmt_full).unwrap_or_default()
                )?;
                prev = Some(*obs);
            }
        }
        Ok(())
    })?;
    write_file(&dir.join("converge.meta"), |w| {
        writeln!(w, "fingerprint = {}", cfg.fingerprint())?;
        writeln!(w, "parameter = {parameter}")?;
        for (v, res) in &table {
            if let Err(e) = res {
                writeln!(w, "value_error = {}: {e}", fmt_full(*v))?;
            }
        }
        Ok(())
    })?;

    match table.iter().find(|(_, r)| r.is_ok()) {
        Some(_) => Ok(0),
        None => match table.into_iter().next() {
            Some((_, Err(e))) => Err(e),
            _ => unreachable!("values is nonempty"),
        },
    }
}
