//! Delta-kick ionization scans: the first variation of the ionization
//! probability with respect to the driving field, measured by running the
//! full propagation with and without a narrow Gaussian probe, plus the
//! contour and delay analysis applied to the resulting (E0, tau) tables.

use crate::atom::{bound_states, BoundProjector, Potential, RadialGrid, WaveFunction};
use crate::error::{Error, Result};
use crate::fields::PulseSpec;
use crate::numerics::{fmt_full, parabolic_vertex, simpson};
use crate::propagator::{PropagationPlan, Propagator};
use crate::ATTOSECONDS_PER_AU;
use rayon::prelude::*;
use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::Write;

/// Everything a scan run shares: the atom, the numerical box, the kick
/// shape, and the run provenance fingerprint.
pub struct ScanParams {
    pub potential: Potential,
    pub grid: RadialGrid,
    pub l_max: usize,
    pub dt: f64,
    pub l_b: usize,
    pub omega: f64,
    pub n_cycles: u32,
    pub alpha: f64,
    pub epsilon: f64,
    pub fingerprint: String,
}

/// Prepared machinery for a family of runs sharing all numerical
/// parameters: propagator, bound-space projector, and the initial state
/// (lowest s bound state of the potential).
pub struct ScanContext {
    params: ScanParams,
    prop: Propagator,
    proj: BoundProjector,
    psi0: WaveFunction,
}

/// One propagation reduced to what the scan keeps.
#[derive(Clone, Copy, Debug)]
pub struct RunResult {
    pub probability: f64,
    /// Outer-region population crossed the reflection sentinel; the value
    /// is reported but box-size artifacts may contaminate it.
    pub flagged: bool,
}

/// A kicked/baseline pair reduced to the probability difference.
#[derive(Clone, Copy, Debug)]
pub struct DeltaP {
    pub delta: f64,
    pub baseline: f64,
    pub kicked_flagged: bool,
    pub baseline_flagged: bool,
}

impl ScanContext {
    pub fn new(params: ScanParams) -> Result<Self> {
        if !(params.alpha.is_finite() && params.epsilon > 0.0) {
            return Err(Error::Domain(
                "kick parameters must be finite, epsilon positive".into(),
            ));
        }
        let plan = PropagationPlan::new(params.grid, params.l_max, params.dt)?;
        let prop = Propagator::new(plan, &params.potential);
        let proj = BoundProjector::build(params.grid, &params.potential, params.l_b);
        let ground = bound_states(&params.grid, &params.potential, 0, 1);
        let g = ground
            .first()
            .ok_or_else(|| Error::Domain("potential binds no s state on this grid".into()))?;
        let psi0 = WaveFunction::from_real_channel(params.grid, params.l_max, 0, &g.vector)?;
        Ok(Self { params, prop, proj, psi0 })
    }

    pub fn params(&self) -> &ScanParams {
        &self.params
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    pub fn projector(&self) -> &BoundProjector {
        &self.proj
    }

    pub fn initial_state(&self) -> &WaveFunction {
        &self.psi0
    }

    /// The kick-free driving pulse at peak field `e0`.
    pub fn pulse(&self, e0: f64) -> Result<PulseSpec> {
        PulseSpec::new(e0, self.params.omega, self.params.n_cycles)
    }

    /// The same pulse with the probe kick centered at `tau`. A zero kick
    /// amplitude degenerates to the kick-free pulse so that the difference
    /// of the two runs is exactly zero.
    pub fn kicked_pulse(&self, e0: f64, tau: f64) -> Result<PulseSpec> {
        let base = self.pulse(e0)?;
        if self.params.alpha == 0.0 {
            return Ok(base);
        }
        base.with_signal(tau, self.params.alpha, self.params.epsilon)
    }

    /// Propagate the ground state through `pulse` and project out the
    /// surviving bound part.
    pub fn ionization_run(&self, pulse: &PulseSpec) -> Result<RunResult> {
        let out = self.prop.propagate(&self.psi0, pulse)?;
        let probability = self.proj.ionization_probability(&out.psi)?;
        Ok(RunResult { probability, flagged: out.reflection_flagged })
    }

    pub fn baseline(&self, e0: f64) -> Result<RunResult> {
        self.ionization_run(&self.pulse(e0)?)
    }

    pub fn kicked(&self, e0: f64, tau: f64) -> Result<RunResult> {
        self.ionization_run(&self.kicked_pulse(e0, tau)?)
    }

    /// First variation of the ionization probability at one (E0, tau)
    /// cell: a kicked run minus a fresh baseline run.
    pub fn delta_p(&self, e0: f64, tau: f64) -> Result<DeltaP> {
        let base = self.baseline(e0)?;
        let kicked = self.kicked(e0, tau)?;
        Ok(DeltaP {
            delta: kicked.probability - base.probability,
            baseline: base.probability,
            kicked_flagged: kicked.flagged,
            baseline_flagged: base.flagged,
        })
    }
}

/// Probability difference rescaled by the true kick area so it estimates
/// the functional derivative of the ionization probability with respect
/// to the field at the kick center.
pub fn functional_derivative_estimate(delta_p: f64, alpha: f64) -> f64 {
    assert!(alpha != 0.0, "kick amplitude must be nonzero");
    delta_p / (alpha * PI.sqrt())
}

/// Integrated instantaneous rate over one pulse: composite quadrature of
/// W(E(t)) dt across the full pulse support, including the probe kick
/// when the pulse carries one.
pub fn instantaneous_probability<F: Fn(f64) -> f64>(
    rate: F,
    pulse: &PulseSpec,
    n_quad: usize,
) -> f64 {
    assert!(n_quad >= 100, "quadrature needs at least 100 panels");
    simpson(|t| rate(pulse.total_field(t)), 0.0, pulse.duration(), n_quad)
}

/// One unit of scan work: a baseline run (`tau_index` = None) or a kicked
/// run at a grid cell. `outcome` keeps the raw probability so that resumed
/// and fresh scans assemble identical tables.
#[derive(Clone, Debug)]
pub struct JobOutcome {
    pub e0_index: usize,
    pub tau_index: Option<usize>,
    pub outcome: std::result::Result<RunResult, String>,
}

/// A run that failed inside a scan, kept with its cell coordinates.
/// `tau_index` = None marks a failed baseline for that row.
#[derive(Clone, Debug)]
pub struct CellFailure {
    pub e0_index: usize,
    pub tau_index: Option<usize>,
    pub message: String,
}

/// Rectangular table of probability differences over (E0, tau), with the
/// per-row baselines, the kick parameters that produced it, and the
/// configuration fingerprint for provenance. Failed cells stay `None` and
/// are listed in `failures`; cells whose runs tripped the reflection
/// sentinel are listed in the flag vectors but keep their values.
#[derive(Clone, Debug)]
pub struct ScanResult {
    pub e0_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    /// rows = E0, cols = tau
    pub delta_p: Vec<Vec<Option<f64>>>,
    pub baseline_p: Vec<Option<f64>>,
    pub alpha: f64,
    pub epsilon: f64,
    pub fingerprint: String,
    pub failures: Vec<CellFailure>,
    pub flagged_cells: Vec<(usize, usize)>,
    pub flagged_baselines: Vec<usize>,
}

impl ScanResult {
    /// Table shape and value sanity: dimensions match the axes, present
    /// entries are finite, baselines are probabilities.
    pub fn validate(&self) -> Result<()> {
        if self.delta_p.len() != self.e0_values.len()
            || self.baseline_p.len() != self.e0_values.len()
        {
            return Err(Error::Domain("scan table row count mismatch".into()));
        }
        for (i, row) in self.delta_p.iter().enumerate() {
            if row.len() != self.tau_values.len() {
                return Err(Error::Domain(format!("scan table row {i} length mismatch")));
            }
            for v in row.iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::Domain(format!("non-finite entry in row {i}")));
                }
            }
            if let Some(b) = self.baseline_p[i] {
                if !(0.0..=1.0).contains(&b) {
                    return Err(Error::Domain(format!("baseline outside [0,1] in row {i}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.baseline_p.iter().all(Option::is_some)
            && self.delta_p.iter().all(|r| r.iter().all(Option::is_some))
    }

    /// Long-format table, one line per completed cell. Full-precision
    /// decimals so equal tables serialize to equal bytes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "E0_au,tau_au,deltaP,baselineP")?;
        for (i, row) in self.delta_p.iter().enumerate() {
            let Some(base) = self.baseline_p[i] else { continue };
            for (j, cell) in row.iter().enumerate() {
                let Some(dp) = cell else { continue };
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_full(self.e0_values[i]),
                    fmt_full(self.tau_values[j]),
                    fmt_full(*dp),
                    fmt_full(base),
                )?;
            }
        }
        Ok(())
    }

    /// Sidecar with provenance and everything the CSV leaves out:
    /// kick parameters, failures, and reflection flags.
    pub fn write_meta<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "fingerprint: {}", self.fingerprint)?;
        writeln!(w, "alpha: {}", fmt_full(self.alpha))?;
        writeln!(w, "epsilon: {}", fmt_full(self.epsilon))?;
        writeln!(w, "rows: {}", self.e0_values.len())?;
        writeln!(w, "cols: {}", self.tau_values.len())?;
        writeln!(w, "complete: {}", self.is_complete())?;
        for f in &self.failures {
            match f.tau_index {
                Some(j) => writeln!(
                    w,
                    "failed_cell: e0={} tau={} {}",
                    fmt_full(self.e0_values[f.e0_index]),
                    fmt_full(self.tau_values[j]),
                    f.message
                )?,
                None => writeln!(
                    w,
                    "failed_baseline: e0={} {}",
                    fmt_full(self.e0_values[f.e0_index]),
                    f.message
                )?,
            }
        }
        for &(i, j) in &self.flagged_cells {
            writeln!(
                w,
                "reflection_flag: e0={} tau={}",
                fmt_full(self.e0_values[i]),
                fmt_full(self.tau_values[j])
            )?;
        }
        for &i in &self.flagged_baselines {
            writeln!(w, "reflection_flag_baseline: e0={}", fmt_full(self.e0_values[i]))?;
        }
        Ok(())
    }
}

fn check_axis(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Domain(format!("{name} axis is empty")));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!("{name} axis must be strictly ascending")));
    }
    Ok(())
}

/// Full scan over the (E0, tau) grid: one baseline run per E0 row plus one
/// kicked run per cell, all independent jobs executed on the ambient
/// thread pool and merged by index, so the table is identical for any
/// worker count. Failed runs are recorded per cell and do not abort the
/// remaining cells.
pub fn scan(ctx: &ScanContext, e0_values: &[f64], tau_values: &[f64]) -> Result<ScanResult> {
    scan_resumable(ctx, e0_values, tau_values, &[], |_| {})
}

/// `scan` with resume support: `seed` supplies outcomes already known from
/// a previous partial run (matched by index, trusted as-is), and `on_done`
/// is called for every newly computed outcome, in completion order, so the
/// caller can journal progress. Completion order varies with the worker
/// count; the assembled table does not.
pub fn scan_resumable(
    ctx: &ScanContext,
    e0_values: &[f64],
    tau_values: &[f64],
    seed: &[JobOutcome],
    on_done: impl Fn(&JobOutcome) + Sync,
) -> Result<ScanResult> {
    check_axis("E0", e0_values)?;
    check_axis("tau", tau_values)?;

    let n_rows = e0_values.len();
    let n_cols = tau_values.len();
    let mut known: Vec<Vec<Option<std::result::Result<RunResult, String>>>> =
        vec![vec![None; n_cols + 1]; n_rows];
    for s in seed {
        let col = match s.tau_index {
            None => n_cols,
            Some(j) if j < n_cols => j,
            Some(j) => {
                return Err(Error::Domain(format!("seed tau index {j} out of range")));
            }
        };
        if s.e0_index >= n_rows {
            return Err(Error::Domain(format!("seed E0 index {} out of range", s.e0_index)));
        }
        known[s.e0_index][col] = Some(s.outcome.clone());
    }

    let seeded: HashSet<(usize, usize)> = seed
        .iter()
        .map(|s| (s.e0_index, s.tau_index.unwrap_or(n_cols)))
        .collect();
    let mut jobs: Vec<(usize, Option<usize>)> = Vec::new();
    for i in 0..n_rows {
        if !seeded.contains(&(i, n_cols)) {
            jobs.push((i, None));
        }
        for j in 0..n_cols {
            if !seeded.contains(&(i, j)) {
                jobs.push((i, Some(j)));
            }
        }
    }

    let computed: Vec<JobOutcome> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let run = match j {
                None => ctx.baseline(e0_values[i]),
                Some(jj) => ctx.kicked(e0_values[i], tau_values[jj]),
            };
            let out = JobOutcome {
                e0_index: i,
                tau_index: j,
                outcome: run.map_err(|e| e.to_string()),
            };
            on_done(&out);
            out
        })
        .collect();
    for o in computed {
        let col = o.tau_index.unwrap_or(n_cols);
        known[o.e0_index][col] = Some(o.outcome);
    }

    let mut result = ScanResult {
        e0_values: e0_values.to_vec(),
        tau_values: tau_values.to_vec(),
        delta_p: vec![vec![None; n_cols]; n_rows],
        baseline_p: vec![None; n_rows],
        alpha: ctx.params.alpha,
        epsilon: ctx.params.epsilon,
        fingerprint: ctx.params.fingerprint.clone(),
        failures: Vec::new(),
        flagged_cells: Vec::new(),
        flagged_baselines: Vec::new(),
    };

    for i in 0..n_rows {
        let base = match &known[i][n_cols] {
            Some(Ok(r)) => {
                result.baseline_p[i] = Some(r.probability);
                if r.flagged {
                    result.flagged_baselines.push(i);
                }
                Some(r.probability)
            }
            Some(Err(msg)) => {
                result.failures.push(CellFailure {
                    e0_index: i,
                    tau_index: None,
                    message: msg.clone(),
                });
                None
            }
            None => unreachable!("baseline job neither seeded nor computed"),
        };
        for j in 0..n_cols {
            match &known[i][j] {
                Some(Ok(r)) => {
                    if let Some(b) = base {
                        result.delta_p[i][j] = Some(r.probability - b);
                    }
                    if r.flagged {
                        result.flagged_cells.push((i, j));
                    }
                }
                Some(Err(msg)) => result.failures.push(CellFailure {
                    e0_index: i,
                    tau_index: Some(j),
                    message: msg.clone(),
                }),
                None => unreachable!("cell job neither seeded nor computed"),
            }
        }
    }

    result.validate()?;
    Ok(result)
}

/// Leftmost and rightmost linear-interpolated crossings of `level` by the
/// row. The row must cross exactly twice: once up, once down.
pub fn contour_crossings(tau: &[f64], row: &[f64], level: f64) -> Result<(f64, f64)> {
    assert_eq!(tau.len(), row.len(), "axis and row lengths differ");
    if tau.len() < 2 {
        return Err(Error::LevelOutsideRow);
    }
    let mut crossings: Vec<f64> = Vec::new();
    for k in 0..row.len() - 1 {
        let d0 = row[k] - level;
        let d1 = row[k + 1] - level;
        if (d0 < 0.0) != (d1 < 0.0) {
            crossings.push(tau[k] + (tau[k + 1] - tau[k]) * d0 / (d0 - d1));
        }
    }
    match crossings.len() {
        2 => Ok((crossings[0], crossings[1])),
        0 | 1 => Err(Error::LevelOutsideRow),
        _ => Err(Error::NonMonotoneFlanks),
    }
}

/// Contour midpoint at one relative level of one row.
#[derive(Clone, Copy, Debug)]
pub struct LevelDelay {
    pub level: f64,
    pub tau_mid: f64,
    pub delay_au: f64,
    pub delay_as: f64,
}

/// Peak and contour analysis of one E0 row.
#[derive(Clone, Debug)]
pub struct RowReport {
    pub e0: f64,
    /// Parabolic-refined location of the row extremum.
    pub peak_tau: f64,
    pub peak_delay_au: f64,
    pub peak_delay_as: f64,
    pub levels: Vec<LevelDelay>,
}

/// Delay analysis of a scan table: for each E0, where the response peaks
/// and where its contour midpoints sit relative to the field maximum.
/// Every delay carries the tau-grid step as the uncertainty floor.
#[derive(Clone, Debug)]
pub struct DelayReport {
    pub field_peak_time: f64,
    pub tau_step: f64,
    pub rows: Vec<RowReport>,
    /// Rows or levels that could not be analyzed, with the reason.
    pub errors: Vec<String>,
    pub fingerprint: String,
}

impl DelayReport {
    /// One line per (E0, level); the parabolic peak is written as the
    /// degenerate level 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "E0_au,level,tau_mid_au,delay_au,delay_as,tau_step_au")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_full(row.e0),
                fmt_full(1.0),
                fmt_full(row.peak_tau),
                fmt_full(row.peak_delay_au),
                fmt_full(row.peak_delay_as),
                fmt_full(self.tau_step),
            )?;
            for l in &row.levels {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fmt_full(row.e0),
                    fmt_full(l.level),
                    fmt_full(l.tau_mid),
                    fmt_full(l.delay_au),
                    fmt_full(l.delay_as),
                    fmt_full(self.tau_step),
                )?;
            }
        }
        Ok(())
    }
}

/// Contour and peak delays of a completed scan relative to the field
/// maximum of `pulse`. Rows are restricted to the window of half a field
/// period centered on the peak, oriented so the extremum is a maximum
/// (the raw response changes sign with the kick polarity), and levels are
/// taken relative to the window maximum. Rows that cannot be analyzed are
/// reported in `errors` instead of aborting the report.
pub fn delay_report(scan: &ScanResult, levels: &[f64], pulse: &PulseSpec) -> DelayReport {
    let field_peak = pulse.field_peak_time();
    let quarter = 0.25 * pulse.period();
    let mut report = DelayReport {
        field_peak_time: field_peak,
        tau_step: 0.0,
        rows: Vec::new(),
        errors: Vec::new(),
        fingerprint: scan.fingerprint.clone(),
    };

    let lo = field_peak - quarter;
    let hi = field_peak + quarter;
    let idx: Vec<usize> = (0..scan.tau_values.len())
        .filter(|&j| scan.tau_values[j] >= lo && scan.tau_values[j] <= hi)
        .collect();
    if idx.len() < 3 {
        report.errors.push("fewer than 3 tau samples in the analysis window".into());
        return report;
    }
    let tau: Vec<f64> = idx.iter().map(|&j| scan.tau_values[j]).collect();
    report.tau_step = tau
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);

    for (i, &e0) in scan.e0_values.iter().enumerate() {
        let mut vals = Vec::with_capacity(idx.len());
        let mut complete = true;
        for &j in &idx {
            match scan.delta_p[i][j] {
                Some(v) => vals.push(v),
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if !complete {
            report.errors.push(format!("row e0={e0}: incomplete in the analysis window"));
            continue;
        }

        let mut kmax = 0;
        for (k, v) in vals.iter().enumerate() {
            if v.abs() > vals[kmax].abs() {
                kmax = k;
            }
        }
        if vals[kmax].abs() == 0.0 {
            report.errors.push(format!("row e0={e0}: identically zero in the window"));
            continue;
        }
        let sign = vals[kmax].signum();
        let oriented: Vec<f64> = vals.iter().map(|v| v * sign).collect();

        if kmax == 0 || kmax + 1 == oriented.len() {
            report.errors.push(format!("row e0={e0}: extremum at the window edge"));
            continue;
        }
        let peak_tau = parabolic_vertex(
            tau[kmax],
            0.5 * (tau[kmax + 1] - tau[kmax - 1]),
            oriented[kmax - 1],
            oriented[kmax],
            oriented[kmax + 1],
        );
        let peak_delay = peak_tau - field_peak;
        let mut row = RowReport {
            e0,
            peak_tau,
            peak_delay_au: peak_delay,
            peak_delay_as: peak_delay * ATTOSECONDS_PER_AU,
            levels: Vec::new(),
        };

        let top = oriented[kmax];
        for &rel in levels {
            match contour_crossings(&tau, &oriented, rel * top) {
                Ok((l, r)) => {
                    let mid = 0.5 * (l + r);
                    let d = mid - field_peak;
                    row.levels.push(LevelDelay {
                        level: rel,
                        tau_mid: mid,
                        delay_au: d,
                        delay_as: d * ATTOSECONDS_PER_AU,
                    });
                }
                Err(e) => report.errors.push(format!("row e0={e0} level {rel}: {e}")),
            }
        }
        report.rows.push(row);
    }
    report
}
