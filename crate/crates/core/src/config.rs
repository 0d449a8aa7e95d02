//! Run configuration: a flat dotted-key text format with line-level
//! diagnostics, production defaults, derived quantities (kick width, tau
//! grid), and a content fingerprint that every artifact embeds.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, blank lines
//! ignored. Values are numbers, bare words, or comma-separated number
//! lists. Unknown and duplicate keys are errors.

use crate::atom::{calibrate_yukawa, Potential, RadialGrid};
use crate::error::{Error, Result};
use crate::fields::PulseSpec;
use crate::numerics::fmt_full;
use crate::rates::{ScanContext, ScanParams};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Binding potential selection. A Yukawa well without an explicit
/// amplitude is calibrated on the run grid so its ground state sits at
/// `-target_ip`.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialChoice {
    Coulomb,
    Yukawa { screening: f64, amplitude: Option<f64>, target_ip: f64 },
}

/// Fully validated run configuration. Construct with [`RunConfig::parse`];
/// field values not present in the text take the production defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub omega: f64,
    pub n_cycles: u32,
    pub peak_field: f64,
    pub potential: PotentialChoice,
    pub dr: f64,
    pub r_max: f64,
    pub dt: f64,
    pub l_max: usize,
    pub dt_fine_rule: String,
    pub l_b: usize,
    pub alpha: f64,
    epsilon: Option<f64>,
    pub e0_values: Vec<f64>,
    tau_list: Option<Vec<f64>>,
    tau_count: usize,
    tau_half_span: Option<f64>,
    pub levels: Vec<f64>,
    pub workers: usize,
    pub out_dir: String,
    fingerprint: String,
}

struct RawEntry {
    line: usize,
    value: String,
    used: bool,
}

struct Raw(BTreeMap<String, RawEntry>);

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let body = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Config(format!("line {line}: expected 'key = value'")));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config(format!("line {line}: empty key or value")));
            }
            if let Some(prev) = map.get(&key) {
                let RawEntry { line: first, .. } = prev;
                return Err(Error::Config(format!(
                    "line {line}: duplicate key '{key}' (first set on line {first})"
                )));
            }
            map.insert(key, RawEntry { line, value, used: false });
        }
        Ok(Self(map))
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.0.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| {
                Error::Config(format!("line {line}: key '{key}': invalid number '{v}'"))
            }),
        }
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: key '{key}': invalid number '{v}'"))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| {
                Error::Config(format!("line {line}: key '{key}': invalid integer '{v}'"))
            }),
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        match self.take(key) {
            None => default.to_string(),
            Some((_, v)) => v,
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        Error::Config(format!(
                            "line {line}: key '{key}': invalid number '{}' in list",
                            s.trim()
                        ))
                    })
                })
                .collect(),
        }
    }

    fn list_opt(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        if self.0.contains_key(key) {
            Ok(Some(self.list(key, &[])?))
        } else {
            Ok(None)
        }
    }

    fn finish(self) -> Result<()> {
        for (key, e) in &self.0 {
            if !e.used {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", e.line)));
            }
        }
        Ok(())
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

fn ascending(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

impl RunConfig {
    /// Parse and validate a configuration text. Every diagnostic carries
    /// the line or key it refers to; nothing is computed before the whole
    /// text validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Raw::parse(text)?;

        let omega = raw.f64("pulse.omega", 0.02)?;
        let n_cycles = raw.usize("pulse.cycles", 1)? as u32;
        let peak_field = raw.f64("pulse.peak_field", 0.06)?;

        let kind_entry = raw.take("potential.kind");
        let screening = raw.f64_opt("potential.screening_length")?;
        let amplitude = raw.f64_opt("potential.amplitude")?;
        let target_ip = raw.f64("potential.target_ip", 0.5)?;
        let kind = kind_entry.as_ref().map(|(_, v)| v.as_str()).unwrap_or("coulomb");
        let potential = match kind {
            "coulomb" => {
                ensure(
                    screening.is_none() && amplitude.is_none(),
                    "potential.screening_length/amplitude require potential.kind = yukawa",
                )?;
                PotentialChoice::Coulomb
            }
            "yukawa" => {
                let screening = screening.ok_or_else(|| {
                    Error::Config("potential.kind = yukawa requires potential.screening_length".into())
                })?;
                ensure(screening > 0.0, "potential.screening_length must be positive")?;
                if let Some(a) = amplitude {
                    ensure(a > 0.0, "potential.amplitude must be positive")?;
                }
                ensure(target_ip > 0.0, "potential.target_ip must be positive")?;
                PotentialChoice::Yukawa { screening, amplitude, target_ip }
            }
            other => {
                let line = kind_entry.as_ref().map(|(l, _)| *l).unwrap_or(0);
                return Err(Error::Config(format!(
                    "line {line}: potential.kind must be 'coulomb' or 'yukawa', got '{other}'"
                )));
            }
        };

        let dr = raw.f64("grid.dr", 0.05)?;
        let r_max = raw.f64("grid.r_max", 700.0)?;
        let dt = raw.f64("propagation.dt", 0.02)?;
        let l_max = raw.usize("propagation.l_max", 70)?;
        let dt_fine_rule = raw.string("propagation.dt_fine_rule", "epsilon/10");
        let l_b = raw.usize("projector.l_b", 12)?;
        let alpha = raw.f64("kick.alpha", 0.001)?;
        let epsilon = raw.f64_opt("kick.epsilon")?;
        let e0_values = raw.list("scan.e0", &[0.03, 0.04, 0.05, 0.06, 0.07])?;
        let tau_list = raw.list_opt("scan.tau")?;
        let had_tau_window =
            raw.0.contains_key("scan.tau_count") || raw.0.contains_key("scan.tau_half_span");
        let tau_count = raw.usize("scan.tau_count", 9)?;
        let tau_half_span = raw.f64_opt("scan.tau_half_span")?;
        let levels = raw.list("analysis.levels", &[0.5, 0.8])?;
        let workers = raw.usize("run.workers", 1)?;
        let out_dir = raw.string("run.out_dir", "out");
        raw.finish()?;

        ensure(omega > 0.0 && omega.is_finite(), "pulse.omega must be positive")?;
        ensure(n_cycles >= 1, "pulse.cycles must be at least 1")?;
        ensure(peak_field > 0.0 && peak_field.is_finite(), "pulse.peak_field must be positive")?;
        ensure(dr > 0.0 && dr.is_finite(), "grid.dr must be positive")?;
        ensure(r_max > 10.0 * dr, "grid.r_max must cover at least ten grid steps")?;
        ensure(dt > 0.0 && dt.is_finite(), "propagation.dt must be positive")?;
        ensure(l_max >= 1, "propagation.l_max must be at least 1")?;
        ensure(
            dt_fine_rule == "epsilon/10",
            format!("propagation.dt_fine_rule: unsupported rule '{dt_fine_rule}'"),
        )?;
        ensure(l_b <= l_max, "projector.l_b cannot exceed propagation.l_max")?;
        ensure(alpha.is_finite(), "kick.alpha must be finite")?;
        if let Some(e) = epsilon {
            ensure(e > 0.0 && e.is_finite(), "kick.epsilon must be positive")?;
        }
        ensure(!e0_values.is_empty(), "scan.e0 must list at least one field strength")?;
        ensure(
            ascending(&e0_values) && e0_values[0] > 0.0,
            "scan.e0 must be positive and strictly ascending",
        )?;
        if let Some(taus) = &tau_list {
            ensure(!taus.is_empty(), "scan.tau must list at least one time")?;
            ensure(ascending(taus), "scan.tau must be strictly ascending")?;
            ensure(
                !had_tau_window,
                "scan.tau conflicts with scan.tau_count/scan.tau_half_span; choose one",
            )?;
        }
        ensure(tau_count >= 1, "scan.tau_count must be at least 1")?;
        if let Some(h) = tau_half_span {
            ensure(h > 0.0 && h.is_finite(), "scan.tau_half_span must be positive")?;
        }
        ensure(!levels.is_empty(), "analysis.levels must list at least one level")?;
        ensure(
            levels.iter().all(|l| *l > 0.0 && *l < 1.0),
            "analysis.levels must lie strictly between 0 and 1",
        )?;
        ensure(workers >= 1, "run.workers must be at least 1")?;

        let mut cfg = Self {
            omega,
            n_cycles,
            peak_field,
            potential,
            dr,
            r_max,
            dt,
            l_max,
            dt_fine_rule,
            l_b,
            alpha,
            epsilon,
            e0_values,
            tau_list,
            tau_count,
            tau_half_span,
            levels,
            workers,
            out_dir,
            fingerprint: String::new(),
        };
        // validate the derived pulse and tau grid before fingerprinting
        cfg.base_pulse()?;
        let taus = cfg.tau_values()?;
        ensure(ascending(&taus) || taus.len() == 1, "resolved tau grid is not ascending")?;

        let mut hasher = Sha256::new();
        hasher.update(cfg.canonical_text()?.as_bytes());
        cfg.fingerprint = format!("{:x}", hasher.finalize());
        Ok(cfg)
    }

    /// Carrier period 2π/ω.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Kick width: explicit, or the production default of one
    /// thousandth of the carrier period.
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(self.period() / 1000.0)
    }

    /// Pin the kick width, overriding the period-derived default.
    pub fn set_epsilon(&mut self, epsilon: f64) {
        assert!(epsilon > 0.0, "kick width must be positive");
        self.epsilon = Some(epsilon);
    }

    /// The kick-free driving pulse at the configured base field.
    pub fn base_pulse(&self) -> Result<PulseSpec> {
        PulseSpec::new(self.peak_field, self.omega, self.n_cycles)
    }

    /// The scan's kick-center grid: the explicit list when given,
    /// otherwise `tau_count` points placed symmetrically around the field
    /// maximum, spanning ±`tau_half_span` (default: an eighth of the
    /// carrier period, so the default nine points step by T/32).
    pub fn tau_values(&self) -> Result<Vec<f64>> {
        if let Some(taus) = &self.tau_list {
            return Ok(taus.clone());
        }
        let center = self.base_pulse()?.field_peak_time();
        if self.tau_count == 1 {
            return Ok(vec![center]);
        }
        let half = self.tau_half_span.unwrap_or(self.period() / 8.0);
        let step = 2.0 * half / (self.tau_count - 1) as f64;
        let mid = 0.5 * (self.tau_count - 1) as f64;
        Ok((0..self.tau_count)
            .map(|j| center + (j as f64 - mid) * step)
            .collect())
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        RadialGrid::from_extent(self.dr, self.r_max)
    }

    /// Resolve the binding potential, running the Yukawa ground-state
    /// calibration on the run grid when no explicit amplitude is given.
    pub fn resolve_potential(&self) -> Result<Potential> {
        match &self.potential {
            PotentialChoice::Coulomb => Ok(Potential::Coulomb),
            PotentialChoice::Yukawa { screening, amplitude, target_ip } => {
                let amp = match amplitude {
                    Some(a) => *a,
                    None => calibrate_yukawa(*screening, -target_ip, &self.grid()?)?,
                };
                Potential::yukawa(amp, *screening)
            }
        }
    }

    /// Everything the scan machinery needs, with the potential resolved.
    pub fn scan_params(&self) -> Result<ScanParams> {
        Ok(ScanParams {
            potential: self.resolve_potential()?,
            grid: self.grid()?,
            l_max: self.l_max,
            dt: self.dt,
            l_b: self.l_b,
            omega: self.omega,
            n_cycles: self.n_cycles,
            alpha: self.alpha,
            epsilon: self.epsilon(),
            fingerprint: self.fingerprint.clone(),
        })
    }

    pub fn scan_context(&self) -> Result<ScanContext> {
        ScanContext::new(self.scan_params()?)
    }

    /// Canonical form: every physics-affecting key, resolved and sorted,
    /// in full-precision decimal. Worker count and output paths are
    /// excluded on purpose: they cannot change any computed number, and
    /// artifacts produced with different farming setups must compare
    /// equal. The fingerprint is the SHA-256 of this text.
    pub fn canonical_text(&self) -> Result<String> {
        let mut lines: Vec<String> = Vec::new();
        lines.push(format!("analysis.levels = {}", join_full(&self.levels)));
        lines.push(format!("grid.dr = {}", fmt_full(self.dr)));
        lines.push(format!("grid.r_max = {}", fmt_full(self.r_max)));
        lines.push(format!("kick.alpha = {}", fmt_full(self.alpha)));
        lines.push(format!("kick.epsilon = {}", fmt_full(self.epsilon())));
        match &self.potential {
            PotentialChoice::Coulomb => lines.push("potential.kind = coulomb".into()),
            PotentialChoice::Yukawa { screening, amplitude, target_ip } => {
                lines.push("potential.kind = yukawa".into());
                lines.push(format!("potential.screening_length = {}", fmt_full(*screening)));
                match amplitude {
                    Some(a) => lines.push(format!("potential.amplitude = {}", fmt_full(*a))),
                    None => lines.push(format!("potential.target_ip = {}", fmt_full(*target_ip))),
                }
            }
        }
        lines.push(format!("projector.l_b = {}", self.l_b));
        lines.push(format!("propagation.dt = {}", fmt_full(self.dt)));
        lines.push(format!("propagation.dt_fine_rule = {}", self.dt_fine_rule));
        lines.push(format!("propagation.l_max = {}", self.l_max));
        lines.push(format!("pulse.cycles = {}", self.n_cycles));
        lines.push(format!("pulse.omega = {}", fmt_full(self.omega)));
        lines.push(format!("pulse.peak_field = {}", fmt_full(self.peak_field)));
        lines.push(format!("scan.e0 = {}", join_full(&self.e0_values)));
        lines.push(format!("scan.tau = {}", join_full(&self.tau_values()?)));
        lines.sort();
        let mut text = lines.join("\n");
        text.push('\n');
        Ok(text)
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

fn join_full(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_full(*x)).collect::<Vec<_>>().join(",")
}
