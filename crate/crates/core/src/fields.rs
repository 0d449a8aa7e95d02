//! Driving-field waveforms: an N-cycle sin² pulse defined through its
//! vector potential, plus an optional narrow Gaussian probe kick added to
//! the electric field. Everything is in atomic units and all fields are
//! exactly zero outside the pulse window [0, T₁].

use crate::numerics::golden_max;
use crate::{Error, Result};

/// Gaussian probe kick added to the electric field:
/// δE(t) = (α/ε)·exp(−(t−τ)²/ε²), time integral α√π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    /// Kick center τ (a.u. time).
    pub tau: f64,
    /// Area scale α; the kick integrates to α√π, and α may carry either sign.
    pub alpha: f64,
    /// Width ε (a.u. time).
    pub epsilon: f64,
}

/// Pulse defined by the vector potential
/// A(t) = −(E₀/ω)·sin²(πt/T₁)·sin(ωt) on [0, T₁], with T₁ = N·2π/ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Peak field strength E₀ (a.u.).
    pub peak_field: f64,
    /// Carrier frequency ω (a.u.).
    pub omega: f64,
    /// Number of optical cycles N.
    pub n_cycles: u32,
    /// Optional probe kick.
    pub signal: Option<SignalSpec>,
}

impl PulseSpec {
    pub fn new(peak_field: f64, omega: f64, n_cycles: u32) -> Result<Self> {
        let p = Self { peak_field, omega, n_cycles, signal: None };
        p.validate()?;
        Ok(p)
    }

    /// Attach a probe kick. The center must lie strictly inside the pulse.
    pub fn with_signal(mut self, tau: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        self.signal = Some(SignalSpec { tau, alpha, epsilon });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_field > 0.0) {
            return Err(Error::InvalidPulse(format!(
                "peak_field must be positive, got {}",
                self.peak_field
            )));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidPulse(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.n_cycles < 1 {
            return Err(Error::InvalidPulse("n_cycles must be at least 1".into()));
        }
        if let Some(s) = self.signal {
            let t1 = self.duration();
            if !(s.tau > 0.0 && s.tau < t1) {
                return Err(Error::InvalidPulse(format!(
                    "signal center {} outside pulse window (0, {t1})",
                    s.tau
                )));
            }
            if !(s.epsilon > 0.0) {
                return Err(Error::InvalidPulse(format!(
                    "signal width must be positive, got {}",
                    s.epsilon
                )));
            }
            if s.alpha == 0.0 || !s.alpha.is_finite() {
                return Err(Error::InvalidPulse("signal area scale must be nonzero".into()));
            }
        }
        Ok(())
    }

    /// Optical period T = 2π/ω.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Pulse duration T₁ = N·T.
    pub fn duration(&self) -> f64 {
        self.n_cycles as f64 * self.period()
    }

    /// A(t); exactly zero at and outside the window edges.
    pub fn vector_potential(&self, t: f64) -> f64 {
        let t1 = self.duration();
        if t <= 0.0 || t >= t1 {
            return 0.0;
        }
        let env = (std::f64::consts::PI * t / t1).sin();
        -(self.peak_field / self.omega) * env * env * (self.omega * t).sin()
    }

    /// E(t) = −dA/dt from the closed-form derivative, never finite
    /// differences: downstream delay extraction resolves field asymmetries
    /// far below any sensible difference step.
    pub fn fundamental_field(&self, t: f64) -> f64 {
        let t1 = self.duration();
        if t <= 0.0 || t >= t1 {
            return 0.0;
        }
        let pi = std::f64::consts::PI;
        let env = (pi * t / t1).sin();
        let f = env * env;
        let fp = (pi / t1) * (2.0 * pi * t / t1).sin();
        let (s, c) = (self.omega * t).sin_cos();
        (self.peak_field / self.omega) * (fp * s + f * self.omega * c)
    }

    /// Probe kick field. Errors when no kick is configured.
    pub fn signal_field(&self, t: f64) -> Result<f64> {
        let s = self.signal.ok_or(Error::NoSignal)?;
        let t1 = self.duration();
        if t <= 0.0 || t >= t1 {
            return Ok(0.0);
        }
        let u = (t - s.tau) / s.epsilon;
        Ok(s.alpha / s.epsilon * (-u * u).exp())
    }

    /// Time integral of the probe kick, α√π. First-variation estimates
    /// must divide by this, not by α.
    pub fn signal_area(&self) -> Result<f64> {
        let s = self.signal.ok_or(Error::NoSignal)?;
        Ok(s.alpha * std::f64::consts::PI.sqrt())
    }

    /// Fundamental plus kick (when present). This is the field the
    /// propagator sees.
    pub fn total_field(&self, t: f64) -> f64 {
        let mut e = self.fundamental_field(t);
        if self.signal.is_some() {
            e += self.signal_field(t).expect("signal presence already checked");
        }
        e
    }

    /// Time of the global maximum of |E(t)| on (0, T₁), ignoring any kick.
    /// Dense scan to bracket, then golden-section refinement to 1e-6 a.u.
    pub fn field_peak_time(&self) -> f64 {
        let t1 = self.duration();
        let m = 8192 * self.n_cycles as usize;
        let mut best_i = 1;
        let mut best = 0.0f64;
        for i in 1..m {
            let v = self.fundamental_field(i as f64 * t1 / m as f64).abs();
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let lo = (best_i as f64 - 1.0) * t1 / m as f64;
        let hi = (best_i as f64 + 1.0) * t1 / m as f64;
        golden_max(|t| self.fundamental_field(t).abs(), lo, hi, 1e-8)
    }
}

/// Keldysh adiabaticity parameter γ = ω√(2I)/E₀.
pub fn keldysh_gamma(omega: f64, peak_field: f64, ionization_potential: f64) -> Result<f64> {
    if !(omega > 0.0 && peak_field > 0.0 && ionization_potential > 0.0) {
        return Err(Error::Domain(format!(
            "keldysh_gamma needs positive arguments, got ({omega}, {peak_field}, {ionization_potential})"
        )));
    }
    Ok(omega * (2.0 * ionization_potential).sqrt() / peak_field)
}
