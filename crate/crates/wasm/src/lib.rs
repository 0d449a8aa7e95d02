//! Browser bindings for the demo page: three small models the page can
//! drive interactively. Everything here is a thin sampling layer over the
//! core crate; the numbers are the same ones the command-line tools
//! produce, just returned as plain arrays for canvas plotting.
//!
//! Fallible logic lives in inner methods returning the core error type so
//! it stays testable on the host; the exported wrappers only translate
//! errors at the JavaScript boundary.

use ionrate::adk::{self, AdkParams};
use ionrate::atom::{bound_states, calibrate_yukawa, BoundState, Potential, RadialGrid};
use ionrate::fields::PulseSpec;
use ionrate::rates::instantaneous_probability;
use ionrate::{Error, Result};
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// A driving pulse with an optional probe kick, sampled for plotting.
#[wasm_bindgen]
pub struct PulseModel {
    pulse: PulseSpec,
}

#[wasm_bindgen]
impl PulseModel {
    #[wasm_bindgen(constructor)]
    pub fn new(peak_field: f64, omega: f64, cycles: u32) -> std::result::Result<PulseModel, JsError> {
        Self::build(peak_field, omega, cycles).map_err(js)
    }

    /// Same pulse with a Gaussian probe kick riding on it.
    pub fn with_kick(&self, tau: f64, alpha: f64, epsilon: f64) -> std::result::Result<PulseModel, JsError> {
        self.kicked(tau, alpha, epsilon).map_err(js)
    }

    pub fn duration(&self) -> f64 {
        self.pulse.duration()
    }

    pub fn field_peak_time(&self) -> f64 {
        self.pulse.field_peak_time()
    }

    /// n uniform samples of the electric field over the pulse window,
    /// kick included when one is attached.
    pub fn field(&self, n: usize) -> Vec<f64> {
        self.sample(n, |t| self.pulse.total_field(t))
    }

    /// n uniform samples of the vector potential.
    pub fn vector_potential(&self, n: usize) -> Vec<f64> {
        self.sample(n, |t| self.pulse.vector_potential(t))
    }

    /// The sample times matching `field` and `vector_potential`.
    pub fn times(&self, n: usize) -> Vec<f64> {
        self.sample(n, |t| t)
    }
}

impl PulseModel {
    fn build(peak_field: f64, omega: f64, cycles: u32) -> Result<Self> {
        Ok(Self { pulse: PulseSpec::new(peak_field, omega, cycles)? })
    }

    fn kicked(&self, tau: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        Ok(Self { pulse: self.pulse.with_signal(tau, alpha, epsilon)? })
    }

    fn sample(&self, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = n.max(2);
        let t1 = self.pulse.duration();
        (0..n).map(|k| f(t1 * k as f64 / (n - 1) as f64)).collect()
    }
}

/// Quasistatic tunneling response: the static rate, its pulse integral,
/// and the kick-response row the contour plots are made of.
#[wasm_bindgen]
pub struct ResponseModel {
    params: AdkParams,
    omega: f64,
    cycles: u32,
}

#[wasm_bindgen]
impl ResponseModel {
    #[wasm_bindgen(constructor)]
    pub fn new(
        ionization_potential: f64,
        effective_charge: f64,
        omega: f64,
        cycles: u32,
    ) -> std::result::Result<ResponseModel, JsError> {
        Self::build(ionization_potential, effective_charge, omega, cycles).map_err(js)
    }

    /// Static-field rate W(E).
    pub fn rate(&self, field: f64) -> f64 {
        adk::rate(field, &self.params)
    }

    /// Pulse-integrated probability for a peak field strength.
    pub fn probability(&self, peak_field: f64) -> std::result::Result<f64, JsError> {
        self.probability_inner(peak_field).map_err(js)
    }

    /// Kick response at n interior kick times: the row a contour plot of
    /// the response surface is built from.
    pub fn response_row(
        &self,
        peak_field: f64,
        alpha: f64,
        n: usize,
    ) -> std::result::Result<Vec<f64>, JsError> {
        self.response_row_inner(peak_field, alpha, n).map_err(js)
    }

    /// The kick times matching `response_row`.
    pub fn row_times(&self, n: usize) -> Vec<f64> {
        let t1 = self.cycles as f64 * 2.0 * std::f64::consts::PI / self.omega;
        let n = n.max(3);
        (1..=n).map(|j| t1 * j as f64 / (n + 1) as f64).collect()
    }
}

impl ResponseModel {
    fn build(ip: f64, charge: f64, omega: f64, cycles: u32) -> Result<Self> {
        // validates omega and cycles the same way every pulse does
        PulseSpec::new(1e-3, omega, cycles)?;
        Ok(Self { params: AdkParams::new(ip, charge)?, omega, cycles })
    }

    fn probability_inner(&self, peak_field: f64) -> Result<f64> {
        let pulse = PulseSpec::new(peak_field, self.omega, self.cycles)?;
        let params = self.params;
        Ok(instantaneous_probability(|e| adk::rate(e, &params), &pulse, 2000))
    }

    fn response_row_inner(&self, peak_field: f64, alpha: f64, n: usize) -> Result<Vec<f64>> {
        let pulse = PulseSpec::new(peak_field, self.omega, self.cycles)?;
        let t1 = pulse.duration();
        let n = n.max(3);
        (1..=n)
            .map(|j| {
                let tau = t1 * j as f64 / (n + 1) as f64;
                adk::adk_delta_p(peak_field, tau, alpha, &pulse, &self.params)
            })
            .collect()
    }
}

/// Field-free bound states on a small box, for the level diagram and
/// orbital plots.
#[wasm_bindgen]
pub struct AtomModel {
    grid: RadialGrid,
    potential: Potential,
}

#[wasm_bindgen]
impl AtomModel {
    /// kind is "coulomb" or "yukawa"; a Yukawa well is calibrated so its
    /// ground state sits at -0.5 a.u. on this grid.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, screening: f64, extent: f64) -> std::result::Result<AtomModel, JsError> {
        Self::build(kind, screening, extent).map_err(js)
    }

    /// Well depth actually in use (interesting for calibrated wells).
    pub fn amplitude(&self) -> f64 {
        match self.potential {
            Potential::Coulomb => 1.0,
            Potential::Yukawa { amplitude, .. } => amplitude,
        }
    }

    /// Bound energies of one angular channel, deepest first.
    pub fn energies(&self, ell: usize, count: usize) -> Vec<f64> {
        self.states(ell, count).iter().map(|s| s.energy).collect()
    }

    /// Radial density r -> |u(r)|^2 of one bound state, on `radii()`.
    pub fn orbital(&self, ell: usize, index: usize) -> Vec<f64> {
        let states = self.states(ell, index + 1);
        match states.get(index) {
            Some(s) => s.vector.iter().map(|u| u * u).collect(),
            None => Vec::new(),
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.grid.n_points()).map(|k| self.grid.r(k)).collect()
    }
}

impl AtomModel {
    fn build(kind: &str, screening: f64, extent: f64) -> Result<Self> {
        let grid = RadialGrid::from_extent(0.05, extent)?;
        let potential = match kind {
            "coulomb" => Potential::Coulomb,
            "yukawa" => {
                let amplitude = calibrate_yukawa(screening, -0.5, &grid)?;
                Potential::Yukawa { amplitude, screening }
            }
            other => return Err(Error::Domain(format!("unknown potential kind '{other}'"))),
        };
        Ok(Self { grid, potential })
    }

    fn states(&self, ell: usize, count: usize) -> Vec<BoundState> {
        bound_states(&self.grid, &self.potential, ell, count)
    }
}
