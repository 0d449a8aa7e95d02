use crate::atom::RadialGrid;
use crate::fields::PulseSpec;
use crate::{Error, Result};

/// Propagation parameters: grid reference, channel count, base time step.
/// The refined step inside a kick window is derived per pulse; see
/// [`TimeGrid::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPlan {
    pub grid: RadialGrid,
    pub l_max: usize,
    pub dt: f64,
}

impl PropagationPlan {
    pub fn new(grid: RadialGrid, l_max: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if l_max < 1 {
            return Err(Error::Domain("need at least two angular channels".into()));
        }
        Ok(Self { grid, l_max, dt })
    }
}

/// One step of the time grid: start time and step length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t: f64,
    pub dt: f64,
}

/// Explicit step sequence covering [0, T₁].
///
/// Base steps are uniform with the final one clamped to land exactly on
/// T₁. When a kick is present and the base step cannot resolve it
/// (dt > ε/10), base cells overlapping (τ−8ε, τ+8ε) are subdivided so the
/// effective step there is ≤ ε/10. Cell boundaries of the base grid are
/// preserved, so outside the window the kicked and kick-free sequences
/// coincide exactly.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    pub steps: Vec<Step>,
}

impl TimeGrid {
    pub fn build(pulse: &PulseSpec, dt: f64) -> Self {
        let t1 = pulse.duration();
        let n_full = (t1 / dt - 1e-9).floor() as usize;
        let clamp = t1 - n_full as f64 * dt;
        let n_cells = if clamp < 1e-12 { n_full } else { n_full + 1 };

        // base cells needing subdivision, as an index range
        let refine = pulse.signal.and_then(|s| {
            if dt <= s.epsilon / 10.0 {
                return None;
            }
            let lo = (s.tau - 8.0 * s.epsilon).max(0.0);
            let hi = (s.tau + 8.0 * s.epsilon).min(t1);
            let i_lo = (lo / dt).floor() as usize;
            let i_hi = (((hi / dt).ceil() as usize).max(i_lo + 1)).min(n_cells);
            let sub = (dt / (s.epsilon / 10.0)).ceil() as usize;
            Some((i_lo, i_hi, sub))
        });

        // the step widths are drawn from a handful of exact values (base
        // dt, the final clamp, one subdivision width per tier) so that
        // downstream caches keyed on dt bits stay small
        let mut steps = Vec::with_capacity(n_cells + 64);
        for i in 0..n_cells {
            let a = i as f64 * dt;
            let cell_dt = if i == n_full { clamp } else { dt };
            match refine {
                Some((i_lo, i_hi, sub)) if i >= i_lo && i < i_hi => {
                    let h = cell_dt / sub as f64;
                    for j in 0..sub {
                        steps.push(Step { t: a + j as f64 * h, dt: h });
                    }
                }
                _ => steps.push(Step { t: a, dt: cell_dt }),
            }
        }
        TimeGrid { steps }
    }

    pub fn total(&self) -> f64 {
        self.steps.last().map(|s| s.t + s.dt).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse() -> PulseSpec {
        PulseSpec::new(0.05, 0.02, 1).unwrap()
    }

    #[test]
    fn covers_the_pulse_without_gaps() {
        let g = TimeGrid::build(&pulse(), 0.02);
        let t1 = pulse().duration();
        assert!((g.total() - t1).abs() < 1e-12);
        for w in g.steps.windows(2) {
            assert!((w[0].t + w[0].dt - w[1].t).abs() < 1e-12);
            assert!(w[0].dt > 0.0);
        }
        // every interior step is the base step; only the last is clamped
        let n = g.steps.len();
        for s in &g.steps[..n - 1] {
            assert_eq!(s.dt, 0.02);
        }
        assert!(g.steps[n - 1].dt <= 0.02 + 1e-15);
    }

    #[test]
    fn wide_kick_changes_nothing() {
        // ε/10 far above dt: kicked sequence must match the plain one exactly
        let t = pulse().period();
        let kicked = pulse().with_signal(t / 2.0, 0.001, t / 1000.0).unwrap();
        let a = TimeGrid::build(&pulse(), 0.02);
        let b = TimeGrid::build(&kicked, 0.02);
        assert_eq!(a.steps.len(), b.steps.len());
        for (x, y) in a.steps.iter().zip(b.steps.iter()) {
            assert_eq!(x.t.to_bits(), y.t.to_bits());
            assert_eq!(x.dt.to_bits(), y.dt.to_bits());
        }
    }

    #[test]
    fn sharp_kick_refines_only_its_window() {
        let eps = 0.05; // ε/10 = 0.005 < dt
        let tau = 150.0;
        let kicked = pulse().with_signal(tau, 0.001, eps).unwrap();
        let g = TimeGrid::build(&kicked, 0.02);
        assert!((g.total() - pulse().duration()).abs() < 1e-12);
        // any step lying fully inside the window must be a fine step
        let (lo, hi) = (tau - 8.0 * eps, tau + 8.0 * eps);
        let mut fine = 0usize;
        for s in &g.steps {
            if s.t >= lo && s.t + s.dt <= hi {
                assert!(s.dt <= eps / 10.0 + 1e-15, "step {} at {}", s.dt, s.t);
                fine += 1;
            }
        }
        assert!(fine >= (16.0 * eps / (eps / 10.0)) as usize);
        // base boundaries persist: steps outside the window match the plain grid
        let plain = TimeGrid::build(&pulse(), 0.02);
        let before: Vec<_> = g.steps.iter().filter(|s| s.t < tau - 8.0 * eps - 0.04).collect();
        for (x, y) in before.iter().zip(plain.steps.iter()) {
            assert_eq!(x.t.to_bits(), y.t.to_bits());
        }
    }

    #[test]
    fn window_clipped_at_pulse_edges() {
        let eps = 0.05;
        let kicked = pulse().with_signal(0.2, 0.001, eps).unwrap();
        let g = TimeGrid::build(&kicked, 0.02);
        assert!((g.total() - pulse().duration()).abs() < 1e-12);
        assert_eq!(g.steps[0].t, 0.0);
    }

    #[test]
    fn plan_validation() {
        let grid = RadialGrid::new(0.05, 100).unwrap();
        assert!(PropagationPlan::new(grid, 30, 0.02).is_ok());
        assert!(PropagationPlan::new(grid, 0, 0.02).is_err());
        assert!(PropagationPlan::new(grid, 30, 0.0).is_err());
    }
}
