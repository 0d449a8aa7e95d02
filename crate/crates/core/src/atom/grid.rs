use crate::{Error, Result};

/// Uniform radial grid r_k = (k+1)·δr for k = 0..n_points, extent
/// R_max = n_points·δr.
///
/// Reduced radial functions are treated as zero at r = 0 and at the first
/// point beyond the box, which is what the three-point stencil's Dirichlet
/// ends encode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    step: f64,
    n_points: usize,
}

impl RadialGrid {
    pub fn new(step: f64, n_points: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("grid step must be positive, got {step}")));
        }
        if n_points < 10 {
            return Err(Error::Domain(format!(
                "grid needs at least 10 points, got {n_points}"
            )));
        }
        Ok(Self { step, n_points })
    }

    /// Grid spanning [0, extent] with the given step.
    pub fn from_extent(step: f64, extent: f64) -> Result<Self> {
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Domain(format!("grid extent must be positive, got {extent}")));
        }
        Self::new(step, (extent / step).round() as usize)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn r(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.step
    }

    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.step
    }
}
