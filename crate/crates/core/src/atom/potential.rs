use crate::{Error, Result};

/// Binding potential evaluated on the radial grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// −1/r
    Coulomb,
    /// −A·e^{−r/a}/r
    Yukawa { amplitude: f64, screening: f64 },
}

impl Potential {
    pub fn yukawa(amplitude: f64, screening: f64) -> Result<Self> {
        if !(amplitude > 0.0 && screening > 0.0) {
            return Err(Error::Domain(format!(
                "yukawa needs positive amplitude and screening length, got ({amplitude}, {screening})"
            )));
        }
        Ok(Self::Yukawa { amplitude, screening })
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Potential::Coulomb => -1.0 / r,
            Potential::Yukawa { amplitude, screening } => {
                -amplitude * (-r / screening).exp() / r
            }
        }
    }
}
