use num_complex::Complex64;

use super::RadialGrid;
use crate::numerics::KahanSum;
use crate::{Error, Result};

/// Expansion of the full wavefunction over angular channels at fixed
/// m = 0: complex coefficients c_{ℓ,k}, stored channel-major (all radial
/// points of ℓ = 0, then ℓ = 1, ...). The grid inner product carries a
/// factor δr.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: RadialGrid,
    l_max: usize,
    data: Vec<Complex64>,
}

impl WaveFunction {
    pub fn zero(grid: RadialGrid, l_max: usize) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); (l_max + 1) * grid.n_points()];
        Self { grid, l_max, data }
    }

    /// State with a single real-valued radial function in channel `ell`.
    pub fn from_real_channel(
        grid: RadialGrid,
        l_max: usize,
        ell: usize,
        radial: &[f64],
    ) -> Result<Self> {
        if radial.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "radial function has {} points, grid has {}",
                radial.len(),
                grid.n_points()
            )));
        }
        if ell > l_max {
            return Err(Error::Domain(format!("channel {ell} exceeds l_max {l_max}")));
        }
        let mut psi = Self::zero(grid, l_max);
        for (c, &v) in psi.channel_mut(ell).iter_mut().zip(radial.iter()) {
            c.re = v;
        }
        Ok(psi)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn n_channels(&self) -> usize {
        self.l_max + 1
    }

    #[inline]
    pub fn channel(&self, ell: usize) -> &[Complex64] {
        let n = self.grid.n_points();
        &self.data[ell * n..(ell + 1) * n]
    }

    #[inline]
    pub fn channel_mut(&mut self, ell: usize) -> &mut [Complex64] {
        let n = self.grid.n_points();
        &mut self.data[ell * n..(ell + 1) * n]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// δr·Σ|c|², compensated summation throughout.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = KahanSum::new();
        for c in &self.data {
            acc.add(c.re * c.re + c.im * c.im);
        }
        acc.value() * self.grid.step()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.data {
            c.re *= s;
            c.im *= s;
        }
    }

    /// ⟨self|other⟩ = δr·Σ conj(a)·b.
    pub fn overlap(&self, other: &WaveFunction) -> Result<Complex64> {
        if self.grid != other.grid || self.l_max != other.l_max {
            return Err(Error::GridMismatch("overlap between mismatched expansions".into()));
        }
        let mut re = KahanSum::new();
        let mut im = KahanSum::new();
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            re.add(a.re * b.re + a.im * b.im);
            im.add(a.re * b.im - a.im * b.re);
        }
        let dr = self.grid.step();
        Ok(Complex64::new(re.value() * dr, im.value() * dr))
    }

    /// In-place self −= other. Panics on mismatched expansions; callers
    /// pair states produced from the same setup.
    pub fn sub_assign(&mut self, other: &WaveFunction) {
        assert_eq!(self.grid, other.grid, "grid mismatch in subtraction");
        assert_eq!(self.l_max, other.l_max, "channel mismatch in subtraction");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            a.re -= b.re;
            a.im -= b.im;
        }
    }

    /// Fraction of the total probability sitting in the outer `fraction`
    /// of the radial box (reflection sentinel input).
    pub fn outer_fraction(&self, fraction: f64) -> f64 {
        let n = self.grid.n_points();
        let k0 = ((1.0 - fraction) * n as f64).ceil() as usize;
        let mut outer = KahanSum::new();
        for ell in 0..=self.l_max {
            for c in &self.channel(ell)[k0.min(n)..] {
                outer.add(c.re * c.re + c.im * c.im);
            }
        }
        let total = self.norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        outer.value() * self.grid.step() / total
    }
}
