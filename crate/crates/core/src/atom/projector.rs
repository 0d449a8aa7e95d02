use num_complex::Complex64;

use super::{bound_states, BoundState, Potential, RadialGrid, WaveFunction};
use crate::numerics::KahanSum;
use crate::{Error, Result};

/// Coulomb levels above this principal quantum number are excluded from
/// the projector: their radial extent rivals the box and the Dirichlet
/// wall distorts them.
const COULOMB_N_CAP: usize = 15;

/// Orthogonal projector onto the field-free bound space, channels
/// ℓ = 0..L_b. Construction is a one-time setup; afterwards the value is
/// immutable and freely shared across scan workers.
#[derive(Debug, Clone)]
pub struct BoundProjector {
    grid: RadialGrid,
    l_b: usize,
    channels: Vec<Vec<BoundState>>,
}

impl BoundProjector {
    pub fn build(grid: RadialGrid, pot: &Potential, l_b: usize) -> Self {
        let channels = (0..=l_b)
            .map(|ell| {
                let cap = match pot {
                    Potential::Coulomb => COULOMB_N_CAP.saturating_sub(ell),
                    Potential::Yukawa { .. } => usize::MAX,
                };
                if cap == 0 {
                    Vec::new()
                } else {
                    bound_states(&grid, pot, ell, cap)
                }
            })
            .collect();
        Self { grid, l_b, channels }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn l_b(&self) -> usize {
        self.l_b
    }

    pub fn states(&self, ell: usize) -> &[BoundState] {
        &self.channels[ell]
    }

    /// Qψ: Σ_{nℓ, ℓ≤L_b} ⟨nℓ|ψ⟩|nℓ⟩, channels above L_b zeroed.
    pub fn project(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if *psi.grid() != self.grid {
            return Err(Error::GridMismatch(
                "wavefunction and projector grids differ".into(),
            ));
        }
        let dr = self.grid.step();
        let mut out = WaveFunction::zero(self.grid, psi.l_max());
        for ell in 0..=self.l_b.min(psi.l_max()) {
            let src = psi.channel(ell);
            let dst = out.channel_mut(ell);
            for st in &self.channels[ell] {
                let mut re = KahanSum::new();
                let mut im = KahanSum::new();
                for (&v, c) in st.vector.iter().zip(src.iter()) {
                    re.add(v * c.re);
                    im.add(v * c.im);
                }
                let amp = Complex64::new(re.value() * dr, im.value() * dr);
                for (&v, d) in st.vector.iter().zip(dst.iter_mut()) {
                    d.re += amp.re * v;
                    d.im += amp.im * v;
                }
            }
        }
        Ok(out)
    }

    /// ‖ψ − Qψ‖²: the squared norm of the explicit remainder, which is the
    /// probability of finding the electron outside the bound space.
    pub fn ionization_probability(&self, psi: &WaveFunction) -> Result<f64> {
        let total = psi.norm_sq();
        assert!(
            total <= 1.0 + 1e-6,
            "ionization probability needs a normalized state, norm² = {total}"
        );
        let mut chi = psi.clone();
        chi.sub_assign(&self.project(psi)?);
        Ok(chi.norm_sq())
    }

    /// ‖Qψ‖², the complementary diagnostic.
    pub fn bound_population(&self, psi: &WaveFunction) -> Result<f64> {
        Ok(self.project(psi)?.norm_sq())
    }
}
