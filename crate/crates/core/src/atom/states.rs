use super::{Potential, RadialGrid};
use crate::tridiag::SymTridiag;
use crate::{Error, Result};

/// Field-free radial eigenstate of one angular channel. The vector is
/// grid-orthonormal: δr·Σv² = 1.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub energy: f64,
    pub vector: Vec<f64>,
}

/// Reduced radial Hamiltonian −½ d²/dr² + ℓ(ℓ+1)/(2r²) + V(r) on the
/// three-point stencil with Dirichlet walls at r = 0 and R_max.
pub fn radial_hamiltonian(grid: &RadialGrid, pot: &Potential, ell: usize) -> SymTridiag {
    let n = grid.n_points();
    let inv_dr2 = 1.0 / (grid.step() * grid.step());
    let cf = (ell * (ell + 1)) as f64 * 0.5;
    let diag = (0..n)
        .map(|k| {
            let r = grid.r(k);
            inv_dr2 + cf / (r * r) + pot.value(r)
        })
        .collect();
    let off = vec![-0.5 * inv_dr2; n - 1];
    SymTridiag::new(diag, off)
}

/// Negative-energy eigenpairs of the channel Hamiltonian, energies
/// ascending, at most `max_count` of them. Returns fewer when the box
/// holds fewer negative levels; possibly none for short-range potentials.
pub fn bound_states(
    grid: &RadialGrid,
    pot: &Potential,
    ell: usize,
    max_count: usize,
) -> Vec<BoundState> {
    let h = radial_hamiltonian(grid, pot, ell);
    let (vals, vecs) = h.eigenpairs_below(0.0);
    let scale = 1.0 / grid.step().sqrt();
    vals.into_iter()
        .zip(vecs)
        .take(max_count)
        .map(|(energy, mut vector)| {
            for x in &mut vector {
                *x *= scale;
            }
            BoundState { energy, vector }
        })
        .collect()
}

/// Yukawa amplitude whose ℓ=0 ground energy on this grid equals `target`
/// within 1e-6 a.u. The ground energy is monotone decreasing in the
/// amplitude, so bisection on A ∈ [0.5, 10] suffices. The match is defined
/// inside this discretization, not in the continuum limit.
pub fn calibrate_yukawa(a: f64, target: f64, grid: &RadialGrid) -> Result<f64> {
    if !(target < 0.0) {
        return Err(Error::Domain(format!("calibration target must be negative, got {target}")));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("screening length must be positive, got {a}")));
    }
    let ground = |amp: f64| -> f64 {
        let pot = Potential::Yukawa { amplitude: amp, screening: a };
        radial_hamiltonian(grid, &pot, 0).smallest_eigenvalue()
    };
    let (mut lo, mut hi) = (0.5f64, 10.0f64);
    if ground(lo) < target || ground(hi) > target {
        return Err(Error::CalibrationBracket(format!(
            "no amplitude in [{lo}, {hi}] reaches ground energy {target} at screening {a}"
        )));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let e = ground(mid);
        if (e - target).abs() <= 1e-6 {
            return Ok(mid);
        }
        if e > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::CalibrationBracket(format!(
        "amplitude interval collapsed at {lo} without meeting tolerance"
    )))
}
