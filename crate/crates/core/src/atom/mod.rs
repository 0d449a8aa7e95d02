//! Radial grids, binding potentials, field-free bound states per angular
//! channel, the bound-space projector, and the ionization probability.

mod grid;
mod potential;
mod projector;
mod states;
mod wavefunction;

pub use grid::RadialGrid;
pub use potential::Potential;
pub use projector::BoundProjector;
pub use states::{bound_states, calibrate_yukawa, radial_hamiltonian, BoundState};
pub use wavefunction::WaveFunction;
