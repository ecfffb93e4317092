//! Low-energy spectral side of the model Laplacian: Galerkin slices, the
//! cutoff sequence built from harmonic ground states, the exhaustion pairing
//! and the strong inequalities on the projective line.

mod cutoff;
mod galerkin;
mod sequence;
mod strong;

pub use cutoff::{CutoffFunction, UNIT_SUP_DERIVATIVE};
pub use galerkin::{
    galerkin_assemble, galerkin_assemble_neutral, low_energy_bergman, GalerkinBlock, SpectralSlice,
    MAX_BASIS, MAX_GALERKIN_DEGREE,
};
pub use sequence::{
    build_alpha_k, build_beta, gromov_pairing_residual, verify_low_energy_sequence, Beta,
    CutoffJet, GromovPairing, LowEnergySequenceReport, SequenceGrid, SequenceRow,
};
pub use strong::{strong_morse_report, StrongMorseReport, StrongMorseRow};
