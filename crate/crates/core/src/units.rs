//! Unit conventions: energies in eV, lengths in Bohr, dipoles in e·Bohr,
//! rates and times in units of the bare-emitter rate γ₀.

/// 1 Hartree in eV (CODATA 2018).
pub const HARTREE_EV: f64 = 27.211386245988;

/// Two transition energies closer than this (eV) are treated as one photon frequency.
pub const FREQUENCY_TOLERANCE_EV: f64 = 1e-9;
