//! Norms, energy functionals, monitors and fits over run output.

pub mod energy;
pub mod fit;
pub mod monitors;
pub mod norms;
pub mod waveform;
