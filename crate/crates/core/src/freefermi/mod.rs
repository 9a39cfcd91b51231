//! The non-interacting Fermi gas.

pub mod canonical;
pub mod spectrum;
pub mod thermo;

pub use canonical::{canonical_free_energy, canonical_free_energy_with, CanonicalOptions, CanonicalResult, Method};
pub use spectrum::{cube_spectrum, cube_spectrum_limited, Boundary, Domain, SpectrumSlice, TailModel};
pub use thermo::{
    box_free_energy, density_at, f_density, fermi_energy, ground_state_density, localization_defect,
    localized_free_energy, localized_free_energy_with, pressure_at, slice_for, DefectPoint, ThermoPoint,
};
