//! Physical constants and default material data.

/// Vacuum permeability (T m / A).
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Vacuum permittivity (F / m).
pub const EPS_0: f64 = 8.854_187_812_8e-12;

/// Standard gravity (m / s^2).
pub const G_ACCEL: f64 = 9.806_65;

/// RTV-2 silicone matrix density (kg / m^3), handbook value, overridable in config.
pub const SILICONE_DENSITY: f64 = 1100.0;

/// FeSiAl flake powder density (kg / m^3), handbook value, overridable in config.
pub const STEEL_POWDER_DENSITY: f64 = 6900.0;

/// FeSiAl (sendust) saturation polarization mu0*Ms (T), handbook value.
pub const FESIAL_SATURATION_POLARIZATION: f64 = 1.10;

/// VHB acrylic film density (kg / m^3), used by the moving-mass heuristic.
pub const VHB_DENSITY: f64 = 960.0;
