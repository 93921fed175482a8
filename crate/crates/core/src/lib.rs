//! Simulation and analysis toolkit for conical dielectric-elastomer actuators
//! under interchangeable bias mechanisms, centred on the permanent-magnet /
//! magnetorheological-elastomer bias.
//!
//! The crate computes force-gap characteristics of the magnet-disc pair,
//! static equilibria and working ranges of the biased membrane, offset optima,
//! and step-response transients, and fits measured force curves. See the
//! module docs for the physics of each piece:
//!
//! * [`model`] — material/geometry records and scenario construction
//! * [`magnetics`] — ring-magnet field and magnet-disc force models
//! * [`membrane`] — lumped conical membrane with Maxwell-stress softening
//! * [`bias`] — the five bias mechanisms and slope classification
//! * [`equilibrium`] — roots, stability, working ranges, offset optimization
//! * [`dynamics`] — coupled electro-mechanical transients
//! * [`fitting`] — exponential force-curve fits and calibrated bias providers
//! * [`config`], [`csvio`], [`svg`], [`cli`] — file formats and the CLI

pub mod bias;
pub mod cli;
pub mod config;
pub mod constants;
pub mod csvio;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod fitting;
pub mod magnetics;
pub mod membrane;
pub mod model;
pub mod svg;
pub mod units;

pub use bias::{bias_force, classify_bias, BiasClass, BiasRuntime, BiasSpec};
pub use config::{build_scenario, load_scenario, scenario_to_config};
pub use dynamics::{paper_schedule, simulate, TransientResult, VoltageSchedule};
pub use equilibrium::{
    find_equilibria, optimize_offset, steady_state_sweep, working_range, EquilibriumReport,
    WorkingRangeReport,
};
pub use error::{Error, Result};
pub use fitting::{calibrated_pm_mre, fit_exponential, FitResult};
pub use magnetics::{
    axial_b_field, demag_factor, effective_susceptibility, force_sweep, pm_mre_force, pm_pm_force,
    ForceCurve,
};
pub use membrane::{maxwell_pressure, membrane_force, stretch_state};
pub use model::{
    default_paper_scenario, ElectricalSpec, MembraneSpec, MreDiscSpec, PaperVariant, Prepared,
    RingMagnetSpec, Scenario,
};
