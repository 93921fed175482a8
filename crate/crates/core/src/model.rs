//! Material and geometry records, unit conventions, and validated scenario
//! construction.
//!
//! All stored quantities are strict SI (m, kg, s, V, Pa, T, A/m). Records are
//! immutable after construction and safe to share across threads.

use crate::constants::{FESIAL_SATURATION_POLARIZATION, MU_0, SILICONE_DENSITY, STEEL_POWDER_DENSITY, VHB_DENSITY};
use crate::error::{Error, Result};
use crate::magnetics::GapForceTable;
use std::f64::consts::PI;
use std::sync::Arc;

/// Axially magnetized ring magnet (outer cylinder minus bore).
#[derive(Debug, Clone, PartialEq)]
pub struct RingMagnetSpec {
    /// Outer radius (m).
    pub outer_radius: f64,
    /// Bore radius (m).
    pub inner_radius: f64,
    /// Axial thickness (m).
    pub thickness: f64,
    /// Residual flux density B_r (T).
    pub remanence: f64,
    /// Coercive field strength (A/m). Stored for completeness; the charge-sheet
    /// force model only uses the remanence.
    pub coercivity: f64,
    /// Magnet mass (kg).
    pub mass: f64,
}

impl RingMagnetSpec {
    pub fn new(
        outer_radius: f64,
        inner_radius: f64,
        thickness: f64,
        remanence: f64,
        coercivity: f64,
        mass: f64,
    ) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < outer_radius) {
            return Err(Error::Validation(format!(
                "magnet radii must satisfy 0 < inner ({inner_radius} m) < outer ({outer_radius} m)"
            )));
        }
        if thickness <= 0.0 {
            return Err(Error::Validation("magnet thickness must be > 0".into()));
        }
        if remanence <= 0.0 {
            return Err(Error::Validation("magnet remanence must be > 0".into()));
        }
        if mass <= 0.0 {
            return Err(Error::Validation("magnet mass must be > 0".into()));
        }
        Ok(Self {
            outer_radius,
            inner_radius,
            thickness,
            remanence,
            coercivity,
            mass,
        })
    }

    /// N38 ring magnet of the reference actuator: Ø20 mm outer, Ø4.2 mm bore,
    /// 5 mm thick, B_r = 1.23 T, F_c = 1.45e5 A/m, 11.26 g.
    pub fn n38_ring() -> Self {
        Self::new(10.0e-3, 2.1e-3, 5.0e-3, 1.23, 1.45e5, 11.26e-3).expect("reference magnet is valid")
    }
}

/// Soft-magnetic elastomer disc bonded to the membrane centre.
#[derive(Debug, Clone, PartialEq)]
pub struct MreDiscSpec {
    /// Disc radius (m).
    pub radius: f64,
    /// Disc thickness (m).
    pub thickness: f64,
    /// Relative permeability of the composite (>= 1).
    pub relative_permeability: f64,
    /// Powder mass fraction in [0, 1).
    pub powder_mass_fraction: f64,
    /// Composite density (kg/m^3).
    pub density: f64,
    /// Disc mass (kg); must equal density * pi r^2 t.
    pub mass: f64,
    /// Young modulus of the composite (Pa). Stored for completeness; the disc
    /// is treated as rigid by the cone model.
    pub youngs_modulus: f64,
    /// Saturation magnetization of the composite (A/m). Defaults to the powder
    /// volume fraction times the FeSiAl saturation polarization.
    pub saturation_magnetization: f64,
}

impl MreDiscSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        radius: f64,
        thickness: f64,
        relative_permeability: f64,
        powder_mass_fraction: f64,
        density: f64,
        mass: f64,
        youngs_modulus: f64,
        saturation_magnetization: f64,
    ) -> Result<Self> {
        if radius <= 0.0 || thickness <= 0.0 {
            return Err(Error::Validation("disc radius and thickness must be > 0".into()));
        }
        if relative_permeability < 1.0 {
            return Err(Error::Validation(format!(
                "disc relative permeability must be >= 1, got {relative_permeability}"
            )));
        }
        if !(0.0..1.0).contains(&powder_mass_fraction) {
            return Err(Error::Validation("powder mass fraction must lie in [0, 1)".into()));
        }
        if density <= 0.0 {
            return Err(Error::Validation("disc density must be > 0".into()));
        }
        let derived = density * PI * radius * radius * thickness;
        if (mass - derived).abs() > 1e-9 * derived.max(1e-300) {
            return Err(Error::Validation(format!(
                "disc mass {mass} kg inconsistent with density * pi r^2 t = {derived} kg"
            )));
        }
        if youngs_modulus <= 0.0 {
            return Err(Error::Validation("disc Young modulus must be > 0".into()));
        }
        if saturation_magnetization <= 0.0 {
            return Err(Error::Validation("disc saturation magnetization must be > 0".into()));
        }
        Ok(Self {
            radius,
            thickness,
            relative_permeability,
            powder_mass_fraction,
            density,
            mass,
            youngs_modulus,
            saturation_magnetization,
        })
    }

    /// Construct with mass, density and saturation derived from the mixture rule.
    ///
    /// Density by the inverse rule of mixtures,
    /// `rho = 1 / (w/rho_powder + (1-w)/rho_matrix)`; saturation magnetization
    /// from the powder volume fraction, `M_sat = phi * M_sat_powder` with
    /// `phi = w rho / rho_powder`.
    pub fn from_mixture(
        radius: f64,
        thickness: f64,
        relative_permeability: f64,
        powder_mass_fraction: f64,
        matrix_density: f64,
        powder_density: f64,
        youngs_modulus: f64,
    ) -> Result<Self> {
        if powder_density <= 0.0 || matrix_density <= 0.0 {
            return Err(Error::Validation("component densities must be > 0".into()));
        }
        let w = powder_mass_fraction;
        if !(0.0..1.0).contains(&w) {
            return Err(Error::Validation("powder mass fraction must lie in [0, 1)".into()));
        }
        let density = 1.0 / (w / powder_density + (1.0 - w) / matrix_density);
        let mass = density * PI * radius * radius * thickness;
        let phi = w * density / powder_density;
        let msat = (phi * FESIAL_SATURATION_POLARIZATION / MU_0).max(1e-9);
        Self::new(
            radius,
            thickness,
            relative_permeability,
            w,
            density,
            mass,
            youngs_modulus,
            msat,
        )
    }
}

/// Pre-stretched annular DEAP membrane clamped between disc edge and frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneSpec {
    /// Inner (disc attachment) radius a (m).
    pub inner_radius: f64,
    /// Outer (frame) radius b (m).
    pub outer_radius: f64,
    /// Unstretched film thickness t0 (m).
    pub initial_thickness: f64,
    /// Equibiaxial pre-stretch lambda_pre (>= 1).
    pub pre_stretch: f64,
    /// Small-strain Young modulus (Pa).
    pub youngs_modulus: f64,
    /// Gent stiffening limit J_m (dimensionless).
    pub gent_limit: f64,
    /// Film relative permittivity.
    pub relative_permittivity: f64,
    /// Dielectric strength (V/m).
    pub breakdown_field: f64,
}

impl MembraneSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        inner_radius: f64,
        outer_radius: f64,
        initial_thickness: f64,
        pre_stretch: f64,
        youngs_modulus: f64,
        gent_limit: f64,
        relative_permittivity: f64,
        breakdown_field: f64,
    ) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < outer_radius) {
            return Err(Error::Validation(format!(
                "membrane radii must satisfy 0 < inner ({inner_radius} m) < outer ({outer_radius} m)"
            )));
        }
        if initial_thickness <= 0.0 {
            return Err(Error::Validation("membrane thickness must be > 0".into()));
        }
        if pre_stretch < 1.0 {
            return Err(Error::Validation("pre-stretch must be >= 1".into()));
        }
        if youngs_modulus <= 0.0 {
            return Err(Error::Validation("membrane Young modulus must be > 0".into()));
        }
        if relative_permittivity <= 0.0 || breakdown_field <= 0.0 {
            return Err(Error::Validation("permittivity and breakdown field must be > 0".into()));
        }
        // equibiaxial first invariant at pre-stretch: I1 = 2 lp^2 + lp^-4
        let i1_pre = 2.0 * pre_stretch.powi(2) + pre_stretch.powi(-4);
        if gent_limit <= i1_pre - 3.0 {
            return Err(Error::Validation(format!(
                "Gent limit J_m = {gent_limit} does not accommodate pre-stretch {pre_stretch} (I1 - 3 = {:.4})",
                i1_pre - 3.0
            )));
        }
        Ok(Self {
            inner_radius,
            outer_radius,
            initial_thickness,
            pre_stretch,
            youngs_modulus,
            gent_limit,
            relative_permittivity,
            breakdown_field,
        })
    }

    /// VHB reference membrane: 1 mm film pre-stretched 2x onto a 60 mm frame
    /// with a 10 mm attachment edge; E = 0.158 MPa, J_m = 100, eps_r = 4.7,
    /// dielectric strength 100 V/um.
    pub fn vhb_reference() -> Self {
        Self::new(10.0e-3, 60.0e-3, 1.0e-3, 2.0, 0.158e6, 100.0, 4.7, 1.0e8)
            .expect("reference membrane is valid")
    }

    /// Mass of the stretched annulus (kg), used by the moving-mass heuristic.
    pub fn annulus_mass(&self) -> f64 {
        let area = PI * (self.outer_radius.powi(2) - self.inner_radius.powi(2));
        let t = self.initial_thickness / (self.pre_stretch * self.pre_stretch);
        VHB_DENSITY * area * t
    }
}

/// Lumped electrical parameters of the actuator.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectricalSpec {
    /// Series resistance (Ohm).
    pub series_resistance: f64,
    /// Membrane capacitance (F).
    pub capacitance: f64,
}

impl ElectricalSpec {
    pub fn new(series_resistance: f64, capacitance: f64) -> Result<Self> {
        if series_resistance <= 0.0 || capacitance <= 0.0 {
            return Err(Error::Validation("resistance and capacitance must be > 0".into()));
        }
        Ok(Self {
            series_resistance,
            capacitance,
        })
    }

    /// R = 0.698 MOhm, C = 2.2 nF.
    pub fn reference() -> Self {
        Self::new(0.698e6, 2.2e-9).expect("reference electrical parameters are valid")
    }

    pub fn time_constant(&self) -> f64 {
        self.series_resistance * self.capacitance
    }
}

/// One Maxwell (spring + dashpot) relaxation branch.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationBranch {
    /// Branch stiffness (N/m).
    pub stiffness: f64,
    /// Relaxation time constant (s).
    pub time_constant: f64,
}

/// Complete description of one actuator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub membrane: MembraneSpec,
    pub bias: crate::bias::BiasSpec,
    pub electrical: ElectricalSpec,
    /// Lumped moving mass (kg).
    pub moving_mass: f64,
    /// Viscous damping coefficient (N s/m).
    pub damping: f64,
    /// Viscoelastic Maxwell branch.
    pub relaxation: RelaxationBranch,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.moving_mass <= 0.0 {
            return Err(Error::Validation("moving mass must be > 0".into()));
        }
        if self.damping < 0.0 {
            return Err(Error::Validation("damping must be >= 0".into()));
        }
        if self.relaxation.time_constant <= 0.0 {
            return Err(Error::Validation("relaxation time constant must be > 0".into()));
        }
        if self.relaxation.stiffness < 0.0 {
            return Err(Error::Validation("relaxation stiffness must be >= 0".into()));
        }
        self.bias.validate()?;
        Ok(())
    }

    /// Attach the precomputed magnet interaction table required by the solvers.
    pub fn prepare(&self) -> Prepared {
        Prepared::new(self.clone())
    }
}

/// Scenario plus the runtime bias evaluator (shared magnet force table).
///
/// Cloning is cheap; `with_offset` reuses the table, which makes offset
/// optimization sweeps inexpensive.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    bias_runtime: crate::bias::BiasRuntime,
}

impl Prepared {
    pub fn new(scenario: Scenario) -> Self {
        let bias_runtime = crate::bias::BiasRuntime::new(&scenario.bias);
        Self {
            scenario,
            bias_runtime,
        }
    }

    pub fn bias(&self) -> &crate::bias::BiasRuntime {
        &self.bias_runtime
    }

    /// Replace the bias evaluator (e.g. by a fitted force provider).
    pub fn with_bias_runtime(mut self, runtime: crate::bias::BiasRuntime) -> Self {
        self.bias_runtime = runtime;
        self
    }

    /// Same scenario with a different magnet offset, reusing the force table.
    pub fn with_offset(&self, offset: f64) -> Self {
        let mut out = self.clone();
        out.scenario.bias = out.scenario.bias.with_offset(offset);
        out.bias_runtime = out.bias_runtime.with_offset(offset);
        out
    }

    pub fn shared_table(&self) -> Option<Arc<GapForceTable>> {
        self.bias_runtime.table()
    }
}

/// The actuator variants measured in the reference experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaperVariant {
    Mre15,
    Mre30,
    Mre40,
    /// Gravitational bias with the given mass in grams.
    MassGrams(f64),
}

/// Default magnet offsets for the three disc variants (m).
///
/// Chosen a few millimetres above the per-disc optimum so the actuator is
/// comfortably inside its stable operating window at 5 kV.
pub fn default_offset(variant: PaperVariant) -> Option<f64> {
    match variant {
        PaperVariant::Mre15 => Some(13.0e-3),
        PaperVariant::Mre30 => Some(15.0e-3),
        PaperVariant::Mre40 => Some(16.0e-3),
        PaperVariant::MassGrams(_) => None,
    }
}

/// Disc record for a variant: mu_r from the coil-A column, E from the tensile
/// table, density and saturation from the mixture rule.
pub fn paper_disc(variant: PaperVariant) -> Option<MreDiscSpec> {
    let (mur, w, e_mod) = match variant {
        PaperVariant::Mre15 => (2.24, 0.15, 0.85e6),
        PaperVariant::Mre30 => (4.21, 0.30, 1.50e6),
        PaperVariant::Mre40 => (5.50, 0.40, 2.20e6),
        PaperVariant::MassGrams(_) => return None,
    };
    Some(
        MreDiscSpec::from_mixture(10.0e-3, 4.0e-3, mur, w, SILICONE_DENSITY, STEEL_POWDER_DENSITY, e_mod)
            .expect("paper disc is valid"),
    )
}

/// Fully populated scenario with the reference constants.
///
/// The PM-MRE variants carry a magnet force scale calibrated so the MRE40 disc
/// experiences 0.6 N at a 5 mm gap.
pub fn default_paper_scenario(variant: PaperVariant) -> Result<Scenario> {
    let membrane = MembraneSpec::vhb_reference();
    let electrical = ElectricalSpec::reference();
    let bias = match variant {
        PaperVariant::MassGrams(g) => {
            if g <= 0.0 {
                return Err(Error::Validation("bias mass must be > 0".into()));
            }
            crate::bias::BiasSpec::Mass { mass: g * 1e-3 }
        }
        _ => {
            let magnet = RingMagnetSpec::n38_ring();
            let disc = paper_disc(variant).expect("disc variant");
            let offset = default_offset(variant).expect("disc variant");
            let scale = crate::magnetics::reference_scale();
            crate::bias::BiasSpec::PmMre {
                magnet,
                disc,
                offset,
                scale,
            }
        }
    };

    let attached_mass = match (&bias, variant) {
        (crate::bias::BiasSpec::Mass { mass }, _) => *mass,
        (_, v) => paper_disc(v).map(|d| d.mass).unwrap_or(0.0),
    };
    let moving_mass = attached_mass + membrane.annulus_mass() / 3.0;

    let k0 = crate::membrane::small_signal_stiffness(&membrane);
    let damping = 2.0 * 0.1 * (k0 * moving_mass).sqrt();
    let relaxation = RelaxationBranch {
        stiffness: 0.2 * k0,
        time_constant: 10.0,
    };

    let scenario = Scenario {
        membrane,
        bias,
        electrical,
        moving_mass,
        damping,
        relaxation,
    };
    scenario.validate()?;
    Ok(scenario)
}
