//! Key-value scenario configuration.
//!
//! Grammar: flat `[section]` headers, `key = value [unit]` lines, `#` comments
//! (full-line or trailing). Units from the declared set convert exactly to SI
//! (`mm` *1e-3, `kV` *1e3, ...); bare numbers are SI or dimensionless.
//!
//! ```text
//! # reference PM-MRE actuator
//! [membrane]
//! inner_radius      = 10 mm
//! outer_radius      = 60 mm
//! initial_thickness = 1 mm
//! pre_stretch       = 2.0
//! youngs_modulus    = 0.158 MPa
//!
//! [electrical]
//! series_resistance = 0.698 Mohm
//! capacitance       = 2.2 nF
//!
//! [bias]
//! kind   = pm_mre
//! offset = 16 mm
//! scale  = 1.0
//!
//! [magnet]
//! outer_radius = 10 mm
//! inner_radius = 2.1 mm
//! thickness    = 5 mm
//! remanence    = 1.23 T
//! coercivity   = 145 kA/m
//! mass         = 11.26 g
//!
//! [disc]
//! radius                = 10 mm
//! thickness             = 4 mm
//! relative_permeability = 5.5
//! powder_mass_fraction  = 0.40
//! ```
//!
//! Missing mandatory keys raise named-key errors; unknown keys are rejected
//! with their line number. Scenario serialization emits SI values at full
//! precision so that serialize-then-parse reproduces the scenario exactly.

use crate::bias::BiasSpec;
use crate::constants::{SILICONE_DENSITY, STEEL_POWDER_DENSITY};
use crate::error::{Error, Result};
use crate::membrane::small_signal_stiffness;
use crate::model::{
    ElectricalSpec, MembraneSpec, MreDiscSpec, RelaxationBranch, RingMagnetSpec, Scenario,
};
use crate::units::parse_quantity;
use std::collections::BTreeMap;

const DEFAULT_GENT_LIMIT: f64 = 100.0;
const DEFAULT_PERMITTIVITY: f64 = 4.7;
const DEFAULT_BREAKDOWN_FIELD: f64 = 1.0e8;
const DEFAULT_DISC_YOUNGS_MODULUS: f64 = 1.0e6;
const DEFAULT_DAMPING_RATIO: f64 = 0.1;
const DEFAULT_RELAXATION_FRACTION: f64 = 0.2;
const DEFAULT_RELAXATION_TIME: f64 = 10.0;

struct RawValue {
    text: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, RawValue>>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, RawValue>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(i) => &raw_line[..i],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::Parse {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            if current.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "key outside of any [section]".into(),
                });
            }
            let prev = sections.entry(current.clone()).or_default().insert(
                key.trim().to_string(),
                RawValue {
                    text: value.trim().to_string(),
                    line: line_no,
                    used: std::cell::Cell::new(false),
                },
            );
            if prev.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate key `{}`", key.trim()),
                });
            }
        }
        Ok(Self { sections })
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn get(&self, section: &str, key: &str) -> Option<&RawValue> {
        let v = self.sections.get(section)?.get(key)?;
        v.used.set(true);
        Some(v)
    }

    fn require_quantity(&self, section: &str, key: &str) -> Result<f64> {
        let v = self.get(section, key).ok_or_else(|| Error::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })?;
        parse_quantity(&v.text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                line: v.line,
                message,
            },
            other => other,
        })
    }

    fn optional_quantity(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => parse_quantity(&v.text)
                .map(Some)
                .map_err(|e| match e {
                    Error::Parse { message, .. } => Error::Parse {
                        line: v.line,
                        message,
                    },
                    other => other,
                }),
        }
    }

    fn require_word(&self, section: &str, key: &str) -> Result<String> {
        let v = self.get(section, key).ok_or_else(|| Error::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })?;
        Ok(v.text.clone())
    }

    fn reject_unused(&self) -> Result<()> {
        for (section, keys) in &self.sections {
            for (key, v) in keys {
                if !v.used.get() {
                    return Err(Error::Parse {
                        line: v.line,
                        message: format!("unknown key `{key}` in section [{section}]"),
                    });
                }
            }
        }
        Ok(())
    }
}

fn magnet_from(cfg: &RawConfig, section: &str) -> Result<RingMagnetSpec> {
    RingMagnetSpec::new(
        cfg.require_quantity(section, "outer_radius")?,
        cfg.require_quantity(section, "inner_radius")?,
        cfg.require_quantity(section, "thickness")?,
        cfg.require_quantity(section, "remanence")?,
        cfg.require_quantity(section, "coercivity")?,
        cfg.require_quantity(section, "mass")?,
    )
}

fn disc_from(cfg: &RawConfig, section: &str) -> Result<MreDiscSpec> {
    let radius = cfg.require_quantity(section, "radius")?;
    let thickness = cfg.require_quantity(section, "thickness")?;
    let mu_r = cfg.require_quantity(section, "relative_permeability")?;
    let w = cfg.require_quantity(section, "powder_mass_fraction")?;
    let e_mod = cfg
        .optional_quantity(section, "youngs_modulus")?
        .unwrap_or(DEFAULT_DISC_YOUNGS_MODULUS);
    let matrix_density = cfg
        .optional_quantity(section, "silicone_density")?
        .unwrap_or(SILICONE_DENSITY);
    let powder_density = cfg
        .optional_quantity(section, "powder_density")?
        .unwrap_or(STEEL_POWDER_DENSITY);
    let mut disc = MreDiscSpec::from_mixture(radius, thickness, mu_r, w, matrix_density, powder_density, e_mod)?;
    if let Some(density) = cfg.optional_quantity(section, "density")? {
        let mass = density * std::f64::consts::PI * radius * radius * thickness;
        disc = MreDiscSpec::new(
            radius,
            thickness,
            mu_r,
            w,
            density,
            mass,
            e_mod,
            disc.saturation_magnetization,
        )?;
    }
    if let Some(msat) = cfg.optional_quantity(section, "saturation_magnetization")? {
        disc.saturation_magnetization = msat;
        if msat <= 0.0 {
            return Err(Error::Validation("disc saturation magnetization must be > 0".into()));
        }
    }
    Ok(disc)
}

/// Build a validated [`Scenario`] from configuration text.
pub fn build_scenario(text: &str) -> Result<Scenario> {
    let cfg = RawConfig::parse(text)?;

    let membrane = MembraneSpec::new(
        cfg.require_quantity("membrane", "inner_radius")?,
        cfg.require_quantity("membrane", "outer_radius")?,
        cfg.require_quantity("membrane", "initial_thickness")?,
        cfg.require_quantity("membrane", "pre_stretch")?,
        cfg.require_quantity("membrane", "youngs_modulus")?,
        cfg.optional_quantity("membrane", "gent_limit")?
            .unwrap_or(DEFAULT_GENT_LIMIT),
        cfg.optional_quantity("membrane", "relative_permittivity")?
            .unwrap_or(DEFAULT_PERMITTIVITY),
        cfg.optional_quantity("membrane", "breakdown_field")?
            .unwrap_or(DEFAULT_BREAKDOWN_FIELD),
    )?;

    let electrical = ElectricalSpec::new(
        cfg.require_quantity("electrical", "series_resistance")?,
        cfg.require_quantity("electrical", "capacitance")?,
    )?;

    let kind = cfg.require_word("bias", "kind")?;
    let bias = match kind.as_str() {
        "mass" => BiasSpec::Mass {
            mass: cfg.require_quantity("bias", "mass")?,
        },
        "linear_spring" => BiasSpec::LinearSpring {
            stiffness: cfg.require_quantity("bias", "stiffness")?,
            preload: cfg.require_quantity("bias", "preload")?,
        },
        "nonlinear_spring" => BiasSpec::NonlinearSpring {
            c1: cfg.require_quantity("bias", "c1")?,
            c3: cfg.require_quantity("bias", "c3")?,
            preload: cfg.require_quantity("bias", "preload")?,
        },
        "pm_mre" => BiasSpec::PmMre {
            magnet: magnet_from(&cfg, "magnet")?,
            disc: disc_from(&cfg, "disc")?,
            offset: cfg.require_quantity("bias", "offset")?,
            scale: cfg.optional_quantity("bias", "scale")?.unwrap_or(1.0),
        },
        "pm_pm" => {
            let (sec_a, sec_b) = if cfg.has_section("magnet_a") {
                ("magnet_a", "magnet_b")
            } else {
                ("magnet", "magnet")
            };
            BiasSpec::PmPm {
                magnet_a: magnet_from(&cfg, sec_a)?,
                magnet_b: magnet_from(&cfg, sec_b)?,
                offset: cfg.require_quantity("bias", "offset")?,
            }
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown bias kind `{other}` (expected mass, linear_spring, nonlinear_spring, pm_mre or pm_pm)"
            )))
        }
    };
    bias.validate()?;

    let attached_mass = match &bias {
        BiasSpec::Mass { mass } => *mass,
        BiasSpec::PmMre { disc, .. } => disc.mass,
        _ => 0.0,
    };
    let moving_mass = cfg
        .optional_quantity("dynamics", "moving_mass")?
        .unwrap_or(attached_mass + membrane.annulus_mass() / 3.0);

    let k0 = small_signal_stiffness(&membrane);
    let damping = match cfg.optional_quantity("dynamics", "damping")? {
        Some(c) => c,
        None => {
            let zeta = cfg
                .optional_quantity("dynamics", "damping_ratio")?
                .unwrap_or(DEFAULT_DAMPING_RATIO);
            2.0 * zeta * (k0 * moving_mass).sqrt()
        }
    };
    let relaxation = RelaxationBranch {
        stiffness: cfg
            .optional_quantity("dynamics", "relaxation_stiffness")?
            .unwrap_or(DEFAULT_RELAXATION_FRACTION * k0),
        time_constant: cfg
            .optional_quantity("dynamics", "relaxation_time")?
            .unwrap_or(DEFAULT_RELAXATION_TIME),
    };

    cfg.reject_unused()?;

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

/// Load a scenario from a config file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    build_scenario(&text)
}

fn write_magnet(out: &mut String, section: &str, m: &RingMagnetSpec) {
    use std::fmt::Write;
    let _ = writeln!(out, "[{section}]");
    let _ = writeln!(out, "outer_radius = {} m", m.outer_radius);
    let _ = writeln!(out, "inner_radius = {} m", m.inner_radius);
    let _ = writeln!(out, "thickness = {} m", m.thickness);
    let _ = writeln!(out, "remanence = {} T", m.remanence);
    let _ = writeln!(out, "coercivity = {} A/m", m.coercivity);
    let _ = writeln!(out, "mass = {} kg", m.mass);
    let _ = writeln!(out);
}

/// Serialize a scenario to configuration text.
///
/// Values are written in SI at full precision; `build_scenario` on the output
/// reproduces the scenario field for field.
pub fn scenario_to_config(s: &Scenario) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "# scenario written by deabias");
    let m = &s.membrane;
    let _ = writeln!(out, "[membrane]");
    let _ = writeln!(out, "inner_radius = {} m", m.inner_radius);
    let _ = writeln!(out, "outer_radius = {} m", m.outer_radius);
    let _ = writeln!(out, "initial_thickness = {} m", m.initial_thickness);
    let _ = writeln!(out, "pre_stretch = {}", m.pre_stretch);
    let _ = writeln!(out, "youngs_modulus = {} Pa", m.youngs_modulus);
    let _ = writeln!(out, "gent_limit = {}", m.gent_limit);
    let _ = writeln!(out, "relative_permittivity = {}", m.relative_permittivity);
    let _ = writeln!(out, "breakdown_field = {} V/m", m.breakdown_field);
    let _ = writeln!(out);
    let _ = writeln!(out, "[electrical]");
    let _ = writeln!(out, "series_resistance = {} ohm", s.electrical.series_resistance);
    let _ = writeln!(out, "capacitance = {} F", s.electrical.capacitance);
    let _ = writeln!(out);
    let _ = writeln!(out, "[bias]");
    let _ = writeln!(out, "kind = {}", s.bias.kind_name());
    match &s.bias {
        BiasSpec::Mass { mass } => {
            let _ = writeln!(out, "mass = {mass} kg");
            let _ = writeln!(out);
        }
        BiasSpec::LinearSpring { stiffness, preload } => {
            let _ = writeln!(out, "stiffness = {stiffness} N/m");
            let _ = writeln!(out, "preload = {preload} N");
            let _ = writeln!(out);
        }
        BiasSpec::NonlinearSpring { c1, c3, preload } => {
            let _ = writeln!(out, "c1 = {c1} N/m");
            let _ = writeln!(out, "c3 = {c3} N/m3");
            let _ = writeln!(out, "preload = {preload} N");
            let _ = writeln!(out);
        }
        BiasSpec::PmMre {
            magnet,
            disc,
            offset,
            scale,
        } => {
            let _ = writeln!(out, "offset = {offset} m");
            let _ = writeln!(out, "scale = {scale}");
            let _ = writeln!(out);
            write_magnet(&mut out, "magnet", magnet);
            let _ = writeln!(out, "[disc]");
            let _ = writeln!(out, "radius = {} m", disc.radius);
            let _ = writeln!(out, "thickness = {} m", disc.thickness);
            let _ = writeln!(out, "relative_permeability = {}", disc.relative_permeability);
            let _ = writeln!(out, "powder_mass_fraction = {}", disc.powder_mass_fraction);
            let _ = writeln!(out, "youngs_modulus = {} Pa", disc.youngs_modulus);
            let _ = writeln!(out, "density = {} kg/m3", disc.density);
            let _ = writeln!(out, "saturation_magnetization = {} A/m", disc.saturation_magnetization);
            let _ = writeln!(out);
        }
        BiasSpec::PmPm {
            magnet_a,
            magnet_b,
            offset,
        } => {
            let _ = writeln!(out, "offset = {offset} m");
            let _ = writeln!(out);
            write_magnet(&mut out, "magnet_a", magnet_a);
            write_magnet(&mut out, "magnet_b", magnet_b);
        }
    }
    let _ = writeln!(out, "[dynamics]");
    let _ = writeln!(out, "moving_mass = {} kg", s.moving_mass);
    let _ = writeln!(out, "damping = {} N.s/m", s.damping);
    let _ = writeln!(out, "relaxation_stiffness = {} N/m", s.relaxation.stiffness);
    let _ = writeln!(out, "relaxation_time = {} s", s.relaxation.time_constant);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_paper_scenario, PaperVariant};

    const MASS_CONFIG: &str = "
# mass-biased reference actuator
[membrane]
inner_radius = 10 mm
outer_radius = 60 mm
initial_thickness = 1 mm
pre_stretch = 2.0
youngs_modulus = 0.158 MPa

[electrical]
series_resistance = 0.698 Mohm
capacitance = 2.2 nF

[bias]
kind = mass
mass = 27.1 g
";

    #[test]
    fn parses_mass_scenario_with_defaults() {
        let s = build_scenario(MASS_CONFIG).unwrap();
        assert_eq!(s.membrane.inner_radius, 0.01);
        assert_eq!(s.membrane.gent_limit, DEFAULT_GENT_LIMIT);
        assert_eq!(s.membrane.relative_permittivity, DEFAULT_PERMITTIVITY);
        match s.bias {
            BiasSpec::Mass { mass } => assert!((mass - 0.0271).abs() < 1e-15),
            _ => panic!("wrong bias"),
        }
        assert!(s.moving_mass > 0.0271);
        assert!(s.damping > 0.0);
    }

    #[test]
    fn missing_key_is_named() {
        let broken = MASS_CONFIG.replace("mass = 27.1 g", "");
        match build_scenario(&broken) {
            Err(Error::MissingKey { section, key }) => {
                assert_eq!(section, "bias");
                assert_eq!(key, "mass");
            }
            other => panic!("expected MissingKey, got {other:?}"),
        }
    }

    #[test]
    fn invariant_violation_is_reported() {
        let broken = MASS_CONFIG.replace("outer_radius = 60 mm", "outer_radius = 10 mm");
        assert!(matches!(build_scenario(&broken), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let broken = format!("{MASS_CONFIG}\n[bias]\ntypo_key = 3\n");
        match build_scenario(&broken) {
            Err(Error::Parse { line, message }) => {
                assert!(message.contains("typo_key"));
                assert!(line > 0);
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn mixture_density_from_config() {
        let text = format!(
            "{}\n",
            MASS_CONFIG.replace(
                "kind = mass\nmass = 27.1 g",
                "kind = pm_mre\noffset = 16 mm\nscale = 1.0"
            )
        ) + "
[magnet]
outer_radius = 10 mm
inner_radius = 2.1 mm
thickness = 5 mm
remanence = 1.23 T
coercivity = 145 kA/m
mass = 11.26 g

[disc]
radius = 10 mm
thickness = 4 mm
relative_permeability = 5.5
powder_mass_fraction = 0.40
silicone_density = 1100 kg/m3
powder_density = 6900 kg/m3
";
        let s = build_scenario(&text).unwrap();
        match &s.bias {
            BiasSpec::PmMre { disc, .. } => {
                let expected = 1.0 / (0.40 / 6900.0 + 0.60 / 1100.0);
                assert!((disc.density - expected).abs() < 1e-9 * expected);
            }
            _ => panic!("wrong bias"),
        }
    }

    #[test]
    fn round_trip_every_paper_variant() {
        for v in [
            PaperVariant::Mre15,
            PaperVariant::Mre30,
            PaperVariant::Mre40,
            PaperVariant::MassGrams(22.6),
        ] {
            let s = default_paper_scenario(v).unwrap();
            let text = scenario_to_config(&s);
            let back = build_scenario(&text).unwrap();
            assert_eq!(s, back, "round trip failed for {v:?}");
        }
    }

    #[test]
    fn round_trip_spring_biases() {
        let mut s = default_paper_scenario(PaperVariant::MassGrams(10.0)).unwrap();
        s.bias = BiasSpec::NonlinearSpring {
            c1: 40.0,
            c3: 2.0e6,
            preload: 0.3,
        };
        let back = build_scenario(&scenario_to_config(&s)).unwrap();
        assert_eq!(s, back);

        s.bias = BiasSpec::LinearSpring {
            stiffness: 100.0,
            preload: 1.0,
        };
        let back = build_scenario(&scenario_to_config(&s)).unwrap();
        assert_eq!(s, back);

        s.bias = BiasSpec::PmPm {
            magnet_a: RingMagnetSpec::n38_ring(),
            magnet_b: RingMagnetSpec::n38_ring(),
            offset: 20e-3,
        };
        let back = build_scenario(&scenario_to_config(&s)).unwrap();
        assert_eq!(s, back);
    }
}
