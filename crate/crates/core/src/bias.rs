//! Uniform bias-force abstraction over the five pre-load mechanisms, plus
//! slope-based classification into decreasing / constant / increasing.
//!
//! Sign convention: positive bias force pulls the disc away from the flat
//! membrane plane; the membrane force restores. Equilibrium is bias = membrane.

use crate::constants::G_ACCEL;
use crate::error::{Error, Result};
use crate::magnetics::{self, GapForceTable};
use crate::model::{MreDiscSpec, RingMagnetSpec};
use std::sync::Arc;

/// Minimum admissible gap between disc and magnet face (m).
pub const GAP_FLOOR: f64 = 1.0e-3;

/// The five bias mechanisms.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasSpec {
    /// Gravitational pre-load; force m g at every displacement.
    Mass { mass: f64 },
    /// Pre-loaded linear spring opposing the stroke (decreasing).
    LinearSpring { stiffness: f64, preload: f64 },
    /// Cubic spring `preload - c1 d + c3 d^3`; the increasing branch of the
    /// bi-stable mechanism.
    NonlinearSpring { c1: f64, c3: f64, preload: f64 },
    /// Ring magnet pulling the soft MRE disc; `offset` is the distance from
    /// the undeflected membrane plane to the magnet face.
    PmMre {
        magnet: RingMagnetSpec,
        disc: MreDiscSpec,
        offset: f64,
        scale: f64,
    },
    /// Two permanent magnets (comparison baseline).
    PmPm {
        magnet_a: RingMagnetSpec,
        magnet_b: RingMagnetSpec,
        offset: f64,
    },
}

impl BiasSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BiasSpec::Mass { mass } => {
                if *mass <= 0.0 {
                    return Err(Error::Validation("bias mass must be > 0".into()));
                }
            }
            BiasSpec::LinearSpring { stiffness, .. } => {
                if *stiffness < 0.0 {
                    return Err(Error::Validation("spring stiffness must be >= 0".into()));
                }
            }
            BiasSpec::NonlinearSpring { .. } => {}
            BiasSpec::PmMre { offset, scale, .. } => {
                if *offset <= GAP_FLOOR {
                    return Err(Error::Validation(format!(
                        "magnet offset must exceed the {} mm gap floor",
                        GAP_FLOOR * 1e3
                    )));
                }
                if *scale <= 0.0 {
                    return Err(Error::Validation("force scale must be > 0".into()));
                }
            }
            BiasSpec::PmPm { offset, .. } => {
                if *offset <= GAP_FLOOR {
                    return Err(Error::Validation(format!(
                        "magnet offset must exceed the {} mm gap floor",
                        GAP_FLOOR * 1e3
                    )));
                }
            }
        }
        Ok(())
    }

    /// Offset of a magnetic bias, if any.
    pub fn offset(&self) -> Option<f64> {
        match self {
            BiasSpec::PmMre { offset, .. } | BiasSpec::PmPm { offset, .. } => Some(*offset),
            _ => None,
        }
    }

    /// Copy with a replaced magnet offset (no-op for non-magnetic biases).
    pub fn with_offset(&self, new_offset: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            BiasSpec::PmMre { offset, .. } | BiasSpec::PmPm { offset, .. } => *offset = new_offset,
            _ => {}
        }
        out
    }

    /// Short lowercase name used in reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            BiasSpec::Mass { .. } => "mass",
            BiasSpec::LinearSpring { .. } => "linear_spring",
            BiasSpec::NonlinearSpring { .. } => "nonlinear_spring",
            BiasSpec::PmMre { .. } => "pm_mre",
            BiasSpec::PmPm { .. } => "pm_pm",
        }
    }
}

/// Slope classification of a bias over a displacement interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasClass {
    Decreasing,
    Constant,
    Increasing,
    Mixed,
}

impl std::fmt::Display for BiasClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BiasClass::Decreasing => write!(f, "decreasing"),
            BiasClass::Constant => write!(f, "constant"),
            BiasClass::Increasing => write!(f, "increasing"),
            BiasClass::Mixed => write!(f, "mixed"),
        }
    }
}

/// Bias evaluator: the spec plus any precomputed magnet table.
///
/// `PmMre` evaluation interpolates the shared [`GapForceTable`]; everything
/// else is closed form. A fitted force provider (from the fitting module) can
/// stand in for the physical model.
#[derive(Debug, Clone)]
pub enum BiasRuntime {
    Spec {
        spec: BiasSpec,
        table: Option<Arc<GapForceTable>>,
    },
    /// Exponential fit `a exp(-b gap) + c` evaluated at gap = offset - d.
    FittedExponential {
        amplitude: f64,
        decay_rate: f64,
        floor: f64,
        offset: f64,
        /// Gap range covered by the fitted data (m); excursions beyond it are
        /// reported as extrapolation.
        fitted_range: (f64, f64),
    },
}

impl BiasRuntime {
    pub fn new(spec: &BiasSpec) -> Self {
        let table = match spec {
            BiasSpec::PmMre { magnet, disc, .. } => Some(GapForceTable::new(magnet, disc)),
            _ => None,
        };
        BiasRuntime::Spec {
            spec: spec.clone(),
            table,
        }
    }

    pub fn table(&self) -> Option<Arc<GapForceTable>> {
        match self {
            BiasRuntime::Spec { table, .. } => table.clone(),
            _ => None,
        }
    }

    /// Same evaluator at a different magnet offset, reusing the table.
    pub fn with_offset(&self, new_offset: f64) -> Self {
        match self {
            BiasRuntime::Spec { spec, table } => BiasRuntime::Spec {
                spec: spec.with_offset(new_offset),
                table: table.clone(),
            },
            BiasRuntime::FittedExponential {
                amplitude,
                decay_rate,
                floor,
                fitted_range,
                ..
            } => BiasRuntime::FittedExponential {
                amplitude: *amplitude,
                decay_rate: *decay_rate,
                floor: *floor,
                offset: new_offset,
                fitted_range: *fitted_range,
            },
        }
    }

    pub fn offset(&self) -> Option<f64> {
        match self {
            BiasRuntime::Spec { spec, .. } => spec.offset(),
            BiasRuntime::FittedExponential { offset, .. } => Some(*offset),
        }
    }

    /// Largest admissible displacement for this bias (m).
    ///
    /// Magnetic biases stop one gap floor short of the magnet face; the others
    /// are capped at 25 mm to stay inside cone-model validity.
    pub fn admissible_max(&self) -> f64 {
        match self.offset() {
            Some(offset) => offset - GAP_FLOOR,
            None => 25.0e-3,
        }
    }

    /// True when evaluating at displacement `d` leaves the fitted gap range.
    pub fn extrapolates_at(&self, d: f64) -> bool {
        match self {
            BiasRuntime::FittedExponential {
                offset, fitted_range, ..
            } => {
                let gap = offset - d;
                gap < fitted_range.0 || gap > fitted_range.1
            }
            _ => false,
        }
    }

    /// Bias force at displacement `d` toward the magnet (N).
    pub fn force(&self, d: f64) -> Result<f64> {
        if d < 0.0 {
            return Err(Error::Domain(format!("displacement must be >= 0, got {d} m")));
        }
        match self {
            BiasRuntime::Spec { spec, table } => match spec {
                BiasSpec::Mass { mass } => Ok(mass * G_ACCEL),
                BiasSpec::LinearSpring { stiffness, preload } => {
                    Ok((preload - stiffness * d).max(0.0))
                }
                BiasSpec::NonlinearSpring { c1, c3, preload } => Ok(preload - c1 * d + c3 * d * d * d),
                BiasSpec::PmMre {
                    magnet,
                    disc,
                    offset,
                    scale,
                } => {
                    let gap = offset - d;
                    if gap < GAP_FLOOR - 1e-12 {
                        return Err(Error::Contact {
                            displacement_mm: d * 1e3,
                        });
                    }
                    match table {
                        Some(t) => Ok(t.force(magnet, disc, gap, *scale)),
                        None => magnetics::pm_mre_force(magnet, disc, gap, *scale),
                    }
                }
                BiasSpec::PmPm {
                    magnet_a,
                    magnet_b,
                    offset,
                } => {
                    let gap = offset - d;
                    if gap < GAP_FLOOR - 1e-12 {
                        return Err(Error::Contact {
                            displacement_mm: d * 1e3,
                        });
                    }
                    magnetics::pm_pm_force(magnet_a, magnet_b, gap)
                }
            },
            BiasRuntime::FittedExponential {
                amplitude,
                decay_rate,
                floor,
                offset,
                ..
            } => {
                let gap = offset - d;
                if gap < GAP_FLOOR - 1e-12 {
                    return Err(Error::Contact {
                        displacement_mm: d * 1e3,
                    });
                }
                Ok(amplitude * (-decay_rate * gap).exp() + floor)
            }
        }
    }
}

/// Convenience: evaluate a bare [`BiasSpec`] at one displacement.
///
/// Builds the magnet table on demand for `PmMre`; prefer [`BiasRuntime`] in
/// loops.
pub fn bias_force(spec: &BiasSpec, d: f64) -> Result<f64> {
    match spec {
        BiasSpec::PmMre {
            magnet,
            disc,
            offset,
            scale,
        } => {
            if d < 0.0 {
                return Err(Error::Domain(format!("displacement must be >= 0, got {d} m")));
            }
            let gap = offset - d;
            if gap < GAP_FLOOR - 1e-12 {
                return Err(Error::Contact {
                    displacement_mm: d * 1e3,
                });
            }
            magnetics::pm_mre_force(magnet, disc, gap, *scale)
        }
        _ => BiasRuntime::new(spec).force(d),
    }
}

/// Classify the force slope on `[d_lo, d_hi]` by sampling a 101-point grid.
///
/// Increasing / Decreasing when every forward difference clears
/// `+-tolerance * max|F|`; Constant when all stay inside the band; Mixed
/// otherwise. Classification is invariant under positive scaling of the force.
pub fn classify_bias(
    runtime: &BiasRuntime,
    interval: (f64, f64),
    tolerance: f64,
) -> Result<BiasClass> {
    let (lo, hi) = interval;
    if !(lo < hi) || lo < 0.0 {
        return Err(Error::Domain(format!(
            "classification interval must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
        )));
    }
    const N: usize = 101;
    let mut forces = [0.0; N];
    for (i, f) in forces.iter_mut().enumerate() {
        let d = lo + (hi - lo) * i as f64 / (N - 1) as f64;
        *f = runtime.force(d)?;
    }
    let fmax = forces.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    let band = tolerance * fmax;
    let mut all_up = true;
    let mut all_down = true;
    let mut all_flat = true;
    for w in forces.windows(2) {
        let diff = w[1] - w[0];
        if diff <= band {
            all_up = false;
        }
        if diff >= -band {
            all_down = false;
        }
        if diff.abs() > band {
            all_flat = false;
        }
    }
    Ok(if all_up {
        BiasClass::Increasing
    } else if all_down {
        BiasClass::Decreasing
    } else if all_flat {
        BiasClass::Constant
    } else {
        BiasClass::Mixed
    })
}

/// Default classification tolerance.
pub const CLASSIFY_TOLERANCE: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetics::reference_scale;
    use crate::model::{default_offset, paper_disc, PaperVariant};
    use approx::assert_relative_eq;

    fn pm_mre(variant: PaperVariant, offset: f64) -> BiasSpec {
        BiasSpec::PmMre {
            magnet: RingMagnetSpec::n38_ring(),
            disc: paper_disc(variant).unwrap(),
            offset,
            scale: reference_scale(),
        }
    }

    #[test]
    fn mass_is_constant_mg() {
        let rt = BiasRuntime::new(&BiasSpec::Mass { mass: 0.0271 });
        for d in [0.0, 3e-3, 20e-3] {
            assert_relative_eq!(rt.force(d).unwrap(), 0.0271 * G_ACCEL, max_relative = 1e-15);
        }
    }

    #[test]
    fn linear_spring_arithmetic() {
        let rt = BiasRuntime::new(&BiasSpec::LinearSpring {
            stiffness: 100.0,
            preload: 1.0,
        });
        assert_relative_eq!(rt.force(5e-3).unwrap(), 0.5, max_relative = 1e-12);
        // clamps at zero once the preload is spent
        assert_eq!(rt.force(15e-3).unwrap(), 0.0);
    }

    #[test]
    fn pm_mre_grows_with_displacement() {
        let rt = BiasRuntime::new(&pm_mre(PaperVariant::Mre40, 15e-3));
        let f1 = rt.force(2e-3).unwrap();
        let f2 = rt.force(6e-3).unwrap();
        assert!(f2 > f1);
    }

    #[test]
    fn pm_mre_contact_error() {
        let rt = BiasRuntime::new(&pm_mre(PaperVariant::Mre40, 10e-3));
        assert!(matches!(rt.force(9.5e-3), Err(Error::Contact { .. })));
    }

    #[test]
    fn classify_table_one() {
        let tol = CLASSIFY_TOLERANCE;
        let mass = BiasRuntime::new(&BiasSpec::Mass { mass: 0.0271 });
        assert_eq!(classify_bias(&mass, (0.0, 20e-3), tol).unwrap(), BiasClass::Constant);

        let spring = BiasRuntime::new(&BiasSpec::LinearSpring {
            stiffness: 100.0,
            preload: 3.0,
        });
        assert_eq!(
            classify_bias(&spring, (0.0, 20e-3), tol).unwrap(),
            BiasClass::Decreasing
        );

        // increasing branch of the cubic spring
        let nls = BiasRuntime::new(&BiasSpec::NonlinearSpring {
            c1: 40.0,
            c3: 2.0e6,
            preload: 0.3,
        });
        assert_eq!(
            classify_bias(&nls, (5e-3, 15e-3), tol).unwrap(),
            BiasClass::Increasing
        );
        // same spring over an interval straddling its minimum is mixed
        assert_eq!(classify_bias(&nls, (0.0, 15e-3), tol).unwrap(), BiasClass::Mixed);

        for (v, off) in [
            (PaperVariant::Mre15, default_offset(PaperVariant::Mre15).unwrap()),
            (PaperVariant::Mre30, default_offset(PaperVariant::Mre30).unwrap()),
            (PaperVariant::Mre40, default_offset(PaperVariant::Mre40).unwrap()),
        ] {
            let rt = BiasRuntime::new(&pm_mre(v, off));
            assert_eq!(
                classify_bias(&rt, (0.0, off - 5e-3), tol).unwrap(),
                BiasClass::Increasing
            );
        }

        let pmpm = BiasRuntime::new(&BiasSpec::PmPm {
            magnet_a: RingMagnetSpec::n38_ring(),
            magnet_b: RingMagnetSpec::n38_ring(),
            offset: 12e-3,
        });
        assert_eq!(
            classify_bias(&pmpm, (0.0, 8e-3), tol).unwrap(),
            BiasClass::Increasing
        );
        // the dipole force spans so many decades that far-end steps fall
        // below the relative band on a wide interval
        assert_eq!(
            classify_bias(&pmpm, (0.0, 11e-3), tol).unwrap(),
            BiasClass::Mixed
        );
    }

    #[test]
    fn classification_scale_invariant() {
        let tol = CLASSIFY_TOLERANCE;
        for scale in [0.1, 1.0, 42.0] {
            let rt = BiasRuntime::new(&BiasSpec::PmMre {
                magnet: RingMagnetSpec::n38_ring(),
                disc: paper_disc(PaperVariant::Mre30).unwrap(),
                offset: 15e-3,
                scale,
            });
            assert_eq!(
                classify_bias(&rt, (0.0, 10e-3), tol).unwrap(),
                BiasClass::Increasing
            );
        }
        for mass in [1e-3, 27.1e-3, 5.0] {
            let rt = BiasRuntime::new(&BiasSpec::Mass { mass });
            assert_eq!(classify_bias(&rt, (0.0, 20e-3), tol).unwrap(), BiasClass::Constant);
        }
    }

    #[test]
    fn continuity_on_micron_grid() {
        // no jumps between adjacent 1 um samples anywhere admissible
        let runtimes = [
            BiasRuntime::new(&pm_mre(PaperVariant::Mre15, 13e-3)),
            BiasRuntime::new(&BiasSpec::NonlinearSpring {
                c1: 40.0,
                c3: 2e6,
                preload: 0.3,
            }),
            BiasRuntime::new(&BiasSpec::LinearSpring {
                stiffness: 100.0,
                preload: 1.0,
            }),
        ];
        for rt in &runtimes {
            let dmax = rt.admissible_max().min(20e-3);
            let mut prev = rt.force(0.0).unwrap();
            let mut d = 1e-6;
            let mut fmax: f64 = prev.abs();
            while d <= dmax {
                let f = rt.force(d).unwrap();
                fmax = fmax.max(f.abs());
                assert!(
                    (f - prev).abs() <= 1e-3 * fmax.max(1e-9),
                    "jump at d = {d}: {prev} -> {f}"
                );
                prev = f;
                d += 1e-6;
            }
        }
    }

    #[test]
    fn runtime_bias_matches_direct_model() {
        let spec = pm_mre(PaperVariant::Mre40, 15e-3);
        let rt = BiasRuntime::new(&spec);
        for d in [0.0, 2e-3, 5e-3, 9e-3] {
            let via_table = rt.force(d).unwrap();
            let direct = bias_force(&spec, d).unwrap();
            assert_relative_eq!(via_table, direct, max_relative = 2e-4);
        }
    }

    #[test]
    fn with_offset_shares_table() {
        let rt = BiasRuntime::new(&pm_mre(PaperVariant::Mre30, 15e-3));
        let t1 = rt.table().unwrap();
        let rt2 = rt.with_offset(12e-3);
        let t2 = rt2.table().unwrap();
        assert!(Arc::ptr_eq(&t1, &t2));
        assert_eq!(rt2.offset(), Some(12e-3));
    }
}
