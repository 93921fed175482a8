//! Quasi-static lumped model of the pre-stretched annular membrane deformed
//! into a cone, with Maxwell-stress electrostatic softening.
//!
//! Kinematics: pulling the inner edge out of plane by `d` stretches the flank
//! from `b - a` to `L = sqrt((b-a)^2 + d^2)`, so the meridional stretch is
//! `lambda1 = lambda_pre L / (b - a)` while the hoop stretch stays frozen at
//! the pre-stretch. Incompressibility gives `t = t0 / (lambda1 lambda2)`.
//! The axial force is the vertical component of the meridional tension around
//! the inner edge:
//!
//! `f(d, V) = 2 pi a t (sigma1 - p_el) sin(theta)`, `sin(theta) = d / L`,
//!
//! with the Gent meridional stress
//! `sigma1 = (E/3)(lambda1^2 - 1/(lambda1^2 lambda2^2)) Jm / (Jm - (I1 - 3))`
//! and the Maxwell pressure `p_el = eps0 eps_r (V/t)^2`.

use crate::constants::EPS_0;
use crate::error::{Error, Result};
use crate::model::MembraneSpec;
use std::f64::consts::PI;

/// Kinematic and force state of the membrane at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneState {
    pub deflection: f64,
    pub voltage: f64,
    pub meridional_stretch: f64,
    pub current_thickness: f64,
    pub axial_force: f64,
}

/// Meridional stretch, current thickness and cone angle sine at deflection `d`.
pub fn stretch_state(spec: &MembraneSpec, d: f64) -> (f64, f64, f64) {
    let ba = spec.outer_radius - spec.inner_radius;
    let flank = ba.hypot(d);
    let lambda1 = spec.pre_stretch * flank / ba;
    let lambda2 = spec.pre_stretch;
    let t = spec.initial_thickness / (lambda1 * lambda2);
    let sin_theta = d / flank;
    (lambda1, t, sin_theta)
}

/// Electrostatic compressive stress across the film, `eps0 eps_r (V/t)^2`.
pub fn maxwell_pressure(spec: &MembraneSpec, voltage: f64, thickness: f64) -> f64 {
    let e_field = voltage / thickness;
    EPS_0 * spec.relative_permittivity * e_field * e_field
}

fn gent_stress(spec: &MembraneSpec, lambda1: f64, lambda2: f64) -> Result<f64> {
    let l1s = lambda1 * lambda1;
    let l2s = lambda2 * lambda2;
    let i1 = l1s + l2s + 1.0 / (l1s * l2s);
    let den = spec.gent_limit - (i1 - 3.0);
    if den <= 0.0 {
        return Err(Error::Lockup { lambda1 });
    }
    let shear_modulus = spec.youngs_modulus / 3.0;
    Ok(shear_modulus * (l1s - 1.0 / (l1s * l2s)) * spec.gent_limit / den)
}

/// Restoring axial force of the cone at deflection `d` and voltage `V` (N).
pub fn membrane_force(spec: &MembraneSpec, d: f64, voltage: f64) -> Result<f64> {
    if d < 0.0 {
        return Err(Error::Domain(format!("deflection must be >= 0, got {d} m")));
    }
    if voltage < 0.0 {
        return Err(Error::Domain(format!("voltage must be >= 0, got {voltage} V")));
    }
    let (lambda1, t, sin_theta) = stretch_state(spec, d);
    let sigma1 = gent_stress(spec, lambda1, spec.pre_stretch)?;
    let field = voltage / t;
    if field > spec.breakdown_field {
        return Err(Error::Breakdown {
            field_v_per_um: field * 1e-6,
            limit_v_per_um: spec.breakdown_field * 1e-6,
        });
    }
    let p_el = maxwell_pressure(spec, voltage, t);
    let net = sigma1 - p_el;
    if net < 0.0 {
        return Err(Error::Slack {
            deflection_mm: d * 1e3,
        });
    }
    Ok(2.0 * PI * spec.inner_radius * t * net * sin_theta)
}

/// Full state record at one operating point.
pub fn state_at(spec: &MembraneSpec, d: f64, voltage: f64) -> Result<MembraneState> {
    let (lambda1, t, _) = stretch_state(spec, d);
    let axial_force = membrane_force(spec, d, voltage)?;
    Ok(MembraneState {
        deflection: d,
        voltage,
        meridional_stretch: lambda1,
        current_thickness: t,
        axial_force,
    })
}

/// Small-signal stiffness df/dd at d = 0, V = 0 (N/m).
///
/// Used for damping and viscoelastic-branch defaults; at zero deflection the
/// cone force is `f ~ [2 pi a t sigma1 / (b - a)] d`.
pub fn small_signal_stiffness(spec: &MembraneSpec) -> f64 {
    let d = 1e-7;
    membrane_force(spec, d, 0.0).expect("valid at zero stretch increment") / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec() -> MembraneSpec {
        MembraneSpec::vhb_reference()
    }

    #[test]
    fn zero_deflection_zero_force() {
        let s = spec();
        for v in [0.0, 1000.0, 4000.0] {
            assert_eq!(membrane_force(&s, 0.0, v).unwrap(), 0.0);
        }
    }

    #[test]
    fn voltage_softens() {
        let s = spec();
        for d in [1e-3, 5e-3, 12e-3] {
            let f0 = membrane_force(&s, d, 0.0).unwrap();
            let f3 = membrane_force(&s, d, 3000.0).unwrap();
            assert!(f3 < f0, "Maxwell pressure must reduce the force");
        }
    }

    #[test]
    fn monotone_in_deflection_at_zero_voltage() {
        let s = spec();
        let mut prev = 0.0;
        let mut d = 5e-5;
        while d <= 20e-3 {
            let f = membrane_force(&s, d, 0.0).unwrap();
            assert!(f > prev, "force must increase with deflection, d = {d}");
            prev = f;
            d += 5e-5;
        }
    }

    #[test]
    fn softening_derivative_sign() {
        // df/dV < 0 at fixed d > 0 over [0, 5 kV]
        let s = spec();
        let d = 6e-3;
        let mut v = 0.0;
        while v < 5000.0 {
            let h = 10.0;
            let df = membrane_force(&s, d, v + h).unwrap() - membrane_force(&s, d, v).unwrap();
            assert!(df < 0.0, "df/dV must be < 0 at V = {v}");
            v += 250.0;
        }
    }

    #[test]
    fn stiffening_derivative_sign() {
        // df/dd > 0 at V = 0 over [0, 25 mm] on a 0.05 mm grid
        let s = spec();
        let mut d = 0.0;
        while d < 25e-3 {
            let h = 5e-5;
            let df = membrane_force(&s, d + h, 0.0).unwrap() - membrane_force(&s, d, 0.0).unwrap();
            assert!(df > 0.0, "df/dd must be > 0 at d = {d}");
            d += 5e-5;
        }
    }

    #[test]
    fn maxwell_pressure_values() {
        let s = spec();
        assert_eq!(maxwell_pressure(&s, 0.0, 0.25e-3), 0.0);
        let p1 = maxwell_pressure(&s, 2500.0, 0.25e-3);
        let p2 = maxwell_pressure(&s, 5000.0, 0.25e-3);
        assert_relative_eq!(p2, 4.0 * p1, max_relative = 1e-12);
        // 5 kV across 0.25 mm with eps_r = 4.7: eps0 * 4.7 * (2e7)^2
        let expected = EPS_0 * 4.7 * 4.0e14;
        assert_relative_eq!(p2, expected, max_relative = 1e-12);
        assert_relative_eq!(p2, 16645.87, max_relative = 1e-4);
    }

    #[test]
    fn stretch_state_anchors() {
        let s = spec();
        let (l1, t, sin) = stretch_state(&s, 0.0);
        assert_eq!(l1, 2.0);
        assert_relative_eq!(t, 0.25e-3, max_relative = 1e-12);
        assert_eq!(sin, 0.0);

        // 45 degree cone at d = b - a
        let (l1, _, sin) = stretch_state(&s, s.outer_radius - s.inner_radius);
        assert_relative_eq!(l1, 2.0 * 2.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(sin, 0.5f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn incompressibility_exact() {
        let s = spec();
        for d in [0.0, 3e-3, 11e-3, 24e-3] {
            let (l1, t, _) = stretch_state(&s, d);
            let l2 = s.pre_stretch;
            assert_relative_eq!(l1 * l2 * (t / s.initial_thickness), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn pre_stretch_stress_below_break_stress() {
        // sigma1 at lambda1 = lambda2 = 2, V = 0 stays below 0.233 MPa
        let s = spec();
        let sigma = gent_stress(&s, 2.0, 2.0).unwrap();
        assert!(sigma < 0.233e6, "sigma1 = {sigma}");
        assert!(sigma > 0.1e6);
    }

    #[test]
    fn breakdown_and_slack_errors() {
        let s = spec();
        // 0.25 mm film at 100 V/um limit: 25 kV breaks down
        assert!(matches!(
            membrane_force(&s, 1e-3, 26_000.0),
            Err(Error::Breakdown { .. })
        ));
        // low breakdown field spec to force slack first
        let mut weak = s.clone();
        weak.youngs_modulus = 1e3;
        weak.breakdown_field = 1e12;
        assert!(matches!(
            membrane_force(&weak, 1e-3, 20_000.0),
            Err(Error::Slack { .. })
        ));
    }

    #[test]
    fn lockup_error() {
        let mut s = spec();
        s.gent_limit = 5.4; // just above pre-stretch headroom 5.0625
        // large deflection pushes I1 past the limit
        let err = membrane_force(&s, 30e-3, 0.0).unwrap_err();
        assert!(matches!(err, Error::Lockup { .. }));
    }

    #[test]
    fn force_gradient_matches_finite_differences() {
        let s = spec();
        for d in [2e-3, 8e-3, 15e-3] {
            let h = 1e-7;
            let fd = (membrane_force(&s, d + h, 0.0).unwrap() - membrane_force(&s, d - h, 0.0).unwrap())
                / (2.0 * h);
            // second, finer stencil as the "analytic" stand-in quality gate
            let h2 = 5e-8;
            let fd2 = (membrane_force(&s, d + h2, 0.0).unwrap()
                - membrane_force(&s, d - h2, 0.0).unwrap())
                / (2.0 * h2);
            assert_relative_eq!(fd, fd2, max_relative = 1e-5);
        }
    }

    #[test]
    fn small_signal_stiffness_scale() {
        // reference membrane: ~69 N/m
        let k = small_signal_stiffness(&spec());
        assert!(k > 55.0 && k < 85.0, "k = {k}");
    }
}
