//! Semi-analytic magnetostatics of the ring magnet / MRE disc bias.
//!
//! The ring magnet is a uniformly axially magnetized cylinder minus its bore,
//! represented by magnetic surface charge sheets of density +-M on the end
//! faces. Two levels of model are provided:
//!
//! * [`axial_b_field`] — the closed-form on-axis flux density of the ring,
//!   `B(z) = (B_r/2) [ u/sqrt(u^2+R^2) ]` summed over faces and radii, with
//!   its analytic derivative [`axial_b_field_gradient`].
//! * [`pm_mre_force`] — the force on the soft disc. The disc is given a
//!   uniform induced magnetization `M_d = chi_eff H / (1 + chi_eff H / M_sat)`
//!   driven by the volume-averaged field `H`, and the force is the charge-sheet
//!   interaction between the magnet faces and the induced disc faces. Both the
//!   average field and the interaction reduce to one-dimensional Hankel
//!   integrals over the radial wavenumber `k`:
//!
//!   `Hbar(g)  = (M/2) Int T(k) S(k) W_L(k) (1-e^{-kt})/(kt) e^{-kg} dk`
//!   `F(g)     = mu0 pi a^2 M_d(g) (M/2) Int T(k) S(k) W_L(k) (1-e^{-kt}) e^{-kg} dk`
//!
//!   with `S(k) = Ro J1(k Ro) - Ri J1(k Ri)` (magnet faces),
//!   `T(k) = 2 J1(k a)/(k a)` (disc area average) and `W_L = 1 - e^{-kL}`.
//!
//! Evaluating the field on the axis only is *not* a usable force model here:
//! the bore of the reference magnet reverses the on-axis field near the face,
//! which a 20 mm disc never feels. The gradient variant
//! [`pm_mre_force_gradient`] is retained for error estimation.

use crate::constants::MU_0;
use crate::error::{Error, Result};
use crate::model::{MreDiscSpec, RingMagnetSpec};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Origin of a force-gap curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSource {
    Model,
    Measurement,
    Fit,
}

impl std::fmt::Display for CurveSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurveSource::Model => write!(f, "model"),
            CurveSource::Measurement => write!(f, "measurement"),
            CurveSource::Fit => write!(f, "fit"),
        }
    }
}

/// Force versus gap characteristic, gaps strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceCurve {
    points: Vec<(f64, f64)>,
    pub source: CurveSource,
}

impl ForceCurve {
    pub fn new(points: Vec<(f64, f64)>, source: CurveSource) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation("force curve needs at least 2 points".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Validation("force curve gaps must be strictly increasing".into()));
            }
        }
        if points.iter().any(|&(g, f)| !g.is_finite() || !f.is_finite() || f < 0.0) {
            return Err(Error::Validation("force curve values must be finite and forces >= 0".into()));
        }
        Ok(Self { points, source })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn forces(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn peak_force(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// closed-form on-axis field
// ---------------------------------------------------------------------------

fn cylinder_face_term(u: f64, radius: f64) -> f64 {
    u / u.hypot(radius)
}

fn b_solid_cylinder(z: f64, radius: f64, length: f64, remanence: f64) -> f64 {
    0.5 * remanence * (cylinder_face_term(z + length, radius) - cylinder_face_term(z, radius))
}

fn db_solid_cylinder(z: f64, radius: f64, length: f64, remanence: f64) -> f64 {
    let r2 = radius * radius;
    let far = (z + length) * (z + length) + r2;
    let near = z * z + r2;
    0.5 * remanence * (r2 / (far * far.sqrt()) - r2 / (near * near.sqrt()))
}

/// On-axis flux density of the ring magnet at distance `z` from the near face.
///
/// Superposition of two coaxial solid cylinders (outer radius minus bore);
/// linear in the remanence. Inside the bore shadow (small `z`) the field is
/// reversed — a real feature of ring magnets.
pub fn axial_b_field(magnet: &RingMagnetSpec, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Domain(format!("axial distance must be > 0, got {z} m")));
    }
    Ok(b_solid_cylinder(z, magnet.outer_radius, magnet.thickness, magnet.remanence)
        - b_solid_cylinder(z, magnet.inner_radius, magnet.thickness, magnet.remanence))
}

/// Analytic dB/dz of [`axial_b_field`].
pub fn axial_b_field_gradient(magnet: &RingMagnetSpec, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Domain(format!("axial distance must be > 0, got {z} m")));
    }
    Ok(db_solid_cylinder(z, magnet.outer_radius, magnet.thickness, magnet.remanence)
        - db_solid_cylinder(z, magnet.inner_radius, magnet.thickness, magnet.remanence))
}

// ---------------------------------------------------------------------------
// shape and susceptibility
// ---------------------------------------------------------------------------

/// Axial magnetometric demagnetizing factor of the disc,
/// `N = 1 / (1 + (4/pi)(L/D))`.
pub fn demag_factor(disc: &MreDiscSpec) -> f64 {
    let aspect = disc.thickness / (2.0 * disc.radius);
    1.0 / (1.0 + (4.0 / PI) * aspect)
}

/// Effective susceptibility of a shaped soft magnet,
/// `chi_eff = (mu_r - 1) / (1 + N (mu_r - 1))`.
pub fn effective_susceptibility(mu_r: f64, n: f64) -> f64 {
    let chi = mu_r - 1.0;
    chi / (1.0 + n * chi)
}

fn disc_chi_eff(disc: &MreDiscSpec) -> f64 {
    effective_susceptibility(disc.relative_permeability, demag_factor(disc))
}

// ---------------------------------------------------------------------------
// Bessel J1 and the sheet integrals
// ---------------------------------------------------------------------------

/// Bessel function of the first kind, order one (rational approximations,
/// absolute error below ~4e-8).
fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let num = x
            * (72362614232.0
                + y * (-7895059235.0
                    + y * (242396853.1 + y * (-2972611.439 + y * (15704.48260 + y * (-30.16036606))))));
        let den = 144725228442.0
            + y * (2300535178.0 + y * (18583304.74 + y * (99447.43394 + y * (376.9991397 + y))));
        num / den
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let xx = ax - 2.356194491;
        let p1 = 1.0
            + y * (0.183105e-2
                + y * (-0.3516396496e-4 + y * (0.2457520174e-5 + y * (-0.240337019e-6))));
        let p2 = 0.04687499995
            + y * (-0.2002690873e-3
                + y * (0.8449199096e-5 + y * (-0.88228987e-6 + y * 0.105787412e-6)));
        let v = (0.636619772 / ax).sqrt() * (xx.cos() * p1 - z * xx.sin() * p2);
        if x < 0.0 {
            -v
        } else {
            v
        }
    }
}

/// `(Q1, Q2)` Hankel integrals of the magnet-disc pair at the given gap.
///
/// Composite Simpson over `k in (0, kmax]`; the integrand decays like
/// `e^{-k(g + small)} / k^2` so `kmax = 40/g` bounds the truncation error well
/// below other model error.
fn sheet_integrals(
    ro: f64,
    ri: f64,
    lm: f64,
    disc_radius: f64,
    disc_thickness: f64,
    gap: f64,
) -> (f64, f64) {
    let kmax = (40.0 / gap.max(4e-4)).min(2.0e5) + 2000.0;
    // resolve the J1 oscillation (period pi/Ro) with plenty of margin
    let n_half = (((kmax * ro.max(disc_radius) / PI) * 24.0) as usize).clamp(2048, 40000);
    let n = 2 * n_half;
    let h = kmax / n as f64;
    let a = disc_radius;
    let t = disc_thickness;
    let eval = |k: f64| -> (f64, f64) {
        if k <= 0.0 {
            return (0.0, 0.0);
        }
        let ka = k * a;
        let tk = if ka < 1e-9 { 1.0 } else { 2.0 * bessel_j1(ka) / ka };
        let sk = ro * bessel_j1(k * ro) - ri * bessel_j1(k * ri);
        let base = tk * sk * (1.0 - (-k * lm).exp()) * (1.0 - (-k * t).exp()) * (-k * gap).exp();
        (base / (k * t), base)
    };
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for i in 1..n {
        let k = i as f64 * h;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        let (f1, f2) = eval(k);
        s1 += w * f1;
        s2 += w * f2;
    }
    let (e1, e2) = eval(kmax);
    s1 += e1;
    s2 += e2;
    (s1 * h / 3.0, s2 * h / 3.0)
}

fn force_from_integrals(
    magnet: &RingMagnetSpec,
    disc: &MreDiscSpec,
    q1: f64,
    q2: f64,
    scale: f64,
) -> f64 {
    let m_sheet = 0.5 * magnet.remanence / MU_0;
    let h_avg = m_sheet * q1;
    let m_lin = disc_chi_eff(disc) * h_avg;
    let m_d = m_lin / (1.0 + m_lin / disc.saturation_magnetization);
    scale * MU_0 * PI * disc.radius * disc.radius * m_d * m_sheet * q2
}

/// Attractive force between the ring magnet and the soft disc at the given
/// face-to-face gap (N, >= 0). `scale` is the single calibration factor.
pub fn pm_mre_force(magnet: &RingMagnetSpec, disc: &MreDiscSpec, gap: f64, scale: f64) -> Result<f64> {
    if gap <= 0.0 {
        return Err(Error::Domain(format!("gap must be > 0, got {gap} m")));
    }
    let (q1, q2) = sheet_integrals(
        magnet.outer_radius,
        magnet.inner_radius,
        magnet.thickness,
        disc.radius,
        disc.thickness,
        gap,
    );
    Ok(force_from_integrals(magnet, disc, q1, q2, scale))
}

/// Axial sampling for the dipole-in-gradient estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxialSampling {
    /// Evaluate H dH/dz at the disc mid-plane only.
    MidPlane,
    /// 5-point Gauss-Legendre average over the disc thickness.
    FivePoint,
}

/// Lumped dipole-in-gradient force estimate,
/// `F = scale mu0 chi_eff V H(z) |dH/dz|` with the on-axis field.
///
/// Provided for error estimation against [`pm_mre_force`]; the on-axis
/// evaluation overweights the bore and degrades within ~5 mm of the face.
pub fn pm_mre_force_gradient(
    magnet: &RingMagnetSpec,
    disc: &MreDiscSpec,
    gap: f64,
    scale: f64,
    sampling: AxialSampling,
) -> Result<f64> {
    if gap <= 0.0 {
        return Err(Error::Domain(format!("gap must be > 0, got {gap} m")));
    }
    let chi = disc_chi_eff(disc);
    let volume = PI * disc.radius * disc.radius * disc.thickness;
    let hh = |z: f64| -> Result<f64> {
        let b = axial_b_field(magnet, z)?;
        let db = axial_b_field_gradient(magnet, z)?;
        Ok(b * db / (MU_0 * MU_0))
    };
    let avg = match sampling {
        AxialSampling::MidPlane => hh(gap + 0.5 * disc.thickness)?,
        AxialSampling::FivePoint => {
            // Gauss-Legendre nodes/weights on [-1, 1]
            const X: [f64; 5] = [
                -0.906179845938664,
                -0.538469310105683,
                0.0,
                0.538469310105683,
                0.906179845938664,
            ];
            const W: [f64; 5] = [
                0.236926885056189,
                0.478628670499366,
                0.568888888888889,
                0.478628670499366,
                0.236926885056189,
            ];
            let mid = gap + 0.5 * disc.thickness;
            let half = 0.5 * disc.thickness;
            let mut acc = 0.0;
            for (x, w) in X.iter().zip(W.iter()) {
                acc += w * hh(mid + half * x)?;
            }
            acc * 0.5
        }
    };
    Ok(-scale * MU_0 * chi * volume * avg)
}

/// Coaxial dipole-dipole attraction between two magnets,
/// `F = 3 mu0 m_a m_b / (2 pi d^4)` with `d` the centre-to-centre distance.
///
/// Far-field quality only; used as the comparison baseline for the two-magnet
/// bias of earlier designs.
pub fn pm_pm_force(magnet_a: &RingMagnetSpec, magnet_b: &RingMagnetSpec, gap: f64) -> Result<f64> {
    if gap <= 0.0 {
        return Err(Error::Domain(format!("gap must be > 0, got {gap} m")));
    }
    let moment = |m: &RingMagnetSpec| {
        let volume = PI * (m.outer_radius.powi(2) - m.inner_radius.powi(2)) * m.thickness;
        m.remanence * volume / MU_0
    };
    let d = gap + 0.5 * magnet_a.thickness + 0.5 * magnet_b.thickness;
    Ok(3.0 * MU_0 * moment(magnet_a) * moment(magnet_b) / (2.0 * PI * d.powi(4)))
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

/// Parameters for a force-gap sweep.
#[derive(Debug, Clone)]
pub enum ForceModel {
    PmMre {
        magnet: RingMagnetSpec,
        disc: MreDiscSpec,
        scale: f64,
    },
    PmPm {
        magnet_a: RingMagnetSpec,
        magnet_b: RingMagnetSpec,
    },
}

/// The default measurement grid: 22 points from 5 mm to 50 mm.
pub fn default_gap_grid() -> Vec<f64> {
    let (lo, hi, n) = (5.0e-3, 50.0e-3, 22);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluate the model on a strictly increasing gap grid.
pub fn force_sweep(model: &ForceModel, gaps: &[f64]) -> Result<ForceCurve> {
    if gaps.len() < 2 {
        return Err(Error::Domain("sweep grid needs at least 2 gaps".into()));
    }
    for w in gaps.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Domain("sweep grid must be strictly increasing".into()));
        }
    }
    if gaps[0] <= 0.0 {
        return Err(Error::Domain("sweep gaps must be > 0".into()));
    }
    let eval = |g: f64| -> Result<f64> {
        match model {
            ForceModel::PmMre { magnet, disc, scale } => pm_mre_force(magnet, disc, g, *scale),
            ForceModel::PmPm { magnet_a, magnet_b } => pm_pm_force(magnet_a, magnet_b, g),
        }
    };
    let points = gaps
        .iter()
        .map(|&g| eval(g).map(|f| (g, f)))
        .collect::<Result<Vec<_>>>()?;
    ForceCurve::new(points, CurveSource::Model)
}

/// Calibration factor making the model reproduce `target` newtons at `gap`.
pub fn calibrate_scale(magnet: &RingMagnetSpec, disc: &MreDiscSpec, gap: f64, target: f64) -> Result<f64> {
    let raw = pm_mre_force(magnet, disc, gap, 1.0)?;
    if raw <= 0.0 {
        return Err(Error::Domain("cannot calibrate against a vanishing model force".into()));
    }
    Ok(target / raw)
}

/// Scale calibrated against the reference anchor: MRE40 disc, 5 mm gap, 0.6 N.
pub fn reference_scale() -> f64 {
    static SCALE: OnceLock<f64> = OnceLock::new();
    *SCALE.get_or_init(|| {
        let magnet = RingMagnetSpec::n38_ring();
        let disc = crate::model::paper_disc(crate::model::PaperVariant::Mre40).expect("disc");
        calibrate_scale(&magnet, &disc, 5.0e-3, 0.6).expect("reference calibration")
    })
}

// ---------------------------------------------------------------------------
// precomputed gap table (monotone cubic interpolation of Q1, Q2 in log-log)
// ---------------------------------------------------------------------------

/// Dense precomputed `(Q1, Q2)` table for one magnet/disc geometry.
///
/// The solvers evaluate the bias force millions of times; interpolating the
/// geometry integrals on a 384-node log grid reproduces the direct quadrature
/// to better than 1e-5 relative while costing nanoseconds per call.
#[derive(Debug)]
pub struct GapForceTable {
    log_gap: Vec<f64>,
    q1: MonotoneCubic,
    q2: MonotoneCubic,
    gap_lo: f64,
    gap_hi: f64,
}

impl GapForceTable {
    const NODES: usize = 384;
    const GAP_LO: f64 = 4.0e-4;
    const GAP_HI: f64 = 0.150;

    pub fn new(magnet: &RingMagnetSpec, disc: &MreDiscSpec) -> Arc<Self> {
        let n = Self::NODES;
        let (lo, hi) = (Self::GAP_LO.ln(), Self::GAP_HI.ln());
        let log_gap: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let mut lq1 = Vec::with_capacity(n);
        let mut lq2 = Vec::with_capacity(n);
        for &lg in &log_gap {
            let (q1, q2) = sheet_integrals(
                magnet.outer_radius,
                magnet.inner_radius,
                magnet.thickness,
                disc.radius,
                disc.thickness,
                lg.exp(),
            );
            debug_assert!(q1 > 0.0 && q2 > 0.0);
            lq1.push(q1.ln());
            lq2.push(q2.ln());
        }
        let q1 = MonotoneCubic::new(&log_gap, &lq1);
        let q2 = MonotoneCubic::new(&log_gap, &lq2);
        Arc::new(Self {
            log_gap,
            q1,
            q2,
            gap_lo: Self::GAP_LO,
            gap_hi: Self::GAP_HI,
        })
    }

    /// Interpolated `(Q1, Q2)`; clamps to power-law extrapolation outside the
    /// tabulated range.
    pub fn integrals(&self, gap: f64) -> (f64, f64) {
        let x = gap.clamp(self.gap_lo, self.gap_hi).ln();
        let (a, b) = (self.q1.eval(&self.log_gap, x), self.q2.eval(&self.log_gap, x));
        (a.exp(), b.exp())
    }

    /// Bias force at `gap` for the disc the table was built against.
    pub fn force(&self, magnet: &RingMagnetSpec, disc: &MreDiscSpec, gap: f64, scale: f64) -> f64 {
        let (q1, q2) = self.integrals(gap);
        force_from_integrals(magnet, disc, q1, q2, scale)
    }
}

/// Fritsch-Carlson monotone cubic Hermite data (slopes per node).
#[derive(Debug)]
struct MonotoneCubic {
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut delta = vec![0.0; n - 1];
        for i in 0..n - 1 {
            delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        }
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
                let w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Self { y: y.to_vec(), d }
    }

    fn eval(&self, x: &[f64], xq: f64) -> f64 {
        let n = x.len();
        let i = match x.binary_search_by(|v| v.partial_cmp(&xq).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = x[i + 1] - x[i];
        let s = (xq - x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{paper_disc, PaperVariant};
    use approx::assert_relative_eq;

    fn magnet() -> RingMagnetSpec {
        RingMagnetSpec::n38_ring()
    }

    fn disc40() -> MreDiscSpec {
        paper_disc(PaperVariant::Mre40).unwrap()
    }

    fn linear_disc(mur: f64) -> MreDiscSpec {
        let mut d = disc40();
        d.relative_permeability = mur;
        d.saturation_magnetization = f64::INFINITY;
        d
    }

    #[test]
    fn bessel_j1_reference_values() {
        assert_relative_eq!(bessel_j1(1.0), 0.4400505857449335, epsilon = 1e-7);
        assert_relative_eq!(bessel_j1(2.0), 0.5767248077568734, epsilon = 1e-7);
        assert!(bessel_j1(3.8317059702075123).abs() < 1e-7);
        assert!(bessel_j1(7.0155866698156188).abs() < 1e-7);
        assert_relative_eq!(bessel_j1(10.0), 0.04347274616886144, epsilon = 1e-7);
        assert_relative_eq!(bessel_j1(-2.0), -0.5767248077568734, epsilon = 1e-7);
    }

    #[test]
    fn field_far_limit_matches_point_dipole() {
        // moment = B_r V / mu0; on-axis dipole field mu0 m / (2 pi z^3)
        let m = magnet();
        let volume = PI * (m.outer_radius.powi(2) - m.inner_radius.powi(2)) * m.thickness;
        let moment = m.remanence * volume / MU_0;
        let z = 1.0;
        let z_c = z + 0.5 * m.thickness; // dipole sits at the magnet centre
        let b_dip = MU_0 * moment / (2.0 * PI * z_c.powi(3));
        let b = axial_b_field(&m, z).unwrap();
        assert!(b.abs() < 1e-5, "|B(1 m)| = {b}");
        assert_relative_eq!(b, b_dip, max_relative = 1e-3);
    }

    #[test]
    fn field_linear_in_remanence() {
        let m = magnet();
        let mut m2 = m.clone();
        m2.remanence *= 2.0;
        for z in [1e-3, 5e-3, 0.02, 0.1] {
            assert_relative_eq!(
                axial_b_field(&m2, z).unwrap(),
                2.0 * axial_b_field(&m, z).unwrap(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn field_matches_surface_charge_quadrature() {
        // oracle: radial quadrature of charged annular sheets on the axis,
        // dB = (Br/2) * h r dr / (r^2 + h^2)^{3/2}
        let m = magnet();
        let sheet = |h: f64| {
            let n = 20000;
            let mut acc = 0.0;
            for i in 0..n {
                let r = m.inner_radius + (m.outer_radius - m.inner_radius) * (i as f64 + 0.5) / n as f64;
                let dr = (m.outer_radius - m.inner_radius) / n as f64;
                acc += h * r * dr / (r * r + h * h).powf(1.5);
            }
            0.5 * m.remanence * acc
        };
        for z in [1.5e-3, 5e-3, 12e-3, 40e-3] {
            let oracle = sheet(z) - sheet(z + m.thickness);
            assert_relative_eq!(axial_b_field(&m, z).unwrap(), oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn field_monotone_beyond_the_bore_shadow() {
        // the bore reverses B near the face; beyond ~4.3 mm the field decays
        // monotonically. Checked here on [5, 100] mm.
        let m = magnet();
        let mut prev = axial_b_field(&m, 5e-3).unwrap();
        let mut z = 5.1e-3;
        while z <= 0.1 {
            let b = axial_b_field(&m, z).unwrap();
            assert!(b < prev, "B not decreasing at z = {z}");
            prev = b;
            z += 1e-4;
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = magnet();
        let mut z = 2e-3;
        while z <= 0.1 {
            let h = 1e-7;
            let fd = (axial_b_field(&m, z + h).unwrap() - axial_b_field(&m, z - h).unwrap()) / (2.0 * h);
            let an = axial_b_field_gradient(&m, z).unwrap();
            assert_relative_eq!(an, fd, max_relative = 1e-6);
            z += 1e-3;
        }
    }

    #[test]
    fn field_domain_error() {
        assert!(matches!(axial_b_field(&magnet(), 0.0), Err(Error::Domain(_))));
        assert!(matches!(axial_b_field(&magnet(), -1e-3), Err(Error::Domain(_))));
    }

    #[test]
    fn demag_limits() {
        let mut d = disc40();
        d.thickness = 1e-9; // thin sheet: N -> 1
        assert!(demag_factor(&d) > 0.999);
        d.thickness = 1e3; // long rod: N -> 0
        assert!(demag_factor(&d) < 1e-4);
    }

    #[test]
    fn demag_paper_disc_value() {
        // L = 4 mm, D = 20 mm: N = 1 / (1 + (4/pi) * 0.2)
        let expected = 1.0 / (1.0 + (4.0 / PI) * 0.2);
        assert_relative_eq!(demag_factor(&disc40()), expected, epsilon = 1e-15);
    }

    #[test]
    fn susceptibility_cases() {
        let n = demag_factor(&disc40());
        assert_eq!(effective_susceptibility(1.0, n), 0.0);
        assert_relative_eq!(effective_susceptibility(5.5, 1e-12), 4.5, max_relative = 1e-9);
        assert!(effective_susceptibility(5.5, n) < 4.5);
        // increasing in mu_r
        assert!(effective_susceptibility(2.24, n) < effective_susceptibility(4.21, n));
        assert!(effective_susceptibility(4.21, n) < effective_susceptibility(5.50, n));
    }

    #[test]
    fn unit_permeability_disc_feels_no_force() {
        let d = linear_disc(1.0);
        for g in [2e-3, 5e-3, 20e-3] {
            assert_eq!(pm_mre_force(&magnet(), &d, g, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn force_linear_in_scale_and_susceptibility() {
        // linearity in chi_eff is exact for the unsaturated model
        let m = magnet();
        let d1 = linear_disc(2.24);
        let d2 = linear_disc(5.50);
        let n = demag_factor(&d1);
        let ratio = effective_susceptibility(2.24, n) / effective_susceptibility(5.50, n);
        for g in [3e-3, 8e-3, 25e-3] {
            let f1 = pm_mre_force(&m, &d1, g, 1.0).unwrap();
            let f2 = pm_mre_force(&m, &d2, g, 1.0).unwrap();
            assert_relative_eq!(f1 / f2, ratio, max_relative = 1e-12);
            let fs = pm_mre_force(&m, &d2, g, 3.7).unwrap();
            assert_relative_eq!(fs, 3.7 * f2, max_relative = 1e-12);
        }
    }

    #[test]
    fn force_monotone_on_1_to_100_mm() {
        let m = magnet();
        for v in [PaperVariant::Mre15, PaperVariant::Mre30, PaperVariant::Mre40] {
            let d = paper_disc(v).unwrap();
            let table = GapForceTable::new(&m, &d);
            let mut prev = f64::INFINITY;
            let mut g = 1e-3;
            while g <= 0.1 {
                let f = table.force(&m, &d, g, 1.0);
                assert!(f >= 0.0 && f < prev, "non-monotone at gap {g}");
                prev = f;
                g += 1e-4;
            }
        }
    }

    #[test]
    fn force_decays_to_zero() {
        let m = magnet();
        let d = disc40();
        let f5 = pm_mre_force(&m, &d, 5e-3, 1.0).unwrap();
        let f_far = pm_mre_force(&m, &d, 0.5, 1.0).unwrap();
        assert!(f_far < 1e-6 * f5);
    }

    #[test]
    fn force_far_field_matches_induced_dipole_oracle() {
        // far limit: disc responds linearly to the dipole field of the magnet,
        // F = mu0 chi V H |dH/dz|, H = m/(2 pi z^3) at the centre distance.
        let m = magnet();
        let d = disc40();
        let volume_m = PI * (m.outer_radius.powi(2) - m.inner_radius.powi(2)) * m.thickness;
        let moment = m.remanence * volume_m / MU_0;
        let gap = 0.4;
        let z = gap + 0.5 * m.thickness + 0.5 * d.thickness;
        let h = moment / (2.0 * PI * z.powi(3));
        let dh = 3.0 * moment / (2.0 * PI * z.powi(4));
        let chi = disc_chi_eff(&d);
        let oracle = MU_0 * chi * PI * d.radius * d.radius * d.thickness * h * dh;
        let model = pm_mre_force(&m, &d, gap, 1.0).unwrap();
        assert_relative_eq!(model, oracle, max_relative = 2e-2);
    }

    #[test]
    fn force_against_direct_sheet_quadrature_oracle() {
        // oracle: brute 2-D quadrature of the ring-ring Coulomb kernel between
        // the magnet charge sheets (+-M at the faces) and the induced disc
        // sheets (+-M_d), with M_d from the same averaged field.
        let m = magnet();
        let d = disc40();
        let m_sheet = 0.5 * m.remanence / MU_0;
        let gap = 8e-3;
        let (q1, _) = sheet_integrals(
            m.outer_radius,
            m.inner_radius,
            m.thickness,
            d.radius,
            d.thickness,
            gap,
        );
        let chi = disc_chi_eff(&d);
        let m_lin = chi * m_sheet * q1;
        let m_d = m_lin / (1.0 + m_lin / d.saturation_magnetization);

        // axial force between two coaxial uniformly charged rings at axial
        // separation dz: f_z(r1, r2, dz) via angular quadrature
        let ring_ring = |r1: f64, r2: f64, dz: f64| -> f64 {
            let n = 720;
            let mut acc = 0.0;
            for i in 0..n {
                let phi = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                let d2 = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * phi.cos() + dz * dz;
                acc += dz / d2.powf(1.5);
            }
            acc * 2.0 * PI / n as f64
        };
        // sheet-sheet force: integrate rings over both annuli
        let sheet_sheet = |ra_lo: f64, ra_hi: f64, rb: f64, dz: f64, sa: f64, sb: f64| -> f64 {
            let na = 60;
            let nb = 60;
            let mut acc = 0.0;
            for i in 0..na {
                let r1 = ra_lo + (ra_hi - ra_lo) * (i as f64 + 0.5) / na as f64;
                let dr1 = (ra_hi - ra_lo) / na as f64;
                for j in 0..nb {
                    let r2 = rb * (j as f64 + 0.5) / nb as f64;
                    let dr2 = rb / nb as f64;
                    acc += r1 * dr1 * r2 * dr2 * ring_ring(r1, r2, dz);
                }
            }
            MU_0 * sa * sb / (4.0 * PI) * acc * (2.0 * PI) * (2.0 * PI) / (2.0 * PI)
        };
        // faces: magnet + at 0, - at -L; disc - at gap, + at gap + t (charge = M.n)
        let mut f = 0.0;
        for (z_m, s_m) in [(0.0, 2.0 * m_sheet), (-m.thickness, -2.0 * m_sheet)] {
            for (z_d, s_d) in [(gap, -m_d), (gap + d.thickness, m_d)] {
                let dz = z_d - z_m;
                // outer annulus minus bore
                let f_outer = sheet_sheet(0.0, m.outer_radius, d.radius, dz, s_m, s_d);
                let f_inner = sheet_sheet(0.0, m.inner_radius, d.radius, dz, s_m, s_d);
                f += f_outer - f_inner;
            }
        }
        // f is the force on the disc along +z; attraction = toward magnet = -z
        let oracle = -f;
        let model = pm_mre_force(&m, &d, gap, 1.0).unwrap();
        assert_relative_eq!(model, oracle, max_relative = 5e-3);
    }

    #[test]
    fn gradient_variant_agrees_away_from_the_face() {
        // beyond a few radii the lumped estimate approaches the sheet model
        let m = magnet();
        let d = disc40();
        for gap in [0.06, 0.1] {
            let sheet = pm_mre_force(&m, &d, gap, 1.0).unwrap();
            let grad = pm_mre_force_gradient(&m, &d, gap, 1.0, AxialSampling::MidPlane).unwrap();
            let grad5 = pm_mre_force_gradient(&m, &d, gap, 1.0, AxialSampling::FivePoint).unwrap();
            // saturation is negligible out here; compare within 25%
            assert_relative_eq!(grad / sheet, 1.0, epsilon = 0.25);
            assert_relative_eq!(grad5 / grad, 1.0, epsilon = 0.05);
        }
    }

    #[test]
    fn pm_pm_bilinear_and_decaying() {
        let a = magnet();
        let mut b2 = a.clone();
        b2.remanence *= 2.0;
        let f = pm_pm_force(&a, &a, 5e-3).unwrap();
        let f4 = pm_pm_force(&b2, &b2, 5e-3).unwrap();
        assert_relative_eq!(f4, 4.0 * f, max_relative = 1e-12);
        assert!(pm_pm_force(&a, &a, 1.0).unwrap() < 1e-6 * f);
        assert!(pm_pm_force(&a, &a, 0.0).is_err());
    }

    #[test]
    fn pm_pm_exceeds_pm_mre_at_equal_gap() {
        let m = magnet();
        let d = disc40();
        let scale = reference_scale();
        for g in [5e-3, 10e-3, 30e-3] {
            let fm = pm_mre_force(&m, &d, g, scale).unwrap();
            let fp = pm_pm_force(&m, &m, g).unwrap();
            assert!(fp > fm, "pm_pm {fp} <= pm_mre {fm} at gap {g}");
        }
    }

    #[test]
    fn sweep_default_grid() {
        let model = ForceModel::PmMre {
            magnet: magnet(),
            disc: disc40(),
            scale: reference_scale(),
        };
        let grid = default_gap_grid();
        assert_eq!(grid.len(), 22);
        assert_relative_eq!(grid[0], 5e-3);
        assert_relative_eq!(grid[21], 50e-3);
        let curve = force_sweep(&model, &grid).unwrap();
        assert_eq!(curve.points().len(), 22);
        let forces: Vec<f64> = curve.forces().collect();
        for w in forces.windows(2) {
            assert!(w[1] < w[0], "sweep not strictly decreasing");
        }
        assert!(forces.iter().all(|f| f.is_finite() && *f >= 0.0));
        // anchor calibration
        assert_relative_eq!(forces[0], 0.6, max_relative = 1e-9);
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        let model = ForceModel::PmPm {
            magnet_a: magnet(),
            magnet_b: magnet(),
        };
        assert!(force_sweep(&model, &[5e-3]).is_err());
        assert!(force_sweep(&model, &[5e-3, 5e-3]).is_err());
        assert!(force_sweep(&model, &[-1e-3, 5e-3]).is_err());
    }

    #[test]
    fn table_matches_direct_quadrature() {
        let m = magnet();
        let d = disc40();
        let table = GapForceTable::new(&m, &d);
        for g in [6.3e-4, 1.7e-3, 5e-3, 9.7e-3, 23e-3, 80e-3, 0.14] {
            let direct = pm_mre_force(&m, &d, g, 1.0).unwrap();
            let interp = table.force(&m, &d, g, 1.0);
            assert_relative_eq!(interp, direct, max_relative = 2e-4);
        }
    }

    #[test]
    fn convexity_proxy_on_measurement_window() {
        // equally spaced triples in [5, 50] mm: F(g2) < (F(g1) + F(g3)) / 2
        let m = magnet();
        let d = disc40();
        let n = 101;
        let fs: Vec<f64> = (0..n)
            .map(|i| {
                let g = 5e-3 + 45e-3 * i as f64 / (n - 1) as f64;
                pm_mre_force(&m, &d, g, 1.0).unwrap()
            })
            .collect();
        for i in 1..n - 1 {
            assert!(fs[i] < 0.5 * (fs[i - 1] + fs[i + 1]), "not convex at triple {i}");
        }
    }
}
