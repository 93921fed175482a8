//! Static analysis: equilibria of bias versus membrane force, stability and
//! pull-in, working ranges, steady-state voltage sweeps and offset optimization.
//!
//! Roots of the residual `r(d) = bias(d) - membrane(d, V)` are located by a
//! 1 um grid scan followed by bisection. Voltage continuation tracks the
//! stable branch connected to the V = 0 equilibrium; a fold encountered during
//! continuation is reported as snap-through.

use crate::bias::{classify_bias, BiasClass, CLASSIFY_TOLERANCE};
use crate::error::{Error, Result};
use crate::membrane;
use crate::model::Prepared;

/// Grid resolution of the exhaustive root scan (m).
pub const SCAN_STEP: f64 = 1.0e-6;
/// Bisection refinement width (m).
const REFINE_WIDTH: f64 = 1.0e-10;
/// Largest credible branch motion per continuation sub-step (m).
const JUMP_GUARD: f64 = 1.0e-3;
/// Number of uniform voltage continuation steps.
const CONTINUATION_STEPS: usize = 50;

/// One equilibrium: deflection and stability flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub deflection: f64,
    pub stable: bool,
}

/// All equilibria at one voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub voltage: f64,
    /// Roots sorted by deflection.
    pub roots: Vec<Root>,
    /// True when the bias exceeds the membrane force on the whole admissible
    /// interval (the disc jumps to the magnet).
    pub pull_in: bool,
    /// Deflection at which a membrane error truncated the admissible interval,
    /// with the error message.
    pub truncated_at: Option<(f64, String)>,
}

impl EquilibriumReport {
    pub fn stable_roots(&self) -> impl Iterator<Item = f64> + '_ {
        self.roots.iter().filter(|r| r.stable).map(|r| r.deflection)
    }
}

/// Working range between the V = 0 and V = V_on stable equilibria.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingRangeReport {
    pub d_off: f64,
    pub d_on: f64,
    pub w_m: f64,
    pub v_on: f64,
    pub bias_class: BiasClass,
    /// Set when a fitted force provider was evaluated outside its data range.
    pub extrapolated: bool,
}

fn residual(prepared: &Prepared, d: f64, voltage: f64) -> Result<f64> {
    let bias = prepared.bias().force(d)?;
    let mem = membrane::membrane_force(&prepared.scenario.membrane, d, voltage)?;
    Ok(bias - mem)
}

/// Admissible interval end, accounting for membrane model errors at `voltage`.
///
/// Scans coarsely for the first deflection where the membrane model errors
/// (lockup, slack, breakdown) and returns the usable maximum plus the message.
fn admissible_interval(prepared: &Prepared, voltage: f64) -> (f64, Option<(f64, String)>) {
    let dmax = prepared.bias().admissible_max();
    let n = 256;
    for i in 1..=n {
        let d = dmax * i as f64 / n as f64;
        if let Err(e) = membrane::membrane_force(&prepared.scenario.membrane, d, voltage) {
            let lo = dmax * (i - 1) as f64 / n as f64;
            // refine the boundary to the scan resolution
            let mut a = lo;
            let mut b = d;
            while b - a > SCAN_STEP {
                let m = 0.5 * (a + b);
                if membrane::membrane_force(&prepared.scenario.membrane, m, voltage).is_ok() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return (a, Some((a, e.to_string())));
        }
    }
    (dmax, None)
}

fn refine_root(prepared: &Prepared, mut lo: f64, mut hi: f64, voltage: f64) -> Result<f64> {
    let mut r_lo = residual(prepared, lo, voltage)?;
    if r_lo == 0.0 {
        return Ok(lo);
    }
    for _ in 0..80 {
        if hi - lo <= REFINE_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let r_mid = residual(prepared, mid, voltage)?;
        if r_mid == 0.0 {
            return Ok(mid);
        }
        if r_lo * r_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            r_lo = r_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn root_is_stable(prepared: &Prepared, d: f64, voltage: f64, dmax: f64) -> bool {
    let h = 1.0e-7;
    let hi = (d + h).min(dmax);
    let lo = (d - h).max(0.0);
    match (residual(prepared, hi, voltage), residual(prepared, lo, voltage)) {
        (Ok(a), Ok(b)) => (a - b) / (hi - lo) < 0.0,
        _ => false,
    }
}

/// Locate all equilibria at `voltage` by the 1 um scan plus bisection.
pub fn find_equilibria(prepared: &Prepared, voltage: f64) -> Result<EquilibriumReport> {
    if voltage < 0.0 {
        return Err(Error::Domain(format!("voltage must be >= 0, got {voltage} V")));
    }
    let (dmax, truncated_at) = admissible_interval(prepared, voltage);
    let n = (dmax / SCAN_STEP).floor() as usize;
    let mut roots = Vec::new();
    let mut all_positive = true;
    let mut prev_d = 0.0;
    let mut prev_r = residual(prepared, 0.0, voltage)?;
    if prev_r == 0.0 {
        roots.push(0.0);
        all_positive = false;
    }
    for i in 1..=n {
        let d = i as f64 * SCAN_STEP;
        let r = residual(prepared, d, voltage)?;
        if r <= 0.0 {
            all_positive = false;
        }
        if r == 0.0 {
            roots.push(d);
        } else if prev_r * r < 0.0 {
            roots.push(refine_root(prepared, prev_d, d, voltage)?);
        }
        prev_d = d;
        prev_r = r;
    }
    let roots: Vec<Root> = roots
        .into_iter()
        .map(|d| Root {
            deflection: d,
            stable: root_is_stable(prepared, d, voltage, dmax),
        })
        .collect();
    let pull_in = roots.is_empty() && all_positive;
    Ok(EquilibriumReport {
        voltage,
        roots,
        pull_in,
        truncated_at,
    })
}

/// Track the stable root near `d_prev` at `voltage` with an expanding local
/// bracket; falls back to a full scan when the local search is ambiguous.
fn track_root(prepared: &Prepared, d_prev: f64, voltage: f64) -> Result<Option<f64>> {
    let (dmax, _) = admissible_interval(prepared, voltage);
    let mut width = 2.0e-4;
    loop {
        let lo = (d_prev - width).max(0.0);
        let hi = (d_prev + width).min(dmax);
        let (r_lo, r_hi) = match (residual(prepared, lo, voltage), residual(prepared, hi, voltage)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return full_scan_nearest(prepared, d_prev, voltage),
        };
        if r_lo == 0.0 {
            return Ok(Some(lo));
        }
        if r_lo > 0.0 && r_hi < 0.0 {
            let d = refine_root(prepared, lo, hi, voltage)?;
            if root_is_stable(prepared, d, voltage, dmax) {
                return Ok(Some(d));
            }
            return full_scan_nearest(prepared, d_prev, voltage);
        }
        if r_lo * r_hi < 0.0 {
            // bracket holds an unstable crossing; disambiguate with a scan
            return full_scan_nearest(prepared, d_prev, voltage);
        }
        if lo == 0.0 && hi >= dmax {
            return Ok(None);
        }
        width *= 2.0;
    }
}

fn full_scan_nearest(prepared: &Prepared, d_prev: f64, voltage: f64) -> Result<Option<f64>> {
    let report = find_equilibria(prepared, voltage)?;
    Ok(report
        .stable_roots()
        .min_by(|a, b| {
            (a - d_prev)
                .abs()
                .partial_cmp(&(b - d_prev).abs())
                .expect("finite roots")
        }))
}

/// Continue the stable branch from (`d_from`, `v_from`) to `v_to`, bisecting
/// the voltage interval when the branch moves suspiciously far in one step.
fn continue_branch(
    prepared: &Prepared,
    d_from: f64,
    v_from: f64,
    v_to: f64,
    depth: usize,
) -> Result<f64> {
    match track_root(prepared, d_from, v_to)? {
        Some(d) if (d - d_from).abs() <= JUMP_GUARD => Ok(d),
        outcome => {
            if depth >= 8 {
                return Err(Error::SnapThrough {
                    last_stable_voltage: v_from,
                });
            }
            let v_mid = 0.5 * (v_from + v_to);
            // a fold between v_from and v_mid surfaces as the same error
            let d_mid = continue_branch(prepared, d_from, v_from, v_mid, depth + 1)?;
            let _ = outcome;
            continue_branch(prepared, d_mid, v_mid, v_to, depth + 1)
        }
    }
}

/// Working range between V = 0 and `v_on`, following the stable branch
/// through uniform voltage steps.
pub fn working_range(prepared: &Prepared, v_on: f64) -> Result<WorkingRangeReport> {
    if v_on < 0.0 {
        return Err(Error::Domain(format!("V_on must be >= 0, got {v_on} V")));
    }
    let report = find_equilibria(prepared, 0.0)?;
    let d_off = report.stable_roots().next().ok_or(Error::SnapThrough {
        last_stable_voltage: 0.0,
    })?;
    let mut d = d_off;
    let mut v_prev = 0.0;
    for i in 1..=CONTINUATION_STEPS {
        let v = v_on * i as f64 / CONTINUATION_STEPS as f64;
        d = continue_branch(prepared, d, v_prev, v, 0)?;
        v_prev = v;
    }
    let extrapolated = prepared.bias().extrapolates_at(d_off) || prepared.bias().extrapolates_at(d);
    // classify over the operating window; for magnetic biases stop 5 mm short
    // of the magnet face so the near-contact force spike does not swamp the
    // relative tolerance band
    let hi = match prepared.bias().offset() {
        Some(offset) if offset - 5.0e-3 > 1.0e-3 => offset - 5.0e-3,
        _ => prepared.bias().admissible_max(),
    };
    let bias_class = classify_bias(prepared.bias(), (0.0, hi), CLASSIFY_TOLERANCE)?;
    Ok(WorkingRangeReport {
        d_off,
        d_on: d,
        w_m: d - d_off,
        v_on,
        bias_class,
        extrapolated,
    })
}

/// Flag attached to one steady-state sweep entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFlag {
    Ok,
    /// The branch folded below this voltage; the entry reports the post-snap
    /// equilibrium.
    SnapThrough,
    /// No stable equilibrium exists; the disc rests at the admissible limit.
    PullIn,
}

impl std::fmt::Display for SweepFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepFlag::Ok => write!(f, "ok"),
            SweepFlag::SnapThrough => write!(f, "snap_through"),
            SweepFlag::PullIn => write!(f, "pull_in"),
        }
    }
}

/// One entry of a steady-state voltage sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStatePoint {
    pub voltage: f64,
    pub deflection: f64,
    pub bias_force: f64,
    pub flag: SweepFlag,
}

/// Stable-branch deflection and bias force for each voltage of an ascending
/// grid starting at 0.
pub fn steady_state_sweep(prepared: &Prepared, voltages: &[f64]) -> Result<Vec<SteadyStatePoint>> {
    if voltages.is_empty() || voltages[0] != 0.0 {
        return Err(Error::Domain("voltage grid must start at 0".into()));
    }
    for w in voltages.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Domain("voltage grid must be ascending".into()));
        }
    }
    let report = find_equilibria(prepared, 0.0)?;
    let mut entries = Vec::with_capacity(voltages.len());
    let Some(mut d) = report.stable_roots().next() else {
        // pulled in from the start: keep the admissible limit at every voltage
        let dmax = prepared.bias().admissible_max();
        for &v in voltages {
            let bias_force = prepared.bias().force(dmax).unwrap_or(f64::NAN);
            entries.push(SteadyStatePoint {
                voltage: v,
                deflection: dmax,
                bias_force,
                flag: SweepFlag::PullIn,
            });
        }
        return Ok(entries);
    };
    entries.push(SteadyStatePoint {
        voltage: 0.0,
        deflection: d,
        bias_force: prepared.bias().force(d)?,
        flag: SweepFlag::Ok,
    });
    let mut v_prev = 0.0;
    let mut snapped = false;
    for &v in &voltages[1..] {
        let flag = if snapped { SweepFlag::SnapThrough } else { SweepFlag::Ok };
        match continue_branch(prepared, d, v_prev, v, 0) {
            Ok(nd) => {
                d = nd;
                entries.push(SteadyStatePoint {
                    voltage: v,
                    deflection: d,
                    bias_force: prepared.bias().force(d)?,
                    flag,
                });
            }
            Err(Error::SnapThrough { .. }) => {
                snapped = true;
                // restart on whatever stable branch exists beyond the fold
                let report = find_equilibria(prepared, v)?;
                let landing = report.stable_roots().find(|&r| r >= d);
                match landing {
                    Some(nd) => {
                        d = nd;
                        entries.push(SteadyStatePoint {
                            voltage: v,
                            deflection: d,
                            bias_force: prepared.bias().force(d)?,
                            flag: SweepFlag::SnapThrough,
                        });
                    }
                    None => {
                        let dmax = prepared.bias().admissible_max();
                        d = dmax;
                        entries.push(SteadyStatePoint {
                            voltage: v,
                            deflection: dmax,
                            bias_force: prepared.bias().force(dmax).unwrap_or(f64::NAN),
                            flag: SweepFlag::PullIn,
                        });
                    }
                }
            }
            Err(e) => return Err(e),
        }
        v_prev = v;
    }
    Ok(entries)
}

/// Golden-section maximization of a non-negative score on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, tol: f64, mut score: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = score(c);
    let mut fd = score(d);
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = score(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = score(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximize the working range over the magnet offset within `bounds`.
///
/// Coarse 33-point pre-scan brackets the peak (infeasible offsets score 0),
/// then golden-section refines to 10 um.
pub fn optimize_offset(
    prepared: &Prepared,
    v_on: f64,
    bounds: (f64, f64),
) -> Result<(f64, WorkingRangeReport)> {
    let (lo, hi) = bounds;
    if !(lo < hi) || lo <= crate::bias::GAP_FLOOR {
        return Err(Error::Domain(format!(
            "offset bounds must satisfy gap floor < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if prepared.bias().offset().is_none() {
        return Err(Error::Domain("offset optimization needs a magnetic bias".into()));
    }
    let score = |offset: f64| -> f64 {
        working_range(&prepared.with_offset(offset), v_on)
            .map(|r| r.w_m.max(0.0))
            .unwrap_or(0.0)
    };
    const COARSE: usize = 33;
    const TOL: f64 = 10.0e-6;
    let mut best = (lo, 0.0f64);
    let mut scores = [0.0; COARSE];
    for (i, s) in scores.iter_mut().enumerate() {
        let o = lo + (hi - lo) * i as f64 / (COARSE - 1) as f64;
        *s = score(o);
        if *s > best.1 {
            best = (o, *s);
        }
    }
    if best.1 == 0.0 {
        return Err(Error::NoFeasibleOffset {
            lo_mm: lo * 1e3,
            hi_mm: hi * 1e3,
        });
    }
    let step = (hi - lo) / (COARSE - 1) as f64;
    // The range is largest just above the smallest offset that survives
    // continuation: w(offset) jumps from 0 at the snap-through boundary and
    // decays beyond it. Bisect the feasibility boundary to the tolerance, then
    // golden-section the smooth side, and keep whichever probe won.
    let best_idx = ((best.0 - lo) / step).round() as usize;
    if best_idx > 0 && scores[best_idx - 1] == 0.0 {
        let mut bad = lo + step * (best_idx - 1) as f64;
        let mut good = best.0;
        while good - bad > TOL {
            let mid = 0.5 * (bad + good);
            let w = score(mid);
            if w > 0.0 {
                good = mid;
                if w > best.1 {
                    best = (mid, w);
                }
            } else {
                bad = mid;
            }
        }
    }
    let blo = (best.0 - step).max(lo);
    let bhi = (best.0 + step).min(hi);
    let (o_gold, w_gold) = golden_max(blo, bhi, TOL, score);
    let o_star = if w_gold > best.1 { o_gold } else { best.0 };
    let report = working_range(&prepared.with_offset(o_star), v_on)?;
    Ok((o_star, report))
}

/// Calibrated membrane free parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneCalibration {
    pub inner_radius: f64,
    pub relative_permittivity: f64,
    pub achieved_w_m: f64,
}

/// Fit (effective inner radius, relative permittivity) inside the given boxes
/// so the scenario's working range at `v_on` meets `target_w`.
///
/// Two-stage deterministic grid search; the scenario keeps its bias.
pub fn calibrate_membrane(
    prepared: &Prepared,
    v_on: f64,
    target_w: f64,
    radius_box: (f64, f64),
    permittivity_box: (f64, f64),
) -> Result<MembraneCalibration> {
    let eval = |a: f64, er: f64| -> f64 {
        let mut sc = prepared.scenario.clone();
        sc.membrane.inner_radius = a;
        sc.membrane.relative_permittivity = er;
        let p = Prepared::new(sc).with_bias_runtime(prepared.bias().clone());
        working_range(&p, v_on).map(|r| r.w_m).unwrap_or(f64::NAN)
    };
    let mut best = (radius_box.0, permittivity_box.0, f64::INFINITY, 0.0);
    let search = |alo: f64, ahi: f64, elo: f64, ehi: f64, na: usize, ne: usize, best: &mut (f64, f64, f64, f64)| {
        for i in 0..na {
            let a = alo + (ahi - alo) * i as f64 / (na - 1) as f64;
            for j in 0..ne {
                let er = elo + (ehi - elo) * j as f64 / (ne - 1) as f64;
                let w = eval(a, er);
                if w.is_finite() {
                    let miss = (w - target_w).abs();
                    if miss < best.2 {
                        *best = (a, er, miss, w);
                    }
                }
            }
        }
    };
    search(
        radius_box.0,
        radius_box.1,
        permittivity_box.0,
        permittivity_box.1,
        9,
        7,
        &mut best,
    );
    let da = (radius_box.1 - radius_box.0) / 8.0;
    let de = (permittivity_box.1 - permittivity_box.0) / 6.0;
    search(
        (best.0 - da).max(radius_box.0),
        (best.0 + da).min(radius_box.1),
        (best.1 - de).max(permittivity_box.0),
        (best.1 + de).min(permittivity_box.1),
        5,
        5,
        &mut best,
    );
    if !best.3.is_finite() || best.3 <= 0.0 {
        return Err(Error::Validation("membrane calibration found no feasible point".into()));
    }
    Ok(MembraneCalibration {
        inner_radius: best.0,
        relative_permittivity: best.1,
        achieved_w_m: best.3,
    })
}
