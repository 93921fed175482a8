//! Least-squares fitting of measured force-gap series to the exponential
//! model `F(g) = a exp(-b g) + c`, producing calibrated bias curves.
//!
//! Initialization by log-linear regression on `F - min F`, refinement by
//! Gauss-Newton with a Levenberg damping factor on a x10 / /10 schedule.
//! A power-law alternative `F(g) = a g^-p + c` is available for model
//! comparison.

use crate::bias::BiasRuntime;
use crate::error::{Error, Result};
use crate::magnetics::ForceCurve;

/// Fitted exponential parameters and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Amplitude a (N).
    pub amplitude: f64,
    /// Decay rate b (1/m), >= 0.
    pub decay_rate: f64,
    /// Force floor c (N).
    pub floor: f64,
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Gap range covered by the input data (m).
    pub gap_range: (f64, f64),
}

impl FitResult {
    pub fn evaluate(&self, gap: f64) -> f64 {
        self.amplitude * (-self.decay_rate * gap).exp() + self.floor
    }
}

/// Fitted power-law parameters, `F = a g^-p + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFitResult {
    pub amplitude: f64,
    pub exponent: f64,
    pub floor: f64,
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PowerFitResult {
    pub fn evaluate(&self, gap: f64) -> f64 {
        self.amplitude * gap.powf(-self.exponent) + self.floor
    }
}

const MAX_ITERATIONS: usize = 200;
const GRADIENT_TOLERANCE: f64 = 1e-10;

fn sorted_points(curve: &ForceCurve) -> Vec<(f64, f64)> {
    // ForceCurve is already sorted by construction; sorting here keeps the
    // fit invariant for callers that assemble raw point lists.
    let mut pts = curve.points().to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite gaps"));
    pts
}

fn rms(residuals: &[f64]) -> f64 {
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

/// Solve the 3x3 normal equations (J^T J + lambda diag) step = J^T r.
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for i in 0..3 {
        let mut piv = i;
        for r in (i + 1)..3 {
            if m[r][i].abs() > m[piv][i].abs() {
                piv = r;
            }
        }
        if m[piv][i].abs() < 1e-300 {
            return None;
        }
        m.swap(i, piv);
        rhs.swap(i, piv);
        for r in (i + 1)..3 {
            let f = m[r][i] / m[i][i];
            for c in i..3 {
                m[r][c] -= f * m[i][c];
            }
            rhs[r] -= f * rhs[i];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut acc = rhs[i];
        for c in (i + 1)..3 {
            acc -= m[i][c] * x[c];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}

/// Gradient smallness test combining the absolute norm with the
/// scale-invariant cosine measure (largest angle cosine between the residual
/// vector and a Jacobian column, the MINPACK gtol criterion). The absolute
/// norm covers machine-precision fits where the residual is pure noise; the
/// cosine covers badly scaled parameters.
fn gradient_small(jtj: &[[f64; 3]; 3], jtr: &[f64; 3], cost: f64, tol: f64) -> bool {
    let norm = (jtr[0] * jtr[0] + jtr[1] * jtr[1] + jtr[2] * jtr[2]).sqrt();
    if norm < tol {
        return true;
    }
    if cost <= 0.0 {
        return true;
    }
    let norm_r = cost.sqrt();
    let mut worst = 0.0f64;
    for j in 0..3 {
        let col = jtj[j][j].sqrt();
        if col > 0.0 {
            worst = worst.max(jtr[j].abs() / (col * norm_r));
        }
    }
    worst < tol
}

/// Fit `a exp(-b g) + c` to a force-gap curve.
pub fn fit_exponential(curve: &ForceCurve) -> Result<FitResult> {
    let pts = sorted_points(curve);
    if pts.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", pts.len())));
    }
    if pts.iter().any(|&(_, f)| f < 0.0) {
        return Err(Error::Fit("forces must be >= 0".into()));
    }
    let gap_range = (pts[0].0, pts[pts.len() - 1].0);
    let n = pts.len() as f64;
    let f_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let f_max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / n;

    // degenerate flat data: b = 0 branch with a + c = mean
    if f_max - f_min <= 1e-12 * f_max.abs().max(1e-300) {
        let residuals: Vec<f64> = pts.iter().map(|p| p.1 - mean).collect();
        return Ok(FitResult {
            amplitude: 0.0,
            decay_rate: 0.0,
            floor: mean,
            rms_residual: rms(&residuals),
            iterations: 0,
            converged: true,
            gap_range,
        });
    }

    // log-linear initialization on (F - min F), shifted slightly off zero
    let shift = f_min - 1e-3 * (f_max - f_min);
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(g, f) in &pts {
        let y = f - shift;
        if y > 0.0 {
            let ly = y.ln();
            sx += g;
            sy += ly;
            sxx += g * g;
            sxy += g * ly;
            cnt += 1.0;
        }
    }
    let denom = cnt * sxx - sx * sx;
    let (mut a, mut b, mut c);
    if cnt >= 2.0 && denom.abs() > 1e-300 {
        let slope = (cnt * sxy - sx * sy) / denom;
        let intercept = (sy - slope * sx) / cnt;
        b = (-slope).max(0.0);
        a = intercept.exp();
        c = shift.max(0.0);
    } else {
        a = f_max - f_min;
        b = 1.0 / (gap_range.1 - gap_range.0).max(1e-9);
        c = f_min;
    }

    let residuals = |a: f64, b: f64, c: f64| -> Vec<f64> {
        pts.iter().map(|&(g, f)| f - (a * (-b * g).exp() + c)).collect()
    };
    let mut res = residuals(a, b, c);
    let mut cost = res.iter().map(|r| r * r).sum::<f64>();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        // Jacobian of the model wrt (a, b, c)
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&(g, _), &r) in pts.iter().zip(res.iter()) {
            let e = (-b * g).exp();
            let j = [e, -a * g * e, 1.0];
            for row in 0..3 {
                jtr[row] += j[row] * r;
                for col in 0..3 {
                    jtj[row][col] += j[row] * j[col];
                }
            }
        }
        if gradient_small(&jtj, &jtr, cost, GRADIENT_TOLERANCE) {
            converged = true;
            break;
        }
        // damped step; retry with heavier damping on cost increase
        let mut improved = false;
        for _ in 0..24 {
            let mut m = jtj;
            for i in 0..3 {
                m[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            if let Some(step) = solve3(m, jtr) {
                let (na, nb, nc) = (a + step[0], (b + step[1]).max(0.0), c + step[2]);
                let nres = residuals(na, nb, nc);
                let ncost = nres.iter().map(|r| r * r).sum::<f64>();
                if ncost < cost {
                    a = na;
                    b = nb;
                    c = nc;
                    res = nres;
                    let rel_drop = (cost - ncost) / cost.max(1e-300);
                    cost = ncost;
                    lambda = (lambda / 10.0).max(1e-14);
                    improved = true;
                    if rel_drop < 1e-14 {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if converged {
            break;
        }
        if !improved {
            // step collapse: a vanishing gradient at the best iterate counts
            // as convergence, anything else is a genuine stall
            converged = gradient_small(&jtj, &jtr, cost, 1e-6);
            break;
        }
    }

    Ok(FitResult {
        amplitude: a,
        decay_rate: b,
        floor: c,
        rms_residual: rms(&res),
        iterations,
        converged,
        gap_range,
    })
}

/// Fit the power-law alternative `a g^-p + c`.
///
/// Internally parametrized as `A (g/g_ref)^-p + c` with `g_ref` the geometric
/// mean gap, which keeps the normal equations well conditioned; `a` is
/// recovered as `A g_ref^p`.
pub fn fit_power_law(curve: &ForceCurve) -> Result<PowerFitResult> {
    let pts = sorted_points(curve);
    if pts.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", pts.len())));
    }
    if pts.iter().any(|&(g, f)| f < 0.0 || g <= 0.0) {
        return Err(Error::Fit("power-law fit needs g > 0 and forces >= 0".into()));
    }
    let n = pts.len() as f64;
    let g_ref = (pts.iter().map(|p| p.0.ln()).sum::<f64>() / n).exp();
    let f_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);

    // log-log initialization on (F - shift) against g/g_ref
    let shift = f_min * 0.5;
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(g, f) in &pts {
        let y = f - shift;
        if y > 0.0 {
            let x = (g / g_ref).ln();
            sx += x;
            sy += y.ln();
            sxx += x * x;
            sxy += x * y.ln();
            cnt += 1.0;
        }
    }
    let denom = cnt * sxx - sx * sx;
    let mut p = if denom.abs() > 1e-300 {
        (-(cnt * sxy - sx * sy) / denom).max(0.0)
    } else {
        2.0
    };
    let mut amp = if cnt > 0.0 {
        ((sy + p * sx) / cnt).exp()
    } else {
        1.0
    };
    let mut c = shift;

    let residuals = |amp: f64, p: f64, c: f64| -> Vec<f64> {
        pts.iter()
            .map(|&(g, f)| f - (amp * (g / g_ref).powf(-p) + c))
            .collect()
    };
    let mut res = residuals(amp, p, c);
    let mut cost = res.iter().map(|r| r * r).sum::<f64>();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&(g, _), &r) in pts.iter().zip(res.iter()) {
            let x = g / g_ref;
            let e = x.powf(-p);
            let j = [e, -amp * e * x.ln(), 1.0];
            for row in 0..3 {
                jtr[row] += j[row] * r;
                for col in 0..3 {
                    jtj[row][col] += j[row] * j[col];
                }
            }
        }
        if gradient_small(&jtj, &jtr, cost, GRADIENT_TOLERANCE) {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..24 {
            let mut m = jtj;
            for i in 0..3 {
                m[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            if let Some(step) = solve3(m, jtr) {
                let (na, np, nc) = (amp + step[0], (p + step[1]).max(0.0), c + step[2]);
                let nres = residuals(na, np, nc);
                let ncost = nres.iter().map(|r| r * r).sum::<f64>();
                if ncost < cost {
                    amp = na;
                    p = np;
                    c = nc;
                    res = nres;
                    let rel_drop = (cost - ncost) / cost.max(1e-300);
                    cost = ncost;
                    lambda = (lambda / 10.0).max(1e-14);
                    improved = true;
                    if rel_drop < 1e-14 {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if converged {
            break;
        }
        if !improved {
            converged = gradient_small(&jtj, &jtr, cost, 1e-6);
            break;
        }
    }
    Ok(PowerFitResult {
        amplitude: amp * g_ref.powf(p),
        exponent: p,
        floor: c,
        rms_residual: rms(&res),
        iterations,
        converged,
    })
}

/// Bias force provider backed by a converged exponential fit.
///
/// Interchangeable with the physical PM-MRE bias in the equilibrium and
/// dynamics solvers; evaluations outside the fitted gap range flag the
/// resulting reports as extrapolated.
pub fn calibrated_pm_mre(fit: &FitResult, offset: f64) -> Result<BiasRuntime> {
    if !fit.converged {
        return Err(Error::Fit("fit did not converge; refusing to build a bias from it".into()));
    }
    if offset <= crate::bias::GAP_FLOOR {
        return Err(Error::Validation("offset must exceed the gap floor".into()));
    }
    Ok(BiasRuntime::FittedExponential {
        amplitude: fit.amplitude,
        decay_rate: fit.decay_rate,
        floor: fit.floor,
        offset,
        fitted_range: fit.gap_range,
    })
}

/// Relative parameter disagreement between two fits of repeated series.
///
/// Returns `(relative differences for a, b, c, any_above_threshold)`,
/// mirroring the repeatability check on duplicate measurement series.
pub fn repeatability_report(f1: &FitResult, f2: &FitResult, threshold: f64) -> ([f64; 3], bool) {
    let rel = |x: f64, y: f64| -> f64 {
        let scale = x.abs().max(y.abs());
        if scale < 1e-12 {
            0.0
        } else {
            (x - y).abs() / scale
        }
    };
    let d = [
        rel(f1.amplitude, f2.amplitude),
        rel(f1.decay_rate, f2.decay_rate),
        rel(f1.floor, f2.floor),
    ];
    let flagged = d.iter().any(|&x| x > threshold);
    (d, flagged)
}
