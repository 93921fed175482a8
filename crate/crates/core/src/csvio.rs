//! CSV readers and writers for curves, schedules, sweeps and transients.
//!
//! All numeric output goes through the 6-significant-digit formatter so files
//! are byte-deterministic for fixed inputs; values round-trip to the printed
//! precision.

use crate::dynamics::{TransientResult, VoltageSchedule};
use crate::equilibrium::SteadyStatePoint;
use crate::error::{Error, Result};
use crate::magnetics::{CurveSource, ForceCurve};
use crate::units::format_sig;

const SIG: usize = 6;

/// `gap_mm,force_N` with header.
pub fn force_curve_to_csv(curve: &ForceCurve) -> String {
    let mut out = String::from("gap_mm,force_N\n");
    for &(gap, force) in curve.points() {
        out.push_str(&format_sig(gap * 1e3, SIG));
        out.push(',');
        out.push_str(&format_sig(force, SIG));
        out.push('\n');
    }
    out
}

fn split_two(line: &str, line_no: usize) -> Result<(f64, f64)> {
    let mut it = line.split(',');
    let a = it.next().unwrap_or("").trim();
    let b = it.next().ok_or(Error::Parse {
        line: line_no,
        message: "expected two comma-separated columns".into(),
    })?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            message: "expected exactly two columns".into(),
        });
    }
    let pa = a.parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("bad number `{a}`"),
    })?;
    let pb = b.trim().parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("bad number `{}`", b.trim()),
    })?;
    Ok((pa, pb))
}

/// Parse `gap_mm,force_N` text (header mandatory) into a measurement curve.
pub fn force_curve_from_csv(text: &str) -> Result<ForceCurve> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    if header.trim() != "gap_mm,force_N" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `gap_mm,force_N`, got `{}`", header.trim()),
        });
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (gap_mm, force) = split_two(line, idx + 1)?;
        points.push((gap_mm * 1e-3, force));
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite gaps"));
    ForceCurve::new(points, CurveSource::Measurement)
}

/// `t_s,level_V` with header.
pub fn schedule_to_csv(schedule: &VoltageSchedule) -> String {
    let mut out = String::from("t_s,level_V\n");
    for &(t, level) in schedule.points() {
        out.push_str(&format_sig(t, SIG));
        out.push(',');
        out.push_str(&format_sig(level, SIG));
        out.push('\n');
    }
    out
}

/// Parse `t_s,level_V` text; `duration` falls back to the last change plus
/// one segment of padding when not supplied.
pub fn schedule_from_csv(text: &str, duration: Option<f64>) -> Result<VoltageSchedule> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    if header.trim() != "t_s,level_V" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `t_s,level_V`, got `{}`", header.trim()),
        });
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        points.push(split_two(line, idx + 1)?);
    }
    let total = duration.unwrap_or_else(|| {
        let last = points.last().map(|p| p.0).unwrap_or(0.0);
        let gap = if points.len() >= 2 {
            last - points[points.len() - 2].0
        } else {
            1.0
        };
        last + gap
    });
    VoltageSchedule::new(points, total)
}

/// `t_s,u_V,V_V,d_mm` with header.
pub fn transient_to_csv(result: &TransientResult) -> String {
    let mut out = String::from("t_s,u_V,V_V,d_mm\n");
    for s in &result.samples {
        out.push_str(&format_sig(s.time, SIG));
        out.push(',');
        out.push_str(&format_sig(s.source_level, SIG));
        out.push(',');
        out.push_str(&format_sig(s.membrane_voltage, SIG));
        out.push(',');
        out.push_str(&format_sig(s.deflection * 1e3, SIG));
        out.push('\n');
    }
    out
}

/// `v_V,d_mm,bias_N,flag` with header.
pub fn steady_state_to_csv(points: &[SteadyStatePoint]) -> String {
    let mut out = String::from("v_V,d_mm,bias_N,flag\n");
    for p in points {
        out.push_str(&format_sig(p.voltage, SIG));
        out.push(',');
        out.push_str(&format_sig(p.deflection * 1e3, SIG));
        out.push(',');
        out.push_str(&format_sig(p.bias_force, SIG));
        out.push(',');
        out.push_str(&p.flag.to_string());
        out.push('\n');
    }
    out
}

/// Key-value fit report.
pub fn fit_report(fit: &crate::fitting::FitResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("model = a*exp(-b*gap) + c\n"));
    out.push_str(&format!("amplitude_N = {}\n", format_sig(fit.amplitude, SIG)));
    out.push_str(&format!("decay_rate_per_m = {}\n", format_sig(fit.decay_rate, SIG)));
    out.push_str(&format!("floor_N = {}\n", format_sig(fit.floor, SIG)));
    out.push_str(&format!("rms_residual_N = {}\n", format_sig(fit.rms_residual, SIG)));
    out.push_str(&format!("iterations = {}\n", fit.iterations));
    out.push_str(&format!("converged = {}\n", fit.converged));
    out.push_str(&format!(
        "gap_range_mm = {} .. {}\n",
        format_sig(fit.gap_range.0 * 1e3, SIG),
        format_sig(fit.gap_range.1 * 1e3, SIG)
    ));
    out
}
