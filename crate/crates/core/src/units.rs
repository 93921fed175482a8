//! Unit handling for the key-value configuration format and report output.
//!
//! Internal quantities are strict SI. Human-facing files accept a small,
//! exactly-convertible unit set (mm -> m is *1e-3, kV -> V is *1e3, ...).

use crate::error::{Error, Result};

/// Multiplier taking a value in `unit` to SI base units.
///
/// Returns `None` for unknown unit names. The empty string is the SI unit
/// itself (dimensionless or already-SI values).
pub fn si_factor(unit: &str) -> Option<f64> {
    Some(match unit {
        "" => 1.0,
        // length
        "m" => 1.0,
        "cm" => 1e-2,
        "mm" => 1e-3,
        "um" | "µm" => 1e-6,
        // mass
        "kg" => 1.0,
        "g" => 1e-3,
        // voltage
        "V" => 1.0,
        "kV" => 1e3,
        // pressure / modulus
        "Pa" => 1.0,
        "kPa" => 1e3,
        "MPa" => 1e6,
        // resistance
        "ohm" | "Ohm" => 1.0,
        "kohm" => 1e3,
        "Mohm" => 1e6,
        // capacitance
        "F" => 1.0,
        "uF" => 1e-6,
        "nF" => 1e-9,
        "pF" => 1e-12,
        // time
        "s" => 1.0,
        "ms" => 1e-3,
        // force, stiffness, damping
        "N" => 1.0,
        "mN" => 1e-3,
        "N/m" => 1.0,
        "N/m3" => 1.0,
        "N.s/m" | "Ns/m" => 1.0,
        // flux density, field strength
        "T" => 1.0,
        "mT" => 1e-3,
        "A/m" => 1.0,
        "kA/m" => 1e3,
        "V/m" => 1.0,
        "V/um" => 1e6,
        "MV/m" => 1e6,
        // density
        "kg/m3" => 1.0,
        "g/cm3" => 1e3,
        _ => return None,
    })
}

/// Parse a quantity string such as `"5 kV"`, `"10mm"` or `"2.2 nF"` to SI.
pub fn parse_quantity(text: &str) -> Result<f64> {
    let s = text.trim();
    let split = s
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    // 'e'/'E' may start a unit rather than an exponent ("5e-3" vs "5eV"); back up
    // when the numeric prefix fails to parse on its own.
    let (mut num, mut unit) = (s[..split].trim(), s[split..].trim());
    if num.parse::<f64>().is_err() && split >= 1 {
        let back = num
            .char_indices()
            .rev()
            .find(|(_, c)| c.is_ascii_digit() || *c == '.')
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(0);
        unit = s[back..].trim();
        num = s[..back].trim();
    }
    let value: f64 = num.parse().map_err(|_| Error::Parse {
        line: 0,
        message: format!("cannot parse number in `{s}`"),
    })?;
    let factor = si_factor(unit).ok_or_else(|| Error::Parse {
        line: 0,
        message: format!("unknown unit `{unit}` in `{s}`"),
    })?;
    Ok(value * factor)
}

/// Format `x` with `sig` significant digits, fixed notation where reasonable.
///
/// Deterministic output for CSV/SVG files: no locale, no platform variance.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..=8).contains(&mag) {
        let decimals = (sig as i32 - 1 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{:.*e}", sig - 1, x);
        s
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_declared_conversions() {
        // the spec'd unit set converts by exact decimal factors
        assert_eq!(parse_quantity("10 mm").unwrap(), 10.0 * 1e-3);
        assert_eq!(parse_quantity("5 kV").unwrap(), 5.0 * 1e3);
        assert_eq!(parse_quantity("27.1 g").unwrap(), 27.1 * 1e-3);
        assert_eq!(parse_quantity("0.698 Mohm").unwrap(), 0.698 * 1e6);
        assert_eq!(parse_quantity("2.2 nF").unwrap(), 2.2 * 1e-9);
        assert_eq!(parse_quantity("1.23 T").unwrap(), 1.23);
    }

    #[test]
    fn attached_units_and_scientific() {
        assert_eq!(parse_quantity("10mm").unwrap(), 0.01);
        assert_eq!(parse_quantity("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_quantity("1.5e2 mm").unwrap(), 0.15);
        assert_eq!(parse_quantity("145 kA/m").unwrap(), 1.45e5);
    }

    #[test]
    fn rejects_unknown_unit() {
        assert!(parse_quantity("3 furlong").is_err());
        assert!(parse_quantity("abc").is_err());
    }

    #[test]
    fn sig_digit_formatting() {
        assert_eq!(format_sig(0.6011153, 6), "0.601115");
        assert_eq!(format_sig(123456.78, 6), "123457");
        assert_eq!(format_sig(0.0001234567, 6), "0.000123457");
        assert_eq!(format_sig(-2.5, 6), "-2.5");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(1.0e-7, 6), "1.00000e-7");
    }
}
