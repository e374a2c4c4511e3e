//! Deterministic text output for snapshots, reports and monitor rows.
//!
//! Floats are always written as `{:.16e}` (17 significant digits), which
//! round-trips every f64 exactly, so snapshots are restart-exact and repeated
//! runs produce byte-identical files.

/// 17-significant-digit float, valid as a JSON number and a CSV cell.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON array of floats.
pub fn float_array(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24 + 2);
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&float(*v));
    }
    out.push(']');
    out
}

/// `null` for None, formatted float otherwise.
pub fn opt_float(x: Option<f64>) -> String {
    match x {
        Some(v) => float(v),
        None => "null".to_string(),
    }
}

pub fn bool(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn float_round_trips() {
        for &x in &[
            0.5,
            std::f64::consts::PI,
            6.0f64.sqrt(),
            1.0 / 3.0,
            -2.2250738585072014e-308,
            1.7976931348623157e308,
        ] {
            let s = super::float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
