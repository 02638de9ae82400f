//! Minimal JSON emission with fixed float formatting.
//!
//! JSON is the machine-exact output channel: floats are printed with 17
//! significant digits in scientific notation, which round-trips every f64.
//! CSV, the plotting channel, uses 9 significant digits.

/// 17 significant digits, always parseable as a JSON number.
pub fn json_f64(v: f64) -> String {
    debug_assert!(v.is_finite(), "refusing to serialize non-finite {v}");
    format!("{v:.16e}")
}

/// 9 significant digits for CSV cells.
pub fn csv_f64(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn json_array(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| json_f64(*v)).collect();
    format!("[{}]", items.join(","))
}

pub fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
