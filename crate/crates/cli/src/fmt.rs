//! Deterministic output formatting.
//!
//! All floats are printed like C's `printf("%.12g", v)`: 12 significant
//! digits, trailing zeros trimmed, scientific notation only when the decimal
//! exponent falls below -4 or reaches 12. Fixing the format (rather than
//! using `Display`) keeps every table byte-identical across runs and
//! platforms, and the output is also valid as a JSON number.

/// Format `v` like `%.12g`.
pub fn g12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.11e}", v); // e.g. "-3.14159265359e-7"
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let e: i32 = exp.parse().expect("decimal exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);
    let body = if !(-4..12).contains(&e) {
        let trimmed = digits.trim_end_matches('0');
        let (head, tail) = trimmed.split_at(1);
        let mant = if tail.is_empty() {
            head.to_string()
        } else {
            format!("{head}.{tail}")
        };
        format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    } else if e >= 0 {
        let split = e as usize + 1;
        let int_part = &digits[..split];
        let frac = digits[split..].trim_end_matches('0');
        if frac.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-e - 1) as usize);
        let frac = format!("{zeros}{digits}");
        format!("0.{}", frac.trim_end_matches('0'))
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// `g12` for optional values; `None` becomes the empty CSV cell.
pub fn opt_g12(v: Option<f64>) -> String {
    v.map(g12).unwrap_or_default()
}

/// JSON number or `null`.
pub fn json_num(v: Option<f64>) -> String {
    v.map(g12).unwrap_or_else(|| "null".to_string())
}

/// JSON string or `null`.
pub fn json_str(v: Option<&str>) -> String {
    v.map(|s| format!("\"{s}\"")).unwrap_or_else(|| "null".to_string())
}

/// Quote a CSV field when it contains a separator, quote, or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g_conventions() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(-2.5), "-2.5");
        assert_eq!(g12(0.05), "0.05");
        assert_eq!(g12(0.0001), "0.0001");
        assert_eq!(g12(0.00001), "1e-05");
        assert_eq!(g12(1e15), "1e+15");
        assert_eq!(g12(123456789012.3), "123456789012");
        assert_eq!(g12(1234567890123.0), "1.23456789012e+12");
        assert_eq!(g12(0.31619737624797932), "0.316197376248");
        assert_eq!(g12(6.3053952792716912), "6.30539527927");
        assert_eq!(g12(2.9999999999999996), "3");
        assert_eq!(g12(1.5e-300), "1.5e-300");
    }

    #[test]
    fn rounding_carries_into_the_exponent() {
        assert_eq!(g12(0.99999999999999), "1");
        assert_eq!(g12(9.99999999999999e11), "1e+12");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
