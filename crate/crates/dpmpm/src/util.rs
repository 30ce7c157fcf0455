//! Formatting helpers shared by progress lines, tables, and plots.

/// Formats a float the way C's `%g` would with 6 significant digits:
/// fixed notation in a moderate magnitude range, scientific outside it,
/// trailing zeros trimmed. Progress lines and plot tick labels use this so
/// output is stable and compact.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        let s = format!("{:.5e}", x);
        return trim_mantissa(&s);
    }
    let decimals = (5 - exp).clamp(0, 17) as usize;
    let s = format!("{:.*}", decimals, x);
    trim_fixed(&s)
}

fn trim_fixed(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".to_string() } else { t.to_string() }
}

fn trim_mantissa(s: &str) -> String {
    match s.split_once('e') {
        Some((mant, exp)) => format!("{}e{}", trim_fixed(mant), exp),
        None => s.to_string(),
    }
}
