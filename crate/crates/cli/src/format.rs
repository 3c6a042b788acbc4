//! Text rendering of numbers for CSV and label files.

/// `%g`-style rendering with six significant digits: fixed notation for
/// decimal exponents in `[-4, 6)`, otherwise `d.ddddde±XX`, trailing zeros
/// removed in both.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // `{:e}` rounds correctly to the requested digits and reports the
    // exponent after rounding.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Comma-joined [`fmt_g6`] values.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_g6(*v)).collect::<Vec<_>>().join(",")
}
