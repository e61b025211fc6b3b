//! Plain-text number formatting shared by CSV writers.

/// Decimal rendering with `9` significant digits; very small magnitudes fall
/// back to scientific notation.
pub fn format_significant(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-6..=15).contains(&magnitude) {
        return format!("{:.*e}", (DIGITS - 1) as usize, v);
    }
    let decimals = (DIGITS - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// CSV text from named columns of equal length.
pub fn csv_columns(headers: &[&str], columns: &[Vec<f64>]) -> String {
    assert_eq!(headers.len(), columns.len());
    let rows = columns.first().map_or(0, Vec::len);
    let mut out = headers.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format_significant(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
