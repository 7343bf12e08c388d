/// Formats `x` rounded to `digits` significant digits, without trailing zeros
/// or exponent notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    let y = round_sig(x, digits);
    if y == 0.0 {
        return "0".to_string();
    }
    format!("{y}")
}

/// Rounds `x` to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(52.25, 12), "52.25");
        assert_eq!(format_sig(-0.0, 12), "0");
        assert_eq!(format_sig(0.1 + 0.2, 12), "0.3");
        assert_eq!(format_sig(1e-20, 12), "0.00000000000000000001");
    }
}
