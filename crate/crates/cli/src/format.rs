/// Formats `v` with six significant digits.
///
/// Fixed notation is used for magnitudes in `[1e-4, 1e6)`, scientific
/// otherwise. Output never depends on the locale and never prints `-0`.
pub fn sig6(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let s = format!("{v:.5e}");
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{e}", trim_zeros(mantissa.to_string())),
            None => s,
        }
    };
    if s.chars().all(|c| c == '-' || c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(7.0 / 12.0), "0.583333");
        assert_eq!(sig6(0.306_635_229_915_246_6), "0.306635");
        assert_eq!(sig6(61.740_852_297_878_83), "61.7409");
        assert_eq!(sig6(-7.345_731_072_343_442), "-7.34573");
        assert_eq!(sig6(1.585_786_437_626_905), "1.58579");
        assert_eq!(sig6(3.0), "3");
        assert_eq!(sig6(70.0), "70");
        assert_eq!(sig6(0.1), "0.1");
        assert_eq!(sig6(123_456_789.0), "1.23457e8");
        assert_eq!(sig6(654_321.4), "654321");
    }

    #[test]
    fn small_and_signed_zero() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(2.5e-16), "2.5e-16");
        assert_eq!(sig6(-1.234_567e-7), "-1.23457e-7");
        assert_eq!(sig6(0.000_123_456_7), "0.000123457");
    }
}
