//! Fixed-precision float formatting for CSV output.
//!
//! Output mirrors C's `%.<n>g`: `n` significant digits, trailing zeros
//! stripped, scientific notation when the decimal exponent is below -4 or at
//! least `n`.

/// Formats `x` with `digits` significant digits (`digits >= 1`).
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Rust's `{:e}` rounds the mantissa correctly; reuse its exponent.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig(0.35, 6), "0.35");
        assert_eq!(sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(sig(123456.7, 6), "123457");
        assert_eq!(sig(1234567.0, 6), "1.23457e+06");
        assert_eq!(sig(0.0001234, 6), "0.0001234");
        assert_eq!(sig(0.00001234, 6), "1.234e-05");
        assert_eq!(sig(-2.5, 9), "-2.5");
        assert_eq!(sig(0.0, 9), "0");
        assert_eq!(sig(9.9999999, 6), "10");
        assert_eq!(sig(10656.125, 9), "10656.125");
    }

    #[test]
    fn reparse_is_stable() {
        for &x in &[0.1234567891, 399.99999, 6.4999999, 1e-7, 3.0e12] {
            let s = sig(x, 6);
            let y: f64 = s.parse().unwrap();
            assert_eq!(sig(y, 6), s);
        }
    }
}
