/// Formats a float with 17 significant digits, enough for an exact round trip
/// through `str::parse::<f64>`. Non-finite values render as `inf`, `-inf` or
/// `NaN`, which parse back as well.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_awkward_values() {
        for x in [
            0.1,
            1.0 / 3.0,
            9.0e10,
            -2.0412414523193148,
            f64::MIN_POSITIVE,
            5e-324,
        ] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(
            format_f64(f64::NEG_INFINITY).parse::<f64>().unwrap(),
            f64::NEG_INFINITY
        );
    }
}
