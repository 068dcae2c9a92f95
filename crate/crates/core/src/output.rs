//! Number formatting for machine-readable output.

/// 17 significant digits, enough to round-trip any `f64`.
/// Non-finite values print as `nan`, `inf` and `-inf`.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}
