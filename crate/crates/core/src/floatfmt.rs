//! Decimal formatting used by every serializer in this crate.
//!
//! All emitted floats carry 17 significant digits, enough to round-trip
//! any f64 exactly, so serialized output is byte-stable across runs.

/// Formats `x` with 17 significant digits in scientific notation.
///
/// Negative zero is normalized to positive zero so logically equal
/// results serialize identically.
pub fn fmt_f64(x: f64) -> String {
    assert!(x.is_finite(), "non-finite value reached a serializer");
    format!("{:.16e}", x + 0.0)
}
