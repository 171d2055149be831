//! Deterministic text formatting for emitted artifacts.

/// Formats a float with 17 significant digits in scientific notation.
///
/// This round-trips every f64 bit pattern, so identical inputs always produce
/// byte-identical CSV output.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}
