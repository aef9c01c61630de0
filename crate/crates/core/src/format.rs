//! Number formatting shared by every file the crate writes.

/// Scientific notation with 17 significant digits; parses back to the same `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}
