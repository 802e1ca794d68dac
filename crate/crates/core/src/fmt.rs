/// Fixed nine-decimal rendering used by every CSV artifact.
pub(crate) fn f9(x: f64) -> String {
    format!("{x:.9}")
}
