/// Canonical decimal rendering of a number.
///
/// Integral values below 1e15 in magnitude print without a fractional part
/// (`18`, not `18.0`); everything else uses the shortest round-trip form.
pub fn format_number(n: f64) -> String {
    if n.is_finite() && n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}
