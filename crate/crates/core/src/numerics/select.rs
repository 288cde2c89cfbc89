use crate::error::{Error, Result};

/// Median of `values`; the mean of the two middle order statistics for even
/// lengths.
///
/// Reorders `values` in place. Selection is introselect from the standard
/// library: expected linear time with a median-of-medians fallback.
pub fn median(values: &mut [f64]) -> Result<f64> {
    let len = values.len();
    if len == 0 {
        return Err(Error::EmptyInput("median of an empty list"));
    }
    let mid = len / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if len % 2 == 1 {
        return Ok(*upper);
    }
    let below = lower.iter().copied().max_by(f64::total_cmp).expect("len >= 2");
    Ok(0.5 * (below + *upper))
}
