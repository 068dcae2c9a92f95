//! Sign-change bisection. Every root this crate needs is a single crossing of
//! a monotone function, so bracketing plus bisection is enough.

/// Bisects `f` on `[lo, hi]`, which must bracket a sign change, until the
/// bracket is no wider than `tol`. Returns the bracket midpoint.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let lo_positive = f(lo) > 0.0;
    // 200 halvings cover any finite f64 bracket
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Doubles `hi` from `start` until `f(hi)` has the opposite sign to
/// `lo_positive`, giving up past `cap`.
pub(crate) fn expand_upper<F>(mut f: F, lo_positive: bool, start: f64, cap: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut hi = start;
    while hi <= cap {
        if (f(hi) > 0.0) != lo_positive {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}
