//! Bracketed scalar root finding.

/// Finds a sign change of `f` on `[lo, hi]` where `f(lo) <= 0 <= f(hi)`.
///
/// Uses the Illinois variant of regula falsi with a bisection step whenever
/// the interval fails to shrink by half, so the worst case stays logarithmic.
/// Returns the end of the final bracket where `f >= 0`.
pub(crate) fn increasing_root(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    tol: f64,
) -> f64 {
    debug_assert!(f_lo <= 0.0 && f_hi >= 0.0);
    if f_lo == 0.0 {
        return lo;
    }
    if f_hi == 0.0 {
        return hi;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = hi - lo;
        if width <= tol {
            break;
        }
        let mut mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            f_hi = f_mid;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        if hi - lo > 0.5 * width {
            let mid = 0.5 * (lo + hi);
            let f_mid = f(mid);
            if f_mid < 0.0 {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
            side = 0;
        }
    }
    hi
}

/// Plain bisection on a predicate that is `true` on `[lo, t)` and `false` on `[t, hi]`.
pub(crate) fn bisect_predicate(
    mut pred: impl FnMut(f64) -> bool,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_smooth_root() {
        let r = increasing_root(|x| x * x - 2.0, 0.0, 2.0, -2.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn handles_kinks() {
        let f = |x: f64| (x - 0.3).max(0.0) + (x - 0.3).min(0.0) * 1e-3;
        let r = increasing_root(f, 0.0, 1.0, f(0.0), f(1.0), 1e-14);
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn predicate_bisection() {
        let t = bisect_predicate(|x| x < 0.123, 0.0, 1.0, 1e-12);
        assert!((t - 0.123).abs() < 1e-11);
    }
}
