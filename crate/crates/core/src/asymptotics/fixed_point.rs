//! Smallest fixed points of increasing maps on `[0, 1]`.

const SCAN_STEP: f64 = 1e-4;
const STABILITY_MARGIN: f64 = 1e-9;

/// Smallest `y` in `[0, 1]` with `f(y) = y`, and whether it is stable
/// (`f'(y) < 1`, or `y = 1`).
///
/// Scans for the first grid point where `f(y) - y` turns nonpositive, then
/// bisects down to adjacent floats. A tangency strictly between grid points
/// is not detected.
pub fn smallest_fixed_point(f: impl Fn(f64) -> f64) -> (f64, bool) {
    let g = |y: f64| f(y) - y;
    let steps = (1.0 / SCAN_STEP).round() as usize;
    let mut lo = 0.0;
    if g(0.0) <= 0.0 {
        return (0.0, derivative(&f, 0.0) < 1.0 - STABILITY_MARGIN);
    }
    let mut hi = None;
    for k in 1..=steps {
        let y = k as f64 / steps as f64;
        if g(y) <= 0.0 {
            hi = Some(y);
            break;
        }
        lo = y;
    }
    let Some(mut hi) = hi else {
        // f(1) > 1 cannot happen for a valid map; report total default.
        return (1.0, true);
    };
    // No crossing before the last cell and none at 1 beyond rounding: total default.
    if hi == 1.0 && g(1.0).abs() <= 1e-14 {
        return (1.0, true);
    }
    while hi - lo > f64::EPSILON * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = if g(hi).abs() <= g(lo).abs() { hi } else { lo };
    if y >= 1.0 {
        return (1.0, true);
    }
    (y, derivative(&f, y) < 1.0 - STABILITY_MARGIN)
}

fn derivative(f: &impl Fn(f64) -> f64, y: f64) -> f64 {
    let h = 1e-6;
    let a = (y - h).max(0.0);
    let b = (y + h).min(1.0);
    (f(b) - f(a)) / (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_root() {
        let (y, stable) = smallest_fixed_point(|y| 0.2 + 0.8 * y * y);
        assert!((y - 0.25).abs() < 1e-13);
        assert!(stable);
    }

    #[test]
    fn linear_total_default() {
        let d = 0.1;
        let (y, stable) = smallest_fixed_point(|y| d + (1.0 - d) * y);
        assert_eq!(y, 1.0);
        assert!(stable);
    }

    #[test]
    fn zero_start() {
        let (y, stable) = smallest_fixed_point(|y| 0.5 * y * y);
        assert_eq!(y, 0.0);
        assert!(stable);
        let (y, stable) = smallest_fixed_point(|y| 1.5 * y - 0.5 * y * y);
        assert_eq!(y, 0.0);
        assert!(!stable);
    }

    #[test]
    fn interior_crossing() {
        // f(y) - y = (y - 0.3)(y - 0.6): first root 0.3 with f' = 0.7.
        let (y, stable) = smallest_fixed_point(|y| y + (y - 0.3) * (y - 0.6));
        assert!((y - 0.3).abs() < 1e-14);
        assert!(stable);
    }
}
