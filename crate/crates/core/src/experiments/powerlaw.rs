//! Log-log least squares for dispersion-versus-size curves.

use serde::Serialize;

use crate::error::{validation, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Exponent `b` in `y ≈ e^a · x^b`.
    pub slope: f64,
    pub intercept: f64,
    /// Points with `y <= 0` that were left out.
    pub dropped: usize,
}

/// Fits `ln y = a + b ln x`. Points with a nonpositive `y` are dropped and
/// counted; at least two usable points with distinct `x` are required.
pub fn powerlaw_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(validation("xs and ys differ in length"));
    }
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(validation("sizes must be positive"));
    }
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x.ln(), y.ln())).collect();
    let dropped = xs.len() - pts.len();
    if pts.len() < 2 {
        return Err(validation("need at least two positive points"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(validation("all sizes are equal"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(PowerLawFit { slope, intercept: my - slope * mx, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_square_root() {
        let xs = [625.0, 1296.0, 2401.0, 4096.0, 6561.0, 10000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        let fit = powerlaw_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_and_two_points() {
        assert_eq!(powerlaw_fit(&[1.0, 2.0, 5.0], &[0.7, 0.7, 0.7]).unwrap().slope, 0.0);
        let fit = powerlaw_fit(&[2.0, 8.0], &[1.0, 4.0]).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zeros_are_dropped() {
        let fit = powerlaw_fit(&[1.0, 2.0, 4.0], &[1.0, 0.0, 0.25]).unwrap();
        assert_eq!(fit.dropped, 1);
        assert!((fit.slope + 1.0).abs() < 1e-15);
        assert!(powerlaw_fit(&[1.0, 2.0], &[1.0, 0.0]).is_err());
    }
}
