//! Gaussian copula over two discrete marginals.
//!
//! Cell masses are bivariate-normal rectangle probabilities. The inner
//! dimension is integrated in closed form through `Phi`, the outer one by
//! composite Gauss-Legendre quadrature over panels of width at most
//! [`PANEL_WIDTH`], which resolves rectangle masses to well below 1e-12 for
//! `|rho| <= 0.99`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

const GL_ORDER: usize = 20;
const PANEL_WIDTH: f64 = 0.25;
/// Infinite rectangle edges are clipped here; the normal mass beyond is < 1e-18.
const CLIP: f64 = 9.0;

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// one Halley step against `erfc`.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement.
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

struct GaussLegendre {
    nodes: [f64; GL_ORDER],
    weights: [f64; GL_ORDER],
}

fn gauss_legendre() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for k in 0..n {
            // Newton on P_n from the Chebyshev-like initial guess.
            let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[k] = x;
            weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    })
}

/// `∫_a^b f(x) dx` by composite Gauss-Legendre.
fn integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = gauss_legendre();
    let panels = ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let mut panel = 0.0;
        for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
            panel += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * panel;
    }
    total
}

/// `P(a1 < X <= b1, a2 < Y <= b2)` for a standard bivariate normal with correlation `rho`.
pub fn bvn_rectangle(a1: f64, b1: f64, a2: f64, b2: f64, rho: f64) -> f64 {
    let lo = a1.max(-CLIP);
    let hi = b1.min(CLIP);
    let s = (1.0 - rho * rho).sqrt();
    integrate(lo, hi, |x| {
        let upper = if b2 == f64::INFINITY { 1.0 } else { std_normal_cdf((b2 - rho * x) / s) };
        let lower = if a2 == f64::NEG_INFINITY { 0.0 } else { std_normal_cdf((a2 - rho * x) / s) };
        std_normal_pdf(x) * (upper - lower)
    })
    .max(0.0)
}

/// Gaussian-copula joint pmf over two marginals on `1..=len`, as a row-major
/// `rows.len() x cols.len()` table. Rectangle edges sit at the normal quantiles
/// of the marginal CDFs.
pub fn copula_table(rows: &[f64], cols: &[f64], rho: f64) -> Vec<Vec<f64>> {
    let edges = |pmf: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(pmf.len() + 1);
        out.push(f64::NEG_INFINITY);
        let mut cdf = 0.0;
        for (k, w) in pmf.iter().enumerate() {
            cdf += w;
            out.push(if k + 1 == pmf.len() { f64::INFINITY } else { std_normal_quantile(cdf) });
        }
        out
    };
    let re = edges(rows);
    let ce = edges(cols);
    (0..rows.len())
        .map(|r| {
            (0..cols.len())
                .map(|c| bvn_rectangle(re[r], re[r + 1], ce[c], ce[c + 1], rho))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.01, 0.02425, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-8] {
            let x = std_normal_quantile(p);
            assert!((std_normal_cdf(x) - p).abs() < 1e-9 * p.max(1e-3), "p={p}");
        }
        assert_eq!(std_normal_quantile(0.5), 0.0);
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let v = integrate(-1.0, 2.0, |x| x.powi(7) - 3.0 * x * x + 1.0);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn rectangle_independent_case_factorises() {
        let (a, b, c, d) = (-0.3, 1.1, -2.0, 0.4);
        let got = bvn_rectangle(a, b, c, d, 0.0);
        let want = (std_normal_cdf(b) - std_normal_cdf(a)) * (std_normal_cdf(d) - std_normal_cdf(c));
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn rectangle_quadrant_matches_closed_form() {
        // P(X <= 0, Y <= 0) = 1/4 + asin(rho) / (2 pi)
        for &rho in &[-0.8, -0.2, 0.5, 0.9] {
            let got = bvn_rectangle(f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY, 0.0, rho);
            let want = 0.25 + f64::asin(rho) / (2.0 * PI);
            assert!((got - want).abs() < 1e-13, "rho={rho}: {got} vs {want}");
        }
    }

    #[test]
    fn table_preserves_marginals() {
        let rows = [0.5, 0.3, 0.2];
        let cols = [0.1, 0.6, 0.2, 0.1];
        let t = copula_table(&rows, &cols, 0.7);
        for (r, want) in rows.iter().enumerate() {
            let s: f64 = t[r].iter().sum();
            assert!((s - want).abs() < 1e-12);
        }
        for (c, want) in cols.iter().enumerate() {
            let s: f64 = t.iter().map(|row| row[c]).sum();
            assert!((s - want).abs() < 1e-12);
        }
    }
}
