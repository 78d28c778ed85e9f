//! Binomial and trinomial probabilities evaluated term by term in log space.
//!
//! Degrees are small (bounded by the truncation index), so tails are exact
//! sums rather than approximations.

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose(n: u32, k: u32) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: u32) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// `C(n, k)` as a float, by the multiplicative formula (exact for small `n`).
pub fn choose(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for t in 0..k {
        acc = acc * (n - t) as f64 / (t + 1) as f64;
    }
    acc
}

/// `k * ln(p)` with the convention `0 * ln 0 = 0`.
#[inline]
fn k_ln(k: u32, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

/// `P(Bin(n, p) = k)`.
pub fn binom_pmf(n: u32, k: u32, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let p = p.clamp(0.0, 1.0);
    (ln_choose(n, k) + k_ln(k, p) + k_ln(n - k, 1.0 - p)).exp()
}

/// `P(Bin(n, p) >= c)`; equals 1 for `c <= 0` and 0 for `c > n`.
pub fn binom_tail(n: u32, c: i64, p: f64) -> f64 {
    if c <= 0 {
        return 1.0;
    }
    let c = c as u32;
    if c > n {
        return 0.0;
    }
    (c..=n).map(|k| binom_pmf(n, k, p)).sum::<f64>().min(1.0)
}

/// `P(Multin(n; pa, pb, 1 - pa - pb) = (a, b, n - a - b))`.
pub fn trinomial_pmf(n: u32, a: u32, b: u32, pa: f64, pb: f64) -> f64 {
    if a + b > n {
        return 0.0;
    }
    let pa = pa.clamp(0.0, 1.0);
    let pb = pb.clamp(0.0, 1.0);
    let pc = (1.0 - pa - pb).max(0.0);
    let rest = n - a - b;
    let ln_coef = ln_factorial(n) - ln_factorial(a) - ln_factorial(b) - ln_factorial(rest);
    (ln_coef + k_ln(a, pa) + k_ln(b, pb) + k_ln(rest, pc)).exp()
}
