//! Damped Newton iteration for two equations in two unknowns.

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Stop once the max-norm of the residual is below this.
    pub tol: f64,
    /// Relative central-difference step for the Jacobian.
    pub jac_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-13, jac_step: 1e-6 }
    }
}

fn norm(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Solves `f(x) = 0` from `x0`, keeping iterates inside the box given by
/// `project`. Returns the last iterate if it meets `tol`, else `None`.
///
/// The Jacobian is built from central differences (one-sided where the box
/// cuts the stencil). Steps are halved until the residual norm decreases.
pub fn damped_newton(
    f: impl Fn([f64; 2]) -> [f64; 2],
    x0: [f64; 2],
    project: impl Fn([f64; 2]) -> [f64; 2],
    opts: NewtonOptions,
) -> Option<[f64; 2]> {
    let mut x = project(x0);
    let mut r = f(x);
    if !r.iter().all(|v| v.is_finite()) {
        return None;
    }
    for _ in 0..opts.max_iter {
        if norm(r) < opts.tol {
            return Some(x);
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = opts.jac_step * x[k].abs().max(1.0);
            let mut hi = x;
            let mut lo = x;
            hi[k] += h;
            lo[k] -= h;
            let (hi, lo) = (project(hi), project(lo));
            let span = hi[k] - lo[k];
            if span == 0.0 {
                return None;
            }
            let (fh, fl) = (f(hi), f(lo));
            jac[0][k] = (fh[0] - fl[0]) / span;
            jac[1][k] = (fh[1] - fl[1]) / span;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let current = norm(r);
        let mut alpha = 1.0;
        loop {
            let trial = project([x[0] + alpha * dx[0], x[1] + alpha * dx[1]]);
            let rt = f(trial);
            if rt.iter().all(|v| v.is_finite()) && norm(rt) < current * (1.0 - 1e-4 * alpha) {
                x = trial;
                r = rt;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return (current < opts.tol).then_some(x);
            }
        }
    }
    (norm(r) < opts.tol).then_some(x)
}
