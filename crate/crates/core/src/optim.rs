//! Box-constrained quasi-Newton minimization with finite-difference
//! gradients, used for the low-dimensional beam fits.
//!
//! Projected BFGS: variables sitting on a bound with the gradient pushing
//! outward are frozen for the step, the inverse-Hessian approximation acts
//! on the free subspace, and an Armijo backtracking search runs along the
//! projected path.

#[derive(Debug, Clone, Copy)]
pub struct QuasiNewtonOptions {
    pub max_iters: usize,
    /// Stop when the infinity norm of the accepted step falls below this...
    pub step_tol: f64,
    /// ...and the relative objective decrease falls below this.
    pub f_rel_tol: f64,
    /// Finite-difference step for the gradient.
    pub fd_step: f64,
    /// Length of the first steepest-descent step (infinity norm).
    pub initial_step: f64,
}

impl Default for QuasiNewtonOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step_tol: 1e-6,
            f_rel_tol: 1e-10,
            fd_step: 1e-7,
            initial_step: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference gradient, one-sided where a bound is too close.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    lo: &[f64],
    hi: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut probe = x.to_vec();
    let f0 = f(x);
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            let up = xi + h <= hi[i];
            let down = xi - h >= lo[i];
            let g = if up && down {
                probe[i] = xi + h;
                let fp = f(&probe);
                probe[i] = xi - h;
                let fm = f(&probe);
                (fp - fm) / (2.0 * h)
            } else if up {
                probe[i] = xi + h;
                (f(&probe) - f0) / h
            } else if down {
                probe[i] = xi - h;
                (f0 - f(&probe)) / h
            } else {
                0.0
            };
            probe[i] = xi;
            g
        })
        .collect()
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn scaled_identity(n: usize, s: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { s } else { 0.0 }).collect())
        .collect()
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x0`.
pub fn minimize_box<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &QuasiNewtonOptions,
) -> Minimum {
    let n = x0.len();
    assert!(lo.len() == n && hi.len() == n);
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut fx = f(&x);
    if n == 0 || !fx.is_finite() {
        return Minimum {
            x,
            value: fx,
            iterations: 0,
            converged: n == 0,
        };
    }

    let mut g = fd_gradient(&f, &x, lo, hi, opts.fd_step);
    let mut h_inv: Option<Vec<Vec<f64>>> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lo = x[i] <= lo[i] && g[i] > 0.0;
                let at_hi = x[i] >= hi[i] && g[i] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        let gnorm = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if gnorm == 0.0 {
            converged = true;
            break;
        }

        let mut attempt_reset = h_inv.is_none();
        loop {
            let h = h_inv.get_or_insert_with(|| scaled_identity(n, opts.initial_step / gnorm));
            let mut d = vec![0.0; n];
            for i in (0..n).filter(|&i| free[i]) {
                d[i] = -(0..n)
                    .filter(|&j| free[j])
                    .map(|j| h[i][j] * g[j])
                    .sum::<f64>();
            }
            let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if slope >= 0.0 {
                if attempt_reset {
                    converged = true;
                    break;
                }
                h_inv = None;
                attempt_reset = true;
                continue;
            }

            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                project(&mut xn, lo, hi);
                let decrease: f64 = g
                    .iter()
                    .zip(xn.iter().zip(&x))
                    .map(|(gi, (a, b))| gi * (a - b))
                    .sum();
                let fnew = f(&xn);
                if fnew.is_finite() && fnew <= fx + 1e-4 * decrease.min(0.0) && fnew <= fx {
                    accepted = Some((xn, fnew));
                    break;
                }
                alpha *= 0.5;
            }

            match accepted {
                None => {
                    if attempt_reset {
                        converged = true;
                        break;
                    }
                    h_inv = None;
                    attempt_reset = true;
                }
                Some((xn, fnew)) => {
                    let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                    let gn = fd_gradient(&f, &xn, lo, hi, opts.fd_step);
                    let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                    let step = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let rel = (fx - fnew) / fx.abs().max(f64::MIN_POSITIVE);
                    bfgs_update(h_inv.as_mut().expect("initialized above"), &s, &y);
                    x = xn;
                    fx = fnew;
                    g = gn;
                    if step < opts.step_tol && rel < opts.f_rel_tol {
                        converged = true;
                    }
                    break;
                }
            }
        }
        if converged {
            break;
        }
    }

    Minimum {
        x,
        value: fx,
        iterations,
        converged,
    }
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64]) {
    let n = s.len();
    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let ss: f64 = s.iter().map(|v| v * v).sum();
    if !(sy > 1e-12 * (ss * yy).sqrt()) || yy == 0.0 {
        return;
    }
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| h[i][j] * y[j]).sum())
        .collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
