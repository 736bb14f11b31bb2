//! Derivative-free simplex (Nelder-Mead) minimizer.
//!
//! Small dimension counts and cheap objectives only; the curve fits here are
//! in 1-3 reparameterized variables.

use alloc::vec::Vec;

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Relative spread of objective values across the simplex at convergence.
    pub f_tol: f64,
    /// Absolute spread of simplex coordinates at convergence.
    pub x_tol: f64,
    /// Initial simplex displacement per coordinate.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iter: 2000, f_tol: 1e-12, x_tol: 1e-10, initial_step: 0.5 }
    }
}

/// Result of a simplex run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0` with the standard Nelder-Mead moves
/// (reflect 1.0, expand 2.0, contract 0.5, shrink 0.5).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let n = x0.len();
    assert!(n >= 1, "need at least one variable");
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = f(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let fx = f(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));

        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;
        let f_spread = (f_worst - f_best).abs();
        let x_spread = (0..n)
            .map(|i| {
                let lo = simplex.iter().map(|s| s.0[i]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|s| s.0[i]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0f64, f64::max);
        if f_spread <= opts.f_tol * (1.0 + f_best.abs()) || x_spread <= opts.x_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = alloc::vec![0.0; n];
        for s in simplex.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&s.0) {
                *c += x / n as f64;
            }
        }
        let point_along = |t: f64| -> Vec<f64> {
            (0..n).map(|i| centroid[i] + t * (simplex[n].0[i] - centroid[i])).collect()
        };

        let reflected = point_along(-1.0);
        let f_reflected = f(&reflected);
        if f_reflected < simplex[0].1 {
            let expanded = point_along(-2.0);
            let f_expanded = f(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
            continue;
        }
        let contracted = if f_reflected < simplex[n].1 {
            point_along(-0.5) // outside
        } else {
            point_along(0.5) // inside
        };
        let f_contracted = f(&contracted);
        if f_contracted < simplex[n].1.min(f_reflected) {
            simplex[n] = (contracted, f_contracted);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0.clone();
        for s in simplex.iter_mut().skip(1) {
            for (x, b) in s.0.iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            s.1 = f(&s.0);
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
    let (x, fx) = simplex.swap_remove(0);
    SimplexResult { x, fx, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic_bowl() {
        let r = nelder_mead(
            |x| (x[0] - 3.0) * (x[0] - 3.0) + 2.0 * (x[1] + 1.0) * (x[1] + 1.0),
            &[0.0, 0.0],
            &SimplexOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-5);
        assert!((r.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let r = nelder_mead(
            |x| {
                let a = 1.0 - x[0];
                let b = x[1] - x[0] * x[0];
                a * a + 100.0 * b * b
            },
            &[-1.2, 1.0],
            &SimplexOptions { max_iter: 5000, ..Default::default() },
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4, "{:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn one_dimensional_case_works() {
        let r = nelder_mead(|x| (x[0] - 0.7).powi(2), &[10.0], &SimplexOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 0.7).abs() < 1e-6);
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let r = nelder_mead(
            |x| x.iter().map(|v| v * v).sum(),
            &[5.0, 5.0, 5.0],
            &SimplexOptions { max_iter: 3, ..Default::default() },
        );
        assert!(!r.converged);
    }
}
