//! Small dense-vector helpers and a projected conjugate gradient solver.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scale to unit length; returns the previous norm. Zero vectors are left alone.
pub fn normalize(a: &mut [f64]) -> f64 {
    let nrm = norm(a);
    if nrm > 0.0 {
        a.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// `x -= (uᵀx) u` for a unit vector `u`.
pub fn project_out(x: &mut [f64], u: &[f64]) {
    let c = dot(x, u);
    for (xi, ui) in x.iter_mut().zip(u) {
        *xi -= c * ui;
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    /// True residual `‖b - A x‖` (projected when a constraint is active).
    pub residual: f64,
    pub iterations: usize,
}

/// Conjugate gradient for `A x = b` with zero initial guess.
///
/// With `constraint = Some(u)` the solve is restricted to `u⊥`: `b`, every
/// iterate, residual and search direction are projected against `u`, so `A`
/// only needs to be SPD on that subspace. The recurrence restarts from the
/// true residual if it drifts away from the recursive one.
pub(crate) fn conjugate_gradient<F>(
    mut apply: F,
    b: &[f64],
    constraint: Option<&[f64]>,
    tol: f64,
    max_iterations: usize,
    what: &'static str,
) -> Result<CgOutcome>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let project = |v: &mut [f64]| {
        if let Some(u) = constraint {
            project_out(v, u);
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    project(&mut r);
    if norm(&r) <= tol {
        let residual = norm(&r);
        return Ok(CgOutcome {
            x,
            residual,
            iterations: 0,
        });
    }
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < max_iterations {
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        while iterations < max_iterations {
            iterations += 1;
            apply(&p, &mut ap);
            project(&mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NoConvergence {
                    what,
                    iterations,
                    estimate: pap,
                    residual: rr.sqrt(),
                });
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            project(&mut x);
            project(&mut r);
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= tol {
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            project(&mut p);
        }
        // Replace the recursive residual with the true one.
        apply(&x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        project(&mut r);
        residual = norm(&r);
        if residual <= tol {
            return Ok(CgOutcome {
                x,
                residual,
                iterations,
            });
        }
    }
    Err(Error::NoConvergence {
        what,
        iterations,
        estimate: norm(&x),
        residual,
    })
}
