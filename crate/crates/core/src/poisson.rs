//! `-lap(phi) = rho` in the domain with `grad(phi).n = 0` on its boundary.
//!
//! The discrete operator is `A = -divergence(gradient(.))`, symmetric positive
//! semidefinite with the constants as nullspace. The solve is matrix-free
//! conjugate gradients with the iterates and residuals kept mean-free; the
//! returned potential is the mean-zero representative.

use crate::error::{Error, Result};
use crate::fields::{divergence, gradient, integrate, ScalarField};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compatibility<T> {
    pub pass: bool,
    /// `|integral(rho)| / integral(|rho|)` (0 for the zero field).
    pub ratio: T,
}

/// Checks the solvability condition `integral(rho) = 0` relative to `tol`.
pub fn compatibility_check<T: Real>(rho: &ScalarField<T>, tol: T) -> Compatibility<T> {
    let net = integrate(rho).abs();
    let total = integrate(&rho.map(|v| v.abs()));
    let ratio = if total > T::zero() {
        net / total
    } else {
        T::zero()
    };
    Compatibility {
        pass: ratio <= tol,
        ratio,
    }
}

/// `-divergence(gradient(phi))`.
pub fn apply_operator<T: Real>(phi: &ScalarField<T>) -> ScalarField<T> {
    divergence(&gradient(phi)).scale(-T::one())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution<T> {
    /// Mean-zero potential.
    pub phi: ScalarField<T>,
    /// `||A phi - b||_2 / ||b||_2`, recomputed from `phi`, where `b` is the
    /// mean-free part of `rho`.
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn remove_mean<T: Real>(v: &mut [T]) {
    let mean = v.iter().copied().sum::<T>() / T::of_usize(v.len());
    v.iter_mut().for_each(|x| *x = *x - mean);
}

fn apply<T: Real>(template: &ScalarField<T>, x: &[T]) -> Vec<T> {
    let f = ScalarField::new(*template.grid(), x.to_vec()).expect("iterate keeps the grid shape");
    apply_operator(&f).into_values()
}

/// Solves `A phi = rho` to relative residual `tol`.
///
/// Incompatible sources (imbalance above `tol`) are rejected; balancing is the
/// caller's job. When `max_iter` runs out the best iterate comes back with
/// `converged = false`.
pub fn solve_neumann<T: Real>(
    rho: &ScalarField<T>,
    tol: T,
    max_iter: usize,
) -> Result<PoissonSolution<T>> {
    let compat = compatibility_check(rho, tol);
    if !compat.pass {
        return Err(Error::Incompatible {
            ratio: compat.ratio.as_f64(),
            tol: tol.as_f64(),
        });
    }
    let mut b = rho.values().to_vec();
    remove_mean(&mut b);
    let b_norm = dot(&b, &b).sqrt();
    let n = b.len();
    let mut x = vec![T::zero(); n];
    if b_norm.is_zero() {
        return Ok(PoissonSolution {
            phi: ScalarField::zeros(*rho.grid()),
            residual_norm: T::zero(),
            iterations: 0,
            converged: true,
        });
    }

    let true_residual = |x: &[T]| -> Vec<T> {
        let ax = apply(rho, x);
        let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        remove_mean(&mut r);
        r
    };

    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    let mut residual = T::one();
    let mut converged = false;
    while iterations < max_iter {
        let ap = apply(rho, &p);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        remove_mean(&mut r);
        iterations += 1;
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * b_norm {
            // Confirm against the recomputed residual; restart from it if the
            // recurrence drifted.
            remove_mean(&mut x);
            r = true_residual(&x);
            residual = dot(&r, &r).sqrt() / b_norm;
            if residual <= tol {
                converged = true;
                break;
            }
            rr = dot(&r, &r);
            p = r.clone();
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    remove_mean(&mut x);
    if !converged {
        let r = true_residual(&x);
        residual = dot(&r, &r).sqrt() / b_norm;
        converged = residual <= tol;
    }
    Ok(PoissonSolution {
        phi: ScalarField::new(*rho.grid(), x)?,
        residual_norm: residual,
        iterations,
        converged,
    })
}
