//! The 1D case. On a segment the flow is fixed by conservation alone,
//! `dT/dx = rho` with `T = 0` at both ends, so it is obtained by cumulative
//! integration rather than a Poisson solve.
//!
//! Also holds the closed-form two-Gaussian highway example: sources centered
//! at 3, destinations at 10, drift `v(x) = x`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{integrate, GridSpec, ScalarField, VectorField};
use crate::flow::relay_density;
use crate::scalar::Real;
use crate::scenario::{erfc, normalization_constant, DensitySpec, DensityTerm};

/// Relative closure tolerance on `T` at the right end.
pub const CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Flow1D<T> {
    /// Flow on the `nx + 1` face points; `flow.u()[0] == 0`.
    pub flow: VectorField<T>,
    pub eta: ScalarField<T>,
    pub node_count: T,
}

impl<T: Real> Flow1D<T> {
    pub fn grid(&self) -> &GridSpec<T> {
        self.flow.grid()
    }
    pub fn faces(&self) -> &[T] {
        self.flow.u()
    }
}

/// Cumulative flow `T(x_k) = sum_{i<k} rho_i dx`, `eta = |T|^alpha` at cells,
/// `N = integral(eta)`. Fails if `T` does not return to zero at the right end.
pub fn solve_1d<T: Real>(rho: &ScalarField<T>, alpha: T) -> Result<Flow1D<T>> {
    let g = *rho.grid();
    if g.is_2d() {
        return Err(Error::Unsupported("solve_1d needs a 1D grid"));
    }
    let mut faces = Vec::with_capacity(g.nx() + 1);
    let mut acc = T::zero();
    faces.push(acc);
    for &r in rho.values() {
        acc = acc + r * g.dx();
        faces.push(acc);
    }
    let max_t = faces.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let defect = acc.abs();
    let tol = T::lit(CLOSURE_TOL) * max_t;
    if defect > tol {
        return Err(Error::Unclosed {
            defect: defect.as_f64(),
            tol: tol.as_f64(),
        });
    }
    let flow = VectorField::new(g, faces, vec![])?;
    let eta = relay_density(&flow, alpha)?;
    Ok(Flow1D {
        node_count: integrate(&eta),
        flow,
        eta,
    })
}

pub const SOURCE_CENTER: f64 = 3.0;
pub const SINK_CENTER: f64 = 10.0;

/// Uniform `+level` on `[0, L/2]` and `-level` on `[L/2, L]`.
pub fn halves_density_spec(length: f64, level: f64) -> DensitySpec {
    DensitySpec::new(vec![
        DensityTerm::UniformPatch {
            level,
            x: (0.0, 0.5 * length),
            y: None,
        },
        DensityTerm::UniformPatch {
            level: -level,
            x: (0.5 * length, length),
            y: None,
        },
    ])
}

/// Unit-mass Gaussian sources at 3 and destinations at 10 on the half-line.
pub fn highway_density_spec() -> DensitySpec {
    let gaussian = |weight: f64, c: f64| DensityTerm::Gaussian {
        weight,
        center: (c, 0.0),
        width: 1.0,
        normalized: true,
    };
    DensitySpec::new(vec![gaussian(1.0, SOURCE_CENTER), gaussian(-1.0, SINK_CENTER)])
}

/// `integral_0^x k exp(-(s e^{-t} - c)^2 - t) ds` for the unit-mass Gaussian
/// centered at `c`. Substituting `u = s e^{-t}` cancels the `e^{-t}` amplitude:
/// the result is `(k sqrt(pi)/2) (erfc(-c) - erfc(x e^{-t} - c))`.
fn advected_gaussian_mass(c: f64, t: f64, x: f64) -> f64 {
    let k = normalization_constant(c);
    0.5 * k * PI.sqrt() * (erfc(-c) - erfc(x * (-t).exp() - c))
}

/// Closed-form density of the highway example at `(x, t)`.
pub fn example2_density(t: f64, x: f64) -> f64 {
    let xi = x * (-t).exp();
    let gauss = |c: f64| normalization_constant(c) * (-(xi - c).powi(2) - t).exp();
    gauss(SOURCE_CENTER) - gauss(SINK_CENTER)
}

/// Closed-form optimal flow `T*(x, t)` of the highway example.
pub fn example2_flow(t: f64, x: f64) -> f64 {
    advected_gaussian_mass(SOURCE_CENTER, t, x) - advected_gaussian_mass(SINK_CENTER, t, x)
}

/// Right end of the quadrature window in the comoving coordinate
/// `u = x e^{-t}`. Beyond `u = 16` both Gaussians have integrated to within
/// `erfc(6) ~ 2e-17` of unit mass, so the tail of `T*^2` is far below
/// `1e-8` of the integral.
const COMOVING_CUTOFF: f64 = 16.0;
const SIMPSON_INTERVALS: usize = 20_000;

/// `N*(t) = integral_0^inf T*(x, t)^2 dx` by composite Simpson on
/// `[0, 16 e^t]`.
pub fn example2_node_count(t: f64) -> f64 {
    let x_max = COMOVING_CUTOFF * t.exp();
    simpson(|x| example2_flow(t, x).powi(2), 0.0, x_max, SIMPSON_INTERVALS)
}

/// Composite Simpson's rule with `n` (rounded up to even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n + n % 2).max(2);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}
