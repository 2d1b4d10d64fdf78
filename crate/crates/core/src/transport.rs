//! Density evolution under deterministic drift: `d(rho)/dt + div(rho v) = 0`.
//!
//! Donor-cell upwind finite volumes on the staggered grid. The update is the
//! discrete continuity law itself, so mass changes only through boundary
//! outflow. Boundary faces take no inflow and let mass leave freely.

use crate::error::{Error, Result};
use crate::fields::{divergence, integrate, GridSpec, ScalarField, VectorField};
use crate::scalar::Real;
use crate::scenario::{normalization_constant, DensitySpec, DensityTerm, VelocitySpec};

/// Largest stable explicit step for drift `v`: `cfl / (max|vx|/dx + max|vy|/dy)`.
///
/// In 1D, or when only one component is nonzero, this is
/// `cfl * min(dx / max|vx|, dy / max|vy|)`. A zero velocity yields `window`.
pub fn cfl_dt<T: Real>(v: &VelocitySpec<T>, grid: &GridSpec<T>, cfl: T, window: T) -> Result<T> {
    if !(cfl > T::zero() && cfl <= T::one()) {
        return Err(Error::InvalidArgument(format!("cfl must be in (0, 1], got {cfl}")));
    }
    let rate = courant_rate(&v.face_velocity(grid)?);
    Ok(if rate.is_zero() { window } else { cfl / rate })
}

/// `max|u|/dx + max|v|/dy` over all faces: the inverse of the `cfl = 1` step.
pub fn courant_rate<T: Real>(vel: &VectorField<T>) -> T {
    let g = vel.grid();
    let max_u = vel.u().iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let mut rate = max_u / g.dx();
    if let Some(dy) = g.dy() {
        let max_v = vel.v().iter().fold(T::zero(), |m, x| m.max(x.abs()));
        rate = rate + max_v / dy;
    }
    rate
}

/// Density at time `t` together with the drift that moves it.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportState<T> {
    pub t: T,
    pub rho: ScalarField<T>,
    pub velocity: VectorField<T>,
}

impl<T: Real> TransportState<T> {
    pub fn new(t: T, rho: ScalarField<T>, v: &VelocitySpec<T>) -> Result<Self> {
        let velocity = v.face_velocity(rho.grid())?;
        Ok(Self { t, rho, velocity })
    }

    pub fn mass(&self) -> T {
        integrate(&self.rho)
    }

    /// Largest step allowed by [`step_upwind`].
    pub fn max_dt(&self) -> T {
        let rate = courant_rate(&self.velocity);
        if rate.is_zero() {
            T::infinity()
        } else {
            T::one() / rate
        }
    }
}

/// Upwind face flux `rho_donor * v` for the given density and face velocity.
pub fn upwind_flux<T: Real>(rho: &ScalarField<T>, vel: &VectorField<T>) -> Result<VectorField<T>> {
    let g = *rho.grid();
    if vel.grid() != &g {
        return Err(Error::GridMismatch("velocity and density grids differ"));
    }
    let (nx, ny) = (g.nx(), g.rows());
    let zero = T::zero();
    let mut u = vec![zero; g.u_face_count()];
    for j in 0..ny {
        for i in 0..=nx {
            let w = vel.u_at(i, j);
            let donor = if w > zero {
                // Left cell donates; nothing enters through the left boundary.
                (i > 0).then(|| rho.get(i - 1, j))
            } else {
                (i < nx).then(|| rho.get(i, j))
            };
            u[g.u_face(i, j)] = donor.map_or(zero, |r| r * w);
        }
    }
    let mut v = vec![zero; g.v_face_count()];
    if g.is_2d() {
        for j in 0..=ny {
            for i in 0..nx {
                let w = vel.v_at(i, j);
                let donor = if w > zero {
                    (j > 0).then(|| rho.get(i, j - 1))
                } else {
                    (j < ny).then(|| rho.get(i, j))
                };
                v[g.v_face(i, j)] = donor.map_or(zero, |r| r * w);
            }
        }
    }
    VectorField::new(g, u, v)
}

/// One forward-Euler donor-cell step: `rho - dt * div(flux)`.
pub fn step_upwind<T: Real>(state: &TransportState<T>, dt: T) -> Result<TransportState<T>> {
    let bound = state.max_dt();
    // Small slack so that dt computed as cfl/rate with cfl = 1 is accepted.
    if !(dt >= T::zero()) || dt > bound * (T::one() + T::lit(1e-12)) {
        return Err(Error::Stability {
            what: "upwind CFL",
            dt: dt.as_f64(),
            bound: bound.as_f64(),
        });
    }
    let flux = upwind_flux(&state.rho, &state.velocity)?;
    let div = divergence(&flux);
    let rho = state.rho.axpby(T::one(), &div, -dt)?;
    Ok(TransportState {
        t: state.t + dt,
        rho,
        velocity: state.velocity.clone(),
    })
}

/// Advances `state` to `t_target` in equal sub-steps no larger than
/// `cfl * max_dt`.
pub fn advance_to<T: Real>(
    state: TransportState<T>,
    t_target: T,
    cfl: T,
) -> Result<TransportState<T>> {
    let span = t_target - state.t;
    if span <= T::zero() {
        return Ok(state);
    }
    let n = substeps(span, cfl * state.max_dt());
    let dt = span / T::of_usize(n);
    let mut s = state;
    for _ in 0..n {
        s = step_upwind(&s, dt)?;
    }
    s.t = t_target;
    Ok(s)
}

/// Number of equal steps covering `span` with steps no larger than `max_step`.
pub fn substeps<T: Real>(span: T, max_step: T) -> usize {
    if !max_step.is_finite() || max_step >= span {
        return 1;
    }
    (span / max_step).ceil().to_usize().unwrap_or(usize::MAX).max(1)
}

/// Node current `J = rho v` on faces, with `rho` averaged from the adjacent
/// cells (boundary faces use their single interior neighbour).
pub fn node_current<T: Real>(rho: &ScalarField<T>, v: &VelocitySpec<T>) -> Result<VectorField<T>> {
    let g = *rho.grid();
    let vel = v.face_velocity(&g)?;
    let (nx, ny) = (g.nx(), g.rows());
    let half = T::lit(0.5);
    let mut u = vec![T::zero(); g.u_face_count()];
    for j in 0..ny {
        for i in 0..=nx {
            let r = match i {
                0 => rho.get(0, j),
                i if i == nx => rho.get(nx - 1, j),
                i => half * (rho.get(i - 1, j) + rho.get(i, j)),
            };
            u[g.u_face(i, j)] = r * vel.u_at(i, j);
        }
    }
    let mut w = vec![T::zero(); g.v_face_count()];
    if g.is_2d() {
        for j in 0..=ny {
            for i in 0..nx {
                let r = match j {
                    0 => rho.get(i, 0),
                    j if j == ny => rho.get(i, ny - 1),
                    j => half * (rho.get(i, j - 1) + rho.get(i, j)),
                };
                w[g.v_face(i, j)] = r * vel.v_at(i, j);
            }
        }
    }
    VectorField::new(g, u, w)
}

/// Max over cells of `|(rho_after - rho_before)/dt + div(F)|`, where `F` is
/// the upwind flux the scheme used (computed from `before`). Zero up to
/// round-off for any output of [`step_upwind`].
pub fn continuity_residual<T: Real>(
    before: &TransportState<T>,
    after: &TransportState<T>,
    dt: T,
) -> Result<T> {
    let flux = upwind_flux(&before.rho, &before.velocity)?;
    let div = divergence(&flux);
    let rate = after.rho.axpby(T::one() / dt, &before.rho, -T::one() / dt)?;
    Ok(rate.add(&div)?.max_abs())
}

/// Closed-form density for drift `v(x) = x` in 1D:
/// `rho(x, t) = rho0(x e^{-t}) e^{-t}`.
///
/// Only Gaussian terms have a closed form here; their normalization refers to
/// the half-line starting at `origin`.
pub fn characteristics_density(
    spec: &DensitySpec,
    velocity: &VelocitySpec<f64>,
    origin: f64,
    t: f64,
    x: f64,
) -> Result<f64> {
    if *velocity != VelocitySpec::LinearRadial {
        return Err(Error::Unsupported(
            "characteristics closed form needs the linear radial velocity v(x) = x",
        ));
    }
    let decay = (-t).exp();
    let xi = x * decay;
    let mut total = 0.0;
    for term in &spec.terms {
        match *term {
            DensityTerm::Gaussian {
                weight,
                center,
                width,
                normalized,
            } => {
                let k = if normalized {
                    normalization_constant((center.0 - origin) / width) / width
                } else {
                    1.0
                };
                total += weight * k * (-((xi - center.0) / width).powi(2)).exp() * decay;
            }
            DensityTerm::UniformPatch { .. } => {
                return Err(Error::Unsupported(
                    "characteristics closed form only covers gaussian terms",
                ))
            }
        }
    }
    Ok(total)
}
