//! Brownian mobility: explicit Fokker-Planck steps for sources and
//! destinations, and the free-space heat kernel.
//!
//! `sigma` is a variance rate (units of m^2/s): the forward equation is
//! `dp/dt = -div(v p) + (sigma / 2) lap(p)` and a point mass spreads to
//! variance `sigma * t` along each axis.

use crate::error::{Error, Result};
use crate::fields::{divergence, gradient, GridSpec, ScalarField};
use crate::scalar::Real;
use crate::scenario::VelocitySpec;
use crate::transport::{courant_rate, upwind_flux};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// Sources (`rho_plus`).
    Plus,
    /// Destinations (`rho_minus`, stored as a non-negative magnitude).
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionParams<T> {
    pub sigma_plus: T,
    pub sigma_minus: T,
    pub drift_plus: VelocitySpec<T>,
    pub drift_minus: VelocitySpec<T>,
    pub dt: T,
}

impl<T: Real> DiffusionParams<T> {
    pub fn sigma(&self, sign: Sign) -> T {
        match sign {
            Sign::Plus => self.sigma_plus,
            Sign::Minus => self.sigma_minus,
        }
    }

    pub fn drift(&self, sign: Sign) -> &VelocitySpec<T> {
        match sign {
            Sign::Plus => &self.drift_plus,
            Sign::Minus => &self.drift_minus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in [self.sigma_plus, self.sigma_minus] {
            if !(s.is_finite() && s >= T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "sigma must be finite and >= 0, got {s}"
                )));
            }
        }
        if !(self.dt.is_finite() && self.dt >= T::zero()) {
            return Err(Error::InvalidArgument(format!("dt must be >= 0, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Largest explicit step for one species on `grid`.
///
/// Pure diffusion uses `0.5 * h_min^2 / sigma`; with drift the combined
/// positivity bound `dt * (courant_rate + sigma * sum(1/h^2)) <= 1` also applies.
pub fn stable_dt<T: Real>(
    sigma: T,
    drift: &VelocitySpec<T>,
    grid: &GridSpec<T>,
) -> Result<T> {
    let courant = courant_rate(&drift.face_velocity(grid)?);
    let (h_min, inv_h2) = match grid.dy() {
        Some(dy) => (grid.dx().min(dy), grid.dx().powi(-2) + dy.powi(-2)),
        None => (grid.dx(), grid.dx().powi(-2)),
    };
    let mut bound = T::infinity();
    if sigma > T::zero() {
        bound = T::lit(0.5) * h_min * h_min / sigma;
    }
    let rate = courant + sigma * inv_h2;
    if rate > T::zero() {
        bound = bound.min(T::one() / rate);
    }
    Ok(bound)
}

/// One explicit step of the forward equation for the species `sign`.
///
/// Drift uses the transport module's upwind flux (free outflow at the
/// boundary); diffusion is `(sigma/2) div(grad p)` with zero-flux walls, so it
/// conserves mass exactly.
pub fn step_fokker_planck<T: Real>(
    p: &ScalarField<T>,
    params: &DiffusionParams<T>,
    sign: Sign,
) -> Result<ScalarField<T>> {
    params.validate()?;
    let sigma = params.sigma(sign);
    let drift = params.drift(sign);
    let grid = p.grid();
    let bound = stable_dt(sigma, drift, grid)?;
    if params.dt > bound * (T::one() + T::lit(1e-12)) {
        return Err(Error::Stability {
            what: "explicit Fokker-Planck",
            dt: params.dt.as_f64(),
            bound: bound.as_f64(),
        });
    }
    let mut next = p.clone();
    if !drift.is_zero() {
        let flux = upwind_flux(p, &drift.face_velocity(grid)?)?;
        next = next.axpby(T::one(), &divergence(&flux), -params.dt)?;
    }
    if sigma > T::zero() {
        let lap = divergence(&gradient(p));
        next = next.axpby(T::one(), &lap, params.dt * sigma * T::lit(0.5))?;
    }
    Ok(next)
}

/// Advances `p` by `span` in equal steps no larger than `safety * stable_dt`.
pub fn advance<T: Real>(
    p: &ScalarField<T>,
    params: &DiffusionParams<T>,
    sign: Sign,
    span: T,
    safety: T,
) -> Result<ScalarField<T>> {
    if span <= T::zero() {
        return Ok(p.clone());
    }
    let bound = stable_dt(params.sigma(sign), params.drift(sign), p.grid())?;
    let n = crate::transport::substeps(span, safety * bound);
    let step = DiffusionParams {
        dt: span / T::of_usize(n),
        ..params.clone()
    };
    let mut cur = p.clone();
    for _ in 0..n {
        cur = step_fokker_planck(&cur, &step, sign)?;
    }
    Ok(cur)
}

/// Free-space solution from a unit point mass at the origin:
/// `1/sqrt(2 pi t sigma) * exp(-x^2 / (2 t sigma))`.
pub fn heat_kernel<T: Real>(x: T, t: T, sigma: T) -> Result<T> {
    if !(t > T::zero()) || !(sigma > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "heat kernel needs t > 0 and sigma > 0, got t = {t}, sigma = {sigma}"
        )));
    }
    let var = t * sigma;
    Ok((-(x * x) / (T::lit(2.0) * var)).exp() / (T::lit(2.0) * T::PI() * var).sqrt())
}

/// Destinations that never move (`sigma_minus = 0`, no drift): the same field
/// at every time.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticDestinations<T> {
    field: ScalarField<T>,
}

pub fn static_destination_density<T: Real>(rho_minus_0: ScalarField<T>) -> StaticDestinations<T> {
    StaticDestinations { field: rho_minus_0 }
}

impl<T: Real> StaticDestinations<T> {
    pub fn at(&self, _t: T) -> &ScalarField<T> {
        &self.field
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::integrate;
    use crate::transport::{step_upwind, TransportState};

    fn params(sigma: f64, drift: VelocitySpec<f64>, dt: f64) -> DiffusionParams<f64> {
        DiffusionParams {
            sigma_plus: sigma,
            sigma_minus: 0.0,
            drift_plus: drift,
            drift_minus: VelocitySpec::Zero,
            dt,
        }
    }

    fn bump(n: usize) -> ScalarField<f64> {
        let g = GridSpec::<f64>::interval(n, -5.0, 10.0).unwrap();
        ScalarField::from_fn(g, |x, _| (-(x * x)).exp()).unwrap()
    }

    #[test]
    fn no_sigma_no_drift_is_identity() {
        let p = bump(50);
        let out = step_fokker_planck(&p, &params(0.0, VelocitySpec::Zero, 0.7), Sign::Plus).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn pure_drift_matches_upwind() {
        let p = bump(50);
        let v = VelocitySpec::Constant { vx: 0.8, vy: 0.0 };
        let dt = 0.1;
        let fp = step_fokker_planck(&p, &params(0.0, v.clone(), dt), Sign::Plus).unwrap();
        let te = step_upwind(&TransportState::new(0.0, p, &v).unwrap(), dt).unwrap();
        assert_eq!(fp, te.rho);
    }

    #[test]
    fn stability_bound_enforced() {
        let p = bump(50);
        let h = p.grid().dx();
        let ok = 0.5 * h * h / 0.3;
        assert!(step_fokker_planck(&p, &params(0.3, VelocitySpec::Zero, ok), Sign::Plus).is_ok());
        assert!(matches!(
            step_fokker_planck(&p, &params(0.3, VelocitySpec::Zero, 1.1 * ok), Sign::Plus),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn diffusion_conserves_mass_and_respects_max_principle() {
        let mut p = bump(80);
        let m0 = integrate(&p);
        let h = p.grid().dx();
        let prm = params(0.5, VelocitySpec::Zero, 0.5 * h * h / 0.5);
        let mut max = p.max();
        for _ in 0..200 {
            p = step_fokker_planck(&p, &prm, Sign::Plus).unwrap();
            assert!(p.max() <= max);
            assert!(p.min() >= 0.0);
            max = p.max();
        }
        assert!((integrate(&p) - m0).abs() <= 1e-12 * m0);
    }

    #[test]
    fn minus_species_uses_its_own_parameters() {
        let p = bump(40);
        let prm = params(0.5, VelocitySpec::Zero, 0.01);
        assert_eq!(step_fokker_planck(&p, &prm, Sign::Minus).unwrap(), p);
    }

    #[test]
    fn heat_kernel_peak_and_domain() {
        let (t, s) = (0.7, 1.3);
        let peak = heat_kernel(0.0, t, s).unwrap();
        assert!((peak - 1.0 / (2.0 * std::f64::consts::PI * t * s).sqrt()).abs() < 1e-15);
        assert!(heat_kernel(0.0, 0.0, 1.0).is_err());
        assert!(heat_kernel(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn static_destinations_never_change() {
        let p = bump(10);
        let d = static_destination_density(p.clone());
        assert_eq!(d.at(0.0), d.at(2.0));
        assert_eq!(d.at(5.0), &p);
    }
}
