//! Optimal traffic flow `T = -grad(phi)`, relay density `eta = |T|^alpha`,
//! node counts, the capacity bound `|T| <= K sqrt(eta)` and the
//! time-integrated objective.

use crate::error::{Error, Result};
use crate::fields::{
    boundary_flux, curl, divergence, gradient, integrate, GridSpec, ScalarField, VectorField,
};
use crate::scalar::Real;

/// `-gradient(phi)`. Boundary faces carry no flux.
pub fn traffic_flow<T: Real>(phi: &ScalarField<T>) -> VectorField<T> {
    gradient(phi).scale(-T::one())
}

/// Euclidean norm of `T` at each cell center, from the mean of each pair of
/// opposing faces.
pub fn flow_magnitude<T: Real>(t: &VectorField<T>) -> ScalarField<T> {
    let g = *t.grid();
    let half = T::lit(0.5);
    let mut values = Vec::with_capacity(g.cell_count());
    for j in 0..g.rows() {
        for i in 0..g.nx() {
            let uc = half * (t.u_at(i, j) + t.u_at(i + 1, j));
            let mut s = uc * uc;
            if g.is_2d() {
                let vc = half * (t.v_at(i, j) + t.v_at(i, j + 1));
                s = s + vc * vc;
            }
            values.push(s.sqrt());
        }
    }
    ScalarField::new(g, values).expect("finite flow has finite magnitude")
}

/// Cell-centered relay node density `|T|^alpha`.
pub fn relay_density<T: Real>(t: &VectorField<T>, alpha: T) -> Result<ScalarField<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let two = T::lit(2.0);
    Ok(flow_magnitude(t).map(|m| if alpha == two { m * m } else { m.powf(alpha) }))
}

/// Total number of relay nodes, `integral(eta)`.
pub fn node_count<T: Real>(eta: &ScalarField<T>) -> T {
    integrate(eta)
}

/// `sum(|T|^2)` over faces with the staggered quadrature (each face owns a
/// `dx * dy` dual cell): the `alpha = 2` objective in the inner product under
/// which gradients and zero-flux divergence-free fields are orthogonal.
pub fn flow_energy<T: Real>(t: &VectorField<T>) -> T {
    let g = t.grid();
    let sq: T = t.u().iter().chain(t.v()).map(|&x| x * x).sum();
    sq * g.cell_volume()
}

/// Divergence-free field with zero boundary flux built from a stream function
/// on the interior nodes (row-major, `(nx-1)*(ny-1)` values; boundary nodes are 0):
/// `u = d(psi)/dy`, `v = -d(psi)/dx`.
pub fn stream_function_flow<T: Real>(grid: &GridSpec<T>, psi: &[T]) -> Result<VectorField<T>> {
    let (nx, ny) = match grid.ny() {
        Some(ny) => (grid.nx(), ny),
        None => return Err(Error::Unsupported("stream functions need a 2D grid")),
    };
    if psi.len() != (nx - 1) * (ny - 1) {
        return Err(Error::ShapeMismatch {
            what: "stream function",
            expected: (nx - 1) * (ny - 1),
            got: psi.len(),
        });
    }
    let node = |i: usize, j: usize| -> T {
        if i == 0 || j == 0 || i == nx || j == ny {
            T::zero()
        } else {
            psi[(j - 1) * (nx - 1) + (i - 1)]
        }
    };
    let dx = grid.dx();
    let dy = grid.dy().expect("2D grid");
    let mut u = vec![T::zero(); grid.u_face_count()];
    for j in 0..ny {
        for i in 0..=nx {
            u[grid.u_face(i, j)] = (node(i, j + 1) - node(i, j)) / dy;
        }
    }
    let mut v = vec![T::zero(); grid.v_face_count()];
    for j in 0..=ny {
        for i in 0..nx {
            v[grid.v_face(i, j)] = -(node(i + 1, j) - node(i, j)) / dx;
        }
    }
    VectorField::new(*grid, u, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityCheck<T> {
    pub pass: bool,
    /// `max(0, |T| - K sqrt(eta))` over cells.
    pub max_violation: T,
}

/// Checks `|T| <= K sqrt(eta)` at every cell (absolute slack `1e-12`).
pub fn capacity_check<T: Real>(
    t: &VectorField<T>,
    eta: &ScalarField<T>,
    k: T,
) -> Result<CapacityCheck<T>> {
    if !(k > T::zero()) {
        return Err(Error::InvalidArgument(format!("K must be > 0, got {k}")));
    }
    let mag = flow_magnitude(t);
    mag.same_grid(eta)?;
    let max_violation = mag
        .values()
        .iter()
        .zip(eta.values())
        .map(|(&m, &e)| (m - k * e.max(T::zero()).sqrt()).max(T::zero()))
        .fold(T::zero(), T::max);
    Ok(CapacityCheck {
        pass: max_violation <= T::lit(1e-12),
        max_violation,
    })
}

/// Trapezoidal `integral N(t) dt` over recorded `(t, N)` points.
pub fn time_integrated_count<T: Real>(points: &[(T, T)]) -> Result<T> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "time integral needs at least two snapshots".into(),
        ));
    }
    let mut total = T::zero();
    for w in points.windows(2) {
        let ((t0, n0), (t1, n1)) = (w[0], w[1]);
        if !(t1 > t0) {
            return Err(Error::InvalidArgument(
                "snapshot times must be strictly increasing".into(),
            ));
        }
        total = total + T::lit(0.5) * (t1 - t0) * (n0 + n1);
    }
    Ok(total)
}

/// Everything derived at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSnapshot<T> {
    pub t: T,
    pub rho: ScalarField<T>,
    /// Potential; `None` on the 1D direct-integration path.
    pub phi: Option<ScalarField<T>>,
    pub flow: VectorField<T>,
    pub eta: ScalarField<T>,
    pub node_count: T,
    /// `max |divergence(T) - rho|`.
    pub div_residual: T,
    /// Max |curl T| at interior nodes (0 in 1D).
    pub curl_max: T,
    /// `|boundary_flux(T)|`.
    pub flux_residual: T,
    pub iterations: usize,
    /// Relative residual reported by the Poisson solve (0 in 1D).
    pub poisson_residual: T,
}

impl<T: Real> SolveSnapshot<T> {
    /// Derives `eta`, `N` and the diagnostics from a flow field.
    pub fn from_flow(
        t: T,
        rho: ScalarField<T>,
        phi: Option<ScalarField<T>>,
        flow: VectorField<T>,
        alpha: T,
        iterations: usize,
        poisson_residual: T,
    ) -> Result<Self> {
        if flow.grid() != rho.grid() {
            return Err(Error::GridMismatch("flow and density grids differ"));
        }
        let eta = relay_density(&flow, alpha)?;
        let div_residual = divergence(&flow).sub(&rho)?.max_abs();
        let curl_max = if flow.grid().is_2d() {
            curl(&flow)?.max_abs()
        } else {
            T::zero()
        };
        Ok(Self {
            t,
            node_count: node_count(&eta),
            flux_residual: boundary_flux(&flow).abs(),
            rho,
            phi,
            flow,
            eta,
            div_residual,
            curl_max,
            iterations,
            poisson_residual,
        })
    }
}

/// Node counts over time and their time integral.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub times: Vec<T>,
    pub node_counts: Vec<T>,
    /// Trapezoidal integral of the node counts; 0 for a single snapshot.
    pub time_integrated_count: T,
}

impl<T: Real> RunSummary<T> {
    pub fn from_points(points: &[(T, T)]) -> Result<Self> {
        let time_integrated_count = if points.len() >= 2 {
            time_integrated_count(points)?
        } else {
            T::zero()
        };
        Ok(Self {
            times: points.iter().map(|p| p.0).collect(),
            node_counts: points.iter().map(|p| p.1).collect(),
            time_integrated_count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;

    fn grid2() -> GridSpec<f64> {
        GridSpec::rectangle(8, 6, 0.0, 0.0, 1.0, 0.75).unwrap()
    }

    fn sample_flow() -> VectorField<f64> {
        let phi = ScalarField::from_fn(grid2(), |x, y| (2.0 * x).sin() + x * y * y).unwrap();
        traffic_flow(&phi)
    }

    #[test]
    fn zero_potential_gives_zero_everything() {
        let t = traffic_flow(&ScalarField::zeros(grid2()));
        assert_eq!(t.max_abs(), 0.0);
        let eta = relay_density(&t, 2.0).unwrap();
        assert_eq!(eta.max_abs(), 0.0);
        assert_eq!(node_count(&eta), 0.0);
    }

    #[test]
    fn flow_is_irrotational_with_zero_flux() {
        let t = sample_flow();
        assert!(t.is_zero_flux());
        assert!(curl(&t).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn alpha_two_is_square_of_alpha_one() {
        let t = sample_flow();
        let e1 = relay_density(&t, 1.0).unwrap();
        let e2 = relay_density(&t, 2.0).unwrap();
        for (a, b) in e1.values().iter().zip(e2.values()) {
            assert!((a * a - b).abs() <= 1e-14 * b.max(1e-300));
        }
        assert!(relay_density(&t, 0.0).is_err());
    }

    #[test]
    fn capacity_cases() {
        let t = sample_flow();
        let eta = relay_density(&t, 2.0).unwrap();
        let c = capacity_check(&t, &eta, 1.0).unwrap();
        assert!(c.pass);
        assert_eq!(c.max_violation, 0.0);
        let c = capacity_check(&t, &eta.scale(0.25), 1.0).unwrap();
        assert!(!c.pass && c.max_violation > 0.0);
        let c = capacity_check(&t, &eta, 2.0).unwrap();
        assert!(c.pass);
        assert!(capacity_check(&t, &eta, 0.0).is_err());
    }

    #[test]
    fn trapezoid_cases() {
        let c = 3.5;
        assert_eq!(time_integrated_count(&[(0.0, c), (2.0, c)]).unwrap(), 2.0 * c);
        assert_eq!(
            time_integrated_count(&[(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)]).unwrap(),
            0.5
        );
        assert!(time_integrated_count(&[(0.0, 1.0)]).is_err());
        assert!(time_integrated_count(&[(0.0, 1.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn stream_function_flow_is_divergence_free() {
        let g = grid2();
        let psi: Vec<f64> = (0..35).map(|k| ((k * 7 % 11) as f64 - 5.0) * 0.1).collect();
        let w = stream_function_flow(&g, &psi).unwrap();
        assert!(w.is_zero_flux());
        assert!(divergence(&w).max_abs() < 1e-12);
        assert!(stream_function_flow(&g, &psi[1..]).is_err());
    }

    #[test]
    fn gradient_is_orthogonal_to_stream_flow() {
        let g = grid2();
        let t = sample_flow();
        let psi: Vec<f64> = (0..35).map(|k| (k as f64 * 0.37).sin()).collect();
        let w = stream_function_flow(&g, &psi).unwrap();
        let lhs = flow_energy(&t.add(&w).unwrap());
        let rhs = flow_energy(&t) + flow_energy(&w);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn summary_integrates() {
        let s = RunSummary::from_points(&[(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert_eq!(s.time_integrated_count, 2.0);
        let s = RunSummary::from_points(&[(0.0, 1.0)]).unwrap();
        assert_eq!(s.time_integrated_count, 0.0);
    }
}
