//! Problem description: densities, mobility, time window and solver knobs.

mod config;
mod density;
mod special;

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fields::{GridSpec, VectorField};
use crate::scalar::Real;

pub use config::parse_scenario;
pub use density::{balance, balance_report, sample_density, sample_parts, BalanceReport};
pub use special::{erfc, half_line_normalization, normalization_constant};

pub const DEFAULT_ALPHA: f64 = 2.0;
pub const DEFAULT_POISSON_TOL: f64 = 1e-8;
pub const DEFAULT_BALANCE_TOL: f64 = 1e-9;
pub const DEFAULT_CFL: f64 = 0.9;

/// One primitive of a source/destination density. Positive weights are
/// sources, negative weights destinations.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityTerm {
    /// `weight * k * exp(-|p - center|^2 / width^2)`. With `normalized`, `k`
    /// gives unit mass on the quadrant right of (and above) the grid origin;
    /// otherwise `k = 1`.
    Gaussian {
        weight: f64,
        center: (f64, f64),
        width: f64,
        normalized: bool,
    },
    /// `level` on the closed box `x in [x.0, x.1]` (and `y in [y.0, y.1]` in 2D).
    UniformPatch {
        level: f64,
        x: (f64, f64),
        y: Option<(f64, f64)>,
    },
}

impl DensityTerm {
    fn sign(&self) -> f64 {
        let w = match self {
            Self::Gaussian { weight, .. } => *weight,
            Self::UniformPatch { level, .. } => *level,
        };
        if w > 0.0 {
            1.0
        } else if w < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensitySpec {
    pub terms: Vec<DensityTerm>,
    /// Skips the "needs both sources and destinations" check.
    pub unbalanced_ok: bool,
}

impl DensitySpec {
    pub fn new(terms: Vec<DensityTerm>) -> Self {
        Self {
            terms,
            unbalanced_ok: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, term) in self.terms.iter().enumerate() {
            match term {
                DensityTerm::Gaussian {
                    weight,
                    center,
                    width,
                    ..
                } => {
                    if !(weight.is_finite() && center.0.is_finite() && center.1.is_finite()) {
                        return Err(Error::Validation(format!(
                            "density term {n}: gaussian parameters must be finite"
                        )));
                    }
                    if !(width.is_finite() && *width > 0.0) {
                        return Err(Error::Validation(format!(
                            "density term {n}: gaussian width must be > 0"
                        )));
                    }
                }
                DensityTerm::UniformPatch { level, x, y } => {
                    let ok_box = |b: &(f64, f64)| b.0.is_finite() && b.1.is_finite() && b.0 < b.1;
                    if !level.is_finite() || !ok_box(x) || !y.as_ref().is_none_or(ok_box) {
                        return Err(Error::Validation(format!(
                            "density term {n}: uniform patch needs a finite level and min < max extents"
                        )));
                    }
                }
            }
        }
        if !self.unbalanced_ok {
            let has_pos = self.terms.iter().any(|t| t.sign() > 0.0);
            let has_neg = self.terms.iter().any(|t| t.sign() < 0.0);
            if self.terms.is_empty() {
                return Err(Error::Validation("density: missing".into()));
            }
            if !(has_pos && has_neg) {
                return Err(Error::Validation(
                    "density: needs at least one source (positive) and one destination (negative) term".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Average drift velocity of the nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocitySpec<T> {
    Zero,
    Constant { vx: T, vy: T },
    /// `v(x, y) = (x, y)`: speed grows linearly with the coordinate.
    LinearRadial,
    /// Normal velocities given directly on the faces of the scenario grid.
    GridSampled(VectorField<T>),
}

impl<T: Real> VelocitySpec<T> {
    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant { vx, vy } => vx.is_zero() && vy.is_zero(),
            Self::LinearRadial => false,
            Self::GridSampled(f) => f.max_abs().is_zero(),
        }
    }

    /// Normal velocity on every face of `grid`.
    pub fn face_velocity(&self, grid: &GridSpec<T>) -> Result<VectorField<T>> {
        match self {
            Self::Zero => Ok(VectorField::zeros(*grid)),
            Self::Constant { vx, vy } => {
                let (vx, vy) = (*vx, *vy);
                VectorField::from_fn(*grid, |_, _| vx, |_, _| vy)
            }
            Self::LinearRadial => VectorField::from_fn(*grid, |x, _| x, |_, y| y),
            Self::GridSampled(f) => {
                if f.grid() == grid {
                    Ok(f.clone())
                } else {
                    Err(Error::GridMismatch(
                        "grid-sampled velocity does not match the scenario grid",
                    ))
                }
            }
        }
    }

    pub fn validate(&self, grid: &GridSpec<T>) -> Result<()> {
        match self {
            Self::Constant { vx, vy } if !(vx.is_finite() && vy.is_finite()) => Err(
                Error::Validation("velocity: constant components must be finite".into()),
            ),
            Self::GridSampled(f) if f.grid() != grid => Err(Error::Validation(
                "velocity: grid-sampled velocity does not match the scenario grid".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Constant { .. } => "constant",
            Self::LinearRadial => "linear_radial",
            Self::GridSampled(_) => "grid_sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MobilityModel {
    Static,
    Deterministic(VelocitySpec<f64>),
    /// Independent Brownian motion of sources and destinations. `sigma_*` are
    /// variance rates: a point mass spreads to variance `sigma * t`.
    /// `sigma_minus = 0` with zero drift pins the destinations in place.
    Brownian {
        sigma_plus: f64,
        sigma_minus: f64,
        drift_plus: VelocitySpec<f64>,
        drift_minus: VelocitySpec<f64>,
    },
}

impl MobilityModel {
    pub fn is_static(&self) -> bool {
        matches!(self, Self::Static)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Static => "static",
            Self::Deterministic(_) => "deterministic",
            Self::Brownian { .. } => "brownian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridSpec<f64>,
    pub density: DensitySpec,
    pub mobility: MobilityModel,
    /// Relay-traffic exponent in `eta = |T|^alpha`.
    pub alpha: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Number of output intervals in `[t_start, t_end]`; each is sub-stepped
    /// at the stable time step.
    pub n_steps: usize,
    pub cfl: f64,
    pub poisson_tol: f64,
    pub balance_tol: f64,
    pub max_iter: usize,
    /// Proportionality constant of the capacity bound `|T| <= K sqrt(eta)`.
    pub capacity_k: f64,
    pub output_dir: Option<PathBuf>,
    pub stride: usize,
}

impl Scenario {
    /// Scenario with default solver settings and a static, single-snapshot window.
    pub fn new(grid: GridSpec<f64>, density: DensitySpec, mobility: MobilityModel) -> Self {
        Self {
            grid,
            density,
            mobility,
            alpha: DEFAULT_ALPHA,
            t_start: 0.0,
            t_end: 0.0,
            n_steps: 0,
            cfl: DEFAULT_CFL,
            poisson_tol: DEFAULT_POISSON_TOL,
            balance_tol: DEFAULT_BALANCE_TOL,
            max_iter: default_max_iter(&grid),
            capacity_k: 1.0,
            output_dir: None,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        self.density.validate()?;
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be > 0");
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return bad("time window must be finite");
        }
        if !self.mobility.is_static() {
            if self.t_end <= self.t_start {
                return bad("t_end must be > t_start for moving nodes");
            }
            if self.n_steps == 0 {
                return bad("n_steps must be >= 1 for moving nodes");
            }
        } else if self.t_end < self.t_start {
            return bad("t_end must be >= t_start");
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl must be in (0, 1]");
        }
        for (name, tol) in [
            ("poisson_tol", self.poisson_tol),
            ("balance_tol", self.balance_tol),
        ] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(Error::Validation(format!("{name} must be in (0, 1e-2]")));
            }
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1");
        }
        if !(self.capacity_k.is_finite() && self.capacity_k > 0.0) {
            return bad("capacity_k must be > 0");
        }
        if self.stride == 0 {
            return bad("stride must be >= 1");
        }
        match &self.mobility {
            MobilityModel::Static => {}
            MobilityModel::Deterministic(v) => v.validate(&self.grid)?,
            MobilityModel::Brownian {
                sigma_plus,
                sigma_minus,
                drift_plus,
                drift_minus,
            } => {
                for s in [sigma_plus, sigma_minus] {
                    if !(s.is_finite() && *s >= 0.0) {
                        return bad("sigma_plus and sigma_minus must be finite and >= 0");
                    }
                }
                drift_plus.validate(&self.grid)?;
                drift_minus.validate(&self.grid)?;
            }
        }
        Ok(())
    }

    /// Snapshot times `t_start + k (t_end - t_start) / n_steps`; a single
    /// `t_start` for static scenarios or an empty window.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.mobility.is_static() || self.n_steps == 0 {
            return vec![self.t_start];
        }
        let span = self.t_end - self.t_start;
        (0..=self.n_steps)
            .map(|k| {
                if k == self.n_steps {
                    self.t_end
                } else {
                    self.t_start + span * k as f64 / self.n_steps as f64
                }
            })
            .collect()
    }

    /// Re-grids along x keeping the extent. 2D grids keep their aspect ratio.
    pub fn with_nx(mut self, nx: usize) -> Result<Self> {
        let g = self.grid;
        self.grid = match g.ny() {
            None => GridSpec::interval(nx, g.x0(), g.lx())?,
            Some(ny) => {
                let ny_new = ((ny as f64) * nx as f64 / g.nx() as f64).round().max(2.0) as usize;
                GridSpec::rectangle(nx, ny_new, g.x0(), g.y0(), g.lx(), g.ly())?
            }
        };
        self.max_iter = self.max_iter.max(default_max_iter(&self.grid));
        Ok(self)
    }
}

/// Generous cap for unpreconditioned CG: a few multiples of the cell count.
pub fn default_max_iter<T: Real>(grid: &GridSpec<T>) -> usize {
    (4 * grid.cell_count()).max(1000)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_interval() -> GridSpec<f64> {
        GridSpec::interval(4, 0.0, 1.0).unwrap()
    }

    fn halves() -> DensitySpec {
        DensitySpec::new(vec![
            DensityTerm::UniformPatch {
                level: 1.0,
                x: (0.0, 0.5),
                y: None,
            },
            DensityTerm::UniformPatch {
                level: -1.0,
                x: (0.5, 1.0),
                y: None,
            },
        ])
    }

    #[test]
    fn density_requires_both_signs() {
        let mut d = DensitySpec::new(vec![DensityTerm::Gaussian {
            weight: 1.0,
            center: (0.0, 0.0),
            width: 1.0,
            normalized: false,
        }]);
        assert!(d.validate().is_err());
        d.unbalanced_ok = true;
        assert!(d.validate().is_ok());
        assert!(halves().validate().is_ok());
    }

    #[test]
    fn gaussian_width_must_be_positive() {
        let mut d = halves();
        d.terms.push(DensityTerm::Gaussian {
            weight: 1.0,
            center: (0.0, 0.0),
            width: 0.0,
            normalized: false,
        });
        assert!(d.validate().is_err());
    }

    #[test]
    fn scenario_invariants() {
        let base = Scenario::new(unit_interval(), halves(), MobilityModel::Static);
        assert!(base.validate().is_ok());
        let mut s = base.clone();
        s.alpha = 0.0;
        assert!(s.validate().unwrap_err().to_string().contains("alpha"));
        let mut s = base.clone();
        s.poisson_tol = 0.1;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.mobility = MobilityModel::Deterministic(VelocitySpec::LinearRadial);
        assert!(s.validate().is_err());
        s.t_end = 1.0;
        s.n_steps = 2;
        assert!(s.validate().is_ok());
        assert_eq!(s.snapshot_times(), vec![0.0, 0.5, 1.0]);
        s.mobility = MobilityModel::Brownian {
            sigma_plus: -1.0,
            sigma_minus: 0.0,
            drift_plus: VelocitySpec::Zero,
            drift_minus: VelocitySpec::Zero,
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn with_nx_keeps_extent() {
        let s = Scenario::new(unit_interval(), halves(), MobilityModel::Static)
            .with_nx(100)
            .unwrap();
        assert_eq!(s.grid.nx(), 100);
        assert!((s.grid.lx() - 1.0).abs() < 1e-15);
        let g = GridSpec::rectangle(10, 20, 0.0, 0.0, 1.0, 2.0).unwrap();
        let s = Scenario::new(g, halves(), MobilityModel::Static)
            .with_nx(20)
            .unwrap();
        assert_eq!(s.grid.ny(), Some(40));
    }

    #[test]
    fn velocity_on_faces() {
        let g = GridSpec::interval(10, 0.0, 1.0).unwrap();
        let v = VelocitySpec::LinearRadial.face_velocity(&g).unwrap();
        assert_eq!(v.u()[10], 1.0);
        assert!(VelocitySpec::<f64>::Zero.is_zero());
        let other = GridSpec::interval(5, 0.0, 1.0).unwrap();
        let sampled = VelocitySpec::GridSampled(VectorField::zeros(other));
        assert!(sampled.face_velocity(&g).is_err());
        assert!(sampled.validate(&g).is_err());
    }
}
