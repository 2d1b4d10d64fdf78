//! Uniform-grid scalar and vector fields with mimetic vector-calculus operators.
//!
//! Scalars live at cell centers, vectors as normal components on cell faces
//! (a staggered, MAC-style layout). With that layout the discrete divergence
//! theorem and `curl(gradient(phi)) == 0` hold exactly in exact arithmetic.
//!
//! A 1D grid is a 2D grid with a single row and no y-faces, so every operator
//! shares one code path.
//!
//! Indexing is row-major with x fastest:
//! - cell `(i, j)` -> `j * nx + i`
//! - x-normal face `(i, j)`, `i in 0..=nx` -> `j * (nx + 1) + i`
//! - y-normal face `(i, j)`, `j in 0..=ny` -> `j * nx + i`

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

/// Uniform rectangular grid of `nx` (x `ny`) cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    dim: Dim,
    nx: usize,
    ny: usize,
    x0: T,
    y0: T,
    dx: T,
    dy: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new_1d(nx: usize, x0: T, dx: T) -> Result<Self> {
        if nx < 2 {
            return Err(Error::InvalidGrid(format!("nx must be >= 2, got {nx}")));
        }
        check_width("dx", dx)?;
        check_finite_origin(x0)?;
        let g = Self {
            dim: Dim::One,
            nx,
            ny: 1,
            x0,
            y0: T::zero(),
            dx,
            dy: T::one(),
        };
        if !g.lx().is_finite() {
            return Err(Error::InvalidGrid("domain extent is not finite".into()));
        }
        Ok(g)
    }

    pub fn new_2d(nx: usize, ny: usize, x0: T, y0: T, dx: T, dy: T) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "nx and ny must be >= 2, got {nx}x{ny}"
            )));
        }
        check_width("dx", dx)?;
        check_width("dy", dy)?;
        check_finite_origin(x0)?;
        check_finite_origin(y0)?;
        let g = Self {
            dim: Dim::Two,
            nx,
            ny,
            x0,
            y0,
            dx,
            dy,
        };
        if !(g.lx().is_finite() && g.ly().is_finite()) {
            return Err(Error::InvalidGrid("domain extent is not finite".into()));
        }
        Ok(g)
    }

    /// `[x0, x0 + length]` split into `nx` cells.
    pub fn interval(nx: usize, x0: T, length: T) -> Result<Self> {
        Self::new_1d(nx, x0, length / T::of_usize(nx.max(1)))
    }

    /// `[x0, x0 + lx] x [y0, y0 + ly]` split into `nx x ny` cells.
    pub fn rectangle(nx: usize, ny: usize, x0: T, y0: T, lx: T, ly: T) -> Result<Self> {
        Self::new_2d(
            nx,
            ny,
            x0,
            y0,
            lx / T::of_usize(nx.max(1)),
            ly / T::of_usize(ny.max(1)),
        )
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }
    pub fn is_2d(&self) -> bool {
        self.dim == Dim::Two
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    /// Cell count along y; `None` on a 1D grid.
    pub fn ny(&self) -> Option<usize> {
        self.is_2d().then_some(self.ny)
    }
    /// Number of cell rows (1 on a 1D grid).
    pub fn rows(&self) -> usize {
        self.ny
    }
    pub fn x0(&self) -> T {
        self.x0
    }
    pub fn y0(&self) -> T {
        self.y0
    }
    pub fn dx(&self) -> T {
        self.dx
    }
    /// Cell height; `None` on a 1D grid.
    pub fn dy(&self) -> Option<T> {
        self.is_2d().then_some(self.dy)
    }
    pub fn lx(&self) -> T {
        T::of_usize(self.nx) * self.dx
    }
    pub fn ly(&self) -> T {
        if self.is_2d() {
            T::of_usize(self.ny) * self.dy
        } else {
            T::zero()
        }
    }

    /// Measure of one cell: `dx * dy`, or `dx` in 1D.
    pub fn cell_volume(&self) -> T {
        match self.dim {
            Dim::One => self.dx,
            Dim::Two => self.dx * self.dy,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }
    pub fn u_face_count(&self) -> usize {
        (self.nx + 1) * self.ny
    }
    pub fn v_face_count(&self) -> usize {
        match self.dim {
            Dim::One => 0,
            Dim::Two => self.nx * (self.ny + 1),
        }
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn u_face(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    #[inline]
    pub fn v_face(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// x coordinate of the center of cell column `i`.
    #[inline]
    pub fn xc(&self, i: usize) -> T {
        self.x0 + (T::of_usize(i) + T::lit(0.5)) * self.dx
    }
    /// y coordinate of the center of cell row `j` (0 in 1D).
    #[inline]
    pub fn yc(&self, j: usize) -> T {
        match self.dim {
            Dim::One => T::zero(),
            Dim::Two => self.y0 + (T::of_usize(j) + T::lit(0.5)) * self.dy,
        }
    }
    /// x coordinate of the x-normal face line `i` (`i in 0..=nx`).
    #[inline]
    pub fn xf(&self, i: usize) -> T {
        self.x0 + T::of_usize(i) * self.dx
    }
    /// y coordinate of the y-normal face line `j` (`j in 0..=ny`).
    #[inline]
    pub fn yf(&self, j: usize) -> T {
        self.y0 + T::of_usize(j) * self.dy
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (T, T) {
        (self.xc(i), self.yc(j))
    }
    pub fn u_face_center(&self, i: usize, j: usize) -> (T, T) {
        (self.xf(i), self.yc(j))
    }
    pub fn v_face_center(&self, i: usize, j: usize) -> (T, T) {
        (self.xc(i), self.yf(j))
    }

    /// Same grid converted to another scalar type.
    pub fn cast<U: Real>(&self) -> GridSpec<U> {
        GridSpec {
            dim: self.dim,
            nx: self.nx,
            ny: self.ny,
            x0: U::lit(self.x0.as_f64()),
            y0: U::lit(self.y0.as_f64()),
            dx: U::lit(self.dx.as_f64()),
            dy: U::lit(self.dy.as_f64()),
        }
    }
}

fn check_width<T: Real>(name: &str, w: T) -> Result<()> {
    if w.is_finite() && w > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!("{name} must be finite and > 0, got {w}")))
    }
}

fn check_finite_origin<T: Real>(x: T) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGrid("origin must be finite".into()))
    }
}

fn check_samples<T: Real>(what: &'static str, values: &[T], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::ShapeMismatch {
            what,
            expected,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// One sample per cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        check_samples("scalar field", &values, grid.cell_count())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: GridSpec<T>, c: T) -> Self {
        Self {
            grid,
            values: vec![c; grid.cell_count()],
        }
    }

    /// Samples `f(x, y)` at every cell center (`y = 0` in 1D).
    pub fn from_fn(grid: GridSpec<T>, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.cell_count());
        for j in 0..grid.rows() {
            for i in 0..grid.nx() {
                values.push(f(grid.xc(i), grid.yc(j)));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.grid.cell(i, j)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpby(T::one(), other, -T::one())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(T::one(), other, T::one())
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("scalar fields live on different grids"))
        }
    }

    /// Positive part `max(v, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(T::zero()))
    }

    /// Magnitude of the negative part `max(-v, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map(|v| (-v).max(T::zero()))
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn max(&self) -> T {
        self.values
            .iter()
            .fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::of_usize(self.values.len())
    }

    /// Discrete L2 inner product `sum(a * b) * cell_volume`.
    pub fn dot(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            * self.grid.cell_volume())
    }

    /// `integral(|self - other|)` by the midpoint rule.
    pub fn l1_distance(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .sum::<T>()
            * self.grid.cell_volume())
    }

    /// Writes `x,y,value` rows at cell centers, row-major.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "x,y,value")?;
        for j in 0..self.grid.rows() {
            for i in 0..self.grid.nx() {
                let (x, y) = self.grid.cell_center(i, j);
                write_row(w, x, y, self.get(i, j))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Normal components on x-normal faces.
    U,
    /// Normal components on y-normal faces (2D only).
    V,
}

/// Face-normal samples of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    grid: GridSpec<T>,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> VectorField<T> {
    /// `v` must be empty on a 1D grid.
    pub fn new(grid: GridSpec<T>, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        check_samples("x-face samples", &u, grid.u_face_count())?;
        check_samples("y-face samples", &v, grid.v_face_count())?;
        Ok(Self { grid, u, v })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self {
            grid,
            u: vec![T::zero(); grid.u_face_count()],
            v: vec![T::zero(); grid.v_face_count()],
        }
    }

    /// Samples `(fu, fv)` at the respective face centers.
    pub fn from_fn(
        grid: GridSpec<T>,
        mut fu: impl FnMut(T, T) -> T,
        mut fv: impl FnMut(T, T) -> T,
    ) -> Result<Self> {
        let mut u = Vec::with_capacity(grid.u_face_count());
        for j in 0..grid.rows() {
            for i in 0..=grid.nx() {
                let (x, y) = grid.u_face_center(i, j);
                u.push(fu(x, y));
            }
        }
        let mut v = Vec::with_capacity(grid.v_face_count());
        if grid.is_2d() {
            for j in 0..=grid.rows() {
                for i in 0..grid.nx() {
                    let (x, y) = grid.v_face_center(i, j);
                    v.push(fv(x, y));
                }
            }
        }
        Self::new(grid, u, v)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }
    pub fn u(&self) -> &[T] {
        &self.u
    }
    pub fn v(&self) -> &[T] {
        &self.v
    }
    pub fn u_at(&self, i: usize, j: usize) -> T {
        self.u[self.grid.u_face(i, j)]
    }
    pub fn v_at(&self, i: usize, j: usize) -> T {
        self.v[self.grid.v_face(i, j)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            u: self.u.iter().map(|&x| f(x)).collect(),
            v: self.v.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|x| a * x)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("vector fields live on different grids"));
        }
        let comb = |x: &[T], y: &[T]| -> Vec<T> {
            x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect()
        };
        Ok(Self {
            grid: self.grid,
            u: comb(&self.u, &other.u),
            v: comb(&self.v, &other.v),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(T::one(), other, T::one())
    }

    pub fn max_abs(&self) -> T {
        self.u
            .iter()
            .chain(&self.v)
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// True when every boundary face carries exactly zero normal flux.
    pub fn is_zero_flux(&self) -> bool {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.rows());
        let sides = (0..ny).all(|j| {
            self.u[g.u_face(0, j)] == T::zero() && self.u[g.u_face(nx, j)] == T::zero()
        });
        let caps = !g.is_2d()
            || (0..nx).all(|i| {
                self.v[g.v_face(i, 0)] == T::zero() && self.v[g.v_face(i, ny)] == T::zero()
            });
        sides && caps
    }

    /// Writes one component as `x,y,value` rows at face centers, row-major.
    pub fn write_csv<W: Write>(&self, component: Component, w: &mut W) -> io::Result<()> {
        let g = &self.grid;
        writeln!(w, "x,y,value")?;
        match component {
            Component::U => {
                for j in 0..g.rows() {
                    for i in 0..=g.nx() {
                        let (x, y) = g.u_face_center(i, j);
                        write_row(w, x, y, self.u_at(i, j))?;
                    }
                }
            }
            Component::V => {
                if g.is_2d() {
                    for j in 0..=g.rows() {
                        for i in 0..g.nx() {
                            let (x, y) = g.v_face_center(i, j);
                            write_row(w, x, y, self.v_at(i, j))?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Scalar samples at the interior grid nodes `(i, j)`, `i in 1..nx`, `j in 1..ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> NodeField<T> {
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    /// Value at interior node `(i, j)`, `1 <= i < nx`, `1 <= j < ny`.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[(j - 1) * (self.grid.nx() - 1) + (i - 1)]
    }
    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// 17 significant digits, round-trippable for f64.
pub(crate) fn fmt_num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn write_row<W: Write, T: Real>(w: &mut W, x: T, y: T, value: T) -> io::Result<()> {
    writeln!(w, "{},{},{}", fmt_num(x), fmt_num(y), fmt_num(value))
}

/// Cell-centered divergence `(u[i+1]-u[i])/dx + (v[j+1]-v[j])/dy`.
pub fn divergence<T: Real>(t: &VectorField<T>) -> ScalarField<T> {
    let g = t.grid;
    let mut values = Vec::with_capacity(g.cell_count());
    for j in 0..g.rows() {
        for i in 0..g.nx() {
            let mut d = (t.u_at(i + 1, j) - t.u_at(i, j)) / g.dx;
            if g.is_2d() {
                d = d + (t.v_at(i, j + 1) - t.v_at(i, j)) / g.dy;
            }
            values.push(d);
        }
    }
    ScalarField { grid: g, values }
}

/// Face-centered gradient. Boundary faces are zero, which encodes the
/// homogeneous Neumann condition, so the result always passes `is_zero_flux`.
pub fn gradient<T: Real>(phi: &ScalarField<T>) -> VectorField<T> {
    let g = phi.grid;
    let (nx, ny) = (g.nx(), g.rows());
    let mut out = VectorField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            out.u[g.u_face(i, j)] = (phi.get(i, j) - phi.get(i - 1, j)) / g.dx;
        }
    }
    if g.is_2d() {
        for j in 1..ny {
            for i in 0..nx {
                out.v[g.v_face(i, j)] = (phi.get(i, j) - phi.get(i, j - 1)) / g.dy;
            }
        }
    }
    out
}

/// Scalar curl `dv/dx - du/dy` at interior nodes. 2D only.
pub fn curl<T: Real>(t: &VectorField<T>) -> Result<NodeField<T>> {
    let g = t.grid;
    if !g.is_2d() {
        return Err(Error::Unsupported("curl is only defined for 2D fields"));
    }
    let (nx, ny) = (g.nx(), g.rows());
    let mut values = Vec::with_capacity((nx - 1) * (ny - 1));
    for j in 1..ny {
        for i in 1..nx {
            let dvdx = (t.v_at(i, j) - t.v_at(i - 1, j)) / g.dx;
            let dudy = (t.u_at(i, j) - t.u_at(i, j - 1)) / g.dy;
            values.push(dvdx - dudy);
        }
    }
    Ok(NodeField { grid: g, values })
}

/// Midpoint rule: `sum(values) * cell_volume`.
pub fn integrate<T: Real>(f: &ScalarField<T>) -> T {
    f.values.iter().copied().sum::<T>() * f.grid.cell_volume()
}

/// Net outward flux through the domain boundary: outward normal face value
/// times face length, summed over all boundary faces.
pub fn boundary_flux<T: Real>(t: &VectorField<T>) -> T {
    let g = t.grid;
    let (nx, ny) = (g.nx(), g.rows());
    // Face "length" is dy in 2D and 1 (a point) in 1D.
    let side = if g.is_2d() { g.dy } else { T::one() };
    let mut total = T::zero();
    for j in 0..ny {
        total = total + (t.u_at(nx, j) - t.u_at(0, j)) * side;
    }
    if g.is_2d() {
        for i in 0..nx {
            total = total + (t.v_at(i, ny) - t.v_at(i, 0)) * g.dx;
        }
    }
    total
}

/// Sum of `|face value| * face length` over every face; the natural scale for
/// round-off in `boundary_flux` and `integrate(divergence(..))`.
pub fn flux_magnitude<T: Real>(t: &VectorField<T>) -> T {
    let g = t.grid;
    let side = if g.is_2d() { g.dy } else { T::one() };
    let su: T = t.u.iter().map(|x| x.abs()).sum();
    let sv: T = t.v.iter().map(|x| x.abs()).sum();
    su * side + sv * g.dx
}
