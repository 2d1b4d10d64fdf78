//! Batch driver: evolve the densities, balance, solve, derive, write.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diffusion::{self, DiffusionParams, Sign};
use crate::error::{Error, Result};
use crate::fields::{fmt_num, Component, GridSpec, ScalarField, VectorField};
use crate::flow::{capacity_check, relay_density, traffic_flow, RunSummary, SolveSnapshot};
use crate::pipeline1d::solve_1d;
use crate::poisson::solve_neumann;
use crate::scenario::{balance_report, sample_parts, MobilityModel, Scenario, VelocitySpec};
use crate::transport::{courant_rate, step_upwind, substeps, TransportState};

/// How one species (sources or destinations) moves.
#[derive(Debug, Clone)]
enum Motion {
    Fixed,
    Drift(VectorField<f64>),
    FokkerPlanck {
        params: DiffusionParams<f64>,
        sign: Sign,
    },
}

impl Motion {
    fn for_species(scenario: &Scenario, sign: Sign) -> Result<Self> {
        let grid = &scenario.grid;
        Ok(match &scenario.mobility {
            MobilityModel::Static => Motion::Fixed,
            MobilityModel::Deterministic(v) if v.is_zero() => Motion::Fixed,
            MobilityModel::Deterministic(v) => Motion::Drift(v.face_velocity(grid)?),
            MobilityModel::Brownian {
                sigma_plus,
                sigma_minus,
                drift_plus,
                drift_minus,
            } => {
                let (sigma, drift) = match sign {
                    Sign::Plus => (*sigma_plus, drift_plus),
                    Sign::Minus => (*sigma_minus, drift_minus),
                };
                if sigma == 0.0 && drift.is_zero() {
                    Motion::Fixed
                } else {
                    Motion::FokkerPlanck {
                        params: DiffusionParams {
                            sigma_plus: *sigma_plus,
                            sigma_minus: *sigma_minus,
                            drift_plus: drift_plus.clone(),
                            drift_minus: drift_minus.clone(),
                            dt: 0.0,
                        },
                        sign,
                    }
                }
            }
        })
    }

    /// Largest step used for this species, `cfl` times the stability bound.
    fn step_bound(&self, grid: &GridSpec<f64>, cfl: f64) -> Result<f64> {
        Ok(match self {
            Motion::Fixed => f64::INFINITY,
            Motion::Drift(vel) => {
                let rate = courant_rate(vel);
                if rate == 0.0 {
                    f64::INFINITY
                } else {
                    cfl / rate
                }
            }
            Motion::FokkerPlanck { params, sign } => {
                cfl * diffusion::stable_dt(params.sigma(*sign), params.drift(*sign), grid)?
            }
        })
    }

    fn advance(&self, p: ScalarField<f64>, span: f64, cfl: f64) -> Result<ScalarField<f64>> {
        if span <= 0.0 {
            return Ok(p);
        }
        let n = substeps(span, self.step_bound(p.grid(), cfl)?);
        let dt = span / n as f64;
        match self {
            Motion::Fixed => Ok(p),
            Motion::Drift(vel) => {
                let mut s = TransportState {
                    t: 0.0,
                    rho: p,
                    velocity: vel.clone(),
                };
                for _ in 0..n {
                    s = step_upwind(&s, dt)?;
                }
                Ok(s.rho)
            }
            Motion::FokkerPlanck { params, sign } => {
                let step = DiffusionParams {
                    dt,
                    ..params.clone()
                };
                let mut cur = p;
                for _ in 0..n {
                    cur = diffusion::step_fokker_planck(&cur, &step, *sign)?;
                }
                Ok(cur)
            }
        }
    }
}

/// One solved time with the pieces that went into it.
#[derive(Debug, Clone)]
pub struct Frame {
    pub index: usize,
    pub rho_plus: ScalarField<f64>,
    pub rho_minus: ScalarField<f64>,
    pub snapshot: SolveSnapshot<f64>,
    /// Factor applied to the destinations to restore `integral(rho) = 0`.
    pub sink_scale: f64,
    /// Relative imbalance before balancing.
    pub imbalance: f64,
    /// Max violation of `|T| <= K sqrt(eta)` with `eta = |T|^2`.
    pub capacity_violation: f64,
}

/// Runs the full time loop without touching the filesystem, handing every
/// frame to `on_frame`.
///
/// A Poisson solve that hits `max_iter` yields [`Error::NotConverged`] after
/// the frames before it have been delivered.
pub fn simulate(
    scenario: &Scenario,
    mut on_frame: impl FnMut(&Frame) -> Result<()>,
) -> Result<RunSummary<f64>> {
    scenario.validate()?;
    let grid = scenario.grid;
    let (mut plus, mut minus) = sample_parts(&scenario.density, &grid);
    let motion_plus = Motion::for_species(scenario, Sign::Plus)?;
    let motion_minus = Motion::for_species(scenario, Sign::Minus)?;

    let mut points = Vec::new();
    let mut t_prev = scenario.t_start;
    for (index, &t) in scenario.snapshot_times().iter().enumerate() {
        let span = t - t_prev;
        plus = motion_plus.advance(plus, span, scenario.cfl)?;
        minus = motion_minus.advance(minus, span, scenario.cfl)?;
        t_prev = t;

        let rho = plus.sub(&minus)?;
        let balanced = balance_report(&rho, scenario.balance_tol)?;
        let snapshot = solve_snapshot(scenario, t, balanced.rho)?;
        let eta2 = relay_density(&snapshot.flow, 2.0)?;
        let capacity = capacity_check(&snapshot.flow, &eta2, scenario.capacity_k)?;
        points.push((t, snapshot.node_count));
        on_frame(&Frame {
            index,
            rho_plus: plus.clone(),
            rho_minus: minus.clone(),
            snapshot,
            sink_scale: balanced.sink_scale,
            imbalance: balanced.imbalance,
            capacity_violation: capacity.max_violation,
        })?;
    }
    RunSummary::from_points(&points)
}

/// Solves for the flow at one time from an already balanced density.
pub fn solve_snapshot(scenario: &Scenario, t: f64, rho: ScalarField<f64>) -> Result<SolveSnapshot<f64>> {
    if rho.grid().is_2d() {
        let sol = solve_neumann(&rho, scenario.poisson_tol, scenario.max_iter)?;
        if !sol.converged {
            return Err(Error::NotConverged {
                iterations: sol.iterations,
                residual: sol.residual_norm,
            });
        }
        let flow = traffic_flow(&sol.phi);
        SolveSnapshot::from_flow(
            t,
            rho,
            Some(sol.phi),
            flow,
            scenario.alpha,
            sol.iterations,
            sol.residual_norm,
        )
    } else {
        let f = solve_1d(&rho, scenario.alpha)?;
        SolveSnapshot::from_flow(t, rho, None, f.flow, scenario.alpha, 0, 0.0)
    }
}

pub const SUMMARY_HEADER: &str = "t,node_count,div_residual,curl_max,flux_residual,iterations";

fn summary_row(s: &SolveSnapshot<f64>) -> String {
    format!(
        "{},{},{},{},{},{}",
        fmt_num(s.t),
        fmt_num(s.node_count),
        fmt_num(s.div_residual),
        fmt_num(s.curl_max),
        fmt_num(s.flux_residual),
        s.iterations
    )
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary<f64>,
    pub frames: usize,
    pub dumped: usize,
}

/// Runs the scenario and writes `summary.csv`, `run.meta` and, every
/// `stride` frames, the field dumps into `out_dir`.
///
/// On failure the rows computed so far are still written and `run.meta`
/// records `status = failed`.
pub fn run(scenario: &Scenario, out_dir: &Path, stride: usize) -> Result<RunOutcome> {
    if stride == 0 {
        return Err(Error::Validation("stride must be >= 1".into()));
    }
    scenario.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut frames = 0;
    let mut dumped = 0;
    let result = simulate(scenario, |frame| {
        frames += 1;
        rows.push(summary_row(&frame.snapshot));
        notes.push(format!(
            "# snapshot {} t = {} sink_scale = {} imbalance = {} capacity_violation = {} poisson_residual = {}",
            frame.index,
            fmt_num(frame.snapshot.t),
            fmt_num(frame.sink_scale),
            fmt_num(frame.imbalance),
            fmt_num(frame.capacity_violation),
            fmt_num(frame.snapshot.poisson_residual),
        ));
        if frame.index % stride == 0 {
            write_frame(out_dir, frame)?;
            dumped += 1;
        }
        Ok(())
    });

    write_summary(out_dir, &rows)?;
    let status = match &result {
        Ok(s) => format!(
            "# status = ok\n# time_integrated_count = {}",
            fmt_num(s.time_integrated_count)
        ),
        Err(e) => format!("# status = failed: {e}"),
    };
    write_meta(out_dir, scenario, &notes, &status)?;
    let summary = result?;
    Ok(RunOutcome {
        summary,
        frames,
        dumped,
    })
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_summary(out_dir: &Path, rows: &[String]) -> Result<()> {
    let mut w = create(out_dir.join("summary.csv"))?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_meta(out_dir: &Path, scenario: &Scenario, notes: &[String], status: &str) -> Result<()> {
    let mut w = create(out_dir.join("run.meta"))?;
    writeln!(w, "# resolved scenario")?;
    write!(w, "{}", scenario.to_config_text())?;
    writeln!(
        w,
        "# domain_x = [{}, {}]",
        fmt_num(scenario.grid.x0()),
        fmt_num(scenario.grid.x0() + scenario.grid.lx())
    )?;
    if scenario.grid.is_2d() {
        writeln!(
            w,
            "# domain_y = [{}, {}]",
            fmt_num(scenario.grid.y0()),
            fmt_num(scenario.grid.y0() + scenario.grid.ly())
        )?;
    }
    for n in notes {
        writeln!(w, "{n}")?;
    }
    writeln!(w, "{status}")?;
    w.flush()?;
    Ok(())
}

fn write_scalar(path: PathBuf, f: &ScalarField<f64>) -> Result<()> {
    let mut w = create(path)?;
    f.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_frame(out_dir: &Path, frame: &Frame) -> Result<()> {
    let stem = format!("snap_{:04}", frame.index);
    let s = &frame.snapshot;
    write_scalar(out_dir.join(format!("{stem}_rho.csv")), &s.rho)?;
    write_scalar(out_dir.join(format!("{stem}_rho_plus.csv")), &frame.rho_plus)?;
    write_scalar(out_dir.join(format!("{stem}_rho_minus.csv")), &frame.rho_minus)?;
    write_scalar(out_dir.join(format!("{stem}_eta.csv")), &s.eta)?;
    if let Some(phi) = &s.phi {
        write_scalar(out_dir.join(format!("{stem}_phi.csv")), phi)?;
    }
    let mut w = create(out_dir.join(format!("{stem}_flow_u.csv")))?;
    s.flow.write_csv(Component::U, &mut w)?;
    w.flush()?;
    if s.flow.grid().is_2d() {
        let mut w = create(out_dir.join(format!("{stem}_flow_v.csv")))?;
        s.flow.write_csv(Component::V, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Dry-run report: resolved grid, time steps, step counts and a memory
/// estimate. Deterministic; computes nothing heavy and writes nothing.
pub fn describe(scenario: &Scenario) -> Result<String> {
    scenario.validate()?;
    let g = &scenario.grid;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "grid.dim = {}", if g.is_2d() { 2 } else { 1 });
    let _ = writeln!(w, "grid.nx = {}", g.nx());
    if let (Some(ny), Some(dy)) = (g.ny(), g.dy()) {
        let _ = writeln!(w, "grid.ny = {ny}");
        let _ = writeln!(w, "grid.dx = {}", fmt_num(g.dx()));
        let _ = writeln!(w, "grid.dy = {}", fmt_num(dy));
        let _ = writeln!(
            w,
            "grid.domain = [{}, {}] x [{}, {}]",
            fmt_num(g.x0()),
            fmt_num(g.x0() + g.lx()),
            fmt_num(g.y0()),
            fmt_num(g.y0() + g.ly())
        );
    } else {
        let _ = writeln!(w, "grid.dx = {}", fmt_num(g.dx()));
        let _ = writeln!(
            w,
            "grid.domain = [{}, {}]",
            fmt_num(g.x0()),
            fmt_num(g.x0() + g.lx())
        );
    }
    let _ = writeln!(w, "cells = {}", g.cell_count());
    let _ = writeln!(w, "density.terms = {}", scenario.density.terms.len());
    let _ = writeln!(w, "mobility.model = {}", scenario.mobility.kind());
    let _ = writeln!(w, "alpha = {}", fmt_num(scenario.alpha));
    let _ = writeln!(
        w,
        "solver = {}",
        if g.is_2d() {
            "neumann-poisson (conjugate gradients)"
        } else {
            "direct integration (1d)"
        }
    );
    let times = scenario.snapshot_times();
    let _ = writeln!(w, "n_steps = {}", scenario.n_steps);
    let _ = writeln!(w, "snapshots = {}", times.len());
    let _ = writeln!(
        w,
        "snapshots_dumped = {}",
        times.len().div_ceil(scenario.stride)
    );
    let window = scenario.t_end - scenario.t_start;
    let interval = if scenario.n_steps > 0 {
        window / scenario.n_steps as f64
    } else {
        0.0
    };
    let mut total_substeps = 0usize;
    for (name, sign) in [("plus", Sign::Plus), ("minus", Sign::Minus)] {
        let motion = Motion::for_species(scenario, sign)?;
        let bound = motion.step_bound(g, scenario.cfl)?;
        let dt = if bound.is_finite() { bound } else { window };
        let per_interval = match motion {
            Motion::Fixed => 0,
            _ if interval > 0.0 => substeps(interval, bound),
            _ => 0,
        };
        total_substeps += per_interval * scenario.n_steps;
        let _ = writeln!(w, "dt.{name} = {}", fmt_num(dt));
        let _ = writeln!(w, "substeps_per_interval.{name} = {per_interval}");
    }
    let _ = writeln!(w, "substeps_total = {total_substeps}");
    let _ = writeln!(w, "max_iter = {}", scenario.max_iter);
    let _ = writeln!(w, "estimated_memory_bytes = {}", estimated_memory(g));
    Ok(out)
}

/// Rough peak: about a dozen cell fields and two face fields of f64 alive at once.
fn estimated_memory(g: &GridSpec<f64>) -> usize {
    let cells = g.cell_count();
    let faces = g.u_face_count() + g.v_face_count();
    8 * (12 * cells + 4 * faces)
}

/// Where output goes: the explicit directory, else the scenario's `[output]
/// dir`, else the environment fallback, else `./out`.
pub fn resolve_out_dir(explicit: Option<&Path>, scenario: &Scenario, env: Option<&str>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| scenario.output_dir.clone())
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

impl VelocitySpec<f64> {
    fn config_lines(&self, kind_key: &str, prefix: &str) -> String {
        match self {
            VelocitySpec::Constant { vx, vy } => format!(
                "{kind_key} = constant\n{prefix}vx = {}\n{prefix}vy = {}\n",
                fmt_num(*vx),
                fmt_num(*vy)
            ),
            other => format!("{kind_key} = {}\n", other.kind()),
        }
    }
}

impl Scenario {
    /// The resolved scenario in the scenario file format.
    pub fn to_config_text(&self) -> String {
        use crate::scenario::DensityTerm;
        let g = &self.grid;
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "[grid]\nnx = {}\nx0 = {}\ndx = {}", g.nx(), fmt_num(g.x0()), fmt_num(g.dx()));
        if let (Some(ny), Some(dy)) = (g.ny(), g.dy()) {
            let _ = writeln!(w, "ny = {ny}\ny0 = {}\ndy = {}", fmt_num(g.y0()), fmt_num(dy));
        }
        if self.density.unbalanced_ok {
            let _ = writeln!(w, "\n[density]\nunbalanced_ok = true");
        }
        for (n, term) in self.density.terms.iter().enumerate() {
            let _ = writeln!(w, "\n[density.{}]", n + 1);
            match term {
                DensityTerm::Gaussian {
                    weight,
                    center,
                    width,
                    normalized,
                } => {
                    let _ = writeln!(
                        w,
                        "kind = gaussian\nweight = {}\ncenter_x = {}",
                        fmt_num(*weight),
                        fmt_num(center.0)
                    );
                    if g.is_2d() {
                        let _ = writeln!(w, "center_y = {}", fmt_num(center.1));
                    }
                    let _ = writeln!(w, "width = {}\nnormalized = {normalized}", fmt_num(*width));
                }
                DensityTerm::UniformPatch { level, x, y } => {
                    let _ = writeln!(
                        w,
                        "kind = uniform\nlevel = {}\nx_min = {}\nx_max = {}",
                        fmt_num(*level),
                        fmt_num(x.0),
                        fmt_num(x.1)
                    );
                    if let (true, Some(y)) = (g.is_2d(), y) {
                        let _ = writeln!(w, "y_min = {}\ny_max = {}", fmt_num(y.0), fmt_num(y.1));
                    }
                }
            }
        }
        let _ = writeln!(w, "\n[mobility]\nmodel = {}", self.mobility.kind());
        match &self.mobility {
            MobilityModel::Static => {}
            MobilityModel::Deterministic(v) => w.push_str(&v.config_lines("velocity", "")),
            MobilityModel::Brownian {
                sigma_plus,
                sigma_minus,
                drift_plus,
                drift_minus,
            } => {
                let _ = writeln!(
                    w,
                    "sigma_plus = {}\nsigma_minus = {}",
                    fmt_num(*sigma_plus),
                    fmt_num(*sigma_minus)
                );
                w.push_str(&drift_plus.config_lines("drift_plus", "drift_plus_"));
                w.push_str(&drift_minus.config_lines("drift_minus", "drift_minus_"));
            }
        }
        let _ = writeln!(
            w,
            "t_start = {}\nt_end = {}\nn_steps = {}\ncfl = {}",
            fmt_num(self.t_start),
            fmt_num(self.t_end),
            self.n_steps,
            fmt_num(self.cfl)
        );
        let _ = writeln!(
            w,
            "\n[solver]\nalpha = {}\npoisson_tol = {}\nbalance_tol = {}\nmax_iter = {}\ncapacity_k = {}",
            fmt_num(self.alpha),
            fmt_num(self.poisson_tol),
            fmt_num(self.balance_tol),
            self.max_iter,
            fmt_num(self.capacity_k)
        );
        let _ = writeln!(w, "\n[output]");
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(w, "dir = {}", dir.display());
        }
        let _ = writeln!(w, "stride = {}", self.stride);
        s
    }
}
