//! Scenario text format.
//!
//! ```text
//! # comment
//! [grid]
//! nx = 1000          # cells along x
//! lx = 1.0           # extent (or dx = cell width)
//! x0 = 0.0
//! # ny / ly / dy / y0 make the grid 2D
//!
//! [density.1]
//! kind = uniform     # uniform | gaussian
//! level = 1.0
//! x_min = 0.0
//! x_max = 0.5
//!
//! [mobility]
//! model = static     # static | deterministic | brownian
//!
//! [solver]
//! alpha = 2
//!
//! [output]
//! dir = out
//! stride = 1
//! ```
//!
//! Every key is checked; unknown keys and keys that do not apply to the chosen
//! variant are errors.

use std::cell::Cell;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fields::GridSpec;

use super::{default_max_iter, DensitySpec, DensityTerm, MobilityModel, Scenario, VelocitySpec};

struct Entry {
    key: String,
    value: String,
    line: usize,
    used: Cell<bool>,
}

struct Section {
    name: String,
    entries: Vec<Entry>,
}

impl Section {
    fn raw(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.iter().find(|e| e.key == key)?;
        e.used.set(true);
        Some(e)
    }

    fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.raw(key).map(|e| e.value.as_str())
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|e| {
                e.value.parse::<f64>().map_err(|_| Error::Parse {
                    line: e.line,
                    msg: format!("{}.{key}: expected a number, got `{}`", self.name, e.value),
                })
            })
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.raw(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| Error::Parse {
                    line: e.line,
                    msg: format!(
                        "{}.{key}: expected a non-negative integer, got `{}`",
                        self.name, e.value
                    ),
                })
            })
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.raw(key)
            .map(|e| match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(Error::Parse {
                    line: e.line,
                    msg: format!("{}.{key}: expected true or false, got `{other}`", self.name),
                }),
            })
            .transpose()
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn missing(&self, key: &str) -> Error {
        Error::Validation(format!("{}.{key}: missing", self.name))
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map_or(0, |e| e.line)
    }

    fn finish(&self) -> Result<()> {
        match self.entries.iter().find(|e| !e.used.get()) {
            Some(e) => Err(Error::Parse {
                line: e.line,
                msg: format!("unknown key `{}` in [{}]", e.key, self.name),
            }),
            None => Ok(()),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').map(str::trim).ok_or_else(|| Error::Parse {
                line,
                msg: "unterminated section header".into(),
            })?;
            let known = matches!(name, "grid" | "density" | "mobility" | "solver" | "output")
                || name
                    .strip_prefix("density.")
                    .is_some_and(|label| !label.is_empty());
            if !known {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown section [{name}]"),
                });
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            sections.push(Section {
                name: name.to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `key = value` or `[section]`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty key or value".into(),
            });
        }
        let section = sections.last_mut().ok_or_else(|| Error::Parse {
            line,
            msg: format!("key `{key}` outside of any section"),
        })?;
        if section.has(key) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key `{key}` in [{}]", section.name),
            });
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            used: Cell::new(false),
        });
    }
    Ok(sections)
}

/// Parses and validates a scenario document, filling defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let sections = tokenize(text)?;
    let find = |name: &str| sections.iter().find(|s| s.name == name);

    let density_sections: Vec<&Section> = sections
        .iter()
        .filter(|s| s.name.starts_with("density."))
        .collect();
    let flags = find("density");
    let unbalanced_ok = match flags {
        Some(s) => s.bool("unbalanced_ok")?.unwrap_or(false),
        None => false,
    };
    if density_sections.is_empty() && !unbalanced_ok {
        return Err(Error::Validation("density: missing".into()));
    }

    let grid_section = find("grid").ok_or_else(|| Error::Validation("grid: missing".into()))?;
    let grid = parse_grid(grid_section)?;

    let mut terms = Vec::with_capacity(density_sections.len());
    for s in &density_sections {
        terms.push(parse_term(s, grid.is_2d())?);
    }
    let density = DensitySpec {
        terms,
        unbalanced_ok,
    };

    let mut scenario = Scenario::new(grid, density, MobilityModel::Static);
    if let Some(m) = find("mobility") {
        parse_mobility(m, &mut scenario)?;
    }
    if let Some(s) = find("solver") {
        if let Some(a) = s.f64("alpha")? {
            scenario.alpha = a;
        }
        if let Some(t) = s.f64("poisson_tol")? {
            scenario.poisson_tol = t;
        }
        if let Some(t) = s.f64("balance_tol")? {
            scenario.balance_tol = t;
        }
        scenario.max_iter = s.usize("max_iter")?.unwrap_or(default_max_iter(&grid));
        if let Some(k) = s.f64("capacity_k")? {
            scenario.capacity_k = k;
        }
    }
    if let Some(o) = find("output") {
        scenario.output_dir = o.str("dir").map(PathBuf::from);
        if let Some(k) = o.usize("stride")? {
            scenario.stride = k;
        }
    }

    for s in &sections {
        s.finish()?;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn parse_grid(s: &Section) -> Result<GridSpec<f64>> {
    let nx = s.usize("nx")?.ok_or_else(|| s.missing("nx"))?;
    let x0 = s.f64("x0")?.unwrap_or(0.0);
    let two_d = s.has("ny") || s.has("ly") || s.has("dy") || s.has("y0");
    if let Some(dim) = s.usize("dim")? {
        if !(dim == 1 || dim == 2) || (dim == 2) != two_d {
            return Err(Error::Validation(format!(
                "grid.dim: {dim} is inconsistent with the y keys present (need 1, or 2 with ny and ly/dy)"
            )));
        }
    }
    let width = |len: &str, cell: &str, n: usize| -> Result<f64> {
        match (s.f64(len)?, s.f64(cell)?) {
            (Some(l), None) => Ok(l / n as f64),
            (None, Some(d)) => Ok(d),
            (Some(_), Some(_)) => Err(Error::Parse {
                line: s.line_of(cell),
                msg: format!("grid: give either {len} or {cell}, not both"),
            }),
            (None, None) => Err(Error::Validation(format!("grid.{len}: missing"))),
        }
    };
    let map_grid = |e: Error| match e {
        Error::InvalidGrid(m) => Error::Validation(format!("grid: {m}")),
        other => other,
    };
    let dx = width("lx", "dx", nx.max(1))?;
    if two_d {
        let ny = s.usize("ny")?.ok_or_else(|| s.missing("ny"))?;
        let y0 = s.f64("y0")?.unwrap_or(0.0);
        let dy = width("ly", "dy", ny.max(1))?;
        GridSpec::new_2d(nx, ny, x0, y0, dx, dy).map_err(map_grid)
    } else {
        GridSpec::new_1d(nx, x0, dx).map_err(map_grid)
    }
}

fn parse_term(s: &Section, two_d: bool) -> Result<DensityTerm> {
    let kind = s.str("kind").ok_or_else(|| s.missing("kind"))?;
    match kind {
        "gaussian" => {
            let cx = match (s.f64("center")?, s.f64("center_x")?) {
                (Some(c), None) | (None, Some(c)) => c,
                (Some(_), Some(_)) => {
                    return Err(Error::Parse {
                        line: s.line_of("center_x"),
                        msg: format!("{}: give either center or center_x", s.name),
                    })
                }
                (None, None) => return Err(s.missing("center")),
            };
            let cy = if two_d {
                s.f64("center_y")?.unwrap_or(0.0)
            } else {
                0.0
            };
            Ok(DensityTerm::Gaussian {
                weight: s.req_f64("weight")?,
                center: (cx, cy),
                width: s.f64("width")?.unwrap_or(1.0),
                normalized: s.bool("normalized")?.unwrap_or(false),
            })
        }
        "uniform" => {
            let x = (s.req_f64("x_min")?, s.req_f64("x_max")?);
            let y = if two_d {
                match (s.f64("y_min")?, s.f64("y_max")?) {
                    (Some(a), Some(b)) => Some((a, b)),
                    (None, None) => None,
                    _ => {
                        return Err(Error::Validation(format!(
                            "{}: y_min and y_max go together",
                            s.name
                        )))
                    }
                }
            } else {
                None
            };
            Ok(DensityTerm::UniformPatch {
                level: s.req_f64("level")?,
                x,
                y,
            })
        }
        other => Err(Error::Parse {
            line: s.line_of("kind"),
            msg: format!("{}.kind: expected gaussian or uniform, got `{other}`", s.name),
        }),
    }
}

fn parse_velocity(s: &Section, kind_key: &str, prefix: &str) -> Result<VelocitySpec<f64>> {
    let kind = s.str(kind_key).unwrap_or("zero");
    match kind {
        "zero" => Ok(VelocitySpec::Zero),
        "linear_radial" => Ok(VelocitySpec::LinearRadial),
        "constant" => Ok(VelocitySpec::Constant {
            vx: s.f64(&format!("{prefix}vx"))?.unwrap_or(0.0),
            vy: s.f64(&format!("{prefix}vy"))?.unwrap_or(0.0),
        }),
        other => Err(Error::Parse {
            line: s.line_of(kind_key),
            msg: format!(
                "mobility.{kind_key}: expected zero, constant or linear_radial, got `{other}`"
            ),
        }),
    }
}

fn parse_mobility(s: &Section, scenario: &mut Scenario) -> Result<()> {
    let model = s.str("model").unwrap_or("static");
    scenario.mobility = match model {
        "static" => MobilityModel::Static,
        "deterministic" => MobilityModel::Deterministic(parse_velocity(s, "velocity", "")?),
        "brownian" => MobilityModel::Brownian {
            sigma_plus: s.f64("sigma_plus")?.unwrap_or(0.0),
            sigma_minus: s.f64("sigma_minus")?.unwrap_or(0.0),
            drift_plus: parse_velocity(s, "drift_plus", "drift_plus_")?,
            drift_minus: parse_velocity(s, "drift_minus", "drift_minus_")?,
        },
        other => {
            return Err(Error::Parse {
                line: s.line_of("model"),
                msg: format!(
                    "mobility.model: expected static, deterministic or brownian, got `{other}`"
                ),
            })
        }
    };
    if let Some(t) = s.f64("t_start")? {
        scenario.t_start = t;
    }
    scenario.t_end = s.f64("t_end")?.unwrap_or(scenario.t_start);
    let moving = !scenario.mobility.is_static();
    scenario.n_steps = s.usize("n_steps")?.unwrap_or(usize::from(moving));
    if let Some(c) = s.f64("cfl")? {
        scenario.cfl = c;
    }
    Ok(())
}
