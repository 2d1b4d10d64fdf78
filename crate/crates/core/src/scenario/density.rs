use crate::error::{Error, Result};
use crate::fields::{integrate, GridSpec, ScalarField};
use crate::scalar::Real;

use super::special::half_line_normalization;
use super::{DensitySpec, DensityTerm};

impl DensityTerm {
    /// Value at `(x, y)`; `y` is ignored on 1D grids.
    pub fn eval(&self, x: f64, y: f64, grid_origin: (f64, f64), is_2d: bool) -> f64 {
        match *self {
            DensityTerm::Gaussian {
                weight,
                center,
                width,
                normalized,
            } => {
                let mut r2 = (x - center.0).powi(2);
                let mut k = 1.0;
                if normalized {
                    k = half_line_normalization(center.0, width, grid_origin.0);
                }
                if is_2d {
                    r2 += (y - center.1).powi(2);
                    if normalized {
                        k *= half_line_normalization(center.1, width, grid_origin.1);
                    }
                }
                weight * k * (-r2 / (width * width)).exp()
            }
            DensityTerm::UniformPatch { level, x: bx, y: by } => {
                let inside_x = bx.0 <= x && x <= bx.1;
                let inside_y = !is_2d || by.is_none_or(|b| b.0 <= y && y <= b.1);
                if inside_x && inside_y {
                    level
                } else {
                    0.0
                }
            }
        }
    }
}

fn sample_terms<'a, T: Real>(
    terms: impl Iterator<Item = &'a DensityTerm> + Clone,
    grid: &GridSpec<T>,
) -> ScalarField<T> {
    let origin = (grid.x0().as_f64(), grid.y0().as_f64());
    let is_2d = grid.is_2d();
    ScalarField::from_fn(*grid, |x, y| {
        let (x, y) = (x.as_f64(), y.as_f64());
        T::lit(terms.clone().map(|t| t.eval(x, y, origin, is_2d)).sum())
    })
    .expect("validated density terms sample to finite values")
}

/// Signed density at cell centers.
pub fn sample_density<T: Real>(spec: &DensitySpec, grid: &GridSpec<T>) -> ScalarField<T> {
    sample_terms(spec.terms.iter(), grid)
}

/// Sources and destinations sampled separately, both as non-negative fields:
/// `(rho_plus, rho_minus)` with `rho = rho_plus - rho_minus`.
pub fn sample_parts<T: Real>(
    spec: &DensitySpec,
    grid: &GridSpec<T>,
) -> (ScalarField<T>, ScalarField<T>) {
    let plus = sample_terms(spec.terms.iter().filter(|t| t.sign() > 0.0), grid);
    let minus = sample_terms(spec.terms.iter().filter(|t| t.sign() < 0.0), grid);
    (plus, minus.scale(-T::one()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport<T> {
    pub rho: ScalarField<T>,
    /// Factor applied to the destination side (1 when left untouched).
    pub sink_scale: T,
    /// `|integral(rho)| / integral(|rho|)` before balancing.
    pub imbalance: T,
}

/// Rescales the destination (negative) side so that `integral(rho) = 0`.
/// Sources are never touched. Fields already balanced to `tol` relative to
/// `integral(|rho|)` are returned as is.
pub fn balance<T: Real>(rho: &ScalarField<T>, tol: T) -> Result<ScalarField<T>> {
    balance_report(rho, tol).map(|r| r.rho)
}

pub fn balance_report<T: Real>(rho: &ScalarField<T>, tol: T) -> Result<BalanceReport<T>> {
    let sources = integrate(&rho.positive_part());
    let sinks = integrate(&rho.negative_part());
    let total = sources + sinks;
    let imbalance = if total > T::zero() {
        (sources - sinks).abs() / total
    } else {
        T::zero()
    };
    if imbalance <= tol {
        return Ok(BalanceReport {
            rho: rho.clone(),
            sink_scale: T::one(),
            imbalance,
        });
    }
    if sinks.is_zero() {
        return Err(Error::Unbalanceable(format!(
            "sources carry {sources} but there are no destinations to rescale"
        )));
    }
    let scale = sources / sinks;
    let balanced = rho.map(|v| if v < T::zero() { v * scale } else { v });
    Ok(BalanceReport {
        rho: balanced,
        sink_scale: scale,
        imbalance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::normalization_constant;

    fn example1() -> DensitySpec {
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
    fn example1_samples_to_halves() {
        let g = GridSpec::interval(4, 0.0, 1.0).unwrap();
        let rho = sample_density(&example1(), &g);
        assert_eq!(rho.values(), &[1.0, 1.0, -1.0, -1.0]);
        let (p, m) = sample_parts(&example1(), &g);
        assert_eq!(p.values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.values(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_spec_samples_to_zero() {
        let g = GridSpec::interval(5, 0.0, 1.0).unwrap();
        let spec = DensitySpec {
            terms: vec![],
            unbalanced_ok: true,
        };
        assert!(spec.validate().is_ok());
        assert_eq!(sample_density(&spec, &g).max_abs(), 0.0);
    }

    #[test]
    fn example2_samples_normalized_gaussians() {
        let g = GridSpec::interval(200, 0.0, 20.0).unwrap();
        let spec = DensitySpec::new(vec![
            DensityTerm::Gaussian {
                weight: 1.0,
                center: (3.0, 0.0),
                width: 1.0,
                normalized: true,
            },
            DensityTerm::Gaussian {
                weight: -1.0,
                center: (10.0, 0.0),
                width: 1.0,
                normalized: true,
            },
        ]);
        let rho = sample_density(&spec, &g);
        let (k1, k2) = (normalization_constant(3.0), normalization_constant(10.0));
        for i in 0..200 {
            let x = g.xc(i);
            let want = k1 * (-(x - 3.0f64).powi(2)).exp() - k2 * (-(x - 10.0f64).powi(2)).exp();
            assert!((rho.values()[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_linear_in_terms() {
        let g = GridSpec::<f64>::rectangle(6, 5, 0.0, 0.0, 2.0, 1.0).unwrap();
        let a = DensityTerm::Gaussian {
            weight: 2.0,
            center: (0.5, 0.5),
            width: 0.3,
            normalized: true,
        };
        let b = DensityTerm::UniformPatch {
            level: -0.7,
            x: (1.0, 2.0),
            y: Some((0.0, 0.5)),
        };
        let both = sample_density(&DensitySpec::new(vec![a.clone(), b.clone()]), &g);
        let sa = sample_density(&DensitySpec::new(vec![a]), &g);
        let sb = sample_density(&DensitySpec::new(vec![b]), &g);
        assert!(both.sub(&sa.add(&sb).unwrap()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn balanced_field_is_untouched() {
        let g = GridSpec::interval(4, 0.0, 1.0).unwrap();
        let rho = ScalarField::new(g, vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let r = balance_report(&rho, 1e-9).unwrap();
        assert_eq!(r.rho, rho);
        assert_eq!(r.sink_scale, 1.0);
    }

    #[test]
    fn sinks_are_rescaled() {
        let g = GridSpec::interval(2, 0.0, 1.0).unwrap();
        let rho = ScalarField::new(g, vec![2.0, -1.0]).unwrap();
        let out = balance(&rho, 1e-9).unwrap();
        assert_eq!(out.values(), &[2.0, -2.0]);
    }

    #[test]
    fn no_sinks_cannot_balance() {
        let g = GridSpec::interval(2, 0.0, 1.0).unwrap();
        let rho = ScalarField::new(g, vec![2.0, 0.0]).unwrap();
        assert!(matches!(balance(&rho, 1e-9), Err(Error::Unbalanceable(_))));
        let zero = ScalarField::zeros(g);
        assert_eq!(balance(&zero, 1e-9).unwrap(), zero);
    }
}
