//! Reference solutions: closed forms where they exist, finite elements otherwise.

pub mod analytic;
pub mod fem;
pub mod field;
pub mod mesh;

use serde::{Deserialize, Serialize};

use crate::domains::Shape;
use crate::error::{invalid, Error, Result};

pub use analytic::{bessel_j0, circle_bessel, rect_series, RectSeries, SeriesValue, DEFAULT_TERMS};
pub use fem::{FemOptions, FemSolution, FemStats};
pub use field::{compare, relative_l2, ErrorNorms, FieldGrid};
pub use mesh::{mesh_rule_edge, Locator, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    /// Closed form on the rectangle and circle, finite elements on the ellipse.
    Auto,
    Analytic,
    Fem,
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub grid: FieldGrid,
    pub method: OracleMethod,
    /// Largest series truncation bound over the grid, for the rectangle series.
    pub tail_bound: Option<f64>,
    pub fem: Option<FemSolution>,
}

/// Reference field for `shape` at wavenumber `k` sampled on an `nx × ny` grid.
pub fn reference(shape: &Shape, k: f64, nx: usize, ny: usize, method: OracleMethod, fem: FemOptions) -> Result<Reference> {
    shape.validate()?;
    let analytic = match (method, shape) {
        (OracleMethod::Fem, _) => false,
        (OracleMethod::Auto, Shape::Ellipse { .. }) => false,
        (OracleMethod::Analytic, Shape::Ellipse { .. }) => {
            return Err(invalid("the ellipse has no closed-form oracle; use fem"));
        }
        _ => true,
    };
    if !analytic {
        let sol = fem::solve_shape(shape, k, fem)?;
        let loc = sol.locator();
        let grid = FieldGrid::sample(shape, nx, ny, |p| {
            loc.interpolate(&sol.values, p)
                .ok_or_else(|| Error::FieldMismatch(format!("grid point ({}, {}) is off the mesh", p.x, p.y)))
        })?;
        return Ok(Reference {
            grid,
            method: OracleMethod::Fem,
            tail_bound: None,
            fem: Some(sol),
        });
    }
    match *shape {
        Shape::Rect {
            half_width,
            half_height,
            values,
        } => {
            let series = RectSeries::new(half_width, half_height, values, k, DEFAULT_TERMS)?;
            // edge points carry the prescribed data; the series is only summable inside
            let bound = std::sync::Mutex::new(0.0f64);
            let grid = FieldGrid::sample(shape, nx, ny, |p| {
                let s = series.eval(p);
                if s.tail_bound.is_finite() {
                    let mut b = bound.lock().expect("bound lock");
                    *b = b.max(s.tail_bound);
                    Ok(s.value)
                } else {
                    Ok(edge_value(half_width, half_height, values, p).unwrap_or(s.value))
                }
            })?;
            let bound = bound.into_inner().expect("bound lock");
            Ok(Reference {
                grid,
                method: OracleMethod::Analytic,
                tail_bound: Some(bound),
                fem: None,
            })
        }
        Shape::Circle { radius, value } => {
            let grid = FieldGrid::sample(shape, nx, ny, |p| circle_bessel(p.x.hypot(p.y), k, radius, value))?;
            Ok(Reference {
                grid,
                method: OracleMethod::Analytic,
                tail_bound: None,
                fem: None,
            })
        }
        Shape::Ellipse { .. } => unreachable!("handled above"),
    }
}

/// Boundary datum at an edge point, averaging the two sides at a corner.
fn edge_value(w: f64, h: f64, values: [f64; 4], p: crate::geometry::Point2) -> Option<f64> {
    let tol = 1e-12 * w.max(h);
    let on = [
        (p.x - w).abs() <= tol,
        (p.y - h).abs() <= tol,
        (p.x + w).abs() <= tol,
        (p.y + h).abs() <= tol,
    ];
    let hits: Vec<f64> = on.iter().zip(values).filter(|(o, _)| **o).map(|(_, v)| v).collect();
    (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64)
}
