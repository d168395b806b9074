//! Scalar fields sampled on a regular grid, and error norms between them.
//!
//! CSV format: one header line `# nx=<nx>,ny=<ny>,xmin=<..>,xmax=<..>,ymin=<..>,ymax=<..>`
//! followed by `ny` rows of `nx` comma-separated values. Row `j` holds
//! `y = ymin + j·(ymax − ymin)/(ny − 1)`, column `i` holds
//! `x = xmin + i·(xmax − xmin)/(nx − 1)`. Points outside the domain are `NaN`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::domains::Shape;
use crate::error::{invalid, Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    /// `[xmin, xmax, ymin, ymax]`.
    pub bounds: [f64; 4],
    /// Row-major, `NaN` outside the mask.
    pub values: Vec<f64>,
}

impl FieldGrid {
    fn check_dims(nx: usize, ny: usize, bounds: [f64; 4]) -> Result<()> {
        if nx < 2 || ny < 2 {
            return Err(invalid("field grid needs at least 2 points per axis"));
        }
        if !(bounds[1] > bounds[0] && bounds[3] > bounds[2]) || bounds.iter().any(|b| !b.is_finite()) {
            return Err(invalid("field grid bounds must be finite and increasing"));
        }
        Ok(())
    }

    pub fn point(&self, i: usize, j: usize) -> Point2 {
        let [x0, x1, y0, y1] = self.bounds;
        Point2::new(
            x0 + (x1 - x0) * i as f64 / (self.nx - 1) as f64,
            y0 + (y1 - y0) * j as f64 / (self.ny - 1) as f64,
        )
    }

    /// Row-major grid points.
    pub fn points(&self) -> Vec<Point2> {
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    /// Samples `f` on the points of `shape`'s bounding box that lie in the domain.
    pub fn sample<F>(shape: &Shape, nx: usize, ny: usize, f: F) -> Result<Self>
    where
        F: Fn(Point2) -> Result<f64> + Sync,
    {
        use rayon::prelude::*;
        let bounds = shape.bounds();
        Self::check_dims(nx, ny, bounds)?;
        let mut grid = Self {
            nx,
            ny,
            bounds,
            values: Vec::new(),
        };
        grid.values = grid
            .points()
            .into_par_iter()
            .map(|p| if shape.contains(p) { f(p) } else { Ok(f64::NAN) })
            .collect::<Result<Vec<_>>>()?;
        Ok(grid)
    }

    pub fn in_mask(&self, idx: usize) -> bool {
        !self.values[idx].is_nan()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let [x0, x1, y0, y1] = self.bounds;
        writeln!(w, "# nx={},ny={},xmin={x0},xmax={x1},ymin={y0},ymax={y1}", self.nx, self.ny)?;
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let head = lines.next().ok_or_else(|| Error::Format("empty field file".into()))??;
        let head = head
            .strip_prefix("# ")
            .ok_or_else(|| Error::Format("field file must start with a '# nx=..' header".into()))?;
        let mut nx = None;
        let mut ny = None;
        let mut b = [f64::NAN; 4];
        for kv in head.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header entry {kv:?}")))?;
            let bad = || Error::Format(format!("bad header value {kv:?}"));
            match k.trim() {
                "nx" => nx = Some(v.parse::<usize>().map_err(|_| bad())?),
                "ny" => ny = Some(v.parse::<usize>().map_err(|_| bad())?),
                "xmin" => b[0] = v.parse().map_err(|_| bad())?,
                "xmax" => b[1] = v.parse().map_err(|_| bad())?,
                "ymin" => b[2] = v.parse().map_err(|_| bad())?,
                "ymax" => b[3] = v.parse().map_err(|_| bad())?,
                _ => return Err(Error::Format(format!("unknown header key {k:?}"))),
            }
        }
        let (nx, ny) = match (nx, ny) {
            (Some(nx), Some(ny)) => (nx, ny),
            _ => return Err(Error::Format("header needs nx and ny".into())),
        };
        Self::check_dims(nx, ny, b).map_err(|e| Error::Format(e.to_string()))?;
        let mut values = Vec::with_capacity(nx * ny);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad value {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != nx {
                return Err(Error::Format(format!("expected {nx} values per row, got {}", row.len())));
            }
            values.extend(row);
        }
        if values.len() != nx * ny {
            return Err(Error::Format(format!("expected {ny} rows, got {}", values.len() / nx)));
        }
        Ok(Self { nx, ny, bounds: b, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// `‖a − b‖₂ / ‖b‖₂` over the common mask.
    pub relative_l2: f64,
    pub max_abs: f64,
    pub points: usize,
}

/// Error of `approx` against `reference` together with the pointwise
/// absolute difference field.
pub fn compare(approx: &FieldGrid, reference: &FieldGrid) -> Result<(ErrorNorms, FieldGrid)> {
    if approx.nx != reference.nx || approx.ny != reference.ny {
        return Err(Error::FieldMismatch(format!(
            "grid sizes differ: {}x{} vs {}x{}",
            approx.nx, approx.ny, reference.nx, reference.ny
        )));
    }
    let scale = reference.bounds.iter().map(|b| b.abs()).fold(1.0, f64::max);
    if approx
        .bounds
        .iter()
        .zip(&reference.bounds)
        .any(|(a, b)| (a - b).abs() > 1e-12 * scale)
    {
        return Err(Error::FieldMismatch("grid bounds differ".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut points = 0;
    let mut diff = Vec::with_capacity(approx.values.len());
    for (a, b) in approx.values.iter().zip(&reference.values) {
        match (a.is_nan(), b.is_nan()) {
            (true, true) => diff.push(f64::NAN),
            (false, false) => {
                let d = a - b;
                num += d * d;
                den += b * b;
                max_abs = max_abs.max(d.abs());
                points += 1;
                diff.push(d.abs());
            }
            _ => return Err(Error::FieldMismatch("domain masks differ".into())),
        }
    }
    if points == 0 {
        return Err(Error::FieldMismatch("masks share no points".into()));
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let field = FieldGrid {
        values: diff,
        ..reference.clone()
    };
    Ok((
        ErrorNorms {
            relative_l2: (num / den).sqrt(),
            max_abs,
            points,
        },
        field,
    ))
}

pub fn relative_l2(approx: &FieldGrid, reference: &FieldGrid) -> Result<f64> {
    compare(approx, reference).map(|(n, _)| n.relative_l2)
}
