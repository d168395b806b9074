//! Problem geometries, boundary data and collocation sampling.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::Point2;
use crate::trial::TrialForm;

pub const SPEED_OF_SOUND: f64 = 340.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavenumber {
    pub f: f64,
    pub c: f64,
    pub k: f64,
}

impl Wavenumber {
    pub fn new(f: f64, c: f64) -> Result<Self> {
        if !(f > 0.0 && f.is_finite() && c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("frequency and sound speed must be positive (f={f}, c={c})")));
        }
        Ok(Self { f, c, k: TAU * f / c })
    }
}

pub fn wavenumber(f: f64, c: f64) -> Result<f64> {
    Wavenumber::new(f, c).map(|w| w.k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `[−w, w] × [−h, h]`; `values` are ordered `x = w`, `y = h`, `x = −w`, `y = −h`.
    Rect {
        half_width: f64,
        half_height: f64,
        values: [f64; 4],
    },
    Circle {
        radius: f64,
        value: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
        value: f64,
    },
}

impl Shape {
    /// The 2 m × 2 m square with `ψ = −1, 0, 1, 0` on its sides.
    pub fn unit_rect() -> Self {
        Shape::Rect {
            half_width: 1.0,
            half_height: 1.0,
            values: [-1.0, 0.0, 1.0, 0.0],
        }
    }

    pub fn unit_circle() -> Self {
        Shape::Circle {
            radius: 1.0,
            value: 1.0,
        }
    }

    pub fn default_ellipse() -> Self {
        Shape::Ellipse {
            a: 1.0,
            b: 0.5,
            value: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Rect { .. } => "rect",
            Shape::Circle { .. } => "circle",
            Shape::Ellipse { .. } => "ellipse",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Shape::Rect {
                half_width,
                half_height,
                values,
            } => {
                if !(half_width > 0.0 && half_height > 0.0) || values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("rectangle needs positive half extents and finite values"));
                }
            }
            Shape::Circle { radius, value } => {
                if !(radius > 0.0 && value.is_finite()) {
                    return Err(invalid("circle needs a positive radius"));
                }
            }
            Shape::Ellipse { a, b, value } => {
                if !(a > b && b > 0.0 && value.is_finite()) {
                    return Err(invalid(format!("ellipse needs a > b > 0, got a={a}, b={b}")));
                }
            }
        }
        Ok(())
    }

    /// Closed-domain membership with a relative tolerance for boundary points.
    pub fn contains(&self, p: Point2) -> bool {
        let tol = 1e-12;
        match *self {
            Shape::Rect {
                half_width,
                half_height,
                ..
            } => p.x.abs() <= half_width * (1.0 + tol) && p.y.abs() <= half_height * (1.0 + tol),
            Shape::Circle { radius, .. } => p.x * p.x + p.y * p.y <= radius * radius * (1.0 + tol),
            Shape::Ellipse { a, b, .. } => (p.x / a).powi(2) + (p.y / b).powi(2) <= 1.0 + tol,
        }
    }

    /// `[xmin, xmax, ymin, ymax]`.
    pub fn bounds(&self) -> [f64; 4] {
        let (w, h) = match *self {
            Shape::Rect {
                half_width,
                half_height,
                ..
            } => (half_width, half_height),
            Shape::Circle { radius, .. } => (radius, radius),
            Shape::Ellipse { a, b, .. } => (a, b),
        };
        [-w, w, -h, h]
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Rect {
                half_width,
                half_height,
                ..
            } => 4.0 * half_width * half_height,
            Shape::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Ellipse { a, b, .. } => std::f64::consts::PI * a * b,
        }
    }

    pub fn trial_form(&self, s: u32) -> Result<TrialForm> {
        match *self {
            Shape::Rect {
                half_width,
                half_height,
                values,
            } => TrialForm::rectangle(half_width, half_height, values, s),
            Shape::Circle { radius, value } => TrialForm::circle(Point2::new(0.0, 0.0), radius, value),
            Shape::Ellipse { a, b, value } => TrialForm::ellipse(a, b, value),
        }
    }

    /// `n` equispaced boundary points with their prescribed values, offset by
    /// half a spacing so no point lands on a rectangle corner. The rectangle
    /// gets `n / 4` points per side, the remainder going to the first sides.
    pub fn boundary_points(&self, n: usize) -> Vec<BoundarySample> {
        match *self {
            Shape::Rect {
                half_width: w,
                half_height: h,
                values,
            } => {
                let corners = [
                    Point2::new(w, -h),
                    Point2::new(w, h),
                    Point2::new(-w, h),
                    Point2::new(-w, -h),
                ];
                let mut out = Vec::with_capacity(n);
                for side in 0..4 {
                    let count = n / 4 + usize::from(side < n % 4);
                    let (a, b) = (corners[side], corners[(side + 1) % 4]);
                    for k in 0..count {
                        let t = (k as f64 + 0.5) / count as f64;
                        out.push(BoundarySample {
                            p: Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)),
                            value: values[side],
                            piece: side,
                        });
                    }
                }
                out
            }
            Shape::Circle { radius, value } => (0..n)
                .map(|k| {
                    let th = TAU * (k as f64 + 0.5) / n as f64;
                    BoundarySample {
                        p: Point2::new(radius * th.cos(), radius * th.sin()),
                        value,
                        piece: 0,
                    }
                })
                .collect(),
            Shape::Ellipse { a, b, value } => (0..n)
                .map(|k| {
                    let th = TAU * (k as f64 + 0.5) / n as f64;
                    BoundarySample {
                        p: Point2::new(a * th.cos(), b * th.sin()),
                        value,
                        piece: 0,
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMeasure {
    /// Uniform with respect to area.
    #[default]
    AreaUniform,
    /// Uniform in the polar or elliptical coordinates themselves.
    CoordUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    /// Interior collocation points.
    pub interior: usize,
    /// Boundary collocation points, used by the soft-constraint method.
    #[serde(default)]
    pub boundary: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub measure: SamplingMeasure,
}

impl Sampling {
    pub fn full_rect() -> Self {
        Self {
            interior: 6400,
            boundary: 320,
            seed: 0,
            measure: SamplingMeasure::AreaUniform,
        }
    }

    pub fn full_curved() -> Self {
        Self {
            interior: 10_000,
            boundary: 0,
            seed: 0,
            measure: SamplingMeasure::AreaUniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub p: Point2,
    pub value: f64,
    /// Index of the boundary piece the point lies on.
    pub piece: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Collocation {
    pub interior: Vec<Point2>,
    pub boundary: Vec<BoundarySample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub sampling: Sampling,
}

impl DomainSpec {
    pub fn new(shape: Shape, sampling: Sampling) -> Result<Self> {
        shape.validate()?;
        if sampling.interior == 0 {
            return Err(invalid("interior sample count must be positive"));
        }
        if matches!(shape, Shape::Rect { .. }) && sampling.boundary < 4 {
            return Err(invalid("rectangle needs at least one boundary point per side"));
        }
        Ok(Self { shape, sampling })
    }

    pub fn sample(&self) -> Result<Collocation> {
        self.shape.validate()?;
        let s = &self.sampling;
        let interior = match self.shape {
            Shape::Rect { .. } => sample_rectangle(&self.shape, s.interior, s.seed)?,
            Shape::Circle { .. } => sample_circle(&self.shape, s.interior, s.seed, s.measure)?,
            Shape::Ellipse { .. } => sample_ellipse(&self.shape, s.interior, s.seed, s.measure)?,
        };
        Ok(Collocation {
            interior,
            boundary: self.shape.boundary_points(s.boundary),
        })
    }
}

/// Uniform points in the open rectangle.
pub fn sample_rectangle(shape: &Shape, n: usize, seed: u64) -> Result<Vec<Point2>> {
    let Shape::Rect {
        half_width: w,
        half_height: h,
        ..
    } = *shape
    else {
        return Err(invalid("sample_rectangle needs a rectangle"));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point2::new(rng.gen_range(-w..w), rng.gen_range(-h..h));
        if p.x.abs() < w && p.y.abs() < h {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn sample_circle(shape: &Shape, n: usize, seed: u64, measure: SamplingMeasure) -> Result<Vec<Point2>> {
    let Shape::Circle { radius, .. } = *shape else {
        return Err(invalid("sample_circle needs a circle"));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let th = TAU * rng.gen::<f64>();
            let r = match measure {
                SamplingMeasure::AreaUniform => radius * u.sqrt(),
                SamplingMeasure::CoordUniform => radius * u,
            };
            Point2::new(r * th.cos(), r * th.sin())
        })
        .collect())
}

pub fn sample_ellipse(shape: &Shape, n: usize, seed: u64, measure: SamplingMeasure) -> Result<Vec<Point2>> {
    let Shape::Ellipse { a, b, .. } = *shape else {
        return Err(invalid("sample_ellipse needs an ellipse"));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    match measure {
        SamplingMeasure::AreaUniform => {
            while out.len() < n {
                let p = Point2::new(rng.gen_range(-a..=a), rng.gen_range(-b..=b));
                if (p.x / a).powi(2) + (p.y / b).powi(2) <= 1.0 {
                    out.push(p);
                }
            }
        }
        SamplingMeasure::CoordUniform => {
            let ec = EllipticalCoords::new(a, b)?;
            while out.len() < n {
                let xi = ec.xi0 * rng.gen::<f64>();
                let eta = TAU * rng.gen::<f64>();
                let p = ec.to_cartesian(xi, eta);
                // cosh ξ / cosh ξ₀ can overshoot the boundary by one ulp
                if (p.x / a).powi(2) + (p.y / b).powi(2) <= 1.0 {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Confocal elliptical coordinates for an ellipse with semi-axes `a > b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticalCoords {
    /// Focal distance `sqrt(a² − b²)`.
    pub l: f64,
    /// Radial coordinate of the boundary, `atanh(b / a)`.
    pub xi0: f64,
}

impl EllipticalCoords {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > b && b > 0.0) {
            return Err(invalid(format!("elliptical coordinates need a > b > 0, got a={a}, b={b}")));
        }
        Ok(Self {
            l: (a * a - b * b).sqrt(),
            xi0: (b / a).atanh(),
        })
    }

    pub fn to_cartesian(&self, xi: f64, eta: f64) -> Point2 {
        Point2::new(self.l * xi.cosh() * eta.cos(), self.l * xi.sinh() * eta.sin())
    }
}
