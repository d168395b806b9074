//! Triangle meshes for the three domains and point location on them.
//!
//! Text export format, one record per line:
//!
//! ```text
//! # helmtrial mesh v1
//! vertices <N>
//! <x> <y> <dirichlet value or ->     (N lines)
//! triangles <M>
//! <i> <j> <k>                         (M lines, counter-clockwise, 0-based)
//! ```

use std::f64::consts::TAU;
use std::io::Write;

use crate::domains::Shape;
use crate::error::{invalid, Result};
use crate::geometry::Point2;

/// Largest edge allowed by the six-elements-per-wavelength rule.
pub fn mesh_rule_edge(c: f64, f_max: f64) -> f64 {
    c / (6.0 * f_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Prescribed value on boundary vertices.
    pub dirichlet: Vec<Option<f64>>,
}

fn orient(v: &[Point2], t: [usize; 3]) -> [usize; 3] {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if cross < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

impl Mesh {
    pub fn for_shape(shape: &Shape, max_edge: f64) -> Result<Self> {
        shape.validate()?;
        match *shape {
            Shape::Rect {
                half_width,
                half_height,
                values,
            } => Self::rectangle(half_width, half_height, values, max_edge),
            Shape::Circle { radius, value } => Self::disk(radius, value, max_edge),
            Shape::Ellipse { a, b, value } => Self::ellipse(a, b, value, max_edge),
        }
    }

    /// Structured grid of squares split along one diagonal. Corner vertices
    /// take the mean of their two sides.
    pub fn rectangle(w: f64, h: f64, values: [f64; 4], max_edge: f64) -> Result<Self> {
        if !(max_edge > 0.0) {
            return Err(invalid("max_edge must be positive"));
        }
        let spacing = max_edge / 2f64.sqrt();
        let nx = ((2.0 * w / spacing).ceil() as usize).max(1);
        let ny = ((2.0 * h / spacing).ceil() as usize).max(1);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut dirichlet = Vec::with_capacity(vertices.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point2::new(
                    -w + 2.0 * w * i as f64 / nx as f64,
                    -h + 2.0 * h * j as f64 / ny as f64,
                ));
                let mut on = Vec::new();
                if i == nx {
                    on.push(values[0]);
                }
                if j == ny {
                    on.push(values[1]);
                }
                if i == 0 {
                    on.push(values[2]);
                }
                if j == 0 {
                    on.push(values[3]);
                }
                dirichlet.push((!on.is_empty()).then(|| on.iter().sum::<f64>() / on.len() as f64));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Ok(Self {
            vertices,
            triangles,
            dirichlet,
        })
    }

    /// Concentric rings, ring `i` holding `6i` vertices, refined until every
    /// edge is at most `max_edge`.
    pub fn disk(radius: f64, value: f64, max_edge: f64) -> Result<Self> {
        if !(max_edge > 0.0 && radius > 0.0) {
            return Err(invalid("disk mesh needs positive radius and max_edge"));
        }
        let mut rings = ((radius / max_edge).ceil() as usize).max(1);
        loop {
            let m = Self::rings(radius, value, rings);
            if m.max_edge_length() <= max_edge {
                return Ok(m);
            }
            rings += (rings / 10).max(1);
        }
    }

    fn rings(radius: f64, value: f64, n: usize) -> Self {
        let mut vertices = vec![Point2::new(0.0, 0.0)];
        let mut dirichlet = vec![None];
        let mut start = vec![0usize];
        for i in 1..=n {
            start.push(vertices.len());
            let r = radius * i as f64 / n as f64;
            for j in 0..6 * i {
                let th = TAU * j as f64 / (6 * i) as f64;
                vertices.push(Point2::new(r * th.cos(), r * th.sin()));
                dirichlet.push((i == n).then_some(value));
            }
        }
        let mut triangles = Vec::new();
        for j in 0..6 {
            triangles.push([0, start[1] + j, start[1] + (j + 1) % 6]);
        }
        for i in 1..n {
            let (ma, mb) = (6 * i, 6 * (i + 1));
            let (sa, sb) = (start[i], start[i + 1]);
            let (mut a, mut b) = (0, 0);
            while a < ma || b < mb {
                let next_a = (a + 1) as f64 / ma as f64;
                let next_b = (b + 1) as f64 / mb as f64;
                if b == mb || (a < ma && next_a <= next_b) {
                    triangles.push([sa + a, sa + (a + 1) % ma, sb + b % mb]);
                    a += 1;
                } else {
                    triangles.push([sa + a % ma, sb + (b + 1) % mb, sb + b]);
                    b += 1;
                }
            }
        }
        let triangles = triangles.into_iter().map(|t| orient(&vertices, t)).collect();
        Self {
            vertices,
            triangles,
            dirichlet,
        }
    }

    /// The disk mesh mapped affinely onto `x²/a² + y²/b² ≤ 1`.
    pub fn ellipse(a: f64, b: f64, value: f64, max_edge: f64) -> Result<Self> {
        if !(a > b && b > 0.0) {
            return Err(invalid("ellipse mesh needs a > b > 0"));
        }
        let mut m = Self::disk(1.0, value, max_edge / a)?;
        for v in &mut m.vertices {
            *v = Point2::new(a * v.x, b * v.y);
        }
        Ok(m)
    }

    pub fn max_edge_length(&self) -> f64 {
        let v = &self.vertices;
        self.triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(i, j)| v[i].distance(v[j]))
            .fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| triangle_area(&self.vertices, *t)).sum()
    }

    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# helmtrial mesh v1")?;
        writeln!(w, "vertices {}", self.vertices.len())?;
        for (p, d) in self.vertices.iter().zip(&self.dirichlet) {
            match d {
                Some(v) => writeln!(w, "{} {} {}", p.x, p.y, v)?,
                None => writeln!(w, "{} {} -", p.x, p.y)?,
            }
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

pub(crate) fn triangle_area(v: &[Point2], t: [usize; 3]) -> f64 {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

/// Uniform bucket grid over the mesh bounding box.
pub struct Locator<'a> {
    mesh: &'a Mesh,
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> Locator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &mesh.vertices {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n_side = ((mesh.triangles.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let cell = ((hi.x - lo.x).max(hi.y - lo.y) / n_side as f64).max(1e-12);
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut loc = Self {
            mesh,
            origin: lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (ti, t) in mesh.triangles.iter().enumerate() {
            let pts = t.map(|i| mesh.vertices[i]);
            let (x0, y0) = loc.cell_of(Point2::new(
                pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
                pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min),
            ));
            let (x1, y1) = loc.cell_of(Point2::new(
                pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
                pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max),
            ));
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    loc.buckets[cy * nx + cx].push(ti);
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: Point2) -> (usize, usize) {
        let cx = ((p.x - self.origin.x) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = ((p.y - self.origin.y) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (cx, cy)
    }

    fn barycentric(&self, t: usize, p: Point2) -> [f64; 3] {
        let v = &self.mesh.vertices;
        let [i, j, k] = self.mesh.triangles[t];
        let (a, b, c) = (v[i], v[j], v[k]);
        let det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        let l1 = ((p.x - a.x) * (c.y - a.y) - (p.y - a.y) * (c.x - a.x)) / det;
        let l2 = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Containing triangle and barycentric weights. Points slightly outside
    /// the polygonal mesh (a curved boundary cut by straight edges) snap to
    /// the nearest nearby triangle.
    pub fn locate(&self, p: Point2) -> Option<(usize, [f64; 3])> {
        let (cx, cy) = self.cell_of(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for ring in 0..=1usize {
            let (x0, x1) = (cx.saturating_sub(ring), (cx + ring).min(self.nx - 1));
            let (y0, y1) = (cy.saturating_sub(ring), (cy + ring).min(self.ny - 1));
            for by in y0..=y1 {
                for bx in x0..=x1 {
                    for &t in &self.buckets[by * self.nx + bx] {
                        let l = self.barycentric(t, p);
                        let worst = l[0].min(l[1]).min(l[2]);
                        if worst >= -1e-12 {
                            return Some((t, l));
                        }
                        if best.as_ref().is_none_or(|b| worst > b.2) {
                            best = Some((t, l, worst));
                        }
                    }
                }
            }
        }
        best.filter(|b| b.2 > -0.5).map(|(t, l, _)| {
            let c = l.map(|v| v.max(0.0));
            let s = c[0] + c[1] + c[2];
            (t, c.map(|v| v / s))
        })
    }

    pub fn interpolate(&self, values: &[f64], p: Point2) -> Option<f64> {
        self.locate(p).map(|(t, l)| {
            let tri = self.mesh.triangles[t];
            l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
        })
    }
}
