//! Linear (P1) finite element solution of the Dirichlet Helmholtz problem.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use super::mesh::{mesh_rule_edge, triangle_area, Locator, Mesh};
use crate::domains::Shape;
use crate::error::{invalid, Error, Result};
use crate::geometry::Point2;

/// Relative residual above which the factorised system is rejected.
const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemOptions {
    pub max_edge: f64,
}

impl FemOptions {
    /// The six-elements-per-wavelength edge divided by `refine`.
    pub fn for_frequency(c: f64, f: f64, refine: f64) -> Result<Self> {
        if !(c > 0.0 && f > 0.0 && refine >= 1.0) {
            return Err(invalid("mesh rule needs c > 0, f > 0 and refine >= 1"));
        }
        Ok(Self {
            max_edge: mesh_rule_edge(c, f) / refine,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FemStats {
    pub vertices: usize,
    pub triangles: usize,
    pub free_dofs: usize,
    pub max_edge: f64,
    /// `‖Ax − b‖ / ‖b‖` after refinement.
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
pub struct FemSolution {
    pub mesh: Mesh,
    pub values: Vec<f64>,
    pub stats: FemStats,
}

impl FemSolution {
    pub fn locator(&self) -> Locator<'_> {
        Locator::new(&self.mesh)
    }

    pub fn eval(&self, p: Point2) -> Option<f64> {
        self.locator().interpolate(&self.values, p)
    }
}

pub fn solve_shape(shape: &Shape, k: f64, opts: FemOptions) -> Result<FemSolution> {
    solve(Mesh::for_shape(shape, opts.max_edge)?, k)
}

/// Assembles stiffness minus `k²` times consistent mass, eliminates the
/// Dirichlet vertices and solves with a sparse LU.
pub fn solve(mesh: Mesh, k: f64) -> Result<FemSolution> {
    if !k.is_finite() || k < 0.0 {
        return Err(invalid("wavenumber must be finite and non-negative"));
    }
    let n = mesh.vertices.len();
    let mut free = vec![usize::MAX; n];
    let mut n_free = 0;
    for (i, d) in mesh.dirichlet.iter().enumerate() {
        if d.is_none() {
            free[i] = n_free;
            n_free += 1;
        }
    }
    let mut values: Vec<f64> = mesh.dirichlet.iter().map(|d| d.unwrap_or(0.0)).collect();
    if n_free == 0 {
        return finish(mesh, values, 0, 0.0);
    }

    let k2 = k * k;
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    let mut rhs = vec![0.0; n_free];
    for &t in &mesh.triangles {
        let area = triangle_area(&mesh.vertices, t);
        let p = t.map(|i| mesh.vertices[i]);
        // gradients of the barycentric basis are (b_i, c_i) / (2·area)
        let b = [p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y];
        let c = [p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x];
        for a in 0..3 {
            let ia = free[t[a]];
            if ia == usize::MAX {
                continue;
            }
            for e in 0..3 {
                let stiff = (b[a] * b[e] + c[a] * c[e]) / (4.0 * area);
                let mass = area / 12.0 * if a == e { 2.0 } else { 1.0 };
                let v = stiff - k2 * mass;
                match free[t[e]] {
                    usize::MAX => rhs[ia] -= v * values[t[e]],
                    je => triplets.push(Triplet::new(ia, je, v)),
                }
            }
        }
    }

    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n_free, n_free, &triplets)
        .map_err(|e| invalid(format!("sparse assembly failed: {e:?}")))?;
    let lu = a.sp_lu().map_err(|_| Error::SingularSystem { ratio: f64::INFINITY })?;
    let b = Col::from_fn(n_free, |i| rhs[i]);
    let mut x = lu.solve(&b);
    let b_norm = b.norm_l2().max(f64::MIN_POSITIVE);
    let mut rel = f64::INFINITY;
    for _ in 0..3 {
        let r = &b - &a * &x;
        rel = r.norm_l2() / b_norm;
        if !rel.is_finite() || rel < 1e-14 {
            break;
        }
        x += lu.solve(&r);
    }
    if !rel.is_finite() || rel > RESIDUAL_LIMIT || (0..n_free).any(|i| !x[i].is_finite()) {
        return Err(Error::SingularSystem { ratio: rel });
    }
    for (i, slot) in free.iter().enumerate() {
        if *slot != usize::MAX {
            values[i] = x[*slot];
        }
    }
    finish(mesh, values, n_free, rel)
}

fn finish(mesh: Mesh, values: Vec<f64>, free_dofs: usize, relative_residual: f64) -> Result<FemSolution> {
    let stats = FemStats {
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        free_dofs,
        max_edge: mesh.max_edge_length(),
        relative_residual,
    };
    Ok(FemSolution { mesh, values, stats })
}
