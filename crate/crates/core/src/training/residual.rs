//! Residuals that are affine in the network jet.
//!
//! Both the soft-constraint terms and the trial-form PDE residual take the
//! shape `r = c0 + cv·ψ̂ + cx·ψ̂_x + cy·ψ̂_y + cxx·ψ̂_xx + cyy·ψ̂_yy` with
//! coefficients that only depend on geometry. Precomputing them once turns
//! every loss evaluation into a batched network pass plus a dot product.

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::network::{param_gradient, JetAdjoint, MlpParams, NetOutput};
use crate::trial::TrialForm;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Coeffs {
    c0: f64,
    cv: f64,
    cx: f64,
    cy: f64,
    cxx: f64,
    cyy: f64,
}

impl Coeffs {
    fn apply(&self, o: &NetOutput) -> f64 {
        self.c0 + self.cv * o.v + self.cx * o.dx + self.cy * o.dy + self.cxx * o.dxx + self.cyy * o.dyy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet {
    points: Vec<Point2>,
    coeffs: Vec<Coeffs>,
}

impl ResidualSet {
    fn build(points: Vec<Point2>, coeffs: Vec<Coeffs>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("residual set needs at least one point"));
        }
        Ok(Self { points, coeffs })
    }

    /// `ψ̂_xx + ψ̂_yy + k²ψ̂` at each point.
    pub fn helmholtz(points: &[Point2], k: f64) -> Result<Self> {
        let c = Coeffs {
            cv: k * k,
            cxx: 1.0,
            cyy: 1.0,
            ..Coeffs::default()
        };
        Self::build(points.to_vec(), vec![c; points.len()])
    }

    /// `ψ̂ − ψ_b` at each boundary point.
    pub fn dirichlet(points: &[Point2], values: &[f64]) -> Result<Self> {
        let coeffs = values
            .iter()
            .map(|&v| Coeffs {
                c0: -v,
                cv: 1.0,
                ..Coeffs::default()
            })
            .collect();
        Self::build(points.to_vec(), coeffs)
    }

    /// Helmholtz residual of `g + φψ̂` where `g` and `φ` come from the trial
    /// form.
    pub fn trial(form: &TrialForm, points: &[Point2], k: f64) -> Result<Self> {
        let k2 = k * k;
        let coeffs = points
            .iter()
            .map(|&p| {
                let (g, phi) = form.geometry_jets(p)?;
                Ok(Coeffs {
                    c0: g.laplacian() + k2 * g.v,
                    cv: phi.laplacian() + k2 * phi.v,
                    cx: 2.0 * phi.dx,
                    cy: 2.0 * phi.dy,
                    cxx: phi.v,
                    cyy: phi.v,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(points.to_vec(), coeffs)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn residuals(&self, params: &MlpParams) -> Vec<f64> {
        crate::network::batch::forward_batch(params, &self.points)
            .iter()
            .zip(&self.coeffs)
            .map(|(o, c)| c.apply(o))
            .collect()
    }

    /// Mean squared residual.
    pub fn loss(&self, params: &MlpParams) -> f64 {
        let n = self.len() as f64;
        self.residuals(params).iter().map(|r| r * r).sum::<f64>() / n
    }

    /// Mean squared residual and its gradient with respect to the flat
    /// parameters.
    pub fn loss_and_grad(&self, params: &MlpParams) -> (f64, Vec<f64>) {
        let inv_n = 1.0 / self.len() as f64;
        param_gradient(params, &self.points, |off, out, adj| {
            let mut acc = 0.0;
            for ((o, a), c) in out.iter().zip(adj.iter_mut()).zip(&self.coeffs[off..]) {
                let r = c.apply(o);
                acc += r * r;
                let w = 2.0 * r * inv_n;
                *a = JetAdjoint {
                    v: w * c.cv,
                    dx: w * c.cx,
                    dy: w * c.cy,
                    dxx: w * c.cxx,
                    dyy: w * c.cyy,
                };
            }
            acc * inv_n
        })
    }
}
