//! Trial functions that satisfy Dirichlet data by construction.
//!
//! `ψ_t = Σ W_i ψ_i + φ ψ̂`, where each boundary piece carries a constant value
//! `ψ_i`, the weights `W_i` interpolate between pieces and `φ` is a distance
//! field vanishing on the whole boundary. Whatever the network `ψ̂` does, `ψ_t`
//! takes the prescribed values on the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{AdfExpr, Jet2, Point2, Real, EPS_FLOOR};
use crate::network::MlpParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPiece {
    pub adf: AdfExpr,
    pub value: f64,
}

/// How boundary values are blended into the interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Inverse-distance interpolation between several pieces.
    Shepard,
    /// `W = 1 − φ` for a single closed boundary.
    Complement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialForm {
    pieces: Vec<BoundaryPiece>,
    distance: AdfExpr,
    weighting: Weighting,
    floor: f64,
}

/// `W_i = Π_{j≠i} φ_j / Σ_k Π_{j≠k} φ_j` with every `φ` floored at `floor`.
pub fn shepard_weights(phis: &[f64], floor: f64) -> Result<Vec<f64>> {
    if phis.is_empty() {
        return Err(Error::EmptyInput("shepard weights need at least one distance"));
    }
    if phis.iter().any(|&p| p < 0.0 || p.is_nan()) {
        return Err(invalid("distances must be non-negative"));
    }
    Ok(shepard_t(phis, floor))
}

fn shepard_t<T: Real>(phis: &[T], floor: f64) -> Vec<T> {
    let floored: Vec<T> = phis
        .iter()
        .map(|&p| if p.value() < floor { T::constant(floor) } else { p })
        .collect();
    let products: Vec<T> = (0..floored.len())
        .map(|i| {
            floored
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(T::constant(1.0), |acc, (_, &p)| acc * p)
        })
        .collect();
    let total = products[1..].iter().fold(products[0], |acc, &p| acc + p);
    products.into_iter().map(|p| p / total).collect()
}

/// `1 − φ_e` for a circle of radius `radius`.
pub fn circle_weight(p: Point2, center: Point2, radius: f64) -> f64 {
    1.0 - crate::geometry::circle_adf(p, center, radius)
}

impl TrialForm {
    pub fn new(pieces: Vec<BoundaryPiece>, distance: AdfExpr, weighting: Weighting) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::EmptyInput("trial form needs at least one boundary piece"));
        }
        if weighting == Weighting::Complement && pieces.len() != 1 {
            return Err(invalid("complement weighting takes exactly one boundary piece"));
        }
        Ok(Self {
            pieces,
            distance,
            weighting,
            floor: EPS_FLOOR,
        })
    }

    /// Axis-aligned rectangle `[−w, w] × [−h, h]` with one value per side,
    /// ordered `x = w`, `y = h`, `x = −w`, `y = −h`.
    pub fn rectangle(half_width: f64, half_height: f64, values: [f64; 4], s: u32) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) {
            return Err(invalid("rectangle half extents must be positive"));
        }
        let (w, h) = (half_width, half_height);
        let corners = [
            Point2::new(w, -h),
            Point2::new(w, h),
            Point2::new(-w, h),
            Point2::new(-w, -h),
        ];
        let pieces = (0..4)
            .map(|i| {
                Ok(BoundaryPiece {
                    adf: AdfExpr::segment(corners[i], corners[(i + 1) % 4])?,
                    value: values[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let distance = AdfExpr::equivalent(pieces.iter().map(|p| p.adf.clone()).collect(), s)?;
        Self::new(pieces, distance, Weighting::Shepard)
    }

    pub fn circle(center: Point2, radius: f64, value: f64) -> Result<Self> {
        let adf = AdfExpr::circle(center, radius)?;
        Self::new(
            vec![BoundaryPiece { adf: adf.clone(), value }],
            adf,
            Weighting::Complement,
        )
    }

    pub fn ellipse(a: f64, b: f64, value: f64) -> Result<Self> {
        let adf = AdfExpr::ellipse(a, b)?;
        Self::new(
            vec![BoundaryPiece { adf: adf.clone(), value }],
            adf,
            Weighting::Complement,
        )
    }

    pub fn pieces(&self) -> &[BoundaryPiece] {
        &self.pieces
    }

    pub fn distance(&self) -> &AdfExpr {
        &self.distance
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    fn weights_t<T: Real>(&self, x: T, y: T) -> Vec<T> {
        match self.weighting {
            Weighting::Shepard => {
                let phis: Vec<T> = self.pieces.iter().map(|p| p.adf.eval_t(x, y, self.floor)).collect();
                shepard_t(&phis, self.floor)
            }
            Weighting::Complement => {
                vec![T::constant(1.0) - self.pieces[0].adf.eval_t(x, y, self.floor)]
            }
        }
    }

    fn boundary_part_t<T: Real>(&self, x: T, y: T) -> T {
        self.weights_t(x, y)
            .into_iter()
            .zip(&self.pieces)
            .fold(T::constant(0.0), |acc, (w, p)| acc + w * p.value)
    }

    pub fn weights(&self, p: Point2) -> Vec<f64> {
        self.weights_t(p.x, p.y)
    }

    /// `Σ W_i ψ_i` and `φ` at `p`.
    pub fn geometry(&self, p: Point2) -> (f64, f64) {
        (
            self.boundary_part_t(p.x, p.y),
            self.distance.eval_floored(p, self.floor),
        )
    }

    /// Jets of `Σ W_i ψ_i` and `φ`. Fails inside the guard region of any
    /// boundary primitive.
    pub fn geometry_jets(&self, p: Point2) -> Result<(Jet2, Jet2)> {
        if self.weighting == Weighting::Shepard {
            for piece in &self.pieces {
                piece.adf.eval_jet_floored(p, self.floor)?;
            }
        }
        let phi = self.distance.eval_jet_floored(p, self.floor)?;
        let g = self.boundary_part_t(Jet2::var_x(p.x), Jet2::var_y(p.y));
        if !g.is_finite() {
            return Err(Error::NonDifferentiable { x: p.x, y: p.y });
        }
        Ok((g, phi))
    }

    /// Trial value given the network output `net` at `p`.
    pub fn value_with(&self, p: Point2, net: f64) -> f64 {
        let (g, phi) = self.geometry(p);
        g + phi * net
    }

    pub fn jet_with(&self, p: Point2, net: Jet2) -> Result<Jet2> {
        let (g, phi) = self.geometry_jets(p)?;
        Ok(g + phi * net)
    }

    pub fn eval(&self, net: &MlpParams, p: Point2) -> f64 {
        self.value_with(p, net.forward(p))
    }

    pub fn eval_jet(&self, net: &MlpParams, p: Point2) -> Result<Jet2> {
        self.jet_with(p, net.forward_jet(p))
    }
}
