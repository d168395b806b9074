use serde::{Deserialize, Serialize};

use super::{
    check_beta, circle_adf_t, ellipse_adf_t, equivalent_t, r_combine_t, Jet2, Point2, RCombine, Real,
    Segment, EPS_FLOOR,
};
use crate::error::{invalid, Error, Result};

/// Composable implicit distance field.
///
/// Build through the checked constructors; the enum is public so callers can
/// inspect a tree, but the invariants (`β ∈ (−1, 1)`, `R > 0`, `a > b > 0`,
/// `s ≥ 1` for [`AdfExpr::Equivalent`]) are only checked there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdfExpr {
    Segment(Segment),
    Circle {
        center: Point2,
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    RConj {
        lhs: Box<AdfExpr>,
        rhs: Box<AdfExpr>,
        beta: f64,
        s: u32,
    },
    RDisj {
        lhs: Box<AdfExpr>,
        rhs: Box<AdfExpr>,
        beta: f64,
        s: u32,
    },
    Equivalent {
        children: Vec<AdfExpr>,
        s: u32,
    },
}

impl AdfExpr {
    pub fn segment(p1: Point2, p2: Point2) -> Result<Self> {
        Segment::new(p1, p2).map(AdfExpr::Segment)
    }

    pub fn circle(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("circle radius must be positive, got {radius}")));
        }
        Ok(AdfExpr::Circle { center, radius })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > b && b > 0.0 && a.is_finite()) {
            return Err(invalid(format!("ellipse needs a > b > 0, got a={a}, b={b}")));
        }
        Ok(AdfExpr::Ellipse { a, b })
    }

    pub fn conj(lhs: AdfExpr, rhs: AdfExpr, beta: f64, s: u32) -> Result<Self> {
        check_beta(beta)?;
        Ok(AdfExpr::RConj {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            beta,
            s,
        })
    }

    pub fn disj(lhs: AdfExpr, rhs: AdfExpr, beta: f64, s: u32) -> Result<Self> {
        check_beta(beta)?;
        Ok(AdfExpr::RDisj {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            beta,
            s,
        })
    }

    pub fn equivalent(children: Vec<AdfExpr>, s: u32) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::EmptyInput("equivalent distance field needs children"));
        }
        if s < 1 {
            return Err(invalid("smoothness exponent s must be >= 1"));
        }
        Ok(AdfExpr::Equivalent { children, s })
    }

    /// Closed polygon through `vertices`, one segment per edge, combined with
    /// [`AdfExpr::equivalent`].
    pub fn polygon(vertices: &[Point2], s: u32) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(invalid("polygon needs at least three vertices"));
        }
        let sides = (0..vertices.len())
            .map(|i| AdfExpr::segment(vertices[i], vertices[(i + 1) % vertices.len()]))
            .collect::<Result<Vec<_>>>()?;
        AdfExpr::equivalent(sides, s)
    }

    pub fn eval(&self, p: Point2) -> f64 {
        self.eval_t(p.x, p.y, EPS_FLOOR)
    }

    pub fn eval_floored(&self, p: Point2, floor: f64) -> f64 {
        self.eval_t(p.x, p.y, floor)
    }

    pub fn eval_jet(&self, p: Point2) -> Result<Jet2> {
        self.eval_jet_floored(p, EPS_FLOOR)
    }

    /// Jet of the field at `p`. Refuses points where a primitive distance is
    /// within `floor` of zero, since the field has a kink or a removable
    /// singularity there.
    pub fn eval_jet_floored(&self, p: Point2, floor: f64) -> Result<Jet2> {
        if self.is_singular_at(p, floor) {
            return Err(Error::NonDifferentiable { x: p.x, y: p.y });
        }
        let j = self.eval_t(Jet2::var_x(p.x), Jet2::var_y(p.y), floor);
        if !j.is_finite() {
            return Err(Error::NonDifferentiable { x: p.x, y: p.y });
        }
        Ok(j)
    }

    pub(crate) fn eval_t<T: Real>(&self, x: T, y: T, floor: f64) -> T {
        match self {
            AdfExpr::Segment(seg) => seg.adf_at(x, y),
            AdfExpr::Circle { center, radius } => circle_adf_t(x, y, *center, *radius),
            AdfExpr::Ellipse { a, b } => ellipse_adf_t(x, y, *a, *b),
            AdfExpr::RConj { lhs, rhs, beta, s } => r_combine_t(
                RCombine::Conjunction,
                lhs.eval_t(x, y, floor),
                rhs.eval_t(x, y, floor),
                *beta,
                *s,
            ),
            AdfExpr::RDisj { lhs, rhs, beta, s } => r_combine_t(
                RCombine::Disjunction,
                lhs.eval_t(x, y, floor),
                rhs.eval_t(x, y, floor),
                *beta,
                *s,
            ),
            AdfExpr::Equivalent { children, s } => {
                let phis: Vec<T> = children.iter().map(|c| c.eval_t(x, y, floor)).collect();
                equivalent_t(&phis, *s, floor)
            }
        }
    }

    fn is_singular_at(&self, p: Point2, floor: f64) -> bool {
        match self {
            AdfExpr::Segment(seg) => seg.adf_at(p.x, p.y) <= floor,
            AdfExpr::Circle { .. } | AdfExpr::Ellipse { .. } => false,
            AdfExpr::RConj { lhs, rhs, .. } | AdfExpr::RDisj { lhs, rhs, .. } => {
                if lhs.is_singular_at(p, floor) || rhs.is_singular_at(p, floor) {
                    return true;
                }
                let (a, b) = (lhs.eval_floored(p, floor), rhs.eval_floored(p, floor));
                a * a + b * b <= floor * floor
            }
            AdfExpr::Equivalent { children, .. } => children
                .iter()
                .any(|c| c.is_singular_at(p, floor) || c.eval_floored(p, floor) <= floor),
        }
    }
}
