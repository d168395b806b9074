//! Approximate distance fields and their R-function compositions.
//!
//! Every primitive is written once against [`Real`], so the same code serves
//! plain evaluation (`f64`) and exact second-order differentiation
//! ([`Jet2`]).

mod expr;
mod jet;

pub use expr::AdfExpr;
pub use jet::{Jet2, Real};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Floor applied to primitive distances inside Shepard denominators and the
/// equivalent distance field.
pub const EPS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A straight boundary piece between two distinct points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    p1: Point2,
    p2: Point2,
    len: f64,
}

impl Segment {
    pub fn new(p1: Point2, p2: Point2) -> Result<Self> {
        let len = p1.distance(p2);
        if !(p1.x.is_finite() && p1.y.is_finite() && p2.x.is_finite() && p2.y.is_finite()) {
            return Err(invalid("segment endpoints must be finite"));
        }
        if len <= 0.0 {
            return Err(invalid("segment endpoints must differ"));
        }
        Ok(Self { p1, p2, len })
    }

    pub fn p1(&self) -> Point2 {
        self.p1
    }

    pub fn p2(&self) -> Point2 {
        self.p2
    }

    pub fn length(&self) -> f64 {
        self.len
    }

    pub fn midpoint(&self) -> Point2 {
        Point2::new(0.5 * (self.p1.x + self.p2.x), 0.5 * (self.p1.y + self.p2.y))
    }

    /// Signed distance to the supporting line, normalized by the length.
    pub fn signed_distance_at<T: Real>(&self, x: T, y: T) -> T {
        let (x1, y1) = (self.p1.x, self.p1.y);
        let (x2, y2) = (self.p2.x, self.p2.y);
        ((x - x1) * (y2 - y1) - (y - y1) * (x2 - x1)) / self.len
    }

    /// Disk of radius `L/2` about the midpoint: positive inside, zero on the
    /// circle through both endpoints.
    pub fn trimming_at<T: Real>(&self, x: T, y: T) -> T {
        let c = self.midpoint();
        let dx = x - c.x;
        let dy = y - c.y;
        let half = 0.5 * self.len;
        (-(dx * dx + dy * dy) + half * half) / self.len
    }

    /// Distance field vanishing exactly on the closed segment.
    pub fn adf_at<T: Real>(&self, x: T, y: T) -> T {
        let h = self.signed_distance_at(x, y);
        let t = self.trimming_at(x, y);
        let h2 = h * h;
        let q = ((t * t + h2 * h2).sqrt() - t) * 0.5;
        (h2 + q * q).sqrt()
    }
}

pub fn signed_distance(p: Point2, seg: &Segment) -> f64 {
    seg.signed_distance_at(p.x, p.y)
}

pub fn trimming(p: Point2, seg: &Segment) -> f64 {
    seg.trimming_at(p.x, p.y)
}

pub fn segment_adf(p: Point2, seg: &Segment) -> f64 {
    seg.adf_at(p.x, p.y)
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > -1.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("beta = {beta} outside (-1, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RCombine {
    Conjunction,
    Disjunction,
}

pub(crate) fn r_combine_t<T: Real>(op: RCombine, w1: T, w2: T, beta: f64, s: u32) -> T {
    let root = (w1 * w1 + w2 * w2 - w1 * w2 * (2.0 * beta)).sqrt();
    let base = match op {
        RCombine::Conjunction => (w1 + w2 + root) / (1.0 + beta),
        RCombine::Disjunction => (w1 + w2 - root) / (1.0 + beta),
    };
    match s {
        0 => base,
        2 => base * (w1 * w1 + w2 * w2),
        _ => base * (w1 * w1 + w2 * w2).powf(0.5 * s as f64),
    }
}

/// `(ω1 + ω2 + sqrt(ω1² + ω2² − 2βω1ω2)) / (1 + β)`.
pub fn r_conjunction(w1: f64, w2: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(r_combine_t(RCombine::Conjunction, w1, w2, beta, 0))
}

/// `(ω1 + ω2 − sqrt(ω1² + ω2² − 2βω1ω2)) / (1 + β)`.
pub fn r_disjunction(w1: f64, w2: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(r_combine_t(RCombine::Disjunction, w1, w2, beta, 0))
}

/// β-composition scaled by `(ω1² + ω2²)^{s/2}`, which makes it `s` times
/// differentiable at the origin.
pub fn r_smooth(op: RCombine, w1: f64, w2: f64, beta: f64, s: u32) -> Result<f64> {
    check_beta(beta)?;
    Ok(r_combine_t(op, w1, w2, beta, s))
}

/// Algebraic max/min: `½(ω1 + ω2 ± |ω1 − ω2|)`.
pub fn max_min_boolean(w1: f64, w2: f64) -> (f64, f64) {
    let d = (w1 - w2).abs();
    (0.5 * (w1 + w2 + d), 0.5 * (w1 + w2 - d))
}

pub(crate) fn circle_adf_t<T: Real>(x: T, y: T, center: Point2, radius: f64) -> T {
    let dx = x - center.x;
    let dy = y - center.y;
    (-(dx * dx + dy * dy) + radius * radius) / (2.0 * radius)
}

pub(crate) fn ellipse_adf_t<T: Real>(x: T, y: T, a: f64, b: f64) -> T {
    (-(x * x / (a * a) + y * y / (b * b)) + 1.0) * 0.5
}

/// `(R² − |p − c|²) / 2R`: zero on the circle, positive inside.
pub fn circle_adf(p: Point2, center: Point2, radius: f64) -> f64 {
    circle_adf_t(p.x, p.y, center, radius)
}

/// `(1 − x²/a² − y²/b²) / 2` for an origin-centred, axis-aligned ellipse.
pub fn ellipse_adf(p: Point2, a: f64, b: f64) -> f64 {
    ellipse_adf_t(p.x, p.y, a, b)
}

pub(crate) fn equivalent_t<T: Real>(phis: &[T], s: u32, floor: f64) -> T {
    if phis.iter().any(|p| p.value() <= floor) {
        return T::constant(0.0);
    }
    match s {
        1 => {
            let mut acc = phis[0].recip();
            for p in &phis[1..] {
                acc = acc + p.recip();
            }
            acc.recip()
        }
        _ => {
            let si = s as i32;
            let mut acc = phis[0].powi(-si);
            for p in &phis[1..] {
                acc = acc + p.powi(-si);
            }
            acc.powf(-1.0 / s as f64)
        }
    }
}

/// Equivalent distance `(Σ φᵢ^{-s})^{-1/s}`, exactly zero as soon as one
/// `φᵢ ≤ EPS_FLOOR`.
pub fn equivalent_adf(phis: &[f64], s: u32) -> Result<f64> {
    if phis.is_empty() {
        return Err(crate::Error::EmptyInput("equivalent_adf needs at least one distance"));
    }
    if s < 1 {
        return Err(invalid("smoothness exponent s must be >= 1"));
    }
    if let Some(p) = phis.iter().find(|p| !(**p >= 0.0)) {
        return Err(invalid(format!("distances must be non-negative, got {p}")));
    }
    Ok(equivalent_t(phis, s, EPS_FLOOR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn x_axis() -> Segment {
        Segment::new(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn signed_distance_examples() {
        let s = x_axis();
        assert_eq!(signed_distance(Point2::new(0.0, 0.0), &s), 0.0);
        assert_abs_diff_eq!(signed_distance(Point2::new(0.0, 1.0), &s), -1.0);
        assert_abs_diff_eq!(signed_distance(Point2::new(0.0, -1.0), &s), 1.0);
    }

    #[test]
    fn trimming_examples() {
        let s = x_axis();
        assert_abs_diff_eq!(trimming(Point2::new(0.0, 0.0), &s), 0.5);
        assert_abs_diff_eq!(trimming(Point2::new(1.0, 0.0), &s), 0.0);
        assert_abs_diff_eq!(trimming(Point2::new(0.0, 1.0), &s), 0.0);
    }

    #[test]
    fn segment_adf_examples() {
        let s = x_axis();
        assert_eq!(segment_adf(Point2::new(0.0, 0.0), &s), 0.0);
        assert_abs_diff_eq!(segment_adf(Point2::new(0.0, 1.0), &s), 1.25f64.sqrt(), epsilon = 1e-15);
        let side = Segment::new(Point2::new(1.0, -1.0), Point2::new(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(segment_adf(Point2::new(0.0, 0.0), &side), 1.118034, epsilon = 1e-6);
    }

    #[test]
    fn segment_adf_zero_on_closed_segment_only() {
        let s = x_axis();
        for i in 0..=20 {
            let x = -1.0 + 0.1 * i as f64;
            assert_eq!(segment_adf(Point2::new(x, 0.0), &s), 0.0);
        }
        // on the supporting line but past the endpoints
        assert!(segment_adf(Point2::new(1.5, 0.0), &s) > 0.0);
        assert!(segment_adf(Point2::new(-3.0, 0.0), &s) > 0.0);
    }

    #[test]
    fn degenerate_segment_rejected() {
        assert!(Segment::new(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn r_function_examples() {
        assert_abs_diff_eq!(r_disjunction(3.0, 4.0, 0.0).unwrap(), 2.0);
        assert_abs_diff_eq!(r_conjunction(3.0, 4.0, 0.0).unwrap(), 12.0);
        assert_eq!(r_conjunction(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(r_disjunction(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(r_conjunction(1.0, 2.0, 1.0).is_err());
        assert!(r_disjunction(1.0, 2.0, -1.5).is_err());
    }

    #[test]
    fn r_smooth_examples() {
        assert_abs_diff_eq!(r_smooth(RCombine::Conjunction, 3.0, 4.0, 0.0, 0).unwrap(), 12.0);
        assert_abs_diff_eq!(r_smooth(RCombine::Disjunction, 3.0, 4.0, 0.0, 2).unwrap(), 50.0);
        assert_abs_diff_eq!(r_smooth(RCombine::Disjunction, 3.0, 4.0, 0.0, 1).unwrap(), 10.0);
        assert_eq!(r_smooth(RCombine::Conjunction, 0.0, 0.0, 0.0, 3).unwrap(), 0.0);
        assert_eq!(r_smooth(RCombine::Disjunction, 0.0, 0.0, 0.3, 2).unwrap(), 0.0);
    }

    #[test]
    fn max_min_examples() {
        assert_eq!(max_min_boolean(1.0, 2.0), (2.0, 1.0));
        assert_eq!(max_min_boolean(-3.0, 5.0), (5.0, -3.0));
        assert_eq!(max_min_boolean(7.0, 7.0), (7.0, 7.0));
    }

    // The radicand keeps a 2(1-β)ω1ω2 term, so near-equal pairs converge only
    // like sqrt(1-β); the 1e-4 agreement holds once |ω1-ω2| >= 1% of min.
    #[test]
    fn conjunction_near_beta_one_tends_to_max() {
        let beta = 0.999999;
        for (a, b) in [(0.3, 0.7), (2.0, 1.0), (5.0, 5.05), (1e-3, 4.0)] {
            let c = r_conjunction(a, b, beta).unwrap();
            let m = f64::max(a, b);
            assert!((c - m).abs() / m <= 1e-4, "{a},{b}: {c} vs {m}");
        }
    }

    #[test]
    fn circle_and_ellipse_examples() {
        let o = Point2::new(0.0, 0.0);
        assert_abs_diff_eq!(circle_adf(o, o, 1.0), 0.5);
        assert_abs_diff_eq!(circle_adf(Point2::new(0.6, 0.8), o, 1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(circle_adf(Point2::new(2.0, 0.0), o, 1.0), -1.5);
        assert_abs_diff_eq!(ellipse_adf(o, 1.0, 0.5), 0.5);
        assert_abs_diff_eq!(ellipse_adf(Point2::new(1.0, 0.0), 1.0, 0.5), 0.0);
        assert_abs_diff_eq!(ellipse_adf(Point2::new(0.5, 0.25), 1.0, 0.5), 0.25);
    }

    #[test]
    fn equivalent_adf_examples() {
        let phi = 1.25f64.sqrt();
        assert_abs_diff_eq!(equivalent_adf(&[phi; 4], 1).unwrap(), 0.279508, epsilon = 1e-6);
        assert_eq!(equivalent_adf(&[0.3, 0.0, 0.8], 1).unwrap(), 0.0);
        assert_eq!(equivalent_adf(&[0.42], 1).unwrap(), 0.42);
        assert!(equivalent_adf(&[], 1).is_err());
        assert!(equivalent_adf(&[0.1], 0).is_err());
    }

    proptest! {
        #[test]
        fn max_min_identity(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (mx, mn) = max_min_boolean(a, b);
            let tol = 4.0 * f64::EPSILON * a.abs().max(b.abs());
            prop_assert!((mx - a.max(b)).abs() <= tol);
            prop_assert!((mn - a.min(b)).abs() <= tol);
        }

        #[test]
        fn equivalent_is_dominated(phis in proptest::collection::vec(1e-6f64..10.0, 1..6), s in 1u32..5) {
            let e = equivalent_adf(&phis, s).unwrap();
            let m = phis.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(e > 0.0);
            prop_assert!(e <= m * (1.0 + 1e-12));
        }

        #[test]
        fn signed_distance_is_antisymmetric(x in -3.0f64..3.0, y in 0.0f64..3.0) {
            let s = x_axis();
            let up = signed_distance(Point2::new(x, y), &s);
            let down = signed_distance(Point2::new(x, -y), &s);
            prop_assert!((up + down).abs() < 1e-14);
        }
    }
}
