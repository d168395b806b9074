//! Second-order jets in two spatial variables.
//!
//! A [`Jet2`] carries a scalar field and its first and second partial
//! derivatives at a point. Arithmetic on jets applies the chain and product
//! rules exactly, so any expression written against [`Real`] yields its
//! Laplacian without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar type accepted by the geometry and network evaluators.
///
/// Implemented by `f64` (value path) and [`Jet2`] (derivative path).
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: f64) -> Self;
    fn recip(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    #[inline]
    fn recip(self) -> Self {
        f64::recip(self)
    }
}

/// Value, gradient and Hessian of a scalar field at one point.
///
/// The mixed derivative is propagated so that compositions stay exact, but
/// only the pure second derivatives are part of the public surface.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
    pub(crate) dxy: f64,
}

impl Jet2 {
    pub fn new(v: f64, dx: f64, dy: f64, dxx: f64, dyy: f64) -> Self {
        Self {
            v,
            dx,
            dy,
            dxx,
            dyy,
            dxy: 0.0,
        }
    }

    /// The coordinate function `x` seeded at `x`.
    pub fn var_x(x: f64) -> Self {
        Self {
            v: x,
            dx: 1.0,
            ..Self::default()
        }
    }

    /// The coordinate function `y` seeded at `y`.
    pub fn var_y(y: f64) -> Self {
        Self {
            v: y,
            dy: 1.0,
            ..Self::default()
        }
    }

    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.dx.is_finite()
            && self.dy.is_finite()
            && self.dxx.is_finite()
            && self.dyy.is_finite()
            && self.dxy.is_finite()
    }

    /// Applies a univariate function given its value and first two derivatives
    /// at `self.v`.
    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Self {
            v: f,
            dx: df * self.dx,
            dy: df * self.dy,
            dxx: d2f * self.dx * self.dx + df * self.dxx,
            dxy: d2f * self.dx * self.dy + df * self.dxy,
            dyy: d2f * self.dy * self.dy + df * self.dyy,
        }
    }
}

impl Add for Jet2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            dx: self.dx - o.dx,
            dy: self.dy - o.dy,
            dxx: self.dxx - o.dxx,
            dxy: self.dxy - o.dxy,
            dyy: self.dyy - o.dyy,
        }
    }
}

impl Mul for Jet2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Div for Jet2 {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let v = self.v / o.v;
        let dx = (self.dx - v * o.dx) / o.v;
        let dy = (self.dy - v * o.dy) / o.v;
        Self {
            v,
            dx,
            dy,
            dxx: (self.dxx - 2.0 * dx * o.dx - v * o.dxx) / o.v,
            dxy: (self.dxy - dx * o.dy - dy * o.dx - v * o.dxy) / o.v,
            dyy: (self.dyy - 2.0 * dy * o.dy - v * o.dyy) / o.v,
        }
    }
}

impl Neg for Jet2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Add<f64> for Jet2 {
    type Output = Self;
    #[inline]
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Self;
    #[inline]
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Self;
    #[inline]
    fn mul(self, c: f64) -> Self {
        Self {
            v: self.v * c,
            dx: self.dx * c,
            dy: self.dy * c,
            dxx: self.dxx * c,
            dxy: self.dxy * c,
            dyy: self.dyy * c,
        }
    }
}

impl Div<f64> for Jet2 {
    type Output = Self;
    #[inline]
    fn div(self, c: f64) -> Self {
        Self {
            v: self.v / c,
            dx: self.dx / c,
            dy: self.dy / c,
            dxx: self.dxx / c,
            dxy: self.dxy / c,
            dyy: self.dyy / c,
        }
    }
}

impl Real for Jet2 {
    fn constant(v: f64) -> Self {
        Self {
            v,
            ..Self::default()
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = (self.v.sin(), self.v.cos());
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = (self.v.sin(), self.v.cos());
        self.chain(c, -s, -c)
    }
    fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let nf = n as f64;
                let p2 = self.v.powi(n - 2);
                self.chain(self.v.powi(n), nf * p2 * self.v, nf * (nf - 1.0) * p2)
            }
        }
    }
    fn powf(self, e: f64) -> Self {
        let p2 = self.v.powf(e - 2.0);
        self.chain(self.v.powf(e), e * p2 * self.v, e * (e - 1.0) * p2)
    }
    fn recip(self) -> Self {
        let r = self.v.recip();
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}
