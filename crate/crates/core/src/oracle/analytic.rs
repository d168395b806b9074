//! Closed-form reference fields: an eigenfunction series for rectangles with
//! piecewise-constant Dirichlet data and the Bessel solution on a disk.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point2;

/// Odd terms kept by default in each side expansion.
pub const DEFAULT_TERMS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Upper bound on the magnitude of the discarded terms; infinite on a
    /// boundary edge, where the expansion converges only conditionally.
    pub tail_bound: f64,
}

/// Rectangle `[−w, w] × [−h, h]` with a constant value on each side, sides
/// ordered `x = w`, `y = h`, `x = −w`, `y = −h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectSeries {
    w: f64,
    h: f64,
    values: [f64; 4],
    k: f64,
    n_terms: usize,
}

/// `S(t) / S(T)` for the odd solution `S` of `a'' = (μ² − k²) a`.
fn ratio(mu: f64, k: f64, t: f64, big_t: f64) -> f64 {
    let q = mu * mu - k * k;
    if q > 0.0 {
        let kappa = q.sqrt();
        let num = -(-2.0 * kappa * t).exp_m1();
        let den = -(-2.0 * kappa * big_t).exp_m1();
        (kappa * (t - big_t)).exp() * num / den
    } else if q < 0.0 {
        let beta = (-q).sqrt();
        (beta * t).sin() / (beta * big_t).sin()
    } else {
        t / big_t
    }
}

impl RectSeries {
    pub fn new(half_width: f64, half_height: f64, values: [f64; 4], k: f64, n_terms: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) {
            return Err(invalid("rectangle half extents must be positive"));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(invalid("wavenumber must be finite and non-negative"));
        }
        if n_terms == 0 {
            return Err(invalid("series needs at least one term"));
        }
        check_rect_resonance(half_width, half_height, k)?;
        Ok(Self {
            w: half_width,
            h: half_height,
            values,
            k,
            n_terms,
        })
    }

    pub fn eval(&self, p: Point2) -> SeriesValue {
        let (w, h) = (self.w, self.h);
        // (value, distance along the normal from the far side, side length
        // across, tangential coordinate from the side start, side length)
        let sides = [
            (self.values[0], p.x + w, 2.0 * w, p.y + h, 2.0 * h),
            (self.values[1], p.y + h, 2.0 * h, p.x + w, 2.0 * w),
            (self.values[2], w - p.x, 2.0 * w, p.y + h, 2.0 * h),
            (self.values[3], h - p.y, 2.0 * h, p.x + w, 2.0 * w),
        ];
        let mut value = 0.0;
        let mut tail = 0.0;
        for (c, t, big_t, s, len) in sides {
            if c == 0.0 {
                continue;
            }
            let mut n = 1;
            let mut acc = 0.0;
            for _ in 0..self.n_terms {
                let nf = n as f64;
                let mu = nf * PI / len;
                acc += 4.0 * c / (nf * PI) * ratio(mu, self.k, t, big_t) * (mu * s).sin();
                n += 2;
            }
            value += acc;
            tail += self.tail(c, n, t, big_t, len);
        }
        SeriesValue {
            value,
            tail_bound: tail,
        }
    }

    /// Bounds `Σ_{m ≥ n, odd} 4|c|/(mπ) · S(t)/S(T)` using `κ_m ≥ ρ μ_m`.
    fn tail(&self, c: f64, n: usize, t: f64, big_t: f64, len: f64) -> f64 {
        let d = big_t - t;
        let mu = n as f64 * PI / len;
        if d <= 0.0 || mu <= self.k {
            return f64::INFINITY;
        }
        let rho = (1.0 - (self.k / mu).powi(2)).sqrt();
        let step = rho * 2.0 * PI / len;
        let lead = 4.0 * c.abs() / (n as f64 * PI) * (-rho * mu * d).exp();
        lead / (-(-step * d).exp_m1()) / (-(-2.0 * rho * mu * big_t).exp_m1())
    }
}

/// Rejects `k²` within a relative `1e-6` of a Dirichlet eigenvalue of the
/// rectangle.
pub fn check_rect_resonance(half_width: f64, half_height: f64, k: f64) -> Result<()> {
    let k2 = k * k;
    let (a, b) = (PI / (2.0 * half_width), PI / (2.0 * half_height));
    let max_n = (k / b).ceil() as usize + 1;
    for n in 1..=max_n {
        let mu2 = (n as f64 * b).powi(2);
        let m = ((k2 - mu2).max(0.0).sqrt() / a).round().max(1.0) as usize;
        for m in [m.saturating_sub(1).max(1), m, m + 1] {
            let lam = mu2 + (m as f64 * a).powi(2);
            if (k2 - lam).abs() <= 1e-6 * lam {
                return Err(Error::NearResonance {
                    k,
                    detail: format!("k² = {k2} is within 1e-6 of rectangle eigenvalue ({n}, {m}) = {lam}"),
                });
            }
        }
    }
    Ok(())
}

/// Reference field for the rectangle with the given side values.
pub fn rect_series(p: Point2, k: f64, values: [f64; 4], n_terms: usize) -> Result<SeriesValue> {
    Ok(RectSeries::new(1.0, 1.0, values, k, n_terms)?.eval(p))
}

/// Bessel function of the first kind of order zero.
///
/// Power series below 8, Miller's backward recurrence (normalized by
/// `J₀ + 2ΣJ₂ₖ = 1`) up to 1000, and the Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 8.0 {
        let q = -(x * x) / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..60 {
            term *= q / (m * m) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else if x < 1000.0 {
        let start = (x + 30.0 + 12.0 * x.cbrt()) as usize;
        let start = start + start % 2;
        let (mut jp1, mut j) = (0.0, 1e-30);
        let mut norm = 0.0;
        let mut j0 = 0.0;
        for n in (1..=start).rev() {
            let jm1 = 2.0 * n as f64 / x * j - jp1;
            jp1 = j;
            j = jm1;
            if (n - 1) % 2 == 0 && n > 1 {
                norm += 2.0 * j;
            }
            if j.abs() > 1e250 {
                j *= 1e-250;
                jp1 *= 1e-250;
                norm *= 1e-250;
            }
            if n == 1 {
                j0 = j;
            }
        }
        j0 / (norm + j0)
    } else {
        // P and Q of the Hankel expansion with ν = 0
        let (mut p, mut q) = (0.0, 0.0);
        let mut t = 1.0;
        for k in 0..16 {
            if k > 0 {
                t *= ((2 * k - 1) as f64).powi(2) / (k as f64 * 8.0 * x);
            }
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * t;
            } else {
                q -= sign * t;
            }
        }
        let chi = x - PI / 4.0;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// `ψ_R · J₀(k r) / J₀(k R)`.
pub fn circle_bessel(r: f64, k: f64, radius: f64, value: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(invalid("circle radius must be positive"));
    }
    if !(0.0..=radius * (1.0 + 1e-12)).contains(&r) {
        return Err(invalid(format!("radius {r} outside [0, {radius}]")));
    }
    let den = bessel_j0(k * radius);
    if den.abs() < 1e-6 {
        return Err(Error::NearResonance {
            k,
            detail: format!("J0(kR) = {den:e} is below 1e-6"),
        });
    }
    Ok(value * bessel_j0(k * r) / den)
}
