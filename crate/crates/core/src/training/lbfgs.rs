//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! [`Lbfgs`] is a step-at-a-time state machine so callers can change the
//! objective between iterations (the dynamic-λ schedule does), refresh the
//! cached value and gradient, and drop curvature pairs that no longer apply.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LbfgsConfig {
    pub max_iters: usize,
    /// Stop once the gradient max-norm falls to this value.
    pub grad_tolerance: f64,
    pub history: usize,
    pub c1: f64,
    pub c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tolerance: 1e-3,
            history: 20,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.grad_tolerance > 0.0) {
            return Err(invalid("grad_tolerance must be positive"));
        }
        if self.history < 1 || self.max_line_search < 1 {
            return Err(invalid("history and max_line_search must be at least 1"));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(invalid("line search needs 0 < c1 < c2 < 1"));
        }
        Ok(())
    }
}

/// Differentiable objective: returns `f(x)` and writes `∇f(x)` into `grad`.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Objective for F {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchStalled,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
            StopReason::LineSearchStalled => "line-search stalled",
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Trial {
    a: f64,
    f: f64,
    dphi: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

pub struct Lbfgs {
    cfg: LbfgsConfig,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    iterations: usize,
    evaluations: usize,
}

impl Lbfgs {
    pub fn new<O: Objective>(obj: &mut O, x0: Vec<f64>, cfg: LbfgsConfig) -> Result<Self> {
        cfg.validate()?;
        let mut g = vec![0.0; x0.len()];
        let f = obj.evaluate(&x0, &mut g);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(invalid("objective is not finite at the initial point"));
        }
        Ok(Self {
            cfg,
            x: x0,
            f,
            g,
            pairs: VecDeque::new(),
            iterations: 0,
            evaluations: 1,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn grad(&self) -> &[f64] {
        &self.g
    }

    pub fn grad_max_norm(&self) -> f64 {
        max_norm(&self.g)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn config(&self) -> &LbfgsConfig {
        &self.cfg
    }

    pub fn converged(&self) -> bool {
        self.grad_max_norm() <= self.cfg.grad_tolerance
    }

    pub fn reset_memory(&mut self) {
        self.pairs.clear();
    }

    /// Re-evaluates the objective at the current point after it has changed.
    pub fn refresh<O: Objective>(&mut self, obj: &mut O) {
        self.f = obj.evaluate(&self.x, &mut self.g);
        self.evaluations += 1;
    }

    /// One quasi-Newton iteration. A failed line search is retried once along
    /// steepest descent before giving up.
    pub fn step<O: Objective>(&mut self, obj: &mut O) -> std::result::Result<(), StopReason> {
        if self.try_step(obj) {
            return Ok(());
        }
        if !self.pairs.is_empty() {
            self.reset_memory();
            if self.try_step(obj) {
                return Ok(());
            }
        }
        Err(StopReason::LineSearchStalled)
    }

    fn direction(&self) -> Vec<f64> {
        let mut q: Vec<f64> = self.g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q
    }

    fn try_step<O: Objective>(&mut self, obj: &mut O) -> bool {
        let mut d = self.direction();
        let mut dg = dot(&d, &self.g);
        if !(dg < 0.0) {
            self.pairs.clear();
            d = self.g.iter().map(|v| -v).collect();
            dg = -dot(&self.g, &self.g);
        }
        if !(dg < 0.0) {
            return false;
        }
        let a0 = if self.pairs.is_empty() {
            (1.0 / dot(&self.g, &self.g).sqrt()).min(1.0)
        } else {
            1.0
        };
        let Some(t) = self.line_search(obj, &d, dg, a0) else {
            return false;
        };
        let s: Vec<f64> = t.x.iter().zip(&self.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = t.g.iter().zip(&self.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if self.pairs.len() == self.cfg.history {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
        self.x = t.x;
        self.f = t.f;
        self.g = t.g;
        self.iterations += 1;
        true
    }

    fn probe<O: Objective>(&mut self, obj: &mut O, d: &[f64], a: f64) -> Trial {
        let x: Vec<f64> = self.x.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
        let mut g = vec![0.0; x.len()];
        let mut f = obj.evaluate(&x, &mut g);
        self.evaluations += 1;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            f = f64::INFINITY;
        }
        let dphi = if f.is_finite() { dot(&g, d) } else { f64::NAN };
        Trial { a, f, dphi, x, g }
    }

    /// Strong-Wolfe bracketing and zoom. On exhausting the evaluation budget
    /// the best point with sufficient decrease is accepted, if any.
    fn line_search<O: Objective>(&mut self, obj: &mut O, d: &[f64], dphi0: f64, a0: f64) -> Option<Trial> {
        let (f0, c1, c2) = (self.f, self.cfg.c1, self.cfg.c2);
        let armijo = |t: &Trial| t.f <= f0 + c1 * t.a * dphi0;
        let curvature = |t: &Trial| t.dphi.abs() <= -c2 * dphi0;
        let mut budget = self.cfg.max_line_search;
        let mut best: Option<Trial> = None;
        let keep = |best: &mut Option<Trial>, t: &Trial| {
            if armijo(t) && best.as_ref().is_none_or(|b| t.f < b.f) {
                *best = Some(Trial {
                    a: t.a,
                    f: t.f,
                    dphi: t.dphi,
                    x: t.x.clone(),
                    g: t.g.clone(),
                });
            }
        };

        let mut prev = Trial {
            a: 0.0,
            f: f0,
            dphi: dphi0,
            x: Vec::new(),
            g: Vec::new(),
        };
        let mut a = a0;
        let (mut lo, mut hi);
        loop {
            if budget == 0 {
                return best;
            }
            budget -= 1;
            let t = self.probe(obj, d, a);
            if !armijo(&t) || (prev.a > 0.0 && t.f >= prev.f) {
                lo = prev;
                hi = t;
                break;
            }
            if curvature(&t) {
                return Some(t);
            }
            keep(&mut best, &t);
            if t.dphi >= 0.0 {
                hi = prev;
                lo = t;
                break;
            }
            a = 2.0 * t.a;
            prev = t;
        }

        // zoom: `lo` satisfies sufficient decrease and has the lowest value
        loop {
            if budget == 0 {
                return best;
            }
            budget -= 1;
            let (l, h) = (lo.a.min(hi.a), lo.a.max(hi.a));
            let width = h - l;
            if width <= f64::EPSILON * h.max(1e-300) {
                return best;
            }
            let mut a = cubic_min(&lo, &hi).unwrap_or(0.5 * (lo.a + hi.a));
            if !(a > l + 0.1 * width && a < h - 0.1 * width) {
                a = 0.5 * (lo.a + hi.a);
            }
            let t = self.probe(obj, d, a);
            if !armijo(&t) || t.f >= lo.f {
                hi = t;
            } else {
                if curvature(&t) {
                    return Some(t);
                }
                keep(&mut best, &t);
                if t.dphi * (hi.a - lo.a) >= 0.0 {
                    hi = lo;
                }
                lo = t;
            }
        }
    }
}

/// Minimizer of the cubic interpolating values and slopes at both ends.
fn cubic_min(p: &Trial, q: &Trial) -> Option<f64> {
    if !(p.f.is_finite() && q.f.is_finite() && p.dphi.is_finite() && q.dphi.is_finite()) {
        return None;
    }
    let d1 = p.dphi + q.dphi - 3.0 * (p.f - q.f) / (p.a - q.a);
    let disc = d1 * d1 - p.dphi * q.dphi;
    if disc < 0.0 {
        return None;
    }
    let d2 = (q.a - p.a).signum() * disc.sqrt();
    let a = q.a - (q.a - p.a) * (q.dphi + d2 - d1) / (q.dphi - p.dphi + 2.0 * d2);
    a.is_finite().then_some(a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    /// Objective value and gradient max-norm after each iteration.
    pub trace: Vec<(f64, f64)>,
}

pub fn lbfgs_minimize<O: Objective>(obj: &mut O, x0: Vec<f64>, cfg: &LbfgsConfig) -> Result<LbfgsOutcome> {
    let mut st = Lbfgs::new(obj, x0, cfg.clone())?;
    let mut trace = Vec::new();
    let stop = loop {
        if st.converged() {
            break StopReason::Converged;
        }
        if st.iterations() >= cfg.max_iters {
            break StopReason::MaxIterations;
        }
        if let Err(reason) = st.step(obj) {
            break reason;
        }
        trace.push((st.f(), st.grad_max_norm()));
    };
    Ok(LbfgsOutcome {
        f: st.f(),
        iterations: st.iterations(),
        evaluations: st.evaluations(),
        x: st.x,
        stop,
        trace,
    })
}
