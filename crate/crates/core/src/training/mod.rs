//! Loss assembly, the dynamic Lagrange-multiplier schedule and the training
//! drivers for both the soft-constraint and the trial-form method.

pub mod lbfgs;
pub mod report;
pub mod residual;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domains::{BoundarySample, Collocation};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Jet2, Point2};
use crate::network::MlpParams;
use crate::trial::TrialForm;

pub use lbfgs::{lbfgs_minimize, max_norm, Lbfgs, LbfgsConfig, LbfgsOutcome, Objective, StopReason};
pub use report::{GradientStats, Histogram, IterationRecord, Method, TrainReport};
pub use residual::ResidualSet;

/// A scalar field that can report its jet at a point.
pub trait JetField {
    fn jet_at(&self, p: Point2) -> Result<Jet2>;
}

impl JetField for MlpParams {
    fn jet_at(&self, p: Point2) -> Result<Jet2> {
        Ok(self.forward_jet(p))
    }
}

/// The trial solution built from a form and a network.
pub struct TrialField<'a> {
    pub form: &'a TrialForm,
    pub net: &'a MlpParams,
}

impl JetField for TrialField<'_> {
    fn jet_at(&self, p: Point2) -> Result<Jet2> {
        self.form.eval_jet(self.net, p)
    }
}

/// Adapts a closure returning jets.
pub struct FnField<F>(pub F);

impl<F: Fn(Point2) -> Jet2> JetField for FnField<F> {
    fn jet_at(&self, p: Point2) -> Result<Jet2> {
        Ok((self.0)(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_d: f64,
    /// Absent for the trial method.
    pub l_b: Option<f64>,
    pub l_total: f64,
    pub lambda: Option<f64>,
}

impl LossBreakdown {
    pub fn soft(l_d: f64, l_b: f64, lambda: f64) -> Self {
        Self {
            l_d,
            l_b: Some(l_b),
            l_total: l_d + lambda * l_b,
            lambda: Some(lambda),
        }
    }

    pub fn trial(l: f64) -> Self {
        Self {
            l_d: l,
            l_b: None,
            l_total: l,
            lambda: None,
        }
    }
}

/// Mean of `(ψ_xx + ψ_yy + k²ψ)²` over `points`.
pub fn loss_pde<F: JetField + ?Sized>(field: &F, points: &[Point2], k: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyInput("PDE loss needs collocation points"));
    }
    let mut acc = 0.0;
    for &p in points {
        let j = field.jet_at(p)?;
        let r = j.laplacian() + k * k * j.v;
        acc += r * r;
    }
    Ok(acc / points.len() as f64)
}

/// Mean squared mismatch between the network and the boundary data, pooled
/// over all boundary points.
pub fn loss_boundary(net: &MlpParams, samples: &[BoundarySample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("boundary loss needs boundary points"));
    }
    let acc: f64 = samples
        .iter()
        .map(|s| (net.forward(s.p) - s.value).powi(2))
        .sum();
    Ok(acc / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaSchedule {
    Fixed {
        lambda: f64,
    },
    Dynamic {
        alpha: f64,
        lambda0: f64,
        #[serde(default = "one")]
        update_period: usize,
    },
}

fn one() -> usize {
    1
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule::Fixed { lambda: 1.0 }
    }
}

impl LambdaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaSchedule::Fixed { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(invalid("fixed lambda must be positive"))
            }
            LambdaSchedule::Dynamic {
                alpha,
                lambda0,
                update_period,
            } if !(alpha > 0.0 && alpha <= 1.0) || !(lambda0 > 0.0) || update_period < 1 => Err(invalid(
                "dynamic lambda needs alpha in (0, 1], lambda0 > 0 and update_period >= 1",
            )),
            _ => Ok(()),
        }
    }

    pub fn initial(&self) -> f64 {
        match *self {
            LambdaSchedule::Fixed { lambda } => lambda,
            LambdaSchedule::Dynamic { lambda0, .. } => lambda0,
        }
    }
}

/// Which parameters' gradients feed the dynamic-λ statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GradScope {
    #[default]
    All,
    LastHidden,
}

fn scoped<'a>(g: &'a [f64], net: &MlpParams, scope: GradScope) -> &'a [f64] {
    match scope {
        GradScope::All => g,
        GradScope::LastHidden => &g[net.last_hidden_weight_range()],
    }
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    if v.iter().all(|&x| x == v[0]) {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStep {
    pub lambda: f64,
    /// `None` when the boundary gradient is degenerate and λ is held.
    pub lambda_hat: Option<f64>,
}

/// `λ̂ = max(σ_d, σ_b) / σ_b`, `λ ← (1 − α)λ + αλ̂`.
pub fn lambda_update(lambda: f64, grads_d: &[f64], grads_b: &[f64], alpha: f64) -> Result<LambdaStep> {
    if grads_d.is_empty() || grads_b.is_empty() {
        return Err(Error::EmptyInput("lambda update needs both gradient vectors"));
    }
    let (sd, sb) = (std_dev(grads_d), std_dev(grads_b));
    Ok(lambda_from_stds(lambda, sd, sb, alpha))
}

fn lambda_from_stds(lambda: f64, sd: f64, sb: f64, alpha: f64) -> LambdaStep {
    if !(sb >= 1e-30) || !sd.is_finite() {
        return LambdaStep {
            lambda,
            lambda_hat: None,
        };
    }
    let hat = sd.max(sb) / sb;
    LambdaStep {
        lambda: (1.0 - alpha) * lambda + alpha * hat,
        lambda_hat: Some(hat),
    }
}

pub fn gradient_histogram(grads: &[f64], bins: usize) -> Result<Histogram> {
    Histogram::new(grads, bins)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(flatten)]
    pub lbfgs: LbfgsConfig,
    /// Bins for the final gradient histograms; zero disables them.
    #[serde(default)]
    pub histogram_bins: usize,
}

struct Evaluated {
    x: Vec<f64>,
    l_d: f64,
    g_d: Vec<f64>,
    l_b: f64,
    g_b: Vec<f64>,
}

/// `L_d + λ L_b` with the last evaluation cached, so λ can change without
/// recomputing either term.
struct SoftObjective<'a> {
    template: MlpParams,
    pde: &'a ResidualSet,
    boundary: &'a ResidualSet,
    lambda: f64,
    last: Option<Evaluated>,
}

impl SoftObjective<'_> {
    fn parts(&mut self, x: &[f64]) -> &Evaluated {
        if self.last.as_ref().is_none_or(|e| e.x != x) {
            self.template.set_flat(x).expect("flat length fixed");
            let (l_d, g_d) = self.pde.loss_and_grad(&self.template);
            let (l_b, g_b) = self.boundary.loss_and_grad(&self.template);
            self.last = Some(Evaluated {
                x: x.to_vec(),
                l_d,
                g_d,
                l_b,
                g_b,
            });
        }
        self.last.as_ref().unwrap()
    }
}

impl Objective for SoftObjective<'_> {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let lambda = self.lambda;
        let e = self.parts(x);
        for ((g, d), b) in grad.iter_mut().zip(&e.g_d).zip(&e.g_b) {
            *g = d + lambda * b;
        }
        e.l_d + lambda * e.l_b
    }
}

struct TrialObjective<'a> {
    template: MlpParams,
    set: &'a ResidualSet,
}

impl Objective for TrialObjective<'_> {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.template.set_flat(x).expect("flat length fixed");
        let (f, g) = self.set.loss_and_grad(&self.template);
        grad.copy_from_slice(&g);
        f
    }
}

fn gradient_stats(net: &MlpParams, g_d: &[f64], g_b: Option<&[f64]>) -> GradientStats {
    let last = |g: &[f64]| std_dev(scoped(g, net, GradScope::LastHidden));
    GradientStats {
        std_d_all: std_dev(g_d),
        std_d_last_hidden: last(g_d),
        std_b_all: g_b.map(std_dev),
        std_b_last_hidden: g_b.map(last),
    }
}

/// Soft-constraint training of `L_d + λ L_b` on the interior and boundary sets
/// of `col`.
pub fn train_soft(
    col: &Collocation,
    net: &MlpParams,
    k: f64,
    schedule: &LambdaSchedule,
    scope: GradScope,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    schedule.validate()?;
    if col.boundary.is_empty() {
        return Err(Error::EmptyInput("soft-constraint training needs boundary points"));
    }
    let start = Instant::now();
    let pde = ResidualSet::helmholtz(&col.interior, k)?;
    let bpts: Vec<Point2> = col.boundary.iter().map(|b| b.p).collect();
    let bvals: Vec<f64> = col.boundary.iter().map(|b| b.value).collect();
    let boundary = ResidualSet::dirichlet(&bpts, &bvals)?;
    let mut obj = SoftObjective {
        template: net.clone(),
        pde: &pde,
        boundary: &boundary,
        lambda: schedule.initial(),
        last: None,
    };
    let mut st = Lbfgs::new(&mut obj, net.to_flat(), cfg.lbfgs.clone())?;
    let initial = {
        let e = obj.parts(st.x());
        LossBreakdown::soft(e.l_d, e.l_b, obj.lambda)
    };
    let mut history = Vec::new();
    let stop = loop {
        let mut lambda_hat = None;
        if let LambdaSchedule::Dynamic {
            alpha, update_period, ..
        } = *schedule
        {
            if st.iterations() % update_period == 0 {
                let e = obj.parts(st.x());
                let sd = std_dev(scoped(&e.g_d, net, scope));
                let sb = std_dev(scoped(&e.g_b, net, scope));
                let step = lambda_from_stds(obj.lambda, sd, sb, alpha);
                lambda_hat = step.lambda_hat;
                if step.lambda != obj.lambda {
                    if (step.lambda - obj.lambda).abs() > 0.01 * obj.lambda {
                        st.reset_memory();
                    }
                    obj.lambda = step.lambda;
                    st.refresh(&mut obj);
                }
            }
        }
        if st.converged() {
            break StopReason::Converged;
        }
        if st.iterations() >= cfg.lbfgs.max_iters {
            break StopReason::MaxIterations;
        }
        let lambda_used = obj.lambda;
        if let Err(reason) = st.step(&mut obj) {
            break reason;
        }
        let e = obj.parts(st.x());
        history.push(IterationRecord {
            iteration: st.iterations(),
            loss: LossBreakdown::soft(e.l_d, e.l_b, lambda_used),
            grad_norm: st.grad_max_norm(),
            lambda_hat,
        });
    };
    let lambda = obj.lambda;
    let e = obj.parts(st.x());
    let final_loss = LossBreakdown::soft(e.l_d, e.l_b, lambda);
    let params = MlpParams::from_flat(net.architecture(), st.x())?;
    let stats = gradient_stats(&params, &e.g_d, Some(&e.g_b));
    let mut histograms = Vec::new();
    if cfg.histogram_bins > 0 {
        let last = params.last_hidden_weight_range();
        histograms.push(("grad_pde".to_string(), Histogram::new(&e.g_d[last.clone()], cfg.histogram_bins)?));
        histograms.push(("grad_boundary".to_string(), Histogram::new(&e.g_b[last], cfg.histogram_bins)?));
    }
    Ok(TrainReport {
        method: Method::Soft,
        history,
        initial,
        final_loss,
        stop,
        iterations: st.iterations(),
        evaluations: st.evaluations(),
        wall_seconds: start.elapsed().as_secs_f64(),
        params,
        gradient_stats: Some(stats),
        histograms,
        collocation_points: col.interior.len() + col.boundary.len(),
    })
}

/// Points of `col` at which the trial jet is defined: the interior set plus
/// any boundary samples away from kinks of the distance field.
pub fn trial_points(col: &Collocation, form: &TrialForm) -> Vec<Point2> {
    let mut pts = col.interior.clone();
    pts.extend(
        col.boundary
            .iter()
            .map(|b| b.p)
            .filter(|&p| form.geometry_jets(p).is_ok()),
    );
    pts
}

/// Trial-form training: minimizes the mean squared Helmholtz residual of
/// `Σ W_i ψ_i + φ ψ̂`. No boundary term is involved.
pub fn train_trial(
    col: &Collocation,
    form: &TrialForm,
    net: &MlpParams,
    k: f64,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(invalid("wavenumber must be finite and non-negative"));
    }
    let start = Instant::now();
    let pts = trial_points(col, form);
    let set = ResidualSet::trial(form, &pts, k)?;
    let mut obj = TrialObjective {
        template: net.clone(),
        set: &set,
    };
    let out = {
        let mut st = Lbfgs::new(&mut obj, net.to_flat(), cfg.lbfgs.clone())?;
        let initial = LossBreakdown::trial(st.f());
        let mut history = Vec::new();
        let stop = loop {
            if st.converged() {
                break StopReason::Converged;
            }
            if st.iterations() >= cfg.lbfgs.max_iters {
                break StopReason::MaxIterations;
            }
            if let Err(reason) = st.step(&mut obj) {
                break reason;
            }
            history.push(IterationRecord {
                iteration: st.iterations(),
                loss: LossBreakdown::trial(st.f()),
                grad_norm: st.grad_max_norm(),
                lambda_hat: None,
            });
        };
        (initial, history, stop, st.iterations(), st.evaluations(), st.f(), st.grad().to_vec(), st.x().to_vec())
    };
    let (initial, history, stop, iterations, evaluations, f, grad, x) = out;
    let params = MlpParams::from_flat(net.architecture(), &x)?;
    let mut histograms = Vec::new();
    if cfg.histogram_bins > 0 {
        let last = params.last_hidden_weight_range();
        histograms.push(("grad_pde".to_string(), Histogram::new(&grad[last], cfg.histogram_bins)?));
    }
    Ok(TrainReport {
        method: Method::Trial,
        history,
        initial,
        final_loss: LossBreakdown::trial(f),
        stop,
        iterations,
        evaluations,
        wall_seconds: start.elapsed().as_secs_f64(),
        gradient_stats: Some(gradient_stats(&params, &grad, None)),
        params,
        histograms,
        collocation_points: pts.len(),
    })
}
