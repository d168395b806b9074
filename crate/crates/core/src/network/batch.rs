//! Batched jet propagation and its reverse pass.
//!
//! Activations of one layer are stored as a `width × 5n` matrix whose column
//! blocks hold, for `n` points, the value, `∂x`, `∂y`, `∂xx` and `∂yy` of each
//! neuron. One matrix product per layer then carries all five through the
//! affine map; the sine acts block-wise. The mixed derivative never reaches
//! the Laplacian of a network, so it is not propagated here.
//!
//! Points are processed in fixed-size chunks and chunk results are summed in
//! order, which keeps gradients bitwise reproducible for any thread count.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use rayon::prelude::*;

use super::MlpParams;
use crate::geometry::{Jet2, Point2};

const CHUNK: usize = 256;

/// Network value and derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NetOutput {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
}

impl From<NetOutput> for Jet2 {
    fn from(o: NetOutput) -> Self {
        Jet2::new(o.v, o.dx, o.dy, o.dxx, o.dyy)
    }
}

/// Sensitivity of a scalar objective to each component of [`NetOutput`].
pub type JetAdjoint = NetOutput;

struct Tape {
    n: usize,
    /// `acts[0]` is the scaled input; `acts[q]` feeds layer `q`.
    acts: Vec<Array2<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Array2<f64>>,
    out: Array2<f64>,
}

fn weight_view(params: &MlpParams, q: usize) -> ArrayView2<'_, f64> {
    let s = params.shapes()[q];
    ArrayView2::from_shape((s.n_out, s.n_in), params.weights(q)).expect("layer shape")
}

fn forward_chunk(params: &MlpParams, pts: &[Point2]) -> Tape {
    let n = pts.len();
    let scale = params.architecture().input_scale;
    let mut a0 = Array2::zeros((2, 5 * n));
    for (i, p) in pts.iter().enumerate() {
        a0[[0, i]] = scale * p.x;
        a0[[1, i]] = scale * p.y;
        a0[[0, n + i]] = scale;
        a0[[1, 2 * n + i]] = scale;
    }
    let last = params.shapes().len() - 1;
    let mut acts = vec![a0];
    let mut pre = Vec::with_capacity(last);
    for (q, s) in params.shapes().iter().enumerate() {
        let mut z = Array2::zeros((s.n_out, 5 * n));
        general_mat_mul(1.0, &weight_view(params, q), &acts[q], 0.0, &mut z);
        for (mut row, &b) in z.rows_mut().into_iter().zip(params.biases(q)) {
            row.as_slice_mut().unwrap()[..n].iter_mut().for_each(|v| *v += b);
        }
        if q == last {
            return Tape { n, acts, pre, out: z };
        }
        acts.push(sine_forward(&z, n));
        pre.push(z);
    }
    unreachable!("architecture has an output layer")
}

fn sine_forward(z: &Array2<f64>, n: usize) -> Array2<f64> {
    let mut a = Array2::zeros(z.raw_dim());
    for (zr, mut ar) in z.rows().into_iter().zip(a.rows_mut()) {
        let zr = zr.as_slice().unwrap();
        let ar = ar.as_slice_mut().unwrap();
        for i in 0..n {
            let (s, c) = zr[i].sin_cos();
            let (zx, zy) = (zr[n + i], zr[2 * n + i]);
            ar[i] = s;
            ar[n + i] = c * zx;
            ar[2 * n + i] = c * zy;
            ar[3 * n + i] = c * zr[3 * n + i] - s * zx * zx;
            ar[4 * n + i] = c * zr[4 * n + i] - s * zy * zy;
        }
    }
    a
}

/// Pulls activation adjoints back through the sine to pre-activation adjoints.
fn sine_backward(z: &Array2<f64>, abar: &Array2<f64>, n: usize) -> Array2<f64> {
    let mut zbar = Array2::zeros(z.raw_dim());
    for ((zr, ar), mut br) in z.rows().into_iter().zip(abar.rows()).zip(zbar.rows_mut()) {
        let zr = zr.as_slice().unwrap();
        let ar = ar.as_slice().unwrap();
        let br = br.as_slice_mut().unwrap();
        for i in 0..n {
            let (s, c) = zr[i].sin_cos();
            let (zx, zy, zxx, zyy) = (zr[n + i], zr[2 * n + i], zr[3 * n + i], zr[4 * n + i]);
            let (a, ax, ay, axx, ayy) = (ar[i], ar[n + i], ar[2 * n + i], ar[3 * n + i], ar[4 * n + i]);
            br[i] = a * c - (ax * zx + ay * zy) * s
                - axx * (s * zxx + c * zx * zx)
                - ayy * (s * zyy + c * zy * zy);
            br[n + i] = ax * c - 2.0 * axx * s * zx;
            br[2 * n + i] = ay * c - 2.0 * ayy * s * zy;
            br[3 * n + i] = axx * c;
            br[4 * n + i] = ayy * c;
        }
    }
    zbar
}

fn outputs(tape: &Tape) -> Vec<NetOutput> {
    let n = tape.n;
    let o = tape.out.as_slice().unwrap();
    (0..n)
        .map(|i| NetOutput {
            v: o[i],
            dx: o[n + i],
            dy: o[2 * n + i],
            dxx: o[3 * n + i],
            dyy: o[4 * n + i],
        })
        .collect()
}

fn backward_chunk(params: &MlpParams, tape: &Tape, adj: &[JetAdjoint], grad: &mut [f64]) {
    let n = tape.n;
    let mut bar = Array2::zeros((1, 5 * n));
    {
        let b = bar.as_slice_mut().unwrap();
        for (i, a) in adj.iter().enumerate() {
            b[i] = a.v;
            b[n + i] = a.dx;
            b[2 * n + i] = a.dy;
            b[3 * n + i] = a.dxx;
            b[4 * n + i] = a.dyy;
        }
    }
    for q in (0..params.shapes().len()).rev() {
        let s = params.shapes()[q];
        if q + 1 < params.shapes().len() {
            bar = sine_backward(&tape.pre[q], &bar, n);
        }
        {
            let (wg, bg) = grad[s.weight_offset..s.bias_offset + s.n_out].split_at_mut(s.n_in * s.n_out);
            let mut wg = ArrayViewMut2::from_shape((s.n_out, s.n_in), wg).expect("layer shape");
            general_mat_mul(1.0, &bar, &tape.acts[q].t(), 1.0, &mut wg);
            for (g, row) in bg.iter_mut().zip(bar.rows()) {
                *g += row.as_slice().unwrap()[..n].iter().sum::<f64>();
            }
        }
        if q > 0 {
            let mut prev = Array2::zeros((s.n_in, 5 * n));
            general_mat_mul(1.0, &weight_view(params, q).t(), &bar, 0.0, &mut prev);
            bar = prev;
        }
    }
}

/// Network jets at every point, computed in batches.
pub fn forward_batch(params: &MlpParams, points: &[Point2]) -> Vec<NetOutput> {
    let parts: Vec<Vec<NetOutput>> = points
        .par_chunks(CHUNK)
        .map(|c| outputs(&forward_chunk(params, c)))
        .collect();
    parts.concat()
}

/// Objective value and flat parameter gradient of `Σ_chunks f(outputs)`.
///
/// `adjoint(offset, outputs, adj)` receives the jets of the points starting at
/// `offset`, must fill `adj` with the derivative of its partial objective with
/// respect to each jet component, and returns that partial objective.
pub fn param_gradient<F>(params: &MlpParams, points: &[Point2], adjoint: F) -> (f64, Vec<f64>)
where
    F: Fn(usize, &[NetOutput], &mut [JetAdjoint]) -> f64 + Sync,
{
    let p = params.flat().len();
    let parts: Vec<(f64, Vec<f64>)> = points
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let tape = forward_chunk(params, chunk);
            let out = outputs(&tape);
            let mut adj = vec![JetAdjoint::default(); out.len()];
            let f = adjoint(ci * CHUNK, &out, &mut adj);
            let mut g = vec![0.0; p];
            backward_chunk(params, &tape, &adj, &mut g);
            (f, g)
        })
        .collect();
    let mut total = 0.0;
    let mut grad = vec![0.0; p];
    for (f, g) in parts {
        total += f;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    (total, grad)
}
