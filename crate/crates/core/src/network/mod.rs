//! Fully connected sine networks on two spatial inputs.
//!
//! Parameters live in one flat vector (layer by layer, row-major weights
//! followed by biases) so the optimizer can work on them directly. Two
//! evaluation paths exist: [`MlpParams::eval_t`] is generic over [`Real`] and
//! serves single-point values and jets, while [`batch`] propagates jets for
//! a whole collocation set with matrix products and provides the reverse pass
//! used for parameter gradients.

pub mod batch;
pub mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Jet2, Point2, Real};

pub use batch::{param_gradient, JetAdjoint, NetOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub layer_sizes: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    /// Multiplies both inputs before the first layer.
    #[serde(default = "default_input_scale")]
    pub input_scale: f64,
}

fn default_input_scale() -> f64 {
    1.0
}

impl Architecture {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        let arch = Self {
            layer_sizes,
            activation: Activation::Sine,
            input_scale: 1.0,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// `hidden` layers of `width` sine neurons between the 2-D input and the
    /// scalar output.
    pub fn uniform(hidden: usize, width: usize) -> Result<Self> {
        let mut sizes = vec![2];
        sizes.extend(std::iter::repeat_n(width, hidden));
        sizes.push(1);
        Self::new(sizes)
    }

    /// Full-scale network: six hidden layers of 90 neurons.
    pub fn full() -> Self {
        Self::uniform(6, 90).expect("static architecture")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.layer_sizes;
        if s.len() < 3 {
            return Err(invalid("architecture needs at least one hidden layer"));
        }
        if s[0] != 2 {
            return Err(invalid(format!("input width must be 2, got {}", s[0])));
        }
        if *s.last().unwrap() != 1 {
            return Err(invalid(format!("output width must be 1, got {}", s.last().unwrap())));
        }
        if s.contains(&0) {
            return Err(invalid("layer widths must be positive"));
        }
        if !(self.input_scale.is_finite() && self.input_scale != 0.0) {
            return Err(invalid("input_scale must be finite and non-zero"));
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// Offsets of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub n_in: usize,
    pub n_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    arch: Architecture,
    shapes: Vec<LayerShape>,
    flat: Vec<f64>,
}

fn layer_shapes(arch: &Architecture) -> Vec<LayerShape> {
    let mut off = 0;
    arch.layer_sizes
        .windows(2)
        .map(|w| {
            let (n_in, n_out) = (w[0], w[1]);
            let shape = LayerShape {
                n_in,
                n_out,
                weight_offset: off,
                bias_offset: off + n_in * n_out,
            };
            off += n_in * n_out + n_out;
            shape
        })
        .collect()
}

impl MlpParams {
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            shapes: layer_shapes(arch),
            flat: vec![0.0; arch.param_count()],
            arch: arch.clone(),
        })
    }

    /// Glorot-uniform weights, zero biases, deterministic in `seed`.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for shape in params.shapes.clone() {
            let limit = (6.0 / (shape.n_in + shape.n_out) as f64).sqrt();
            let w = &mut params.flat[shape.weight_offset..shape.bias_offset];
            for v in w.iter_mut() {
                *v = rng.gen_range(-limit..limit);
            }
        }
        Ok(params)
    }

    pub fn from_flat(arch: &Architecture, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        params.set_flat(flat)?;
        Ok(params)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.flat.clone()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.flat.len() {
            return Err(invalid(format!(
                "flat parameter length {} does not match architecture ({})",
                flat.len(),
                self.flat.len()
            )));
        }
        self.flat.copy_from_slice(flat);
        Ok(())
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let s = self.shapes[layer];
        &self.flat[s.weight_offset..s.bias_offset]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let s = self.shapes[layer];
        &self.flat[s.bias_offset..s.bias_offset + s.n_out]
    }

    /// Flat index range holding the weights that feed the last hidden layer.
    pub fn last_hidden_weight_range(&self) -> std::ops::Range<usize> {
        let s = self.shapes[self.shapes.len() - 2];
        s.weight_offset..s.bias_offset
    }

    pub fn eval_t<T: Real>(&self, x: T, y: T) -> T {
        let scale = self.arch.input_scale;
        let mut act: Vec<T> = vec![x * scale, y * scale];
        let last = self.shapes.len() - 1;
        for (q, s) in self.shapes.iter().enumerate() {
            let w = self.weights(q);
            let b = self.biases(q);
            let next: Vec<T> = (0..s.n_out)
                .map(|i| {
                    let row = &w[i * s.n_in..(i + 1) * s.n_in];
                    let mut z = act[0] * row[0];
                    for j in 1..s.n_in {
                        z = z + act[j] * row[j];
                    }
                    z = z + b[i];
                    if q == last {
                        z
                    } else {
                        z.sin()
                    }
                })
                .collect();
            act = next;
        }
        act[0]
    }

    pub fn forward(&self, p: Point2) -> f64 {
        self.eval_t(p.x, p.y)
    }

    pub fn forward_jet(&self, p: Point2) -> Jet2 {
        self.eval_t(Jet2::var_x(p.x), Jet2::var_y(p.y))
    }
}
