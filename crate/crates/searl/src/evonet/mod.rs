//! Evolvable feed-forward networks.
//!
//! An [`EvolvableNet`] is a dense MLP whose architecture is encoded by its
//! [`NetSpec`] (hidden widths + activation). Networks grow by adding nodes
//! or layers while preserving every already-trained parameter bit-exactly
//! (Lamarckian mutation, see [`mutation`]), which is what lets evolution
//! change architectures mid-training without discarding learned weights.
//!
//! Gradients come from a purpose-built reverse pass over the layer stack:
//! [`EvolvableNet::backward`] accumulates parameter gradients and can also
//! return the gradient with respect to the input, which the TD3 actor
//! update needs (loss flows through the critic into the actor's output).

mod adam;
mod checkpoint;
pub mod mutation;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use checkpoint::{read_container, write_container, ContainerHeader};
pub use mutation::{NODE_GROWTH_CHOICES, DEFAULT_NEW_WEIGHT_SCALE};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvoNetError {
    #[error("input length {got} does not match input_dim {want}")]
    InputDim { got: usize, want: usize },
    #[error("hidden_widths must be non-empty")]
    EmptyHidden,
    #[error("dimensions must be positive (got {0})")]
    ZeroDim(&'static str),
    #[error("layer index {index} out of range ({layers} hidden layers)")]
    LayerIndex { index: usize, layers: usize },
    #[error("node growth count {0} is not one of 16, 32, 64")]
    GrowthCount(usize),
    #[error("gradient shape does not mirror the network")]
    GradientShape,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("perturbation std must be positive (got {0})")]
    BadStd(f64),
    #[error("subset fraction must lie in (0, 1] (got {0})")]
    BadFraction(f64),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Elu,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Tanh, Activation::Elu];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
            // alpha = 1
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp() - 1.0
                }
            }
        }
    }

    /// Derivative at pre-activation `x`.
    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Elu => "elu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "elu" => Ok(Activation::Elu),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    Identity,
    /// `bound * tanh(x)` — bounded continuous actions.
    ScaledTanh { bound: f64 },
}

impl OutputTransform {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            OutputTransform::Identity => x,
            OutputTransform::ScaledTanh { bound } => bound * x.tanh(),
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            OutputTransform::Identity => 1.0,
            OutputTransform::ScaledTanh { bound } => {
                let t = x.tanh();
                bound * (1.0 - t * t)
            }
        }
    }
}

/// Architecture genome: equality is field-wise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    pub output_transform: OutputTransform,
}

impl NetSpec {
    pub fn new(
        input_dim: usize,
        hidden_widths: Vec<usize>,
        output_dim: usize,
        activation: Activation,
        output_transform: OutputTransform,
    ) -> Result<Self, EvoNetError> {
        if input_dim == 0 {
            return Err(EvoNetError::ZeroDim("input_dim"));
        }
        if output_dim == 0 {
            return Err(EvoNetError::ZeroDim("output_dim"));
        }
        if hidden_widths.is_empty() {
            return Err(EvoNetError::EmptyHidden);
        }
        if hidden_widths.contains(&0) {
            return Err(EvoNetError::ZeroDim("hidden width"));
        }
        Ok(NetSpec {
            input_dim,
            hidden_widths,
            output_dim,
            activation,
            output_transform,
        })
    }

    /// `(fan_in, fan_out)` of every layer, hidden layers then output layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.input_dim;
        for &w in &self.hidden_widths {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims.push((fan_in, self.output_dim));
        dims
    }

    pub fn total_hidden_nodes(&self) -> usize {
        self.hidden_widths.iter().sum()
    }
}

/// Row-major dense matrix, `rows` = fan-out, `cols` = fan-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Appends a row, growing fan-out by one.
    pub(crate) fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(&row);
        self.rows += 1;
    }

    /// Appends `extra` new trailing entries to every row, growing fan-in.
    /// Existing entries keep their (row, col) positions.
    pub(crate) fn push_cols(&mut self, extra: &[Vec<f64>]) {
        let added = extra.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(self.rows * (self.cols + added));
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(&extra[r]);
        }
        self.cols += added;
        self.data = data;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        DenseLayer {
            weights: Matrix::zeros(fan_out, fan_in),
            bias: vec![0.0; fan_out],
        }
    }

    /// Fan-in scaled uniform init, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub(crate) fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let s = 1.0 / (fan_in as f64).sqrt();
        let mut layer = DenseLayer::zeros(fan_in, fan_out);
        for w in layer.weights.data_mut() {
            *w = rng.gen_range(-s..s);
        }
        for b in &mut layer.bias {
            *b = rng.gen_range(-s..s);
        }
        layer
    }

    pub fn param_count(&self) -> usize {
        self.weights.data.len() + self.bias.len()
    }
}

/// Per-layer activations recorded by a traced forward pass; reused across
/// samples to keep training free of per-sample allocations.
#[derive(Default)]
pub struct ForwardTrace {
    /// Pre-activation `z_l = W_l a_{l-1} + b_l`.
    pre: Vec<Vec<f64>>,
    /// Post-activation `a_l` (output layer: after the output transform).
    post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn output(&self) -> &[f64] {
        self.post.last().expect("trace is filled")
    }

    /// Post-activation of hidden layer `index`.
    pub fn hidden_activation(&self, index: usize) -> &[f64] {
        &self.post[index]
    }

    fn resize_to(&mut self, net: &EvolvableNet) {
        let n = net.layers.len();
        self.pre.resize_with(n, Vec::new);
        self.post.resize_with(n, Vec::new);
        for (l, layer) in net.layers.iter().enumerate() {
            self.pre[l].resize(layer.bias.len(), 0.0);
            self.post[l].resize(layer.bias.len(), 0.0);
        }
    }
}

/// Parameter gradients, mirroring the owning network's shapes.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub layers: Vec<DenseLayer>,
}

impl Gradient {
    pub fn zeros_like(net: &EvolvableNet) -> Self {
        Gradient {
            layers: net
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.weights.cols, l.weights.rows))
                .collect(),
        }
    }

    pub fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.data.iter_mut().for_each(|x| *x = 0.0);
            l.bias.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.data.iter_mut().for_each(|x| *x *= factor);
            l.bias.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.data.iter().all(|x| x.is_finite()) && l.bias.iter().all(|x| x.is_finite())
        })
    }

    fn shapes_match(&self, net: &EvolvableNet) -> bool {
        self.layers.len() == net.layers.len()
            && self.layers.iter().zip(&net.layers).all(|(g, l)| {
                g.weights.rows == l.weights.rows
                    && g.weights.cols == l.weights.cols
                    && g.bias.len() == l.bias.len()
            })
    }
}

/// Dense MLP whose weights survive architecture mutations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolvableNet {
    spec: NetSpec,
    layers: Vec<DenseLayer>,
}

impl EvolvableNet {
    pub fn new<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Self {
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| DenseLayer::init(fan_in, fan_out, rng))
            .collect();
        EvolvableNet { spec, layers }
    }

    pub fn zeros(spec: NetSpec) -> Self {
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| DenseLayer::zeros(fan_in, fan_out))
            .collect();
        EvolvableNet { spec, layers }
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub(crate) fn from_parts(spec: NetSpec, layers: Vec<DenseLayer>) -> Self {
        EvolvableNet { spec, layers }
    }

    pub(crate) fn set_activation(&mut self, activation: Activation) {
        self.spec.activation = activation;
    }

    pub(crate) fn insert_layer(&mut self, index: usize, layer: DenseLayer, width: usize) {
        self.layers.insert(index, layer);
        self.spec.hidden_widths.insert(index, width);
    }

    pub(crate) fn grow_hidden_width(&mut self, index: usize, count: usize) {
        self.spec.hidden_widths[index] += count;
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Weight shapes consistent with the spec; checked after every mutation.
    pub fn validate_shapes(&self) -> Result<(), EvoNetError> {
        let dims = self.spec.layer_dims();
        if dims.len() != self.layers.len() {
            return Err(EvoNetError::GradientShape);
        }
        for ((fan_in, fan_out), layer) in dims.into_iter().zip(&self.layers) {
            if layer.weights.rows != fan_out
                || layer.weights.cols != fan_in
                || layer.bias.len() != fan_out
            {
                return Err(EvoNetError::GradientShape);
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, EvoNetError> {
        let mut trace = ForwardTrace::new();
        self.forward_traced(input, &mut trace)?;
        Ok(trace.output().to_vec())
    }

    /// Forward pass that records per-layer activations for [`Self::backward`].
    pub fn forward_traced(
        &self,
        input: &[f64],
        trace: &mut ForwardTrace,
    ) -> Result<(), EvoNetError> {
        if input.len() != self.spec.input_dim {
            return Err(EvoNetError::InputDim {
                got: input.len(),
                want: self.spec.input_dim,
            });
        }
        trace.resize_to(self);
        let n_layers = self.layers.len();
        for l in 0..n_layers {
            let layer = &self.layers[l];
            // split_at_mut keeps the borrow checker happy: the input of
            // layer l is trace.post[l-1].
            let (head, tail) = trace.post.split_at_mut(l);
            let x: &[f64] = if l == 0 { input } else { &head[l - 1] };
            let pre = &mut trace.pre[l];
            for (o, z) in pre.iter_mut().enumerate() {
                *z = layer.bias[o] + dot(layer.weights.row(o), x);
            }
            let post = &mut tail[0];
            if l + 1 == n_layers {
                for (a, &z) in post.iter_mut().zip(pre.iter()) {
                    *a = self.spec.output_transform.apply(z);
                }
            } else {
                for (a, &z) in post.iter_mut().zip(pre.iter()) {
                    *a = self.spec.activation.apply(z);
                }
            }
        }
        Ok(())
    }

    /// Reverse pass for one sample. `dloss_doutput` is the gradient of a
    /// scalar loss with respect to the (transformed) network output.
    /// Parameter gradients are accumulated into `grad`; when `dinput` is
    /// given it receives the gradient with respect to the input.
    pub fn backward(
        &self,
        input: &[f64],
        trace: &ForwardTrace,
        dloss_doutput: &[f64],
        grad: &mut Gradient,
        mut dinput: Option<&mut [f64]>,
    ) -> Result<(), EvoNetError> {
        if !grad.shapes_match(self) {
            return Err(EvoNetError::GradientShape);
        }
        if dloss_doutput.len() != self.spec.output_dim {
            return Err(EvoNetError::InputDim {
                got: dloss_doutput.len(),
                want: self.spec.output_dim,
            });
        }
        let n_layers = self.layers.len();
        // dz of the output layer: chain through the output transform.
        let mut dz: Vec<f64> = dloss_doutput
            .iter()
            .zip(&trace.pre[n_layers - 1])
            .map(|(&d, &z)| d * self.spec.output_transform.derivative(z))
            .collect();

        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let x: &[f64] = if l == 0 { input } else { &trace.post[l - 1] };
            let g = &mut grad.layers[l];
            for (o, &dz_o) in dz.iter().enumerate() {
                g.bias[o] += dz_o;
                let grow = g.weights.row_mut(o);
                for (gw, &xi) in grow.iter_mut().zip(x) {
                    *gw += dz_o * xi;
                }
            }
            let want_dx = l > 0 || dinput.is_some();
            if !want_dx {
                continue;
            }
            let mut dx = vec![0.0; layer.weights.cols];
            for (o, &dz_o) in dz.iter().enumerate() {
                let row = layer.weights.row(o);
                for (dxi, &w) in dx.iter_mut().zip(row) {
                    *dxi += dz_o * w;
                }
            }
            if l == 0 {
                if let Some(di) = dinput.as_deref_mut() {
                    di.copy_from_slice(&dx);
                }
            } else {
                let z_prev = &trace.pre[l - 1];
                dz = dx
                    .iter()
                    .zip(z_prev)
                    .map(|(&d, &z)| d * self.spec.activation.derivative(z))
                    .collect();
            }
        }
        Ok(())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Central finite difference of `loss` with respect to every parameter.
    pub fn finite_difference_gradient<F>(net: &EvolvableNet, loss: F, h: f64) -> Gradient
    where
        F: Fn(&EvolvableNet) -> f64,
    {
        let mut grad = Gradient::zeros_like(net);
        for l in 0..net.layers.len() {
            for i in 0..net.layers[l].weights.data.len() {
                let mut plus = net.clone();
                plus.layers_mut()[l].weights.data_mut()[i] += h;
                let mut minus = net.clone();
                minus.layers_mut()[l].weights.data_mut()[i] -= h;
                grad.layers[l].weights.data_mut()[i] = (loss(&plus) - loss(&minus)) / (2.0 * h);
            }
            for i in 0..net.layers[l].bias.len() {
                let mut plus = net.clone();
                plus.layers_mut()[l].bias[i] += h;
                let mut minus = net.clone();
                minus.layers_mut()[l].bias[i] -= h;
                grad.layers[l].bias[i] = (loss(&plus) - loss(&minus)) / (2.0 * h);
            }
        }
        grad
    }

    pub fn max_relative_error(a: &Gradient, b: &Gradient) -> f64 {
        let mut worst: f64 = 0.0;
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            for (&x, &y) in la
                .weights
                .data()
                .iter()
                .chain(&la.bias)
                .zip(lb.weights.data().iter().chain(&lb.bias))
            {
                let denom = x.abs().max(y.abs()).max(1e-8);
                worst = worst.max((x - y).abs() / denom);
            }
        }
        worst
    }

    pub fn bits_equal(a: &EvolvableNet, b: &EvolvableNet) -> bool {
        a.layers.len() == b.layers.len()
            && a.layers.iter().zip(&b.layers).all(|(la, lb)| {
                la.weights.data().len() == lb.weights.data().len()
                    && la
                        .weights
                        .data()
                        .iter()
                        .zip(lb.weights.data())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
                    && la
                        .bias
                        .iter()
                        .zip(&lb.bias)
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}
