//! Dense multilayer perceptrons with a hand-written backward pass.
//!
//! Every hidden layer computes `h = act(W x + b)`; the output layer is affine.
//! Weights are stored row-major with shape `(out, in)`, each layer's weights
//! immediately followed by its bias, all packed into one flat [`ParamVector`].

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative from the pre-activation and the already computed output.
    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - post * post,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        output_dim: usize,
        activation: Activation,
    ) -> Result<Self> {
        let spec = Self {
            input_dim,
            hidden_dims,
            output_dim,
            activation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("mlp.input_dim", "must be >= 1"));
        }
        if self.output_dim == 0 {
            return Err(Error::config("mlp.output_dim", "must be >= 1"));
        }
        if let Some(i) = self.hidden_dims.iter().position(|&h| h == 0) {
            return Err(Error::config(
                format!("mlp.hidden_dims[{i}]"),
                "must be >= 1",
            ));
        }
        Ok(())
    }

    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let mut shapes = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in &self.hidden_dims {
            shapes.push(LayerShape::dense(fan_in, h));
            fan_in = h;
        }
        shapes.push(LayerShape::dense(fan_in, self.output_dim));
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(LayerShape::len).sum()
    }
}

/// One layer's slice of a [`ParamVector`]: a `rows x cols` weight matrix
/// (rows = outputs) optionally followed by `rows` bias entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
    pub has_bias: bool,
}

impl LayerShape {
    pub fn dense(fan_in: usize, fan_out: usize) -> Self {
        Self {
            rows: fan_out,
            cols: fan_in,
            has_bias: true,
        }
    }

    /// A bias-free row vector, used for free-standing parameters such as a
    /// state-independent log standard deviation.
    pub fn vector(len: usize) -> Self {
        Self {
            rows: 1,
            cols: len,
            has_bias: false,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols + if self.has_bias { self.rows } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    shapes: Vec<LayerShape>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, shapes: Vec<LayerShape>) -> Result<Self> {
        let expected: usize = shapes.iter().map(LayerShape::len).sum();
        if expected != values.len() {
            return Err(Error::dims("parameter vector", expected, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "parameter vector".into(),
            });
        }
        Ok(Self { values, shapes })
    }

    pub fn zeros(shapes: Vec<LayerShape>) -> Self {
        let n = shapes.iter().map(LayerShape::len).sum();
        Self {
            values: vec![0.0; n],
            shapes,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Values cached by a forward pass, sufficient to replay it backwards.
#[derive(Debug, Clone)]
pub struct GradientTape {
    /// Input seen by each layer (index 0 is the network input).
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    hidden_pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl GradientTape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn input(&self) -> &[f64] {
        &self.layer_inputs[0]
    }
}

/// Forward pass through `spec` using `params`.
pub fn mlp_forward(
    spec: &MlpSpec,
    params: &ParamVector,
    input: &[f64],
) -> Result<(Vec<f64>, GradientTape)> {
    check_layout(spec, params)?;
    if input.len() != spec.input_dim {
        return Err(Error::dims("layer 0 input", spec.input_dim, input.len()));
    }
    let shapes = params.shapes();
    let n_layers = shapes.len();
    let mut layer_inputs = Vec::with_capacity(n_layers);
    let mut hidden_pre = Vec::with_capacity(n_layers - 1);
    let mut x = input.to_vec();
    let mut offset = 0;
    for (li, shape) in shapes.iter().enumerate() {
        let block = &params.values()[offset..offset + shape.len()];
        offset += shape.len();
        let z = affine(shape, block, &x);
        layer_inputs.push(x);
        if li + 1 < n_layers {
            x = z.iter().map(|&v| spec.activation.apply(v)).collect();
            hidden_pre.push(z);
        } else {
            x = z;
        }
    }
    let tape = GradientTape {
        layer_inputs,
        hidden_pre,
        output: x.clone(),
    };
    Ok((x, tape))
}

/// Backward pass. Accumulates `dL/dparams` into `grads` and returns `dL/dinput`.
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &ParamVector,
    tape: &GradientTape,
    d_output: &[f64],
    grads: &mut [f64],
) -> Result<Vec<f64>> {
    check_layout(spec, params)?;
    if d_output.len() != spec.output_dim {
        return Err(Error::dims(
            "output gradient",
            spec.output_dim,
            d_output.len(),
        ));
    }
    if grads.len() != params.len() {
        return Err(Error::dims("gradient buffer", params.len(), grads.len()));
    }
    let shapes = params.shapes();
    let mut offsets = Vec::with_capacity(shapes.len());
    let mut acc = 0;
    for s in shapes {
        offsets.push(acc);
        acc += s.len();
    }

    let mut delta = d_output.to_vec();
    for li in (0..shapes.len()).rev() {
        let shape = shapes[li];
        if li + 1 < shapes.len() {
            let post = &tape.layer_inputs[li + 1];
            for ((d, &pre), &y) in delta.iter_mut().zip(&tape.hidden_pre[li]).zip(post) {
                *d *= spec.activation.derivative(pre, y);
            }
        }
        let x = &tape.layer_inputs[li];
        let base = offsets[li];
        let w = &params.values()[base..base + shape.rows * shape.cols];
        let g = &mut grads[base..base + shape.len()];
        for r in 0..shape.rows {
            let dr = delta[r];
            if dr == 0.0 {
                continue;
            }
            let row = &mut g[r * shape.cols..(r + 1) * shape.cols];
            for (gw, &xi) in row.iter_mut().zip(x) {
                *gw += dr * xi;
            }
        }
        if shape.has_bias {
            let gb = &mut g[shape.rows * shape.cols..];
            for (gb, &d) in gb.iter_mut().zip(&delta) {
                *gb += d;
            }
        }
        let mut prev = vec![0.0; shape.cols];
        for r in 0..shape.rows {
            let dr = delta[r];
            if dr == 0.0 {
                continue;
            }
            for (p, &wv) in prev
                .iter_mut()
                .zip(&w[r * shape.cols..(r + 1) * shape.cols])
            {
                *p += dr * wv;
            }
        }
        delta = prev;
    }
    Ok(delta)
}

fn affine(shape: &LayerShape, block: &[f64], x: &[f64]) -> Vec<f64> {
    let (w, b) = block.split_at(shape.rows * shape.cols);
    (0..shape.rows)
        .map(|r| {
            let row = &w[r * shape.cols..(r + 1) * shape.cols];
            let dot: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            if shape.has_bias {
                dot + b[r]
            } else {
                dot
            }
        })
        .collect()
}

fn check_layout(spec: &MlpSpec, params: &ParamVector) -> Result<()> {
    let n = spec.hidden_dims.len() + 1;
    if n != params.shapes().len() {
        return Err(Error::dims("network layer count", n, params.shapes().len()));
    }
    let mut fan_in = spec.input_dim;
    for (i, got) in params.shapes().iter().enumerate() {
        let out = spec.hidden_dims.get(i).copied().unwrap_or(spec.output_dim);
        let e = LayerShape::dense(fan_in, out);
        fan_in = out;
        if e != *got {
            return Err(Error::dims(
                format!("layer {i} parameter block"),
                e.len(),
                got.len(),
            ));
        }
    }
    Ok(())
}

/// A network specification paired with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    params: ParamVector,
}

impl Mlp {
    pub fn new(spec: MlpSpec, params: ParamVector) -> Result<Self> {
        spec.validate()?;
        check_layout(&spec, &params)?;
        Ok(Self { spec, params })
    }

    /// Scaled-uniform initialization: each weight is drawn from
    /// `U(-a, a)` with `a = gain * sqrt(3 / fan_in)`, biases start at zero.
    /// The final layer uses `output_gain` in place of the hidden gain.
    pub fn init<R: Rng + ?Sized>(spec: MlpSpec, output_gain: f64, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        let mut values = Vec::with_capacity(spec.param_count());
        let last = shapes.len() - 1;
        for (li, s) in shapes.iter().enumerate() {
            let gain = if li == last { output_gain } else { 1.0 };
            let a = gain * (3.0 / s.cols as f64).sqrt();
            for _ in 0..s.rows * s.cols {
                values.push(if a > 0.0 {
                    rng.random_range(-a..a)
                } else {
                    0.0
                });
            }
            if s.has_bias {
                values.extend(std::iter::repeat_n(0.0, s.rows));
            }
        }
        let params = ParamVector::new(values, shapes)?;
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, GradientTape)> {
        mlp_forward(&self.spec, &self.params, input)
    }

    /// Forward pass without recording a tape.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_layout(&self.spec, &self.params)?;
        if input.len() != self.spec.input_dim {
            return Err(Error::dims(
                "layer 0 input",
                self.spec.input_dim,
                input.len(),
            ));
        }
        let shapes = self.params.shapes();
        let mut x = input.to_vec();
        let mut offset = 0;
        for (li, shape) in shapes.iter().enumerate() {
            let block = &self.params.values()[offset..offset + shape.len()];
            offset += shape.len();
            x = affine(shape, block, &x);
            if li + 1 < shapes.len() {
                for v in &mut x {
                    *v = self.spec.activation.apply(*v);
                }
            }
        }
        Ok(x)
    }

    pub fn backward(
        &self,
        tape: &GradientTape,
        d_output: &[f64],
        grads: &mut [f64],
    ) -> Result<Vec<f64>> {
        mlp_backward(&self.spec, &self.params, tape, d_output, grads)
    }

    pub fn zero_grads(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }
}
