//! Dense ReLU multilayer perceptron.
//!
//! Hidden layers apply `ReLU(W x + b)`; the output layer is a single affine
//! unit. An optional skip term adds `skip · x` straight from the input to the
//! output, which lets closed-form mechanisms with linear tails be represented
//! without spending hidden nodes on them.
//!
//! Parameters are addressed in a fixed flat order: for each layer its weights
//! (row-major, one row per output node) followed by its biases, then the skip
//! weights if present. [`Gradients`] and [`AdamState`] use the same order.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Error, Result};

/// One affine layer. `weights[row * inputs + col]` multiplies input `col` into
/// output node `row`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(contract("layer dimensions must be positive"));
        }
        if weights.len() != inputs * outputs || biases.len() != outputs {
            return Err(contract(format!(
                "layer {inputs}->{outputs} expects {} weights and {outputs} biases, got {} and {}",
                inputs * outputs,
                weights.len(),
                biases.len()
            )));
        }
        Ok(Self { inputs, outputs, weights, biases })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        let outputs = rows.len();
        let inputs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != inputs) {
            return Err(contract("ragged weight matrix"));
        }
        Self::new(inputs, outputs, rows.into_iter().flatten().collect(), biases)
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.weights[row * self.inputs..(row + 1) * self.inputs]
    }

    pub fn bias(&self, row: usize) -> f64 {
        self.biases[row]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.outputs).map(|r| self.row(r).to_vec()).collect()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    #[inline]
    fn apply(&self, input: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = self.biases[r];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            *o = acc;
        }
    }

    /// Drops output node `row`.
    fn remove_output(&mut self, row: usize) {
        self.weights.drain(row * self.inputs..(row + 1) * self.inputs);
        self.biases.remove(row);
        self.outputs -= 1;
    }

    /// Drops input column `col`.
    fn remove_input(&mut self, col: usize) {
        let inputs = self.inputs;
        self.weights = self
            .weights
            .iter()
            .enumerate()
            .filter(|(i, _)| i % inputs != col)
            .map(|(_, w)| *w)
            .collect();
        self.inputs -= 1;
    }
}

/// Fully connected ReLU network with a single scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    /// Hidden layers followed by the 1-output layer.
    layers: Vec<Dense>,
    skip: Option<Vec<f64>>,
}

impl Mlp {
    /// Builds a network from its hidden layers, output layer and optional
    /// skip weights, validating that the shapes chain and all values are finite.
    pub fn new(input_dim: usize, layers: Vec<Dense>, skip: Option<Vec<f64>>) -> Result<Self> {
        if input_dim == 0 {
            return Err(contract("input_dim must be positive"));
        }
        if layers.is_empty() {
            return Err(contract("network needs at least an output layer"));
        }
        let mut width = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs != width {
                return Err(contract(format!(
                    "layer {i} takes {} inputs but previous width is {width}",
                    layer.inputs
                )));
            }
            width = layer.outputs;
        }
        if width != 1 {
            return Err(contract(format!("output layer must have 1 node, has {width}")));
        }
        if let Some(s) = &skip {
            if s.len() != input_dim {
                return Err(contract("skip weights must match input_dim"));
            }
        }
        let net = Self { input_dim, layers, skip };
        if !net.params().all(f64::is_finite) {
            return Err(contract("network parameters must be finite"));
        }
        Ok(net)
    }

    pub fn zeros(input_dim: usize, hidden_sizes: &[usize]) -> Result<Self> {
        let mut layers = Vec::with_capacity(hidden_sizes.len() + 1);
        let mut width = input_dim;
        for &h in hidden_sizes {
            if h == 0 {
                return Err(contract("hidden sizes must be positive"));
            }
            layers.push(Dense::zeros(width, h));
            width = h;
        }
        layers.push(Dense::zeros(width, 1));
        Self::new(input_dim, layers, None)
    }

    /// Uniform `[-sqrt(1/fan_in), sqrt(1/fan_in)]` weights, zero biases.
    pub fn init_random(input_dim: usize, hidden_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(input_dim, hidden_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let limit = (1.0 / layer.inputs as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for w in &mut layer.weights {
                *w = dist.sample(&mut rng);
            }
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden_layers().iter().map(Dense::outputs).collect()
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden_layers().iter().map(Dense::outputs).sum()
    }

    pub fn hidden_layers(&self) -> &[Dense] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn output_layer(&self) -> &Dense {
        self.layers.last().expect("output layer")
    }

    /// All layers, hidden first and the output layer last.
    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn skip(&self) -> Option<&[f64]> {
        self.skip.as_deref()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum::<usize>()
            + self.skip.as_ref().map_or(0, Vec::len)
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
            .chain(self.skip.iter().flatten())
            .copied()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
            .chain(self.skip.iter_mut().flatten())
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.input_dim {
            return Err(contract(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.input_dim
            )));
        }
        Ok(self.eval(input))
    }

    /// Like [`Mlp::forward`] but panics on a length mismatch.
    pub fn eval(&self, input: &[f64]) -> f64 {
        assert_eq!(input.len(), self.input_dim, "input length");
        let mut trace = Trace::default();
        self.forward_trace(input, &mut trace)
    }

    /// Forward pass that records every layer's pre-activation and output in
    /// `trace` for a subsequent [`Mlp::backprop`].
    pub fn forward_trace(&self, input: &[f64], trace: &mut Trace) -> f64 {
        trace.prepare(self);
        trace.input.clear();
        trace.input.extend_from_slice(input);
        let hidden = self.layers.len() - 1;
        for i in 0..self.layers.len() {
            let (before, after) = trace.post.split_at_mut(i);
            let src: &[f64] = if i == 0 { &trace.input } else { &before[i - 1] };
            self.layers[i].apply(src, &mut trace.pre[i]);
            let dst = &mut after[0];
            for (o, &z) in dst.iter_mut().zip(&trace.pre[i]) {
                *o = if i < hidden { z.max(0.0) } else { z };
            }
        }
        let mut out = trace.post[hidden][0];
        if let Some(skip) = &self.skip {
            out += skip.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
        out
    }

    /// Accumulates `upstream * d(output)/d(params)` for the pass recorded in
    /// `trace` into `grads`. At a ReLU kink (pre-activation exactly 0) the
    /// subgradient 0 is used.
    pub fn backprop(&self, trace: &mut Trace, upstream: f64, grads: &mut Gradients) -> Result<()> {
        let last = self.layers.len() - 1;
        trace.delta[last][0] = upstream;
        let mut offset = self.param_count() - self.skip.as_ref().map_or(0, Vec::len);
        if let Some(skip) = &self.skip {
            for (k, x) in trace.input.iter().enumerate() {
                grads.values[offset + k] += upstream * x;
            }
            debug_assert_eq!(skip.len(), trace.input.len());
        }
        for i in (0..=last).rev() {
            let layer = &self.layers[i];
            offset -= layer.param_count();
            let (lower, upper) = trace.delta.split_at_mut(i);
            let delta = &upper[0];
            if delta.iter().any(|d| !d.is_finite()) {
                return Err(Error::Numerical { layer: i });
            }
            let src: &[f64] = if i == 0 { &trace.input } else { &trace.post[i - 1] };
            for r in 0..layer.outputs {
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                let base = offset + r * layer.inputs;
                for (c, x) in src.iter().enumerate() {
                    grads.values[base + c] += d * x;
                }
                grads.values[offset + layer.weights.len() + r] += d;
            }
            if i > 0 {
                let below = &mut lower[i - 1];
                for (c, b) in below.iter_mut().enumerate() {
                    if trace.pre[i - 1][c] > 0.0 {
                        let mut acc = 0.0;
                        for r in 0..layer.outputs {
                            acc += delta[r] * layer.weight(r, c);
                        }
                        *b = acc;
                    } else {
                        *b = 0.0;
                    }
                }
            }
        }
        Ok(())
    }

    /// Sum over `batch` of `upstream * gradient of the output` at each input.
    pub fn gradients(&self, batch: &[(Vec<f64>, f64)]) -> Result<Gradients> {
        if batch.is_empty() {
            return Err(contract("gradient batch must be nonempty"));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut trace = Trace::default();
        for (input, upstream) in batch {
            if input.len() != self.input_dim {
                return Err(contract("gradient input has wrong length"));
            }
            let out = self.forward_trace(input, &mut trace);
            if !out.is_finite() {
                return Err(Error::Numerical { layer: self.layers.len() - 1 });
            }
            self.backprop(&mut trace, *upstream, &mut grads)?;
        }
        Ok(grads)
    }

    /// Adds `delta` to the output bias.
    pub fn offset_output(&mut self, delta: f64) {
        let out = self.layers.last_mut().expect("output layer");
        out.biases[0] += delta;
    }

    /// Removes hidden node `node` from hidden layer `layer`: its row in that
    /// layer and its column in the next one.
    pub fn remove_hidden_node(&mut self, layer: usize, node: usize) -> Result<()> {
        let hidden = self.layers.len() - 1;
        if layer >= hidden || node >= self.layers[layer].outputs {
            return Err(contract(format!("no hidden node ({layer}, {node})")));
        }
        if self.layers[layer].outputs == 1 {
            return Err(contract("cannot remove the last node of a hidden layer"));
        }
        self.layers[layer].remove_output(node);
        self.layers[layer + 1].remove_input(node);
        Ok(())
    }

    /// Restriction to the listed hidden nodes, one ascending index list per
    /// hidden layer.
    pub fn restrict(&self, keep: &[Vec<usize>]) -> Result<Self> {
        let hidden = self.layers.len() - 1;
        if keep.len() != hidden {
            return Err(contract("one index set per hidden layer required"));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        let all_inputs: Vec<usize> = (0..self.input_dim).collect();
        let mut cols: &[usize] = &all_inputs;
        let out_all = vec![0usize];
        for (i, layer) in self.layers.iter().enumerate() {
            let rows: &[usize] = if i < hidden { &keep[i] } else { &out_all };
            if rows.is_empty() || rows.iter().any(|&r| r >= layer.outputs) {
                return Err(contract(format!("invalid index set for layer {i}")));
            }
            let weights = rows
                .iter()
                .flat_map(|&r| cols.iter().map(move |&c| layer.weight(r, c)))
                .collect();
            let biases = rows.iter().map(|&r| layer.biases[r]).collect();
            layers.push(Dense::new(cols.len(), rows.len(), weights, biases)?);
            cols = rows;
        }
        Self::new(self.input_dim, layers, self.skip.clone())
    }
}

/// Per-pass activations kept for reverse-mode differentiation.
#[derive(Debug, Default, Clone)]
pub struct Trace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Trace {
    fn prepare(&mut self, net: &Mlp) {
        let shape_ok = self.pre.len() == net.layers.len()
            && self.pre.iter().zip(&net.layers).all(|(p, l)| p.len() == l.outputs);
        if !shape_ok {
            self.pre = net.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
            self.post = self.pre.clone();
            self.delta = self.pre.clone();
        }
    }

    /// Pre-activations of hidden layer `layer` from the last recorded pass.
    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }
}

/// Parameter-shaped gradient values in the network's flat parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    values: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self { values: vec![0.0; net.param_count()] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        let len = net.param_count();
        Self {
            step: 0,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn adam_step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        let len = net.param_count();
        if grads.values.len() != len || self.first_moment.len() != len {
            return Err(contract("Adam state, gradients and network shapes differ"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (i, p) in net.params_mut().enumerate() {
            let g = grads.values[i];
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
