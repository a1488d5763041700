//! Minimal dense network with reverse-mode gradients and an RMSprop
//! optimizer: exactly what the actor-critic trainer needs, nothing more.
//!
//! Hidden layers are affine followed by tanh; the output layer is affine.
//! Parameter updates are single-writer; forward/backward on a frozen
//! parameter snapshot may run from any number of threads.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense MLP parameter store. Layer `k` maps `layer_sizes[k]` inputs to
/// `layer_sizes[k+1]` outputs; weights are row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

/// Gradients (or any other per-parameter tensor set) shaped like an
/// [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

/// Per-layer pre- and post-activations retained by [`MlpParams::forward`]
/// for the backward pass.
#[derive(Debug, Clone)]
pub struct ActivationTrace<T> {
    /// `layer_inputs[k]` is the activation entering layer `k`;
    /// `layer_inputs[0]` is the network input.
    layer_inputs: Vec<Vec<T>>,
    /// Affine outputs `z` of every layer, before the hidden tanh.
    pre_activations: Vec<Vec<T>>,
}

/// Dot product with four independent accumulators; the split breaks the
/// floating-point dependency chain that otherwise serializes the reduction
/// and lets the lanes vectorize.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    let (mut s0, mut s1, mut s2, mut s3) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (xa, xb) in ca.zip(cb) {
        s0 = s0 + xa[0] * xb[0];
        s1 = s1 + xa[1] * xb[1];
        s2 = s2 + xa[2] * xb[2];
        s3 = s3 + xa[3] * xb[3];
    }
    let mut acc = (s0 + s1) + (s2 + s3);
    for (xa, xb) in ra.iter().zip(rb) {
        acc = acc + *xa * *xb;
    }
    acc
}

fn validate_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Dimension(format!(
            "need at least input and output sizes, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::Dimension(format!("zero-width layer in {layer_sizes:?}")));
    }
    Ok(())
}

impl<T: Scalar> MlpParams<T> {
    /// All-zero parameters for the given architecture.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_layer_sizes(layer_sizes)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_sizes.windows(2) {
            weights.push(vec![T::zero(); pair[0] * pair[1]]);
            biases.push(vec![T::zero(); pair[1]]);
        }
        Ok(MlpParams { layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    /// Xavier-uniform weights (`±sqrt(6 / (fan_in + fan_out))`), zero biases.
    /// Draws layer by layer, row-major, so a given RNG state yields a
    /// reproducible parameter set.
    pub fn init_xavier<R: Rng>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(layer_sizes)?;
        for (k, pair) in layer_sizes.windows(2).enumerate() {
            let bound = (6.0 / (pair[0] + pair[1]) as f64).sqrt();
            for w in params.weights[k].iter_mut() {
                let u: f64 = rng.random();
                *w = T::cast(bound * (2.0 * u - 1.0));
            }
        }
        Ok(params)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::Dimension(format!(
                "input length {} does not match first layer size {}",
                input.len(),
                self.input_len()
            )));
        }
        Ok(())
    }

    fn affine(&self, layer: usize, input: &[T], out: &mut Vec<T>) {
        let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        let w = &self.weights[layer];
        let b = &self.biases[layer];
        out.clear();
        out.reserve(n_out);
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            out.push(b[o] + dot(row, input));
        }
    }

    /// Network output without a trace; the cheap path for rollouts.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input)?;
        let n_layers = self.n_layers();
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for k in 0..n_layers {
            self.affine(k, &cur, &mut next);
            if k + 1 < n_layers {
                for v in next.iter_mut() {
                    *v = v.tanh();
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Network output plus the activation trace needed by [`Self::backward`].
    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, ActivationTrace<T>)> {
        self.check_input(input)?;
        let n_layers = self.n_layers();
        let mut layer_inputs = Vec::with_capacity(n_layers);
        let mut pre_activations = Vec::with_capacity(n_layers);
        let mut cur = input.to_vec();
        for k in 0..n_layers {
            let mut z = Vec::new();
            self.affine(k, &cur, &mut z);
            layer_inputs.push(std::mem::replace(&mut cur, Vec::new()));
            pre_activations.push(z.clone());
            if k + 1 < n_layers {
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
            cur = z;
        }
        Ok((cur, ActivationTrace { layer_inputs, pre_activations }))
    }

    /// Exact reverse-mode gradients of the traced computation with respect
    /// to every weight and bias, seeded by `output_grad`.
    pub fn backward(&self, trace: &ActivationTrace<T>, output_grad: &[T]) -> Result<MlpGrads<T>> {
        let mut grads = MlpGrads::zeros_like(self);
        self.backward_accumulate(trace, output_grad, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Self::backward`] but adds into an existing gradient buffer;
    /// the batched update uses this to avoid one allocation and one full
    /// accumulation pass per sample.
    pub fn backward_accumulate(
        &self,
        trace: &ActivationTrace<T>,
        output_grad: &[T],
        grads: &mut MlpGrads<T>,
    ) -> Result<()> {
        let n_layers = self.n_layers();
        if trace.layer_inputs.len() != n_layers || trace.pre_activations.len() != n_layers {
            return Err(Error::Dimension("trace layer count does not match parameters".into()));
        }
        for k in 0..n_layers {
            if trace.layer_inputs[k].len() != self.layer_sizes[k]
                || trace.pre_activations[k].len() != self.layer_sizes[k + 1]
            {
                return Err(Error::Dimension(format!("stale trace: shape mismatch at layer {k}")));
            }
        }
        if output_grad.len() != self.output_len() {
            return Err(Error::Dimension(format!(
                "output grad length {} does not match output size {}",
                output_grad.len(),
                self.output_len()
            )));
        }
        if grads.weights.len() != n_layers
            || grads.weights.iter().zip(&self.weights).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::Dimension("gradient buffer shape mismatch".into()));
        }

        let mut dz = output_grad.to_vec();
        for k in (0..n_layers).rev() {
            let (n_in, n_out) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
            let input = &trace.layer_inputs[k];
            {
                let gw = &mut grads.weights[k];
                for o in 0..n_out {
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    let d = dz[o];
                    for (g, &x) in row.iter_mut().zip(input.iter()) {
                        *g = *g + d * x;
                    }
                    grads.biases[k][o] = grads.biases[k][o] + d;
                }
            }
            if k > 0 {
                let w = &self.weights[k];
                let mut dx = vec![T::zero(); n_in];
                for o in 0..n_out {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    let d = dz[o];
                    for (acc, &wv) in dx.iter_mut().zip(row.iter()) {
                        *acc = *acc + wv * d;
                    }
                }
                // input[k] holds tanh(z) of the previous hidden layer
                for (acc, &h) in dx.iter_mut().zip(input.iter()) {
                    *acc = *acc * (T::one() - h * h);
                }
                dz = dx;
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().chain(self.biases.iter()).all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Writes one checkpoint block: a `mlp-v1` header followed by one line
    /// per tensor (name, shape, 17-significant-digit values).
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let sizes: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        writeln!(w, "mlp-v1 {}", sizes.join(","))?;
        for k in 0..self.n_layers() {
            let (n_in, n_out) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
            write!(w, "w{k} {n_out}x{n_in}")?;
            for v in &self.weights[k] {
                write!(w, " {:.16e}", v.as_f64())?;
            }
            writeln!(w)?;
            write!(w, "b{k} {n_out}")?;
            for v in &self.biases[k] {
                write!(w, " {:.16e}", v.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads one checkpoint block from a line-based reader, leaving the
    /// reader positioned after the block so blocks can be concatenated.
    pub fn read_checkpoint<R: BufRead>(reader: &mut R) -> Result<Self> {
        let header = read_line(reader, "header")?;
        let sizes_str = header
            .strip_prefix("mlp-v1 ")
            .ok_or_else(|| bad_format("header", format!("expected `mlp-v1 <sizes>`, got `{header}`")))?;
        let layer_sizes: Vec<usize> = sizes_str
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad_format("header", format!("bad layer sizes `{sizes_str}`: {e}")))?;
        validate_layer_sizes(&layer_sizes)?;

        let mut params = Self::zeros(&layer_sizes)?;
        for k in 0..params.n_layers() {
            let (n_in, n_out) = (layer_sizes[k], layer_sizes[k + 1]);
            let name = format!("w{k}");
            let vals = read_tensor_line(reader, &name, &format!("{n_out}x{n_in}"), n_in * n_out)?;
            params.weights[k] = vals.into_iter().map(T::cast).collect();
            let name = format!("b{k}");
            let vals = read_tensor_line(reader, &name, &n_out.to_string(), n_out)?;
            params.biases[k] = vals.into_iter().map(T::cast).collect();
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_checkpoint(&mut buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Loads a single-block checkpoint file, optionally requiring an exact
    /// architecture.
    pub fn load(path: &Path, expected_layer_sizes: Option<&[usize]>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut reader = std::io::BufReader::new(file);
        let params = Self::read_checkpoint(&mut reader)?;
        if let Some(expected) = expected_layer_sizes {
            params.require_arch(expected)?;
        }
        Ok(params)
    }

    pub fn require_arch(&self, expected: &[usize]) -> Result<()> {
        if self.layer_sizes != expected {
            return Err(Error::Dimension(format!(
                "checkpoint architecture {:?} does not match expected {:?}",
                self.layer_sizes, expected
            )));
        }
        Ok(())
    }
}

fn bad_format(section: &str, reason: String) -> Error {
    Error::CheckpointFormat { section: section.to_string(), reason }
}

fn read_line<R: BufRead>(reader: &mut R, section: &str) -> Result<String> {
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| bad_format(section, format!("read failed: {e}")))?;
    if n == 0 {
        return Err(bad_format(section, "unexpected end of file".into()));
    }
    Ok(line.trim_end_matches(['\n', '\r']).to_string())
}

fn read_tensor_line<R: BufRead>(reader: &mut R, name: &str, shape: &str, count: usize) -> Result<Vec<f64>> {
    let line = read_line(reader, name)?;
    let mut parts = line.split_ascii_whitespace();
    let got_name = parts.next().unwrap_or("");
    if got_name != name {
        return Err(bad_format(name, format!("expected tensor `{name}`, found `{got_name}`")));
    }
    let got_shape = parts.next().unwrap_or("");
    if got_shape != shape {
        return Err(Error::Dimension(format!(
            "tensor `{name}` has shape {got_shape}, expected {shape}"
        )));
    }
    let values: Vec<f64> = parts
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| bad_format(name, format!("bad value: {e}")))?;
    if values.len() != count {
        return Err(bad_format(name, format!("expected {count} values, found {}", values.len())));
    }
    Ok(values)
}

impl<T: Scalar> MlpGrads<T> {
    pub fn zeros_like(params: &MlpParams<T>) -> Self {
        MlpGrads {
            weights: params.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &MlpGrads<T>) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = *x + *y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = *x + *y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for v in t.iter_mut() {
                *v = *v * factor;
            }
        }
    }

    pub fn global_norm(&self) -> T {
        let mut acc = T::zero();
        for t in self.weights.iter().chain(self.biases.iter()) {
            for v in t {
                acc = acc + *v * *v;
            }
        }
        acc.sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().chain(self.biases.iter()).all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Scales a set of gradient blocks so their joint Euclidean norm does not
/// exceed `max_norm`; returns the pre-clip norm.
pub fn clip_global_norm<T: Scalar>(grads: &mut [&mut MlpGrads<T>], max_norm: T) -> T {
    let mut acc = T::zero();
    for g in grads.iter() {
        let n = g.global_norm();
        acc = acc + n * n;
    }
    let norm = acc.sqrt();
    if norm > max_norm && norm > T::zero() {
        let factor = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale(factor);
        }
    }
    norm
}

/// Numerically stable softmax (max-subtracted); entries are strictly
/// positive except under extreme logit spreads where underflow to zero is
/// tolerated.
pub fn softmax_logits_to_dist<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Log-probabilities matching [`softmax_logits_to_dist`] without the
/// intermediate exponentiation of the result.
pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let log_sum: T = logits.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
    logits.iter().map(|&v| v - max - log_sum).collect()
}

/// RMSprop optimizer state: one accumulator per parameter, element-wise
/// `acc <- rho*acc + (1-rho)*g^2`, `p <- p - lr*g/sqrt(acc + eps)`.
#[derive(Debug, Clone)]
pub struct RmspropState<T> {
    pub learning_rate: T,
    pub decay_rho: T,
    pub epsilon: T,
    pub accumulators: MlpGrads<T>,
}

impl<T: Scalar> RmspropState<T> {
    pub fn new(params: &MlpParams<T>, learning_rate: T, decay_rho: T, epsilon: T) -> Self {
        RmspropState { learning_rate, decay_rho, epsilon, accumulators: MlpGrads::zeros_like(params) }
    }

    /// Defaults: learning rate 5e-4, decay 0.99, epsilon 1e-8.
    pub fn with_defaults(params: &MlpParams<T>) -> Self {
        Self::new(params, T::cast(5e-4), T::cast(0.99), T::cast(1e-8))
    }

    /// One optimizer step. Non-finite gradients abort with a
    /// training-divergence error before touching the parameters.
    pub fn step(&mut self, params: &mut MlpParams<T>, grads: &MlpGrads<T>) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::TrainingDivergence { detail: "non-finite gradient in optimizer step".into() });
        }
        let rho = self.decay_rho;
        let one_minus_rho = T::one() - rho;
        let lr = self.learning_rate;
        let eps = self.epsilon;
        let update = |p: &mut Vec<T>, g: &Vec<T>, acc: &mut Vec<T>| {
            for ((pv, &gv), av) in p.iter_mut().zip(g.iter()).zip(acc.iter_mut()) {
                *av = rho * *av + one_minus_rho * gv * gv;
                *pv = *pv - lr * gv / (*av + eps).sqrt();
            }
        };
        for k in 0..params.weights.len() {
            update(&mut params.weights[k], &grads.weights[k], &mut self.accumulators.weights[k]);
            update(&mut params.biases[k], &grads.biases[k], &mut self.accumulators.biases[k]);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn forward_zero_params_gives_zero_output() {
        let p = MlpParams::<f64>::zeros(&[3, 4, 2]).unwrap();
        let (out, _) = p.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let mut p = MlpParams::<f64>::zeros(&[3, 3]).unwrap();
        for i in 0..3 {
            p.weights[0][i * 3 + i] = 1.0;
        }
        let input = [0.3, -1.2, 4.0];
        let (out, _) = p.forward(&input).unwrap();
        assert_eq!(out, input.to_vec());
        assert_eq!(p.predict(&input).unwrap(), input.to_vec());
    }

    /// Straight-line scripted forward pass, independent of the library path.
    fn scripted_forward(p: &MlpParams<f64>, input: &[f64]) -> Vec<f64> {
        let sizes = p.layer_sizes();
        let mut x = input.to_vec();
        for k in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[k], sizes[k + 1]);
            let mut y = vec![0.0; n_out];
            for o in 0..n_out {
                let mut z = p.biases[k][o];
                for i in 0..n_in {
                    z += p.weights[k][o * n_in + i] * x[i];
                }
                y[o] = if k + 1 < sizes.len() - 1 { z.tanh() } else { z };
            }
            x = y;
        }
        x
    }

    #[test]
    fn randomized_forward_matches_scripted_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let p = MlpParams::<f64>::init_xavier(&[2, 3, 1], &mut rng).unwrap();
        let input = [0.4, -0.9];
        let (out, _) = p.forward(&input).unwrap();
        let expect = scripted_forward(&p, &input);
        assert!((out[0] - expect[0]).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        let p = MlpParams::<f64>::zeros(&[3, 2]).unwrap();
        assert!(matches!(p.forward(&[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn backward_zero_output_grad_gives_zero_grads() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p = MlpParams::<f64>::init_xavier(&[3, 5, 2], &mut rng).unwrap();
        let (_, trace) = p.forward(&[0.1, 0.2, 0.3]).unwrap();
        let g = p.backward(&trace, &[0.0, 0.0]).unwrap();
        assert!(g.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(g.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn scalar_tanh_gradient_at_zero_is_one() {
        // f(w) = tanh(w * x) with x = 1, w = 0, read out through an identity
        // output layer: df/dw = tanh'(0) = 1.
        let mut p = MlpParams::<f64>::zeros(&[1, 1, 1]).unwrap();
        p.weights[1][0] = 1.0;
        let (_, trace) = p.forward(&[1.0]).unwrap();
        let g = p.backward(&trace, &[1.0]).unwrap();
        assert!((g.weights[0][0] - 1.0).abs() < 1e-15);
    }

    fn finite_diff_check(layer_sizes: &[usize], seed: u64) -> f64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let p = MlpParams::<f64>::init_xavier(layer_sizes, &mut rng).unwrap();
        let input: Vec<f64> = (0..layer_sizes[0]).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let combo: Vec<f64> = (0..*layer_sizes.last().unwrap())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let loss = |p: &MlpParams<f64>| -> f64 {
            let out = p.predict(&input).unwrap();
            out.iter().zip(&combo).map(|(o, c)| o * c).sum()
        };
        let (_, trace) = p.forward(&input).unwrap();
        let analytic = p.backward(&trace, &combo).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for k in 0..p.n_layers() {
            for idx in 0..p.weights[k].len() {
                let mut plus = p.clone();
                plus.weights[k][idx] += h;
                let mut minus = p.clone();
                minus.weights[k][idx] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let a = analytic.weights[k][idx];
                let scale = a.abs().max(numeric.abs());
                let err = if (a - numeric).abs() < 1e-9 { 0.0 } else { (a - numeric).abs() / scale };
                worst = worst.max(err);
            }
            for idx in 0..p.biases[k].len() {
                let mut plus = p.clone();
                plus.biases[k][idx] += h;
                let mut minus = p.clone();
                minus.biases[k][idx] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let a = analytic.biases[k][idx];
                let scale = a.abs().max(numeric.abs());
                let err = if (a - numeric).abs() < 1e-9 { 0.0 } else { (a - numeric).abs() / scale };
                worst = worst.max(err);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let worst = finite_diff_check(&[4, 8, 3], 42);
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn softmax_cases() {
        let d = softmax_logits_to_dist(&[0.0f64, 0.0, 0.0, 0.0]);
        for v in &d {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let d = softmax_logits_to_dist(&[1000.0f64, 0.0]);
        assert!(d.iter().all(|v| v.is_finite()));
        assert!((d[0] - 1.0).abs() < 1e-12);
        let d = softmax_logits_to_dist(&[1.0f64.ln(), 3.0f64.ln()]);
        assert!((d[0] - 0.25).abs() < 1e-12);
        assert!((d[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariance() {
        let logits = [0.3f64, -1.7, 2.2, 0.0];
        let shifted: Vec<f64> = logits.iter().map(|v| v + 123.456).collect();
        let a = softmax_logits_to_dist(&logits);
        let b = softmax_logits_to_dist(&shifted);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let sum: f64 = a.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_softmax_consistent_with_softmax() {
        let logits = [0.5f64, -0.3, 1.9];
        let p = softmax_logits_to_dist(&logits);
        let lp = log_softmax(&logits);
        for (a, b) in p.iter().zip(&lp) {
            assert!((a.ln() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rmsprop_zero_gradient_only_decays_accumulators() {
        let mut p = MlpParams::<f64>::zeros(&[1, 1]).unwrap();
        p.weights[0][0] = 0.7;
        let mut state = RmspropState::with_defaults(&p);
        state.accumulators.weights[0][0] = 0.5;
        let grads = MlpGrads::zeros_like(&p);
        let before = p.clone();
        state.step(&mut p, &grads).unwrap();
        // zero grad: param moves by lr*0/sqrt(acc+eps) = 0
        assert_eq!(p, before);
        assert!((state.accumulators.weights[0][0] - 0.495).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_single_scalar_frozen_update() {
        let mut p = MlpParams::<f64>::zeros(&[1, 1]).unwrap();
        let mut state = RmspropState::with_defaults(&p);
        let mut grads = MlpGrads::zeros_like(&p);
        grads.weights[0][0] = 1.0;
        state.step(&mut p, &grads).unwrap();
        assert!((state.accumulators.weights[0][0] - 0.01).abs() < 1e-15);
        assert!((p.weights[0][0] + 0.004999997500001875).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_repeated_gradient_update_approaches_learning_rate() {
        let mut p = MlpParams::<f64>::zeros(&[1, 1]).unwrap();
        let mut state = RmspropState::with_defaults(&p);
        let mut grads = MlpGrads::zeros_like(&p);
        grads.weights[0][0] = 1.0;
        let mut last = 0.0;
        for _ in 0..2000 {
            last = p.weights[0][0];
            state.step(&mut p, &grads).unwrap();
        }
        let step = (p.weights[0][0] - last).abs();
        assert!((step - 5e-4).abs() < 1e-6, "step size {step}");
    }

    #[test]
    fn rmsprop_rejects_non_finite_gradient() {
        let mut p = MlpParams::<f64>::zeros(&[1, 1]).unwrap();
        let mut state = RmspropState::with_defaults(&p);
        let mut grads = MlpGrads::zeros_like(&p);
        grads.weights[0][0] = f64::NAN;
        assert!(matches!(state.step(&mut p, &grads), Err(Error::TrainingDivergence { .. })));
    }

    #[test]
    fn clip_global_norm_joint() {
        let p = MlpParams::<f64>::zeros(&[1, 1]).unwrap();
        let mut a = MlpGrads::zeros_like(&p);
        let mut b = MlpGrads::zeros_like(&p);
        a.weights[0][0] = 3.0;
        b.weights[0][0] = 4.0;
        let pre = clip_global_norm(&mut [&mut a, &mut b], 0.5);
        assert!((pre - 5.0).abs() < 1e-12);
        let post = (a.global_norm().powi(2) + b.global_norm().powi(2)).sqrt();
        assert!((post - 0.5).abs() < 1e-12);
        // under the limit: untouched
        let mut c = MlpGrads::zeros_like(&p);
        c.weights[0][0] = 0.1;
        clip_global_norm(&mut [&mut c], 0.5);
        assert_eq!(c.weights[0][0], 0.1);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let p = MlpParams::<f64>::init_xavier(&[3, 8, 4], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        p.save(&path).unwrap();
        let q = MlpParams::<f64>::load(&path, Some(&[3, 8, 4])).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn checkpoint_round_trip_is_exact_f32() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let p = MlpParams::<f32>::init_xavier(&[2, 4, 2], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net32.txt");
        p.save(&path).unwrap();
        let q = MlpParams::<f32>::load(&path, None).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn truncated_checkpoint_reports_offending_section() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let p = MlpParams::<f64>::init_xavier(&[2, 3, 1], &mut rng).unwrap();
        let mut bytes = Vec::new();
        p.write_checkpoint(&mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.txt");
        std::fs::write(&path, truncated).unwrap();
        match MlpParams::<f64>::load(&path, None) {
            Err(Error::CheckpointFormat { section, .. }) => assert_eq!(section, "w1"),
            other => panic!("expected checkpoint format error, got {other:?}"),
        }
    }

    #[test]
    fn architecture_mismatch_is_dimension_error() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let p = MlpParams::<f64>::init_xavier(&[2, 3, 1], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        p.save(&path).unwrap();
        assert!(matches!(MlpParams::<f64>::load(&path, Some(&[2, 4, 1])), Err(Error::Dimension(_))));
    }

    #[test]
    fn xavier_init_is_seed_deterministic() {
        let a = MlpParams::<f64>::init_xavier(&[4, 8, 2], &mut ChaCha20Rng::seed_from_u64(11)).unwrap();
        let b = MlpParams::<f64>::init_xavier(&[4, 8, 2], &mut ChaCha20Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }
}
