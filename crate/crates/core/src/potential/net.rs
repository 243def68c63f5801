use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::Config(format!("unknown activation `{s}`"))),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Feedforward network whose outputs are the potential heads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Layer outputs recorded by [`DenseNet::forward`]; `values[0]` is the input.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    values: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Scratch buffers reused across backward passes.
#[derive(Clone, Debug, Default)]
pub struct BackwardScratch {
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl DenseNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::InvalidArgument(format!("layer {i} has inconsistent shapes")));
            }
            if l.weights.iter().chain(&l.bias).any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
            }
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::InvalidArgument(format!(
                    "adjacent layer widths differ ({} vs {})",
                    w[0].outputs, w[1].inputs
                )));
            }
        }
        if layers.last().unwrap().activation != Activation::Identity {
            return Err(Error::InvalidArgument("final activation must be identity".into()));
        }
        Ok(DenseNet { layers })
    }

    /// Network `input -> hidden.. -> outputs` with uniform init in
    /// `[-s, s]`, `s = fan_in^(-1/2)`.
    pub fn random<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        activation: Activation,
        outputs: usize,
        rng: &mut R,
    ) -> Self {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(outputs);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 2 == widths.len() {
                    Activation::Identity
                } else {
                    activation
                };
                let mut l = Layer::zeros(w[0], w[1], act);
                let s = (w[0].max(1) as f64).powf(-0.5);
                for x in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                    *x = rng.random_range(-s..=s);
                }
                l
            })
            .collect();
        DenseNet { layers }
    }

    pub fn zeros(input: usize, hidden: &[usize], activation: Activation, outputs: usize) -> Self {
        let mut net = DenseNet::random(input, hidden, activation, outputs, &mut rand::rng());
        net.for_each_param_mut(|x| *x = 0.0);
        net
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters in flat order: per layer, weights then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut it = flat.iter();
        self.for_each_param_mut(|x| *x = *it.next().unwrap());
    }

    fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(&mut f);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Tape> {
        let mut tape = Tape::default();
        self.forward_into(input, &mut tape)?;
        Ok(tape)
    }

    /// Forward pass reusing the tape's allocations.
    pub fn forward_into(&self, input: &[f64], tape: &mut Tape) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::InvalidArgument(format!(
                "input width {} does not match network width {}",
                input.len(),
                self.input_width()
            )));
        }
        tape.values.resize_with(self.layers.len() + 1, Vec::new);
        tape.values[0].clear();
        tape.values[0].extend_from_slice(input);
        for (i, l) in self.layers.iter().enumerate() {
            let (head, tail) = tape.values.split_at_mut(i + 1);
            let x = &head[i];
            let y = &mut tail[0];
            y.clear();
            for o in 0..l.outputs {
                let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                let z = l.bias[o] + dot(row, x);
                y.push(l.activation.apply(z));
            }
        }
        if tape.output().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("network produced a non-finite output".into()));
        }
        Ok(())
    }

    /// Accumulates into `param_grads` (flat order) and, if given, into
    /// `input_grads` the gradient of `<cotangent, output>`.
    pub fn backward(
        &self,
        tape: &Tape,
        cotangent: &[f64],
        param_grads: &mut [f64],
        input_grads: Option<&mut [f64]>,
        scratch: &mut BackwardScratch,
    ) -> Result<()> {
        if tape.values.len() != self.layers.len() + 1
            || tape.values[0].len() != self.input_width()
            || tape.output().len() != self.output_width()
        {
            return Err(Error::Contract("tape does not belong to this network".into()));
        }
        if cotangent.len() != self.output_width() || param_grads.len() != self.param_count() {
            return Err(Error::InvalidArgument("gradient buffer widths do not match".into()));
        }
        let BackwardScratch { delta, next } = scratch;
        delta.clear();
        delta.extend_from_slice(cotangent);
        let mut end = param_grads.len();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let y = &tape.values[i + 1];
            let x = &tape.values[i];
            for (d, &yo) in delta.iter_mut().zip(y) {
                *d *= l.activation.grad_from_output(yo);
            }
            let start = end - l.param_count();
            let (gw, gb) = param_grads[start..end].split_at_mut(l.weights.len());
            for o in 0..l.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                for (g, &xi) in row.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
            end = start;
            if i > 0 || input_grads.is_some() {
                next.clear();
                next.resize(l.inputs, 0.0);
                for o in 0..l.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                    for (nx, &w) in next.iter_mut().zip(row) {
                        *nx += d * w;
                    }
                }
                std::mem::swap(delta, next);
            }
        }
        if let Some(ig) = input_grads {
            for (g, d) in ig.iter_mut().zip(delta.iter()) {
                *g += d;
            }
        }
        Ok(())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = DenseNet::zeros(5, &[4, 3], Activation::Relu, 2);
        let tape = net.forward(&[1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(tape.output(), &[0.0, 0.0]);
    }

    #[test]
    fn identity_layer_is_a_projection() {
        let mut l = Layer::zeros(3, 2, Activation::Identity);
        l.weights = vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0];
        let net = DenseNet::new(vec![l]).unwrap();
        let out = net.forward(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(out.output(), &[9.0, -0.5]);

        let mut scratch = BackwardScratch::default();
        let mut pg = vec![0.0; net.param_count()];
        let mut ig = vec![0.0; 3];
        net.backward(&out, &[0.0, 1.0], &mut pg, Some(&mut ig), &mut scratch)
            .unwrap();
        assert_eq!(ig, vec![-1.0, 0.5, 0.0]);
    }

    #[test]
    fn forward_matches_manual_matrix_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::random(4, &[3], Activation::Sigmoid, 2, &mut rng);
        let x = random_input(&mut rng, 4);
        let got = net.forward(&x).unwrap().output().to_vec();

        let l0 = &net.layers()[0];
        let mut h = [0.0; 3];
        for o in 0..3 {
            let mut z = l0.bias[o];
            for i in 0..4 {
                z += l0.weights[o * 4 + i] * x[i];
            }
            h[o] = 1.0 / (1.0 + (-z).exp());
        }
        let l1 = &net.layers()[1];
        for o in 0..2 {
            let mut z = l1.bias[o];
            for i in 0..3 {
                z += l1.weights[o * 3 + i] * h[i];
            }
            assert!((z - got[o]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = DenseNet::random(3, &[5], Activation::Relu, 2, &mut rng);
        let tape = net.forward(&random_input(&mut rng, 3)).unwrap();
        let mut pg = vec![0.0; net.param_count()];
        let mut ig = vec![0.0; 3];
        net.backward(&tape, &[0.0, 0.0], &mut pg, Some(&mut ig), &mut BackwardScratch::default())
            .unwrap();
        assert!(pg.iter().chain(&ig).all(|&g| g == 0.0));
    }

    #[test]
    fn backward_matches_central_differences() {
        for (seed, act) in [(1, Activation::Sigmoid), (2, Activation::Relu)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = DenseNet::random(4, &[6, 5], act, 3, &mut rng);
            let x = random_input(&mut rng, 4);
            let cot = random_input(&mut rng, 3);
            let f = |net: &DenseNet, x: &[f64]| -> f64 {
                dot(net.forward(x).unwrap().output(), &cot)
            };
            let tape = net.forward(&x).unwrap();
            let mut pg = vec![0.0; net.param_count()];
            let mut ig = vec![0.0; 4];
            net.backward(&tape, &cot, &mut pg, Some(&mut ig), &mut BackwardScratch::default())
                .unwrap();

            let h = 1e-4;
            let base = net.params();
            for j in 0..base.len() {
                let mut p = base.clone();
                p[j] += h;
                net.set_params(&p);
                let fp = f(&net, &x);
                p[j] -= 2.0 * h;
                net.set_params(&p);
                let fm = f(&net, &x);
                let fd = (fp - fm) / (2.0 * h);
                let err = (fd - pg[j]).abs() / fd.abs().max(pg[j].abs()).max(1e-6);
                assert!(err < 1e-4, "param {j}: analytic {} fd {fd}", pg[j]);
            }
            net.set_params(&base);
            for i in 0..4 {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let fd = (f(&net, &xp) - f(&net, &xm)) / (2.0 * h);
                let err = (fd - ig[i]).abs() / fd.abs().max(ig[i].abs()).max(1e-6);
                assert!(err < 1e-4, "input {i}: analytic {} fd {fd}", ig[i]);
            }
        }
    }

    #[test]
    fn errors() {
        let net = DenseNet::zeros(3, &[], Activation::Relu, 1);
        assert!(net.forward(&[1.0]).is_err());
        let other = DenseNet::zeros(2, &[], Activation::Relu, 1);
        let stale = other.forward(&[0.0, 0.0]).unwrap();
        let mut pg = vec![0.0; net.param_count()];
        assert!(matches!(
            net.backward(&stale, &[1.0], &mut pg, None, &mut BackwardScratch::default()),
            Err(Error::Contract(_))
        ));
        let bad = Layer::zeros(2, 2, Activation::Relu);
        assert!(DenseNet::new(vec![bad]).is_err());
    }
}
