use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::NnError;
use crate::rng::SplitMix64;

/// Layer widths of a fully connected rectifier network, input first.
///
/// Parameters live in one flat slice: for each layer, the `fan_in x fan_out` weight
/// matrix in row-major order followed by the `fan_out` biases. Hidden layers use
/// ReLU; the output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub sizes: Vec<usize>,
}

/// A network input: hashed sparse features or a dense vector.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    Sparse(&'a FeatureVector),
    Dense(&'a [f64]),
}

impl Input<'_> {
    fn dim(&self) -> usize {
        match self {
            Input::Sparse(f) => f.dim,
            Input::Dense(v) => v.len(),
        }
    }
}

/// Post-activation values of every layer from one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    pub activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least one layer")
    }
}

impl Layout {
    pub fn new(sizes: Vec<usize>) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(NnError::Shape(format!("bad layer sizes {sizes:?}")));
        }
        Ok(Layout { sizes })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Offset of layer `l`'s weight block; its biases follow at `+ fan_in * fan_out`.
    fn offset(&self, l: usize) -> usize {
        self.sizes[..=l].windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Seeded uniform init in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(&self, rng: &mut SplitMix64) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count());
        for w in self.sizes.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| (2.0 * rng.unit() - 1.0) * bound));
            params.extend(std::iter::repeat(0.0).take(w[1]));
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: Input<'_>) -> Result<Trace, NnError> {
        if input.dim() != self.input_dim() {
            return Err(NnError::Shape(format!(
                "input has dimension {}, network expects {}",
                input.dim(),
                self.input_dim()
            )));
        }
        if params.len() != self.param_count() {
            return Err(NnError::Shape(format!(
                "{} parameters for a layout needing {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.num_layers());
        let mut off = 0;
        for l in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &params[off..off + fan_in * fan_out];
            let b = &params[off + fan_in * fan_out..off + (fan_in + 1) * fan_out];
            let mut z = b.to_vec();
            match (l, input) {
                (0, Input::Sparse(f)) => {
                    for &(i, x) in &f.entries {
                        let row = &w[i as usize * fan_out..(i as usize + 1) * fan_out];
                        axpy(x, row, &mut z);
                    }
                }
                _ => {
                    let prev: &[f64] = match (l, input) {
                        (0, Input::Dense(v)) => v,
                        _ => &activations[l - 1],
                    };
                    for (i, &x) in prev.iter().enumerate() {
                        if x != 0.0 {
                            axpy(x, &w[i * fan_out..(i + 1) * fan_out], &mut z);
                        }
                    }
                }
            }
            if l + 1 < self.num_layers() {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(z);
            off += (fan_in + 1) * fan_out;
        }
        Ok(Trace { activations })
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    /// Returns `d loss / d input` for dense inputs.
    pub fn backward(
        &self,
        params: &[f64],
        input: Input<'_>,
        trace: &Trace,
        d_output: &[f64],
        grads: &mut [f64],
    ) -> Option<Vec<f64>> {
        debug_assert_eq!(grads.len(), self.param_count());
        debug_assert_eq!(d_output.len(), self.output_dim());
        let mut delta = d_output.to_vec();
        let mut d_input = None;
        for l in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let w = &params[off..off + fan_in * fan_out];
            let (gw, gb) = grads[off..off + (fan_in + 1) * fan_out].split_at_mut(fan_in * fan_out);
            for (g, d) in gb.iter_mut().zip(&delta) {
                *g += d;
            }
            if l == 0 {
                match input {
                    Input::Sparse(f) => {
                        for &(i, x) in &f.entries {
                            axpy(x, &delta, &mut gw[i as usize * fan_out..(i as usize + 1) * fan_out]);
                        }
                    }
                    Input::Dense(v) => {
                        for (i, &x) in v.iter().enumerate() {
                            if x != 0.0 {
                                axpy(x, &delta, &mut gw[i * fan_out..(i + 1) * fan_out]);
                            }
                        }
                        d_input = Some(
                            (0..fan_in)
                                .map(|i| dot(&w[i * fan_out..(i + 1) * fan_out], &delta))
                                .collect(),
                        );
                    }
                }
            } else {
                let prev = &trace.activations[l - 1];
                let mut next_delta = vec![0.0; fan_in];
                for (i, &a) in prev.iter().enumerate() {
                    if a > 0.0 {
                        axpy(a, &delta, &mut gw[i * fan_out..(i + 1) * fan_out]);
                        // ReLU gate: the unit was active.
                        next_delta[i] = dot(&w[i * fan_out..(i + 1) * fan_out], &delta);
                    }
                }
                delta = next_delta;
            }
        }
        d_input
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A layout together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layout: Layout,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, seed: u64) -> Result<Self, NnError> {
        let layout = Layout::new(sizes)?;
        let params = layout.init(&mut SplitMix64::new(seed));
        Ok(Mlp { layout, params })
    }

    pub fn zeros(sizes: Vec<usize>) -> Result<Self, NnError> {
        let layout = Layout::new(sizes)?;
        let params = vec![0.0; layout.param_count()];
        Ok(Mlp { layout, params })
    }

    pub fn forward(&self, input: Input<'_>) -> Result<Vec<f64>, NnError> {
        let mut trace = self.layout.forward(&self.params, input)?;
        Ok(trace.activations.pop().unwrap())
    }

    pub fn trace(&self, input: Input<'_>) -> Result<Trace, NnError> {
        self.layout.forward(&self.params, input)
    }

    pub fn backward(&self, input: Input<'_>, trace: &Trace, d_output: &[f64], grads: &mut [f64]) -> Option<Vec<f64>> {
        self.layout.backward(&self.params, input, trace, d_output, grads)
    }

    pub fn check_finite(&self) -> Result<(), NnError> {
        if self.params.iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(NnError::NonFinite("parameters".into()))
        }
    }
}
