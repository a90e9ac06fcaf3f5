//! Dense feed-forward classifiers.
//!
//! A model is a stack of affine layers with a shared hidden activation and a
//! linear output layer producing one logit per class. All parameters live in
//! a single flat vector, laid out layer by layer: the weight matrix of a layer
//! (row-major, shape `(out_dim, in_dim)`) followed by its bias vector.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Architecture of a client classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    /// Hidden layer widths, input side first. Empty means a linear model.
    pub hidden_layers: Vec<usize>,
    pub num_classes: usize,
    pub activation: Activation,
    /// Reporting label only, e.g. "memory-efficient".
    pub capacity_tier: String,
}

impl ModelSpec {
    pub fn new(input_dim: usize, hidden_layers: Vec<usize>, num_classes: usize) -> Self {
        ModelSpec {
            input_dim,
            hidden_layers,
            num_classes,
            activation: Activation::Relu,
            capacity_tier: String::new(),
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_tier(mut self, tier: impl Into<String>) -> Self {
        self.capacity_tier = tier.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("model input_dim must be > 0"));
        }
        if self.num_classes < 2 {
            return Err(Error::config("model num_classes must be >= 2"));
        }
        if let Some(i) = self.hidden_layers.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("hidden layer {i} has zero width")));
        }
        Ok(())
    }

    /// `(in_dim, out_dim)` of every affine layer, input side first.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers.len() + 1);
        let mut prev = self.input_dim;
        for &w in self.hidden_layers.iter().chain(std::iter::once(&self.num_classes)) {
            dims.push((prev, w));
            prev = w;
        }
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|&(i, o)| i * o + o).sum()
    }
}

/// Raw pre-softmax outputs, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(pub Array2<f64>);

impl Logits {
    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    parameters: Vec<f64>,
    rng_seed: u64,
}

/// Per-layer values kept from a forward pass for backpropagation.
struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the feature batch.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pre_activations: Vec<Array2<f64>>,
    logits: Array2<f64>,
}

impl Model {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng::stream(seed, "init", &[]);
        let mut parameters = Vec::with_capacity(spec.parameter_count());
        for (fan_in, fan_out) in spec.layer_dims() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit)
                .map_err(|e| Error::Numeric(format!("init range: {e}")))?;
            parameters.extend((0..fan_in * fan_out).map(|_| dist.sample(&mut rng)));
            parameters.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Model {
            spec,
            parameters,
            rng_seed: seed,
        })
    }

    /// Builds a model around an explicit parameter vector.
    pub fn from_parameters(spec: ModelSpec, parameters: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if parameters.len() != spec.parameter_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                spec.parameter_count(),
                parameters.len()
            )));
        }
        if parameters.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(Model {
            spec,
            parameters,
            rng_seed: 0,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn parameters(&self) -> &[f64] {
        &self.parameters
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Replaces the parameter vector, keeping the architecture.
    pub fn set_parameters(&mut self, parameters: &[f64]) -> Result<()> {
        if parameters.len() != self.parameters.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.parameters.len(),
                parameters.len()
            )));
        }
        self.parameters.copy_from_slice(parameters);
        Ok(())
    }

    pub(crate) fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.parameters
    }

    fn layer(&self, offset: usize, in_dim: usize, out_dim: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let w_len = in_dim * out_dim;
        let w = ArrayView2::from_shape((out_dim, in_dim), &self.parameters[offset..offset + w_len])
            .expect("layer slice matches its shape");
        let b = ArrayView1::from(&self.parameters[offset + w_len..offset + w_len + out_dim]);
        (w, b)
    }

    fn check_features(&self, features: &ArrayView2<'_, f64>) -> Result<()> {
        if features.ncols() != self.spec.input_dim {
            return Err(Error::Shape(format!(
                "features have {} columns, model expects {}",
                features.ncols(),
                self.spec.input_dim
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, features: ArrayView2<'_, f64>) -> ForwardCache {
        let dims = self.spec.layer_dims();
        let last = dims.len() - 1;
        let mut inputs = Vec::with_capacity(dims.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut current = features.to_owned();
        let mut offset = 0;
        for (l, &(in_dim, out_dim)) in dims.iter().enumerate() {
            let (w, b) = self.layer(offset, in_dim, out_dim);
            offset += in_dim * out_dim + out_dim;
            let z = current.dot(&w.t()) + b;
            inputs.push(current);
            if l == last {
                return ForwardCache {
                    inputs,
                    pre_activations,
                    logits: z,
                };
            }
            let act = self.spec.activation;
            current = z.mapv(|v| act.apply(v));
            pre_activations.push(z);
        }
        unreachable!("a model has at least one layer")
    }

    pub fn forward(&self, features: ArrayView2<'_, f64>) -> Result<Logits> {
        self.check_features(&features)?;
        Ok(Logits(self.forward_cached(features).logits))
    }

    /// Gradient of a loss with respect to all parameters, given the forward
    /// pass and `d_logits = dL/dlogits`.
    fn backward(&self, cache: &ForwardCache, d_logits: Array2<f64>) -> Vec<f64> {
        let dims = self.spec.layer_dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for &(i, o) in &dims {
            offsets.push(acc);
            acc += i * o + o;
        }
        let mut grad = vec![0.0; acc];
        let mut delta = d_logits;
        for l in (0..dims.len()).rev() {
            let (in_dim, out_dim) = dims[l];
            let offset = offsets[l];
            let d_w = delta.t().dot(&cache.inputs[l]);
            let d_b: Array1<f64> = delta.sum_axis(Axis(0));
            grad[offset..offset + in_dim * out_dim]
                .iter_mut()
                .zip(d_w.iter())
                .for_each(|(g, v)| *g = *v);
            grad[offset + in_dim * out_dim..offset + in_dim * out_dim + out_dim]
                .iter_mut()
                .zip(d_b.iter())
                .for_each(|(g, v)| *g = *v);
            if l == 0 {
                break;
            }
            let (w, _) = self.layer(offset, in_dim, out_dim);
            let mut d_prev = delta.dot(&w);
            let act = self.spec.activation;
            ndarray::Zip::from(&mut d_prev)
                .and(&cache.pre_activations[l - 1])
                .and(&cache.inputs[l])
                .for_each(|d, &z, &a| *d *= act.derivative(z, a));
            delta = d_prev;
        }
        grad
    }

    /// Loss and parameter gradient for a loss defined on the logits.
    ///
    /// `loss_fn` returns the loss value and `dL/dlogits`.
    pub(crate) fn loss_and_gradient<F>(&self, features: ArrayView2<'_, f64>, loss_fn: F) -> Result<(f64, Vec<f64>)>
    where
        F: FnOnce(&Logits) -> Result<(f64, Array2<f64>)>,
    {
        self.check_features(&features)?;
        let mut cache = self.forward_cached(features);
        let logits = Logits(std::mem::take(&mut cache.logits));
        let (loss, d_logits) = loss_fn(&logits)?;
        Ok((loss, self.backward(&cache, d_logits)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn linear_parameter_count() {
        let m = Model::init(ModelSpec::new(2, vec![], 2), 7).unwrap();
        assert_eq!(m.parameters().len(), 6);
    }

    #[test]
    fn hidden_parameter_count() {
        assert_eq!(ModelSpec::new(4, vec![16], 3).parameter_count(), 4 * 16 + 16 + 16 * 3 + 3);
        assert_eq!(ModelSpec::new(4, vec![16], 3).parameter_count(), 131);
    }

    #[test]
    fn init_is_deterministic() {
        let spec = ModelSpec::new(5, vec![8, 4], 3);
        let a = Model::init(spec.clone(), 11).unwrap();
        let b = Model::init(spec.clone(), 11).unwrap();
        let c = Model::init(spec, 12).unwrap();
        assert_eq!(a.parameters(), b.parameters());
        assert_ne!(a.parameters(), c.parameters());
    }

    #[test]
    fn init_respects_glorot_bound_and_zero_biases() {
        let spec = ModelSpec::new(6, vec![10], 2);
        let m = Model::init(spec, 3).unwrap();
        let p = m.parameters();
        let l0 = (6.0f64 / 16.0).sqrt();
        assert!(p[..60].iter().all(|w| w.abs() <= l0));
        assert!(p[60..70].iter().all(|&b| b == 0.0));
        let l1 = (6.0f64 / 12.0).sqrt();
        assert!(p[70..90].iter().all(|w| w.abs() <= l1));
        assert!(p[90..].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zero_width_rejected() {
        let err = Model::init(ModelSpec::new(3, vec![4, 0], 2), 1).unwrap_err();
        assert!(err.is_config());
        assert!(Model::init(ModelSpec::new(0, vec![], 2), 1).unwrap_err().is_config());
        assert!(Model::init(ModelSpec::new(3, vec![], 1), 1).unwrap_err().is_config());
    }

    #[test]
    fn zero_model_gives_zero_logits() {
        let spec = ModelSpec::new(3, vec![4], 2);
        let m = Model::from_parameters(spec.clone(), vec![0.0; spec.parameter_count()]).unwrap();
        let out = m.forward(array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]].view()).unwrap();
        assert!(out.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_basis_selects_weight_column() {
        // W = [[1,2,3],[4,5,6]], b = [10, 20]
        let spec = ModelSpec::new(3, vec![], 2);
        let m = Model::from_parameters(spec, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0, 20.0]).unwrap();
        let out = m.forward(array![[0.0, 1.0, 0.0]].view()).unwrap();
        assert_eq!(out.0, array![[12.0, 25.0]]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = Model::init(ModelSpec::new(3, vec![], 2), 1).unwrap();
        let err = m.forward(array![[1.0, 2.0]].view()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }
}
