use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::tape::{Tape, Var};
use super::tensor::Tensor;

pub const CONV1_CHANNELS: usize = 8;
pub const CONV2_CHANNELS: usize = 16;
pub const KERNEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    /// conv3×3(8)+ReLU+maxpool2+conv3×3(16)+ReLU+GAP+dense(C).
    SmallCnn,
    /// Single dense layer over the flattened image; used as an exact reference.
    Linear,
}

/// Classifier f(x; θ) with its parameters stored flat in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    arch: Architecture,
    input_shape: [usize; 3],
    num_classes: usize,
    params: Vec<Tensor>,
}

/// Vars recorded by one taped forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub input: Var,
    pub logits: Var,
    pub params: Vec<Var>,
    /// Pre-activation outputs of each ReLU, in network order.
    pub pre_activations: Vec<Var>,
    /// Last conv feature maps after ReLU (SmallCnn only).
    pub features: Option<Var>,
}

pub fn param_shapes(arch: Architecture, input_shape: [usize; 3], num_classes: usize) -> Vec<Vec<usize>> {
    let [cin, h, w] = input_shape;
    match arch {
        Architecture::SmallCnn => vec![
            vec![CONV1_CHANNELS, cin, KERNEL, KERNEL],
            vec![CONV1_CHANNELS],
            vec![CONV2_CHANNELS, CONV1_CHANNELS, KERNEL, KERNEL],
            vec![CONV2_CHANNELS],
            vec![num_classes, CONV2_CHANNELS],
            vec![num_classes],
        ],
        Architecture::Linear => vec![vec![num_classes, cin * h * w], vec![num_classes]],
    }
}

pub fn param_count(arch: Architecture, input_shape: [usize; 3], num_classes: usize) -> usize {
    param_shapes(arch, input_shape, num_classes).iter().map(|s| s.iter().product::<usize>()).sum()
}

impl Model {
    /// Fresh model with He-uniform weights and zero biases drawn from `seed`.
    pub fn new(arch: Architecture, input_shape: [usize; 3], num_classes: usize, seed: u64) -> Result<Self> {
        validate_dims(arch, input_shape, num_classes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = param_shapes(arch, input_shape, num_classes)
            .into_iter()
            .map(|shape| {
                if shape.len() == 1 {
                    return Tensor::zeros(shape);
                }
                let fan_in: usize = shape[1..].iter().product();
                let bound = (6.0 / fan_in as f64).sqrt();
                let n: usize = shape.iter().product();
                let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
                Tensor::new(shape, data).expect("shape/data agree")
            })
            .collect();
        Ok(Model { arch, input_shape, num_classes, params })
    }

    /// Model with caller-supplied parameters, checked against the architecture.
    pub fn from_params(
        arch: Architecture,
        input_shape: [usize; 3],
        num_classes: usize,
        params: Vec<Tensor>,
    ) -> Result<Self> {
        validate_dims(arch, input_shape, num_classes)?;
        let shapes = param_shapes(arch, input_shape, num_classes);
        if shapes.len() != params.len() {
            return Err(Error::invalid(format!("expected {} parameter tensors, got {}", shapes.len(), params.len())));
        }
        for (want, got) in shapes.iter().zip(&params) {
            if want.as_slice() != got.shape() {
                return Err(Error::ShapeMismatch { expected: want.clone(), got: got.shape().to_vec() });
            }
        }
        Ok(Model { arch, input_shape, num_classes, params })
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn has_conv(&self) -> bool {
        self.arch == Architecture::SmallCnn
    }

    /// SHA-256 over parameter bits; used to assert a model was not mutated.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            for v in p.data() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        let s = batch.shape();
        if s.len() != 4 || s[1..] != self.input_shape {
            let mut expected = vec![s.first().copied().unwrap_or(1)];
            expected.extend_from_slice(&self.input_shape);
            return Err(Error::ShapeMismatch { expected, got: s.to_vec() });
        }
        Ok(())
    }

    /// Records a forward pass of `batch` (n, C_in, H, W) on `tape`.
    pub fn forward_taped(
        &self,
        tape: &mut Tape,
        batch: Tensor,
        input_grad: bool,
        param_grad: bool,
    ) -> Result<Forward> {
        self.check_batch(&batch)?;
        let input = tape.leaf(batch, input_grad);
        let params: Vec<Var> = self.params.iter().map(|p| tape.leaf(p.clone(), param_grad)).collect();
        match self.arch {
            Architecture::SmallCnn => {
                let z1 = tape.conv2d(input, params[0], params[1])?;
                let a1 = tape.relu(z1);
                let p1 = tape.max_pool2(a1)?;
                let z2 = tape.conv2d(p1, params[2], params[3])?;
                let a2 = tape.relu(z2);
                let g = tape.global_avg_pool(a2)?;
                let logits = tape.linear(g, params[4], params[5])?;
                Ok(Forward { input, logits, params, pre_activations: vec![z1, z2], features: Some(a2) })
            }
            Architecture::Linear => {
                let flat = tape.flatten(input);
                let logits = tape.linear(flat, params[0], params[1])?;
                Ok(Forward { input, logits, params, pre_activations: Vec::new(), features: None })
            }
        }
    }

    /// Logits (n, C) for a batch (n, C_in, H, W).
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let fwd = self.forward_taped(&mut tape, batch.clone(), false, false)?;
        Ok(tape.value(fwd.logits).clone())
    }

    /// Argmax class per row; ties go to the lowest class index.
    pub fn predict(&self, batch: &Tensor) -> Result<Vec<usize>> {
        let logits = self.forward(batch)?;
        Ok(argmax_rows(logits.data(), self.num_classes))
    }

    /// ∂f(x;θ)_y/∂x for a single sample x of shape (C_in, H, W).
    pub fn input_gradient(&self, x: &Tensor, y: usize) -> Result<Tensor> {
        let batch = Tensor::stack(&[x])?;
        let g = self.input_gradients(&batch, &[y])?;
        g.reshape(x.shape().to_vec())
    }

    /// Per-sample input gradients of the selected logits for a whole batch.
    /// Samples do not interact, so one backward of Σ_i f(x_i)_{y_i} suffices.
    pub fn input_gradients(&self, batch: &Tensor, ys: &[usize]) -> Result<Tensor> {
        self.check_class_indices(ys)?;
        let mut tape = Tape::new();
        let fwd = self.forward_taped(&mut tape, batch.clone(), true, false)?;
        let obj = tape.pick(fwd.logits, ys)?;
        tape.backward(obj)?;
        Ok(tape.grad(fwd.input).expect("input requires grad"))
    }

    /// Last-conv feature maps A (n, K, H', W') and ∂f_y/∂A for each sample.
    pub fn feature_gradients(&self, batch: &Tensor, ys: &[usize]) -> Result<(Tensor, Tensor)> {
        if !self.has_conv() {
            return Err(Error::UnsupportedMethod("model has no convolutional feature maps".into()));
        }
        self.check_class_indices(ys)?;
        let mut tape = Tape::new();
        let fwd = self.forward_taped(&mut tape, batch.clone(), true, false)?;
        let feats = fwd.features.expect("conv model records features");
        let obj = tape.pick(fwd.logits, ys)?;
        tape.backward(obj)?;
        let grad = tape.grad(feats).expect("features lie on the path to the objective");
        Ok((tape.value(feats).clone(), grad))
    }

    fn check_class_indices(&self, ys: &[usize]) -> Result<()> {
        match ys.iter().find(|&&y| y >= self.num_classes) {
            Some(y) => Err(Error::invalid(format!("class index {y} out of range for {} classes", self.num_classes))),
            None => Ok(()),
        }
    }
}

pub fn argmax_rows(data: &[f64], cols: usize) -> Vec<usize> {
    data.chunks_exact(cols)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn validate_dims(arch: Architecture, input_shape: [usize; 3], num_classes: usize) -> Result<()> {
    if num_classes == 0 || input_shape.iter().any(|&d| d == 0) {
        return Err(Error::invalid("input dimensions and class count must be positive"));
    }
    if arch == Architecture::SmallCnn && (input_shape[1] % 2 != 0 || input_shape[2] % 2 != 0) {
        return Err(Error::invalid(format!("SmallCnn needs even spatial dims, got {input_shape:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_count_is_pure_function_of_channels_and_classes() {
        let a = param_count(Architecture::SmallCnn, [1, 16, 16], 4);
        let b = param_count(Architecture::SmallCnn, [1, 8, 32], 4);
        assert_eq!(a, b);
        assert_eq!(a, 8 * 9 + 8 + 16 * 8 * 9 + 16 + 4 * 16 + 4);
        assert_eq!(Model::new(Architecture::SmallCnn, [3, 8, 8], 5, 1).unwrap().param_count(),
                   param_count(Architecture::SmallCnn, [3, 8, 8], 5));
    }

    #[test]
    fn zero_dense_layer_gives_zero_logits() {
        let mut m = Model::new(Architecture::SmallCnn, [1, 8, 8], 3, 9).unwrap();
        m.params_mut()[4].data_mut().fill(0.0);
        let x = Tensor::full(vec![2, 1, 8, 8], 0.7);
        assert!(m.forward(&x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_rejects_wrong_shape() {
        let m = Model::new(Architecture::SmallCnn, [1, 8, 8], 3, 9).unwrap();
        let x = Tensor::zeros(vec![1, 1, 8, 6]);
        assert!(matches!(m.forward(&x), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn same_seed_same_init() {
        let a = Model::new(Architecture::SmallCnn, [1, 16, 16], 4, 77).unwrap();
        let b = Model::new(Architecture::SmallCnn, [1, 16, 16], 4, 77).unwrap();
        let c = Model::new(Architecture::SmallCnn, [1, 16, 16], 4, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn linear_input_gradient_is_weight_row() {
        let w: Vec<f64> = (0..3 * 4).map(|i| i as f64 * 0.25 - 1.0).collect();
        let m = Model::from_params(
            Architecture::Linear,
            [1, 2, 2],
            3,
            vec![Tensor::new(vec![3, 4], w.clone()).unwrap(), Tensor::new(vec![3], vec![0.1, 0.2, 0.3]).unwrap()],
        )
        .unwrap();
        let x = Tensor::new(vec![1, 2, 2], vec![0.3, -0.8, 0.5, 0.9]).unwrap();
        for y in 0..3 {
            let g = m.input_gradient(&x, y).unwrap();
            assert_eq!(g.shape(), &[1, 2, 2]);
            assert_eq!(g.data(), &w[y * 4..(y + 1) * 4]);
        }
        assert!(matches!(m.input_gradient(&x, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn argmax_tie_goes_to_lowest_index() {
        assert_eq!(argmax_rows(&[1.0, 1.0, 0.0, 0.0, 2.0, 2.0], 3), vec![0, 1]);
    }

    #[test]
    fn gradcam_features_unsupported_on_linear() {
        let m = Model::new(Architecture::Linear, [1, 4, 4], 2, 0).unwrap();
        let x = Tensor::zeros(vec![1, 1, 4, 4]);
        assert!(matches!(m.feature_gradients(&x, &[0]), Err(Error::UnsupportedMethod(_))));
    }
}
