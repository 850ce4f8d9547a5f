//! Central finite-difference check of tape gradients.
//!
//! The objective is Σ_i f(x_i)_{y_i} at the predicted classes, which is
//! linear in every single coordinate inside one activation region, so central
//! differences are exact there up to rounding. Coordinates whose ±h stencil
//! changes the ReLU/max-pool pattern straddle a kink and are excluded.

use super::model::{argmax_rows, Architecture, Model};
use super::tape::Tape;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const FD_STEP: f64 = 1e-3;
/// Denominator floor for relative error so exact zeros compare cleanly.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Param { tensor: usize, index: usize },
    Input { index: usize },
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<Coordinate>,
    pub checked: usize,
    pub excluded: Vec<Coordinate>,
    pub tol: f64,
    pub passed: bool,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

struct Probe {
    objective: f64,
    pattern: Vec<usize>,
}

fn probe(model: &Model, batch: &Tensor, ys: &[usize]) -> Result<Probe> {
    let mut tape = Tape::new();
    let fwd = model.forward_taped(&mut tape, batch.clone(), false, false)?;
    let obj = tape.pick(fwd.logits, ys)?;
    let mut pattern = Vec::new();
    for &z in &fwd.pre_activations {
        pattern.extend(tape.value(z).data().iter().map(|&v| usize::from(v > 0.0)));
    }
    if model.arch() == Architecture::SmallCnn {
        // Window argmax of the first pooled layer, recomputed from its input.
        let z1 = tape.value(fwd.pre_activations[0]);
        let s = z1.shape();
        let (h, w) = (s[2], s[3]);
        for plane in z1.data().chunks_exact(h * w) {
            for oy in 0..h / 2 {
                for ox in 0..w / 2 {
                    let mut best = 2 * oy * w + 2 * ox;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = (2 * oy + dy) * w + 2 * ox + dx;
                        if plane[idx].max(0.0) > plane[best].max(0.0) {
                            best = idx;
                        }
                    }
                    pattern.push(best);
                }
            }
        }
    }
    Ok(Probe { objective: tape.value(obj).data()[0], pattern })
}

/// Compares tape gradients against central differences for every parameter
/// and input coordinate of `batch` (n, C_in, H, W).
pub fn gradient_check(model: &Model, batch: &Tensor, tol: f64) -> Result<GradCheckReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let ys = argmax_rows(model.forward(batch)?.data(), model.num_classes());

    let mut tape = Tape::new();
    let fwd = model.forward_taped(&mut tape, batch.clone(), true, true)?;
    let obj = tape.pick(fwd.logits, &ys)?;
    tape.backward(obj)?;
    let param_grads: Vec<Tensor> = fwd.params.iter().map(|&v| tape.grad(v).expect("param grad")).collect();
    let input_grad = tape.grad(fwd.input).expect("input grad");
    let base = probe(model, batch, &ys)?;

    let mut report =
        GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0, excluded: Vec::new(), tol, passed: true };
    let record = |coord: Coordinate, analytic: f64, plus: Probe, minus: Probe, report: &mut GradCheckReport| {
        if plus.pattern != base.pattern || minus.pattern != base.pattern {
            report.excluded.push(coord);
            return;
        }
        let numeric = (plus.objective - minus.objective) / (2.0 * FD_STEP);
        let err = relative_error(analytic, numeric);
        report.checked += 1;
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = Some(coord);
        }
    };

    for (t, grad) in param_grads.iter().enumerate() {
        for index in 0..grad.len() {
            let mut m = model.clone();
            let orig = m.params()[t].data()[index];
            m.params_mut()[t].data_mut()[index] = orig + FD_STEP;
            let plus = probe(&m, batch, &ys)?;
            m.params_mut()[t].data_mut()[index] = orig - FD_STEP;
            let minus = probe(&m, batch, &ys)?;
            record(Coordinate::Param { tensor: t, index }, grad.data()[index], plus, minus, &mut report);
        }
    }
    for index in 0..batch.len() {
        let mut x = batch.clone();
        let orig = x.data()[index];
        x.data_mut()[index] = orig + FD_STEP;
        let plus = probe(model, &x, &ys)?;
        x.data_mut()[index] = orig - FD_STEP;
        let minus = probe(model, &x, &ys)?;
        record(Coordinate::Input { index }, input_grad.data()[index], plus, minus, &mut report);
    }
    report.passed = report.max_rel_error <= tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_batch(shape: Vec<usize>, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn linear_model_is_exact() {
        let m = Model::new(Architecture::Linear, [2, 3, 3], 3, 4).unwrap();
        let r = gradient_check(&m, &random_batch(vec![2, 2, 3, 3], 1), 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_rel_error < 1e-8);
        assert!(r.excluded.is_empty());
    }

    #[test]
    fn small_cnn_matches_finite_differences() {
        let mut m = Model::new(Architecture::SmallCnn, [1, 8, 8], 3, 12).unwrap();
        // Non-zero biases keep pre-activations away from exact zeros.
        for t in [1, 3, 5] {
            for (i, v) in m.params_mut()[t].data_mut().iter_mut().enumerate() {
                *v = 0.05 * ((i % 5) as f64 - 2.0) + 0.013;
            }
        }
        let r = gradient_check(&m, &random_batch(vec![2, 1, 8, 8], 2), 1e-4).unwrap();
        assert!(r.passed, "max rel err {} at {:?}", r.max_rel_error, r.worst);
        assert!(r.checked > 1000);
    }

    #[test]
    fn inputs_at_relu_kinks_are_excluded_not_failed() {
        // Zero input with zero conv biases puts every first-layer unit on its kink.
        let m = Model::new(Architecture::SmallCnn, [1, 8, 8], 2, 3).unwrap();
        let r = gradient_check(&m, &Tensor::zeros(vec![1, 1, 8, 8]), 1e-4).unwrap();
        let excluded_inputs = r.excluded.iter().filter(|c| matches!(c, Coordinate::Input { .. })).count();
        assert_eq!(excluded_inputs, 64);
        assert!(r.passed);
    }

    #[test]
    fn rejects_non_positive_tolerance() {
        let m = Model::new(Architecture::Linear, [1, 2, 2], 2, 0).unwrap();
        assert!(gradient_check(&m, &Tensor::zeros(vec![1, 1, 2, 2]), 0.0).is_err());
    }
}
