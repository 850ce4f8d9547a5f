use rand_distr::{Distribution, StandardNormal};

use super::{explain, AttributionMap, EstimatorConfig, Method, MethodSpec};
use crate::diffcore::{Model, Tensor};
use crate::error::{Error, Result};
use crate::seed;

/// Images per tape when evaluating many input gradients.
const TAPE_BATCH: usize = 256;

/// ∂f_y/∂x at each (input, class) pair.
pub(crate) fn input_grads(model: &Model, inputs: &[Tensor], ys: &[usize]) -> Result<Vec<Tensor>> {
    let mut out = Vec::with_capacity(inputs.len());
    for (xs, cls) in inputs.chunks(TAPE_BATCH).zip(ys.chunks(TAPE_BATCH)) {
        let refs: Vec<&Tensor> = xs.iter().collect();
        let batch = Tensor::stack(&refs)?;
        let g = model.input_gradients(&batch, cls)?;
        let per = xs[0].len();
        for chunk in g.data().chunks_exact(per) {
            out.push(Tensor::new(xs[0].shape().to_vec(), chunk.to_vec())?);
        }
    }
    Ok(out)
}

/// Running mean that is exact when every sample is identical.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    mean_sq: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Welford { n: 0, mean: vec![0.0; len], mean_sq: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, g: &[f64]) {
        self.n += 1;
        let k = self.n as f64;
        for i in 0..g.len() {
            let old = self.mean[i];
            self.mean[i] += (g[i] - old) / k;
            self.mean_sq[i] += (g[i] * g[i] - self.mean_sq[i]) / k;
            self.m2[i] += (g[i] - old) * (g[i] - self.mean[i]);
        }
    }

    fn variance(&self) -> Vec<f64> {
        let d = (self.n - 1) as f64;
        self.m2.iter().map(|&v| v / d).collect()
    }
}

fn to_maps(
    values: Vec<Tensor>,
    method: Method,
    sample_ids: &[usize],
    seed: u64,
) -> Result<Vec<AttributionMap>> {
    values.into_iter().zip(sample_ids).map(|(v, &id)| AttributionMap::new(v, method, id, seed)).collect()
}

pub(super) fn grad_batch(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    ids: &[usize],
    seed: u64,
) -> Result<Vec<AttributionMap>> {
    let inputs: Vec<Tensor> = xs.iter().map(|&x| x.clone()).collect();
    to_maps(input_grads(model, &inputs, ys)?, Method::Grad, ids, seed)
}

pub(super) fn gi_batch(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    ids: &[usize],
    seed: u64,
) -> Result<Vec<AttributionMap>> {
    let inputs: Vec<Tensor> = xs.iter().map(|&x| x.clone()).collect();
    let grads = input_grads(model, &inputs, ys)?;
    let values = grads.iter().zip(xs).map(|(g, x)| g.zip_map(x, |g, x| g * x)).collect::<Result<Vec<_>>>()?;
    to_maps(values, Method::GradTimesInput, ids, seed)
}

/// x ⊙ (1/k) Σ_{j=1..k} ∇f_y(j/k · x), zero baseline.
pub(super) fn ig_batch(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    ids: &[usize],
    cfg: &EstimatorConfig,
) -> Result<Vec<AttributionMap>> {
    let k = cfg.ig_steps;
    let per_chunk = (TAPE_BATCH / k).max(1);
    let mut values = Vec::with_capacity(xs.len());
    for (xc, yc) in xs.chunks(per_chunk).zip(ys.chunks(per_chunk)) {
        let mut inputs = Vec::with_capacity(xc.len() * k);
        let mut classes = Vec::with_capacity(xc.len() * k);
        for (&x, &y) in xc.iter().zip(yc) {
            for j in 1..=k {
                let alpha = j as f64 / k as f64;
                inputs.push(x.map(|v| alpha * v));
                classes.push(y);
            }
        }
        let grads = input_grads(model, &inputs, &classes)?;
        for (&x, path) in xc.iter().zip(grads.chunks_exact(k)) {
            let mut acc = Welford::new(x.len());
            for g in path {
                acc.push(g.data());
            }
            let avg = Tensor::new(x.shape().to_vec(), acc.mean)?;
            values.push(avg.zip_map(x, |g, x| x * g)?);
        }
    }
    to_maps(values, Method::IntegratedGradients, ids, cfg.seed)
}

pub fn sg_noise_sigma(x: &Tensor, frac: f64) -> f64 {
    let (lo, hi) = x.min_max();
    frac * (hi - lo)
}

/// The n perturbed copies x + ε used by the SmoothGrad family for one sample.
fn noisy_inputs(x: &Tensor, cfg: &EstimatorConfig, sample_id: usize) -> Vec<Tensor> {
    let sigma = sg_noise_sigma(x, cfg.sg_noise_frac);
    let mut rng = seed::rng(cfg.seed, &["smoothgrad", &sample_id.to_string()]);
    (0..cfg.ensemble_n)
        .map(|_| {
            let data = x
                .data()
                .iter()
                .map(|&v| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v + sigma * e
                })
                .collect();
            Tensor::new(x.shape().to_vec(), data).expect("same shape")
        })
        .collect()
}

/// Gradients at the SmoothGrad perturbations of one sample, in draw order.
pub fn noisy_gradients(
    model: &Model,
    x: &Tensor,
    y: usize,
    cfg: &EstimatorConfig,
    sample_id: usize,
) -> Result<Vec<Tensor>> {
    let inputs = noisy_inputs(x, cfg, sample_id);
    let ys = vec![y; inputs.len()];
    input_grads(model, &inputs, &ys)
}

/// SmoothGrad, SmoothGrad-Squared and VarGrad values of every sample from one
/// shared set of noisy gradients, in that order.
pub(super) fn ensemble_moments(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    ids: &[usize],
    cfg: &EstimatorConfig,
) -> Result<Vec<[Tensor; 3]>> {
    let n = cfg.ensemble_n;
    let per_chunk = (TAPE_BATCH / n).max(1);
    let mut values = Vec::with_capacity(xs.len());
    for ((xc, yc), ic) in xs.chunks(per_chunk).zip(ys.chunks(per_chunk)).zip(ids.chunks(per_chunk)) {
        let mut inputs = Vec::with_capacity(xc.len() * n);
        let mut classes = Vec::with_capacity(xc.len() * n);
        for ((&x, &y), &id) in xc.iter().zip(yc).zip(ic) {
            inputs.extend(noisy_inputs(x, cfg, id));
            classes.extend(std::iter::repeat_n(y, n));
        }
        let grads = input_grads(model, &inputs, &classes)?;
        for (&x, group) in xc.iter().zip(grads.chunks_exact(n)) {
            let mut acc = Welford::new(x.len());
            for g in group {
                acc.push(g.data());
            }
            let shape = x.shape().to_vec();
            let var = acc.variance();
            values.push([
                Tensor::new(shape.clone(), acc.mean)?,
                Tensor::new(shape.clone(), acc.mean_sq)?,
                Tensor::new(shape, var)?,
            ]);
        }
    }
    Ok(values)
}

pub(super) fn ensemble_family_batch(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    ids: &[usize],
    cfg: &EstimatorConfig,
) -> Result<[Vec<AttributionMap>; 3]> {
    let moments = ensemble_moments(model, xs, ys, ids, cfg)?;
    let mut split: [Vec<Tensor>; 3] = Default::default();
    for [m, sq, v] in moments {
        split[0].push(m);
        split[1].push(sq);
        split[2].push(v);
    }
    let [m, sq, v] = split;
    Ok([
        to_maps(m, Method::SmoothGrad, ids, cfg.seed)?,
        to_maps(sq, Method::SmoothGradSq, ids, cfg.seed)?,
        to_maps(v, Method::VarGrad, ids, cfg.seed)?,
    ])
}

pub(super) fn ensemble_batch(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    ids: &[usize],
    cfg: &EstimatorConfig,
    method: Method,
) -> Result<Vec<AttributionMap>> {
    if method == Method::VarGrad && cfg.ensemble_n < 2 {
        return Err(Error::invalid("VarGrad needs ensemble_n >= 2"));
    }
    let values = ensemble_moments(model, xs, ys, ids, cfg)?
        .into_iter()
        .map(|[mean, mean_sq, var]| match method {
            Method::SmoothGrad => mean,
            Method::SmoothGradSq => mean_sq,
            _ => var,
        })
        .collect();
    to_maps(values, method, ids, cfg.seed)
}

pub fn grad(model: &Model, x: &Tensor, y: usize) -> Result<AttributionMap> {
    explain(model, x, y, MethodSpec::new(Method::Grad, false), &EstimatorConfig::default(), 0)
}

pub fn grad_times_input(model: &Model, x: &Tensor, y: usize) -> Result<AttributionMap> {
    explain(model, x, y, MethodSpec::new(Method::GradTimesInput, false), &EstimatorConfig::default(), 0)
}

pub fn integrated_gradients(model: &Model, x: &Tensor, y: usize, cfg: &EstimatorConfig) -> Result<AttributionMap> {
    explain(model, x, y, MethodSpec::new(Method::IntegratedGradients, false), cfg, 0)
}

pub fn smoothgrad(model: &Model, x: &Tensor, y: usize, cfg: &EstimatorConfig, sample_id: usize) -> Result<AttributionMap> {
    explain(model, x, y, MethodSpec::new(Method::SmoothGrad, false), cfg, sample_id)
}

pub fn sg_sq(model: &Model, x: &Tensor, y: usize, cfg: &EstimatorConfig, sample_id: usize) -> Result<AttributionMap> {
    explain(model, x, y, MethodSpec::new(Method::SmoothGradSq, false), cfg, sample_id)
}

pub fn vargrad(model: &Model, x: &Tensor, y: usize, cfg: &EstimatorConfig, sample_id: usize) -> Result<AttributionMap> {
    explain(model, x, y, MethodSpec::new(Method::VarGrad, false), cfg, sample_id)
}
