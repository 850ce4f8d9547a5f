//! Feature-importance estimators e(x, f, y) and model-free baselines.

mod gradient;
mod gradcam;
mod random;
mod sobel;

use serde::{Deserialize, Serialize};

pub use gradcam::{gradcam, gradcam_batch, gradcam_from_features};
pub use gradient::{
    grad, grad_times_input, integrated_gradients, noisy_gradients, sg_noise_sigma, sg_sq, smoothgrad, vargrad,
};
pub use random::{block_random, pixel_random};
pub use sobel::sobel;

use crate::data::Dataset;
use crate::diffcore::{Model, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Grad,
    GradTimesInput,
    IntegratedGradients,
    SmoothGrad,
    SmoothGradSq,
    VarGrad,
    GradCam,
    Sobel,
    PixelRandom,
    BlockRandom,
}

impl Method {
    pub fn short(self) -> &'static str {
        match self {
            Method::Grad => "grad",
            Method::GradTimesInput => "gi",
            Method::IntegratedGradients => "ig",
            Method::SmoothGrad => "sg",
            Method::SmoothGradSq => "sgsq",
            Method::VarGrad => "vg",
            Method::GradCam => "gc",
            Method::Sobel => "sobel",
            Method::PixelRandom => "rand",
            Method::BlockRandom => "block",
        }
    }

    pub fn uses_model(self) -> bool {
        !matches!(self, Method::Sobel | Method::PixelRandom | Method::BlockRandom)
    }
}

/// A method plus whether its map is squared afterwards, e.g. `grad2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub squared: bool,
}

impl MethodSpec {
    pub const fn new(method: Method, squared: bool) -> Self {
        MethodSpec { method, squared }
    }

    /// Accepts `grad grad2 gi gi2 ig ig2 sg sg2 sgsq vg gc gc2 sobel2 rand block`.
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let (base, squared) = match lower.strip_suffix('2') {
            Some(b) => (b, true),
            None => (lower.as_str(), false),
        };
        let method = match base {
            "grad" => Method::Grad,
            "gi" => Method::GradTimesInput,
            "ig" => Method::IntegratedGradients,
            "sg" => Method::SmoothGrad,
            "sgsq" | "sg-sq" => Method::SmoothGradSq,
            "vg" => Method::VarGrad,
            "gc" => Method::GradCam,
            "sobel" => Method::Sobel,
            "rand" | "pixel-random" | "pixelrandom" => Method::PixelRandom,
            "block" | "block-random" | "blockrandom" => Method::BlockRandom,
            _ => return Err(Error::invalid(format!("unknown attribution method '{name}'"))),
        };
        let squared = match method {
            // Already a second-moment quantity; its name carries no suffix.
            Method::SmoothGradSq | Method::VarGrad | Method::PixelRandom | Method::BlockRandom if squared => {
                return Err(Error::invalid(format!("'{name}': squaring does not apply to {}", method.short())));
            }
            Method::Sobel => true,
            _ => squared,
        };
        Ok(MethodSpec { method, squared })
    }

    pub fn label(&self) -> String {
        match self.method {
            Method::Sobel => "sobel2".to_string(),
            m if self.squared => format!("{}2", m.short()),
            m => m.short().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub ig_steps: usize,
    pub ensemble_n: usize,
    pub sg_noise_frac: f64,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { ig_steps: 25, ensemble_n: 15, sg_noise_frac: 0.15, seed: 0 }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ig_steps == 0 {
            return Err(Error::invalid("ig_steps must be at least 1"));
        }
        if self.ensemble_n == 0 {
            return Err(Error::invalid("ensemble_n must be at least 1"));
        }
        if !(self.sg_noise_frac >= 0.0 && self.sg_noise_frac.is_finite()) {
            return Err(Error::invalid("sg_noise_frac must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Per-pixel importance scores with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMap {
    /// (C_in, H, W) for input-space methods, (H', W') for Grad-CAM and 2-D
    /// baselines or after channel reduction.
    pub values: Tensor,
    pub method: Method,
    pub squared: bool,
    pub sample_id: usize,
    pub seed: u64,
    pub note: Option<String>,
}

impl AttributionMap {
    pub fn new(values: Tensor, method: Method, sample_id: usize, seed: u64) -> Result<Self> {
        if !values.is_finite() {
            return Err(Error::Numerical(format!("{} produced non-finite attribution values", method.short())));
        }
        Ok(AttributionMap { values, method, squared: false, sample_id, seed, note: None })
    }

    pub fn label(&self) -> &'static str {
        match (self.method, self.squared) {
            (Method::Grad, true) => "grad2",
            (Method::GradTimesInput, true) => "gi2",
            (Method::IntegratedGradients, true) => "ig2",
            (Method::SmoothGrad, true) => "sg2",
            (Method::GradCam, true) => "gc2",
            (Method::Sobel, _) => "sobel2",
            (m, _) => m.short(),
        }
    }

    pub fn with_values(&self, values: Tensor) -> AttributionMap {
        AttributionMap { values, ..self.clone() }
    }
}

/// Elementwise square; refuses VarGrad and maps that are already squared.
pub fn square(map: &AttributionMap) -> Result<AttributionMap> {
    if map.method == Method::VarGrad {
        return Err(Error::invalid("squaring does not apply to VG"));
    }
    if map.squared {
        return Err(Error::invalid(format!("{} map is already squared", map.label())));
    }
    let mut out = map.with_values(map.values.map(|v| v * v));
    out.squared = true;
    Ok(out)
}

/// Attributes one sample with a configured method. `y` is the class to explain.
pub fn explain(
    model: &Model,
    x: &Tensor,
    y: usize,
    spec: MethodSpec,
    cfg: &EstimatorConfig,
    sample_id: usize,
) -> Result<AttributionMap> {
    let mut out = explain_batch(model, &[x], &[y], &[sample_id], spec, cfg)?;
    Ok(out.remove(0))
}

/// Attributes many samples at once; results equal per-sample [`explain`] calls.
pub fn explain_batch(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    sample_ids: &[usize],
    spec: MethodSpec,
    cfg: &EstimatorConfig,
) -> Result<Vec<AttributionMap>> {
    cfg.validate()?;
    if xs.len() != ys.len() || xs.len() != sample_ids.len() {
        return Err(Error::invalid("inputs, classes and sample ids must have equal length"));
    }
    let maps = match spec.method {
        Method::Grad => gradient::grad_batch(model, xs, ys, sample_ids, cfg.seed)?,
        Method::GradTimesInput => gradient::gi_batch(model, xs, ys, sample_ids, cfg.seed)?,
        Method::IntegratedGradients => gradient::ig_batch(model, xs, ys, sample_ids, cfg)?,
        Method::SmoothGrad | Method::SmoothGradSq | Method::VarGrad => {
            gradient::ensemble_batch(model, xs, ys, sample_ids, cfg, spec.method)?
        }
        Method::GradCam => gradcam_batch(model, xs, ys, sample_ids, cfg.seed)?,
        Method::Sobel => xs.iter().zip(sample_ids).map(|(x, &id)| sobel(x, id)).collect::<Result<_>>()?,
        Method::PixelRandom => xs
            .iter()
            .zip(sample_ids)
            .map(|(x, &id)| pixel_random(spatial(x)?, cfg.seed, id))
            .collect::<Result<_>>()?,
        Method::BlockRandom => xs
            .iter()
            .zip(sample_ids)
            .map(|(x, &id)| block_random(spatial(x)?, cfg.seed, id))
            .collect::<Result<_>>()?,
    };
    if spec.squared && spec.method != Method::Sobel {
        maps.iter().map(square).collect()
    } else {
        Ok(maps)
    }
}

/// Attributes many samples with several methods, computing each base method
/// once (e.g. `grad` and `grad2` share gradients; SG, SG-SQ and VG share one
/// noise ensemble). Output is per spec, in `specs` order.
pub fn explain_methods(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    sample_ids: &[usize],
    specs: &[MethodSpec],
    cfg: &EstimatorConfig,
) -> Result<Vec<Vec<AttributionMap>>> {
    use std::collections::HashMap;

    cfg.validate()?;
    let mut raw: HashMap<Method, Vec<AttributionMap>> = HashMap::new();
    let ensemble = [Method::SmoothGrad, Method::SmoothGradSq, Method::VarGrad];
    let wants_vg = specs.iter().any(|s| s.method == Method::VarGrad);
    if specs.iter().filter(|s| ensemble.contains(&s.method)).count() > 1 && !(wants_vg && cfg.ensemble_n < 2) {
        if xs.len() != ys.len() || xs.len() != sample_ids.len() {
            return Err(Error::invalid("inputs, classes and sample ids must have equal length"));
        }
        let family = gradient::ensemble_family_batch(model, xs, ys, sample_ids, cfg)?;
        for (m, maps) in ensemble.into_iter().zip(family) {
            raw.insert(m, maps);
        }
    }
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        if !raw.contains_key(&spec.method) {
            let base = MethodSpec { method: spec.method, squared: spec.method == Method::Sobel };
            raw.insert(spec.method, explain_batch(model, xs, ys, sample_ids, base, cfg)?);
        }
        let maps = &raw[&spec.method];
        out.push(if spec.squared && spec.method != Method::Sobel {
            maps.iter().map(square).collect::<Result<Vec<_>>>()?
        } else {
            maps.clone()
        });
    }
    Ok(out)
}

fn spatial(x: &Tensor) -> Result<(usize, usize)> {
    match x.shape() {
        [_, h, w] => Ok((*h, *w)),
        s => Err(Error::invalid(format!("expected a (C_in, H, W) image, got {s:?}"))),
    }
}

/// Predicted class argmax f(x; θ) of every sample.
pub fn predicted_classes(model: &Model, dataset: &Dataset) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..dataset.len()).collect();
    let mut out = Vec::with_capacity(dataset.len());
    for chunk in idx.chunks(256) {
        let (batch, _) = dataset.batch(chunk);
        out.extend(model.predict(&batch)?);
    }
    Ok(out)
}
