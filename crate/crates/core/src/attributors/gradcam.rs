use super::{AttributionMap, Method};
use crate::diffcore::{Model, Tensor};
use crate::error::{Error, Result};

/// ReLU(Σ_k w_k A^k) with w_k the spatial mean of ∂f_y/∂A^k.
/// `features` and `grads` are (K, H', W'); the result is (H', W').
pub fn gradcam_from_features(features: &Tensor, grads: &Tensor) -> Result<Tensor> {
    let s = features.shape();
    if s.len() != 3 || grads.shape() != s {
        return Err(Error::ShapeMismatch { expected: s.to_vec(), got: grads.shape().to_vec() });
    }
    let (k, h, w) = (s[0], s[1], s[2]);
    let hw = h * w;
    let mut cam = vec![0.0; hw];
    for c in 0..k {
        let g = &grads.data()[c * hw..(c + 1) * hw];
        let weight = g.iter().sum::<f64>() / hw as f64;
        let a = &features.data()[c * hw..(c + 1) * hw];
        for (o, &v) in cam.iter_mut().zip(a) {
            *o += weight * v;
        }
    }
    for v in &mut cam {
        *v = v.max(0.0);
    }
    Tensor::new(vec![h, w], cam)
}

pub fn gradcam_batch(
    model: &Model,
    xs: &[&Tensor],
    ys: &[usize],
    ids: &[usize],
    seed: u64,
) -> Result<Vec<AttributionMap>> {
    if !model.has_conv() {
        return Err(Error::UnsupportedMethod("Grad-CAM needs a model with a conv layer".into()));
    }
    let mut out = Vec::with_capacity(xs.len());
    for ((xc, yc), ic) in xs.chunks(256).zip(ys.chunks(256)).zip(ids.chunks(256)) {
        let batch = Tensor::stack(xc)?;
        let (feats, grads) = model.feature_gradients(&batch, yc)?;
        let s = feats.shape();
        let per = s[1] * s[2] * s[3];
        let shape = s[1..].to_vec();
        for (i, &id) in ic.iter().enumerate() {
            let a = Tensor::new(shape.clone(), feats.data()[i * per..(i + 1) * per].to_vec())?;
            let g = Tensor::new(shape.clone(), grads.data()[i * per..(i + 1) * per].to_vec())?;
            out.push(AttributionMap::new(gradcam_from_features(&a, &g)?, Method::GradCam, id, seed)?);
        }
    }
    Ok(out)
}

pub fn gradcam(model: &Model, x: &Tensor, y: usize) -> Result<AttributionMap> {
    Ok(gradcam_batch(model, &[x], &[y], &[0], 0)?.remove(0))
}
