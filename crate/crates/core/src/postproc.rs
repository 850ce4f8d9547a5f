//! Model-agnostic smoothing of attribution maps, channel reduction and
//! nearest-neighbour upsampling.

use serde::{Deserialize, Serialize};

use crate::attributors::AttributionMap;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PostprocKind {
    Plain,
    Gaussian,
    MaxPool,
}

impl PostprocKind {
    pub fn name(self) -> &'static str {
        match self {
            PostprocKind::Plain => "plain",
            PostprocKind::Gaussian => "gaussian",
            PostprocKind::MaxPool => "maxpool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostprocSpec {
    pub kind: PostprocKind,
    pub sigma: f64,
    pub kernel: usize,
    pub truncate: f64,
}

impl PostprocSpec {
    pub fn new(kind: PostprocKind) -> Self {
        PostprocSpec { kind, sigma: 1.0, kernel: 3, truncate: 4.0 }
    }

    pub fn plain() -> Self {
        Self::new(PostprocKind::Plain)
    }

    pub fn gaussian(sigma: f64) -> Self {
        PostprocSpec { sigma, ..Self::new(PostprocKind::Gaussian) }
    }

    pub fn maxpool(kernel: usize) -> Self {
        PostprocSpec { kernel, ..Self::new(PostprocKind::MaxPool) }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "plain" | "none" => Ok(Self::plain()),
            "gaussian" | "gauss" => Ok(Self::new(PostprocKind::Gaussian)),
            "maxpool" | "max-pool" | "max" => Ok(Self::new(PostprocKind::MaxPool)),
            _ => Err(Error::invalid(format!("unknown post-processing '{name}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PostprocKind::Plain => Ok(()),
            PostprocKind::Gaussian if !(self.sigma > 0.0 && self.sigma.is_finite()) => {
                Err(Error::invalid(format!("gaussian sigma must be positive, got {}", self.sigma)))
            }
            PostprocKind::Gaussian if !(self.truncate > 0.0 && self.truncate.is_finite()) => {
                Err(Error::invalid(format!("gaussian truncate must be positive, got {}", self.truncate)))
            }
            PostprocKind::MaxPool if self.kernel < 3 || self.kernel % 2 == 0 => {
                Err(Error::invalid(format!("maxpool kernel must be odd and >= 3, got {}", self.kernel)))
            }
            _ => Ok(()),
        }
    }
}

/// Mirror an out-of-range index back into 0..n, repeating the edge sample
/// (`d c b a | a b c d | d c b a`).
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m >= n {
        2 * n - 1 - m
    } else {
        m
    }
}

/// Normalized 1-D Gaussian weights for offsets -r..=r, r = ceil(truncate·σ).
pub fn gaussian_kernel(sigma: f64, truncate: f64) -> Vec<f64> {
    let radius = (truncate * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius).map(|d| (-0.5 * (d as f64 / sigma).powi(2)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn dims(a: &AttributionMap) -> Result<(usize, usize)> {
    match a.values.shape() {
        [h, w] => Ok((*h, *w)),
        s => Err(Error::invalid(format!("post-processing needs a 2-D map, got shape {s:?}; reduce channels first"))),
    }
}

/// Applies the filter to a 2-D map. Only the map values are consulted.
pub fn apply(spec: &PostprocSpec, a: &AttributionMap) -> Result<AttributionMap> {
    spec.validate()?;
    let (h, w) = dims(a)?;
    let src = a.values.data();
    let out = match spec.kind {
        PostprocKind::Plain => return Ok(a.clone()),
        PostprocKind::Gaussian => {
            let k = gaussian_kernel(spec.sigma, spec.truncate);
            let r = (k.len() / 2) as isize;
            let mut rows = vec![0.0; h * w];
            for y in 0..h {
                for x in 0..w {
                    rows[y * w + x] = k
                        .iter()
                        .enumerate()
                        .map(|(j, kv)| kv * src[y * w + reflect_index(x as isize + j as isize - r, w)])
                        .sum();
                }
            }
            let mut out = vec![0.0; h * w];
            for y in 0..h {
                for x in 0..w {
                    out[y * w + x] = k
                        .iter()
                        .enumerate()
                        .map(|(j, kv)| kv * rows[reflect_index(y as isize + j as isize - r, h) * w + x])
                        .sum();
                }
            }
            out
        }
        PostprocKind::MaxPool => {
            let r = (spec.kernel / 2) as isize;
            let mut out = vec![f64::NEG_INFINITY; h * w];
            for y in 0..h {
                for x in 0..w {
                    let mut best = f64::NEG_INFINITY;
                    for dy in -r..=r {
                        let yy = reflect_index(y as isize + dy, h);
                        for dx in -r..=r {
                            best = best.max(src[yy * w + reflect_index(x as isize + dx, w)]);
                        }
                    }
                    out[y * w + x] = best;
                }
            }
            out
        }
    };
    let mut result = a.with_values(Tensor::new(vec![h, w], out)?);
    result.note = Some(match &a.note {
        Some(n) => format!("{n}; {}", spec.name()),
        None => spec.name().to_string(),
    });
    Ok(result)
}

/// Per-pixel sum over input channels; 2-D maps pass through.
pub fn reduce_channels(a: &AttributionMap) -> Result<AttributionMap> {
    match a.values.shape() {
        [_, _] => Ok(a.clone()),
        &[c, h, w] => {
            let mut out = vec![0.0; h * w];
            for plane in a.values.data().chunks_exact(h * w) {
                for (o, v) in out.iter_mut().zip(plane) {
                    *o += v;
                }
            }
            debug_assert!(c > 0);
            Ok(a.with_values(Tensor::new(vec![h, w], out)?))
        }
        s => Err(Error::invalid(format!("cannot reduce channels of a map with shape {s:?}"))),
    }
}

/// Nearest-neighbour upsampling: output (i, j) reads source (⌊i·h/H⌋, ⌊j·w/W⌋).
pub fn upsample_nearest(a: &AttributionMap, height: usize, width: usize) -> Result<AttributionMap> {
    let (h, w) = dims(a)?;
    if height < h || width < w {
        return Err(Error::invalid(format!("cannot upsample {h}x{w} to smaller {height}x{width}")));
    }
    let src = a.values.data();
    let out = (0..height * width).map(|p| src[(p / width) * h / height * w + (p % width) * w / width]).collect();
    Ok(a.with_values(Tensor::new(vec![height, width], out)?))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::attributors::Method;

    fn map(shape: Vec<usize>, data: Vec<f64>) -> AttributionMap {
        AttributionMap::new(Tensor::new(shape, data).unwrap(), Method::Grad, 0, 0).unwrap()
    }

    #[test]
    fn reflect_repeats_edges() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-1, 1), 0);
    }

    #[test]
    fn gaussian_kernel_table() {
        let k = gaussian_kernel(1.0, 4.0);
        assert_eq!(k.len(), 9);
        let raw: Vec<f64> = (-4..=4).map(|d: i32| (-0.5 * (d * d) as f64).exp()).collect();
        let total: f64 = raw.iter().sum();
        for (a, b) in k.iter().zip(&raw) {
            assert!((a - b / total).abs() < 1e-15);
        }
        assert!((k[4] - 0.398_942_3).abs() < 1e-4);
    }

    #[test]
    fn impulse_blur_matches_kernel() {
        let mut v = vec![0.0; 21 * 21];
        v[10 * 21 + 10] = 1.0;
        let out = apply(&PostprocSpec::gaussian(1.0), &map(vec![21, 21], v)).unwrap();
        let k = gaussian_kernel(1.0, 4.0);
        assert!((out.values.data()[10 * 21 + 10] - k[4] * k[4]).abs() < 1e-15);
        assert!((out.values.data()[10 * 21 + 12] - k[4] * k[6]).abs() < 1e-15);
        assert!((out.values.data().iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn maxpool_hand_case() {
        let a = map(vec![3, 3], vec![0.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0]);
        let out = apply(&PostprocSpec::maxpool(3), &a).unwrap();
        assert_eq!(out.values.data(), &[5.0; 9]);
    }

    #[test]
    fn constant_map_unchanged() {
        let a = map(vec![5, 7], vec![2.5; 35]);
        for spec in [PostprocSpec::plain(), PostprocSpec::gaussian(1.0), PostprocSpec::maxpool(3)] {
            let out = apply(&spec, &a).unwrap();
            for v in out.values.data() {
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_three_dimensional_maps_and_bad_specs() {
        let a = map(vec![1, 2, 2], vec![1.0; 4]);
        assert!(apply(&PostprocSpec::gaussian(1.0), &a).is_err());
        let b = map(vec![2, 2], vec![1.0; 4]);
        assert!(apply(&PostprocSpec::gaussian(0.0), &b).is_err());
        assert!(apply(&PostprocSpec::maxpool(4), &b).is_err());
        assert!(apply(&PostprocSpec::maxpool(1), &b).is_err());
    }

    #[test]
    fn reduce_channels_cases() {
        let single = map(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(reduce_channels(&single).unwrap().values.data(), &[1.0, 2.0, 3.0, 4.0]);
        let twice = map(vec![2, 1, 2], vec![1.0, 2.0, 1.0, 2.0]);
        assert_eq!(reduce_channels(&twice).unwrap().values.data(), &[2.0, 4.0]);
        let vals: Vec<f64> = (0..27).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let r = reduce_channels(&map(vec![3, 3, 3], vals.clone())).unwrap();
        for p in 0..9 {
            let mut s = 0.0;
            for c in 0..3 {
                s += vals[c * 9 + p];
            }
            assert_eq!(r.values.data()[p], s);
        }
    }

    #[test]
    fn upsample_cases() {
        let one = upsample_nearest(&map(vec![1, 1], vec![7.0]), 4, 5).unwrap();
        assert_eq!(one.values.data(), &[7.0; 20]);
        let two = upsample_nearest(&map(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]), 4, 4).unwrap();
        assert_eq!(
            two.values.data(),
            &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 3.0, 3.0, 4.0, 4.0]
        );
        let src: Vec<f64> = (0..9).map(f64::from).collect();
        let up = upsample_nearest(&map(vec![3, 3], src.clone()), 16, 16).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(up.values.data()[i * 16 + j], src[(i * 3 / 16) * 3 + j * 3 / 16]);
            }
        }
        assert!(upsample_nearest(&map(vec![3, 3], src), 2, 16).is_err());
    }

    proptest! {
        #[test]
        fn maxpool_dominates_input(v in prop::collection::vec(-5.0f64..5.0, 48)) {
            let a = map(vec![6, 8], v.clone());
            let out = apply(&PostprocSpec::maxpool(3), &a).unwrap();
            for (o, i) in out.values.data().iter().zip(&v) {
                prop_assert!(o >= i);
            }
        }

        #[test]
        fn gaussian_stays_in_range(v in prop::collection::vec(-5.0f64..5.0, 48)) {
            let a = map(vec![6, 8], v.clone());
            let (lo, hi) = a.values.min_max();
            let out = apply(&PostprocSpec::gaussian(1.0), &a).unwrap();
            for o in out.values.data() {
                prop_assert!(*o >= lo - 1e-12 && *o <= hi + 1e-12);
            }
        }

        #[test]
        fn filters_depend_only_on_values(v in prop::collection::vec(0.0f64..1.0, 30)) {
            let a = map(vec![5, 6], v.clone());
            let b = AttributionMap::new(Tensor::new(vec![5, 6], v).unwrap(), Method::Sobel, 9, 77).unwrap();
            for spec in [PostprocSpec::gaussian(1.0), PostprocSpec::maxpool(3)] {
                prop_assert_eq!(apply(&spec, &a).unwrap().values, apply(&spec, &b).unwrap().values);
            }
        }
    }
}
