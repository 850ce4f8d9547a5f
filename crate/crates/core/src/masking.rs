//! Exact-count top-t masks, pixel removal, and mask total variation.

use crate::attributors::AttributionMap;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// Binary (H, W) drop mask; `true` marks a removed pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    bits: Vec<bool>,
    height: usize,
    width: usize,
    drop_rate: f64,
    source: String,
    tv: f64,
}

impl Mask {
    pub fn from_bits(bits: Vec<bool>, height: usize, width: usize, source: impl Into<String>) -> Result<Self> {
        if bits.len() != height * width || bits.is_empty() {
            return Err(Error::invalid(format!("{} mask bits for a {height}x{width} grid", bits.len())));
        }
        let tv = tv_of_bits(&bits, height, width);
        let drop_rate = bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64;
        Ok(Mask { bits, height, width, drop_rate, source: source.into(), tv })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn drop_rate(&self) -> f64 {
        self.drop_rate
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tv(&self) -> f64 {
        self.tv
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Mask as a 0/1 (H, W) tensor, for dumps.
    pub fn to_tensor(&self) -> Tensor {
        let data = self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Tensor::new(vec![self.height, self.width], data).expect("mask dims")
    }
}

/// Number of pixels removed at drop rate `t` on an n-pixel grid.
pub fn drop_count(t: f64, n: usize) -> usize {
    (t * n as f64).round() as usize
}

fn check_rate(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("drop rate must lie in (0, 1), got {t}")))
    }
}

/// Marks exactly round(t·H·W) largest values; ties go to the lower flat index.
pub fn top_t_values(values: &[f64], height: usize, width: usize, t: f64, source: &str) -> Result<Mask> {
    check_rate(t)?;
    if values.len() != height * width {
        return Err(Error::ShapeMismatch { expected: vec![height, width], got: vec![values.len()] });
    }
    let n_drop = drop_count(t, values.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut bits = vec![false; values.len()];
    for &i in &order[..n_drop] {
        bits[i] = true;
    }
    let mut m = Mask::from_bits(bits, height, width, source)?;
    m.drop_rate = t;
    Ok(m)
}

pub fn top_t_mask(map: &AttributionMap, t: f64) -> Result<Mask> {
    let s = map.values.shape();
    if s.len() != 2 {
        return Err(Error::invalid(format!("thresholding needs a 2-D map, got shape {s:?}")));
    }
    top_t_values(map.values.data(), s[0], s[1], t, map.label())
}

/// (1 − m) ⊙ x with the mask broadcast over channels of x (C, H, W).
pub fn apply_mask(x: &Tensor, m: &Mask) -> Result<Tensor> {
    let s = x.shape();
    if s.len() != 3 || s[1] != m.height || s[2] != m.width {
        return Err(Error::ShapeMismatch { expected: vec![s.first().copied().unwrap_or(1), m.height, m.width], got: s.to_vec() });
    }
    let hw = m.height * m.width;
    let mut out = x.clone();
    for plane in out.data_mut().chunks_exact_mut(hw) {
        for (v, &drop) in plane.iter_mut().zip(&m.bits) {
            if drop {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

/// Anisotropic TV over interior neighbour pairs, divided by the pixel count.
pub fn total_variation(m: &Mask) -> f64 {
    tv_of_bits(&m.bits, m.height, m.width)
}

fn tv_of_bits(bits: &[bool], h: usize, w: usize) -> f64 {
    let mut edges = 0usize;
    for r in 0..h {
        for c in 0..w {
            let v = bits[r * w + c];
            if r + 1 < h && bits[(r + 1) * w + c] != v {
                edges += 1;
            }
            if c + 1 < w && bits[r * w + c + 1] != v {
                edges += 1;
            }
        }
    }
    edges as f64 / (h * w) as f64
}
