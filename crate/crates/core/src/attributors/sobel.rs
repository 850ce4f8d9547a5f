use super::{AttributionMap, Method};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::postproc::reflect_index;

/// g_x² + g_y² of the channel-mean image using 3×3 Sobel kernels and
/// reflect boundary. Independent of any model.
pub fn sobel(x: &Tensor, sample_id: usize) -> Result<AttributionMap> {
    let s = x.shape();
    if s.len() != 3 {
        return Err(Error::invalid(format!("sobel needs a (C_in, H, W) image, got {s:?}")));
    }
    let (c, h, w) = (s[0], s[1], s[2]);
    let hw = h * w;
    let mut mean = vec![0.0; hw];
    for plane in x.data().chunks_exact(hw) {
        for (m, &v) in mean.iter_mut().zip(plane) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= c as f64);
    let at = |r: isize, col: isize| mean[reflect_index(r, h) * w + reflect_index(col, w)];
    let smooth = [1.0, 2.0, 1.0];
    let mut out = vec![0.0; hw];
    for r in 0..h as isize {
        for col in 0..w as isize {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for (d, &s) in (-1..=1).zip(&smooth) {
                gx += s * (at(r + d, col + 1) - at(r + d, col - 1));
                gy += s * (at(r + 1, col + d) - at(r - 1, col + d));
            }
            out[r as usize * w + col as usize] = gx * gx + gy * gy;
        }
    }
    let mut map = AttributionMap::new(Tensor::new(vec![h, w], out)?, Method::Sobel, sample_id, 0)?;
    map.squared = true;
    Ok(map)
}
