//! Noisy linear imputation of removed pixels.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::masking::Mask;

/// Stop once no masked pixel moves by this much in one Jacobi sweep.
pub const JACOBI_TOL: f64 = 1e-6;

/// Solves the discrete Laplace equation over the masked pixels of each channel
/// of `x` (C, H, W): every masked value becomes the mean of its in-image
/// 4-neighbours, with unmasked pixels as fixed boundary values.
///
/// A fully masked image has no boundary and is filled with zeros.
pub fn laplace_impute(x: &Tensor, mask: &Mask) -> Result<Tensor> {
    let s = x.shape();
    let (h, w) = (mask.height(), mask.width());
    if s.len() != 3 || s[1] != h || s[2] != w {
        return Err(Error::ShapeMismatch { expected: vec![s.first().copied().unwrap_or(1), h, w], got: s.to_vec() });
    }
    let bits = mask.bits();
    let unknown: Vec<usize> = (0..h * w).filter(|&p| bits[p]).collect();
    let mut out = x.clone();
    if unknown.is_empty() {
        return Ok(out);
    }
    if unknown.len() == h * w {
        out.data_mut().fill(0.0);
        return Ok(out);
    }
    let neighbours: Vec<Vec<usize>> = unknown
        .iter()
        .map(|&p| {
            let (r, c) = (p / w, p % w);
            let mut nb = Vec::with_capacity(4);
            if r > 0 {
                nb.push(p - w);
            }
            if r + 1 < h {
                nb.push(p + w);
            }
            if c > 0 {
                nb.push(p - 1);
            }
            if c + 1 < w {
                nb.push(p + 1);
            }
            nb
        })
        .collect();
    let max_iters = 10 * h * w;
    for plane in out.data_mut().chunks_exact_mut(h * w) {
        // Start from the mean of the known pixels; only the iteration count depends on it.
        let known: Vec<f64> = (0..h * w).filter(|&p| !bits[p]).map(|p| plane[p]).collect();
        let start = known.iter().sum::<f64>() / known.len() as f64;
        for &p in &unknown {
            plane[p] = start;
        }
        let mut next = vec![0.0; unknown.len()];
        let mut residual = f64::INFINITY;
        let mut iters = 0;
        while residual >= JACOBI_TOL {
            if iters == max_iters {
                return Err(Error::Numerical(format!(
                    "Jacobi imputation did not converge: residual {residual:.3e} after {iters} iterations \
                     ({} masked pixels on {h}x{w})",
                    unknown.len()
                )));
            }
            residual = 0.0;
            for (k, nb) in neighbours.iter().enumerate() {
                let mean = nb.iter().map(|&q| plane[q]).sum::<f64>() / nb.len() as f64;
                residual = residual.max((mean - plane[unknown[k]]).abs());
                next[k] = mean;
            }
            for (&p, &v) in unknown.iter().zip(&next) {
                plane[p] = v;
            }
            iters += 1;
        }
    }
    Ok(out)
}

/// [`laplace_impute`] followed by i.i.d. N(0, noise_std²) on every imputed pixel.
pub fn noisy_impute<R: Rng>(x: &Tensor, mask: &Mask, noise_std: f64, rng: &mut R) -> Result<Tensor> {
    let mut out = laplace_impute(x, mask)?;
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).map_err(|e| Error::invalid(format!("road noise: {e}")))?;
        let hw = mask.height() * mask.width();
        for plane in out.data_mut().chunks_exact_mut(hw) {
            for (v, &m) in plane.iter_mut().zip(mask.bits()) {
                if m {
                    *v += normal.sample(rng);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn mask(h: usize, w: usize, on: &[usize]) -> Mask {
        let bits = (0..h * w).map(|p| on.contains(&p)).collect();
        Mask::from_bits(bits, h, w, "t").unwrap()
    }

    fn image(h: usize, w: usize) -> Tensor {
        Tensor::new(vec![1, h, w], (0..h * w).map(|p| ((p * 7) % 11) as f64 / 10.0).collect()).unwrap()
    }

    #[test]
    fn empty_mask_is_identity() {
        let x = image(4, 5);
        assert_eq!(laplace_impute(&x, &mask(4, 5, &[])).unwrap(), x);
    }

    #[test]
    fn single_pixel_is_neighbour_mean() {
        let x = image(4, 4);
        let out = laplace_impute(&x, &mask(4, 4, &[5])).unwrap();
        let d = x.data();
        let want = (d[1] + d[9] + d[4] + d[6]) / 4.0;
        assert!((out.data()[5] - want).abs() < 1e-12);
        // Corner pixel has only two neighbours.
        let out = laplace_impute(&x, &mask(4, 4, &[0])).unwrap();
        assert!((out.data()[0] - (d[1] + d[4]) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_ramp_is_reproduced() {
        // Harmonic functions are fixed points: a ramp in x survives an interior hole.
        let x = Tensor::new(vec![1, 6, 6], (0..36).map(|p| (p % 6) as f64 / 5.0).collect()).unwrap();
        let out = laplace_impute(&x, &mask(6, 6, &[14, 15, 20, 21])).unwrap();
        for (a, b) in out.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn large_block_converges_and_satisfies_equation() {
        let on: Vec<usize> = (0..256).filter(|p| p / 16 < 15).collect();
        let x = image(16, 16);
        let out = laplace_impute(&x, &mask(16, 16, &on)).unwrap();
        let d = out.data();
        for &p in &on {
            let (r, c) = (p / 16, p % 16);
            let mut nb = vec![];
            if r > 0 { nb.push(d[p - 16]); }
            if r < 15 { nb.push(d[p + 16]); }
            if c > 0 { nb.push(d[p - 1]); }
            if c < 15 { nb.push(d[p + 1]); }
            let mean = nb.iter().sum::<f64>() / nb.len() as f64;
            assert!((mean - d[p]).abs() < 1e-5);
        }
    }

    #[test]
    fn full_mask_fills_zero() {
        let all: Vec<usize> = (0..9).collect();
        let out = laplace_impute(&image(3, 3), &mask(3, 3, &all)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_only_touches_imputed_pixels() {
        let x = image(4, 4);
        let m = mask(4, 4, &[5, 6]);
        let clean = laplace_impute(&x, &m).unwrap();
        let noisy = noisy_impute(&x, &m, 0.01, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for p in 0..16 {
            if p == 5 || p == 6 {
                assert_ne!(noisy.data()[p], clean.data()[p]);
            } else {
                assert_eq!(noisy.data()[p], x.data()[p]);
            }
        }
        assert_eq!(noisy_impute(&x, &m, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap(), clean);
    }
}
