use rand::Rng;

use super::{AttributionMap, Method};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::seed;

fn check(h: usize, w: usize) -> Result<()> {
    if h == 0 || w == 0 {
        return Err(Error::invalid(format!("random baseline needs positive dims, got {h}x{w}")));
    }
    Ok(())
}

/// I.i.d. uniform scores; top-t thresholding then erases a uniform random subset.
pub fn pixel_random((h, w): (usize, usize), seed_value: u64, sample_id: usize) -> Result<AttributionMap> {
    check(h, w)?;
    let mut rng = seed::rng(seed_value, &["pixel-random", &sample_id.to_string()]);
    let scores = (0..h * w).map(|_| rng.random::<f64>()).collect();
    AttributionMap::new(Tensor::new(vec![h, w], scores)?, Method::PixelRandom, sample_id, seed_value)
}

/// Scores whose every top-n prefix is one near-square rectangle around a random
/// centre, plus at most one partial strip along one of its sides.
///
/// The rectangle grows by whole rows/columns, cycling down, right, up, left and
/// skipping sides that touch the border; strip pixels are ranked in order along
/// the strip, so every prefix stays 4-connected.
pub fn block_random((h, w): (usize, usize), seed_value: u64, sample_id: usize) -> Result<AttributionMap> {
    check(h, w)?;
    let mut rng = seed::rng(seed_value, &["block-random", &sample_id.to_string()]);
    let (cy, cx) = (rng.random_range(0..h), rng.random_range(0..w));
    let mut order = Vec::with_capacity(h * w);
    order.push(cy * w + cx);
    let (mut r0, mut r1, mut c0, mut c1) = (cy, cy, cx, cx);
    let mut side = 0usize;
    while order.len() < h * w {
        let mut grown = false;
        for _ in 0..4 {
            let s = side;
            side = (side + 1) % 4;
            match s {
                0 if r1 + 1 < h => {
                    r1 += 1;
                    order.extend((c0..=c1).map(|c| r1 * w + c));
                }
                1 if c1 + 1 < w => {
                    c1 += 1;
                    order.extend((r0..=r1).map(|r| r * w + c1));
                }
                2 if r0 > 0 => {
                    r0 -= 1;
                    order.extend((c0..=c1).map(|c| r0 * w + c));
                }
                3 if c0 > 0 => {
                    c0 -= 1;
                    order.extend((r0..=r1).map(|r| r * w + c0));
                }
                _ => continue,
            }
            grown = true;
            break;
        }
        debug_assert!(grown, "rectangle can always grow until it covers the grid");
    }
    let mut scores = vec![0.0; h * w];
    for (rank, &p) in order.iter().enumerate() {
        scores[p] = (h * w - rank) as f64;
    }
    let mut map = AttributionMap::new(Tensor::new(vec![h, w], scores)?, Method::BlockRandom, sample_id, seed_value)?;
    map.note = Some(format!("centre=({cy},{cx})"));
    Ok(map)
}
