use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Sample};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::masking::Mask;
use crate::seed;

pub const GLYPH_SIZE: usize = 5;

pub const GLYPH_NAMES: [&str; 8] = ["triangle", "diamond", "hourglass", "ell", "box", "disk", "hbar", "vbar"];

const GLYPHS: [[&str; GLYPH_SIZE]; 8] = [
    ["#....", "##...", "###..", "####.", "#####"],
    ["..#..", ".###.", "#####", ".###.", "..#.."],
    ["#####", ".###.", "..#..", ".###.", "#####"],
    ["##...", "##...", "##...", "#####", "#####"],
    ["#####", "#####", "#####", "#####", "#####"],
    [".###.", "#####", "#####", "#####", ".###."],
    [".....", "#####", "#####", "#####", "....."],
    [".###.", ".###.", ".###.", ".###.", ".###."],
];

/// Side of the square block carrying the class level in `block-signal`;
/// `scatter-signal` uses the same number of pixels.
const SIGNAL_SIDE: usize = 2;

/// Per-image background brightness range of `shapes`.
const SHAPE_BACKGROUND: (f64, f64) = (0.15, 0.45);
const SHAPE_PEAK: f64 = 0.95;

/// Each glyph cell is drawn as a scale×scale block, so neighbouring pixels
/// carry redundant class evidence as in natural images.
pub fn glyph_scale(height: usize, width: usize) -> usize {
    (height.min(width) / 8).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynthKind {
    Shapes,
    BlockSignal,
    ScatterSignal,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Shapes => "shapes",
            SynthKind::BlockSignal => "block-signal",
            SynthKind::ScatterSignal => "scatter-signal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "shapes" => Ok(SynthKind::Shapes),
            "block-signal" | "block" => Ok(SynthKind::BlockSignal),
            "scatter-signal" | "scatter" => Ok(SynthKind::ScatterSignal),
            _ => Err(Error::invalid(format!("unknown dataset kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub height: usize,
    pub width: usize,
    pub num_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Desk-scale defaults: 16×16 single-channel, 4 classes, 2000/500 samples.
    pub fn desk(kind: SynthKind, seed: u64) -> Self {
        let noise_std = match kind {
            SynthKind::Shapes => 0.1,
            SynthKind::BlockSignal | SynthKind::ScatterSignal => 0.03,
        };
        SynthSpec { kind, height: 16, width: 16, num_classes: 4, n_train: 2000, n_test: 500, noise_std, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 8 || self.width < 8 {
            return Err(Error::invalid(format!("image must be at least 8x8, got {}x{}", self.height, self.width)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid(format!("noise_std must be finite and >= 0, got {}", self.noise_std)));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        if self.kind == SynthKind::Shapes && self.num_classes > GLYPHS.len() {
            return Err(Error::invalid(format!(
                "{} classes exceed the glyph alphabet of {}",
                self.num_classes,
                GLYPHS.len()
            )));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::invalid("train and test sizes must be positive"));
        }
        Ok(())
    }
}

/// Generated splits with a ground-truth mask of class-carrying pixels per sample.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub train: Dataset,
    pub test: Dataset,
    pub train_masks: Vec<Mask>,
    pub test_masks: Vec<Mask>,
}

pub fn glyph_template(class: usize) -> [[bool; GLYPH_SIZE]; GLYPH_SIZE] {
    let mut out = [[false; GLYPH_SIZE]; GLYPH_SIZE];
    for (r, row) in GLYPHS[class].iter().enumerate() {
        for (c, ch) in row.bytes().enumerate() {
            out[r][c] = ch == b'#';
        }
    }
    out
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let (train, train_masks) = split(spec, "train", spec.n_train)?;
    let (test, test_masks) = split(spec, "test", spec.n_test)?;
    Ok(SynthData { train, test, train_masks, test_masks })
}

fn split(spec: &SynthSpec, which: &str, n: usize) -> Result<(Dataset, Vec<Mask>)> {
    let mut rng = seed::rng(spec.seed, &["synth", spec.kind.name(), which]);
    let (h, w) = (spec.height, spec.width);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut samples = Vec::with_capacity(n);
    let mut masks = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % spec.num_classes;
        let mut signal = vec![false; h * w];
        let mut value = vec![0.0; h * w];
        match spec.kind {
            SynthKind::Shapes => {
                let scale = glyph_scale(h, w);
                let side = GLYPH_SIZE * scale;
                let top = rng.random_range(0..=h - side);
                let left = rng.random_range(0..=w - side);
                let background = rng.random_range(SHAPE_BACKGROUND.0..SHAPE_BACKGROUND.1);
                value.fill(background);
                let glyph = glyph_template(label);
                for r in 0..side {
                    for c in 0..side {
                        if glyph[r / scale][c / scale] {
                            let p = (top + r) * w + left + c;
                            signal[p] = true;
                            value[p] = SHAPE_PEAK;
                        }
                    }
                }
            }
            SynthKind::BlockSignal => {
                let level = class_level(label, spec.num_classes);
                let top = rng.random_range(0..=h - SIGNAL_SIDE);
                let left = rng.random_range(0..=w - SIGNAL_SIDE);
                for r in 0..SIGNAL_SIDE {
                    for c in 0..SIGNAL_SIDE {
                        signal[(top + r) * w + left + c] = true;
                        value[(top + r) * w + left + c] = level;
                    }
                }
            }
            SynthKind::ScatterSignal => {
                let level = class_level(label, spec.num_classes);
                let mut placed = 0;
                while placed < SIGNAL_SIDE * SIGNAL_SIDE {
                    let p = rng.random_range(0..h * w);
                    if !signal[p] {
                        signal[p] = true;
                        value[p] = level;
                        placed += 1;
                    }
                }
            }
        }
        if spec.noise_std > 0.0 {
            for v in value.iter_mut() {
                *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
        // Pixels are f32-representable so the RLAB round trip is exact.
        let pixels = value.iter().map(|&v| v as f32 as f64).collect();
        samples.push(Sample { image: Tensor::new(vec![1, h, w], pixels)?, label });
        masks.push(Mask::from_bits(signal, h, w, "ground-truth")?);
    }
    let name = format!("{}-{which}", spec.kind.name());
    Ok((Dataset::new(samples, spec.num_classes, name, spec.seed)?, masks))
}

/// Intensity encoding class `c` in the signal datasets: (c+1)/C.
pub(crate) fn class_level(class: usize, num_classes: usize) -> f64 {
    (class + 1) as f64 / num_classes as f64
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn small(kind: SynthKind, noise: f64) -> SynthSpec {
        SynthSpec { n_train: 64, n_test: 32, noise_std: noise, ..SynthSpec::desk(kind, 11) }
    }

    #[test]
    fn noiseless_shapes_match_template_exactly() {
        let data = generate(&small(SynthKind::Shapes, 0.0)).unwrap();
        let peak = SHAPE_PEAK as f32 as f64;
        for (s, m) in data.train.samples().iter().zip(&data.train_masks) {
            let px = s.image.data();
            let background = px.iter().copied().fold(f64::INFINITY, f64::min);
            assert!((SHAPE_BACKGROUND.0..SHAPE_BACKGROUND.1).contains(&background));
            for (i, &on) in m.bits().iter().enumerate() {
                assert_eq!(px[i], if on { peak } else { background });
            }
            let cells = glyph_template(s.label).iter().flatten().filter(|&&b| b).count();
            assert_eq!(m.count(), cells * 4);
        }
    }

    fn placed(glyph: usize, top: usize, left: usize) -> Vec<bool> {
        let t = glyph_template(glyph);
        let mut out = vec![false; 256];
        for r in 0..10 {
            for c in 0..10 {
                out[(top + r) * 16 + left + c] = t[r / 2][c / 2];
            }
        }
        out
    }

    #[test]
    fn zeroing_non_mask_pixels_keeps_glyph_identity() {
        let data = generate(&small(SynthKind::Shapes, 0.0)).unwrap();
        for (s, m) in data.test.samples().iter().zip(&data.test_masks) {
            let kept: Vec<bool> = s.image.data().iter().zip(m.bits()).map(|(&v, &on)| on && v > 0.9).collect();
            let identified: Vec<usize> = (0..4)
                .filter(|&g| (0..=6).any(|top| (0..=6).any(|left| placed(g, top, left) == kept)))
                .collect();
            assert_eq!(identified, vec![s.label]);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate(&small(SynthKind::Shapes, 0.1)).unwrap();
        let b = generate(&small(SynthKind::Shapes, 0.1)).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn block_signal_single_pixel_decoder_is_perfect() {
        let data = generate(&small(SynthKind::BlockSignal, 0.0)).unwrap();
        for (s, m) in data.train.samples().iter().zip(&data.train_masks) {
            for (i, &on) in m.bits().iter().enumerate() {
                if on {
                    let v = s.image.data()[i];
                    let decoded = (v * 4.0).round() as usize - 1;
                    assert_eq!(decoded, s.label);
                }
            }
        }
    }

    #[test]
    fn train_and_test_are_disjoint() {
        let data = generate(&small(SynthKind::Shapes, 0.1)).unwrap();
        let key = |s: &Sample| s.image.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        let train: HashSet<_> = data.train.samples().iter().map(key).collect();
        assert!(data.test.samples().iter().all(|s| !train.contains(&key(s))));
    }

    #[test]
    fn rejects_too_many_glyph_classes() {
        let spec = SynthSpec { num_classes: 9, ..small(SynthKind::Shapes, 0.0) };
        assert!(matches!(generate(&spec), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn labels_are_balanced() {
        let data = generate(&small(SynthKind::ScatterSignal, 0.03)).unwrap();
        let mut counts = [0; 4];
        for s in data.train.samples() {
            counts[s.label] += 1;
        }
        assert_eq!(counts, [16; 4]);
    }
}
