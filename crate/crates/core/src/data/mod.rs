//! Datasets: the in-memory type, synthetic generators and file formats.

mod rlab;
mod synth;

pub use rlab::{load, read_rlab, save, write_csv, write_rlab, RlabContents, MAGIC, VERSION};
pub use synth::{generate, glyph_scale, glyph_template, SynthData, SynthKind, SynthSpec, GLYPH_NAMES, GLYPH_SIZE};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Tensor,
    pub label: usize,
}

/// Labelled images of a common shape (C_in, H, W).
///
/// `name` and `seed` are provenance only; equality compares content.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<Sample>,
    num_classes: usize,
    image_shape: [usize; 3],
    pub name: String,
    pub seed: u64,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.num_classes == other.num_classes && self.image_shape == other.image_shape && self.samples == other.samples
    }
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, num_classes: usize, name: impl Into<String>, seed: u64) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::invalid("dataset must contain at least one sample"))?;
        let s = first.image.shape();
        if s.len() != 3 {
            return Err(Error::invalid(format!("images must be (C_in, H, W), got {s:?}")));
        }
        let image_shape = [s[0], s[1], s[2]];
        for (i, sample) in samples.iter().enumerate() {
            if sample.image.shape() != image_shape {
                return Err(Error::ShapeMismatch { expected: image_shape.to_vec(), got: sample.image.shape().to_vec() });
            }
            if sample.label >= num_classes {
                return Err(Error::invalid(format!("sample {i}: label {} not below {num_classes}", sample.label)));
            }
            if let Some(v) = sample.image.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(format!("sample {i}: pixel value {v} outside [0, 1]")));
            }
        }
        Ok(Dataset { samples, num_classes, image_shape, name: name.into(), seed })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn image_shape(&self) -> [usize; 3] {
        self.image_shape
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Stacks the selected samples into an (n, C_in, H, W) batch.
    pub fn batch(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let per = self.image_shape.iter().product::<usize>();
        let mut data = Vec::with_capacity(per * indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.samples[i].image.data());
            labels.push(self.samples[i].label);
        }
        let [c, h, w] = self.image_shape;
        (Tensor::new(vec![indices.len(), c, h, w], data).expect("batch shape"), labels)
    }

    /// New dataset with each image replaced by `f(index, image)`; labels kept.
    pub fn map_images(&self, name: impl Into<String>, mut f: impl FnMut(usize, &Tensor) -> Result<Tensor>) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(Sample { image: f(i, &s.image)?, label: s.label }))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples, self.num_classes, name, self.seed)
    }
}
