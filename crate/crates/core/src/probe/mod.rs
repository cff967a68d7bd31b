//! Linear probes over raw pixels versus features from a frozen, untrained
//! network, on grayscale images.

mod pgm;

pub use pgm::{parse_pgm, write_pgm};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{evaluate_accuracy, train_head, TrainConfig};
use crate::rng::SplitMix64;

/// Side of the square grid images are resized to.
pub const PROBE_SIDE: usize = 28;
pub const DEFAULT_FEATURE_DIM: usize = 768;
const HIDDEN_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image must be nonempty".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Pixels scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p) / 255.0).collect()
    }
}

/// Bilinear resize of a row-major grid. Output pixel `i` samples the source
/// at `(i + 0.5) · in/out − 0.5`, clamped to the image.
pub fn resize_bilinear(
    src: &[f64],
    width: usize,
    height: usize,
    out_w: usize,
    out_h: usize,
) -> Vec<f64> {
    let coord = |i: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        let s = ((i as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, s - i0 as f64)
    };
    let mut out = Vec::with_capacity(out_w * out_h);
    for r in 0..out_h {
        let (y0, y1, fy) = coord(r, height, out_h);
        for c in 0..out_w {
            let (x0, x1, fx) = coord(c, width, out_w);
            let top = src[y0 * width + x0] * (1.0 - fx) + src[y0 * width + x1] * fx;
            let bottom = src[y1 * width + x0] * (1.0 - fx) + src[y1 * width + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// 28×28 bilinear thumbnail in `[0, 1]`, flattened row-major (784 values).
pub fn thumbnail(img: &GrayImage) -> Vec<f64> {
    let raw: Vec<f64> = img.pixels.iter().map(|&p| f64::from(p)).collect();
    resize_bilinear(&raw, img.width, img.height, PROBE_SIDE, PROBE_SIDE)
        .into_iter()
        .map(|v| v / 255.0)
        .collect()
}

/// The first 768 values of the row-major 28×28 thumbnail.
pub fn pixel_features(img: &GrayImage) -> Vec<f64> {
    let mut t = thumbnail(img);
    t.truncate(DEFAULT_FEATURE_DIM);
    t
}

/// Frozen bias-free MLP `784 → 1024 → 768` with a ReLU hidden layer and
/// He-normal weights drawn from a [`SplitMix64`] stream.
#[derive(Debug, Clone)]
pub struct RandomNet {
    w1: Array2<f64>,
    w2: Array2<f64>,
    seed: u64,
}

impl RandomNet {
    pub fn new(seed: u64) -> Self {
        Self::with_dims(
            seed,
            PROBE_SIDE * PROBE_SIDE,
            HIDDEN_DIM,
            DEFAULT_FEATURE_DIM,
        )
    }

    pub fn with_dims(seed: u64, input: usize, hidden: usize, output: usize) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut layer = |rows: usize, cols: usize| {
            let std = (2.0 / cols as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || std * rng.next_normal())
        };
        let w1 = layer(hidden, input);
        let w2 = layer(output, hidden);
        Self { w1, w2, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.nrows()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let h = self
            .w1
            .dot(&Array1::from(input.to_vec()))
            .mapv(|v| v.max(0.0));
        Ok(self.w2.dot(&h).to_vec())
    }
}

pub fn random_net_features(img: &GrayImage, seed: u64) -> Vec<f64> {
    RandomNet::new(seed)
        .forward(&thumbnail(img))
        .expect("thumbnail matches the input layer")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturizerKind {
    Pixel,
    RandomNet,
}

pub enum Featurizer {
    Pixel { d: usize },
    RandomNet(Box<RandomNet>),
}

impl Featurizer {
    pub fn pixel(d: usize) -> Result<Self> {
        if d == 0 || d > PROBE_SIDE * PROBE_SIDE {
            return Err(Error::InvalidArgument(format!(
                "pixel features need 1 <= d <= 784, got {d}"
            )));
        }
        Ok(Featurizer::Pixel { d })
    }

    pub fn random_net(seed: u64) -> Self {
        Featurizer::RandomNet(Box::new(RandomNet::new(seed)))
    }

    pub fn kind(&self) -> FeaturizerKind {
        match self {
            Featurizer::Pixel { .. } => FeaturizerKind::Pixel,
            Featurizer::RandomNet(_) => FeaturizerKind::RandomNet,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Featurizer::Pixel { d } => *d,
            Featurizer::RandomNet(net) => net.output_dim(),
        }
    }

    /// Features of a flattened 28×28 thumbnail in `[0, 1]`.
    pub fn from_thumbnail(&self, thumb: &[f64]) -> Result<Vec<f64>> {
        match self {
            Featurizer::Pixel { d } => {
                if thumb.len() < *d {
                    return Err(Error::DimensionMismatch {
                        expected: *d,
                        got: thumb.len(),
                    });
                }
                Ok(thumb[..*d].to_vec())
            }
            Featurizer::RandomNet(net) => net.forward(thumb),
        }
    }

    pub fn featurize(&self, img: &GrayImage) -> Vec<f64> {
        self.from_thumbnail(&thumbnail(img))
            .expect("thumbnail has 784 values")
    }

    /// Featurizes many thumbnails in parallel into a matrix.
    pub fn featurize_all(&self, thumbs: &[Vec<f64>]) -> Result<Array2<f64>> {
        let rows: Vec<Vec<f64>> = thumbs
            .par_iter()
            .map(|t| self.from_thumbnail(t))
            .collect::<Result<_>>()?;
        let mut x = Array2::zeros((rows.len(), self.dim()));
        for (mut r, v) in x.rows_mut().into_iter().zip(&rows) {
            r.assign(&ndarray::ArrayView1::from(v));
        }
        Ok(x)
    }
}

/// Trains the plain linear probe (no prior) on featurized thumbnails and
/// returns test accuracy in percent.
pub fn probe(
    featurizer: &Featurizer,
    train: &[(Vec<f64>, usize)],
    test: &[(Vec<f64>, usize)],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<f64> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument(
            "a probe needs at least 2 classes".into(),
        ));
    }
    let split = |s: &[(Vec<f64>, usize)]| -> Result<(Array2<f64>, Vec<usize>)> {
        let thumbs: Vec<Vec<f64>> = s.iter().map(|(t, _)| t.clone()).collect();
        Ok((
            featurizer.featurize_all(&thumbs)?,
            s.iter().map(|(_, y)| *y).collect(),
        ))
    };
    let (xtr, ytr) = split(train)?;
    let (xte, yte) = split(test)?;
    let cfg = TrainConfig {
        prior_enabled: false,
        ..*cfg
    };
    let head = train_head(
        xtr.view(),
        &ytr,
        None,
        (0..n_classes).map(|c| format!("class_{c}")).collect(),
        (0..featurizer.dim())
            .map(|j| format!("feature_{j}"))
            .collect(),
        &cfg,
        None,
    )?
    .head;
    evaluate_accuracy(&head, xte.view(), &yte)
}
