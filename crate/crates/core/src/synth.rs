//! Seeded synthetic stand-ins shaped like three LIBSVM benchmark sets.
//!
//! Each row one-hot encodes a fixed list of categorical attributes (values are
//! all 1.0, as in the binarized originals). Labels come from a planted linear
//! score plus logistic noise, thresholded at a target positive rate.

use crate::data::{SparseDataset, SparseExample};
use crate::error::{Error, Result};
use crate::sampling::stream;
use crate::scalar::Scalar;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub name: &'static str,
    pub n: usize,
    /// Category count of each attribute; the dimension is their sum.
    pub groups: Vec<usize>,
    /// Probability that an attribute is missing from a row.
    pub missing: f64,
    /// Scale of the logistic label noise relative to the planted score.
    pub noise: f64,
    pub positive_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn dim(&self) -> usize {
        self.groups.iter().sum()
    }

    /// 8124 × 112, 22 attributes, nearly separable, about 48% positive.
    pub fn mushrooms() -> Self {
        SyntheticSpec {
            name: "mushrooms",
            n: 8124,
            groups: vec![6, 4, 8, 2, 9, 2, 2, 2, 10, 2, 4, 4, 4, 9, 9, 1, 4, 3, 5, 9, 6, 7],
            missing: 0.0,
            noise: 0.05,
            positive_rate: 0.482,
            seed: 0x6d75_7368,
        }
    }

    /// 11055 × 68, 30 attributes (8 ternary, 22 binary), about 56% positive.
    pub fn phishing() -> Self {
        let mut groups = vec![3; 8];
        groups.extend([2; 22]);
        SyntheticSpec {
            name: "phishing",
            n: 11055,
            groups,
            missing: 0.0,
            noise: 0.3,
            positive_rate: 0.557,
            seed: 0x7068_6973,
        }
    }

    /// 22696 × 123, 14 attributes, noisy, about 24% positive.
    pub fn a8a() -> Self {
        SyntheticSpec {
            name: "a8a",
            n: 22696,
            groups: vec![5, 8, 5, 16, 5, 7, 14, 6, 5, 2, 2, 2, 5, 41],
            missing: 0.01,
            noise: 1.0,
            positive_rate: 0.24,
            seed: 0x6138_6138,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "mushrooms" => Some(Self::mushrooms()),
            "phishing" => Some(Self::phishing()),
            "a8a" => Some(Self::a8a()),
            _ => None,
        }
    }

    /// Same shape with a different row count.
    pub fn with_rows(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
}

pub fn generate<T: Scalar>(spec: &SyntheticSpec) -> Result<SparseDataset<T>> {
    if spec.n == 0 || spec.groups.is_empty() || spec.groups.contains(&0) {
        return Err(Error::InvalidConfig(format!("synthetic set {} has an empty shape", spec.name)));
    }
    let mut rng = stream(spec.seed, 0);
    let d = spec.dim();
    let planted: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let cumulative: Vec<Vec<f64>> = spec
        .groups
        .iter()
        .map(|&k| {
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.iter()
                .scan(0.0, |acc, x| {
                    *acc += x / total;
                    Some(*acc)
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(spec.n);
    let mut scores = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut indices = Vec::with_capacity(spec.groups.len());
        let mut offset = 0;
        for (g, &k) in spec.groups.iter().enumerate() {
            let skip = spec.missing > 0.0 && rng.gen::<f64>() < spec.missing;
            let u = rng.gen::<f64>();
            if !skip {
                let c = cumulative[g].partition_point(|&p| p <= u).min(k - 1);
                indices.push(offset + c);
            }
            offset += k;
        }
        let score: f64 = indices.iter().map(|&j| planted[j]).sum();
        let u: f64 = rng.gen_range(1e-12..1.0 - 1e-12);
        let scale = spec.noise * (spec.groups.len() as f64).sqrt();
        scores.push(score + scale * (u / (1.0 - u)).ln());
        rows.push(indices);
    }

    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let cut = ((1.0 - spec.positive_rate) * spec.n as f64).floor() as usize;
    let threshold = sorted[cut.min(spec.n - 1)];

    let examples = rows
        .into_iter()
        .zip(scores)
        .map(|(idx, score)| {
            let label = if score >= threshold { T::one() } else { -T::one() };
            let values = vec![T::one(); idx.len()];
            SparseExample::new(idx, values, label)
        })
        .collect::<Result<Vec<_>>>()?;
    SparseDataset::new(d, examples)
}
