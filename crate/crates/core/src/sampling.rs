//! Sampling distributions over the component indices and seeded index draws.

use crate::data::SparseDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Relative weight given to zero-weight rows before normalizing.
pub const ZERO_WEIGHT_FLOOR: f64 = 1e-6;

/// Probabilities `q_1..q_n` with a cumulative table for inverse-CDF draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution<T> {
    probs: Vec<T>,
    cumulative: Vec<f64>,
    uniform: bool,
}

impl<T: Scalar> SamplingDistribution<T> {
    /// `q_i = 1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Contract("uniform distribution over zero items".into()));
        }
        let q = 1.0 / n as f64;
        let probs = vec![T::of(q); n];
        let cumulative = (1..=n).map(|i| if i == n { 1.0 } else { i as f64 * q }).collect();
        Ok(SamplingDistribution { probs, cumulative, uniform: true })
    }

    /// Normalizes non-negative weights; zero weights are floored to
    /// `ZERO_WEIGHT_FLOOR` times the smallest positive weight.
    ///
    /// Equal weights yield exactly [`SamplingDistribution::uniform`].
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Self::build(weights, true)
    }

    /// Like [`SamplingDistribution::from_weights`] but keeps zero weights.
    pub fn from_weights_unfloored(weights: &[f64]) -> Result<Self> {
        Self::build(weights, false)
    }

    fn build(weights: &[f64], floor: bool) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DegenerateDistribution("no weights".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::DegenerateDistribution("weights must be finite and non-negative".into()));
        }
        let min_pos = weights.iter().copied().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
        if !min_pos.is_finite() {
            return Err(Error::DegenerateDistribution("all weights are zero".into()));
        }
        if weights.iter().all(|&w| w == weights[0]) {
            return Self::uniform(weights.len());
        }
        let adjusted: Vec<f64> =
            weights.iter().map(|&w| if w == 0.0 && floor { min_pos * ZERO_WEIGHT_FLOOR } else { w }).collect();
        let total: f64 = adjusted.iter().sum();
        let probs_f64: Vec<f64> = adjusted.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(probs_f64.len());
        let mut acc = 0.0;
        for p in &probs_f64 {
            acc += p;
            cumulative.push(acc);
        }
        // guard against the last prefix sum landing a few ulps under 1
        *cumulative.last_mut().expect("non-empty") = 1.0;
        Ok(SamplingDistribution { probs: probs_f64.into_iter().map(T::of).collect(), cumulative, uniform: false })
    }

    /// Option I: `q_i ∝ ‖x_i‖_∞^τ`.
    pub fn option1(data: &SparseDataset<T>, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let weights: Vec<f64> = data.rows().iter().map(|r| power_weight(r.inf_norm().to_f64_lossy(), tau)).collect();
        Self::from_weights(&weights)
    }

    /// Option II: `q_i ∝ ‖x_i‖_0^τ`.
    pub fn option2(data: &SparseDataset<T>, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let weights: Vec<f64> = data.rows().iter().map(|r| power_weight(r.nnz() as f64, tau)).collect();
        Self::from_weights(&weights)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> Option<T> {
        self.probs.get(i).copied()
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// True when every `q_i = 1/n`. Uniform distributions sample without
    /// replacement and skip the importance correction.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Inverse-CDF lookup for `u ∈ [0, 1)`.
    pub fn index_for(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidConfig(format!("tau must be finite and non-negative, got {tau}")));
    }
    Ok(())
}

// 0^0 is taken as 1 so that τ = 0 is uniform for every row.
fn power_weight(x: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        1.0
    } else {
        x.powf(tau)
    }
}

/// Named deterministic generator: ChaCha8 with a 64-bit seed.
pub type RunRng = ChaCha8Rng;

/// Independent generator streams for the index sets of one run.
#[derive(Debug, Clone)]
pub struct RunStreams {
    /// Estimator mini-batches `S`.
    pub estimator: RunRng,
    /// First step-size batch `S₁`.
    pub curvature1: RunRng,
    /// Second step-size batch `S₂`.
    pub curvature2: RunRng,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        RunStreams { estimator: stream(seed, 0), curvature1: stream(seed, 1), curvature2: stream(seed, 2) }
    }
}

/// Stream `id` of the generator seeded with `seed`.
pub fn stream(seed: u64, id: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform integer in `0..=hi` drawn through `u64` so results do not depend on
/// the platform's pointer width.
fn below_inclusive<R: RngCore>(rng: &mut R, hi: usize) -> usize {
    rng.gen_range(0..=hi as u64) as usize
}

/// `b` distinct indices from `0..n`, each size-`b` subset equally likely
/// (Floyd's algorithm). Output is sorted.
pub fn draw_uniform_subset<R: RngCore>(rng: &mut R, n: usize, b: usize) -> Result<Vec<usize>> {
    if b == 0 || b > n {
        return Err(Error::Contract(format!("cannot draw {b} distinct indices from {n}")));
    }
    if b == n {
        return Ok((0..n).collect());
    }
    let mut chosen = BTreeSet::new();
    for j in (n - b)..n {
        let t = below_inclusive(rng, j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    Ok(chosen.into_iter().collect())
}

/// `b` i.i.d. draws from `q` (with replacement), in draw order.
pub fn draw_weighted_multiset<T: Scalar, R: RngCore>(rng: &mut R, q: &SamplingDistribution<T>, b: usize) -> Vec<usize> {
    (0..b).map(|_| q.index_for(rng.gen::<f64>())).collect()
}

/// Step-size batch under `q`: uniform distributions draw without
/// replacement, others i.i.d. with replacement.
pub fn draw_batch<T: Scalar, R: RngCore>(rng: &mut R, q: &SamplingDistribution<T>, b: usize) -> Result<Vec<usize>> {
    if q.is_uniform() {
        draw_uniform_subset(rng, q.len(), b.min(q.len()))
    } else {
        Ok(draw_weighted_multiset(rng, q, b))
    }
}
