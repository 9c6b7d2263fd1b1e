//! Finite-sum objectives `P(w) = (1/n) Σ f_i(w)`.
//!
//! [`LogisticL2Problem`] is the objective the experiments use. The
//! [`DiagonalQuadratic`] problem exists so the engines can be checked against
//! closed-form behaviour.

use crate::data::SparseDataset;
use crate::error::{Error, Result};
use crate::sampling::SamplingDistribution;
use crate::scalar::{vecops, Scalar};

/// A finite sum of smooth, strongly convex components.
///
/// Implementors supply per-component losses and a batched gradient
/// accumulator; subset, weighted and full gradients are derived from it.
pub trait FiniteSum<T: Scalar>: Sync {
    /// Number of components `n`.
    fn len(&self) -> usize;

    /// Dimension of `w`.
    fn dim(&self) -> usize;

    /// `f_i(w)`.
    fn component_loss(&self, w: &[T], i: usize) -> T;

    /// `out += Σ_(i, c) c · ∇f_i(w)` over `terms`.
    fn accumulate_gradients(&self, w: &[T], terms: &[(usize, T)], out: &mut [T]);

    /// Component-wise Lipschitz constant of `∇f_i`.
    fn smoothness_constant(&self) -> T;

    /// Component-wise strong convexity modulus.
    fn strong_convexity_constant(&self) -> T;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn objective(&self, w: &[T]) -> T {
        let n = self.len();
        let total = (0..n).fold(T::zero(), |acc, i| acc + self.component_loss(w, i));
        total / T::of_usize(n)
    }

    fn component_gradient(&self, w: &[T], i: usize) -> Vec<T> {
        let mut g = vec![T::zero(); self.dim()];
        self.accumulate_gradients(w, &[(i, T::one())], &mut g);
        g
    }

    /// `∇P(w)`, one pass over the data.
    fn full_gradient(&self, w: &[T]) -> Vec<T> {
        let n = self.len();
        let c = T::one() / T::of_usize(n);
        let terms: Vec<(usize, T)> = (0..n).map(|i| (i, c)).collect();
        let mut g = vec![T::zero(); self.dim()];
        self.accumulate_gradients(w, &terms, &mut g);
        g
    }

    /// `(1/|S|) Σ_{i∈S} ∇f_i(w)`; repeated indices count with multiplicity.
    fn subset_gradient(&self, w: &[T], subset: &[usize]) -> Result<Vec<T>> {
        if subset.is_empty() {
            return Err(Error::Contract("subset gradient over an empty index set".into()));
        }
        let c = T::one() / T::of_usize(subset.len());
        let mut terms = Vec::with_capacity(subset.len());
        for &i in subset {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange { index: i, len: self.len() });
            }
            terms.push((i, c));
        }
        let mut g = vec![T::zero(); self.dim()];
        self.accumulate_gradients(w, &terms, &mut g);
        Ok(g)
    }

    /// Importance-weighted estimate `(1/|S|) Σ_{i∈S} ∇f_i(w) / (n q_i)`.
    ///
    /// A uniform distribution takes the plain [`FiniteSum::subset_gradient`]
    /// path so the two estimates agree bit for bit.
    fn weighted_subset_gradient(&self, w: &[T], subset: &[usize], q: &SamplingDistribution<T>) -> Result<Vec<T>> {
        if q.is_uniform() {
            return self.subset_gradient(w, subset);
        }
        if subset.is_empty() {
            return Err(Error::Contract("weighted gradient over an empty index set".into()));
        }
        if q.len() != self.len() {
            return Err(Error::Contract(format!(
                "distribution has {} entries but the problem has {} components",
                q.len(),
                self.len()
            )));
        }
        let n = T::of_usize(self.len());
        let b = T::of_usize(subset.len());
        let mut terms = Vec::with_capacity(subset.len());
        for &i in subset {
            let qi = q.prob(i).ok_or(Error::IndexOutOfRange { index: i, len: self.len() })?;
            if qi <= T::zero() {
                return Err(Error::DegenerateDistribution(format!("q_{i} = 0 for a sampled index")));
            }
            terms.push((i, T::one() / (b * n * qi)));
        }
        let mut g = vec![T::zero(); self.dim()];
        self.accumulate_gradients(w, &terms, &mut g);
        Ok(g)
    }
}

/// Numerically stable `log(1 + exp(-t))`.
#[inline]
pub fn log1p_exp_neg<T: Scalar>(t: T) -> T {
    (-t).max(T::zero()) + (-t.abs()).exp().ln_1p()
}

/// Numerically stable `1 / (1 + exp(t))`, i.e. `sigmoid(-t)`.
#[inline]
pub fn sigmoid_neg<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        let e = (-t).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + t.exp())
    }
}

/// ℓ2-regularized logistic regression with the regularizer folded into every
/// component: `f_i(w) = log(1 + exp(-z_i x_iᵀw)) + (λ/2)‖w‖²`.
#[derive(Debug, Clone)]
pub struct LogisticL2Problem<T> {
    data: SparseDataset<T>,
    lambda: T,
    smoothness: T,
}

impl<T: Scalar> LogisticL2Problem<T> {
    pub fn new(data: SparseDataset<T>, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be positive and finite, got {lambda}")));
        }
        // ‖x‖²/4 bounds the logistic Hessian x xᵀ σ(1-σ).
        let max_row = data.rows().iter().fold(T::zero(), |m, r| m.max(r.norm_sq()));
        let smoothness = max_row / T::of(4.0) + lambda;
        Ok(LogisticL2Problem { data, lambda, smoothness })
    }

    pub fn data(&self) -> &SparseDataset<T> {
        &self.data
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// `κ = L / μ`.
    pub fn condition_number(&self) -> T {
        self.smoothness / self.lambda
    }

    #[inline]
    fn margin(&self, w: &[T], i: usize) -> T {
        let r = &self.data.rows()[i];
        r.label() * r.dot_dense(w)
    }
}

impl<T: Scalar> FiniteSum<T> for LogisticL2Problem<T> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn component_loss(&self, w: &[T], i: usize) -> T {
        log1p_exp_neg(self.margin(w, i)) + self.lambda * vecops::norm_sq(w) / T::of(2.0)
    }

    fn objective(&self, w: &[T]) -> T {
        let n = self.len();
        let loss = (0..n).fold(T::zero(), |acc, i| acc + log1p_exp_neg(self.margin(w, i)));
        loss / T::of_usize(n) + self.lambda * vecops::norm_sq(w) / T::of(2.0)
    }

    fn accumulate_gradients(&self, w: &[T], terms: &[(usize, T)], out: &mut [T]) {
        let mut reg_weight = T::zero();
        for &(i, c) in terms {
            let r = &self.data.rows()[i];
            let z = r.label();
            let t = z * r.dot_dense(w);
            r.add_scaled_to(-c * z * sigmoid_neg(t), out);
            reg_weight = reg_weight + c;
        }
        vecops::axpy(reg_weight * self.lambda, w, out);
    }

    fn smoothness_constant(&self) -> T {
        self.smoothness
    }

    fn strong_convexity_constant(&self) -> T {
        self.lambda
    }
}

/// `f_i(w) = ½ Σ_j h_ij w_j² − c_iᵀw` with positive diagonal curvatures.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic<T> {
    curvature: Vec<Vec<T>>,
    linear: Vec<Vec<T>>,
}

impl<T: Scalar> DiagonalQuadratic<T> {
    pub fn new(curvature: Vec<Vec<T>>, linear: Vec<Vec<T>>) -> Result<Self> {
        if curvature.is_empty() || curvature.len() != linear.len() {
            return Err(Error::Contract("need matching, non-empty curvature and linear terms".into()));
        }
        let d = curvature[0].len();
        if d == 0 || curvature.iter().chain(&linear).any(|v| v.len() != d) {
            return Err(Error::Contract("all component vectors must share one positive dimension".into()));
        }
        if curvature.iter().flatten().any(|&h| !(h > T::zero())) {
            return Err(Error::Contract("curvatures must be positive".into()));
        }
        Ok(DiagonalQuadratic { curvature, linear })
    }

    /// Averaged Hessian diagonal `(1/n) Σ h_i`.
    pub fn mean_curvature(&self) -> Vec<T> {
        let n = T::of_usize(self.curvature.len());
        let d = self.curvature[0].len();
        (0..d).map(|j| self.curvature.iter().fold(T::zero(), |a, h| a + h[j]) / n).collect()
    }

    /// The unique minimizer of `P`.
    pub fn minimizer(&self) -> Vec<T> {
        let n = T::of_usize(self.linear.len());
        let h = self.mean_curvature();
        (0..h.len()).map(|j| self.linear.iter().fold(T::zero(), |a, c| a + c[j]) / n / h[j]).collect()
    }
}

impl<T: Scalar> FiniteSum<T> for DiagonalQuadratic<T> {
    fn len(&self) -> usize {
        self.curvature.len()
    }

    fn dim(&self) -> usize {
        self.curvature[0].len()
    }

    fn component_loss(&self, w: &[T], i: usize) -> T {
        let half = T::of(0.5);
        w.iter()
            .zip(&self.curvature[i])
            .zip(&self.linear[i])
            .fold(T::zero(), |acc, ((&wj, &h), &c)| acc + half * h * wj * wj - c * wj)
    }

    fn accumulate_gradients(&self, w: &[T], terms: &[(usize, T)], out: &mut [T]) {
        for &(i, c) in terms {
            for (j, o) in out.iter_mut().enumerate() {
                *o = *o + c * (self.curvature[i][j] * w[j] - self.linear[i][j]);
            }
        }
    }

    fn smoothness_constant(&self) -> T {
        self.curvature.iter().flatten().fold(T::zero(), |m, &h| m.max(h))
    }

    fn strong_convexity_constant(&self) -> T {
        self.curvature.iter().flatten().fold(T::infinity(), |m, &h| m.min(h))
    }
}
