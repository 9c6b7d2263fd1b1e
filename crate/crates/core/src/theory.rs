//! Closed-form constants, feasibility conditions and rate expressions for the
//! hedged methods, with their RBB counterparts for comparison.
//!
//! Everything here is plain `f64` arithmetic; infeasible inputs surface as
//! [`Error::Infeasible`].

use crate::error::{Error, Result};
use crate::model::FiniteSum;
use crate::sampling::SamplingDistribution;
use crate::scalar::Scalar;
use crate::stepsize::HedgeBounds;

/// Smoothness and convexity constants, their importance-sampling analogues
/// under `Q`, and the hedged condition numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub l: f64,
    pub mu: f64,
    pub kappa: f64,
    /// `max_i L/(n q_i)`.
    pub lq: f64,
    /// `min_i μ/(n q_i)`.
    pub muq: f64,
    /// `L/L_q`.
    pub lr: f64,
    /// `μ_q/μ`.
    pub mur: f64,
    /// `L_q/μ_q`.
    pub kappa_plus: f64,
    /// `α̂κ + 1 − α̃`.
    pub kappa_r: f64,
    /// `α̂κ⁺ + 1 − α̃`.
    pub kappa_r_plus: f64,
    pub bounds: HedgeBounds,
}

impl TheoryConstants {
    /// From raw constants and probabilities. `uniform` pins `L_q = L`, `μ_q = μ`.
    pub fn compute(l: f64, mu: f64, probs: &[f64], uniform: bool, bounds: HedgeBounds) -> Result<Self> {
        if !(l > 0.0) || !(mu > 0.0) || !l.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidConfig(format!("need positive L and mu, got {l} and {mu}")));
        }
        if probs.is_empty() || probs.iter().any(|&q| !(q > 0.0)) {
            return Err(Error::DegenerateDistribution("all q_i must be positive".into()));
        }
        let n = probs.len() as f64;
        let (lq, muq) = if uniform {
            (l, mu)
        } else {
            let q_min = probs.iter().copied().fold(f64::INFINITY, f64::min);
            let q_max = probs.iter().copied().fold(0.0, f64::max);
            (l / (n * q_min), mu / (n * q_max))
        };
        let kappa = l / mu;
        let kappa_plus = lq / muq;
        Ok(TheoryConstants {
            l,
            mu,
            kappa,
            lq,
            muq,
            lr: l / lq,
            mur: muq / mu,
            kappa_plus,
            kappa_r: bounds.alpha_hat * kappa + 1.0 - bounds.alpha_tilde,
            kappa_r_plus: bounds.alpha_hat * kappa_plus + 1.0 - bounds.alpha_tilde,
            bounds,
        })
    }

    pub fn from_problem<T: Scalar, P: FiniteSum<T> + ?Sized>(
        problem: &P,
        q: &SamplingDistribution<T>,
        bounds: HedgeBounds,
    ) -> Result<Self> {
        let probs: Vec<f64> = q.probs().iter().map(|p| p.to_f64_lossy()).collect();
        Self::compute(
            problem.smoothness_constant().to_f64_lossy(),
            problem.strong_convexity_constant().to_f64_lossy(),
            &probs,
            q.is_uniform(),
            bounds,
        )
    }

    fn hat(&self) -> f64 {
        self.bounds.alpha_hat
    }

    fn tilde(&self) -> f64 {
        self.bounds.alpha_tilde
    }
}

fn variance_factor(b: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        (n - b) as f64 / (b as f64 * (n - 1) as f64)
    }
}

fn condition_terms(l: f64, mu: f64, hat: f64, tilde: f64, gamma: f64, b_bar: usize) -> (f64, f64) {
    let bb = b_bar as f64;
    let ratio = (hat * gamma * l * l + (1.0 - tilde) * gamma * mu * l) / (mu * l * bb);
    let linear = (hat * gamma * l + (1.0 - tilde) * gamma * mu) / (mu * bb);
    (ratio, linear)
}

/// Left-hand side of the MB-SARAH-RHBB parameter condition.
pub fn theorem1_lhs(b: usize, gamma: f64, m: usize, n: usize, b_bar: usize, c: &TheoryConstants) -> f64 {
    let (ratio, linear) = condition_terms(c.l, c.mu, c.hat(), c.tilde(), gamma, b_bar);
    m as f64 * variance_factor(b, n) * ratio * ratio + linear
}

/// The same condition with `L_q`, `μ_q` and the `L_r` factors.
pub fn theorem1_plus_lhs(b: usize, gamma: f64, m: usize, n: usize, b_bar: usize, c: &TheoryConstants) -> f64 {
    let (ratio, linear) = condition_terms(c.lq, c.muq, c.hat(), c.tilde(), gamma, b_bar);
    m as f64 * c.lr * c.lr * variance_factor(b, n) * ratio * ratio + c.lr * linear
}

pub fn check_theorem1_condition(b: usize, gamma: f64, m: usize, n: usize, b_bar: usize, c: &TheoryConstants) -> bool {
    theorem1_lhs(b, gamma, m, n, b_bar, c) <= 1.0
}

pub fn check_theorem1_plus_condition(
    b: usize,
    gamma: f64,
    m: usize,
    n: usize,
    b_bar: usize,
    c: &TheoryConstants,
) -> bool {
    theorem1_plus_lhs(b, gamma, m, n, b_bar, c) <= 1.0
}

fn inner_coefficient(l: f64, mu: f64, hat: f64, tilde: f64, m: usize, gamma: f64, b_bar: usize) -> f64 {
    2.0 * b_bar as f64 * mu * l / (gamma * (m as f64 + 1.0) * (hat * l + (1.0 - tilde) * mu))
}

/// Within-epoch factor: `E‖∇P(w_m)‖² ≤ factor · [P(w_0) − P(w*)]`.
pub fn sarah_inner_rate(m: usize, c: &TheoryConstants, gamma: f64, b_bar: usize) -> f64 {
    inner_coefficient(c.l, c.mu, c.hat(), c.tilde(), m, gamma, b_bar)
}

pub fn sarah_inner_rate_plus(m: usize, c: &TheoryConstants, gamma: f64, b_bar: usize) -> f64 {
    inner_coefficient(c.lq, c.muq, c.hat(), c.tilde(), m, gamma, b_bar)
}

/// Per-epoch contraction of `‖∇P(w̃_s)‖²`.
pub fn sarah_outer_rate(m: usize, c: &TheoryConstants, gamma: f64, b_bar: usize) -> f64 {
    c.kappa * b_bar as f64 / (gamma * (m as f64 + 1.0) * c.kappa_r)
}

pub fn sarah_outer_rate_plus(m: usize, c: &TheoryConstants, gamma: f64, b_bar: usize) -> f64 {
    c.mur * c.kappa_plus * b_bar as f64 / (gamma * (m as f64 + 1.0) * c.kappa_r_plus)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn ceil_count(x: f64) -> Result<u64> {
    if !x.is_finite() {
        return Err(Error::Infeasible { reason: "count is not finite".into(), margin: x });
    }
    Ok(x.ceil().max(0.0) as u64)
}

/// `m_RH = ⌈2b̄μσκ/(εγ(α̂κ + 1 − α̃)) − 1⌉`.
pub fn sarah_m_required(eps: f64, sigma0: f64, c: &TheoryConstants, gamma: f64, b_bar: usize) -> Result<u64> {
    check_positive("eps", eps)?;
    check_positive("sigma0", sigma0)?;
    if !(c.kappa_r > 0.0) {
        return Err(Error::Infeasible { reason: "kappa_r must be positive".into(), margin: c.kappa_r });
    }
    ceil_count(2.0 * b_bar as f64 * c.mu * sigma0 * c.kappa / (eps * gamma * c.kappa_r) - 1.0)
}

/// `m_RH+` with `μ_q`, `κ⁺`.
pub fn sarah_m_required_plus(eps: f64, sigma0: f64, c: &TheoryConstants, gamma: f64, b_bar: usize) -> Result<u64> {
    check_positive("eps", eps)?;
    check_positive("sigma0", sigma0)?;
    if !(c.kappa_r_plus > 0.0) {
        return Err(Error::Infeasible { reason: "kappa_r_plus must be positive".into(), margin: c.kappa_r_plus });
    }
    ceil_count(2.0 * b_bar as f64 * c.muq * sigma0 * c.kappa_plus / (eps * gamma * c.kappa_r_plus) - 1.0)
}

/// RBB reference `m_R = ⌈2b̄μσ/(εγ) − 1⌉`.
pub fn rbb_m_required(eps: f64, sigma0: f64, mu: f64, gamma: f64, b_bar: usize) -> Result<u64> {
    check_positive("eps", eps)?;
    check_positive("sigma0", sigma0)?;
    ceil_count(2.0 * b_bar as f64 * mu * sigma0 / (eps * gamma) - 1.0)
}

fn epochs_from(eps: f64, zeta: f64, denominator: f64) -> Result<u64> {
    check_positive("eps", eps)?;
    check_positive("zeta", zeta)?;
    if !(denominator > 0.0) {
        return Err(Error::Infeasible {
            reason: "epoch-count denominator is not positive; the outer factor does not contract".into(),
            margin: denominator,
        });
    }
    ceil_count((zeta.ln() - eps.ln()) / denominator)
}

/// `s_RH = ⌈(log ζ − log ε)/(log(α̂κ + 1 − α̃) − log κ + log(γ(m+1)) − log b̄)⌉`.
pub fn sarah_s_required(eps: f64, zeta: f64, c: &TheoryConstants, gamma: f64, m: usize, b_bar: usize) -> Result<u64> {
    let denom = c.kappa_r.ln() - c.kappa.ln() + (gamma * (m as f64 + 1.0)).ln() - (b_bar as f64).ln();
    epochs_from(eps, zeta, denom)
}

/// RBB reference `s_R = ⌈(log ζ − log ε)/(log(γ(m+1)) − log b̄)⌉`.
pub fn rbb_s_required(eps: f64, zeta: f64, gamma: f64, m: usize, b_bar: usize) -> Result<u64> {
    epochs_from(eps, zeta, (gamma * (m as f64 + 1.0)).ln() - (b_bar as f64).ln())
}

/// A linear rate and whether it contracts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub rho: f64,
    pub feasible: bool,
}

impl Rate {
    fn of(rho: f64) -> Self {
        Rate { rho, feasible: rho < 1.0 }
    }
}

fn ms2gd_generic(lead: f64, kr: f64, scale: f64, m: usize, b: usize, b_bar: usize, gamma2: f64) -> Result<Rate> {
    let bb = b as f64 * b_bar as f64;
    let margin = bb - 4.0 * gamma2 * kr * scale;
    if !(margin > 0.0) {
        return Err(Error::Infeasible { reason: "b·b̄ must exceed 4·γ₂·κ_r".into(), margin });
    }
    let first = lead * b as f64 * (b_bar as f64).powi(2) / (m as f64 * gamma2 * kr * margin);
    Ok(Rate::of(first + 2.0 * gamma2 * kr * scale / margin))
}

/// mS2GD-RHBB rate `ρ̃₁`.
pub fn ms2gd_rate(m: usize, b: usize, b_bar: usize, gamma2: f64, c: &TheoryConstants) -> Result<Rate> {
    ms2gd_generic(c.kappa, c.kappa_r, 1.0, m, b, b_bar, gamma2)
}

/// mS2GD-RHBB+ rate `ρ̃₂`.
pub fn ms2gd_plus_rate(m: usize, b: usize, b_bar: usize, gamma2: f64, c: &TheoryConstants) -> Result<Rate> {
    ms2gd_generic(c.mur * c.kappa_plus, c.kappa_r_plus, c.lr, m, b, b_bar, gamma2)
}

/// mS2GD-RBB reference `ρ̃_R = (μbb̄² + 2mL)/(μbb̄m − 4mL)`.
pub fn rbb_ms2gd_rate(m: usize, b: usize, b_bar: usize, l: f64, mu: f64) -> Result<Rate> {
    let (m, b, bb) = (m as f64, b as f64, b_bar as f64);
    let denom = mu * b * bb * m - 4.0 * m * l;
    if !(denom > 0.0) {
        return Err(Error::Infeasible { reason: "μ·b·b̄ must exceed 4L".into(), margin: denom });
    }
    Ok(Rate::of((mu * b * bb * bb + 2.0 * m * l) / denom))
}

/// Which side of the threshold `b̄` must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

/// The batch-correction requirement `A·b̄ < c·B·m` solved for `b̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingThreshold {
    /// `(1+2c)(κ/(κ_r γ₂))² − 1 − c`.
    pub a: f64,
    /// `(1+2c)κ/(2κ_r γ₂) − 1 − c`.
    pub b: f64,
    /// `c·B·m/A`.
    pub threshold: f64,
    pub side: Side,
}

impl HalvingThreshold {
    /// Whether every positive `b̄` satisfies the requirement.
    pub fn any_positive(&self) -> bool {
        self.side == Side::Above && self.threshold < 0.0
    }

    pub fn admits(&self, b_bar: f64) -> bool {
        match self.side {
            Side::Above => b_bar > self.threshold,
            Side::Below => b_bar < self.threshold,
        }
    }
}

/// Batch correction needed for `ρ̃_RH < ρ̃_R / 2` when `ρ̃_R = c`.
pub fn ms2gd_halving_condition(c: f64, kappa: f64, kappa_r: f64, gamma2: f64, m: usize) -> Result<HalvingThreshold> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidConfig(format!("c must lie in (0, 1), got {c}")));
    }
    let t = kappa / (kappa_r * gamma2);
    let a = (1.0 + 2.0 * c) * t * t - 1.0 - c;
    let b = (1.0 + 2.0 * c) * t / 2.0 - 1.0 - c;
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Infeasible { reason: "A = 0 leaves b̄ unconstrained by this condition".into(), margin: a });
    }
    let threshold = c * b * m as f64 / a;
    Ok(HalvingThreshold { a, b, threshold, side: if a < 0.0 { Side::Above } else { Side::Below } })
}

/// `(ρ′_RH, ρ′_RH+)` for a `δ`-gradient-dominated objective.
pub fn gradient_dominated_rates(
    delta: f64,
    c: &TheoryConstants,
    gamma: f64,
    m: usize,
    b_bar: usize,
) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0 / (2.0 * c.mu)) {
        return Err(Error::Contract(format!("delta must lie in (0, 1/(2mu)), got {delta}")));
    }
    Ok((
        delta * inner_coefficient(c.l, c.mu, c.hat(), c.tilde(), m, gamma, b_bar),
        delta * inner_coefficient(c.lq, c.muq, c.hat(), c.tilde(), m, gamma, b_bar),
    ))
}
