//! Barzilai-Borwein quotients, the random hedge rules built on them, and the
//! positivity safeguard.

use crate::error::{Error, Result};
use crate::scalar::{vecops, Scalar};

/// Relative tolerance for flagging curvature pairs.
pub const CURVATURE_TOL: f64 = 1e-12;

/// A gradient difference is unresolved when its norm is within this many
/// machine epsilons of the norms of the gradients it was formed from.
pub const SECANT_RESOLUTION: f64 = 1e4;

/// Smallest argument fed to the inverse-linear adaptor.
pub const ADAPTOR_ARG_FLOOR: f64 = 1e-3;

/// Why a BB quotient could not be formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureFlag {
    /// `sᵀy ≤ tol·‖s‖‖y‖`.
    NonPositiveCurvature,
    /// `‖y‖² ≤ tol·‖s‖‖y‖`.
    DegenerateDifference,
    /// `y` is dominated by rounding error in the gradients it came from.
    Unresolved,
}

/// Why a step-size candidate was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRejection {
    Curvature(CurvatureFlag),
    NonPositive,
    NonFinite,
}

impl From<CurvatureFlag> for StepRejection {
    fn from(f: CurvatureFlag) -> Self {
        StepRejection::Curvature(f)
    }
}

/// `‖s‖² / sᵀy`.
pub fn bb1_raw<T: Scalar>(s: &[T], y: &[T]) -> Result<T, CurvatureFlag> {
    let sy = vecops::dot(s, y);
    let scale = vecops::norm(s) * vecops::norm(y);
    if !(sy > T::of(CURVATURE_TOL) * scale) {
        return Err(CurvatureFlag::NonPositiveCurvature);
    }
    Ok(vecops::norm_sq(s) / sy)
}

/// `sᵀy / ‖y‖²`.
pub fn bb2_raw<T: Scalar>(s: &[T], y: &[T]) -> Result<T, CurvatureFlag> {
    let yy = vecops::norm_sq(y);
    let scale = vecops::norm(s) * vecops::norm(y);
    if !(yy > T::of(CURVATURE_TOL) * scale) {
        return Err(CurvatureFlag::DegenerateDifference);
    }
    Ok(vecops::dot(s, y) / yy)
}

/// The exponent schedule `h(σ1·s + σ2·k)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Adaptor {
    ConstantOne,
    /// `h(a) = (1 + a)/a`.
    InverseLinear,
    /// Per-epoch values; epochs past the end reuse the last entry.
    Table(Vec<f64>),
}

/// `h` at epoch `s ≥ 1` and inner step `k ≥ 1`.
pub fn adaptor_value(adaptor: &Adaptor, sigma1: f64, sigma2: f64, s: usize, k: usize) -> f64 {
    match adaptor {
        Adaptor::ConstantOne => 1.0,
        Adaptor::InverseLinear => {
            let a = (sigma1 * s as f64 + sigma2 * k as f64).max(ADAPTOR_ARG_FLOOR);
            (1.0 + a) / a
        }
        Adaptor::Table(t) => t[s.saturating_sub(1).min(t.len() - 1)],
    }
}

/// Parameters of the hedged step `c·BB1 + (1−c)·BB2` with `c = α^h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeConfig {
    /// Hedge base. `α = 1` gives plain RBB.
    pub alpha: f64,
    pub adaptor: Adaptor,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Size of `S₁`.
    pub b1: usize,
    /// Size of `S₂`.
    pub b2: usize,
}

impl Default for HedgeConfig {
    fn default() -> Self {
        HedgeConfig { alpha: 3.0, adaptor: Adaptor::ConstantOne, sigma1: 0.0, sigma2: 0.0, b1: 40, b2: 40 }
    }
}

impl HedgeConfig {
    /// Plain RBB with the given step-size batches.
    pub fn rbb(b1: usize, b2: usize) -> Self {
        HedgeConfig { alpha: 1.0, b1, b2, ..HedgeConfig::default() }
    }

    /// `b̄ = max(b₁, b₂)`.
    pub fn b_bar(&self) -> usize {
        self.b1.max(self.b2)
    }

    /// `α^h` at `(s, k)`.
    pub fn coefficient(&self, s: usize, k: usize) -> f64 {
        self.alpha.powf(adaptor_value(&self.adaptor, self.sigma1, self.sigma2, s, k))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be at least 1, got {}", self.alpha)));
        }
        for (name, v) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.b1 == 0 || self.b2 == 0 {
            return Err(Error::InvalidConfig("b1 and b2 must be at least 1".into()));
        }
        if let Adaptor::Table(t) = &self.adaptor {
            if t.is_empty() || t.iter().any(|h| !h.is_finite()) {
                return Err(Error::InvalidConfig("adaptor table must be non-empty and finite".into()));
            }
        }
        Ok(())
    }
}

/// Closed-interval endpoints `α̃ ≤ α^h ≤ α̂` over the configured range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeBounds {
    pub alpha_hat: f64,
    pub alpha_tilde: f64,
}

impl HedgeBounds {
    /// `α̂ = α̃ = 1`, the RBB case.
    pub const OFF: HedgeBounds = HedgeBounds { alpha_hat: 1.0, alpha_tilde: 1.0 };
}

/// Extremes of `α^h` over `s ∈ [1, s_max]`, `k ∈ [1, m]`.
pub fn hedge_bounds(adaptor: &Adaptor, alpha: f64, sigma1: f64, sigma2: f64, s_max: usize, m: usize) -> HedgeBounds {
    let s_max = s_max.max(1);
    let m = m.max(1);
    let (h_min, h_max) = match adaptor {
        Adaptor::ConstantOne => (1.0, 1.0),
        // h decreases in its argument, so the extremes sit at the grid corners
        Adaptor::InverseLinear => {
            (adaptor_value(adaptor, sigma1, sigma2, s_max, m), adaptor_value(adaptor, sigma1, sigma2, 1, 1))
        }
        Adaptor::Table(t) => {
            let used = &t[..s_max.min(t.len())];
            let lo = used.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = used.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    let (a, b) = (alpha.powf(h_min), alpha.powf(h_max));
    HedgeBounds { alpha_hat: a.max(b), alpha_tilde: a.min(b) }
}

/// The factor in front of the bracket: `γ` for MB-SARAH, `γ₂` for mS2GD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepScale {
    MbSarah { gamma: f64 },
    Ms2gd { gamma2: f64 },
}

impl StepScale {
    pub fn factor(self) -> f64 {
        match self {
            StepScale::MbSarah { gamma } => gamma,
            StepScale::Ms2gd { gamma2 } => gamma2,
        }
    }
}

/// Secant pair for one step: `s = w_k − w_{k−1}` and the gradient differences
/// on `S₁` and `S₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSnapshot<T> {
    pub s_vec: Vec<T>,
    pub y1: Vec<T>,
    pub y2: Vec<T>,
    /// Rounding-noise level of `y1`; `‖y1‖` at or below it is unresolved.
    pub y1_floor: T,
    pub y2_floor: T,
}

impl<T: Scalar> CurvatureSnapshot<T> {
    /// A snapshot with no rounding floor.
    pub fn new(s_vec: Vec<T>, y1: Vec<T>, y2: Vec<T>) -> Self {
        CurvatureSnapshot { s_vec, y1, y2, y1_floor: T::zero(), y2_floor: T::zero() }
    }
}

/// Rounding-noise level of `a − b` for gradients `a`, `b`.
pub fn difference_floor<T: Scalar>(a: &[T], b: &[T]) -> T {
    T::of(SECANT_RESOLUTION) * T::epsilon() * (vecops::norm(a) + vecops::norm(b))
}

fn resolved<T: Scalar>(y: &[T], floor: T) -> Result<(), CurvatureFlag> {
    if floor > T::zero() && !(vecops::norm(y) > floor) {
        return Err(CurvatureFlag::Unresolved);
    }
    Ok(())
}

/// RHBB: `(γ/b̄)·[c·BB1(s, y1) + (1−c)·BB2(s, y2)]`, `c = α^{h(σ1 s + σ2 k)}`.
///
/// With `c = 1` the second quotient is not formed.
pub fn rhbb_step<T: Scalar>(
    snap: &CurvatureSnapshot<T>,
    cfg: &HedgeConfig,
    scale: StepScale,
    s: usize,
    k: usize,
) -> Result<T, StepRejection> {
    let c = T::of(cfg.coefficient(s, k));
    let lead = T::of(scale.factor()) / T::of_usize(cfg.b_bar());
    resolved(&snap.y1, snap.y1_floor)?;
    let q1 = bb1_raw(&snap.s_vec, &snap.y1)?;
    let bracket = if c == T::one() {
        q1
    } else {
        resolved(&snap.y2, snap.y2_floor)?;
        let q2 = bb2_raw(&snap.s_vec, &snap.y2)?;
        c * q1 + (T::one() - c) * q2
    };
    let eta = lead * bracket;
    if !eta.is_finite() {
        return Err(StepRejection::NonFinite);
    }
    if eta <= T::zero() {
        return Err(StepRejection::NonPositive);
    }
    Ok(eta)
}

/// RHBB+: the same rule on importance-weighted differences. The snapshot must
/// hold `∇P⁺` differences on both batches.
pub fn rhbb_plus_step<T: Scalar>(
    snap: &CurvatureSnapshot<T>,
    cfg: &HedgeConfig,
    scale: StepScale,
    s: usize,
    k: usize,
) -> Result<T, StepRejection> {
    rhbb_step(snap, cfg, scale, s, k)
}

/// Returns the step to use and whether the fallback was taken.
pub fn safeguard<T: Scalar>(candidate: Result<T, StepRejection>, last_good: Option<T>, eta0: T) -> (T, bool) {
    match candidate {
        Ok(eta) if eta > T::zero() && eta.is_finite() => (eta, false),
        _ => (last_good.unwrap_or(eta0), true),
    }
}

/// `(γ/b̄)(α̂L + (1−α̃)μ)/(μL)`, the largest hedged step possible on
/// `μ`-strongly convex, `L`-smooth components.
pub fn step_upper_bound(cfg: &HedgeConfig, scale: StepScale, bounds: HedgeBounds, l: f64, mu: f64) -> f64 {
    scale.factor() / cfg.b_bar() as f64 * (bounds.alpha_hat * l + (1.0 - bounds.alpha_tilde) * mu) / (mu * l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bb_quotient_examples() {
        assert_eq!(bb1_raw(&[1.0, 0.0], &[2.0, 0.0]), Ok(0.5));
        assert_eq!(bb2_raw(&[1.0, 0.0], &[2.0, 0.0]), Ok(0.5));
        assert_eq!(bb1_raw(&[0.3, -0.7], &[0.3, -0.7]), Ok(1.0));
        assert_eq!(bb2_raw(&[0.3, -0.7], &[0.3, -0.7]), Ok(1.0));
    }

    #[test]
    fn bb_on_a_diagonal_quadratic() {
        // f = ½ wᵀ diag(2,4) w, one gradient step of 0.1 from (1,1)
        let w0: [f64; 2] = [1.0, 1.0];
        let g0 = [2.0, 4.0];
        let w1 = [w0[0] - 0.1 * g0[0], w0[1] - 0.1 * g0[1]];
        let s = [w1[0] - w0[0], w1[1] - w0[1]];
        let y = [2.0 * s[0], 4.0 * s[1]];
        // s = (-0.2, -0.4): ‖s‖² = 0.2, sᵀHs = 0.72, ‖Hs‖² = 2.72
        assert!((bb1_raw(&s, &y).unwrap() - 0.2 / 0.72).abs() < 1e-15);
        assert!((bb2_raw(&s, &y).unwrap() - 0.72 / 2.72).abs() < 1e-15);
    }

    #[test]
    fn flags() {
        assert_eq!(bb1_raw(&[1.0, 0.0], &[-1.0, 0.0]), Err(CurvatureFlag::NonPositiveCurvature));
        assert_eq!(bb1_raw(&[1.0, 0.0], &[0.0, 0.0]), Err(CurvatureFlag::NonPositiveCurvature));
        assert_eq!(bb2_raw(&[1.0, 0.0], &[0.0, 0.0]), Err(CurvatureFlag::DegenerateDifference));
        assert_eq!(bb1_raw(&[1.0, 0.0], &[0.0, 1.0]), Err(CurvatureFlag::NonPositiveCurvature));
    }

    #[test]
    fn adaptor_examples() {
        assert_eq!(adaptor_value(&Adaptor::ConstantOne, 0.6, 0.2, 7, 3), 1.0);
        let h = adaptor_value(&Adaptor::InverseLinear, 0.6, 0.2, 1, 1);
        assert!((h - 2.25).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 1..=100 {
            let h = adaptor_value(&Adaptor::InverseLinear, 0.6, 0.2, 2, k);
            assert!(h <= prev);
            prev = h;
        }
        let floored = adaptor_value(&Adaptor::InverseLinear, 0.0, 0.0, 1, 1);
        assert!((floored - 1001.0).abs() < 1e-9);
        let table = Adaptor::Table(vec![2.0, 1.5]);
        assert_eq!(adaptor_value(&table, 0.0, 0.0, 1, 9), 2.0);
        assert_eq!(adaptor_value(&table, 0.0, 0.0, 5, 9), 1.5);
    }

    #[test]
    fn bounds_constant_adaptor() {
        let b = hedge_bounds(&Adaptor::ConstantOne, 3.0, 0.0, 0.0, 20, 100);
        assert_eq!(b, HedgeBounds { alpha_hat: 3.0, alpha_tilde: 3.0 });
        let b = hedge_bounds(&Adaptor::InverseLinear, 1.0 + 1e-12, 0.6, 0.2, 20, 100);
        assert!((b.alpha_hat - 1.0).abs() < 1e-8 && (b.alpha_tilde - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bounds_match_grid_scan() {
        let cfgs: [(f64, f64, f64, usize, usize); 3] =
            [(3.0, 0.6, 0.2, 20, 100), (2.0, 0.0, 0.5, 3, 7), (5.0, 1.5, 0.0, 4, 9)];
        for (alpha, s1, s2, smax, m) in cfgs {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in 1..=smax {
                for k in 1..=m {
                    let a: f64 = s1 * s as f64 + s2 * k as f64;
                    let c = alpha.powf((1.0 + a) / a);
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
            }
            let b = hedge_bounds(&Adaptor::InverseLinear, alpha, s1, s2, smax, m);
            assert!((b.alpha_hat - hi).abs() <= 1e-12 * hi);
            assert!((b.alpha_tilde - lo).abs() <= 1e-12 * lo);
        }
        let b = hedge_bounds(&Adaptor::InverseLinear, 3.0, 0.6, 0.2, 20, 100);
        assert!((b.alpha_hat - 3f64.powf(2.25)).abs() < 1e-12);
    }

    #[test]
    fn rhbb_reductions() {
        let snap: CurvatureSnapshot<f64> = CurvatureSnapshot::new(vec![1.0, 0.5], vec![0.4, 0.3], vec![0.4, 0.3]);
        let scale = StepScale::MbSarah { gamma: 1.0 };
        let rbb = HedgeConfig::rbb(4, 8);
        let eta = rhbb_step(&snap, &rbb, scale, 1, 1).unwrap();
        assert_eq!(eta, bb1_raw(&snap.s_vec, &snap.y1).unwrap() / 8.0);

        let hedge = HedgeConfig { alpha: 3.0, b1: 4, b2: 8, ..HedgeConfig::default() };
        let eta = rhbb_step(&snap, &hedge, scale, 1, 1).unwrap();
        let q1 = bb1_raw(&snap.s_vec, &snap.y1).unwrap();
        let q2 = bb2_raw(&snap.s_vec, &snap.y1).unwrap();
        assert!((eta - (3.0 * q1 - 2.0 * q2) / 8.0).abs() < 1e-15);
        assert!(eta >= q1 / 8.0);
    }

    #[test]
    fn rhbb_rejections() {
        let scale = StepScale::Ms2gd { gamma2: 1.0 };
        let hedge = HedgeConfig { alpha: 5.0, ..HedgeConfig::default() };
        let flat = CurvatureSnapshot::new(vec![1.0], vec![0.0], vec![0.0]);
        assert_eq!(
            rhbb_step(&flat, &hedge, scale, 1, 1),
            Err(StepRejection::Curvature(CurvatureFlag::NonPositiveCurvature))
        );
        // BB2 on a steep second batch dominates and drives the sum negative
        let split = CurvatureSnapshot::new(vec![1.0], vec![100.0], vec![0.01]);
        assert_eq!(rhbb_step(&split, &hedge, scale, 1, 1), Err(StepRejection::NonPositive));
        let noisy =
            CurvatureSnapshot { y1_floor: 1e-10, ..CurvatureSnapshot::new(vec![1e-14], vec![1e-16], vec![1e-16]) };
        assert_eq!(rhbb_step(&noisy, &hedge, scale, 1, 1), Err(StepRejection::Curvature(CurvatureFlag::Unresolved)));
        let g = [0.5, -0.25];
        assert!((difference_floor(&g, &g) - 2e4 * f64::EPSILON * 0.3125f64.sqrt()).abs() < 1e-25);
    }

    #[test]
    fn safeguard_examples() {
        assert_eq!(safeguard(Ok(0.02), Some(0.5), 0.1), (0.02, false));
        assert_eq!(safeguard(Err(StepRejection::NonPositive), Some(0.01), 0.1), (0.01, true));
        assert_eq!(safeguard::<f64>(Err(StepRejection::NonPositive), None, 0.1), (0.1, true));
    }

    #[test]
    fn validation() {
        assert!(HedgeConfig::default().validate().is_ok());
        assert!(HedgeConfig::rbb(1, 1).validate().is_ok());
        assert!(HedgeConfig { alpha: 0.9, ..HedgeConfig::default() }.validate().is_err());
        assert!(HedgeConfig { b1: 0, ..HedgeConfig::default() }.validate().is_err());
        assert!(HedgeConfig { sigma2: -1.0, ..HedgeConfig::default() }.validate().is_err());
        assert!(HedgeConfig { adaptor: Adaptor::Table(vec![]), ..HedgeConfig::default() }.validate().is_err());
    }
}
