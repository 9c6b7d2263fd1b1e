//! MB-SARAH and mS2GD with constant, RHBB or RHBB+ steps, plus SVRG and
//! SVRG-BB baselines.

use crate::data::SparseDataset;
use crate::error::{Error, Result};
use crate::model::FiniteSum;
use crate::sampling::{draw_batch, draw_uniform_subset, RunStreams, SamplingDistribution};
use crate::scalar::{vecops, Scalar};
use crate::stepsize::{
    bb1_raw, difference_floor, rhbb_plus_step, rhbb_step, safeguard, CurvatureSnapshot, HedgeConfig, StepRejection,
    StepScale,
};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Recursive estimator `v_k = ∇P_S(w_k) − ∇P_S(w_{k−1}) + v_{k−1}`.
    MbSarah,
    /// Semi-stochastic estimator `ṽ_k = ∇P_S(w_k) − ∇P_S(w̃) + ∇P(w̃)`.
    Ms2gd,
    Svrg,
    /// SVRG with an epoch-level BB1 step; the first epoch uses the constant step.
    SvrgBb,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::MbSarah => "mb-sarah",
            Engine::Ms2gd => "ms2gd",
            Engine::Svrg => "svrg",
            Engine::SvrgBb => "svrg-bb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// Hedged BB on uniform batches `S₁`, `S₂`.
    Rhbb,
    /// Hedged BB on batches drawn from `Q` with importance weighting.
    RhbbPlus,
}

/// Which `Q` the RHBB+ batches are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionChoice {
    Uniform,
    /// `q_i ∝ ‖x_i‖_∞^τ`.
    Option1 {
        tau: f64,
    },
    /// `q_i ∝ ‖x_i‖_0^τ`.
    Option2 {
        tau: f64,
    },
}

impl DistributionChoice {
    pub fn build<T: Scalar>(self, data: &SparseDataset<T>) -> Result<SamplingDistribution<T>> {
        match self {
            DistributionChoice::Uniform => SamplingDistribution::uniform(data.len()),
            DistributionChoice::Option1 { tau } => SamplingDistribution::option1(data, tau),
            DistributionChoice::Option2 { tau } => SamplingDistribution::option2(data, tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub engine: Engine,
    pub rule: StepRule,
    /// Outer epochs `S_max`.
    pub epochs: usize,
    /// Inner count `m`; `None` means `⌈n/b⌉`.
    pub inner: Option<usize>,
    /// Estimator batch `b`.
    pub batch: usize,
    pub hedge: HedgeConfig,
    /// `γ` for MB-SARAH.
    pub gamma: f64,
    /// `γ₂` for mS2GD.
    pub gamma2: f64,
    /// First-step sizes `η₀ˢ`, cycled over epochs.
    pub eta0: Vec<f64>,
    pub seed: u64,
    /// Record every this many inner steps instead of once per epoch.
    pub eval_every: Option<usize>,
    /// Count `S₁`/`S₂` gradient evaluations in effective passes.
    pub count_stepsize_passes: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            engine: Engine::MbSarah,
            rule: StepRule::Rhbb,
            epochs: 15,
            inner: None,
            batch: 4,
            hedge: HedgeConfig::default(),
            gamma: 1.0,
            gamma2: 1.0,
            eta0: vec![0.1],
            seed: 0,
            eval_every: None,
            count_stepsize_passes: true,
        }
    }
}

impl RunConfig {
    /// `m` for a problem with `n` components.
    pub fn inner_for(&self, n: usize) -> usize {
        self.inner.unwrap_or_else(|| n.div_ceil(self.batch.max(1)))
    }

    pub fn scale(&self) -> StepScale {
        match self.engine {
            Engine::Ms2gd => StepScale::Ms2gd { gamma2: self.gamma2 },
            _ => StepScale::MbSarah { gamma: self.gamma },
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.inner == Some(0) {
            return bad("inner count m must be at least 1".into());
        }
        if self.batch == 0 || self.batch > n {
            return bad(format!("batch b must lie in [1, {n}], got {}", self.batch));
        }
        if self.eta0.is_empty() || self.eta0.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return bad("eta0 entries must be positive and finite".into());
        }
        if self.eval_every == Some(0) {
            return bad("eval_every must be at least 1".into());
        }
        for (name, v) in [("gamma", self.gamma), ("gamma2", self.gamma2)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        match (self.engine, self.rule) {
            (_, StepRule::Constant(eta)) if !(eta > 0.0) || !eta.is_finite() => {
                return bad(format!("constant step must be positive, got {eta}"));
            }
            (Engine::Svrg | Engine::SvrgBb, StepRule::Rhbb | StepRule::RhbbPlus) => {
                return bad(format!("{} takes a constant step rule", self.engine.name()));
            }
            (_, StepRule::Rhbb) => {
                self.hedge.validate()?;
                if self.hedge.b_bar() > n {
                    return bad(format!("step-size batches must not exceed n = {n}"));
                }
            }
            (_, StepRule::RhbbPlus) => self.hedge.validate()?,
            _ => {}
        }
        Ok(())
    }
}

/// One row of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Epoch number, or the inner iteration count when `eval_every` is set.
    pub epoch: usize,
    pub effective_passes: f64,
    pub grad_norm: f64,
    pub objective: f64,
    pub step_min: f64,
    pub step_mean: f64,
    pub step_max: f64,
    pub safeguards: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    /// Inner steps taken, excluding the deterministic first steps.
    pub inner_steps: usize,
    pub safeguarded_steps: usize,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Error)]
pub enum RunError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("iterate became non-finite in epoch {epoch}")]
    Diverged { epoch: usize, trace: RunTrace },
}

/// Everything an observer sees at a stochastic inner step, before the update
/// `w_{k+1} = w_k − η v_k` is applied.
#[derive(Debug)]
pub struct InnerStep<'a, T> {
    pub epoch: usize,
    pub k: usize,
    /// `w_k`.
    pub w: &'a [T],
    /// The estimate `v_k`.
    pub estimate: &'a [T],
    pub step: T,
    pub safeguarded: bool,
    /// The candidate before the safeguard, for hedged rules.
    pub candidate: Option<Result<T, StepRejection>>,
    /// Secant data behind the step, when the rule used one.
    pub snapshot: Option<&'a CurvatureSnapshot<T>>,
}

/// Component-gradient evaluation counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassCounter {
    pub evaluations: u64,
}

impl PassCounter {
    pub fn add(&mut self, evals: usize) {
        self.evaluations += evals as u64;
    }

    /// Evaluations divided by `n`.
    pub fn effective_passes(&self, n: usize) -> f64 {
        self.evaluations as f64 / n as f64
    }
}

struct StepStats {
    min: f64,
    max: f64,
    sum: f64,
    count: usize,
    safeguards: usize,
}

impl StepStats {
    fn new() -> Self {
        StepStats { min: f64::INFINITY, max: f64::NEG_INFINITY, sum: 0.0, count: 0, safeguards: 0 }
    }

    fn push(&mut self, eta: f64, safeguarded: bool) {
        self.min = self.min.min(eta);
        self.max = self.max.max(eta);
        self.sum += eta;
        self.count += 1;
        self.safeguards += safeguarded as usize;
    }

    fn triple(&self) -> (f64, f64, f64) {
        if self.count == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (self.min, self.sum / self.count as f64, self.max)
        }
    }
}

struct Recorder<'p, T, P: ?Sized> {
    problem: &'p P,
    n: usize,
    trace: RunTrace,
    _t: std::marker::PhantomData<T>,
}

impl<'p, T: Scalar, P: FiniteSum<T> + ?Sized> Recorder<'p, T, P> {
    fn record(&mut self, epoch: usize, w: &[T], grad: &[T], passes: &PassCounter, stats: &StepStats) {
        let (step_min, step_mean, step_max) = stats.triple();
        self.trace.records.push(TraceRecord {
            epoch,
            effective_passes: passes.effective_passes(self.n),
            grad_norm: vecops::norm(grad).to_f64_lossy(),
            objective: self.problem.objective(w).to_f64_lossy(),
            step_min,
            step_mean,
            step_max,
            safeguards: stats.safeguards,
        });
    }

    fn record_at(&mut self, epoch: usize, w: &[T], passes: &PassCounter, stats: &StepStats) {
        let g = self.problem.full_gradient(w);
        self.record(epoch, w, &g, passes, stats);
    }

    fn diverged(self, epoch: usize) -> RunError {
        RunError::Diverged { epoch, trace: self.trace }
    }
}

/// Runs `cfg` on `problem` from `w̃₀ = 0`.
///
/// `q` is the distribution for RHBB+ batches and is ignored by other rules.
pub fn run<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    cfg: &RunConfig,
    q: Option<&SamplingDistribution<T>>,
) -> Result<RunTrace, RunError> {
    run_observed(problem, cfg, q, &mut |_| {})
}

/// [`run`] with a callback at every stochastic inner step.
pub fn run_observed<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    cfg: &RunConfig,
    q: Option<&SamplingDistribution<T>>,
    observer: &mut dyn FnMut(&InnerStep<'_, T>),
) -> Result<RunTrace, RunError> {
    let n = problem.len();
    cfg.validate(n)?;
    let uniform;
    let q = match q {
        Some(q) if q.len() != n => {
            return Err(Error::Contract(format!("distribution over {} items for {n} components", q.len())).into())
        }
        Some(q) => q,
        None => {
            uniform = SamplingDistribution::uniform(n)?;
            &uniform
        }
    };
    match cfg.engine {
        Engine::MbSarah | Engine::Ms2gd => run_hedged(problem, cfg, q, observer),
        Engine::Svrg | Engine::SvrgBb => run_svrg_family(problem, cfg, observer),
    }
}

/// A single epoch with per-step records every `eval_every` inner steps
/// (default every step).
pub fn run_inner_only<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    cfg: &RunConfig,
    q: Option<&SamplingDistribution<T>>,
) -> Result<RunTrace, RunError> {
    let cfg = RunConfig { epochs: 1, eval_every: Some(cfg.eval_every.unwrap_or(1)), ..cfg.clone() };
    run(problem, &cfg, q)
}

fn run_hedged<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    cfg: &RunConfig,
    q: &SamplingDistribution<T>,
    observer: &mut dyn FnMut(&InnerStep<'_, T>),
) -> Result<RunTrace, RunError> {
    let n = problem.len();
    let d = problem.dim();
    let m = cfg.inner_for(n);
    let b = cfg.batch;
    let scale = cfg.scale();
    let mut streams = RunStreams::new(cfg.seed);
    let mut passes = PassCounter::default();
    let mut rec = Recorder { problem, n, trace: RunTrace::default(), _t: std::marker::PhantomData };
    let mut last_good: Option<T> = None;
    let mut iteration = 0usize;

    let mut w_tilde = vec![T::zero(); d];
    let mut g_tilde = problem.full_gradient(&w_tilde);
    rec.record(0, &w_tilde, &g_tilde, &passes, &StepStats::new());

    for s in 1..=cfg.epochs {
        let mut stats = StepStats::new();
        passes.add(n);
        let eta_det = cfg.eta0[(s - 1) % cfg.eta0.len()];
        stats.push(eta_det, false);
        let mut prev = w_tilde.clone();
        let mut w = w_tilde.clone();
        vecops::axpy(T::of(-eta_det), &g_tilde, &mut w);
        let mut v = g_tilde.clone();
        let mut snap = CurvatureSnapshot::new(vec![T::zero(); d], Vec::new(), Vec::new());

        for k in 1..m {
            let batch = draw_uniform_subset(&mut streams.estimator, n, b)?;
            let g_now = problem.subset_gradient(&w, &batch)?;
            let base = if cfg.engine == Engine::MbSarah { &prev } else { &w_tilde };
            let g_base = problem.subset_gradient(base, &batch)?;
            passes.add(2 * b);
            let mut next_v = g_now.clone();
            for (j, x) in next_v.iter_mut().enumerate() {
                let carry = if cfg.engine == Engine::MbSarah { v[j] } else { g_tilde[j] };
                *x = *x - g_base[j] + carry;
            }
            if cfg!(debug_assertions) && cfg.engine == Engine::MbSarah {
                for j in 0..d {
                    let lhs = (next_v[j] - v[j]).to_f64_lossy();
                    let rhs = (g_now[j] - g_base[j]).to_f64_lossy();
                    let scale = 1.0 + next_v[j].abs().to_f64_lossy() + v[j].abs().to_f64_lossy();
                    debug_assert!(
                        (lhs - rhs).abs() <= 64.0 * f64::EPSILON * scale,
                        "recursion broken at coordinate {j}"
                    );
                }
            }
            v = next_v;

            let (eta, guarded, candidate, used_snap) = match cfg.rule {
                StepRule::Constant(eta) => (T::of(eta), false, None, false),
                StepRule::Rhbb | StepRule::RhbbPlus => {
                    let plus = cfg.rule == StepRule::RhbbPlus;
                    let h = &cfg.hedge;
                    let (s1, s2) = if plus {
                        (draw_batch(&mut streams.curvature1, q, h.b1)?, draw_batch(&mut streams.curvature2, q, h.b2)?)
                    } else {
                        (
                            draw_uniform_subset(&mut streams.curvature1, n, h.b1)?,
                            draw_uniform_subset(&mut streams.curvature2, n, h.b2)?,
                        )
                    };
                    if cfg.count_stepsize_passes {
                        passes.add(2 * (h.b1 + h.b2));
                    }
                    let diff = |idx: &[usize]| -> Result<(Vec<T>, T)> {
                        let (a, c) = if plus {
                            (
                                problem.weighted_subset_gradient(&w, idx, q)?,
                                problem.weighted_subset_gradient(&prev, idx, q)?,
                            )
                        } else {
                            (problem.subset_gradient(&w, idx)?, problem.subset_gradient(&prev, idx)?)
                        };
                        Ok((vecops::sub(&a, &c), difference_floor(&a, &c)))
                    };
                    snap.s_vec = vecops::sub(&w, &prev);
                    (snap.y1, snap.y1_floor) = diff(&s1)?;
                    (snap.y2, snap.y2_floor) = diff(&s2)?;
                    let cand =
                        if plus { rhbb_plus_step(&snap, h, scale, s, k) } else { rhbb_step(&snap, h, scale, s, k) };
                    let (eta, guarded) = safeguard(cand, last_good, T::of(eta_det));
                    if !guarded {
                        last_good = Some(eta);
                    }
                    (eta, guarded, Some(cand), true)
                }
            };

            observer(&InnerStep {
                epoch: s,
                k,
                w: &w,
                estimate: &v,
                step: eta,
                safeguarded: guarded,
                candidate,
                snapshot: used_snap.then_some(&snap),
            });
            stats.push(eta.to_f64_lossy(), guarded);
            rec.trace.inner_steps += 1;
            rec.trace.safeguarded_steps += guarded as usize;

            prev.clone_from(&w);
            vecops::axpy(-eta, &v, &mut w);
            if !vecops::all_finite(&w) {
                return Err(rec.diverged(s));
            }
            iteration += 1;
            if let Some(every) = cfg.eval_every {
                if iteration.is_multiple_of(every) {
                    rec.record_at(iteration, &w, &passes, &stats);
                }
            }
        }

        if !vecops::all_finite(&w) {
            return Err(rec.diverged(s));
        }
        w_tilde = w;
        g_tilde = problem.full_gradient(&w_tilde);
        if cfg.eval_every.is_none() {
            rec.record(s, &w_tilde, &g_tilde, &passes, &stats);
        } else if !iteration.is_multiple_of(cfg.eval_every.unwrap_or(1)) || m == 1 {
            iteration += (m == 1) as usize;
            rec.record(iteration, &w_tilde, &g_tilde, &passes, &stats);
        }
        if !g_tilde.iter().all(|x| x.is_finite()) {
            return Err(rec.diverged(s));
        }
    }
    Ok(rec.trace)
}

fn run_svrg_family<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    cfg: &RunConfig,
    observer: &mut dyn FnMut(&InnerStep<'_, T>),
) -> Result<RunTrace, RunError> {
    let n = problem.len();
    let d = problem.dim();
    let m = cfg.inner_for(n);
    let b = cfg.batch;
    let StepRule::Constant(eta_const) = cfg.rule else {
        unreachable!("validated above");
    };
    let mut streams = RunStreams::new(cfg.seed);
    let mut passes = PassCounter::default();
    let mut rec = Recorder { problem, n, trace: RunTrace::default(), _t: std::marker::PhantomData };
    let mut last_good: Option<T> = None;
    let mut iteration = 0usize;

    let mut w_tilde = vec![T::zero(); d];
    let mut g_tilde = problem.full_gradient(&w_tilde);
    let mut previous: Option<(Vec<T>, Vec<T>)> = None;
    rec.record(0, &w_tilde, &g_tilde, &passes, &StepStats::new());

    for s in 1..=cfg.epochs {
        let mut stats = StepStats::new();
        passes.add(n);
        let mut snap = None;
        let (eta, guarded) = match (cfg.engine, &previous) {
            (Engine::SvrgBb, Some((w_old, g_old))) => {
                let sv = vecops::sub(&w_tilde, w_old);
                let yv = vecops::sub(&g_tilde, g_old);
                let cand = bb1_raw(&sv, &yv).map(|q| q / T::of_usize(m)).map_err(StepRejection::from);
                snap = Some(CurvatureSnapshot::new(sv, yv.clone(), yv));
                let (eta, guarded) = safeguard(cand, last_good, T::of(eta_const));
                if !guarded {
                    last_good = Some(eta);
                }
                (eta, guarded)
            }
            _ => (T::of(eta_const), false),
        };
        let mut w = w_tilde.clone();
        for k in 0..m {
            let batch = draw_uniform_subset(&mut streams.estimator, n, b)?;
            let g_now = problem.subset_gradient(&w, &batch)?;
            let g_base = problem.subset_gradient(&w_tilde, &batch)?;
            passes.add(2 * b);
            let v: Vec<T> = (0..d).map(|j| g_now[j] - g_base[j] + g_tilde[j]).collect();
            observer(&InnerStep {
                epoch: s,
                k,
                w: &w,
                estimate: &v,
                step: eta,
                safeguarded: guarded,
                candidate: None,
                snapshot: snap.as_ref(),
            });
            stats.push(eta.to_f64_lossy(), guarded && k == 0);
            rec.trace.inner_steps += 1;
            vecops::axpy(-eta, &v, &mut w);
            if !vecops::all_finite(&w) {
                return Err(rec.diverged(s));
            }
            iteration += 1;
            if let Some(every) = cfg.eval_every {
                if iteration.is_multiple_of(every) {
                    rec.record_at(iteration, &w, &passes, &stats);
                }
            }
        }
        rec.trace.safeguarded_steps += guarded as usize;
        previous = Some((std::mem::replace(&mut w_tilde, w), g_tilde));
        g_tilde = problem.full_gradient(&w_tilde);
        if !g_tilde.iter().all(|x| x.is_finite()) {
            return Err(rec.diverged(s));
        }
        match cfg.eval_every {
            None => rec.record(s, &w_tilde, &g_tilde, &passes, &stats),
            Some(every) if !iteration.is_multiple_of(every) => {
                rec.record(iteration, &w_tilde, &g_tilde, &passes, &stats)
            }
            Some(_) => {}
        }
    }
    Ok(rec.trace)
}
