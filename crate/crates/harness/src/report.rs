//! Feasibility report for the hedged runs of a suite.

use crate::config::{ExperimentSuite, PlannedRun, TheorySpec};
use rhbb_core::theory::{self, HalvingThreshold, Side, TheoryConstants};
use rhbb_core::{hedge_bounds, Engine, FiniteSum, Problem, StepRule};
use std::fmt::Write as _;

pub const REPORT_CSV_HEADER: &str = "label,engine,L,mu,kappa,Lq,muq,kappa_plus,alpha_hat,alpha_tilde,kappa_r,kappa_r_plus,\
condition_lhs,condition_holds,inner_rate,outer_rate,m_required,m_rbb,s_required,s_rbb,rho,rho_feasible,rho_rbb,halving_threshold,halving_side";

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub label: String,
    pub engine: Engine,
    pub constants: TheoryConstants,
    pub plus: bool,
    pub condition_lhs: Option<f64>,
    pub inner_rate: Option<f64>,
    pub outer_rate: Option<f64>,
    pub m_required: Option<Result<u64, String>>,
    pub m_rbb: Option<Result<u64, String>>,
    pub s_required: Option<Result<u64, String>>,
    pub s_rbb: Option<Result<u64, String>>,
    pub rho: Option<Result<theory::Rate, String>>,
    pub rho_rbb: Option<Result<theory::Rate, String>>,
    pub halving: Option<Result<HalvingThreshold, String>>,
    pub gradient_dominated: Option<Result<(f64, f64), String>>,
}

fn text<T>(r: rhbb_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Evaluates the analytic quantities for one run; `None` for non-hedged rules.
pub fn evaluate_run(problem: &Problem, run: &PlannedRun, spec: &TheorySpec) -> Result<Option<RunReport>, String> {
    let cfg = &run.config;
    let plus = match cfg.rule {
        StepRule::Constant(_) => return Ok(None),
        StepRule::Rhbb => false,
        StepRule::RhbbPlus => true,
    };
    let n = problem.len();
    let m = cfg.inner_for(n);
    let h = &cfg.hedge;
    let bounds = hedge_bounds(&h.adaptor, h.alpha, h.sigma1, h.sigma2, cfg.epochs, m);
    let q = text(run.distribution.build(problem.data()))?;
    let c = text(TheoryConstants::from_problem(problem, &q, bounds))?;
    let (b, b_bar) = (cfg.batch, h.b_bar());
    let zeta = spec.zeta.unwrap_or_else(|| {
        let g = problem.full_gradient(&vec![0.0; problem.dim()]);
        g.iter().map(|x| x * x).sum()
    });

    let mut r = RunReport {
        label: run.label.clone(),
        engine: cfg.engine,
        constants: c,
        plus,
        condition_lhs: None,
        inner_rate: None,
        outer_rate: None,
        m_required: None,
        m_rbb: None,
        s_required: None,
        s_rbb: None,
        rho: None,
        rho_rbb: None,
        halving: None,
        gradient_dominated: None,
    };
    match cfg.engine {
        Engine::MbSarah => {
            let g = cfg.gamma;
            r.condition_lhs = Some(if plus {
                theory::theorem1_plus_lhs(b, g, m, n, b_bar, &c)
            } else {
                theory::theorem1_lhs(b, g, m, n, b_bar, &c)
            });
            r.inner_rate = Some(if plus {
                theory::sarah_inner_rate_plus(m, &c, g, b_bar)
            } else {
                theory::sarah_inner_rate(m, &c, g, b_bar)
            });
            r.outer_rate = Some(if plus {
                theory::sarah_outer_rate_plus(m, &c, g, b_bar)
            } else {
                theory::sarah_outer_rate(m, &c, g, b_bar)
            });
            if let (Some(eps), Some(sigma0)) = (spec.eps, spec.sigma0) {
                r.m_required = Some(text(if plus {
                    theory::sarah_m_required_plus(eps, sigma0, &c, g, b_bar)
                } else {
                    theory::sarah_m_required(eps, sigma0, &c, g, b_bar)
                }));
                r.m_rbb = Some(text(theory::rbb_m_required(eps, sigma0, c.mu, g, b_bar)));
            }
            if let Some(eps) = spec.eps {
                r.s_required = Some(text(theory::sarah_s_required(eps, zeta, &c, g, m, b_bar)));
                r.s_rbb = Some(text(theory::rbb_s_required(eps, zeta, g, m, b_bar)));
            }
            if let Some(delta) = spec.delta {
                r.gradient_dominated = Some(text(theory::gradient_dominated_rates(delta, &c, g, m, b_bar)));
            }
        }
        Engine::Ms2gd => {
            let g2 = cfg.gamma2;
            r.rho = Some(text(if plus {
                theory::ms2gd_plus_rate(m, b, b_bar, g2, &c)
            } else {
                theory::ms2gd_rate(m, b, b_bar, g2, &c)
            }));
            r.rho_rbb = Some(text(theory::rbb_ms2gd_rate(m, b, b_bar, c.l, c.mu)));
            let kr = if plus { c.kappa_r_plus } else { c.kappa_r };
            let kappa = if plus { c.kappa_plus } else { c.kappa };
            r.halving = Some(text(theory::ms2gd_halving_condition(spec.halving_c.unwrap_or(0.5), kappa, kr, g2, m)));
        }
        Engine::Svrg | Engine::SvrgBb => return Ok(None),
    }
    Ok(Some(r))
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn opt_count(v: &Option<Result<u64, String>>) -> String {
    match v {
        Some(Ok(x)) => x.to_string(),
        Some(Err(_)) => "infeasible".into(),
        None => String::new(),
    }
}

fn opt_rate(v: &Option<Result<theory::Rate, String>>) -> (String, String) {
    match v {
        Some(Ok(r)) => (format!("{:.16e}", r.rho), r.feasible.to_string()),
        Some(Err(_)) => ("infeasible".into(), "false".into()),
        None => (String::new(), String::new()),
    }
}

impl RunReport {
    pub fn csv_row(&self) -> String {
        let c = &self.constants;
        let (rho, rho_ok) = opt_rate(&self.rho);
        let (rho_rbb, _) = opt_rate(&self.rho_rbb);
        let (threshold, side) = match &self.halving {
            Some(Ok(h)) => {
                (format!("{:.16e}", h.threshold), if h.side == Side::Above { "above" } else { "below" }.to_string())
            }
            Some(Err(_)) => ("infeasible".into(), String::new()),
            None => (String::new(), String::new()),
        };
        [
            self.label.clone(),
            self.engine.name().into(),
            format!("{:.16e}", c.l),
            format!("{:.16e}", c.mu),
            format!("{:.16e}", c.kappa),
            format!("{:.16e}", c.lq),
            format!("{:.16e}", c.muq),
            format!("{:.16e}", c.kappa_plus),
            format!("{:.16e}", c.bounds.alpha_hat),
            format!("{:.16e}", c.bounds.alpha_tilde),
            format!("{:.16e}", c.kappa_r),
            format!("{:.16e}", c.kappa_r_plus),
            opt_f(self.condition_lhs),
            self.condition_lhs.map(|v| (v <= 1.0).to_string()).unwrap_or_default(),
            opt_f(self.inner_rate),
            opt_f(self.outer_rate),
            opt_count(&self.m_required),
            opt_count(&self.m_rbb),
            opt_count(&self.s_required),
            opt_count(&self.s_rbb),
            rho,
            rho_ok,
            rho_rbb,
            threshold,
            side,
        ]
        .join(",")
    }

    pub fn render(&self) -> String {
        let c = &self.constants;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "[{}] {}{}",
            self.label,
            self.engine.name(),
            if self.plus { " (importance sampled)" } else { "" }
        );
        let _ = writeln!(out, "  L = {:.6e}  mu = {:.6e}  kappa = {:.6e}", c.l, c.mu, c.kappa);
        if self.plus {
            let _ = writeln!(out, "  Lq = {:.6e}  muq = {:.6e}  kappa+ = {:.6e}", c.lq, c.muq, c.kappa_plus);
        }
        let _ = writeln!(
            out,
            "  alpha_hat = {:.6}  alpha_tilde = {:.6}  kappa_r = {:.6e}",
            c.bounds.alpha_hat,
            c.bounds.alpha_tilde,
            if self.plus { c.kappa_r_plus } else { c.kappa_r }
        );
        if let Some(lhs) = self.condition_lhs {
            let verdict = if lhs <= 1.0 { "holds" } else { "violated" };
            let _ = writeln!(out, "  parameter condition: lhs = {lhs:.6e} ({verdict})");
        }
        if let (Some(i), Some(o)) = (self.inner_rate, self.outer_rate) {
            let _ = writeln!(out, "  inner coefficient = {i:.6e}  per-epoch factor = {o:.6e}");
        }
        let show = |name: &str, v: &Option<Result<u64, String>>, out: &mut String| match v {
            Some(Ok(x)) => {
                let _ = writeln!(out, "  {name} = {x}");
            }
            Some(Err(e)) => {
                let _ = writeln!(out, "  {name}: {e}");
            }
            None => {}
        };
        show("m required", &self.m_required, &mut out);
        show("m required (RBB)", &self.m_rbb, &mut out);
        show("epochs required", &self.s_required, &mut out);
        show("epochs required (RBB)", &self.s_rbb, &mut out);
        for (name, v) in [("rate", &self.rho), ("rate (RBB)", &self.rho_rbb)] {
            match v {
                Some(Ok(r)) => {
                    let _ = writeln!(
                        out,
                        "  {name} = {:.6e} ({})",
                        r.rho,
                        if r.feasible { "contracting" } else { "not contracting" }
                    );
                }
                Some(Err(e)) => {
                    let _ = writeln!(out, "  {name}: {e}");
                }
                None => {}
            }
        }
        match &self.halving {
            Some(Ok(h)) if h.any_positive() => {
                let _ = writeln!(out, "  halving condition: any b_bar qualifies");
            }
            Some(Ok(h)) => {
                let op = if h.side == Side::Above { ">" } else { "<" };
                let _ = writeln!(out, "  halving condition: b_bar {op} {:.6e}", h.threshold);
            }
            Some(Err(e)) => {
                let _ = writeln!(out, "  halving condition: {e}");
            }
            None => {}
        }
        match &self.gradient_dominated {
            Some(Ok((a, b))) => {
                let _ = writeln!(out, "  gradient-dominated constants = {a:.6e}, {b:.6e}");
            }
            Some(Err(e)) => {
                let _ = writeln!(out, "  gradient-dominated constants: {e}");
            }
            None => {}
        }
        out
    }
}

/// Text report followed by the CSV block.
pub fn theory_report(suite: &ExperimentSuite, problem: &Problem) -> Result<String, String> {
    let mut text = format!(
        "theory report for {} (n = {}, d = {}, lambda = {})\n\n",
        suite.name,
        problem.len(),
        problem.dim(),
        suite.lambda
    );
    let mut csv = format!("{REPORT_CSV_HEADER}\n");
    for run in &suite.runs {
        match evaluate_run(problem, run, &suite.theory)? {
            Some(r) => {
                text.push_str(&r.render());
                text.push('\n');
                csv.push_str(&r.csv_row());
                csv.push('\n');
            }
            None => {
                let _ = writeln!(text, "[{}] no analytic bounds for this rule\n", run.label);
            }
        }
    }
    text.push_str(&csv);
    Ok(text)
}
