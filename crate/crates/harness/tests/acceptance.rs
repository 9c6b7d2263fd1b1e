//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if an asserted criterion fails.
//!
//! Criteria 6 and 7 compare algorithms on benchmark files. When the files are
//! not under `$RHBB_DATA_DIR` they run on the generated stand-ins instead;
//! those lines are tagged `[surrogate]` and do not affect the exit code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhbb_core::stepsize::{bb1_raw, step_upper_bound};
use rhbb_core::synth::{generate, SyntheticSpec};
use rhbb_core::theory::{self, TheoryConstants};
use rhbb_core::{
    hedge_bounds, optimizers, Dataset, DiagonalQuadratic, Distribution, Engine, Example, FiniteSum, HedgeBounds,
    HedgeConfig, Problem, RunConfig, StepRule,
};
use rhbb_harness::config::DatasetSource;
use rhbb_harness::suite::{execute, prepare, trace_csv, TraceRow};
use rhbb_harness::summary::summarize;
use rhbb_harness::{load_config, run_suite, ExperimentSuite, Overrides, RunStatus};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
    /// Ran on generated data in place of a missing benchmark file.
    surrogate: bool,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into(), surrogate: false }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn norm_rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1e-8)
}

fn central_difference(f: impl Fn(&[f64]) -> f64, w: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    let mut x = w.to_vec();
    (0..w.len())
        .map(|j| {
            x[j] = w[j] + h;
            let up = f(&x);
            x[j] = w[j] - h;
            let down = f(&x);
            x[j] = w[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// First `n` rows restricted to the first `d` features.
fn slice(data: &Dataset, n: usize, d: usize) -> Dataset {
    let rows = data.rows()[..n]
        .iter()
        .map(|r| {
            let (idx, val): (Vec<usize>, Vec<f64>) =
                r.indices().iter().zip(r.values()).filter(|(j, _)| **j < d).map(|(j, v)| (*j, *v)).unzip();
            Example::new(idx, val, r.label()).unwrap()
        })
        .collect();
    Dataset::new(d, rows).unwrap()
}

fn random_dense(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let rows = (0..n)
        .map(|_| {
            let val: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            Example::new((0..d).collect(), val, if rng.gen::<bool>() { 1.0 } else { -1.0 }).unwrap()
        })
        .collect();
    Dataset::new(d, rows).unwrap()
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sets: Vec<(String, Dataset)> = ["mushrooms", "phishing", "a8a"]
        .iter()
        .map(|name| {
            let full: Dataset = generate(&SyntheticSpec::by_name(name).unwrap().with_rows(50)).unwrap();
            (format!("{name}[..50, ..30]"), slice(&full, 50, 30))
        })
        .collect();
    sets.push(("dense 40x12".into(), random_dense(&mut rng, 40, 12)));
    let mut worst = 0.0f64;
    for (_, data) in sets {
        let p = Problem::new(data, 0.01).unwrap();
        let (n, d) = (p.len(), p.dim());
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
        let q = Distribution::from_weights(&weights).unwrap();
        for _ in 0..10 {
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let i = rng.gen_range(0..n);
            let subset: Vec<usize> = (0..5).map(|_| rng.gen_range(0..n)).collect();

            worst = worst.max(norm_rel(&p.full_gradient(&w), &central_difference(|x| p.objective(x), &w)));
            worst =
                worst.max(norm_rel(&p.component_gradient(&w, i), &central_difference(|x| p.component_loss(x, i), &w)));
            let fd = central_difference(
                |x| subset.iter().map(|&j| p.component_loss(x, j)).sum::<f64>() / subset.len() as f64,
                &w,
            );
            worst = worst.max(norm_rel(&p.subset_gradient(&w, &subset).unwrap(), &fd));
            let fd = central_difference(
                |x| {
                    subset.iter().map(|&j| p.component_loss(x, j) / (n as f64 * q.probs()[j])).sum::<f64>()
                        / subset.len() as f64
                },
                &w,
            );
            worst = worst.max(norm_rel(&p.weighted_subset_gradient(&w, &subset, &q).unwrap(), &fd));
        }
    }
    Outcome::new(worst <= 1e-6, format!("worst relative error {worst:.2e} over 4 slices x 10 points"))
}

fn unbiasedness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = Problem::new(random_dense(&mut rng, 6, 4), 0.05).unwrap();
    let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let full = p.full_gradient(&w);
    let mut mean = [0.0; 4];
    let mut count = 0;
    for a in 0..6 {
        for b in a + 1..6 {
            for (m, g) in mean.iter_mut().zip(p.subset_gradient(&w, &[a, b]).unwrap()) {
                *m += g;
            }
            count += 1;
        }
    }
    let subset_err = mean.iter().zip(&full).map(|(m, f)| (m / count as f64 - f).abs()).fold(0.0, f64::max);
    let q = Distribution::from_weights(&[0.5, 1.0, 2.0, 0.25, 3.0, 1.5]).unwrap();
    let mut weighted = [0.0; 4];
    for i in 0..6 {
        for (m, g) in weighted.iter_mut().zip(p.weighted_subset_gradient(&w, &[i], &q).unwrap()) {
            *m += q.probs()[i] * g;
        }
    }
    let weighted_err = weighted.iter().zip(&full).map(|(m, f)| (m - f).abs()).fold(0.0, f64::max);
    Outcome::new(
        count == 15 && subset_err <= 1e-12 && weighted_err <= 1e-12,
        format!("{count} subsets, subset error {subset_err:.1e}, weighted singleton error {weighted_err:.1e}"),
    )
}

fn full_batch_collapse() -> Outcome {
    let p = Problem::new(generate(&SyntheticSpec::phishing().with_rows(200)).unwrap(), 0.01).unwrap();
    let n = p.len();
    let mut worst = 0.0f64;
    let mut steps = 0;
    for engine in [Engine::MbSarah, Engine::Ms2gd] {
        for rule in [StepRule::Constant(0.5), StepRule::Rhbb] {
            let cfg = RunConfig {
                engine,
                rule,
                batch: n,
                inner: Some(30),
                epochs: 3,
                hedge: HedgeConfig { alpha: 2.0, b1: 20, b2: 20, ..HedgeConfig::default() },
                seed: 3,
                ..RunConfig::default()
            };
            optimizers::run_observed(&p, &cfg, None, &mut |st| {
                let g = p.full_gradient(st.w);
                worst = st.estimate.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
                steps += 1;
            })
            .unwrap();
        }
    }
    Outcome::new(worst <= 1e-10, format!("b = n = {n}, {steps} inner steps, worst |v - grad P| {worst:.1e}"))
}

fn reduction_chain() -> Outcome {
    let p = Problem::new(generate(&SyntheticSpec::phishing().with_rows(1000)).unwrap(), 0.01).unwrap();
    let base = RunConfig {
        gamma: 0.7,
        epochs: 4,
        hedge: HedgeConfig { alpha: 1.0, b1: 12, b2: 12, ..HedgeConfig::default() },
        seed: 8,
        ..RunConfig::default()
    };
    let mut worst = 0.0f64;
    let mut checked = 0;
    optimizers::run_observed(&p, &base, None, &mut |st| {
        if let (false, Some(snap)) = (st.safeguarded, st.snapshot) {
            let expected = 0.7 / 12.0 * bb1_raw(&snap.s_vec, &snap.y1).unwrap();
            worst = worst.max(rel(st.step, expected));
            checked += 1;
        }
    })
    .unwrap();

    let q = Distribution::uniform(p.len()).unwrap();
    let mut identical = true;
    for engine in [Engine::MbSarah, Engine::Ms2gd] {
        let plain = RunConfig { engine, hedge: HedgeConfig { alpha: 3.0, ..base.hedge.clone() }, ..base.clone() };
        let plus = RunConfig { rule: StepRule::RhbbPlus, ..plain.clone() };
        let a = trace_csv("x", 8, &optimizers::run(&p, &plain, None).unwrap());
        let b = trace_csv("x", 8, &optimizers::run(&p, &plus, Some(&q)).unwrap());
        identical &= a.as_bytes() == b.as_bytes();
    }
    Outcome::new(
        worst <= 1e-12 && checked > 0 && identical,
        format!(
            "alpha = 1: {checked} steps, worst rel {worst:.1e}; uniform plus trace {}",
            if identical { "byte-identical" } else { "differs" }
        ),
    )
}

fn load_problem_or_surrogate(name: &str, lambda: f64) -> (Problem, bool) {
    let real = std::env::var_os("RHBB_DATA_DIR").map(|d| PathBuf::from(d).join(name)).filter(|p| p.exists());
    match real {
        Some(path) => (Problem::new(rhbb_core::load_libsvm(&path, None).unwrap(), lambda).unwrap(), false),
        None => (Problem::new(generate(&SyntheticSpec::by_name(name).unwrap()).unwrap(), lambda).unwrap(), true),
    }
}

fn step_upper_bound_holds() -> Outcome {
    let (p, surrogate) = load_problem_or_surrogate("mushrooms", 0.01);
    let (l, mu) = (p.smoothness_constant(), p.strong_convexity_constant());
    let mut violations = 0;
    let mut checked = 0;
    let mut worst_ratio = 0.0f64;
    for engine in [Engine::MbSarah, Engine::Ms2gd] {
        let cfg = RunConfig {
            engine,
            epochs: 15,
            hedge: HedgeConfig { alpha: 3.0, b1: 40, b2: 40, ..HedgeConfig::default() },
            seed: 5,
            ..RunConfig::default()
        };
        let m = cfg.inner_for(p.len());
        let h = &cfg.hedge;
        let bounds = hedge_bounds(&h.adaptor, h.alpha, h.sigma1, h.sigma2, cfg.epochs, m);
        let cap = step_upper_bound(h, cfg.scale(), bounds, l, mu);
        optimizers::run_observed(&p, &cfg, None, &mut |st| {
            if st.snapshot.is_some() && !st.safeguarded {
                checked += 1;
                worst_ratio = worst_ratio.max(st.step / cap);
                if st.step > cap {
                    violations += 1;
                }
            }
        })
        .unwrap();
    }
    let source = if surrogate { "generated mushrooms" } else { "mushrooms" };
    Outcome::new(
        violations == 0 && checked > 0,
        format!("{source}: {checked} hedged steps, {violations} violations, max step/bound {worst_ratio:.3}"),
    )
}

fn preset(name: &str) -> (ExperimentSuite, bool) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name);
    let mut suite = load_config(&path, &Overrides::default()).unwrap();
    let mut surrogate = false;
    if let DatasetSource::File(file) = &suite.dataset {
        if !file.exists() {
            let stem = file.file_name().unwrap().to_string_lossy().into_owned();
            suite.dataset = DatasetSource::Synthetic { name: stem, rows: None };
            surrogate = true;
        }
    }
    (suite, surrogate)
}

fn run_rows(suite: &ExperimentSuite, labels: &[&str]) -> Vec<TraceRow> {
    let problem = prepare(suite).unwrap();
    let pairs: Vec<_> = suite
        .runs
        .iter()
        .filter(|r| labels.contains(&r.label.as_str()))
        .flat_map(|r| suite.seeds.iter().map(move |&s| (r, s)))
        .collect();
    use rayon::prelude::*;
    pairs
        .par_iter()
        .map(|(run, seed)| execute(&problem, run, *seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flat_map(|o| {
            assert_eq!(o.status, RunStatus::Ok, "{} seed {}", o.label, o.seed);
            o.trace.records.into_iter().map(move |record| TraceRow { algo: o.label.clone(), seed: o.seed, record })
        })
        .collect()
}

fn hedged_beats_rbb() -> Outcome {
    let mut pass = true;
    let mut surrogate = false;
    let mut parts = Vec::new();
    for file in [
        "sweep-mb-sarah-mushrooms.toml",
        "sweep-mb-sarah-phishing.toml",
        "sweep-ms2gd-mushrooms.toml",
        "sweep-ms2gd-phishing.toml",
    ] {
        let (suite, fake) = preset(file);
        surrogate |= fake;
        let engine = suite.runs[0].config.engine.name();
        let (rbb, rhbb) = (format!("{engine}-rbb"), format!("{engine}-rhbb3"));
        let report = summarize(&run_rows(&suite, &[&rbb, &rhbb]), 1e-3);
        let median = |label: &str| report.algos.iter().find(|a| a.algo == label).unwrap().median_passes;
        let (a, b) = (median(&rbb), median(&rhbb));
        pass &= b < a;
        parts.push(format!("{}: rbb {a:.2} vs rhbb3 {b:.2}", file.trim_end_matches(".toml")));
    }
    Outcome { pass, detail: format!("median passes to 1e-3; {}", parts.join("; ")), surrogate }
}

fn adaptive_beats_fixed() -> Outcome {
    let (suite, surrogate) = preset("adaptive-a8a.toml");
    let rows = run_rows(&suite, &["adaptive", "non-adaptive"]);
    let report = summarize(&rows, 1e-3);
    let get = |label: &str| report.algos.iter().find(|a| a.algo == label).unwrap().median_final_grad_norm;
    let final_passes =
        |label: &str| rows.iter().filter(|r| r.algo == label).map(|r| r.record.effective_passes).fold(0.0, f64::max);
    let equal_passes = final_passes("adaptive") == final_passes("non-adaptive");
    let (a, f) = (get("adaptive"), get("non-adaptive"));
    Outcome {
        pass: equal_passes && a <= f,
        detail: format!(
            "median final grad_norm adaptive {a:.3e} vs non-adaptive {f:.3e} at {:.1} passes",
            final_passes("adaptive")
        ),
        surrogate,
    }
}

fn theory_evaluators() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for _ in 0..300 {
        let l = rng.gen_range(0.5..50.0);
        let mu = rng.gen_range(1e-4..0.4) * l;
        let off = HedgeBounds { alpha_hat: 1.0, alpha_tilde: 1.0 };
        let c = TheoryConstants::compute(l, mu, &[0.25; 4], true, off).unwrap();
        let (m, b, bb) = (rng.gen_range(10..5000usize), rng.gen_range(1..64usize), rng.gen_range(1..200usize));
        let g = rng.gen_range(0.1..2.0);
        let (eps, sigma0, zeta): (f64, f64, f64) =
            (rng.gen_range(1e-8..1e-3), rng.gen_range(0.1..1.0), rng.gen_range(0.01..1.0));

        let m_r = (2.0 * bb as f64 * mu * sigma0 / (eps * g) - 1.0).ceil().max(0.0);
        mismatches += (theory::sarah_m_required(eps, sigma0, &c, g, bb).unwrap() as f64 != m_r) as usize;
        if g * (m as f64 + 1.0) > bb as f64 {
            let s_r = ((zeta.ln() - eps.ln()) / ((g * (m as f64 + 1.0)).ln() - (bb as f64).ln())).ceil().max(0.0);
            mismatches += (theory::sarah_s_required(eps, zeta, &c, g, m, bb).unwrap() as f64 != s_r) as usize;
        }
        if (b * bb) as f64 > 4.0 * l / mu {
            let (mf, bf, bbf) = (m as f64, b as f64, bb as f64);
            let rho_r = (mu * bf * bbf * bbf + 2.0 * mf * l) / (mu * bf * bbf * mf - 4.0 * mf * l);
            worst = worst.max(rel(theory::ms2gd_rate(m, b, bb, 1.0, &c).unwrap().rho, rho_r));
        }
    }

    let mut speedup_err = 0.0f64;
    for (ah, at) in [(2.0, 2.0), (3.0, 1.5), (5.0, 5.0)] {
        let c = TheoryConstants::compute(1e6, 1.0, &[0.25; 4], true, HedgeBounds { alpha_hat: ah, alpha_tilde: at })
            .unwrap();
        let hedged = theory::sarah_m_required(1e-10, 0.5, &c, 1.0, 40).unwrap() as f64;
        let plain = theory::rbb_m_required(1e-10, 0.5, 1.0, 1.0, 40).unwrap() as f64;
        speedup_err = speedup_err.max(rel(hedged + 1.0, (plain + 1.0) / ah));
    }

    let mut chain_failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..1.0)).collect();
        let total: f64 = w.iter().sum();
        let q: Vec<f64> = w.iter().map(|x| x / total).collect();
        let (l, mu) = (rng.gen_range(0.5..20.0), rng.gen_range(1e-3..0.5));
        let c = TheoryConstants::compute(l, mu, &q, false, HedgeBounds { alpha_hat: 2.0, alpha_tilde: 1.5 }).unwrap();
        let tol = 1e-12;
        let ok = c.lq >= l * (1.0 - tol)
            && c.muq <= mu * (1.0 + tol)
            && c.lr <= 1.0 + tol
            && c.mur <= 1.0 + tol
            && c.kappa_plus >= c.kappa * (1.0 - tol);
        chain_failures += !ok as usize;
    }
    Outcome::new(
        mismatches == 0 && worst <= 1e-12 && speedup_err <= 0.01 && chain_failures == 0,
        format!(
            "hedge-off: {mismatches} count mismatches, rho rel {worst:.1e}; kappa = 1e6 speedup error {:.3}%; \
             chain failures {chain_failures}/1000",
            100.0 * speedup_err
        ),
    )
}

fn svrg_baseline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, d) = (50, 5);
    let h = (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.5..4.0)).collect()).collect();
    let c = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let p = DiagonalQuadratic::new(h, c).unwrap();
    let cfg = RunConfig {
        engine: Engine::Svrg,
        rule: StepRule::Constant(1.0 / (10.0 * p.smoothness_constant())),
        batch: 1,
        inner: Some(2 * n),
        epochs: 50,
        seed: 1,
        ..RunConfig::default()
    };
    let trace = optimizers::run(&p, &cfg, None).unwrap();
    let hit = trace.records.iter().position(|r| r.grad_norm <= 1e-6);
    Outcome::new(
        hit.is_some(),
        match hit {
            Some(e) => format!("grad_norm <= 1e-6 at epoch {e}"),
            None => format!("final grad_norm {:.2e} after 50 epochs", trace.last().unwrap().grad_norm),
        },
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets/demo-synthetic.toml");
    let mut snapshots = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let suite = load_config(&path, &Overrides { output: Some(out.clone()), ..Overrides::default() }).unwrap();
        run_suite(&suite).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        snapshots.push(files);
    }
    let same = snapshots[0] == snapshots[1];
    Outcome::new(
        same,
        format!("{} files, reruns {}", snapshots[0].len(), if same { "byte-identical" } else { "differ" }),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("gradient correctness", Duration::from_secs(5), gradient_correctness),
        ("estimator unbiasedness", Duration::from_secs(1), unbiasedness),
        ("full-batch collapse", Duration::from_secs(10), full_batch_collapse),
        ("reduction chain", Duration::MAX, reduction_chain),
        ("step-size upper bound", Duration::MAX, step_upper_bound_holds),
        ("hedged beats RBB", Duration::from_secs(180), hedged_beats_rbb),
        ("adaptive beats non-adaptive", Duration::from_secs(180), adaptive_beats_fixed),
        ("theory evaluators", Duration::from_secs(5), theory_evaluators),
        ("SVRG baseline", Duration::from_secs(30), svrg_baseline),
        ("determinism", Duration::MAX, determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut out = check();
        let elapsed = start.elapsed();
        if elapsed > budget {
            out.pass = false;
            out.detail.push_str(&format!("; over the {budget:?} budget"));
        }
        let tag = if out.surrogate { " [surrogate]" } else { "" };
        println!(
            "criterion {:>2} {}{tag}: {name}: {} ({:.2}s)",
            k + 1,
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
        if !out.pass && !out.surrogate {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} asserted criteria failed");
        std::process::exit(1);
    }
}
