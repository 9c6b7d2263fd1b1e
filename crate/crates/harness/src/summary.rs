//! Passes-to-tolerance summaries across seeds.

use crate::suite::TraceRow;
use rhbb_core::TraceRecord;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// First effective-pass count at which `grad_norm ≤ tol`, interpolated
/// linearly between the bracketing records. `∞` if never reached.
pub fn passes_to_tolerance(records: &[TraceRecord], tol: f64) -> f64 {
    let Some(hit) = records.iter().position(|r| r.grad_norm <= tol) else {
        return f64::INFINITY;
    };
    let cur = &records[hit];
    if hit == 0 {
        return cur.effective_passes;
    }
    let prev = &records[hit - 1];
    if !prev.grad_norm.is_finite() || prev.grad_norm == cur.grad_norm {
        return cur.effective_passes;
    }
    let t = (prev.grad_norm - tol) / (prev.grad_norm - cur.grad_norm);
    prev.effective_passes + t * (cur.effective_passes - prev.effective_passes)
}

/// Median with `∞` sorting last; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 || v[mid - 1] == v[mid] {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSummary {
    pub algo: String,
    /// `(seed, passes to tolerance, final grad_norm)`, by seed.
    pub per_seed: Vec<(u64, f64, f64)>,
    pub median_passes: f64,
    pub median_final_grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tolerance: f64,
    pub algos: Vec<AlgoSummary>,
    /// Algorithms ordered by median passes, unreached ones last. Empty when no
    /// algorithm reached the tolerance.
    pub ranking: Vec<String>,
    /// `wins[i][j]`: seeds on which `algos[i]` reached the tolerance in fewer
    /// passes than `algos[j]`.
    pub wins: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Groups rows by `(algo, seed)` and summarizes them.
pub fn summarize(rows: &[TraceRow], tolerance: f64) -> Report {
    let mut traces: BTreeMap<String, BTreeMap<u64, Vec<TraceRecord>>> = BTreeMap::new();
    for r in rows {
        traces.entry(r.algo.clone()).or_default().entry(r.seed).or_default().push(r.record.clone());
    }
    let algos: Vec<AlgoSummary> = traces
        .into_iter()
        .map(|(algo, seeds)| {
            let per_seed: Vec<(u64, f64, f64)> = seeds
                .into_iter()
                .map(|(seed, recs)| {
                    let last = recs.last().map_or(f64::NAN, |r| r.grad_norm);
                    (seed, passes_to_tolerance(&recs, tolerance), last)
                })
                .collect();
            let passes: Vec<f64> = per_seed.iter().map(|p| p.1).collect();
            let finals: Vec<f64> = per_seed.iter().map(|p| p.2).collect();
            AlgoSummary { algo, median_passes: median(&passes), median_final_grad_norm: median(&finals), per_seed }
        })
        .collect();

    let mut warnings = Vec::new();
    let ranking = if algos.iter().all(|a| !a.median_passes.is_finite()) {
        warnings.push(format!("no algorithm reached grad_norm <= {tolerance:e}; ranking is empty"));
        Vec::new()
    } else {
        let mut order: Vec<&AlgoSummary> = algos.iter().collect();
        order.sort_by(|a, b| a.median_passes.total_cmp(&b.median_passes).then_with(|| a.algo.cmp(&b.algo)));
        order.iter().map(|a| a.algo.clone()).collect()
    };

    let wins = algos
        .iter()
        .map(|a| {
            algos
                .iter()
                .map(|b| {
                    a.per_seed
                        .iter()
                        .filter(|(seed, pa, _)| {
                            b.per_seed.iter().find(|(s, _, _)| s == seed).is_some_and(|(_, pb, _)| pa < pb)
                        })
                        .count()
                })
                .collect()
        })
        .collect();
    Report { tolerance, algos, ranking, wins, warnings }
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tolerance {:e}", self.tolerance);
        let _ = writeln!(out, "{:<28} {:>6} {:>16} {:>16}", "algo", "seeds", "median passes", "median final");
        for a in &self.algos {
            let _ = writeln!(
                out,
                "{:<28} {:>6} {:>16.4} {:>16.4e}",
                a.algo,
                a.per_seed.len(),
                a.median_passes,
                a.median_final_grad_norm
            );
        }
        if !self.ranking.is_empty() {
            let _ = writeln!(out, "\nranking: {}", self.ranking.join(" < "));
        }
        if self.algos.len() > 1 {
            let _ = writeln!(out, "\nwins (row beats column, per seed)");
            let _ = write!(out, "{:<28}", "");
            for j in 0..self.algos.len() {
                let _ = write!(out, " {j:>4}");
            }
            out.push('\n');
            for (i, row) in self.wins.iter().enumerate() {
                let _ = write!(out, "{:<28}", format!("{i}: {}", self.algos[i].algo));
                for w in row {
                    let _ = write!(out, " {w:>4}");
                }
                out.push('\n');
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
