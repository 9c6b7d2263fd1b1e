//! Whitespace-separated `passes grad_norm` columns for gnuplot and friends.

use crate::error::HarnessError;
use crate::suite::TraceRow;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const PLOT_MANIFEST: &str = "plots.txt";

/// Value substituted for non-positive gradient norms so log axes stay valid.
pub const LOG_FLOOR: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub name: String,
    pub body: String,
    pub caption: String,
    pub notices: Vec<String>,
}

/// Columns for one trace; non-positive norms are clamped, non-finite rows
/// dropped, each with a notice.
pub fn plot_columns(name: &str, rows: &[TraceRow]) -> PlotData {
    let mut body = String::from("# effective_passes grad_norm\n");
    let mut clamped = 0;
    let mut dropped = 0;
    for r in rows {
        let (p, g) = (r.record.effective_passes, r.record.grad_norm);
        if !p.is_finite() || !g.is_finite() {
            dropped += 1;
            continue;
        }
        let g = if g <= 0.0 {
            clamped += 1;
            LOG_FLOOR
        } else {
            g
        };
        let _ = writeln!(body, "{p:.16e} {g:.16e}");
    }
    let mut notices = Vec::new();
    if clamped > 0 {
        notices.push(format!("{name}: {clamped} non-positive grad_norm values clamped to {LOG_FLOOR:e}"));
    }
    if dropped > 0 {
        notices.push(format!("{name}: {dropped} non-finite rows dropped"));
    }
    let caption = match rows.first() {
        Some(r) => format!("{} seed {}: grad_norm vs effective passes", r.algo, r.seed),
        None => format!("{name}: empty trace"),
    };
    PlotData { name: name.to_string(), body, caption, notices }
}

/// Writes one `.dat` per trace plus a caption manifest; returns the notices.
pub fn emit_plot_data(traces: &[(PathBuf, Vec<TraceRow>)], out_dir: &Path) -> Result<Vec<String>, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut manifest = String::new();
    let mut notices = Vec::new();
    for (path, rows) in traces {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trace".into());
        let data = plot_columns(&stem, rows);
        let file = format!("{stem}.dat");
        let target = out_dir.join(&file);
        std::fs::write(&target, &data.body).map_err(|e| HarnessError::io(&target, e))?;
        let _ = writeln!(manifest, "{file}\t{}", data.caption);
        notices.extend(data.notices);
    }
    let target = out_dir.join(PLOT_MANIFEST);
    std::fs::write(&target, manifest).map_err(|e| HarnessError::io(&target, e))?;
    Ok(notices)
}
