//! File formats. Numbers are written as `{:.16e}`, which round-trips every
//! `f64` exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use elastic_flow::curve::DiscreteCurve;
use elastic_flow::diagnostics::ConvergenceReport;
use elastic_flow::flow::FlowTrace;
use serde::Serialize;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

/// Curve file: header `x,y`, one node per row.
pub fn write_curve(path: &Path, curve: &DiscreteCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["x", "y"])?;
    for p in curve.nodes() {
        w.write_record([num(p[0]), num(p[1])])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve file as a constrained curve.
pub fn read_curve(path: &Path) -> Result<DiscreteCurve> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    if r.headers()?.iter().collect::<Vec<_>>() != ["x", "y"] {
        bail!("{}: expected header x,y", path.display());
    }
    let mut nodes = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .with_context(|| format!("{}: bad number on data row {}", path.display(), line + 1))
        };
        nodes.push([parse(0)?, parse(1)?]);
    }
    Ok(DiscreteCurve::new(nodes, true)?)
}

pub const TRACE_HEADER: [&str; 10] = ["t", "energy", "dissipation", "length", "xmin", "xmax", "ymin", "ymax", "tangency", "dual_norm"];

pub fn write_trace(path: &Path, trace: &FlowTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TRACE_HEADER)?;
    for s in &trace.samples {
        let b = s.bbox;
        w.write_record(
            [s.t, s.energy, s.dissipation, s.length, b.xmin, b.xmax, b.ymin, b.ymax, s.tangency, s.dual_norm].map(num),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `(t, gap, dual_norm, H)` with `H = gap^θ`.
pub fn write_report_csv(path: &Path, trace: &FlowTrace, report: &ConvergenceReport, theta: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "gap", "dual_norm", "H"])?;
    for ((t, gap), s) in report.energy_gap_series.iter().zip(&trace.samples) {
        w.write_record([num(*t), num(*gap), num(s.dual_norm), num(gap.powf(theta))])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}
