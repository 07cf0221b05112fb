//! CSV and JSON emitters. Floats are written with 17 significant digits so
//! that runs can be diffed across implementations.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use acons_core::containment::ContainmentReport;
use acons_core::dt_sim::DtScenario;
use acons_core::trajectory::Trajectory;

use crate::run::CtRunOutput;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn ct_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("x_{i}")));
    cols.extend((1..=n).map(|i| format!("v_{i}")));
    cols.push("avg".to_string());
    cols.extend((1..=n).map(|i| format!("err_{i}")));
    cols.join(",")
}

/// Trajectory CSV: `t, x_1..x_n, v_1..v_n, avg, err_1..err_n`. Departed
/// agents leave their cells empty.
pub fn write_ct_csv(path: &Path, out: &CtRunOutput, header_only: bool) -> Result<()> {
    let n = out.n_agents;
    let mut w = writer(path)?;
    writeln!(w, "{}", ct_header(n))?;
    if header_only {
        return Ok(());
    }
    for seg in &out.segments {
        for sample in seg.trajectory.samples() {
            let mut x = vec![String::new(); n];
            let mut v = vec![String::new(); n];
            let mut e = vec![String::new(); n];
            for (local, &orig) in seg.agents.iter().enumerate() {
                x[orig] = fmt_float(sample.x[local]);
                v[orig] = fmt_float(sample.v[local]);
                e[orig] = fmt_float(sample.err[local]);
            }
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_float(sample.t),
                x.join(","),
                v.join(","),
                fmt_float(sample.avg),
                e.join(",")
            )?;
        }
    }
    Ok(())
}

/// Error CSV: `t, err_1..err_n, max_err`.
pub fn write_ct_error_csv(path: &Path, out: &CtRunOutput, header_only: bool) -> Result<()> {
    let n = out.n_agents;
    let mut w = writer(path)?;
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("err_{i}")));
    cols.push("max_err".to_string());
    writeln!(w, "{}", cols.join(","))?;
    if header_only {
        return Ok(());
    }
    for seg in &out.segments {
        for sample in seg.trajectory.samples() {
            let mut e = vec![String::new(); n];
            for (local, &orig) in seg.agents.iter().enumerate() {
                e[orig] = fmt_float(sample.err[local]);
            }
            writeln!(
                w,
                "{},{},{}",
                fmt_float(sample.t),
                e.join(","),
                fmt_float(sample.max_err())
            )?;
        }
    }
    Ok(())
}

/// Bound CSV aligned with the first (departure-free) segment:
/// `t, max_err, bound, margin`.
pub fn write_bound_csv(path: &Path, trajectory: &Trajectory, bounds: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,max_err,bound,margin")?;
    for (sample, b) in trajectory.samples().iter().zip(bounds) {
        let e = sample.max_err();
        writeln!(
            w,
            "{},{},{},{}",
            fmt_float(sample.t),
            fmt_float(e),
            fmt_float(*b),
            fmt_float(b - e)
        )?;
    }
    Ok(())
}

/// Discrete trajectory CSV: `k, t, x_1..x_n, v_1..v_n, avg, err_1..err_n`.
pub fn write_dt_csv(
    path: &Path,
    scenario: &DtScenario,
    trajectory: &Trajectory,
    header_only: bool,
) -> Result<()> {
    let n = scenario.topology().n();
    let mut w = writer(path)?;
    writeln!(w, "k,{}", ct_header(n))?;
    if header_only {
        return Ok(());
    }
    for (k, sample) in trajectory.samples().iter().enumerate() {
        let x: Vec<String> = sample.x.iter().map(|v| fmt_float(*v)).collect();
        let v: Vec<String> = sample.v.iter().map(|v| fmt_float(*v)).collect();
        let e: Vec<String> = sample.err.iter().map(|v| fmt_float(*v)).collect();
        writeln!(
            w,
            "{k},{},{},{},{},{}",
            fmt_float(sample.t),
            x.join(","),
            v.join(","),
            fmt_float(sample.avg),
            e.join(",")
        )?;
    }
    Ok(())
}

/// Discrete bound CSV: `k, t, max_err, bound, margin`.
pub fn write_dt_bound_csv(path: &Path, trajectory: &Trajectory, bounds: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "k,t,max_err,bound,margin")?;
    for (k, (sample, b)) in trajectory.samples().iter().zip(bounds).enumerate() {
        let e = sample.max_err();
        writeln!(
            w,
            "{k},{},{},{},{}",
            fmt_float(sample.t),
            fmt_float(e),
            fmt_float(*b),
            fmt_float(b - e)
        )?;
    }
    Ok(())
}

/// Follower trace CSV:
/// `k, t, f1_x, f1_y, ..., xbar_x, xbar_y, err_1.., max_err, xbar_in_hull`.
pub fn write_containment_csv(path: &Path, report: &ContainmentReport) -> Result<()> {
    let n = report.steps.first().map_or(0, |s| s.followers.len());
    let mut w = writer(path)?;
    let mut cols = vec!["k".to_string(), "t".to_string()];
    for i in 1..=n {
        cols.push(format!("f{i}_x"));
        cols.push(format!("f{i}_y"));
    }
    cols.push("xbar_x".to_string());
    cols.push("xbar_y".to_string());
    cols.extend((1..=n).map(|i| format!("err_{i}")));
    cols.push("max_err".to_string());
    cols.push("xbar_in_hull".to_string());
    writeln!(w, "{}", cols.join(","))?;

    for step in &report.steps {
        let mut fields = vec![step.k.to_string(), fmt_float(step.t)];
        for f in &step.followers {
            fields.push(fmt_float(f.x));
            fields.push(fmt_float(f.y));
        }
        fields.push(fmt_float(step.xbar.x));
        fields.push(fmt_float(step.xbar.y));
        let mut max_err = 0.0f64;
        for e in &step.errors {
            fields.push(fmt_float(*e));
            max_err = max_err.max(*e);
        }
        fields.push(fmt_float(max_err));
        fields.push((step.xbar_in_hull as u8).to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Hull vertex CSV: `k, t, vertex, x, y` (one row per vertex per step).
pub fn write_hull_csv(path: &Path, report: &ContainmentReport) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "k,t,vertex,x,y")?;
    for step in &report.steps {
        for (idx, v) in step.hull.vertices().iter().enumerate() {
            writeln!(
                w,
                "{},{},{idx},{},{}",
                step.k,
                fmt_float(step.t),
                fmt_float(v.x),
                fmt_float(v.y)
            )?;
        }
    }
    Ok(())
}
