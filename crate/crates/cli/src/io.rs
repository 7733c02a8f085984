use std::path::Path;

use dryer_core::efficiency::SurfaceGrid;
use dryer_core::linearize::StateSpaceModel;
use dryer_core::sim::{Trace, TRACE_COLUMNS};
use dryer_core::{DryerError, Result};
use serde::Serialize;

fn io_err(path: &Path, e: impl std::fmt::Display) -> DryerError {
    DryerError::Config(format!("{}: {e}", path.display()))
}

/// Nine significant digits; plain decimals for moderate magnitudes.
pub fn fmt9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let e = v.abs().log10().floor() as i32;
    if (-5..15).contains(&e) {
        let decimals = (8 - e).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.8e}")
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<std::fs::File>) -> Result<()> {
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_model_csvs(a_path: &Path, b_path: &Path, m: &StateSpaceModel) -> Result<()> {
    for (path, mat, cols) in [(a_path, &m.a, &m.state_labels), (b_path, &m.b, &m.input_labels)] {
        let mut w = writer(path)?;
        let mut header = vec!["row".to_string()];
        header.extend(cols.iter().cloned());
        w.write_record(&header).map_err(|e| io_err(path, e))?;
        for i in 0..mat.nrows() {
            let mut rec = vec![m.state_labels[i].clone()];
            rec.extend((0..mat.ncols()).map(|j| fmt9(mat[(i, j)])));
            w.write_record(&rec).map_err(|e| io_err(path, e))?;
        }
        finish(path, w)?;
    }
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRACE_COLUMNS).map_err(|e| io_err(path, e))?;
    for r in &trace.rows {
        w.write_record(r.iter().map(|v| fmt9(*v))).map_err(|e| io_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_trace_csv(path: &Path) -> Result<Trace> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    if header.iter().ne(TRACE_COLUMNS.iter().copied()) {
        return Err(io_err(path, format!("expected columns {}", TRACE_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let mut row = [0.0; 21];
        for (j, field) in rec.iter().enumerate() {
            row[j] = field.parse().map_err(|e| io_err(path, format!("row {i}, column {}: {e}", TRACE_COLUMNS[j])))?;
        }
        rows.push(row);
    }
    Trace::from_rows(rows)
}

pub fn write_saturation_csv(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "f_s", "mdot_air", "mdot_stack"]).map_err(|e| io_err(path, e))?;
    for (r, f) in trace.rows.iter().zip(&trace.saturation) {
        let flag = |b: bool| if b { "1" } else { "0" };
        w.write_record([fmt9(r[0]).as_str(), flag(f[0]), flag(f[1]), flag(f[2])]).map_err(|e| io_err(path, e))?;
    }
    finish(path, w)
}

pub fn write_bed_csv(path: &Path, trace: &Trace, t_bed: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "T_bed"]).map_err(|e| io_err(path, e))?;
    for (r, tb) in trace.rows.iter().zip(t_bed) {
        w.write_record([fmt9(r[0]), fmt9(*tb)]).map_err(|e| io_err(path, e))?;
    }
    finish(path, w)
}

pub fn write_surface_csv(path: &Path, grid: &SurfaceGrid) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["axis1", "axis2", "value", "degenerate_flag"]).map_err(|e| io_err(path, e))?;
    for (a1, a2, v) in grid.long_form() {
        let (value, flag) = match v {
            Some(v) => (fmt9(v), "0"),
            None => (String::new(), "1"),
        };
        w.write_record([fmt9(a1).as_str(), fmt9(a2).as_str(), value.as_str(), flag]).map_err(|e| io_err(path, e))?;
    }
    finish(path, w)
}
