//! File formats: field CSV, binary snapshots, trace and table CSVs, JSON.
//!
//! Snapshot layout (little endian): `n: u64`, `r_max: f64`, `mapping: u64`
//! (0 uniform, 1 algebraic stretch), `L: f64`, then for each node the six
//! values `re c1, im c1, re c2, im c2, re c3, im c3`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::evolution::EvolutionTrace;
use crate::field::{Field3, C64};
use crate::grid::{Mapping, RadialGrid};
use crate::modulation::TrackSeries;
use crate::virial::ScanTable;

fn csv_err(e: csv::Error) -> LabError {
    LabError::Format(e.to_string())
}

pub const FIELD_COLUMNS: [&str; 7] = ["r", "re_c1", "im_c1", "re_c2", "im_c2", "re_c3", "im_c3"];

pub fn write_field_csv<W: Write>(w: W, grid: &RadialGrid, u: &Field3) -> Result<()> {
    grid.check_len(u.n())?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(FIELD_COLUMNS).map_err(csv_err)?;
    for (i, r) in grid.r().iter().enumerate() {
        let c = [u.c[0].values[i], u.c[1].values[i], u.c[2].values[i]];
        wr.serialize((r, c[0].re, c[0].im, c[1].re, c[1].im, c[2].re, c[2].im)).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a field CSV; returns the radii column and the field.
pub fn read_field_csv<R: Read>(r: R) -> Result<(Vec<f64>, Field3)> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != FIELD_COLUMNS {
        return Err(LabError::Format(format!("unexpected field columns {headers:?}")));
    }
    let mut radii = Vec::new();
    let mut re = [Vec::new(), Vec::new(), Vec::new()];
    let mut im = [Vec::new(), Vec::new(), Vec::new()];
    for rec in rd.deserialize::<[f64; 7]>() {
        let v = rec.map_err(csv_err)?;
        radii.push(v[0]);
        for k in 0..3 {
            re[k].push(v[1 + 2 * k]);
            im[k].push(v[2 + 2 * k]);
        }
    }
    let re_stack: Vec<f64> = re.concat();
    let im_stack: Vec<f64> = im.concat();
    Ok((radii, Field3::from_stacks(&re_stack, &im_stack)))
}

pub fn write_snapshot<W: Write>(mut w: W, grid: &RadialGrid, u: &Field3) -> Result<()> {
    grid.check_len(u.n())?;
    let mapping = grid.mapping();
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&grid.r_max().to_le_bytes())?;
    w.write_all(&(mapping.code() as u64).to_le_bytes())?;
    w.write_all(&mapping.scale().to_le_bytes())?;
    for i in 0..grid.n() {
        for k in 0..3 {
            let v = u.c[k].values[i];
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(RadialGrid, Field3)> {
    let mut b8 = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b8).map_err(|e| LabError::Format(format!("truncated snapshot: {e}")))?;
        Ok(b8)
    };
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let r_max = f64::from_le_bytes(next(&mut r)?);
    let code = u64::from_le_bytes(next(&mut r)?);
    let scale = f64::from_le_bytes(next(&mut r)?);
    let mapping = match code {
        0 => Mapping::Uniform,
        1 => Mapping::AlgebraicStretch { scale },
        c => return Err(LabError::Format(format!("unknown mapping code {c}"))),
    };
    let grid = RadialGrid::new(r_max, n, mapping)?;
    let mut u = Field3::zeros(n);
    for i in 0..n {
        for k in 0..3 {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            u.c[k].values[i] = C64::new(re, im);
        }
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(LabError::Format("trailing bytes after snapshot payload".into()));
    }
    Ok((grid, u))
}

pub fn write_trace_csv<W: Write>(w: W, trace: &EvolutionTrace) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "K", "P", "E", "N", "delta_signed", "charge12", "charge13", "L4norm", "status"])
        .map_err(csv_err)?;
    let last = trace.times.len().saturating_sub(1);
    for (i, (t, rep)) in trace.times.iter().zip(&trace.reports).enumerate() {
        let status = if i == last { trace.status.label() } else { "running".to_string() };
        wr.serialize((t, rep.k, rep.p, rep.e, rep.nehari, rep.delta_signed, rep.charge12, rep.charge13, trace.l4[i], status))
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_track_csv<W: Write>(w: W, series: &TrackSeries) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "eta", "theta", "mu", "alpha", "delta", "h_norm", "defect_max"]).map_err(csv_err)?;
    for p in &series.points {
        wr.serialize((p.t, p.eta, p.theta, p.mu, p.alpha, p.delta, p.h_norm, p.defect_max)).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_scan_csv<W: Write>(w: W, table: &ScanTable) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["m1", "m2", "m3", "paper_condition", "galilean_condition", "defect_V", "defect_I", "max_dV"])
        .map_err(csv_err)?;
    for r in &table.rows {
        let [m1, m2, m3] = r.masses;
        wr.serialize((m1, m2, m3, r.paper_condition, r.galilean_condition, r.defect_v, r.defect_i, r.max_dv))
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Generic two-column-or-more numeric table.
pub fn write_table_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(LabError::Format(format!("row has {} values for {} columns", row.len(), header.len())));
        }
        wr.serialize(row).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| LabError::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}
