//! File writers: trajectory CSV, JSONL records, atomic JSON.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::integrate::Trajectory;

/// 17 significant digits, exact round trip for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,body,c0,...` with one row per body per sample.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, dim: usize) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let header: Vec<String> = (0..dim).map(|c| format!("c{c}")).collect();
    writeln!(out, "t,body,{}", header.join(","))?;
    for (t, sample) in traj.times.iter().zip(&traj.samples) {
        let t = fmt_f64(*t);
        for (i, x) in sample.chunks_exact(dim).enumerate() {
            write!(out, "{t},{i}")?;
            for v in x {
                write!(out, ",{}", fmt_f64(*v))?;
            }
            writeln!(out)?;
        }
    }
    out.flush()
}

/// One row per sample: `t,<columns...>`.
pub fn write_state_csv(path: &Path, traj: &Trajectory, columns: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,{}", columns.join(","))?;
    for (t, sample) in traj.times.iter().zip(&traj.samples) {
        write!(out, "{}", fmt_f64(*t))?;
        for v in sample {
            write!(out, ",{}", fmt_f64(*v))?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    out.flush()
}

/// Pretty JSON written to a temporary sibling and renamed into place.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()?;
    }
    fs::rename(&tmp, path)
}
