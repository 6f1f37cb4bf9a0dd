//! CSV and binary file formats.
//!
//! Every CSV starts with a one-line header; floats carry nine significant
//! digits. Homodyne records additionally have a lossless little-endian
//! binary form so estimation can be replayed bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::filter::PosteriorTrace;
use crate::markov::TruthTrajectory;
use crate::model::DetuningGrid;
use crate::truthsim::HomodyneRecord;

const RECORD_MAGIC: &[u8; 8] = b"SPTREC01";

/// Nine significant digits.
pub fn g9(x: f64) -> String {
    format!("{x:.8e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Truth on the checkpoint grid: `t, n, delta_n`.
pub fn write_truth_csv(
    path: &Path,
    truth: &TruthTrajectory,
    grid: &DetuningGrid,
    stride: usize,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,n,delta_n")?;
    for (k, &n) in truth.states.iter().enumerate().step_by(stride.max(1)) {
        writeln!(w, "{},{},{}", g9(k as f64 * truth.dt), n, g9(grid[n]))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a truth CSV back as `(t, n)` pairs.
pub fn read_truth_csv(path: &Path) -> Result<Vec<(f64, usize)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let bad = || Error::Record(format!("truth line {}: {line:?}", i + 1));
        let t: f64 = cols
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        let n: usize = cols
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        out.push((t, n));
    }
    Ok(out)
}

/// `t, dY` with `t` the start of each interval.
pub fn write_record_csv(path: &Path, record: &HomodyneRecord) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,dY")?;
    for (k, dy) in record.increments.iter().enumerate() {
        writeln!(w, "{},{}", g9(k as f64 * record.dt), g9(*dy))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV record. `dt` is recovered from the time column and rounded
/// to the nine digits it was written with.
pub fn read_record_csv(path: &Path) -> Result<HomodyneRecord> {
    let reader = BufReader::new(File::open(path)?);
    let mut times = Vec::new();
    let mut increments = Vec::new();
    for (i, line) in reader.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (t, dy) = line
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
            .ok_or_else(|| Error::Record(format!("record line {}: {line:?}", i + 1)))?;
        times.push(t);
        increments.push(dy);
    }
    if times.len() < 2 {
        return Err(Error::Record(
            "need at least two samples to infer dt".into(),
        ));
    }
    let span = times[times.len() - 1] - times[0];
    let dt: f64 = g9(span / (times.len() - 1) as f64)
        .parse()
        .expect("formatted float");
    if !(dt > 0.0) {
        return Err(Error::Record("time column is not increasing".into()));
    }
    Ok(HomodyneRecord {
        dt,
        increments,
        seed: 0,
    })
}

/// Binary record: magic, `dt: f64`, `seed: u64`, `len: u64`, then `len` f64s,
/// all little-endian.
pub fn write_record_bin(path: &Path, record: &HomodyneRecord) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(RECORD_MAGIC)?;
    w.write_all(&record.dt.to_le_bytes())?;
    w.write_all(&record.seed.to_le_bytes())?;
    w.write_all(&(record.len() as u64).to_le_bytes())?;
    for dy in &record.increments {
        w.write_all(&dy.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_record_bin(path: &Path) -> Result<HomodyneRecord> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != RECORD_MAGIC {
        return Err(Error::Record("bad magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let dt = f64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let seed = u64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let len = u64::from_le_bytes(word) as usize;
    let mut increments = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word).map_err(|_| {
            Error::Record(format!(
                "truncated after {} of {len} samples",
                increments.len()
            ))
        })?;
        increments.push(f64::from_le_bytes(word));
    }
    Ok(HomodyneRecord {
        dt,
        increments,
        seed,
    })
}

/// Dispatches on the extension: `.csv` or anything else as binary.
pub fn read_record(path: &Path) -> Result<HomodyneRecord> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_record_csv(path),
        _ => read_record_bin(path),
    }
}

/// `t, P_0..P_{M-1}, map_delta, mean_delta, var_delta`
pub fn write_trace_csv(path: &Path, trace: &PosteriorTrace, grid: &DetuningGrid) -> Result<()> {
    let mut w = create(path)?;
    let mut header = String::from("t");
    for n in 0..trace.states {
        header.push_str(&format!(",P_{n}"));
    }
    header.push_str(",map_delta,mean_delta,var_delta");
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for k in 0..trace.len() {
        line.clear();
        line.push_str(&g9(trace.times[k]));
        for p in trace.row(k) {
            line.push(',');
            line.push_str(&g9(*p));
        }
        for v in [grid[trace.map_index[k]], trace.mean[k], trace.var[k]] {
            line.push(',');
            line.push_str(&g9(v));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows of floats under a header; used for the metric tables.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| g9(*x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}
