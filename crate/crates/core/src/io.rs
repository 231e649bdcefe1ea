//! Point-cloud files.
//!
//! Binary layout: `n` and `count` as little-endian `u64`, then `2n·count`
//! little-endian `f64` values stored coordinate-major (all `q₁`, then all
//! `q₂`, …, then all `p_n`). CSV files carry a `q1..qn,p1..pn` header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cone::SampledSet;
use crate::error::{Error, Result};
use crate::symplectic::PhasePoint;

pub fn write_point_cloud<W: Write>(set: &SampledSet, mut w: W) -> Result<()> {
    let n = set.n();
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(set.len() as u64).to_le_bytes())?;
    for k in 0..2 * n {
        for p in set.points() {
            w.write_all(&p.coords()[k].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_point_cloud<R: Read>(mut r: R) -> Result<SampledSet> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let count = u64::from_le_bytes(word) as usize;
    if n == 0 || n > 1 << 16 {
        return Err(Error::Format(format!("implausible half-dimension {n}")));
    }
    let total = count
        .checked_mul(2 * n)
        .ok_or_else(|| Error::Format(format!("point count {count} overflows")))?;
    let mut coords = vec![0.0f64; total];
    let mut buf = vec![0u8; 8 * 4096];
    let mut filled = 0;
    while filled < total {
        let take = (total - filled).min(4096);
        r.read_exact(&mut buf[..8 * take]).map_err(|e| Error::Format(format!("truncated body: {e}")))?;
        for (j, chunk) in buf[..8 * take].chunks_exact(8).enumerate() {
            coords[filled + j] = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        }
        filled += take;
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after point-cloud body".into()));
    }
    let points = (0..count)
        .map(|i| PhasePoint::new(n, (0..2 * n).map(|k| coords[k * count + i]).collect()))
        .collect::<Result<Vec<_>>>()?;
    SampledSet::from_points(n, points)
}

pub fn save_point_cloud(set: &SampledSet, path: &Path) -> Result<()> {
    write_point_cloud(set, BufWriter::new(File::create(path)?))
}

pub fn load_point_cloud(path: &Path) -> Result<SampledSet> {
    read_point_cloud(BufReader::new(File::open(path)?))
}

fn header(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("q{j}")).chain((1..=n).map(|j| format!("p{j}"))).collect()
}

pub fn write_csv<W: Write>(set: &SampledSet, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(set.n())).map_err(|e| Error::Io(e.to_string()))?;
    for p in set.points() {
        out.write_record(p.coords().iter().map(|x| format!("{x:e}"))).map_err(|e| Error::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<SampledSet> {
    let mut rdr = csv::Reader::from_reader(r);
    let cols = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if cols.len() % 2 != 0 || cols.is_empty() {
        return Err(Error::Format(format!("{} columns; expected q1..qn,p1..pn", cols.len())));
    }
    let n = cols.len() / 2;
    if cols.iter().collect::<Vec<_>>() != header(n) {
        return Err(Error::Format(format!("unexpected header {cols:?}")));
    }
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let coords = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Format(format!("row {}: {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        points.push(PhasePoint::new(n, coords)?);
    }
    SampledSet::from_points(n, points)
}

pub fn save_csv(set: &SampledSet, path: &Path) -> Result<()> {
    write_csv(set, BufWriter::new(File::create(path)?))
}

pub fn load_csv(path: &Path) -> Result<SampledSet> {
    read_csv(BufReader::new(File::open(path)?))
}
