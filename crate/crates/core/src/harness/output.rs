//! CSV emission and parsing for experiment results.

use std::fs::File;
use std::path::Path;

use super::experiments::{AlcRecord, CurveRecord, DuplicateRecord};
use super::metrics::LearningCurve;
use crate::error::{HalError, Result};

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| HalError::Config(format!("missing column {i}")))?;
    raw.parse()
        .map_err(|_| HalError::Config(format!("unparsable value `{raw}` in column {i}")))
}

fn check_header(rd: &mut csv::Reader<File>, want: &[&str]) -> Result<()> {
    let h = rd.headers()?;
    if h.iter().ne(want.iter().copied()) {
        return Err(HalError::Config(format!("expected columns {want:?}, found {h:?}")));
    }
    Ok(())
}

/// `method,seed,labels,accuracy`, one row per curve point.
pub fn write_curves(path: impl AsRef<Path>, curves: &[CurveRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "seed", "labels", "accuracy"])?;
    for c in curves {
        for &(l, a) in c.curve.points() {
            w.write_record([c.method.clone(), c.seed.to_string(), l.to_string(), a.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Groups consecutive rows with equal `(method, seed)` back into curves.
pub fn read_curves(path: impl AsRef<Path>) -> Result<Vec<CurveRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    check_header(&mut rd, &["method", "seed", "labels", "accuracy"])?;
    let mut out: Vec<CurveRecord> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let method: String = field(&rec, 0)?;
        let seed: u64 = field(&rec, 1)?;
        let labels: usize = field(&rec, 2)?;
        let acc: f64 = field(&rec, 3)?;
        match out.last_mut() {
            Some(c) if c.method == method && c.seed == seed => c.curve.push(labels, acc)?,
            _ => {
                let mut curve = LearningCurve::new();
                curve.push(labels, acc)?;
                out.push(CurveRecord { method, seed, curve });
            }
        }
    }
    Ok(out)
}

/// `episode,step,reward`.
pub fn write_rewards(path: impl AsRef<Path>, rewards: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "step", "reward"])?;
    for (e, steps) in rewards.iter().enumerate() {
        for (s, r) in steps.iter().enumerate() {
            w.write_record([e.to_string(), s.to_string(), r.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_rewards(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_path(path)?;
    check_header(&mut rd, &["episode", "step", "reward"])?;
    let mut out: Vec<Vec<f64>> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let e: usize = field(&rec, 0)?;
        if e >= out.len() {
            out.resize(e + 1, Vec::new());
        }
        out[e].push(field(&rec, 2)?);
    }
    Ok(out)
}

/// `<variant_column>,repeat,alc_norm`.
pub fn write_alc(path: impl AsRef<Path>, variant_column: &str, rows: &[AlcRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([variant_column, "repeat", "alc_norm"])?;
    for r in rows {
        w.write_record([r.variant.clone(), r.repeat.to_string(), r.alc_norm.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_alc(path: impl AsRef<Path>) -> Result<Vec<AlcRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        out.push(AlcRecord {
            variant: field(&rec, 0)?,
            repeat: field(&rec, 1)?,
            alc_norm: field(&rec, 2)?,
        });
    }
    Ok(out)
}

/// `method,seed,selected,duplicates`.
pub fn write_duplicates(path: impl AsRef<Path>, rows: &[DuplicateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "seed", "selected", "duplicates"])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.seed.to_string(),
            r.selected.to_string(),
            r.duplicates.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
