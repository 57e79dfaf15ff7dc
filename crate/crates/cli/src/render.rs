use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use ndt_core::model::{CacheStateIndex, Rational, SplitRatios};
use num::{ToPrimitive, Zero};
use serde::Serialize;

/// A rational carried as `"p/q"` alongside its nearest `f64`.
#[derive(Debug, Clone, Serialize)]
pub struct Exact {
    pub exact: String,
    pub decimal: f64,
}

impl From<&Rational> for Exact {
    fn from(r: &Rational) -> Self {
        Exact {
            exact: r.to_string(),
            decimal: to_f64(r),
        }
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Decimal with at most 12 significant digits, trailing zeros dropped.
pub fn sig12(r: &Rational) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let x = to_f64(r);
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn index_key(idx: CacheStateIndex) -> String {
    format!("{},{}", idx.r, idx.t)
}

/// Nonzero ratios keyed `"r,t"`, in `(r, t)` order.
pub fn ratios_map(s: &SplitRatios) -> Vec<(String, Exact)> {
    s.iter()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| (index_key(i), Exact::from(v)))
        .collect()
}

/// Serializes as a JSON object keeping insertion order.
#[derive(Debug, Clone)]
pub struct OrderedMap<V>(pub Vec<(String, V)>);

impl<V: Serialize> Serialize for OrderedMap<V> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = ser.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

/// Stdout, or a freshly created file.
pub fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> io::Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn write_csv(header: &[&str], rows: &[Vec<String>], out: Option<&Path>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink(out)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}
