//! Number formatting and CSV/JSON emission. Every float leaves the program
//! rounded to 9 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use coopetition::Bid;
use serde::Serialize;
use serde_json::Value;

pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

pub fn num(x: f64) -> String {
    let r = round9(x);
    if r == 0.0 {
        // Avoid "-0".
        return "0".into();
    }
    r.to_string()
}

pub fn bid(b: Bid) -> String {
    match b {
        Bid::Rate(v) => num(v),
        Bid::Abstain => "N".into(),
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round9)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes `v` as JSON with rounded floats.
pub fn to_json<T: Serialize>(v: &T) -> anyhow::Result<Value> {
    let mut v = serde_json::to_value(v)?;
    round_value(&mut v);
    Ok(v)
}

/// Writes one pretty-printed JSON document to `path`, or stdout.
pub fn write_json(v: &Value, path: Option<&Path>) -> anyhow::Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// CSV writer over `path`, or stdout.
pub fn csv_writer(path: Option<&Path>) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::WriterBuilder::new().from_writer(sink(path)?))
}
