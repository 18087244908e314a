//! Line-oriented strut model files.
//!
//! ```text
//! # cell_size_mm 8.75
//! # name XNFS:0:0
//! ax ay az bx by bz r
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Segment, StrutModel, Vec3};
use crate::error::{Error, Result};

pub fn model_to_string(model: &StrutModel) -> String {
    let mut out = String::new();
    writeln!(out, "# cell_size_mm {:.8e}", model.cell_size_mm).unwrap();
    if !model.name().is_empty() {
        writeln!(out, "# name {}", model.name()).unwrap();
    }
    for s in &model.segments {
        writeln!(
            out,
            "{:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {:.8e}",
            s.a.x, s.a.y, s.a.z, s.b.x, s.b.y, s.b.z, s.radius_mm
        )
        .unwrap();
    }
    out
}

pub fn model_from_str(text: &str, origin: &Path) -> Result<StrutModel> {
    let mut cell_size = None;
    let mut name = String::new();
    let mut segments = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            let key = words.next();
            if key == Some("name") {
                name = words.collect::<Vec<_>>().join(" ");
            } else if key == Some("cell_size_mm") {
                let v = words
                    .next()
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| Error::parse(origin, format!("line {}: bad cell size", lineno + 1)))?;
                cell_size = Some(v);
            }
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(origin, format!("line {}: {e}", lineno + 1)))?;
        if v.len() != 7 {
            return Err(Error::parse(
                origin,
                format!("line {}: expected 7 numbers, found {}", lineno + 1, v.len()),
            ));
        }
        segments.push(Segment::new(
            Vec3::new(v[0], v[1], v[2]),
            Vec3::new(v[3], v[4], v[5]),
            v[6],
        ));
    }
    let cell_size = cell_size.ok_or_else(|| Error::parse(origin, "missing '# cell_size_mm' header"))?;
    if !(cell_size > 0.0) {
        return Err(Error::parse(origin, "cell size must be positive"));
    }
    Ok(StrutModel::new(cell_size, segments).with_name(name))
}

pub fn write_model(model: &StrutModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<StrutModel> {
    let path = path.as_ref();
    model_from_str(&std::fs::read_to_string(path)?, path)
}
