//! Projection basis as a Matrix Market array plus a key-value sidecar with
//! the expansion points, order, input counts and deflation log.

use std::fmt::Write as _;
use std::path::Path;

use super::mtx::{read_array, write_array};
use super::{read_text, write_text};
use crate::config::{fmt_f64, FlatTable, KeyValueWriter};
use crate::error::{Error, Result};
use crate::mor::{Deflation, ProjectionBasis};

pub const BASIS_FILE: &str = "basis.mtx";
pub const BASIS_META: &str = "basis.meta";

pub fn format_meta(b: &ProjectionBasis) -> String {
    let mut w = KeyValueWriter::new();
    w.comment("projection basis metadata")
        .int("n", b.n() as u64)
        .int("r", b.r() as u64)
        .f64_list("points_hz", &b.points_hz)
        .int("order", b.order as u64)
        .usize_list("input_counts", &b.input_counts)
        .int("nominal_size", b.nominal_size() as u64);
    let mut out = w.finish();
    out.push_str("# [point, level, input, relative_norm] per deflated candidate\n");
    out.push_str("deflations = [\n");
    for d in &b.deflations {
        let _ = writeln!(
            out,
            "  [{}, {}, {}, {}],",
            d.point,
            d.level,
            d.input,
            fmt_f64(d.relative_norm)
        );
    }
    out.push_str("]\n");
    out
}

pub fn write_basis(dir: &Path, b: &ProjectionBasis) -> Result<()> {
    let comments = [format!("projection basis: n = {}, r = {}", b.n(), b.r())];
    write_array(&dir.join(BASIS_FILE), b.v.as_ref(), &comments)?;
    write_text(&dir.join(BASIS_META), &format_meta(b))
}

fn parse_deflations(text: &str, ctx: &str) -> Result<Vec<Deflation>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::parse(ctx, e.message()))?;
    let Some(toml::Value::Array(rows)) = table.get("deflations") else {
        return Err(Error::parse(ctx, "missing deflations"));
    };
    rows.iter()
        .map(|row| {
            let bad = || Error::parse(ctx, format!("malformed deflation entry {row}"));
            let toml::Value::Array(f) = row else { return Err(bad()) };
            let int = |k: usize| f.get(k).and_then(|v| v.as_integer()).filter(|&i| i >= 0).map(|i| i as usize);
            let rel = match f.get(3) {
                Some(toml::Value::Float(x)) => *x,
                Some(toml::Value::Integer(i)) => *i as f64,
                _ => return Err(bad()),
            };
            match (int(0), int(1), int(2), f.len()) {
                (Some(point), Some(level), Some(input), 4) => Ok(Deflation {
                    point,
                    level,
                    input,
                    relative_norm: rel,
                }),
                _ => Err(bad()),
            }
        })
        .collect()
}

pub fn read_basis(dir: &Path) -> Result<ProjectionBasis> {
    let meta_path = dir.join(BASIS_META);
    let text = read_text(&meta_path)?;
    let ctx = meta_path.display().to_string();
    let t = FlatTable::parse(&text, &ctx)?;
    let missing = |k: &str| Error::parse(&ctx, format!("missing '{k}'"));
    let n = t.usize("n")?.ok_or_else(|| missing("n"))?;
    let r = t.usize("r")?.ok_or_else(|| missing("r"))?;
    let points_hz = t.f64_list("points_hz")?.ok_or_else(|| missing("points_hz"))?;
    let order = t.usize("order")?.ok_or_else(|| missing("order"))?;
    let input_counts = t.usize_list("input_counts")?.ok_or_else(|| missing("input_counts"))?;
    let deflations = parse_deflations(&text, &ctx)?;
    let (v, _) = read_array(&dir.join(BASIS_FILE))?;
    if v.nrows() != n || v.ncols() != r {
        return Err(Error::parse(
            ctx,
            format!("sidecar declares {n} × {r}, basis file holds {} × {}", v.nrows(), v.ncols()),
        ));
    }
    if points_hz.len() != input_counts.len() {
        return Err(Error::parse(ctx, "points_hz and input_counts differ in length"));
    }
    let b = ProjectionBasis {
        v,
        points_hz,
        order,
        input_counts,
        deflations,
    };
    let defect = b.orthonormality_defect();
    if !(defect <= 1e-10) {
        return Err(Error::Contract(format!(
            "basis read from {} is not orthonormal (defect {defect:.2e})",
            dir.display()
        )));
    }
    Ok(b)
}
