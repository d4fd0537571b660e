//! One file per frequency holding the loaded rows of every sample.
//!
//! Both formats open with `#` metadata lines (`frequency_hz`, `n`, `seed`,
//! `samples`, `rows`) and the header row `dof,s0_re,s0_im,s1_re,...`. CSV
//! files then hold one line per loaded DOF; binary files hold a `data`
//! line followed by little-endian `f64` values in the same row-major order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use faer::{c64, Mat};

use super::write_bytes;
use crate::config::{fmt_f64, EnsembleFormat, FlatTable};
use crate::error::{Error, Result};
use crate::sweep::EnsembleSource;
use crate::tbl::{frequency_key, LoadEnsemble};

/// `dir/ensemble_<mHz>mHz.<ext>`; the key is the seeding frequency key.
pub fn ensemble_path(dir: &Path, frequency_hz: f64, format: EnsembleFormat) -> PathBuf {
    dir.join(format!("ensemble_{}mHz.{}", frequency_key(frequency_hz), format.as_str()))
}

fn header(e: &LoadEnsemble) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# frequency_hz = {}", fmt_f64(e.frequency_hz));
    let _ = writeln!(out, "# n = {}", e.n);
    let _ = writeln!(out, "# seed = {}", e.seed);
    let _ = writeln!(out, "# samples = {}", e.sample_count());
    let _ = writeln!(out, "# rows = {}", e.n_loaded());
    out.push_str("dof");
    for s in 0..e.sample_count() {
        let _ = write!(out, ",s{s}_re,s{s}_im");
    }
    out.push('\n');
    out
}

pub fn format_csv(e: &LoadEnsemble) -> String {
    let mut out = header(e);
    out.reserve(e.n_loaded() * e.sample_count() * 48);
    for i in 0..e.n_loaded() {
        let _ = write!(out, "{i}");
        for j in 0..e.sample_count() {
            let z = e.loaded[(i, j)];
            let _ = write!(out, ",{:e},{:e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

pub fn format_binary(e: &LoadEnsemble) -> Vec<u8> {
    let mut out = header(e).into_bytes();
    out.extend_from_slice(b"data\n");
    out.reserve(16 * e.n_loaded() * e.sample_count());
    for i in 0..e.n_loaded() {
        for j in 0..e.sample_count() {
            let z = e.loaded[(i, j)];
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn write_ensemble(path: &Path, e: &LoadEnsemble, format: EnsembleFormat) -> Result<()> {
    match format {
        EnsembleFormat::Csv => write_bytes(path, format_csv(e).as_bytes()),
        EnsembleFormat::Binary => write_bytes(path, &format_binary(e)),
    }
}

struct Meta {
    frequency_hz: f64,
    n: usize,
    seed: u64,
    samples: usize,
    rows: usize,
}

/// Splits off the `#` lines and the header row; returns the byte offset of
/// the body.
fn parse_meta(bytes: &[u8], ctx: &str) -> Result<(Meta, usize)> {
    let mut pos = 0;
    let mut kv = String::new();
    let mut saw_header = false;
    while pos < bytes.len() {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |k| pos + k);
        let line = std::str::from_utf8(&bytes[pos..end]).map_err(|_| Error::parse(ctx, "header is not UTF-8"))?;
        pos = (end + 1).min(bytes.len());
        if let Some(c) = line.strip_prefix('#') {
            kv.push_str(c.trim());
            kv.push('\n');
        } else if line.starts_with("dof") {
            saw_header = true;
            break;
        } else {
            return Err(Error::parse(ctx, format!("unexpected line before the header row: '{line}'")));
        }
    }
    if !saw_header {
        return Err(Error::parse(ctx, "missing header row"));
    }
    let t = FlatTable::parse(&kv, ctx)?;
    let need = |k: &str| t.u64(k).ok().flatten().ok_or_else(|| Error::parse(ctx, format!("missing or invalid '{k}'")));
    let meta = Meta {
        frequency_hz: t
            .f64("frequency_hz")
            .ok()
            .flatten()
            .ok_or_else(|| Error::parse(ctx, "missing or invalid 'frequency_hz'"))?,
        n: need("n")? as usize,
        seed: need("seed")?,
        samples: need("samples")? as usize,
        rows: need("rows")? as usize,
    };
    if meta.rows > meta.n {
        return Err(Error::parse(ctx, format!("{} rows exceed n = {}", meta.rows, meta.n)));
    }
    Ok((meta, pos))
}

fn parse_csv_body(body: &str, meta: &Meta, ctx: &str) -> Result<Mat<c64>> {
    let mut m = Mat::<c64>::zeros(meta.rows, meta.samples);
    let mut count = 0;
    for (i, line) in body.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        if i >= meta.rows {
            return Err(Error::parse(ctx, format!("more than the declared {} rows", meta.rows)));
        }
        let mut it = line.split(',');
        let dof: usize = it
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(ctx, format!("row {i}: bad dof field")))?;
        if dof != i {
            return Err(Error::parse(ctx, format!("row {i} is labelled dof {dof}")));
        }
        let mut vals = it.map(|s| s.trim().parse::<f64>());
        for j in 0..meta.samples {
            let (Some(Ok(re)), Some(Ok(im))) = (vals.next(), vals.next()) else {
                return Err(Error::parse(ctx, format!("row {i}: sample {j} is missing or malformed")));
            };
            m[(i, j)] = c64::new(re, im);
        }
        if vals.next().is_some() {
            return Err(Error::parse(ctx, format!("row {i}: more than {} samples", meta.samples)));
        }
        count += 1;
    }
    if count != meta.rows {
        return Err(Error::parse(ctx, format!("declared {} rows, found {count}", meta.rows)));
    }
    Ok(m)
}

fn parse_binary_body(body: &[u8], meta: &Meta, ctx: &str) -> Result<Mat<c64>> {
    let Some(data) = body.strip_prefix(b"data\n") else {
        return Err(Error::parse(ctx, "missing 'data' marker"));
    };
    let want = 16 * meta.rows * meta.samples;
    if data.len() != want {
        return Err(Error::parse(ctx, format!("expected {want} data bytes, found {}", data.len())));
    }
    let f = |k: usize| f64::from_le_bytes(data[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    Ok(Mat::from_fn(meta.rows, meta.samples, |i, j| {
        let k = 2 * (i * meta.samples + j);
        c64::new(f(k), f(k + 1))
    }))
}

pub fn parse_ensemble(bytes: &[u8], format: EnsembleFormat, ctx: &str) -> Result<LoadEnsemble> {
    let (meta, pos) = parse_meta(bytes, ctx)?;
    let loaded = match format {
        EnsembleFormat::Csv => {
            let body = std::str::from_utf8(&bytes[pos..]).map_err(|_| Error::parse(ctx, "body is not UTF-8"))?;
            parse_csv_body(body, &meta, ctx)?
        }
        EnsembleFormat::Binary => parse_binary_body(&bytes[pos..], &meta, ctx)?,
    };
    LoadEnsemble::new(meta.frequency_hz, meta.n, loaded, meta.seed)
}

pub fn read_ensemble(path: &Path, format: EnsembleFormat) -> Result<LoadEnsemble> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ensemble(&bytes, format, &path.display().to_string())
}

/// Serves ensembles from the files of an earlier excite stage.
#[derive(Clone, Debug)]
pub struct FileEnsembleSource {
    pub dir: PathBuf,
    pub format: EnsembleFormat,
}

impl EnsembleSource for FileEnsembleSource {
    /// Files with more samples serve any prefix: sample `i` does not
    /// depend on the sample count.
    fn ensemble(&self, frequency_hz: f64, samples: usize, seed: u64) -> Result<LoadEnsemble> {
        let path = ensemble_path(&self.dir, frequency_hz, self.format);
        if !path.exists() {
            return Err(Error::io(
                &path,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no ensemble for {frequency_hz} Hz; run the excite stage for this frequency"),
                ),
            ));
        }
        let e = read_ensemble(&path, self.format)?;
        let ctx = path.display().to_string();
        if e.seed != seed {
            return Err(Error::Config(format!("{ctx} was generated with seed {}, not {seed}", e.seed)));
        }
        if frequency_key(e.frequency_hz) != frequency_key(frequency_hz) {
            return Err(Error::parse(ctx, format!("file holds {} Hz, expected {frequency_hz} Hz", e.frequency_hz)));
        }
        if e.sample_count() < samples {
            return Err(Error::Config(format!(
                "{ctx} holds {} samples, {samples} requested",
                e.sample_count()
            )));
        }
        if e.sample_count() == samples {
            return Ok(e);
        }
        let loaded = e.loaded.as_ref().subcols(0, samples).to_owned();
        LoadEnsemble::new(e.frequency_hz, e.n, loaded, e.seed)
    }
}
