//! Matrix Market text files: sparse real matrices in coordinate format and
//! dense complex matrices in array format.
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every bit and equal inputs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use faer::{c64, Mat, MatRef};

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    SkewSymmetric,
}

struct Header {
    coordinate: bool,
    field: Field,
    symmetry: Symmetry,
}

fn parse_header(line: &str, ctx: &str) -> Result<Header> {
    let words: Vec<String> = line.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(Error::parse(ctx, format!("not a Matrix Market header: '{line}'")));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::parse(ctx, format!("unknown format '{other}'"))),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" => Field::Pattern,
        other => return Err(Error::parse(ctx, format!("unknown field '{other}'"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(Error::parse(ctx, format!("unknown symmetry '{other}'"))),
    };
    if field == Field::Pattern && !coordinate {
        return Err(Error::parse(ctx, "pattern field requires coordinate format"));
    }
    Ok(Header {
        coordinate,
        field,
        symmetry,
    })
}

/// Comment lines (without the leading `%`) and the data lines.
struct Parsed<'a> {
    header: Header,
    comments: Vec<String>,
    data: Vec<(usize, &'a str)>,
}

fn split<'a>(text: &'a str, ctx: &str) -> Result<Parsed<'a>> {
    let mut lines = text.lines().enumerate();
    let Some((_, first)) = lines.next() else {
        return Err(Error::parse(ctx, "empty file"));
    };
    let header = parse_header(first, ctx)?;
    let mut comments = Vec::new();
    let mut data = Vec::new();
    for (ln, line) in lines {
        let t = line.trim();
        if let Some(c) = t.strip_prefix('%') {
            if data.is_empty() {
                comments.push(c.trim_start().to_string());
            }
        } else if !t.is_empty() {
            data.push((ln + 1, t));
        }
    }
    Ok(Parsed {
        header,
        comments,
        data,
    })
}

fn num<T: std::str::FromStr>(tok: Option<&str>, ln: usize, ctx: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(ctx, format!("line {ln}: missing field")))?;
    tok.parse()
        .map_err(|_| Error::parse(ctx, format!("line {ln}: cannot parse '{tok}'")))
}

fn size_line(data: &[(usize, &str)], fields: usize, ctx: &str) -> Result<Vec<usize>> {
    let Some(&(ln, line)) = data.first() else {
        return Err(Error::parse(ctx, "missing size line"));
    };
    let mut it = line.split_whitespace();
    let dims = (0..fields).map(|_| num(it.next(), ln, ctx)).collect::<Result<Vec<usize>>>()?;
    if it.next().is_some() {
        return Err(Error::parse(ctx, format!("line {ln}: expected {fields} size fields")));
    }
    Ok(dims)
}

fn push_comments(out: &mut String, comments: &[String]) {
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "% {line}");
        }
    }
}

/// Coordinate real general text, one 1-based `i j v` entry per line in
/// row-major order.
pub fn format_coordinate(a: &CsrMatrix<f64>, comments: &[String]) -> String {
    let mut out = String::with_capacity(32 * a.nnz() + 128);
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    push_comments(&mut out, comments);
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.iter() {
        let _ = writeln!(out, "{} {} {v:e}", i + 1, j + 1);
    }
    out
}

pub fn write_coordinate(path: &Path, a: &CsrMatrix<f64>, comments: &[String]) -> Result<()> {
    write_text(path, &format_coordinate(a, comments))
}

/// Parses a real (or integer or pattern) coordinate matrix. Symmetric and
/// skew-symmetric storage is expanded; duplicate entries are summed.
pub fn parse_coordinate(text: &str, ctx: &str) -> Result<(CsrMatrix<f64>, Vec<String>)> {
    let p = split(text, ctx)?;
    if !p.header.coordinate {
        return Err(Error::parse(ctx, "expected coordinate format, found array"));
    }
    if matches!(p.header.field, Field::Complex) || p.header.symmetry == Symmetry::Hermitian {
        return Err(Error::parse(ctx, "complex coordinate matrices are not supported"));
    }
    let dims = size_line(&p.data, 3, ctx)?;
    let (m, n, nnz) = (dims[0], dims[1], dims[2]);
    let entries = &p.data[1..];
    if entries.len() != nnz {
        return Err(Error::parse(
            ctx,
            format!("size line declares {nnz} entries, found {}", entries.len()),
        ));
    }
    let mut trip = Vec::with_capacity(if p.header.symmetry == Symmetry::General { nnz } else { 2 * nnz });
    for &(ln, line) in entries {
        let mut it = line.split_whitespace();
        let i: usize = num(it.next(), ln, ctx)?;
        let j: usize = num(it.next(), ln, ctx)?;
        if i == 0 || j == 0 || i > m || j > n {
            return Err(Error::parse(ctx, format!("line {ln}: index ({i}, {j}) outside {m} × {n}")));
        }
        let v: f64 = match p.header.field {
            Field::Pattern => 1.0,
            _ => num(it.next(), ln, ctx)?,
        };
        let (i, j) = (i - 1, j - 1);
        trip.push((i, j, v));
        if i != j {
            match p.header.symmetry {
                Symmetry::Symmetric => trip.push((j, i, v)),
                Symmetry::SkewSymmetric => trip.push((j, i, -v)),
                _ => {}
            }
        }
    }
    let a = CsrMatrix::from_triplets(m, n, &trip).map_err(|e| Error::parse(ctx, e.to_string()))?;
    Ok((a, p.comments))
}

pub fn read_coordinate(path: &Path) -> Result<(CsrMatrix<f64>, Vec<String>)> {
    parse_coordinate(&read_text(path)?, &path.display().to_string())
}

/// Array complex general text, column-major, one `re im` pair per line.
pub fn format_array(a: MatRef<'_, c64>, comments: &[String]) -> String {
    let mut out = String::with_capacity(48 * a.nrows() * a.ncols() + 128);
    out.push_str("%%MatrixMarket matrix array complex general\n");
    push_comments(&mut out, comments);
    let _ = writeln!(out, "{} {}", a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
        }
    }
    out
}

pub fn write_array(path: &Path, a: MatRef<'_, c64>, comments: &[String]) -> Result<()> {
    write_text(path, &format_array(a, comments))
}

/// Parses a dense general array; real files load with zero imaginary part.
pub fn parse_array(text: &str, ctx: &str) -> Result<(Mat<c64>, Vec<String>)> {
    let p = split(text, ctx)?;
    if p.header.coordinate {
        return Err(Error::parse(ctx, "expected array format, found coordinate"));
    }
    if p.header.symmetry != Symmetry::General {
        return Err(Error::parse(ctx, "only general arrays are supported"));
    }
    let dims = size_line(&p.data, 2, ctx)?;
    let (m, n) = (dims[0], dims[1]);
    let entries = &p.data[1..];
    if entries.len() != m * n {
        return Err(Error::parse(
            ctx,
            format!("{m} × {n} array needs {} entries, found {}", m * n, entries.len()),
        ));
    }
    let mut a = Mat::<c64>::zeros(m, n);
    for (k, &(ln, line)) in entries.iter().enumerate() {
        let mut it = line.split_whitespace();
        let re: f64 = num(it.next(), ln, ctx)?;
        let im: f64 = match p.header.field {
            Field::Complex => num(it.next(), ln, ctx)?,
            _ => 0.0,
        };
        a[(k % m, k / m)] = c64::new(re, im);
    }
    Ok((a, p.comments))
}

pub fn read_array(path: &Path) -> Result<(Mat<c64>, Vec<String>)> {
    parse_array(&read_text(path)?, &path.display().to_string())
}
