//! Matrix Market reader and writer.
//!
//! Coordinate files are 1-based on disk. Symmetric files store one triangle
//! and are expanded to both in memory. Array files (column-major) are read
//! into [`DenseMatrix`] and are used for vectors and dense bases.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CsrMatrix, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MmData {
    Coordinate(CsrMatrix),
    Array(DenseMatrix),
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read<R: BufRead>(reader: R) -> Result<MmData> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix header"));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(1, format!("unsupported format '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        body.push((no, trimmed.to_string()));
    }
    let mut body = body.into_iter();
    let (size_line, size) = body.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(size_line, format!("bad size token '{t}'")))
        })
        .collect::<Result<_>>()?;

    if coordinate {
        let [rows, cols, nnz] = dims[..] else {
            return Err(parse_err(size_line, "coordinate size line needs rows cols nnz"));
        };
        if symmetry == MmSymmetry::Symmetric && rows != cols {
            return Err(parse_err(size_line, "symmetric matrix must be square"));
        }
        let mut triplets = Vec::with_capacity(2 * nnz);
        let mut count = 0;
        for (no, entry) in body {
            let t: Vec<&str> = entry.split_whitespace().collect();
            if t.len() != 3 {
                return Err(parse_err(no, "entry needs row col value"));
            }
            let i: usize = t[0].parse().map_err(|_| parse_err(no, "bad row index"))?;
            let j: usize = t[1].parse().map_err(|_| parse_err(no, "bad column index"))?;
            let v: f64 = t[2].parse().map_err(|_| parse_err(no, "bad value"))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(parse_err(no, format!("index ({i}, {j}) out of range")));
            }
            if !v.is_finite() {
                return Err(parse_err(no, "non-finite value"));
            }
            let (i, j) = (i - 1, j - 1);
            if symmetry == MmSymmetry::Symmetric && j > i {
                return Err(parse_err(no, "symmetric file must store the lower triangle"));
            }
            triplets.push((i, j, v));
            if symmetry == MmSymmetry::Symmetric && i != j {
                triplets.push((j, i, v));
            }
            count += 1;
        }
        if count != nnz {
            return Err(parse_err(size_line, format!("declared {nnz} entries, found {count}")));
        }
        CsrMatrix::from_triplets(rows, cols, &triplets)
            .map(MmData::Coordinate)
            .map_err(|e| parse_err(size_line, e.to_string()))
    } else {
        let [rows, cols] = dims[..] else {
            return Err(parse_err(size_line, "array size line needs rows cols"));
        };
        let mut values = Vec::with_capacity(rows * cols);
        for (no, entry) in body {
            for t in entry.split_whitespace() {
                let v: f64 = t.parse().map_err(|_| parse_err(no, format!("bad value '{t}'")))?;
                if !v.is_finite() {
                    return Err(parse_err(no, "non-finite value"));
                }
                values.push(v);
            }
        }
        let mut m = match symmetry {
            MmSymmetry::General => {
                if values.len() != rows * cols {
                    return Err(parse_err(
                        size_line,
                        format!("expected {} values, found {}", rows * cols, values.len()),
                    ));
                }
                DenseMatrix::from_column_major(rows, cols, values)?
            }
            MmSymmetry::Symmetric => {
                if rows != cols || values.len() != rows * (rows + 1) / 2 {
                    return Err(parse_err(size_line, "symmetric array must store the lower triangle"));
                }
                let mut m = DenseMatrix::zeros(rows, cols);
                let mut it = values.into_iter();
                for j in 0..cols {
                    for i in j..rows {
                        m[(i, j)] = it.next().unwrap_or_default();
                    }
                }
                m
            }
        };
        if symmetry == MmSymmetry::Symmetric {
            for j in 0..cols {
                for i in j + 1..rows {
                    m[(j, i)] = m[(i, j)];
                }
            }
        }
        Ok(MmData::Array(m))
    }
}

pub fn read_file(path: impl AsRef<Path>) -> Result<MmData> {
    read(BufReader::new(File::open(path)?))
}

/// Reads a sparse matrix; array files are converted, keeping nonzeros.
pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    Ok(match read_file(path)? {
        MmData::Coordinate(m) => m,
        MmData::Array(d) => CsrMatrix::from_dense(&d, 0.0),
    })
}

/// Reads a vector stored as an `n x 1` array or coordinate file.
pub fn read_vector_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let m = match read_file(path)? {
        MmData::Coordinate(m) => m.to_dense(),
        MmData::Array(d) => d,
    };
    if m.cols() != 1 {
        return Err(parse_err(2, format!("expected a single column, found {}", m.cols())));
    }
    Ok(m.col(0).to_vec())
}

/// Writes a coordinate file. With [`MmSymmetry::Symmetric`] only the lower
/// triangle is written; the caller guarantees the matrix is symmetric.
pub fn write_coordinate<W: Write>(mut w: W, m: &CsrMatrix, symmetry: MmSymmetry, comments: &[String]) -> Result<()> {
    let sym = match symmetry {
        MmSymmetry::General => "general",
        MmSymmetry::Symmetric => "symmetric",
    };
    writeln!(w, "%%MatrixMarket matrix coordinate real {sym}")?;
    for c in comments {
        writeln!(w, "% {c}")?;
    }
    let keep = |i: usize, j: usize| symmetry == MmSymmetry::General || j <= i;
    let nnz = (0..m.nrows())
        .map(|i| m.row(i).0.iter().filter(|&&j| keep(i, j)).count())
        .sum::<usize>();
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), nnz)?;
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if keep(i, j) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_array<W: Write>(mut w: W, m: &DenseMatrix, comments: &[String]) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    for c in comments {
        writeln!(w, "% {c}")?;
    }
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for v in m.data() {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coordinate_file(
    path: impl AsRef<Path>,
    m: &CsrMatrix,
    symmetry: MmSymmetry,
    comments: &[String],
) -> Result<()> {
    write_coordinate(BufWriter::new(File::create(path)?), m, symmetry, comments)
}

pub fn write_vector_file(path: impl AsRef<Path>, v: &[f64], comments: &[String]) -> Result<()> {
    let m = DenseMatrix::from_column_major(v.len(), 1, v.to_vec())?;
    write_array(BufWriter::new(File::create(path)?), &m, comments)
}
