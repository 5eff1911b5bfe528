//! Matrix Market reader for real symmetric matrices.
//!
//! Coordinate and array layouts are accepted with `real`, `integer` or
//! (coordinate only) `pattern` fields, and `symmetric` or `general` symmetry.
//! A `general` file must be symmetric entry by entry to relative tolerance
//! 1e-12. Duplicate coordinate entries are summed.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::dense::entries_match;
use super::{DenseSymmetric, DiagonalVector, OperatorError, SparseSymmetric, SymmetricOperator};

/// Largest dimension stored densely; bigger matrices use coordinate storage.
pub const DENSE_DIMENSION_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedMatrix {
    Dense(DenseSymmetric),
    Sparse(SparseSymmetric),
}

impl LoadedMatrix {
    pub fn as_dense(&self) -> Option<&DenseSymmetric> {
        match self {
            LoadedMatrix::Dense(d) => Some(d),
            LoadedMatrix::Sparse(_) => None,
        }
    }

    pub fn into_dense(self) -> Result<DenseSymmetric, OperatorError> {
        match self {
            LoadedMatrix::Dense(d) => Ok(d),
            LoadedMatrix::Sparse(s) => s.to_dense(),
        }
    }
}

impl SymmetricOperator for LoadedMatrix {
    fn dim(&self) -> usize {
        match self {
            LoadedMatrix::Dense(d) => d.dim(),
            LoadedMatrix::Sparse(s) => s.dim(),
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            LoadedMatrix::Dense(d) => d.apply_into(v, out),
            LoadedMatrix::Sparse(s) => s.apply_into(v, out),
        }
    }

    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        match self {
            LoadedMatrix::Dense(d) => d.entry(i, j),
            LoadedMatrix::Sparse(s) => s.entry(i, j),
        }
    }

    fn exact_diag(&self) -> Result<DiagonalVector, OperatorError> {
        match self {
            LoadedMatrix::Dense(d) => d.exact_diag(),
            LoadedMatrix::Sparse(s) => s.exact_diag(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<LoadedMatrix, OperatorError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| OperatorError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_matrix_market(file)
}

fn parse_err(line: usize, message: impl Into<String>) -> OperatorError {
    OperatorError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<(Layout, Field, Symmetry), OperatorError> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(line_no, "expected `%%MatrixMarket matrix <layout> <field> <symmetry>` header"));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(line_no, format!("unsupported object `{}`", tokens[1])));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(line_no, format!("unsupported layout `{other}`"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(parse_err(line_no, format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(line_no, format!("unsupported symmetry `{other}`"))),
    };
    Ok((layout, field, symmetry))
}

fn parse_index(line_no: usize, token: Option<&str>, n: usize) -> Result<usize, OperatorError> {
    let tok = token.ok_or_else(|| parse_err(line_no, "missing index"))?;
    let idx: usize = tok
        .parse()
        .map_err(|_| parse_err(line_no, format!("invalid index `{tok}`")))?;
    if idx == 0 || idx > n {
        return Err(parse_err(line_no, format!("index {idx} outside 1..={n}")));
    }
    Ok(idx - 1)
}

fn parse_value(line_no: usize, token: Option<&str>, field: Field) -> Result<f64, OperatorError> {
    if field == Field::Pattern {
        return Ok(1.0);
    }
    let tok = token.ok_or_else(|| parse_err(line_no, "missing value"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line_no, format!("invalid value `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line_no, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

/// Parses Matrix Market text from any reader.
pub fn read_matrix_market(reader: impl Read) -> Result<LoadedMatrix, OperatorError> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let io_err = |e: std::io::Error| OperatorError::Io {
        path: "<reader>".into(),
        message: e.to_string(),
    };

    let (header_no, header) = match lines.next() {
        Some((no, l)) => (no, l.map_err(io_err)?),
        None => return Err(parse_err(1, "empty input")),
    };
    let (layout, field, symmetry) = parse_header(header_no, &header)?;

    // data lines with comments and blanks skipped
    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(s) => {
            let t = s.trim();
            (!t.is_empty() && !t.starts_with('%')).then(|| Ok((no, t.to_string())))
        }
        Err(e) => Some(Err(io_err(e))),
    });

    let (size_no, size_line) = data
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(header_no + 1, "missing size line"))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(size_no, format!("invalid size `{t}`"))))
        .collect::<Result<_, _>>()?;
    let expected_sizes = if layout == Layout::Coordinate { 3 } else { 2 };
    if sizes.len() != expected_sizes {
        return Err(parse_err(size_no, format!("expected {expected_sizes} size fields, found {}", sizes.len())));
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    if rows != cols {
        return Err(OperatorError::NotSquare { rows, cols });
    }
    let n = rows;
    if n == 0 {
        return Err(parse_err(size_no, "matrix dimension must be positive"));
    }

    // (row, col) -> (value, last line that touched it)
    let mut entries: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    let mut last_line = size_no;

    match layout {
        Layout::Coordinate => {
            let nnz = sizes[2];
            let mut count = 0usize;
            for item in data {
                let (no, line) = item?;
                last_line = no;
                count += 1;
                if count > nnz {
                    return Err(parse_err(no, format!("more than the declared {nnz} entries")));
                }
                let mut tok = line.split_whitespace();
                let i = parse_index(no, tok.next(), n)?;
                let j = parse_index(no, tok.next(), n)?;
                let v = parse_value(no, tok.next(), field)?;
                if tok.next().is_some() {
                    return Err(parse_err(no, "trailing tokens after entry"));
                }
                let key = if symmetry == Symmetry::Symmetric && i < j { (j, i) } else { (i, j) };
                let slot = entries.entry(key).or_insert((0.0, no));
                slot.0 += v;
                slot.1 = no;
            }
            if count < nnz {
                return Err(parse_err(last_line, format!("expected {nnz} entries, found {count}")));
            }
        }
        Layout::Array => {
            // column-major; symmetric stores the lower triangle only
            let positions: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..n).flat_map(|j| (j..n).map(move |i| (i, j))).collect(),
            };
            let mut pos = positions.iter();
            for item in data {
                let (no, line) = item?;
                last_line = no;
                for tok in line.split_whitespace() {
                    let &(i, j) = pos
                        .next()
                        .ok_or_else(|| parse_err(no, format!("more than the expected {} values", positions.len())))?;
                    let v = parse_value(no, Some(tok), field)?;
                    if v != 0.0 {
                        entries.insert((i, j), (v, no));
                    }
                }
            }
            if pos.next().is_some() {
                return Err(parse_err(last_line, format!("expected {} values", positions.len())));
            }
        }
    }

    let mut triplets = Vec::with_capacity(entries.len());
    match symmetry {
        Symmetry::Symmetric => {
            triplets.extend(entries.iter().map(|(&(i, j), &(v, _))| (i, j, v)));
        }
        Symmetry::General => {
            for (&(i, j), &(v, line)) in &entries {
                if i == j {
                    triplets.push((i, j, v));
                    continue;
                }
                let (other, other_line) = entries.get(&(j, i)).copied().unwrap_or((0.0, line));
                if !entries_match(v, other) {
                    let (upper, lower) = if i < j { (v, other) } else { (other, v) };
                    return Err(OperatorError::Asymmetric {
                        line: line.max(other_line),
                        row: i.min(j) + 1,
                        col: i.max(j) + 1,
                        upper,
                        lower,
                    });
                }
                if i > j {
                    triplets.push((i, j, v));
                }
            }
        }
    }

    if n <= DENSE_DIMENSION_LIMIT {
        let mut lower = vec![0.0; n * (n + 1) / 2];
        for (i, j, v) in triplets {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            lower[r * (r + 1) / 2 + c] += v;
        }
        Ok(LoadedMatrix::Dense(DenseSymmetric::from_lower_packed(n, lower)?))
    } else {
        Ok(LoadedMatrix::Sparse(SparseSymmetric::from_triplets(n, triplets)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<LoadedMatrix, OperatorError> {
        read_matrix_market(text.as_bytes())
    }

    #[test]
    fn symmetric_coordinate() {
        let m = read("%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2\n2 1 1\n2 2 3\n").unwrap();
        let d = m.as_dense().unwrap();
        assert_eq!(d.to_rows(), vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
    }

    #[test]
    fn non_square_rejected() {
        let err = read("%%MatrixMarket matrix coordinate real general\n3 4 0\n").unwrap_err();
        assert_eq!(err, OperatorError::NotSquare { rows: 3, cols: 4 });
    }

    #[test]
    fn asymmetric_general_rejected_with_line() {
        let err = read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1\n2 1 1.5\n").unwrap_err();
        match err {
            OperatorError::Asymmetric { line, row, col, upper, lower } => {
                assert_eq!(line, 4);
                assert_eq!((row, col), (1, 2));
                assert_eq!((upper, lower), (1.0, 1.5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn general_symmetric_entries_accepted_and_duplicates_summed() {
        let m = read(
            "%%MatrixMarket matrix coordinate real general\n3 3 5\n1 2 0.5\n2 1 0.25\n2 1 0.25\n3 3 4\n1 1 1\n",
        )
        .unwrap();
        assert_eq!(
            m.into_dense().unwrap().to_rows(),
            vec![vec![1.0, 0.5, 0.0], vec![0.5, 0.0, 0.0], vec![0.0, 0.0, 4.0]]
        );
    }

    #[test]
    fn array_layouts() {
        let sym = read("%%MatrixMarket matrix array real symmetric\n2 2\n2\n1\n3\n").unwrap();
        assert_eq!(sym.into_dense().unwrap().to_rows(), vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
        let gen = read("%%MatrixMarket matrix array integer general\n2 2\n2 1\n1 3\n").unwrap();
        assert_eq!(gen.into_dense().unwrap().to_rows(), vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
        let err = read("%%MatrixMarket matrix array real general\n2 2\n2 1\n5 3\n").unwrap_err();
        assert!(matches!(err, OperatorError::Asymmetric { line: 4, .. }));
    }

    #[test]
    fn malformed_inputs_report_line() {
        let err = read("%%MatrixMarket matrix coordinate complex symmetric\n1 1 1\n1 1 1 0\n").unwrap_err();
        assert!(matches!(err, OperatorError::Parse { line: 1, .. }));
        let err = read("garbage\n").unwrap_err();
        assert!(matches!(err, OperatorError::Parse { line: 1, .. }));
        let err = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n3 1 1\n").unwrap_err();
        assert!(matches!(err, OperatorError::Parse { line: 4, .. }));
        let err = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 2 x\n").unwrap_err();
        assert!(matches!(err, OperatorError::Parse { line: 4, .. }));
        let err = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n").unwrap_err();
        assert!(matches!(err, OperatorError::Parse { .. }));
    }

    #[test]
    fn pattern_entries_are_ones() {
        let m = read("%%MatrixMarket matrix coordinate pattern symmetric\n2 2 2\n1 1\n2 1\n").unwrap();
        assert_eq!(m.into_dense().unwrap().to_rows(), vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn large_dimension_uses_sparse_storage() {
        let n = DENSE_DIMENSION_LIMIT + 1;
        let text = format!("%%MatrixMarket matrix coordinate real symmetric\n{n} {n} 2\n1 1 2\n{n} 1 1\n");
        let m = read(&text).unwrap();
        assert!(matches!(m, LoadedMatrix::Sparse(_)));
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        let y = m.apply(&v).unwrap();
        assert_eq!((y[0], y[n - 1]), (2.0, 1.0));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_matrix_market("/definitely/not/here.mtx"),
            Err(OperatorError::Io { .. })
        ));
    }
}
