use super::{DiagonalVector, OperatorError, SymmetricOperator};

/// Dense symmetric matrix stored as its packed lower triangle, row by row:
/// `a_00, a_10, a_11, a_20, a_21, a_22, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    lower: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl DenseSymmetric {
    pub fn from_lower_packed(n: usize, lower: Vec<f64>) -> Result<Self, OperatorError> {
        if n == 0 {
            return Err(OperatorError::DimensionTooSmall { min: 1, found: 0 });
        }
        let expected = n * (n + 1) / 2;
        if lower.len() != expected {
            return Err(OperatorError::DimensionMismatch {
                expected,
                found: lower.len(),
            });
        }
        Ok(Self { n, lower })
    }

    /// Builds from full rows, rejecting non-square or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, OperatorError> {
        let n = rows.len();
        if n == 0 {
            return Err(OperatorError::DimensionTooSmall { min: 1, found: 0 });
        }
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(OperatorError::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for j in 0..=i {
                if !entries_match(rows[j][i], row[j]) {
                    return Err(OperatorError::Asymmetric {
                        line: 0,
                        row: j,
                        col: i,
                        upper: rows[j][i],
                        lower: row[j],
                    });
                }
                lower.push(row[j]);
            }
        }
        Ok(Self { n, lower })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, OperatorError> {
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(f(i, j));
            }
        }
        Self::from_lower_packed(n, lower)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, OperatorError> {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 }).expect("identity of positive size")
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| 0.0).expect("zero matrix of positive size")
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed_index(i, j)]
    }

    pub fn stored_len(&self) -> usize {
        self.lower.len()
    }

    pub fn lower_packed(&self) -> &[f64] {
        &self.lower
    }

    /// Row `i` (equivalently column `i`) as a full vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    pub fn diagonal(&self) -> DiagonalVector {
        DiagonalVector::new((0..self.n).map(|i| self.get(i, i)).collect())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == 0.0))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            n: self.n,
            lower: self.lower.iter().map(|a| alpha * a).collect(),
        }
    }

    /// `S^2` for symmetric `S`.
    pub fn squared(&self) -> Self {
        let rows = self.to_rows();
        Self::from_fn(self.n, |i, j| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum())
            .expect("same dimension")
    }

    /// `||A||_inf`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub(super) fn entries_match(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= 1e-12 * scale
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut k = 0;
        for i in 0..self.n {
            let vi = v[i];
            let mut acc = 0.0;
            for j in 0..i {
                let a = self.lower[k];
                acc += a * v[j];
                out[j] += a * vi;
                k += 1;
            }
            out[i] += acc + self.lower[k] * vi;
            k += 1;
        }
    }

    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.n && j < self.n).then(|| self.get(i, j))
    }

    fn exact_diag(&self) -> Result<DiagonalVector, OperatorError> {
        Ok(self.diagonal())
    }

    fn to_dense(&self) -> Result<DenseSymmetric, OperatorError> {
        Ok(self.clone())
    }
}

/// Symmetric matrix in coordinate form: lower-triangle triplets sorted by
/// `(row, col)`, duplicates already summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Triplets may name either triangle; `(i, j)` and `(j, i)` address the
    /// same stored entry and duplicates are summed.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, OperatorError> {
        if n == 0 {
            return Err(OperatorError::DimensionTooSmall { min: 1, found: 0 });
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, a) in triplets {
            if i >= n || j >= n {
                return Err(OperatorError::DimensionMismatch {
                    expected: n,
                    found: i.max(j) + 1,
                });
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            entries.push((r, c, a));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut out = Self {
            n,
            rows: Vec::with_capacity(entries.len()),
            cols: Vec::with_capacity(entries.len()),
            values: Vec::with_capacity(entries.len()),
        };
        for (r, c, a) in entries {
            if out.rows.last() == Some(&r) && out.cols.last() == Some(&c) {
                *out.values.last_mut().unwrap() += a;
            } else {
                out.rows.push(r);
                out.cols.push(c);
                out.values.push(a);
            }
        }
        Ok(out)
    }

    pub fn nnz_stored(&self) -> usize {
        self.values.len()
    }
}

impl SymmetricOperator for SparseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for ((&r, &c), &a) in self.rows.iter().zip(&self.cols).zip(&self.values) {
            out[r] += a * v[c];
            if r != c {
                out[c] += a * v[r];
            }
        }
    }

    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        if i >= self.n || j >= self.n {
            return None;
        }
        let key = if i >= j { (i, j) } else { (j, i) };
        let start = self.rows.partition_point(|&r| r < key.0);
        let end = self.rows.partition_point(|&r| r <= key.0);
        let found = self.cols[start..end].binary_search(&key.1).ok();
        Some(found.map_or(0.0, |k| self.values[start + k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_vector(n: usize, state: &mut u64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn packed_storage_size() {
        let a = DenseSymmetric::zeros(7);
        assert_eq!(a.stored_len(), 7 * 8 / 2);
        let rows = a.to_rows();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(rows[i][j], rows[j][i]);
            }
        }
    }

    #[test]
    fn dense_apply_matches_naive_product() {
        let mut s = 3;
        let n = 9;
        let vals = lcg_vector(n * n, &mut s);
        let a = DenseSymmetric::from_fn(n, |i, j| vals[i * n + j]).unwrap();
        let v = lcg_vector(n, &mut s);
        let y = a.apply(&v).unwrap();
        let rows = a.to_rows();
        for i in 0..n {
            let naive: f64 = rows[i].iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!((y[i] - naive).abs() <= 1e-14 * (1.0 + naive.abs()));
        }
    }

    #[test]
    fn dense_symmetry_on_random_pairs() {
        let mut s = 11;
        let n = 30;
        let vals = lcg_vector(n * n, &mut s);
        let a = DenseSymmetric::from_fn(n, |i, j| vals[i * n + j]).unwrap();
        for _ in 0..100 {
            let u = lcg_vector(n, &mut s);
            let v = lcg_vector(n, &mut s);
            let au = a.apply(&u).unwrap();
            let av = a.apply(&v).unwrap();
            let lhs: f64 = u.iter().zip(&av).map(|(x, y)| x * y).sum();
            let rhs: f64 = au.iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
        }
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        let err = DenseSymmetric::from_rows(&[vec![1.0, 1.0], vec![1.5, 1.0]]).unwrap_err();
        assert!(matches!(err, OperatorError::Asymmetric { .. }));
        let err = DenseSymmetric::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, OperatorError::NotSquare { .. }));
    }

    #[test]
    fn sparse_matches_dense() {
        let trip = vec![(0, 0, 2.0), (1, 0, 1.0), (2, 2, 4.0), (0, 2, -0.5), (2, 0, 0.25), (1, 1, 3.0)];
        let sp = SparseSymmetric::from_triplets(3, trip).unwrap();
        assert_eq!(sp.nnz_stored(), 5);
        assert_eq!(sp.entry(0, 2), Some(-0.25));
        assert_eq!(sp.entry(2, 1), Some(0.0));
        let dense = sp.to_dense().unwrap();
        let v = [1.0, -2.0, 0.5];
        let ys = sp.apply(&v).unwrap();
        let yd = dense.apply(&v).unwrap();
        for (a, b) in ys.iter().zip(&yd) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn norm_inf_and_square() {
        let a = DenseSymmetric::from_rows(&[vec![1.0, -2.0], vec![-2.0, 0.5]]).unwrap();
        assert_eq!(a.norm_inf(), 3.0);
        let sq = a.squared();
        assert_eq!(sq.to_rows(), vec![vec![5.0, -3.0], vec![-3.0, 4.25]]);
        assert!(!a.is_diagonal());
        assert!(DenseSymmetric::from_diagonal(&[1.0, 2.0]).unwrap().is_diagonal());
    }
}
