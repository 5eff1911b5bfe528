use std::fmt;
use std::str::FromStr;

use super::{DenseSymmetric, DiagonalVector, OperatorError, SymmetricOperator};
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestMatrixKind {
    /// `I + θ e eᵀ` with `e` the all-ones vector.
    IdentityPlusRankOne,
    /// `x xᵀ / ||x||²` with `x_j = exp(-j (1 - θ))`, `j = 1..n`.
    DecayingRankOne,
    /// Unit diagonal, constant off-diagonal `θ`.
    TridiagToeplitz,
}

impl TestMatrixKind {
    pub const ALL: [TestMatrixKind; 3] = [
        TestMatrixKind::IdentityPlusRankOne,
        TestMatrixKind::DecayingRankOne,
        TestMatrixKind::TridiagToeplitz,
    ];

    /// Documented parameter range `[lo, hi]`.
    pub fn theta_range(self) -> (f64, f64) {
        match self {
            TestMatrixKind::IdentityPlusRankOne => (0.01, 0.1),
            TestMatrixKind::DecayingRankOne | TestMatrixKind::TridiagToeplitz => (0.1, 1.0),
        }
    }

    /// `count` equally spaced parameters spanning the documented range.
    pub fn theta_grid(self, count: usize) -> Vec<f64> {
        let (lo, hi) = self.theta_range();
        match count {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..count)
                .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                .collect(),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            TestMatrixKind::IdentityPlusRankOne => "rank1",
            TestMatrixKind::DecayingRankOne => "decay",
            TestMatrixKind::TridiagToeplitz => "tridiag",
        }
    }
}

impl fmt::Display for TestMatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for TestMatrixKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rank1" | "identity-plus-rank-one" => Ok(TestMatrixKind::IdentityPlusRankOne),
            "decay" | "decaying-rank-one" => Ok(TestMatrixKind::DecayingRankOne),
            "tridiag" | "tridiag-toeplitz" => Ok(TestMatrixKind::TridiagToeplitz),
            other => Err(format!(
                "unknown test matrix kind `{other}` (expected rank1, decay or tridiag)"
            )),
        }
    }
}

/// One of the three parameterized test families, applied in O(n) without
/// forming the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TestMatrix {
    kind: TestMatrixKind,
    n: usize,
    theta: f64,
    /// `x` for [`TestMatrixKind::DecayingRankOne`], empty otherwise.
    x: Vec<f64>,
    /// `||x||²`, summed with compensation.
    x_norm_sq: f64,
}

/// Builds a test matrix. Parameters outside the documented range only log a
/// warning, since the formulas stay well defined.
pub fn make_test_matrix(kind: TestMatrixKind, n: usize, theta: f64) -> Result<TestMatrix, OperatorError> {
    TestMatrix::new(kind, n, theta)
}

impl TestMatrix {
    pub fn new(kind: TestMatrixKind, n: usize, theta: f64) -> Result<Self, OperatorError> {
        if n < 2 {
            return Err(OperatorError::DimensionTooSmall { min: 2, found: n });
        }
        let (lo, hi) = kind.theta_range();
        if !(lo..=hi).contains(&theta) {
            log::warn!("theta = {theta} is outside the documented range [{lo}, {hi}] for {kind}");
        }
        let (x, x_norm_sq) = match kind {
            TestMatrixKind::DecayingRankOne => {
                let x: Vec<f64> = (1..=n).map(|j| (-(j as f64) * (1.0 - theta)).exp()).collect();
                let norm_sq = compensated_sum(x.iter().map(|v| v * v));
                (x, norm_sq)
            }
            _ => (Vec::new(), 0.0),
        };
        Ok(Self {
            kind,
            n,
            theta,
            x,
            x_norm_sq,
        })
    }

    pub fn kind(&self) -> TestMatrixKind {
        self.kind
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The decaying vector `x`; empty for the other families.
    pub fn decay_vector(&self) -> &[f64] {
        &self.x
    }

    pub fn decay_norm_sq(&self) -> f64 {
        self.x_norm_sq
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            TestMatrixKind::IdentityPlusRankOne => {
                if i == j {
                    1.0 + self.theta
                } else {
                    self.theta
                }
            }
            TestMatrixKind::DecayingRankOne => self.x[i] * self.x[j] / self.x_norm_sq,
            TestMatrixKind::TridiagToeplitz => {
                if i == j {
                    1.0
                } else if i.abs_diff(j) == 1 {
                    self.theta
                } else {
                    0.0
                }
            }
        }
    }
}

impl SymmetricOperator for TestMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self.kind {
            TestMatrixKind::IdentityPlusRankOne => {
                let s = self.theta * v.iter().sum::<f64>();
                for (o, vi) in out.iter_mut().zip(v) {
                    *o = vi + s;
                }
            }
            TestMatrixKind::DecayingRankOne => {
                let proj: f64 = self.x.iter().zip(v).map(|(a, b)| a * b).sum();
                for (o, xi) in out.iter_mut().zip(&self.x) {
                    *o = xi * proj / self.x_norm_sq;
                }
            }
            TestMatrixKind::TridiagToeplitz => {
                let n = self.n;
                for i in 0..n {
                    let mut off = 0.0;
                    if i > 0 {
                        off += v[i - 1];
                    }
                    if i + 1 < n {
                        off += v[i + 1];
                    }
                    out[i] = v[i] + self.theta * off;
                }
            }
        }
    }

    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.n && j < self.n).then(|| self.value(i, j))
    }

    fn exact_diag(&self) -> Result<DiagonalVector, OperatorError> {
        let values = match self.kind {
            TestMatrixKind::IdentityPlusRankOne => vec![1.0 + self.theta; self.n],
            TestMatrixKind::DecayingRankOne => self.x.iter().map(|xi| xi * xi / self.x_norm_sq).collect(),
            TestMatrixKind::TridiagToeplitz => vec![1.0; self.n],
        };
        Ok(DiagonalVector::new(values))
    }

    fn to_dense(&self) -> Result<DenseSymmetric, OperatorError> {
        DenseSymmetric::from_fn(self.n, |i, j| self.value(i, j))
    }
}
