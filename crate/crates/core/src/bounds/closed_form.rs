use crate::numeric::compensated_sum;
use crate::operators::{SymmetricOperator, TestMatrix, TestMatrixKind};

use super::NormwiseConstants;

/// Rademacher (`s = 1`) normwise constants of a test matrix from its
/// parameterization, without touching matrix entries.
pub fn closed_form_constants(m: &TestMatrix) -> NormwiseConstants {
    let n = m.dim() as f64;
    let theta = m.theta();
    let (k1, k2, norm_da, d) = match m.kind() {
        TestMatrixKind::IdentityPlusRankOne => ((n - 1.0) * theta * theta, (n - 1.0) * theta, 1.0 + theta, n),
        TestMatrixKind::DecayingRankOne => {
            let x = m.decay_vector();
            let nx = m.decay_norm_sq();
            let x1 = x[0];
            let p1 = x1 * x1 / nx;
            let tail = compensated_sum(x[1..].iter().copied());
            let spread = compensated_sum(x.iter().map(|v| {
                let p = v * v / nx;
                p * (1.0 - p)
            }));
            (p1 * (1.0 - p1), x1 * tail / nx, p1, spread / (p1 * (1.0 - p1)))
        }
        TestMatrixKind::TridiagToeplitz => (2.0 * theta * theta, 2.0 * theta, 1.0, n - 1.0),
    };
    NormwiseConstants {
        s: 1.0,
        k1,
        k2,
        d,
        delta1: k1 / (norm_da * norm_da),
        delta2: k2 / norm_da,
        norm_da,
    }
}
