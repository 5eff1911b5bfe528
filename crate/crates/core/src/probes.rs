//! Seeded probe vectors.
//!
//! Randomness is addressed by `(seed, counter)`: probe `k` of a run with seed
//! `s` is drawn from the ChaCha8 stream `k` keyed by `s`, so any worker can
//! regenerate any probe without coordination and results do not depend on
//! scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("invalid sparsity parameter s = {0}: need s = 1 or s >= 2 (finite)")]
    InvalidSparsity(f64),
    #[error("cannot parse probe distribution `{0}`")]
    Parse(String),
}

/// Sparsity parameter of a sparse Rademacher law. Only `s = 1` and real
/// `s >= 2` are representable: the bounds need integer `s` on `(1, 2)` and
/// there is none.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Sparsity(f64);

impl Sparsity {
    pub fn new(s: f64) -> Result<Self, ProbeError> {
        if s.is_finite() && (s == 1.0 || s >= 2.0) {
            Ok(Self(s))
        } else {
            Err(ProbeError::InvalidSparsity(s))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeDistribution {
    /// `±1` with probability 1/2 each.
    Rademacher,
    /// `{-√s, 0, √s}` with probabilities `{1/(2s), 1 - 1/s, 1/(2s)}`.
    SparseRademacher(Sparsity),
    /// Standard normal entries.
    Gaussian,
}

impl ProbeDistribution {
    pub fn sparse_rademacher(s: f64) -> Result<Self, ProbeError> {
        Sparsity::new(s).map(ProbeDistribution::SparseRademacher)
    }

    /// Sparsity parameter of the Rademacher family; `None` for Gaussian.
    pub fn sparsity(&self) -> Option<f64> {
        match self {
            ProbeDistribution::Rademacher => Some(1.0),
            ProbeDistribution::SparseRademacher(s) => Some(s.get()),
            ProbeDistribution::Gaussian => None,
        }
    }

    /// Analytic per-entry moments.
    pub fn moments(&self) -> ProbeMoments {
        let fourth_moment = match self {
            ProbeDistribution::Rademacher => 1.0,
            ProbeDistribution::SparseRademacher(s) => s.get(),
            ProbeDistribution::Gaussian => 3.0,
        };
        ProbeMoments {
            mean: 0.0,
            variance: 1.0,
            fourth_moment,
        }
    }

    /// Fills `out` with i.i.d. entries drawn from `rng`.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            ProbeDistribution::Rademacher => fill_sparse(1.0, rng, out),
            ProbeDistribution::SparseRademacher(s) => fill_sparse(s.get(), rng, out),
            ProbeDistribution::Gaussian => {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
            }
        }
    }
}

fn fill_sparse<R: Rng + ?Sized>(s: f64, rng: &mut R, out: &mut [f64]) {
    let tail = 0.5 / s;
    let magnitude = s.sqrt();
    for o in out.iter_mut() {
        let u: f64 = rng.random();
        *o = if u < tail {
            -magnitude
        } else if u >= 1.0 - tail {
            magnitude
        } else {
            0.0
        };
    }
}

impl fmt::Display for ProbeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeDistribution::Rademacher => f.write_str("rademacher"),
            ProbeDistribution::SparseRademacher(s) => write!(f, "sparse:{}", s.get()),
            ProbeDistribution::Gaussian => f.write_str("gaussian"),
        }
    }
}

impl FromStr for ProbeDistribution {
    type Err = ProbeError;

    /// Accepts `rademacher`, `gaussian` and `sparse:<s>`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "rademacher" => Ok(ProbeDistribution::Rademacher),
            "gaussian" => Ok(ProbeDistribution::Gaussian),
            _ => {
                let s = text
                    .strip_prefix("sparse:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| ProbeError::Parse(text.to_string()))?;
                ProbeDistribution::sparse_rademacher(s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeMoments {
    pub mean: f64,
    pub variance: f64,
    pub fourth_moment: f64,
}

pub fn probe_moments(dist: &ProbeDistribution) -> ProbeMoments {
    dist.moments()
}

/// Position in the counter-addressed random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    pub seed: u64,
    pub counter: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn at(seed: u64, counter: u64) -> Self {
        Self { seed, counter }
    }

    /// The generator for the current counter's stream.
    pub fn stream(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.counter);
        rng
    }

    pub fn next(self) -> Self {
        Self {
            seed: self.seed,
            counter: self.counter + 1,
        }
    }

    /// Splits into two states covering disjoint counter ranges:
    /// `[counter, counter + len)` stays here, the rest starts at the returned one.
    pub fn split_at(self, len: u64) -> (Self, Self) {
        (self, Self::at(self.seed, self.counter + len))
    }
}

/// Draws one probe from the stream at `state` and returns the next state.
pub fn sample_probe(dist: &ProbeDistribution, n: usize, state: RngState) -> (Vec<f64>, RngState) {
    let mut out = vec![0.0; n];
    dist.fill(&mut state.stream(), &mut out);
    (out, state.next())
}

/// SplitMix64 finalizer, used to derive independent seeds from structured keys.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic seed for a tuple of coordinates below `base`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
