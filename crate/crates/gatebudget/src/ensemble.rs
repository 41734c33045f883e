//! Initial motional state descriptions and their number moments.

use crate::error::{Error, Result};

/// Tail probability allowed past the truncation point.
pub const TAIL_LIMIT: f64 = 1e-10;

/// Initial state of one motional mode: a definite Fock level, a thermal
/// distribution, or an explicit probability list.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionalEnsemble {
    FixedN { n: usize },
    Thermal { nbar: f64 },
    Explicit { probs: Vec<(usize, f64)> },
}

/// First three number moments (n̄, n̄², n̄³ averaged over the distribution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumberMoments {
    pub nbar: f64,
    pub nbar2: f64,
    pub nbar3: f64,
}

impl MotionalEnsemble {
    pub fn fixed(n: usize) -> Self {
        MotionalEnsemble::FixedN { n }
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        if !nbar.is_finite() || nbar < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "thermal nbar must be finite and >= 0, got {nbar}"
            )));
        }
        Ok(MotionalEnsemble::Thermal { nbar })
    }

    pub fn explicit(probs: Vec<(usize, f64)>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("explicit ensemble has no entries".into()));
        }
        let total: f64 = probs.iter().map(|&(_, p)| p).sum();
        if probs.iter().any(|&(_, p)| !(0.0..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, must be 1 within 1e-10"
            )));
        }
        Ok(MotionalEnsemble::Explicit { probs })
    }

    /// Probability list truncated at `max_n`, renormalized so it sums to 1
    /// exactly. Errors if the discarded tail exceeds [`TAIL_LIMIT`].
    pub fn probabilities(&self, max_n: usize) -> Result<Vec<(usize, f64)>> {
        self.probabilities_with_limit(max_n, TAIL_LIMIT)
    }

    /// As [`MotionalEnsemble::probabilities`] with a caller-chosen tail
    /// limit (the sweep harness tolerates 1e-6 of uncovered mass).
    pub fn probabilities_with_limit(
        &self,
        max_n: usize,
        tail_limit: f64,
    ) -> Result<Vec<(usize, f64)>> {
        match self {
            MotionalEnsemble::FixedN { n } => {
                if *n > max_n {
                    return Err(Error::TruncationTooSmall {
                        max_n,
                        tail: 1.0,
                        limit: tail_limit,
                    });
                }
                Ok(vec![(*n, 1.0)])
            }
            MotionalEnsemble::Thermal { nbar } => {
                if *nbar == 0.0 {
                    return Ok(vec![(0, 1.0)]);
                }
                // P_n = n̄^n / (n̄+1)^{n+1}; tail past m is (n̄/(n̄+1))^{m+1}.
                let r = nbar / (nbar + 1.0);
                let tail = r.powi(max_n as i32 + 1);
                if tail > tail_limit {
                    return Err(Error::TruncationTooSmall { max_n, tail, limit: tail_limit });
                }
                let mut probs = Vec::with_capacity(max_n + 1);
                let mut p = 1.0 / (nbar + 1.0);
                let mut total = 0.0;
                for n in 0..=max_n {
                    probs.push((n, p));
                    total += p;
                    p *= r;
                }
                for entry in &mut probs {
                    entry.1 /= total;
                }
                Ok(probs)
            }
            MotionalEnsemble::Explicit { probs } => {
                let tail: f64 =
                    probs.iter().filter(|&&(n, _)| n > max_n).map(|&(_, p)| p).sum();
                if tail > tail_limit {
                    return Err(Error::TruncationTooSmall { max_n, tail, limit: tail_limit });
                }
                let kept: Vec<(usize, f64)> =
                    probs.iter().copied().filter(|&(n, _)| n <= max_n).collect();
                let total: f64 = kept.iter().map(|&(_, p)| p).sum();
                Ok(kept.into_iter().map(|(n, p)| (n, p / total)).collect())
            }
        }
    }

    /// Moments by direct summation over the truncated, renormalized
    /// distribution.
    pub fn moments(&self, max_n: usize) -> Result<NumberMoments> {
        let probs = self.probabilities(max_n)?;
        let mut m = NumberMoments { nbar: 0.0, nbar2: 0.0, nbar3: 0.0 };
        for (n, p) in probs {
            let x = n as f64;
            m.nbar += p * x;
            m.nbar2 += p * x * x;
            m.nbar3 += p * x * x * x;
        }
        Ok(m)
    }

    /// Largest Fock level carrying non-negligible probability.
    pub fn max_level(&self, max_n: usize) -> Result<usize> {
        Ok(self.probabilities(max_n)?.iter().map(|&(n, _)| n).max().unwrap_or(0))
    }
}
