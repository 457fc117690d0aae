//! Sample access to distributions.
//!
//! Testers only ever see a [`SampleSource`]. Counts can be requested in bulk:
//! for very large budgets the multinomial count vector is drawn directly by
//! sequential conditional binomials, which has exactly the law of counting
//! `m` i.i.d. draws but costs `O(n)` instead of `O(m log n)`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::dist::Pmf;
use crate::error::{Error, Result};

pub trait SampleSource {
    fn domain_size(&self) -> usize;

    /// One 1-based draw.
    fn draw(&mut self) -> Result<usize>;

    fn draw_many(&mut self, m: usize) -> Result<Vec<usize>> {
        (0..m).map(|_| self.draw()).collect()
    }

    /// Per-symbol counts of `m` draws; `counts[i - 1]` counts symbol `i`.
    fn draw_counts(&mut self, m: u64) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.domain_size()];
        for _ in 0..m {
            counts[self.draw()? - 1] += 1;
        }
        Ok(counts)
    }
}

impl<S: SampleSource + ?Sized> SampleSource for &mut S {
    fn domain_size(&self) -> usize {
        (**self).domain_size()
    }

    fn draw(&mut self) -> Result<usize> {
        (**self).draw()
    }

    fn draw_many(&mut self, m: usize) -> Result<Vec<usize>> {
        (**self).draw_many(m)
    }

    fn draw_counts(&mut self, m: u64) -> Result<Vec<u64>> {
        (**self).draw_counts(m)
    }
}

/// Above `BULK_FACTOR * n` draws, counts come from the binomial chain.
const BULK_FACTOR: u64 = 4;

/// Draws from an explicit [`Pmf`] with a caller-supplied generator.
#[derive(Debug, Clone)]
pub struct PmfSampler<'a, R> {
    pmf: &'a Pmf,
    rng: R,
}

impl<'a, R: Rng> PmfSampler<'a, R> {
    pub fn new(pmf: &'a Pmf, rng: R) -> Self {
        PmfSampler { pmf, rng }
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl<R: Rng> SampleSource for PmfSampler<'_, R> {
    fn domain_size(&self) -> usize {
        self.pmf.len()
    }

    fn draw(&mut self) -> Result<usize> {
        Ok(self.pmf.draw(&mut self.rng))
    }

    fn draw_counts(&mut self, m: u64) -> Result<Vec<u64>> {
        let n = self.pmf.len() as u64;
        if m <= BULK_FACTOR.saturating_mul(n) {
            let mut counts = vec![0u64; self.pmf.len()];
            for _ in 0..m {
                counts[self.pmf.draw(&mut self.rng) - 1] += 1;
            }
            Ok(counts)
        } else {
            Ok(multinomial_counts(self.pmf.masses(), m, &mut self.rng))
        }
    }
}

/// Multinomial(m, mass) via `X_i ~ Bin(m - sum_{j<i} X_j, p_i / sum_{j>=i} p_j)`.
pub fn multinomial_counts<R: Rng + ?Sized>(mass: &[f64], m: u64, rng: &mut R) -> Vec<u64> {
    let n = mass.len();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + mass[i];
    }
    let last_positive = mass.iter().rposition(|&v| v > 0.0).unwrap_or(n - 1);
    let mut counts = vec![0u64; n];
    let mut remaining = m;
    for i in 0..n {
        if remaining == 0 {
            break;
        }
        if i == last_positive {
            counts[i] = remaining;
            break;
        }
        if mass[i] <= 0.0 {
            continue;
        }
        let prob = (mass[i] / suffix[i]).clamp(0.0, 1.0);
        let x = Binomial::new(remaining, prob)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        counts[i] = x;
        remaining -= x;
    }
    counts
}

/// Replays a recorded sample sequence; exhausts once every sample is used.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    n: usize,
    samples: Vec<usize>,
    next: usize,
}

impl ReplaySource {
    pub fn new(n: usize, samples: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if let Some(&bad) = samples.iter().find(|&&s| s == 0 || s > n) {
            return Err(Error::SampleOutOfRange { index: bad, n });
        }
        Ok(ReplaySource {
            n,
            samples,
            next: 0,
        })
    }

    pub fn remaining(&self) -> usize {
        self.samples.len() - self.next
    }
}

impl SampleSource for ReplaySource {
    fn domain_size(&self) -> usize {
        self.n
    }

    fn draw(&mut self) -> Result<usize> {
        let s = *self
            .samples
            .get(self.next)
            .ok_or(Error::SamplerExhausted { drawn: self.next })?;
        self.next += 1;
        Ok(s)
    }
}

/// Counts of a 1-based sample sequence over `[n]`.
pub fn counts_from_samples(samples: &[usize], n: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; n];
    for &s in samples {
        if s == 0 || s > n {
            return Err(Error::SampleOutOfRange { index: s, n });
        }
        counts[s - 1] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn replay_exhausts() {
        let mut src = ReplaySource::new(3, vec![1, 3]).unwrap();
        assert_eq!(src.draw().unwrap(), 1);
        assert_eq!(src.draw().unwrap(), 3);
        assert_eq!(src.draw(), Err(Error::SamplerExhausted { drawn: 2 }));
        assert!(ReplaySource::new(3, vec![4]).is_err());
    }

    #[test]
    fn multinomial_preserves_total() {
        let p = Pmf::new(vec![0.0, 0.1, 0.2, 0.0, 0.7, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = multinomial_counts(p.masses(), 1_000_000_000_000, &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 1_000_000_000_000);
        assert_eq!(c[0] + c[3] + c[5], 0);
        let f = c[4] as f64 / 1e12;
        assert!((f - 0.7).abs() < 1e-5);
    }

    #[test]
    fn bulk_and_single_paths_agree_in_mean() {
        let p = Pmf::new(vec![0.25, 0.5, 0.25]).unwrap();
        let mut small = PmfSampler::new(&p, ChaCha8Rng::seed_from_u64(5));
        let a = small.draw_counts(12).unwrap();
        assert_eq!(a.iter().sum::<u64>(), 12);
        let b = small.draw_counts(400_000).unwrap();
        assert_eq!(b.iter().sum::<u64>(), 400_000);
        assert!((b[1] as f64 / 4e5 - 0.5).abs() < 0.01);
    }
}
