//! Lifting arbitrary distributions to k-modal ones.
//!
//! Stage one splits each point `i` of a distribution on `[n]` into `c`
//! points weighted by a geometric sequence, so that consecutive masses never
//! grow by more than a factor `1 + eps`. Stage two spreads the `l`-th of the
//! resulting `m = c n` masses uniformly over a block of `a_((l-1) mod r + 1)`
//! points, where the block sizes `a` grow geometrically and repeat with
//! period `r = ceil(m/k)`. The output is `2(k-1)`-modal, total variation
//! distances are preserved exactly, and samples of the output can be
//! produced from samples of the input without ever materializing it.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::Serialize;

use crate::dist::Pmf;
use crate::error::{check_positive, Error, Result};
use crate::sampler::SampleSource;

/// Largest output support [`uniformize`] will materialize.
pub const MATERIALIZE_LIMIT: u64 = 1 << 26;

// Block sizes are computed in f64 and must stay exactly representable.
const EXACT_INTEGER_LIMIT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbTransform {
    n: usize,
    eps: f64,
    p_min: f64,
    p_max: f64,
    k: usize,
    c: usize,
    q_weights: Vec<f64>,
    #[serde(skip)]
    q_cumulative: Vec<f64>,
    m: usize,
    r: usize,
    a: Vec<u64>,
    /// `period_prefix[i] = a_1 + ... + a_i`, so `period_prefix[r]` is one period.
    #[serde(skip)]
    period_prefix: Vec<u64>,
    support: u64,
}

impl LbTransform {
    pub fn new(n: usize, eps: f64, p_min: f64, p_max: f64, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        check_positive("eps", eps)?;
        check_positive("p_min", p_min)?;
        if !(p_max.is_finite() && p_max >= p_min && p_max <= 1.0) {
            return Err(Error::param(
                "p_max",
                format!("{p_max} must lie in [p_min, 1]"),
            ));
        }
        if k == 0 {
            return Err(Error::param("k", "modality parameter must be at least 1"));
        }
        let growth = 1.0 + eps;
        // the small slack keeps exact powers such as ln 2 / ln 2 from rounding up
        let c = 1 + ((p_max / p_min).ln() / growth.ln() - 1e-9).ceil().max(0.0) as usize;
        let norm = growth.powi(c as i32) - 1.0;
        let q_weights: Vec<f64> = (0..c).map(|j| growth.powi(j as i32) * eps / norm).collect();
        let mut q_cumulative = Vec::with_capacity(c);
        let mut acc = 0.0;
        for &w in &q_weights {
            acc += w;
            q_cumulative.push(acc);
        }
        let m = c
            .checked_mul(n)
            .ok_or_else(|| Error::SupportOverflow(format!("intermediate support {c} x {n}")))?;
        let r = m.div_ceil(k);

        let mut a = Vec::with_capacity(r);
        let mut period_prefix = Vec::with_capacity(r + 1);
        period_prefix.push(0u64);
        let mut current = 1.0f64;
        for i in 0..r {
            if i > 0 {
                current = (growth * current).ceil();
            }
            if current > EXACT_INTEGER_LIMIT {
                return Err(Error::SupportOverflow(format!(
                    "block size a_{} exceeds 2^53",
                    i + 1
                )));
            }
            let block = current as u64;
            a.push(block);
            let next = period_prefix[i]
                .checked_add(block)
                .ok_or_else(|| Error::SupportOverflow("block prefix sum".into()))?;
            period_prefix.push(next);
        }
        let (periods, rest) = ((m / r) as u64, m % r);
        let support = period_prefix[r]
            .checked_mul(periods)
            .and_then(|v| v.checked_add(period_prefix[rest]))
            .ok_or_else(|| Error::SupportOverflow("output support exceeds 64 bits".into()))?;

        Ok(LbTransform {
            n,
            eps,
            p_min,
            p_max,
            k,
            c,
            q_weights,
            q_cumulative,
            m,
            r,
            a,
            period_prefix,
            support,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn c(&self) -> usize {
        self.c
    }
    pub fn q_weights(&self) -> &[f64] {
        &self.q_weights
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn a(&self) -> &[u64] {
        &self.a
    }

    /// Output support size `N`.
    pub fn support_size(&self) -> u64 {
        self.support
    }

    /// `(l - 1) mod r + 1`, the periodic index of intermediate point `l`.
    pub fn period_index(&self, l: usize) -> usize {
        (l - 1) % self.r + 1
    }

    /// Width of the block of intermediate point `l` (1-based).
    pub fn block_len(&self, l: usize) -> u64 {
        self.a[self.period_index(l) - 1]
    }

    /// Output points before the block of intermediate point `l`.
    pub fn block_offset(&self, l: usize) -> u64 {
        let idx = l - 1;
        (idx / self.r) as u64 * self.period_prefix[self.r] + self.period_prefix[idx % self.r]
    }

    fn check_band(&self, p: &Pmf) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: p.len(),
                right: self.n,
            });
        }
        let slack = 1e-12;
        for (i, &v) in p.masses().iter().enumerate() {
            if v < self.p_min * (1.0 - slack) || v > self.p_max * (1.0 + slack) {
                return Err(Error::OutOfBand {
                    index: i + 1,
                    mass: v,
                    p_min: self.p_min,
                    p_max: self.p_max,
                });
            }
        }
        Ok(())
    }

    fn draw_j<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.q_cumulative[self.c - 1];
        self.q_cumulative
            .partition_point(|&v| v <= u)
            .min(self.c - 1)
            + 1
    }
}

/// `f(c(i-1) + j) = p(i) q(j)` on `[c n]`.
pub fn geometric_refine(p: &Pmf, t: &LbTransform) -> Result<Pmf> {
    t.check_band(p)?;
    let mut f = Vec::with_capacity(t.m);
    for &pi in p.masses() {
        f.extend(t.q_weights.iter().map(|&qj| pi * qj));
    }
    Ok(Pmf::from_raw(f))
}

/// Spreads each intermediate mass uniformly over its block.
pub fn uniformize(f: &Pmf, t: &LbTransform) -> Result<Pmf> {
    if f.len() != t.m {
        return Err(Error::DimensionMismatch {
            left: f.len(),
            right: t.m,
        });
    }
    if t.support > MATERIALIZE_LIMIT {
        return Err(Error::SupportOverflow(format!(
            "support {} is above the materialization limit {MATERIALIZE_LIMIT}",
            t.support
        )));
    }
    let mut g = Vec::with_capacity(t.support as usize);
    for (idx, &v) in f.masses().iter().enumerate() {
        let width = t.block_len(idx + 1);
        let share = v / width as f64;
        g.extend(std::iter::repeat_n(share, width as usize));
    }
    Ok(Pmf::from_raw(g))
}

/// Both stages at once.
pub fn lift(p: &Pmf, t: &LbTransform) -> Result<Pmf> {
    uniformize(&geometric_refine(p, t)?, t)
}

/// Maps one sample `i` of `p` to a sample of the lifted distribution.
pub fn simulate_sample<R: Rng + ?Sized>(i: usize, t: &LbTransform, rng: &mut R) -> Result<u64> {
    if i == 0 || i > t.n {
        return Err(Error::SampleOutOfRange { index: i, n: t.n });
    }
    let l = t.c * (i - 1) + t.draw_j(rng);
    let within = rng.random_range(0..t.block_len(l));
    Ok(t.block_offset(l) + within + 1)
}

/// Sample source for the lifted distribution, driven by a source for `p`.
#[derive(Debug)]
pub struct LiftedSampler<'t, S, R> {
    inner: S,
    transform: &'t LbTransform,
    rng: R,
}

impl<'t, S: SampleSource, R: Rng> LiftedSampler<'t, S, R> {
    pub fn new(inner: S, transform: &'t LbTransform, rng: R) -> Result<Self> {
        if inner.domain_size() != transform.n {
            return Err(Error::DimensionMismatch {
                left: inner.domain_size(),
                right: transform.n,
            });
        }
        if usize::try_from(transform.support).is_err() {
            return Err(Error::SupportOverflow(
                "support does not fit in usize".into(),
            ));
        }
        Ok(LiftedSampler {
            inner,
            transform,
            rng,
        })
    }
}

impl<S: SampleSource, R: Rng> SampleSource for LiftedSampler<'_, S, R> {
    fn domain_size(&self) -> usize {
        self.transform.support as usize
    }

    fn draw(&mut self) -> Result<usize> {
        let i = self.inner.draw()?;
        Ok(simulate_sample(i, self.transform, &mut self.rng)? as usize)
    }
}

/// `k e^((8n/k)(1 + ln(p_max/p_min))) / eps^2`, an upper bound on the
/// output support when `eps <= 1/2`.
pub fn support_size_bound(t: &LbTransform) -> f64 {
    let (n, k) = (t.n as f64, t.k as f64);
    k * ((8.0 * n / k) * (1.0 + (t.p_max / t.p_min).ln())).exp() / (t.eps * t.eps)
}

/// Masses `1/(2n)` on a uniformly random half of `[n]` and `3/(2n)` on the
/// rest; at total variation distance exactly `1/4` from uniform.
pub fn perturbed_half<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Pmf> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::param("n", format!("{n} must be even and positive")));
    }
    let nf = n as f64;
    let mut mass = vec![3.0 / (2.0 * nf); n];
    for idx in sample_indices(rng, n, n / 2) {
        mass[idx] = 1.0 / (2.0 * nf);
    }
    Ok(Pmf::from_raw(mass))
}

/// Uniform on `[n]` with probability 1/2, otherwise [`perturbed_half`].
/// The flag reports which case was drawn.
pub fn hard_instance_uniform_half<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(Pmf, bool)> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::param("n", format!("{n} must be even and positive")));
    }
    if rng.random_bool(0.5) {
        Ok((perturbed_half(n, rng)?, true))
    } else {
        Ok((Pmf::uniform(n)?, false))
    }
}
