//! Random instance generators. Every generated distribution is checked for
//! membership in its declared family before it is returned.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::Monotonicity;
use crate::dist::{modality, tv_distance, Pmf};
use crate::error::{Error, Result};
use crate::lowerbound::{hard_instance_uniform_half, lift, LbTransform};

const MAX_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InstanceKind {
    RandomMonotone {
        orientation: Monotonicity,
    },
    RandomKmodal {
        k: usize,
    },
    UniformHalfHard,
    /// A band-limited distribution on `[inner_n]` lifted with ratio 1/2 to a
    /// `2(k-1)`-modal distribution.
    Lifted {
        inner_n: usize,
        k: usize,
        p_min: f64,
        p_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "pair")]
pub enum PairKind {
    /// `q = p`.
    Same,
    /// `q` in the same family with `d_TV(p, q) >= min_tv`.
    Far { min_tv: f64 },
}

/// A generated `(p, q)` pair with its exact distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub p: Pmf,
    pub q: Pmf,
    pub tv: f64,
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// Mixture of uniform distributions on prefixes `[1, L]`, with prefix lengths
/// drawn log-uniformly from `[lo_len, hi_len]`.
fn prefix_mixture<R: Rng + ?Sized>(
    n: usize,
    lo_len: f64,
    hi_len: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let components = rng.random_range(1..=8);
    // difference array: component of length L adds w/L to [1, L]
    let mut diff = vec![0.0; n + 1];
    for _ in 0..components {
        let len = (log_uniform(rng, lo_len, hi_len).round() as usize).clamp(1, n);
        let w = exponential(rng);
        diff[0] += w / len as f64;
        diff[len] -= w / len as f64;
    }
    let mut acc = 0.0;
    let mut mass = Vec::with_capacity(n);
    for d in &diff[..n] {
        acc += d;
        mass.push(acc.max(0.0));
    }
    // cumulative rounding could break monotonicity by an ulp
    for i in 1..n {
        if mass[i] > mass[i - 1] {
            mass[i] = mass[i - 1];
        }
    }
    Ok(mass)
}

fn oriented(p: Pmf, orientation: Monotonicity) -> Pmf {
    match orientation {
        Monotonicity::NonIncreasing => p,
        Monotonicity::NonDecreasing => p.reversed(),
    }
}

fn check_monotone(p: &Pmf, orientation: Monotonicity) -> Result<()> {
    let ok = match orientation {
        Monotonicity::NonIncreasing => p.is_non_increasing(),
        Monotonicity::NonDecreasing => p.is_non_decreasing(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Instance(
            "generated distribution is not monotone".into(),
        ))
    }
}

/// Random monotone distribution on `[n]`.
pub fn random_monotone<R: Rng + ?Sized>(
    n: usize,
    orientation: Monotonicity,
    rng: &mut R,
) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let p = Pmf::from_weights(&prefix_mixture(n, 1.0, n as f64, rng)?)?;
    let p = oriented(p, orientation);
    check_monotone(&p, orientation)?;
    Ok(p)
}

/// Monotone pair `(p, (1 - lambda) p + lambda f)` where `f` is a flat prefix
/// mixture; `lambda` is chosen so the distance is just above `min_tv`.
pub fn monotone_far_pair<R: Rng + ?Sized>(
    n: usize,
    orientation: Monotonicity,
    min_tv: f64,
    rng: &mut R,
) -> Result<Instance> {
    check_min_tv(min_tv)?;
    let nf = n as f64;
    for _ in 0..MAX_ATTEMPTS {
        let steep = Pmf::from_weights(&prefix_mixture(n, 1.0, nf.powf(0.4).max(1.0), rng)?)?;
        let flat = Pmf::from_weights(&prefix_mixture(n, (nf / 2.0).max(1.0), nf, rng)?)?;
        let base = tv_distance(&steep, &flat)?;
        if base < min_tv {
            continue;
        }
        let target = (min_tv * 1.02).min(base);
        let lambda = target / base;
        let mixed: Vec<f64> = steep
            .masses()
            .iter()
            .zip(flat.masses())
            .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
            .collect();
        let q = Pmf::new(mixed)?;
        let (p, q) = (oriented(steep, orientation), oriented(q, orientation));
        check_monotone(&p, orientation)?;
        check_monotone(&q, orientation)?;
        let tv = tv_distance(&p, &q)?;
        if tv >= min_tv {
            return Ok(Instance { p, q, tv });
        }
    }
    Err(Error::Instance(format!(
        "no monotone pair at distance {min_tv} on [{n}]"
    )))
}

fn check_min_tv(min_tv: f64) -> Result<()> {
    if min_tv.is_finite() && min_tv > 0.0 && min_tv < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "min_tv",
            format!("{min_tv} must lie in (0, 1)"),
        ))
    }
}

/// Piecewise monotone heights: `k` knots split `[n]` into `k + 1` strictly
/// monotone segments with alternating directions, joined geometrically.
fn kmodal_weights<R: Rng + ?Sized>(n: usize, k: usize, skew: bool, rng: &mut R) -> Vec<f64> {
    let segments = k + 1;
    let mut knots: Vec<usize> = Vec::with_capacity(segments + 1);
    knots.push(0);
    if n > segments {
        let mut chosen = rand::seq::index::sample(rng, n - 1, segments - 1).into_vec();
        chosen.sort_unstable();
        knots.extend(chosen.into_iter().map(|c| c + 1));
    } else {
        knots.extend(1..segments.min(n));
    }
    knots.push(n);

    // heights at knot positions alternate high/low
    let rising_first = rng.random_bool(0.5);
    let heights: Vec<f64> = (0..knots.len())
        .map(|idx| {
            let high = (idx % 2 == 1) == rising_first;
            if high {
                let top = if skew {
                    200.0 / (1.0 + idx as f64).powi(2)
                } else {
                    50.0
                };
                log_uniform(rng, 1.0, top.max(1.5))
            } else if skew {
                log_uniform(rng, 1e-4, 1e-2)
            } else {
                log_uniform(rng, 0.02, 0.5)
            }
        })
        .collect();

    let mut w = vec![0.0; n];
    for s in 0..knots.len() - 1 {
        let (a, b) = (knots[s], knots[s + 1]);
        let (h0, h1) = (heights[s], heights[s + 1]);
        let gamma = log_uniform(rng, 0.5, 2.0);
        let span = (b - a) as f64;
        for (offset, slot) in w[a..b].iter_mut().enumerate() {
            let t = (offset as f64 + 0.5) / span;
            *slot = h0 * (h1 / h0).powf(t.powf(gamma));
        }
    }
    w
}

/// Random distribution on `[n]` with at most `k` max- and min-intervals.
pub fn random_kmodal<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Pmf> {
    kmodal_with(n, k, false, rng)
}

fn kmodal_with<R: Rng + ?Sized>(n: usize, k: usize, skew: bool, rng: &mut R) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    if k == 0 {
        return random_monotone(n, Monotonicity::NonIncreasing, rng);
    }
    for _ in 0..MAX_ATTEMPTS {
        let p = Pmf::from_weights(&kmodal_weights(n, k, skew, rng))?;
        if modality(&p).k <= k {
            return Ok(p);
        }
    }
    Err(Error::Instance(format!(
        "no {k}-modal distribution found on [{n}]"
    )))
}

/// k-modal pair: a skewed `p` with its mass concentrated near one end and
/// `q` its mirror image, kept once `d_TV(p, q) >= min_tv`.
pub fn kmodal_far_pair<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    min_tv: f64,
    rng: &mut R,
) -> Result<Instance> {
    check_min_tv(min_tv)?;
    for _ in 0..MAX_ATTEMPTS {
        let p = kmodal_with(n, k, true, rng)?;
        let q = p.reversed();
        let tv = tv_distance(&p, &q)?;
        if tv >= min_tv && modality(&q).k <= k {
            return Ok(Instance { p, q, tv });
        }
    }
    Err(Error::Instance(format!(
        "no {k}-modal pair at distance {min_tv} on [{n}]"
    )))
}

/// Random distribution with every mass inside `[p_min, p_max]`.
pub fn random_band_pmf<R: Rng + ?Sized>(
    n: usize,
    p_min: f64,
    p_max: f64,
    rng: &mut R,
) -> Result<Pmf> {
    let nf = n as f64;
    if n == 0
        || p_min <= 0.0
        || p_min > p_max
        || nf * p_min > 1.0 + 1e-12
        || nf * p_max < 1.0 - 1e-12
    {
        return Err(Error::param(
            "band",
            format!("[{p_min}, {p_max}] admits no distribution on [{n}]"),
        ));
    }
    let mut mass = vec![p_min; n];
    let mut free: Vec<usize> = (0..n).collect();
    let weights: Vec<f64> = (0..n).map(|_| exponential(rng)).collect();
    let mut remaining = 1.0 - nf * p_min;
    // water-filling: spread the remainder by weight, capping at p_max
    while remaining > 1e-15 && !free.is_empty() {
        let total: f64 = free.iter().map(|&i| weights[i]).sum();
        let mut capped = Vec::new();
        let mut spent = 0.0;
        for &i in &free {
            let add = remaining * weights[i] / total;
            let room = p_max - mass[i];
            if add >= room {
                mass[i] = p_max;
                spent += room;
                capped.push(i);
            } else {
                mass[i] += add;
                spent += add;
            }
        }
        remaining -= spent;
        if capped.is_empty() {
            break;
        }
        free.retain(|i| !capped.contains(i));
    }
    Pmf::new(mass)
}

fn lifted_pair<R: Rng + ?Sized>(
    inner_n: usize,
    k: usize,
    p_min: f64,
    p_max: f64,
    pair: PairKind,
    rng: &mut R,
) -> Result<Instance> {
    let t = LbTransform::new(inner_n, 0.5, p_min, p_max, k)?;
    let p_inner = random_band_pmf(inner_n, p_min, p_max, rng)?;
    let q_inner = match pair {
        PairKind::Same => p_inner.clone(),
        PairKind::Far { min_tv } => {
            check_min_tv(min_tv)?;
            let mut found = None;
            for _ in 0..MAX_ATTEMPTS {
                let cand = random_band_pmf(inner_n, p_min, p_max, rng)?;
                if tv_distance(&p_inner, &cand)? >= min_tv {
                    found = Some(cand);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Instance(format!("no band-limited pair at distance {min_tv}"))
            })?
        }
    };
    let (p, q) = (lift(&p_inner, &t)?, lift(&q_inner, &t)?);
    let bound = 2 * (k - 1);
    if modality(&p).k > bound || modality(&q).k > bound {
        return Err(Error::Instance(
            "lifted distribution exceeds its modality bound".into(),
        ));
    }
    let tv = tv_distance(&p, &q)?;
    Ok(Instance { p, q, tv })
}

/// A distribution of the requested kind on `[n]`. For lifted kinds the
/// output domain is determined by the transform and `n` is ignored.
pub fn generate_instance<R: Rng + ?Sized>(
    kind: InstanceKind,
    n: usize,
    rng: &mut R,
) -> Result<Pmf> {
    Ok(generate_pair(kind, n, PairKind::Same, rng)?.p)
}

/// A `(p, q)` pair of the requested kind with its exact distance.
///
/// For [`InstanceKind::UniformHalfHard`], `q` is uniform and `p` is the
/// hard instance; `pair` then only controls whether the perturbed case is
/// forced (`Far`) or left to the coin flip (`Same`).
pub fn generate_pair<R: Rng + ?Sized>(
    kind: InstanceKind,
    n: usize,
    pair: PairKind,
    rng: &mut R,
) -> Result<Instance> {
    match kind {
        InstanceKind::RandomMonotone { orientation } => match pair {
            PairKind::Same => {
                let p = random_monotone(n, orientation, rng)?;
                Ok(Instance {
                    q: p.clone(),
                    p,
                    tv: 0.0,
                })
            }
            PairKind::Far { min_tv } => monotone_far_pair(n, orientation, min_tv, rng),
        },
        InstanceKind::RandomKmodal { k } => match pair {
            PairKind::Same => {
                let p = random_kmodal(n, k, rng)?;
                Ok(Instance {
                    q: p.clone(),
                    p,
                    tv: 0.0,
                })
            }
            PairKind::Far { min_tv } => kmodal_far_pair(n, k, min_tv, rng),
        },
        InstanceKind::UniformHalfHard => {
            let q = Pmf::uniform(n)?;
            let p = match pair {
                PairKind::Same => hard_instance_uniform_half(n, rng)?.0,
                PairKind::Far { .. } => crate::lowerbound::perturbed_half(n, rng)?,
            };
            let tv = tv_distance(&p, &q)?;
            Ok(Instance { p, q, tv })
        }
        InstanceKind::Lifted {
            inner_n,
            k,
            p_min,
            p_max,
        } => lifted_pair(inner_n, k, p_min, p_max, pair, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_respect_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            assert_eq!(
                modality(&random_monotone(100, Monotonicity::NonIncreasing, &mut rng).unwrap()).k,
                0
            );
            assert!(random_monotone(100, Monotonicity::NonDecreasing, &mut rng)
                .unwrap()
                .is_non_decreasing());
            assert!(modality(&random_kmodal(1000, 3, &mut rng).unwrap()).k <= 3);
        }
    }

    #[test]
    fn far_pairs_meet_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let m = monotone_far_pair(2000, Monotonicity::NonIncreasing, 0.5, &mut rng).unwrap();
        assert!(m.tv >= 0.5 && m.q.is_non_increasing());
        assert_eq!(m.tv, tv_distance(&m.p, &m.q).unwrap());
        let km = kmodal_far_pair(2000, 3, 0.6, &mut rng).unwrap();
        assert!(km.tv >= 0.6);
        assert!(modality(&km.p).k <= 3 && modality(&km.q).k <= 3);
    }

    #[test]
    fn band_pmf_stays_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = random_band_pmf(10, 0.05, 0.2, &mut rng).unwrap();
        assert!(p
            .masses()
            .iter()
            .all(|&v| (0.05..=0.2 + 1e-15).contains(&v)));
        assert!(random_band_pmf(10, 0.2, 0.5, &mut rng).is_err());
    }

    #[test]
    fn hard_pair_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let inst = generate_pair(
            InstanceKind::UniformHalfHard,
            64,
            PairKind::Far { min_tv: 0.2 },
            &mut rng,
        )
        .unwrap();
        assert!((inst.tv - 0.25).abs() < 1e-12);
    }
}
