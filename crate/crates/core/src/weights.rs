//! Fundamental-lemma sieve weights: a truncation of Möbius on the
//! squarefree divisors of `∏_{p <= z} p`, and pointwise verification of the
//! error envelope `τ(n)^2 Σ_{r >= u-β} 1_{P⁻(n) > z_r} 2^{-r}`.
//!
//! # Truncation rule
//!
//! Write a squarefree `d | ∏_{p<=z} p` as `d = p_1 p_2 ⋯ p_m` with
//! `p_1 > p_2 > … > p_m`, and let `P(p)` be the product of the primes below
//! `p`. Then `w(d) = μ(d)` when every odd prefix satisfies
//!
//! ```text
//! p_1 ⋯ p_j · min(p_j^β, P(p_j)) <= z^u        (j odd, j <= m)
//! ```
//!
//! and `w(d) = 0` otherwise. This is the upper-bound Rosser sieve with the
//! extra `P(p_j)` cap, which admits every divisor once `∏_{p<=z} p <= z^u`.
//!
//! Consequences relied on by callers and tests:
//! * `w(d) ∈ {-1, 0, 1}` and `w(1) = 1`;
//! * every admissible `d` satisfies `d <= z^u`, since an even-length `d`
//!   extends an admissible odd prefix by a prime `p_m <= P(p_{m-1})`;
//! * admissibility only fails at odd lengths, so `(1∗w)(n) >= 1_{P⁻(n)>z}`
//!   for every `n`.

use crate::arith::primes_up_to;
use crate::sieve::{LiouvilleTable, SieveError};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// Default cap on the number of support elements.
pub const DEFAULT_SUPPORT_CAP: usize = 5_000_000;

#[derive(Debug, thiserror::Error)]
pub enum WeightError {
    #[error("hypothesis u >= beta violated (u = {u}, beta = {beta})")]
    Hypothesis { u: f64, beta: f64 },
    #[error("range violated: {0}")]
    Range(String),
    #[error("support exceeds {cap} elements (reached {count} before stopping)")]
    SupportTooLarge { count: usize, cap: usize },
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

/// `z_r = z^(((β-1)/β)^r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZLadder {
    pub z: f64,
    pub beta: f64,
}

impl ZLadder {
    pub fn new(z: f64, beta: f64) -> Self {
        Self { z, beta }
    }

    pub fn ratio(&self) -> f64 {
        (self.beta - 1.0) / self.beta
    }

    pub fn rung(&self, r: u32) -> f64 {
        self.z.powf(self.ratio().powi(r as i32))
    }

    /// Smallest `r` with `z_r < threshold`; `threshold` must exceed 1.
    pub fn first_below(&self, threshold: f64) -> u32 {
        debug_assert!(threshold > 1.0);
        let mut r = 0;
        while self.rung(r) >= threshold {
            r += 1;
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveWeightSet {
    z: f64,
    u: f64,
    beta: f64,
    primes: Vec<u64>,
    /// Nonzero weights, sorted by `d`.
    support: Vec<(u64, i8)>,
    #[serde(skip)]
    index: HashMap<u64, i8>,
}

/// Weights for the given `(z, u, β)`; requires `u >= β >= 2` and `z > 1`.
pub fn build_weights(z: f64, u: f64, beta: f64) -> Result<SieveWeightSet, WeightError> {
    build_weights_capped(z, u, beta, DEFAULT_SUPPORT_CAP)
}

pub fn build_weights_capped(
    z: f64,
    u: f64,
    beta: f64,
    cap: usize,
) -> Result<SieveWeightSet, WeightError> {
    if !(z > 1.0 && z.is_finite()) {
        return Err(WeightError::Range(format!("z > 1 (got {z})")));
    }
    if !(beta >= 2.0 && beta.is_finite()) {
        return Err(WeightError::Range(format!("beta >= 2 (got {beta})")));
    }
    if !(u >= beta) {
        return Err(WeightError::Hypothesis { u, beta });
    }
    let bound = z.powf(u);
    let mut primes = primes_up_to(crate::arith::floor_u64(z));
    primes.reverse();
    // below[i] = product of the primes smaller than primes[i]
    let mut below = vec![1.0f64; primes.len()];
    for i in (0..primes.len().saturating_sub(1)).rev() {
        below[i] = below[i + 1] * primes[i + 1] as f64;
    }
    let mut support = vec![(1u64, 1i8)];
    let mut ctx = Dfs {
        primes: &primes,
        below: &below,
        beta,
        bound: bound * (1.0 + 1e-12),
        cap,
        out: &mut support,
    };
    ctx.extend(0, 1, 1.0, 0)?;
    support.sort_unstable();
    primes.reverse();
    let index = support.iter().copied().collect();
    Ok(SieveWeightSet {
        z,
        u,
        beta,
        primes,
        support,
        index,
    })
}

struct Dfs<'a> {
    primes: &'a [u64],
    below: &'a [f64],
    beta: f64,
    bound: f64,
    cap: usize,
    out: &'a mut Vec<(u64, i8)>,
}

impl Dfs<'_> {
    fn extend(&mut self, start: usize, d: u64, d_f: f64, len: usize) -> Result<(), WeightError> {
        for i in start..self.primes.len() {
            let p = self.primes[i];
            let nd_f = d_f * p as f64;
            let new_len = len + 1;
            let admissible = if new_len % 2 == 1 {
                let cap = (p as f64).powf(self.beta).min(self.below[i]);
                nd_f * cap <= self.bound
            } else {
                true
            };
            if !admissible {
                continue;
            }
            if self.out.len() >= self.cap {
                return Err(WeightError::SupportTooLarge {
                    count: self.out.len(),
                    cap: self.cap,
                });
            }
            let nd = d * p;
            self.out.push((nd, if new_len % 2 == 1 { -1 } else { 1 }));
            self.extend(i + 1, nd, nd_f, new_len)?;
        }
        Ok(())
    }
}

impl SieveWeightSet {
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ladder(&self) -> ZLadder {
        ZLadder::new(self.z, self.beta)
    }

    /// Nonzero weights `(d, w(d))`, ascending in `d`.
    pub fn support(&self) -> &[(u64, i8)] {
        &self.support
    }

    pub fn weight(&self, d: u64) -> i8 {
        self.index.get(&d).copied().unwrap_or(0)
    }

    /// True when every squarefree divisor of `∏_{p<=z} p` carries `μ(d)`.
    pub fn is_full_mobius(&self) -> bool {
        self.primes.len() < usize::BITS as usize && self.support.len() == 1usize << self.primes.len()
    }

    /// Checks `|w| <= 1`, `w(1) = 1`, and that the support consists of
    /// squarefree `z`-smooth `d <= z^u`.
    pub fn check_structure(&self) -> StructureCheck {
        let bound = self.z.powf(self.u) * (1.0 + 1e-12);
        let zb = crate::arith::floor_u64(self.z);
        let mut bounded = self.weight(1) == 1;
        let mut supported = true;
        for &(d, w) in &self.support {
            bounded &= w.abs() <= 1;
            let f = crate::arith::factorize(d);
            supported &= (d as f64) <= bound && f.iter().all(|&(p, e)| e == 1 && p <= zb);
        }
        StructureCheck {
            bounded_by_one: bounded,
            support_ok: supported,
            support_size: self.support.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StructureCheck {
    pub bounded_by_one: bool,
    pub support_ok: bool,
    pub support_size: usize,
}

/// `(1∗w)(n) = Σ_{d | n} w(d)`.
pub fn convolve_indicator(n: u64, w: &SieveWeightSet) -> i64 {
    assert!(n >= 1);
    let small: Vec<u64> = w.primes.iter().copied().filter(|&p| n % p == 0).collect();
    convolve_over(&small, w)
}

fn convolve_over(small: &[u64], w: &SieveWeightSet) -> i64 {
    let mut total = 0i64;
    for mask in 0u32..(1 << small.len()) {
        let d: u64 = small
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .product();
        total += w.weight(d) as i64;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub n_max: u64,
    pub support_size: usize,
    /// `Δ(n) = 0` at every `n` where the envelope vanishes.
    pub exact_outside_envelope: bool,
    pub zero_envelope_count: u64,
    pub nonzero_delta_count: u64,
    pub max_abs_delta: u64,
    /// `Δ(n) <= 0` for all `n`, i.e. `1∗w` majorizes the rough indicator.
    pub upper_bound_property: bool,
    /// `max |Δ(n)| / E(n)` over `E(n) > 0`.
    pub min_c: f64,
    /// Smallest `n` attaining `min_c`; `None` when `Δ ≡ 0`.
    pub worst_n: Option<u64>,
    pub bounded_by_one: bool,
    pub support_ok: bool,
}

#[derive(Clone, Copy)]
struct Acc {
    zero_env: u64,
    zero_env_bad: u64,
    nonzero: u64,
    max_abs: u64,
    positive: u64,
    worst: Option<(f64, u64)>,
}

impl Acc {
    const EMPTY: Acc = Acc {
        zero_env: 0,
        zero_env_bad: 0,
        nonzero: 0,
        max_abs: 0,
        positive: 0,
        worst: None,
    };

    fn merge(self, o: Acc) -> Acc {
        let worst = match (self.worst, o.worst) {
            (None, w) | (w, None) => w,
            (Some(a), Some(b)) => Some(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        };
        Acc {
            zero_env: self.zero_env + o.zero_env,
            zero_env_bad: self.zero_env_bad + o.zero_env_bad,
            nonzero: self.nonzero + o.nonzero,
            max_abs: self.max_abs.max(o.max_abs),
            positive: self.positive + o.positive,
            worst,
        }
    }
}

/// Computes `Δ(n) = 1_{P⁻(n)>z} - (1∗w)(n)` and
/// `E(n) = τ(n)^2 Σ_{r >= u-β} 1_{P⁻(n)>z_r} 2^{-r}` for all `n <= n_max`.
///
/// The ladder tends to 1, so `E(n) > 0` for every `n` and the zero-envelope
/// branch never triggers; it is still checked.
pub fn verify_envelope(
    w: &SieveWeightSet,
    n_max: u64,
    table: &LiouvilleTable,
) -> Result<EnvelopeReport, WeightError> {
    table.ensure_covers(n_max.max(1))?;
    let ladder = w.ladder();
    let r0 = (w.u - w.beta).ceil().max(0.0) as u32;
    let zb = crate::arith::floor_u64(w.z);
    let acc = (1..=n_max)
        .into_par_iter()
        .fold(
            || Acc::EMPTY,
            |mut acc, n| {
                let f = table.factorize(n);
                let small: Vec<u64> = f.iter().map(|&(p, _)| p).filter(|&p| p <= zb).collect();
                let indicator = i64::from(small.is_empty());
                let delta = indicator - convolve_over(&small, w);
                let tau: u64 = f.iter().map(|&(_, e)| e as u64 + 1).product();
                let first = match f.first() {
                    None => 0,
                    Some(&(p, _)) => ladder.first_below(p as f64),
                };
                // Σ_{r >= m} 2^{-r} = 2^{1-m}
                let m = first.max(r0);
                let envelope = (tau * tau) as f64 * 2f64.powi(1 - m as i32);
                if envelope == 0.0 {
                    acc.zero_env += 1;
                    if delta != 0 {
                        acc.zero_env_bad += 1;
                    }
                }
                if delta != 0 {
                    acc.nonzero += 1;
                    acc.max_abs = acc.max_abs.max(delta.unsigned_abs());
                    if delta > 0 {
                        acc.positive += 1;
                    }
                    if envelope > 0.0 {
                        let ratio = delta.unsigned_abs() as f64 / envelope;
                        acc = acc.merge(Acc {
                            worst: Some((ratio, n)),
                            ..Acc::EMPTY
                        });
                    }
                }
                acc
            },
        )
        .reduce(|| Acc::EMPTY, Acc::merge);
    let structure = w.check_structure();
    Ok(EnvelopeReport {
        n_max,
        support_size: w.support.len(),
        exact_outside_envelope: acc.zero_env_bad == 0,
        zero_envelope_count: acc.zero_env,
        nonzero_delta_count: acc.nonzero,
        max_abs_delta: acc.max_abs,
        upper_bound_property: acc.positive == 0,
        min_c: acc.worst.map_or(0.0, |(r, _)| r),
        worst_n: acc.worst.map(|(_, n)| n),
        bounded_by_one: structure.bounded_by_one,
        support_ok: structure.support_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mobius(d: u64) -> i8 {
        let f = crate::arith::factorize(d);
        if f.iter().any(|&(_, e)| e > 1) {
            0
        } else if f.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn empty_sieve() {
        let w = build_weights(1.5, 3.0, 2.0).unwrap();
        assert_eq!(w.support(), &[(1, 1)]);
        assert!(w.is_full_mobius());
        for n in 1..100 {
            assert_eq!(convolve_indicator(n, &w), 1);
        }
    }

    #[test]
    fn legendre_case() {
        let w = build_weights(3.0, 2.0, 2.0).unwrap();
        assert_eq!(w.support(), &[(1, 1), (2, -1), (3, -1), (6, 1)]);
        assert_eq!(convolve_indicator(6, &w), 0);
        assert_eq!(convolve_indicator(1, &w), 1);
        assert_eq!(convolve_indicator(35, &w), 1);
        let t = LiouvilleTable::build(1000, 1 << 10).unwrap();
        let r = verify_envelope(&w, 1000, &t).unwrap();
        assert_eq!((r.min_c, r.worst_n, r.nonzero_delta_count), (0.0, None, 0));
        assert!(r.exact_outside_envelope && r.bounded_by_one && r.support_ok);
    }

    #[test]
    fn prime_above_support_sees_only_one() {
        let w = build_weights(20.0, 5.0, 4.0).unwrap();
        assert_eq!(convolve_indicator(1_000_003, &w), 1);
    }

    #[test]
    fn full_mobius_when_primorial_fits() {
        for z in [2.0, 3.0, 5.0, 7.0, 11.0, 13.0] {
            let primorial: f64 = primes_up_to(z as u64).iter().map(|&p| p as f64).product();
            let beta = 2.0;
            let u = (primorial.ln() / f64::ln(z)).max(beta);
            let w = build_weights(z, u, beta).unwrap();
            assert!(w.is_full_mobius(), "z = {z}");
            for &(d, wd) in w.support() {
                assert_eq!(wd, mobius(d));
            }
            let t = LiouvilleTable::build(20_000, 1 << 12).unwrap();
            let r = verify_envelope(&w, 20_000, &t).unwrap();
            assert_eq!(r.nonzero_delta_count, 0);
        }
    }

    #[test]
    fn truncated_weights_keep_structure() {
        let t = LiouvilleTable::build(100_000, 1 << 14).unwrap();
        for (z, u, beta) in [(20.0, 5.0, 4.0), (30.0, 3.0, 2.0), (50.0, 3.0, 3.0), (29.0, 4.5, 2.5)] {
            let w = build_weights(z, u, beta).unwrap();
            assert!(!w.is_full_mobius());
            let s = w.check_structure();
            assert!(s.bounded_by_one && s.support_ok);
            for &(d, wd) in w.support() {
                assert_eq!(wd, mobius(d));
            }
            let r = verify_envelope(&w, 100_000, &t).unwrap();
            assert!(r.upper_bound_property);
            assert!(r.exact_outside_envelope);
            assert!(r.min_c.is_finite());
        }
    }

    #[test]
    fn admissibility_is_prefix_closed() {
        let w = build_weights(30.0, 3.0, 2.0).unwrap();
        for &(d, _) in w.support() {
            let mut ps: Vec<u64> = crate::arith::factorize(d).iter().map(|&(p, _)| p).collect();
            ps.reverse();
            for j in 0..ps.len() {
                let prefix: u64 = ps[..j].iter().product();
                assert_ne!(w.weight(prefix), 0, "prefix {prefix} of {d}");
            }
        }
    }

    #[test]
    fn convolve_matches_divisor_scan() {
        let w = build_weights(20.0, 5.0, 4.0).unwrap();
        for n in (1..200_000u64).step_by(97) {
            let direct: i64 = w
                .support()
                .iter()
                .filter(|&&(d, _)| n % d == 0)
                .map(|&(_, x)| x as i64)
                .sum();
            assert_eq!(convolve_indicator(n, &w), direct);
        }
    }

    #[test]
    fn ladder_identity() {
        for (z, beta) in [(10.0, 3.0), (20.0, 4.0), (1e4, 25.0)] {
            let l = ZLadder::new(z, beta);
            assert_eq!(l.rung(0), z);
            for r in 0..60 {
                let next = l.rung(r + 1);
                let expected = l.rung(r).powf((beta - 1.0) / beta);
                assert!(((next - expected) / expected).abs() < 1e-12);
                assert!(next < l.rung(r) && next > 1.0);
            }
        }
        let l = ZLadder::new(20.0, 4.0);
        assert_eq!(l.first_below(21.0), 0);
        assert_eq!(l.first_below(13.0), 1);
        assert!(l.rung(l.first_below(2.0)) < 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_weights(10.0, 2.0, 3.0), Err(WeightError::Hypothesis { .. })));
        assert!(build_weights(10.0, 2.0, 1.5).is_err());
        assert!(build_weights(1.0, 3.0, 2.0).is_err());
        assert!(matches!(
            build_weights_capped(100.0, 4.0, 2.0, 10),
            Err(WeightError::SupportTooLarge { cap: 10, .. })
        ));
    }
}
