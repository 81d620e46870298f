//! Segmented factor sieve producing a packed Liouville table, plus the
//! smooth/rough counting functions built on top of it.
//!
//! `λ(n)` is stored as one parity bit of `Ω(n)` per integer. Construction
//! walks half-open segments `[lo, hi)`, dividing every entry by each sieving
//! prime `p <= √limit` as often as it divides; whatever is left above 1 is a
//! single large prime. Segments are independent, so they are processed in
//! parallel and the result does not depend on the segment size or on the
//! number of worker threads.

use crate::arith::{floor_pow, floor_u64, primes_up_to};
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

pub const TABLE_MAGIC: &[u8; 8] = b"CHWLLIO1";

/// Default ceiling on the bytes a table may occupy.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

/// Above this many entries the smallest-prime-factor table is dropped by
/// default (4 bytes per entry).
pub const SPF_DEFAULT_MAX_LIMIT: u64 = 1 << 26;

#[derive(Debug, thiserror::Error)]
pub enum SieveError {
    #[error("table limit must be at least 1")]
    EmptyTable,
    #[error("segment size {0} is below the minimum of 64")]
    SegmentTooSmall(usize),
    #[error("table needs {required} bytes but the memory budget is {budget} bytes")]
    MemoryBudget { required: u64, budget: u64 },
    #[error("argument {n} is outside the table range 1..={limit}")]
    OutOfRange { n: u64, limit: u64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("bad table file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct TableConfig {
    pub segment_size: usize,
    pub keep_spf: bool,
    pub memory_budget: u64,
}

impl TableConfig {
    pub fn for_limit(limit: u64) -> Self {
        Self {
            segment_size: 1 << 16,
            keep_spf: limit <= SPF_DEFAULT_MAX_LIMIT,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }

    pub fn required_bytes(&self, limit: u64) -> u64 {
        let bits = limit.div_ceil(8);
        let spf = if self.keep_spf { 4 * limit } else { 0 };
        bits + spf
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiouvilleTable {
    limit: u64,
    parity: Vec<u8>,
    /// Indexed by `n - 1`. Zero marks a prime too large for `u32` (and n = 1).
    spf: Option<Vec<u32>>,
    small_primes: Vec<u64>,
}

impl LiouvilleTable {
    pub fn build(limit: u64, segment_size: usize) -> Result<Self, SieveError> {
        let config = TableConfig {
            segment_size,
            ..TableConfig::for_limit(limit)
        };
        Self::build_with(limit, &config)
    }

    pub fn build_with(limit: u64, config: &TableConfig) -> Result<Self, SieveError> {
        if limit == 0 {
            return Err(SieveError::EmptyTable);
        }
        if config.segment_size < 64 {
            return Err(SieveError::SegmentTooSmall(config.segment_size));
        }
        let required = config.required_bytes(limit);
        if required > config.memory_budget {
            return Err(SieveError::MemoryBudget {
                required,
                budget: config.memory_budget,
            });
        }
        let small_primes = primes_up_to(isqrt(limit));
        // Segments are whole bytes of the packed table.
        let seg = config.segment_size.div_ceil(8) * 8;
        let mut parity = vec![0u8; limit.div_ceil(8) as usize];
        let mut spf = config.keep_spf.then(|| vec![0u32; limit as usize]);

        let run = |seg_index: usize, bits: &mut [u8], spf_out: Option<&mut [u32]>| {
            let lo = (seg_index * seg) as u64 + 1;
            let hi = (lo + seg as u64).min(limit + 1);
            sieve_segment(lo, hi, &small_primes, bits, spf_out);
        };
        match spf.as_mut() {
            Some(spf) => parity
                .par_chunks_mut(seg / 8)
                .zip(spf.par_chunks_mut(seg))
                .enumerate()
                .for_each(|(i, (bits, s))| run(i, bits, Some(s))),
            None => parity
                .par_chunks_mut(seg / 8)
                .enumerate()
                .for_each(|(i, bits)| run(i, bits, None)),
        }
        Ok(Self {
            limit,
            parity,
            spf,
            small_primes,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn parity_bytes(&self) -> &[u8] {
        &self.parity
    }

    pub fn has_spf(&self) -> bool {
        self.spf.is_some()
    }

    pub fn ensure_covers(&self, n: u64) -> Result<(), SieveError> {
        if n == 0 || n > self.limit {
            Err(SieveError::OutOfRange {
                n,
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }

    /// `λ(n)`; panics outside `1..=limit`.
    #[inline]
    pub fn lambda(&self, n: u64) -> i8 {
        assert!(n >= 1 && n <= self.limit, "{n} outside table range");
        let i = (n - 1) as usize;
        if (self.parity[i >> 3] >> (i & 7)) & 1 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn summatory(&self, x: u64) -> Result<i64, SieveError> {
        if x == 0 {
            return Ok(0);
        }
        self.ensure_covers(x)?;
        Ok((1..=x).map(|n| self.lambda(n) as i64).sum())
    }

    /// `P⁻(n)`, `None` for `n = 1`.
    pub fn smallest_prime_factor(&self, n: u64) -> Option<u64> {
        if n <= 1 {
            return None;
        }
        if let Some(spf) = &self.spf {
            if n <= self.limit {
                let s = spf[(n - 1) as usize];
                return Some(if s == 0 { n } else { s as u64 });
            }
        }
        for &p in &self.small_primes {
            if p * p > n {
                break;
            }
            if n % p == 0 {
                return Some(p);
            }
        }
        if n <= self.limit {
            Some(n)
        } else {
            Some(crate::arith::factorize(n)[0].0)
        }
    }

    /// Prime factorization, primes ascending.
    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        if n > self.limit || self.spf.is_none() {
            if n > self.limit {
                return crate::arith::factorize(n);
            }
            let mut out = Vec::new();
            for &p in &self.small_primes {
                if p * p > n {
                    break;
                }
                if n % p == 0 {
                    let mut e = 0;
                    while n % p == 0 {
                        n /= p;
                        e += 1;
                    }
                    out.push((p, e));
                }
            }
            if n > 1 {
                out.push((n, 1));
            }
            return out;
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.smallest_prime_factor(n).unwrap();
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
            n /= p;
        }
        out
    }

    /// `P⁺(n)`, with `P⁺(1) = 0`.
    pub fn largest_prime_factor(&self, n: u64) -> u64 {
        self.factorize(n).last().map_or(0, |&(p, _)| p)
    }

    /// The `z`-smooth part `n_z`: the largest divisor of `n` built from
    /// primes `<= z`.
    pub fn smooth_part(&self, n: u64, z: f64) -> u64 {
        let zb = floor_u64(z);
        self.factorize(n)
            .into_iter()
            .filter(|&(p, _)| p <= zb)
            .map(|(p, e)| p.pow(e))
            .product()
    }

    /// `Φ(x, z) = #{n <= x : P⁻(n) > z}`, counting `n = 1`.
    pub fn count_rough(&self, x: f64, z: f64) -> Result<u64, SieveError> {
        let xb = floor_u64(x);
        let zb = floor_u64(z);
        if xb == 0 {
            return Ok(0);
        }
        self.ensure_covers(xb)?;
        Ok((1..=xb)
            .filter(|&n| self.smallest_prime_factor(n).is_none_or(|p| p > zb))
            .count() as u64)
    }

    /// `Ψ(x, z) = #{n <= x : P⁺(n) <= z}`, counting `n = 1`.
    pub fn count_smooth(&self, x: f64, z: f64) -> Result<u64, SieveError> {
        let xb = floor_u64(x);
        let zb = floor_u64(z);
        if xb == 0 {
            return Ok(0);
        }
        self.ensure_covers(xb)?;
        Ok((1..=xb)
            .filter(|&n| self.largest_prime_factor(n) <= zb)
            .count() as u64)
    }

    /// `#{n <= x : n_z > z^u}` without the `x >= z^u` hypothesis.
    pub fn excess_smooth_count(&self, x: f64, z: f64, u: f64) -> Result<u64, SieveError> {
        let xb = floor_u64(x);
        if xb == 0 {
            return Ok(0);
        }
        self.ensure_covers(xb)?;
        let threshold = floor_pow(z, u);
        Ok((1..=xb)
            .filter(|&n| self.smooth_part(n, z) > threshold)
            .count() as u64)
    }

    /// Counts `n <= x` whose `z`-smooth part exceeds `z^u`, under the
    /// hypotheses `u >= 1` and `x >= z^u`.
    pub fn count_excess_smooth_part(
        &self,
        x: f64,
        z: f64,
        u: f64,
    ) -> Result<ExcessCount, SieveError> {
        if u < 1.0 {
            return Err(SieveError::Hypothesis(format!("u >= 1 (got u = {u})")));
        }
        if z <= 1.0 {
            return Err(SieveError::Hypothesis(format!("z > 1 (got z = {z})")));
        }
        if x < z.powf(u) {
            return Err(SieveError::Hypothesis(format!(
                "x >= z^u (x = {x}, z^u = {})",
                z.powf(u)
            )));
        }
        let count = self.excess_smooth_count(x, z, u)?;
        Ok(ExcessCount {
            count,
            ratio: count as f64 / (x * (-u / 2.0).exp()),
        })
    }

    /// The same count through the factorization `n = ab` with `a` the smooth
    /// part: `Σ_{a > z^u, P⁺(a) <= z} Φ(x/a, z)`.
    pub fn excess_count_by_factorization(&self, x: f64, z: f64, u: f64) -> Result<u64, SieveError> {
        let xb = floor_u64(x);
        if xb == 0 {
            return Ok(0);
        }
        self.ensure_covers(xb)?;
        let rough = self.rough_prefix(xb, z)?;
        let threshold = floor_pow(z, u);
        Ok(smooth_numbers(xb, z)
            .into_iter()
            .filter(|&a| a > threshold)
            .map(|a| rough[(xb / a) as usize])
            .sum())
    }

    /// `v[m] = Φ(m, z)` for `0 <= m <= x`.
    pub fn rough_prefix(&self, x: u64, z: f64) -> Result<Vec<u64>, SieveError> {
        if x > 0 {
            self.ensure_covers(x)?;
        }
        let zb = floor_u64(z);
        let mut out = Vec::with_capacity(x as usize + 1);
        out.push(0);
        let mut acc = 0;
        for n in 1..=x {
            if self.smallest_prime_factor(n).is_none_or(|p| p > zb) {
                acc += 1;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Largest observed constant `C` in `count <= C·x·e^{-u/2}` over the
    /// given exponents.
    pub fn excess_envelope(&self, x: f64, z: f64, us: &[f64]) -> Result<EnvelopeFit, SieveError> {
        let rows = us
            .iter()
            .map(|&u| self.count_excess_smooth_part(x, z, u).map(|c| (u, c)))
            .collect::<Result<Vec<_>, _>>()?;
        let constant = rows.iter().map(|(_, c)| c.ratio).fold(0.0, f64::max);
        Ok(EnvelopeFit { rows, constant })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), SieveError> {
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&self.limit.to_le_bytes())?;
        w.write_all(&self.parity)?;
        Ok(())
    }

    /// Loads a table written by [`write_to`](Self::write_to). The loaded
    /// table carries no smallest-prime-factor data.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self, SieveError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| SieveError::Format("missing magic".into()))?;
        if &magic != TABLE_MAGIC {
            return Err(SieveError::Format("wrong magic".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)
            .map_err(|_| SieveError::Format("missing limit".into()))?;
        let limit = u64::from_le_bytes(len);
        if limit == 0 {
            return Err(SieveError::EmptyTable);
        }
        let mut parity = vec![0u8; limit.div_ceil(8) as usize];
        r.read_exact(&mut parity)
            .map_err(|_| SieveError::Format("truncated parity data".into()))?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(SieveError::Format("trailing bytes".into()));
        }
        Ok(Self {
            limit,
            parity,
            spf: None,
            small_primes: primes_up_to(isqrt(limit)),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), SieveError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SieveError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExcessCount {
    pub count: u64,
    /// `count / (x e^{-u/2})`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFit {
    pub rows: Vec<(f64, ExcessCount)>,
    pub constant: f64,
}

fn sieve_segment(lo: u64, hi: u64, primes: &[u64], bits: &mut [u8], mut spf: Option<&mut [u32]>) {
    let len = (hi - lo) as usize;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut odd = vec![false; len];
    for &p in primes {
        if p * p >= hi {
            break;
        }
        let first = lo.div_ceil(p) * p;
        let mut m = first;
        while m < hi {
            let i = (m - lo) as usize;
            if let Some(s) = spf.as_deref_mut() {
                if s[i] == 0 {
                    s[i] = p as u32;
                }
            }
            let r = &mut rem[i];
            loop {
                *r /= p;
                odd[i] = !odd[i];
                if *r % p != 0 {
                    break;
                }
            }
            m += p;
        }
    }
    for i in 0..len {
        if rem[i] > 1 {
            odd[i] = !odd[i];
            if let Some(s) = spf.as_deref_mut() {
                if s[i] == 0 && rem[i] <= u32::MAX as u64 {
                    s[i] = rem[i] as u32;
                }
            }
        }
        if odd[i] {
            bits[i >> 3] |= 1 << (i & 7);
        }
    }
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r > 0 && r.checked_mul(r).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// All `z`-smooth integers in `1..=bound`, ascending (includes 1).
pub fn smooth_numbers(bound: u64, z: f64) -> Vec<u64> {
    let primes = primes_up_to(floor_u64(z).min(bound));
    let mut out = Vec::new();
    fn dfs(start: usize, acc: u64, bound: u64, primes: &[u64], out: &mut Vec<u64>) {
        out.push(acc);
        for (i, &p) in primes.iter().enumerate().skip(start) {
            if acc > bound / p {
                break;
            }
            dfs(i, acc * p, bound, primes, out);
        }
    }
    if bound >= 1 {
        dfs(0, 1, bound, &primes, &mut out);
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factorize;

    fn trial_lambda(n: u64) -> i8 {
        let omega: u32 = factorize(n).iter().map(|&(_, e)| e).sum();
        if omega % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn first_ten_values() {
        let t = LiouvilleTable::build(10, 64).unwrap();
        let got: Vec<i8> = (1..=10).map(|n| t.lambda(n)).collect();
        assert_eq!(got, vec![1, -1, -1, 1, -1, 1, -1, -1, 1, 1]);
        assert_eq!(t.summatory(10).unwrap(), 0);
    }

    #[test]
    fn primes_are_negative() {
        let t = LiouvilleTable::build(5000, 64).unwrap();
        assert_eq!(t.lambda(1), 1);
        for p in primes_up_to(5000) {
            assert_eq!(t.lambda(p), -1);
        }
    }

    #[test]
    fn matches_trial_division_across_segment_sizes() {
        let reference = LiouvilleTable::build(20_000, 64).unwrap();
        for n in 1..=20_000 {
            assert_eq!(reference.lambda(n), trial_lambda(n), "n={n}");
        }
        for seg in [64, 100, 1000, 4096, 1 << 20] {
            let t = LiouvilleTable::build(20_000, seg).unwrap();
            assert_eq!(t.parity_bytes(), reference.parity_bytes(), "seg={seg}");
        }
        let no_spf = LiouvilleTable::build_with(
            20_000,
            &TableConfig {
                segment_size: 333,
                keep_spf: false,
                memory_budget: DEFAULT_MEMORY_BUDGET,
            },
        )
        .unwrap();
        assert_eq!(no_spf.parity_bytes(), reference.parity_bytes());
        assert_eq!(no_spf.factorize(9_991), reference.factorize(9_991));
    }

    #[test]
    fn complete_multiplicativity() {
        let t = LiouvilleTable::build(100_000, 4096).unwrap();
        for m in 1..300u64 {
            for n in 1..=(100_000 / m).min(300) {
                assert_eq!(t.lambda(m * n), t.lambda(m) * t.lambda(n));
            }
        }
    }

    #[test]
    fn build_errors() {
        assert!(matches!(LiouvilleTable::build(0, 64), Err(SieveError::EmptyTable)));
        assert!(matches!(
            LiouvilleTable::build(10, 63),
            Err(SieveError::SegmentTooSmall(63))
        ));
        let err = LiouvilleTable::build_with(
            1_000_000,
            &TableConfig {
                segment_size: 64,
                keep_spf: true,
                memory_budget: 1000,
            },
        )
        .unwrap_err();
        match err {
            SieveError::MemoryBudget { required, budget } => {
                assert_eq!(required, 125_000 + 4_000_000);
                assert_eq!(budget, 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn smooth_part_examples() {
        let t = LiouvilleTable::build(1000, 64).unwrap();
        assert_eq!(t.smooth_part(40, 3.0), 8);
        assert_eq!(t.smooth_part(1, 7.5), 1);
        assert_eq!(t.smooth_part(30, 5.0), 30);
        assert_eq!(t.smooth_part(30, 4.9), 6);
    }

    #[test]
    fn smooth_part_cofactor_is_rough() {
        let t = LiouvilleTable::build(100_000, 1 << 14).unwrap();
        for z in [2.0, 10.0, 100.0] {
            for n in 1..=100_000u64 {
                let s = t.smooth_part(n, z);
                assert_eq!(n % s, 0);
                let rough = n / s;
                assert!(t.smallest_prime_factor(rough).is_none_or(|p| p as f64 > z));
            }
        }
    }

    #[test]
    fn counting_examples() {
        let t = LiouvilleTable::build(10_000, 64).unwrap();
        assert_eq!(t.count_rough(10.0, 2.0).unwrap(), 5);
        assert_eq!(t.count_smooth(37.5, 40.0).unwrap(), 37);
        assert!(matches!(
            t.count_rough(10_001.0, 2.0),
            Err(SieveError::OutOfRange { .. })
        ));
        let c = t.count_excess_smooth_part(100.0, 2.0, 3.0).unwrap();
        assert_eq!(c.count, 6);
        assert!(matches!(
            t.count_excess_smooth_part(100.0, 10.0, 3.0),
            Err(SieveError::Hypothesis(_))
        ));
        assert_eq!(t.excess_smooth_count(100.0, 10.0, 3.0).unwrap(), 0);
    }

    #[test]
    fn rough_count_matches_inclusion_exclusion() {
        let t = LiouvilleTable::build(10_000, 64).unwrap();
        for z in [2.0, 3.0, 7.0, 12.0, 30.0] {
            let primes = primes_up_to(z as u64);
            for x in (1..=10_000u64).step_by(97) {
                // Σ_{d | P(z)} μ(d) floor(x/d)
                let mut total: i64 = 0;
                for mask in 0u32..(1 << primes.len()) {
                    let mut d = 1u64;
                    let mut overflow = false;
                    for (i, &p) in primes.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            d = d.saturating_mul(p);
                            overflow |= d > x;
                        }
                    }
                    if overflow {
                        continue;
                    }
                    let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
                    total += sign * (x / d) as i64;
                }
                assert_eq!(t.count_rough(x as f64, z).unwrap() as i64, total, "x={x} z={z}");
            }
        }
    }

    #[test]
    fn smooth_count_saturates() {
        let t = LiouvilleTable::build(500, 64).unwrap();
        for x in [1.0, 17.0, 499.9] {
            assert_eq!(t.count_smooth(x, x + 1.0).unwrap(), x.floor() as u64);
        }
    }

    #[test]
    fn excess_count_is_monotone_in_u() {
        let t = LiouvilleTable::build(50_000, 1 << 12).unwrap();
        for z in [2.0, 5.0, 10.0] {
            let counts: Vec<u64> = (0..12)
                .map(|i| t.excess_smooth_count(50_000.0, z, 1.0 + i as f64 * 0.5).unwrap())
                .collect();
            assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
        }
    }

    #[test]
    fn excess_count_both_ways() {
        let t = LiouvilleTable::build(3000, 64).unwrap();
        for z in [2.0, 5.0, 10.0] {
            for u in [1.0, 2.0, 3.0] {
                for x in (1..=3000).step_by(7) {
                    let x = x as f64;
                    assert_eq!(
                        t.excess_smooth_count(x, z, u).unwrap(),
                        t.excess_count_by_factorization(x, z, u).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn smooth_numbers_enumeration() {
        assert_eq!(smooth_numbers(20, 3.0), vec![1, 2, 3, 4, 6, 8, 9, 12, 16, 18]);
        assert_eq!(smooth_numbers(1, 100.0), vec![1]);
        assert_eq!(smooth_numbers(5, 1.5), vec![1]);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for limit in [1u64, 7, 8, 9, 1000, 12_345] {
            let t = LiouvilleTable::build(limit, 64).unwrap();
            let mut buf = Vec::new();
            t.write_to(&mut buf).unwrap();
            assert_eq!(&buf[..8], TABLE_MAGIC);
            assert_eq!(buf.len(), 16 + limit.div_ceil(8) as usize);
            let back = LiouvilleTable::read_from(&buf[..]).unwrap();
            assert_eq!(back.parity_bytes(), t.parity_bytes());
            assert_eq!(back.limit(), limit);
            for n in 1..=limit {
                assert_eq!(back.lambda(n), t.lambda(n));
            }
        }
    }

    #[test]
    fn file_layout_is_lsb_first() {
        let t = LiouvilleTable::build(10, 64).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(&buf[8..16], &10u64.to_le_bytes());
        // λ(1..=8) = + - - + - + - -  -> odd parity bits at n = 2,3,5,7,8
        assert_eq!(buf[16], 0b1101_0110);
        // λ(9), λ(10) = +, +
        assert_eq!(buf[17], 0);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        assert!(LiouvilleTable::read_from(&b"NOTMAGIC"[..]).is_err());
        let t = LiouvilleTable::build(100, 64).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert!(LiouvilleTable::read_from(&buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(LiouvilleTable::read_from(&buf[..]).is_err());
    }

    #[test]
    fn isqrt_edges() {
        for n in [0u64, 1, 3, 4, 15, 16, 17, u64::MAX] {
            let r = isqrt(n);
            assert!(r * r <= n);
            assert!((r + 1).checked_mul(r + 1).is_none_or(|v| v > n));
        }
    }
}
