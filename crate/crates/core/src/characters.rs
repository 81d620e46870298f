//! Real primitive characters given by fundamental discriminants, the prime
//! sums they enter, and a scan for characters that look "exceptional"
//! (χ(p) = -1 on most small primes).

use crate::arith::{floor_u64, kronecker_signed, kronecker_wide, primes_up_to};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CharacterError {
    #[error("{d} is not a fundamental discriminant: {reason}")]
    NotFundamental { d: i64, reason: &'static str },
    #[error("quality eta must be positive and finite (got {0})")]
    BadEta(f64),
    #[error("range violated: {0}")]
    Range(String),
}

/// `n ↦ (d | n)` for a fundamental discriminant `d`, modulo `q = |d|`.
///
/// `eta` is the quality of a hypothetical real zero `β = 1 - 1/(η log q)`.
/// It is never computed, only attached so that bounds depending on it can
/// be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadCharacter {
    discriminant: i64,
    modulus: u64,
    eta: Option<f64>,
}

fn is_squarefree(n: u64) -> bool {
    crate::arith::factorize(n).iter().all(|&(_, e)| e == 1)
}

impl QuadCharacter {
    pub fn from_discriminant(d: i64) -> Result<Self, CharacterError> {
        let not = |reason| CharacterError::NotFundamental { d, reason };
        if d == 0 {
            return Err(not("zero"));
        }
        match d.rem_euclid(4) {
            1 => {
                if !is_squarefree(d.unsigned_abs()) {
                    return Err(not("d ≡ 1 (mod 4) but d is not squarefree"));
                }
            }
            0 => {
                let m = d / 4;
                if !matches!(m.rem_euclid(4), 2 | 3) {
                    return Err(not("d = 4m requires m ≡ 2 or 3 (mod 4)"));
                }
                if !is_squarefree(m.unsigned_abs()) {
                    return Err(not("d = 4m requires m squarefree"));
                }
            }
            _ => return Err(not("d ≡ 2 or 3 (mod 4)")),
        }
        Ok(Self {
            discriminant: d,
            modulus: d.unsigned_abs(),
            eta: None,
        })
    }

    pub fn is_fundamental(d: i64) -> bool {
        Self::from_discriminant(d).is_ok()
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self, CharacterError> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(CharacterError::BadEta(eta));
        }
        self.eta = Some(eta);
        Ok(self)
    }

    pub fn discriminant(&self) -> i64 {
        self.discriminant
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    /// `β = 1 - 1/(η log q)`, when η is attached and `q >= 2`.
    pub fn siegel_beta(&self) -> Option<f64> {
        let eta = self.eta?;
        (self.modulus >= 2).then(|| 1.0 - 1.0 / (eta * (self.modulus as f64).ln()))
    }

    pub fn is_principal(&self) -> bool {
        self.discriminant == 1
    }

    #[inline]
    pub fn value(&self, n: u64) -> i8 {
        kronecker_wide(self.discriminant as i128, n as u128)
    }

    #[inline]
    pub fn value_wide(&self, n: u128) -> i8 {
        kronecker_wide(self.discriminant as i128, n)
    }

    /// χ at any integer; `χ(-1) = sign(d)`.
    pub fn value_signed(&self, n: i128) -> i8 {
        kronecker_signed(self.discriminant as i128, n)
    }
}

/// `Σ_{z < p <= x} (1 + χ(p))/p` over primes, summed in ascending order.
pub fn joka_sum(chi: &QuadCharacter, z: f64, x: f64) -> f64 {
    let lo = floor_u64(z);
    primes_up_to(floor_u64(x))
        .into_iter()
        .filter(|&p| p > lo)
        .map(|p| (1 + chi.value(p)) as f64 / p as f64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityBranch {
    /// `v = log z / log q < 2`
    SmallV,
    /// `v >= 2`
    LargeV,
}

/// Right side of the prime-sum bound for `z = q^v`, without its implicit
/// constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimeSumBound {
    pub v: f64,
    pub branch: QualityBranch,
    pub value: f64,
}

/// `((1/(v² η^{v/2}) + 1/z)(log x / log z)³` for `v < 2`, and
/// `log x / (η log q)` for `v >= 2`.
pub fn joka_bound(q: u64, eta: f64, z: f64, x: f64) -> Result<PrimeSumBound, CharacterError> {
    if q < 2 {
        return Err(CharacterError::Range(format!("q >= 2 (got {q})")));
    }
    if !(x > z && z > 1.0) {
        return Err(CharacterError::Range(format!("x > z > 1 (x = {x}, z = {z})")));
    }
    let log_q = (q as f64).ln();
    let v = z.ln() / log_q;
    let (branch, value) = if v < 2.0 {
        let lead = 1.0 / (v * v * eta.powf(v / 2.0)) + 1.0 / z;
        (QualityBranch::SmallV, lead * (x.ln() / z.ln()).powi(3))
    } else {
        (QualityBranch::LargeV, x.ln() / (eta * log_q))
    };
    Ok(PrimeSumBound { v, branch, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementScore {
    /// `Σ_{p <= z} (1 + χ(p))/p`
    pub penalty: f64,
    pub minus_count: u32,
    pub prime_count: u32,
}

pub fn agreement_score(chi: &QuadCharacter, z: f64) -> AgreementScore {
    let primes = primes_up_to(floor_u64(z));
    score_over(chi, &primes)
}

fn score_over(chi: &QuadCharacter, primes: &[u64]) -> AgreementScore {
    let mut penalty = 0.0;
    let mut minus_count = 0;
    for &p in primes {
        let v = chi.value(p);
        penalty += (1 + v) as f64 / p as f64;
        minus_count += u32::from(v == -1);
    }
    AgreementScore {
        penalty,
        minus_count,
        prime_count: primes.len() as u32,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCharacter {
    pub discriminant: i64,
    pub modulus: u64,
    pub score: AgreementScore,
}

/// The `top` fundamental discriminants in `lo..=hi` with the smallest
/// penalty, ties broken by smaller `|d|` and then by smaller `d`.
pub fn search_exceptional(lo: i64, hi: i64, z: f64, top: usize) -> Vec<RankedCharacter> {
    if lo > hi || top == 0 {
        return Vec::new();
    }
    let primes = primes_up_to(floor_u64(z));
    let mut found: Vec<RankedCharacter> = (lo..=hi)
        .into_par_iter()
        .filter_map(|d| {
            let chi = QuadCharacter::from_discriminant(d).ok()?;
            Some(RankedCharacter {
                discriminant: d,
                modulus: chi.modulus(),
                score: score_over(&chi, &primes),
            })
        })
        .collect();
    found.sort_by(|a, b| {
        a.score
            .penalty
            .total_cmp(&b.score.penalty)
            .then(a.discriminant.unsigned_abs().cmp(&b.discriminant.unsigned_abs()))
            .then(a.discriminant.cmp(&b.discriminant))
    });
    found.truncate(top);
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn discriminant_validation() {
        let chi = QuadCharacter::from_discriminant(-4).unwrap();
        assert_eq!(chi.modulus(), 4);
        for n in 1..=20u64 {
            let expected = match n % 4 {
                1 => 1,
                3 => -1,
                _ => 0,
            };
            assert_eq!(chi.value(n), expected);
        }
        assert!(QuadCharacter::is_fundamental(12));
        assert!(QuadCharacter::is_fundamental(5));
        assert!(QuadCharacter::is_fundamental(-8));
        assert!(QuadCharacter::is_fundamental(-163));
        assert!(QuadCharacter::is_fundamental(1));
        for bad in [0, 16, -3 * 9, 2, 3, -1, 20, 45] {
            assert!(
                matches!(
                    QuadCharacter::from_discriminant(bad),
                    Err(CharacterError::NotFundamental { .. })
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn eta_attachment() {
        let chi = QuadCharacter::from_discriminant(-163).unwrap();
        assert_eq!(chi.siegel_beta(), None);
        let chi = chi.with_eta(10.0).unwrap();
        let beta = chi.siegel_beta().unwrap();
        assert!((beta - (1.0 - 1.0 / (10.0 * 163f64.ln()))).abs() < 1e-15);
        assert!(QuadCharacter::from_discriminant(5).unwrap().with_eta(-1.0).is_err());
    }

    #[test]
    fn joka_examples() {
        let chi = QuadCharacter::from_discriminant(-4).unwrap();
        assert!((joka_sum(&chi, 2.0, 10.0) - 0.4).abs() < 1e-15);
        // no primes in (7, 10]
        assert_eq!(joka_sum(&chi, 7.0, 10.0), 0.0);
        // χ(p) = -1 for 2 < p <= 37 with d = -163
        let chi = QuadCharacter::from_discriminant(-163).unwrap();
        assert_eq!(joka_sum(&chi, 2.0, 40.0), 0.0);
    }

    #[test]
    fn joka_sum_monotone_in_x() {
        let chi = QuadCharacter::from_discriminant(5).unwrap();
        let mut last = 0.0;
        for x in (20..2000).step_by(37) {
            let s = joka_sum(&chi, 10.0, x as f64);
            assert!(s >= last && s >= 0.0);
            last = s;
        }
    }

    #[test]
    fn joka_bound_branches() {
        let b = joka_bound(163, 100.0, 20.0, 1e4).unwrap();
        assert_eq!(b.branch, QualityBranch::SmallV);
        let b = joka_bound(163, 100.0, 163.0 * 163.0, 1e6).unwrap();
        assert_eq!(b.branch, QualityBranch::LargeV);
        assert!((b.value - 1e6f64.ln() / (100.0 * 163f64.ln())).abs() < 1e-12);
        assert!(joka_bound(1, 10.0, 2.0, 3.0).is_err());
        assert!(joka_bound(7, 10.0, 5.0, 3.0).is_err());
    }

    #[test]
    fn agreement_examples() {
        let chi = QuadCharacter::from_discriminant(-163).unwrap();
        let s = agreement_score(&chi, 40.0);
        assert_eq!((s.minus_count, s.prime_count, s.penalty), (12, 12, 0.0));
        assert_eq!(
            agreement_score(&chi, 1.5),
            AgreementScore {
                penalty: 0.0,
                minus_count: 0,
                prime_count: 0
            }
        );
        let chi5 = QuadCharacter::from_discriminant(5).unwrap();
        let s = agreement_score(&chi5, 3.0);
        let expected = (1 + crate::arith::kronecker(5, 2)) as f64 / 2.0
            + (1 + crate::arith::kronecker(5, 3)) as f64 / 3.0;
        assert_eq!(s.penalty, expected);
        // both 2 and 3 are inert in Q(√5)
        assert_eq!(s.penalty, 0.0);
        // a ramified prime contributes 1/p
        let s = agreement_score(&QuadCharacter::from_discriminant(-3).unwrap(), 3.0);
        assert_eq!(s.penalty, 1.0 / 3.0);
    }

    #[test]
    fn search_examples() {
        assert!(search_exceptional(16, 16, 40.0, 5).is_empty());
        let r = search_exceptional(-163, -163, 40.0, 3);
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].discriminant, r[0].score.penalty), (-163, 0.0));
        let r = search_exceptional(-200, -3, 40.0, 1);
        assert_eq!(r[0].discriminant, -163);
    }

    #[test]
    fn search_matches_serial_scan() {
        let r = search_exceptional(-500, 500, 50.0, 20);
        let mut serial: Vec<(f64, u64, i64)> = (-500..=500)
            .filter_map(|d| QuadCharacter::from_discriminant(d).ok())
            .map(|c| {
                (
                    agreement_score(&c, 50.0).penalty,
                    c.discriminant().unsigned_abs(),
                    c.discriminant(),
                )
            })
            .collect();
        serial.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got: Vec<i64> = r.iter().map(|c| c.discriminant).collect();
        let want: Vec<i64> = serial.iter().take(20).map(|t| t.2).collect();
        assert_eq!(got, want);
    }

    fn sample_characters(count: usize, rng: &mut ChaCha8Rng) -> Vec<QuadCharacter> {
        let mut out = Vec::new();
        while out.len() < count {
            let d = rng.gen_range(-5000i64..5000);
            if let Ok(c) = QuadCharacter::from_discriminant(d) {
                if !c.is_principal() {
                    out.push(c);
                }
            }
        }
        out
    }

    #[test]
    fn periodic_and_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for chi in sample_characters(100, &mut rng) {
            let q = chi.modulus();
            for _ in 0..200 {
                let n = rng.gen_range(1..1_000_000u64);
                assert_eq!(chi.value(n + q), chi.value(n));
                assert_eq!(chi.value(n) == 0, gcd(n, q) > 1);
                let m = rng.gen_range(1..100_000u64);
                assert_eq!(chi.value(m * n), chi.value(m) * chi.value(n));
            }
            assert_eq!(chi.value_signed(-1), chi.discriminant().signum() as i8);
            let n = rng.gen_range(1..1000i128);
            assert_eq!(
                chi.value_signed(-n),
                chi.value_signed(-1) * chi.value_signed(n)
            );
        }
    }

    #[test]
    fn full_period_sums_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for chi in sample_characters(60, &mut rng) {
            let s: i64 = (1..=chi.modulus()).map(|n| chi.value(n) as i64).sum();
            assert_eq!(s, 0, "d={}", chi.discriminant());
        }
    }
}
