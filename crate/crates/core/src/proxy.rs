//! The proxy `λ_z` (agreeing with `λ` on primes `<= z` and with `χ` above
//! `z`), exact shifted correlation sums, the `λ → λ_z` transition gap and
//! numeric evaluation of the conditional correlation bounds.

use crate::arith::floor_u64;
use crate::characters::{joka_bound, joka_sum, CharacterError, QualityBranch, QuadCharacter};
use crate::sieve::{LiouvilleTable, SieveError};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ProxyError {
    #[error("shift system must be non-empty with distinct shifts")]
    BadShifts,
    #[error("values needed up to {needed} but only available up to {limit}")]
    TableTooSmall { needed: u64, limit: u64 },
    #[error("the quality eta must be attached to the character for this bound")]
    MissingEta,
    #[error("range violated: {0}")]
    Range(String),
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error(transparent)]
    Character(#[from] CharacterError),
}

/// Distinct non-negative shifts, stored ascending so that `h_1` is the
/// minimum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ShiftSystem {
    shifts: Vec<u64>,
}

impl ShiftSystem {
    pub fn new(mut shifts: Vec<u64>) -> Result<Self, ProxyError> {
        shifts.sort_unstable();
        let n = shifts.len();
        shifts.dedup();
        if shifts.is_empty() || shifts.len() != n {
            return Err(ProxyError::BadShifts);
        }
        Ok(Self { shifts })
    }

    pub fn shifts(&self) -> &[u64] {
        &self.shifts
    }

    pub fn k(&self) -> usize {
        self.shifts.len()
    }

    pub fn h1(&self) -> u64 {
        self.shifts[0]
    }

    pub fn max_shift(&self) -> u64 {
        *self.shifts.last().unwrap()
    }

    /// `h_i* = h_i - h_1`.
    pub fn h_star(&self, i: usize) -> u64 {
        self.shifts[i] - self.shifts[0]
    }
}

impl std::str::FromStr for ShiftSystem {
    type Err = ProxyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let shifts = s
            .split(',')
            .map(|t| t.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ProxyError::BadShifts)?;
        Self::new(shifts)
    }
}

/// `λ_z(n) = ∏_{p^α ∥ n} (p <= z ? λ(p)^α : χ(p)^α)`.
pub fn lambda_z(n: u64, z: f64, chi: &QuadCharacter, table: &LiouvilleTable) -> i8 {
    let zb = floor_u64(z);
    let mut v = 1i8;
    for (p, e) in table.factorize(n) {
        let at_p = if p <= zb { -1 } else { chi.value(p) };
        if e % 2 == 1 {
            v *= at_p;
        } else if at_p == 0 {
            v = 0;
        }
    }
    v
}

/// Precomputed `λ_z(n)` for `1 <= n <= limit`.
#[derive(Debug, Clone)]
pub struct ProxyTable {
    z: f64,
    values: Vec<i8>,
}

impl ProxyTable {
    pub fn build(
        limit: u64,
        z: f64,
        chi: &QuadCharacter,
        table: &LiouvilleTable,
    ) -> Result<Self, ProxyError> {
        table.ensure_covers(limit)?;
        let values = (1..=limit)
            .into_par_iter()
            .map(|n| lambda_z(n, z, chi, table))
            .collect();
        Ok(Self { z, values })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn limit(&self) -> u64 {
        self.values.len() as u64
    }

    #[inline]
    pub fn get(&self, n: u64) -> i8 {
        self.values[(n - 1) as usize]
    }
}

/// `Σ_{n <= x} ∏_i values(n + h_i)`, with `values` defined on
/// `1..=domain_limit`.
pub fn correlate<F>(values: F, shifts: &ShiftSystem, x: f64, domain_limit: u64) -> Result<i64, ProxyError>
where
    F: Fn(u64) -> i8 + Sync,
{
    let xb = floor_u64(x);
    let needed = xb + shifts.max_shift();
    if needed > domain_limit {
        return Err(ProxyError::TableTooSmall {
            needed,
            limit: domain_limit,
        });
    }
    Ok((1..=xb)
        .into_par_iter()
        .map(|n| {
            shifts
                .shifts()
                .iter()
                .map(|&h| values(n + h))
                .product::<i8>() as i64
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub x: f64,
    pub shifts: Vec<u64>,
    pub sum_lambda: i64,
    pub normalized_lambda: f64,
    pub sum_lambda_z: Option<i64>,
    pub z: Option<f64>,
    pub discriminant: Option<i64>,
    pub gap_bound_branch: Option<QualityBranch>,
    pub gap_bound_value: Option<f64>,
}

/// Correlation of `λ`, and of `λ_z` when a proxy is supplied. The gap bound
/// is filled in when the character carries a quality η.
pub fn correlation_report(
    table: &LiouvilleTable,
    shifts: &ShiftSystem,
    x: f64,
    proxy: Option<(f64, &QuadCharacter)>,
) -> Result<CorrelationReport, ProxyError> {
    let limit = table.limit();
    let sum_lambda = correlate(|n| table.lambda(n), shifts, x, limit)?;
    let xb = floor_u64(x);
    let mut report = CorrelationReport {
        x,
        shifts: shifts.shifts().to_vec(),
        sum_lambda,
        normalized_lambda: if xb == 0 { 0.0 } else { sum_lambda as f64 / x },
        sum_lambda_z: None,
        z: None,
        discriminant: None,
        gap_bound_branch: None,
        gap_bound_value: None,
    };
    if let Some((z, chi)) = proxy {
        let needed = xb + shifts.max_shift();
        let values = ProxyTable::build(needed.max(1), z, chi, table)?;
        report.sum_lambda_z = Some(correlate(|n| values.get(n), shifts, x, values.limit())?);
        report.z = Some(z);
        report.discriminant = Some(chi.discriminant());
        if let Some(eta) = chi.eta() {
            if x > z && chi.modulus() >= 2 {
                let b = joka_bound(chi.modulus(), eta, z, x)?;
                report.gap_bound_branch = Some(b.branch);
                report.gap_bound_value = Some(x * b.value);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyGap {
    /// `Σ_{n <= x} |∏ λ(n+h_j) - ∏ λ_z(n+h_j)|`
    pub lhs_direct: u64,
    /// `Σ_j Σ_{n <= x} Σ_{p^α ∥ n+h_j, p > z} |λ(p^α) - χ(p^α)|`
    pub lhs_expansion: u64,
    /// `Σ_{z < p <= x} (1 + χ(p))/p`
    pub prime_sum: f64,
    pub v: f64,
    pub branch: QualityBranch,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn proxy_gap(
    x: f64,
    z: f64,
    chi: &QuadCharacter,
    shifts: &ShiftSystem,
    table: &LiouvilleTable,
) -> Result<ProxyGap, ProxyError> {
    let eta = chi.eta().ok_or(ProxyError::MissingEta)?;
    if !(x > z && z > 1.0) {
        return Err(ProxyError::Range(format!("x > z > 1 (x = {x}, z = {z})")));
    }
    let xb = floor_u64(x);
    let needed = xb + shifts.max_shift();
    table.ensure_covers(needed)?;
    let zb = floor_u64(z);
    let values = ProxyTable::build(needed, z, chi, table)?;

    let lhs_direct: u64 = (1..=xb)
        .into_par_iter()
        .map(|n| {
            let a: i8 = shifts.shifts().iter().map(|&h| table.lambda(n + h)).product();
            let b: i8 = shifts.shifts().iter().map(|&h| values.get(n + h)).product();
            (a - b).unsigned_abs() as u64
        })
        .sum();

    // |λ(p^α) - χ(p^α)| = |(-1)^α - χ(p)^α|
    let local = |m: u64| -> u64 {
        table
            .factorize(m)
            .into_iter()
            .filter(|&(p, _)| p > zb)
            .map(|(p, e)| {
                let c = chi.value(p);
                let lam = if e % 2 == 0 { 1 } else { -1 };
                let chi_pow = if c == 0 {
                    0
                } else if e % 2 == 0 {
                    1
                } else {
                    c
                };
                (lam - chi_pow).unsigned_abs() as u64
            })
            .sum()
    };
    let lhs_expansion: u64 = (1..=xb)
        .into_par_iter()
        .map(|n| shifts.shifts().iter().map(|&h| local(n + h)).sum::<u64>())
        .sum();

    let bound = joka_bound(chi.modulus(), eta, z, x)?;
    let rhs = x * bound.value;
    Ok(ProxyGap {
        lhs_direct,
        lhs_expansion,
        prime_sum: joka_sum(chi, z, x),
        v: bound.v,
        branch: bound.branch,
        rhs,
        ratio: lhs_direct as f64 / rhs,
    })
}

/// Inputs of the conditional correlation bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundParams {
    pub q: u64,
    pub eta: f64,
    /// `x = q^V`
    pub big_v: f64,
    pub epsilon: f64,
    pub k: u32,
    pub c: f64,
    pub c_prime: f64,
    pub delta: f64,
}

impl BoundParams {
    pub const DEFAULT_C: f64 = 0.01;
    pub const DEFAULT_DELTA: f64 = 0.5;
}

/// Bound values at `x = q^V`; each `*_log` field is the natural log of the
/// corresponding value, which stays finite when the value overflows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremBound {
    pub log_x: f64,
    pub x: f64,
    /// `xV/η + x·exp(-c√(V log η))`
    pub main: f64,
    pub main_log: f64,
    /// `main / x`
    pub main_relative: f64,
    /// `x·exp(-c'√(log η))`
    pub corollary_branch_1: f64,
    pub corollary_branch_1_log: f64,
    /// `x / η^{1-δ}`
    pub corollary_branch_2: f64,
    pub corollary_branch_2_log: f64,
    /// `V ∈ [1/2 + ε, c^{-2} log η]`
    pub branch_1_applicable: bool,
    /// `V ∈ (c^{-2} log η, η^δ]`
    pub branch_2_applicable: bool,
    pub parameters: ScaleParameters,
}

/// The parameter choices `v = min(√(V/log η), 2)`, `z = q^v`,
/// `u = εV/(30kv)` and `β = 25k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleParameters {
    pub v: f64,
    pub log_z: f64,
    pub u: f64,
    pub beta: f64,
}

pub fn scale_parameters(q: u64, big_v: f64, eta: f64, epsilon: f64, k: u32) -> ScaleParameters {
    let v = (big_v / eta.ln()).sqrt().min(2.0);
    ScaleParameters {
        v,
        log_z: v * (q as f64).ln(),
        u: epsilon * big_v / (30.0 * k as f64 * v),
        beta: 25.0 * k as f64,
    }
}

pub fn theorem_bound(p: &BoundParams) -> Result<TheoremBound, ProxyError> {
    let range = |msg: String| Err(ProxyError::Range(msg));
    if p.q < 2 {
        return range(format!("q >= 2 (got {})", p.q));
    }
    if !(p.eta >= 10.0 && p.eta.is_finite()) {
        return range(format!("eta >= 10 (got {})", p.eta));
    }
    if !(p.epsilon > 0.0 && p.epsilon < 0.5) {
        return range(format!("epsilon in (0, 1/2) (got {})", p.epsilon));
    }
    if p.k < 2 {
        return range(format!("k >= 2 (got {})", p.k));
    }
    if !(p.c > 0.0 && p.c_prime > 0.0) {
        return range(format!("c, c' > 0 (got {}, {})", p.c, p.c_prime));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return range(format!("delta in (0, 1) (got {})", p.delta));
    }
    if !(p.big_v >= 0.5 + p.epsilon && p.big_v <= p.eta) {
        return range(format!(
            "V in [1/2 + eps, eta] = [{}, {}] (got {})",
            0.5 + p.epsilon,
            p.eta,
            p.big_v
        ));
    }
    let log_eta = p.eta.ln();
    let log_x = p.big_v * (p.q as f64).ln();
    let main_relative = p.big_v / p.eta + (-p.c * (p.big_v * log_eta).sqrt()).exp();
    let main_log = log_x + main_relative.ln();
    let c1_log = log_x - p.c_prime * log_eta.sqrt();
    let c2_log = log_x - (1.0 - p.delta) * log_eta;
    let switch = log_eta / (p.c * p.c);
    Ok(TheoremBound {
        log_x,
        x: log_x.exp(),
        main: main_log.exp(),
        main_log,
        main_relative,
        corollary_branch_1: c1_log.exp(),
        corollary_branch_1_log: c1_log,
        corollary_branch_2: c2_log.exp(),
        corollary_branch_2_log: c2_log,
        branch_1_applicable: p.big_v <= switch,
        branch_2_applicable: p.big_v > switch && p.big_v <= p.eta.powf(p.delta),
        parameters: scale_parameters(p.q, p.big_v, p.eta, p.epsilon, p.k),
    })
}
