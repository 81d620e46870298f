//! Rewriting the restricted correlation `S = Σ λ_z(n+h_1)⋯λ_z(n+h_k)` as a
//! sum over smooth tuples `(a_1, …, a_k)` of `λ(a_1⋯a_k)` times a character
//! sum along the polynomial `Q`, together with the measurements attached to
//! the individual pieces.
//!
//! For a tuple `a` put `a_i* = a_i/(a_1,a_i)`, `a_{1,i} = a_1/(a_1,a_i)`,
//! `M = [a_2*, …, a_k*]`, and let `r* ∈ (0, M]` solve the congruences
//! `n ≡ -(h_i*/(a_1,a_i))·inv(a_{1,i}) (mod a_i*)`. With
//! `n_1 = (ℓ-1)M + r*` the cofactors are `n_i = (a_1 n_1 + h_i*)/a_i
//! = c_i ℓ + e_i`, where `c_i = a_1 M/a_i` and `e_i = (a_1 r* + h_i*)/a_i - c_i`,
//! and `Q = ∏ (c_i X + e_i)`.

use crate::arith::{
    crt_solve, floor_pow, floor_u64, gcd, is_square_multiple_mod_p, mod_inverse, primes_up_to,
    radical_degree_mod_p, ArithError, Congruence, CrtSolution, IntPolynomial, SquareClass,
};
use crate::characters::QuadCharacter;
use crate::proxy::{lambda_z, ShiftSystem};
use crate::sieve::{LiouvilleTable, SieveError};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Default cap on enumeration volume (nodes visited).
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 200_000_000;

#[derive(Debug, thiserror::Error)]
pub enum DecompError {
    #[error("invalid tuple: {0}")]
    InvalidTuple(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("enumeration volume {estimated} exceeds limit {limit}")]
    Infeasible { estimated: u128, limit: u128 },
    #[error("range violated: {0}")]
    Range(String),
    #[error("Q({l}) = 0 inside the summation range")]
    ZeroValue { l: u64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

/// `(a_1, …, a_k)` with `z`-smooth entries `<= z^u` and
/// `(a_i, a_j) | (h_i - h_j)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SmoothTuple {
    a: Vec<u64>,
}

impl SmoothTuple {
    pub fn new(a: Vec<u64>, shifts: &ShiftSystem, z: f64, u: f64) -> Result<Self, DecompError> {
        let zu = floor_pow(z, u);
        let zb = floor_u64(z);
        if let Some(&bad) = a.iter().find(|&&ai| {
            ai == 0 || ai > zu || crate::arith::factorize(ai).iter().any(|&(p, _)| p > zb)
        }) {
            return Err(DecompError::InvalidTuple(format!(
                "{bad} is not a {z}-smooth integer in [1, {zu}]"
            )));
        }
        Self::unchecked_size(a, shifts)
    }

    /// Checks only length and the pairwise gcd condition.
    fn unchecked_size(a: Vec<u64>, shifts: &ShiftSystem) -> Result<Self, DecompError> {
        if a.len() != shifts.k() {
            return Err(DecompError::InvalidTuple(format!(
                "length {} differs from k = {}",
                a.len(),
                shifts.k()
            )));
        }
        if a.contains(&0) {
            return Err(DecompError::InvalidTuple("zero entry".into()));
        }
        let h = shifts.shifts();
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                if (h[j] - h[i]) % gcd(a[i], a[j]) != 0 {
                    return Err(DecompError::InvalidTuple(format!(
                        "({}, {}) does not divide h_{} - h_{}",
                        a[i],
                        a[j],
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> &[u64] {
        &self.a
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TupleCandidate {
    pub tuple: SmoothTuple,
    pub soluble: bool,
}

/// The congruences `n ≡ -(h_i*/(a_1,a_i))·inv(a_{1,i}) (mod a_i*)`,
/// `i = 2..k`.
pub fn linear_congruences(a: &[u64], shifts: &ShiftSystem) -> Result<Vec<Congruence>, DecompError> {
    let mut out = Vec::with_capacity(a.len().saturating_sub(1));
    for i in 1..a.len() {
        let g = gcd(a[0], a[i]);
        let h = shifts.h_star(i);
        if h % g != 0 {
            return Err(DecompError::InvalidTuple(format!(
                "(a_1, a_{}) = {g} does not divide h_{}* = {h}",
                i + 1,
                i + 1
            )));
        }
        let star = a[i] / g;
        let a1i = (a[0] / g) as i128;
        let inv = mod_inverse(a1i, star as i128)
            .ok_or_else(|| DecompError::Invariant("a_{1,i} not invertible mod a_i*".into()))?;
        let residue = -((h / g) as i128) * inv;
        out.push(Congruence::reduced(residue, star)?);
    }
    Ok(out)
}

/// Every tuple of `z`-smooth integers `<= z^u` meeting the gcd condition,
/// flagged by solubility of its congruence system.
pub fn enumerate_tuples(
    z: f64,
    u: f64,
    shifts: &ShiftSystem,
    limit: u128,
) -> Result<Vec<TupleCandidate>, DecompError> {
    let cands = crate::sieve::smooth_numbers(floor_pow(z, u), z);
    let estimated = (cands.len() as u128).saturating_pow(shifts.k() as u32);
    if estimated > limit {
        return Err(DecompError::Infeasible { estimated, limit });
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(shifts.k());
    walk_all(&cands, shifts, &mut current, &mut out)?;
    Ok(out)
}

fn walk_all(
    cands: &[u64],
    shifts: &ShiftSystem,
    current: &mut Vec<u64>,
    out: &mut Vec<TupleCandidate>,
) -> Result<(), DecompError> {
    if current.len() == shifts.k() {
        let soluble = crt_solve(&linear_congruences(current, shifts)?)?.is_some();
        out.push(TupleCandidate {
            tuple: SmoothTuple { a: current.clone() },
            soluble,
        });
        return Ok(());
    }
    let i = current.len();
    let h = shifts.shifts();
    for &c in cands {
        if (0..i).all(|j| (h[i] - h[j]) % gcd(current[j], c) == 0) {
            current.push(c);
            walk_all(cands, shifts, current, out)?;
            current.pop();
        }
    }
    Ok(())
}

/// Tuples contributing to `S` at `x`: entries `a_i <= min(z^u, ⌊x⌋ + h_i)`,
/// the gcd condition, and a non-empty `ℓ`-range (insoluble systems are kept
/// and flagged). Prefixes are pruned once `a_1·r*` exceeds `⌊x⌋ + h_1`,
/// which is sound because extending the system can only increase `r*`.
pub fn enumerate_tuples_in_range(
    x: f64,
    z: f64,
    u: f64,
    shifts: &ShiftSystem,
    limit: u128,
) -> Result<Vec<TupleCandidate>, DecompError> {
    let xb = floor_u64(x);
    let cands = crate::sieve::smooth_numbers(floor_pow(z, u).min(xb + shifts.max_shift()), z);
    let mut st = RangeWalk {
        cands: &cands,
        shifts,
        xb,
        visited: 0,
        limit,
        out: Vec::new(),
    };
    let mut current = Vec::with_capacity(shifts.k());
    st.walk(&mut current)?;
    Ok(st.out)
}

struct RangeWalk<'a> {
    cands: &'a [u64],
    shifts: &'a ShiftSystem,
    xb: u64,
    visited: u128,
    limit: u128,
    out: Vec<TupleCandidate>,
}

impl RangeWalk<'_> {
    fn walk(&mut self, current: &mut Vec<u64>) -> Result<(), DecompError> {
        let k = self.shifts.k();
        let i = current.len();
        let x1 = self.xb + self.shifts.h1();
        if i > 0 {
            let sol = crt_solve(&linear_congruences(current, self.shifts)?)?;
            match sol {
                None => {
                    if i == k {
                        self.out.push(TupleCandidate {
                            tuple: SmoothTuple { a: current.clone() },
                            soluble: false,
                        });
                    }
                    return Ok(());
                }
                Some(s) => {
                    if (current[0] as u128) * (s.r_star as u128) > x1 as u128 {
                        return Ok(());
                    }
                    if i == k {
                        let range = ell_range(current[0], &s, self.xb, self.shifts.h1());
                        if range.0 <= range.1 {
                            self.out.push(TupleCandidate {
                                tuple: SmoothTuple { a: current.clone() },
                                soluble: true,
                            });
                        }
                        return Ok(());
                    }
                }
            }
        }
        let h = self.shifts.shifts();
        let cap = self.xb + h[i];
        for &c in self.cands.iter().take_while(|&&c| c <= cap) {
            self.visited += 1;
            if self.visited > self.limit {
                return Err(DecompError::Infeasible {
                    estimated: self.visited,
                    limit: self.limit,
                });
            }
            if (0..i).all(|j| (h[i] - h[j]) % gcd(current[j], c) == 0) {
                current.push(c);
                self.walk(current)?;
                current.pop();
            }
        }
        Ok(())
    }
}

/// `[ℓ_min, ℓ_max]` with `h_1 < a_1 n_1 <= ⌊x⌋ + h_1`; empty when
/// `ℓ_min > ℓ_max`.
fn ell_range(a1: u64, sol: &CrtSolution, xb: u64, h1: u64) -> (u64, u64) {
    let (a1, r, m) = (a1 as u128, sol.r_star as u128, sol.modulus as u128);
    let top = (xb + h1) as u128;
    if a1 * r > top {
        return (1, 0);
    }
    let l_max = (top - a1 * r) / (a1 * m) + 1;
    let l_min = if a1 * r > h1 as u128 {
        1
    } else {
        (h1 as u128 - a1 * r) / (a1 * m) + 2
    };
    (l_min as u64, l_max as u64)
}

/// One outer-sum term after the congruence reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedTerm {
    pub tuple: SmoothTuple,
    pub shifts: Vec<u64>,
    pub r_star: u64,
    /// `(a_2*, …, a_k*)`
    pub star_moduli: Vec<u64>,
    pub big_modulus: u64,
    /// `(c_i, e_i)` with `Q_i(X) = c_i X + e_i`.
    pub linear_factors: Vec<(i128, i128)>,
    #[serde(serialize_with = "serialize_poly")]
    pub q: IntPolynomial,
    #[serde(serialize_with = "serialize_bigint")]
    pub discriminant: BigInt,
    /// Whether `M^{k(k-1)} ∏(h_i-h_j)^2 / (a_1⋯a_k)^{2(k-1)}` equals the
    /// discriminant; in general the correct leading factor is
    /// `(a_1 M)^{k(k-1)}`.
    pub reduced_formula_agrees: bool,
}

fn serialize_poly<S: serde::Serializer>(q: &IntPolynomial, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(q)
}

fn serialize_bigint<S: serde::Serializer>(d: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(d)
}

impl ReducedTerm {
    pub fn k(&self) -> usize {
        self.linear_factors.len()
    }

    /// `a_1 n_1` at `ℓ`, i.e. `n + h_1`.
    pub fn shifted_n(&self, l: u64) -> u128 {
        let a1 = self.tuple.a[0] as u128;
        a1 * ((l as u128 - 1) * self.big_modulus as u128 + self.r_star as u128)
    }

    /// `Q_i(ℓ) = n_i`.
    pub fn cofactor(&self, i: usize, l: u64) -> i128 {
        let (c, e) = self.linear_factors[i];
        c * l as i128 + e
    }
}

/// Solves the congruence system and builds `Q` and its discriminant.
/// `Ok(None)` means the system is insoluble.
pub fn reduce(tuple: &SmoothTuple, shifts: &ShiftSystem) -> Result<Option<ReducedTerm>, DecompError> {
    let a = tuple.a();
    if a.len() != shifts.k() {
        return Err(DecompError::InvalidTuple("length mismatch".into()));
    }
    let system = linear_congruences(a, shifts)?;
    let Some(sol) = crt_solve(&system)? else {
        return Ok(None);
    };
    let k = a.len();
    let (r, m) = (sol.r_star as i128, sol.modulus as i128);
    let a1 = a[0] as i128;
    let mut factors = Vec::with_capacity(k);
    for (i, &ai) in a.iter().enumerate() {
        let ai = ai as i128;
        let h = shifts.h_star(i) as i128;
        let top = a1 * r + h;
        if top % ai != 0 {
            return Err(DecompError::Invariant(format!(
                "a_1 r* + h_{}* = {top} not divisible by a_{} = {ai}",
                i + 1,
                i + 1
            )));
        }
        let g = gcd(a[0], a[i]) as i128;
        let star = ai / g;
        let a1i = a1 / g;
        if m % star != 0 {
            return Err(DecompError::Invariant("a_i* does not divide M".into()));
        }
        let c = a1i * (m / star);
        if c * ai != a1 * m {
            return Err(DecompError::Invariant("c_i differs from a_1 M / a_i".into()));
        }
        factors.push((c, top / ai - c));
    }
    let q = IntPolynomial::from_linear_factors(&factors)?;
    if q.degree() != Some(k) {
        return Err(DecompError::Invariant(format!("deg Q = {:?} != {k}", q.degree())));
    }

    let mut direct = BigInt::from(1);
    for i in 0..k {
        for j in i + 1..k {
            let (ci, ei) = factors[i];
            let (cj, ej) = factors[j];
            let diff = BigInt::from(ej) * ci - BigInt::from(ei) * cj;
            if diff == BigInt::from(0) {
                return Err(DecompError::Invariant("Q has a repeated root".into()));
            }
            direct *= &diff * &diff;
        }
    }
    let exp_top = (k * (k - 1)) as u32;
    let exp_bottom = 2 * (k as u32 - 1);
    let mut hprod = BigInt::from(1);
    let h = shifts.shifts();
    for i in 0..k {
        for j in i + 1..k {
            let d = BigInt::from(h[j] - h[i]);
            hprod *= &d * &d;
        }
    }
    let aprod: BigInt = a.iter().map(|&x| BigInt::from(x)).product();
    let den = aprod.pow(exp_bottom);
    let num = BigInt::from(a1 * m).pow(exp_top) * &hprod;
    if &num % &den != BigInt::from(0) || num / &den != direct {
        return Err(DecompError::Invariant(
            "closed-form discriminant differs from the root-difference product".into(),
        ));
    }
    let reduced_formula_agrees = BigInt::from(m).pow(exp_top) * hprod == &direct * den;

    let term = ReducedTerm {
        tuple: tuple.clone(),
        shifts: h.to_vec(),
        r_star: sol.r_star,
        star_moduli: system.iter().map(|c| c.modulus()).collect(),
        big_modulus: sol.modulus,
        linear_factors: factors,
        q,
        discriminant: direct,
        reduced_formula_agrees,
    };
    for (i, &ai) in a.iter().enumerate() {
        let lhs = (a[0] as u128 * sol.r_star as u128 + shifts.h_star(i) as u128) % ai as u128;
        if lhs != 0 {
            return Err(DecompError::Invariant(format!("a_1 r* ≢ -h_{}* (mod a_{})", i + 1, i + 1)));
        }
    }
    Ok(Some(term))
}

/// Value of the inner sum over `ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InnerSum {
    pub value: i64,
    /// Number of `ℓ` passing the roughness condition.
    pub rough_count: u64,
    pub l_min: u64,
    pub l_max: u64,
    /// The sum with the extra condition `(Q(ℓ), a_1⋯a_k ∏_{p<=k} p) = 1`;
    /// present when `z >= k`.
    pub value_with_coprimality: Option<i64>,
}

/// `Σ χ(Q(ℓ))` over `ℓ_min <= ℓ <= ℓ_max` with `P⁻(Q(ℓ)) > z`.
///
/// The upper end is `(x + h_1 - a_1 r*)/(a_1 M) + 1`; the lower end keeps
/// `n = a_1 n_1 - h_1 >= 1`, which only matters when `h_1 > 0`.
pub fn inner_sum(term: &ReducedTerm, x: f64, z: f64, chi: &QuadCharacter) -> Result<InnerSum, DecompError> {
    let primes = primes_up_to(floor_u64(z));
    inner_sum_with(term, x, z, &primes, chi, |_, _| {})
}

fn inner_sum_with<F>(
    term: &ReducedTerm,
    x: f64,
    z: f64,
    primes: &[u64],
    chi: &QuadCharacter,
    mut visit: F,
) -> Result<InnerSum, DecompError>
where
    F: FnMut(u64, i8),
{
    let xb = floor_u64(x);
    let sol = CrtSolution {
        r_star: term.r_star,
        modulus: term.big_modulus,
    };
    let h1 = term.shifts[0];
    let (l_min, l_max) = ell_range(term.tuple.a[0], &sol, xb, h1);
    let k = term.k();
    let coprime_to: Option<u128> = (z >= k as f64).then(|| {
        let small: u128 = primes_up_to(k as u64).iter().map(|&p| p as u128).product();
        term.tuple.a.iter().map(|&a| a as u128).product::<u128>() * small
    });
    let mut out = InnerSum {
        value: 0,
        rough_count: 0,
        l_min,
        l_max,
        value_with_coprimality: coprime_to.map(|_| 0),
    };
    for l in l_min..=l_max {
        let v = term
            .q
            .eval(l as i128)
            .ok_or(ArithError::Overflow("Q(l)"))?;
        if v == 0 {
            return Err(DecompError::ZeroValue { l });
        }
        let v = v.unsigned_abs();
        if primes.iter().any(|&p| v % p as u128 == 0) {
            continue;
        }
        let c = chi.value_wide(v);
        out.rough_count += 1;
        out.value += c as i64;
        if let (Some(m), Some(acc)) = (coprime_to, out.value_with_coprimality.as_mut()) {
            if crate::arith::gcd_u128(v, m) == 1 {
                *acc += c as i64;
            }
        }
        visit(l, c);
    }
    if let Some(alt) = out.value_with_coprimality {
        if alt != out.value {
            return Err(DecompError::Invariant(format!(
                "coprimality variant {alt} differs from {} although z >= k",
                out.value
            )));
        }
    }
    Ok(out)
}

/// Result of reassembling `S` both ways.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssembleReport {
    pub x: f64,
    pub z: f64,
    pub u: f64,
    pub shifts: Vec<u64>,
    pub discriminant: i64,
    pub s_direct: i64,
    pub s_decomposed: i64,
    pub equal: bool,
    /// Every restricted `n` corresponds to exactly one `(tuple, ℓ)` pair with
    /// matching summand.
    pub bijection_ok: bool,
    /// First `n` where the two paths disagree.
    pub first_mismatch: Option<u64>,
    /// Distinct smooth-part tuples realized by restricted `n`.
    pub tuples_total: u64,
    pub tuples_insoluble: u64,
    pub dropped_by_restriction: u64,
    pub enumeration: Option<EnumerationCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnumerationCheck {
    pub s_enumerated: i64,
    pub equal: bool,
    /// Soluble tuples with a non-empty `ℓ`-range.
    pub tuples_total: u64,
    pub tuples_insoluble: u64,
}

impl AssembleReport {
    pub fn identity_holds(&self) -> bool {
        self.equal && self.bijection_ok && self.enumeration.as_ref().is_none_or(|e| e.equal)
    }
}

/// `S` computed from its definition and from the tuple decomposition.
///
/// The decomposition groups `n` by its smooth-part tuple; with
/// `enumerate = true` the tuple-enumeration path runs as well.
pub fn assemble_s(
    x: f64,
    z: f64,
    u: f64,
    shifts: &ShiftSystem,
    chi: &QuadCharacter,
    table: &LiouvilleTable,
    enumerate: bool,
) -> Result<AssembleReport, DecompError> {
    if !(z > 1.0 && u >= 1.0) {
        return Err(DecompError::Range(format!("z > 1 and u >= 1 (got z = {z}, u = {u})")));
    }
    let xb = floor_u64(x);
    if xb > 0 {
        table.ensure_covers(xb + shifts.max_shift())?;
    }
    let zu = floor_pow(z, u);
    let h = shifts.shifts();

    // Direct path: per n, the smooth-part tuple (None if restricted away)
    // and the summand.
    let rows: Vec<(Option<Vec<u64>>, i8)> = (1..=xb)
        .into_par_iter()
        .map(|n| {
            let parts: Vec<u64> = h.iter().map(|&hi| table.smooth_part(n + hi, z)).collect();
            if parts.iter().any(|&p| p > zu) {
                (None, 0)
            } else {
                let v = h.iter().map(|&hi| lambda_z(n + hi, z, chi, table)).product();
                (Some(parts), v)
            }
        })
        .collect();
    let s_direct: i64 = rows.iter().map(|r| r.1 as i64).sum();
    let dropped = rows.iter().filter(|r| r.0.is_none()).count() as u64;

    let mut groups: BTreeMap<Vec<u64>, Vec<u64>> = BTreeMap::new();
    for (i, (parts, _)) in rows.iter().enumerate() {
        if let Some(p) = parts {
            groups.entry(p.clone()).or_default().push(i as u64 + 1);
        }
    }

    let primes = primes_up_to(floor_u64(z));
    let group_list: Vec<(&Vec<u64>, &Vec<u64>)> = groups.iter().collect();
    let per_group: Vec<Result<GroupOutcome, DecompError>> = group_list
        .par_iter()
        .map(|&(a, ns)| {
            let tuple = SmoothTuple::unchecked_size(a.clone(), shifts)?;
            let Some(term) = reduce(&tuple, shifts)? else {
                return Ok(GroupOutcome {
                    contribution: 0,
                    insoluble: true,
                    mismatch: ns.first().copied(),
                });
            };
            let lam: i8 = a.iter().map(|&ai| table.lambda(ai)).product();
            let mut seen: Vec<(u64, i8)> = Vec::new();
            let inner = inner_sum_with(&term, x, z, &primes, chi, |l, c| {
                let n = (term.shifted_n(l) - term.shifts[0] as u128) as u64;
                seen.push((n, lam * c));
            })?;
            // ℓ increases with n, so `seen` is sorted by n
            let mut mismatch = None;
            let mut it = seen.iter().peekable();
            for &n in ns {
                match it.peek() {
                    Some(&&(m, v)) if m == n => {
                        it.next();
                        if v != rows[(n - 1) as usize].1 {
                            mismatch = Some(n);
                            break;
                        }
                    }
                    Some(&&(m, _)) if m < n => {
                        mismatch = Some(m);
                        break;
                    }
                    _ => {
                        mismatch = Some(n);
                        break;
                    }
                }
            }
            if mismatch.is_none() {
                mismatch = it.next().map(|&(m, _)| m);
            }
            Ok(GroupOutcome {
                contribution: lam as i64 * inner.value,
                insoluble: false,
                mismatch,
            })
        })
        .collect();
    let mut s_decomposed = 0i64;
    let mut insoluble = 0u64;
    let mut first_mismatch: Option<u64> = None;
    for g in per_group {
        let g = g?;
        s_decomposed += g.contribution;
        insoluble += u64::from(g.insoluble);
        if let Some(m) = g.mismatch {
            first_mismatch = Some(first_mismatch.map_or(m, |f| f.min(m)));
        }
    }

    let enumeration = if enumerate {
        let cands = enumerate_tuples_in_range(x, z, u, shifts, DEFAULT_ENUMERATION_LIMIT)?;
        let results: Vec<Result<i64, DecompError>> = cands
            .par_iter()
            .filter(|c| c.soluble)
            .map(|c| {
                let term = reduce(&c.tuple, shifts)?
                    .ok_or_else(|| DecompError::Invariant("solubility flag disagrees".into()))?;
                let lam: i8 = c.tuple.a.iter().map(|&ai| table.lambda(ai)).product();
                Ok(lam as i64 * inner_sum_with(&term, x, z, &primes, chi, |_, _| {})?.value)
            })
            .collect();
        let mut s = 0i64;
        for r in results {
            s += r?;
        }
        let ins = cands.iter().filter(|c| !c.soluble).count() as u64;
        Some(EnumerationCheck {
            s_enumerated: s,
            equal: s == s_direct,
            tuples_total: cands.len() as u64 - ins,
            tuples_insoluble: ins,
        })
    } else {
        None
    };

    Ok(AssembleReport {
        x,
        z,
        u,
        shifts: h.to_vec(),
        discriminant: chi.discriminant(),
        s_direct,
        s_decomposed,
        equal: s_direct == s_decomposed,
        bijection_ok: first_mismatch.is_none(),
        first_mismatch,
        tuples_total: groups.len() as u64,
        tuples_insoluble: insoluble,
        dropped_by_restriction: dropped,
        enumeration,
    })
}

struct GroupOutcome {
    contribution: i64,
    insoluble: bool,
    mismatch: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionReport {
    /// `#{n <= x : (n+h_i)_z > z^u for some i}`
    pub dropped: u64,
    /// `Σ_i #{h_i < m <= x + h_i : m_z > z^u}`, which majorizes `dropped`.
    pub union_count: u64,
    /// `x e^{-u/2} + 1`
    pub bound: f64,
    pub ratio: f64,
}

/// Count of `n <= x` removed by the smooth-part restriction, without the
/// `x >= z^u` hypothesis.
pub fn dropped_by_restriction(
    x: f64,
    z: f64,
    u: f64,
    shifts: &ShiftSystem,
    table: &LiouvilleTable,
) -> Result<u64, DecompError> {
    let xb = floor_u64(x);
    if xb == 0 {
        return Ok(0);
    }
    table.ensure_covers(xb + shifts.max_shift())?;
    let zu = floor_pow(z, u);
    Ok((1..=xb)
        .into_par_iter()
        .filter(|&n| shifts.shifts().iter().any(|&h| table.smooth_part(n + h, z) > zu))
        .count() as u64)
}

pub fn restriction_error(
    x: f64,
    z: f64,
    u: f64,
    shifts: &ShiftSystem,
    table: &LiouvilleTable,
) -> Result<RestrictionReport, DecompError> {
    if !(x >= z && z > 1.0 && u >= 1.0) {
        return Err(DecompError::Range(format!("x >= z > 1, u >= 1 (x = {x}, z = {z}, u = {u})")));
    }
    if x < z.powf(u) {
        return Err(DecompError::Range(format!("hypothesis x >= z^u violated (x = {x}, z^u = {})", z.powf(u))));
    }
    let dropped = dropped_by_restriction(x, z, u, shifts, table)?;
    let xb = floor_u64(x);
    let zu = floor_pow(z, u);
    let union_count = shifts
        .shifts()
        .iter()
        .map(|&h| {
            (h + 1..=xb + h)
                .into_par_iter()
                .filter(|&m| table.smooth_part(m, z) > zu)
                .count() as u64
        })
        .sum();
    let bound = x * (-u / 2.0).exp() + 1.0;
    Ok(RestrictionReport {
        dropped,
        union_count,
        bound,
        ratio: dropped as f64 / bound,
    })
}

/// Legendre symbol table `(n | p)` for `0 <= n < p`.
pub fn legendre_table(p: u64) -> Vec<i8> {
    let mut t = vec![-1i8; p as usize];
    t[0] = 0;
    for n in 1..=(p / 2) {
        t[(n * n % p) as usize] = 1;
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeilComplete {
    pub p: u64,
    pub signed_sum: i64,
    pub abs_sum: u64,
    /// Number of distinct roots of `f mod p` over the algebraic closure.
    pub radical_degree: usize,
    pub weil_bound: f64,
    pub is_square_case: bool,
    /// `abs_sum <= (g-1)√p`, decided in integers; `None` in the square case.
    pub holds: Option<bool>,
}

/// `|Σ_{n mod p} (f(n) | p)|` against `(g-1)√p`.
pub fn weil_complete_sum(p: u64, f: &IntPolynomial) -> Result<WeilComplete, DecompError> {
    weil_complete_sum_with(p, f, &legendre_table(p))
}

pub fn weil_complete_sum_with(p: u64, f: &IntPolynomial, table: &[i8]) -> Result<WeilComplete, DecompError> {
    let class = is_square_multiple_mod_p(f, p)?;
    if class == SquareClass::Degenerate {
        return Err(DecompError::Range(format!("f vanishes identically modulo {p}")));
    }
    let g = radical_degree_mod_p(f, p)?.unwrap_or(0);
    let signed_sum: i64 = (0..p).map(|n| table[f.eval_mod(n, p) as usize] as i64).sum();
    let abs_sum = signed_sum.unsigned_abs();
    let is_square_case = class.is_square_multiple();
    let holds = (!is_square_case).then(|| {
        let g1 = g.saturating_sub(1) as u128;
        (abs_sum as u128).pow(2) <= g1 * g1 * p as u128
    });
    Ok(WeilComplete {
        p,
        signed_sum,
        abs_sum,
        radical_degree: g,
        weil_bound: g.saturating_sub(1) as f64 * (p as f64).sqrt(),
        is_square_case,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeilIncomplete {
    pub abs_sum: u64,
    /// Product of the odd primes `p | q` with `f` a constant multiple of a
    /// square modulo `p`.
    pub q_star: u64,
    /// `√(q*)·(N/√q + √q)·q^ε`
    pub rhs: f64,
    pub ratio: f64,
}

/// `|Σ_{M < n <= M+N} χ(f(n))|` against `√(q*)(N/√q + √q)q^ε`.
pub fn weil_incomplete_measure(
    chi: &QuadCharacter,
    f: &IntPolynomial,
    m_start: i64,
    n_len: u64,
    epsilon: f64,
) -> Result<WeilIncomplete, DecompError> {
    let q = chi.modulus();
    let mut q_star = 1u64;
    for (p, _) in crate::arith::factorize(q) {
        if p > 2 && is_square_multiple_mod_p(f, p)?.is_square_multiple() {
            q_star *= p;
        }
    }
    let sum: i64 = (1..=n_len)
        .into_par_iter()
        .map(|j| {
            let n = (m_start as i128 + j as i128).rem_euclid(q as i128) as u64;
            chi.value(f.eval_mod(n, q)) as i64
        })
        .sum();
    let qf = q as f64;
    let rhs = (q_star as f64).sqrt() * (n_len as f64 / qf.sqrt() + qf.sqrt()) * qf.powf(epsilon);
    Ok(WeilIncomplete {
        abs_sum: sum.unsigned_abs(),
        q_star,
        rhs,
        ratio: sum.unsigned_abs() as f64 / rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RhoReport {
    pub primes_checked: u64,
    /// Primes `p > max h_i`, `p ∤ a_1⋯a_k` (expect `ρ(p) = k`).
    pub full_count_checked: u64,
    pub full_count_failures: Vec<(u64, u64)>,
    /// Primes `p > max h_i`, `p | a_1⋯a_k` (expect `ρ(p) <= 1`).
    pub divisor_checked: u64,
    pub divisor_failures: Vec<(u64, u64)>,
    /// Primes `p <= max h_i` dividing `a_1⋯a_k` with `ρ(p) > 1`; outside the
    /// range where the bound is claimed.
    pub small_prime_exceptions: Vec<(u64, u64)>,
    pub multiplicative_checked: u64,
    /// `(p, p', ρ(pp'))` with `ρ(pp') != ρ(p)ρ(p')`.
    pub multiplicative_failures: Vec<(u64, u64, u64)>,
}

impl RhoReport {
    pub fn ok(&self) -> bool {
        self.full_count_failures.is_empty()
            && self.divisor_failures.is_empty()
            && self.multiplicative_failures.is_empty()
    }
}

/// Root counts of `Q` at every prime `p <= p_max`, checked against
/// `ρ(p) = k` (`p > max h`, `p ∤ a_1⋯a_k`) and `ρ(p) <= 1`
/// (`p > max h`, `p | a_1⋯a_k`), plus `ρ(pp') = ρ(p)ρ(p')` for `pp' <= p_max`.
pub fn rho_structure_check(term: &ReducedTerm, p_max: u64) -> Result<RhoReport, DecompError> {
    let primes = primes_up_to(p_max);
    let max_h = *term.shifts.iter().max().unwrap();
    let k = term.k() as u64;
    let rho: Vec<u64> = primes
        .iter()
        .map(|&p| crate::arith::count_roots(&term.q, p))
        .collect::<Result<_, _>>()?;
    let mut rep = RhoReport {
        primes_checked: primes.len() as u64,
        full_count_checked: 0,
        full_count_failures: vec![],
        divisor_checked: 0,
        divisor_failures: vec![],
        small_prime_exceptions: vec![],
        multiplicative_checked: 0,
        multiplicative_failures: vec![],
    };
    for (&p, &r) in primes.iter().zip(&rho) {
        let divides = term.tuple.a.iter().any(|&a| a % p == 0);
        match (p > max_h, divides) {
            (true, false) => {
                rep.full_count_checked += 1;
                if r != k {
                    rep.full_count_failures.push((p, r));
                }
            }
            (true, true) => {
                rep.divisor_checked += 1;
                if r > 1 {
                    rep.divisor_failures.push((p, r));
                }
            }
            (false, true) if r > 1 => rep.small_prime_exceptions.push((p, r)),
            _ => {}
        }
    }
    for i in 0..primes.len() {
        for j in i + 1..primes.len() {
            let m = primes[i] * primes[j];
            if m > p_max {
                break;
            }
            rep.multiplicative_checked += 1;
            let r = crate::arith::count_roots(&term.q, m)?;
            if r != rho[i] * rho[j] {
                rep.multiplicative_failures.push((primes[i], primes[j], r));
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenriotMeasure {
    /// `Σ_{ℓ <= x/(a_1 M)} τ(Q(ℓ))^2 1_{P⁻(Q(ℓ)) > z_r} 1_{(Q(ℓ), a_1⋯a_k ∏_{p<=k} p) = 1}`
    pub lhs: u64,
    pub l_max: u64,
    /// `∏_{p<=z} (1 - ρ(p)/p)`
    pub local_density: f64,
    /// `∏_{p | D, p ∤ a_1⋯a_k} 5^k`
    pub discriminant_factor: f64,
    /// `(Σ_{m<=x, P⁻(m)>z_r, (m, a_1⋯a_k)=1} τ(m)^2/m)^k`
    pub divisor_series: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `None` when `rhs = 0`.
    pub ratio: Option<f64>,
}

/// The divisor sum along `Q` and the Henriot-type majorant built from it;
/// `table` must cover `⌊x⌋ + max h`.
pub fn henriot_measure(
    term: &ReducedTerm,
    x: f64,
    z: f64,
    z_r: f64,
    table: &LiouvilleTable,
) -> Result<HenriotMeasure, DecompError> {
    let xb = floor_u64(x);
    let k = term.k();
    table.ensure_covers(xb + term.shifts.iter().max().unwrap() - term.shifts[0])?;
    let a = &term.tuple.a;
    let a1m = a[0] as u128 * term.big_modulus as u128;
    let l_max = (xb as u128 / a1m) as u64;
    let bad_primes: Vec<u64> = {
        let mut v: Vec<u64> = primes_up_to(k as u64);
        for &ai in a {
            v.extend(crate::arith::factorize(ai).iter().map(|&(p, _)| p));
        }
        v.sort_unstable();
        v.dedup();
        v
    };
    let lhs: u64 = (1..=l_max)
        .into_par_iter()
        .map(|l| {
            let mut exps: BTreeMap<u64, u32> = BTreeMap::new();
            for i in 0..k {
                let n = term.cofactor(i, l) as u64;
                for (p, e) in table.factorize(n) {
                    *exps.entry(p).or_default() += e;
                }
            }
            let rough = exps.keys().next().is_none_or(|&p| p as f64 > z_r);
            let coprime = bad_primes.iter().all(|p| !exps.contains_key(p));
            if rough && coprime {
                let tau: u64 = exps.values().map(|&e| e as u64 + 1).product();
                tau * tau
            } else {
                0
            }
        })
        .sum();

    let mut local_density = 1.0;
    for p in primes_up_to(floor_u64(z)) {
        let r = crate::arith::count_roots(&term.q, p)?;
        local_density *= 1.0 - r as f64 / p as f64;
    }
    let mut candidates: Vec<u64> = Vec::new();
    for v in [a[0], term.big_modulus] {
        candidates.extend(crate::arith::factorize(v).iter().map(|&(p, _)| p));
    }
    for i in 0..k {
        for j in i + 1..k {
            let d = term.shifts[j].abs_diff(term.shifts[i]);
            candidates.extend(crate::arith::factorize(d).iter().map(|&(p, _)| p));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    let mut discriminant_factor = 1.0;
    for p in candidates {
        let divides_a = a.iter().any(|&ai| ai % p == 0);
        if !divides_a && &term.discriminant % BigInt::from(p) == BigInt::from(0) {
            discriminant_factor *= 5f64.powi(k as i32);
        }
    }
    let single: f64 = (1..=xb)
        .filter_map(|m| {
            let f = table.factorize(m);
            let rough = f.first().is_none_or(|&(p, _)| p as f64 > z_r);
            let coprime = f.iter().all(|&(p, _)| a.iter().all(|&ai| ai % p != 0));
            (rough && coprime).then(|| {
                let tau: u64 = f.iter().map(|&(_, e)| e as u64 + 1).product();
                (tau * tau) as f64 / m as f64
            })
        })
        .sum();
    let divisor_series = single.powi(k as i32);
    let rhs = x / a1m as f64 * local_density * discriminant_factor * divisor_series;
    Ok(HenriotMeasure {
        lhs,
        l_max,
        local_density,
        discriminant_factor,
        divisor_series,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs as f64 / rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shifts(h: &[u64]) -> ShiftSystem {
        ShiftSystem::new(h.to_vec()).unwrap()
    }

    fn tuple(a: &[u64], s: &ShiftSystem) -> SmoothTuple {
        SmoothTuple::unchecked_size(a.to_vec(), s).unwrap()
    }

    #[test]
    fn enumerate_small_example() {
        let s = shifts(&[0, 1]);
        let got: Vec<Vec<u64>> = enumerate_tuples(2.0, 1.0, &s, 1000)
            .unwrap()
            .into_iter()
            .map(|c| {
                assert!(c.soluble);
                c.tuple.a
            })
            .collect();
        assert_eq!(got, vec![vec![1, 1], vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn enumerate_coprime_for_adjacent_shifts() {
        let s = shifts(&[0, 1]);
        for c in enumerate_tuples(5.0, 2.0, &s, 10_000).unwrap() {
            assert_eq!(gcd(c.tuple.a[0], c.tuple.a[1]), 1);
        }
        assert!(matches!(
            enumerate_tuples(30.0, 3.0, &shifts(&[0, 1, 2]), 1000),
            Err(DecompError::Infeasible { .. })
        ));
    }

    #[test]
    fn gcd_condition_implies_solubility() {
        for h in [vec![0, 2, 6], vec![0, 4], vec![1, 3, 5]] {
            let s = shifts(&h);
            for c in enumerate_tuples(6.0, 2.0, &s, 1 << 20).unwrap() {
                assert!(c.soluble, "{:?}", c.tuple);
            }
        }
    }

    #[test]
    fn smooth_tuple_validation() {
        let s = shifts(&[0, 1]);
        assert!(SmoothTuple::new(vec![2, 7], &s, 5.0, 2.0).is_err());
        assert!(SmoothTuple::new(vec![2, 4], &s, 5.0, 2.0).is_err());
        assert!(SmoothTuple::new(vec![2, 27], &s, 5.0, 2.0).is_err());
        assert!(SmoothTuple::new(vec![2, 25], &s, 5.0, 2.0).is_ok());
    }

    #[test]
    fn reduce_example() {
        let s = shifts(&[0, 1]);
        let t = reduce(&tuple(&[2, 3], &s), &s).unwrap().unwrap();
        assert_eq!((t.r_star, t.big_modulus), (1, 3));
        assert_eq!(t.star_moduli, vec![3]);
        // Q_1 = 3ℓ - 2, Q_2 = 2ℓ - 1
        assert_eq!(t.linear_factors, vec![(3, -2), (2, -1)]);
    }

    #[test]
    fn reduce_trivial_moduli() {
        let s = shifts(&[2, 3, 7]);
        let t = reduce(&tuple(&[1, 1, 1], &s), &s).unwrap().unwrap();
        assert_eq!((t.r_star, t.big_modulus), (1, 1));
        // n_1 = ℓ, so Q(X) = ∏ (X + h_i*)
        assert_eq!(t.linear_factors, vec![(1, 0), (1, 1), (1, 5)]);
        assert_eq!(t.discriminant, BigInt::from(1 * 25 * 16));
        assert!(t.reduced_formula_agrees);
    }

    #[test]
    fn discriminant_formula_needs_a1_factor() {
        let s = shifts(&[0, 1]);
        let t = reduce(&tuple(&[2, 1], &s), &s).unwrap().unwrap();
        // Q = X(2X + 1)
        assert_eq!(t.q.coefficients(), &[0, 1, 2]);
        assert_eq!(t.discriminant, BigInt::from(1));
        assert!(!t.reduced_formula_agrees);
    }

    #[test]
    fn reduced_terms_satisfy_congruences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = shifts(&[0, 2, 6]);
        let cands = enumerate_tuples(7.0, 2.0, &s, 1 << 24).unwrap();
        for _ in 0..500 {
            let c = &cands[rng.gen_range(0..cands.len())];
            let t = reduce(&c.tuple, &s).unwrap().unwrap();
            let a = c.tuple.a();
            for l in 0..3u64 {
                for (i, &ai) in a.iter().enumerate() {
                    let v = a[0] * (t.r_star + l * t.big_modulus) + s.h_star(i);
                    assert_eq!(v % ai, 0);
                }
                // Q_i(ℓ) = (a_1 n_1 + h_i*)/a_i
                for i in 0..3 {
                    let n1 = l * t.big_modulus + t.r_star;
                    let expect = (a[0] * n1 + s.h_star(i)) / a[i];
                    assert_eq!(t.cofactor(i, l + 1), expect as i128);
                }
            }
        }
    }

    fn naive_inner(x: u64, z: u64, a: &[u64], h: &[u64], chi: &QuadCharacter) -> i64 {
        let mut total = 0;
        for n in 1..=x {
            if h.iter().zip(a).any(|(&hi, &ai)| (n + hi) % ai != 0) {
                continue;
            }
            let prod: u128 = h.iter().zip(a).map(|(&hi, &ai)| ((n + hi) / ai) as u128).product();
            if (2..=z).any(|p| crate::arith::is_prime(p) && prod % p as u128 == 0) {
                continue;
            }
            total += chi.value_wide(prod) as i64;
        }
        total
    }

    #[test]
    fn inner_sum_matches_naive_loop() {
        let chi = QuadCharacter::from_discriminant(-4).unwrap();
        let s = shifts(&[0, 1]);
        let t = reduce(&tuple(&[1, 1], &s), &s).unwrap().unwrap();
        let got = inner_sum(&t, 50.0, 3.0, &chi).unwrap();
        assert_eq!(got.value, naive_inner(50, 3, &[1, 1], &[0, 1], &chi));
        assert_eq!(got.value_with_coprimality, Some(got.value));

        let chi = QuadCharacter::from_discriminant(-163).unwrap();
        for h in [vec![0, 2], vec![1, 4, 5], vec![3]] {
            let s = shifts(&h);
            for c in enumerate_tuples(5.0, 2.0, &s, 1 << 20).unwrap() {
                let t = reduce(&c.tuple, &s).unwrap().unwrap();
                let got = inner_sum(&t, 300.0, 5.0, &chi).unwrap();
                assert_eq!(got.value, naive_inner(300, 5, c.tuple.a(), &h, &chi), "{:?} {h:?}", c.tuple);
            }
        }
    }

    #[test]
    fn inner_sum_empty_and_large_z() {
        let chi = QuadCharacter::from_discriminant(5).unwrap();
        let s = shifts(&[0, 1]);
        let t = reduce(&tuple(&[16, 1], &s), &s).unwrap().unwrap();
        let got = inner_sum(&t, 10.0, 3.0, &chi).unwrap();
        assert_eq!((got.value, got.rough_count), (0, 0));
        assert!(got.l_min > got.l_max);
        // z above every Q(ℓ): only Q(ℓ) = 1 survives, which never happens here
        let t = reduce(&tuple(&[1, 1], &s), &s).unwrap().unwrap();
        let got = inner_sum(&t, 20.0, 500.0, &chi).unwrap();
        assert_eq!(got.rough_count, 0);
        // a = (1, 2): ℓ = 1 gives n = 1 with n_1 = n_2 = 1
        let t = reduce(&tuple(&[1, 2], &s), &s).unwrap().unwrap();
        assert_eq!(inner_sum(&t, 1.0, 2.0, &chi).unwrap().rough_count, 1);
    }

    fn table() -> LiouvilleTable {
        LiouvilleTable::build(10_100, 1 << 12).unwrap()
    }

    #[test]
    fn assemble_example_and_enumeration() {
        let t = table();
        let chi = QuadCharacter::from_discriminant(-4).unwrap();
        let r = assemble_s(1000.0, 5.0, 2.0, &shifts(&[0, 1]), &chi, &t, true).unwrap();
        assert!(r.identity_holds(), "{r:?}");
        assert_eq!(r.tuples_insoluble, 0);
        let e = r.enumeration.unwrap();
        assert_eq!(e.s_enumerated, r.s_direct);
        assert!(e.tuples_total >= r.tuples_total);
    }

    #[test]
    fn assemble_vacuous_restriction_is_full_correlation() {
        let t = table();
        let chi = QuadCharacter::from_discriminant(5).unwrap();
        let s = shifts(&[0, 3]);
        let r = assemble_s(500.0, 5.0, 5.0, &s, &chi, &t, false).unwrap();
        assert_eq!(r.dropped_by_restriction, 0);
        let full = crate::proxy::correlate(|n| lambda_z(n, 5.0, &chi, &t), &s, 500.0, t.limit()).unwrap();
        assert_eq!(r.s_direct, full);
        assert!(r.identity_holds());
    }

    #[test]
    fn assemble_grid_small() {
        let t = table();
        for d in [-4, 5, -163] {
            let chi = QuadCharacter::from_discriminant(d).unwrap();
            for h in [vec![0], vec![2], vec![0, 1], vec![1, 3], vec![0, 2, 6], vec![2, 3, 5]] {
                for (z, u) in [(5.0, 2.0), (10.0, 3.0), (30.0, 2.0)] {
                    let r = assemble_s(1000.0, z, u, &shifts(&h), &chi, &t, true).unwrap();
                    assert!(r.identity_holds(), "d={d} h={h:?} z={z} u={u}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn restriction_error_examples() {
        let t = LiouvilleTable::build(100_010, 1 << 14).unwrap();
        let s = shifts(&[0, 1]);
        let r = restriction_error(1e5, 10.0, 3.0, &s, &t).unwrap();
        let naive = (1..=100_000u64)
            .filter(|&n| [n, n + 1].iter().any(|&m| t.smooth_part(m, 10.0) > 1000))
            .count() as u64;
        assert_eq!(r.dropped, naive);
        assert!(r.dropped <= r.union_count);
        let r = restriction_error(1000.0, 10.0, 3.0, &s, &t).unwrap();
        assert!(r.dropped <= r.union_count);
        assert!(restriction_error(999.0, 10.0, 3.0, &s, &t).is_err());
        assert_eq!(dropped_by_restriction(500.0, 10.0, 3.0, &s, &t).unwrap(), 0);
    }

    #[test]
    fn weil_complete_examples() {
        let w = weil_complete_sum(11, &IntPolynomial::monomial_x()).unwrap();
        assert_eq!((w.abs_sum, w.holds), (0, Some(true)));
        let w = weil_complete_sum(7, &IntPolynomial::new(vec![0, 0, 1])).unwrap();
        assert!(w.is_square_case);
        assert_eq!((w.abs_sum, w.holds), (6, None));
        let w = weil_complete_sum(101, &IntPolynomial::new(vec![0, 1, 1])).unwrap();
        assert_eq!((w.abs_sum, w.radical_degree, w.holds), (1, 2, Some(true)));
        assert!(weil_complete_sum(7, &IntPolynomial::new(vec![7, 14])).is_err());
        assert!(weil_complete_sum(9, &IntPolynomial::monomial_x()).is_err());
    }

    #[test]
    fn weil_bound_holds_for_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [3u64, 5, 7, 13, 101, 211] {
            let table = legendre_table(p);
            for _ in 0..100 {
                let deg = rng.gen_range(1..=5);
                let mut c: Vec<i128> = (0..=deg).map(|_| rng.gen_range(0..p as i128)).collect();
                c[deg] = rng.gen_range(1..p as i128);
                let f = IntPolynomial::new(c);
                let w = weil_complete_sum_with(p, &f, &table).unwrap();
                assert_ne!(w.holds, Some(false), "p={p} f={f}");
            }
        }
    }

    #[test]
    fn legendre_table_matches_kronecker() {
        for p in [3u64, 5, 7, 101, 1009] {
            let t = legendre_table(p);
            for n in 0..p {
                assert_eq!(t[n as usize], crate::arith::kronecker(n as i64, p));
            }
        }
    }

    #[test]
    fn weil_incomplete_examples() {
        let chi = QuadCharacter::from_discriminant(-163).unwrap();
        let f = IntPolynomial::new(vec![0, 1, 1]);
        let w = weil_incomplete_measure(&chi, &f, 0, 0, 0.1).unwrap();
        assert_eq!(w.abs_sum, 0);
        let c = IntPolynomial::constant(2);
        let w = weil_incomplete_measure(&chi, &c, 5, 1000, 0.1).unwrap();
        assert_eq!((w.abs_sum, w.q_star), (1000, 163));
        let w = weil_incomplete_measure(&chi, &f, 0, 10_000, 0.1).unwrap();
        assert_eq!(w.q_star, 1);
        assert!(w.ratio.is_finite());
        // negative start wraps around the period
        let chi = QuadCharacter::from_discriminant(-7).unwrap();
        let x = IntPolynomial::monomial_x();
        let w = weil_incomplete_measure(&chi, &x, -7, 7, 0.0).unwrap();
        assert_eq!(w.abs_sum, 0);
    }

    #[test]
    fn rho_structure_examples() {
        let s = shifts(&[0, 1]);
        let t = reduce(&tuple(&[1, 1], &s), &s).unwrap().unwrap();
        assert_eq!(crate::arith::count_roots(&t.q, 5).unwrap(), 2);
        let r = rho_structure_check(&t, 1000).unwrap();
        assert!(r.ok(), "{r:?}");
        assert_eq!(r.full_count_checked, 168);

        let s = shifts(&[0, 2, 6]);
        let t = reduce(&tuple(&[5, 7, 11], &s), &s).unwrap();
        assert!(t.is_none() || rho_structure_check(&t.unwrap(), 1000).unwrap().ok());
        let t = reduce(&tuple(&[14, 4, 1], &s), &s).unwrap().unwrap();
        let r = rho_structure_check(&t, 1000).unwrap();
        assert!(r.ok(), "{r:?}");
        assert!(r.divisor_checked >= 1);
    }

    #[test]
    fn rho_small_prime_exception_is_reported() {
        let s = shifts(&[0, 2]);
        let t = reduce(&tuple(&[2, 2], &s), &s).unwrap().unwrap();
        let r = rho_structure_check(&t, 100).unwrap();
        assert_eq!(r.small_prime_exceptions, vec![(2, 2)]);
        assert!(r.ok());
    }

    #[test]
    fn henriot_measure_is_finite() {
        let t = table();
        let s = shifts(&[0, 1]);
        let term = reduce(&tuple(&[1, 1], &s), &s).unwrap().unwrap();
        let m = henriot_measure(&term, 10_000.0, 10.0, 3.0, &t).unwrap();
        // ρ(2) = 2 for X(X+1): a fixed prime divisor kills both sides
        assert_eq!(m.lhs, 0);
        assert_eq!(m.local_density, 0.0);
        assert_eq!(m.ratio, None);
        let s = shifts(&[0, 2]);
        let term = reduce(&tuple(&[3, 1], &s), &s).unwrap().unwrap();
        let m = henriot_measure(&term, 10_000.0, 10.0, 3.0, &t).unwrap();
        assert!(m.lhs > 0 && m.ratio.unwrap().is_finite());
    }
}
