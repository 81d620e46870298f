//! Exact integer and modular arithmetic: gcd/lcm, the Kronecker symbol,
//! CRT solving, classical multiplicative functions and integer polynomials
//! reduced modulo `m`.

use num_bigint::BigUint;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("zero polynomial is not a valid input")]
    ZeroPolynomial,
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("residue {residue} is not reduced modulo {modulus}")]
    UnreducedResidue { residue: u64, modulus: u64 },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("multiplicative functions are defined for n >= 1")]
    ZeroArgument,
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Least common multiple; `None` on overflow.
pub fn lcm(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}

/// Extended Euclid: returns `(g, s, t)` with `s*a + t*b = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `a` modulo `m`, reduced into `[0, m)`. `m = 1` yields 0.
pub fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    if m <= 0 {
        return None;
    }
    let (g, s, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| s.rem_euclid(m))
}

pub fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut acc: u128 = 1;
    let mut b = (base % m) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Kronecker symbol `(d | n)`.
///
/// `(d | 0)` is 1 for `d = ±1` and 0 otherwise.
pub fn kronecker(d: i64, n: u64) -> i8 {
    kronecker_wide(d as i128, n as u128)
}

/// Kronecker symbol for wide arguments; `n` must be below `2^127`.
pub fn kronecker_wide(d: i128, n: u128) -> i8 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut result = 1i8;
    let twos = n.trailing_zeros();
    let mut n = n >> twos;
    if twos > 0 {
        if d.rem_euclid(2) == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(d.rem_euclid(8), 3 | 5) {
            result = -result;
        }
    }
    // Jacobi symbol (a | n) for odd n only depends on a mod n.
    let mut a = d.rem_euclid(n as i128) as u128;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Kronecker symbol with a signed lower argument, `(d | -1) = sign(d)`.
pub fn kronecker_signed(d: i128, n: i128) -> i8 {
    let base = kronecker_wide(d, n.unsigned_abs());
    if n < 0 && d < 0 {
        -base
    } else {
        base
    }
}

/// A single linear condition `n ≡ residue (mod modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Congruence {
    residue: u64,
    modulus: u64,
}

impl Congruence {
    pub fn new(residue: u64, modulus: u64) -> Result<Self, ArithError> {
        if modulus == 0 {
            return Err(ArithError::ZeroModulus);
        }
        if residue >= modulus {
            return Err(ArithError::UnreducedResidue { residue, modulus });
        }
        Ok(Self { residue, modulus })
    }

    /// Builds the congruence from any signed representative.
    pub fn reduced(residue: i128, modulus: u64) -> Result<Self, ArithError> {
        if modulus == 0 {
            return Err(ArithError::ZeroModulus);
        }
        Ok(Self {
            residue: residue.rem_euclid(modulus as i128) as u64,
            modulus,
        })
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_satisfied_by(&self, n: u64) -> bool {
        n % self.modulus == self.residue
    }
}

/// Solution of a congruence system, with `0 < r_star <= modulus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrtSolution {
    pub r_star: u64,
    pub modulus: u64,
}

/// Solves a system of congruences with arbitrary (not necessarily coprime)
/// moduli.
///
/// The representative is taken in the half-open interval `(0, M]`, so a
/// solution `≡ 0` is reported as `M`. `Ok(None)` means the system is
/// insoluble; an empty system is solved by `(1, 1)`.
pub fn crt_solve(system: &[Congruence]) -> Result<Option<CrtSolution>, ArithError> {
    let mut r: i128 = 0;
    let mut m: i128 = 1;
    for c in system {
        let (r2, m2) = (c.residue as i128, c.modulus as i128);
        let (g, s, _) = ext_gcd(m, m2);
        let diff = r2 - r;
        if diff.rem_euclid(g) != 0 {
            return Ok(None);
        }
        let m2g = m2 / g;
        // r + m * t ≡ r2 (mod m2) with t = (diff / g) * s (mod m2 / g)
        let t = ((diff / g).rem_euclid(m2g) * s.rem_euclid(m2g)).rem_euclid(m2g);
        let new_m = m
            .checked_mul(m2g)
            .filter(|v| *v <= u64::MAX as i128)
            .ok_or(ArithError::Overflow("crt_solve"))?;
        r = (r + m * t).rem_euclid(new_m);
        m = new_m;
    }
    let r_star = if r == 0 { m } else { r };
    Ok(Some(CrtSolution {
        r_star: r_star as u64,
        modulus: m as u64,
    }))
}

/// Both sides of `[m_1, …, m_k] >= m_1⋯m_k / ∏_{i<j} (m_i, m_j)`.
///
/// The right side is a rational number; it is kept as an exact fraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcmBound {
    pub lcm: BigUint,
    pub numerator: BigUint,
    pub denominator: BigUint,
}

impl LcmBound {
    pub fn holds(&self) -> bool {
        &self.lcm * &self.denominator >= self.numerator
    }

    pub fn bound_value(&self) -> f64 {
        let q = &self.numerator / &self.denominator;
        let r = &self.numerator % &self.denominator;
        biguint_to_f64(&q) + biguint_to_f64(&r) / biguint_to_f64(&self.denominator)
    }
}

fn biguint_to_f64(v: &BigUint) -> f64 {
    v.to_string().parse().unwrap_or(f64::INFINITY)
}

pub fn lcm_lower_bound(m: &[u64]) -> LcmBound {
    let mut l = BigUint::from(1u32);
    let mut numerator = BigUint::from(1u32);
    let mut denominator = BigUint::from(1u32);
    for (i, &mi) in m.iter().enumerate() {
        let mi_big = BigUint::from(mi);
        let g = biguint_gcd(&l, &mi_big);
        l = &l / &g * &mi_big;
        numerator *= &mi_big;
        for &mj in &m[..i] {
            denominator *= BigUint::from(gcd(mi, mj));
        }
    }
    LcmBound {
        lcm: l,
        numerator,
        denominator,
    }
}

fn biguint_gcd(a: &BigUint, b: &BigUint) -> BigUint {
    let (mut a, mut b) = (a.clone(), b.clone());
    while b != BigUint::from(0u32) {
        let t = &a % &b;
        a = b;
        b = t;
    }
    a
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    for p in [2u64, 3] {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut p = 5u64;
    let mut step = 2;
    while p <= n / p {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += step;
        step = 6 - step;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).first() == Some(&(n, 1))
}

/// Plain sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// The largest integer `<= z`, saturating to 0 for negative or NaN input.
pub fn floor_u64(z: f64) -> u64 {
    if z.is_nan() || z < 0.0 {
        0
    } else if z >= u64::MAX as f64 {
        u64::MAX
    } else {
        z.floor() as u64
    }
}

/// `floor(z^u)`, exact when both arguments are integral.
pub fn floor_pow(z: f64, u: f64) -> u64 {
    if z.fract() == 0.0 && u.fract() == 0.0 && z >= 0.0 && u >= 0.0 && u < 64.0 {
        let mut acc: u64 = 1;
        for _ in 0..(u as u32) {
            match acc.checked_mul(z as u64) {
                Some(v) => acc = v,
                None => return u64::MAX,
            }
        }
        acc
    } else {
        floor_u64(z.powf(u))
    }
}

/// Values of the standard multiplicative functions at one argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArithValues {
    pub n: u64,
    pub omega_big: u32,
    pub mu: i8,
    pub phi: u64,
    factors: Vec<(u64, u32)>,
}

impl ArithValues {
    /// Number of ordered `m`-tuples with product `n`.
    pub fn tau_m(&self, m: u32) -> u128 {
        if m == 0 {
            return u128::from(self.n == 1);
        }
        self.factors
            .iter()
            .map(|&(_, a)| binomial(a as u128 + m as u128 - 1, m as u128 - 1))
            .product()
    }

    pub fn tau(&self) -> u128 {
        self.tau_m(2)
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

pub fn mult_functions(n: u64) -> Result<ArithValues, ArithError> {
    if n == 0 {
        return Err(ArithError::ZeroArgument);
    }
    let factors = factorize(n);
    let omega_big = factors.iter().map(|&(_, a)| a).sum();
    let mu = if factors.iter().any(|&(_, a)| a > 1) {
        0
    } else if factors.len() % 2 == 0 {
        1
    } else {
        -1
    };
    let phi = factors
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1));
    Ok(ArithValues {
        n,
        omega_big,
        mu,
        phi,
        factors,
    })
}

/// Polynomial with integer coefficients, constant term first.
///
/// The coefficient vector never carries trailing zeros, so the zero
/// polynomial is the empty vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IntPolynomial {
    coefficients: Vec<i128>,
}

impl IntPolynomial {
    pub fn new(mut coefficients: Vec<i128>) -> Self {
        while coefficients.last() == Some(&0) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn constant(c: i128) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial_x() -> Self {
        Self::new(vec![0, 1])
    }

    /// `∏ (slope_i X + intercept_i)`, with overflow checking.
    pub fn from_linear_factors(factors: &[(i128, i128)]) -> Result<Self, ArithError> {
        factors.iter().try_fold(Self::constant(1), |acc, &(slope, intercept)| {
            acc.checked_mul(&Self::new(vec![intercept, slope]))
        })
    }

    pub fn coefficients(&self) -> &[i128] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn leading_coefficient(&self) -> i128 {
        self.coefficients.last().copied().unwrap_or(0)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ArithError> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let mut out = vec![0i128; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, &a) in self.coefficients.iter().enumerate() {
            for (j, &b) in other.coefficients.iter().enumerate() {
                let prod = a.checked_mul(b).ok_or(ArithError::Overflow("polynomial product"))?;
                out[i + j] = out[i + j]
                    .checked_add(prod)
                    .ok_or(ArithError::Overflow("polynomial product"))?;
            }
        }
        Ok(Self::new(out))
    }

    pub fn eval(&self, x: i128) -> Option<i128> {
        self.coefficients
            .iter()
            .rev()
            .try_fold(0i128, |acc, &c| acc.checked_mul(x)?.checked_add(c))
    }

    /// `self(x) mod m` in `[0, m)`.
    pub fn eval_mod(&self, x: u64, m: u64) -> u64 {
        let m = m as i128;
        let x = x as i128 % m;
        let mut acc = 0i128;
        for &c in self.coefficients.iter().rev() {
            acc = (acc * x + c.rem_euclid(m)) % m;
        }
        acc as u64
    }

    /// `self(scale * X + shift)`.
    pub fn compose_linear(&self, scale: i128, shift: i128) -> Result<Self, ArithError> {
        let inner = Self::new(vec![shift, scale]);
        let mut acc = Self::zero();
        for &c in self.coefficients.iter().rev() {
            acc = acc.checked_mul(&inner)?;
            let mut coeffs = acc.coefficients.clone();
            if coeffs.is_empty() {
                coeffs.push(0);
            }
            coeffs[0] = coeffs[0]
                .checked_add(c)
                .ok_or(ArithError::Overflow("polynomial composition"))?;
            acc = Self::new(coeffs);
        }
        Ok(acc)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coefficients.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.unsigned_abs();
            match i {
                0 => write!(f, "{a}")?,
                1 if a == 1 => write!(f, "X")?,
                1 => write!(f, "{a}*X")?,
                _ if a == 1 => write!(f, "X^{i}")?,
                _ => write!(f, "{a}*X^{i}")?,
            }
        }
        Ok(())
    }
}

/// `ρ(m) = #{ν mod m : Q(ν) ≡ 0 (mod m)}`, by enumeration of residues.
pub fn count_roots(q: &IntPolynomial, m: u64) -> Result<u64, ArithError> {
    if q.is_zero() {
        return Err(ArithError::ZeroPolynomial);
    }
    if m == 0 {
        return Err(ArithError::ZeroModulus);
    }
    Ok((0..m).filter(|&nu| q.eval_mod(nu, m) == 0).count() as u64)
}

/// Outcome of the square-multiple test over the field with `p` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareClass {
    /// `Q ≡ c·g(X)^2` with `c ≠ 0`.
    SquareMultiple,
    NotSquare,
    /// `Q` vanishes identically modulo `p`.
    Degenerate,
}

impl SquareClass {
    /// Degenerate reductions count as square multiples.
    pub fn is_square_multiple(self) -> bool {
        !matches!(self, SquareClass::NotSquare)
    }
}

pub fn is_square_multiple_mod_p(q: &IntPolynomial, p: u64) -> Result<SquareClass, ArithError> {
    if p < 3 || !is_prime(p) {
        return Err(ArithError::NotOddPrime(p));
    }
    let f = FpPoly::from_int(q, p);
    if f.is_zero() {
        return Ok(SquareClass::Degenerate);
    }
    let all_even = f
        .monic()
        .squarefree_decomposition()
        .iter()
        .all(|(_, mult)| mult % 2 == 0);
    Ok(if all_even {
        SquareClass::SquareMultiple
    } else {
        SquareClass::NotSquare
    })
}

/// Degree of the radical of `Q mod p` (number of distinct roots over the
/// algebraic closure), or `None` when `Q ≡ 0 (mod p)`.
pub fn radical_degree_mod_p(q: &IntPolynomial, p: u64) -> Result<Option<usize>, ArithError> {
    if p < 2 || !is_prime(p) {
        return Err(ArithError::NotOddPrime(p));
    }
    let f = FpPoly::from_int(q, p);
    if f.is_zero() {
        return Ok(None);
    }
    Ok(Some(
        f.monic()
            .squarefree_decomposition()
            .iter()
            .map(|(g, _)| g.degree())
            .sum(),
    ))
}

/// Dense polynomial over the field with `p` elements, constant term first,
/// no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FpPoly {
    p: u64,
    c: Vec<u64>,
}

impl FpPoly {
    pub(crate) fn new(p: u64, mut c: Vec<u64>) -> Self {
        for v in c.iter_mut() {
            *v %= p;
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        Self { p, c }
    }

    pub(crate) fn from_int(q: &IntPolynomial, p: u64) -> Self {
        let pi = p as i128;
        Self::new(
            p,
            q.coefficients()
                .iter()
                .map(|&v| v.rem_euclid(pi) as u64)
                .collect(),
        )
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn is_one(&self) -> bool {
        self.c == [1]
    }

    pub(crate) fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    fn mulm(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    fn inv(&self, a: u64) -> u64 {
        mod_pow(a, self.p - 2, self.p)
    }

    pub(crate) fn monic(&self) -> Self {
        match self.c.last() {
            None => self.clone(),
            Some(&lc) => {
                let inv = self.inv(lc);
                Self::new(self.p, self.c.iter().map(|&v| self.mulm(v, inv)).collect())
            }
        }
    }

    fn derivative(&self) -> Self {
        Self::new(
            self.p,
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &v)| self.mulm(v, i as u64 % self.p))
                .collect(),
        )
    }

    fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let p = self.p;
        let mut rem = self.c.clone();
        if rem.len() < d.c.len() {
            return (Self::new(p, Vec::new()), self.clone());
        }
        let dl = d.c.len();
        let inv_lc = self.inv(*d.c.last().unwrap());
        let mut quot = vec![0u64; rem.len() - dl + 1];
        for i in (0..quot.len()).rev() {
            let coef = self.mulm(rem[i + dl - 1], inv_lc);
            quot[i] = coef;
            if coef == 0 {
                continue;
            }
            for (j, &dv) in d.c.iter().enumerate() {
                let sub = self.mulm(coef, dv);
                rem[i + j] = (rem[i + j] + p - sub) % p;
            }
        }
        (Self::new(p, quot), Self::new(p, rem))
    }

    fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.monic(), other.monic());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Inverse of the Frobenius on a polynomial whose derivative vanishes.
    fn pth_root(&self) -> Self {
        let p = self.p as usize;
        Self::new(self.p, self.c.iter().step_by(p).copied().collect())
    }

    /// Squarefree decomposition of a monic non-zero polynomial:
    /// `(g_i, m_i)` with `self = ∏ g_i^{m_i}`, the `g_i` squarefree, monic,
    /// non-constant and pairwise coprime.
    pub(crate) fn squarefree_decomposition(&self) -> Vec<(Self, u64)> {
        let mut out = Vec::new();
        if self.degree() == 0 {
            return out;
        }
        let mut c = self.gcd(&self.derivative());
        let mut w = self.div_rem(&c).0;
        let mut i = 1u64;
        while !w.is_one() {
            let y = w.gcd(&c);
            let factor = w.div_rem(&y).0;
            if factor.degree() > 0 {
                out.push((factor.monic(), i));
            }
            w = y;
            c = c.div_rem(&w).0;
            i += 1;
        }
        if !c.is_one() {
            for (g, m) in c.pth_root().monic().squarefree_decomposition() {
                out.push((g, m * self.p));
            }
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::new(self.p, Vec::new());
        }
        let mut out = vec![0u64; self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            for (j, &b) in other.c.iter().enumerate() {
                out[i + j] = (out[i + j] + self.mulm(a, b)) % self.p;
            }
        }
        Self::new(self.p, out)
    }

    #[cfg(test)]
    pub(crate) fn coeffs(&self) -> &[u64] {
        &self.c
    }
}
