//! Exact arithmetic in a single Eisenstein extension K = Q(pi), pi^e = u*p.
//!
//! Elements are represented on the power basis 1, pi, ..., pi^(e-1) with
//! arbitrary-precision rational coordinates, so every computation is a finite
//! exact computation. The valuation is normalized by v(p) = 1, hence
//! v(pi) = 1/e, and is computed by the minimum formula
//!
//!     v(sum a_i pi^i) = min_i (v_p(a_i) + i/e),
//!
//! which is exact because the basis valuations i/e are pairwise distinct
//! modulo 1 (this is what makes the extension Eisenstein). With e = 1, u = 1
//! the field degenerates to plain Q with the p-adic valuation.

use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, the coefficient type of everything here.
pub type Rat = BigRational;

/// Shorthand for a small integer rational.
pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for the rational n/d.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// An additive valuation value: a rational, or +infinity for the zero element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Finite(Rat),
    Infinity,
}

impl Val {
    pub fn finite(r: Rat) -> Self {
        Val::Finite(r)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Val::Finite(_))
    }

    /// The rational value; panics on +infinity.
    pub fn unwrap_finite(&self) -> &Rat {
        match self {
            Val::Finite(r) => r,
            Val::Infinity => panic!("valuation is +infinity (zero element)"),
        }
    }

    pub fn min(self, other: Val) -> Val {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for Val {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Val {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Val::*;
        match (self, other) {
            (Infinity, Infinity) => std::cmp::Ordering::Equal,
            (Infinity, Finite(_)) => std::cmp::Ordering::Greater,
            (Finite(_), Infinity) => std::cmp::Ordering::Less,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl std::ops::Add for Val {
    type Output = Val;
    fn add(self, rhs: Val) -> Val {
        match (self, rhs) {
            (Val::Finite(a), Val::Finite(b)) => Val::Finite(a + b),
            _ => Val::Infinity,
        }
    }
}

impl std::ops::Add<&Rat> for Val {
    type Output = Val;
    fn add(self, rhs: &Rat) -> Val {
        match self {
            Val::Finite(a) => Val::Finite(a + rhs),
            Val::Infinity => Val::Infinity,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Finite(r) => write!(f, "{}", r),
            Val::Infinity => write!(f, "inf"),
        }
    }
}

// Fast rational helpers for the iteration hot loop. Ratio<BigInt> reduces
// by gcd on every operation, which costs O(bits) even against 1; integral
// operands skip that entirely.

pub(crate) fn rmul(a: &Rat, b: &Rat) -> Rat {
    if a.denom().is_one() && b.denom().is_one() {
        Rat::from_integer(a.numer() * b.numer())
    } else {
        a * b
    }
}

pub(crate) fn radd(a: &Rat, b: &Rat) -> Rat {
    if a.denom().is_one() && b.denom().is_one() {
        Rat::from_integer(a.numer() + b.numer())
    } else {
        a + b
    }
}

pub(crate) fn rsub(a: &Rat, b: &Rat) -> Rat {
    if a.denom().is_one() && b.denom().is_one() {
        Rat::from_integer(a.numer() - b.numer())
    } else {
        a - b
    }
}

pub(crate) fn rmul_int(a: &Rat, k: &BigInt) -> Rat {
    if a.denom().is_one() {
        Rat::from_integer(a.numer() * k)
    } else {
        a * Rat::from_integer(k.clone())
    }
}

/// p-adic valuation of a nonzero integer, by chunked division.
fn int_val(p: u64, n: &BigInt) -> u64 {
    int_val_capped(p, n, u64::MAX)
}

/// Like [`int_val`], but stops as soon as the count reaches `cap` (the
/// caller only needs to know the valuation is >= cap). Single divisions
/// first, switching to chunked divisions for deep factors.
fn int_val_capped(p: u64, n: &BigInt, cap: u64) -> u64 {
    debug_assert!(!n.is_zero());
    let mut n = n.abs();
    let mut v = 0u64;
    let p_big = BigInt::from(p);
    while v < cap.min(4) {
        let (q, r) = num::Integer::div_rem(&n, &p_big);
        if r.is_zero() {
            v += 1;
            n = q;
        } else {
            return v;
        }
    }
    if v >= cap {
        return v;
    }
    let mut chunk_exp = 1u64;
    let mut chunk = p_big.clone();
    while chunk_exp < 32 && chunk.bits() < 56 {
        chunk = &chunk * &chunk;
        chunk_exp *= 2;
    }
    while v < cap {
        let (q, r) = num::Integer::div_rem(&n, &chunk);
        if r.is_zero() {
            v += chunk_exp;
            n = q;
        } else {
            break;
        }
    }
    while v < cap {
        let (q, r) = num::Integer::div_rem(&n, &p_big);
        if r.is_zero() {
            v += 1;
            n = q;
        } else {
            break;
        }
    }
    v
}

/// Valuation of x in e-scaled integer units, truncated at cap_e: returns
/// the pair (bound, exact). When exact is true the bound is val(x)*e;
/// otherwise val(x)*e >= bound. None for x = 0.
pub(crate) fn val_e_lower_bound(x: &FieldElem, cap_e: i64) -> Option<(i64, bool)> {
    let p = x.cfg.p;
    let e = x.cfg.e as i64;
    let mut best_exact: Option<i64> = None;
    let mut best_capped: Option<i64> = None;
    for (i, c) in x.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let i = i as i64;
        if !c.denom().is_one() {
            let vp = rat_val(p, c).expect("nonzero coordinate");
            let cand = e * vp + i;
            if best_exact.map_or(true, |b| cand < b) {
                best_exact = Some(cand);
            }
            continue;
        }
        let vp_cap = ((cap_e.saturating_sub(i)) / e).saturating_add(1).max(0) as u64;
        let vp = int_val_capped(p, c.numer(), vp_cap);
        let cand = e * (vp as i64) + i;
        if vp < vp_cap {
            if best_exact.map_or(true, |b| cand < b) {
                best_exact = Some(cand);
            }
        } else if best_capped.map_or(true, |b| cand < b) {
            best_capped = Some(cand);
        }
    }
    match (best_exact, best_capped) {
        (None, None) => None,
        (Some(x_), None) => Some((x_, true)),
        (None, Some(b)) => Some((b, false)),
        (Some(x_), Some(b)) => {
            if x_ <= b {
                Some((x_, true))
            } else {
                Some((b, false))
            }
        }
    }
}

/// Valuation of x in e-scaled integer units (e*val), stopping early once it
/// is known to be >= cap_e. None for x = 0; Some(>= cap_e) means "at least".
/// Only sound for p-integral coordinates, which the iteration guarantees.
pub(crate) fn val_e_units_capped(x: &FieldElem, cap_e: i64) -> Option<i64> {
    let p = x.cfg.p;
    let e = x.cfg.e as i64;
    let mut best: Option<i64> = None;
    for (i, c) in x.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let cur_cap = best.unwrap_or(cap_e);
        // This coordinate contributes e*v_p(c) + i; bail out of the division
        // loop once it cannot undercut the current minimum.
        let i = i as i64;
        if i >= cur_cap && best.is_some() {
            continue;
        }
        let vp_cap = ((cur_cap.saturating_sub(i)) / e).saturating_add(2).max(0) as u64;
        let vp = if c.denom().is_one() {
            int_val_capped(p, c.numer(), vp_cap) as i64
        } else {
            rat_val(p, c).expect("nonzero coordinate")
        };
        let cand = e * vp + i;
        if best.map_or(true, |b| cand < b) {
            best = Some(cand);
        }
    }
    best
}

/// a / b, taking the exact integer quotient when it exists and falling back
/// to rational division otherwise.
fn div_rat_exact(a: &Rat, b: &Rat) -> Rat {
    if a.is_zero() {
        return Rat::zero();
    }
    if a.denom().is_one() && b.denom().is_one() {
        let (q, r) = num::Integer::div_rem(a.numer(), b.numer());
        if r.is_zero() {
            return Rat::from_integer(q);
        }
    }
    a / b
}

/// p-adic valuation of a rational; None for 0.
pub fn rat_val(p: u64, r: &Rat) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    let vn = int_val(p, r.numer()) as i64;
    let vd = int_val(p, r.denom()) as i64;
    Some(vn - vd)
}

/// v_p(n!) by Legendre's formula, as an exact integer.
pub fn factorial_val(p: u64, n: usize) -> u64 {
    let mut total = 0u64;
    let mut q = n as u64 / p;
    while q > 0 {
        total += q;
        q /= p;
    }
    total
}

/// The prime, ramification index and unit defining K = Q(pi), pi^e = u*p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeConfig {
    p: u64,
    e: u32,
    u: Rat,
    /// Optional working precision: during ring arithmetic, basis terms of
    /// valuation strictly greater than this are dropped. A computed valuation
    /// is then trusted only when it is below the cap; dropped terms cannot
    /// lower a valuation below the cap. None = fully exact (the default).
    precision_cap: Option<Rat>,
}

impl PrimeConfig {
    /// K = Q(pi) with pi^e = u*p. Requires p prime, e >= 1, v_p(u) = 0.
    pub fn eisenstein(p: u64, e: u32, u: Rat) -> Result<Arc<Self>> {
        if p < 2 || !is_prime(p) {
            return Err(Error::BadConfig(format!("p = {} is not prime", p)));
        }
        if e == 0 {
            return Err(Error::BadConfig("e must be >= 1".into()));
        }
        if u.is_zero() || rat_val(p, &u) != Some(0) {
            return Err(Error::BadConfig(format!(
                "u = {} must be a nonzero rational with v_p(u) = 0",
                u
            )));
        }
        Ok(Arc::new(PrimeConfig {
            p,
            e,
            u,
            precision_cap: None,
        }))
    }

    /// Plain Q with the p-adic valuation (e = 1, u = 1).
    pub fn qp(p: u64) -> Result<Arc<Self>> {
        Self::eisenstein(p, 1, Rat::one())
    }

    /// Same field, with the capped-precision arithmetic mode switched on.
    pub fn with_precision_cap(self: &Arc<Self>, w: Rat) -> Arc<Self> {
        Arc::new(PrimeConfig {
            p: self.p,
            e: self.e,
            u: self.u.clone(),
            precision_cap: Some(w),
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn unit(&self) -> &Rat {
        &self.u
    }

    pub fn precision_cap(&self) -> Option<&Rat> {
        self.precision_cap.as_ref()
    }

    /// u*p as a rational: the value of pi^e.
    fn pi_pow_e(&self) -> Rat {
        &self.u * Rat::from_integer(BigInt::from(self.p))
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// An element sum a_i pi^i of K, always stored with exactly e coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldElem {
    cfg: Arc<PrimeConfig>,
    coeffs: Vec<Rat>,
}

impl FieldElem {
    pub fn zero(cfg: &Arc<PrimeConfig>) -> Self {
        FieldElem {
            cfg: cfg.clone(),
            coeffs: vec![Rat::zero(); cfg.e as usize],
        }
    }

    pub fn one(cfg: &Arc<PrimeConfig>) -> Self {
        Self::from_rat(cfg, Rat::one())
    }

    pub fn from_rat(cfg: &Arc<PrimeConfig>, r: Rat) -> Self {
        let mut coeffs = vec![Rat::zero(); cfg.e as usize];
        coeffs[0] = r;
        FieldElem {
            cfg: cfg.clone(),
            coeffs,
        }
    }

    pub fn from_i64(cfg: &Arc<PrimeConfig>, n: i64) -> Self {
        Self::from_rat(cfg, rat_i(n))
    }

    /// The uniformizer pi. For e = 1 this is the rational u*p itself.
    pub fn pi(cfg: &Arc<PrimeConfig>) -> Self {
        if cfg.e == 1 {
            return Self::from_rat(cfg, cfg.pi_pow_e());
        }
        let mut coeffs = vec![Rat::zero(); cfg.e as usize];
        coeffs[1] = Rat::one();
        FieldElem {
            cfg: cfg.clone(),
            coeffs,
        }
    }

    /// Build from explicit coordinates (padded or truncated checks apply).
    pub fn from_coeffs(cfg: &Arc<PrimeConfig>, coeffs: Vec<Rat>) -> Result<Self> {
        if coeffs.len() != cfg.e as usize {
            return Err(Error::BadConfig(format!(
                "expected {} coordinates, got {}",
                cfg.e,
                coeffs.len()
            )));
        }
        Ok(FieldElem {
            cfg: cfg.clone(),
            coeffs,
        })
    }

    pub fn config(&self) -> &Arc<PrimeConfig> {
        &self.cfg
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    fn assert_same_field(&self, other: &Self) {
        assert!(
            self.cfg.p == other.cfg.p && self.cfg.e == other.cfg.e && self.cfg.u == other.cfg.u,
            "mismatched prime configurations: ({},{},{}) vs ({},{},{})",
            self.cfg.p,
            self.cfg.e,
            self.cfg.u,
            other.cfg.p,
            other.cfg.e,
            other.cfg.u
        );
    }

    /// Drop basis terms above the working precision, if a cap is configured.
    fn apply_cap(&mut self) {
        let Some(w) = self.cfg.precision_cap.clone() else {
            return;
        };
        let e = self.cfg.e as i64;
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = Rat::from_integer(BigInt::from(rat_val(self.cfg.p, c).unwrap()))
                + rat(i as i64, e);
            if v > w {
                *c = Rat::zero();
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a = radd(a, b);
        }
        out.apply_cap();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a = rsub(a, b);
        }
        out.apply_cap();
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a = -std::mem::take(a);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        let e = self.cfg.e as usize;
        if e == 1 {
            let mut out = FieldElem {
                cfg: self.cfg.clone(),
                coeffs: vec![rmul(&self.coeffs[0], &other.coeffs[0])],
            };
            out.apply_cap();
            return out;
        }
        // Schoolbook product, then reduce pi^e -> u*p.
        let mut prod = vec![Rat::zero(); 2 * e - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                prod[i + j] = radd(&prod[i + j], &rmul(a, b));
            }
        }
        let up = self.cfg.pi_pow_e();
        let mut coeffs = vec![Rat::zero(); e];
        for (k, c) in prod.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if k < e {
                coeffs[k] = radd(&coeffs[k], &c);
            } else {
                coeffs[k - e] = radd(&coeffs[k - e], &rmul(&c, &up));
            }
        }
        let mut out = FieldElem {
            cfg: self.cfg.clone(),
            coeffs,
        };
        out.apply_cap();
        out
    }

    pub fn mul_rat(&self, r: &Rat) -> Self {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a = rmul(a, r);
        }
        out.apply_cap();
        out
    }

    /// Least common multiple of the coordinate denominators.
    pub fn denom_lcm(&self) -> BigInt {
        let mut acc = BigInt::one();
        for c in &self.coeffs {
            acc = num::Integer::lcm(&acc, c.denom());
        }
        acc
    }

    /// x / pi^k, exact and gcd-free when the quotient has integral
    /// coordinates (the shape content extraction guarantees).
    pub fn div_pi_pow_exact(&self, k: u32) -> Self {
        let mut out = self.clone();
        let e = self.cfg.e;
        let (q, r) = (k / e, k % e);
        // Divide by (u p)^q coordinate-wise.
        if q > 0 {
            let up = self.cfg.pi_pow_e();
            let mut up_q = Rat::one();
            for _ in 0..q {
                up_q = rmul(&up_q, &up);
            }
            for a in out.coeffs.iter_mut() {
                *a = div_rat_exact(a, &up_q);
            }
        }
        // Then by pi^r via coordinate rotation.
        for _ in 0..r {
            out = out.div_pi();
        }
        out
    }

    /// Multiplicative inverse by the extended Euclidean algorithm against
    /// the minimal polynomial X^e - u*p. Exact; no precision cap applied.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let e = self.cfg.e as usize;
        if e == 1 {
            return Ok(FieldElem {
                cfg: self.cfg.clone(),
                coeffs: vec![Rat::one() / &self.coeffs[0]],
            });
        }
        // Minimal polynomial m(X) = X^e - u*p.
        let mut m = vec![Rat::zero(); e + 1];
        m[0] = -self.cfg.pi_pow_e();
        m[e] = Rat::one();
        let a = self.coeffs.clone();
        // Extended Euclid over Q[X]: find s with s*a = gcd (a unit) mod m.
        let (mut r0, mut r1) = (m, a);
        let (mut s0, mut s1) = (vec![], vec![Rat::one()]);
        while !poly_is_zero(&r1) {
            let (q, rem) = poly_div_rem(&r0, &r1);
            let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = r1;
            r1 = rem;
            s0 = s1;
            s1 = s2;
        }
        // r0 is a nonzero constant (the minimal polynomial is irreducible).
        debug_assert!(poly_deg(&r0) == Some(0));
        let c = r0[0].clone();
        let mut coeffs = vec![Rat::zero(); e];
        for (i, v) in s0.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            debug_assert!(i < e, "cofactor degree stays below e");
            coeffs[i] = v / &c;
        }
        Ok(FieldElem {
            cfg: self.cfg.clone(),
            coeffs,
        })
    }

    /// Integer power, with negative exponents going through inv().
    pub fn pow_i64(&self, n: i64) -> Result<Self> {
        if n == 0 {
            return Ok(Self::one(&self.cfg));
        }
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one(&self.cfg);
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// Exact division by pi (used when extracting content in iterations).
    pub fn div_pi(&self) -> Self {
        let e = self.cfg.e as usize;
        let up = self.cfg.pi_pow_e();
        if e == 1 {
            return FieldElem {
                cfg: self.cfg.clone(),
                coeffs: vec![div_rat_exact(&self.coeffs[0], &up)],
            };
        }
        // (a_0 + a_1 pi + ... + a_{e-1} pi^{e-1}) / pi
        //   = a_1 + a_2 pi + ... + a_{e-1} pi^{e-2} + (a_0/(u p)) pi^{e-1}.
        let mut coeffs = Vec::with_capacity(e);
        coeffs.extend_from_slice(&self.coeffs[1..]);
        coeffs.push(div_rat_exact(&self.coeffs[0], &up));
        FieldElem {
            cfg: self.cfg.clone(),
            coeffs,
        }
    }

    /// Exact valuation, normalized by v(p) = 1, v(pi) = 1/e.
    pub fn val(&self) -> Val {
        let e = self.cfg.e as i64;
        let mut best: Option<Rat> = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            if let Some(v) = rat_val(self.cfg.p, c) {
                let term = rat(v * e + i as i64, e);
                best = Some(match best {
                    None => term,
                    Some(b) => b.min(term),
                });
            }
        }
        match best {
            Some(b) => Val::Finite(b),
            None => Val::Infinity,
        }
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let coeff = if i == 0 {
                format!("{}", c)
            } else if c.is_one() {
                String::new()
            } else {
                format!("{}*", c)
            };
            let base = match i {
                0 => String::new(),
                1 => "pi".to_string(),
                _ => format!("pi^{}", i),
            };
            parts.push(format!("{}{}", coeff, base));
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", parts.join(" + "))
    }
}

// Dense Q[X] helpers for the extended Euclid in inv().

fn poly_is_zero(p: &[Rat]) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn poly_deg(p: &[Rat]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

fn poly_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    let mut out = vec![Rat::zero(); n];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] -= c;
    }
    out
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if poly_is_zero(a) || poly_is_zero(b) {
        return vec![];
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_div_rem(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let db = poly_deg(b).expect("division by zero polynomial");
    let mut rem = a.to_vec();
    let mut quot = vec![Rat::zero(); a.len()];
    loop {
        let Some(dr) = poly_deg(&rem) else { break };
        if dr < db {
            break;
        }
        let factor = &rem[dr] / &b[db];
        let shift = dr - db;
        quot[shift] = factor.clone();
        for (i, c) in b.iter().enumerate() {
            if !c.is_zero() {
                let sub = c * &factor;
                rem[i + shift] -= sub;
            }
        }
    }
    (quot, rem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dwork_cfg() -> Arc<PrimeConfig> {
        // p = 3, pi^2 = -3 (the p = 3 instance of pi^(p-1) = -p).
        PrimeConfig::eisenstein(3, 2, rat_i(-1)).unwrap()
    }

    #[test]
    fn pi_squared_is_minus_three() {
        let cfg = dwork_cfg();
        let pi = FieldElem::pi(&cfg);
        let sq = pi.mul(&pi);
        assert_eq!(sq.coeffs(), &[rat_i(-3), rat_i(0)]);
    }

    #[test]
    fn addition_cancels() {
        let cfg = dwork_cfg();
        let pi = FieldElem::pi(&cfg);
        let one = FieldElem::one(&cfg);
        let a = one.add(&pi);
        let b = one.sub(&pi);
        assert_eq!(a.add(&b), FieldElem::from_i64(&cfg, 2));
    }

    #[test]
    fn additive_identity() {
        let cfg = dwork_cfg();
        let x = FieldElem::from_coeffs(&cfg, vec![rat(7, 5), rat(-2, 9)]).unwrap();
        assert_eq!(x.add(&FieldElem::zero(&cfg)), x);
    }

    #[test]
    fn inv_of_pi() {
        // pi^2 = -3 forces 1/pi = -pi/3.
        let cfg = dwork_cfg();
        let pi = FieldElem::pi(&cfg);
        let inv = pi.inv().unwrap();
        assert_eq!(inv.coeffs(), &[rat_i(0), rat(-1, 3)]);
        assert!(pi.mul(&inv).is_one());
    }

    #[test]
    fn inv_of_rational() {
        let cfg = dwork_cfg();
        let two = FieldElem::from_i64(&cfg, 2);
        assert_eq!(two.inv().unwrap(), FieldElem::from_rat(&cfg, rat(1, 2)));
    }

    #[test]
    fn inv_roundtrip() {
        let cfg = dwork_cfg();
        let x = FieldElem::one(&cfg).add(&FieldElem::pi(&cfg));
        let inv = x.inv().unwrap();
        assert!(x.mul(&inv).is_one());
        assert!(inv.mul(&x).is_one());
    }

    #[test]
    fn inv_of_zero_fails() {
        let cfg = dwork_cfg();
        assert!(matches!(
            FieldElem::zero(&cfg).inv(),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn val_examples() {
        let cfg = dwork_cfg();
        assert_eq!(FieldElem::pi(&cfg).val(), Val::Finite(rat(1, 2)));
        assert_eq!(
            FieldElem::from_rat(&cfg, rat(1, 3)).val(),
            Val::Finite(rat_i(-1))
        );
        // val(3 + pi) = min(1, 1/2) = 1/2.
        let x = FieldElem::from_i64(&cfg, 3).add(&FieldElem::pi(&cfg));
        assert_eq!(x.val(), Val::Finite(rat(1, 2)));
        assert_eq!(FieldElem::zero(&cfg).val(), Val::Infinity);
    }

    #[test]
    fn val_multiplicative() {
        let cfg = dwork_cfg();
        let xs = [
            FieldElem::from_coeffs(&cfg, vec![rat(3, 2), rat(5, 27)]).unwrap(),
            FieldElem::from_coeffs(&cfg, vec![rat_i(-9), rat(1, 3)]).unwrap(),
            FieldElem::pi(&cfg),
            FieldElem::from_rat(&cfg, rat(7, 12)),
        ];
        for x in &xs {
            for y in &xs {
                let lhs = x.mul(y).val();
                let rhs = x.val() + y.val();
                assert_eq!(lhs, rhs, "val(x*y) = val(x) + val(y) for {} * {}", x, y);
            }
        }
    }

    #[test]
    fn val_ultrametric() {
        let cfg = dwork_cfg();
        let x = FieldElem::from_i64(&cfg, 6);
        let y = FieldElem::pi(&cfg).mul(&FieldElem::from_i64(&cfg, 2));
        // Distinct valuations (1 vs 1/2): equality case of the ultrametric bound.
        let s = x.add(&y);
        assert_eq!(s.val(), Val::Finite(rat(1, 2)));
    }

    #[test]
    fn qp_degenerate_field() {
        let cfg = PrimeConfig::qp(5).unwrap();
        let pi = FieldElem::pi(&cfg);
        assert_eq!(pi, FieldElem::from_i64(&cfg, 5));
        assert_eq!(pi.val(), Val::Finite(rat_i(1)));
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(PrimeConfig::eisenstein(4, 2, rat_i(1)).is_err()); // not prime
        assert!(PrimeConfig::eisenstein(3, 0, rat_i(1)).is_err()); // e = 0
        assert!(PrimeConfig::eisenstein(3, 2, rat_i(3)).is_err()); // v_3(u) != 0
        assert!(PrimeConfig::eisenstein(3, 2, rat_i(0)).is_err()); // u = 0
    }

    #[test]
    fn div_pi_exact() {
        let cfg = dwork_cfg();
        let x = FieldElem::from_coeffs(&cfg, vec![rat_i(6), rat(1, 2)]).unwrap();
        let q = x.div_pi();
        assert_eq!(q.mul(&FieldElem::pi(&cfg)), x);
    }

    #[test]
    fn precision_cap_drops_high_terms() {
        let cfg = dwork_cfg().with_precision_cap(rat_i(3));
        // The pi-coordinate 81*pi has valuation 4 + 1/2 > 3 and is dropped.
        let x = FieldElem::from_coeffs(&cfg, vec![rat_i(1), rat_i(81)]).unwrap();
        let y = x.add(&FieldElem::zero(&cfg));
        assert_eq!(y, FieldElem::one(&cfg));
        // Valuations at or below the cap are unaffected.
        let z = FieldElem::from_i64(&cfg, 9).add(&FieldElem::one(&cfg));
        assert_eq!(z.val(), Val::Finite(rat_i(0)));
        let w = FieldElem::from_i64(&cfg, 27).add(&FieldElem::zero(&cfg));
        assert_eq!(w.val(), Val::Finite(rat_i(3)));
    }

    #[test]
    fn factorial_val_legendre() {
        assert_eq!(factorial_val(3, 6), 2);
        assert_eq!(factorial_val(3, 27), 13);
        assert_eq!(factorial_val(2, 10), 8);
    }

    #[test]
    fn int_val_chunking() {
        let n = BigInt::from(3u64).pow(41) * BigInt::from(7);
        assert_eq!(int_val(3, &n), 41);
        assert_eq!(rat_val(3, &rat(1, 27)), Some(-3));
    }
}
