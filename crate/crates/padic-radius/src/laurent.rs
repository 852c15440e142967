//! Laurent polynomials and rational functions over K, with exact Gauss
//! valuations, Newton polygons, formal derivatives and the substitution maps
//! used for coverings (Kummer, dilatation, inversion, recentring).
//!
//! Radii are carried in additive log form throughout: a radius rho is the
//! rational t = -log_p rho, so t = 0 is the unit circle and larger t means a
//! smaller radius. The Gauss valuation of f = sum a_i T^i at log-radius t is
//!
//!     w_t(f) = min_i (val(a_i) + i*t),
//!
//! a concave piecewise-linear function of t whose breakpoints are exactly the
//! Newton slopes of f (the valuations of its roots). For a quotient num/den
//! the Gauss valuation is w_t(num) - w_t(den) by multiplicativity.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::field::{rat_i, FieldElem, PrimeConfig, Rat, Val};

/// Log-radius: t = -log_p rho. Negative values are radii above 1.
pub type LogRadius = Rat;

/// Upper end of a log-radius interval. `Inf` means the interval runs all the
/// way to the disk center (rho -> 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TEnd {
    Finite(Rat),
    Inf,
}

impl TEnd {
    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            TEnd::Finite(r) => Some(r),
            TEnd::Inf => None,
        }
    }
}

impl fmt::Display for TEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TEnd::Finite(r) => write!(f, "{}", r),
            TEnd::Inf => write!(f, "inf"),
        }
    }
}

/// A finite sum of terms a_i T^i with integer (possibly negative) exponents.
/// Zero coefficients are never stored; the empty map is the zero polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    cfg: Arc<PrimeConfig>,
    terms: BTreeMap<i64, FieldElem>,
}

impl LaurentPoly {
    pub fn zero(cfg: &Arc<PrimeConfig>) -> Self {
        LaurentPoly {
            cfg: cfg.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(cfg: &Arc<PrimeConfig>) -> Self {
        Self::constant(FieldElem::one(cfg))
    }

    pub fn constant(c: FieldElem) -> Self {
        let cfg = c.config().clone();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(0, c);
        }
        LaurentPoly { cfg, terms }
    }

    /// The coordinate T itself.
    pub fn var(cfg: &Arc<PrimeConfig>) -> Self {
        Self::monomial(FieldElem::one(cfg), 1)
    }

    pub fn monomial(c: FieldElem, exp: i64) -> Self {
        let cfg = c.config().clone();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        LaurentPoly { cfg, terms }
    }

    /// Build from (exponent, coefficient) pairs, dropping zeros and summing
    /// duplicates.
    pub fn from_terms(
        cfg: &Arc<PrimeConfig>,
        terms: impl IntoIterator<Item = (i64, FieldElem)>,
    ) -> Self {
        let mut out = Self::zero(cfg);
        for (e, c) in terms {
            out.add_term(e, &c);
        }
        out
    }

    pub fn config(&self) -> &Arc<PrimeConfig> {
        &self.cfg
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &FieldElem)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn coeff(&self, exp: i64) -> Option<&FieldElem> {
        self.terms.get(&exp)
    }

    fn add_term(&mut self, exp: i64, c: &FieldElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&exp) {
            None => {
                self.terms.insert(exp, c.clone());
            }
            Some(old) => {
                let s = old.add(c);
                if !s.is_zero() {
                    self.terms.insert(exp, s);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LaurentPoly {
            cfg: self.cfg.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(&self.cfg);
        if self.is_zero() || other.is_zero() {
            return out;
        }
        // Iterate the sparser factor on the outside.
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (i, a) in &small.terms {
            for (j, b) in &large.terms {
                out.add_term(i + j, &a.mul(b));
            }
        }
        out
    }

    pub fn mul_scalar(&self, c: &FieldElem) -> Self {
        if c.is_zero() {
            return Self::zero(&self.cfg);
        }
        let mut terms = BTreeMap::new();
        for (e, a) in &self.terms {
            let prod = a.mul(c);
            if !prod.is_zero() {
                terms.insert(*e, prod);
            }
        }
        LaurentPoly {
            cfg: self.cfg.clone(),
            terms,
        }
    }

    pub fn mul_rat(&self, r: &Rat) -> Self {
        if r.is_zero() {
            return Self::zero(&self.cfg);
        }
        LaurentPoly {
            cfg: self.cfg.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c.mul_rat(r)))
                .collect(),
        }
    }

    /// Apply a coefficient map, dropping any zeros it produces.
    pub fn map_coeffs(&self, f: impl Fn(&FieldElem) -> FieldElem) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let m = f(c);
            if !m.is_zero() {
                terms.insert(*e, m);
            }
        }
        LaurentPoly {
            cfg: self.cfg.clone(),
            terms,
        }
    }

    /// Multiply by T^k.
    pub fn shift_exp(&self, k: i64) -> Self {
        LaurentPoly {
            cfg: self.cfg.clone(),
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    /// Formal d/dT. The constant term drops; T^i maps to i*T^(i-1).
    pub fn derivative(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if *e == 0 {
                continue;
            }
            let d = c.mul_rat(&rat_i(*e));
            if !d.is_zero() {
                terms.insert(e - 1, d);
            }
        }
        LaurentPoly {
            cfg: self.cfg.clone(),
            terms,
        }
    }

    /// Exact Gauss valuation w_t(f) = min_i (val(a_i) + i*t); +inf for 0.
    pub fn gauss_val(&self, t: &Rat) -> Val {
        let mut best: Option<Rat> = None;
        for (e, c) in &self.terms {
            let Val::Finite(v) = c.val() else { continue };
            let cand = v + t * rat_i(*e);
            best = Some(match best {
                None => cand,
                Some(b) => b.min(cand),
            });
        }
        match best {
            Some(b) => Val::Finite(b),
            None => Val::Infinity,
        }
    }

    /// (exponent, coefficient valuation) pairs; the Newton polygon data.
    pub fn term_vals(&self) -> Vec<(i64, Rat)> {
        self.terms
            .iter()
            .map(|(e, c)| (*e, c.val().unwrap_finite().clone()))
            .collect()
    }

    /// Limit of w_t(f) as t -> +inf (toward the disk center): finite only
    /// when the lowest exponent is 0; None encodes -inf (a pole at 0).
    pub fn gauss_val_at_center(&self) -> Option<Val> {
        match self.min_exp() {
            None => Some(Val::Infinity),
            Some(e) if e > 0 => Some(Val::Infinity),
            Some(0) => Some(self.terms[&0].val()),
            Some(_) => None,
        }
    }

    /// Valuations of the roots of f, with multiplicity, from the lower convex
    /// hull of the points (i, val(a_i)). The count equals the exponent span.
    pub fn newton_slopes(&self) -> Result<Vec<Rat>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let pts = self.term_vals();
        let hull = lower_hull(&pts);
        let mut slopes = Vec::new();
        for win in hull.windows(2) {
            let (i1, v1) = &win[0];
            let (i2, v2) = &win[1];
            let m = (v2 - v1) / rat_i(i2 - i1);
            // A hull edge of width i2-i1 and slope m yields that many roots
            // of valuation -m.
            for _ in 0..(i2 - i1) {
                slopes.push(-m.clone());
            }
        }
        slopes.sort();
        Ok(slopes)
    }

    /// Infimum of w_t(f) over [t_lo, t_hi], attained at an endpoint since
    /// t |-> w_t(f) is concave. In norm terms this is the sup norm on the
    /// corresponding annulus or disk.
    pub fn sup_val_on_interval(&self, t_lo: &Rat, t_hi: &TEnd) -> Result<Val> {
        if let TEnd::Finite(hi) = t_hi {
            if t_lo > hi {
                return Err(Error::BadDomain(format!("t_lo = {} > t_hi = {}", t_lo, hi)));
            }
        }
        let lo = self.gauss_val(t_lo);
        let hi = match t_hi {
            TEnd::Finite(t) => self.gauss_val(t),
            TEnd::Inf => self
                .gauss_val_at_center()
                .ok_or(Error::PoleInDomain("pole at the disk center".into()))?,
        };
        Ok(lo.min(hi))
    }

    /// Apply a covering/recentring map exactly. Recentring maps require a
    /// plain polynomial (no negative exponents); use RatFunc otherwise.
    pub fn substitute(&self, map: &SubstMap) -> Result<Self> {
        map.validate()?;
        match map {
            SubstMap::Kummer(n) => Ok(LaurentPoly {
                cfg: self.cfg.clone(),
                terms: self
                    .terms
                    .iter()
                    .map(|(e, c)| (e * (*n as i64), c.clone()))
                    .collect(),
            }),
            SubstMap::Dilate(a) => {
                let mut terms = BTreeMap::new();
                for (e, c) in &self.terms {
                    let scaled = c.mul(&a.pow_i64(*e).expect("nonzero scale"));
                    if !scaled.is_zero() {
                        terms.insert(*e, scaled);
                    }
                }
                Ok(LaurentPoly {
                    cfg: self.cfg.clone(),
                    terms,
                })
            }
            SubstMap::Invert(g) => {
                let mut terms = BTreeMap::new();
                for (e, c) in &self.terms {
                    let scaled = c.mul(&g.pow_i64(*e).expect("nonzero scale"));
                    if !scaled.is_zero() {
                        terms.insert(-e, scaled);
                    }
                }
                Ok(LaurentPoly {
                    cfg: self.cfg.clone(),
                    terms,
                })
            }
            SubstMap::RecentreDisk(c) => self.compose_affine(c, &FieldElem::one(&self.cfg)),
            SubstMap::RecentreAnnulus(c) => self.compose_affine(c, c),
        }
    }

    /// f(alpha + beta*S) by Horner over the exponent range.
    fn compose_affine(&self, alpha: &FieldElem, beta: &FieldElem) -> Result<Self> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        if self.min_exp().unwrap() < 0 {
            return Err(Error::NegativeExponentRecentre);
        }
        let phi = LaurentPoly::from_terms(
            &self.cfg,
            [(0, alpha.clone()), (1, beta.clone())],
        );
        let max = self.max_exp().unwrap();
        let mut acc = LaurentPoly::zero(&self.cfg);
        for e in (0..=max).rev() {
            acc = acc.mul(&phi);
            if let Some(c) = self.terms.get(&e) {
                acc.add_term(0, c);
            }
        }
        Ok(acc)
    }

    /// One-variable Frobenius section: keep exponents divisible by p and
    /// divide them by p, so psi_star(f(T^p)) = f.
    pub fn psi_star(&self, p: u64) -> Self {
        let p = p as i64;
        LaurentPoly {
            cfg: self.cfg.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| (*e % p) == 0)
                .map(|(e, c)| (e / p, c.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (e, c) in &self.terms {
            let coeff = format!("({})", c);
            let part = match e {
                0 => coeff,
                1 => format!("{}*T", coeff),
                _ => format!("{}*T^{}", coeff, e),
            };
            parts.push(part);
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Lower convex hull of points (i, v) sorted by i; returns hull vertices.
fn lower_hull(pts: &[(i64, Rat)]) -> Vec<(i64, Rat)> {
    let mut hull: Vec<(i64, Rat)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // Drop b when it lies on or above the chord a--p.
            let lhs = (&b.1 - &a.1) * rat_i(p.0 - a.0);
            let rhs = (&p.1 - &a.1) * rat_i(b.0 - a.0);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p.clone());
    }
    hull
}

/// The five exact substitution maps T = phi(S).
#[derive(Debug, Clone)]
pub enum SubstMap {
    /// T = S^N.
    Kummer(u32),
    /// T = a*S with a != 0.
    Dilate(FieldElem),
    /// T = gamma/S with gamma != 0.
    Invert(FieldElem),
    /// T = c + S (disk recentring; c may be 0).
    RecentreDisk(FieldElem),
    /// T = c*(1 + S) (annulus recentring; c != 0).
    RecentreAnnulus(FieldElem),
}

impl SubstMap {
    pub fn validate(&self) -> Result<()> {
        match self {
            SubstMap::Kummer(n) if *n == 0 => Err(Error::ZeroSubstitutionParameter),
            SubstMap::Dilate(a) if a.is_zero() => Err(Error::ZeroSubstitutionParameter),
            SubstMap::Invert(g) if g.is_zero() => Err(Error::ZeroSubstitutionParameter),
            SubstMap::RecentreAnnulus(c) if c.is_zero() => Err(Error::ZeroSubstitutionParameter),
            _ => Ok(()),
        }
    }

    /// phi as a (numerator, denominator) pair of Laurent polynomials.
    pub fn phi(&self, cfg: &Arc<PrimeConfig>) -> LaurentPoly {
        match self {
            SubstMap::Kummer(n) => LaurentPoly::monomial(FieldElem::one(cfg), *n as i64),
            SubstMap::Dilate(a) => LaurentPoly::monomial(a.clone(), 1),
            SubstMap::Invert(g) => LaurentPoly::monomial(g.clone(), -1),
            SubstMap::RecentreDisk(c) => LaurentPoly::from_terms(
                cfg,
                [(0, c.clone()), (1, FieldElem::one(cfg))],
            ),
            SubstMap::RecentreAnnulus(c) => {
                LaurentPoly::from_terms(cfg, [(0, c.clone()), (1, c.clone())])
            }
        }
    }

    /// Formal derivative phi'(S).
    pub fn phi_prime(&self, cfg: &Arc<PrimeConfig>) -> LaurentPoly {
        self.phi(cfg).derivative()
    }
}

/// A quotient of Laurent polynomials. The representation is not reduced
/// (no gcd normalization), but the denominator is always shifted to have
/// lowest exponent 0, so a denominator root at T = 0 never hides there.
#[derive(Debug, Clone)]
pub struct RatFunc {
    num: LaurentPoly,
    den: LaurentPoly,
}

impl RatFunc {
    pub fn new(num: LaurentPoly, den: LaurentPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let shift = den.min_exp().unwrap();
        Ok(RatFunc {
            num: num.shift_exp(-shift),
            den: den.shift_exp(-shift),
        })
    }

    pub fn from_poly(num: LaurentPoly) -> Self {
        let one = LaurentPoly::one(num.config());
        RatFunc { num, den: one }
    }

    pub fn zero(cfg: &Arc<PrimeConfig>) -> Self {
        Self::from_poly(LaurentPoly::zero(cfg))
    }

    pub fn one(cfg: &Arc<PrimeConfig>) -> Self {
        Self::from_poly(LaurentPoly::one(cfg))
    }

    pub fn num(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn den(&self) -> &LaurentPoly {
        &self.den
    }

    pub fn config(&self) -> &Arc<PrimeConfig> {
        self.num.config()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = self
            .num
            .mul(&other.den)
            .add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFunc::new(num, den).expect("nonzero denominators multiply to nonzero")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        RatFunc::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominators multiply to nonzero")
    }

    pub fn mul_poly(&self, p: &LaurentPoly) -> Self {
        RatFunc {
            num: self.num.mul(p),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// (num' den - num den')/den^2.
    pub fn derivative(&self) -> Self {
        let num = self
            .num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()));
        let den = self.den.mul(&self.den);
        RatFunc::new(num, den).expect("den^2 nonzero")
    }

    /// w_t(num) - w_t(den), exact by multiplicativity of the Gauss norm.
    pub fn gauss_val(&self, t: &Rat) -> Val {
        match (self.num.gauss_val(t), self.den.gauss_val(t)) {
            (Val::Infinity, _) => Val::Infinity,
            (Val::Finite(n), Val::Finite(d)) => Val::Finite(n - d),
            (_, Val::Infinity) => unreachable!("denominator is nonzero"),
        }
    }

    /// Sup-norm valuation over [t_lo, t_hi]: requires the denominator to be
    /// pole-free there (no Newton slope in the interval), in which case
    /// t |-> w_t(f) is concave and the infimum sits at an endpoint.
    pub fn sup_val_on_interval(&self, t_lo: &Rat, t_hi: &TEnd) -> Result<Val> {
        self.check_pole_free(t_lo, t_hi)?;
        let lo = self.gauss_val(t_lo);
        let hi = match t_hi {
            TEnd::Finite(t) => self.gauss_val(t),
            TEnd::Inf => {
                let n = self
                    .num
                    .gauss_val_at_center()
                    .ok_or(Error::PoleInDomain("pole at the disk center".into()))?;
                let d = self.den.gauss_val_at_center().expect("den(0) != 0");
                match (n, d) {
                    (Val::Infinity, _) => Val::Infinity,
                    (Val::Finite(a), Val::Finite(b)) => Val::Finite(a - b),
                    _ => unreachable!(),
                }
            }
        };
        Ok(lo.min(hi))
    }

    /// Error when the denominator has a Newton slope strictly inside
    /// (t_lo, t_hi). Poles exactly on a boundary circle are allowed, as for
    /// analytic elements on the open annulus; Gauss valuations at the
    /// endpoints are then boundary seminorms and remain exact.
    pub fn check_pole_free(&self, t_lo: &Rat, t_hi: &TEnd) -> Result<()> {
        let slopes = self.den.newton_slopes()?;
        for s in &slopes {
            let inside = s > t_lo
                && match t_hi {
                    TEnd::Finite(hi) => s < hi,
                    TEnd::Inf => true,
                };
            if inside {
                return Err(Error::PoleInDomain(format!(
                    "denominator root of valuation {} inside ({}, {})",
                    s, t_lo, t_hi
                )));
            }
        }
        Ok(())
    }

    pub fn substitute(&self, map: &SubstMap) -> Result<Self> {
        map.validate()?;
        match map {
            SubstMap::Kummer(_) | SubstMap::Dilate(_) | SubstMap::Invert(_) => {
                // Monomial maps keep Laurent polynomials Laurent.
                RatFunc::new(self.num.substitute(map)?, self.den.substitute(map)?)
            }
            SubstMap::RecentreDisk(_) | SubstMap::RecentreAnnulus(_) => {
                // Split off the T-power content so both parts are plain
                // polynomials, then compose: T^r N(T)/D(T) with N, D regular.
                let mn = self.num.min_exp().unwrap_or(0);
                let md = self.den.min_exp().unwrap();
                let n = self.num.shift_exp(-mn).substitute(map)?;
                let d = self.den.shift_exp(-md).substitute(map)?;
                let r = mn - md;
                let phi = map.phi(self.config());
                let mut phi_pow = LaurentPoly::one(self.config());
                for _ in 0..r.unsigned_abs() {
                    phi_pow = phi_pow.mul(&phi);
                }
                if r >= 0 {
                    RatFunc::new(n.mul(&phi_pow), d)
                } else {
                    RatFunc::new(n, d.mul(&phi_pow))
                }
            }
        }
    }
}

impl PartialEq for RatFunc {
    /// Equality of the represented functions: a/b = c/d iff ad = cb.
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.num_terms() == 1 && self.den.coeff(0).map(|c| c.is_one()) == Some(true) {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/({})", self.num, self.den)
    }
}
