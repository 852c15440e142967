//! Differential systems dy/dT = G y on a disk or annulus, the iteration
//! producing the matrices G_[n] with (1/n!) (d/dT)^n y = G_[n] y, companion
//! systems of delta-operators, and domain-aware pullbacks along coverings.
//!
//! The iteration is the performance-critical path, so G_[n] is carried in
//! shared-denominator form
//!
//!     G_[n] = content * P_n / (n! * d^n),
//!
//! with d a single polynomial clearing all entries of G, P_n a matrix of
//! Laurent polynomials satisfying the recursion
//!
//!     P_{n+1} = P_n' * d - n * P_n * d' + P_n * P_G,
//!
//! and `content` a pi-power extracted every step so that the smallest
//! coefficient valuation in P_n stays at zero. No rational-function gcd is
//! ever taken.

use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::field::{factorial_val, rat_i, FieldElem, PrimeConfig, Rat, Val};
use crate::laurent::{LaurentPoly, RatFunc, SubstMap, TEnd};

/// Whether the domain is a disk reaching the center, a closed annulus, or an
/// interval of log-radii with no cap semantics attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Disk,
    Annulus,
    Uncapped,
}

/// A log-radius interval [t_lo, t_hi]; t_lo is the outer radius. Disks have
/// t_hi = +inf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub t_lo: Rat,
    pub t_hi: TEnd,
}

impl DomainSpec {
    pub fn disk(t_lo: Rat) -> Self {
        DomainSpec {
            kind: DomainKind::Disk,
            t_lo,
            t_hi: TEnd::Inf,
        }
    }

    pub fn annulus(t_lo: Rat, t_hi: Rat) -> Result<Self> {
        if t_lo > t_hi {
            return Err(Error::BadDomain(format!(
                "annulus needs t_lo <= t_hi, got [{}, {}]",
                t_lo, t_hi
            )));
        }
        Ok(DomainSpec {
            kind: DomainKind::Annulus,
            t_lo,
            t_hi: TEnd::Finite(t_hi),
        })
    }

    pub fn uncapped(t_lo: Rat, t_hi: TEnd) -> Result<Self> {
        if let TEnd::Finite(hi) = &t_hi {
            if &t_lo > hi {
                return Err(Error::BadDomain(format!(
                    "interval needs t_lo <= t_hi, got [{}, {}]",
                    t_lo, hi
                )));
            }
        }
        Ok(DomainSpec {
            kind: DomainKind::Uncapped,
            t_lo,
            t_hi,
        })
    }

    fn validate(&self) -> Result<()> {
        match (self.kind, &self.t_hi) {
            (DomainKind::Disk, TEnd::Finite(_)) => Err(Error::BadDomain(
                "a disk domain must have t_hi = +inf".into(),
            )),
            (DomainKind::Annulus, TEnd::Inf) => Err(Error::BadDomain(
                "an annulus domain must have finite t_hi".into(),
            )),
            (_, TEnd::Finite(hi)) if &self.t_lo > hi => Err(Error::BadDomain(format!(
                "t_lo = {} > t_hi = {}",
                self.t_lo, hi
            ))),
            _ => Ok(()),
        }
    }

    /// True when the interval runs to the disk center.
    pub fn reaches_center(&self) -> bool {
        matches!(self.t_hi, TEnd::Inf)
    }

    pub fn contains_t(&self, t: &Rat) -> bool {
        t >= &self.t_lo
            && match &self.t_hi {
                TEnd::Finite(hi) => t <= hi,
                TEnd::Inf => true,
            }
    }

    /// Membership for the valuation of a rational center.
    pub fn contains_val(&self, v: &Val) -> bool {
        match v {
            Val::Infinity => self.reaches_center(),
            Val::Finite(t) => self.contains_t(t),
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DomainKind::Disk => "disk",
            DomainKind::Annulus => "annulus",
            DomainKind::Uncapped => "uncapped",
        };
        write!(f, "{}[{}, {}]", kind, self.t_lo, self.t_hi)
    }
}

/// A mu x mu system dy/dT = G y, pole-free on its domain.
#[derive(Debug, Clone)]
pub struct DiffSystem {
    mu: usize,
    entries: Vec<Vec<RatFunc>>,
    domain: DomainSpec,
    cfg: Arc<PrimeConfig>,
    /// Shared denominator d and numerator matrix with G = p_g / d.
    d: Arc<LaurentPoly>,
    p_g: Arc<Vec<Vec<LaurentPoly>>>,
}

impl DiffSystem {
    pub fn new(
        entries: Vec<Vec<RatFunc>>,
        domain: DomainSpec,
        cfg: &Arc<PrimeConfig>,
    ) -> Result<Self> {
        domain.validate()?;
        let mu = entries.len();
        if mu == 0 || entries.iter().any(|row| row.len() != mu) {
            return Err(Error::Invalid("G must be a nonempty square matrix".into()));
        }
        for row in &entries {
            for f in row {
                f.check_pole_free(&domain.t_lo, &domain.t_hi)?;
                if domain.reaches_center() {
                    if let Some(m) = f.num().min_exp() {
                        if m < 0 {
                            return Err(Error::PoleInDomain(
                                "entry has a pole at the disk center".into(),
                            ));
                        }
                    }
                }
            }
        }
        // Shared denominator: product of the distinct entry denominators.
        let mut uniques: Vec<LaurentPoly> = Vec::new();
        for row in &entries {
            for f in row {
                if !uniques.iter().any(|u| u == f.den()) {
                    uniques.push(f.den().clone());
                }
            }
        }
        let mut d = LaurentPoly::one(cfg);
        for u in &uniques {
            d = d.mul(u);
        }
        let mut p_g = Vec::with_capacity(mu);
        for row in &entries {
            let mut out_row = Vec::with_capacity(mu);
            for f in row {
                // num * (d / den), as the product of the other unique
                // denominators.
                let mut cof = LaurentPoly::one(cfg);
                let mut skipped = false;
                for u in &uniques {
                    if !skipped && u == f.den() {
                        skipped = true;
                        continue;
                    }
                    cof = cof.mul(u);
                }
                out_row.push(f.num().mul(&cof));
            }
            p_g.push(out_row);
        }
        // Clear rational denominators from the shared representation: scale
        // p_g and d by the same integer so the hot loop works on integral
        // coordinates (G = p_g/d is unchanged).
        let mut lcm = BigInt::one();
        for row in &p_g {
            for poly in row {
                for (_, c) in poly.terms() {
                    lcm = num::Integer::lcm(&lcm, &c.denom_lcm());
                }
            }
        }
        for (_, c) in d.terms() {
            lcm = num::Integer::lcm(&lcm, &c.denom_lcm());
        }
        if !lcm.is_one() {
            let scale = Rat::from_integer(lcm);
            d = d.mul_rat(&scale);
            for row in &mut p_g {
                for poly in row.iter_mut() {
                    *poly = poly.mul_rat(&scale);
                }
            }
        }
        Ok(DiffSystem {
            mu,
            entries,
            domain,
            cfg: cfg.clone(),
            d: Arc::new(d),
            p_g: Arc::new(p_g),
        })
    }

    /// Scalar convenience constructor.
    pub fn scalar(g: RatFunc, domain: DomainSpec, cfg: &Arc<PrimeConfig>) -> Result<Self> {
        Self::new(vec![vec![g]], domain, cfg)
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn entry(&self, i: usize, j: usize) -> &RatFunc {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &Vec<Vec<RatFunc>> {
        &self.entries
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn config(&self) -> &Arc<PrimeConfig> {
        &self.cfg
    }

    pub fn shared_den(&self) -> &LaurentPoly {
        &self.d
    }

    /// Trace of G (the wronskian satisfies dw/dT = (Tr G) w).
    pub fn trace(&self) -> RatFunc {
        let mut acc = RatFunc::zero(&self.cfg);
        for i in 0..self.mu {
            acc = acc.add(&self.entries[i][i]);
        }
        acc
    }

    /// Pull the system back along T = phi(S): G'(S) = phi'(S) G(phi(S)),
    /// with the domain mapped to the preimage interval of log-radii.
    pub fn pullback(&self, map: &SubstMap) -> Result<DiffSystem> {
        map.validate()?;
        let new_domain = self.pullback_domain(map)?;
        let phi_prime = map.phi_prime(&self.cfg);
        let mut new_entries = Vec::with_capacity(self.mu);
        for row in &self.entries {
            let mut out = Vec::with_capacity(self.mu);
            for f in row {
                out.push(f.substitute(map)?.mul_poly(&phi_prime));
            }
            new_entries.push(out);
        }
        DiffSystem::new(new_entries, new_domain, &self.cfg)
    }

    fn pullback_domain(&self, map: &SubstMap) -> Result<DomainSpec> {
        let dom = &self.domain;
        match map {
            SubstMap::Kummer(n) => {
                let n = rat_i(*n as i64);
                let t_hi = match &dom.t_hi {
                    TEnd::Finite(hi) => TEnd::Finite(hi / &n),
                    TEnd::Inf => TEnd::Inf,
                };
                Ok(DomainSpec {
                    kind: dom.kind,
                    t_lo: &dom.t_lo / &n,
                    t_hi,
                })
            }
            SubstMap::Dilate(a) => {
                let v = match a.val() {
                    Val::Finite(v) => v,
                    Val::Infinity => return Err(Error::ZeroSubstitutionParameter),
                };
                let t_hi = match &dom.t_hi {
                    TEnd::Finite(hi) => TEnd::Finite(hi - &v),
                    TEnd::Inf => TEnd::Inf,
                };
                Ok(DomainSpec {
                    kind: dom.kind,
                    t_lo: &dom.t_lo - &v,
                    t_hi,
                })
            }
            SubstMap::Invert(g) => {
                let v = match g.val() {
                    Val::Finite(v) => v,
                    Val::Infinity => return Err(Error::ZeroSubstitutionParameter),
                };
                let TEnd::Finite(hi) = &dom.t_hi else {
                    return Err(Error::BadPullback(
                        "inversion needs a finite inner radius (annulus)".into(),
                    ));
                };
                Ok(DomainSpec {
                    kind: if dom.kind == DomainKind::Uncapped {
                        DomainKind::Uncapped
                    } else {
                        DomainKind::Annulus
                    },
                    t_lo: &v - hi,
                    t_hi: TEnd::Finite(&v - &dom.t_lo),
                })
            }
            SubstMap::RecentreDisk(c) => {
                if !dom.reaches_center() {
                    return Err(Error::BadPullback(
                        "disk recentring needs a domain reaching the center".into(),
                    ));
                }
                if !dom.contains_val(&c.val()) {
                    return Err(Error::PointOutsideDomain(format!(
                        "center has valuation {} outside {}",
                        c.val(),
                        dom
                    )));
                }
                Ok(dom.clone())
            }
            SubstMap::RecentreAnnulus(c) => {
                if !dom.contains_val(&c.val()) {
                    return Err(Error::PointOutsideDomain(format!(
                        "center has valuation {} outside {}",
                        c.val(),
                        dom
                    )));
                }
                // The maximal disk at c avoiding the skeleton is |S| < 1 in
                // the normalized coordinate S = (T - c)/c.
                Ok(DomainSpec::disk(Rat::zero()))
            }
        }
    }
}

/// One step of the iteration: G_[n] = content * P_n / (n! * d^n).
#[derive(Debug, Clone)]
pub struct IterState {
    pub n: usize,
    /// Numerator matrix, normalized so its smallest coefficient valuation
    /// is zero (unless the matrix vanishes).
    pub p_mat: Vec<Vec<LaurentPoly>>,
    /// The shared denominator (independent of n).
    pub d: Arc<LaurentPoly>,
    /// Extracted pi-power content.
    pub content: FieldElem,
    /// val(content), maintained incrementally.
    pub content_val: Rat,
}

impl IterState {
    pub fn is_zero(&self) -> bool {
        self.p_mat.iter().all(|row| row.iter().all(|e| e.is_zero()))
    }

    /// Reconstruct G_[n] exactly as a matrix of rational functions.
    /// Intended for checks at small n; the radius path never calls this.
    pub fn g_matrix(&self) -> Vec<Vec<RatFunc>> {
        let cfg = self.content.config();
        let mut dn = LaurentPoly::one(cfg);
        for _ in 0..self.n {
            dn = dn.mul(&self.d);
        }
        let mut fact = BigInt::one();
        for k in 2..=self.n {
            fact *= BigInt::from(k);
        }
        let den = dn.mul_rat(&Rat::from_integer(fact));
        self.p_mat
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| {
                        RatFunc::new(p.mul_scalar(&self.content), den.clone())
                            .expect("n! d^n is nonzero")
                    })
                    .collect()
            })
            .collect()
    }

    /// w_n(t) = -log_p |G_[n](t_{0,rho})|: the Gauss valuation of the matrix
    /// (minimum over entries) at log-radius t. +inf when G_[n] = 0.
    pub fn eval_gauss(&self, t: &Rat) -> Val {
        let mut best = Val::Infinity;
        for row in &self.p_mat {
            for p in row {
                best = best.min(p.gauss_val(t));
            }
        }
        let Val::Finite(pv) = best else {
            return Val::Infinity;
        };
        let Val::Finite(dv) = self.d.gauss_val(t) else {
            unreachable!("shared denominator is nonzero")
        };
        let p = self.content.config().p();
        let fact = rat_i(factorial_val(p, self.n) as i64);
        Val::Finite(pv + &self.content_val - dv * rat_i(self.n as i64) - fact)
    }

    /// w_n(t) for several log-radii at once, sharing the coefficient
    /// valuation work. Valuations are computed truncated and refined only
    /// for the terms that compete for a minimum, which keeps the per-state
    /// cost near-linear in the number of terms.
    pub fn eval_gauss_many(&self, ts: &[Rat]) -> Vec<Val> {
        if self.is_zero() {
            return vec![Val::Infinity; ts.len()];
        }
        let cfg = self.content.config();
        let e = cfg.e() as i64;
        let p = cfg.p();
        let mut exps: Vec<i64> = Vec::new();
        let mut coeffs: Vec<&FieldElem> = Vec::new();
        for row in &self.p_mat {
            for poly in row {
                for (ex, c) in poly.terms() {
                    exps.push(*ex);
                    coeffs.push(c);
                }
            }
        }
        // Scaled comparison data per t = a/b: candidate * (e*b) =
        // bound*b + exp*e*a, exact i128 arithmetic. Falls back to fully
        // exact valuations for log-radii too large for the fast path.
        let scaled: Option<Vec<(i128, i128)>> = ts
            .iter()
            .map(|t| {
                let a = i128::try_from(t.numer().clone()).ok()?;
                let b = i128::try_from(t.denom().clone()).ok()?;
                Some((a, b))
            })
            .collect();
        let initial_cap = if scaled.is_some() { 8 * e } else { i64::MAX / 4 };
        let mut caps: Vec<i64> = vec![initial_cap; coeffs.len()];
        let mut bounds: Vec<(i64, bool)> = coeffs
            .iter()
            .zip(&caps)
            .map(|(c, cap)| crate::field::val_e_lower_bound(c, *cap).expect("nonzero term"))
            .collect();
        if let Some(scaled) = &scaled {
            loop {
                let mut refine = vec![false; coeffs.len()];
                let mut any = false;
                for (a, b) in scaled {
                    let mut min_exact: Option<i128> = None;
                    for (ex, (bound, exact)) in exps.iter().zip(&bounds) {
                        if !exact {
                            continue;
                        }
                        let cand = (*bound as i128) * b + (*ex as i128) * e as i128 * a;
                        if min_exact.map_or(true, |m| cand < m) {
                            min_exact = Some(cand);
                        }
                    }
                    for (i, (ex, (bound, exact))) in exps.iter().zip(&bounds).enumerate() {
                        if *exact {
                            continue;
                        }
                        let cand = (*bound as i128) * b + (*ex as i128) * e as i128 * a;
                        if min_exact.map_or(true, |m| cand < m) && !refine[i] {
                            refine[i] = true;
                            any = true;
                        }
                    }
                }
                if !any {
                    break;
                }
                for (i, flag) in refine.iter().enumerate() {
                    if *flag {
                        caps[i] = caps[i].saturating_mul(2);
                        bounds[i] = crate::field::val_e_lower_bound(coeffs[i], caps[i])
                            .expect("nonzero term");
                    }
                }
            }
        }
        // All minima are now witnessed by exact bounds.
        let vfact = rat_i(factorial_val(p, self.n) as i64);
        ts.iter()
            .enumerate()
            .map(|(ti, t)| {
                let pv: Rat = if let Some(scaled) = &scaled {
                    let (a, b) = scaled[ti];
                    let mut best: Option<i128> = None;
                    for (ex, (bound, _)) in exps.iter().zip(&bounds) {
                        let cand = (*bound as i128) * b + (*ex as i128) * e as i128 * a;
                        if best.map_or(true, |m| cand < m) {
                            best = Some(cand);
                        }
                    }
                    Rat::new(
                        best.expect("nonzero matrix").into(),
                        (e as i128 * b).into(),
                    )
                } else {
                    let mut best: Option<Rat> = None;
                    for (ex, (bound, _)) in exps.iter().zip(&bounds) {
                        let cand = Rat::new((*bound).into(), e.into()) + t * rat_i(*ex);
                        best = Some(match best {
                            None => cand,
                            Some(b) => b.min(cand),
                        });
                    }
                    best.expect("nonzero matrix")
                };
                let Val::Finite(dv) = self.d.gauss_val(t) else {
                    unreachable!("shared denominator is nonzero")
                };
                Val::Finite(
                    pv + &self.content_val - dv * rat_i(self.n as i64) - vfact.clone(),
                )
            })
            .collect()
    }

    /// Valuation of G_[n] at the center S = 0 (constant coefficients only).
    /// Valid for systems on a disk reaching the center.
    pub fn eval_center(&self) -> Val {
        let mut best = Val::Infinity;
        for row in &self.p_mat {
            for p in row {
                debug_assert!(p.min_exp().map_or(true, |m| m >= 0));
                if let Some(c) = p.coeff(0) {
                    best = best.min(c.val());
                }
            }
        }
        let Val::Finite(pv) = best else {
            return Val::Infinity;
        };
        let d0 = self
            .d
            .coeff(0)
            .expect("denominator nonzero at the center")
            .val();
        let Val::Finite(dv) = d0 else { unreachable!() };
        let p = self.content.config().p();
        let fact = rat_i(factorial_val(p, self.n) as i64);
        Val::Finite(pv + &self.content_val - dv * rat_i(self.n as i64) - fact)
    }
}

/// Sequential producer of the states n = 0, 1, 2, ... without cloning the
/// numerator matrices; consumers borrow the current state.
pub struct IterStream {
    cfg: Arc<PrimeConfig>,
    mu: usize,
    p_g: Arc<Vec<Vec<LaurentPoly>>>,
    d: Arc<LaurentPoly>,
    d_prime: LaurentPoly,
    state: IterState,
}

impl IterStream {
    pub fn new(sys: &DiffSystem) -> Self {
        let cfg = sys.cfg.clone();
        let mu = sys.mu;
        let mut p0 = vec![vec![LaurentPoly::zero(&cfg); mu]; mu];
        for (i, row) in p0.iter_mut().enumerate() {
            row[i] = LaurentPoly::one(&cfg);
        }
        let d_prime = sys.d.derivative();
        IterStream {
            cfg: cfg.clone(),
            mu,
            p_g: sys.p_g.clone(),
            d: sys.d.clone(),
            d_prime,
            state: IterState {
                n: 0,
                p_mat: p0,
                d: sys.d.clone(),
                content: FieldElem::one(&cfg),
                content_val: Rat::zero(),
            },
        }
    }

    pub fn state(&self) -> &IterState {
        &self.state
    }

    /// Advance to n+1 and return the new state.
    pub fn advance(&mut self) -> &IterState {
        let n = self.state.n;
        let d_trivial = self.d.num_terms() == 1 && self.d.coeff(0).map_or(false, |c| c.is_one());
        let mut next = vec![vec![LaurentPoly::zero(&self.cfg); self.mu]; self.mu];
        for i in 0..self.mu {
            for j in 0..self.mu {
                // P' d - n P d'
                let mut acc = self.state.p_mat[i][j].derivative();
                if !d_trivial {
                    acc = acc.mul(&self.d);
                }
                if n > 0 && !self.d_prime.is_zero() {
                    acc = acc.sub(
                        &self.state.p_mat[i][j]
                            .mul(&self.d_prime)
                            .mul_rat(&rat_i(n as i64)),
                    );
                }
                // + (P * P_G)_{ij}
                for k in 0..self.mu {
                    if self.state.p_mat[i][k].is_zero() || self.p_g[k][j].is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.state.p_mat[i][k].mul(&self.p_g[k][j]));
                }
                next[i][j] = acc;
            }
        }
        let (content, content_val) = self.extract_content(&mut next);
        self.state = IterState {
            n: n + 1,
            p_mat: next,
            d: self.d.clone(),
            content,
            content_val,
        };
        &self.state
    }

    /// Divide the matrix by pi^k so its minimum coefficient valuation is 0,
    /// folding the factor into the running content.
    fn extract_content(&self, mat: &mut [Vec<LaurentPoly>]) -> (FieldElem, Rat) {
        // Minimum valuation in e-scaled units, with early exit: once a unit
        // coefficient shows up there is nothing to extract, which is the
        // common case since extraction keeps the minimum at zero.
        let mut min_e: Option<i64> = None;
        'scan: for row in mat.iter() {
            for p in row.iter() {
                for (_, c) in p.terms() {
                    let cap = min_e.unwrap_or(i64::MAX);
                    if let Some(v) = crate::field::val_e_units_capped(c, cap) {
                        if min_e.map_or(true, |m| v < m) {
                            min_e = Some(v);
                        }
                        if min_e == Some(0) {
                            break 'scan;
                        }
                    }
                }
            }
        }
        let Some(k_i64) = min_e else {
            // Zero matrix: the content is irrelevant from here on.
            return (self.state.content.clone(), self.state.content_val.clone());
        };
        if k_i64 == 0 {
            return (self.state.content.clone(), self.state.content_val.clone());
        }
        let m = Rat::new(k_i64.into(), (self.cfg.e() as i64).into());
        for row in mat.iter_mut() {
            for p in row.iter_mut() {
                *p = if k_i64 > 0 {
                    // All coefficient valuations are >= m, so the quotient
                    // keeps integral coordinates: exact divisions, no gcd.
                    p.map_coeffs(|c| c.div_pi_pow_exact(k_i64 as u32))
                } else {
                    let pi_up = FieldElem::pi(&self.cfg)
                        .pow_i64(-k_i64)
                        .expect("pi power");
                    p.mul_scalar(&pi_up)
                };
            }
        }
        let content = self
            .state
            .content
            .mul(&FieldElem::pi(&self.cfg).pow_i64(k_i64).expect("pi power"));
        let content_val = &self.state.content_val + &m;
        (content, content_val)
    }
}

/// Cloning iterator over states n = 0..=n_max, built on [`IterStream`].
pub fn iterate(sys: &DiffSystem, n_max: usize) -> impl Iterator<Item = IterState> {
    let mut stream = IterStream::new(sys);
    let mut produced = 0usize;
    std::iter::from_fn(move || {
        if produced > n_max {
            return None;
        }
        let out = if produced == 0 {
            stream.state().clone()
        } else {
            stream.advance().clone()
        };
        produced += 1;
        Some(out)
    })
}

/// The operator L = delta^mu - C_1 delta^(mu-1) - ... - C_mu, delta = T d/dT.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    mu: usize,
    /// c[j] is C_{j+1}.
    c: Vec<RatFunc>,
    domain: DomainSpec,
    cfg: Arc<PrimeConfig>,
}

impl DiffOperator {
    pub fn new(c: Vec<RatFunc>, domain: DomainSpec, cfg: &Arc<PrimeConfig>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Invalid("operator order mu must be >= 1".into()));
        }
        domain.validate()?;
        Ok(DiffOperator {
            mu: c.len(),
            c,
            domain,
            cfg: cfg.clone(),
        })
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    /// C_j for j in 1..=mu.
    pub fn coefficient(&self, j: usize) -> &RatFunc {
        &self.c[j - 1]
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn config(&self) -> &Arc<PrimeConfig> {
        &self.cfg
    }

    /// The companion system: delta Y = A Y with the companion matrix A of L,
    /// hence dY/dT = (A/T) Y on solutions Y = (y, delta y, ..., delta^(mu-1) y).
    pub fn companion(&self) -> Result<DiffSystem> {
        let t_inv = RatFunc::from_poly(LaurentPoly::monomial(FieldElem::one(&self.cfg), -1));
        let zero = RatFunc::zero(&self.cfg);
        let mut entries = vec![vec![zero; self.mu]; self.mu];
        for i in 0..self.mu.saturating_sub(1) {
            entries[i][i + 1] = t_inv.clone();
        }
        for j in 0..self.mu {
            // Bottom row: delta(delta^(mu-1) y) = C_mu y + ... + C_1 delta^(mu-1) y.
            entries[self.mu - 1][j] = self.c[self.mu - 1 - j].mul(&t_inv);
        }
        DiffSystem::new(entries, self.domain.clone(), &self.cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    fn q3() -> Arc<PrimeConfig> {
        PrimeConfig::qp(3).unwrap()
    }

    fn poly_i64(cfg: &Arc<PrimeConfig>, terms: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(
            cfg,
            terms
                .iter()
                .map(|(e, c)| (*e, FieldElem::from_i64(cfg, *c))),
        )
    }

    fn unit_disk_scalar(cfg: &Arc<PrimeConfig>, g: RatFunc) -> DiffSystem {
        DiffSystem::scalar(g, DomainSpec::disk(Rat::zero()), cfg).unwrap()
    }

    #[test]
    fn exponential_iterates_are_inverse_factorials() {
        let cfg = q3();
        let sys = unit_disk_scalar(&cfg, RatFunc::one(&cfg));
        for (n, st) in iterate(&sys, 8).enumerate() {
            assert_eq!(st.n, n);
            let g = st.g_matrix();
            let mut fact = BigInt::one();
            for k in 2..=n {
                fact *= BigInt::from(k);
            }
            let expect = RatFunc::from_poly(LaurentPoly::constant(FieldElem::from_rat(
                &cfg,
                Rat::new(BigInt::one(), fact),
            )));
            assert_eq!(g[0][0], expect, "G_[{}] = 1/{}!", n, n);
        }
    }

    #[test]
    fn first_iterate_is_g() {
        let cfg = q3();
        let g = RatFunc::new(
            poly_i64(&cfg, &[(0, 2), (1, 1)]),
            poly_i64(&cfg, &[(0, 1), (2, 3)]),
        )
        .unwrap();
        let sys = unit_disk_scalar(&cfg, g.clone());
        let st = iterate(&sys, 1).last().unwrap();
        assert_eq!(st.g_matrix()[0][0], g);
    }

    #[test]
    fn euler_iterates_match_falling_factorials() {
        // G = c/T: G_[n] = c(c-1)...(c-n+1)/(n! T^n); the formula was frozen
        // from the series recurrence for T^c at a rational center.
        let cfg = q3();
        let c = rat(5, 2);
        let g = RatFunc::new(
            LaurentPoly::constant(FieldElem::from_rat(&cfg, c.clone())),
            LaurentPoly::var(&cfg),
        )
        .unwrap();
        let dom = DomainSpec::annulus(rat_i(0), rat_i(2)).unwrap();
        let sys = DiffSystem::scalar(g, dom, &cfg).unwrap();
        for (n, st) in iterate(&sys, 6).enumerate() {
            let mut coeff = Rat::one();
            let mut fact = Rat::one();
            for k in 0..n {
                coeff *= &c - rat_i(k as i64);
                fact *= rat_i(k as i64 + 1);
            }
            let expect = RatFunc::new(
                LaurentPoly::constant(FieldElem::from_rat(&cfg, coeff / fact)),
                LaurentPoly::monomial(FieldElem::one(&cfg), n as i64),
            )
            .unwrap();
            assert_eq!(st.g_matrix()[0][0], expect, "n = {}", n);
        }
    }

    #[test]
    fn recursion_identity_exact() {
        // (n+1) G_[n+1] = G_[n]' + G_[n] G as rational-function matrices.
        let cfg = q3();
        let entries = vec![
            vec![
                RatFunc::new(
                    poly_i64(&cfg, &[(0, 1), (1, 2)]),
                    poly_i64(&cfg, &[(0, 1), (2, 3)]),
                )
                .unwrap(),
                RatFunc::from_poly(poly_i64(&cfg, &[(1, 3)])),
            ],
            vec![
                RatFunc::from_poly(poly_i64(&cfg, &[(0, -1)])),
                RatFunc::new(poly_i64(&cfg, &[(0, 2)]), poly_i64(&cfg, &[(0, 1), (1, 9)]))
                    .unwrap(),
            ],
        ];
        let sys = DiffSystem::new(entries, DomainSpec::disk(Rat::zero()), &cfg).unwrap();
        let states: Vec<_> = iterate(&sys, 4).collect();
        for n in 0..4 {
            let g_n = states[n].g_matrix();
            let g_next = states[n + 1].g_matrix();
            for i in 0..2 {
                for j in 0..2 {
                    let mut rhs = g_n[i][j].derivative();
                    for k in 0..2 {
                        rhs = rhs.add(&g_n[i][k].mul(sys.entry(k, j)));
                    }
                    let lhs = g_next[i][j].mul(&RatFunc::from_poly(poly_i64(
                        &cfg,
                        &[(0, n as i64 + 1)],
                    )));
                    assert_eq!(lhs, rhs, "entry ({}, {}) at n = {}", i, j, n);
                }
            }
        }
    }

    #[test]
    fn eval_gauss_examples() {
        let cfg = q3();
        let sys = unit_disk_scalar(&cfg, RatFunc::one(&cfg));
        let states: Vec<_> = iterate(&sys, 30).collect();
        // G = 1, n = 3: w = -v_3(3!) = -1 at any t.
        assert_eq!(states[3].eval_gauss(&rat(1, 7)), Val::Finite(rat_i(-1)));
        // General n: w_n = -(n - s_3(n))/2 (Legendre).
        for (n, st) in states.iter().enumerate() {
            let s3 = {
                let mut m = n;
                let mut s = 0;
                while m > 0 {
                    s += m % 3;
                    m /= 3;
                }
                s
            };
            let expect = rat(-((n - s3) as i64), 2);
            assert_eq!(st.eval_gauss(&rat_i(0)), Val::Finite(expect), "n = {}", n);
        }
    }

    #[test]
    fn zero_system_degenerates() {
        let cfg = q3();
        let sys = unit_disk_scalar(&cfg, RatFunc::zero(&cfg));
        let states: Vec<_> = iterate(&sys, 3).collect();
        assert_eq!(states[0].eval_gauss(&rat_i(0)), Val::Finite(rat_i(0)));
        for st in &states[1..] {
            assert!(st.is_zero());
            assert_eq!(st.eval_gauss(&rat_i(0)), Val::Infinity);
        }
    }

    #[test]
    fn companion_shapes() {
        let cfg = q3();
        let dom = DomainSpec::annulus(rat_i(0), rat_i(1)).unwrap();
        // mu = 1: L = delta - c -> G = c/T.
        let c = RatFunc::from_poly(poly_i64(&cfg, &[(0, 7)]));
        let op = DiffOperator::new(vec![c.clone()], dom.clone(), &cfg).unwrap();
        let sys = op.companion().unwrap();
        let t_inv = RatFunc::from_poly(poly_i64(&cfg, &[(-1, 1)]));
        assert_eq!(sys.entry(0, 0), &c.mul(&t_inv));
        // mu = 2: L = delta^2 - C1 delta - C2 -> G = (1/T) [[0,1],[C2,C1]].
        let c1 = RatFunc::from_poly(poly_i64(&cfg, &[(1, 2)]));
        let c2 = RatFunc::from_poly(poly_i64(&cfg, &[(0, 5)]));
        let op2 = DiffOperator::new(vec![c1.clone(), c2.clone()], dom.clone(), &cfg).unwrap();
        let sys2 = op2.companion().unwrap();
        assert!(sys2.entry(0, 0).is_zero());
        assert_eq!(sys2.entry(0, 1), &t_inv);
        assert_eq!(sys2.entry(1, 0), &c2.mul(&t_inv));
        assert_eq!(sys2.entry(1, 1), &c1.mul(&t_inv));
        // companion then iterate: G_[1] = A/T exactly.
        let st = iterate(&sys2, 1).last().unwrap();
        assert_eq!(&st.g_matrix()[1][0], sys2.entry(1, 0));
    }

    #[test]
    fn pullback_chain_rule_examples() {
        let cfg = q3();
        // G = 1, dilation by a = 3: G'(S) = 3.
        let sys = unit_disk_scalar(&cfg, RatFunc::one(&cfg));
        let three = FieldElem::from_i64(&cfg, 3);
        let dil = sys.pullback(&SubstMap::Dilate(three.clone())).unwrap();
        assert_eq!(
            dil.entry(0, 0),
            &RatFunc::from_poly(poly_i64(&cfg, &[(0, 3)]))
        );
        // Domain shifts by -val(a) = -1.
        assert_eq!(dil.domain().t_lo, rat_i(-1));
        // G = 1, Kummer(3): G'(S) = 3 S^2.
        let kum = sys.pullback(&SubstMap::Kummer(3)).unwrap();
        assert_eq!(
            kum.entry(0, 0),
            &RatFunc::from_poly(poly_i64(&cfg, &[(2, 3)]))
        );
        // G = c/T, inversion: G'(S) = -c/S.
        let c = poly_i64(&cfg, &[(0, 7)]);
        let g = RatFunc::new(c, LaurentPoly::var(&cfg)).unwrap();
        let ann = DiffSystem::scalar(g, DomainSpec::annulus(rat_i(0), rat_i(2)).unwrap(), &cfg)
            .unwrap();
        let inv = ann.pullback(&SubstMap::Invert(three)).unwrap();
        let expect = RatFunc::new(poly_i64(&cfg, &[(0, -7)]), LaurentPoly::var(&cfg)).unwrap();
        assert_eq!(inv.entry(0, 0), &expect);
        // Interval reflected through val(gamma) = 1: [0,2] -> [-1,1].
        assert_eq!(inv.domain().t_lo, rat_i(-1));
        assert_eq!(inv.domain().t_hi, TEnd::Finite(rat_i(1)));
    }

    #[test]
    fn pole_checks_at_construction() {
        let cfg = q3();
        // G = 1/T on the unit disk: pole at the center.
        let g = RatFunc::new(LaurentPoly::one(&cfg), LaurentPoly::var(&cfg)).unwrap();
        assert!(DiffSystem::scalar(g.clone(), DomainSpec::disk(Rat::zero()), &cfg).is_err());
        // Fine on an annulus.
        assert!(
            DiffSystem::scalar(g, DomainSpec::annulus(rat_i(0), rat_i(1)).unwrap(), &cfg).is_ok()
        );
        // 1/(1+T) has a pole of valuation 0: interior to (-1/2, 1), so
        // rejected there, but allowed on the boundary circle of [0, 1].
        let h = RatFunc::new(LaurentPoly::one(&cfg), poly_i64(&cfg, &[(0, 1), (1, 1)])).unwrap();
        assert!(DiffSystem::scalar(
            h.clone(),
            DomainSpec::annulus(rat(-1, 2), rat_i(1)).unwrap(),
            &cfg
        )
        .is_err());
        assert!(DiffSystem::scalar(
            h,
            DomainSpec::annulus(rat_i(0), rat_i(1)).unwrap(),
            &cfg
        )
        .is_ok());
    }

    #[test]
    fn recentre_annulus_gives_unit_disk() {
        let cfg = q3();
        let g = RatFunc::new(LaurentPoly::one(&cfg), LaurentPoly::var(&cfg)).unwrap();
        let sys =
            DiffSystem::scalar(g, DomainSpec::annulus(rat_i(0), rat_i(1)).unwrap(), &cfg).unwrap();
        let c = FieldElem::one(&cfg);
        let child = sys.pullback(&SubstMap::RecentreAnnulus(c)).unwrap();
        assert_eq!(child.domain(), &DomainSpec::disk(Rat::zero()));
        // G'(S) = c * (1/(c(1+S))) = 1/(1+S).
        let expect =
            RatFunc::new(LaurentPoly::one(&cfg), poly_i64(&cfg, &[(0, 1), (1, 1)])).unwrap();
        assert_eq!(child.entry(0, 0), &expect);
    }

    #[test]
    fn content_extraction_keeps_minimum_val_zero() {
        let cfg = q3();
        let g = RatFunc::from_poly(poly_i64(&cfg, &[(0, 9), (1, 27)]));
        let sys = unit_disk_scalar(&cfg, g);
        let mut stream = IterStream::new(&sys);
        for _ in 0..6 {
            let st = stream.advance();
            if st.is_zero() {
                continue;
            }
            let min = st
                .p_mat
                .iter()
                .flatten()
                .flat_map(|p| p.terms().map(|(_, c)| c.val()))
                .min()
                .unwrap();
            assert_eq!(min, Val::Finite(Rat::zero()), "n = {}", st.n);
        }
        // Reconstruction stays exact despite extraction.
        let states: Vec<_> = iterate(&sys, 2).collect();
        let g1 = states[1].g_matrix();
        assert_eq!(g1[0][0], *sys.entry(0, 0));
    }
}
