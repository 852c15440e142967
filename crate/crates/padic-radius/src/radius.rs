//! Radius-of-convergence enclosures at Gauss points and rational points.
//!
//! The radius at a point x is min(cap, liminf_n |G_[n](x)|^(-1/n)), carried
//! as v_R = -log_p R. Writing w_n = -log_p |G_[n](x)| and beta_n = -w_n/n,
//! the reported enclosure has two sides:
//!
//! - `v_est`: a heuristic estimate max of beta_n over a tail window, with a
//!   stabilization flag comparing two consecutive windows. No finite
//!   computation can certify v_R from above, so this side stays heuristic.
//! - `v_cert`: a rigorous lower bound on v_R (an upper bound on R). The
//!   effective growth estimate |G_[n](x)| <= C n^(mu-1) R^(-n) gives
//!   v_R >= beta_n - (log_p C + (mu-1) log_p n)/n for every n, and both
//!   transcendental quantities are replaced by outward-rounded rational
//!   upper bounds, so the certificate is exact rational arithmetic.
//!
//! Cap policy: `Domain` caps at the domain's outer radius t_lo (disk-model
//! normalization), `Point` caps at the point's own log-radius (annulus-model
//! normalization), `Uncapped` reports the raw liminf quantities; the
//! certificate is then only valid down to the domain cap.

use num::{One, Signed, Zero};

use crate::diffsys::{DiffSystem, DomainSpec, IterState, IterStream};
use crate::error::{Error, Result};
use crate::field::{factorial_val, rat_i, FieldElem, Rat, Val};
use crate::laurent::{SubstMap, TEnd};

/// Where to evaluate: the Gauss point t_{0,rho} at log-radius t, or a
/// rational point c of the domain.
#[derive(Debug, Clone)]
pub enum EvalPoint {
    Gauss { t: Rat },
    Rational { c: FieldElem },
}

impl EvalPoint {
    pub fn gauss(t: Rat) -> Self {
        EvalPoint::Gauss { t }
    }

    pub fn rational(c: FieldElem) -> Self {
        EvalPoint::Rational { c }
    }
}

/// Capping policy for the reported radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapMode {
    /// Cap at the domain's outer radius t_lo.
    Domain,
    /// Cap at the point's own log-radius (val(c) on an annulus).
    Point,
    /// No cap: report the raw liminf quantities. The certificate is only
    /// valid down to the domain cap.
    Uncapped,
}

/// Tuning knobs for the estimator.
#[derive(Debug, Clone)]
pub struct RadiusOpts {
    /// Number of iteration terms N.
    pub terms: usize,
    /// Tail window width W for the estimate.
    pub window: usize,
    /// Stabilization tolerance in v-units.
    pub stab_tol: Rat,
    pub cap: CapMode,
}

impl Default for RadiusOpts {
    fn default() -> Self {
        RadiusOpts {
            terms: 400,
            window: 50,
            stab_tol: Rat::new(1.into(), 100.into()),
            cap: CapMode::Domain,
        }
    }
}

impl RadiusOpts {
    pub fn with_terms(mut self, n: usize) -> Self {
        self.terms = n;
        self
    }

    pub fn with_window(mut self, w: usize) -> Self {
        self.window = w;
        self
    }

    pub fn with_cap(mut self, cap: CapMode) -> Self {
        self.cap = cap;
        self
    }
}

/// The two-sided result at one point.
#[derive(Debug, Clone)]
pub struct RadiusEnclosure {
    /// Heuristic estimate of v_R.
    pub v_est: Rat,
    /// Certified lower bound on v_R (upper bound on the radius).
    pub v_cert: Rat,
    /// The cap that was applied, if any.
    pub t_cap: Option<Rat>,
    /// Two consecutive tail windows agreed within the tolerance.
    pub stabilized: bool,
    pub n_used: usize,
    pub window_used: usize,
}

impl RadiusEnclosure {
    /// |v_est - v_cert|: the enclosure width used by the property suites.
    pub fn width(&self) -> Rat {
        (&self.v_est - &self.v_cert).abs()
    }
}

/// Normalized radius v_norm = v_R - t (the -log_p of R/|T(x)| on an annulus).
#[derive(Debug, Clone)]
pub struct NormalizedRadius {
    pub v_norm_est: Rat,
    pub v_norm_cert: Rat,
}

pub fn normalized_radius(enc: &RadiusEnclosure, t: &Rat) -> NormalizedRadius {
    NormalizedRadius {
        v_norm_est: &enc.v_est - t,
        v_norm_cert: &enc.v_cert - t,
    }
}

/// Upper bound on log_p C for the growth constant
/// C = max_{i <= mu-1} (R_cap^i |i!| ||G_[i]||_X), valid whenever the true
/// radius satisfies R <= p^(-t_cap).
#[derive(Debug, Clone)]
pub struct DRConstant {
    pub lambda: Rat,
}

/// Per-order pieces of the growth constant, independent of the cap.
struct DrParts {
    /// (i, v_p(i!), inf over the domain of val(G_[i])) for i = 0..mu-1;
    /// orders with G_[i] identically zero are omitted.
    parts: Vec<(usize, u64, Rat)>,
}

impl DrParts {
    fn compute(sys: &DiffSystem) -> Result<Self> {
        let dom = sys.domain();
        let p = sys.config().p();
        let mut parts = Vec::new();
        let mut stream = IterStream::new(sys);
        for i in 0..sys.mu() {
            let state = if i == 0 {
                stream.state()
            } else {
                stream.advance()
            };
            let g = state.g_matrix();
            let mut inf = Val::Infinity;
            for row in &g {
                for f in row {
                    inf = inf.min(f.sup_val_on_interval(&dom.t_lo, &dom.t_hi)?);
                }
            }
            if let Val::Finite(v) = inf {
                parts.push((i, factorial_val(p, i), v));
            }
        }
        Ok(DrParts { parts })
    }

    fn lambda(&self, t_cap: &Rat) -> Rat {
        let mut best: Option<Rat> = None;
        for (i, vfact, inf) in &self.parts {
            let cand = -t_cap * rat_i(*i as i64) - rat_i(*vfact as i64) - inf;
            best = Some(match best {
                None => cand,
                Some(b) => b.max(cand),
            });
        }
        // i = 0 always contributes (G_[0] is the identity), so this is Some.
        best.expect("identity order always present")
    }
}

/// log_p C bound for the growth estimate, with R capped at p^(-t_cap).
pub fn dr_constant(sys: &DiffSystem, t_cap: &Rat) -> Result<DRConstant> {
    Ok(DRConstant {
        lambda: DrParts::compute(sys)?.lambda(t_cap),
    })
}

/// Outward-rounded rational upper bound on log_p n with denominator 2^20.
pub fn log_p_upper(p: u64, n: usize) -> Rat {
    if n <= 1 {
        return Rat::zero();
    }
    let x = (n as f64).ln() / (p as f64).ln();
    // f64 log error is far below the 1e-9 guard, which the 2^20 rounding
    // then absorbs outward.
    let scaled = ((x + 1e-9) * (1 << 20) as f64).ceil() as i64;
    Rat::new(scaled.into(), (1i64 << 20).into())
}

/// The cap value for a point under a given mode; None in uncapped mode.
fn cap_value(dom: &DomainSpec, point: &EvalPoint, mode: CapMode) -> Option<Rat> {
    match mode {
        CapMode::Uncapped => None,
        CapMode::Domain => Some(dom.t_lo.clone()),
        CapMode::Point => Some(point_cap(dom, point)),
    }
}

/// The log-radius of the maximal disk centered at the point inside the
/// domain: the point's own radius at a Gauss point, val(c) on an annulus,
/// and the domain radius for a rational point of a disk.
fn point_cap(dom: &DomainSpec, point: &EvalPoint) -> Rat {
    match point {
        EvalPoint::Gauss { t } => t.clone(),
        EvalPoint::Rational { c } => {
            if dom.reaches_center() {
                dom.t_lo.clone()
            } else {
                match c.val() {
                    Val::Finite(v) => v,
                    Val::Infinity => dom.t_lo.clone(),
                }
            }
        }
    }
}

/// w_n sequence at a point, n = 0..=n_max, with +inf entries where
/// G_[n](x) = 0. Stops early (leaving the tail +inf) when the iterate
/// matrix vanishes identically; `degenerate` reports that case.
pub(crate) struct PointWs {
    pub ws: Vec<Val>,
    pub degenerate: bool,
}

pub(crate) fn point_ws(sys: &DiffSystem, point: &EvalPoint, n_max: usize) -> Result<PointWs> {
    match point {
        EvalPoint::Gauss { t } => Ok(gauss_ws_many(sys, std::slice::from_ref(t), n_max)?
            .pop()
            .expect("one point in, one out")),
        EvalPoint::Rational { c } => {
            if !sys.domain().contains_val(&c.val()) {
                return Err(Error::PointOutsideDomain(format!(
                    "val(c) = {} not in {}",
                    c.val(),
                    sys.domain()
                )));
            }
            let (child, shift) = recentre_at(sys, c)?;
            let mut ws = Vec::with_capacity(n_max + 1);
            let mut degenerate = false;
            let mut stream = IterStream::new(&child);
            for n in 0..=n_max {
                let state = if n == 0 { stream.state() } else { stream.advance() };
                if state.is_zero() {
                    degenerate = true;
                    ws.resize(n_max + 1, Val::Infinity);
                    break;
                }
                // Undo the frame change: G~_[n](0) = c^n G_[n](c) after
                // annulus recentring, so w_n = w~_n - n*val(c).
                ws.push(state.eval_center() + &(-&shift * rat_i(n as i64)));
            }
            Ok(PointWs { ws, degenerate })
        }
    }
}

/// Shared-stream w_n sequences for several Gauss points at once.
fn gauss_ws_many(sys: &DiffSystem, ts: &[Rat], n_max: usize) -> Result<Vec<PointWs>> {
    for t in ts {
        if !sys.domain().contains_t(t) {
            return Err(Error::PointOutsideDomain(format!(
                "t = {} not in {}",
                t,
                sys.domain()
            )));
        }
    }
    let mut out: Vec<PointWs> = ts
        .iter()
        .map(|_| PointWs {
            ws: Vec::with_capacity(n_max + 1),
            degenerate: false,
        })
        .collect();
    let mut stream = IterStream::new(sys);
    for n in 0..=n_max {
        let state = if n == 0 { stream.state() } else { stream.advance() };
        if state.is_zero() {
            for pw in &mut out {
                pw.degenerate = true;
                pw.ws.resize(n_max + 1, Val::Infinity);
            }
            break;
        }
        for (ti, w) in state.eval_gauss_many(ts).into_iter().enumerate() {
            out[ti].ws.push(w);
        }
    }
    Ok(out)
}

/// Recentre the system at a rational point: disk recentring on disks,
/// annulus recentring otherwise. Returns the child system together with the
/// frame shift val(c) that annulus recentring introduces.
pub fn recentre_at(sys: &DiffSystem, c: &FieldElem) -> Result<(DiffSystem, Rat)> {
    if sys.domain().reaches_center() {
        Ok((sys.pullback(&SubstMap::RecentreDisk(c.clone()))?, Rat::zero()))
    } else {
        let Val::Finite(v) = c.val() else {
            return Err(Error::PointOutsideDomain(
                "c = 0 does not lie on an annulus".into(),
            ));
        };
        Ok((sys.pullback(&SubstMap::RecentreAnnulus(c.clone()))?, v))
    }
}

/// Enclosure of v_R at a point.
///
/// With beta_n = -w_n/n:
/// - v_est = max(t_cap, max of beta_n over the tail window);
/// - v_cert = max(t_cap, max_n (beta_n - (lambda + (mu-1) L(n))/n)).
pub fn radius_at(
    sys: &DiffSystem,
    point: &EvalPoint,
    opts: &RadiusOpts,
) -> Result<RadiusEnclosure> {
    if opts.terms < sys.mu() {
        return Err(Error::TooFewTerms {
            mu: sys.mu(),
            n: opts.terms,
        });
    }
    let pws = point_ws(sys, point, opts.terms)?;
    let parts = DrParts::compute(sys)?;
    Ok(assemble_enclosure(sys, point, &pws, &parts, opts))
}

/// Enclosures at many Gauss points sharing one iteration stream.
pub fn radius_at_gauss_many(
    sys: &DiffSystem,
    ts: &[Rat],
    opts: &RadiusOpts,
) -> Result<Vec<RadiusEnclosure>> {
    if opts.terms < sys.mu() {
        return Err(Error::TooFewTerms {
            mu: sys.mu(),
            n: opts.terms,
        });
    }
    let all = gauss_ws_many(sys, ts, opts.terms)?;
    let parts = DrParts::compute(sys)?;
    Ok(ts
        .iter()
        .zip(&all)
        .map(|(t, pws)| {
            assemble_enclosure(sys, &EvalPoint::Gauss { t: t.clone() }, pws, &parts, opts)
        })
        .collect())
}

fn assemble_enclosure(
    sys: &DiffSystem,
    point: &EvalPoint,
    pws: &PointWs,
    parts: &DrParts,
    opts: &RadiusOpts,
) -> RadiusEnclosure {
    let dom = sys.domain();
    let cap = cap_value(dom, point, opts.cap);
    // The cap used inside the growth constant: the point cap when capping at
    // the point, the domain cap otherwise (also in uncapped mode, where the
    // certificate is declared valid only down to the domain cap).
    let lambda_cap = match opts.cap {
        CapMode::Point => point_cap(dom, point),
        _ => dom.t_lo.clone(),
    };
    let n = opts.terms;
    let w = opts.window;

    if pws.degenerate {
        // G_[n] = 0 for all large n: the solutions are polynomial and the
        // radius collapses to the cap.
        let v = cap.clone().unwrap_or_else(|| dom.t_lo.clone());
        return RadiusEnclosure {
            v_est: v.clone(),
            v_cert: v,
            t_cap: cap,
            stabilized: true,
            n_used: n,
            window_used: w,
        };
    }

    let beta = |k: usize| -> Option<Rat> {
        match &pws.ws[k] {
            Val::Finite(wv) => Some(-wv / rat_i(k as i64)),
            Val::Infinity => None,
        }
    };
    let window_max = |lo: usize, hi: usize| -> Option<Rat> {
        let mut best: Option<Rat> = None;
        for k in lo.max(1)..=hi {
            if let Some(b) = beta(k) {
                best = Some(match best {
                    None => b,
                    Some(x) => x.max(b),
                });
            }
        }
        best
    };

    let lo2 = n.saturating_sub(w).max(1);
    let est_raw = window_max(lo2, n);
    let stabilized = if lo2 >= 2 {
        let lo1 = n.saturating_sub(2 * w).max(1);
        match (window_max(lo1, lo2 - 1), &est_raw) {
            (Some(m1), Some(m2)) => (m1 - m2).abs() <= opts.stab_tol,
            _ => false,
        }
    } else {
        false
    };

    let lambda = parts.lambda(&lambda_cap);
    let mu = sys.mu();
    let p = sys.config().p();
    let mut cert_raw: Option<Rat> = None;
    for k in 1..=n {
        let Some(b) = beta(k) else { continue };
        let penalty = (&lambda + log_p_upper(p, k) * rat_i((mu - 1) as i64)) / rat_i(k as i64);
        let cand = b - penalty;
        cert_raw = Some(match cert_raw {
            None => cand,
            Some(x) => x.max(cand),
        });
    }

    let fallback = cap.clone().unwrap_or_else(|| dom.t_lo.clone());
    let floor = |raw: Option<Rat>| -> Rat {
        match (raw, &cap) {
            (Some(r), Some(c)) => r.max(c.clone()),
            (Some(r), None) => r,
            (None, _) => fallback.clone(),
        }
    };
    RadiusEnclosure {
        v_est: floor(est_raw),
        v_cert: floor(cert_raw),
        t_cap: cap,
        stabilized,
        n_used: n,
        window_used: w,
    }
}

/// One interior comparison point of a transfer check.
#[derive(Debug, Clone)]
pub struct TransferSample {
    pub center_desc: String,
    pub enclosure: RadiusEnclosure,
}

/// Result of checking R(boundary point) = inf over the disk, i.e.
/// v(boundary) = sup over the disk of v, against sampled interior points.
#[derive(Debug)]
pub struct TransferReport {
    pub boundary: RadiusEnclosure,
    pub interior: Vec<TransferSample>,
    pub violations: Vec<String>,
}

impl TransferReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compare the enclosure at the boundary Gauss point of the disk
/// D(c, p^(-t_r)) with the maximum over sampled interior rational points.
/// The discrepancy must stay within the combined enclosure widths.
pub fn transfer_check(
    sys: &DiffSystem,
    c: &FieldElem,
    t_r: &Rat,
    sample_count: usize,
    opts: &RadiusOpts,
) -> Result<TransferReport> {
    let (child, shift) = recentre_at(sys, c)?;
    let t_child = t_r - &shift;
    if t_child < child.domain().t_lo {
        return Err(Error::PointOutsideDomain(format!(
            "disk log-radius {} outside the recentred domain {}",
            t_child,
            child.domain()
        )));
    }
    let mut child_opts = opts.clone();
    child_opts.cap = CapMode::Domain;
    let boundary = radius_at(&child, &EvalPoint::Gauss { t: t_child.clone() }, &child_opts)?;

    let cfg = sys.config();
    let p = cfg.p() as i64;
    let mut interior = Vec::with_capacity(sample_count);
    let floor_t = t_child.floor().to_integer();
    let base_exp = i64::try_from(floor_t).unwrap_or(0) + 1;
    let mut made = 0usize;
    let mut unit = 1i64;
    let mut exp = base_exp;
    while made < sample_count {
        if unit % p == 0 {
            unit += 1;
            continue;
        }
        // c' = unit * p^exp has val(c') = exp > t_child: strictly inside.
        let c_prime = FieldElem::from_rat(
            cfg,
            rat_i(unit) * Rat::from_integer(num::BigInt::from(p).pow(exp as u32)),
        );
        let enc = radius_at(&child, &EvalPoint::Rational { c: c_prime }, &child_opts)?;
        interior.push(TransferSample {
            center_desc: format!("{}*p^{}", unit, exp),
            enclosure: enc,
        });
        made += 1;
        unit += 1;
        if unit > 2 * p {
            unit = 1;
            exp += 1;
        }
    }

    let mut violations = Vec::new();
    let max_inner = interior
        .iter()
        .map(|s| s.enclosure.v_est.clone())
        .max()
        .expect("sample_count >= 1");
    let max_width = interior
        .iter()
        .map(|s| s.enclosure.width())
        .max()
        .unwrap_or_else(Rat::zero);
    let allowed = boundary.width() + max_width;
    let gap = (&boundary.v_est - &max_inner).abs();
    if gap > allowed {
        violations.push(format!(
            "boundary v_est = {} vs max interior v_est = {} differs by {} > allowed {}",
            boundary.v_est, max_inner, gap, allowed
        ));
    }
    Ok(TransferReport {
        boundary,
        interior,
        violations,
    })
}

/// Per-n outcome of the growth-bound audit.
#[derive(Debug)]
pub struct AuditReport {
    pub lambda: Rat,
    pub checked: usize,
    pub failures: Vec<usize>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// With an externally known v_ref = v_R, check
/// -w_n <= lambda + (mu-1) L(n) + n*v_ref for all n <= n_max.
pub fn dwork_robba_audit(
    sys: &DiffSystem,
    point: &EvalPoint,
    n_max: usize,
    v_ref: &Rat,
) -> Result<AuditReport> {
    let pws = point_ws(sys, point, n_max)?;
    // R = p^(-v_ref) is the exact radius here, so it is a valid cap.
    let lambda = DrParts::compute(sys)?.lambda(v_ref);
    let mu = sys.mu();
    let p = sys.config().p();
    let mut failures = Vec::new();
    for n in 1..=n_max {
        let Val::Finite(w) = &pws.ws[n] else { continue };
        let bound =
            &lambda + log_p_upper(p, n) * rat_i((mu - 1) as i64) + v_ref * rat_i(n as i64);
        if -w > bound {
            failures.push(n);
        }
    }
    Ok(AuditReport {
        lambda,
        checked: n_max,
        failures,
    })
}
