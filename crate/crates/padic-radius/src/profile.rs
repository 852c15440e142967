//! Convergence profiles along a segment of Gauss points.
//!
//! A profile is the function t |-> v_R(t) sampled on a log-radius segment.
//! All statements from the multiplicative world are translated once, here,
//! into (t, v) coordinates: log-concavity of the radius becomes convexity of
//! v_R in t, the sides of the polygon have slopes s/j with j bounded by the
//! rank mu, and a normalized side decomposes as
//!
//!     v_norm(t) = 1/((p-1) p^h) + v_b/(j p^h) + (s/j) t,
//!
//! the additive form of |p|^(1/(p-1)p^h) |b|^(1/j p^h) rho^(s/j), with the
//! t-slope equal to the rho-slope s/j. h = infinity drops the first two
//! terms (a pure power side).

use std::sync::Arc;

use num::{One, Signed, Zero};

use crate::diffsys::DiffSystem;
use crate::error::{Error, Result};
use crate::field::{rat, rat_i, PrimeConfig, Rat};
use crate::radius::{radius_at_gauss_many, RadiusEnclosure, RadiusOpts};

/// One profile sample: the enclosure at log-radius t. When `normalized` is
/// set the values of interest are v - t (annulus normalization).
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: Rat,
    pub enc: RadiusEnclosure,
    pub normalized: bool,
}

impl Sample {
    pub fn value_est(&self) -> Rat {
        if self.normalized {
            &self.enc.v_est - &self.t
        } else {
            self.enc.v_est.clone()
        }
    }

    pub fn value_cert(&self) -> Rat {
        if self.normalized {
            &self.enc.v_cert - &self.t
        } else {
            self.enc.v_cert.clone()
        }
    }
}

/// Evaluate the enclosure on a rational grid over [t_a, t_b], endpoints
/// included, sharing a single iteration stream.
pub fn sample_profile(
    sys: &DiffSystem,
    t_a: &Rat,
    t_b: &Rat,
    count: usize,
    opts: &RadiusOpts,
    normalized: bool,
) -> Result<Vec<Sample>> {
    if count < 2 {
        return Err(Error::TooFewSamples { need: 2, got: count });
    }
    if t_a > t_b {
        return Err(Error::BadDomain(format!("t_a = {} > t_b = {}", t_a, t_b)));
    }
    let span = t_b - t_a;
    let ts: Vec<Rat> = (0..count)
        .map(|i| t_a + &span * rat(i as i64, count as i64 - 1))
        .collect();
    let encs = radius_at_gauss_many(sys, &ts, opts)?;
    Ok(ts
        .into_iter()
        .zip(encs)
        .map(|(t, enc)| Sample {
            t,
            enc,
            normalized,
        })
        .collect())
}

/// A convexity violation at a middle sample.
#[derive(Debug, Clone)]
pub struct ConcavityViolation {
    pub index: usize,
    /// How far the middle value rises above the chord, beyond the tolerance.
    pub excess: Rat,
}

#[derive(Debug)]
pub struct ConcavityReport {
    pub violations: Vec<ConcavityViolation>,
}

impl ConcavityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Three-point convexity check of the sampled v-values: every middle point
/// must lie below the chord of its neighbours, within tol. (Log-concavity
/// of the radius is exactly convexity of v_R in t.)
pub fn verify_concavity(samples: &[Sample], tol: &Rat) -> Result<ConcavityReport> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: samples.len(),
        });
    }
    let mut violations = Vec::new();
    for i in 1..samples.len() - 1 {
        let (a, b, c) = (&samples[i - 1], &samples[i], &samples[i + 1]);
        let span = &c.t - &a.t;
        if span.is_zero() {
            continue;
        }
        let chord = (a.value_est() * (&c.t - &b.t) + c.value_est() * (&b.t - &a.t)) / span;
        let excess = b.value_est() - chord - tol;
        if excess > Rat::zero() {
            violations.push(ConcavityViolation { index: i, excess });
        }
    }
    Ok(ConcavityReport { violations })
}

/// A fitted slope s/j with j <= mu, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slope {
    pub s: i64,
    pub j: u32,
}

impl Slope {
    pub fn as_rat(&self) -> Rat {
        rat(self.s, self.j as i64)
    }

    fn reduced(s: i64, j: u32) -> Slope {
        let g = num::Integer::gcd(&s.unsigned_abs(), &(j as u64)).max(1);
        Slope {
            s: s / g as i64,
            j: (j as u64 / g) as u32,
        }
    }
}

impl std::fmt::Display for Slope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.j == 1 {
            write!(f, "{}", self.s)
        } else {
            write!(f, "{}/{}", self.s, self.j)
        }
    }
}

/// A fitted convex piecewise-linear profile: k sides between k+1 breakpoints
/// (the outer two are the segment endpoints), values at the breakpoints, and
/// one admissible slope per side.
#[derive(Debug, Clone)]
pub struct PLFit {
    pub breakpoints: Vec<Rat>,
    pub values: Vec<Rat>,
    pub slopes: Vec<Slope>,
}

impl PLFit {
    pub fn sides(&self) -> usize {
        self.slopes.len()
    }

    /// Value of the fitted function at t (clamped to the fitted segment).
    pub fn value_at(&self, t: &Rat) -> Rat {
        let k = self
            .breakpoints
            .windows(2)
            .position(|w| t <= &w[1])
            .unwrap_or(self.sides() - 1);
        let t0 = &self.breakpoints[k];
        &self.values[k] + self.slopes[k].as_rat() * (t - t0)
    }

    pub fn max_slope(&self) -> Rat {
        self.slopes
            .iter()
            .map(|s| s.as_rat())
            .max()
            .expect("at least one side")
    }
}

/// Best admissible approximation of a target slope by s/j with j <= mu and
/// |s| <= s_max; ties prefer smaller denominator, then smaller |s|.
fn snap_slope(target: &Rat, mu: u32, s_max: i64) -> Slope {
    let mut best: Option<(Rat, Slope)> = None;
    for j in 1..=mu {
        let scaled = target * rat_i(j as i64);
        let s = scaled.round().to_integer();
        let s = i64::try_from(s).unwrap_or(i64::MAX).clamp(-s_max, s_max);
        for cand_s in [s - 1, s, s + 1] {
            if cand_s.abs() > s_max {
                continue;
            }
            let cand = Slope { s: cand_s, j };
            let dist = (target - cand.as_rat()).abs();
            let better = match &best {
                None => true,
                Some((d, b)) => {
                    dist < *d
                        || (dist == *d && (j < b.j || (j == b.j && cand_s.abs() < b.s.abs())))
                }
            };
            if better {
                best = Some((dist, cand));
            }
        }
    }
    let (_, slope) = best.expect("mu >= 1");
    Slope::reduced(slope.s, slope.j)
}

/// Callback used to refine breakpoint brackets by resampling.
pub type Resample<'a> = dyn Fn(&Rat) -> Result<Rat> + 'a;

/// Fit a convex piecewise-linear function with slopes s/j, j <= mu,
/// |s| <= s_max 1 through the sampled (t, v) points, within tol.
///
/// Gap slopes are snapped to admissible rationals; a single gap whose
/// snapped slope falls strictly between its neighbours is treated as a kink
/// bracket, optionally refined by bisection through the resampling callback,
/// and the breakpoint is placed at the exact intersection of the adjacent
/// fitted lines.
pub fn fit_concave_pl(
    points: &[(Rat, Rat)],
    mu: u32,
    s_max: i64,
    tol: &Rat,
    resample: Option<&Resample>,
) -> Result<PLFit> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: points.len(),
        });
    }
    for w in points.windows(2) {
        if w[0].0 >= w[1].0 {
            return Err(Error::Invalid("sample abscissae must be increasing".into()));
        }
    }
    // Snap each gap slope, rejecting gaps whose raw slope is not close to
    // any admissible value (two tol-sized value errors over the gap width).
    let mut gap_slopes = Vec::with_capacity(points.len() - 1);
    for w in points.windows(2) {
        let raw = (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0);
        let snapped = snap_slope(&raw, mu, s_max);
        let slack = rat_i(2) * tol / (&w[1].0 - &w[0].0);
        if (&raw - snapped.as_rat()).abs() > slack {
            return Err(Error::NoAdmissibleSlope {
                mu,
                s_max,
                observed: format!("{}", raw),
            });
        }
        gap_slopes.push(snapped);
    }
    // Group gaps into runs of equal slope.
    let mut runs: Vec<(Slope, usize, usize)> = Vec::new(); // (slope, first gap, last gap)
    for (i, s) in gap_slopes.iter().enumerate() {
        match runs.last_mut() {
            Some((rs, _, hi)) if rs == s => *hi = i,
            _ => runs.push((s.clone(), i, i)),
        }
    }
    // Single-gap runs strictly between their neighbours are kink gaps, not
    // sides: the breakpoint hides inside them.
    let mut sides: Vec<(Slope, usize, usize)> = Vec::new();
    for (idx, run) in runs.iter().enumerate() {
        let is_kink = run.1 == run.2
            && idx > 0
            && idx + 1 < runs.len()
            && runs[idx - 1].0.as_rat() < run.0.as_rat()
            && run.0.as_rat() < runs[idx + 1].0.as_rat();
        if !is_kink {
            match sides.last_mut() {
                Some((s, _, hi)) if *s == run.0 => *hi = run.2,
                _ => sides.push(run.clone()),
            }
        }
    }
    if sides.is_empty() {
        // Every gap was classified as a kink; fall back to a single side.
        sides.push((gap_slopes[0].clone(), 0, gap_slopes.len() - 1));
    }
    // Convexity of the fitted slopes.
    for w in sides.windows(2) {
        if w[0].0.as_rat() >= w[1].0.as_rat() {
            return Err(Error::NotConvex { index: w[1].1 });
        }
    }
    // Chebyshev intercept for each side at fixed slope.
    let mut lines: Vec<(Rat, Rat)> = Vec::new(); // (slope, intercept)
    for (slope, g_lo, g_hi) in &sides {
        let m = slope.as_rat();
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for (t, v) in &points[*g_lo..=*g_hi + 1] {
            let b = v - &m * t;
            lo = Some(match lo {
                None => b.clone(),
                Some(x) => x.min(b.clone()),
            });
            hi = Some(match hi {
                None => b,
                Some(x) => x.max(b),
            });
        }
        let (lo, hi) = (lo.unwrap(), hi.unwrap());
        if (&hi - &lo) > rat_i(2) * tol {
            return Err(Error::Invalid(format!(
                "side with slope {} deviates from linearity by {}",
                slope,
                &hi - &lo
            )));
        }
        lines.push((m, (lo + hi) / rat_i(2)));
    }
    // Breakpoints: exact intersections of adjacent side lines, bracketed by
    // the sample grid and optionally tightened by bisection resampling.
    let mut breakpoints = vec![points[0].0.clone()];
    for k in 0..lines.len() - 1 {
        let (m1, b1) = &lines[k];
        let (m2, b2) = &lines[k + 1];
        let mut lo = points[sides[k].2 + 1].0.clone();
        let mut hi = points[sides[k + 1].1].0.clone();
        if let Some(res) = resample {
            for _ in 0..4 {
                if &hi - &lo <= tol.clone() {
                    break;
                }
                let mid = (&lo + &hi) / rat_i(2);
                let v = res(&mid)?;
                let d1 = (&v - (m1 * &mid + b1)).abs();
                let d2 = (&v - (m2 * &mid + b2)).abs();
                if d1 <= d2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let t_star = (b2 - b1) / (m1 - m2);
        let t_star = t_star.max(lo.clone()).min(hi.clone());
        breakpoints.push(t_star);
    }
    breakpoints.push(points.last().unwrap().0.clone());
    // Values at breakpoints from the side lines (consistent at the interior
    // breakpoints by construction when unclamped).
    let mut values = Vec::with_capacity(breakpoints.len());
    values.push(&lines[0].0 * &breakpoints[0] + &lines[0].1);
    for (k, line) in lines.iter().enumerate() {
        values.push(&line.0 * &breakpoints[k + 1] + &line.1);
    }
    let fit = PLFit {
        breakpoints,
        values,
        slopes: sides.into_iter().map(|(s, _, _)| s).collect(),
    };
    // Final validation: the fit tracks every sample.
    for (t, v) in points {
        if (&fit.value_at(t) - v).abs() > rat_i(2) * tol {
            return Err(Error::Invalid(format!(
                "fitted profile misses the sample at t = {} by more than 2*tol",
                t
            )));
        }
    }
    Ok(fit)
}

/// One decomposition candidate of a normalized side: parameters (h, j, s,
/// v_b) reconstructing the side exactly. `h = None` encodes h = infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideDecomposition {
    pub h: Option<u32>,
    pub j: u32,
    pub s: i64,
    pub v_b: Rat,
}

impl SideDecomposition {
    /// The side as (intercept, slope): v_norm(t) = intercept + slope * t.
    pub fn reconstruct(&self, p: u64) -> (Rat, Rat) {
        let slope = rat(self.s, self.j as i64);
        match self.h {
            None => (Rat::zero(), slope),
            Some(h) => {
                let ph = Rat::from_integer(num::BigInt::from(p).pow(h));
                let intercept = Rat::one() / (rat_i(p as i64 - 1) * &ph)
                    + &self.v_b / (rat_i(self.j as i64) * &ph);
                (intercept, slope)
            }
        }
    }
}

/// Search the functional form |p|^(1/(p-1)p^h) |b|^(1/j p^h) rho^(s/j) for
/// exact matches of a fitted normalized side, given by its slope and one
/// point (t0, v0) on it. Candidates must reconstruct the side exactly and
/// have v_b in (1/e) Z. An empty result is allowed (no parameters invented).
pub fn decompose_side(
    slope: &Rat,
    t0: &Rat,
    v0: &Rat,
    cfg: &Arc<PrimeConfig>,
    mu: u32,
    h_max: u32,
) -> Vec<SideDecomposition> {
    let p = cfg.p();
    let e = cfg.e() as i64;
    let intercept = v0 - slope * t0;
    let mut out = Vec::new();
    for j in 1..=mu {
        let s_rat = slope * rat_i(j as i64);
        if !s_rat.is_integer() {
            continue;
        }
        let Ok(s) = i64::try_from(s_rat.to_integer()) else {
            continue;
        };
        // h = infinity: a pure power side, intercept exactly zero.
        if intercept.is_zero() {
            out.push(SideDecomposition {
                h: None,
                j,
                s,
                v_b: Rat::zero(),
            });
        }
        for h in 0..=h_max {
            let ph = Rat::from_integer(num::BigInt::from(p).pow(h));
            // intercept = 1/((p-1)p^h) + v_b/(j p^h)  =>  solve for v_b.
            let v_b = (&intercept - Rat::one() / (rat_i(p as i64 - 1) * &ph))
                * rat_i(j as i64)
                * &ph;
            if (&v_b * rat_i(e)).is_integer() {
                out.push(SideDecomposition {
                    h: Some(h),
                    j,
                    s,
                    v_b,
                });
            }
        }
    }
    out
}

/// Endpoint-vs-extrapolation continuity check: each segment endpoint must
/// agree with the linear extrapolation of its two nearest interior samples,
/// within tol plus the enclosure widths involved.
#[derive(Debug)]
pub struct ContinuityReport {
    pub left_gap: Rat,
    pub right_gap: Rat,
    pub left_allowed: Rat,
    pub right_allowed: Rat,
}

impl ContinuityReport {
    pub fn pass(&self) -> bool {
        self.left_gap <= self.left_allowed && self.right_gap <= self.right_allowed
    }
}

pub fn endpoint_continuity_check(samples: &[Sample], tol: &Rat) -> Result<ContinuityReport> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples {
            need: 4,
            got: samples.len(),
        });
    }
    let extrapolate = |a: &Sample, b: &Sample, t: &Rat| -> Rat {
        a.value_est()
            + (b.value_est() - a.value_est()) / (&b.t - &a.t) * (t - &a.t)
    };
    let n = samples.len();
    let left_gap =
        (samples[0].value_est() - extrapolate(&samples[1], &samples[2], &samples[0].t)).abs();
    let right_gap = (samples[n - 1].value_est()
        - extrapolate(&samples[n - 3], &samples[n - 2], &samples[n - 1].t))
    .abs();
    let width3 = |s: &[Sample]| -> Rat {
        s.iter()
            .map(|x| x.enc.width())
            .fold(Rat::zero(), |a, b| a + b)
    };
    Ok(ContinuityReport {
        left_allowed: tol + width3(&samples[0..3]),
        right_allowed: tol + width3(&samples[n - 3..n]),
        left_gap,
        right_gap,
    })
}

/// Toward a meromorphic singularity the normalized-radius slopes must not
/// exceed the declared irregularity rank.
pub fn slope_cap_check(fit: &PLFit, declared_rank: &Rat) -> bool {
    fit.max_slope() <= *declared_rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffsys::DomainSpec;
    use crate::field::{rat_i, FieldElem};
    use crate::laurent::{LaurentPoly, RatFunc};
    use crate::radius::CapMode;

    fn q3() -> Arc<PrimeConfig> {
        PrimeConfig::qp(3).unwrap()
    }

    fn dwork_cfg() -> Arc<PrimeConfig> {
        PrimeConfig::eisenstein(3, 2, rat_i(-1)).unwrap()
    }

    fn dwork_system() -> DiffSystem {
        let cfg = dwork_cfg();
        let pi = FieldElem::pi(&cfg);
        let g = LaurentPoly::from_terms(&cfg, [(0, pi.clone()), (2, pi.mul_rat(&rat_i(-3)))]);
        DiffSystem::scalar(RatFunc::from_poly(g), DomainSpec::disk(rat(-1, 2)), &cfg).unwrap()
    }

    fn pts(data: &[(i64, i64, i64, i64)]) -> Vec<(Rat, Rat)> {
        data.iter()
            .map(|(tn, td, vn, vd)| (rat(*tn, *td), rat(*vn, *vd)))
            .collect()
    }

    #[test]
    fn snap_slope_prefers_small_denominators() {
        assert_eq!(snap_slope(&rat(-201, 100), 1, 6), Slope { s: -2, j: 1 });
        assert_eq!(snap_slope(&rat(1, 2), 2, 6), Slope { s: 1, j: 2 });
        // Exactly between 0 and 1/2 with mu = 2: tie prefers denominator 1.
        assert_eq!(snap_slope(&rat(1, 4), 2, 6), Slope { s: 0, j: 1 });
        assert_eq!(snap_slope(&rat(2, 3), 3, 6), Slope { s: 2, j: 3 });
    }

    #[test]
    fn fit_flat_profile() {
        let points = pts(&[(0, 1, 1, 2), (1, 4, 1, 2), (1, 2, 1, 2), (1, 1, 1, 2)]);
        let fit = fit_concave_pl(&points, 1, 6, &rat(1, 100), None).unwrap();
        assert_eq!(fit.sides(), 1);
        assert_eq!(fit.slopes[0], Slope { s: 0, j: 1 });
        assert_eq!(fit.value_at(&rat(1, 3)), rat(1, 2));
    }

    #[test]
    fn fit_two_sides_with_kink_gap() {
        // v = max(-2t - 1, -2/9) sampled around the corner at t = -7/18:
        // the middle gap carries slope -1 and must be folded into the
        // breakpoint, not reported as a side.
        let f = |t: &Rat| -> Rat { (rat_i(-2) * t - rat_i(1)).max(rat(-2, 9)) };
        let ts = [
            rat(-1, 2),
            rat(-4, 9),
            rat(-5, 12),
            rat(-13, 36),
            rat(-1, 3),
            rat(-1, 4),
            rat(-1, 6),
            rat(-1, 12),
            rat(0, 1),
        ];
        let points: Vec<(Rat, Rat)> = ts.iter().map(|t| (t.clone(), f(t))).collect();
        let fit = fit_concave_pl(&points, 1, 6, &rat(1, 100), None).unwrap();
        assert_eq!(fit.sides(), 2);
        assert_eq!(fit.slopes[0], Slope { s: -2, j: 1 });
        assert_eq!(fit.slopes[1], Slope { s: 0, j: 1 });
        assert_eq!(fit.breakpoints[1], rat(-7, 18));
        assert_eq!(fit.value_at(&rat(-7, 18)), rat(-2, 9));
    }

    #[test]
    fn fit_refines_with_resampling() {
        let f = |t: &Rat| -> Rat { (rat_i(-2) * t - rat_i(1)).max(rat(-2, 9)) };
        let points: Vec<(Rat, Rat)> = [rat(-1, 2), rat(-5, 12), rat(-1, 3), rat(-1, 4), rat(0, 1)]
            .iter()
            .map(|t| (t.clone(), f(t)))
            .collect();
        let resample = |t: &Rat| -> Result<Rat> { Ok(f(t)) };
        let fit = fit_concave_pl(&points, 1, 6, &rat(1, 100), Some(&resample)).unwrap();
        assert_eq!(fit.sides(), 2);
        assert_eq!(fit.breakpoints[1], rat(-7, 18));
    }

    #[test]
    fn fit_rejects_concave_the_wrong_way() {
        // v = min(t, -t): slopes decrease, which is concave in v, not convex.
        let points = pts(&[(-1, 1, -1, 1), (0, 1, 0, 1), (1, 1, -1, 1)]);
        assert!(matches!(
            fit_concave_pl(&points, 1, 6, &rat(1, 100), None),
            Err(Error::NotConvex { .. })
        ));
    }

    #[test]
    fn fit_rejects_inadmissible_slope() {
        // Slope 1/2 with mu = 1 stays at distance 1/2 from integers.
        let points = pts(&[(0, 1, 0, 1), (1, 1, 1, 2), (2, 1, 1, 1)]);
        assert!(matches!(
            fit_concave_pl(&points, 1, 6, &rat(1, 100), None),
            Err(Error::NoAdmissibleSlope { .. })
        ));
    }

    #[test]
    fn dwork_profile_and_fit() {
        // The full pipeline on dy/dT = pi(1 - 3T^2)y: sample, verify
        // convexity, fit, and find the breakpoint at -7/18.
        let sys = dwork_system();
        let opts = RadiusOpts::default()
            .with_terms(243)
            .with_cap(CapMode::Uncapped);
        let samples =
            sample_profile(&sys, &rat(-1, 2), &Rat::zero(), 9, &opts, false).unwrap();
        let report = verify_concavity(&samples, &Rat::zero()).unwrap();
        assert!(report.pass(), "estimates are exactly convex");
        let points: Vec<(Rat, Rat)> =
            samples.iter().map(|s| (s.t.clone(), s.value_est())).collect();
        let fit = fit_concave_pl(&points, 1, 6, &rat(1, 25), None).unwrap();
        assert_eq!(fit.sides(), 2);
        assert_eq!(fit.slopes[0], Slope { s: -2, j: 1 });
        assert_eq!(fit.slopes[1], Slope { s: 0, j: 1 });
        let gap = (&fit.breakpoints[1] + rat(7, 18)).abs();
        assert!(gap <= rat(1, 36), "breakpoint off by {}", gap);
        let cont = endpoint_continuity_check(&samples, &rat(1, 25)).unwrap();
        assert!(cont.pass());
    }

    #[test]
    fn concavity_catches_planted_violation() {
        let sys = dwork_system();
        let opts = RadiusOpts::default()
            .with_terms(100)
            .with_cap(CapMode::Uncapped);
        let mut samples =
            sample_profile(&sys, &rat(-1, 2), &Rat::zero(), 7, &opts, false).unwrap();
        let tol = rat(1, 100);
        // Raise one middle estimate by 10*tol: the triple test must flag it.
        samples[3].enc.v_est = &samples[3].enc.v_est + rat_i(10) * &tol;
        let report = verify_concavity(&samples, &tol).unwrap();
        assert!(!report.pass());
        assert!(report.violations.iter().any(|v| v.index == 3));
    }

    #[test]
    fn decompose_dwork_steep_side() {
        // Normalized steep side v_norm(t) = -1 - 3t: candidate
        // (h = 0, j = 1, s = -3, v_b = -3/2).
        let cfg = dwork_cfg();
        let slope = rat_i(-3);
        let t0 = rat(-1, 2);
        let v0 = rat_i(-1) - rat_i(3) * &t0;
        let cands = decompose_side(&slope, &t0, &v0, &cfg, 1, 6);
        let expect = SideDecomposition {
            h: Some(0),
            j: 1,
            s: -3,
            v_b: rat(-3, 2),
        };
        assert!(cands.contains(&expect), "candidates: {:?}", cands);
        // Every candidate reconstructs the side exactly.
        for c in &cands {
            let (intercept, m) = c.reconstruct(3);
            assert_eq!(m, slope);
            assert_eq!(intercept, rat_i(-1));
        }
    }

    #[test]
    fn decompose_exponential_side() {
        // v_norm(t) = 1/2 - t: candidate (h = 0, j = 1, s = -1, v_b = 0).
        let cfg = dwork_cfg();
        let cands = decompose_side(&rat_i(-1), &Rat::zero(), &rat(1, 2), &cfg, 1, 6);
        let expect = SideDecomposition {
            h: Some(0),
            j: 1,
            s: -1,
            v_b: Rat::zero(),
        };
        assert!(cands.contains(&expect), "candidates: {:?}", cands);
    }

    #[test]
    fn decompose_pure_power_side() {
        // v_norm(t) = 2t through the origin: h = infinity shape.
        let cfg = q3();
        let cands = decompose_side(&rat_i(2), &Rat::zero(), &Rat::zero(), &cfg, 3, 4);
        assert!(cands.iter().any(|c| c.h.is_none() && c.s == 2 && c.j == 1));
    }

    #[test]
    fn decompose_dwork_flat_side_normalized() {
        // Normalized flat side v_norm(t) = -2/9 - t: v_b lands in (1/2)Z
        // only at h = 2 for j = 1.
        let cfg = dwork_cfg();
        let cands = decompose_side(&rat_i(-1), &Rat::zero(), &rat(-2, 9), &cfg, 1, 6);
        assert!(!cands.is_empty());
        let h2 = cands.iter().find(|c| c.h == Some(2)).expect("h = 2 candidate");
        assert_eq!(h2.v_b, rat(-5, 2));
        assert!(!cands.iter().any(|c| c.h == Some(0) || c.h == Some(1)));
    }

    #[test]
    fn slope_cap_on_irregular_singularity() {
        // dy/dT = (c/T^2) y toward T = 0: the normalized profile rises with
        // slope 1 (one glance at exp(-c/T)), below the declared rank 2 of
        // the T^(-2) coefficient convention.
        let cfg = q3();
        let g = RatFunc::new(
            LaurentPoly::one(&cfg),
            LaurentPoly::monomial(FieldElem::one(&cfg), 2),
        )
        .unwrap();
        let sys = DiffSystem::scalar(
            g,
            DomainSpec::annulus(Rat::zero(), rat_i(2)).unwrap(),
            &cfg,
        )
        .unwrap();
        let opts = RadiusOpts::default()
            .with_terms(120)
            .with_cap(CapMode::Point);
        let samples =
            sample_profile(&sys, &rat(1, 4), &rat(3, 2), 6, &opts, true).unwrap();
        let points: Vec<(Rat, Rat)> =
            samples.iter().map(|s| (s.t.clone(), s.value_est())).collect();
        let fit = fit_concave_pl(&points, 1, 6, &rat(1, 25), None).unwrap();
        assert!(slope_cap_check(&fit, &rat_i(2)));
        assert_eq!(fit.max_slope(), rat_i(1));
        // A regular-singular equation stays flat: slope 0 passes any rank.
        let pi_cfg = dwork_cfg();
        let greg = RatFunc::new(
            LaurentPoly::constant(FieldElem::pi(&pi_cfg)),
            LaurentPoly::var(&pi_cfg),
        )
        .unwrap();
        let sys_reg = DiffSystem::scalar(
            greg,
            DomainSpec::annulus(rat(1, 10), rat_i(1)).unwrap(),
            &pi_cfg,
        )
        .unwrap();
        let samples_reg =
            sample_profile(&sys_reg, &rat(1, 5), &rat(4, 5), 5, &opts, true).unwrap();
        let pts_reg: Vec<(Rat, Rat)> = samples_reg
            .iter()
            .map(|s| (s.t.clone(), s.value_est()))
            .collect();
        let fit_reg = fit_concave_pl(&pts_reg, 1, 6, &rat(1, 12), None).unwrap();
        assert_eq!(fit_reg.max_slope(), Rat::zero());
        assert!(slope_cap_check(&fit_reg, &Rat::zero()));
    }

    #[test]
    fn continuity_check_needs_four_samples() {
        let sys = dwork_system();
        let opts = RadiusOpts::default().with_terms(30);
        let samples =
            sample_profile(&sys, &rat(-1, 2), &Rat::zero(), 3, &opts, false).unwrap();
        assert!(endpoint_continuity_check(&samples, &rat(1, 10)).is_err());
    }
}
