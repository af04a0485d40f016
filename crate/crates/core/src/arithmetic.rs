//! Continued fractions and finite-range arithmetic classification of
//! frequencies (Diophantine, Liouville) and phases (resonant).
//!
//! Every certificate here is a statement about a scanned range only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::orbit_angle;

/// `[a0; a1, a2, ...]` with convergents `p_k / q_k`, `k >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    pub a0: BigInt,
    pub partial_quotients: Vec<BigInt>,
    /// `(p_k, q_k)` for `k = 1..=partial_quotients.len()`; `p_0/q_0 = a0/1` is
    /// not listed.
    pub convergents: Vec<(BigInt, BigInt)>,
    /// The expansion ended because the input is rational (exactly, or to
    /// working precision for floating-point input).
    pub terminated: bool,
    /// Exact value the expansion was taken from.
    pub value: BigRational,
}

impl ContinuedFraction {
    /// Build from given partial quotients; the value is the finite fraction
    /// itself, so the expansion is flagged terminated.
    pub fn from_partial_quotients(a0: BigInt, quotients: Vec<BigInt>) -> Result<Self> {
        if quotients.iter().any(|a| !a.is_positive()) {
            return Err(Error::InvalidInput(
                "partial quotients must be positive".into(),
            ));
        }
        let convergents = convergents_of(&a0, &quotients);
        let value = match convergents.last() {
            Some((p, q)) => BigRational::new(p.clone(), q.clone()),
            None => BigRational::from_integer(a0.clone()),
        };
        Ok(Self {
            a0,
            partial_quotients: quotients,
            convergents,
            terminated: true,
            value,
        })
    }

    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// `(p_k, q_k)` for `k >= 1`.
    pub fn convergent(&self, k: usize) -> Option<&(BigInt, BigInt)> {
        if k == 0 {
            return None;
        }
        self.convergents.get(k - 1)
    }

    pub fn denominators(&self) -> Vec<BigInt> {
        self.convergents.iter().map(|(_, q)| q.clone()).collect()
    }

    /// Convergents with `q` representable in `u64`, as `(p, q)` pairs.
    pub fn small_convergents(&self) -> Vec<(u64, u64)> {
        self.convergents
            .iter()
            .map_while(|(p, q)| Some((p.to_u64()?, q.to_u64()?)))
            .collect()
    }

    /// Value as `f64` (correctly rounded).
    pub fn value_f64(&self) -> f64 {
        ratio_to_f64(&self.value)
    }

    /// `|value - p_k/q_k|`, exact.
    pub fn error_at(&self, k: usize) -> Option<BigRational> {
        let (p, q) = self.convergent(k)?;
        Some((&self.value - BigRational::new(p.clone(), q.clone())).abs())
    }
}

fn convergents_of(a0: &BigInt, quotients: &[BigInt]) -> Vec<(BigInt, BigInt)> {
    let (mut p2, mut q2) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (a0.clone(), BigInt::one());
    let mut out = Vec::with_capacity(quotients.len());
    for a in quotients {
        let p = a * &p1 + &p2;
        let q = a * &q1 + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        out.push((p, q));
    }
    out
}

/// Expand the `f64` input `alpha` to at most `depth` partial quotients.
///
/// The expansion runs on the exact binary value of `alpha`. It stops early,
/// flagged rational, when a convergent rounds to `alpha` itself: past that
/// point further quotients describe rounding error, not the number.
pub fn expand_continued_fraction(alpha: f64, depth: usize) -> Result<ContinuedFraction> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let exact = BigRational::from_float(alpha).ok_or(Error::NonFinite("alpha"))?;
    Ok(expand_impl(exact, depth, Some(alpha)))
}

/// Expand an exact rational; terminates only when the remainder vanishes.
pub fn expand_rational(value: &BigRational, depth: usize) -> ContinuedFraction {
    expand_impl(value.clone(), depth, None)
}

fn expand_impl(value: BigRational, depth: usize, target: Option<f64>) -> ContinuedFraction {
    let a0 = value.floor().to_integer();
    let mut rem = &value - BigRational::from_integer(a0.clone());
    let (mut p2, mut q2) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (a0.clone(), BigInt::one());
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    let mut terminated = rem.is_zero();
    while !terminated && quotients.len() < depth {
        let x = rem.recip();
        let a = x.floor().to_integer();
        rem = x - BigRational::from_integer(a.clone());
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        quotients.push(a);
        convergents.push((p.clone(), q.clone()));
        terminated = rem.is_zero()
            || target.is_some_and(|t| ratio_to_f64(&BigRational::new(p, q)) == t);
    }
    ContinuedFraction {
        a0,
        partial_quotients: quotients,
        convergents,
        terminated,
        value,
    }
}

/// Correctly rounded conversion that tolerates huge numerators and
/// denominators.
pub fn ratio_to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let l = ln_ratio(x);
    x.numer().signum().to_f64().unwrap_or(0.0) * l.exp()
}

/// Natural log of `|x|` for a nonzero big integer.
pub fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of `|x|`; `-inf` at zero.
pub fn ln_ratio(x: &BigRational) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_big(x.numer()) - ln_big(x.denom())
}

/// `sum_{k=1..=depth} base^{-k!}` as an exact rational.
pub fn reciprocal_factorial_rational(base: u32, depth: u32) -> Result<BigRational> {
    if base < 2 || depth == 0 {
        return Err(Error::InvalidInput("need base >= 2 and depth >= 1".into()));
    }
    let mut sum = BigRational::zero();
    let mut fact: u64 = 1;
    for k in 1..=depth as u64 {
        fact = fact
            .checked_mul(k)
            .filter(|&f| f <= 1 << 20)
            .ok_or_else(|| Error::InvalidInput("factorial exponent too large".into()))?;
        let den = num_traits::pow(BigInt::from(base), fact as usize);
        sum += BigRational::new(BigInt::one(), den);
    }
    Ok(sum)
}

/// `sum_{k=1..=depth} base^{-k!}` rounded to `f64`.
pub fn reciprocal_factorial_sum(base: u32, depth: u32) -> Result<f64> {
    reciprocal_factorial_rational(base, depth).map(|r| ratio_to_f64(&r))
}

/// Fraction `[0; 2, a_2, ..., a_depth]` with `a_{k+1} = base^(2 q_k)`.
/// Its convergent denominators grow fast enough that
/// `dist(q_k alpha, Z) C^{q_k} -> 0` for every `C <= base`.
pub fn rapid_fraction(base: u32, depth: usize) -> Result<ContinuedFraction> {
    if base < 2 || depth == 0 {
        return Err(Error::InvalidInput("need base >= 2 and depth >= 1".into()));
    }
    let mut quotients = vec![BigInt::from(2)];
    let (mut q2, mut q1) = (BigInt::one(), BigInt::from(2));
    while quotients.len() < depth {
        let e = q1
            .to_usize()
            .filter(|&e| e <= 1 << 20)
            .ok_or_else(|| Error::InvalidInput("rapid fraction too deep".into()))?;
        let a = num_traits::pow(BigInt::from(base), 2 * e);
        let q = &a * &q1 + &q2;
        q2 = std::mem::replace(&mut q1, q);
        quotients.push(a);
    }
    ContinuedFraction::from_partial_quotients(BigInt::zero(), quotients)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKind {
    Rational { p: String, q: String },
    DiophantineCertified { c: f64, r: f64, n: u64 },
    LiouvilleCertified { k_min: usize, k_max: usize },
    Unverified,
}

/// Evidence behind a [`ClassKind`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Smallest `|sin(2 pi n alpha)| n^r / c` seen, and where.
    DiophantineScan { min_ratio: f64, argmin: u64, scanned: u64 },
    Liouville { checks: Vec<LiouvilleCheck> },
    Convergent { depth: usize },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyClass {
    #[serde(flatten)]
    pub kind: ClassKind,
    pub witness: Witness,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_n: Option<u64>,
}

/// Check `|sin(2 pi n alpha)| > c / n^r` for `1 <= n <= n_max` (the
/// condition is even in `n`). The first failing `n` is reported.
pub fn diophantine_scan(alpha: f64, c: f64, r: f64, n_max: u64) -> Result<FrequencyClass> {
    if !(alpha.is_finite() && c.is_finite() && r.is_finite()) {
        return Err(Error::NonFinite("diophantine scan parameters"));
    }
    if !(c > 0.0) || !(r > 1.0) || n_max == 0 {
        return Err(Error::InvalidInput("need c > 0, r > 1 and N >= 1".into()));
    }
    let mut min_ratio = f64::INFINITY;
    let mut argmin = 1;
    for n in 1..=n_max {
        let s = (std::f64::consts::TAU * orbit_angle(0.0, alpha, n as i64)).sin().abs();
        let ratio = s * (n as f64).powf(r) / c;
        if ratio < min_ratio {
            min_ratio = ratio;
            argmin = n;
        }
        if ratio <= 1.0 {
            return Ok(FrequencyClass {
                kind: ClassKind::Unverified,
                witness: Witness::DiophantineScan { min_ratio, argmin, scanned: n },
                failing_n: Some(n),
            });
        }
    }
    Ok(FrequencyClass {
        kind: ClassKind::DiophantineCertified { c, r, n: n_max },
        witness: Witness::DiophantineScan {
            min_ratio,
            argmin,
            scanned: n_max,
        },
        failing_n: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LiouvilleOutcome {
    Pass,
    Fail,
    /// `k^{-q_k}` is below the smallest positive `f64`.
    Indeterminate,
    /// The expansion has fewer than `k` convergents.
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiouvilleCheck {
    pub k: usize,
    pub q: String,
    /// `ln |alpha - p_k/q_k|`.
    pub ln_error: f64,
    /// `-q_k ln k`.
    pub ln_bound: f64,
    pub outcome: LiouvilleOutcome,
}

/// `ln` of the smallest positive subnormal `f64`.
const LN_MIN_POSITIVE: f64 = -744.440_071_921_381;

/// Test `|alpha - p_k/q_k| < k^{-q_k}` for `k = 1..=k_max`, exactly.
///
/// Certified when some `k >= 2` passes and no determinate `k >= 2` fails.
pub fn liouville_witness(cf: &ContinuedFraction, k_max: usize) -> Result<FrequencyClass> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let mut checks = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let Some((p, q)) = cf.convergent(k) else {
            checks.push(LiouvilleCheck {
                k,
                q: String::new(),
                ln_error: f64::NAN,
                ln_bound: f64::NAN,
                outcome: LiouvilleOutcome::Unavailable,
            });
            continue;
        };
        let err = (&cf.value - BigRational::new(p.clone(), q.clone())).abs();
        let ln_error = ln_ratio(&err);
        let ln_bound = -(k as f64).ln() * q.to_f64().unwrap_or(f64::INFINITY);
        let outcome = if k == 1 {
            // 1^{-q} = 1 and |alpha - p_1/q_1| < 1 always
            if err < BigRational::one() {
                LiouvilleOutcome::Pass
            } else {
                LiouvilleOutcome::Fail
            }
        } else if ln_bound < LN_MIN_POSITIVE {
            LiouvilleOutcome::Indeterminate
        } else {
            // q ln k <= 745 here, so k^q is a modest integer
            let e = q.to_usize().expect("bounded by the underflow guard");
            let kq = num_traits::pow(BigInt::from(k), e);
            if err * BigRational::from_integer(kq) < BigRational::one() {
                LiouvilleOutcome::Pass
            } else {
                LiouvilleOutcome::Fail
            }
        };
        checks.push(LiouvilleCheck {
            k,
            q: q.to_string(),
            ln_error,
            ln_bound,
            outcome,
        });
    }
    let tail = || checks.iter().filter(|c| c.k >= 2);
    let passing: Vec<usize> = tail()
        .filter(|c| c.outcome == LiouvilleOutcome::Pass)
        .map(|c| c.k)
        .collect();
    let failed = tail().any(|c| c.outcome == LiouvilleOutcome::Fail);
    let kind = match (passing.first(), passing.last(), failed) {
        (Some(&lo), Some(&hi), false) => ClassKind::LiouvilleCertified { k_min: lo, k_max: hi },
        _ => ClassKind::Unverified,
    };
    Ok(FrequencyClass {
        kind,
        witness: Witness::Liouville { checks },
        failing_n: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceHit {
    pub n: i64,
    /// `|sin(2 pi (omega + n alpha / 2))|`.
    pub defect: f64,
    /// `exp(-|n|^{1/(2r)})`.
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceVerdict {
    NonResonantUpTo(u64),
    PossiblyResonant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceReport {
    pub hits: Vec<ResonanceHit>,
    /// Hits with `|n| >= N/2`; the verdict compares this against the cutoff.
    pub late_hits: usize,
    pub cutoff: usize,
    pub verdict: ResonanceVerdict,
}

/// Default number of late hits tolerated before a phase is called
/// possibly resonant.
pub const RESONANCE_CUTOFF: usize = 2;

/// List `0 < |n| <= n_max` with `|sin(2 pi (omega + n alpha/2))| <
/// exp(-|n|^{1/(2r)})`.
///
/// Small `|n|` hit often by chance, since the threshold is close to 1
/// there. The verdict counts only hits in the upper half of the range.
pub fn resonance_scan(
    omega: f64,
    alpha: f64,
    r: f64,
    n_max: u64,
    cutoff: usize,
) -> Result<ResonanceReport> {
    if !(omega.is_finite() && alpha.is_finite() && r.is_finite()) {
        return Err(Error::NonFinite("resonance scan parameters"));
    }
    if !(r > 1.0) || n_max == 0 {
        return Err(Error::InvalidInput("need r > 1 and N >= 1".into()));
    }
    let half = 0.5 * alpha;
    let mut hits = Vec::new();
    for m in 1..=n_max as i64 {
        let threshold = (-(m as f64).powf(0.5 / r)).exp();
        for n in [-m, m] {
            let defect = (std::f64::consts::TAU * orbit_angle(omega, half, n)).sin().abs();
            if defect < threshold {
                hits.push(ResonanceHit { n, defect, threshold });
            }
        }
    }
    let late_hits = hits
        .iter()
        .filter(|h| 2 * h.n.unsigned_abs() >= n_max)
        .count();
    let verdict = if late_hits <= cutoff {
        ResonanceVerdict::NonResonantUpTo(n_max)
    } else {
        ResonanceVerdict::PossiblyResonant
    };
    Ok(ResonanceReport {
        hits,
        late_hits,
        cutoff,
        verdict,
    })
}

/// Classify `alpha`: rational if its expansion terminates within `depth`,
/// otherwise the result of [`diophantine_scan`].
pub fn classify_frequency(alpha: f64, depth: usize, c: f64, r: f64, n_max: u64) -> Result<FrequencyClass> {
    let cf = expand_continued_fraction(alpha, depth)?;
    if cf.terminated {
        let (p, q) = cf
            .convergents
            .last()
            .cloned()
            .unwrap_or((cf.a0.clone(), BigInt::one()));
        return Ok(FrequencyClass {
            kind: ClassKind::Rational {
                p: p.to_string(),
                q: q.to_string(),
            },
            witness: Witness::Convergent { depth: cf.depth() },
            failing_n: None,
        });
    }
    diophantine_scan(alpha, c, r, n_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn pairs(cf: &ContinuedFraction) -> Vec<(u64, u64)> {
        cf.small_convergents()
    }

    #[test]
    fn golden_mean_fibonacci() {
        let cf = expand_continued_fraction((5f64.sqrt() - 1.0) / 2.0, 5).unwrap();
        assert_eq!(cf.partial_quotients, vec![BigInt::one(); 5]);
        assert_eq!(pairs(&cf), vec![(1, 1), (1, 2), (2, 3), (3, 5), (5, 8)]);
        assert!(!cf.terminated);
    }

    #[test]
    fn sqrt2_minus_one() {
        let cf = expand_continued_fraction(2f64.sqrt() - 1.0, 3).unwrap();
        let two = BigInt::from(2);
        assert_eq!(cf.partial_quotients, vec![two.clone(), two.clone(), two]);
        assert_eq!(pairs(&cf), vec![(1, 2), (2, 5), (5, 12)]);
    }

    #[test]
    fn rational_terminates() {
        let cf = expand_continued_fraction(3.0 / 7.0, 50).unwrap();
        assert!(cf.terminated);
        assert_eq!(*pairs(&cf).last().unwrap(), (3, 7));
        let exact = expand_rational(&BigRational::new(3.into(), 7.into()), 50);
        assert!(exact.terminated);
        let want: Vec<BigInt> = [2, 3].iter().map(|&a| BigInt::from(a)).collect();
        assert_eq!(exact.partial_quotients, want);
    }

    #[test]
    fn golden_mean_flagged_only_at_working_precision() {
        let cf = expand_continued_fraction(GOLDEN, 200).unwrap();
        assert!(cf.terminated);
        let q = &cf.convergents.last().unwrap().1;
        assert!(q.to_f64().unwrap() > 1e7);
        assert!(cf.partial_quotients[..30].iter().all(|a| a.is_one()));
    }

    #[test]
    fn convergent_invariants() {
        for &x in &[GOLDEN, 2f64.sqrt() - 1.0, std::f64::consts::PI - 3.0, 0.123_456_789] {
            let cf = expand_continued_fraction(x, 25).unwrap();
            let mut last_q = BigInt::zero();
            for (k, (p, q)) in cf.convergents.iter().enumerate() {
                assert!(*q > last_q);
                last_q = q.clone();
                assert!(p.gcd(q).is_one());
                let err = cf.error_at(k + 1).unwrap();
                if let Some((_, qn)) = cf.convergents.get(k + 1) {
                    assert!(err < BigRational::new(BigInt::one(), q * qn));
                }
                assert!(err < BigRational::new(BigInt::one(), q * q) || err.is_zero());
            }
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(expand_continued_fraction(f64::NAN, 3).is_err());
        assert!(expand_continued_fraction(1.5, 3).is_err());
        assert!(expand_continued_fraction(0.3, 0).is_err());
    }

    #[test]
    fn golden_mean_is_diophantine_in_range() {
        let c = diophantine_scan(GOLDEN, 0.1, 2.0, 10_000).unwrap();
        assert!(matches!(c.kind, ClassKind::DiophantineCertified { n: 10_000, .. }));
        assert_eq!(c.failing_n, None);
    }

    #[test]
    fn truncated_liouville_sum_fails_scan() {
        let a = reciprocal_factorial_sum(2, 6).unwrap();
        let c = diophantine_scan(a, 0.1, 2.0, 10_000).unwrap();
        assert_eq!(c.kind, ClassKind::Unverified);
        assert_eq!(c.failing_n, Some(32));
        // monotone in N
        let c2 = diophantine_scan(a, 0.1, 2.0, 20_000).unwrap();
        assert_eq!(c2.failing_n, Some(32));
    }

    #[test]
    fn single_term_scan() {
        let c = diophantine_scan(0.25, 0.1, 2.0, 1).unwrap();
        assert!(matches!(c.kind, ClassKind::DiophantineCertified { .. }));
    }

    #[test]
    fn liouville_truncation_passes_first_two() {
        let x = reciprocal_factorial_rational(2, 4).unwrap();
        let cf = expand_rational(&x, 40);
        let w = liouville_witness(&cf, 3).unwrap();
        let Witness::Liouville { checks } = &w.witness else { panic!() };
        let outcomes: Vec<_> = checks.iter().map(|c| c.outcome).collect();
        assert_eq!(
            outcomes,
            vec![LiouvilleOutcome::Pass, LiouvilleOutcome::Pass, LiouvilleOutcome::Fail]
        );
    }

    #[test]
    fn golden_mean_is_not_liouville() {
        let cf = expand_continued_fraction(GOLDEN, 30).unwrap();
        let w = liouville_witness(&cf, 12).unwrap();
        assert_eq!(w.kind, ClassKind::Unverified);
        let Witness::Liouville { checks } = &w.witness else { panic!() };
        assert_eq!(checks[0].outcome, LiouvilleOutcome::Pass);
        assert!(checks[2..].iter().all(|c| c.outcome == LiouvilleOutcome::Fail));
    }

    #[test]
    fn built_liouville_fraction_certifies() {
        // a_{k+1} >= k^{q_k}
        let mut q: Vec<BigInt> = [2u32, 2, 32].iter().map(|&a| BigInt::from(a)).collect();
        q.push(num_traits::pow(BigInt::from(3), 162));
        let cf = ContinuedFraction::from_partial_quotients(BigInt::zero(), q).unwrap();
        let w = liouville_witness(&cf, 4).unwrap();
        assert_eq!(w.kind, ClassKind::LiouvilleCertified { k_min: 2, k_max: 3 });
        let Witness::Liouville { checks } = &w.witness else { panic!() };
        assert_eq!(checks[3].outcome, LiouvilleOutcome::Indeterminate);
        // deeper k_max never turns the recorded failure of golden into a pass
        let g = expand_continued_fraction(GOLDEN, 30).unwrap();
        assert_eq!(liouville_witness(&g, 20).unwrap().kind, ClassKind::Unverified);
    }

    #[test]
    fn rapid_fraction_denominators() {
        let cf = rapid_fraction(10, 3).unwrap();
        let qs = cf.denominators();
        assert_eq!(qs[0], BigInt::from(2));
        assert_eq!(qs[1], BigInt::from(20_001));
        assert!(ln_big(&qs[2]) > 40_004.0 * std::f64::consts::LN_10);
    }

    #[test]
    fn ln_big_matches_f64_and_scales() {
        let x = BigInt::from(123_456_789u64);
        assert!((ln_big(&x) - 123_456_789f64.ln()).abs() < 1e-12);
        let big = num_traits::pow(BigInt::from(10), 5000);
        assert!((ln_big(&big) - 5000.0 * std::f64::consts::LN_10).abs() < 1e-9);
    }

    #[test]
    fn resonance_exact_zero_is_listed() {
        let n0 = 37;
        let omega = (-(n0 as f64) * GOLDEN / 2.0).rem_euclid(1.0);
        let rep = resonance_scan(omega, GOLDEN, 2.0, 100, RESONANCE_CUTOFF).unwrap();
        assert!(rep.hits.iter().any(|h| h.n == n0));
    }

    #[test]
    fn resonance_n1_checks_two_sites() {
        let rep = resonance_scan(0.0, GOLDEN, 2.0, 1, RESONANCE_CUTOFF).unwrap();
        assert!(rep.hits.iter().all(|h| h.n.abs() == 1));
        assert!(rep.hits.len() <= 2);
    }

    #[test]
    fn random_phases_are_rarely_resonant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut non = 0;
        for _ in 0..20 {
            let w: f64 = rng.gen();
            let rep = resonance_scan(w, GOLDEN, 2.0, 10_000, RESONANCE_CUTOFF).unwrap();
            if matches!(rep.verdict, ResonanceVerdict::NonResonantUpTo(_)) {
                non += 1;
            }
        }
        assert!(non >= 18);
    }

    #[test]
    fn classify_rational_and_golden() {
        let r = classify_frequency(0.375, 40, 0.1, 2.0, 100).unwrap();
        assert_eq!(r.kind, ClassKind::Rational { p: "3".into(), q: "8".into() });
        let g = classify_frequency(GOLDEN, 20, 0.1, 2.0, 1000).unwrap();
        assert!(matches!(g.kind, ClassKind::DiophantineCertified { .. }));
    }
}
