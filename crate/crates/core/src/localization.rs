//! Windowed eigenpairs of finite restrictions, exponential decay fits, and
//! the two anti-localization criteria (Gordon and Jitomirskaya-Simon).

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::ln_ratio;
use crate::error::{Error, Result};
use crate::operator::{monodromy_from_steps, FiniteRestriction, Mat2, Parameters};
use crate::scalar::{frac, orbit_angle, Real};
use crate::tridiag::{gershgorin, inverse_iteration, kth_eigenvalue, residual_norm, sturm_count};

/// Bisection tolerance for eigenvalues.
pub const EIGENVALUE_TOL: f64 = 1e-12;
/// Inverse iteration stops once `||(H - E) v||` is below this.
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_INVERSE_ITERATIONS: usize = 50;
/// Eigenvalues closer than this are treated as one cluster and their
/// vectors orthogonalized against each other.
pub const CLUSTER_GAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFlag {
    /// Inverse iteration did not reach the residual tolerance.
    NotConverged,
    /// Part of a numerically degenerate cluster.
    Degenerate,
    /// Vector too short or too flat for a decay fit.
    NoFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenPair<T> {
    pub energy: T,
    /// First site of `vector`.
    pub n1: i64,
    pub vector: Vec<T>,
    /// Nats per site; `None` when the fit was refused.
    pub decay_rate: Option<T>,
    pub fit_r2: Option<T>,
    /// Site of largest modulus.
    pub center: i64,
    pub residual: T,
    pub iterations: usize,
    pub flags: Vec<PairFlag>,
}

/// Fitting protocol for [`decay_fit`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitConfig {
    /// Fraction of sites dropped at each end.
    pub boundary_fraction: f64,
    /// Values below `floor * max|v|` are dropped.
    pub floor: f64,
    pub min_points: usize,
    pub min_len: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            boundary_fraction: 0.1,
            floor: 1e-12,
            min_points: 20,
            min_len: 200,
        }
    }
}

fn center_index<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Least-squares slope of `log|v(n)|` against `|n - center|`; returns
/// `(rate, r2)` with `rate = -slope`.
pub fn decay_fit<T: Real>(v: &[T], config: &FitConfig) -> Result<(T, T)> {
    if v.len() < config.min_len {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least {} sites, got {}",
            config.min_len,
            v.len()
        )));
    }
    let c = center_index(v);
    let peak = v[c].abs();
    if !(peak > T::zero()) {
        return Err(Error::FitRefused { usable: 0, needed: config.min_points });
    }
    let skip = (config.boundary_fraction * v.len() as f64).ceil() as usize;
    let cut = peak * T::lit(config.floor);
    let pts: Vec<(T, T)> = (skip..v.len().saturating_sub(skip))
        .filter(|&i| v[i].abs() > cut)
        .map(|i| (T::from_usize_lossy(i.abs_diff(c)), v[i].abs().ln()))
        .collect();
    if pts.len() < config.min_points {
        return Err(Error::FitRefused {
            usable: pts.len(),
            needed: config.min_points,
        });
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in &pts {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
        syy = syy + (y - my) * (y - my);
    }
    if sxx == T::zero() {
        return Err(Error::FitRefused { usable: 1, needed: config.min_points });
    }
    let slope = sxy / sxx;
    let r2 = if syy == T::zero() {
        T::one()
    } else {
        (sxy * sxy / (sxx * syy)).min(T::one())
    };
    Ok((-slope, r2))
}

fn start_vector<T: Real>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect()
}

/// All eigenpairs of `restriction` with eigenvalue in `[lo, hi)`.
///
/// Eigenvalues by Sturm bisection, vectors by inverse iteration from seeded
/// random starts. Numerically coincident eigenvalues share a cluster and
/// are Gram-Schmidt orthogonalized against each other.
pub fn eigenpairs<T: Real>(restriction: &FiniteRestriction<T>, window: (T, T)) -> Result<Vec<EigenPair<T>>> {
    eigenpairs_with(restriction, window, &FitConfig::default())
}

pub fn eigenpairs_with<T: Real>(
    restriction: &FiniteRestriction<T>,
    window: (T, T),
    fit: &FitConfig,
) -> Result<Vec<EigenPair<T>>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NonFinite("energy window"));
    }
    if !(lo < hi) {
        return Err(Error::InvalidInput("energy window is empty".into()));
    }
    let d = restriction.diagonal();
    let e = restriction.off_diagonal();
    let i0 = sturm_count(d, &e, lo);
    let i1 = sturm_count(d, &e, hi);
    let (a, b) = gershgorin(d, &e);
    let pad = T::lit(1e-3) * (T::one() + a.abs().max(b.abs()));
    let bounds = (a - pad, b + pad);
    let tol = T::lit(EIGENVALUE_TOL);
    let values: Vec<T> = (i0..i1)
        .into_par_iter()
        .map(|k| kth_eigenvalue(d, &e, k, bounds, tol))
        .collect();

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (j, &x) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if x - values[*c.last().unwrap()] < T::lit(CLUSTER_GAP) => c.push(j),
            _ => clusters.push(vec![j]),
        }
    }

    let n = d.len();
    let per_cluster: Vec<Vec<EigenPair<T>>> = clusters
        .into_par_iter()
        .map(|cluster| {
            let degenerate = cluster.len() > 1;
            let mut found: Vec<Vec<T>> = Vec::new();
            let mut out = Vec::new();
            for &j in &cluster {
                let start = start_vector::<T>(n, (i0 + j) as u64);
                let defl: Vec<&[T]> = found.iter().map(|v| v.as_slice()).collect();
                let it = inverse_iteration(
                    d,
                    &e,
                    values[j],
                    &start,
                    &defl,
                    T::lit(RESIDUAL_TOL),
                    MAX_INVERSE_ITERATIONS,
                );
                let mut flags = Vec::new();
                if !it.converged {
                    flags.push(PairFlag::NotConverged);
                }
                if degenerate {
                    flags.push(PairFlag::Degenerate);
                }
                let (decay_rate, fit_r2) = match decay_fit(&it.vector, fit) {
                    Ok((r, q)) => (Some(r), Some(q)),
                    Err(_) => {
                        flags.push(PairFlag::NoFit);
                        (None, None)
                    }
                };
                let center = restriction.n1() + center_index(&it.vector) as i64;
                let residual = residual_norm(d, &e, values[j], &it.vector);
                found.push(it.vector.clone());
                out.push(EigenPair {
                    energy: values[j],
                    n1: restriction.n1(),
                    vector: it.vector,
                    decay_rate,
                    fit_r2,
                    center,
                    residual,
                    iterations: it.iterations,
                    flags,
                });
            }
            out
        })
        .collect();
    let pairs: Vec<EigenPair<T>> = per_cluster.into_iter().flatten().collect();
    if pairs.len() != i1 - i0 {
        return Err(Error::Internal(format!(
            "found {} eigenpairs, Sturm count says {}",
            pairs.len(),
            i1 - i0
        )));
    }
    Ok(pairs)
}

/// Eigenpairs of `H` on `[-n/2, n/2]` nearest the middle of the spectrum
/// (by index), keeping only those centered in the middle 70% of the box so
/// that the decay region is not cut by the fitting margin.
pub fn mid_spectrum_pairs(params: &Parameters<f64>, n: usize, count: usize) -> Result<Vec<EigenPair<f64>>> {
    if n < 200 {
        return Err(Error::InvalidInput(format!("need at least 200 sites, got {n}")));
    }
    let half = (n / 2) as i64;
    let r = FiniteRestriction::new(params, -half, -half + n as i64 - 1)?;
    let d = r.diagonal();
    let e = r.off_diagonal();
    let bounds = gershgorin(d, &e);
    let bounds = (bounds.0 - 1.0, bounds.1 + 1.0);
    let margin = (0.15 * n as f64) as i64;
    let (inner_lo, inner_hi) = (r.n1() + margin, r.n2() - margin);
    let mid = n / 2;
    let mut w = count.max(1);
    loop {
        let lo_idx = mid.saturating_sub(w);
        let hi_idx = (mid + w).min(n);
        let at = |k: usize| kth_eigenvalue(d, &e, k, bounds, 1e-13);
        let lo = if lo_idx == 0 { bounds.0 } else { 0.5 * (at(lo_idx - 1) + at(lo_idx)) };
        let hi = if hi_idx == n { bounds.1 } else { 0.5 * (at(hi_idx - 1) + at(hi_idx)) };
        let pairs = eigenpairs(&r, (lo, hi))?;
        let mut keep: Vec<(usize, EigenPair<f64>)> = pairs
            .into_iter()
            .enumerate()
            .filter(|(_, p)| p.center >= inner_lo && p.center <= inner_hi)
            .map(|(i, p)| ((lo_idx + i).abs_diff(mid), p))
            .collect();
        if keep.len() >= count || (lo_idx == 0 && hi_idx == n) {
            keep.sort_by_key(|(dist, p)| (*dist, p.center));
            let mut out: Vec<EigenPair<f64>> = keep.into_iter().take(count).map(|(_, p)| p).collect();
            out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
            return Ok(out);
        }
        w *= 2;
    }
}

/// Eigenpairs of `H` on `[-n/2, n/2]` whose largest entry sits within
/// `radius` of `site` and which carry all but `1e-12` of their weight
/// within `spread` of it (single-humped states).
pub fn pairs_centered_at(
    params: &Parameters<f64>,
    n: usize,
    site: i64,
    radius: i64,
    spread: i64,
) -> Result<Vec<EigenPair<f64>>> {
    let half = (n / 2) as i64;
    let r = FiniteRestriction::new(params, -half, -half + n as i64 - 1)?;
    let (a, b) = gershgorin(r.diagonal(), &r.off_diagonal());
    let pairs = eigenpairs(&r, (a - 1.0, b + 1.0))?;
    Ok(pairs
        .into_iter()
        .filter(|p| {
            if (p.center - site).abs() > radius {
                return false;
            }
            let lo = (p.center - spread - p.n1).max(0) as usize;
            let hi = ((p.center + spread - p.n1) as usize).min(p.vector.len() - 1);
            p.vector[lo..=hi].iter().map(|x| x * x).sum::<f64>() > 1.0 - 1e-12
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GordonBranch {
    /// `|tr M_E(p)| <= 1`: uses the vectors at `0, p, 2p`.
    TraceAtMostOne,
    /// `|tr M_E(p)| > 1`: uses the vectors at `-p, 0, p`.
    TraceAboveOne,
}

#[derive(Clone, Debug, Serialize)]
pub struct GordonReport {
    pub p: usize,
    pub energy: f64,
    pub trace: f64,
    pub branch: GordonBranch,
    /// Norms of `(u(n+1), u(n))` at `n = -p, p, 2p`.
    pub norms: [f64; 3],
    pub initial_norm: f64,
    /// `max(norms) / initial_norm`; `None` for the zero solution.
    pub ratio: Option<f64>,
}

/// Slack allowed on the `1/2` lower bound, relative to `||(u(1), u(0))||`.
pub const GORDON_SLACK: f64 = 1e-10;

/// Solve from `(u(1), u(0))` with `V(n) = period[n mod p]` and test
/// `max(|Phi(-p)|, |Phi(p)|, |Phi(2p)|) >= |Phi(0)| / 2`.
///
/// A violation is an [`Error::Internal`]: the inequality cannot fail.
pub fn gordon_inequality_check(period: &[f64], energy: f64, u0: f64, u1: f64) -> Result<GordonReport> {
    let p = period.len();
    if p == 0 {
        return Err(Error::InvalidInput("period must be nonempty".into()));
    }
    if !(energy.is_finite() && u0.is_finite() && u1.is_finite()) || period.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gordon check input"));
    }
    let v = |n: i64| period[n.rem_euclid(p as i64) as usize];
    let pi = p as i64;
    // forward to 2p + 1
    let mut fwd = vec![u0, u1];
    for n in 1..=2 * pi {
        let k = n as usize;
        fwd.push((energy - v(n)) * fwd[k] - fwd[k - 1]);
    }
    // backward to -p: bwd[j] = u(1 - j)
    let mut bwd = vec![u1, u0];
    for n in (-pi + 1..=0).rev() {
        let k = bwd.len();
        // u(n-1) = (E - V(n)) u(n) - u(n+1)
        bwd.push((energy - v(n)) * bwd[k - 1] - bwd[k - 2]);
    }
    let at = |n: i64| -> f64 {
        if n >= 0 {
            fwd[n as usize]
        } else {
            bwd[(1 - n) as usize]
        }
    };
    let phi = |n: i64| at(n + 1).hypot(at(n));
    let norms = [phi(-pi), phi(pi), phi(2 * pi)];
    let initial_norm = phi(0);
    let trace = monodromy_from_steps(p, |m| Mat2::new(energy - v(m), -1.0, 1.0, 0.0)).trace();
    let branch = if trace.abs() <= 1.0 {
        GordonBranch::TraceAtMostOne
    } else {
        GordonBranch::TraceAboveOne
    };
    let best = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let ratio = (initial_norm > 0.0).then(|| best / initial_norm);
    if let Some(r) = ratio {
        if r < 0.5 - GORDON_SLACK {
            return Err(Error::Internal(format!(
                "Gordon inequality violated: ratio {r} at p = {p}, E = {energy}"
            )));
        }
    }
    Ok(GordonReport {
        p,
        energy,
        trace,
        branch,
        norms,
        initial_norm,
        ratio,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GordonTrialSummary {
    pub seed: u64,
    pub trials: usize,
    pub p_max: usize,
    pub min_ratio: f64,
    pub violations: usize,
    pub branch_counts: [usize; 2],
}

/// Random `(V, E, u, p)` trials. Trial `i` draws from stream `i` of a
/// ChaCha generator seeded with `seed`, so results do not depend on
/// scheduling.
pub fn gordon_random_trials(seed: u64, trials: usize, p_max: usize) -> Result<GordonTrialSummary> {
    if p_max == 0 {
        return Err(Error::InvalidInput("p_max must be positive".into()));
    }
    let results: Vec<Result<GordonReport>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let p = rng.gen_range(1..=p_max);
            let period: Vec<f64> = (0..p).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let energy = rng.gen_range(-6.0..6.0);
            let (u0, u1) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            gordon_inequality_check(&period, energy, u0, u1)
        })
        .collect();
    let mut summary = GordonTrialSummary {
        seed,
        trials,
        p_max,
        min_ratio: f64::INFINITY,
        violations: 0,
        branch_counts: [0, 0],
    };
    for r in results {
        match r {
            Ok(rep) => {
                if let Some(x) = rep.ratio {
                    summary.min_ratio = summary.min_ratio.min(x);
                }
                summary.branch_counts[rep.branch as usize] += 1;
            }
            Err(Error::Internal(_)) => summary.violations += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

/// Above this `q` the maximum over `n` is replaced by its bound.
pub const GORDON_DIRECT_MAX_Q: u64 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct GordonTerm {
    pub q: u64,
    pub c: f64,
    /// `log10` of `max_{1<=n<=q} |V(n) - V(n +- q)| C^q`.
    pub log10_value: f64,
    /// `log10` of `4 lambda pi dist(q alpha, Z) C^q`.
    pub log10_bound: f64,
    /// `false` when `q` is too large for the direct maximum and the
    /// value is the `|sin| <= 1` bound.
    pub direct: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GordonPotentialReport {
    pub lambda: f64,
    pub omega: f64,
    pub c: f64,
    pub terms: Vec<GordonTerm>,
    pub decreasing: bool,
    /// Decreasing and the last term below `1e-6`.
    pub vanishing: bool,
}

/// `log |sin(pi x)|` for exact rational `x`, accurate when `x` is far
/// below floating-point resolution.
fn ln_sin_pi_dist(x: &BigRational) -> f64 {
    let fl = x.floor();
    let mut d = x - &fl;
    let half = BigRational::new(1.into(), 2.into());
    if d > half {
        d = BigRational::from_integer(1.into()) - d;
    }
    if d.is_zero() {
        return f64::NEG_INFINITY;
    }
    let ln_d = ln_ratio(&d.abs());
    if ln_d < -20.0 {
        // sin(pi d) = pi d (1 - O(d^2))
        std::f64::consts::PI.ln() + ln_d
    } else {
        (std::f64::consts::PI * ln_d.exp()).sin().ln()
    }
}

/// The Gordon sequence `max_n |V(n) - V(n +- q)| C^q` along `q_list`, in
/// log space, for the AMO with exact frequency `alpha`.
///
/// Uses `|V(n) - V(n + s q)| = 4 lambda |sin(pi(2 omega + (2n + s q) alpha))| |sin(pi q alpha)|`.
pub fn gordon_potential_check(
    lambda: f64,
    alpha: &BigRational,
    omega: f64,
    q_list: &[u64],
    c: f64,
) -> Result<GordonPotentialReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput("coupling must be positive".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput("C must be positive".into()));
    }
    if q_list.is_empty() || q_list.windows(2).any(|w| w[0] >= w[1]) || q_list[0] == 0 {
        return Err(Error::InvalidInput("q_list must be positive and increasing".into()));
    }
    let alpha_f = crate::arithmetic::ratio_to_f64(alpha);
    let ln10 = std::f64::consts::LN_10;
    let terms: Vec<GordonTerm> = q_list
        .par_iter()
        .map(|&q| {
            let qa = alpha * BigRational::from_integer(q.into());
            let ln_s = ln_sin_pi_dist(&qa);
            let ln_scale = (4.0 * lambda).ln() + ln_s + q as f64 * c.ln();
            let d = {
                let f = &qa - qa.round();
                ln_ratio(&f.abs())
            };
            let log10_bound = ((4.0 * lambda * std::f64::consts::PI).ln() + d + q as f64 * c.ln()) / ln10;
            let (ln_max_sin, direct) = if q <= GORDON_DIRECT_MAX_Q {
                let mut m = 0.0f64;
                for n in 1..=q as i64 {
                    for s in [1i64, -1] {
                        let x = 2.0 * omega + orbit_angle(0.0, alpha_f, 2 * n + s * q as i64);
                        m = m.max((std::f64::consts::PI * frac(x)).sin().abs());
                    }
                }
                (m.ln(), true)
            } else {
                (0.0, false)
            };
            GordonTerm {
                q,
                c,
                log10_value: (ln_scale + ln_max_sin) / ln10,
                log10_bound,
                direct,
            }
        })
        .collect();
    let decreasing = terms.windows(2).all(|w| w[1].log10_value < w[0].log10_value);
    let vanishing = decreasing && terms.last().map(|t| t.log10_value < -6.0).unwrap_or(false);
    Ok(GordonPotentialReport {
        lambda,
        omega,
        c,
        terms,
        decreasing,
        vanishing,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct JsTerm {
    pub m: i64,
    /// `sup_{|n| <= N} |V(2m - n) - V(n)|`.
    pub defect: f64,
    /// `e^{-B m}`.
    pub threshold: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct JsReport {
    pub lambda: f64,
    pub alpha: f64,
    pub omega: f64,
    pub n: u64,
    /// `4 log(3 + 2 ||V||_inf) + eps` with `||V||_inf = 2 lambda`.
    pub b: f64,
    pub terms: Vec<JsTerm>,
    pub satisfied_m: Vec<i64>,
}

/// Reflection defects about the centers `m` for the AMO.
///
/// Uses `V(2m - n) - V(n) = -4 lambda sin(pi(2 omega + 2 m alpha)) sin(2 pi (m - n) alpha)`,
/// which keeps exact reflection centers at rounding level.
pub fn js_condition_check(params: &Parameters<f64>, m_list: &[i64], n: u64, eps: f64) -> Result<JsReport> {
    if m_list.is_empty() {
        return Err(Error::InvalidInput("m_list must be nonempty".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let lambda = params.lambda;
    let b = 4.0 * (3.0 + 4.0 * lambda).ln() + eps;
    let terms: Vec<JsTerm> = m_list
        .par_iter()
        .map(|&m| {
            let center = frac(2.0 * params.omega + orbit_angle(0.0, params.alpha, 2 * m));
            let s_center = (std::f64::consts::PI * center).sin().abs();
            let mut s_max = 0.0f64;
            for k in -(n as i64)..=n as i64 {
                let x = orbit_angle(0.0, params.alpha, m - k);
                s_max = s_max.max((std::f64::consts::TAU * x).sin().abs());
            }
            let defect = 4.0 * lambda * s_center * s_max;
            let threshold = (-b * m as f64).exp();
            JsTerm {
                m,
                defect,
                threshold,
                satisfied: defect < threshold,
            }
        })
        .collect();
    let satisfied_m = terms.iter().filter(|t| t.satisfied).map(|t| t.m).collect();
    Ok(JsReport {
        lambda,
        alpha: params.alpha,
        omega: params.omega,
        n,
        b,
        terms,
        satisfied_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{expand_continued_fraction, rapid_fraction};
    use crate::operator::{classify_regular, potential};
    use crate::tridiag::dot;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn mid_pairs(lambda: f64, omega: f64, n: i64) -> Vec<EigenPair<f64>> {
        let p = Parameters::new(lambda, GOLDEN, omega).unwrap();
        let r = FiniteRestriction::new(&p, -n / 2, n / 2).unwrap();
        let d = r.diagonal();
        let e = r.off_diagonal();
        let mid = r.len() / 2;
        let lo = kth_eigenvalue(d, &e, mid - 5, (-10.0, 10.0), 1e-13);
        let hi = kth_eigenvalue(d, &e, mid + 5, (-10.0, 10.0), 1e-13);
        eigenpairs(&r, (lo - 1e-9, hi - 1e-9)).unwrap()
    }

    #[test]
    fn free_laplacian_eigenvalues() {
        let r = FiniteRestriction::from_diagonal(0, vec![0.0; 10]).unwrap();
        let pairs = eigenpairs(&r, (-3.0, 3.0)).unwrap();
        assert_eq!(pairs.len(), 10);
        for (k, pr) in pairs.iter().enumerate() {
            let want = 2.0 * (std::f64::consts::PI * (10 - k) as f64 / 11.0).cos();
            assert!((pr.energy - want).abs() < 1e-12);
            assert!(pr.residual < 1e-8);
            assert!(pr.flags.contains(&PairFlag::NoFit));
        }
    }

    #[test]
    fn single_site() {
        let p = Parameters::new(1.5, GOLDEN, 0.3).unwrap();
        let r = FiniteRestriction::new(&p, 4, 4).unwrap();
        let pairs = eigenpairs(&r, (-10.0, 10.0)).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].energy - potential(&p, 4)).abs() < 1e-12);
        assert_eq!(pairs[0].center, 4);
    }

    #[test]
    fn random_matrix_completeness_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let diag: Vec<f64> = (0..200).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let r = FiniteRestriction::from_diagonal(0, diag).unwrap();
        let pairs = eigenpairs(&r, (-6.0, 6.0)).unwrap();
        assert_eq!(pairs.len(), 200);
        for (i, a) in pairs.iter().enumerate() {
            assert!(a.residual < 1e-8, "{i}: {}", a.residual);
            assert!((dot(&a.vector, &a.vector) - 1.0).abs() < 1e-12);
            for b in &pairs[i + 1..] {
                if (b.energy - a.energy).abs() > 1e-8 {
                    assert!(dot(&a.vector, &b.vector).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn empty_window_rejected() {
        let r = FiniteRestriction::from_diagonal(0, vec![0.0; 3]).unwrap();
        assert!(eigenpairs(&r, (1.0, 1.0)).is_err());
    }

    #[test]
    fn synthetic_exponential() {
        let v: Vec<f64> = (-150i64..=150).map(|n| (-(n.abs() as f64)).exp()).collect();
        let (rate, r2) = decay_fit(&v, &FitConfig::default()).unwrap();
        assert!((rate - 1.0).abs() < 1e-6);
        assert!(r2 > 1.0 - 1e-9);
    }

    #[test]
    fn fit_refusals() {
        assert!(decay_fit(&[1.0; 150], &FitConfig::default()).is_err());
        let mut v = vec![0.0; 300];
        v[150] = 1.0;
        assert!(matches!(decay_fit(&v, &FitConfig::default()), Err(Error::FitRefused { .. })));
    }

    #[test]
    fn supercritical_decay_rate() {
        let p = Parameters::new(3.0, GOLDEN, 0.1234).unwrap();
        let pairs = mid_spectrum_pairs(&p, 2001, 10).unwrap();
        assert_eq!(pairs.len(), 10);
        for pr in &pairs {
            let rate = pr.decay_rate.unwrap();
            assert!((rate - 3f64.ln()).abs() < 0.15 * 3f64.ln(), "{} {rate}", pr.energy);
            assert!(pr.fit_r2.unwrap() > 0.9);
            assert!(pr.residual < 1e-8);
        }
    }

    #[test]
    fn subcritical_states_are_extended() {
        for pr in mid_pairs(0.5, 0.1234, 2001) {
            let flat = pr.decay_rate.map(|r| r.abs() < 0.05).unwrap_or(true);
            let poor = pr.fit_r2.map(|q| q < 0.5).unwrap_or(true);
            assert!(flat || poor, "{:?} {:?}", pr.decay_rate, pr.fit_r2);
        }
    }

    #[test]
    fn far_sites_are_regular() {
        let p = Parameters::new(3.0, GOLDEN, 0.1234).unwrap();
        let pr = &mid_pairs(3.0, 0.1234, 2001)[0];
        let gamma = 3f64.ln() - 0.2;
        let mut regular = 0;
        let sites: Vec<i64> = [-1, 1].iter().flat_map(|s| (0..5).map(move |j| pr.center + s * (120 + 40 * j))).collect();
        for &n in &sites {
            if classify_regular(&p, pr.energy, gamma, 60, n).unwrap().is_regular() {
                regular += 1;
            }
        }
        assert!(regular >= sites.len() - 1, "{regular} of {}", sites.len());
    }

    #[test]
    fn gordon_random() {
        let s = gordon_random_trials(2024, 1000, 20).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.min_ratio >= 0.5 - GORDON_SLACK);
        assert!(s.branch_counts[0] > 0 && s.branch_counts[1] > 0);
    }

    #[test]
    fn gordon_constant_potential_small_trace() {
        // V = 0, p = 3: tr T^3 = 2 cos 3 theta with E = 2 cos theta
        let rep = gordon_inequality_check(&[0.0; 3], 1.8, 0.3, 0.7).unwrap();
        let t = monodromy_from_steps(3, |_| Mat2::new(1.8, -1.0, 1.0, 0.0)).trace();
        assert!(t.abs() <= 1.0);
        assert_eq!(rep.branch, GordonBranch::TraceAtMostOne);
        assert!((rep.trace - t).abs() < 1e-14);
    }

    #[test]
    fn gordon_zero_solution() {
        let rep = gordon_inequality_check(&[1.0, 2.0], 0.1, 0.0, 0.0).unwrap();
        assert_eq!(rep.ratio, None);
        assert_eq!(rep.norms, [0.0; 3]);
    }

    #[test]
    fn gordon_liouville_sequence_vanishes() {
        let cf = rapid_fraction(10, 3).unwrap();
        let qs: Vec<u64> = cf.small_convergents().iter().map(|c| c.1).collect();
        let rep = gordon_potential_check(1.0, &cf.value, 0.2, &qs[..2], 10.0).unwrap();
        assert_eq!(qs[..2], [2, 20001]);
        assert!(rep.vanishing, "{rep:?}");
        for t in &rep.terms {
            assert!(t.direct);
            assert!(t.log10_value <= t.log10_bound + 1e-9);
        }
    }

    #[test]
    fn gordon_golden_diverges() {
        let cf = expand_continued_fraction(GOLDEN, 25).unwrap();
        let qs: Vec<u64> = cf.small_convergents().iter().map(|c| c.1).filter(|&q| q >= 5).take(10).collect();
        let rep = gordon_potential_check(1.0, &cf.value, 0.2, &qs, 2.0).unwrap();
        assert!(!rep.decreasing);
        let last = rep.terms.last().unwrap();
        assert!(last.log10_value > rep.terms[0].log10_value);
    }

    #[test]
    fn gordon_bound_linear_in_lambda() {
        let cf = expand_continued_fraction(GOLDEN, 10).unwrap();
        let a = gordon_potential_check(1.0, &cf.value, 0.2, &[5, 8], 2.0).unwrap();
        let b = gordon_potential_check(1e-3, &cf.value, 0.2, &[5, 8], 2.0).unwrap();
        for (x, y) in a.terms.iter().zip(&b.terms) {
            assert!((x.log10_bound - y.log10_bound - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn js_reflection_center() {
        let m = 4;
        // omega = -m alpha makes 2 omega + 2 m alpha an integer
        let omega = frac(-(m as f64) * GOLDEN);
        let p = Parameters::new(1.0, GOLDEN, omega).unwrap();
        let rep = js_condition_check(&p, &[1, 2, m, 6], 200, 1e-3).unwrap();
        assert!(rep.terms[2].defect < 1e-12);
        assert!(rep.terms[0].defect > 0.1);
        assert!((rep.b - 4.0 * 7f64.ln() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn js_generic_phase() {
        let p = Parameters::new(2.0, GOLDEN, 0.137).unwrap();
        let rep = js_condition_check(&p, &[1, 2, 3, 5, 8, 13], 500, 1e-3).unwrap();
        assert!(rep.satisfied_m.is_empty());
        assert!(rep.terms.iter().all(|t| t.defect > 1e-3));
    }
}
