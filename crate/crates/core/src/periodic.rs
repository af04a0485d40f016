//! Band structure of the operator at rational frequency `p/q`, and set
//! operations on finite unions of intervals.
//!
//! For `alpha = p/q` the trace of the period monodromy splits as
//! `tr M_E(q, omega) = h(E) - A cos(2 pi q omega + phi)` with `A = 2 lambda^q`,
//! so the union of spectra over the phase is `{E : |h(E)| <= 2 + A}`. The
//! edges of that set are the periodic eigenvalues at the phase where
//! `tr = h - A` together with the antiperiodic eigenvalues at the phase where
//! `tr = h + A`.

use nalgebra::DMatrix;
use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{monodromy, transfer_step, Mat2, Parameters};

/// Bands closer than this are merged and the closure is counted.
pub const MERGE_GAP: f64 = 1e-11;

/// Tolerance on the trace decomposition defect beyond its rounding bound,
/// relative to `1 + |h| + amplitude`.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provenance {
    Rational { lambda: f64, p: u64, q: u64 },
    Approximant { lambda: f64, alpha: f64, tolerance: f64 },
    Scaled { factor: f64 },
    Oracle { lambda: f64, p: u64, q: u64, phases: usize },
    Explicit,
}

/// Sorted, pairwise-disjoint closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandSet {
    pub intervals: Vec<(f64, f64)>,
    pub provenance: Provenance,
    /// Gaps narrower than [`MERGE_GAP`] that were closed by merging.
    pub merged_gaps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub left: f64,
    pub right: f64,
    pub length: f64,
}

impl BandSet {
    /// Normalize arbitrary closed intervals: sort, and merge any that overlap
    /// or sit closer than [`MERGE_GAP`].
    pub fn from_intervals(mut raw: Vec<(f64, f64)>, provenance: Provenance) -> Result<Self> {
        if raw.iter().any(|&(l, r)| !(l.is_finite() && r.is_finite())) {
            return Err(Error::NonFinite("band endpoints"));
        }
        if raw.iter().any(|&(l, r)| l > r) {
            return Err(Error::InvalidInput("interval with left > right".into()));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        let mut merged_gaps = 0;
        for (l, r) in raw {
            match out.last_mut() {
                Some(last) if l - last.1 < MERGE_GAP => {
                    // edges meeting up to rounding close a gap; a genuine
                    // overlap does not
                    if (l - last.1).abs() < MERGE_GAP {
                        merged_gaps += 1;
                    }
                    last.1 = last.1.max(r);
                }
                _ => out.push((l, r)),
            }
        }
        Ok(Self {
            intervals: out,
            provenance,
            merged_gaps,
        })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.intervals.first().map_or(f64::NAN, |b| b.0)
    }

    pub fn max(&self) -> f64 {
        self.intervals.last().map_or(f64::NAN, |b| b.1)
    }

    pub fn contains(&self, e: f64) -> bool {
        self.distance_to(e) == 0.0
    }

    /// Distance from `e` to the set.
    pub fn distance_to(&self, e: f64) -> f64 {
        let iv = &self.intervals;
        if iv.is_empty() {
            return f64::INFINITY;
        }
        // first interval with left > e
        let i = iv.partition_point(|b| b.0 <= e);
        if i > 0 && e <= iv[i - 1].1 {
            return 0.0;
        }
        let left = if i > 0 { e - iv[i - 1].1 } else { f64::INFINITY };
        let right = if i < iv.len() { iv[i].0 - e } else { f64::INFINITY };
        left.min(right)
    }

    /// Distance to the nearest endpoint of any band.
    pub fn distance_to_edge(&self, e: f64) -> (f64, f64) {
        self.intervals
            .iter()
            .flat_map(|&(l, r)| [l, r])
            .map(|x| ((x - e).abs(), x))
            .fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        Ok(Self {
            intervals: self
                .intervals
                .iter()
                .map(|&(l, r)| (l * factor, r * factor))
                .collect(),
            provenance: Provenance::Scaled { factor },
            merged_gaps: self.merged_gaps,
        })
    }

    /// `{-E : E in self}`.
    pub fn reflected(&self) -> Self {
        Self {
            intervals: self.intervals.iter().rev().map(|&(l, r)| (-r, -l)).collect(),
            provenance: self.provenance.clone(),
            merged_gaps: self.merged_gaps,
        }
    }
}

/// Bounded open intervals between consecutive bands.
pub fn gaps(bands: &BandSet) -> Vec<Gap> {
    bands
        .intervals
        .windows(2)
        .map(|w| Gap {
            left: w[0].1,
            right: w[1].0,
            length: w[1].0 - w[0].1,
        })
        .collect()
}

/// Lebesgue measure.
pub fn measure(bands: &BandSet) -> f64 {
    let widths: Vec<f64> = bands.intervals.iter().map(|&(l, r)| r - l).collect();
    crate::scalar::pairwise_sum(&widths)
}

/// `sup_{x in a} dist(x, b)`. The distance to `b` is piecewise linear on each
/// interval of `a`, so its maximum sits at an endpoint of `a` or at the
/// midpoint of a gap of `b`.
fn directed_hausdorff(a: &BandSet, b: &BandSet) -> f64 {
    let mut worst = 0.0f64;
    for &(l, r) in &a.intervals {
        worst = worst.max(b.distance_to(l)).max(b.distance_to(r));
    }
    for g in gaps(b) {
        let m = 0.5 * (g.left + g.right);
        if a.contains(m) {
            worst = worst.max(0.5 * g.length);
        }
    }
    worst
}

/// Exact Hausdorff distance between two finite unions of closed intervals.
pub fn hausdorff_distance(a: &BandSet, b: &BandSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Hausdorff distance of an empty set".into()));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// Trace of the period monodromy split into its phase-independent part and
/// one harmonic: `tr M_E(q, omega) = h(E) - amplitude cos(2 pi q omega + phase_offset)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Discriminant {
    pub lambda: f64,
    pub p: u64,
    pub q: u64,
    pub amplitude: f64,
    pub phase_offset: f64,
    /// Worst excess of the split's defect over the rounding bound, relative to
    /// `1 + |h| + amplitude`.
    pub residual: f64,
}

impl Discriminant {
    fn params(&self, omega: f64) -> Parameters<f64> {
        Parameters::new_unchecked(self.lambda, self.p as f64 / self.q as f64, omega)
    }

    pub fn trace(&self, energy: f64, omega: f64) -> f64 {
        monodromy(&self.params(omega), energy, self.q as usize).trace()
    }

    /// Phase with `tr = h - amplitude`.
    pub fn phase_low(&self) -> f64 {
        (-self.phase_offset / (std::f64::consts::TAU * self.q as f64)).rem_euclid(1.0 / self.q as f64)
    }

    /// Phase with `tr = h + amplitude`.
    pub fn phase_high(&self) -> f64 {
        ((std::f64::consts::PI - self.phase_offset) / (std::f64::consts::TAU * self.q as f64))
            .rem_euclid(1.0 / self.q as f64)
    }

    /// `h(E)`, the average of the trace at two phases half a harmonic apart.
    pub fn h(&self, energy: f64) -> f64 {
        0.5 * (self.trace(energy, self.phase_low()) + self.trace(energy, self.phase_high()))
    }

    /// `2 + amplitude`: the band set is `{|h| <= level}`.
    pub fn level(&self) -> f64 {
        2.0 + self.amplitude
    }
}

fn check_rational(lambda: f64, p: u64, q: u64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidInput(format!("coupling must be positive, got {lambda}")));
    }
    if q == 0 || p > q || p.gcd(&q) != 1 {
        return Err(Error::InvalidInput(format!("need coprime 0 <= p <= q, q >= 1; got {p}/{q}")));
    }
    Ok(())
}

/// Trace of the `n`-step monodromy with a first-order bound on its rounding
/// error, `eps sum_k |S_k| |T_k| |P_(k-1)|` over prefix and suffix products.
fn trace_with_floor(params: &Parameters<f64>, energy: f64, n: usize) -> (f64, f64) {
    let steps: Vec<Mat2<f64>> = (1..=n as i64).map(|k| transfer_step(params, energy, k)).collect();
    let mut prefix = vec![1.0f64; n + 1];
    let mut m = Mat2::identity();
    for (k, t) in steps.iter().enumerate() {
        m = *t * m;
        prefix[k + 1] = m.max_abs();
    }
    let mut suffix = Mat2::identity();
    let mut floor = 0.0;
    for k in (0..n).rev() {
        floor += suffix.max_abs() * steps[k].max_abs() * prefix[k];
        suffix = suffix * steps[k];
    }
    (m.trace(), 8.0 * f64::EPSILON * floor)
}

/// Recover the split from `4q` phase samples at a spread of test energies.
pub fn discriminant_decompose(lambda: f64, p: u64, q: u64) -> Result<Discriminant> {
    check_rational(lambda, p, q)?;
    let n = 4 * q as usize;
    let bound = 2.0 + 2.0 * lambda;
    // the harmonic is read at E = 0; the others only validate
    let energies = [0.0, 0.5, -0.5, 1.0, -1.0, 1.2, -1.2].map(|t| t * bound);
    let base = Discriminant {
        lambda,
        p,
        q,
        amplitude: 0.0,
        phase_offset: 0.0,
        residual: 0.0,
    };
    let phases: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let mut samples = Vec::with_capacity(energies.len());
    for &e in &energies {
        let mut floor = 0.0f64;
        let tr: Vec<f64> = phases
            .iter()
            .map(|&w| {
                let (t, f) = trace_with_floor(&base.params(w), e, q as usize);
                floor = floor.max(f);
                t
            })
            .collect();
        let h = crate::scalar::pairwise_sum(&tr) / n as f64;
        // harmonic q of the 4q-point grid: e^{-2 pi i q j / 4q} = (-i)^j
        let (mut re, mut im) = (0.0, 0.0);
        for (j, t) in tr.iter().enumerate() {
            match j % 4 {
                0 => re += t,
                1 => im -= t,
                2 => re -= t,
                _ => im += t,
            }
        }
        samples.push((h, (re / n as f64, im / n as f64), floor, tr));
    }
    // the harmonic does not depend on E; read it where the products cancel least
    let (coef, read_floor) = samples
        .iter()
        .min_by(|x, y| x.2.total_cmp(&y.2))
        .map(|s| (s.1, s.2))
        .unwrap_or(((0.0, 0.0), 0.0));
    // tr = h + 2 Re(c e^{2 pi i q omega}) = h - 2|c| cos(2 pi q omega + arg c + pi)
    let amplitude = 2.0 * coef.0.hypot(coef.1);
    let phase_offset = (coef.1.atan2(coef.0) + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    let mut residual = 0.0f64;
    for (h, _, floor, tr) in &samples {
        // only the excess over what rounding can explain counts
        let slack = 2.0 * (floor + 2.0 * read_floor);
        for (t, &w) in tr.iter().zip(&phases) {
            let model = h - amplitude * (std::f64::consts::TAU * q as f64 * w + phase_offset).cos();
            residual = residual.max(((t - model).abs() - slack).max(0.0) / (1.0 + h.abs() + amplitude));
        }
    }
    if !(residual < DECOMPOSITION_TOL) {
        return Err(Error::Decomposition {
            residual,
            tolerance: DECOMPOSITION_TOL,
        });
    }
    Ok(Discriminant {
        amplitude,
        phase_offset,
        residual,
        ..base
    })
}

/// Eigenvalues, ascending, of the `q`-site cyclic Jacobi matrix with
/// diagonal `d`, unit off-diagonal and corner coupling `corner` (`+1`
/// periodic, `-1` antiperiodic). For `q = 1, 2` the corner folds onto the
/// diagonal and the off-diagonal respectively.
pub fn cyclic_eigenvalues(d: &[f64], corner: f64) -> Vec<f64> {
    let q = d.len();
    let mut m = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        m[(i, i)] = d[i];
    }
    match q {
        0 => return Vec::new(),
        1 => m[(0, 0)] += 2.0 * corner,
        2 => {
            m[(0, 1)] = 1.0 + corner;
            m[(1, 0)] = 1.0 + corner;
        }
        _ => {
            for i in 0..q - 1 {
                m[(i, i + 1)] = 1.0;
                m[(i + 1, i)] = 1.0;
            }
            m[(0, q - 1)] = corner;
            m[(q - 1, 0)] = corner;
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn period_diagonal(lambda: f64, p: u64, q: u64, omega: f64) -> Vec<f64> {
    let params = Parameters::new_unchecked(lambda, p as f64 / q as f64, omega);
    (1..=q as i64).map(|n| crate::operator::potential(&params, n)).collect()
}

/// Polish a root of `h(E) = target` by bisection when `h - target` changes
/// sign across a small bracket; otherwise (touching bands) keep `e`.
fn polish(disc: &Discriminant, e: f64, target: f64) -> f64 {
    let f = |x: f64| disc.h(x) - target;
    // the eigenvalue is already good to a few ulps; stay within that
    let delta = 1e-12 * (1.0 + e.abs());
    let (mut lo, mut hi) = (e - delta, e + delta);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo.signum() * fhi.signum() < 0.0) {
        return e;
    }
    let lo_neg = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    // rounding noise can fake a sign change near a double root
    if f(best).abs() <= f(e).abs() {
        best
    } else {
        e
    }
}

/// Band edges of `Sigma^{lambda, p/q}`: the `2q` roots of `h(E) = +-(2 + A)`,
/// sorted.
pub fn band_edges(disc: &Discriminant) -> Result<Vec<f64>> {
    let (lambda, p, q) = (disc.lambda, disc.p, disc.q);
    let level = disc.level();
    let low = period_diagonal(lambda, p, q, disc.phase_low());
    let high = period_diagonal(lambda, p, q, disc.phase_high());
    let mut edges: Vec<(f64, f64)> = cyclic_eigenvalues(&low, 1.0)
        .into_iter()
        .map(|e| (e, level))
        .chain(cyclic_eigenvalues(&high, -1.0).into_iter().map(|e| (e, -level)))
        .collect();
    if edges.len() != 2 * q as usize {
        return Err(Error::RootCount {
            found: edges.len(),
            expected: 2 * q as usize,
        });
    }
    for (e, target) in edges.iter_mut() {
        *e = polish(disc, *e, *target);
    }
    let mut out: Vec<f64> = edges.into_iter().map(|(e, _)| e).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// `Sigma^{lambda, p/q} = {E : |h(E)| <= 2 + 2 lambda^q}` as `q` bands (fewer
/// when neighbours touch).
pub fn band_set(lambda: f64, p: u64, q: u64) -> Result<BandSet> {
    let disc = discriminant_decompose(lambda, p, q)?;
    band_set_with(&disc)
}

pub fn band_set_with(disc: &Discriminant) -> Result<BandSet> {
    let edges = band_edges(disc)?;
    let raw = edges.chunks(2).map(|c| (c[0], c[1])).collect();
    let bound = 2.0 + 2.0 * disc.lambda;
    let bands = BandSet::from_intervals(
        raw,
        Provenance::Rational {
            lambda: disc.lambda,
            p: disc.p,
            q: disc.q,
        },
    )?;
    if bands.min() < -bound - 1e-9 || bands.max() > bound + 1e-9 {
        return Err(Error::Internal(format!(
            "bands [{}, {}] exceed the norm bound {bound}",
            bands.min(),
            bands.max()
        )));
    }
    Ok(bands)
}

/// Brute-force union over phases `omega_j = j / (phases q)` of the spectra of
/// the `q`-periodic operator, each obtained from the dense eigenvalues of the
/// `2q`-site periodic restriction (Bloch phases `0` and `pi`).
pub fn bloch_oracle(lambda: f64, p: u64, q: u64, phases: usize) -> Result<BandSet> {
    check_rational(lambda, p, q)?;
    if phases == 0 {
        return Err(Error::InvalidInput("need at least one phase".into()));
    }
    let q_us = q as usize;
    let n = 2 * q_us;
    let per_phase: Vec<Vec<(f64, f64)>> = (0..phases)
        .into_par_iter()
        .map(|j| {
            let omega = j as f64 / (phases as f64 * q as f64);
            let diag = period_diagonal(lambda, p, q, omega);
            let mut h = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                h[(i, i)] += diag[i % q_us];
                let k = (i + 1) % n;
                h[(i, k)] += 1.0;
                h[(k, i)] += 1.0;
            }
            let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev.chunks(2).map(|c| (c[0], c[1])).collect()
        })
        .collect();
    BandSet::from_intervals(
        per_phase.into_iter().flatten().collect(),
        Provenance::Oracle {
            lambda,
            p,
            q,
            phases,
        },
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityScaleReport {
    pub lambda: f64,
    pub p: u64,
    pub q: u64,
    pub distance: f64,
}

/// `dist_H(Sigma^{lambda, p/q}, lambda Sigma^{1/lambda, p/q})`.
pub fn duality_scale_check(lambda: f64, p: u64, q: u64) -> Result<DualityScaleReport> {
    let direct = band_set(lambda, p, q)?;
    let dual = band_set(1.0 / lambda, p, q)?.scaled(lambda)?;
    Ok(DualityScaleReport {
        lambda,
        p,
        q,
        distance: hausdorff_distance(&direct, &dual)?,
    })
}
