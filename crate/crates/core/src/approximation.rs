//! Spectra at irrational frequency through rational approximants, the
//! Hofstadter butterfly, and the integrated density of states.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{ratio_to_f64, ContinuedFraction};
use crate::error::{Error, Result};
use crate::operator::{potential, Parameters};
use crate::periodic::{band_set, BandSet, Provenance};
use crate::scalar::Real;
use crate::tridiag::sturm_count;

/// Hausdorff radius `6 (2 lambda |alpha - alpha'|)^{1/2}` of the spectrum
/// under a change of frequency.
pub fn continuity_bound(lambda: f64, dalpha: f64) -> f64 {
    6.0 * (2.0 * lambda * dalpha.abs()).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxSpectrum {
    pub bands: BandSet,
    pub p: u64,
    pub q: u64,
    /// `|alpha - p/q|`.
    pub distance: f64,
    pub error_bound: f64,
}

/// Band set of the first convergent (starting from `a0/1`) whose continuity
/// bound is at most `tol`.
pub fn spectrum_approx(lambda: f64, cf: &ContinuedFraction, tol: f64) -> Result<ApproxSpectrum> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let alpha = cf.value_f64();
    let candidates = std::iter::once((cf.a0.clone(), num_bigint::BigInt::from(1)))
        .chain(cf.convergents.iter().cloned());
    for (p, q) in candidates {
        // the spectrum only sees p mod q
        let (Some(pu), Some(qu)) = (p.mod_floor(&q).to_u64(), q.to_u64()) else {
            break;
        };
        let dist = ratio_to_f64(&(&cf.value - BigRational::new(p, q)).abs());
        let bound = continuity_bound(lambda, dist);
        if bound <= tol {
            let mut bands = band_set(lambda, pu, qu)?;
            bands.provenance = Provenance::Approximant {
                lambda,
                alpha,
                tolerance: tol,
            };
            return Ok(ApproxSpectrum {
                bands,
                p: pu,
                q: qu,
                distance: dist,
                error_bound: bound,
            });
        }
    }
    Err(Error::DeepenExpansion(format!(
        "no convergent among {} meets tolerance {tol}",
        cf.convergents.len() + 1
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ButterflyRow {
    pub p: u64,
    pub q: u64,
    pub band_index: usize,
    pub left: f64,
    pub right: f64,
}

/// All fractions `0 <= p/q <= 1` in lowest terms with `q <= q_max`, sorted
/// by `(q, p)`. Both endpoints `0/1` and `1/1` are included.
pub fn farey_fractions(q_max: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        for p in 0..=q {
            if p.gcd(&q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

/// Bands of `Sigma^{lambda, p/q}` for every fraction of
/// [`farey_fractions`], ordered by `(q, p, band_index)`. Fractions are
/// computed in parallel and collected in order.
pub fn butterfly_dataset(lambda: f64, q_max: u64) -> Result<Vec<ButterflyRow>> {
    if q_max == 0 {
        return Err(Error::InvalidInput("q_max must be at least 1".into()));
    }
    let per_fraction: Vec<Result<Vec<ButterflyRow>>> = farey_fractions(q_max)
        .into_par_iter()
        .map(|(p, q)| {
            let bands = band_set(lambda, p, q)?;
            Ok(bands
                .intervals
                .iter()
                .enumerate()
                .map(|(i, &(left, right))| ButterflyRow {
                    p,
                    q,
                    band_index: i,
                    left,
                    right,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_fraction {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IdsMode {
    /// Single phase.
    Fixed { omega: f64 },
    /// Average over `omega_j = j / grid`.
    PhaseAverage { grid: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct IdsReport {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub n: usize,
    pub mode: IdsMode,
}

/// Fraction of eigenvalues of `H` on `[0, n-1]` lying below each energy;
/// Sturm counts, no diagonalization.
pub fn ids_estimate<T: Real>(params: &Parameters<T>, energies: &[T], n: usize) -> Result<Vec<T>> {
    if n < 100 {
        return Err(Error::InvalidInput(format!("need N >= 100, got {n}")));
    }
    let d: Vec<T> = (0..n as i64).map(|m| potential(params, m)).collect();
    let e = vec![T::one(); n - 1];
    let nf = T::from_usize_lossy(n);
    Ok(energies
        .par_iter()
        .map(|&x| T::from_usize_lossy(sturm_count(&d, &e, x)) / nf)
        .collect())
}

/// [`ids_estimate`] in either mode, on `f64`.
pub fn ids_report(lambda: f64, alpha: f64, energies: &[f64], n: usize, mode: IdsMode) -> Result<IdsReport> {
    let values = match mode {
        IdsMode::Fixed { omega } => ids_estimate(&Parameters::new(lambda, alpha, omega)?, energies, n)?,
        IdsMode::PhaseAverage { grid } => {
            if grid == 0 {
                return Err(Error::InvalidInput("phase grid must be positive".into()));
            }
            let mut acc = vec![0.0; energies.len()];
            for j in 0..grid {
                let p = Parameters::new(lambda, alpha, j as f64 / grid as f64)?;
                for (a, v) in acc.iter_mut().zip(ids_estimate(&p, energies, n)?) {
                    *a += v;
                }
            }
            acc.into_iter().map(|a| a / grid as f64).collect()
        }
    };
    Ok(IdsReport {
        energies: energies.to_vec(),
        values,
        n,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::expand_continued_fraction;
    use crate::periodic::{gaps, hausdorff_distance};

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn golden_tolerance_selects_deep_convergent() {
        let cf = expand_continued_fraction(GOLDEN, 30).unwrap();
        let a = spectrum_approx(1.0, &cf, 0.05).unwrap();
        assert!(a.q >= 144, "q = {}", a.q);
        assert!(a.distance <= (0.05f64 / 6.0).powi(2) / 2.0);
        assert!(a.error_bound <= 0.05);
    }

    #[test]
    fn huge_tolerance_accepts_q1() {
        let cf = expand_continued_fraction(GOLDEN, 5).unwrap();
        let a = spectrum_approx(1.0, &cf, 6.0 * 2f64.sqrt()).unwrap();
        assert_eq!(a.q, 1);
        assert_eq!(a.bands.len(), 1);
    }

    #[test]
    fn shallow_expansion_is_reported() {
        let cf = expand_continued_fraction(GOLDEN, 3).unwrap();
        assert!(matches!(spectrum_approx(1.0, &cf, 1e-3), Err(Error::DeepenExpansion(_))));
    }

    #[test]
    fn successive_approximants_within_summed_bounds() {
        let cf = expand_continued_fraction(GOLDEN, 30).unwrap();
        let a = spectrum_approx(1.0, &cf, 0.6).unwrap();
        let b = spectrum_approx(1.0, &cf, 0.2).unwrap();
        let d = hausdorff_distance(&a.bands, &b.bands).unwrap();
        assert!(d <= a.error_bound + b.error_bound);
    }

    #[test]
    fn farey_counts() {
        assert_eq!(farey_fractions(1), vec![(0, 1), (1, 1)]);
        // |F_5| = 11
        assert_eq!(farey_fractions(5).len(), 11);
    }

    #[test]
    fn butterfly_q1() {
        let rows = butterfly_dataset(1.0, 1).unwrap();
        assert!(rows.iter().all(|r| r.q == 1 && (r.left + 4.0).abs() < 1e-12 && (r.right - 4.0).abs() < 1e-12));
    }

    #[test]
    fn butterfly_odd_q_band_counts() {
        let rows = butterfly_dataset(1.0, 9).unwrap();
        for (p, q) in farey_fractions(9) {
            let n = rows.iter().filter(|r| r.p == p && r.q == q).count() as u64;
            if q % 2 == 1 {
                assert_eq!(n, q, "{p}/{q}");
            } else {
                assert_eq!(n, q - 1, "{p}/{q}");
            }
        }
    }

    #[test]
    fn ids_is_monotone_and_bounded() {
        let p = Parameters::new(1.0, GOLDEN, 0.0).unwrap();
        let es: Vec<f64> = (0..=200).map(|i| -5.0 + 10.0 * i as f64 / 200.0).collect();
        let k = ids_estimate(&p, &es, 500).unwrap();
        assert_eq!(k[0], 0.0);
        assert_eq!(*k.last().unwrap(), 1.0);
        assert!(k.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ids_half_at_zero() {
        let p = Parameters::new(1.0, GOLDEN, 0.0).unwrap();
        let k = ids_estimate(&p, &[0.0], 2000).unwrap();
        assert!((k[0] - 0.5).abs() < 0.02);
    }

    #[test]
    fn ids_plateaus_on_approximant_gaps() {
        let n = 3000;
        let bands = band_set(1.0, 8, 13).unwrap();
        let p = Parameters::new(1.0, GOLDEN, 0.0).unwrap();
        for g in gaps(&bands).iter().filter(|g| g.length > 0.05) {
            // stay clear of the approximant's own Hausdorff error
            let pad = 0.2 * g.length;
            let k = ids_estimate(&p, &[g.left + pad, g.right - pad], n).unwrap();
            assert!((k[1] - k[0]).abs() <= 2.0 / n as f64, "{g:?}: {k:?}");
        }
    }

    #[test]
    fn ids_phase_average_mode_is_recorded() {
        let r = ids_report(1.0, GOLDEN, &[0.0], 200, IdsMode::PhaseAverage { grid: 4 }).unwrap();
        assert_eq!(r.mode, IdsMode::PhaseAverage { grid: 4 });
        assert!(ids_estimate(&Parameters::new(1.0, GOLDEN, 0.0).unwrap(), &[0.0], 99).is_err());
    }
}
