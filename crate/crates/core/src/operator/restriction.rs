use serde::Serialize;

use super::{potential, Parameters};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tridiag::TridiagLu;

/// Relative pivot below which `E` is treated as an eigenvalue of a finite
/// restriction.
pub const SINGULAR_PIVOT: f64 = 1e-13;

/// `H` restricted to the integer interval `[n1, n2]`, Dirichlet boundary.
/// The off-diagonal is identically one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteRestriction<T> {
    n1: i64,
    diagonal: Vec<T>,
}

impl<T: Real> FiniteRestriction<T> {
    pub fn new(params: &Parameters<T>, n1: i64, n2: i64) -> Result<Self> {
        if n2 < n1 {
            return Err(Error::InvalidInput(format!("empty interval [{n1}, {n2}]")));
        }
        let diagonal = (n1..=n2).map(|n| potential(params, n)).collect();
        Ok(Self { n1, diagonal })
    }

    /// Restriction with an explicitly supplied diagonal.
    pub fn from_diagonal(n1: i64, diagonal: Vec<T>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(Error::InvalidInput("empty diagonal".into()));
        }
        Ok(Self { n1, diagonal })
    }

    pub fn n1(&self) -> i64 {
        self.n1
    }

    pub fn n2(&self) -> i64 {
        self.n1 + self.diagonal.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> Vec<T> {
        vec![T::one(); self.len().saturating_sub(1)]
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.n1 && n <= self.n2()
    }

    fn index(&self, n: i64) -> Result<usize> {
        if !self.contains(n) {
            return Err(Error::InvalidInput(format!(
                "site {n} outside [{}, {}]",
                self.n1,
                self.n2()
            )));
        }
        Ok((n - self.n1) as usize)
    }

    /// LU factorization of `H - E`, rejecting (numerically) singular `E`.
    pub fn factor(&self, energy: T) -> Result<TridiagLu<T>> {
        let shifted: Vec<T> = self.diagonal.iter().map(|&v| v - energy).collect();
        let ones = self.off_diagonal();
        let lu = TridiagLu::factor(&ones, &shifted, &ones);
        lu.check_nonsingular(T::lit(SINGULAR_PIVOT))?;
        Ok(lu)
    }

    /// Column `m` of `(H - E)^{-1}`, indexed by site offset from `n1`.
    pub fn green_column(&self, energy: T, m: i64) -> Result<Vec<T>> {
        let lu = self.factor(energy)?;
        self.green_column_with(&lu, m)
    }

    pub fn green_column_with(&self, lu: &TridiagLu<T>, m: i64) -> Result<Vec<T>> {
        let j = self.index(m)?;
        let mut x = vec![T::zero(); self.len()];
        x[j] = T::one();
        lu.solve_in_place(&mut x, T::zero());
        Ok(x)
    }
}

/// `G(n, m; E) = <delta_n, (H_[n1,n2] - E)^{-1} delta_m>`.
pub fn green_function<T: Real>(
    restriction: &FiniteRestriction<T>,
    energy: T,
    n: i64,
    m: i64,
) -> Result<T> {
    let i = restriction.index(n)?;
    let col = restriction.green_column(energy, m)?;
    Ok(col[i])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularWindow {
    pub n1: i64,
    pub n2: i64,
    pub green_left: f64,
    pub green_right: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Regularity {
    Regular(RegularWindow),
    Singular { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub site: i64,
    pub k: usize,
    pub gamma: f64,
    pub regularity: Regularity,
    /// Windows skipped because `E` is an eigenvalue of the restriction.
    pub skipped_windows: Vec<i64>,
    pub windows_tested: usize,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        matches!(self.regularity, Regularity::Regular(_))
    }
}

/// Left endpoints `n1` of the windows `[n1, n1 + k - 1]` that contain `n`
/// and keep `n` more than `k/5` away from both edges, ordered by distance of
/// the window centre from `n` (ties: smaller `n1` first).
pub fn admissible_windows(n: i64, k: usize) -> Vec<i64> {
    let k = k as i64;
    let mut out: Vec<i64> = (n - k + 1..=n)
        .filter(|&n1| {
            let n2 = n1 + k - 1;
            5 * (n - n1) > k && 5 * (n2 - n) > k
        })
        .collect();
    out.sort_by_key(|&n1| ((2 * (n1 - n) + k - 1).abs(), n1));
    out
}

/// Decide whether `n` is `(gamma, k)`-regular at energy `E`: some admissible
/// window has `|G(n, n_i; E)| < exp(-gamma |n - n_i|)` at both edges. The
/// first witness in [`admissible_windows`] order is returned.
pub fn classify_regular<T: Real>(
    params: &Parameters<T>,
    energy: T,
    gamma: T,
    k: usize,
    n: i64,
) -> Result<RegularityReport> {
    if !(gamma > T::zero()) {
        return Err(Error::InvalidInput("gamma must be positive".into()));
    }
    if k < 5 {
        return Err(Error::InvalidInput("window length k must be at least 5".into()));
    }
    let windows = admissible_windows(n, k);
    let mut skipped = Vec::new();
    let mut tested = 0;
    for &n1 in &windows {
        let n2 = n1 + k as i64 - 1;
        let r = FiniteRestriction::new(params, n1, n2)?;
        let lu = match r.factor(energy) {
            Ok(lu) => lu,
            Err(Error::Singular { .. }) => {
                skipped.push(n1);
                continue;
            }
            Err(e) => return Err(e),
        };
        tested += 1;
        let i = (n - n1) as usize;
        let g_left = r.green_column_with(&lu, n1)?[i].abs();
        let g_right = r.green_column_with(&lu, n2)?[i].abs();
        let bound = |d: i64| (-gamma * T::from_i64_lossy(d)).exp();
        if g_left < bound(n - n1) && g_right < bound(n2 - n) {
            return Ok(RegularityReport {
                site: n,
                k,
                gamma: gamma.to_f64_lossy(),
                regularity: Regularity::Regular(RegularWindow {
                    n1,
                    n2,
                    green_left: g_left.to_f64_lossy(),
                    green_right: g_right.to_f64_lossy(),
                }),
                skipped_windows: skipped,
                windows_tested: tested,
            });
        }
    }
    let reason = if windows.is_empty() {
        "no admissible window".to_string()
    } else if tested == 0 {
        "every admissible window is singular at E".to_string()
    } else {
        format!("no window among {tested} with Green's function decay at both edges")
    };
    Ok(RegularityReport {
        site: n,
        k,
        gamma: gamma.to_f64_lossy(),
        regularity: Regularity::Singular { reason },
        skipped_windows: skipped,
        windows_tested: tested,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{determinant_poly, solve_forward};
    use proptest::prelude::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn one_site_green_is_scalar_inverse() {
        let p = Parameters::new(1.3, GOLDEN, 0.2).unwrap();
        let r = FiniteRestriction::new(&p, 0, 0).unwrap();
        let e = 0.123;
        let g = green_function(&r, e, 0, 0).unwrap();
        assert!((g - 1.0 / (potential(&p, 0) - e)).abs() < 1e-14);
    }

    #[test]
    fn green_is_singular_at_restriction_eigenvalue() {
        let p = Parameters::new(1.3, GOLDEN, 0.2).unwrap();
        let r = FiniteRestriction::new(&p, 0, 0).unwrap();
        let e = potential(&p, 0);
        assert!(matches!(
            green_function(&r, e, 0, 0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn k5_has_single_centered_window() {
        assert_eq!(admissible_windows(10, 5), vec![8]);
        for &n1 in &admissible_windows(0, 23) {
            let n2 = n1 + 22;
            assert!(-5 * n1 > 23 && 5 * n2 > 23);
        }
    }

    #[test]
    fn window_order_is_by_center_offset() {
        let w = admissible_windows(0, 11);
        let off: Vec<i64> = w.iter().map(|&n1| (2 * n1 + 10).abs()).collect();
        assert!(off.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn rejects_bad_regularity_inputs() {
        let p = Parameters::new(3.0, GOLDEN, 0.0).unwrap();
        assert!(classify_regular(&p, 0.0, 1.0, 4, 0).is_err());
        assert!(classify_regular(&p, 0.0, 0.0, 10, 0).is_err());
    }

    proptest! {
        #[test]
        fn green_symmetry(
            l in 0.2..3.0f64, w in 0.0..1.0f64, e in -5.0..5.0f64,
            len in 2i64..25, a in 0i64..25, b in 0i64..25,
        ) {
            let p = Parameters::new(l, GOLDEN, w).unwrap();
            let r = FiniteRestriction::new(&p, -3, -3 + len - 1).unwrap();
            let (n, m) = (-3 + a % len, -3 + b % len);
            if let (Ok(x), Ok(y)) = (green_function(&r, e, n, m), green_function(&r, e, m, n)) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn boundary_identity(
            l in 0.2..3.0f64, w in 0.0..1.0f64, e in -5.0..5.0f64,
            u0 in -1.0..1.0f64, u1 in -1.0..1.0f64, len in 1i64..20, off in 0i64..20,
        ) {
            let p = Parameters::new(l, GOLDEN, w).unwrap();
            // u on [0, len + 1]; restriction [1, len]
            let u = solve_forward(&p, e, u0, u1, (len + 1) as usize);
            let r = FiniteRestriction::new(&p, 1, len).unwrap();
            let n = 1 + off % len;
            if let Ok(lu) = r.factor(e) {
                let gl = r.green_column_with(&lu, 1).unwrap()[(n - 1) as usize];
                let gr = r.green_column_with(&lu, len).unwrap()[(n - 1) as usize];
                let rhs = -gl * u[0] - gr * u[(len + 1) as usize];
                let scale = (gl * u[0]).abs() + (gr * u[(len + 1) as usize]).abs() + u[n as usize].abs();
                prop_assert!((u[n as usize] - rhs).abs() <= 1e-9 * scale.max(1e-300));
            }
        }

        #[test]
        fn cramer_ratio_matches_lu(
            l in 0.2..3.0f64, w in 0.0..1.0f64, e in -5.0..5.0f64,
            k in 1i64..18, n1 in -5i64..5, off in 0i64..18,
        ) {
            let p = Parameters::new(l, GOLDEN, w).unwrap();
            let n2 = n1 + k - 1;
            let n = n1 + off % k;
            let r = FiniteRestriction::new(&p, n1, n2).unwrap();
            if let Ok(g) = green_function(&r, e, n1, n) {
                let num = determinant_poly(&p.shifted(n + 1), e, (n2 - n) as usize);
                let den = determinant_poly(&p.shifted(n1), e, k as usize);
                let ratio = (num / den).abs();
                prop_assert!((g.abs() - ratio).abs() <= 1e-7 * (1.0 + ratio));
                let g2 = green_function(&r, e, n, n2).unwrap();
                let num2 = determinant_poly(&p.shifted(n1), e, (n - n1) as usize);
                let ratio2 = (num2 / den).abs();
                prop_assert!((g2.abs() - ratio2).abs() <= 1e-7 * (1.0 + ratio2));
            }
        }
    }
}
