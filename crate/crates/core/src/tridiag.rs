//! Symmetric tridiagonal kernels: Sturm counts, bisection, LU with partial
//! pivoting, and inverse iteration.
//!
//! Matrices are given by their diagonal `d[0..n]` and off-diagonal
//! `e[0..n-1]`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of eigenvalues strictly below `x`, from the signs of the
/// `LDL^T` pivots of `T - x`.
pub fn sturm_count<T: Real>(d: &[T], e: &[T], x: T) -> usize {
    let n = d.len();
    if n == 0 {
        return 0;
    }
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0..n {
        if i > 0 {
            let qs = if q.abs() < tiny { tiny.copysign(q) } else { q };
            q = (d[i] - x) - e[i - 1] * e[i - 1] / qs;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Gershgorin enclosure of the spectrum.
pub fn gershgorin<T: Real>(d: &[T], e: &[T]) -> (T, T) {
    let n = d.len();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { T::zero() }
            + if i + 1 < n { e[i].abs() } else { T::zero() };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm
/// count, to absolute tolerance `tol`.
pub fn kth_eigenvalue<T: Real>(d: &[T], e: &[T], k: usize, bounds: (T, T), tol: T) -> T {
    let (mut lo, mut hi) = bounds;
    let half = T::lit(0.5);
    // (lo, hi] always contains eigenvalue k: count(lo) <= k < count(hi)
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo + (hi - lo) * half
}

/// Eigenvalues with index in `[lo_idx, hi_idx)`, ascending.
pub fn eigenvalues_in_range<T: Real>(d: &[T], e: &[T], lo_idx: usize, hi_idx: usize, tol: T) -> Vec<T> {
    let (a, b) = gershgorin(d, e);
    let pad = T::lit(1e-3) * (T::one() + a.abs().max(b.abs()));
    let bounds = (a - pad, b + pad);
    (lo_idx..hi_idx)
        .map(|k| kth_eigenvalue(d, e, k, bounds, tol))
        .collect()
}

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (row interchanges produce one extra superdiagonal of fill).
#[derive(Clone, Debug)]
pub struct TridiagLu<T> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
    /// Smallest |pivot| relative to the matrix scale.
    pub min_relative_pivot: T,
    pub min_pivot_row: usize,
}

impl<T: Real> TridiagLu<T> {
    /// Factor the matrix with subdiagonal `sub`, diagonal `diag`,
    /// superdiagonal `sup`.
    pub fn factor(sub: &[T], diag: &[T], sup: &[T]) -> Self {
        let n = diag.len();
        assert!(n >= 1 && sub.len() + 1 == n && sup.len() + 1 == n);
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let scale = diag
            .iter()
            .chain(sub)
            .chain(sup)
            .fold(T::zero(), |m, x| m.max(x.abs()))
            .max(T::min_positive_value());
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != T::zero() {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] = d[i + 1] - fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let (mut min_rel, mut row) = (T::infinity(), 0);
        for (i, p) in d.iter().enumerate() {
            let r = p.abs() / scale;
            if r < min_rel {
                min_rel = r;
                row = i;
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
            min_relative_pivot: min_rel,
            min_pivot_row: row,
        }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Error if the smallest relative pivot is below `threshold`.
    pub fn check_nonsingular(&self, threshold: T) -> Result<()> {
        if self.min_relative_pivot < threshold {
            Err(Error::Singular {
                row: self.min_pivot_row,
                pivot: self.min_relative_pivot.to_f64_lossy(),
            })
        } else {
            Ok(())
        }
    }

    /// Solve in place. Zero pivots are replaced by `floor` (inverse
    /// iteration wants the huge-but-finite result).
    pub fn solve_in_place(&self, b: &mut [T], floor: T) {
        let n = self.d.len();
        assert_eq!(b.len(), n);
        for i in 0..n.saturating_sub(1) {
            if !self.swapped[i] {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            } else {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            }
        }
        let piv = |p: T| if p.abs() < floor { floor.copysign(p) } else { p };
        b[n - 1] = b[n - 1] / piv(self.d[n - 1]);
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / piv(self.d[n - 2]);
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / piv(self.d[i]);
        }
    }
}

/// `||(T - x) v||_2`.
pub fn residual_norm<T: Real>(d: &[T], e: &[T], x: T, v: &[T]) -> T {
    let n = d.len();
    let mut s = T::zero();
    for i in 0..n {
        let mut r = (d[i] - x) * v[i];
        if i > 0 {
            r = r + e[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            r = r + e[i] * v[i + 1];
        }
        s = s + r * r;
    }
    s.sqrt()
}

pub fn normalize<T: Real>(v: &mut [T]) -> T {
    let n = v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    if n > T::zero() {
        for x in v.iter_mut() {
            *x = *x / n;
        }
    }
    n
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Outcome of inverse iteration for one eigenvalue.
#[derive(Clone, Debug)]
pub struct InverseIteration<T> {
    pub vector: Vec<T>,
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Inverse iteration for the eigenvector of `eigenvalue`, orthogonalized
/// against `deflate` (eigenvectors already found for numerically
/// coincident eigenvalues).
pub fn inverse_iteration<T: Real>(
    d: &[T],
    e: &[T],
    eigenvalue: T,
    start: &[T],
    deflate: &[&[T]],
    tol: T,
    max_iter: usize,
) -> InverseIteration<T> {
    let shifted: Vec<T> = d.iter().map(|&x| x - eigenvalue).collect();
    let lu = TridiagLu::factor(e, &shifted, e);
    let scale = shifted
        .iter()
        .chain(e)
        .fold(T::zero(), |m, x| m.max(x.abs()))
        .max(T::one());
    let floor = T::epsilon() * scale;
    let mut v = start.to_vec();
    let orth = |v: &mut Vec<T>| {
        for w in deflate {
            let c = dot(v, w);
            for (x, y) in v.iter_mut().zip(w.iter()) {
                *x = *x - c * *y;
            }
        }
    };
    orth(&mut v);
    normalize(&mut v);
    let mut residual = T::infinity();
    for it in 1..=max_iter {
        lu.solve_in_place(&mut v, floor);
        orth(&mut v);
        if normalize(&mut v) == T::zero() || v.iter().any(|x| !x.is_finite()) {
            break;
        }
        residual = residual_norm(d, e, eigenvalue, &v);
        if residual < tol && it >= 2 {
            return InverseIteration {
                vector: v,
                residual,
                iterations: it,
                converged: true,
            };
        }
    }
    InverseIteration {
        vector: v,
        residual,
        iterations: max_iter,
        converged: false,
    }
}
