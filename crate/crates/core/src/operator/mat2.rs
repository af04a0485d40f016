use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Real 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> Mat2<T> {
    #[inline]
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self { a, b, c, d }
    }

    #[inline]
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    #[inline]
    pub fn trace(&self) -> T {
        self.a + self.d
    }

    /// Spectral norm in closed form: half the sum of the norms of the
    /// conformal and anti-conformal parts. No cancellation for unimodular
    /// matrices of large norm.
    #[inline]
    pub fn norm(&self) -> T {
        let two = T::lit(2.0);
        let p = (self.a + self.d).hypot(self.c - self.b);
        let q = (self.a - self.d).hypot(self.b + self.c);
        (p + q) / two
    }

    #[inline]
    pub fn max_abs(&self) -> T {
        self.a.abs().max(self.b.abs()).max(self.c.abs().max(self.d.abs()))
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    #[inline]
    pub fn apply(&self, x: [T; 2]) -> [T; 2] {
        [self.a * x[0] + self.b * x[1], self.c * x[0] + self.d * x[1]]
    }

    /// Inverse via the adjugate, dividing by the actual determinant.
    #[inline]
    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    /// Inverse of a matrix known to be unimodular: the plain adjugate.
    #[inline]
    pub fn inverse_unimodular(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    #[inline]
    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    pub fn to_f64(&self) -> Mat2<f64> {
        Mat2::new(
            self.a.to_f64_lossy(),
            self.b.to_f64_lossy(),
            self.c.to_f64_lossy(),
            self.d.to_f64_lossy(),
        )
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Mat2<T>;

    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_norm(m: &Mat2<f64>) -> f64 {
        // largest singular value from the eigenvalues of M^T M
        let p = m.a * m.a + m.c * m.c;
        let q = m.a * m.b + m.c * m.d;
        let r = m.b * m.b + m.d * m.d;
        let tr = p + r;
        let det = p * r - q * q;
        ((tr + (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    #[test]
    fn rotation_has_unit_norm() {
        let m = Mat2::new(0.0_f64, -1.0, 1.0, 0.0);
        assert!((m.norm() - 1.0).abs() < 1e-15);
        assert_eq!(m.det(), 1.0);
    }

    proptest! {
        #[test]
        fn closed_form_norm_matches_gram_eigenvalue(
            a in -10.0..10.0f64, b in -10.0..10.0f64,
            c in -10.0..10.0f64, d in -10.0..10.0f64,
        ) {
            let m = Mat2::new(a, b, c, d);
            let n = m.norm();
            prop_assert!((n - brute_norm(&m)).abs() <= 1e-9 * (1.0 + n));
        }

        #[test]
        fn adjugate_inverts(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
            prop_assume!(a.abs() > 1e-3);
            // d chosen so that det = 1
            let d = (1.0 + b * c) / a;
            let m = Mat2::new(a, b, c, d);
            let p = m * m.inverse_unimodular();
            prop_assert!(p.sub(&Mat2::identity()).max_abs() < 1e-9 * (1.0 + m.max_abs().powi(2)));
        }
    }
}
