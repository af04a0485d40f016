//! Scalar abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Tolerances in this crate are stated for `f64`; the `f32` instantiation
/// compiles and runs but only the coarse checks are meaningful there.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        <Self as FromPrimitive>::from_i64(n).expect("integer representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("integer representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reduce an angle to `[0, 1)`.
#[inline]
pub fn frac<T: Real>(x: T) -> T {
    let r = x - x.floor();
    // floor can round `x - floor(x)` up to exactly 1 for tiny negative x
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

/// Fraction part of `omega + n * alpha`, computed with a fused multiply-add
/// after splitting off the integer part of `n * alpha`.
#[inline]
pub fn orbit_angle<T: Real>(omega: T, alpha: T, n: i64) -> T {
    let nf = T::from_i64_lossy(n);
    let prod = nf * alpha;
    let whole = prod.floor();
    // residual of n*alpha - whole recovered exactly by the fma
    let rem = nf.mul_add(alpha, -whole);
    frac(rem + omega)
}

/// Kahan-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Compensated<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum
    }
}

/// Pairwise (tree) summation. The reduction order depends only on the
/// slice length, so parallel maps that collect into a `Vec` first give
/// bit-identical totals regardless of scheduling.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n if n <= 8 => xs.iter().fold(T::zero(), |a, &b| a + b),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    pairwise_sum(xs) / T::from_usize_lossy(xs.len())
}

/// Population standard deviation.
pub fn std_dev<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let sq: Vec<T> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    (pairwise_sum(&sq) / T::from_usize_lossy(xs.len())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_stays_in_unit_interval() {
        for &x in &[-1e-300_f64, -0.25, 0.0, 0.999_999_999, 3.5, -7.75] {
            let r = frac(x);
            assert!((0.0..1.0).contains(&r), "{x} -> {r}");
        }
        assert_eq!(frac(-0.25_f64), 0.75);
    }

    #[test]
    fn orbit_angle_matches_exact_rational_orbit() {
        // alpha = 3/8 is exact in binary, so n*alpha mod 1 is known exactly
        for n in [-1_000_001_i64, -17, 0, 1, 5, 999_999_999] {
            let expect = ((n.rem_euclid(8) * 3) % 8) as f64 / 8.0;
            let got = orbit_angle(0.0_f64, 0.375, n);
            assert!((got - expect).abs() < 1e-12, "n={n}: {got} vs {expect}");
        }
    }

    #[test]
    fn pairwise_sum_is_order_stable() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs.clone());
        assert_eq!(a.to_bits(), b.to_bits());
        let naive: f64 = xs.iter().sum();
        assert!((a - naive).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_beats_naive_drift() {
        let mut c = Compensated::<f64>::new();
        let mut naive = 0.0;
        for _ in 0..1_000_000 {
            c.add(0.1);
            naive += 0.1;
        }
        assert!((c.value() - 100_000.0).abs() < 1e-9);
        assert!((naive - 100_000.0_f64).abs() > (c.value() - 100_000.0).abs());
    }
}
