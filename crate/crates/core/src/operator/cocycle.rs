use serde::Serialize;

use super::{potential, Mat2, Parameters};
use crate::scalar::{Compensated, Real};

/// Steps between renormalizations of long transfer products.
pub const RENORM_CADENCE: usize = 64;

/// `T_E(m, omega) = [[E - V(m), -1], [1, 0]]`.
#[inline]
pub fn transfer_step<T: Real>(params: &Parameters<T>, energy: T, m: i64) -> Mat2<T> {
    Mat2::new(energy - potential(params, m), -T::one(), T::one(), T::zero())
}

/// Raw product `M_E(n, omega) = T_E(n) ... T_E(1)`, identity for `n = 0`.
///
/// No renormalization: entries grow like `(|E| + 2 lambda + 1)^n`, so this is
/// only valid while that stays below the floating-point range (a few hundred
/// steps in `f64`). Use [`monodromy_renormalized`] for long products.
pub fn monodromy<T: Real>(params: &Parameters<T>, energy: T, n: usize) -> Mat2<T> {
    monodromy_from_steps(n, |m| transfer_step(params, energy, m))
}

/// Product `step(n) ... step(1)` for an arbitrary step function.
pub fn monodromy_from_steps<T: Real, F>(n: usize, mut step: F) -> Mat2<T>
where
    F: FnMut(i64) -> Mat2<T>,
{
    let mut m = Mat2::identity();
    for j in 1..=n as i64 {
        m = step(j) * m;
    }
    m
}

/// Long transfer product stored as `exp(log_scale) * matrix`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Monodromy<T> {
    pub matrix: Mat2<T>,
    pub log_scale: T,
    pub steps: usize,
}

impl<T: Real> Monodromy<T> {
    /// `log ||M_E(n, omega)||`.
    pub fn log_norm(&self) -> T {
        self.log_scale + self.matrix.norm().ln()
    }

    /// Recover the unscaled matrix; overflows when `log_scale` is large.
    pub fn raw(&self) -> Mat2<T> {
        self.matrix.scale(self.log_scale.exp())
    }
}

/// `M_E(n, omega)` with renormalization by the running max-entry every
/// [`RENORM_CADENCE`] steps; the scale factors are accumulated in
/// compensated summation.
pub fn monodromy_renormalized<T: Real>(
    params: &Parameters<T>,
    energy: T,
    n: usize,
) -> Monodromy<T> {
    let mut m = Mat2::identity();
    let mut log_scale = Compensated::new();
    for j in 1..=n {
        m = transfer_step(params, energy, j as i64) * m;
        if j % RENORM_CADENCE == 0 {
            let s = m.max_abs();
            m = m.scale(s.recip());
            log_scale.add(s.ln());
        }
    }
    let s = m.max_abs();
    if s > T::one() {
        m = m.scale(s.recip());
        log_scale.add(s.ln());
    }
    Monodromy {
        matrix: m,
        log_scale: log_scale.value(),
        steps: n,
    }
}

/// Solution of `u(n+1) + u(n-1) + V(n) u(n) = E u(n)` with `u(0) = u0`,
/// `u(1) = u1`; returns `u(0..=n_max)`.
pub fn solve_forward<T: Real>(
    params: &Parameters<T>,
    energy: T,
    u0: T,
    u1: T,
    n_max: usize,
) -> Vec<T> {
    let mut u = Vec::with_capacity(n_max + 1);
    u.push(u0);
    if n_max == 0 {
        return u;
    }
    u.push(u1);
    for n in 1..n_max {
        let next = (energy - potential(params, n as i64)) * u[n] - u[n - 1];
        u.push(next);
    }
    u
}

/// Backward continuation from `u(0) = u0`, `u(1) = u1`; returns
/// `u(0), u(-1), ..., u(-n_max)`.
pub fn solve_backward<T: Real>(
    params: &Parameters<T>,
    energy: T,
    u0: T,
    u1: T,
    n_max: usize,
) -> Vec<T> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(u0);
    let (mut next, mut cur) = (u1, u0);
    for n in 0..n_max as i64 {
        // u(n-1) = (E - V(n)) u(n) - u(n+1) at site -n
        let prev = (energy - potential(params, -n)) * cur - next;
        out.push(prev);
        next = cur;
        cur = prev;
    }
    out
}

/// `P_k(omega, E) = det((H - E) restricted to [0, k-1])` by the three-term
/// recurrence. `P_0 = 1`.
pub fn determinant_poly<T: Real>(params: &Parameters<T>, energy: T, k: usize) -> T {
    *determinant_run(params, energy, k).last().expect("nonempty")
}

/// `[P_0, P_1, ..., P_k]` at the phase of `params`.
pub fn determinant_run<T: Real>(params: &Parameters<T>, energy: T, k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(T::one());
    let (mut prev, mut cur) = (T::zero(), T::one());
    for j in 0..k {
        let next = (potential(params, j as i64) - energy) * cur - prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// The transfer matrix rebuilt from determinants of finite restrictions.
///
/// With `M_E(k, omega) = T_E(k) ... T_E(1)` acting on sites `1..=k`:
///
/// ```text
/// M_E(k, w) = [[ (-1)^k     P_k(w+a),   (-1)^k     P_{k-1}(w+2a) ],
///              [ (-1)^(k-1) P_{k-1}(w+a), (-1)^(k-1) P_{k-2}(w+2a) ]]
/// ```
///
/// with `P_0 = 1`, `P_{-1} = 0`. This is an independent route to the
/// monodromy used to cross-check the transfer products.
pub fn transfer_from_determinants<T: Real>(params: &Parameters<T>, energy: T, k: usize) -> Mat2<T> {
    assert!(k >= 1, "k >= 1");
    let from1 = determinant_run(&params.shifted(1), energy, k);
    let from2 = determinant_run(&params.shifted(2), energy, k.saturating_sub(1));
    let p = |run: &[T], j: isize| if j < 0 { T::zero() } else { run[j as usize] };
    let sign = if k.is_multiple_of(2) { T::one() } else { -T::one() };
    let k = k as isize;
    Mat2::new(
        sign * p(&from1, k),
        sign * p(&from2, k - 1),
        -sign * p(&from1, k - 1),
        -sign * p(&from2, k - 2),
    )
}
