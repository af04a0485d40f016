//! The almost Mathieu operator
//! `(H u)(n) = u(n+1) + u(n-1) + 2 lambda cos(2 pi (omega + n alpha)) u(n)`:
//! potential sampling, the transfer-matrix cocycle, determinant polynomials,
//! finite restrictions with their Green's functions, and `(gamma, k)`
//! regularity of sites.

mod cocycle;
mod mat2;
mod restriction;

pub use cocycle::{
    determinant_poly, determinant_run, monodromy, monodromy_from_steps, monodromy_renormalized,
    solve_backward, solve_forward, transfer_from_determinants, transfer_step, Monodromy,
    RENORM_CADENCE,
};
pub use mat2::Mat2;
pub use restriction::{
    admissible_windows, classify_regular, green_function, FiniteRestriction, Regularity, RegularityReport,
    RegularWindow, SINGULAR_PIVOT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{frac, orbit_angle, Real};

/// Coupling, frequency and phase. Angles are stored reduced mod 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters<T> {
    pub lambda: T,
    pub alpha: T,
    pub omega: T,
}

impl<T: Real> Parameters<T> {
    pub fn new(lambda: T, alpha: T, omega: T) -> Result<Self> {
        if !(lambda.is_finite() && alpha.is_finite() && omega.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        if lambda <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "coupling must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            lambda,
            alpha: frac(alpha),
            omega: frac(omega),
        })
    }

    /// Same operator with the coupling check relaxed to `lambda >= 0`; used
    /// only to build free-Laplacian fixtures.
    pub fn new_unchecked(lambda: T, alpha: T, omega: T) -> Self {
        Self {
            lambda,
            alpha: frac(alpha),
            omega: frac(omega),
        }
    }

    /// The phase-shifted operator: `omega -> omega + n alpha`.
    pub fn shifted(&self, n: i64) -> Self {
        Self {
            omega: orbit_angle(self.omega, self.alpha, n),
            ..*self
        }
    }

    pub fn with_omega(&self, omega: T) -> Self {
        Self {
            omega: frac(omega),
            ..*self
        }
    }

    pub fn with_lambda(&self, lambda: T) -> Self {
        Self { lambda, ..*self }
    }

    /// Crude operator-norm bound `2 + 2 lambda`.
    pub fn norm_bound(&self) -> T {
        T::lit(2.0) + T::lit(2.0) * self.lambda
    }
}

/// `V(n) = 2 lambda cos(2 pi (omega + n alpha))`, with `omega + n alpha`
/// reduced mod 1 before the cosine.
#[inline]
pub fn potential<T: Real>(params: &Parameters<T>, n: i64) -> T {
    let theta = orbit_angle(params.omega, params.alpha, n);
    T::lit(2.0) * params.lambda * (T::two_pi() * theta).cos()
}
