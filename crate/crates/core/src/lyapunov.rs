//! Lyapunov-exponent estimators and the subharmonicity check behind the
//! lower bound `gamma(E) >= log lambda`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{monodromy_renormalized, transfer_step, Mat2, Parameters, RENORM_CADENCE};
use crate::scalar::{mean, orbit_angle, pairwise_sum, std_dev, Compensated, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Orbit,
    PhaseAverage,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LyapunovEstimate<T> {
    /// Nats per step.
    pub value: T,
    pub n_steps: usize,
    pub method: Method,
    /// Empirical spread; no finite-n error theory is implied.
    pub stderr: T,
}

const ORBIT_BLOCKS: usize = 16;

/// `(1/n) log ||M_E(n, omega)||` along one orbit.
///
/// `stderr` is the standard error of the growth rates of 16 equal blocks
/// of the product.
pub fn lyapunov_orbit<T: Real>(params: &Parameters<T>, energy: T, n: usize) -> Result<LyapunovEstimate<T>> {
    if n < 1000 {
        return Err(Error::InvalidInput(format!("orbit estimate needs n >= 1000, got {n}")));
    }
    if !energy.is_finite() {
        return Err(Error::NonFinite("energy"));
    }
    let block = n / ORBIT_BLOCKS;
    let mut rates = Vec::with_capacity(ORBIT_BLOCKS);
    let mut prev = T::zero();
    // one pass; block boundaries are read off the running product
    let mut m = Mat2::identity();
    let mut log_scale = Compensated::new();
    for j in 1..=n {
        m = transfer_step(params, energy, j as i64) * m;
        if j % RENORM_CADENCE == 0 {
            let s = m.max_abs();
            m = m.scale(s.recip());
            log_scale.add(s.ln());
        }
        if j % block == 0 && rates.len() < ORBIT_BLOCKS {
            let now = log_scale.value() + m.norm().ln();
            rates.push((now - prev) / T::from_usize_lossy(block));
            prev = now;
        }
    }
    let value = (log_scale.value() + m.norm().ln()) / T::from_usize_lossy(n);
    let stderr = std_dev(&rates) / T::from_usize_lossy(rates.len()).sqrt();
    Ok(LyapunovEstimate {
        value,
        n_steps: n,
        method: Method::Orbit,
        stderr,
    })
}

/// Average of `(1/n) log ||M_E(n, omega_j)||` over `omega_j = j / grid`.
///
/// By the infimum characterization of `gamma` this estimates an upper bound
/// on `gamma(E)` (up to quadrature error). `stderr` is the standard
/// deviation of the per-phase values. The phase map runs in parallel and is
/// reduced in a fixed order.
pub fn lyapunov_phase_average<T: Real>(
    lambda: T,
    alpha: T,
    energy: T,
    n: usize,
    grid: usize,
) -> Result<LyapunovEstimate<T>> {
    if grid < 64 {
        return Err(Error::InvalidInput(format!("phase grid must be >= 64, got {grid}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let base = Parameters::new(lambda, alpha, T::zero())?;
    let nf = T::from_usize_lossy(n);
    let per_phase: Vec<T> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let p = base.with_omega(T::from_usize_lossy(j) / T::from_usize_lossy(grid));
            monodromy_renormalized(&p, energy, n).log_norm() / nf
        })
        .collect();
    Ok(LyapunovEstimate {
        value: mean(&per_phase),
        n_steps: n,
        method: Method::PhaseAverage,
        stderr: std_dev(&per_phase),
    })
}

/// Both sides of `int log ||N_n(e^{2 pi i omega})|| d omega >= log ||N_n(0)||`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HermanReport {
    /// Grid average of `log ||N_n(e^{2 pi i omega})||`.
    pub lhs: f64,
    /// `log ||N_n(0)||`, which is `n log lambda`.
    pub rhs: f64,
    pub margin: f64,
    /// `max_j | log ||N_n(e^{2 pi i omega_j})|| - log ||M_E(n, omega_j)|| |`.
    pub identity_error: f64,
    /// `| log ||N_n(0)|| - n log lambda |`.
    pub origin_error: f64,
    pub n: usize,
    pub grid: usize,
}

/// Products are raw; `n` is capped so `N_n(0)` stays meaningful.
pub const HERMAN_MAX_STEPS: usize = 200;

type C2<T> = [[Complex<T>; 2]; 2];

fn cmul<T: Real>(x: &C2<T>, y: &C2<T>) -> C2<T> {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

/// Largest singular value of a complex 2x2 matrix, as a log.
fn log_norm_c2<T: Real>(m: &C2<T>) -> T {
    let s = m
        .iter()
        .flatten()
        .fold(T::zero(), |a, z| a.max(z.norm()));
    if s == T::zero() {
        return T::neg_infinity();
    }
    let u: Vec<Complex<T>> = m.iter().flatten().map(|z| z / s).collect();
    let fro: T = u.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
    let det = (u[0] * u[3] - u[1] * u[2]).norm();
    let disc = (fro * fro - T::lit(4.0) * det * det).max(T::zero()).sqrt();
    ((fro + disc) / T::lit(2.0)).sqrt().ln() + s.ln()
}

/// `N_n(w) = prod_{m = n..1} w T_E(m)` with the cosine written through
/// `w = e^{2 pi i omega}`, which makes every factor polynomial in `w`.
pub fn herman_product<T: Real>(lambda: T, alpha: T, energy: T, n: usize, w: Complex<T>) -> [[Complex<T>; 2]; 2] {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let mut acc: C2<T> = [[one, zero], [zero, one]];
    for m in 1..=n as i64 {
        let ph = Complex::from_polar(
            T::one(),
            T::two_pi() * orbit_angle(T::zero(), alpha, m),
        );
        let top = w * energy - (ph * w * w + ph.conj()) * lambda;
        let step: C2<T> = [[top, -w], [w, zero]];
        acc = cmul(&step, &acc);
    }
    acc
}

/// Evaluate both sides of the subharmonic inequality on `omega_j = j/grid`.
pub fn herman_subharmonic_check(
    lambda: f64,
    alpha: f64,
    energy: f64,
    n: usize,
    grid: usize,
) -> Result<HermanReport> {
    if n == 0 || n > HERMAN_MAX_STEPS {
        return Err(Error::InvalidInput(format!(
            "herman check needs 1 <= n <= {HERMAN_MAX_STEPS}, got {n}"
        )));
    }
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be positive".into()));
    }
    let base = Parameters::new(lambda, alpha, 0.0)?;
    let samples: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let omega = j as f64 / grid as f64;
            let w = Complex::from_polar(1.0, std::f64::consts::TAU * omega);
            let ln_n = log_norm_c2(&herman_product(lambda, base.alpha, energy, n, w));
            let ln_m = monodromy_renormalized(&base.with_omega(omega), energy, n).log_norm();
            (ln_n, (ln_n - ln_m).abs())
        })
        .collect();
    let lns: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let lhs = pairwise_sum(&lns) / grid as f64;
    let rhs = n as f64 * lambda.ln();
    let at_zero = log_norm_c2(&herman_product(lambda, base.alpha, energy, n, Complex::new(0.0, 0.0)));
    Ok(HermanReport {
        lhs,
        rhs,
        margin: lhs - rhs,
        identity_error: samples.iter().fold(0.0, |a, s| a.max(s.1)),
        origin_error: (at_zero - rhs).abs(),
        n,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn large_energy_rate_is_log_e() {
        let p = Parameters::new(1.0, GOLDEN, 0.3).unwrap();
        let est = lyapunov_orbit(&p, 1000.0, 20_000).unwrap();
        assert!((est.value - 1000f64.ln()).abs() < 0.01 * 1000f64.ln());
    }

    #[test]
    fn orbit_supercritical_matches_log_lambda() {
        // E = 0 lies in the spectrum for every lambda by symmetry
        let p = Parameters::new(2.0, GOLDEN, 0.1).unwrap();
        let est = lyapunov_orbit(&p, 0.0, 100_000).unwrap();
        assert!((est.value - 2f64.ln()).abs() < 0.05, "{est:?}");
        let twice = lyapunov_orbit(&p, 0.0, 200_000).unwrap();
        assert!((twice.value - est.value).abs() < 3.0 * est.stderr.max(twice.stderr));
    }

    #[test]
    fn orbit_rejects_short_runs() {
        let p = Parameters::new(2.0, GOLDEN, 0.1).unwrap();
        assert!(lyapunov_orbit(&p, 0.0, 999).is_err());
    }

    #[test]
    fn phase_average_respects_lower_bound() {
        let est = lyapunov_phase_average(3.0, GOLDEN, 1.7, 10_000, 256).unwrap();
        assert!(est.value >= 3f64.ln() - 0.02);
        assert!(est.value >= -1e-6);
    }

    #[test]
    fn critical_coupling_is_near_zero() {
        let est = lyapunov_phase_average(1.0, GOLDEN, 0.0, 10_000, 256).unwrap();
        assert!(est.value.abs() < 0.05, "{est:?}");
    }

    #[test]
    fn phase_grid_refinement_is_stable() {
        let a = lyapunov_phase_average(2.0, GOLDEN, 0.5, 2000, 256).unwrap();
        let b = lyapunov_phase_average(2.0, GOLDEN, 0.5, 2000, 512).unwrap();
        assert!((a.value - b.value).abs() < 1e-3);
    }

    #[test]
    fn phase_average_deterministic() {
        let a = lyapunov_phase_average(1.5, GOLDEN, 0.2, 1000, 128).unwrap();
        let b = lyapunov_phase_average(1.5, GOLDEN, 0.2, 1000, 128).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn phase_average_f32_instantiation() {
        let est = lyapunov_phase_average(2.0f32, 0.618_034, 0.0, 2000, 64).unwrap();
        assert!((est.value - 2f32.ln()).abs() < 0.1);
    }

    #[test]
    fn herman_margin_positive() {
        let r = herman_subharmonic_check(2.0, GOLDEN, 0.0, 50, 512).unwrap();
        assert!(r.margin > 0.0, "{r:?}");
        assert!(r.identity_error < 1e-9);
        assert!(r.origin_error < 1e-9);
    }

    #[test]
    fn herman_at_critical_coupling() {
        let r = herman_subharmonic_check(1.0, GOLDEN, 0.7, 40, 256).unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.lhs >= 0.0);
    }

    #[test]
    fn herman_caps_steps() {
        assert!(herman_subharmonic_check(2.0, GOLDEN, 0.0, 201, 64).is_err());
    }
}
