//! The acceptance checks as library functions, shared by the test suite and
//! the `verify` subcommand.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approximation::{butterfly_dataset, continuity_bound, farey_fractions};
use crate::duality::{cohomological_solve, dual_solution, fourier_adaptive, reducibility_conjugate, FourierSeries};
use crate::error::Result;
use crate::localization::{gordon_random_trials, mid_spectrum_pairs, pairs_centered_at, GORDON_SLACK};
use crate::lyapunov::{lyapunov_orbit, lyapunov_phase_average};
use crate::operator::{monodromy, transfer_from_determinants, FiniteRestriction, Mat2, Parameters};
use crate::periodic::{
    band_set, bloch_oracle, duality_scale_check, gaps, hausdorff_distance, measure, BandSet, Gap, Provenance,
};
use crate::scalar::frac;

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Reduced sizes, same tolerances.
    Quick,
    /// The sizes the tolerances are stated for.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Cannot fail on a correct build.
    Hard,
    /// Finite-size estimate of an asymptotic statement.
    Statistical,
}

/// Deliberate faults for exercising the harness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    #[default]
    None,
    /// Negate the off-diagonal entry of every computed transfer product.
    TransferSign,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub kind: CheckKind,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub profile: Profile,
    pub seed: u64,
    pub mutation: Mutation,
    pub checks: Vec<CheckResult>,
    pub hard_failures: Vec<u8>,
    pub statistical_misses: Vec<u8>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.hard_failures.is_empty() && self.statistical_misses.is_empty()
    }
}

pub const CHECK_IDS: [u8; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

pub fn check_name(id: u8) -> &'static str {
    match id {
        1 => "herman_bound",
        2 => "lyapunov_on_spectrum",
        3 => "gap_count",
        4 => "gap_length_and_proximity",
        5 => "spectral_continuity",
        6 => "duality_scaling",
        7 => "localization_decay",
        8 => "gordon_inequality",
        9 => "determinant_and_green_identities",
        10 => "duality_pipeline",
        11 => "butterfly",
        12 => "periodic_oracle",
        _ => "unknown",
    }
}

pub fn check_kind(id: u8) -> CheckKind {
    match id {
        1 | 2 | 7 => CheckKind::Statistical,
        _ => CheckKind::Hard,
    }
}

struct Outcome {
    passed: bool,
    metric: f64,
    tolerance: f64,
    detail: String,
}

/// Sub-seed for check `id`, so checks can run alone or in any order.
fn sub_seed(seed: u64, id: u8) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng.gen()
}

pub fn run_check(id: u8, profile: Profile, seed: u64, mutation: Mutation) -> Result<CheckResult> {
    let start = Instant::now();
    let s = sub_seed(seed, id);
    let o = match id {
        1 => herman(profile)?,
        2 => on_spectrum(profile)?,
        3 => gap_count()?,
        4 => gap_length()?,
        5 => continuity()?,
        6 => scaling()?,
        7 => decay(profile)?,
        8 => gordon(s)?,
        9 => identities(profile, s, mutation)?,
        10 => pipeline(profile, s)?,
        11 => butterfly(profile)?,
        12 => oracle(profile)?,
        _ => {
            return Err(crate::error::Error::InvalidInput(format!("no check {id}")));
        }
    };
    Ok(CheckResult {
        id,
        name: check_name(id),
        kind: check_kind(id),
        passed: o.passed,
        metric: o.metric,
        tolerance: o.tolerance,
        detail: o.detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn verify_all(profile: Profile, seed: u64, mutation: Mutation) -> Result<VerifyReport> {
    verify_selected(&CHECK_IDS, profile, seed, mutation)
}

pub fn verify_selected(ids: &[u8], profile: Profile, seed: u64, mutation: Mutation) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for &id in ids {
        checks.push(run_check(id, profile, seed, mutation)?);
    }
    let failed = |k: CheckKind| checks.iter().filter(|c| !c.passed && c.kind == k).map(|c| c.id).collect();
    Ok(VerifyReport {
        profile,
        seed,
        mutation,
        hard_failures: failed(CheckKind::Hard),
        statistical_misses: failed(CheckKind::Statistical),
        checks,
    })
}

/// `(F_{k-1}, F_k)` for `2 <= F_k <= q_max`.
pub fn fibonacci_fractions(q_max: u64) -> Vec<(u64, u64)> {
    let (mut p, mut q) = (1u64, 2u64);
    let mut out = Vec::new();
    while q <= q_max {
        out.push((p, q));
        (p, q) = (q, p + q);
    }
    out
}

fn herman(profile: Profile) -> Result<Outcome> {
    let (energies, n, grid) = match profile {
        Profile::Full => (50, 10_000, 256),
        Profile::Quick => (12, 2_000, 64),
    };
    let tol = 0.02;
    let mut worst = f64::INFINITY;
    let mut at = (0.0, 0.0);
    for lambda in [1.5, 2.0, 4.0] {
        let b = 2.0 + 2.0 * lambda;
        for j in 0..energies {
            let e = -b + 2.0 * b * j as f64 / (energies - 1) as f64;
            let est = lyapunov_phase_average(lambda, GOLDEN, e, n, grid)?;
            let margin = est.value - lambda.ln();
            if margin < worst {
                worst = margin;
                at = (lambda, e);
            }
        }
    }
    Ok(Outcome {
        passed: worst >= -tol,
        metric: worst,
        tolerance: -tol,
        detail: format!(
            "min over lambda, E of gamma_hat - log lambda = {worst:.4} at lambda = {}, E = {:.3} (n = {n}, grid = {grid})",
            at.0, at.1
        ),
    })
}

fn on_spectrum(profile: Profile) -> Result<Outcome> {
    let (count, n) = match profile {
        Profile::Full => (20, 100_000),
        Profile::Quick => (8, 20_000),
    };
    let lambda = 2.0;
    let bands = band_set(lambda, 55, 89)?;
    let m = bands.len();
    let p = Parameters::new(lambda, GOLDEN, 0.1234)?;
    let mut worst = 0.0f64;
    for j in 0..count {
        let (l, r) = bands.intervals[(j * (m - 1)) / (count - 1)];
        let est = lyapunov_orbit(&p, 0.5 * (l + r), n)?;
        worst = worst.max((est.value - lambda.ln()).abs());
    }
    Ok(Outcome {
        passed: worst <= 0.05,
        metric: worst,
        tolerance: 0.05,
        detail: format!("max |gamma_hat - log 2| over {count} band centers of 55/89, n = {n}"),
    })
}

fn sweep() -> Vec<(f64, u64, u64)> {
    let mut out = Vec::new();
    for lambda in [0.5, 1.0] {
        for (p, q) in farey_fractions(20) {
            out.push((lambda, p, q));
        }
    }
    out
}

fn gap_count() -> Result<Outcome> {
    let mut bad = Vec::new();
    let mut total = 0;
    for (lambda, p, q) in sweep() {
        let b = band_set(lambda, p, q)?;
        let want = 2 * ((q - 1) / 2) as usize;
        total += 1;
        if gaps(&b).len() != want {
            bad.push(format!("{lambda}:{p}/{q} has {} gaps", gaps(&b).len()));
        }
    }
    Ok(Outcome {
        passed: bad.is_empty(),
        metric: bad.len() as f64,
        tolerance: 0.0,
        detail: if bad.is_empty() {
            format!("{total} spectra, every gap count equals 2m")
        } else {
            bad.join("; ")
        },
    })
}

fn gap_distance(a: &Gap, b: &Gap) -> f64 {
    (b.left - a.right).max(a.left - b.right).max(0.0)
}

fn gap_length() -> Result<Outcome> {
    let mut worst_len = f64::INFINITY;
    let mut worst_prox = 0.0f64;
    let mut bad = Vec::new();
    for (lambda, p, q) in sweep() {
        let g = gaps(&band_set(lambda, p, q)?);
        let m = ((q - 1) / 2) as i32;
        let floor = lambda.powi(m) * 8f64.powi(-(q as i32));
        for (i, x) in g.iter().enumerate() {
            let slack = x.length - floor;
            worst_len = worst_len.min(slack);
            if slack < -1e-12 {
                bad.push(format!("{lambda}:{p}/{q} gap {i} length {:e}", x.length));
            }
            if g.len() > 1 {
                let near = g
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, y)| gap_distance(x, y))
                    .fold(f64::INFINITY, f64::min);
                let ratio = near / (8.0 * std::f64::consts::PI / q as f64);
                worst_prox = worst_prox.max(ratio);
                if ratio > 1.0 {
                    bad.push(format!("{lambda}:{p}/{q} gap {i} isolated by {near}"));
                }
            }
        }
    }
    Ok(Outcome {
        passed: bad.is_empty(),
        metric: worst_len,
        tolerance: -1e-12,
        detail: if bad.is_empty() {
            format!(
                "min(length - lambda^m 8^-q) = {worst_len:e}; max nearest-gap distance / (8 pi / q) = {worst_prox:.3}"
            )
        } else {
            bad.join("; ")
        },
    })
}

fn continuity() -> Result<Outcome> {
    let fr = fibonacci_fractions(233);
    let mut worst = 0.0f64;
    for lambda in [0.5, 1.0] {
        let sets: Vec<_> = fr.iter().map(|&(p, q)| band_set(lambda, p, q)).collect::<Result<_>>()?;
        for (i, w) in fr.windows(2).enumerate() {
            let da = (w[0].0 as f64 / w[0].1 as f64 - w[1].0 as f64 / w[1].1 as f64).abs();
            let d = hausdorff_distance(&sets[i], &sets[i + 1])?;
            worst = worst.max(d / continuity_bound(lambda, da));
        }
    }
    Ok(Outcome {
        passed: worst <= 1.0,
        metric: worst,
        tolerance: 1.0,
        detail: format!("max d_H / (6 (2 lambda |da|)^(1/2)) over Fibonacci pairs to q = 233: {worst:.4}"),
    })
}

fn scaling() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for lambda in [2.0, 3.0] {
        for (p, q) in [(3, 5), (5, 8), (8, 13)] {
            worst = worst.max(duality_scale_check(lambda, p, q)?.distance);
        }
    }
    Ok(Outcome {
        passed: worst < 1e-9,
        metric: worst,
        tolerance: 1e-9,
        detail: "max d_H(Sigma(lambda), lambda Sigma(1/lambda)) for lambda in {2, 3}, q in {5, 8, 13}".into(),
    })
}

fn decay(profile: Profile) -> Result<Outcome> {
    let n = match profile {
        Profile::Full => 2001,
        Profile::Quick => 801,
    };
    let p = Parameters::new(3.0, GOLDEN, 0.1234)?;
    let pairs = mid_spectrum_pairs(&p, n, 10)?;
    let target = 3f64.ln();
    let mut worst = 0.0f64;
    let mut min_r2 = 1.0f64;
    let mut refused = 0;
    for pr in &pairs {
        match (pr.decay_rate, pr.fit_r2) {
            (Some(r), Some(q)) => {
                worst = worst.max((r - target).abs() / target);
                min_r2 = min_r2.min(q);
            }
            _ => refused += 1,
        }
    }
    Ok(Outcome {
        passed: pairs.len() == 10 && refused == 0 && worst <= 0.15 && min_r2 > 0.9,
        metric: worst,
        tolerance: 0.15,
        detail: format!(
            "{} pairs, N = {n}: max relative rate error {worst:.4}, min r2 {min_r2:.4}, {refused} fits refused",
            pairs.len()
        ),
    })
}

fn gordon(seed: u64) -> Result<Outcome> {
    let s = gordon_random_trials(seed, 1000, 20)?;
    Ok(Outcome {
        passed: s.violations == 0 && s.min_ratio >= 0.5 - GORDON_SLACK,
        metric: s.min_ratio,
        tolerance: 0.5 - GORDON_SLACK,
        detail: format!(
            "1000 trials, {} violations, min ratio {:.4}, branches (|tr| <= 1, > 1) = {:?}",
            s.violations, s.min_ratio, s.branch_counts
        ),
    })
}

fn mat_rel(a: &Mat2<f64>, b: &Mat2<f64>) -> f64 {
    let d = a.sub(b);
    let num = d.a.abs().max(d.b.abs()).max(d.c.abs()).max(d.d.abs());
    num / a.max_abs().max(1e-300)
}

fn identities(profile: Profile, seed: u64, mutation: Mutation) -> Result<Outcome> {
    let trials = match profile {
        Profile::Full => 500,
        Profile::Quick => 200,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_det = 0.0f64;
    for _ in 0..trials {
        let p = Parameters::new(rng.gen_range(0.1..4.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))?;
        let b = 2.0 + 2.0 * p.lambda;
        let e = rng.gen_range(-b..b);
        let k = rng.gen_range(1..=60);
        let mut m = monodromy(&p, e, k);
        if mutation == Mutation::TransferSign {
            m.b = -m.b;
        }
        worst_det = worst_det.max(mat_rel(&m, &transfer_from_determinants(&p, e, k)));
    }
    let mut worst_green = 0.0f64;
    let mut skipped = 0;
    for _ in 0..trials {
        let p = Parameters::new(rng.gen_range(0.1..4.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))?;
        let b = 2.0 + 2.0 * p.lambda;
        let e = rng.gen_range(-b..b);
        let n1: i64 = rng.gen_range(-30..30);
        let n2 = n1 + rng.gen_range(0..40);
        // u on [n1 - 1, n2 + 1]
        let mut u: Vec<f64> = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        for n in n1..=n2 {
            let i = (n - n1 + 1) as usize;
            u.push((e - crate::operator::potential(&p, n)) * u[i] - u[i - 1]);
        }
        let r: FiniteRestriction<f64> = FiniteRestriction::new(&p, n1, n2)?;
        let Ok(lu) = r.factor(e) else {
            skipped += 1;
            continue;
        };
        let gl = r.green_column_with(&lu, n1)?;
        let gr = r.green_column_with(&lu, n2)?;
        let (left, right) = (u[0], u[u.len() - 1]);
        let scale = u.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        for n in n1..=n2 {
            let i = (n - n1) as usize;
            let rhs = -gl[i] * left - gr[i] * right;
            let size = scale.max((gl[i] * left).abs()).max((gr[i] * right).abs());
            worst_green = worst_green.max((u[i + 1] - rhs).abs() / size);
        }
    }
    let worst = worst_det.max(worst_green);
    Ok(Outcome {
        passed: worst < 1e-8,
        metric: worst,
        tolerance: 1e-8,
        detail: format!(
            "{trials} transfer/determinant instances: max rel err {worst_det:e}; {trials} Green boundary instances ({skipped} singular skipped): max rel err {worst_green:e}"
        ),
    })
}

/// `B(w) = [[e^t, 0], [s e^t, e^-t]]` with analytic `t`, `s`; returns the
/// section `v = B e_1` and `A(w) = B(w + alpha) C B(w)^{-1}`.
pub fn synthetic_conjugation(
    c_true: f64,
    alpha: f64,
    t_amp: f64,
    s_amp: f64,
) -> Result<(FourierSeries, FourierSeries, impl Fn(f64) -> Mat2<f64> + Sync)> {
    use std::f64::consts::TAU;
    let t = move |w: f64| t_amp * (TAU * w).cos();
    let s = move |w: f64| s_amp * ((TAU * w).sin() + 0.4 * (2.0 * TAU * w).cos());
    let bt = move |w: f64| {
        let e = t(w).exp();
        Mat2::new(e, 0.0, s(w) * e, 1.0 / e)
    };
    let v1 = fourier_adaptive(move |w| Complex64::new(bt(w).a, 0.0))?;
    let v2 = fourier_adaptive(move |w| Complex64::new(bt(w).c, 0.0))?;
    let cm = Mat2::new(1.0, c_true, 0.0, 1.0);
    let a = move |w: f64| bt(frac(w + alpha)) * cm * bt(w).inverse_unimodular();
    Ok((v1, v2, a))
}

fn pipeline(profile: Profile, seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut notes = Vec::new();
    let mut ok = true;

    // dual residual, localized eigenpairs
    let p0 = Parameters::new(3.0, GOLDEN, 0.0)?;
    let mut pairs = pairs_centered_at(&p0, 201, 0, 2, 40)?;
    let size = if profile == Profile::Full { 601 } else { 401 };
    pairs.extend(mid_spectrum_pairs(&Parameters::new(3.0, GOLDEN, 0.1234)?, size, 6)?);
    let mut worst_dual = 0.0f64;
    for pr in &pairs {
        let omega = if pr.vector.len() == 201 { 0.0 } else { 0.1234 };
        let d = dual_solution(&pr.vector, pr.n1, rng.gen_range(0.0..1.0), omega, GOLDEN, 3.0, pr.energy, 50)?;
        worst_dual = worst_dual.max(d.residual / d.max_abs);
    }
    ok &= worst_dual < 1e-6;
    notes.push(format!("dual residual / max|u~| over {} pairs: {worst_dual:e}", pairs.len()));

    // cohomological equation, decaying random data, Diophantine alpha
    let mut worst_coh = 0.0f64;
    for alpha in [GOLDEN, std::f64::consts::SQRT_2 - 1.0] {
        for _ in 0..5 {
            let sigma = rng.gen_range(0.5..2.0);
            let k = 40i64;
            let half: Vec<Complex64> = (0..=k)
                .map(|j| {
                    let z = Complex64::new(rng.gen_range(-1.0..1.0), if j == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) });
                    z * (-sigma * j as f64).exp()
                })
                .collect();
            let coeffs = (-k..=k)
                .map(|j| if j < 0 { half[(-j) as usize].conj() } else { half[j as usize] })
                .collect();
            let ct = FourierSeries::new(coeffs)?;
            let sol = cohomological_solve(&ct, alpha)?;
            let scale = 1.0 + crate::duality::stable_sup(|w| ct.eval(w).norm()).0;
            worst_coh = worst_coh.max(sol.residual / scale);
        }
    }
    ok &= worst_coh < 1e-9;
    notes.push(format!("cohomological residual / (1 + max|c~|): {worst_coh:e}"));

    // construct-then-recover
    let mut worst_c = 0.0f64;
    let mut worst_res = 0.0f64;
    for c_true in [0.0, 0.37, -1.25, 2.5] {
        let (v1, v2, a) = synthetic_conjugation(c_true, GOLDEN, 0.3, 0.5)?;
        let r = reducibility_conjugate(&v1, &v2, a, GOLDEN)?;
        worst_c = worst_c.max((r.c - c_true).abs());
        worst_res = worst_res.max(r.residual);
    }
    ok &= worst_c < 1e-8 && worst_res < 1e-7;
    notes.push(format!("recovered |c - c_true| {worst_c:e}, conjugation residual {worst_res:e}"));

    Ok(Outcome {
        passed: ok,
        metric: worst_dual.max(worst_coh).max(worst_c),
        tolerance: 1e-8,
        detail: notes.join("; "),
    })
}

fn butterfly(profile: Profile) -> Result<Outcome> {
    let q_max = match profile {
        Profile::Full => 50,
        Profile::Quick => 30,
    };
    let t = Instant::now();
    let rows = butterfly_dataset(1.0, q_max)?;
    let secs = t.elapsed().as_secs_f64();
    let set = |p: u64, q: u64| {
        let raw = rows.iter().filter(|r| r.p == p && r.q == q).map(|r| (r.left, r.right)).collect();
        BandSet::from_intervals(raw, Provenance::Rational { lambda: 1.0, p, q })
    };
    // compared as sets: gaps below the merge threshold may close on one side only
    let mut worst = 0.0f64;
    for (p, q) in farey_fractions(q_max) {
        let b = set(p, q)?;
        worst = worst.max(hausdorff_distance(&b, &b.reflected())?);
        worst = worst.max(hausdorff_distance(&b, &set(q - p, q)?)?);
    }
    let measures: Vec<f64> = fibonacci_fractions(89)
        .into_iter()
        .filter(|&(_, q)| q >= 13)
        .map(|(p, q)| band_set(1.0, p, q).map(|b| measure(&b)))
        .collect::<Result<_>>()?;
    let monotone = measures.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome {
        passed: worst <= 1e-9 && monotone && secs <= 60.0,
        metric: worst,
        tolerance: 1e-9,
        detail: format!(
            "{} rows to q = {q_max} in {secs:.2}s; max symmetry defect {worst:e}; Fibonacci measures q = 13..89: {measures:?}",
            rows.len()
        ),
    })
}

fn oracle(profile: Profile) -> Result<Outcome> {
    let phases = match profile {
        Profile::Full => 4096,
        Profile::Quick => 1024,
    };
    let mut worst = 0.0f64;
    let mut at = (0.0, 0, 0);
    for lambda in [0.5, 1.0, 2.0] {
        for (p, q) in farey_fractions(8) {
            let d = hausdorff_distance(&band_set(lambda, p, q)?, &bloch_oracle(lambda, p, q, phases)?)?;
            if d > worst {
                worst = d;
                at = (lambda, p, q);
            }
        }
    }
    Ok(Outcome {
        passed: worst < 1e-3,
        metric: worst,
        tolerance: 1e-3,
        detail: format!(
            "max d_H(band_set, Bloch union over {phases} phases) for q <= 8, lambda in {{0.5, 1, 2}}: {worst:e} at lambda = {}, {}/{}",
            at.0, at.1, at.2
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci() {
        assert_eq!(fibonacci_fractions(13), vec![(1, 2), (2, 3), (3, 5), (5, 8), (8, 13)]);
    }

    #[test]
    fn mutation_trips_identity_check() {
        let r = run_check(9, Profile::Quick, 1, Mutation::TransferSign).unwrap();
        assert!(!r.passed);
        assert_eq!(r.kind, CheckKind::Hard);
        assert!(run_check(9, Profile::Quick, 1, Mutation::None).unwrap().passed);
    }

    #[test]
    fn fast_checks_pass() {
        for id in [3, 6, 8] {
            let r = run_check(id, Profile::Quick, 7, Mutation::None).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn unknown_check() {
        assert!(run_check(13, Profile::Quick, 0, Mutation::None).is_err());
    }
}
