use std::collections::BTreeMap;
use std::time::Instant;

use mathieu_core::approximation::{butterfly_dataset, ids_report, IdsMode};
use mathieu_core::arithmetic::{classify_frequency, liouville_witness, FrequencyClass};
use mathieu_core::duality::{dual_conjugation, dual_solution, gap_edge_probe, GapEdgeReport, DUAL_TAIL_MAX};
use mathieu_core::localization::{
    eigenpairs, gordon_potential_check, gordon_random_trials, js_condition_check, pairs_centered_at, PairFlag,
    CLUSTER_GAP, EIGENVALUE_TOL, GORDON_SLACK, RESIDUAL_TOL,
};
use mathieu_core::lyapunov::{herman_subharmonic_check, lyapunov_phase_average};
use mathieu_core::operator::{monodromy_renormalized, FiniteRestriction, Parameters, SINGULAR_PIVOT};
use mathieu_core::periodic::{band_set, gaps, measure, DECOMPOSITION_TOL, MERGE_GAP};
use mathieu_core::verify::{verify_selected, Mutation, Profile, CHECK_IDS};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::alpha::{parse_alpha, Alpha};
use crate::output::{
    csv_bytes, json_bytes, manifest_path, sig12, write_manifest, write_to, CheckStatus, RunManifest,
};
use crate::{Cli, CliError, Command, GordonMode, MutationArg, OutArgs, ProfileArg};

/// Everything a subcommand hands back for writing.
struct Emitted {
    bytes: Vec<u8>,
    seed: Option<u64>,
    tolerances: Vec<(&'static str, f64)>,
    checks: Vec<CheckStatus>,
    /// Reported after the output is written.
    failure: Option<CliError>,
}

impl Emitted {
    fn new(bytes: Vec<u8>) -> Self {
        Emitted {
            bytes,
            seed: None,
            tolerances: Vec::new(),
            checks: Vec::new(),
            failure: None,
        }
    }

    fn tol(mut self, t: &[(&'static str, f64)]) -> Self {
        self.tolerances.extend_from_slice(t);
        self
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let (name, out) = names(&cli.command);
    let emitted = dispatch(cli.command)?;
    write_to(&out.out, &emitted.bytes)?;
    let manifest = RunManifest {
        command_line: std::env::args().collect(),
        subcommand: name.to_string(),
        seed: emitted.seed,
        tolerances: emitted.tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        output: out.out.display().to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        checks: emitted.checks,
    };
    write_manifest(&manifest, manifest_path(&out.out, out.manifest.as_deref()).as_deref())?;
    match emitted.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn names(c: &Command) -> (&'static str, OutArgs) {
    match c {
        Command::Classify { out, .. } => ("classify", out.clone()),
        Command::Transfer { out, .. } => ("transfer", out.clone()),
        Command::Lyapunov { out, .. } => ("lyapunov", out.clone()),
        Command::Bands { out, .. } => ("bands", out.clone()),
        Command::Butterfly { out, .. } => ("butterfly", out.clone()),
        Command::Ids { out, .. } => ("ids", out.clone()),
        Command::Localize { out, .. } => ("localize", out.clone()),
        Command::GordonCheck { out, .. } => ("gordon-check", out.clone()),
        Command::JsCheck { out, .. } => ("js-check", out.clone()),
        Command::Duality { out, .. } => ("duality", out.clone()),
        Command::Verify { out, .. } => ("verify", out.clone()),
    }
}

/// `a:b:n` with `n >= 1` points, both ends included.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("expected a:b:n, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.parse().map_err(|_| bad())?;
    let b: f64 = b.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

pub fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("expected a:b, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

fn params(lambda: f64, alpha: &Alpha, omega: f64) -> Result<Parameters<f64>, CliError> {
    Ok(Parameters::new(lambda, alpha.value, omega)?)
}

fn dispatch(cmd: Command) -> Result<Emitted, CliError> {
    match cmd {
        Command::Classify {
            alpha,
            n,
            c,
            r,
            k_max,
            depth,
            ..
        } => classify(&alpha, n, c, r, k_max, depth),
        Command::Transfer { op, energy, n, .. } => transfer(&op.alpha, op.lambda, op.omega, energy, n),
        Command::Lyapunov {
            lambda,
            alpha,
            energy_grid,
            steps,
            grid,
            herman_steps,
            ..
        } => lyapunov(lambda, &alpha, &energy_grid, steps, grid, herman_steps),
        Command::Bands { lambda, p, q, csv, .. } => bands(lambda, p, q, csv),
        Command::Butterfly { lambda, qmax, .. } => butterfly(lambda, qmax),
        Command::Ids {
            lambda,
            alpha,
            n,
            grid,
            omega,
            phase_grid,
            ..
        } => ids(lambda, &alpha, n, &grid, omega, phase_grid),
        Command::Localize { op, n, window, vectors, .. } => localize(&op.alpha, op.lambda, op.omega, n, &window, vectors),
        Command::GordonCheck {
            mode,
            seed,
            trials,
            p_max,
            lambda,
            alpha,
            omega,
            q,
            c,
            ..
        } => match mode {
            GordonMode::Inequality => gordon_inequality(seed, trials, p_max),
            GordonMode::Potential => gordon_potential(
                lambda.ok_or_else(|| CliError::Usage("--lambda is required".into()))?,
                alpha.as_deref().ok_or_else(|| CliError::Usage("--alpha is required".into()))?,
                omega,
                q,
                c,
            ),
        },
        Command::JsCheck { op, m, n, eps, .. } => {
            let a = parse_alpha(&op.alpha)?;
            let report = js_condition_check(&params(op.lambda, &a, op.omega)?, &m, n, eps)?;
            Ok(Emitted::new(json_bytes(&report)?).tol(&[("eps", eps)]))
        }
        Command::Duality {
            op,
            n,
            radius,
            spread,
            dual_n,
            probe_gap,
            tol,
            ..
        } => duality(&op.alpha, op.lambda, op.omega, n, radius, spread, dual_n, probe_gap.then_some(tol)),
        Command::Verify {
            profile,
            seed,
            checks,
            mutation,
            strict,
            ..
        } => verify(profile, seed, checks, mutation, strict),
    }
}

#[derive(Serialize)]
struct ClassifyOut {
    alpha: String,
    value: f64,
    #[serde(flatten)]
    class: FrequencyClass,
}

fn classify(expr: &str, n: u64, c: f64, r: f64, k_max: usize, depth: usize) -> Result<Emitted, CliError> {
    let a = parse_alpha(expr)?;
    let class = if a.series {
        liouville_witness(&a.cf, k_max)?
    } else {
        classify_frequency(a.value, depth, c, r, n)?
    };
    let out = ClassifyOut {
        alpha: a.expr,
        value: a.value,
        class,
    };
    Ok(Emitted::new(json_bytes(&out)?))
}

#[derive(Serialize)]
struct TransferOut {
    lambda: f64,
    alpha: f64,
    omega: f64,
    energy: f64,
    n: usize,
    /// `M = exp(log_scale) * matrix`.
    matrix: [[f64; 2]; 2],
    log_scale: f64,
    log_norm: f64,
}

fn transfer(alpha: &str, lambda: f64, omega: f64, energy: f64, n: usize) -> Result<Emitted, CliError> {
    let a = parse_alpha(alpha)?;
    let p = params(lambda, &a, omega)?;
    if !energy.is_finite() {
        return Err(CliError::Usage("energy must be finite".into()));
    }
    let m = monodromy_renormalized(&p, energy, n);
    let out = TransferOut {
        lambda,
        alpha: p.alpha,
        omega: p.omega,
        energy,
        n,
        matrix: [[m.matrix.a, m.matrix.b], [m.matrix.c, m.matrix.d]],
        log_scale: m.log_scale,
        log_norm: m.log_norm(),
    };
    Ok(Emitted::new(json_bytes(&out)?))
}

fn lyapunov(lambda: f64, alpha: &str, grid_s: &str, steps: usize, grid: usize, herman_steps: usize) -> Result<Emitted, CliError> {
    let a = parse_alpha(alpha)?;
    let energies = parse_grid(grid_s)?;
    let mut rows = Vec::with_capacity(energies.len());
    for e in energies {
        let est = lyapunov_phase_average(lambda, a.value, e, steps, grid)?;
        let h = herman_subharmonic_check(lambda, a.value, e, herman_steps, grid)?;
        rows.push(vec![sig12(e), sig12(est.value), sig12(est.stderr), sig12(h.margin)]);
    }
    let bytes = csv_bytes(&["E", "gamma_hat", "stderr", "herman_margin"], rows)?;
    Ok(Emitted::new(bytes))
}

#[derive(Serialize)]
struct Interval {
    left: f64,
    right: f64,
    length: f64,
}

#[derive(Serialize)]
struct BandsOut {
    lambda: f64,
    p: u64,
    q: u64,
    bands: Vec<Interval>,
    gaps: Vec<Interval>,
    measure: f64,
}

const BAND_TOLS: [(&str, f64); 2] = [("decomposition", DECOMPOSITION_TOL), ("merge_gap", MERGE_GAP)];

fn bands(lambda: f64, p: u64, q: u64, as_csv: bool) -> Result<Emitted, CliError> {
    let b = band_set(lambda, p, q)?;
    let g = gaps(&b);
    let bytes = if as_csv {
        let rows = b
            .intervals
            .iter()
            .enumerate()
            .map(|(i, &(l, r))| ("band", i, l, r, r - l))
            .chain(g.iter().enumerate().map(|(i, x)| ("gap", i, x.left, x.right, x.length)))
            .map(|(k, i, l, r, len)| vec![k.to_string(), i.to_string(), sig12(l), sig12(r), sig12(len)]);
        csv_bytes(&["kind", "index", "left", "right", "length"], rows)?
    } else {
        let out = BandsOut {
            lambda,
            p,
            q,
            bands: b
                .intervals
                .iter()
                .map(|&(left, right)| Interval {
                    left,
                    right,
                    length: right - left,
                })
                .collect(),
            gaps: g
                .iter()
                .map(|x| Interval {
                    left: x.left,
                    right: x.right,
                    length: x.length,
                })
                .collect(),
            measure: measure(&b),
        };
        json_bytes(&out)?
    };
    Ok(Emitted::new(bytes).tol(&BAND_TOLS))
}

fn butterfly(lambda: f64, qmax: u64) -> Result<Emitted, CliError> {
    let rows = butterfly_dataset(lambda, qmax)?;
    let bytes = csv_bytes(
        &["p", "q", "band_index", "left", "right"],
        rows.iter().map(|r| {
            vec![
                r.p.to_string(),
                r.q.to_string(),
                r.band_index.to_string(),
                sig12(r.left),
                sig12(r.right),
            ]
        }),
    )?;
    Ok(Emitted::new(bytes).tol(&BAND_TOLS))
}

fn ids(lambda: f64, alpha: &str, n: usize, grid: &str, omega: f64, phase_grid: Option<usize>) -> Result<Emitted, CliError> {
    let a = parse_alpha(alpha)?;
    let energies = parse_grid(grid)?;
    let mode = match phase_grid {
        Some(g) => IdsMode::PhaseAverage { grid: g },
        None => IdsMode::Fixed { omega },
    };
    let r = ids_report(lambda, a.value, &energies, n, mode)?;
    let bytes = csv_bytes(
        &["energy", "ids"],
        r.energies.iter().zip(&r.values).map(|(e, k)| vec![sig12(*e), sig12(*k)]),
    )?;
    Ok(Emitted::new(bytes))
}

#[derive(Serialize)]
struct PairOut {
    energy: f64,
    center: i64,
    decay_rate: Option<f64>,
    fit_r2: Option<f64>,
    residual: f64,
    iterations: usize,
    flags: Vec<PairFlag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n1: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct LocalizeOut {
    lambda: f64,
    alpha: f64,
    omega: f64,
    n: usize,
    sites: [i64; 2],
    window: [f64; 2],
    /// `log lambda`, the expected decay rate when `lambda > 1`.
    reference_rate: f64,
    fitted: usize,
    mean_decay_rate: Option<f64>,
    pairs: Vec<PairOut>,
}

fn localize(alpha: &str, lambda: f64, omega: f64, n: usize, window: &str, vectors: bool) -> Result<Emitted, CliError> {
    let a = parse_alpha(alpha)?;
    let p = params(lambda, &a, omega)?;
    let (lo, hi) = parse_window(window)?;
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let half = (n / 2) as i64;
    let r = FiniteRestriction::new(&p, -half, -half + n as i64 - 1)?;
    let pairs = eigenpairs(&r, (lo, hi))?;
    let rates: Vec<f64> = pairs.iter().filter_map(|x| x.decay_rate).collect();
    let out = LocalizeOut {
        lambda,
        alpha: p.alpha,
        omega: p.omega,
        n,
        sites: [r.n1(), r.n2()],
        window: [lo, hi],
        reference_rate: lambda.ln(),
        fitted: rates.len(),
        mean_decay_rate: (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64),
        pairs: pairs
            .into_iter()
            .map(|x| PairOut {
                energy: x.energy,
                center: x.center,
                decay_rate: x.decay_rate,
                fit_r2: x.fit_r2,
                residual: x.residual,
                iterations: x.iterations,
                flags: x.flags,
                n1: vectors.then_some(x.n1),
                vector: vectors.then_some(x.vector),
            })
            .collect(),
    };
    Ok(Emitted::new(json_bytes(&out)?).tol(&[
        ("eigenvalue", EIGENVALUE_TOL),
        ("residual", RESIDUAL_TOL),
        ("cluster_gap", CLUSTER_GAP),
        ("singular_pivot", SINGULAR_PIVOT),
    ]))
}

fn gordon_inequality(seed: u64, trials: usize, p_max: usize) -> Result<Emitted, CliError> {
    let s = gordon_random_trials(seed, trials, p_max)?;
    let mut e = Emitted::new(json_bytes(&s)?).tol(&[("gordon_slack", GORDON_SLACK)]);
    e.seed = Some(seed);
    e.checks.push(CheckStatus {
        name: "gordon_inequality".into(),
        passed: s.violations == 0,
    });
    if s.violations > 0 {
        e.failure = Some(CliError::Invariant(format!("{} Gordon violations", s.violations)));
    }
    Ok(e)
}

fn gordon_potential(lambda: f64, alpha: &str, omega: f64, q: Vec<u64>, c: f64) -> Result<Emitted, CliError> {
    let a = parse_alpha(alpha)?;
    let q_list = if q.is_empty() {
        a.cf.denominators().iter().filter_map(|d| d.to_u64()).filter(|&d| d >= 2).collect()
    } else {
        q
    };
    let report = gordon_potential_check(lambda, &a.exact, omega, &q_list, c)?;
    Ok(Emitted::new(json_bytes(&report)?))
}

#[derive(Serialize)]
struct DualityRow {
    energy: f64,
    center: i64,
    decay_rate: Option<f64>,
    dual_energy: f64,
    dual_residual: f64,
    dual_max_abs: f64,
    dual_tail: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conjugation_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cohomological_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conjugation_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe: Option<GapEdgeReport>,
}

#[derive(Serialize)]
struct DualityOut {
    lambda: f64,
    alpha: f64,
    omega: f64,
    n: usize,
    experiments: Vec<DualityRow>,
}

#[allow(clippy::too_many_arguments)]
fn duality(
    alpha: &str,
    lambda: f64,
    omega: f64,
    n: usize,
    radius: i64,
    spread: i64,
    dual_n: i64,
    probe_tol: Option<f64>,
) -> Result<Emitted, CliError> {
    let a = parse_alpha(alpha)?;
    let p = params(lambda, &a, 0.0)?;
    let pairs = pairs_centered_at(&p, n, 0, radius, spread)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for x in &pairs {
        let d = dual_solution(&x.vector, x.n1, omega, 0.0, p.alpha, lambda, x.energy, dual_n)?;
        let mut row = DualityRow {
            energy: x.energy,
            center: x.center,
            decay_rate: x.decay_rate,
            dual_energy: x.energy / lambda,
            dual_residual: d.residual,
            dual_max_abs: d.max_abs,
            dual_tail: d.tail,
            c: None,
            conjugation_residual: None,
            cohomological_residual: None,
            min_d: None,
            conjugation_error: None,
            probe: None,
        };
        match dual_conjugation(&x.vector, x.n1, lambda, p.alpha, x.energy) {
            Ok(cj) => {
                row.c = Some(cj.c);
                row.conjugation_residual = Some(cj.residual);
                row.cohomological_residual = Some(cj.cohomological_residual);
                row.min_d = Some(cj.min_d);
            }
            Err(e) => row.conjugation_error = Some(e.to_string()),
        }
        if let Some(tol) = probe_tol {
            row.probe = Some(gap_edge_probe(lambda, &a.cf, tol, x.energy, row.c)?);
        }
        rows.push(row);
    }
    let out = DualityOut {
        lambda,
        alpha: p.alpha,
        omega,
        n,
        experiments: rows,
    };
    let mut tols = vec![("dual_tail_max", DUAL_TAIL_MAX)];
    if let Some(t) = probe_tol {
        tols.push(("probe_tolerance", t));
    }
    Ok(Emitted::new(json_bytes(&out)?).tol(&tols))
}

fn verify(profile: ProfileArg, seed: u64, checks: Vec<u8>, mutation: MutationArg, strict: bool) -> Result<Emitted, CliError> {
    let profile = match profile {
        ProfileArg::Quick => Profile::Quick,
        ProfileArg::Full => Profile::Full,
    };
    let mutation = match mutation {
        MutationArg::None => Mutation::None,
        MutationArg::TransferSign => Mutation::TransferSign,
    };
    let ids = if checks.is_empty() { CHECK_IDS.to_vec() } else { checks };
    if let Some(bad) = ids.iter().find(|i| !CHECK_IDS.contains(i)) {
        return Err(CliError::Usage(format!("no check {bad}; ids are 1..=12")));
    }
    let report = verify_selected(&ids, profile, seed, mutation)?;
    let mut e = Emitted::new(json_bytes(&report)?);
    e.seed = Some(seed);
    e.tolerances = report.checks.iter().map(|c| (c.name, c.tolerance)).collect();
    e.checks = report
        .checks
        .iter()
        .map(|c| CheckStatus {
            name: c.name.to_string(),
            passed: c.passed,
        })
        .collect();
    for c in &report.checks {
        eprintln!("[{}] {:>2} {}", if c.passed { "pass" } else { "FAIL" }, c.id, c.name);
    }
    if !report.hard_failures.is_empty() {
        e.failure = Some(CliError::Invariant(format!("hard checks failed: {:?}", report.hard_failures)));
    } else if strict && !report.statistical_misses.is_empty() {
        e.failure = Some(CliError::Invariant(format!(
            "statistical checks missed: {:?}",
            report.statistical_misses
        )));
    }
    Ok(e)
}
