use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde_json::json;

use furuta_core::calibrate::calibrate_params;
use furuta_core::control_design::solve_care;
use furuta_core::estimation::{decode_angles, encode_angles};
use furuta_core::experiments::{reward, success_criterion};
use furuta_core::{
    collect_dataset, frequency_sweep, noise_sweep, run_episode, wrap_angle, DatasetMode, Error, LinearModel,
    LoadedConfig, ParamsFile, PolicyKind, State,
};

use crate::output::write_atomic;
use crate::{Cli, Command};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DESIGN: u8 = 2;
pub const EXIT_SIMULATION: u8 = 3;

pub const THREADS_ENV: &str = "FURUTA_BENCH_THREADS";

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub source: anyhow::Error,
}

impl CliError {
    fn config(source: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            source: source.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RiccatiNonConvergence { .. }
            | Error::NotStabilizing
            | Error::RootFinder
            | Error::NonFiniteLinearization(_)
            | Error::CalibrationFailed { .. } => EXIT_DESIGN,
            Error::IntegrationBlowup { .. } => EXIT_SIMULATION,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            source: e.into(),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(source: anyhow::Error) -> Self {
        Self::config(source)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Context {
    loaded: LoadedConfig,
    out_dir: PathBuf,
}

fn load(cli: &Cli) -> CliResult<Context> {
    let mut loaded = match &cli.config {
        Some(path) => LoadedConfig::load(path)?,
        None => LoadedConfig::bundled(),
    };
    if let Some(seed) = cli.seed {
        loaded.config.run.seed = seed;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| loaded.config.output_dir.clone());
    Ok(Context { loaded, out_dir })
}

fn sweep_threads() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(anyhow!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Design { scalar_selftest } => design(cli, *scalar_selftest),
        Command::Simulate { policy } => simulate(cli, policy),
        Command::Sweep { kind } => sweep(cli, kind),
        Command::Collect { mode } => collect(cli, mode),
        Command::Calibrate { target } => calibrate(cli, target.as_deref()),
        Command::Selftest => selftest(cli),
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value serializes"));
}

fn design(cli: &Cli, scalar: bool) -> CliResult<()> {
    if scalar {
        let sol = solve_care(&[[0.0]], &[1.0], &[[1.0]], 1.0)?;
        print_json(&json!({
            "A": 0.0, "B": 1.0, "Q": 1.0, "R": 1.0,
            "P": sol.p[0][0],
            "K": sol.p[0][0],
            "residual": sol.residual,
        }));
        return Ok(());
    }
    let ctx = load(cli)?;
    let d = ctx.loaded.config.design()?;
    let eig: Vec<_> = d
        .closed_loop_eigenvalues
        .iter()
        .map(|z| json!({ "re": z.re, "im": z.im }))
        .collect();
    let real_parts: Vec<f64> = d.closed_loop_eigenvalues.iter().map(|z| z.re).collect();
    print_json(&json!({
        "P": d.p,
        "K": d.k,
        "residual": d.residual,
        "closed_loop_real_parts": real_parts,
        "closed_loop_eigenvalues": eig,
        "hurwitz": d.is_stabilizing(),
    }));
    if !d.is_stabilizing() {
        return Err(Error::NotStabilizing.into());
    }
    Ok(())
}

fn simulate(cli: &Cli, policy: &str) -> CliResult<()> {
    let policy: PolicyKind = policy.parse()?;
    let ctx = load(cli)?;
    let cfg = &ctx.loaded.config;
    let k = cfg.design()?.k;
    let spec = cfg.episode_spec(&ctx.loaded.params, k, policy)?;
    let log = run_episode(&spec)?;
    let path = write_atomic(&ctx.out_dir, &format!("episode-{}.csv", policy.name()), &log.to_csv())?;
    println!("{}", path.display());
    if let Some(reason) = &log.failure {
        return Err(CliError {
            code: EXIT_SIMULATION,
            source: anyhow!("episode aborted after {} rows: {reason}", log.rows.len()),
        });
    }
    eprintln!(
        "{} rows, success (|alpha| < 10 deg for the last {} s): {}",
        log.rows.len(),
        cfg.run.hold,
        success_criterion(&log, cfg.run.hold)
    );
    Ok(())
}

fn sweep(cli: &Cli, kind: &str) -> CliResult<()> {
    let ctx = load(cli)?;
    let cfg = &ctx.loaded.config;
    let threads = sweep_threads()?;
    let k = cfg.design()?.k;
    let s = &cfg.sweep;
    let report = match kind {
        "noise" => {
            let base = cfg.episode_spec(&ctx.loaded.params, k, PolicyKind::Hybrid)?;
            noise_sweep(
                &s.noise_sigmas_deg,
                s.trials,
                &base,
                cfg.noise.smoothing,
                cfg.run.seed,
                cfg.run.hold,
                threads,
            )?
        }
        "frequency" => {
            let base = cfg.episode_spec(&ctx.loaded.params, k, PolicyKind::Lqr)?;
            frequency_sweep(
                &s.frequencies_hz,
                s.trials,
                &base,
                s.balance_alpha0_deg.to_radians(),
                s.balance_duration,
                cfg.run.seed,
                cfg.run.hold,
                threads,
            )?
        }
        other => {
            return Err(CliError::config(anyhow!(
                "unknown sweep kind '{other}' (expected noise or frequency)"
            )))
        }
    };
    let path = write_atomic(&ctx.out_dir, &format!("sweep-{kind}.json"), &report.to_json())?;
    println!("{}", path.display());
    Ok(())
}

fn collect(cli: &Cli, mode: &str) -> CliResult<()> {
    let mode: DatasetMode = mode.parse()?;
    let ctx = load(cli)?;
    let cfg = &ctx.loaded.config;
    let k = cfg.design()?.k;
    let data = collect_dataset(&cfg.dataset_spec(&ctx.loaded.params, k, mode)?)?;
    let name = mode.name();
    let samples = write_atomic(&ctx.out_dir, &format!("dataset-{name}.csv"), &data.to_csv())?;
    let hist = write_atomic(&ctx.out_dir, &format!("histogram-{name}.json"), &data.histogram.to_json())?;
    println!("{}\n{}", samples.display(), hist.display());
    eprintln!(
        "{} samples from {} episodes, {:.1}% with |alpha| < 15 deg",
        data.samples.len(),
        data.episodes,
        100.0 * data.fraction_alpha_below(15.0)
    );
    Ok(())
}

fn calibrate(cli: &Cli, target: Option<&Path>) -> CliResult<()> {
    let ctx = load(cli)?;
    let initial = match &cli.config {
        Some(path) => format!("the params file of {}", path.display()),
        None => "the bundled parameters".to_string(),
    };
    let (model, source) = match target {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(anyhow!("cannot read {}: {e}", path.display())))?;
            let model: LinearModel = serde_json::from_str(&text)
                .map_err(|e| CliError::config(anyhow!("malformed linear model {}: {e}", path.display())))?;
            (model, path.display().to_string())
        }
        None => (ctx.loaded.config.linear_model(), "the config's design model".to_string()),
    };
    model.validate()?;
    let cal = calibrate_params(&model, &ctx.loaded.params)?;
    let file = ParamsFile {
        params: cal.params,
        provenance: format!(
            "calibrated against {source}: Levenberg-Marquardt fit of L_a, J_a, J_p, k_u, b_a, b_p \
             to A[2][1], A[2][2], A[3][1], A[3][3], B[2], B[3] (m_p, l, g fixed; A[3][2] not matched); \
             initial guess from {initial}; {} iterations",
            cal.iterations
        ),
        relative_errors: Some(cal.relative_errors.into_iter().collect()),
    };
    let path = write_atomic(&ctx.out_dir, "params.json", &file.to_json())?;
    println!("{}", path.display());
    Ok(())
}

struct Check {
    name: &'static str,
    code: u8,
    passed: bool,
}

fn selftest(cli: &Cli) -> CliResult<()> {
    let ctx = load(cli)?;
    let cfg = &ctx.loaded.config;
    let params = &ctx.loaded.params;
    let mut checks = Vec::new();
    let mut check = |name, code, passed| checks.push(Check { name, code, passed });

    let unit = solve_care(&[[0.0]], &[1.0], &[[1.0]], 1.0)?;
    check("scalar CARE, A = 0", EXIT_DESIGN, (unit.p[0][0] - 1.0).abs() < 1e-10);
    let stable = solve_care(&[[-1.0]], &[1.0], &[[1.0]], 1.0)?;
    check(
        "scalar CARE, A = -1",
        EXIT_DESIGN,
        (stable.p[0][0] - (2f64.sqrt() - 1.0)).abs() < 1e-10,
    );
    let d = cfg.design()?;
    check(
        "LQR design residual and closed-loop stability",
        EXIT_DESIGN,
        d.residual < 1e-8 && d.is_stabilizing(),
    );
    check(
        "reward corner cases",
        EXIT_CONFIG,
        reward(&State::upright()) == 1.0
            && reward(&State::new(0.0, std::f64::consts::PI, 0.0, 0.0)) == 0.04
            && reward(&State::new(std::f64::consts::PI, std::f64::consts::PI, 0.0, 0.0)) == 0.0,
    );
    let round_trip = (-50..=50).all(|i| {
        let x = i as f64 * 0.37;
        decode_angles(&encode_angles(x, -x))
            .map(|(t, a)| (t - wrap_angle(x)).abs() < 1e-12 && (a - wrap_angle(-x)).abs() < 1e-12)
            .unwrap_or(false)
    });
    check("angle encoding round trip", EXIT_CONFIG, round_trip);

    let mut spec = cfg.episode_spec(params, d.k, PolicyKind::Lqr)?;
    spec.initial = State::upright();
    spec.duration = 1.0;
    let log = run_episode(&spec)?;
    check(
        "LQR at upright rest applies no input",
        EXIT_SIMULATION,
        log.rows.iter().all(|r| r.u_sat == 0.0),
    );
    let mut spec = cfg.episode_spec(params, d.k, PolicyKind::Hybrid)?;
    spec.initial = State::hanging();
    spec.duration = 10.0;
    let log = run_episode(&spec)?;
    check(
        "hybrid swing-up from hanging rest",
        EXIT_SIMULATION,
        success_criterion(&log, cfg.run.hold),
    );

    for c in &checks {
        println!("{} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
    }
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(CliError {
            code: c.code,
            source: anyhow!("self-test failed: {}", c.name),
        }),
        None => Ok(()),
    }
}
