//! Command dispatch: build the model, run the requested operation,
//! write the result file, any side files, and the run manifest.
//!
//! Every run writes at most three kinds of file next to the primary
//! output path `P`:
//!
//! - `P` itself — the result, JSON or CSV;
//! - `P` with extension `sites.csv` — a plot-ready per-site table,
//!   for commands whose JSON result embeds a configuration
//!   (`transition`);
//! - `P` with extension `manifest.json` — the run manifest: config
//!   echo, versions, runtime knobs, and wall time. Reruns of an
//!   identical config produce bit-identical result files; manifests
//!   differ only in the wall-time field.
//!
//! Failures map to distinct exit codes by error class: 2 validation
//! (bad config, bad parameters, I/O), 3 solver non-convergence,
//! 4 hypothesis-check failure, 5 mathematical precondition (e.g. the
//! gap condition fails). Nothing is written on failure, with one
//! exception: a `check-h` run whose checks fail still writes its
//! report and manifest — the report is the point — and then exits 4.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::Serialize;
use twistvar::{
    build_schedule, check_hypotheses, default_strip, detect_gap, estimate_phi,
    find_neighboring_pair, heteroclinic_minimizer, iterate_map, lift_rational, minimize_transition,
    multi_schedule_distinctness, BlockConstantCache, Configuration, ErrorClass, FkModel,
    GapOptions, Lift, MinimizeOptions, ScheduleBlueprint, ScheduleBuild, Tail, TransitionResult,
};

use crate::config::{CommandSpec, ExperimentConfig, Format, OutputSpec};
use crate::output;
use crate::Cli;

/// A failed run: the exit code mandated by the error's class, plus
/// the error chain to print on stderr.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    /// Exit code for the process.
    pub fn code(&self) -> u8 {
        self.code
    }

    fn validation(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<twistvar::Error> for Failure {
    fn from(err: twistvar::Error) -> Self {
        let code = match err.class() {
            ErrorClass::Validation => 2,
            ErrorClass::NonConvergence => 3,
            ErrorClass::Hypothesis => 4,
            ErrorClass::Precondition => 5,
        };
        Failure {
            code,
            error: anyhow::Error::new(err),
        }
    }
}

/// Everything a command produces before files are written.
struct RunArtifacts {
    /// Primary result body.
    body: String,
    /// Side files: (extension replacing the primary one, body).
    extra: Vec<(&'static str, String)>,
    /// One-line human summary for stdout.
    summary: String,
    /// Names of failed hypothesis checks (`check-h` only); non-empty
    /// triggers exit 4 after all files are written.
    failed_checks: Vec<&'static str>,
}

impl RunArtifacts {
    fn new(body: String, summary: String) -> Self {
        RunArtifacts {
            body,
            extra: Vec::new(),
            summary,
            failed_checks: Vec::new(),
        }
    }
}

/// Resolved output destination.
struct OutputTarget {
    path: PathBuf,
    format: Format,
}

/// Runs one experiment end to end. Returns the stdout summary line.
pub fn execute(cli: &Cli) -> Result<String, Failure> {
    let started = Instant::now();

    if cli.threads == 0 {
        return Err(Failure::validation(anyhow!("--threads must be at least 1")));
    }
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Failure::validation(anyhow!(
                "--tol must be positive and finite, got {tol}"
            )));
        }
    }

    let text = fs::read_to_string(&cli.config)
        .with_context(|| format!("reading config {}", cli.config.display()))
        .map_err(Failure::validation)?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", cli.config.display()))
        .map_err(Failure::validation)?;

    let target = resolve_output(cli, &config)?;
    let h = config.model.build()?;
    let opts = solver_options(cli);

    let artifacts = dispatch(&h, &config.command, cli, &opts, target.format)?;

    fs::write(&target.path, &artifacts.body)
        .with_context(|| format!("writing {}", target.path.display()))
        .map_err(Failure::validation)?;
    for (ext, body) in &artifacts.extra {
        let path = target.path.with_extension(ext);
        fs::write(&path, body)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::validation)?;
    }
    let manifest_path = target.path.with_extension("manifest.json");
    let manifest = manifest_body(cli, &config, &target, started.elapsed().as_secs_f64())
        .map_err(Failure::validation)?;
    fs::write(&manifest_path, manifest)
        .with_context(|| format!("writing {}", manifest_path.display()))
        .map_err(Failure::validation)?;

    if !artifacts.failed_checks.is_empty() {
        return Err(Failure {
            code: 4,
            error: anyhow!(
                "hypothesis checks failed: {} (report written to {})",
                artifacts.failed_checks.join(", "),
                target.path.display()
            ),
        });
    }

    Ok(format!(
        "{}: {} — wrote {}",
        config.command.name(),
        artifacts.summary,
        target.path.display()
    ))
}

/// Output path and format, flags overriding config fields. A path is
/// mandatory; the format falls back to the command's natural default.
fn resolve_output(cli: &Cli, config: &ExperimentConfig) -> Result<OutputTarget, Failure> {
    let spec: Option<&OutputSpec> = config.output.as_ref();
    let path = cli
        .output
        .clone()
        .or_else(|| spec.and_then(|o| o.path.clone()))
        .ok_or_else(|| {
            Failure::validation(anyhow!(
                "no output path: pass --output or set output.path in the config"
            ))
        })?;
    let format = cli
        .format
        .or_else(|| spec.and_then(|o| o.format))
        .unwrap_or_else(|| config.command.default_format());
    Ok(OutputTarget { path, format })
}

/// Solver options: library defaults with the `--tol` override applied
/// to the gradient tolerance.
fn solver_options(cli: &Cli) -> MinimizeOptions {
    let mut opts = MinimizeOptions::default();
    if let Some(tol) = cli.tol {
        opts.tol_grad = tol;
    }
    opts
}

/// Verification tolerance for the residual checks of `map-iterate`
/// and `rational` (the `--tol` flag overrides).
fn verify_tol(cli: &Cli) -> f64 {
    cli.tol.unwrap_or(1e-8)
}

fn dispatch(
    h: &FkModel,
    command: &CommandSpec,
    cli: &Cli,
    opts: &MinimizeOptions,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    match command {
        CommandSpec::CheckH { grid, strip } => run_check_h(h, *grid, *strip, format),
        CommandSpec::Periodic { resolution } => run_periodic(h, *resolution, format),
        CommandSpec::MapIterate { x0, y0, steps } => {
            run_map_iterate(h, *x0, *y0, *steps, verify_tol(cli), format)
        }
        CommandSpec::Heteroclinic {
            direction,
            half_window,
            resolution,
        } => run_heteroclinic(h, *direction, *half_window, *resolution, opts, format),
        CommandSpec::Gap {
            fiber_samples,
            half_window,
            resolution,
        } => run_gap(
            h,
            *fiber_samples,
            *half_window,
            *resolution,
            cli.threads,
            opts,
            format,
        ),
        CommandSpec::Phi {
            delta,
            n_max,
            resolution,
        } => run_phi(h, *delta, *n_max, *resolution, opts, format),
        CommandSpec::Transition {
            epsilon,
            transitions,
            labels,
            max_block_spacing,
            fiber_samples,
            half_window,
            resolution,
        } => {
            let blueprint = match (transitions, labels) {
                (Some(s), None) => ScheduleBlueprint::for_transitions(*epsilon, *s),
                (None, Some(ls)) => ScheduleBlueprint::explicit(*epsilon, ls.clone()),
                _ => {
                    return Err(Failure::validation(anyhow!(
                        "transition params need exactly one of `transitions` / `labels`"
                    )))
                }
            };
            run_transition(
                h,
                blueprint,
                *max_block_spacing,
                *fiber_samples,
                *half_window,
                *resolution,
                cli.threads,
                opts,
                format,
            )
        }
        CommandSpec::Rational { q, p, half_periods } => {
            run_rational(h, *q, *p, *half_periods, verify_tol(cli), format)
        }
        CommandSpec::Distinctness {
            epsilon,
            transitions,
            sequences,
            max_block_spacing,
            fiber_samples,
            half_window,
            resolution,
        } => {
            if format == Format::Csv {
                return Err(Failure::validation(anyhow!(
                    "distinctness emits a structured multi-result report; use --format json"
                )));
            }
            run_distinctness(
                h,
                *epsilon,
                *transitions,
                sequences,
                *max_block_spacing,
                *fiber_samples,
                *half_window,
                *resolution,
                cli.threads,
                opts,
            )
        }
    }
}

fn run_check_h(
    h: &FkModel,
    grid: usize,
    strip: Option<((f64, f64), (f64, f64))>,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    let strip = strip.unwrap_or_else(default_strip);
    let report = check_hypotheses(h, strip, grid);
    let failed: Vec<&'static str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    let body = match format {
        Format::Json => output::json_body(&report).map_err(Failure::validation)?,
        Format::Csv => output::csv_body(
            "check,passed,worst_margin",
            report.checks.iter().map(|c| {
                vec![
                    c.name.to_string(),
                    c.passed.to_string(),
                    output::cell(c.worst_margin),
                ]
            }),
        ),
    };
    let summary = format!(
        "{}/{} hypothesis checks passed",
        report.checks.len() - failed.len(),
        report.checks.len()
    );
    Ok(RunArtifacts {
        failed_checks: failed,
        ..RunArtifacts::new(body, summary)
    })
}

fn run_periodic(h: &FkModel, resolution: usize, format: Format) -> Result<RunArtifacts, Failure> {
    let pair = find_neighboring_pair(h, resolution)?;
    let body = match format {
        Format::Json => output::json_body(&pair).map_err(Failure::validation)?,
        Format::Csv => output::csv_body(
            "u0,u1,c,width",
            [vec![
                output::cell(pair.u0),
                output::cell(pair.u1),
                output::cell(pair.c),
                output::cell(pair.width()),
            ]],
        ),
    };
    let summary = format!(
        "neighboring ground pair ({:.6}, {:.6}), level {:.6}",
        pair.u0, pair.u1, pair.c
    );
    Ok(RunArtifacts::new(body, summary))
}

/// Orbit rows in JSON form.
#[derive(Serialize)]
struct OrbitArtifact {
    steps: usize,
    max_residual: f64,
    rows: Vec<OrbitRow>,
}

#[derive(Serialize)]
struct OrbitRow {
    i: usize,
    x: f64,
    y: f64,
}

fn run_map_iterate(
    h: &FkModel,
    x0: f64,
    y0: f64,
    steps: usize,
    tol: f64,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    if steps == 0 || steps > 1_000_000 {
        return Err(Failure::validation(anyhow!(
            "steps must be in 1..=10^6, got {steps}"
        )));
    }
    let orbit = iterate_map(h, x0, y0, steps)?;
    if orbit.max_residual > tol {
        // The orbit was produced by exact map steps, so a residual
        // this large means root-finding error accumulated past the
        // certification threshold — a convergence problem, not a bad
        // input.
        return Err(Failure {
            code: 3,
            error: anyhow!(
                "orbit/stationarity correspondence check failed: residual {:.3e} > {tol:.3e}",
                orbit.max_residual
            ),
        });
    }
    let rows = || {
        orbit
            .points
            .iter()
            .take(steps)
            .enumerate()
            .map(|(i, &(x, y))| (i, x, y))
    };
    let body = match format {
        Format::Json => {
            let artifact = OrbitArtifact {
                steps,
                max_residual: orbit.max_residual,
                rows: rows().map(|(i, x, y)| OrbitRow { i, x, y }).collect(),
            };
            output::json_body(&artifact).map_err(Failure::validation)?
        }
        Format::Csv => output::csv_body(
            "i,x,y",
            rows().map(|(i, x, y)| vec![i.to_string(), output::cell(x), output::cell(y)]),
        ),
    };
    let summary = format!(
        "{steps} map steps, stationarity residual {:.3e}",
        orbit.max_residual
    );
    Ok(RunArtifacts::new(body, summary))
}

fn run_heteroclinic(
    h: &FkModel,
    direction: twistvar::Direction,
    half_window: usize,
    resolution: usize,
    opts: &MinimizeOptions,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    let pair = find_neighboring_pair(h, resolution)?;
    let het = heteroclinic_minimizer(h, &pair, direction, half_window, opts)?;
    let body = match format {
        Format::Json => output::json_body(&het).map_err(Failure::validation)?,
        Format::Csv => output::csv_body(
            "site,value",
            (het.config.lo..=het.config.hi())
                .map(|i| vec![i.to_string(), output::cell(het.config.value_at(i, &pair))]),
        ),
    };
    let summary = format!(
        "{direction:?} crossing energy {:.8e}, residual {:.3e}, monotone = {}",
        het.action, het.max_residual, het.monotone
    );
    Ok(RunArtifacts::new(body, summary))
}

fn run_gap(
    h: &FkModel,
    fiber_samples: usize,
    half_window: usize,
    resolution: usize,
    threads: usize,
    opts: &MinimizeOptions,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    let pair = find_neighboring_pair(h, resolution)?;
    let gap_opts = GapOptions {
        threads,
        ..GapOptions::default()
    };
    let report = detect_gap(h, &pair, fiber_samples, half_window, opts, &gap_opts)?;
    let body = match format {
        Format::Json => output::json_body(&report).map_err(Failure::validation)?,
        Format::Csv => output::csv_body(
            "x0,m_up,m_down",
            report.samples.iter().map(|s| {
                vec![
                    output::cell(s.x0),
                    output::cell(s.m_up),
                    output::cell(s.m_down),
                ]
            }),
        ),
    };
    let summary = format!(
        "margins e0 = {:.3e}, e1 = {:.3e}; {} up / {} down gap intervals",
        report.e0,
        report.e1,
        report.intervals_up.len(),
        report.intervals_down.len()
    );
    Ok(RunArtifacts::new(body, summary))
}

fn run_phi(
    h: &FkModel,
    delta: f64,
    n_max: usize,
    resolution: usize,
    opts: &MinimizeOptions,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    let pair = find_neighboring_pair(h, resolution)?;
    let est = estimate_phi(h, &pair, delta, n_max, opts)?;
    let body = match format {
        Format::Json => output::json_body(&est).map_err(Failure::validation)?,
        // The free-text caveat is JSON-only; the CSV carries the
        // numeric content.
        Format::Csv => output::csv_body(
            "delta,n_max,upper,lower",
            [vec![
                output::cell(est.delta),
                est.n_max.to_string(),
                output::cell(est.upper),
                output::cell(est.lower),
            ]],
        ),
    };
    let summary = format!(
        "loop-excursion bounds at delta = {delta}: lower {:.6e}, upper {:.6e}",
        est.lower, est.upper
    );
    Ok(RunArtifacts::new(body, summary))
}

/// Full transition artifact: the audited schedule construction plus
/// the minimization result.
#[derive(Serialize)]
struct TransitionArtifact {
    build: ScheduleBuild,
    result: TransitionResult,
}

#[allow(clippy::too_many_arguments)]
fn run_transition(
    h: &FkModel,
    mut blueprint: ScheduleBlueprint,
    max_block_spacing: Option<i64>,
    fiber_samples: usize,
    half_window: usize,
    resolution: usize,
    threads: usize,
    opts: &MinimizeOptions,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    if let Some(cap) = max_block_spacing {
        blueprint.max_block_spacing = cap;
    }
    let pair = find_neighboring_pair(h, resolution)?;
    let gap_opts = GapOptions {
        threads,
        ..GapOptions::default()
    };
    let gap = detect_gap(h, &pair, fiber_samples, half_window, opts, &gap_opts)?;
    let build = build_schedule(h, &pair, &gap, &blueprint, opts)?;
    let cache = BlockConstantCache::new();
    let result = minimize_transition(h, &pair, &build.schedule, opts, Some(&cache))?;

    let summary = format!(
        "J = {:.6e}, {} transitions, interior = {}, residual {:.3e}",
        result.action_value(),
        result.transitions,
        result.interior,
        result.max_residual()
    );
    let sites = result.to_csv(&pair);
    let artifacts = match format {
        Format::Json => {
            let artifact = TransitionArtifact { build, result };
            let mut a = RunArtifacts::new(
                output::json_body(&artifact).map_err(Failure::validation)?,
                summary,
            );
            a.extra.push(("sites.csv", sites));
            a
        }
        Format::Csv => RunArtifacts::new(sites, summary),
    };
    Ok(artifacts)
}

/// Rational-reduction artifact: the reduced diagonal minimum and the
/// lift of its constant configuration back to the full chain.
#[derive(Serialize)]
struct RationalArtifact {
    q: u32,
    p: i64,
    /// Diagonal argmin of the reduced one-step problem, canonicalized
    /// to the representative nearest zero.
    base_point: f64,
    /// Reduced action value at the diagonal minimum.
    diagonal_value: f64,
    /// Residual of the reduced seam derivative at the minimum.
    seam_residual: f64,
    /// Rotation-number estimates from the lifted window's two ends.
    rotation_estimate: (Option<f64>, Option<f64>),
    lift: Lift,
}

fn run_rational(
    h: &FkModel,
    q: u32,
    p: i64,
    half_periods: usize,
    tol: f64,
    format: Format,
) -> Result<RunArtifacts, Failure> {
    if half_periods == 0 {
        return Err(Failure::validation(anyhow!(
            "half_periods must be at least 1"
        )));
    }
    let reduction = twistvar::RationalReduction::new(h, q, p)?;
    let (t_raw, diagonal_value, seam_residual) = reduction.diagonal_argmin();
    // The diagonal scan may land on a periodic image of the ground
    // point; take the representative nearest zero so finite-window
    // rotation estimates are not offset by a full period.
    let t = t_raw - t_raw.round();
    let w = half_periods as i64;
    let y = Configuration::new(
        -w,
        vec![t; (2 * w + 1) as usize],
        Tail::Periodic(1, 0),
        Tail::Periodic(1, 0),
    )?;
    let lift = lift_rational(h, q, p, &y, tol)?;
    let rotation_estimate = lift.config.window_rotation_estimate();

    let summary = format!(
        "lifted ({q}, {p}) configuration, residual {:.3e}, rotation ≈ {}",
        lift.max_residual,
        rotation_estimate
            .1
            .map_or_else(|| "n/a".to_string(), |r| format!("{r:.6}")),
    );
    let body = match format {
        Format::Json => {
            let artifact = RationalArtifact {
                q,
                p,
                base_point: t,
                diagonal_value,
                seam_residual,
                rotation_estimate,
                lift,
            };
            output::json_body(&artifact).map_err(Failure::validation)?
        }
        Format::Csv => output::csv_body(
            "site,value",
            (lift.config.lo..=lift.config.hi()).map(|i| {
                let v = lift
                    .config
                    .value_at_with(i, None)
                    .expect("periodic tails evaluate everywhere");
                vec![i.to_string(), output::cell(v)]
            }),
        ),
    };
    Ok(RunArtifacts::new(body, summary))
}

/// Distinctness artifact: the audited base-schedule construction plus
/// the multi-schedule separation report.
#[derive(Serialize)]
struct DistinctnessArtifact {
    build: ScheduleBuild,
    report: twistvar::DistinctnessReport,
}

#[allow(clippy::too_many_arguments)]
fn run_distinctness(
    h: &FkModel,
    epsilon: f64,
    transitions: usize,
    sequences: &[Vec<usize>],
    max_block_spacing: Option<i64>,
    fiber_samples: usize,
    half_window: usize,
    resolution: usize,
    threads: usize,
    opts: &MinimizeOptions,
) -> Result<RunArtifacts, Failure> {
    if sequences.is_empty() {
        return Err(Failure::validation(anyhow!(
            "distinctness needs at least one index sequence"
        )));
    }
    let mut blueprint = ScheduleBlueprint::for_transitions(epsilon, transitions);
    // Sub-schedule selection is only geometrically meaningful over a
    // base whose spacings increase strictly.
    blueprint.strictly_increasing = true;
    if let Some(cap) = max_block_spacing {
        blueprint.max_block_spacing = cap;
    }
    let pair = find_neighboring_pair(h, resolution)?;
    let gap_opts = GapOptions {
        threads,
        ..GapOptions::default()
    };
    let gap = detect_gap(h, &pair, fiber_samples, half_window, opts, &gap_opts)?;
    let build = build_schedule(h, &pair, &gap, &blueprint, opts)?;
    let cache = BlockConstantCache::new();
    let report = multi_schedule_distinctness(
        h,
        &pair,
        &build.schedule,
        sequences,
        opts,
        threads,
        Some(&cache),
    )?;

    let summary = format!(
        "{} sub-schedules, all_distinct = {}, clearance {:.3e}",
        report.results.len(),
        report.all_distinct,
        report.clearance
    );
    let artifact = DistinctnessArtifact { build, report };
    Ok(RunArtifacts::new(
        output::json_body(&artifact).map_err(Failure::validation)?,
        summary,
    ))
}

/// The run manifest: a reproducibility record written next to every
/// result.
#[derive(Serialize)]
struct Manifest<'a> {
    /// Echo of the parsed configuration.
    config: &'a ExperimentConfig,
    config_path: String,
    output_path: String,
    format: &'static str,
    threads: usize,
    /// `--tol` override; `null` means library defaults.
    tolerance: Option<f64>,
    /// Recorded for provenance; the solvers are deterministic and do
    /// not consume randomness.
    seed: Option<u64>,
    versions: Versions,
    /// The only field that differs between reruns of one config.
    wall_time_seconds: f64,
}

#[derive(Serialize)]
struct Versions {
    cli: &'static str,
    core: &'static str,
}

fn manifest_body(
    cli: &Cli,
    config: &ExperimentConfig,
    target: &OutputTarget,
    wall_time_seconds: f64,
) -> anyhow::Result<String> {
    let manifest = Manifest {
        config,
        config_path: cli.config.display().to_string(),
        output_path: target.path.display().to_string(),
        format: target.format.name(),
        threads: cli.threads,
        tolerance: cli.tol,
        seed: cli.seed,
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: twistvar::VERSION,
        },
        wall_time_seconds,
    };
    output::json_body(&manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_distinct_exit_codes() {
        let cases = [
            (twistvar::Error::InvalidParameter("x".into()), 2),
            (
                twistvar::Error::NonConvergence {
                    what: "solve".into(),
                    residual: 1.0,
                    iterations: 5,
                    best: Box::new([]),
                },
                3,
            ),
            (
                twistvar::Error::HypothesisFailure {
                    name: "twist".into(),
                    detail: "margin below zero".into(),
                },
                4,
            ),
            (twistvar::Error::Precondition("no gap".into()), 5),
        ];
        for (err, code) in cases {
            assert_eq!(Failure::from(err).code(), code);
        }
    }

    #[test]
    fn map_iterate_rejects_oversized_orbits() {
        let h = FkModel::Cosine(twistvar::FrenkelKontorova::new(1.0, 1.0).unwrap());
        let Err(fail) = run_map_iterate(&h, 0.0, 0.0, 2_000_000, 1e-8, Format::Csv) else {
            panic!("oversized orbit must be rejected before computation");
        };
        assert_eq!(fail.code(), 2);
    }
}
