//! Command implementations. Each returns a [`CliError`] whose
//! [`CliError::exit_code`] follows the contract 0 success, 1 usage or
//! parse error, 2 infeasible, 3 numerical trouble.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use covsteer::builder::build_relaxed_program;
use covsteer::linalg::max_eigenvalue;
use covsteer::{
    build_exact_step2_program, estimate_statistics, propagate_statistics, simulate_batch, solve_exact_cs,
    solve_relaxed_cs, solve_relaxed_program, tightness_report, validate_terminal, NoiseFamily, ProblemInstance,
    RandomizedAffinePolicy, RelaxedSolution, SimulationConfig, SteeringError, SteeringMode, SteeringSettings,
    TerminalReport, ValidationSettings,
};
use covsteer_conic::export_standard_form;
use serde::Serialize;
use thiserror::Error;

use crate::config::{bundled, ConfigError, InstanceConfig, BUNDLED_NAMES};
use crate::output;
use crate::plot::{self, Ellipse};
use crate::policy::PolicyFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Steering(#[from] SteeringError),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Config(_) => 1,
            CliError::Steering(e) => match e {
                SteeringError::Infeasible(_) => 2,
                SteeringError::Model(_) | SteeringError::Program(_) | SteeringError::WrongMode(_) => 1,
                _ => 3,
            },
            CliError::ChecksFailed(_) => 3,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Loads a config file; `bundled:<name>` selects a bundled config.
pub fn load_config(spec: &str) -> Result<InstanceConfig, CliError> {
    let text = match spec.strip_prefix("bundled:") {
        Some(name) => bundled(name)
            .ok_or_else(|| CliError::Usage(format!("unknown bundled config {name:?}; known: {}", BUNDLED_NAMES.join(", "))))?
            .to_string(),
        None => read(Path::new(spec))?,
    };
    Ok(InstanceConfig::parse(&text)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub k: usize,
    pub m: f64,
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgramSummary {
    pub status: String,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub max_relative_relaxation_gap: f64,
    pub tight: bool,
    pub gaps: Vec<GapRow>,
}

impl ProgramSummary {
    fn new(sol: &RelaxedSolution, gap_tol: f64) -> Self {
        let report = tightness_report(sol, gap_tol);
        Self {
            status: sol.status.to_string(),
            objective: sol.objective,
            iterations: sol.iterations,
            primal_residual: sol.residuals.primal,
            dual_residual: sol.residuals.dual,
            relative_gap: sol.residuals.relative_gap,
            max_relative_relaxation_gap: report.max_relative_gap,
            tight: report.tight,
            gaps: sol
                .gaps
                .iter()
                .enumerate()
                .map(|(k, g)| GapRow {
                    k,
                    m: g.m,
                    x: g.x,
                    u: g.u,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub name: String,
    pub mode: SteeringMode,
    /// Relaxed program (relaxed steering, or step 1).
    pub relaxed: ProgramSummary,
    pub step2: Option<ProgramSummary>,
    pub deterministic: bool,
    pub expected_cost: f64,
    /// `‖μ_N − μ_d‖_∞` under moment propagation.
    pub terminal_mean_error: f64,
    /// Exact: `max |Σ_N − Σ_d|`. Relaxed: `λ_max(Σ_N − Σ_d)`.
    pub terminal_covariance_error: f64,
    pub seconds: f64,
}

pub struct SolveOutcome {
    pub instance: ProblemInstance,
    pub policy: RandomizedAffinePolicy,
    pub report: SolveReport,
    /// Solution whose gaps decide the policy (step 2 for exact steering).
    pub final_solution: RelaxedSolution,
}

/// Runs relaxed or two-step exact steering per the instance mode.
pub fn run_solve(cfg: &InstanceConfig, settings: &SteeringSettings) -> Result<SolveOutcome, CliError> {
    let instance = cfg.to_instance()?;
    let start = Instant::now();
    let (relaxed, step2, policy) = match instance.mode() {
        SteeringMode::Relaxed => {
            let out = solve_relaxed_cs(&instance, settings)?;
            (out.solution, None, out.policy)
        }
        SteeringMode::Exact => {
            let sol = solve_exact_cs(&instance, settings)?;
            (sol.relaxed, Some(sol.step2), sol.policy)
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let stats = propagate_statistics(&instance, &policy).map_err(SteeringError::from)?;
    let cost = covsteer::expected_cost(&instance, &stats, &policy).map_err(SteeringError::from)?;
    let n = instance.horizon();
    let bd = instance.boundary();
    let diff = &stats.sigma[n] - bd.sigmad();
    let terminal_covariance_error = match instance.mode() {
        SteeringMode::Exact => diff.amax(),
        SteeringMode::Relaxed => max_eigenvalue(&diff),
    };
    let report = SolveReport {
        name: cfg.name.clone(),
        mode: instance.mode(),
        relaxed: ProgramSummary::new(&relaxed, settings.gap_tol),
        step2: step2.as_ref().map(|s| ProgramSummary::new(s, settings.gap_tol)),
        deterministic: policy.is_deterministic(),
        expected_cost: cost,
        terminal_mean_error: (&stats.mu[n] - bd.mud()).amax(),
        terminal_covariance_error,
        seconds,
    };
    Ok(SolveOutcome {
        instance,
        policy,
        report,
        final_solution: step2.unwrap_or(relaxed),
    })
}

fn report_text(r: &SolveReport) -> String {
    let mut s = format!("{} ({} steering)\n", if r.name.is_empty() { "instance" } else { &r.name }, r.mode);
    let line = |label: &str, p: &ProgramSummary| {
        format!(
            "  {label}: {} in {} iterations, objective {:.10}, max relative gap {:.3e}\n",
            p.status, p.iterations, p.objective, p.max_relative_relaxation_gap
        )
    };
    s += &line("relaxed program", &r.relaxed);
    if let Some(p) = &r.step2 {
        s += &line("step 2", p);
        let worst = p.gaps.iter().map(|g| g.m).fold(0.0, f64::max);
        s += &format!("  step-2 M gap: {worst:.6}\n");
    }
    s += &format!(
        "  policy: {}\n  expected cost {:.10}\n  terminal mean error {:.3e}, covariance error {:.3e}\n  time {:.3} s\n",
        if r.deterministic { "deterministic" } else { "randomized" },
        r.expected_cost,
        r.terminal_mean_error,
        r.terminal_covariance_error,
        r.seconds
    );
    s
}

fn write_solve_outputs(out: &Path, outcome: &SolveOutcome) -> Result<(), CliError> {
    create_dir(out)?;
    let stats = propagate_statistics(&outcome.instance, &outcome.policy).map_err(SteeringError::from)?;
    write(&out.join("report.json"), serde_json::to_string_pretty(&outcome.report).expect("report serializes"))?;
    write(
        &out.join("policy.json"),
        serde_json::to_string_pretty(&PolicyFile::from_policy(&outcome.policy)).expect("policy serializes"),
    )?;
    write(&out.join("policy.csv"), output::policy_csv(&outcome.policy))?;
    write(&out.join("statistics.csv"), output::statistics_csv(&stats))?;
    write(&out.join("gaps.csv"), output::gaps_csv(&outcome.final_solution.gaps))?;
    Ok(())
}

pub fn cmd_solve(config: &str, out: &Path) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let outcome = run_solve(&cfg, &cfg.solver.settings())?;
    write_solve_outputs(out, &outcome)?;
    Ok(report_text(&outcome.report))
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub family: Option<NoiseFamily>,
    pub axes: (usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationJson {
    pub samples: usize,
    pub seed: u64,
    pub family: String,
    pub mode: SteeringMode,
    pub mean_error: f64,
    pub mean_budget: f64,
    pub covariance_discrepancy: f64,
    pub covariance_budget: f64,
    pub pass: bool,
}

pub fn simulation_config(cfg: &InstanceConfig, opts: &SimulateOptions) -> SimulationConfig {
    let mut sim = cfg.simulation.to_config();
    if let Some(s) = opts.samples {
        sim.samples = s;
    }
    if let Some(s) = opts.seed {
        sim.seed = s;
    }
    if let Some(f) = opts.family {
        sim.multiplicative = f;
    }
    sim
}

pub fn cmd_simulate(config: &str, policy: &Path, out: &Path, opts: &SimulateOptions) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let instance = cfg.to_instance()?;
    let file: PolicyFile = serde_json::from_str(&read(policy)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", policy.display())))?;
    let policy = file.to_policy().map_err(CliError::Usage)?;
    let (n, m) = (instance.dynamics().state_dim(), instance.dynamics().input_dim());
    if policy.horizon() != instance.horizon() || policy.base().state_dim() != n || policy.base().input_dim() != m {
        return Err(CliError::Usage("policy dimensions do not match the instance".into()));
    }
    if opts.axes.0 >= n || opts.axes.1 >= n {
        return Err(CliError::Usage(format!("plot axes must be below {n}")));
    }
    let sim = simulation_config(&cfg, opts);
    if sim.samples < 2 {
        return Err(CliError::Usage("at least two samples are needed".into()));
    }
    let batch = simulate_batch(&instance, &policy, &sim);
    let stats = estimate_statistics(&batch).expect("two or more samples");
    let report = validate_terminal(&batch, instance.boundary(), instance.mode(), &ValidationSettings::default())
        .expect("two or more samples");
    create_dir(out)?;
    write(&out.join("trajectories.csv"), output::trajectories_csv(&batch, n, m))?;
    write(&out.join("sample_statistics.csv"), output::sample_statistics_csv(&stats))?;
    let json = validation_json(&sim, instance.mode(), &report);
    write(&out.join("validation.json"), serde_json::to_string_pretty(&json).expect("serializes"))?;
    let bd = instance.boundary();
    let last = instance.horizon();
    let paths: Vec<_> = batch.trajectories.iter().map(|t| t.states.clone()).collect();
    let svg = plot::render(
        &paths,
        &[
            Ellipse {
                label: "initial",
                color: "#1f77b4",
                mean: bd.mu0(),
                cov: bd.sigma0(),
            },
            Ellipse {
                label: "target",
                color: "#d62728",
                mean: bd.mud(),
                cov: bd.sigmad(),
            },
            Ellipse {
                label: "terminal (sample)",
                color: "#2ca02c",
                mean: &stats.mean[last],
                cov: &stats.covariance[last],
            },
        ],
        opts.axes,
        &format!("{} steering, {} noise, {} samples", instance.mode(), sim.multiplicative, sim.samples),
    );
    write(&out.join("plot.svg"), svg)?;
    Ok(format!(
        "{} samples ({} noise): terminal mean error {:.3e} (budget {:.3e}), covariance discrepancy {:.3e} (budget {:.3e}): {}\n",
        sim.samples,
        sim.multiplicative,
        report.mean_error,
        report.mean_budget,
        report.covariance_discrepancy,
        report.covariance_budget,
        if report.pass { "PASS" } else { "FAIL" }
    ))
}

fn validation_json(sim: &SimulationConfig, mode: SteeringMode, r: &TerminalReport) -> ValidationJson {
    ValidationJson {
        samples: sim.samples,
        seed: sim.seed,
        family: sim.multiplicative.to_string(),
        mode,
        mean_error: r.mean_error,
        mean_budget: r.mean_budget,
        covariance_discrepancy: r.covariance_discrepancy,
        covariance_budget: r.covariance_budget,
        pass: r.pass,
    }
}

/// Which program `export` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportProgram {
    Relaxed,
    /// Solves the relaxed program first to fix means and feedforward.
    Step2,
}

pub fn export_text(cfg: &InstanceConfig, which: ExportProgram) -> Result<String, CliError> {
    let instance = cfg.to_instance()?;
    let program = match which {
        ExportProgram::Relaxed => build_relaxed_program(&instance).map_err(SteeringError::from)?.0,
        ExportProgram::Step2 => {
            let step1 = solve_relaxed_program(&instance, &cfg.solver.settings())?;
            build_exact_step2_program(&instance, &step1)?.0
        }
    };
    Ok(export_standard_form(&program))
}

pub fn cmd_export(config: &str, out: &Path, which: ExportProgram) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let text = export_text(&cfg, which)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write(out, text)?;
    Ok(format!("wrote {}\n", out.display()))
}

/// One line of the reproduction table.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, requirement: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            requirement: requirement.into(),
            pass,
        }
    }
    fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self::new(name, value, format!("{target} ± {tol}"), (value - target).abs() <= tol)
    }
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, format!("≤ {bound:e}"), value <= bound)
    }
}

fn time_check(name: &str, elapsed: Duration, limit: f64) -> Check {
    Check::new(name, elapsed.as_secs_f64(), format!("< {limit} s"), elapsed.as_secs_f64() < limit)
}

fn monte_carlo_checks(outcome: &SolveOutcome, cfg: &InstanceConfig, checks: &mut Vec<Check>) {
    for family in NoiseFamily::UNIT_VARIANCE {
        let mut sim = cfg.simulation.to_config();
        sim.multiplicative = family;
        let batch = simulate_batch(&outcome.instance, &outcome.policy, &sim);
        let r = validate_terminal(
            &batch,
            outcome.instance.boundary(),
            outcome.instance.mode(),
            &ValidationSettings::default(),
        )
        .expect("bundled sample counts exceed one");
        checks.push(Check::new(
            format!("Monte Carlo terminal covariance, {family}, S={}", sim.samples),
            r.covariance_discrepancy,
            format!("≤ {:.3e}", r.covariance_budget),
            r.covariance_discrepancy <= r.covariance_budget,
        ));
        checks.push(Check::new(
            format!("Monte Carlo terminal mean, {family}"),
            r.mean_error,
            format!("≤ {:.3e}", r.mean_budget),
            r.mean_error <= r.mean_budget,
        ));
    }
}

/// Runs a bundled scenario and evaluates its checks.
pub fn reproduce_checks(name: &str) -> Result<(SolveOutcome, Vec<Check>), CliError> {
    let text = bundled(name)
        .ok_or_else(|| CliError::Usage(format!("unknown scenario {name:?}; known: {}", BUNDLED_NAMES.join(", "))))?;
    let cfg = InstanceConfig::parse(text)?;
    let settings = cfg.solver.settings();
    let start = Instant::now();
    let outcome = run_solve(&cfg, &settings)?;
    let elapsed = start.elapsed();
    let r = &outcome.report;
    let mut checks = Vec::new();
    match name {
        "example1" => {
            let sol = &outcome.final_solution;
            checks.push(Check::within("step-2 gap M0 - L0 Sigma0^-1 L0^T", sol.gaps[0].m, 0.148, 0.01));
            checks.push(Check::within(
                "step-2 objective tr(R0 M0)",
                sol.control_covariance_cost(&outcome.instance),
                1.49,
                0.05,
            ));
            checks.push(Check::new("policy is randomized", f64::from(u8::from(!r.deterministic)), "1", !r.deterministic));
            checks.push(Check::at_most("max |Sigma_1 - Sigma_d|", r.terminal_covariance_error, 1e-6));
            checks.push(time_check("solve time", elapsed, 1.0));
        }
        _ => {
            checks.push(Check::new(
                "relaxed program status",
                0.0,
                "optimal",
                r.relaxed.status == covsteer_conic::SolveStatus::Optimal.to_string(),
            ));
            checks.push(Check::at_most("max |mu_N - mu_d|", r.terminal_mean_error, 1e-6));
            match outcome.instance.mode() {
                SteeringMode::Relaxed => {
                    checks.push(Check::at_most("lambda_max(Sigma_N - Sigma_d)", r.terminal_covariance_error, 1e-6));
                    checks.push(Check::at_most("max relative relaxation gap", r.relaxed.max_relative_relaxation_gap, settings.gap_tol));
                }
                SteeringMode::Exact => {
                    checks.push(Check::at_most("max |Sigma_N - Sigma_d|", r.terminal_covariance_error, 1e-6));
                }
            }
            checks.push(time_check("solve time", elapsed, 60.0));
            monte_carlo_checks(&outcome, &cfg, &mut checks);
        }
    }
    Ok((outcome, checks))
}

pub fn cmd_reproduce(name: &str, out: Option<&Path>) -> Result<String, CliError> {
    let (outcome, checks) = reproduce_checks(name)?;
    if let Some(dir) = out {
        write_solve_outputs(dir, &outcome)?;
        write(&dir.join("checks.json"), serde_json::to_string_pretty(&checks).expect("serializes"))?;
    }
    let mut s = report_text(&outcome.report);
    for c in &checks {
        s += &format!(
            "{}  {:<52} {:>14.6e}  {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.requirement
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        print!("{s}");
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(s)
}
