//! Command-line surface: `simulate`, `filter-solve`, `constants`, `study`,
//! `verify`. Flags override config keys which override defaults. Exit codes:
//! 2 = configuration error, 3 = solver failure, 4 = invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsalpha::constants::{compute_chain, ModelParams};
use nsalpha::evolution::{EvolutionError, FilterMode, Scheme, Simulation};
use nsalpha::experiments::{self, StudyKind};
use nsalpha::filter::{solve_filter_default, verify_h1_bound, verify_h2_bound, IndicatorKind};
use nsalpha::io::{
    self, canonical_text, parse_config_file, read_ledger_csv, read_snapshot_on_grid,
    write_ledger_csv, write_snapshot, ConfigError, RunConfig,
};
use nsalpha::spectral::DIVERGENCE_TOL;

#[derive(Parser)]
#[command(
    name = "nsalpha",
    version,
    about = "Pseudo-spectral Navier-Stokes-alpha solver with a nonlinear filter equation on the periodic 3-torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advance the coupled system; writes the energy ledger and snapshots.
    Simulate(SimulateArgs),
    /// Solve one elliptic filter instance and print the bound reports.
    FilterSolve(FilterSolveArgs),
    /// Evaluate the constant chain up to the attractor dimension bound.
    Constants(ConstantsArgs),
    /// Run a scripted study; writes its CSV table and verdict.
    Study(StudyArgs),
    /// Re-check the invariants of an existing snapshot + ledger.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct Overrides {
    /// viscosity (overrides [physics] nu)
    #[arg(long)]
    nu: Option<f64>,
    /// filter length scale (overrides [physics] alpha)
    #[arg(long)]
    alpha: Option<f64>,
    /// indicator lower bound (overrides [physics] beta)
    #[arg(long)]
    beta: Option<f64>,
    /// slab length (overrides [time] dt)
    #[arg(long)]
    dt: Option<f64>,
    /// horizon (overrides [time] t_end)
    #[arg(long)]
    t_end: Option<f64>,
    /// duhamel_picard | imex_cn (overrides [time] scheme)
    #[arg(long)]
    scheme: Option<String>,
    /// initial data seed (overrides [initial] seed)
    #[arg(long)]
    seed: Option<u64>,
    /// output directory (overrides [output] dir)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// run configuration file
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// echo the canonical configuration before running
    #[arg(long)]
    echo_config: bool,
}

#[derive(Args)]
struct FilterSolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    l: f64,
    #[arg(long, default_value_t = 1.0)]
    phi_l2: f64,
    #[arg(long, default_value_t = 1.0)]
    phi_h1: f64,
    #[arg(long, default_value_t = 1.0)]
    c_a: f64,
    #[arg(long, default_value_t = 1.0)]
    c_a_prime: f64,
    #[arg(long, default_value_t = 1.0)]
    f_hminus1: f64,
    #[arg(long, default_value_t = 1.0)]
    u0_l2: f64,
    #[arg(long, default_value_t = 1.0)]
    t_horizon: f64,
    /// ||f||_{L^2}, enables the Grashof block together with --kappa0
    #[arg(long)]
    f_l2: Option<f64>,
    /// energy input frequency for kappa_D = Gr kappa0
    #[arg(long)]
    kappa0: Option<f64>,
    /// substitute the on-attractor data (u0 -> R, T -> T_eta)
    #[arg(long)]
    on_attractor: bool,
    /// emit a CSV row instead of the key = value report
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct StudyArgs {
    /// alpha_to_zero | beta_to_one | continuous_dependence | absorbing_set | appendix_epsilon
    kind: String,
    /// optional config; its [study] params and scenario keys override defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory for the CSV and verdict files
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    ledger: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

enum Failure {
    Config(String),
    Solver(String),
    Invariant(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Invariant(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Invariant(m) | Failure::Other(m) => {
                m
            }
        }
    }
}

impl From<Vec<ConfigError>> for Failure {
    fn from(errs: Vec<ConfigError>) -> Self {
        Failure::Config(
            errs.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("\n"),
        )
    }
}

impl From<EvolutionError> for Failure {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::EnergyViolation { .. } => Failure::Invariant(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<nsalpha::filter::FilterError> for Failure {
    fn from(e: nsalpha::filter::FilterError) -> Self {
        Failure::Solver(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::FilterSolve(args) => filter_solve(args),
        Command::Constants(args) => constants(args),
        Command::Study(args) => study(args),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_config(path: &std::path::Path, overrides: &Overrides) -> Result<RunConfig, Failure> {
    let mut config = parse_config_file(path)?;
    if let Some(nu) = overrides.nu {
        config.nu = nu;
    }
    if let Some(alpha) = overrides.alpha {
        config.alpha = alpha;
    }
    if let Some(beta) = overrides.beta {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Failure::Config(format!(
                "--beta must lie in the open interval (0, 1), got {beta}"
            )));
        }
        config.indicator = match config.indicator.kind {
            IndicatorKind::ConstantOne => config.indicator,
            IndicatorKind::SmoothLocal { c } => {
                nsalpha::filter::IndicatorSpec::smooth_local(beta, c)
            }
            IndicatorKind::GlobalEnergy { c } => {
                nsalpha::filter::IndicatorSpec::global_energy(beta, c)
            }
        };
    }
    if let Some(dt) = overrides.dt {
        config.time.dt = dt;
    }
    if let Some(t_end) = overrides.t_end {
        config.time.t_end = t_end;
    }
    if let Some(scheme) = &overrides.scheme {
        config.time.scheme = match scheme.as_str() {
            "duhamel_picard" => Scheme::DuhamelPicard,
            "imex_cn" => Scheme::ImexCn,
            other => {
                return Err(Failure::Config(format!(
                    "--scheme must be duhamel_picard or imex_cn, got {other}"
                )))
            }
        };
    }
    if let Some(seed) = overrides.seed {
        if let io::InitialConfig::Random { seed: s, .. } = &mut config.initial {
            *s = seed;
        }
    }
    if let Some(out) = &overrides.out {
        config.output.dir = out.clone();
    }
    Ok(config)
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let config = load_config(&args.config, &args.overrides)?;
    if args.echo_config {
        print!("{}", canonical_text(&config));
    }
    let forcing = config
        .build_forcing()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let u0 = config
        .build_initial()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let problem = config.build_problem(&forcing)?;
    println!(
        "resolved_kappa = {}",
        io::fmt17(config.resolved_kappa(&forcing))
    );

    std::fs::create_dir_all(&config.output.dir)?;
    let mut sim = Simulation::new(
        config.nu,
        u0,
        forcing,
        FilterMode::Solve(problem),
        config.step_config(),
    )?;

    let steps = (config.time.t_end / config.time.dt).round() as usize;
    let mut cfl_warned = false;
    for step in 1..=steps {
        let report = sim.step()?;
        if report.cfl_exceeded && !cfl_warned {
            eprintln!(
                "warning: CFL diagnostic {:.3} above 0.5 at t = {:.6}; consider a smaller dt",
                report.cfl, report.t
            );
            cfl_warned = true;
        }
        if config.output.snapshot_interval > 0 && step % config.output.snapshot_interval == 0 {
            let path = config.output.dir.join(format!("snapshot_{step:06}.snap"));
            write_snapshot(sim.state().u.field(), sim.state().t, &path)
                .map_err(|e| Failure::Other(e.to_string()))?;
        }
    }
    let final_path = config.output.dir.join("snapshot_final.snap");
    write_snapshot(sim.state().u.field(), sim.state().t, &final_path)
        .map_err(|e| Failure::Other(e.to_string()))?;
    let ledger_path = config.output.dir.join(&config.output.ledger);
    let ledger = &sim.state().ledger;
    write_ledger_csv(&ledger_path, ledger.rows(), |i| ledger.row_budgets()[i])
        .map_err(|e| Failure::Other(e.to_string()))?;

    println!("steps = {steps}");
    println!("t_final = {}", io::fmt17(sim.state().t));
    println!("energy_final = {}", io::fmt17(sim.state().u.l2_norm_sq()));
    println!("max_abs_slack = {}", io::fmt17(ledger.max_abs_slack()));
    println!("slack_budget = {}", io::fmt17(ledger.budget()));
    println!("ledger = {}", ledger_path.display());
    println!("snapshot = {}", final_path.display());
    Ok(())
}

fn filter_solve(args: FilterSolveArgs) -> Result<(), Failure> {
    let config = load_config(&args.config, &args.overrides)?;
    let forcing = config
        .build_forcing()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let u = config
        .build_initial()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let problem = config.build_problem(&forcing)?;
    println!(
        "resolved_kappa = {}",
        io::fmt17(config.resolved_kappa(&forcing))
    );

    let solution = solve_filter_default(&problem, &u)?;
    println!("iterations = {}", solution.iterations);
    println!("residual = {}", io::fmt17(solution.residual));
    println!("datum_l2 = {}", io::fmt17(u.l2_norm()));
    println!("filtered_l2 = {}", io::fmt17(solution.u_alpha.l2_norm()));
    println!(
        "l2_contraction = {}",
        if solution.u_alpha.l2_norm() <= u.l2_norm() * (1.0 + 1e-8) {
            "PASS"
        } else {
            "FAIL"
        }
    );

    let h1 = verify_h1_bound(&problem, &u, &solution);
    println!("h1_ratio = {}", io::fmt17(h1.measured));
    println!("h1_bound = {}", io::fmt17(h1.bound));
    println!(
        "h1_bound_check = {}",
        if h1.satisfied { "PASS" } else { "FAIL" }
    );

    match verify_h2_bound(&problem, &u, &solution) {
        Ok(h2) => {
            println!("h2_norm = {}", io::fmt17(h2.measured));
            println!("h2_bound = {}", io::fmt17(h2.bound));
            println!(
                "h2_bound_check = {}",
                if h2.satisfied { "PASS" } else { "FAIL" }
            );
            if !h2.satisfied {
                return Err(Failure::Invariant("H^2 bound violated".into()));
            }
        }
        Err(e) => println!("h2_bound_check = SKIPPED ({e})"),
    }
    if !h1.satisfied {
        return Err(Failure::Invariant("H^1 bound violated".into()));
    }
    Ok(())
}

fn constants(args: ConstantsArgs) -> Result<(), Failure> {
    let mut params = ModelParams {
        alpha: args.alpha,
        beta: args.beta,
        nu: args.nu,
        l: args.l,
        phi_l2: args.phi_l2,
        phi_h1: args.phi_h1,
        c_a: args.c_a,
        c_a_prime: args.c_a_prime,
        f_hminus1: args.f_hminus1,
        u0_l2: args.u0_l2,
        t_horizon: args.t_horizon,
        f_l2: args.f_l2,
        kappa0: args.kappa0,
    };
    if args.on_attractor {
        params = params.on_attractor();
    }
    let report = compute_chain(&params).map_err(|e| Failure::Config(e.to_string()))?;
    if args.csv {
        println!("{}", nsalpha::constants::ConstantsReport::csv_header());
        println!("{}", report.csv_row());
    } else {
        print!("{}", report.to_kv_text());
    }
    Ok(())
}

fn study(args: StudyArgs) -> Result<(), Failure> {
    let kind = StudyKind::parse(&args.kind).ok_or_else(|| {
        Failure::Config(format!(
            "unknown study '{}'; expected one of alpha_to_zero, beta_to_one, \
             continuous_dependence, absorbing_set, appendix_epsilon",
            args.kind
        ))
    })?;
    let mut spec = experiments::default_spec(kind);
    if let Some(path) = &args.config {
        let config = parse_config_file(path)?;
        let sc = &mut spec.scenario;
        sc.grid = config.grid();
        sc.nu = config.nu;
        sc.alpha = config.alpha;
        sc.beta = config.indicator.beta;
        if let IndicatorKind::SmoothLocal { c } | IndicatorKind::GlobalEnergy { c } =
            config.indicator.kind
        {
            sc.indicator_c = c;
        }
        if let io::KappaMode::Fixed(kappa) = config.kappa_mode {
            sc.kappa = kappa;
        }
        match &config.forcing {
            io::ForcingConfig::None => sc.forcing_seed = None,
            io::ForcingConfig::Steady {
                seed,
                slope,
                hminus1,
            } => {
                sc.forcing_seed = Some(*seed);
                sc.forcing_slope = *slope;
                sc.forcing_hminus1 = *hminus1;
            }
            io::ForcingConfig::File(_) => {
                return Err(Failure::Config(
                    "study scenarios use seeded forcing, not forcing files".into(),
                ))
            }
        }
        if let io::InitialConfig::Random {
            seed,
            slope,
            amplitude,
        } = &config.initial
        {
            sc.initial_seed = *seed;
            sc.initial_slope = *slope;
            sc.initial_amplitude = *amplitude;
        }
        sc.t_end = config.time.t_end;
        sc.dt = config.time.dt;
        if let Some(study_cfg) = &config.study {
            if study_cfg.kind == kind && !study_cfg.params.is_empty() {
                spec.params = study_cfg.params.clone();
            }
        }
    }

    let result = experiments::run_study(&spec).map_err(|e| Failure::Solver(e.to_string()))?;
    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join(format!("{}.csv", kind.name()));
    std::fs::write(&csv_path, result.to_csv())?;
    let verdict_path = args.out.join(format!("{}_verdict.txt", kind.name()));
    std::fs::write(&verdict_path, result.verdict_text())?;
    print!("{}", result.verdict_text());
    println!("csv = {}", csv_path.display());
    if result.verdict {
        Ok(())
    } else {
        Err(Failure::Invariant(format!(
            "study {} failed its verdict",
            kind.name()
        )))
    }
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let config = load_config(&args.config, &args.overrides)?;
    let grid = config.grid();
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("verify {name}: {}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let (field, t) =
        read_snapshot_on_grid(&grid, &args.snapshot).map_err(|e| Failure::Config(e.to_string()))?;
    check("snapshot grid matches config", true);
    check("snapshot time finite", t.is_finite());
    check(
        "zero mean",
        field.mode([0, 0, 0]).iter().all(|c| c.norm() == 0.0),
    );
    let reality = grid.half_spectrum().iter().all(|&z| {
        let a = field.mode(z);
        let b = field.mode([-z[0], -z[1], -z[2]]);
        (0..3).all(|c| a[c].conj() == b[c])
    });
    check("reality constraint", reality);
    check(
        "divergence-free",
        field.divergence_residual() <= DIVERGENCE_TOL,
    );

    let rows = read_ledger_csv(&args.ledger).map_err(|e| Failure::Config(e.to_string()))?;
    check("ledger nonempty", !rows.is_empty());
    if let Some((first, _)) = rows.first() {
        let u0_energy = first.energy;
        let consistent = rows.iter().all(|(r, _)| {
            let recomputed = u0_energy + r.work - r.energy - r.dissipation;
            (recomputed - r.slack).abs() <= 1e-9 * u0_energy.max(1.0)
        });
        check("ledger slack column consistent", consistent);
        let inequality = rows.iter().all(|(r, budget)| r.slack >= -budget);
        check("energy inequality row-wise", inequality);
        let monotone_t = rows.windows(2).all(|w| w[1].0.t > w[0].0.t);
        check("ledger times strictly increasing", monotone_t);
    }

    // one filter solve on the snapshot state
    let forcing = config
        .build_forcing()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let problem = config.build_problem(&forcing)?;
    let u = field.leray_project();
    let solution = solve_filter_default(&problem, &u)?;
    check(
        "filter L^2 contraction",
        solution.u_alpha.l2_norm() <= u.l2_norm() * (1.0 + 1e-8),
    );
    let h1 = verify_h1_bound(&problem, &u, &solution);
    check("filter H^1 bound", h1.satisfied);

    if failures == 0 {
        println!("verify: all invariants PASS");
        Ok(())
    } else {
        Err(Failure::Invariant(format!(
            "{failures} invariant check(s) failed"
        )))
    }
}
