//! `irsdet`: phase-shift design, misdetection maps and sweeps for
//! IRS-assisted device detection.

mod error;
mod scenario_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irsdet::designs::{parse_design, realize, worst_case_gain, write_design, DesignSpec};
use irsdet::detector::noncentrality_from_gain;
use irsdet::geometry::{coverage_grid, CoverageArea};
use irsdet::irs::PhaseShiftVector;
use irsdet::simulation::{
    analytic_md_map, false_alarm_csv, map_csv, monte_carlo_csv, monte_carlo_false_alarm, monte_carlo_md,
    scattering_sweep, sweep_area_sizes, sweep_csv, worst_case_md_on, EvalMode, ScenarioConfig,
};

use crate::error::CliError;
use crate::scenario_file::{load_scenario, ScenarioFile};

/// Thread-count override for the internal worker pool.
const THREADS_ENV: &str = "IRSDET_THREADS";
const DEFAULT_TRIALS: usize = 10_000;

#[derive(Parser)]
#[command(name = "irsdet", version, about = "IRS-assisted active device detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a phase-shift design and write it as a design file.
    Design(DesignArgs),
    /// Analytic LoS misdetection map of a design.
    Map(MapArgs),
    /// Compare designs over area sizes, or a design over scattering ratios.
    Sweep(SweepArgs),
    /// Monte-Carlo misdetection rates (or the noise-only alarm rate).
    Montecarlo(MonteCarloArgs),
    /// Check a scenario (and optionally a design) and print its fingerprint.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Optimized,
    Linear,
    Quadratic,
}

#[derive(Args)]
struct DesignFlags {
    /// Design variant; defaults to the scenario's.
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Tile count K for the linear design.
    #[arg(long)]
    tiles: Option<usize>,
    /// Randomization count G for the optimized design.
    #[arg(long = "G")]
    g: Option<usize>,
    /// Randomization seed for the optimized design.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    flags: DesignFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    design: PathBuf,
    /// Evaluation grid; defaults to the scenario's design grid.
    #[arg(long, num_args = 2, value_names = ["NY", "NZ"])]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Area side lengths in meters, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<f64>>,
    /// Designs to compare: optimized, quadratic, linear<K>.
    #[arg(long, value_delimiter = ',', default_value = "linear1,linear4,quadratic,optimized")]
    designs: Vec<String>,
    /// Scattered-power ratios; switches to a scattering sweep.
    #[arg(long, value_delimiter = ',')]
    rhos: Option<Vec<f64>>,
    /// Design file for the scattering sweep; otherwise the first of --designs.
    #[arg(long)]
    design: Option<PathBuf>,
    /// `trials=N`: evaluate by Monte-Carlo instead of analytically.
    #[arg(long)]
    montecarlo: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Monte-Carlo evaluation grid; defaults to the scenario's design grid.
    #[arg(long, num_args = 2, value_names = ["NY", "NZ"])]
    grid: Option<Vec<usize>>,
    #[arg(long = "G")]
    g: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optimized repetitions averaged per size.
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, required_unless_present = "false_alarm")]
    design: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, num_args = 2, value_names = ["NY", "NZ"])]
    grid: Option<Vec<usize>>,
    /// Override the scenario's scattered-power ratio.
    #[arg(long)]
    rho: Option<f64>,
    /// Noise-only trials: report the empirical alarm rate.
    #[arg(long)]
    false_alarm: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    design: Option<PathBuf>,
    /// Print the normalized scenario file.
    #[arg(long)]
    emit: bool,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_design(path: &Path, scenario: &ScenarioConfig) -> Result<PhaseShiftVector, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_design(&text, &scenario.geom)
        .map(|f| f.w)
        .map_err(|e| match e {
            irsdet::Error::Format(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => CliError::Runtime(format!("{}: {other}", path.display())),
        })
}

fn eval_area(scenario: &ScenarioConfig, grid: &Option<Vec<usize>>) -> CoverageArea {
    match grid.as_deref() {
        Some([ny, nz]) => scenario.area.with_grid(*ny, *nz),
        _ => scenario.area,
    }
}

/// Optimized spec from the scenario, with flag overrides.
fn optimized_spec(scenario: &ScenarioConfig, g: Option<usize>, seed: Option<u64>, reps: Option<usize>) -> DesignSpec {
    let (g0, s0, r0) = match scenario.design {
        DesignSpec::Optimized {
            randomization_count,
            seed,
            repetitions,
        } => (randomization_count, seed, repetitions),
        _ => (3000, 7, 80),
    };
    DesignSpec::Optimized {
        randomization_count: g.unwrap_or(g0),
        seed: seed.unwrap_or(s0),
        repetitions: reps.unwrap_or(r0),
    }
}

fn design_spec(scenario: &ScenarioConfig, flags: &DesignFlags) -> DesignSpec {
    let variant = flags.variant.unwrap_or(match scenario.design {
        DesignSpec::Optimized { .. } => Variant::Optimized,
        DesignSpec::Linear { .. } => Variant::Linear,
        DesignSpec::Quadratic => Variant::Quadratic,
    });
    match variant {
        Variant::Optimized => optimized_spec(scenario, flags.g, flags.seed, Some(1)),
        Variant::Linear => DesignSpec::Linear {
            tile_count: flags.tiles.unwrap_or(match scenario.design {
                DesignSpec::Linear { tile_count } => tile_count,
                _ => 1,
            }),
        },
        Variant::Quadratic => DesignSpec::Quadratic,
    }
}

fn parse_design_label(label: &str, scenario: &ScenarioConfig, args: &SweepArgs) -> Result<DesignSpec, CliError> {
    match label.trim() {
        "optimized" => Ok(optimized_spec(scenario, args.g, args.seed, args.repetitions)),
        "quadratic" => Ok(DesignSpec::Quadratic),
        other => other
            .strip_prefix("linear")
            .and_then(|k| k.parse().ok())
            .map(|tile_count| DesignSpec::Linear { tile_count })
            .ok_or_else(|| CliError::Parse(format!("unknown design `{other}`"))),
    }
}

fn parse_montecarlo(arg: &str) -> Result<usize, CliError> {
    arg.strip_prefix("trials=")
        .and_then(|n| n.parse().ok())
        .filter(|&n: &usize| n > 0)
        .ok_or_else(|| CliError::Parse(format!("--montecarlo expects trials=N, got `{arg}`")))
}

fn cmd_design(args: &DesignArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let spec = design_spec(&scenario, &args.flags);
    let gains = scenario.gain_set()?;
    let realized = realize(&spec, &scenario.area, &gains, &scenario.radio, &scenario.geom)?;
    let w = &realized.designs[0];
    let text = write_design(w, &spec, &scenario.fingerprint(), &scenario.geom)?;
    write_output(args.out.as_deref(), &text)?;

    let (gain, _) = worst_case_gain(w, &gains)?;
    let (md, _) = worst_case_md_on(&scenario, w, &gains)?;
    // Keep stdout clean for the design itself when no --out is given.
    let report = |line: String| {
        if args.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    };
    if let Some(sol) = &realized.sdr {
        report(format!("tau = {:e}", sol.tau));
        report(format!("solver: {}", sol.diagnostics));
    }
    report(format!("worst-case gain = {gain:e}"));
    report(format!(
        "worst-case noncentrality = {}",
        noncentrality_from_gain(gain, &scenario.radio)
    ));
    report(format!("worst-case misdetection = {md}"));
    Ok(())
}

fn cmd_map(args: &MapArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let w = load_design(&args.design, &scenario)?;
    let area = eval_area(&scenario, &args.grid);
    let label = args
        .design
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let map = analytic_md_map(&scenario, &w, &area, &label)?;
    write_output(args.out.as_deref(), &map_csv(&map, &scenario))
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let mc_trials = args.montecarlo.as_deref().map(parse_montecarlo).transpose()?;
    let specs = args
        .designs
        .iter()
        .map(|d| parse_design_label(d, &scenario, args))
        .collect::<Result<Vec<_>, _>>()?;
    let area = eval_area(&scenario, &args.grid);

    if let Some(rhos) = &args.rhos {
        let trials = mc_trials.or(args.trials).unwrap_or(DEFAULT_TRIALS);
        let (w, label) = match &args.design {
            Some(p) => (load_design(p, &scenario)?, p.display().to_string()),
            None => {
                let spec = match specs[0] {
                    DesignSpec::Optimized { .. } => optimized_spec(&scenario, args.g, args.seed, Some(1)),
                    s => s,
                };
                let (_, designs) = scenario.realize_design(&spec)?;
                (designs[0].clone(), spec.label())
            }
        };
        let points = coverage_grid(&area);
        let rows = scattering_sweep(&scenario, &w, &label, rhos, &points, trials)?;
        let mode = format!("montecarlo trials={trials} grid={}x{}", area.grid_ny, area.grid_nz);
        return write_output(args.out.as_deref(), &sweep_csv(&rows, &scenario, &mode));
    }

    let sizes = args
        .sizes
        .clone()
        .unwrap_or_else(|| vec![scenario.area.extent_y]);
    let (mode, label) = match mc_trials {
        Some(trials) => (
            EvalMode::MonteCarlo {
                trials,
                ny: area.grid_ny,
                nz: area.grid_nz,
            },
            format!("montecarlo trials={trials} grid={}x{}", area.grid_ny, area.grid_nz),
        ),
        None => (EvalMode::Analytic, "analytic".to_string()),
    };
    let rows = sweep_area_sizes(&scenario, &sizes, &specs, mode)?;
    write_output(args.out.as_deref(), &sweep_csv(&rows, &scenario, &label))
}

fn cmd_montecarlo(args: &MonteCarloArgs) -> Result<(), CliError> {
    let mut scenario = load_scenario(&args.scenario)?;
    if args.false_alarm {
        let stats = monte_carlo_false_alarm(&scenario, args.trials)?;
        return write_output(args.out.as_deref(), &false_alarm_csv(&stats, &scenario));
    }
    let path = args.design.as_ref().expect("clap enforces --design");
    let w = load_design(path, &scenario)?;
    let original = scenario.clone();
    if let Some(rho) = args.rho {
        scenario.scatter.power_ratio = rho;
        scenario.scatter.validate()?;
    }
    let points = coverage_grid(&eval_area(&scenario, &args.grid));
    let result = monte_carlo_md(&scenario, &w, &points, args.trials)?;
    let mut csv = monte_carlo_csv(&points, &result, &original, &path.display().to_string());
    if let Some(rho) = args.rho {
        csv.insert_str(csv.find("y,z").unwrap_or(0), &format!("# rho: {rho}\n"));
    }
    write_output(args.out.as_deref(), &csv)
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    if let Some(d) = &args.design {
        load_design(d, &scenario)?;
    }
    if args.emit {
        print!("{}", ScenarioFile::from_config(&scenario).to_toml());
    } else {
        println!("ok {}", scenario.fingerprint());
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Parse(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Design(a) => cmd_design(a),
        Command::Map(a) => cmd_map(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irsdet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
