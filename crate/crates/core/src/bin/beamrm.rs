use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use beamrm::error::{Error, Result};
use beamrm::harness::{
    emit_heatmap, run_method, GridSpec, Method, MethodConfig, RasterScale, SweepSpec, SweepVariable,
};
use beamrm::io::{load_scenario, read_json, write_json, EstimateDocument, ScenarioDocument};
use beamrm::metrics::score_trial;
use beamrm::scenario::{generate_scenario, ScenarioConfig};
use beamrm::select::Criterion;

#[derive(Parser)]
#[command(
    name = "beamrm",
    version,
    about = "Beam-aware multi-satellite radio map estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one synthetic scenario and write it as JSON.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Estimate the active set of a scenario JSON file.
    Estimate {
        scenario: PathBuf,
        #[arg(long, default_value = "proposed")]
        method: Method,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a Monte Carlo sweep and write the results CSV.
    Sweep(SweepArgs),
    /// Render an estimate JSON file as heatmap files.
    Map {
        estimate: PathBuf,
        #[arg(long, default_value_t = 101)]
        rows: usize,
        #[arg(long, default_value_t = 101)]
        cols: usize,
        /// Also write an 8-bit PGM raster.
        #[arg(long)]
        pgm: bool,
        /// Use a decibel scale for the raster.
        #[arg(long)]
        db: bool,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    beta_min_deg: Option<f64>,
    #[arg(long)]
    beta_max_deg: Option<f64>,
    /// Region side in meters.
    #[arg(long)]
    region_size: Option<f64>,
    /// Satellite altitude in meters.
    #[arg(long)]
    sat_altitude: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    psi_max_deg: Option<f64>,
    #[arg(long)]
    m_min: Option<usize>,
}

impl ScenarioArgs {
    fn apply(&self, mut cfg: ScenarioConfig) -> ScenarioConfig {
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.snr_db {
            cfg.snr_db = v;
        }
        if let Some(v) = self.beta_min_deg {
            cfg.beta_range[0] = v.to_radians();
        }
        if let Some(v) = self.beta_max_deg {
            cfg.beta_range[1] = v.to_radians();
        }
        if let Some(v) = self.region_size {
            cfg.region_size = v;
        }
        if let Some(v) = self.sat_altitude {
            cfg.sat_altitude = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.psi_max_deg {
            cfg.visibility.psi_max = v.to_radians();
        }
        if let Some(v) = self.m_min {
            cfg.visibility.m_min = v;
        }
        cfg
    }
}

#[derive(Args, Clone)]
struct SelectionArgs {
    #[arg(long)]
    criterion: Option<Criterion>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    tau_scale: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
}

impl SelectionArgs {
    fn apply(&self, mut cfg: MethodConfig) -> MethodConfig {
        let sel = &mut cfg.inference.selection;
        if let Some(v) = self.criterion {
            sel.criterion = v;
        }
        if let Some(v) = self.alpha {
            sel.alpha = v;
        }
        if let Some(v) = self.q {
            sel.q = v;
        }
        if let Some(v) = self.tau_scale {
            sel.tau_scale = v;
        }
        if let Some(v) = self.k_max {
            cfg.inference.k_max = v;
        }
        cfg
    }
}

#[derive(Args)]
struct SweepArgs {
    /// SweepSpec JSON; flags given alongside override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    variable: Option<SweepVariable>,
    /// Comma-separated values of the swept variable.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    /// Record estimator wall-clock time in the runtime_s column.
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "results.csv")]
    output: String,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn simulate(args: &ScenarioArgs, out_dir: &Path) -> Result<()> {
    let cfg = args.apply(ScenarioConfig::default());
    let scenario = generate_scenario(&cfg)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join("scenario.json");
    write_json(&path, &ScenarioDocument::from(&scenario))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn estimate(
    scenario_path: &Path,
    method: Method,
    sel: &SelectionArgs,
    out_dir: &Path,
) -> Result<()> {
    let scenario = load_scenario(scenario_path)?;
    let cfg = sel.apply(MethodConfig {
        visibility: scenario.config.visibility,
        ..Default::default()
    });
    cfg.inference.validate()?;
    let start = Instant::now();
    let out = run_method(method, &scenario, &cfg)?;
    let runtime = start.elapsed().as_secs_f64();
    let doc = EstimateDocument::new(
        method.name(),
        &out.selected,
        &out.params,
        out.scores.clone(),
        &scenario,
    );
    ensure_dir(out_dir)?;
    let path = out_dir.join("estimate.json");
    write_json(&path, &doc)?;
    let report = score_trial(
        &scenario.truth_active,
        &scenario.truth_params,
        &scenario.noiseless_field,
        &out.selected,
        &out.params,
        &out.field,
        runtime,
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => read_json::<SweepSpec>(path)?,
        None => {
            let variable = args.variable.unwrap_or(SweepVariable::SnrDb);
            SweepSpec {
                variable,
                values: variable.default_values(),
                trials: 15,
                base_seed: 0,
                methods: Method::ALL.to_vec(),
                fixed: ScenarioConfig::default(),
                method_config: MethodConfig::default(),
                timing: false,
            }
        }
    };
    if let Some(v) = args.variable {
        if args.spec.is_some() && v != spec.variable && args.values.is_none() {
            spec.values = v.default_values();
        }
        spec.variable = v;
    }
    if let Some(v) = &args.values {
        spec.values = v.clone();
    }
    if let Some(v) = args.trials {
        spec.trials = v;
    }
    if let Some(v) = args.base_seed {
        spec.base_seed = v;
    }
    if let Some(v) = &args.methods {
        spec.methods = v.clone();
    }
    spec.timing |= args.timing;
    spec.fixed = args.scenario.apply(spec.fixed);
    spec.method_config = args.selection.apply(spec.method_config);
    spec.method_config.visibility = spec.fixed.visibility;
    if args.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let table = beamrm::harness::run_sweep(&spec, args.jobs)?;
    ensure_dir(&args.out_dir)?;
    let path = args.out_dir.join(&args.output);
    table.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    for s in table.summarize() {
        eprintln!(
            "{:>6} {}={:<6} f1 {:.3}±{:.3}  rmse {:.4}±{:.4}  corr {:.3}  k_hat {:.2}",
            s.method.name(),
            spec.variable.name(),
            s.value,
            s.f1.mean,
            s.f1.std,
            s.rmse_rss.mean,
            s.rmse_rss.std,
            s.pearson_corr.mean,
            s.k_hat.mean
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn map(
    estimate: &Path,
    rows: usize,
    cols: usize,
    pgm: bool,
    db: bool,
    out_dir: &Path,
) -> Result<()> {
    let doc: EstimateDocument = read_json(estimate)?;
    let grid = GridSpec {
        rows,
        cols,
        region: doc.region,
    };
    grid.points()?;
    ensure_dir(out_dir)?;
    let raster = pgm.then_some(if db {
        RasterScale::Decibel
    } else {
        RasterScale::Linear
    });
    emit_heatmap(
        &doc.beam_params(),
        &doc.satellite_ecef(),
        &grid,
        out_dir,
        raster,
    )?;
    println!("wrote {}", out_dir.join("heatmap.csv").display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { scenario, out_dir } => simulate(&scenario, &out_dir),
        Command::Estimate {
            scenario,
            method,
            selection,
            out_dir,
        } => estimate(&scenario, method, &selection, &out_dir),
        Command::Sweep(args) => sweep(&args),
        Command::Map {
            estimate,
            rows,
            cols,
            pgm,
            db,
            out_dir,
        } => map(&estimate, rows, cols, pgm, db, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
