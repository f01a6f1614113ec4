use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use isac_core::experiments::{
    beam_pattern_grid_on, config_hash, load_experiment, pattern_csv, run_comparison, with_seed_offset, RunRecord,
    VERSION,
};
use isac_core::gradients::{gradient_check, GradientReport};
use isac_core::SystemConfig;

const GRADIENT_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "isac", version, about = "Tri-hybrid holographic ISAC beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (scheme, seed, sweep value) cell of an experiment file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Overrides the experiment's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Beam pattern grid of a stored run.
    Pattern {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Grid step in degrees; defaults to the experiment's resolution.
        #[arg(long)]
        res: Option<f64>,
        /// Output CSV; defaults to `<output_dir>/patterns/<checkpoint>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic gradients against central differences.
    Gradcheck {
        /// M,N,L,P: users, phase shifters per chain, elements per RHS,
        /// sensing directions.
        #[arg(long, default_value = "2,2,4,2")]
        dims: String,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 3.0)]
        mu: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("ISAC_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed_offset, workers, out } => run(&config, seed_offset, workers, out),
        Command::Pattern { config, checkpoint, res, out } => pattern(&config, &checkpoint, res, out),
        Command::Gradcheck { dims, seeds, mu } => gradcheck(&dims, seeds, mu),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(config: &Path, seed_offset: u64, workers: usize, out: Option<PathBuf>) -> Result<bool> {
    let mut spec = with_seed_offset(load_experiment(config)?, seed_offset);
    if let Some(dir) = out {
        spec.output_dir = dir;
    }
    let report = run_comparison(&spec, workers)?;
    for row in &report.aggregate {
        let at = row.sweep_value.map_or(String::new(), |v| format!(" @ {v}"));
        println!(
            "{}{at}: {}/{} converged, {} failed, mean sensing error {:.6}, mean min rate {:.3}",
            row.scheme, row.converged, row.runs, row.failed, row.mean_sensing_error, row.mean_min_rate
        );
    }
    println!("wrote {} runs and {}", report.run_paths.len(), report.aggregate_path.display());
    let ok = report.contract_holds();
    if !ok {
        eprintln!("a run failed or a converged run missed its rate threshold");
    }
    Ok(ok)
}

fn pattern(config: &Path, checkpoint: &Path, res: Option<f64>, out: Option<PathBuf>) -> Result<bool> {
    let spec = load_experiment(config)?;
    let text = std::fs::read_to_string(checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    let record: RunRecord = serde_json::from_str(&text).with_context(|| format!("parsing {}", checkpoint.display()))?;
    let known = spec
        .sweep_points()
        .into_iter()
        .any(|v| config_hash(&spec.system_at(v), &spec.optimizer) == record.config_hash);
    if !known {
        bail!("checkpoint config hash {} does not belong to {}", record.config_hash, config.display());
    }
    let Some(bf) = &record.beamformer else {
        bail!("checkpoint has no beamformer (run error: {})", record.error.as_deref().unwrap_or("unknown"));
    };
    let rows = beam_pattern_grid_on(bf, &record.geometry()?, res.unwrap_or(spec.grid_resolution_deg))?;
    let csv = pattern_csv(
        &rows,
        &[
            ("artifact_version", VERSION.to_string()),
            ("config_hash", record.config_hash.clone()),
            ("scenario_hash", record.scenario_hash.clone()),
            ("seed", record.seed.to_string()),
            ("scheme", record.scheme.to_string()),
        ],
    );
    let path = out.unwrap_or_else(|| {
        let stem = checkpoint.file_stem().map_or("pattern".into(), |s| s.to_string_lossy().into_owned());
        spec.output_dir.join("patterns").join(format!("{stem}.csv"))
    });
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, csv)?;
    println!("wrote {} grid points to {}", rows.len(), path.display());
    Ok(true)
}

fn parse_dims(dims: &str) -> Result<SystemConfig> {
    let v: Vec<usize> = dims
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("dims must be four integers M,N,L,P, got {dims:?}"))?;
    let [m, n, l, p] = v[..] else {
        bail!("dims must be four integers M,N,L,P, got {dims:?}");
    };
    let cfg = SystemConfig { num_users: m, ps_per_chain: n, elements_per_rhs: l, num_sense_dirs: p, ..SystemConfig::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn gradcheck(dims: &str, seeds: u64, mu: f64) -> Result<bool> {
    let cfg = parse_dims(dims)?;
    let seeds: Vec<u64> = (0..seeds).collect();
    let report: GradientReport = gradient_check(&cfg, &seeds, mu)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    let ok = report.worst() <= GRADIENT_TOLERANCE;
    println!("{} max relative error {:.2e} (tolerance {GRADIENT_TOLERANCE:.0e})", if ok { "PASS" } else { "FAIL" }, report.worst());
    Ok(ok)
}
