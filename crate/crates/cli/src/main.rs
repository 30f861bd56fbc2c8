use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qlfr_core::analysis::{self, StaticTopology};
use qlfr_core::channel;
use qlfr_core::engine::{MetricsRecord, Simulation};
use qlfr_core::sweep::{self, Format};
use qlfr_core::{parse_config, ScenarioConfig};

#[derive(Parser)]
#[command(name = "qlfr", version, about = "Underwater anypath routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print or write its metrics.
    Run(RunArgs),
    /// Sweep one parameter over a list of values with replicated seeds.
    Sweep(SweepArgs),
    /// Evaluate the analytical model on a topology snapshot.
    Analyze(AnalyzeArgs),
    /// Solve for the energy per bit that hits a delivery target.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it results go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => parse_config(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Write every routing event as JSON lines to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write the final topology snapshot (requires --out).
    #[arg(long)]
    snapshot: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Dotted config key or alias (k, h, v, N, gamma, alpha, protocol).
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Overrides the replicate count.
    #[arg(long)]
    replicates: Option<u32>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Snapshot written by `run --snapshot`. Without it the scenario is
    /// simulated and its final state analysed.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    distance: Option<f64>,
    #[arg(long)]
    target: Option<f64>,
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    }
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: PathBuf, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Effective config and the derived values needed to reproduce a result.
fn write_metadata(dir: &Path, cfg: &ScenarioConfig) -> Result<()> {
    write_file(dir.join("config.toml"), cfg.to_toml_string())?;
    let ch = cfg.channel.resolve()?;
    let meta = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "replicates": cfg.replicates,
        "energy_per_bit": ch.energy_per_bit,
        "ebn0": ch.ebn0(),
        "holding_step_s": cfg.holding_params()?.k,
        "initial_energy_j": cfg.network.initial_energy_j,
    });
    write_file(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")
}

fn metrics_json(m: &MetricsRecord) -> Result<String> {
    Ok(serde_json::to_string_pretty(m)? + "\n")
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = a.common.load()?;
    let mut sim = Simulation::new(&cfg)?;
    if let Some(path) = &a.trace {
        let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        sim = sim.with_trace(Box::new(io::BufWriter::new(f)));
    }
    let m = sim.run_to_end()?;
    match &a.common.out {
        None => {
            if a.snapshot {
                bail!("--snapshot needs --out");
            }
            let stdout = io::stdout();
            match a.common.format {
                OutFormat::Csv => m.write_csv(stdout.lock())?,
                OutFormat::Json => stdout.lock().write_all(metrics_json(&m)?.as_bytes())?,
            }
        }
        Some(dir) => {
            create_out(dir)?;
            write_metadata(dir, &cfg)?;
            match a.common.format {
                OutFormat::Csv => {
                    let mut buf = Vec::new();
                    m.write_csv(&mut buf)?;
                    write_file(dir.join("metrics.csv"), buf)?;
                    let mut buf = Vec::new();
                    m.write_node_energy_csv(&mut buf)?;
                    write_file(dir.join("node_energy.csv"), buf)?;
                }
                OutFormat::Json => write_file(dir.join("metrics.json"), metrics_json(&m)?)?,
            }
            if a.snapshot {
                write_file(
                    dir.join("snapshot.json"),
                    serde_json::to_string_pretty(&sim.snapshot())? + "\n",
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = a.common.load()?;
    if let Some(r) = a.replicates {
        if r == 0 {
            bail!("--replicates must be >= 1");
        }
        cfg.replicates = r;
    }
    let values: Vec<_> = a.values.iter().map(|v| sweep::parse_value(v.trim())).collect();
    let table = sweep::run_sweep(&cfg, &a.param, &values)?;
    match &a.common.out {
        None => {
            let stdout = io::stdout();
            match a.common.format {
                OutFormat::Csv => sweep::write_summary_csv(&table, stdout.lock())?,
                OutFormat::Json => {
                    let s = serde_json::to_string_pretty(&sweep::summary_json(&table))?;
                    writeln!(stdout.lock(), "{s}")?;
                }
            }
        }
        Some(dir) => {
            create_out(dir)?;
            write_metadata(dir, &cfg)?;
            for p in sweep::emit_results(&table, a.common.format.into(), dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let topo: StaticTopology = match &a.snapshot {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => {
            let cfg = a.common.load()?;
            let mut sim = Simulation::new(&cfg)?;
            sim.run_to_end()?;
            sim.snapshot()
        }
    };
    let report = analysis::evaluate(&topo)?;
    let summary = serde_json::json!({
        "expected_pdr": finite(report.expected_pdr),
        "expected_delay_s": finite(report.expected_delay_s),
        "total_energy_j": finite(report.total_energy_j),
        "network_lifetime_s": finite(report.network_lifetime_s),
    });
    match &a.common.out {
        None => match a.common.format {
            OutFormat::Csv => report.write_csv(io::stdout().lock())?,
            OutFormat::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
        },
        Some(dir) => {
            create_out(dir)?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            write_file(dir.join("model_nodes.csv"), buf)?;
            write_file(dir.join("model_summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        }
    }
    Ok(())
}

fn finite(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<()> {
    let mut cfg = a.common.load()?;
    if let Some(d) = a.distance {
        cfg.channel.calibration_distance_m = d;
    }
    if let Some(t) = a.target {
        cfg.channel.calibration_target = t;
    }
    cfg.channel.energy_per_bit = None;
    let p = cfg.channel.resolve()?;
    let mut rows = Vec::new();
    let mut distances = vec![50.0, 100.0, 150.0, cfg.channel.calibration_distance_m];
    distances.sort_by(f64::total_cmp);
    distances.dedup();
    for d in distances {
        rows.push((d, channel::packet_delivery_prob(d, &p)?));
    }
    match a.common.format {
        OutFormat::Csv => {
            println!("energy_per_bit,ebn0,distance_m,delivery_prob");
            for (d, pd) in rows {
                println!("{},{},{},{}", p.energy_per_bit, p.ebn0(), d, pd);
            }
        }
        OutFormat::Json => {
            let v = serde_json::json!({
                "energy_per_bit": p.energy_per_bit,
                "ebn0": p.ebn0(),
                "delivery_prob": rows.iter().map(|(d, pd)| serde_json::json!({"distance_m": d, "p": pd})).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
    }
    Ok(())
}
