//! `mbshape` command-line tool.
//!
//! Every command prints its primary result to stdout. With `--out` (or
//! `MBSHAPE_OUT_DIR`) the results are also written to that directory
//! together with a `manifest.json` listing every file produced.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mbshape::gain::matched_gain_curve;
use mbshape::infotheory::{awgn_capacity, eb_n0_db, mi_2d_at_snr, RateUnit};
use mbshape::mcsim::{simulate, SimConfig, VarianceMode};
use mbshape::mismatch::{build_gain_map, quantize_pmfs};
use mbshape::shaping::{optimize_many, optimize_shaping};
use mbshape::snr::db_grid;
use mbshape::{Error, Execution, PamConstellation, ShapedQam, SnrDb};
use serde::Serialize;
use serde_json::{json, Value};

/// Version of the CSV column layouts written by this tool.
const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "mbshape",
    version,
    about = "Maxwell-Boltzmann shaping for QAM on the AWGN channel"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Directory for output files and the run manifest.
    #[arg(long, global = true, env = "MBSHAPE_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Optimize the MB input for one SNR and print it as JSON.
    Optimize {
        /// PAM order per dimension (QAM has M^2 points).
        #[arg(long)]
        m: usize,
        /// Shaping SNR in dB.
        #[arg(long, allow_hyphen_values = true)]
        snr: f64,
    },
    /// Uniform and shaped MI, capacity and Eb/N0 versus SNR as CSV.
    Curves {
        #[command(flatten)]
        grid: GridArgs,
        /// Rate unit for the MI and capacity columns.
        #[arg(long, value_enum, default_value_t = Per::Dp)]
        per: Per,
    },
    /// Matched sensitivity gain versus SNR as CSV.
    Gains {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Penalty map and one PMF lookup table per threshold.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        /// Comma-separated penalty thresholds in dB.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3")]
        thresholds: Vec<f64>,
    },
    /// Monte-Carlo AIR estimate as JSON.
    Simulate(SimArgs),
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    #[arg(long)]
    m: usize,
    /// Lowest SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    lo: f64,
    /// Highest SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    hi: f64,
    /// Grid step in dB.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
}

#[derive(Args, Debug, Serialize)]
struct SimArgs {
    /// JSON simulation config; replaces the other flags.
    #[arg(long, conflicts_with_all = ["m", "snr", "n", "shaping_snr", "uniform"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    m: Option<usize>,
    /// Channel SNR in dB.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "config")]
    snr: Option<f64>,
    /// Number of QAM symbols.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// SNR in dB the PMF is optimized for (defaults to `--snr`).
    #[arg(long, allow_hyphen_values = true)]
    shaping_snr: Option<f64>,
    /// Use uniform signaling instead of a shaped input.
    #[arg(long, conflicts_with = "shaping_snr")]
    uniform: bool,
    /// Use the measured noise variance in the decoding metric.
    #[arg(long)]
    estimated_variance: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Per {
    Dp,
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    TwoD,
    #[value(name = "1d")]
    #[serde(rename = "1d")]
    OneD,
}

impl From<Per> for RateUnit {
    fn from(p: Per) -> Self {
        match p {
            Per::Dp => RateUnit::Dp,
            Per::TwoD => RateUnit::TwoD,
            Per::OneD => RateUnit::OneD,
        }
    }
}

/// Files written by a command, and the text it prints.
struct Output {
    stdout: String,
    files: Vec<(String, Vec<u8>)>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    parameters: Value,
    version: &'a str,
    seed: Option<u64>,
    outputs: Vec<String>,
    wall_time_s: f64,
    csv_schema_version: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Infeasible(_) | Error::Saturated { .. }) => 3,
        Some(_) => 2,
        None if e.downcast_ref::<Usage>().is_some() => 2,
        None => 1,
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let start = Instant::now();
    let output = with_workers(cli.common.workers, || execute(&cli.command))??;
    print!("{}", output.stdout);
    io::stdout().flush()?;
    if let Some(dir) = &cli.common.out {
        write_run(dir, cli, &output, start.elapsed().as_secs_f64())?;
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    match workers {
        Some(0) => Err(usage("--workers must be >= 1")),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    match workers {
        Some(0) => Err(usage("--workers must be >= 1")),
        _ => Ok(f()),
    }
}

fn write_run(dir: &Path, cli: &Cli, output: &Output, wall: f64) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = Vec::new();
    for (name, bytes) in &output.files {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(path.display().to_string());
    }
    let command = serde_json::to_value(&cli.command)?;
    let (name, parameters) = match command {
        Value::Object(m) if m.len() == 1 => m.into_iter().next().expect("one key"),
        other => bail!("unexpected command shape {other}"),
    };
    let manifest = RunManifest {
        command: &name,
        parameters: json!({ "command": parameters, "workers": cli.common.workers }),
        version: env!("CARGO_PKG_VERSION"),
        seed: output.seed,
        outputs,
        wall_time_s: wall,
        csv_schema_version: CSV_SCHEMA_VERSION,
    };
    let file = File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(())
}

fn check_grid(g: &GridArgs) -> anyhow::Result<Vec<f64>> {
    if !(g.lo.is_finite() && g.hi.is_finite() && g.lo <= g.hi) {
        return Err(usage("need finite --lo <= --hi"));
    }
    if !(g.step > 0.0) {
        return Err(usage("--step must be > 0"));
    }
    Ok(db_grid(g.lo, g.hi, g.step))
}

fn json_line<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn execute(command: &Command) -> anyhow::Result<Output> {
    let exec = Execution::default();
    match command {
        Command::Optimize { m, snr } => {
            let sol = optimize_shaping(*m, SnrDb(*snr))?;
            let mut value = serde_json::to_value(&sol)?;
            if *m == 2 {
                value["note"] = json!("2-PAM has a single energy level; the optimal PMF is uniform");
            }
            let text = json_line(&value)?;
            Ok(Output {
                files: vec![("solution.json".into(), text.clone().into_bytes())],
                stdout: text,
                seed: None,
            })
        }
        Command::Curves { grid, per } => {
            let snrs = check_grid(grid)?;
            let uniform = PamConstellation::uniform(grid.m)?;
            let shaped = optimize_many(grid.m, &snrs, exec)?;
            let unit = RateUnit::from(*per);
            let rows = exec.map_range(snrs.len(), |k| -> mbshape::Result<[f64; 6]> {
                let snr = SnrDb(snrs[k]);
                let mu = mi_2d_at_snr(&uniform, snr);
                let ms = shaped[k].mi_bits_per_2d;
                Ok([
                    snrs[k],
                    unit.from_2d(mu),
                    unit.from_2d(ms),
                    unit.from_2d(awgn_capacity(snr)),
                    eb_n0_db(snr, mu)?,
                    eb_n0_db(snr, ms)?,
                ])
            });
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "snr_db",
                "mi_uniform",
                "mi_shaped",
                "capacity",
                "eb_n0_uniform_db",
                "eb_n0_shaped_db",
            ])?;
            for row in rows {
                w.write_record(row?.iter().map(f64::to_string))?;
            }
            let bytes = w.into_inner()?;
            Ok(Output {
                stdout: String::from_utf8(bytes.clone())?,
                files: vec![(format!("curves_m{}.csv", grid.m), bytes)],
                seed: None,
            })
        }
        Command::Gains { grid } => {
            check_grid(grid)?;
            let curve = matched_gain_curve(grid.m, grid.lo, grid.hi, grid.step, exec)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["snr_db", "gain_db"])?;
            for (s, g) in curve.snr_grid_db.iter().zip(&curve.gain_db) {
                w.write_record([s.to_string(), g.map(|g| g.to_string()).unwrap_or_default()])?;
            }
            let bytes = w.into_inner()?;
            Ok(Output {
                stdout: String::from_utf8(bytes.clone())?,
                files: vec![(format!("gains_m{}.csv", grid.m), bytes)],
                seed: None,
            })
        }
        Command::Sweep { grid, thresholds } => {
            check_grid(grid)?;
            if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0)) {
                return Err(usage("thresholds must be > 0"));
            }
            let map = build_gain_map(grid.m, grid.lo, grid.hi, grid.step, exec)?;
            let mut matrix = Vec::new();
            map.write_matrix_csv(&mut matrix)?;
            let mut long = Vec::new();
            map.write_long_csv(&mut long)?;
            let mut files = vec![
                (format!("gain_map_m{}.csv", grid.m), matrix),
                (format!("gain_map_m{}_long.csv", grid.m), long),
            ];
            let mut summary = Vec::new();
            for &t in thresholds {
                let table = quantize_pmfs(&map, t)?;
                summary.push(json!({
                    "threshold_db": t,
                    "entries": table.len(),
                    "shaping_snr_db": table.entries.iter().map(|e| e.shaping_snr_db).collect::<Vec<_>>(),
                    "boundaries_db": table.entries.windows(2).map(|w| 0.5 * (w[0].channel_snr_hi_db + w[1].channel_snr_lo_db)).collect::<Vec<_>>(),
                }));
                files.push((
                    format!("lookup_m{}_t{}.json", grid.m, t),
                    json_line(&table)?.into_bytes(),
                ));
            }
            Ok(Output {
                stdout: json_line(&summary)?,
                files,
                seed: None,
            })
        }
        Command::Simulate(args) => {
            let config = sim_config(args)?;
            let report = simulate(&config, exec)?;
            let text = json_line(&report)?;
            Ok(Output {
                files: vec![("simulate.json".into(), text.clone().into_bytes())],
                stdout: text,
                seed: Some(config.seed),
            })
        }
    }
}

fn sim_config(args: &SimArgs) -> anyhow::Result<SimConfig> {
    let variance = if args.estimated_variance {
        VarianceMode::Estimated
    } else {
        VarianceMode::Genie
    };
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: SimConfig = serde_json::from_str(&text).map_err(|e| usage(format!("bad config: {e}")))?;
        if args.estimated_variance {
            config.variance = variance;
        }
        if config.num_symbols == 0 {
            return Err(usage("num_symbols must be >= 1"));
        }
        return Ok(config);
    }
    if args.n == 0 {
        return Err(usage("--n must be >= 1"));
    }
    let (m, snr) = (args.m.expect("required by clap"), args.snr.expect("required by clap"));
    let pam = if args.uniform {
        PamConstellation::uniform(m)?
    } else {
        optimize_shaping(m, SnrDb(args.shaping_snr.unwrap_or(snr)))?.constellation
    };
    Ok(SimConfig {
        num_symbols: args.n,
        snr_db: SnrDb(snr),
        seed: args.seed,
        constellation: ShapedQam::new(pam),
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Infeasible("x".into()).into()), 3);
        assert_eq!(exit_code(&Error::Saturated { snr_db: 30.0 }.into()), 3);
        assert_eq!(exit_code(&Error::InvalidOrder(3).into()), 2);
        assert_eq!(exit_code(&usage("bad")), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
        assert_eq!(
            exit_code(&anyhow::Error::from(Error::Infeasible("x".into())).context("while sweeping")),
            3
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
