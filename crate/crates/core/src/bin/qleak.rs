use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qleak::harness::{
    run_experiment, sweep, table_configs, table_row, write_experiment, write_sweep, write_table, Pipeline,
    ScenarioConfig,
};
use qleak::Error;

#[derive(Parser)]
#[command(version, about = "Off-path TCP secret discovery over a queuing side channel, simulated")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write summary.csv and series.csv.
    Run {
        /// Scenario file, or a built-in name (idle, download, upload,
        /// idle-netfilter, ...). Defaults to idle.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// port_only, full_rfc793 or full_netfilter.
        #[arg(long, default_value = "port_only")]
        pipeline: Pipeline,
    },
    /// Run the same scenario over a batch of seeds.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// First seed of the batch.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        runs: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value = "port_only")]
        pipeline: Pipeline,
    },
    /// Reproduce the three result tables at simulated scale.
    Tables {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Only this table (1, 2 or 3).
        #[arg(long)]
        table: Option<u8>,
    },
}

fn load(config: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig, Error> {
    let mut cfg = match config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::builtin("idle").expect("built-in idle"),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qleak: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main(cli: Cli) -> Result<bool, Error> {
    match cli.cmd {
        Cmd::Run {
            config,
            seed,
            out_dir,
            pipeline,
        } => {
            let cfg = load(config.as_deref(), seed)?;
            let e = run_experiment(&cfg, pipeline)?;
            write_experiment(&out_dir, &e)?;
            let r = &e.report;
            println!(
                "{} {} seed {}: success={} queries={} spoofed={} reflected={} scan_time={:.3}s",
                e.scenario, pipeline, e.seed, r.success, r.queries, r.spoofed_segments, r.reflected_segments, r.scan_time_s
            );
            Ok(r.success)
        }
        Cmd::Sweep {
            config,
            seed,
            runs,
            out_dir,
            pipeline,
        } => {
            let cfg = load(config.as_deref(), None)?;
            let seeds: Vec<u64> = (seed..seed.saturating_add(runs)).collect();
            let s = sweep(&cfg, &seeds, pipeline)?;
            write_sweep(&out_dir, cfg.scenario.name(), &s)?;
            println!(
                "{} runs: success_rate={:.3} mean_queries={:.1} max_queries={} mean_spoofed={:.0}",
                s.runs.len(),
                s.success_rate,
                s.mean_queries,
                s.max_queries,
                s.mean_spoofed
            );
            Ok(s.success_rate == 1.0)
        }
        Cmd::Tables { seed, out_dir, table } => {
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            let tables: Vec<u8> = match table {
                Some(t @ 1..=3) => vec![t],
                Some(t) => return Err(Error::Invalid(format!("no table {t}"))),
                None => vec![1, 2, 3],
            };
            let mut all_ok = true;
            for t in tables {
                let mut rows = Vec::new();
                for mut cfg in table_configs(t) {
                    cfg.seed = seed;
                    let row = table_row(t, &cfg)?;
                    let s = &row.stats;
                    println!(
                        "table {t} {:<9} time={:>10.1}s queries={:>7} pings={:>7} max_targets={:>5} spoofed={:>9} reflected={:>8} success={}",
                        row.scenario, s.time_s, s.queries, s.pings, s.max_targets_per_query, s.spoofed_segments,
                        s.reflected_segments, row.success
                    );
                    all_ok &= row.success;
                    rows.push(row);
                }
                write_table(&out_dir.join(format!("table{t}.csv")), &rows)?;
            }
            Ok(all_ok)
        }
    }
}
