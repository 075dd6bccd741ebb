//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 success, 1 validation or run failure, 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use onebit_mimo::db_to_linear;
use onebit_mimo::expectation::{
    build_expectation_tables, write_class_means_csv, write_expectation_rows, write_expectations_csv,
};
use onebit_mimo::harness::{
    create_output, run_scatter, run_ser, validate, write_scatter_csv, write_ser_csv,
    write_ser_per_ue_csv, ExperimentConfig, ScatterMode, Setup,
};
use onebit_mimo::{Error, Result};

#[derive(Parser)]
#[command(
    name = "onebit",
    version,
    about = "1-bit massive MIMO uplink detection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed forms against Monte-Carlo oracles at small array sizes.
    Validate(Common),
    /// Simulated soft symbols of one UE and the expectations they centre on.
    Scatter {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Fixed)]
        mode: Mode,
    },
    /// Expectation tables and class means of every UE.
    ExpectationTable(Common),
    /// SER versus SNR for the configured detection strategies.
    Ser(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Interferer symbols fixed, target symbol swept.
    Fixed,
    /// Full expectation table of the target UE.
    All,
}

/// Every configuration key; flags override values read from `--config`.
#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short = 'm', long)]
    antennas: Option<String>,
    #[arg(short = 'k', long)]
    users: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    root: Option<String>,
    /// qam16 or qpsk.
    #[arg(long)]
    constellation: Option<String>,
    /// two_ue, three_ue or uncorrelated.
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated subset of exhaustive, heuristic, genie.
    #[arg(long)]
    strategies: Option<String>,
    /// Target UE (0-based) for scatter runs.
    #[arg(long)]
    ue: Option<String>,
    /// Comma-separated interferer symbol indices for fixed scatter runs.
    #[arg(long)]
    interferers: Option<String>,
    #[arg(long)]
    table_budget: Option<String>,
    /// Permit M tau above the dense-size cap.
    #[arg(long)]
    allow_large: bool,
    #[arg(long)]
    cache_dir: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
}

impl Common {
    /// Any failure here, including an unreadable file, is a configuration error.
    fn resolve(&self) -> Result<ExperimentConfig> {
        self.resolve_inner().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn resolve_inner(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("antennas", &self.antennas),
            ("users", &self.users),
            ("tau", &self.tau),
            ("root", &self.root),
            ("constellation", &self.constellation),
            ("scenario", &self.scenario),
            ("snr_db", &self.snr_db),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("strategies", &self.strategies),
            ("ue", &self.ue),
            ("interferers", &self.interferers),
            ("table_budget", &self.table_budget),
            ("cache_dir", &self.cache_dir),
            ("out_dir", &self.out_dir),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.allow_large {
            cfg.allow_large = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn snr_tag(db: f64) -> String {
    format!("snr{db}dB")
}

fn write_file(path: &Path, f: impl FnOnce(std::fs::File) -> Result<()>) -> Result<()> {
    f(create_output(path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn scatter(cfg: &ExperimentConfig, mode: Mode) -> Result<()> {
    let scatter_mode = match mode {
        Mode::Fixed => ScatterMode::FixedInterferers(cfg.interferer_digits()),
        Mode::All => ScatterMode::AllCombinations,
    };
    for &db in &cfg.snr_db {
        let r = run_scatter(cfg, cfg.ue, &scatter_mode, db_to_linear(db))?;
        let tag = format!("ue{}_{}", cfg.ue, snr_tag(db));
        match &r.table {
            Some(table) => {
                write_file(&cfg.out_dir.join(format!("expectations_{tag}.csv")), |f| {
                    write_expectations_csv(table, f)
                })?;
                write_file(&cfg.out_dir.join(format!("class_means_{tag}.csv")), |f| {
                    write_class_means_csv(table, f)
                })?;
            }
            None => {
                write_file(&cfg.out_dir.join(format!("scatter_{tag}.csv")), |f| {
                    write_scatter_csv(&r.rows, f)
                })?;
                write_file(&cfg.out_dir.join(format!("expectations_{tag}.csv")), |f| {
                    write_expectation_rows(r.expected.iter().copied(), f)
                })?;
                for (l, (m, (_, e))) in r.sample_means.iter().zip(&r.expected).enumerate() {
                    println!(
                        "{db} dB  l={l:2}  mean {:+.4}{:+.4}j  E {:+.4}{:+.4}j  ({:.1} SE)",
                        m.mean.re,
                        m.mean.im,
                        e.re,
                        e.im,
                        (m.mean - e).norm() / m.std_error
                    );
                }
            }
        }
    }
    Ok(())
}

fn expectation_tables(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    for &db in &cfg.snr_db {
        let model = setup.model(db_to_linear(db), cfg.cache_dir.as_deref())?;
        let tables = build_expectation_tables(&setup.constellation, &model, cfg.table_budget)?;
        for t in &tables {
            let tag = format!("ue{}_{}", t.ue(), snr_tag(db));
            write_file(&cfg.out_dir.join(format!("expectations_{tag}.csv")), |f| {
                write_expectations_csv(t, f)
            })?;
            write_file(&cfg.out_dir.join(format!("class_means_{tag}.csv")), |f| {
                write_class_means_csv(t, f)
            })?;
        }
    }
    Ok(())
}

fn ser(cfg: &ExperimentConfig) -> Result<()> {
    let result = run_ser(cfg)?;
    write_file(&cfg.out_dir.join("ser.csv"), |f| write_ser_csv(&result, f))?;
    write_file(&cfg.out_dir.join("ser_per_ue.csv"), |f| {
        write_ser_per_ue_csv(&result, f)
    })?;
    println!(
        "{:>10} {:>8} {:>8} {:>8} {:>10} {:>10}",
        "strategy", "snr_db", "errors", "count", "ser", "stderr"
    );
    for p in &result.points {
        println!(
            "{:>10} {:>8} {:>8} {:>8} {:>10.5} {:>10.5}",
            p.strategy.name(),
            p.snr_db,
            p.errors,
            p.count,
            p.ser(),
            p.stderr()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate(common) => {
            let report = validate(&common.resolve()?);
            print!("{report}");
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Scatter { common, mode } => {
            scatter(&common.resolve()?, mode).map(|_| ExitCode::SUCCESS)
        }
        Command::ExpectationTable(common) => {
            expectation_tables(&common.resolve()?).map(|_| ExitCode::SUCCESS)
        }
        Command::Ser(common) => ser(&common.resolve()?).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
