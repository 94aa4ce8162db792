use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use primegap::cli::{self, Exit, RunConfig};
use primegap::fluct::ScanKind;

/// Prime-gap analysis: Selberg sums, gap and fluctuation scans, Skewes fits.
///
/// Settings come from defaults, then the --config file (or PRIMEGAP_CONFIG),
/// then PRIMEGAP_* environment variables, then flags. Exit status is 0 when
/// every check passes, 1 when a violation is found and 2 on usage errors.
#[derive(Parser)]
#[command(name = "primegap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// S1, S2 and the S2 < S1 check
    Selberg(Common),
    /// Run one scan: cg, b, k, delta, schoenfeld, dusart or bbound
    Scan {
        #[arg(value_parser = parse_kind)]
        which: ScanKind,
        #[command(flatten)]
        common: Common,
    },
    /// Write the p,k_prime,rhs24 data and a plotting script
    Figure1(Common),
    /// Fit the triple-log model to k(x)
    Fit {
        /// Fit exact synthetic data instead of primes
        #[arg(long)]
        synthetic: bool,
        /// Number of equal-width bins in log x
        #[arg(long)]
        bins: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Every reproducible number in one JSON document
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Largest integer examined (1e8 style accepted)
    #[arg(long)]
    limit: Option<String>,
    /// Cramér-Granville constant
    #[arg(long = "c")]
    c: Option<String>,
    /// Bound on |b(x)|
    #[arg(long = "B")]
    b: Option<String>,
    /// Unconditional bound on |k(x)|
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Integers per sieve segment
    #[arg(long)]
    segment_size: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Record file format: csv or json
    #[arg(long)]
    format: Option<String>,
    /// Checkpoint file, written every --checkpoint-every segments
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    checkpoint_every: Option<String>,
    /// Continue from --checkpoint
    #[arg(long)]
    resume: bool,
    /// Also write full per-record files
    #[arg(long)]
    records: bool,
    /// key = value settings file
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ScanKind, String> {
    s.parse().map_err(|e: primegap::Error| e.to_string())
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let opts = [
            ("limit", &self.limit),
            ("c", &self.c),
            ("b", &self.b),
            ("k", &self.k),
            ("workers", &self.workers),
            ("segment_size", &self.segment_size),
            ("out", &self.out),
            ("format", &self.format),
            ("checkpoint", &self.checkpoint),
            ("checkpoint_every", &self.checkpoint_every),
        ];
        for (k, v) in opts {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        }
        if self.resume {
            out.push(("resume", "true".into()));
        }
        if self.records {
            out.push(("records", "true".into()));
        }
        out
    }

    fn config(&self, extra: Vec<(&'static str, String)>) -> Result<RunConfig, Exit> {
        let mut flags = self.flags();
        flags.extend(extra);
        RunConfig::resolve(self.config.as_deref(), std::env::vars(), &flags).map_err(|e| {
            eprintln!("primegap: {e}");
            Exit::Usage
        })
    }
}

fn run(cli: Cli) -> Exit {
    let result = match &cli.command {
        Command::Selberg(c) => c.config(vec![]).map(|cfg| cli::cmd_selberg(&cfg)),
        Command::Scan { which, common } => common.config(vec![]).map(|cfg| cli::cmd_scan(&cfg, *which)),
        Command::Figure1(c) => c.config(vec![]).map(|cfg| cli::cmd_figure1(&cfg)),
        Command::Fit { synthetic, bins, common } => {
            let mut extra = vec![];
            if *synthetic {
                extra.push(("synthetic", "true".to_string()));
            }
            if let Some(b) = bins {
                extra.push(("bins", b.clone()));
            }
            common.config(extra).map(|cfg| cli::cmd_fit(&cfg))
        }
        Command::Report(c) => c.config(vec![]).map(|cfg| cli::cmd_report(&cfg)),
    };
    result.unwrap_or_else(|e| e)
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()).code() as u8)
}
