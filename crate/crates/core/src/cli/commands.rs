use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{bin_average_k, fit_skewes, synthetic_bins, BinnedPoint, FitResult};
use crate::fluct::{
    DeltaSample, DeltaScan, DerivRecord, DerivScan, Figure1Writer, KSampler, ScanKind, ScanReport, Scans,
};
use crate::selberg::{lemma1_survey, log_spaced, Lemma1Summary, Selberg, SelbergSums};
use crate::stream;

use super::checkpoint::run_checkpointed;
use super::report::*;
use super::{Exit, Format, RunConfig};

/// Smallest limit at which `S2` has a term (`2·2 = 4`).
pub const SELBERG_MIN_LIMIT: u64 = 4;
pub const FIT_MIN_LIMIT: u64 = 10_000;
pub const REPORT_MIN_LIMIT: u64 = 10;
/// Every prime up to here is checked for `S2 < S1`; beyond it, log-spaced points.
pub const LEMMA1_DENSE_LIMIT: u64 = 1_000_000;
pub const LEMMA1_SPARSE_POINTS: usize = 1_000;

/// Result of one command: its exit status, the files written and a one-line
/// summary for the terminal.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub exit: Exit,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// One line of a CSV record file.
pub trait CsvRecord {
    const HEADER: &'static str;
    fn row(&self) -> String;
}

impl CsvRecord for SelbergSums {
    const HEADER: &'static str = SelbergSums::CSV_HEADER;
    fn row(&self) -> String {
        self.csv_row()
    }
}

impl CsvRecord for DerivRecord {
    const HEADER: &'static str = DerivRecord::CSV_HEADER;
    fn row(&self) -> String {
        self.csv_row()
    }
}

impl CsvRecord for DeltaSample {
    const HEADER: &'static str = "n,p,delta,delta_hat,b_drift";
    fn row(&self) -> String {
        format!("{},{},{},{},{}", self.n, self.p, self.delta, self.delta_hat, self.b_drift)
    }
}

impl CsvRecord for BinnedPoint {
    const HEADER: &'static str = "log_x,mean_k,count";
    fn row(&self) -> String {
        format!("{},{},{}", self.log_x, self.mean_k, self.count)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Records as CSV (header first) or as a JSON array.
pub fn write_records<T: CsvRecord + Serialize>(path: &Path, format: Format, rows: &[T]) -> Result<()> {
    match format {
        Format::Json => write_json(path, rows),
        Format::Csv => {
            let mut out = create(path)?;
            let io = |e| Error::io(path, e);
            writeln!(out, "{}", T::HEADER).map_err(io)?;
            for r in rows {
                writeln!(out, "{}", r.row()).map_err(io)?;
            }
            out.flush().map_err(io)
        }
    }
}

fn prepare(cfg: &RunConfig, min_limit: u64, what: &str) -> Result<()> {
    cfg.validate()?;
    if cfg.limit < min_limit {
        return Err(Error::Invalid(format!("{what} needs limit >= {min_limit}, got {}", cfg.limit)));
    }
    std::fs::create_dir_all(&cfg.output_path).map_err(|e| Error::io(&cfg.output_path, e))
}

/// Print the outcome (or the error) and map it to an exit status.
fn finish(name: &str, result: Result<Outcome>) -> Exit {
    match result {
        Ok(o) => {
            println!("{name}: {}", o.summary);
            for f in &o.files {
                println!("  wrote {}", f.display());
            }
            o.exit
        }
        Err(e) => {
            eprintln!("primegap {name}: error: {e}");
            Exit::Usage
        }
    }
}

#[derive(Serialize)]
struct SelbergSummary<'a> {
    limit: u64,
    lemma1: &'a Lemma1Summary,
    quoted: Option<&'a SelbergComparison>,
}

/// Log-spaced evaluation points up to `limit`, starting at 1000 so that all
/// of them are distinct once the limit is large.
pub fn sparse_points(limit: u64) -> Vec<u64> {
    log_spaced(limit.min(1000).max(SELBERG_MIN_LIMIT), limit, LEMMA1_SPARSE_POINTS)
}

fn lemma1_for(sel: &Selberg, limit: u64) -> Result<Lemma1Summary> {
    lemma1_survey(sel, limit.min(LEMMA1_DENSE_LIMIT), &sparse_points(limit))
}

fn quoted_comparison(sel: &Selberg, limit: u64) -> Result<Option<SelbergComparison>> {
    if limit < QUOTED_S1_MINUS_S2_AT {
        return Ok(None);
    }
    SelbergComparison::compute(sel, QUOTED_S1_MINUS_S2_AT).map(Some)
}

pub fn try_cmd_selberg(cfg: &RunConfig) -> Result<Outcome> {
    prepare(cfg, SELBERG_MIN_LIMIT, "selberg")?;
    let sel = Selberg::with_plan(&cfg.plan())?;
    let rows = sel.residual_scan(&sparse_points(cfg.limit))?;
    let lemma1 = lemma1_for(&sel, cfg.limit)?;
    let quoted = quoted_comparison(&sel, cfg.limit)?;

    let rows_path = cfg.output(&format!("selberg.{}", cfg.format.extension()));
    write_records(&rows_path, cfg.format, &rows)?;
    let summary_path = cfg.output("selberg_summary.json");
    write_json(&summary_path, &SelbergSummary { limit: cfg.limit, lemma1: &lemma1, quoted: quoted.as_ref() })?;

    let mut summary = format!(
        "S2 < S1 {} at {} primes and {} extra points",
        if lemma1.holds { "holds" } else { "FAILS" },
        lemma1.dense_points,
        lemma1.sparse_points
    );
    if let Some(q) = &quoted {
        summary += &format!(
            "; S1-S2 at {} = {} (ordered), {} (unordered), quoted {}",
            q.x, q.s1_minus_s2_ordered, q.s1_minus_s2_unordered, q.quoted
        );
    }
    Ok(Outcome { exit: Exit::from_pass(lemma1.holds), files: vec![rows_path, summary_path], summary })
}

pub fn cmd_selberg(cfg: &RunConfig) -> Exit {
    finish("selberg", try_cmd_selberg(cfg))
}

pub fn try_cmd_scan(cfg: &RunConfig, which: ScanKind) -> Result<Outcome> {
    prepare(cfg, which.min_limit(), &format!("scan {which}"))?;
    if cfg.records && cfg.resume {
        return Err(Error::Invalid("--records cannot be combined with --resume".into()));
    }
    let constants = cfg.constants();
    let mut fresh = Scans::new(constants).enable(which);
    if cfg.records {
        match which {
            ScanKind::B | ScanKind::K => fresh.deriv = Some(DerivScan::new(constants.c, constants.fhat_cubic, true)),
            ScanKind::Delta => fresh.delta = Some(DeltaScan::new(constants.c, constants.fhat_cubic, true)),
            _ => {}
        }
    }
    let (mut scans, _) = run_checkpointed(cfg, &format!("scan-{which}"), fresh)?;
    let report = scans.reports(cfg.limit).remove(&which).expect("enabled scan reports");

    let mut files = Vec::new();
    let path = cfg.output(&format!("scan_{which}.json"));
    write_json(&path, &report)?;
    files.push(path);
    if cfg.records {
        let path = cfg.output(&format!("{which}_records.{}", cfg.format.extension()));
        let written = if let Some(r) = scans.deriv.as_mut().and_then(|d| d.records.take()) {
            write_records(&path, cfg.format, &r).map(|_| true)
        } else if let Some(r) = scans.delta.as_mut().and_then(|d| d.samples.take()) {
            write_records(&path, cfg.format, &r).map(|_| true)
        } else {
            Ok(false)
        }?;
        if written {
            files.push(path);
        }
    }
    let summary = format!(
        "{} violations, max ratio {} at {}{}",
        report.violations.len(),
        report.max_ratio,
        report.max_ratio_at,
        if report.passed { "" } else { " (FAILED)" }
    );
    Ok(Outcome { exit: Exit::from_pass(report.passed), files, summary })
}

pub fn cmd_scan(cfg: &RunConfig, which: ScanKind) -> Exit {
    finish(&format!("scan {which}"), try_cmd_scan(cfg, which))
}

const FIGURE1_SCRIPT: &str = r#"# Plot k'(p) against the bound it must exceed, from figure1.csv.
# usage: python figure1_plot.py [figure1.csv] [figure1.png]
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
src = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "figure1.csv")
dst = sys.argv[2] if len(sys.argv) > 2 else os.path.join(here, "figure1.png")

p, kprime, rhs = [], [], []
with open(src, newline="") as fh:
    for row in csv.DictReader(fh):
        p.append(float(row["p"]))
        kprime.append(float(row["k_prime"]))
        rhs.append(float(row["rhs24"]))

fig, ax = plt.subplots(figsize=(8, 5))
ax.plot(p, kprime, ",", color="tab:blue", label="k'(p)")
ax.plot(p, rhs, "-", color="tab:red", linewidth=1, label="lower bound")
ax.set_xscale("log")
ax.set_xlabel("p")
ax.set_ylabel("k'(p)")
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
"#;

pub fn try_cmd_figure1(cfg: &RunConfig) -> Result<Outcome> {
    prepare(cfg, ScanKind::K.min_limit(), "figure1")?;
    let csv_path = cfg.output("figure1.csv");
    let mut writer = Figure1Writer::new(create(&csv_path)?, &cfg.constants()).map_err(|e| Error::io(&csv_path, e))?;
    stream::run(&cfg.plan(), &mut writer)?;
    let (rows, failures) = (writer.rows, writer.failures);
    writer.into_inner().map_err(|e| Error::io(&csv_path, e))?;
    let script = cfg.output("figure1_plot.py");
    std::fs::write(&script, FIGURE1_SCRIPT).map_err(|e| Error::io(&script, e))?;
    Ok(Outcome {
        exit: Exit::from_pass(failures == 0),
        files: vec![csv_path, script],
        summary: format!("{rows} rows, {failures} below the bound for p > 3"),
    })
}

pub fn cmd_figure1(cfg: &RunConfig) -> Exit {
    finish("figure1", try_cmd_figure1(cfg))
}

/// The sampler behind real-data fits: every 1000th prime plus one prime per
/// 0.01 step in `log x`, from `x = 10^4`.
pub fn default_sampler(cubic: f64) -> KSampler {
    KSampler::new(FIT_MIN_LIMIT, 1000, 0.01, cubic)
}

fn fit_samples(samples: &[crate::fluct::FluctuationSample], bins: usize) -> Result<(Vec<BinnedPoint>, FitResult)> {
    let binned = bin_average_k(samples, bins)?;
    let fit = fit_skewes(&binned)?;
    Ok((binned, fit))
}

pub fn try_cmd_fit(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.synthetic {
        prepare(cfg, 2, "fit")?;
        let (a, alpha) = (0.2, 1.4);
        let bins = synthetic_bins(a, alpha, (1e4f64).ln(), (1e8f64).ln(), cfg.bins);
        let fit = fit_skewes(&bins)?;
        let path = cfg.output("fit_synthetic.json");
        write_json(&path, &fit)?;
        let ok = (fit.a - a).abs() < 1e-9 && (fit.alpha - alpha).abs() < 1e-9;
        return Ok(Outcome {
            exit: Exit::from_pass(ok),
            files: vec![path],
            summary: format!("synthetic A = {}, alpha = {} (expected {a}, {alpha})", fit.a, fit.alpha),
        });
    }
    prepare(cfg, FIT_MIN_LIMIT, "fit")?;
    let constants = cfg.constants();
    let fresh = Scans::new(constants).with_sampler(default_sampler(constants.fhat_cubic));
    let (scans, _) = run_checkpointed(cfg, "fit", fresh)?;
    let samples = scans.sampler.map(|s| s.samples).unwrap_or_default();
    let (binned, fit) = fit_samples(&samples, cfg.bins)?;
    let fit_path = cfg.output("fit.json");
    write_json(&fit_path, &fit)?;
    let bins_path = cfg.output(&format!("fit_bins.{}", cfg.format.extension()));
    write_records(&bins_path, cfg.format, &binned)?;
    Ok(Outcome {
        exit: Exit::from_pass(fit.a > 0.0),
        files: vec![fit_path, bins_path],
        summary: format!(
            "A = {}, alpha = {}, log10 Sk1 = {} from {} samples in {} bins",
            fit.a,
            fit.alpha,
            fit.log10_sk1,
            samples.len(),
            fit.bin_count
        ),
    })
}

pub fn cmd_fit(cfg: &RunConfig) -> Exit {
    finish("fit", try_cmd_fit(cfg))
}

/// Assemble the report document without writing it.
pub fn build_report(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    if cfg.limit < REPORT_MIN_LIMIT {
        return Err(Error::Invalid(format!("report needs limit >= {REPORT_MIN_LIMIT}, got {}", cfg.limit)));
    }
    let constants = cfg.constants();
    let mut fresh = ScanKind::ALL
        .into_iter()
        .filter(|k| k.min_limit() <= cfg.limit)
        .fold(Scans::new(constants), Scans::enable)
        .with_partial_sums();
    if cfg.limit >= FIT_MIN_LIMIT {
        fresh = fresh.with_sampler(default_sampler(constants.fhat_cubic));
    }
    let (scans, end) = run_checkpointed(cfg, "report", fresh)?;
    let reports: BTreeMap<ScanKind, ScanReport> = scans.reports(cfg.limit);

    let sel = Selberg::with_plan(&cfg.plan())?;
    let lemma1 = lemma1_for(&sel, cfg.limit)?;
    let selberg_quoted = quoted_comparison(&sel, cfg.limit)?;
    drop(sel);

    let partial = scans.partial.as_ref().expect("partial sums enabled");
    let theorem2 = Theorem2Summary {
        n_max: partial.last_n,
        n0: partial.n0(),
        gap_sum_identity: end.pending == Some(partial.gap_sum + 2),
    };

    let cg = &reports[&ScanKind::Cg];
    let cramer_granville = CramerGranvilleSummary {
        c: cg.c,
        violations: cg.violations.clone(),
        max_ratio: cg.max_ratio,
        max_ratio_at: cg.max_ratio_at,
        tail_from_n: cg.thresholds["tail_from_n"] as u64,
        tail_max_ratio: cg.thresholds["tail_max_ratio"],
        tail_max_ratio_at: cg.thresholds["tail_max_ratio_at"] as u64,
        quoted_max_ratio: QUOTED_MAX_CG_RATIO,
    };

    let schoenfeld = scans.schoenfeld.as_ref().map(|s| SchoenfeldSummary {
        max_ratio: s.peak.value(),
        max_ratio_at: s.peak.at(),
        max_ratio_above_2657: s.rh_peak.value(),
        max_ratio_above_2657_at: s.rh_peak.at(),
        k_rh: s.k_rh,
        k_all: s.k_all,
        x_star: s.x_star,
    });
    let b_max = scans.bbound.as_ref().map(|s| Located { value: s.peak.value(), at: s.peak.at() });

    let (fit, fit_error) = match scans.sampler.as_ref() {
        None => (None, Some(format!("limit below {FIT_MIN_LIMIT}"))),
        Some(s) => match fit_samples(&s.samples, cfg.bins) {
            Ok((_, f)) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };

    let mut checks = BTreeMap::new();
    checks.insert("lemma1".to_string(), lemma1.holds);
    checks.insert("theorem2_gap_sum_identity".to_string(), theorem2.gap_sum_identity);
    checks.insert(
        "cramer_granville_tail".to_string(),
        cramer_granville.violations.iter().all(|&n| n < cramer_granville.tail_from_n),
    );
    checks.insert("delta_matches_cramer_granville".to_string(), reports[&ScanKind::Delta].violations == cg.violations);
    for (kind, name) in [
        (ScanKind::B, "condition19"),
        (ScanKind::K, "condition24"),
        (ScanKind::Schoenfeld, "schoenfeld"),
        (ScanKind::Bbound, "b_bound"),
        (ScanKind::Dusart, "dusart"),
    ] {
        if let Some(r) = reports.get(&kind) {
            checks.insert(name.to_string(), r.passed);
        }
    }
    if let Some(f) = scans.schoenfeld.as_ref().and_then(|s| s.max_f_from_1000) {
        checks.insert("k_negative_from_1000".to_string(), f < 0.0);
    }
    let passed = checks.values().all(|&v| v);

    Ok(Report {
        limit: cfg.limit,
        constants,
        lemma1,
        theorem2,
        cramer_granville,
        scans: reports.into_iter().map(|(k, r)| (k.name().to_string(), r)).collect(),
        schoenfeld,
        b_max,
        fit,
        fit_error,
        selberg_quoted,
        monotonicity_threshold: threshold(&constants),
        skewes_log10: reference_skewes()?,
        checks,
        passed,
    })
}

pub fn try_cmd_report(cfg: &RunConfig) -> Result<Outcome> {
    prepare(cfg, REPORT_MIN_LIMIT, "report")?;
    let report = build_report(cfg)?;
    let path = cfg.output("report.json");
    write_json(&path, &report)?;
    let failed: Vec<&str> = report.checks.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect();
    let summary = if failed.is_empty() {
        format!("all {} checks pass", report.checks.len())
    } else {
        format!("failed checks: {}", failed.join(", "))
    };
    Ok(Outcome { exit: Exit::from_pass(report.passed), files: vec![path], summary })
}

pub fn cmd_report(cfg: &RunConfig) -> Exit {
    finish("report", try_cmd_report(cfg))
}

