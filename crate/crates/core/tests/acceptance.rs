//! End-to-end acceptance run at the full desk-scale limit. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::time::{Duration, Instant};

use primegap::analytic::{li, monotonicity_threshold, skewes_log10, smooth_s1, smooth_s2};
use primegap::cli::{build_report, Report, RunConfig};
use primegap::fit::{fit_skewes, synthetic_bins};
use primegap::fluct::{kprime_records, Figure1Writer, ScanKind, VisitFn};
use primegap::selberg::{Pairing, Selberg, QUOTED_S1_MINUS_S2};
use primegap::sieve::{prime_count, primes_up_to, SievePlan};
use primegap::stream::{self, GapPoint};
use rand::{Rng, SeedableRng};

mod common;

const LIMIT: u64 = 100_000_000;
const DETERMINISM_LIMIT: u64 = 10_000_000;

// Regression values at x = 104729.
const S1_AT_QUOTE: f64 = 1_102_735.169_801_744_6;
const S1_MINUS_S2_ORDERED: f64 = 272_293.974_336_877_6;
const S1_MINUS_S2_UNORDERED: f64 = 686_787.253_299_493_8;
// Regression values at 10^8.
const THEOREM2_N0: u64 = 5;
const CG_TAIL_MAX: f64 = 0.739_465_686_865_454_9;
const CG_TAIL_MAX_AT: u64 = 20_831_323;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn record(out: &mut Vec<Outcome>, id: u32, name: &'static str, pass: bool, detail: String) {
    println!("{} {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    out.push(Outcome { id, name, pass, detail });
}

fn config(limit: u64, workers: usize) -> RunConfig {
    RunConfig { limit, workers, ..RunConfig::default() }
}

fn lemma1(out: &mut Vec<Outcome>, report: &Report, took: Duration) {
    let l = &report.lemma1;
    let dense_expected = prime_count(1_000_000).unwrap() - 2;
    let pass = l.holds
        && l.dense_limit == 1_000_000
        && l.dense_points == dense_expected
        && l.sparse_points == 1000
        && took <= Duration::from_secs(300);
    record(
        out,
        1,
        "Lemma 1",
        pass,
        format!(
            "S2 < S1 at {} primes <= 1e6 and {} log-spaced points to 1e8; min margin {:.4}; report built in {:.1}s",
            l.dense_points,
            l.sparse_points,
            l.min_relative_margin,
            took.as_secs_f64()
        ),
    );
}

fn quoted_difference(out: &mut Vec<Outcome>, report: &Report) {
    let Some(q) = &report.selberg_quoted else {
        return record(out, 2, "S1-S2 at 104729", false, "missing from report".into());
    };
    let primes = primes_up_to(q.x).unwrap();
    let (ordered, unordered) = common::s2_pair_loop(&primes, q.x);
    let s1 = common::s1_direct(&primes, q.x);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let oracle_ok = rel(q.s1, s1) < 1e-12 && rel(q.s2_ordered, ordered) < 1e-12 && rel(q.s2_unordered, unordered) < 1e-12;
    let pinned = (q.s1 - S1_AT_QUOTE).abs() < 1e-6
        && (q.s1_minus_s2_ordered - S1_MINUS_S2_ORDERED).abs() < 1e-6
        && (q.s1_minus_s2_unordered - S1_MINUS_S2_UNORDERED).abs() < 1e-6;
    record(
        out,
        2,
        "S1-S2 at 104729",
        oracle_ok && pinned && q.quoted == QUOTED_S1_MINUS_S2,
        format!(
            "ordered {:.4}, unordered {:.4}, quoted {}; unordered {} the quote (rel {:.1e}); smooth asymptotic {:.1}",
            q.s1_minus_s2_ordered,
            q.s1_minus_s2_unordered,
            q.quoted,
            if q.matches_quoted { "matches" } else { "does not match" },
            q.relative_deviation_unordered,
            q.smooth
        ),
    );
}

fn smooth_identity(out: &mut Vec<Outcome>) {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let x = 10f64.powf(1.0 + 0.5 * i as f64);
        let lhs = smooth_s1(x) - smooth_s2(x);
        let rhs = (1.0 + 2f64.ln()) * x - 2.0 * 2f64.ln() - 2.0;
        worst = worst.max((lhs - rhs).abs() / rhs.abs());
    }
    record(out, 3, "smooth S1-S2 identity", worst <= 1e-9, format!("max relative error {worst:.2e} over 20 points"));
}

fn theorem2(out: &mut Vec<Outcome>, report: &Report) {
    let mut gap_sum = 0u64;
    let mut mismatches = 0u64;
    stream::run(
        &SievePlan::new(LIMIT),
        &mut VisitFn(|pt: &GapPoint| {
            gap_sum += pt.gap.g;
            if gap_sum + 2 != pt.gap.next_prime() {
                mismatches += 1;
            }
        }),
    )
    .unwrap();
    let t = &report.theorem2;
    record(
        out,
        4,
        "Theorem 2 partial sums",
        t.n0 == THEOREM2_N0 && t.gap_sum_identity && mismatches == 0,
        format!("N0 = {} over N <= {}; gap_sum + 2 = p(N+1) failed at {mismatches} N", t.n0, t.n_max),
    );
}

fn cramer_granville(out: &mut Vec<Outcome>, report: &Report) {
    let cg = &report.cramer_granville;
    let pass = cg.violations == [1, 2, 4]
        && cg.tail_max_ratio < cg.quoted_max_ratio
        && (cg.tail_max_ratio - CG_TAIL_MAX).abs() < 1e-12
        && cg.tail_max_ratio_at == CG_TAIL_MAX_AT;
    record(
        out,
        5,
        "Cramér-Granville c=1",
        pass,
        format!(
            "violations {:?}; max ratio for n >= 5 is {:.10} at p = {} (< {})",
            cg.violations, cg.tail_max_ratio, cg.tail_max_ratio_at, cg.quoted_max_ratio
        ),
    );
}

fn derivative_condition(out: &mut Vec<Outcome>, report: &Report, id: u32, kind: ScanKind, name: &'static str) {
    let r = &report.scans[kind.name()];
    let beyond = r.thresholds["violations_above_cutoff"];
    let pass = r.passed && beyond == 0.0;
    record(
        out,
        id,
        name,
        pass,
        format!(
            "{} records, failures only at n in {:?} (p <= {}); peak ratio {:.6} at p = {}",
            r.thresholds["records"], r.violations, r.thresholds["assert_above_p"], r.max_ratio, r.max_ratio_at
        ),
    );
}

fn condition24(out: &mut Vec<Outcome>, report: &Report) {
    let r = &report.scans["k"];
    let mut fig = Figure1Writer::new(std::io::sink(), &report.constants).unwrap();
    stream::run(&SievePlan::new(LIMIT), &mut fig).unwrap();
    let rows_expected = prime_count(LIMIT).unwrap() - 1;
    let pass = r.passed && fig.failures == 0 && fig.rows == rows_expected;
    record(
        out,
        7,
        "condition on k' (p > 3)",
        pass,
        format!(
            "violations at n in {:?}; figure data regenerated: {} rows, {} below the bound for p > 3",
            r.violations, fig.rows, fig.failures
        ),
    );
}

fn schoenfeld(out: &mut Vec<Outcome>, report: &Report) {
    let s = report.schoenfeld.as_ref().unwrap();
    let r = &report.scans["schoenfeld"];
    let pass = r.passed && s.max_ratio_above_2657 <= s.k_rh && s.x_star.is_some();
    record(
        out,
        8,
        "Schoenfeld bound",
        pass,
        format!(
            "max ratio above 2657 is {:.6} at {} (bound {:.6}); K = 1/3 holds from x* = {} on, fails at x = {} (ratio {:.4})",
            s.max_ratio_above_2657,
            s.max_ratio_above_2657_at,
            s.k_rh,
            s.x_star.unwrap_or(0),
            s.max_ratio_at,
            s.max_ratio
        ),
    );
}

fn b_bound(out: &mut Vec<Outcome>, report: &Report) {
    let b = report.b_max.as_ref().unwrap();
    let pass = report.scans["bbound"].passed && b.value < report.constants.b && b.at < 1000;
    record(out, 9, "B bound", pass, format!("max |b| = {:.6} at x = {} (B = {})", b.value, b.at, report.constants.b));
}

fn dusart(out: &mut Vec<Outcome>, report: &Report) {
    let r = &report.scans["dusart"];
    record(
        out,
        10,
        "Dusart bounds",
        r.passed && r.violations.is_empty(),
        format!("{} grid points checked, peak bound/pi ratio {:.8} at {}", r.thresholds["checked_points"], r.max_ratio, r.max_ratio_at),
    );
}

fn threshold(out: &mut Vec<Outcome>) {
    let t = monotonicity_threshold(1.0, 5.0);
    record(out, 11, "monotonicity threshold", (t - 16.31).abs() <= 0.01, format!("threshold(c=1, B=5) = {t:.6}"));
}

fn skewes_map(out: &mut Vec<Outcome>) {
    let (a, b, c) = (skewes_log10(1.3).unwrap(), skewes_log10(1.5).unwrap(), skewes_log10(2.0).unwrap());
    let pass = (a - 17.0).abs() <= 0.1 && (b - 38.4).abs() <= 0.1 && (c - 702.8).abs() <= 0.5;
    record(out, 12, "Skewes map", pass, format!("log10 Sk1 at alpha 1.3, 1.5, 2.0: {a:.3}, {b:.3}, {c:.3}"));
}

fn fit(out: &mut Vec<Outcome>, report: &Report) {
    let synth = fit_skewes(&synthetic_bins(0.2, 1.4, 1e4f64.ln(), 1e8f64.ln(), 20)).unwrap();
    let synth_ok = (synth.a - 0.2).abs() < 1e-9 && (synth.alpha - 1.4).abs() < 1e-9;
    let Some(f) = &report.fit else {
        return record(out, 13, "triple-log fit", false, format!("no fit: {:?}", report.fit_error));
    };
    let consistent = (f.log10_sk1 - skewes_log10(f.alpha).unwrap()).abs() < 1e-9;
    let pass = synth_ok && consistent && (1.0..=1.8).contains(&f.alpha) && f.a > 0.0;
    record(
        out,
        13,
        "triple-log fit",
        pass,
        format!(
            "synthetic recovery {}; x in [{:.0}, {:.0}]: A = {:.6}, alpha = {:.4}, log10 Sk1 = {:.3}, alpha shift without last bin {:+.4}",
            if synth_ok { "exact" } else { "FAILED" },
            f.range.0,
            f.range.1,
            f.a,
            f.alpha,
            f.log10_sk1,
            f.alpha_shift_without_last_bin.unwrap_or(f64::NAN)
        ),
    );
}

fn oracles(out: &mut Vec<Outcome>) {
    let sel = Selberg::up_to(10_000).unwrap();
    let primes = sel.table().primes().to_vec();
    let mut s2_worst: f64 = 0.0;
    for x in 2..=10_000 {
        let (ordered, _) = common::s2_pair_loop(&primes, x);
        let fast = sel.s2(x, Pairing::Ordered).unwrap();
        s2_worst = s2_worst.max((fast - ordered).abs() / ordered.max(1.0));
    }
    let sieve_ok = primes_up_to(100_000).unwrap() == common::trial_division_primes(100_000);
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let mut li_worst: f64 = 0.0;
    for _ in 0..100 {
        let x = rng.random_range(2f64.ln()..(LIMIT as f64).ln()).exp().clamp(2.0, LIMIT as f64);
        let slow = common::li_quadrature(x);
        li_worst = li_worst.max((li(x).unwrap() - slow).abs() / slow.abs().max(1.0));
    }
    let pass = s2_worst <= 1e-8 && sieve_ok && li_worst <= 1e-10;
    record(
        out,
        14,
        "oracle equivalences",
        pass,
        format!(
            "S2 vs pair loop (x <= 1e4) {s2_worst:.1e}; sieve vs trial division (<= 1e5) {}; Li vs quadrature (100 points) {li_worst:.1e}",
            if sieve_ok { "equal" } else { "DIFFER" }
        ),
    );
}

fn determinism(out: &mut Vec<Outcome>) {
    let doc = |cfg: &RunConfig| serde_json::to_string(&build_report(cfg).unwrap()).unwrap();
    let reference = doc(&config(DETERMINISM_LIMIT, 1));
    let workers_ok = [2, 8].iter().all(|&w| {
        doc(&RunConfig { segment_size: 1 << 18, ..config(DETERMINISM_LIMIT, w) }) == reference
    });

    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("report.ckpt");
    let half = RunConfig { checkpoint_path: Some(cp), ..config(DETERMINISM_LIMIT / 2, 4) };
    build_report(&half).unwrap();
    let resumed = doc(&RunConfig { limit: DETERMINISM_LIMIT, resume: true, ..half });
    let resume_ok = resumed == reference;

    let k = RunConfig::default().constants();
    let recs = |w: usize| kprime_records(&SievePlan::new(DETERMINISM_LIMIT).with_workers(w), &k).unwrap();
    let base = recs(1);
    let records_ok = [2, 8].iter().all(|&w| recs(w) == base);

    record(
        out,
        15,
        "determinism",
        workers_ok && resume_ok && records_ok,
        format!(
            "limit {DETERMINISM_LIMIT}: report across workers 1/2/8 {}, resumed from half limit {}, {} derivative records {}",
            if workers_ok { "identical" } else { "DIFFERS" },
            if resume_ok { "identical" } else { "DIFFERS" },
            base.len(),
            if records_ok { "identical" } else { "DIFFER" }
        ),
    );
}

fn main() {
    let mut out = Vec::new();
    let start = Instant::now();
    let report = build_report(&config(LIMIT, primegap::sieve::default_workers())).expect("report at 1e8");
    let took = start.elapsed();

    lemma1(&mut out, &report, took);
    quoted_difference(&mut out, &report);
    smooth_identity(&mut out);
    theorem2(&mut out, &report);
    cramer_granville(&mut out, &report);
    derivative_condition(&mut out, &report, 6, ScanKind::B, "condition on b' (p > 5)");
    condition24(&mut out, &report);
    schoenfeld(&mut out, &report);
    b_bound(&mut out, &report);
    dusart(&mut out, &report);
    threshold(&mut out);
    skewes_map(&mut out);
    fit(&mut out, &report);
    oracles(&mut out);
    determinism(&mut out);

    let failed: Vec<String> = out.iter().filter(|o| !o.pass).map(|o| format!("{} {}", o.id, o.name)).collect();
    println!(
        "acceptance: {}/{} criteria pass in {:.1}s",
        out.len() - failed.len(),
        out.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        for o in out.iter().filter(|o| !o.pass) {
            eprintln!("  {}: {}", o.name, o.detail);
        }
        std::process::exit(1);
    }
}
