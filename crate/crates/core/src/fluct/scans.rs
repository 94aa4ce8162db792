use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{b_value, k_value, FluctuationSample};
use crate::analytic::{condition19_rhs, condition24_rhs, dusart_bounds, li_unchecked, Constants};
use crate::error::{Error, Result};
use crate::selberg::PartialSumScan;
use crate::sieve::{GapCursor, SievePlan};
use crate::stream::{self, GapPoint, GapVisitor};
use crate::sum::CompensatedSum;

/// Dusart's lower bound holds from here on.
pub const DUSART_LOWER_FROM: u64 = 32_299;
/// Dusart's upper bound holds from here on.
pub const DUSART_UPPER_FROM: u64 = 355_991;
/// Schoenfeld's RH bound holds above this point.
pub const SCHOENFELD_FROM: u64 = 2_657;
/// Primes at or below these are exempt from the derivative conditions.
pub const CONDITION19_ABOVE: u64 = 5;
pub const CONDITION24_ABOVE: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    Cg,
    B,
    K,
    Delta,
    Schoenfeld,
    Dusart,
    Bbound,
}

impl ScanKind {
    pub const ALL: [ScanKind; 7] = [
        ScanKind::Cg,
        ScanKind::B,
        ScanKind::K,
        ScanKind::Delta,
        ScanKind::Schoenfeld,
        ScanKind::Dusart,
        ScanKind::Bbound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScanKind::Cg => "cg",
            ScanKind::B => "b",
            ScanKind::K => "k",
            ScanKind::Delta => "delta",
            ScanKind::Schoenfeld => "schoenfeld",
            ScanKind::Dusart => "dusart",
            ScanKind::Bbound => "bbound",
        }
    }

    /// Smallest limit the scan accepts.
    pub fn min_limit(self) -> u64 {
        match self {
            ScanKind::Cg | ScanKind::Delta => 3,
            ScanKind::K => 5,
            ScanKind::B => 7,
            ScanKind::Schoenfeld | ScanKind::Bbound => 10,
            ScanKind::Dusart => DUSART_UPPER_FROM + 1,
        }
    }

    pub fn check_limit(self, limit: u64) -> Result<()> {
        if limit < self.min_limit() {
            return Err(Error::Invalid(format!(
                "{} scan needs limit >= {}, got {limit}",
                self.name(),
                self.min_limit()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ScanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScanKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown scan '{s}'")))
    }
}

/// Summary of one scan.
///
/// `violations` holds prime indices `n` for per-prime scans (cg, b, k,
/// delta) and `x` values for grid scans (schoenfeld, dusart, bbound).
/// `max_ratio` is the scan's key statistic, normalised so that values
/// below 1 pass wherever a bound is asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub scan: ScanKind,
    pub limit: u64,
    pub c: f64,
    pub violations: Vec<u64>,
    pub max_ratio: f64,
    pub max_ratio_at: u64,
    pub thresholds: BTreeMap<String, f64>,
    pub passed: bool,
}

/// Running maximum with its location.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Peak(pub Option<(f64, u64)>);

impl Peak {
    #[inline]
    pub fn offer(&mut self, value: f64, at: u64) {
        match self.0 {
            Some((v, _)) if v >= value => {}
            _ => self.0 = Some((value, at)),
        }
    }

    pub fn value(&self) -> f64 {
        self.0.map_or(0.0, |(v, _)| v)
    }

    pub fn at(&self) -> u64 {
        self.0.map_or(0, |(_, at)| at)
    }
}

/// `g_n < c log²p_n`, checked at every prime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgScan {
    pub c: f64,
    pub tail_from: u64,
    pub violations: Vec<u64>,
    pub peak: Peak,
    pub tail_peak: Peak,
}

impl CgScan {
    pub fn new(c: f64) -> Self {
        Self { c, tail_from: 5, violations: Vec::new(), peak: Peak::default(), tail_peak: Peak::default() }
    }

    fn visit(&mut self, pt: &GapPoint) {
        let g = pt.gap;
        let l = (g.p as f64).ln();
        let logsq = l * l;
        let ratio = g.g as f64 / logsq;
        if g.g as f64 >= self.c * logsq {
            self.violations.push(g.n);
        }
        self.peak.offer(ratio, g.p);
        if g.n >= self.tail_from {
            self.tail_peak.offer(ratio, g.p);
        }
    }

    pub fn report(&self, limit: u64) -> ScanReport {
        let mut t = BTreeMap::new();
        t.insert("tail_from_n".into(), self.tail_from as f64);
        t.insert("tail_max_ratio".into(), self.tail_peak.value());
        t.insert("tail_max_ratio_at".into(), self.tail_peak.at() as f64);
        ScanReport {
            scan: ScanKind::Cg,
            limit,
            c: self.c,
            violations: self.violations.clone(),
            max_ratio: self.peak.value(),
            max_ratio_at: self.peak.at(),
            thresholds: t,
            passed: self.violations.is_empty(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSample {
    pub n: u64,
    pub p: u64,
    /// `Σ_{q<p} (log²q - g(q)/c)`
    pub delta: f64,
    /// `delta - p log p + ((c+1)/c) p`
    pub delta_hat: f64,
    /// `delta_hat · log p / p - b(p)`: how far the Δ-route estimate of `b`
    /// drifts from the `f̂` definition.
    pub b_drift: f64,
}

/// `Δ(p)` at every prime and its monotonicity violations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeltaScan {
    pub c: f64,
    pub cubic: f64,
    #[serde(skip)]
    pub delta: CompensatedSum,
    #[serde(skip)]
    pub logsq: CompensatedSum,
    pub gap_sum: u64,
    pub violations: Vec<u64>,
    pub peak: Peak,
    /// Largest `|D(N) - Δ(p_{N+1})| / max(1, |Δ|)` between the two routes.
    pub max_route_diff: f64,
    pub last_b_drift: f64,
    #[serde(skip)]
    pub samples: Option<Vec<DeltaSample>>,
}

impl DeltaScan {
    pub fn new(c: f64, cubic: f64, keep_samples: bool) -> Self {
        Self { c, cubic, samples: keep_samples.then(Vec::new), ..Default::default() }
    }

    fn visit(&mut self, pt: &GapPoint) {
        let g = pt.gap;
        let p = g.p as f64;
        let l = p.ln();
        let delta = self.delta.value();
        let delta_hat = delta - p * l + (self.c + 1.0) / self.c * p;
        let b_drift = delta_hat * l / p - b_value(p, g.n as f64, self.cubic);
        self.last_b_drift = b_drift;
        if let Some(s) = self.samples.as_mut() {
            s.push(DeltaSample { n: g.n, p: g.p, delta, delta_hat, b_drift });
        }

        let logsq = l * l;
        let step = logsq - g.g as f64 / self.c;
        if step <= 0.0 {
            self.violations.push(g.n);
        }
        self.peak.offer(g.g as f64 / (self.c * logsq), g.p);
        self.delta += step;
        self.logsq += logsq;
        self.gap_sum += g.g;

        let d_n = self.logsq.value() - self.gap_sum as f64 / self.c;
        let delta_next = self.delta.value();
        let diff = (d_n - delta_next).abs() / delta_next.abs().max(1.0);
        self.max_route_diff = self.max_route_diff.max(diff);
    }

    pub fn report(&self, limit: u64) -> ScanReport {
        let mut t = BTreeMap::new();
        t.insert("max_route_diff".into(), self.max_route_diff);
        t.insert("last_b_drift".into(), self.last_b_drift);
        t.insert("final_delta".into(), self.delta.value());
        ScanReport {
            scan: ScanKind::Delta,
            limit,
            c: self.c,
            violations: self.violations.clone(),
            max_ratio: self.peak.value(),
            max_ratio_at: self.peak.at(),
            thresholds: t,
            passed: self.violations.is_empty(),
        }
    }
}

/// Forward differences of `b` and `k` at a prime and the two conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivRecord {
    pub n: u64,
    pub p: u64,
    pub b_prime: f64,
    pub k_prime: f64,
    pub rhs19: f64,
    pub rhs24: f64,
    pub ok19: bool,
    pub ok24: bool,
}

impl DerivRecord {
    pub fn compute(pt: &GapPoint, c: f64, cubic: f64) -> Self {
        let g = pt.gap;
        let (x0, x1) = (g.p as f64, (g.p + g.g) as f64);
        let (pi0, pi1) = (g.n as f64, (g.n + 1) as f64);
        let gap = g.g as f64;
        let b_prime = (b_value(x1, pi1, cubic) - b_value(x0, pi0, cubic)) / gap;
        let k_prime = (k_value(x1, pi1, pt.li_next) - k_value(x0, pi0, pt.li)) / gap;
        let rhs19 = condition19_rhs(x0, c);
        let rhs24 = condition24_rhs(x0, c);
        Self { n: g.n, p: g.p, b_prime, k_prime, rhs19, rhs24, ok19: b_prime > rhs19, ok24: k_prime > rhs24 }
    }

    pub const CSV_HEADER: &'static str = "n,p,b_prime,k_prime,rhs19,rhs24,ok19,ok24";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n, self.p, self.b_prime, self.k_prime, self.rhs19, self.rhs24, self.ok19, self.ok24
        )
    }
}

/// Derivative conditions on `b'` and `k'` at every prime with a successor.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivScan {
    pub c: f64,
    pub cubic: f64,
    pub count: u64,
    pub fail19: Vec<u64>,
    pub fail24: Vec<u64>,
    pub fail19_above_cutoff: u64,
    pub fail24_above_cutoff: u64,
    /// Largest `b'/rhs19` (resp. `k'/rhs24`) above the exemption cutoff;
    /// the condition holds where this is below 1.
    pub peak19: Peak,
    pub peak24: Peak,
    #[serde(skip)]
    pub records: Option<Vec<DerivRecord>>,
}

impl DerivScan {
    pub fn new(c: f64, cubic: f64, keep_records: bool) -> Self {
        Self { c, cubic, records: keep_records.then(Vec::new), ..Default::default() }
    }

    fn visit(&mut self, pt: &GapPoint) {
        let r = DerivRecord::compute(pt, self.c, self.cubic);
        self.count += 1;
        if !r.ok19 {
            self.fail19.push(r.n);
            self.fail19_above_cutoff += u64::from(r.p > CONDITION19_ABOVE);
        }
        if !r.ok24 {
            self.fail24.push(r.n);
            self.fail24_above_cutoff += u64::from(r.p > CONDITION24_ABOVE);
        }
        if r.p > CONDITION19_ABOVE {
            self.peak19.offer(r.b_prime / r.rhs19, r.p);
        }
        if r.p > CONDITION24_ABOVE {
            self.peak24.offer(r.k_prime / r.rhs24, r.p);
        }
        if let Some(v) = self.records.as_mut() {
            v.push(r);
        }
    }

    pub fn report(&self, kind: ScanKind, limit: u64) -> ScanReport {
        let (fails, beyond, peak, cutoff) = match kind {
            ScanKind::B => (&self.fail19, self.fail19_above_cutoff, &self.peak19, CONDITION19_ABOVE),
            ScanKind::K => (&self.fail24, self.fail24_above_cutoff, &self.peak24, CONDITION24_ABOVE),
            _ => unreachable!("derivative report for {kind}"),
        };
        let mut t = BTreeMap::new();
        t.insert("assert_above_p".into(), cutoff as f64);
        t.insert("violations_above_cutoff".into(), beyond as f64);
        t.insert("records".into(), self.count as f64);
        ScanReport {
            scan: kind,
            limit,
            c: self.c,
            violations: fails.clone(),
            max_ratio: peak.value(),
            max_ratio_at: peak.at(),
            thresholds: t,
            passed: beyond == 0,
        }
    }
}

/// `|π(x) - Li(x)| / (√x log x)` on the jump-edge grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchoenfeldScan {
    pub k_rh: f64,
    pub k_all: f64,
    pub window_from: u64,
    pub peak: Peak,
    pub rh_peak: Peak,
    pub window_peak: Peak,
    pub rh_violations: Vec<u64>,
    /// First grid point after the last point exceeding `k_all`.
    pub x_star: Option<u64>,
    /// Largest `f(p)` at primes `p ≥ 1000` (negative means `k < 0` there).
    pub max_f_from_1000: Option<f64>,
}

impl SchoenfeldScan {
    pub fn new(constants: &Constants) -> Self {
        Self {
            k_rh: constants.k_rh,
            k_all: constants.k_all,
            window_from: 10_000,
            peak: Peak::default(),
            rh_peak: Peak::default(),
            window_peak: Peak::default(),
            rh_violations: Vec::new(),
            x_star: None,
            max_f_from_1000: None,
        }
    }

    fn point(&mut self, x: u64, pi: u64, li: f64, is_prime: bool) {
        let xf = x as f64;
        let f = pi as f64 - li;
        let r = f.abs() / (xf.sqrt() * xf.ln());
        self.peak.offer(r, x);
        if x > SCHOENFELD_FROM {
            self.rh_peak.offer(r, x);
            if r > self.k_rh {
                self.rh_violations.push(x);
            }
        }
        if x >= self.window_from {
            self.window_peak.offer(r, x);
        }
        if r > self.k_all {
            self.x_star = None;
        } else if self.x_star.is_none() {
            self.x_star = Some(x);
        }
        if is_prime && x >= 1000 {
            self.max_f_from_1000 = Some(self.max_f_from_1000.map_or(f, |m| m.max(f)));
        }
    }

    pub fn report(&self, limit: u64, c: f64) -> ScanReport {
        let mut t = BTreeMap::new();
        t.insert("k_rh".into(), self.k_rh);
        t.insert("k_all".into(), self.k_all);
        t.insert("rh_from".into(), SCHOENFELD_FROM as f64);
        t.insert("rh_max_ratio".into(), self.rh_peak.value());
        t.insert("rh_max_ratio_at".into(), self.rh_peak.at() as f64);
        t.insert("window_from".into(), self.window_from as f64);
        t.insert("window_max_ratio".into(), self.window_peak.value());
        t.insert("window_max_ratio_at".into(), self.window_peak.at() as f64);
        if let Some(x) = self.x_star {
            t.insert("x_star_k_all".into(), x as f64);
        }
        if let Some(f) = self.max_f_from_1000 {
            t.insert("max_f_at_primes_from_1000".into(), f);
        }
        ScanReport {
            scan: ScanKind::Schoenfeld,
            limit,
            c,
            violations: self.rh_violations.clone(),
            max_ratio: self.peak.value(),
            max_ratio_at: self.peak.at(),
            thresholds: t,
            passed: self.rh_violations.is_empty(),
        }
    }
}

/// `|b(x)|` on the jump-edge grid against the constant `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBoundScan {
    pub b: f64,
    pub cubic: f64,
    pub peak: Peak,
    pub violations: Vec<u64>,
}

impl BBoundScan {
    pub fn new(constants: &Constants) -> Self {
        Self { b: constants.b, cubic: constants.fhat_cubic, peak: Peak::default(), violations: Vec::new() }
    }

    fn point(&mut self, x: u64, pi: u64) {
        let v = b_value(x as f64, pi as f64, self.cubic).abs();
        self.peak.offer(v, x);
        if v >= self.b {
            self.violations.push(x);
        }
    }

    pub fn report(&self, limit: u64, c: f64) -> ScanReport {
        let mut t = BTreeMap::new();
        t.insert("B".into(), self.b);
        ScanReport {
            scan: ScanKind::Bbound,
            limit,
            c,
            violations: self.violations.clone(),
            max_ratio: self.peak.value(),
            max_ratio_at: self.peak.at(),
            thresholds: t,
            passed: self.violations.is_empty(),
        }
    }
}

/// Dusart's bounds on `π(x)` wherever each one is claimed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DusartScan {
    /// Largest of `lower/π` and `π/upper` over checked points.
    pub peak: Peak,
    pub violations: Vec<u64>,
    pub checked: u64,
}

impl DusartScan {
    fn point(&mut self, x: u64, pi: u64) {
        if x < DUSART_LOWER_FROM {
            return;
        }
        self.checked += 1;
        let (lower, upper) = dusart_bounds(x as f64);
        let pif = pi as f64;
        let mut bad = pif < lower;
        self.peak.offer(lower / pif, x);
        if x >= DUSART_UPPER_FROM {
            bad |= pif > upper;
            self.peak.offer(pif / upper, x);
        }
        if bad {
            self.violations.push(x);
        }
    }

    pub fn report(&self, limit: u64, c: f64) -> ScanReport {
        let mut t = BTreeMap::new();
        t.insert("lower_from".into(), DUSART_LOWER_FROM as f64);
        t.insert("upper_from".into(), DUSART_UPPER_FROM as f64);
        t.insert("checked_points".into(), self.checked as f64);
        ScanReport {
            scan: ScanKind::Dusart,
            limit,
            c,
            violations: self.violations.clone(),
            max_ratio: self.peak.value(),
            max_ratio_at: self.peak.at(),
            thresholds: t,
            passed: self.violations.is_empty(),
        }
    }
}

/// Collects `k(x)` samples for the triple-log fit: every `stride`-th prime
/// plus the first prime past each step of `log_step` in `log x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSampler {
    pub x_min: u64,
    pub stride: u64,
    pub log_step: f64,
    pub cubic: f64,
    pub next_mark: f64,
    pub samples: Vec<FluctuationSample>,
}

impl KSampler {
    pub fn new(x_min: u64, stride: u64, log_step: f64, cubic: f64) -> Self {
        Self {
            x_min,
            stride: stride.max(1),
            log_step,
            cubic,
            next_mark: (x_min.max(16) as f64).ln(),
            samples: Vec::new(),
        }
    }

    fn visit(&mut self, pt: &GapPoint) {
        let g = pt.gap;
        if g.p < self.x_min.max(16) {
            return;
        }
        let lx = (g.p as f64).ln();
        let on_stride = g.n % self.stride == 0;
        let on_mark = lx >= self.next_mark;
        if on_mark {
            while self.next_mark <= lx {
                self.next_mark += self.log_step;
            }
        }
        if on_stride || on_mark {
            self.samples.push(FluctuationSample::new(g.p, g.n, pt.li, self.cubic));
        }
    }
}

/// Any subset of the scans, run together in one pass over the gap stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scans {
    pub constants: Constants,
    pub cg: Option<CgScan>,
    pub delta: Option<DeltaScan>,
    pub deriv: Option<DerivScan>,
    pub schoenfeld: Option<SchoenfeldScan>,
    pub bbound: Option<BBoundScan>,
    pub dusart: Option<DusartScan>,
    pub partial: Option<PartialSumScan>,
    pub sampler: Option<KSampler>,
}

impl Scans {
    pub fn new(constants: Constants) -> Self {
        Self {
            constants,
            cg: None,
            delta: None,
            deriv: None,
            schoenfeld: None,
            bbound: None,
            dusart: None,
            partial: None,
            sampler: None,
        }
    }

    pub fn enable(mut self, kind: ScanKind) -> Self {
        let k = self.constants;
        match kind {
            ScanKind::Cg => self.cg = Some(CgScan::new(k.c)),
            ScanKind::Delta => self.delta = Some(DeltaScan::new(k.c, k.fhat_cubic, false)),
            ScanKind::B | ScanKind::K => {
                if self.deriv.is_none() {
                    self.deriv = Some(DerivScan::new(k.c, k.fhat_cubic, false));
                }
            }
            ScanKind::Schoenfeld => self.schoenfeld = Some(SchoenfeldScan::new(&k)),
            ScanKind::Bbound => self.bbound = Some(BBoundScan::new(&k)),
            ScanKind::Dusart => self.dusart = Some(DusartScan::default()),
        }
        self
    }

    pub fn with_partial_sums(mut self) -> Self {
        self.partial = Some(PartialSumScan::new(None, false));
        self
    }

    pub fn with_sampler(mut self, sampler: KSampler) -> Self {
        self.sampler = Some(sampler);
        self
    }

    pub fn all(constants: Constants) -> Self {
        ScanKind::ALL.into_iter().fold(Self::new(constants), Self::enable)
    }

    pub fn enabled(&self) -> Vec<ScanKind> {
        ScanKind::ALL
            .into_iter()
            .filter(|k| match k {
                ScanKind::Cg => self.cg.is_some(),
                ScanKind::B | ScanKind::K => self.deriv.is_some(),
                ScanKind::Delta => self.delta.is_some(),
                ScanKind::Schoenfeld => self.schoenfeld.is_some(),
                ScanKind::Dusart => self.dusart.is_some(),
                ScanKind::Bbound => self.bbound.is_some(),
            })
            .collect()
    }

    fn wants_grid(&self) -> bool {
        self.schoenfeld.is_some() || self.bbound.is_some() || self.dusart.is_some()
    }

    fn grid_point(&mut self, x: u64, pi: u64, li: f64, is_prime: bool) {
        if let Some(s) = self.schoenfeld.as_mut() {
            s.point(x, pi, li, is_prime);
        }
        if let Some(s) = self.bbound.as_mut() {
            s.point(x, pi);
        }
        if let Some(s) = self.dusart.as_mut() {
            s.point(x, pi);
        }
    }

    /// One report per enabled scan kind.
    pub fn reports(&self, limit: u64) -> BTreeMap<ScanKind, ScanReport> {
        let c = self.constants.c;
        let mut out = BTreeMap::new();
        if let Some(s) = &self.cg {
            out.insert(ScanKind::Cg, s.report(limit));
        }
        if let Some(s) = &self.delta {
            out.insert(ScanKind::Delta, s.report(limit));
        }
        if let Some(s) = &self.deriv {
            for kind in [ScanKind::B, ScanKind::K] {
                out.insert(kind, s.report(kind, limit));
            }
        }
        if let Some(s) = &self.schoenfeld {
            out.insert(ScanKind::Schoenfeld, s.report(limit, c));
        }
        if let Some(s) = &self.bbound {
            out.insert(ScanKind::Bbound, s.report(limit, c));
        }
        if let Some(s) = &self.dusart {
            out.insert(ScanKind::Dusart, s.report(limit, c));
        }
        out
    }

    /// Compensated accumulators, which the serialised form leaves out.
    pub fn accumulators(&self) -> BTreeMap<String, CompensatedSum> {
        let mut m = BTreeMap::new();
        if let Some(d) = &self.delta {
            m.insert("delta.delta".to_string(), d.delta);
            m.insert("delta.logsq".to_string(), d.logsq);
        }
        if let Some(p) = &self.partial {
            m.insert("partial.logsq".to_string(), p.logsq);
        }
        m
    }

    pub fn restore_accumulators(&mut self, acc: &BTreeMap<String, CompensatedSum>) -> Result<()> {
        let get = |name: &str| {
            acc.get(name).copied().ok_or_else(|| Error::Checkpoint(format!("missing accumulator '{name}'")))
        };
        if let Some(d) = self.delta.as_mut() {
            d.delta = get("delta.delta")?;
            d.logsq = get("delta.logsq")?;
        }
        if let Some(p) = self.partial.as_mut() {
            p.logsq = get("partial.logsq")?;
        }
        Ok(())
    }
}

impl GapVisitor for Scans {
    fn visit(&mut self, pt: &GapPoint) {
        let g = pt.gap;
        if let Some(s) = self.cg.as_mut() {
            s.visit(pt);
        }
        if let Some(s) = self.delta.as_mut() {
            s.visit(pt);
        }
        if let Some(s) = self.deriv.as_mut() {
            s.visit(pt);
        }
        if let Some(s) = self.partial.as_mut() {
            s.push(&g);
        }
        if let Some(s) = self.sampler.as_mut() {
            s.visit(pt);
        }
        if self.wants_grid() {
            // p - 1 = 2 for p = 3 is already the prime point 2
            if let (Some(li), true) = (pt.li_before, g.p > 3) {
                self.grid_point(g.p - 1, g.n - 1, li, false);
            }
            self.grid_point(g.p, g.n, pt.li, true);
        }
    }

    fn finish(&mut self, end: &GapCursor) {
        let Some(last) = end.pending else { return };
        if self.wants_grid() {
            let n = end.next_n;
            if last > 3 {
                self.grid_point(last - 1, n - 1, li_unchecked((last - 1) as f64), false);
            }
            self.grid_point(last, n, li_unchecked(last as f64), true);
        }
    }
}

fn run_one(plan: &SievePlan, constants: &Constants, kind: ScanKind) -> Result<(Scans, ScanReport)> {
    kind.check_limit(plan.limit)?;
    constants.validate()?;
    let mut scans = Scans::new(*constants).enable(kind);
    stream::run(plan, &mut scans)?;
    let report = scans.reports(plan.limit).remove(&kind).expect("enabled scan reports");
    Ok((scans, report))
}

/// Run one scan kind over `plan.limit`.
pub fn run_scan(plan: &SievePlan, constants: &Constants, kind: ScanKind) -> Result<ScanReport> {
    Ok(run_one(plan, constants, kind)?.1)
}

pub fn cg_scan(plan: &SievePlan, c: f64) -> Result<ScanReport> {
    run_scan(plan, &Constants { c, ..Constants::default() }, ScanKind::Cg)
}

/// `Δ` at every prime with a successor below the limit, plus the report.
pub fn delta_scan(plan: &SievePlan, constants: &Constants) -> Result<(Vec<DeltaSample>, ScanReport)> {
    ScanKind::Delta.check_limit(plan.limit)?;
    let mut scan = DeltaScan::new(constants.c, constants.fhat_cubic, true);
    stream::run(plan, &mut VisitFn(|pt: &GapPoint| scan.visit(pt)))?;
    let report = scan.report(plan.limit);
    Ok((scan.samples.take().unwrap_or_default(), report))
}

fn deriv_records(plan: &SievePlan, constants: &Constants, kind: ScanKind) -> Result<Vec<DerivRecord>> {
    kind.check_limit(plan.limit)?;
    let mut scan = DerivScan::new(constants.c, constants.fhat_cubic, true);
    stream::run(plan, &mut VisitFn(|pt: &GapPoint| scan.visit(pt)))?;
    Ok(scan.records.take().unwrap_or_default())
}

/// Derivative records, read for the `b'` condition.
pub fn bprime_records(plan: &SievePlan, constants: &Constants) -> Result<Vec<DerivRecord>> {
    deriv_records(plan, constants, ScanKind::B)
}

/// Derivative records, read for the `k'` condition (also the Figure 1 data).
pub fn kprime_records(plan: &SievePlan, constants: &Constants) -> Result<Vec<DerivRecord>> {
    deriv_records(plan, constants, ScanKind::K)
}

pub fn schoenfeld_scan(plan: &SievePlan, constants: &Constants) -> Result<ScanReport> {
    run_scan(plan, constants, ScanKind::Schoenfeld)
}

pub fn bbound_scan(plan: &SievePlan, constants: &Constants) -> Result<ScanReport> {
    run_scan(plan, constants, ScanKind::Bbound)
}

pub fn dusart_scan(plan: &SievePlan) -> Result<ScanReport> {
    run_scan(plan, &Constants::default(), ScanKind::Dusart)
}

/// Adapts a closure into a [`GapVisitor`].
pub struct VisitFn<F>(pub F);

impl<F: FnMut(&GapPoint)> GapVisitor for VisitFn<F> {
    fn visit(&mut self, point: &GapPoint) {
        (self.0)(point)
    }
}

/// Streams `p,k_prime,rhs24` rows for plotting.
pub struct Figure1Writer<W: Write> {
    out: W,
    c: f64,
    cubic: f64,
    pub rows: u64,
    /// Rows with `p > 3` where `k' ≤ rhs24`.
    pub failures: u64,
    error: Option<std::io::Error>,
}

impl<W: Write> Figure1Writer<W> {
    pub const HEADER: &'static str = "p,k_prime,rhs24";

    pub fn new(mut out: W, constants: &Constants) -> std::io::Result<Self> {
        writeln!(out, "{}", Self::HEADER)?;
        Ok(Self { out, c: constants.c, cubic: constants.fhat_cubic, rows: 0, failures: 0, error: None })
    }

    pub fn into_inner(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> GapVisitor for Figure1Writer<W> {
    fn visit(&mut self, pt: &GapPoint) {
        if self.error.is_some() {
            return;
        }
        let r = DerivRecord::compute(pt, self.c, self.cubic);
        self.rows += 1;
        if r.p > CONDITION24_ABOVE && !r.ok24 {
            self.failures += 1;
        }
        if let Err(e) = writeln!(self.out, "{},{},{}", r.p, r.k_prime, r.rhs24) {
            self.error = Some(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::PrimeTable;

    fn plan(limit: u64) -> SievePlan {
        SievePlan::new(limit)
    }

    #[test]
    fn cg_small() {
        let r = cg_scan(&plan(100), 1.0).unwrap();
        assert_eq!(r.violations, vec![1, 2, 4]);
        assert!((r.max_ratio - 1.0 / 2f64.ln().powi(2)).abs() < 1e-12);
        assert_eq!(r.max_ratio_at, 2);
        assert!(!r.passed);
        let granville = cg_scan(&plan(1_000_000), 1.122918).unwrap();
        let one = cg_scan(&plan(1_000_000), 1.0).unwrap();
        assert!(granville.violations.iter().all(|n| one.violations.contains(n)));
        assert!(cg_scan(&plan(2), 1.0).is_err());
    }

    #[test]
    fn delta_small() {
        let k = Constants::default();
        let (samples, report) = delta_scan(&plan(100), &k).unwrap();
        assert_eq!(report.violations, vec![1, 2, 4]);
        assert_eq!(samples[0].delta, 0.0);
        assert!((samples[1].delta - (2f64.ln().powi(2) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn delta_telescopes_and_matches_cg() {
        for c in [0.7, 1.0, 1.122918] {
            let k = Constants { c, ..Constants::default() };
            let (samples, report) = delta_scan(&plan(300_000), &k).unwrap();
            let table = PrimeTable::up_to(300_000).unwrap();
            for (w, g) in samples.windows(2).zip(table.gaps()) {
                let l = (g.p as f64).ln();
                let step = l * l - g.g as f64 / c;
                let tol = 1e-9 * w[1].delta.abs().max(1.0);
                assert!((w[1].delta - w[0].delta - step).abs() <= tol, "n={}", g.n);
            }
            let cg = cg_scan(&plan(300_000), c).unwrap();
            assert_eq!(report.violations, cg.violations, "c={c}");
            assert!(report.thresholds["max_route_diff"] < 1e-12);
        }
    }

    #[test]
    fn deriv_records_small() {
        let k = Constants::default();
        let recs = kprime_records(&plan(10_000), &k).unwrap();
        let table = PrimeTable::up_to(10_000).unwrap();
        assert_eq!(recs.len() as u64, table.count_up_to(10_000).unwrap() - 1);
        for r in &recs {
            if r.p > 5 {
                assert!(r.ok19, "p={}", r.p);
            }
            if r.p > 3 {
                assert!(r.ok24, "p={}", r.p);
            }
            if r.p as f64 > (1.0 / k.c).exp() && r.k_prime >= 0.0 {
                assert!(r.ok24);
            }
        }
        // redundancy: recompute b' from two independent samples
        for r in recs.iter().step_by(97) {
            let next = table.nth(r.n + 1).unwrap();
            let a = crate::fluct::fluctuation_at(&table, r.p, &k).unwrap();
            let b = crate::fluct::fluctuation_at(&table, next, &k).unwrap();
            let bp = (b.b - a.b) / (next - r.p) as f64;
            let kp = (b.k - a.k) / (next - r.p) as f64;
            assert!((bp - r.b_prime).abs() <= 1e-12 * bp.abs().max(1e-6));
            assert!((kp - r.k_prime).abs() <= 1e-9 * kp.abs().max(1e-9));
        }
    }

    #[test]
    fn interpolation() {
        let k = Constants::default();
        let recs = bprime_records(&plan(1000), &k).unwrap();
        let f = |r: &DerivRecord| r.b_prime;
        assert_eq!(crate::fluct::interpolate_derivative(11.0, &recs, f).unwrap(), recs[4].b_prime);
        let mid = crate::fluct::interpolate_derivative(12.0, &recs, f).unwrap();
        assert!((mid - (recs[4].b_prime + recs[5].b_prime) / 2.0).abs() < 1e-15);
        assert!(crate::fluct::interpolate_derivative(1.5, &recs, f).is_err());
        let last = recs.last().unwrap().p as f64;
        assert!(crate::fluct::interpolate_derivative(last + 0.5, &recs, f).is_err());
        for w in recs.windows(2) {
            let x = w[1].p as f64;
            let left = crate::fluct::interpolate_derivative(x - 1e-9, &recs, f).unwrap();
            let at = crate::fluct::interpolate_derivative(x, &recs, f).unwrap();
            assert!((left - at).abs() < 1e-6 * at.abs().max(1e-3));
        }
    }

    #[test]
    fn schoenfeld_small() {
        let r = schoenfeld_scan(&plan(10_000), &Constants::default()).unwrap();
        assert!((r.max_ratio - 1.0 / (2f64.sqrt() * 2f64.ln())).abs() < 1e-12);
        assert_eq!(r.max_ratio_at, 2);
        assert!(r.passed);
        assert!(r.thresholds["x_star_k_all"] > 2.0);
        assert!(r.thresholds["max_f_at_primes_from_1000"] < 0.0);
    }

    #[test]
    fn grid_matches_brute_force() {
        let k = Constants::default();
        let table = PrimeTable::up_to(100).unwrap();
        let mut grid: Vec<u64> = table.primes().iter().flat_map(|&p| [p - 1, p]).filter(|&x| x >= 2).collect();
        grid.sort_unstable();
        grid.dedup();
        let mut best_b = (0.0f64, 0u64);
        let mut best_s = (0.0f64, 0u64);
        for &x in &grid {
            let s = crate::fluct::fluctuation_at(&table, x, &k).unwrap();
            if s.b.abs() > best_b.0 {
                best_b = (s.b.abs(), x);
            }
            let r = s.f.abs() / ((x as f64).sqrt() * (x as f64).ln());
            if r > best_s.0 {
                best_s = (r, x);
            }
        }
        let mut scans = Scans::new(k).enable(ScanKind::Bbound).enable(ScanKind::Schoenfeld);
        stream::run(&plan(100), &mut scans).unwrap();
        let b = scans.bbound.as_ref().unwrap().peak;
        assert_eq!((b.value(), b.at()), best_b);
        let s = scans.schoenfeld.as_ref().unwrap().peak;
        assert!((s.value() - best_s.0).abs() < 1e-15 && s.at() == best_s.1);
    }

    #[test]
    fn bbound_and_dusart_small() {
        let b = bbound_scan(&plan(100_000), &Constants::default()).unwrap();
        assert!(b.passed && b.max_ratio < 5.0 && b.max_ratio_at < 1000);
        let d = dusart_scan(&plan(400_000)).unwrap();
        assert!(d.passed, "{:?}", d.violations);
        assert!(dusart_scan(&plan(355_991)).is_err());
    }

    #[test]
    fn figure1_rows() {
        let k = Constants::default();
        let mut w = Figure1Writer::new(Vec::new(), &k).unwrap();
        stream::run(&plan(1000), &mut w).unwrap();
        assert_eq!(w.rows, 167);
        assert_eq!(w.failures, 0);
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("p,k_prime,rhs24"));
        assert_eq!(lines.count(), 167);
    }

    #[test]
    fn kind_parsing() {
        for k in ScanKind::ALL {
            assert_eq!(k.name().parse::<ScanKind>().unwrap(), k);
        }
        assert!("nope".parse::<ScanKind>().is_err());
    }
}
