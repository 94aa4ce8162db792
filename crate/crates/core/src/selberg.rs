//! Selberg sums `S1(x) = Σ_{p≤x} log²p` and `S2(x) = Σ_{pq≤x} log p log q`,
//! Chebyshev `θ`, the Lemma-style comparison `S2 < S1`, and the partial-sum
//! scan `Σ g_n < Σ log²p_n`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sieve::{nth_prime_bound, PrimeGap, PrimeTable, SievePlan};
use crate::stream::{self, GapPoint, GapVisitor};
use crate::sum::CompensatedSum;

/// `S1 - S2` at `x = 104729` as quoted alongside the 10^4-th prime.
pub const QUOTED_S1_MINUS_S2: f64 = 686_787.25;

/// Terms per block in the `S2` reduction; fixed so the result does not
/// depend on the number of threads.
const S2_BLOCK: usize = 1 << 14;

/// Whether `S2` counts `(p, q)` and `(q, p)` separately.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    #[default]
    Ordered,
    Unordered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelbergSums {
    pub x: u64,
    pub s1: f64,
    pub s2_ordered: f64,
    pub s2_unordered: f64,
    /// `(s1 + s2_ordered - 2x log x) / x`
    pub residual_per_x: f64,
}

impl SelbergSums {
    pub fn lemma1_holds(&self) -> bool {
        self.s2_ordered < self.s1
    }

    pub const CSV_HEADER: &'static str = "x,s1,s2_ordered,s2_unordered,residual_per_x,lemma1_holds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.x,
            self.s1,
            self.s2_ordered,
            self.s2_unordered,
            self.residual_per_x,
            self.lemma1_holds()
        )
    }
}

/// Prime table with prefix sums of `log p` and `log²p`.
#[derive(Clone, Debug)]
pub struct Selberg {
    table: PrimeTable,
    logs: Vec<f64>,
    theta_prefix: Vec<f64>,
    logsq_prefix: Vec<f64>,
}

impl Selberg {
    pub fn new(table: PrimeTable) -> Self {
        let logs: Vec<f64> = table.primes().iter().map(|&p| (p as f64).ln()).collect();
        let mut theta_prefix = Vec::with_capacity(logs.len() + 1);
        let mut logsq_prefix = Vec::with_capacity(logs.len() + 1);
        let mut theta = CompensatedSum::new();
        let mut logsq = CompensatedSum::new();
        theta_prefix.push(0.0);
        logsq_prefix.push(0.0);
        for &l in &logs {
            theta += l;
            logsq += l * l;
            theta_prefix.push(theta.value());
            logsq_prefix.push(logsq.value());
        }
        Self { table, logs, theta_prefix, logsq_prefix }
    }

    pub fn up_to(limit: u64) -> Result<Self> {
        Ok(Self::new(PrimeTable::up_to(limit)?))
    }

    pub fn with_plan(plan: &SievePlan) -> Result<Self> {
        Ok(Self::new(PrimeTable::build(plan)?))
    }

    pub fn table(&self) -> &PrimeTable {
        &self.table
    }

    fn index(&self, y: u64, what: &'static str) -> Result<usize> {
        if y > self.table.limit() {
            return Err(Error::Range { what, value: y, max: self.table.limit() });
        }
        Ok(self.table.primes().partition_point(|&p| p <= y))
    }

    /// Chebyshev `θ(y) = Σ_{p≤y} log p`.
    pub fn theta(&self, y: u64) -> Result<f64> {
        Ok(self.theta_prefix[self.index(y, "y")?])
    }

    /// `S1(x) = Σ_{p≤x} log²p`, accumulated in ascending prime order.
    pub fn s1(&self, x: u64) -> Result<f64> {
        Ok(self.logsq_prefix[self.index(x, "x")?])
    }

    /// `S2(x)` as `Σ_{p≤x/2} log p · θ(x/p)`.
    pub fn s2(&self, x: u64, pairing: Pairing) -> Result<f64> {
        let ordered = self.s2_ordered(x)?;
        Ok(match pairing {
            Pairing::Ordered => ordered,
            Pairing::Unordered => {
                let diagonal = self.s1(isqrt(x))?;
                (ordered - diagonal) / 2.0 + diagonal
            }
        })
    }

    fn s2_ordered(&self, x: u64) -> Result<f64> {
        if x < 4 {
            return Ok(0.0);
        }
        let half = self.index(x / 2, "x/2")?;
        let primes = self.table.primes();
        let blocks: Vec<CompensatedSum> = (0..half)
            .into_par_iter()
            .step_by(S2_BLOCK)
            .map(|start| {
                let end = (start + S2_BLOCK).min(half);
                let mut acc = CompensatedSum::new();
                // x/p shrinks as p grows, so each search can start below the last hit
                let mut hi = primes.partition_point(|&q| q <= x / primes[start]);
                for i in start..end {
                    let y = x / primes[i];
                    hi = primes[..hi].partition_point(|&q| q <= y);
                    acc += self.logs[i] * self.theta_prefix[hi];
                }
                acc
            })
            .collect();
        let mut total = CompensatedSum::new();
        for b in blocks {
            total += b.sum;
            total += b.comp;
        }
        Ok(total.value())
    }

    pub fn sums(&self, x: u64) -> Result<SelbergSums> {
        if x < 4 {
            return Err(Error::Invalid(format!("Selberg sums need x >= 4, got {x}")));
        }
        let s1 = self.s1(x)?;
        let s2_ordered = self.s2(x, Pairing::Ordered)?;
        let s2_unordered = self.s2(x, Pairing::Unordered)?;
        let xf = x as f64;
        Ok(SelbergSums {
            x,
            s1,
            s2_ordered,
            s2_unordered,
            residual_per_x: (s1 + s2_ordered - 2.0 * xf * xf.ln()) / xf,
        })
    }

    /// Selberg sums at each of `limits` (ascending, each at least 4).
    pub fn residual_scan(&self, limits: &[u64]) -> Result<Vec<SelbergSums>> {
        if limits.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invalid("scan limits must be ascending".into()));
        }
        limits.iter().map(|&x| self.sums(x)).collect()
    }

    /// `S2(x) < S1(x)` with ordered pairs.
    pub fn lemma1_check(&self, x: u64) -> Result<bool> {
        if x < 4 {
            return Err(Error::Invalid(format!("lemma check needs x >= 4, got {x}")));
        }
        Ok(self.s2(x, Pairing::Ordered)? < self.s1(x)?)
    }

    /// Incremental sweep over this table; see [`SelbergSweep`].
    pub fn sweep(&self) -> SelbergSweep<'_> {
        SelbergSweep::new(self)
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Walks `x` upward and keeps `S1(x)` and ordered `S2(x)` current by adding
/// exactly the new terms: `log²p` when `x` passes a prime and
/// `log p log q` when it passes a product `pq`.
///
/// Products are generated lazily from one chain per prime `p`
/// (`2p, 3p, 5p, ...`) on a min-heap, so memory stays `O(π(x/2))`.
/// Terms are consumed in global `(pq, p, q)` order, so the sums at a given
/// `x` do not depend on which intermediate points were queried.
pub struct SelbergSweep<'a> {
    sel: &'a Selberg,
    x: u64,
    s1: CompensatedSum,
    s2: CompensatedSum,
    next_prime: usize,
    next_chain: usize,
    heap: BinaryHeap<Reverse<(u64, u32, u32)>>,
}

impl<'a> SelbergSweep<'a> {
    fn new(sel: &'a Selberg) -> Self {
        Self {
            sel,
            x: 0,
            s1: CompensatedSum::new(),
            s2: CompensatedSum::new(),
            next_prime: 0,
            next_chain: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn s1(&self) -> f64 {
        self.s1.value()
    }

    pub fn s2(&self) -> f64 {
        self.s2.value()
    }

    /// Advance to `x` (must not decrease) and return `(S1(x), S2(x))`.
    pub fn advance_to(&mut self, x: u64) -> Result<(f64, f64)> {
        if x < self.x {
            return Err(Error::Invalid(format!("sweep cannot move back from {} to {x}", self.x)));
        }
        let limit = self.sel.table.limit();
        if x > limit {
            return Err(Error::Range { what: "x", value: x, max: limit });
        }
        let primes = self.sel.table.primes();
        let logs = &self.sel.logs;
        while self.next_prime < primes.len() && primes[self.next_prime] <= x {
            let l = logs[self.next_prime];
            self.s1 += l * l;
            self.next_prime += 1;
        }
        while self.next_chain < primes.len() && 2 * primes[self.next_chain] <= x {
            self.heap.push(Reverse((2 * primes[self.next_chain], self.next_chain as u32, 0)));
            self.next_chain += 1;
        }
        while let Some(&Reverse((prod, i, j))) = self.heap.peek() {
            if prod > x {
                break;
            }
            self.heap.pop();
            self.s2 += logs[i as usize] * logs[j as usize];
            let nj = j as usize + 1;
            if let Some(&q) = primes.get(nj) {
                if let Some(next) = primes[i as usize].checked_mul(q) {
                    self.heap.push(Reverse((next, i, nj as u32)));
                }
            }
        }
        self.x = x;
        Ok((self.s1(), self.s2()))
    }
}

/// Outcome of checking `S2 < S1` at every prime of a range plus extra points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Summary {
    pub dense_limit: u64,
    pub dense_points: u64,
    pub sparse_points: u64,
    pub holds: bool,
    pub failures: Vec<u64>,
    /// Smallest `(S1 - S2) / S1` seen at points `x ≥ 4`.
    pub min_relative_margin: f64,
}

/// Check `S2(x) < S1(x)` at every prime `4 < x ≤ dense_limit` (by sweep) and
/// at each of `sparse` (by the θ algorithm).
pub fn lemma1_survey(sel: &Selberg, dense_limit: u64, sparse: &[u64]) -> Result<Lemma1Summary> {
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut note = |x: u64, s1: f64, s2: f64, failures: &mut Vec<u64>| {
        if !(s2 < s1) {
            failures.push(x);
        }
        min_margin = min_margin.min((s1 - s2) / s1);
    };
    let mut sweep = sel.sweep();
    let mut dense_points = 0;
    for &p in sel.table.primes() {
        if p > dense_limit {
            break;
        }
        if p < 4 {
            continue;
        }
        let (s1, s2) = sweep.advance_to(p)?;
        note(p, s1, s2, &mut failures);
        dense_points += 1;
    }
    for &x in sparse {
        let s1 = sel.s1(x)?;
        let s2 = sel.s2(x, Pairing::Ordered)?;
        note(x, s1, s2, &mut failures);
    }
    failures.sort_unstable();
    failures.dedup();
    Ok(Lemma1Summary {
        dense_limit,
        dense_points,
        sparse_points: sparse.len() as u64,
        holds: failures.is_empty(),
        failures,
        min_relative_margin: min_margin,
    })
}

/// `count` integer points spaced evenly in `log x` over `[lo, hi]`, deduplicated.
pub fn log_spaced(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if count == 0 || hi < lo {
        return Vec::new();
    }
    if count == 1 || hi == lo {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            ((a + (b - a) * t).exp().round() as u64).clamp(lo, hi)
        })
        .collect();
    out[count - 1] = hi;
    out.dedup();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialSumRecord {
    pub n: u64,
    pub gap_sum: u64,
    pub logsq_sum: f64,
    pub holds: bool,
}

/// Streaming scan of `Σ_{n≤N} g_n < Σ_{n≤N} log²p_n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialSumScan {
    pub n_max: Option<u64>,
    #[serde(skip)]
    pub logsq: CompensatedSum,
    pub gap_sum: u64,
    pub last_n: u64,
    pub last_failure: Option<u64>,
    #[serde(skip)]
    pub records: Option<Vec<PartialSumRecord>>,
}

impl PartialSumScan {
    pub fn new(n_max: Option<u64>, keep_records: bool) -> Self {
        Self { n_max, records: keep_records.then(Vec::new), ..Default::default() }
    }

    pub fn push(&mut self, gap: &PrimeGap) {
        if self.n_max.is_some_and(|m| gap.n > m) {
            return;
        }
        let l = (gap.p as f64).ln();
        self.logsq += l * l;
        self.gap_sum += gap.g;
        self.last_n = gap.n;
        let logsq_sum = self.logsq.value();
        let holds = (self.gap_sum as f64) < logsq_sum;
        if !holds {
            self.last_failure = Some(gap.n);
        }
        if let Some(r) = self.records.as_mut() {
            r.push(PartialSumRecord { n: gap.n, gap_sum: self.gap_sum, logsq_sum, holds });
        }
    }

    /// Smallest `N0` with the inequality holding on `[N0, last N]`.
    pub fn n0(&self) -> u64 {
        self.last_failure.map_or(1, |n| n + 1)
    }
}

impl GapVisitor for PartialSumScan {
    fn visit(&mut self, point: &GapPoint) {
        self.push(&point.gap);
    }
}

/// Partial-sum records for `N ≤ n_max` and the empirical `N0`.
pub fn theorem2_scan(n_max: u64) -> Result<(Vec<PartialSumRecord>, u64)> {
    if n_max < 2 {
        return Err(Error::Invalid(format!("N_max must be at least 2, got {n_max}")));
    }
    let table = PrimeTable::up_to(nth_prime_bound(n_max + 1))?;
    let mut scan = PartialSumScan::new(Some(n_max), true);
    for g in table.gaps().take(n_max as usize) {
        scan.push(&g);
    }
    let n0 = scan.n0();
    Ok((scan.records.unwrap_or_default(), n0))
}

/// Streaming form of [`theorem2_scan`] over every gap below `plan.limit`.
pub fn partial_sum_scan(plan: &SievePlan) -> Result<PartialSumScan> {
    let mut scan = PartialSumScan::new(None, false);
    stream::run(plan, &mut scan)?;
    Ok(scan)
}
