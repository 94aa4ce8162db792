//! Segmented, bit-packed sieve of Eratosthenes over the odd integers.
//!
//! Segments are sieved independently (optionally on a rayon pool) and are
//! always released to the consumer in ascending order, so every downstream
//! accumulation sees the same sequence no matter how many workers ran.

use std::io::Write;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted sieve limit.
pub const MAX_LIMIT: u64 = 1 << 63;
pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 20;
pub const MIN_SEGMENT_SIZE: u64 = 64;
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

/// One entry of the gap stream: `p` is the `n`-th prime and `p + g` the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeGap {
    pub n: u64,
    pub p: u64,
    pub g: u64,
}

impl PrimeGap {
    #[inline]
    pub fn next_prime(&self) -> u64 {
        self.p + self.g
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SievePlan {
    pub limit: u64,
    /// Integers covered by one segment (rounded up to a multiple of 128).
    pub segment_size: u64,
    pub workers: usize,
    /// Upper bound on bytes a materialised prime table may use.
    pub memory_budget: u64,
}

impl SievePlan {
    pub fn new(limit: u64) -> Self {
        Self {
            limit,
            segment_size: DEFAULT_SEGMENT_SIZE,
            workers: default_workers(),
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_segment_size(mut self, segment_size: u64) -> Self {
        self.segment_size = segment_size;
        self
    }

    pub fn with_memory_budget(mut self, bytes: u64) -> Self {
        self.memory_budget = bytes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.limit < 2 {
            return Err(Error::Invalid(format!("sieve limit must be at least 2, got {}", self.limit)));
        }
        if self.limit > MAX_LIMIT {
            return Err(Error::Invalid(format!("sieve limit {} exceeds 2^63", self.limit)));
        }
        if self.segment_size < MIN_SEGMENT_SIZE {
            return Err(Error::Invalid(format!(
                "segment size must be at least {MIN_SEGMENT_SIZE}, got {}",
                self.segment_size
            )));
        }
        if self.workers == 0 {
            return Err(Error::Invalid("worker count must be at least 1".into()));
        }
        Ok(())
    }

    fn span(&self) -> u64 {
        self.segment_size.div_ceil(128) * 128
    }

    pub(crate) fn pool(&self) -> Result<ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot start {} workers: {e}", self.workers)))
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Rough upper bound on the bytes needed to hold every prime up to `x` as `u64`.
pub fn table_bytes_estimate(x: u64) -> u64 {
    if x < 100 {
        return 8 * 25;
    }
    let xf = x as f64;
    let lx = xf.ln();
    // pi(x) < x/log x * (1 + 1.2762/log x) for x > 1
    let count = xf / lx * (1.0 + 1.2762 / lx);
    (count * 8.0).ceil() as u64
}

fn check_budget(plan: &SievePlan) -> Result<()> {
    let needed = table_bytes_estimate(plan.limit);
    if needed > plan.memory_budget {
        return Err(Error::Resource { limit: plan.limit, needed, budget: plan.memory_budget });
    }
    Ok(())
}

/// Odd primes up to and including `n`, by a plain odd-only sieve.
fn base_primes(n: u64) -> Vec<u64> {
    if n < 3 {
        return Vec::new();
    }
    let bits = ((n - 1) / 2) as usize; // index i <-> 2i + 1, i in 1..=bits
    let mut composite = vec![false; bits + 1];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) <= 2 * bits + 1 {
        if !composite[i] {
            let q = 2 * i + 1;
            let mut j = (q * q - 1) / 2;
            while j <= bits {
                composite[j] = true;
                j += q;
            }
        }
        i += 1;
    }
    (1..=bits).filter(|&i| !composite[i]).map(|i| 2 * i as u64 + 1).collect()
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

/// Primes in `[lo, hi)`, given every odd prime up to `sqrt(hi)`.
fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    if hi <= lo {
        return out;
    }
    if lo <= 2 && 2 < hi {
        out.push(2);
    }
    let start = lo.max(3) | 1;
    if start >= hi {
        return out;
    }
    let bits = (hi - start).div_ceil(2);
    let mut words = vec![0u64; bits.div_ceil(64) as usize];
    for &q in base {
        let sq = q * q;
        if sq >= hi {
            break;
        }
        let mut first = if sq >= start { sq } else { start.div_ceil(q) * q };
        if first % 2 == 0 {
            first += q;
        }
        let mut idx = (first - start) / 2;
        while idx < bits {
            words[(idx / 64) as usize] |= 1 << (idx % 64);
            idx += q;
        }
    }
    for (w, &word) in words.iter().enumerate() {
        let mut free = !word;
        while free != 0 {
            let bit = free.trailing_zeros() as u64;
            free &= free - 1;
            let idx = w as u64 * 64 + bit;
            if idx >= bits {
                break;
            }
            out.push(start + 2 * idx);
        }
    }
    out
}

/// Position in the gap stream: the next record has index `next_n` and
/// starts at the prime `pending` (unknown before the first prime is seen).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapCursor {
    pub next_n: u64,
    pub pending: Option<u64>,
}

impl Default for GapCursor {
    fn default() -> Self {
        Self { next_n: 1, pending: None }
    }
}

impl GapCursor {
    /// Cursor positioned at the `n`-th prime `p`.
    pub fn at(n: u64, p: u64) -> Self {
        Self { next_n: n, pending: Some(p) }
    }

    fn sieve_from(&self) -> u64 {
        self.pending.map_or(0, |p| p + 1)
    }
}

/// Feed ascending prime segments `[from, plan.limit]` to `sink`, in order.
pub fn for_each_segment<F>(plan: &SievePlan, from: u64, sink: F) -> Result<()>
where
    F: FnMut(Vec<u64>) -> Result<()>,
{
    plan.validate()?;
    segments_in(&plan.pool()?, plan, from, sink)
}

pub(crate) fn segments_in<F>(pool: &ThreadPool, plan: &SievePlan, from: u64, mut sink: F) -> Result<()>
where
    F: FnMut(Vec<u64>) -> Result<()>,
{
    plan.validate()?;
    let limit = plan.limit;
    if from > limit {
        return Ok(());
    }
    let base = base_primes(isqrt(limit));
    let span = plan.span();
    let end = limit + 1;
    let segments = (end - from).div_ceil(span);
    let batch = (plan.workers as u64 * 4).max(1);

    let mut k = 0;
    while k < segments {
        let upto = (k + batch).min(segments);
        let sieved: Vec<Vec<u64>> = pool.install(|| {
            (k..upto)
                .into_par_iter()
                .map(|s| {
                    let lo = from + s * span;
                    let hi = (lo + span).min(end);
                    sieve_segment(lo, hi, &base)
                })
                .collect()
        });
        for primes in sieved {
            sink(primes)?;
        }
        k = upto;
    }
    Ok(())
}

/// Stream [`PrimeGap`] records for every prime whose successor is at most
/// `plan.limit`. `sink` receives one batch per segment together with the
/// cursor reached after it; batches may be empty.
pub fn stream_gaps<F>(plan: &SievePlan, cursor: GapCursor, sink: F) -> Result<GapCursor>
where
    F: FnMut(&[PrimeGap], &GapCursor) -> Result<()>,
{
    plan.validate()?;
    stream_gaps_in(&plan.pool()?, plan, cursor, sink)
}

pub(crate) fn stream_gaps_in<F>(
    pool: &ThreadPool,
    plan: &SievePlan,
    cursor: GapCursor,
    mut sink: F,
) -> Result<GapCursor>
where
    F: FnMut(&[PrimeGap], &GapCursor) -> Result<()>,
{
    let mut cur = cursor;
    let mut batch = Vec::new();
    segments_in(pool, plan, cur.sieve_from(), |primes| {
        batch.clear();
        for q in primes {
            if let Some(p) = cur.pending {
                batch.push(PrimeGap { n: cur.next_n, p, g: q - p });
                cur.next_n += 1;
            }
            cur.pending = Some(q);
        }
        sink(&batch, &cur)
    })?;
    Ok(cur)
}

/// Collect the whole gap stream for `plan`.
pub fn gap_stream(plan: &SievePlan) -> Result<Vec<PrimeGap>> {
    check_budget(plan)?;
    let mut out = Vec::new();
    stream_gaps(plan, GapCursor::default(), |batch, _| {
        out.extend_from_slice(batch);
        Ok(())
    })?;
    Ok(out)
}

/// Write the gap stream as ASCII `n,p,g` lines.
pub fn write_gap_csv<W: Write>(plan: &SievePlan, mut out: W) -> Result<()> {
    let io = |e| Error::io("<gap stream>", e);
    stream_gaps(plan, GapCursor::default(), |batch, _| {
        for r in batch {
            writeln!(out, "{},{},{}", r.n, r.p, r.g).map_err(io)?;
        }
        Ok(())
    })?;
    out.flush().map_err(io)
}

/// Every prime up to a fixed limit, held in memory for random access.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn build(plan: &SievePlan) -> Result<Self> {
        plan.validate()?;
        check_budget(plan)?;
        let mut primes = Vec::new();
        for_each_segment(plan, 0, |seg| {
            primes.extend_from_slice(&seg);
            Ok(())
        })?;
        Ok(Self { limit: plan.limit, primes })
    }

    pub fn up_to(limit: u64) -> Result<Self> {
        Self::build(&SievePlan::new(limit.max(2)))
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// pi(x) for `x <= limit`.
    pub fn count_up_to(&self, x: u64) -> Result<u64> {
        if x > self.limit {
            return Err(Error::Range { what: "x", value: x, max: self.limit });
        }
        Ok(self.primes.partition_point(|&p| p <= x) as u64)
    }

    /// The `n`-th prime, 1-based.
    pub fn nth(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::Invalid("prime index is 1-based".into()));
        }
        self.primes
            .get(n as usize - 1)
            .copied()
            .ok_or(Error::Range { what: "n", value: n, max: self.primes.len() as u64 })
    }

    /// Gap records for consecutive primes in the table.
    pub fn gaps(&self) -> impl Iterator<Item = PrimeGap> + '_ {
        self.primes
            .windows(2)
            .enumerate()
            .map(|(i, w)| PrimeGap { n: i as u64 + 1, p: w[0], g: w[1] - w[0] })
    }
}

pub fn primes_up_to(x: u64) -> Result<Vec<u64>> {
    primes_up_to_with(&SievePlan::new(x.max(2)), x)
}

/// As [`primes_up_to`], with an explicit plan for workers and memory budget.
pub fn primes_up_to_with(plan: &SievePlan, x: u64) -> Result<Vec<u64>> {
    if x < 2 {
        return Ok(Vec::new());
    }
    let plan = SievePlan { limit: x, ..plan.clone() };
    Ok(PrimeTable::build(&plan)?.primes)
}

pub fn prime_count(x: u64) -> Result<u64> {
    if x < 2 {
        return Ok(0);
    }
    let plan = SievePlan::new(x);
    let mut count = 0u64;
    for_each_segment(&plan, 0, |seg| {
        count += seg.len() as u64;
        Ok(())
    })?;
    Ok(count)
}

/// Upper bound for the `n`-th prime (Rosser: n(log n + log log n) for n >= 6).
pub fn nth_prime_bound(n: u64) -> u64 {
    if n < 6 {
        return 13;
    }
    let nf = n as f64;
    (nf * (nf.ln() + nf.ln().ln())).ceil() as u64 + 1
}

pub fn nth_prime(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Invalid("prime index is 1-based".into()));
    }
    PrimeTable::up_to(nth_prime_bound(n))?.nth(n)
}
