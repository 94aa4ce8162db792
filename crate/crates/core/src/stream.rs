//! The gap stream enriched with `Li` values, and the visitor driver.
//!
//! Segments come off the sieve in order; each batch of gap records is
//! enriched with `Li(p-1)`, `Li(p)` and `Li(p+g)` on the worker pool (pure,
//! per-record work) and then handed to every visitor sequentially. Visitor
//! state therefore depends only on the record sequence, never on the worker
//! count or segment size.

use rayon::prelude::*;

use crate::analytic::li_unchecked;
use crate::error::Result;
use crate::sieve::{stream_gaps_in, GapCursor, PrimeGap, SievePlan};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapPoint {
    pub gap: PrimeGap,
    /// `Li(p - 1)`; absent for `p = 2`.
    pub li_before: Option<f64>,
    pub li: f64,
    /// `Li(p + g)`.
    pub li_next: f64,
}

impl GapPoint {
    pub fn new(gap: PrimeGap) -> Self {
        let p = gap.p as f64;
        Self {
            gap,
            li_before: (gap.p >= 3).then(|| li_unchecked(p - 1.0)),
            li: li_unchecked(p),
            li_next: li_unchecked((gap.p + gap.g) as f64),
        }
    }
}

pub trait GapVisitor {
    fn visit(&mut self, point: &GapPoint);

    /// Called once after the last record. `end` holds the last prime of the
    /// range (as `pending`) and its index (`next_n`).
    fn finish(&mut self, _end: &GapCursor) {}
}

impl<V: GapVisitor + ?Sized> GapVisitor for &mut V {
    fn visit(&mut self, point: &GapPoint) {
        (**self).visit(point)
    }

    fn finish(&mut self, end: &GapCursor) {
        (**self).finish(end)
    }
}

/// Run `visitor` over the gap stream of `plan`, starting at `cursor`.
///
/// `on_batch` sees the visitor and the cursor after every segment, which is
/// a consistent point for checkpointing. The visitor's `finish` is called
/// after the final batch.
pub fn drive<V, B>(plan: &SievePlan, cursor: GapCursor, visitor: &mut V, mut on_batch: B) -> Result<GapCursor>
where
    V: GapVisitor + ?Sized,
    B: FnMut(&V, &GapCursor) -> Result<()>,
{
    plan.validate()?;
    let pool = plan.pool()?;
    let mut points = Vec::new();
    let end = stream_gaps_in(&pool, plan, cursor, |batch, cur| {
        pool.install(|| batch.par_iter().map(|g| GapPoint::new(*g)).collect_into_vec(&mut points));
        for pt in &points {
            visitor.visit(pt);
        }
        on_batch(visitor, cur)
    })?;
    visitor.finish(&end);
    Ok(end)
}

/// [`drive`] from the start of the stream without batch callbacks.
pub fn run<V: GapVisitor + ?Sized>(plan: &SievePlan, visitor: &mut V) -> Result<GapCursor> {
    drive(plan, GapCursor::default(), visitor, |_, _| Ok(()))
}
