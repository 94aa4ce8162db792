use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluct::Scans;
use crate::sieve::GapCursor;
use crate::stream::{self, GapPoint, GapVisitor};
use crate::sum::CompensatedSum;

use super::RunConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Scan state at a segment boundary.
///
/// The compensated accumulators are stored as `(sum, compensation)` pairs so
/// a resumed run continues with exactly the floating-point state it left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// Command that wrote the checkpoint.
    pub job: String,
    /// Last prime seen; its gap has not been processed yet.
    pub last_prime: u64,
    /// Index of `last_prime`.
    pub next_n: u64,
    pub accumulators: BTreeMap<String, CompensatedSum>,
    pub state: Scans,
}

impl Checkpoint {
    pub fn capture(job: &str, scans: &Scans, cursor: &GapCursor) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            job: job.to_string(),
            last_prime: cursor.pending.unwrap_or(0),
            next_n: cursor.next_n,
            accumulators: scans.accumulators(),
            state: scans.clone(),
        }
    }

    pub fn cursor(&self) -> GapCursor {
        if self.last_prime == 0 {
            GapCursor::default()
        } else {
            GapCursor::at(self.next_n, self.last_prime)
        }
    }

    /// Write atomically: a sibling temp file is renamed over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string(self)?;
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cp: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: version {} is not supported (expected {CHECKPOINT_VERSION})",
                path.display(),
                cp.version
            )));
        }
        Ok(cp)
    }

    /// Scans restored from this checkpoint, provided it was written by `job`
    /// with the same scan set and constants as `fresh`.
    pub fn restore(&self, job: &str, fresh: &Scans, limit: u64) -> Result<Scans> {
        if self.job != job {
            return Err(Error::Checkpoint(format!("checkpoint belongs to '{}', not '{job}'", self.job)));
        }
        if self.last_prime > limit {
            return Err(Error::Checkpoint(format!(
                "checkpoint is at prime {}, beyond the limit {limit}",
                self.last_prime
            )));
        }
        let s = &self.state;
        let same_shape = s.constants == fresh.constants
            && s.enabled() == fresh.enabled()
            && s.partial.is_some() == fresh.partial.is_some()
            && s.sampler.as_ref().map(|k| (k.x_min, k.stride, k.log_step))
                == fresh.sampler.as_ref().map(|k| (k.x_min, k.stride, k.log_step));
        if !same_shape {
            return Err(Error::Checkpoint("checkpoint was written with a different scan configuration".into()));
        }
        let mut scans = self.state.clone();
        scans.restore_accumulators(&self.accumulators)?;
        Ok(scans)
    }
}

/// Holds back `finish` so the state can be checkpointed before it.
struct Deferred<'a> {
    inner: &'a mut Scans,
    end: Option<GapCursor>,
}

impl GapVisitor for Deferred<'_> {
    fn visit(&mut self, point: &GapPoint) {
        self.inner.visit(point);
    }

    fn finish(&mut self, end: &GapCursor) {
        self.end = Some(*end);
    }
}

/// Run `scans` to `cfg.limit`, resuming and writing checkpoints as the
/// config asks. The final checkpoint holds the state before the last prime
/// is closed off, so it can be resumed to a larger limit.
pub(crate) fn run_checkpointed(cfg: &RunConfig, job: &str, fresh: Scans) -> Result<(Scans, GapCursor)> {
    let (mut scans, cursor) = match (&cfg.checkpoint_path, cfg.resume) {
        (Some(path), true) => {
            let cp = Checkpoint::load(path)?;
            (cp.restore(job, &fresh, cfg.limit)?, cp.cursor())
        }
        _ => (fresh, GapCursor::default()),
    };
    let plan = cfg.plan();
    let mut batches = 0u64;
    let mut deferred = Deferred { inner: &mut scans, end: None };
    let end = stream::drive(&plan, cursor, &mut deferred, |v, cur| {
        batches += 1;
        match &cfg.checkpoint_path {
            Some(path) if batches % cfg.checkpoint_every == 0 => Checkpoint::capture(job, v.inner, cur).save(path),
            _ => Ok(()),
        }
    })?;
    let end = deferred.end.unwrap_or(end);
    if let Some(path) = &cfg.checkpoint_path {
        Checkpoint::capture(job, &scans, &end).save(path)?;
    }
    scans.finish(&end);
    Ok((scans, end))
}
