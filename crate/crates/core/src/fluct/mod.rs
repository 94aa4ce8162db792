//! Fluctuation functions of `π(x)` and the per-prime condition scans.
//!
//! With `f = π - Li` and `f̂ = π - x/log x - x/log²x - a·x/log³x` (`a` is
//! [`Constants::fhat_cubic`], 2 by default):
//!
//! * `b(x) = f̂(x) · log³x / x`
//! * `k(x) = f(x) / (√x · log x)`
//!
//! `Δ(p)` is the running sum `Σ_{q<p} (log²q - g(q)/c)` over primes.

mod scans;

pub use scans::*;

use serde::{Deserialize, Serialize};

use crate::analytic::{li_unchecked, Constants};
use crate::error::{Error, Result};
use crate::sieve::PrimeTable;

/// `f̂(x)` for a known `π(x)`.
#[inline]
pub fn fhat(x: f64, pi: f64, cubic: f64) -> f64 {
    let l = x.ln();
    let l2 = l * l;
    pi - x / l - x / l2 - cubic * x / (l2 * l)
}

#[inline]
pub fn b_value(x: f64, pi: f64, cubic: f64) -> f64 {
    let l = x.ln();
    fhat(x, pi, cubic) * l * l * l / x
}

#[inline]
pub fn k_value(x: f64, pi: f64, li: f64) -> f64 {
    (pi - li) / (x.sqrt() * x.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSample {
    pub x: u64,
    pub pi: u64,
    pub li: f64,
    pub f: f64,
    pub fhat: f64,
    pub b: f64,
    pub k: f64,
}

impl FluctuationSample {
    pub fn new(x: u64, pi: u64, li: f64, cubic: f64) -> Self {
        let xf = x as f64;
        let pif = pi as f64;
        let fh = fhat(xf, pif, cubic);
        let l = xf.ln();
        Self {
            x,
            pi,
            li,
            f: pif - li,
            fhat: fh,
            b: fh * l * l * l / xf,
            k: k_value(xf, pif, li),
        }
    }

    /// Evaluate at `x ≥ 2` with `π(x)` given.
    pub fn at(x: u64, pi: u64, constants: &Constants) -> Result<Self> {
        if x < 2 {
            return Err(Error::Domain { function: "fluctuation", value: x as f64 });
        }
        Ok(Self::new(x, pi, li_unchecked(x as f64), constants.fhat_cubic))
    }
}

/// All fluctuation quantities at `x`, with `π(x)` taken from `table`.
pub fn fluctuation_at(table: &PrimeTable, x: u64, constants: &Constants) -> Result<FluctuationSample> {
    let pi = table.count_up_to(x)?;
    FluctuationSample::at(x, pi, constants)
}

/// Piecewise-linear interpolation of a prime-anchored derivative.
///
/// `records` must be ascending in `p`; `value` picks the anchored quantity
/// (`b_prime` or `k_prime`).
pub fn interpolate_derivative<F>(x: f64, records: &[DerivRecord], value: F) -> Result<f64>
where
    F: Fn(&DerivRecord) -> f64,
{
    let (first, last) = match (records.first(), records.last()) {
        (Some(a), Some(b)) => (a.p as f64, b.p as f64),
        _ => return Err(Error::InsufficientData("no derivative records".into())),
    };
    if !(x >= first && x <= last) {
        return Err(Error::Range { what: "x", value: x as u64, max: last as u64 });
    }
    let i = records.partition_point(|r| (r.p as f64) <= x);
    let lo = &records[i - 1];
    if i == records.len() || lo.p as f64 == x {
        return Ok(value(lo));
    }
    let hi = &records[i];
    let t = (x - lo.p as f64) / (hi.p - lo.p) as f64;
    Ok(value(lo) + t * (value(hi) - value(lo)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_at_two() {
        let s = FluctuationSample::at(2, 1, &Constants::default()).unwrap();
        assert_eq!(s.li, 0.0);
        assert_eq!(s.f, 1.0);
        assert!((s.k - 1.0 / (2f64.sqrt() * 2f64.ln())).abs() < 1e-15);
        assert!(s.b.is_finite());
        assert!(FluctuationSample::at(1, 0, &Constants::default()).is_err());
    }

    #[test]
    fn sample_at_million() {
        let table = PrimeTable::up_to(1_000_000).unwrap();
        let s = fluctuation_at(&table, 1_000_000, &Constants::default()).unwrap();
        assert_eq!(s.pi, 78_498);
        // mpmath with π(10^6) = 78498 and Li(10^6) = li(10^6) - li(2)
        assert!((s.f + 128.503_995_682_064).abs() < 1e-8);
        assert!((s.fhat - 117.918_661_778_457).abs() < 1e-8);
        assert!((s.b - 0.310_944_843_471_267).abs() < 1e-12);
        assert!((s.k + 0.009_301_429_371_206_65).abs() < 1e-14);
        assert!(fluctuation_at(&table, 1_000_001, &Constants::default()).is_err());
    }

    #[test]
    fn k_sign_follows_f() {
        let table = PrimeTable::up_to(5_000).unwrap();
        let k = Constants::default();
        for x in 2..=5_000 {
            let s = fluctuation_at(&table, x, &k).unwrap();
            assert_eq!(s.k.signum(), s.f.signum(), "x={x}");
        }
    }
}
