//! Closed-form analytic kernels used by the scans.
//!
//! `li` here is the offset logarithmic integral `∫₂ˣ dt / log t`, so
//! `li(2) = 0`; every other function is a direct evaluation of its formula.

use std::f64::consts::{LN_10, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `∫₀² dt / log t` (principal value), i.e. `Ei(log 2)`.
pub const LI_OF_TWO: f64 = 1.045_163_780_117_492_8;

/// `log x` above which `li` switches from the convergent series to the
/// asymptotic expansion of `Ei`.
pub const LI_SERIES_SEAM: f64 = 40.0;

/// Tunable constants shared by every scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Cramér–Granville constant `c`.
    pub c: f64,
    /// Bound on `|b(x)|`.
    pub b: f64,
    /// Schoenfeld constant under RH, `1/(8π)`.
    pub k_rh: f64,
    /// Constant making the Schoenfeld-type bound hold at every scanned x.
    pub k_all: f64,
    /// Granville's lower bound for `c`, `2e^{-γ}`.
    pub granville_c: f64,
    /// Coefficient of `x/log³x` in the three-term expansion behind `f̂`.
    pub fhat_cubic: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c: 1.0,
            b: 5.0,
            k_rh: 1.0 / (8.0 * PI),
            k_all: 1.0 / 3.0,
            granville_c: 1.122918,
            fhat_cubic: 2.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Invalid(format!("c must be positive, got {}", self.c)));
        }
        if !(self.b > 0.0) {
            return Err(Error::Invalid(format!("B must be positive, got {}", self.b)));
        }
        if !(self.k_rh > 0.0 && self.k_rh < self.k_all) {
            return Err(Error::Invalid(format!(
                "need 0 < K_rh < K_all, got K_rh = {}, K_all = {}",
                self.k_rh, self.k_all
            )));
        }
        Ok(())
    }
}

/// `∫₂ˣ dt / log t`, relative error below 1e-12 for `2 ≤ x ≤ 2^63`.
pub fn li(x: f64) -> Result<f64> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::Domain { function: "li", value: x });
    }
    Ok(li_unchecked(x))
}

/// [`li`] without the domain check; caller guarantees `x ≥ 2`.
#[inline]
pub fn li_unchecked(x: f64) -> f64 {
    let u = x.ln();
    if u < LI_SERIES_SEAM {
        li_series(x)
    } else {
        ei_asymptotic(u) - LI_OF_TWO
    }
}

/// `Ei(log x) - Ei(log 2)` from the power series of `Ei`, written as a
/// difference series whose terms are all non-negative:
///
/// `log(u/u₀) + Σ_k (u^k - u₀^k) / (k · k!)`, `u = log x`, `u₀ = log 2`.
///
/// `D_k = (u^k - u₀^k)/k!` obeys `D_k = (u D_{k-1} + (u - u₀) u₀^{k-1}/(k-1)!) / k`,
/// so nothing cancels even right next to `x = 2`.
pub(crate) fn li_series(x: f64) -> f64 {
    let u = x.ln();
    let d = (x * 0.5).ln();
    let mut total = (d / LN_2).ln_1p();
    let mut diff = d; // D_1
    let mut base = LN_2; // u0^1 / 1!
    let mut k = 1.0;
    loop {
        let term = diff / k;
        total += term;
        if k > u && term <= total * 1e-17 {
            break;
        }
        if k > 400.0 {
            break;
        }
        k += 1.0;
        diff = (u * diff + d * base) / k;
        base *= LN_2 / k;
    }
    total
}

/// `Ei(u)` for large `u`, truncated at the smallest term.
pub(crate) fn ei_asymptotic(u: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * k / u;
        if next >= term || next < 1e-18 {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    u.exp() / u * sum
}

/// Smooth asymptotic form of `Σ_{p≤x} log²p`: `x log x - x - 2 log 2 + 2`.
pub fn smooth_s1(x: f64) -> f64 {
    x * x.ln() - x - 2.0 * LN_2 + 2.0
}

/// Smooth asymptotic form of the pair sum: `x log x - (2 + log 2) x + 4`.
pub fn smooth_s2(x: f64) -> f64 {
    x * x.ln() - (2.0 + LN_2) * x + 4.0
}

/// Dusart's bounds on `π(x)` with cubic coefficients 1.8 (lower) and 2.51 (upper).
pub fn dusart_bounds(x: f64) -> (f64, f64) {
    let l = x.ln();
    let head = x / l + x / (l * l);
    let cube = x / (l * l * l);
    (head + 1.8 * cube, head + 2.51 * cube)
}

/// Lower edge of the range where `Δ` increases when `b' = 0` and `b = -B`:
/// `exp(1/(2c) + sqrt(1/(4c²) + B))`.
pub fn monotonicity_threshold(c: f64, b: f64) -> f64 {
    let half = 1.0 / (2.0 * c);
    (half + (half * half + b).sqrt()).exp()
}

/// Right-hand side of the sufficient condition on `b'(p)`.
pub fn condition19_rhs(p: f64, c: f64) -> f64 {
    let l = p.ln();
    -(l * l / p) * (1.0 - 1.0 / (c * l))
}

/// Right-hand side of the sufficient condition on `k'(p)`.
pub fn condition24_rhs(p: f64, c: f64) -> f64 {
    let l = p.ln();
    -(1.0 / (p.sqrt() * l * l)) * (1.0 - 1.0 / (c * l))
}

/// `log₁₀ e^{e^{e^α}} = e^{e^α} / log 10`.
pub fn skewes_log10(alpha: f64) -> Result<f64> {
    let inner = alpha.exp();
    let v = inner.exp() / LN_10;
    if !v.is_finite() {
        return Err(Error::Overflow(alpha));
    }
    Ok(v)
}

/// Mean of `k'` over `(2, Sk₁)` if `k` climbs from `-1/(8π)` to 0 there.
pub fn skewes_mean_kprime(sk1: f64) -> f64 {
    1.0 / (8.0 * PI * sk1)
}
