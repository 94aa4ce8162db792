use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytic::{monotonicity_threshold, skewes_log10, smooth_s1, smooth_s2, Constants};
use crate::error::Result;
use crate::fit::FitResult;
use crate::fluct::ScanReport;
use crate::selberg::{Lemma1Summary, Pairing, Selberg, QUOTED_S1_MINUS_S2};

/// Largest `g_n / log²p_n` quoted as the greatest known value.
pub const QUOTED_MAX_CG_RATIO: f64 = 0.920_638_6;

/// The point at which the quoted `S1 - S2` figure is given.
pub const QUOTED_S1_MINUS_S2_AT: u64 = 104_729;

/// `S1 - S2` at [`QUOTED_S1_MINUS_S2_AT`] under both pairings, next to the
/// quoted figure and the smooth asymptotic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelbergComparison {
    pub x: u64,
    pub s1: f64,
    pub s2_ordered: f64,
    pub s2_unordered: f64,
    pub s1_minus_s2_ordered: f64,
    pub s1_minus_s2_unordered: f64,
    pub quoted: f64,
    pub smooth: f64,
    /// `(computed - quoted) / quoted`.
    pub relative_deviation_ordered: f64,
    pub relative_deviation_unordered: f64,
    /// Either pairing within 10⁻⁶ relative of the quoted figure.
    pub matches_quoted: bool,
}

impl SelbergComparison {
    pub fn compute(sel: &Selberg, x: u64) -> Result<Self> {
        let s1 = sel.s1(x)?;
        let s2o = sel.s2(x, Pairing::Ordered)?;
        let s2u = sel.s2(x, Pairing::Unordered)?;
        let dev = |v: f64| (v - QUOTED_S1_MINUS_S2) / QUOTED_S1_MINUS_S2;
        let (ro, ru) = (dev(s1 - s2o), dev(s1 - s2u));
        Ok(Self {
            x,
            s1,
            s2_ordered: s2o,
            s2_unordered: s2u,
            s1_minus_s2_ordered: s1 - s2o,
            s1_minus_s2_unordered: s1 - s2u,
            quoted: QUOTED_S1_MINUS_S2,
            smooth: smooth_s1(x as f64) - smooth_s2(x as f64),
            relative_deviation_ordered: ro,
            relative_deviation_unordered: ru,
            matches_quoted: ro.abs() < 1e-6 || ru.abs() < 1e-6,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Summary {
    /// Largest `N` scanned.
    pub n_max: u64,
    pub n0: u64,
    /// `Σ g_n + 2 = p_{N+1}` at the end of the scan.
    pub gap_sum_identity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CramerGranvilleSummary {
    pub c: f64,
    pub violations: Vec<u64>,
    pub max_ratio: f64,
    pub max_ratio_at: u64,
    pub tail_from_n: u64,
    pub tail_max_ratio: f64,
    pub tail_max_ratio_at: u64,
    pub quoted_max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Located {
    pub value: f64,
    pub at: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchoenfeldSummary {
    pub max_ratio: f64,
    pub max_ratio_at: u64,
    pub max_ratio_above_2657: f64,
    pub max_ratio_above_2657_at: u64,
    pub k_rh: f64,
    pub k_all: f64,
    /// Least grid point from which `k_all` holds to the limit.
    pub x_star: Option<u64>,
}

/// Everything `report` reproduces, in one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub limit: u64,
    pub constants: Constants,
    pub lemma1: Lemma1Summary,
    pub theorem2: Theorem2Summary,
    pub cramer_granville: CramerGranvilleSummary,
    pub scans: BTreeMap<String, ScanReport>,
    pub schoenfeld: Option<SchoenfeldSummary>,
    pub b_max: Option<Located>,
    pub fit: Option<FitResult>,
    /// Why `fit` is absent, when it is.
    pub fit_error: Option<String>,
    pub selberg_quoted: Option<SelbergComparison>,
    pub monotonicity_threshold: f64,
    /// `log10 Sk₁` for a few reference values of `alpha`.
    pub skewes_log10: BTreeMap<String, f64>,
    /// Named pass/fail verdicts; the report passes when all are true.
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
}

pub(crate) fn reference_skewes() -> Result<BTreeMap<String, f64>> {
    [1.3, 1.5, 2.0]
        .into_iter()
        .map(|a| Ok((format!("{a:.1}"), skewes_log10(a)?)))
        .collect()
}

pub(crate) fn threshold(constants: &Constants) -> f64 {
    monotonicity_threshold(constants.c, constants.b)
}
