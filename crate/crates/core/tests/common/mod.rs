//! Slow, independent reference computations shared by the test targets.
#![allow(dead_code)]

pub fn trial_division_primes(limit: u64) -> Vec<u64> {
    (2..=limit).filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)).collect()
}

/// `∫ e^s / s ds` over `[ln 2, ln x]` by adaptive Simpson.
pub fn li_quadrature(x: f64) -> f64 {
    fn f(s: f64) -> f64 {
        s.exp() / s
    }
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn refine(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        refine(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + refine(m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (a, b) = (2f64.ln(), x.ln());
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    let tol = 1e-14 * (b.exp() / b).max(1.0) * (b - a);
    refine(a, b, fa, fm, fb, whole, tol, 60)
}

/// `S2(x)` by looping over prime pairs: `(ordered, unordered)`, where the
/// unordered sum takes each `{p, q}` once (including `p = q`).
pub fn s2_pair_loop(primes: &[u64], x: u64) -> (f64, f64) {
    let (mut ordered, mut unordered) = (0.0, 0.0);
    for &p in primes {
        if 2 * p > x {
            break;
        }
        for &q in primes {
            if p * q > x {
                break;
            }
            let t = (p as f64).ln() * (q as f64).ln();
            ordered += t;
            if p <= q {
                unordered += t;
            }
        }
    }
    (ordered, unordered)
}

/// `S1(x) = Σ_{p ≤ x} log²p`, summed directly.
pub fn s1_direct(primes: &[u64], x: u64) -> f64 {
    primes.iter().take_while(|&&p| p <= x).map(|&p| (p as f64).ln().powi(2)).sum()
}
