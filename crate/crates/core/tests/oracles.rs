use primegap::analytic::{condition24_rhs, li, Constants};
use primegap::fluct::{cg_scan, delta_scan, kprime_records};
use primegap::selberg::{Pairing, Selberg};
use primegap::sieve::{gap_stream, primes_up_to, PrimeTable, SievePlan};
use proptest::prelude::*;

mod common;
use common::{li_quadrature, s2_pair_loop, trial_division_primes};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn li_matches_quadrature(log_x in 2f64.ln()..(1e8f64).ln()) {
        let x = log_x.exp();
        let fast = li(x).unwrap();
        let slow = li_quadrature(x);
        prop_assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1.0), "x={x} fast={fast} slow={slow}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sieve_matches_trial_division(limit in 2u64..30_000, seg in 64u64..5_000, workers in 1usize..6) {
        let plan = SievePlan::new(limit).with_segment_size(seg).with_workers(workers);
        let table = PrimeTable::build(&plan).unwrap();
        prop_assert_eq!(table.primes(), &trial_division_primes(limit)[..]);
    }

    #[test]
    fn gap_stream_invariants(limit in 3u64..200_000, seg in 64u64..20_000, workers in 1usize..6) {
        let plan = SievePlan::new(limit).with_segment_size(seg).with_workers(workers);
        let gaps = gap_stream(&plan).unwrap();
        let primes = primes_up_to(limit).unwrap();
        prop_assert_eq!(gaps.len() + 1, primes.len());
        for (i, g) in gaps.iter().enumerate() {
            prop_assert_eq!(g.n, i as u64 + 1);
            prop_assert_eq!(g.p, primes[i]);
            prop_assert_eq!(g.next_prime(), primes[i + 1]);
            prop_assert!(g.n == 1 || g.g % 2 == 0);
        }
        let total: u64 = gaps.iter().map(|g| g.g).sum();
        prop_assert_eq!(total + 2, *primes.last().unwrap());
    }
}

#[test]
fn sieve_to_1e5_matches_trial_division() {
    assert_eq!(primes_up_to(100_000).unwrap(), trial_division_primes(100_000));
}

#[test]
fn s2_matches_pair_loop_everywhere_below_1e4() {
    let sel = Selberg::up_to(10_000).unwrap();
    let primes = sel.table().primes().to_vec();
    for x in 2..=10_000u64 {
        let (ordered, unordered) = s2_pair_loop(&primes, x);
        let o = sel.s2(x, Pairing::Ordered).unwrap();
        let u = sel.s2(x, Pairing::Unordered).unwrap();
        assert!((o - ordered).abs() <= 1e-8 * ordered.max(1.0), "x={x}");
        assert!((u - unordered).abs() <= 1e-8 * unordered.max(1.0), "x={x}");
    }
}

#[test]
fn delta_telescopes_and_matches_cg() {
    let plan = SievePlan::new(1_000_000);
    for c in [0.7, 1.0, 1.122918, 2.0] {
        let k = Constants { c, ..Constants::default() };
        let (samples, report) = delta_scan(&plan, &k).unwrap();
        for w in samples.windows(2) {
            let l = (w[0].p as f64).ln();
            let step = l * l - (w[1].p - w[0].p) as f64 / c;
            let d = w[1].delta - w[0].delta;
            assert!((d - step).abs() <= 1e-9 * w[1].delta.abs().max(1.0), "c={c} n={}", w[0].n);
        }
        assert_eq!(report.violations, cg_scan(&plan, c).unwrap().violations, "c={c}");
    }
}

#[test]
fn derivative_records_are_thread_independent() {
    let k = Constants::default();
    let one = kprime_records(&SievePlan::new(300_000).with_workers(1), &k).unwrap();
    let many = kprime_records(&SievePlan::new(300_000).with_workers(8).with_segment_size(1 << 12), &k).unwrap();
    assert_eq!(one.len(), many.len());
    assert!(one.iter().zip(&many).all(|(a, b)| {
        a.k_prime.to_bits() == b.k_prime.to_bits() && a.b_prime.to_bits() == b.b_prime.to_bits() && a == b
    }));
}

#[test]
fn nonnegative_kprime_implies_condition24() {
    let k = Constants::default();
    let cut = (1.0 / k.c).exp();
    for r in kprime_records(&SievePlan::new(200_000), &k).unwrap() {
        if r.p as f64 > cut && r.k_prime >= 0.0 {
            assert!(r.ok24, "p={}", r.p);
        }
        if r.p as f64 > cut {
            assert!(condition24_rhs(r.p as f64, k.c) < 0.0);
        }
    }
}
