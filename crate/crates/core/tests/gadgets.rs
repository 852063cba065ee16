use medz_core::cnf::{random_d3, Cnf3, Literal};
use medz_core::gadget::{build_sharp_gadget, build_threshold_gadget, verify_separation, Variant};
use medz_core::median::{ambiguous_coordinates, is_median};
use medz_core::partition::{count_medians_within_threshold, Direction, WeightFunction};
use medz_core::pipeline::{count_sat, prime_report, select_primes, PrimeMode, DEFAULT_MAX_SCAN_BITS};
use medz_core::{BitString, Count};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute(n: usize, clauses: &[[Literal; 3]]) -> u64 {
    (0u64..1 << n).filter(|&a| clauses.iter().all(|c| c.iter().any(|l| l.holds(a)))).count() as u64
}

#[test]
fn pipeline_counts_random_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..40 {
        let (n, k) = (rng.gen_range(3..=5), rng.gen_range(1..=3));
        let f = random_d3(&mut rng, n, k);
        let want = brute(n, f.clauses());
        let got = count_sat(&f.to_cnf(), PrimeMode::Practical, DEFAULT_MAX_SCAN_BITS).unwrap();
        assert_eq!(got.gamma, Count::from(want));
        let core = want >> got.free_vars;
        for r in &got.primes {
            assert_eq!(r.t_mod_p, r.k_mod_p * (core % r.p) % r.p, "p={}", r.p);
        }
    }
}

#[test]
fn pipeline_handles_repeated_and_tautological_clauses() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..40 {
        let n = rng.gen_range(3..=6);
        let k = rng.gen_range(0..=4);
        let clauses: Vec<[Literal; 3]> = (0..k)
            .map(|_| [(); 3].map(|_| Literal { var: rng.gen_range(1..=n), negated: rng.gen() }))
            .collect();
        let want = brute(n, &clauses);
        let got = count_sat(&Cnf3 { n, clauses }, PrimeMode::Practical, DEFAULT_MAX_SCAN_BITS).unwrap();
        assert_eq!(got.gamma, Count::from(want));
    }
}

#[test]
fn theoretical_primes_agree_on_one_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_d3(&mut rng, 3, 2);
    let plan = select_primes(3, PrimeMode::Theoretical).unwrap();
    let want = brute(3, f.clauses());
    for &p in plan.primes.iter().take(3) {
        let r = prime_report(&f, p, DEFAULT_MAX_SCAN_BITS).unwrap();
        assert_eq!(r.gamma_mod_p, want % p);
    }
}

/// Every pair coordinate is balanced, every extra holds exactly one 1, so the
/// medians are all pair patterns with zero extras.
#[test]
fn counting_gadget_medians_are_the_pair_cube() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 3..=4 {
        for k in 1..=2 {
            let f = random_d3(&mut rng, n, k);
            for p in select_primes(n, PrimeMode::Practical).unwrap().primes {
                let g = build_sharp_gadget(&f, p).unwrap();
                let b = g.multiset().unwrap();
                let m = b.len();
                let cols = b.column_ones();
                let layout = b.layout();
                assert_eq!(layout.len(), 2 * n + g.t);
                assert!(cols[..2 * n].iter().all(|&c| 2 * c == m));
                assert!(cols[2 * n..].iter().all(|&c| c == 1 && 2 * c < m));
                assert_eq!(ambiguous_coordinates(&b), (0..2 * n).collect::<Vec<_>>());
                for mask in [0u64, 1, (1 << (2 * n)) - 1, rng.gen_range(0..1 << (2 * n))] {
                    let bits: Vec<bool> = (0..layout.len()).map(|i| i < 2 * n && mask >> i & 1 == 1).collect();
                    assert!(is_median(&b, &BitString::from_bits(layout, &bits).unwrap()).unwrap());
                }
                let mut off = BitString::zeros(layout);
                off.set(2 * n, true);
                assert!(!is_median(&b, &off).unwrap());
            }
        }
    }
}

#[test]
fn threshold_gadget_separates_and_counts() {
    let w = WeightFunction::Factorial;
    for n in 3..=6 {
        for k in 1..=3 {
            assert!(verify_separation(&w, n, k, Variant::Up).unwrap().separated(), "n={n} k={k}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 3..=4 {
        for k in 1..=3 {
            let f = random_d3(&mut rng, n, k);
            let (g, report) = build_threshold_gadget(&f, Variant::Up, &w).unwrap();
            let b = g.multiset().unwrap();
            let got = count_medians_within_threshold(&b, &w, &report.h[3], Direction::AtMost).unwrap();
            assert_eq!(got, Count::from(brute(n, f.clauses())), "n={n} k={k}");
        }
    }
}
