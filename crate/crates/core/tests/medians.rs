use medz_core::median::{enumerate_medians, is_median, majority_median};
use medz_core::partition::{partition_function, WeightFunction};
use medz_core::{BitString, Count, Layout, StringMultiset};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn brute_force_medians(b: &StringMultiset) -> BTreeSet<String> {
    let len = b.layout().len();
    let mut best = usize::MAX;
    let mut out = BTreeSet::new();
    for mask in 0u32..1 << len {
        let bits: Vec<bool> = (0..len).map(|i| mask >> i & 1 == 1).collect();
        let mu = BitString::from_bits(b.layout(), &bits).unwrap();
        let cost = b.total_distance(&mu).unwrap();
        if cost < best {
            best = cost;
            out.clear();
        }
        if cost == best {
            out.insert(mu.to_string());
        }
    }
    out
}

fn multiset(len: usize, rows: &[u32]) -> StringMultiset {
    let layout = Layout::new(0, len);
    let members = rows
        .iter()
        .map(|r| BitString::from_bits(layout, &(0..len).map(|i| r >> i & 1 == 1).collect::<Vec<_>>()).unwrap())
        .collect();
    StringMultiset::new(layout, members).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn medians_match_exhaustive_search(len in 1usize..=12, rows in prop::collection::vec(any::<u32>(), 1..7)) {
        let b = multiset(len, &rows);
        let got: BTreeSet<String> = enumerate_medians(&b).unwrap().map(|m| m.to_string()).collect();
        let want = brute_force_medians(&b);
        prop_assert_eq!(&got, &want);
        prop_assert!(is_median(&b, &majority_median(&b).unwrap()).unwrap());
    }

    #[test]
    fn identity_weight_sum_matches_direct_sum(len in 1usize..=8, rows in prop::collection::vec(any::<u32>(), 1..6)) {
        let b = multiset(len, &rows);
        let direct: u64 = brute_force_medians(&b)
            .iter()
            .map(|m| {
                let mu = BitString::parse(b.layout(), m).unwrap();
                b.distances(&mu).unwrap().iter().map(|&d| d as u64).product::<u64>()
            })
            .sum();
        let z: Count = partition_function(&b, &WeightFunction::Identity).unwrap();
        prop_assert_eq!(z, Count::from(direct));
    }
}

/// For eta and its pair-complement, and any mu that is zero on the extras,
/// H(mu, eta) + H(mu, eta_bar) = 2n + e(eta) + e(eta_bar).
#[test]
fn complementary_distances_are_constant() {
    for n in 1..=4 {
        for t in 0..=3 {
            let layout = Layout::new(n, t);
            for eta_mask in 0u32..1 << layout.len() {
                let bits: Vec<bool> = (0..layout.len()).map(|i| eta_mask >> i & 1 == 1).collect();
                let eta = BitString::from_bits(layout, &bits).unwrap();
                let bar = eta.complement_on_pairs();
                let expected = 2 * n + eta.extra_ones() + bar.extra_ones();
                for mu_mask in 0u32..1 << (2 * n) {
                    let bits: Vec<bool> = (0..layout.len()).map(|i| i < 2 * n && mu_mask >> i & 1 == 1).collect();
                    let mu = BitString::from_bits(layout, &bits).unwrap();
                    assert_eq!(mu.hamming(&eta).unwrap() + mu.hamming(&bar).unwrap(), expected);
                }
            }
        }
    }
}
