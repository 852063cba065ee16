use itertools::Itertools;
use medz_core::mcmc::{torpid_instance, torpid_z};
use medz_core::partition::{partition_function, WeightFunction};
use medz_core::{BitString, Count, Layout, StringMultiset};

/// Counts star scenarios by listing them: pick a best centre, then one
/// ordering of the differing coordinates per leaf, and replay every ordering.
fn scenarios_by_generation(b: &StringMultiset) -> (u64, usize) {
    let len = b.layout().len();
    let strings: Vec<Vec<bool>> =
        (0u32..1 << len).map(|m| (0..len).map(|i| m >> i & 1 == 1).collect()).collect();
    let members: Vec<Vec<bool>> = b.members().iter().map(|s| s.bits().collect()).collect();
    let cost = |mu: &[bool]| -> usize {
        members.iter().map(|v| v.iter().zip(mu).filter(|(a, b)| a != b).count()).sum()
    };
    let best = strings.iter().map(|s| cost(s)).min().unwrap();
    let mut total = 0u64;
    for mu in strings.iter().filter(|s| cost(s) == best) {
        let per_leaf: Vec<Vec<Vec<usize>>> = members
            .iter()
            .map(|v| {
                let diff: Vec<usize> = (0..len).filter(|&i| v[i] != mu[i]).collect();
                diff.iter().copied().permutations(diff.len()).collect()
            })
            .collect();
        for scenario in per_leaf.iter().map(|p| p.iter()).multi_cartesian_product() {
            for (order, v) in scenario.iter().zip(&members) {
                let mut s = mu.clone();
                for &c in order.iter() {
                    s[c] = !s[c];
                }
                assert_eq!(&s, v);
            }
            total += 1;
        }
    }
    (total, best)
}

fn all_multisets(len: usize, size: usize) -> impl Iterator<Item = StringMultiset> {
    let layout = Layout::new(0, len);
    (0u32..1 << len).combinations_with_replacement(size).map(move |rows| {
        let members = rows
            .iter()
            .map(|r| BitString::from_bits(layout, &(0..len).map(|i| r >> i & 1 == 1).collect::<Vec<_>>()).unwrap())
            .collect();
        StringMultiset::new(layout, members).unwrap()
    })
}

#[test]
fn factorial_partition_function_counts_star_scenarios() {
    let mut checked = 0;
    for (len, max_size) in [(1, 6), (2, 5), (3, 4), (4, 3)] {
        for size in 1..=max_size {
            for b in all_multisets(len, size) {
                let (count, best) = scenarios_by_generation(&b);
                if best > 8 {
                    continue;
                }
                let z: Count = partition_function(&b, &WeightFunction::Factorial).unwrap();
                assert_eq!(z, Count::from(count), "{b:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 500, "only {checked} multisets");
}

#[test]
fn torpid_three_two_has_96_scenarios() {
    let b = torpid_instance(3, 2).unwrap();
    let z: Count = partition_function(&b, &WeightFunction::Factorial).unwrap();
    assert_eq!(z, Count::from(96u32));
    assert_eq!(torpid_z(3, 2), Count::from(96u32));
    assert_eq!(scenarios_by_generation(&b).0, 96);
}
