//! Counting satisfying assignments through the modular partition sum of the
//! counting gadget, one prime at a time, then recombining by CRT.

use crate::cnf::{to_d3cnf, Cnf3, D3Formula};
use crate::error::{Error, Result};
use crate::gadget::{build_sharp_gadget, k_of_p, SharpGadget};
use crate::primes::{crt, factorials_mod, is_prime, mul_mod, next_prime, sieve};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use std::str::FromStr;

/// Default cap on `2n`, the number of ambiguous bits scanned per prime.
pub const DEFAULT_MAX_SCAN_BITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeMode {
    /// Smallest admissible primes whose product exceeds `2^n`.
    Practical,
    /// Every prime in `(n', 5n']` with `n' = max(300, n + 5)`.
    Theoretical,
}

impl FromStr for PrimeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "practical" => Ok(PrimeMode::Practical),
            "theoretical" => Ok(PrimeMode::Theoretical),
            _ => Err(Error::Formula(format!("unknown prime mode {s:?} (expected practical or theoretical)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimePlan {
    pub mode: PrimeMode,
    pub primes: Vec<u64>,
    pub product_log2: f64,
}

pub fn select_primes(n: usize, mode: PrimeMode) -> Result<PrimePlan> {
    let bound = BigUint::one() << n;
    let primes = match mode {
        PrimeMode::Practical => {
            let mut primes = Vec::new();
            let mut product = BigUint::one();
            let mut p = next_prime(7.max(n as u64 + 5));
            while product <= bound {
                product *= p;
                primes.push(p);
                p = next_prime(p + 1);
            }
            primes
        }
        PrimeMode::Theoretical => {
            let lo = 300.max(n as u64 + 5);
            sieve(5 * lo).into_iter().filter(|&p| p > lo).collect()
        }
    };
    let product: BigUint = primes.iter().fold(BigUint::one(), |acc, &p| acc * p);
    if product <= bound {
        return Err(Error::Formula(format!("prime product does not exceed 2^{n}")));
    }
    let product_log2 = primes.iter().map(|&p| (p as f64).log2()).sum();
    Ok(PrimePlan { mode, primes, product_log2 })
}

/// Partition-sum residues split by median class: `[0]` medians without `n`
/// ones on the pairs, `[1]` with `n` ones but some `x_i = y_i`, `[2]`
/// assignment medians that falsify the formula, `[3]` satisfying ones.
pub type ClassResidues = [u64; 4];

fn check_scan_size(n: usize, max_bits: usize) -> Result<()> {
    if 2 * n > max_bits.min(62) {
        return Err(Error::TooLarge(format!("{} ambiguous bits exceed the scan limit of {max_bits}", 2 * n)));
    }
    Ok(())
}

/// Scans all `2^{2n}` medians of the gadget, using pair-word popcounts plus
/// extra counts for the distances.
pub fn class_residues(f: &D3Formula, g: &SharpGadget, max_bits: usize) -> Result<ClassResidues> {
    let n = g.n;
    let p = g.p;
    check_scan_size(n, max_bits)?;
    let strings: Vec<(u64, usize)> =
        g.blueprint.entries.iter().map(|e| (e.pairs.pair_word().expect("2n <= 62"), e.extra)).collect();
    let max_d = 2 * n + strings.iter().map(|s| s.1).max().unwrap_or(0);
    let facts = factorials_mod(p, max_d);
    let x_mask: u64 = (0..n).fold(0, |m, i| m | (1 << (2 * i)));
    let total = 1u64 << (2 * n);
    let chunk = 1u64 << 10.min(2 * n);
    let add = |a: ClassResidues, b: ClassResidues| [0, 1, 2, 3].map(|i| (a[i] + b[i]) % p);
    let sums = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0u64; 4];
            for mu in c * chunk..(c + 1) * chunk {
                let mut term = 1 % p;
                for &(word, extra) in &strings {
                    term = mul_mod(term, facts[(mu ^ word).count_ones() as usize + extra], p);
                    if term == 0 {
                        break;
                    }
                }
                let xs = mu & x_mask;
                let ys = (mu >> 1) & x_mask;
                let class = if mu.count_ones() as usize != n {
                    0
                } else if xs & ys != 0 || (xs | ys) != x_mask {
                    1
                } else {
                    let assignment = (0..n).fold(0u64, |a, i| a | (((xs >> (2 * i)) & 1) << i));
                    if f.satisfied_by(assignment) {
                        3
                    } else {
                        2
                    }
                };
                debug_assert!(class == 3 || term == 0, "median {mu:b} of class {class} has nonzero residue");
                acc[class] = (acc[class] + term) % p;
            }
            acc
        })
        .reduce(|| [0; 4], add);
    Ok(sums)
}

/// `T(p)`: the factorial-weight partition sum of the counting gadget mod `p`.
pub fn t_of_p(f: &D3Formula, p: u64, max_bits: usize) -> Result<u64> {
    let g = build_sharp_gadget(f, p)?;
    Ok(class_residues(f, &g, max_bits)?.iter().fold(0, |a, r| (a + r) % p))
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimeReport {
    pub p: u64,
    pub q: usize,
    pub t: usize,
    #[serde(rename = "T_mod_p")]
    pub t_mod_p: u64,
    #[serde(rename = "K_mod_p")]
    pub k_mod_p: u64,
    pub gamma_mod_p: u64,
}

pub fn prime_report(f: &D3Formula, p: u64, max_bits: usize) -> Result<PrimeReport> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let g = build_sharp_gadget(f, p)?;
    let t_mod_p = class_residues(f, &g, max_bits)?.iter().fold(0, |a, r| (a + r) % p);
    let kv = k_of_p(f.n(), f.k(), p)?;
    Ok(PrimeReport { p, q: g.q, t: g.t, t_mod_p, k_mod_p: kv.residue, gamma_mod_p: mul_mod(kv.inverse, t_mod_p, p) })
}

#[derive(Debug, Clone, Serialize)]
pub struct SatCount {
    #[serde(serialize_with = "crate::scalar::serialize_decimal")]
    pub gamma: BigUint,
    pub n: usize,
    pub k: usize,
    /// Variables and clauses left after the distinct-variable rewrite.
    pub reduced_n: usize,
    pub reduced_k: usize,
    /// Variables dropped by the rewrite; each doubles the count.
    pub free_vars: usize,
    pub plan: Option<PrimePlan>,
    pub primes: Vec<PrimeReport>,
}

/// Counts satisfying assignments of a D3 formula through the gadget.
pub fn count_sat_d3(f: &D3Formula, mode: PrimeMode, max_bits: usize) -> Result<(BigUint, PrimePlan, Vec<PrimeReport>)> {
    check_scan_size(f.n(), max_bits)?;
    let plan = select_primes(f.n(), mode)?;
    let reports: Vec<PrimeReport> =
        plan.primes.par_iter().map(|&p| prime_report(f, p, max_bits)).collect::<Result<_>>()?;
    let residues: Vec<u64> = reports.iter().map(|r| r.gamma_mod_p).collect();
    let gamma = crt(&residues, &plan.primes);
    if gamma > (BigUint::one() << f.n()) {
        return Err(Error::Formula(format!("recovered count {gamma} exceeds 2^{}", f.n())));
    }
    Ok((gamma, plan, reports))
}

/// Counts satisfying assignments of any 3-CNF: rewrite to distinct-variable
/// clauses, count through the gadget, then restore dropped variables.
pub fn count_sat(cnf: &Cnf3, mode: PrimeMode, max_bits: usize) -> Result<SatCount> {
    let r = to_d3cnf(cnf)?;
    let (n, k) = (cnf.n, cnf.clauses.len());
    let (reduced_n, reduced_k) = (r.formula.n(), r.formula.k());
    let (core, plan, primes) = if reduced_n == 0 {
        (BigUint::one(), None, Vec::new())
    } else {
        let (g, plan, reports) = count_sat_d3(&r.formula, mode, max_bits)?;
        (g, Some(plan), reports)
    };
    Ok(SatCount { gamma: core << r.free_vars, n, k, reduced_n, reduced_k, free_vars: r.free_vars, plan, primes })
}

impl SatCount {
    pub fn gamma_u64(&self) -> Option<u64> {
        self.gamma.to_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{all_sign_patterns, parse_dimacs, random_d3, Literal};
    use crate::partition::partition_function_mod_p;
    use rand::SeedableRng;

    fn one_clause() -> D3Formula {
        D3Formula::new(3, vec![[Literal::pos(1), Literal::pos(2), Literal::pos(3)]]).unwrap()
    }

    #[test]
    fn prime_plans() {
        assert_eq!(select_primes(3, PrimeMode::Practical).unwrap().primes, vec![11]);
        assert_eq!(select_primes(10, PrimeMode::Practical).unwrap().primes, vec![17, 19, 23]);
        let th = select_primes(3, PrimeMode::Theoretical).unwrap();
        assert_eq!(th.primes.first(), Some(&307));
        assert_eq!(th.primes.last(), Some(&1499));
        assert!(th.primes.iter().all(|&p| p > 300 && p <= 1500));
    }

    #[test]
    fn single_clause_residue() {
        let r = prime_report(&one_clause(), 11, DEFAULT_MAX_SCAN_BITS).unwrap();
        assert_eq!(r.gamma_mod_p, 7);
        assert_eq!((r.q, r.t), (3, 275));
    }

    #[test]
    fn unsatisfiable_gives_zero() {
        let f = all_sign_patterns();
        for p in [11, 13, 17] {
            assert_eq!(t_of_p(&f, p, DEFAULT_MAX_SCAN_BITS).unwrap(), 0);
        }
    }

    #[test]
    fn structural_scan_matches_generic_sum() {
        let f = one_clause();
        for p in [11, 13] {
            let g = build_sharp_gadget(&f, p).unwrap();
            let b = g.multiset().unwrap();
            assert_eq!(t_of_p(&f, p, DEFAULT_MAX_SCAN_BITS).unwrap(), partition_function_mod_p(&b, p).unwrap());
        }
    }

    #[test]
    fn examples() {
        let cnf = parse_dimacs("p cnf 3 2\n1 2 3 0\n-1 -2 -3 0\n").unwrap();
        assert_eq!(count_sat(&cnf, PrimeMode::Practical, DEFAULT_MAX_SCAN_BITS).unwrap().gamma, BigUint::from(6u8));
        let cnf = all_sign_patterns().to_cnf();
        assert_eq!(count_sat(&cnf, PrimeMode::Practical, DEFAULT_MAX_SCAN_BITS).unwrap().gamma, BigUint::from(0u8));
        let taut = parse_dimacs("p cnf 4 1\n1 -1 2 0\n").unwrap();
        let c = count_sat(&taut, PrimeMode::Practical, DEFAULT_MAX_SCAN_BITS).unwrap();
        assert_eq!(c.gamma, BigUint::from(16u8));
        assert!(c.plan.is_none());
    }

    #[test]
    fn guard_refuses_large_scans() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let f = random_d3(&mut rng, 14, 3);
        assert!(count_sat_d3(&f, PrimeMode::Practical, DEFAULT_MAX_SCAN_BITS).unwrap_err().is_guard());
    }

    #[test]
    fn class_residues_vanish_off_satisfying() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let f = random_d3(&mut rng, 4, 3);
            let p = 13;
            let g = build_sharp_gadget(&f, p).unwrap();
            let r = class_residues(&f, &g, DEFAULT_MAX_SCAN_BITS).unwrap();
            assert_eq!(&r[..3], &[0, 0, 0]);
            let k = k_of_p(4, 3, p).unwrap().residue;
            assert_eq!(r[3], mul_mod(f.brute_force_count().unwrap() % p, k, p));
        }
    }
}
