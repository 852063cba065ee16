use super::clause::{clause_block, pair_block};
use super::tables::TableKind;
use super::Block;
use crate::cnf::D3Formula;
use crate::error::{Error, Result};
use crate::partition::factorial;
use crate::primes::{factorials_mod, inv_mod, is_prime, mul_mod, pow_mod};
use crate::strings::{StringBlueprint, StringMultiset};
use num_bigint::BigUint;
use num_traits::One;

/// The counting multiset for one prime: pair-complementary `alpha` strings,
/// one `beta` pair per variable and a 50-row block per clause, all shifted so
/// that every non-satisfying median picks up a distance of at least `p`.
#[derive(Debug, Clone)]
pub struct SharpGadget {
    pub n: usize,
    pub k: usize,
    pub p: u64,
    pub q: usize,
    pub t: usize,
    pub blueprint: StringBlueprint,
    pub blocks: Vec<Block>,
}

impl SharpGadget {
    pub fn multiset(&self) -> Result<StringMultiset> {
        self.blueprint.materialize(self.t)
    }

    pub fn len(&self) -> usize {
        self.blueprint.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blueprint.entries.is_empty()
    }
}

/// Extra coordinates consumed by the counting gadget.
pub fn extra_length(n: usize, k: usize, q: usize) -> usize {
    2 * (q + 4) + 2 * n * (q + 3) + k * (75 + 50 * q)
}

pub fn build_sharp_gadget(f: &D3Formula, p: u64) -> Result<SharpGadget> {
    let (n, k) = (f.n(), f.k());
    if n < 3 {
        return Err(Error::Gadget(format!("need at least 3 variables, got {n}")));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p < (n + 5) as u64 {
        return Err(Error::Gadget(format!("prime {p} is below n+5 = {}", n + 5)));
    }
    let q = (p as usize) - (n + 5);
    let mut bp = StringBlueprint::new(n);
    let mut blocks = Vec::new();
    let mut mark = |bp: &StringBlueprint, name: String, start: usize| {
        blocks.push(Block { name, range: start..bp.entries.len() });
    };

    let all: Vec<usize> = (1..=n).collect();
    let alpha = pair_block(n, &all, q + 4);
    let alpha_bar = alpha.complement(q + 4);
    bp.push(alpha);
    bp.push(alpha_bar);
    mark(&bp, "A".into(), 0);
    for j in 1..=n {
        let start = bp.entries.len();
        let beta = pair_block(n, &[j], q + 3);
        let beta_bar = beta.complement(q + 3);
        bp.push(beta);
        bp.push(beta_bar);
        mark(&bp, format!("B{j}"), start);
    }
    for (i, c) in f.clauses().iter().enumerate() {
        let start = bp.entries.len();
        for s in clause_block(c, n, TableKind::Full, q)?.entries {
            bp.push(s);
        }
        mark(&bp, format!("C{}", i + 1), start);
    }
    let t = extra_length(n, k, q);
    debug_assert_eq!(bp.total_extras(), t);
    Ok(SharpGadget { n, k, p, q, t, blueprint: bp, blocks })
}

/// Factorial exponents of the weight shared by every satisfying median.
fn k_exponents(n: usize, k: usize, p: u64) -> [(u64, usize); 6] {
    [
        (p - 6, 7 * k),
        (p - 5, 6 * k),
        (p - 4, 12 * k),
        (p - 3, 12 * k),
        (p - 2, 6 * k + 2 * n),
        (p - 1, 7 * k + 2),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct KValue {
    pub residue: u64,
    pub inverse: u64,
}

/// The common median weight modulo `p`, with its inverse.
pub fn k_of_p(n: usize, k: usize, p: u64) -> Result<KValue> {
    if p <= 6 {
        return Err(Error::Gadget(format!("prime {p} too small: factorial arguments would be negative")));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let facts = factorials_mod(p, p as usize - 1);
    let residue = k_exponents(n, k, p)
        .iter()
        .fold(1, |acc, &(d, e)| mul_mod(acc, pow_mod(facts[d as usize], e as u64, p), p));
    Ok(KValue { residue, inverse: inv_mod(residue, p) })
}

pub fn k_of_p_exact(n: usize, k: usize, p: u64) -> Result<BigUint> {
    if p <= 6 {
        return Err(Error::Gadget(format!("prime {p} too small: factorial arguments would be negative")));
    }
    Ok(k_exponents(n, k, p)
        .iter()
        .fold(BigUint::one(), |acc, &(d, e)| acc * factorial(d as usize).pow(e as u32)))
}
