use super::clause::{clause_block, pair_block};
use super::tables::TableKind;
use super::Block;
use crate::cnf::D3Formula;
use crate::error::{Error, Result};
use crate::partition::WeightFunction;
use crate::scalar::ln_exact;
use crate::strings::{StringBlueprint, StringMultiset};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Which threshold construction to build. `Up` separates satisfying medians
/// when the four-point weight ratio exceeds 1, `Up2` when it is below 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Up,
    Up2,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Variant::Up),
            "up2" => Ok(Variant::Up2),
            _ => Err(Error::Gadget(format!("unknown variant {s:?} (expected up or up2)"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Up => "up",
            Variant::Up2 => "up2",
        })
    }
}

struct Schedule {
    /// `(a, copies per k)` for each side of the all-ones block.
    alpha: &'static [(usize, usize)],
    /// `(a, copies per k)` for each side of every single-variable block.
    beta: &'static [(usize, usize)],
    table: TableKind,
}

impl Variant {
    fn schedule(self) -> Schedule {
        match self {
            Variant::Up => Schedule {
                alpha: &[(0, 1), (1, 8), (2, 18), (3, 18), (4, 8), (5, 1)],
                beta: &[(1, 1), (2, 6), (3, 6), (4, 1)],
                table: TableKind::Full,
            },
            Variant::Up2 => Schedule {
                alpha: &[(1, 4), (2, 14), (3, 14), (4, 4)],
                beta: &[(2, 6), (3, 6)],
                table: TableKind::Complement,
            },
        }
    }

    /// String count as published for this construction.
    pub fn stated_strings(self, n: usize, k: usize) -> usize {
        match self {
            Variant::Up => 158 * k + 28 * k * n,
            Variant::Up2 => 98 * k + 24 * k * n,
        }
    }

    /// Total length as published (`2n` pair coordinates plus extras).
    pub fn stated_length(self, n: usize, k: usize) -> usize {
        2 * n
            + match self {
                Variant::Up => 260 * k + 35 * k * n,
                Variant::Up2 => 245 * k + 60 * k * n,
            }
    }

    /// Extra coordinates the copy schedule actually consumes.
    pub fn required_extras(self, n: usize, k: usize) -> usize {
        let s = self.schedule();
        let side = |sched: &[(usize, usize)]| 2 * k * sched.iter().map(|&(a, c)| a * c).sum::<usize>();
        let rows = super::tables::table(s.table);
        side(s.alpha) + n * side(s.beta) + k * (rows.extra_sum() + rows.rows.len())
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdGadget {
    pub variant: Variant,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub blueprint: StringBlueprint,
    pub blocks: Vec<Block>,
}

impl ThresholdGadget {
    pub fn multiset(&self) -> Result<StringMultiset> {
        self.blueprint.materialize(self.t)
    }

    pub fn stated_strings(&self) -> usize {
        self.variant.stated_strings(self.n, self.k)
    }

    pub fn stated_length(&self) -> usize {
        self.variant.stated_length(self.n, self.k)
    }

    pub fn length(&self) -> usize {
        2 * self.n + self.t
    }
}

/// Builds the threshold gadget and evaluates its separation bounds under `w`.
pub fn build_threshold_gadget(
    f: &D3Formula,
    variant: Variant,
    w: &WeightFunction,
) -> Result<(ThresholdGadget, SeparationReport)> {
    let (n, k) = (f.n(), f.k());
    if n < 3 {
        return Err(Error::Gadget(format!("need at least 3 variables, got {n}")));
    }
    let s = variant.schedule();
    let mut bp = StringBlueprint::new(n);
    let mut blocks = Vec::new();

    let all: Vec<usize> = (1..=n).collect();
    for &(a, c) in s.alpha {
        let alpha = pair_block(n, &all, a);
        for _ in 0..c * k {
            bp.push(alpha.clone());
            bp.push(alpha.complement(a));
        }
    }
    blocks.push(Block { name: "A".into(), range: 0..bp.entries.len() });
    for j in 1..=n {
        let start = bp.entries.len();
        for &(a, c) in s.beta {
            let beta = pair_block(n, &[j], a);
            for _ in 0..c * k {
                bp.push(beta.clone());
                bp.push(beta.complement(a));
            }
        }
        blocks.push(Block { name: format!("B{j}"), range: start..bp.entries.len() });
    }
    for (i, c) in f.clauses().iter().enumerate() {
        let start = bp.entries.len();
        for e in clause_block(c, n, s.table, 1)?.entries {
            bp.push(e);
        }
        blocks.push(Block { name: format!("C{}", i + 1), range: start..bp.entries.len() });
    }
    debug_assert_eq!(bp.entries.len(), variant.stated_strings(n, k));
    let t = bp.total_extras();
    debug_assert_eq!(t, variant.required_extras(n, k));
    let report = verify_separation(w, n, k, variant)?;
    Ok((ThresholdGadget { variant, n, k, t, blueprint: bp, blocks }, report))
}

/// A product `prod f(n + offset)^exp`, kept symbolic in `n`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Monomial(BTreeMap<i64, u64>);

impl Monomial {
    pub fn new(terms: &[(i64, u64)]) -> Self {
        let mut m = Monomial::default();
        for &(o, e) in terms {
            *m.0.entry(o).or_default() += e;
        }
        m
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.0.iter().map(|(&o, &e)| (o, e))
    }

    pub fn times(&self, other: &Monomial) -> Monomial {
        let mut m = self.clone();
        for (o, e) in other.terms() {
            *m.0.entry(o).or_default() += e;
        }
        m
    }

    pub fn pow(&self, e: u64) -> Monomial {
        if e == 0 {
            return Monomial::default();
        }
        Monomial(self.0.iter().map(|(&o, &x)| (o, x * e)).collect())
    }

    pub fn eval(&self, w: &WeightFunction, n: usize) -> Result<BigRational> {
        let mut acc = BigRational::one();
        for (o, e) in self.terms() {
            let d = n as i64 + o;
            if d < 0 {
                return Err(Error::WeightDomain(0));
            }
            acc *= w.exact(d as usize)?.pow(e as i32);
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogShape {
    /// `f(x-1) f(x+1) > f(x)^2` throughout.
    Convex,
    /// `f(x-1) f(x+1) < f(x)^2` throughout.
    Concave,
    Neither,
}

/// Shape of `log w` on `lo..=hi` from exact second differences.
pub fn log_shape(w: &WeightFunction, lo: usize, hi: usize) -> Result<LogShape> {
    let vals: Vec<BigRational> = (lo..=hi).map(|d| w.exact(d)).collect::<Result<_>>()?;
    if let Some(i) = vals.iter().position(|v| !v.is_positive()) {
        return Err(Error::NonPositiveWeight((lo + i) as i64));
    }
    let (mut up, mut down) = (true, true);
    for win in vals.windows(3) {
        let lhs = &win[0] * &win[2];
        let rhs = &win[1] * &win[1];
        up &= lhs > rhs;
        down &= lhs < rhs;
    }
    Ok(match (up, down) {
        (true, false) => LogShape::Convex,
        (false, true) => LogShape::Concave,
        _ => LogShape::Neither,
    })
}

/// `f(x) f(y) < f(x - a) f(y + a)` for `x < y`, `0 < a <= x`.
pub fn concavity_holds(w: &WeightFunction, x: usize, y: usize, a: usize) -> Result<bool> {
    if x >= y || a == 0 || a > x {
        return Err(Error::Gadget(format!("need x < y and 0 < a <= x, got x={x} y={y} a={a}")));
    }
    Ok(w.exact(x)? * w.exact(y)? < w.exact(x - a)? * w.exact(y + a)?)
}

/// The split `a + b = total` minimizing `f(a) f(b)`; ties go to the smallest `a`.
pub fn min_product_split(w: &WeightFunction, total: usize) -> Result<(usize, usize)> {
    let mut best: Option<(BigRational, usize)> = None;
    for a in 0..=total {
        let v = w.exact(a)? * w.exact(total - a)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, a));
        }
    }
    let a = best.map(|(_, a)| a).unwrap_or(0);
    Ok((a, total - a))
}

struct Factors {
    alpha_good: Monomial,
    alpha_bad: Monomial,
    beta_good: Monomial,
    beta_bad: Monomial,
    beta_min: Monomial,
    gamma_good: Monomial,
    gamma_bad: Monomial,
    gamma_min: Monomial,
}

fn factors(variant: Variant, k: usize) -> Factors {
    let k = k as u64;
    let pair = |a: i64, b: i64, e: u64| [(a, e * k), (b, e * k)];
    match variant {
        Variant::Up => {
            let beta_good = Monomial::new(&[(1, 2 * k), (2, 12 * k), (3, 12 * k), (4, 2 * k)]);
            Factors {
                alpha_good: Monomial::new(&[(0, 2 * k), (1, 16 * k), (2, 36 * k), (3, 36 * k), (4, 16 * k), (5, 2 * k)]),
                alpha_bad: Monomial::new(
                    &[pair(-1, 1, 1), pair(0, 2, 8), pair(1, 3, 18), pair(2, 4, 18), pair(3, 5, 8), pair(4, 6, 1)]
                        .concat(),
                ),
                beta_bad: Monomial::new(&[pair(-1, 3, 1), pair(0, 4, 6), pair(1, 5, 6), pair(2, 6, 1)].concat()),
                beta_min: beta_good.clone(),
                beta_good,
                gamma_good: Monomial::new(&[(0, 7), (1, 6), (2, 12), (3, 12), (4, 6), (5, 7)]),
                gamma_bad: Monomial::new(&[(-1, 1), (0, 6), (1, 3), (2, 15), (3, 15), (4, 3), (5, 6), (6, 1)]),
                gamma_min: Monomial::new(&[(2, 25), (3, 25)]),
            }
        }
        Variant::Up2 => {
            let beta_good = Monomial::new(&[(2, 12 * k), (3, 12 * k)]);
            Factors {
                alpha_good: Monomial::new(&[(1, 8 * k), (2, 28 * k), (3, 28 * k), (4, 8 * k)]),
                alpha_bad: Monomial::new(&[pair(0, 2, 4), pair(1, 3, 14), pair(2, 4, 14), pair(3, 5, 4)].concat()),
                beta_bad: Monomial::new(&[pair(0, 4, 6), pair(1, 5, 6)].concat()),
                beta_min: beta_good.clone(),
                beta_good,
                gamma_good: Monomial::new(&[(-1, 1), (0, 3), (1, 3), (2, 6), (3, 6), (4, 3), (5, 3), (6, 1)]),
                gamma_bad: Monomial::new(&[(0, 4), (1, 6), (2, 3), (3, 3), (4, 6), (5, 4)]),
                gamma_min: Monomial::new(&[(2, 13), (3, 13)]),
            }
        }
    }
}

/// Exact weight bounds for the four median classes of a threshold gadget:
/// `h[3]` is the weight of every satisfying median, `h[2]`, `h[1]`, `h[0]`
/// lower-bound the weights of the other classes.
#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub variant: Variant,
    pub n: usize,
    pub k: usize,
    pub weight: String,
    pub alpha_good: BigRational,
    pub alpha_bad: BigRational,
    pub beta_good: BigRational,
    pub beta_bad: BigRational,
    pub beta_min: BigRational,
    pub gamma_good: BigRational,
    pub gamma_bad: BigRational,
    pub gamma_min: BigRational,
    pub h: [BigRational; 4],
    pub h_monomials: [Monomial; 4],
    /// `f(n-2) f(n+1)^3 f(n+2)^3 f(n+5) / (f(n-1) f(n)^3 f(n+3)^3 f(n+4))`.
    pub hypothesis_ratio: BigRational,
    /// Ratio on the side this variant needs (`> 1` for up, `< 1` for up2).
    pub hypothesis_holds: bool,
    pub log_shape: LogShape,
}

impl SeparationReport {
    pub fn h3_below(&self, i: usize) -> bool {
        self.h[3] < self.h[i]
    }

    /// Satisfying medians are exactly those with weight at most `h[3]`.
    pub fn separated(&self) -> bool {
        (0..3).all(|i| self.h3_below(i))
    }

    pub fn ln_h(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| ln_exact(&self.h[i]))
    }
}

pub fn verify_separation(w: &WeightFunction, n: usize, k: usize, variant: Variant) -> Result<SeparationReport> {
    if n < 3 || k == 0 {
        return Err(Error::Gadget(format!("need n >= 3 and k >= 1, got n={n} k={k}")));
    }
    let shape = log_shape(w, n - 2, n + 6)?;
    let fs = factors(variant, k);
    let nn = n as u64;
    let kk = k as u64;
    let h3 = fs.alpha_good.times(&fs.beta_good.pow(nn)).times(&fs.gamma_good.pow(kk));
    let h2 = fs.alpha_good.times(&fs.beta_good.pow(nn)).times(&fs.gamma_bad).times(&fs.gamma_good.pow(kk - 1));
    let h1 = fs.alpha_good.times(&fs.beta_bad).times(&fs.beta_min.pow(nn - 1)).times(&fs.gamma_min.pow(kk));
    let h0 = fs.alpha_bad.times(&fs.beta_min.pow(nn)).times(&fs.gamma_min.pow(kk));
    let ev = |m: &Monomial| m.eval(w, n);
    let num = Monomial::new(&[(-2, 1), (1, 3), (2, 3), (5, 1)]);
    let den = Monomial::new(&[(-1, 1), (0, 3), (3, 3), (4, 1)]);
    let ratio = ev(&num)? / ev(&den)?;
    let one = BigRational::one();
    let holds = match variant {
        Variant::Up => ratio > one,
        Variant::Up2 => ratio < one && !ratio.is_zero(),
    };
    Ok(SeparationReport {
        variant,
        n,
        k,
        weight: w.name(),
        alpha_good: ev(&fs.alpha_good)?,
        alpha_bad: ev(&fs.alpha_bad)?,
        beta_good: ev(&fs.beta_good)?,
        beta_bad: ev(&fs.beta_bad)?,
        beta_min: ev(&fs.beta_min)?,
        gamma_good: ev(&fs.gamma_good)?,
        gamma_bad: ev(&fs.gamma_bad)?,
        gamma_min: ev(&fs.gamma_min)?,
        h: [ev(&h0)?, ev(&h1)?, ev(&h2)?, ev(&h3)?],
        h_monomials: [h0, h1, h2, h3],
        hypothesis_ratio: ratio,
        hypothesis_holds: holds,
        log_shape: shape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{random_d3, Clause3, Literal};
    use crate::median::{assignment_of_median, MedianSet};
    use crate::partition::weight_of_median;
    use num_bigint::BigInt;
    use rand::SeedableRng;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn sizes() {
        let f = D3Formula::new(3, vec![[Literal::pos(1), Literal::pos(2), Literal::pos(3)]]).unwrap();
        let (g, _) = build_threshold_gadget(&f, Variant::Up, &WeightFunction::Factorial).unwrap();
        assert_eq!(g.blueprint.entries.len(), 242);
        assert_eq!(g.stated_length(), 371);
        assert_eq!(g.t, 395 + 210);
        let (g, _) = build_threshold_gadget(&f, Variant::Up2, &WeightFunction::Factorial).unwrap();
        assert_eq!(g.blueprint.entries.len(), 170);
        assert_eq!((g.stated_length(), g.length()), (431, 431));
    }

    #[test]
    fn complementary_extras_sum_to_five() {
        let f = D3Formula::new(3, vec![[Literal::pos(1), Literal::neg(2), Literal::pos(3)]]).unwrap();
        let (g, _) = build_threshold_gadget(&f, Variant::Up, &WeightFunction::Factorial).unwrap();
        let c = &g.blueprint.entries[g.blocks[4].range.clone()];
        let mut seen = vec![false; c.len()];
        for i in 0..c.len() {
            if seen[i] {
                continue;
            }
            let want = c[i].pairs.complement_on_pairs();
            let j = (0..c.len()).find(|&j| !seen[j] && j != i && c[j].pairs == want && c[i].extra + c[j].extra == 5);
            let j = j.expect("complementary partner with extras summing to 5");
            seen[i] = true;
            seen[j] = true;
        }
    }

    #[test]
    fn hypothesis_ratio_at_ten() {
        let r = verify_separation(&WeightFunction::Factorial, 10, 1, Variant::Up).unwrap();
        assert_eq!(r.hypothesis_ratio, rat(19965, 19773));
        assert!(r.hypothesis_holds);
        assert_eq!(r.log_shape, LogShape::Convex);
    }

    #[test]
    fn helpers() {
        let w = WeightFunction::Factorial;
        for total in 0..=20 {
            assert_eq!(min_product_split(&w, total).unwrap(), (total / 2, total - total / 2));
        }
        assert!(concavity_holds(&w, 3, 5, 1).unwrap());
        assert!(concavity_holds(&w, 2, 9, 2).unwrap());
        assert!(concavity_holds(&w, 3, 3, 1).is_err());
        assert_eq!(log_shape(&WeightFunction::Identity, 1, 6).unwrap(), LogShape::Concave);
        assert!(log_shape(&WeightFunction::Identity, 0, 6).is_err());
    }

    #[test]
    fn bounded_difference_identity() {
        // With one clause, the non-Property-1 bound meets the one-false-clause bound.
        for variant in [Variant::Up, Variant::Up2] {
            let r = verify_separation(&WeightFunction::Factorial, 5, 1, variant).unwrap();
            assert_eq!(r.h[0], r.h[2]);
        }
    }

    /// Every median weight respects the bound of its class; satisfying medians hit `h[3]`.
    fn class_bounds(f: &D3Formula, variant: Variant) {
        let w = WeightFunction::Factorial;
        let (g, r) = build_threshold_gadget(f, variant, &w).unwrap();
        let b = g.multiset().unwrap();
        let set = MedianSet::of(&b).unwrap();
        let n = f.n();
        assert_eq!(set.ambiguous.len(), 2 * n);
        for state in 0..1u64 << (2 * n) {
            let mu = set.median_at(state);
            let h: BigRational = weight_of_median(&b, &mu, &w, false).unwrap();
            let ones = mu.count_ones();
            let class = match assignment_of_median(&mu) {
                Ok(a) if f.satisfied_by(a.mask()) => 3,
                Ok(_) => 2,
                Err(_) if ones == n => 1,
                Err(_) => 0,
            };
            if class == 3 {
                assert_eq!(h, r.h[3]);
            } else {
                assert!(h >= r.h[class], "{variant} class {class} state {state:b}");
            }
        }
    }

    #[test]
    fn class_bounds_hold_on_built_gadgets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for variant in [Variant::Up, Variant::Up2] {
            let c: Clause3 = [Literal::pos(1), Literal::neg(2), Literal::pos(3)];
            class_bounds(&D3Formula::new(3, vec![c]).unwrap(), variant);
            class_bounds(&random_d3(&mut rng, 4, 2), variant);
        }
    }
}
