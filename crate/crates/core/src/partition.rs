use crate::error::{Error, Result};
use crate::median::{is_median, MedianSet, MedianWalk};
use crate::primes::{factorials_mod, is_prime};
use crate::scalar::{ln_exact, Scalar};
use crate::strings::{BitString, StringMultiset};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Above this many ambiguous bits the median scan is split across workers.
const PARALLEL_BITS: usize = 10;
/// Number of leading ambiguous bits fixed per work chunk.
const CHUNK_BITS: usize = 6;

pub fn factorial(d: usize) -> BigUint {
    (2..=d as u64).fold(BigUint::one(), |acc, i| acc * i)
}

/// Nonnegative weight on Hamming distances.
#[derive(Clone)]
pub enum WeightFunction {
    Factorial,
    Identity,
    /// `w(d)` for `d = 0..len`; undefined beyond.
    Table(Arc<Vec<BigRational>>),
    Custom { name: String, f: Arc<dyn Fn(usize) -> BigRational + Send + Sync> },
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl WeightFunction {
    pub fn name(&self) -> String {
        match self {
            WeightFunction::Factorial => "factorial".into(),
            WeightFunction::Identity => "identity".into(),
            WeightFunction::Table(t) => format!("table[{}]", t.len()),
            WeightFunction::Custom { name, .. } => name.clone(),
        }
    }

    pub fn table(values: Vec<BigRational>) -> Result<Self> {
        if let Some(d) = values.iter().position(|v| v.is_negative()) {
            return Err(Error::NonPositiveWeight(d as i64));
        }
        Ok(WeightFunction::Table(Arc::new(values)))
    }

    pub fn custom(name: &str, f: impl Fn(usize) -> BigRational + Send + Sync + 'static) -> Self {
        WeightFunction::Custom { name: name.to_string(), f: Arc::new(f) }
    }

    /// Two-column text `d w(d)`; `w` may be an integer, `a/b`, or a decimal.
    /// Distances must cover `0..=max` without gaps.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
            let mut it = line.split_whitespace();
            let d: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad distance"))?;
            let w = it.next().ok_or_else(|| err("missing weight"))?;
            let w = parse_rational(w).ok_or_else(|| err("bad weight"))?;
            if entries.insert(d, w).is_some() {
                return Err(err("duplicate distance"));
            }
        }
        let values: Vec<BigRational> = entries.into_values().collect();
        Self::table(values)
    }

    pub fn exact(&self, d: usize) -> Result<BigRational> {
        match self {
            WeightFunction::Factorial => Ok(BigRational::from_integer(factorial(d).into())),
            WeightFunction::Identity => Ok(BigRational::from_integer(d.into())),
            WeightFunction::Table(t) => t.get(d).cloned().ok_or(Error::WeightDomain(d)),
            WeightFunction::Custom { f, .. } => {
                let v = f(d);
                if v.is_negative() {
                    Err(Error::NonPositiveWeight(d as i64))
                } else {
                    Ok(v)
                }
            }
        }
    }

    pub fn value<T: Scalar>(&self, d: usize) -> Result<T> {
        match self {
            WeightFunction::Factorial => Ok(T::from_count(&factorial(d))),
            _ => T::from_exact(&self.exact(d)?).ok_or(Error::WeightDomain(d)),
        }
    }

    pub fn ln(&self, d: usize) -> Result<f64> {
        match self {
            WeightFunction::Factorial => Ok((2..=d).map(|i| (i as f64).ln()).sum()),
            WeightFunction::Identity => Ok((d as f64).ln()),
            _ => Ok(ln_exact(&self.exact(d)?)),
        }
    }

    /// `w(d) mod p`, or `None` when the denominator vanishes mod `p`.
    pub fn mod_p(&self, d: usize, p: u64) -> Result<Option<u64>> {
        match self {
            WeightFunction::Factorial => Ok(Some(factorials_mod(p, d)[d])),
            WeightFunction::Identity => Ok(Some(d as u64 % p)),
            _ => {
                let v = self.exact(d)?;
                let pb = BigInt::from(p);
                let num = (v.numer() % &pb).to_u64().unwrap();
                let den = (v.denom() % &pb).to_u64().unwrap();
                if den == 0 {
                    Ok(None)
                } else {
                    Ok(Some(crate::primes::mul_mod(num, crate::primes::inv_mod(den, p), p)))
                }
            }
        }
    }

    /// `w(0..=max)` in the requested scalar type.
    pub fn values<T: Scalar>(&self, max: usize) -> Result<Vec<T>> {
        match self {
            WeightFunction::Factorial => {
                let mut out = Vec::with_capacity(max + 1);
                let mut acc = BigUint::one();
                for d in 0..=max {
                    if d > 1 {
                        acc *= d as u64;
                    }
                    out.push(T::from_count(&acc));
                }
                Ok(out)
            }
            _ => (0..=max).map(|d| self.value(d)).collect(),
        }
    }

    /// Like [`values`](Self::values) but stops at the first undefined distance,
    /// so a table shorter than the string length is still usable.
    fn values_upto<T: Scalar>(&self, max: usize) -> Vec<Option<T>> {
        if let WeightFunction::Factorial = self {
            if let Ok(v) = self.values(max) {
                return v.into_iter().map(Some).collect();
            }
        }
        (0..=max).map(|d| self.value(d).ok()).collect()
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.parse().ok()?;
        let b: BigInt = b.parse().ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = format!("{int}{frac}");
        let num: BigInt = digits.parse().ok()?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        return Some(BigRational::new(num, den));
    }
    Some(BigRational::from_integer(s.parse().ok()?))
}

/// Multiplicity of each distance from a median to the members.
pub type DistanceMultiset = BTreeMap<usize, usize>;

pub fn distance_multiset(b: &StringMultiset, mu: &BitString) -> Result<DistanceMultiset> {
    let mut h = DistanceMultiset::new();
    for d in b.distances(mu)? {
        *h.entry(d).or_default() += 1;
    }
    Ok(h)
}

fn histogram(distances: &[usize], max: usize) -> Vec<usize> {
    let mut h = vec![0usize; max + 1];
    for &d in distances {
        h[d] += 1;
    }
    h
}

fn product_from_histogram<T: Scalar>(table: &[Option<T>], hist: &[usize]) -> Result<T> {
    let mut acc = T::one();
    for (d, &c) in hist.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w = table[d].clone().ok_or(Error::WeightDomain(d))?;
        acc = acc * num_traits::pow(w, c);
    }
    Ok(acc)
}

/// `prod_i w(H(nu_i, mu))`.
pub fn weight_of_median<T: Scalar>(
    b: &StringMultiset,
    mu: &BitString,
    w: &WeightFunction,
    check: bool,
) -> Result<T> {
    if check && !is_median(b, mu)? {
        return Err(Error::NotMedian);
    }
    let max = b.layout().len();
    let table = w.values_upto::<T>(max);
    product_from_histogram(&table, &histogram(&b.distances(mu)?, max))
}

/// Runs `f` over every median with its distance vector and adds up the results.
/// Chunks are combined in a fixed order, so floating-point sums do not depend
/// on the number of workers.
fn sum_over_medians<T, F>(b: &StringMultiset, f: F) -> Result<T>
where
    T: Send + Clone,
    F: Fn(&[usize]) -> Result<T> + Sync,
    T: std::ops::Add<Output = T> + Zero,
{
    let set = MedianSet::of(b)?;
    let a = set.ambiguous.len();
    if a >= 63 {
        return Err(Error::TooLarge(format!("{a} ambiguous coordinates")));
    }
    let fixed = if a > PARALLEL_BITS { CHUNK_BITS } else { 0 };
    let parts: Vec<Result<T>> = (0..1u64 << fixed)
        .into_par_iter()
        .map(|prefix| {
            let mut acc = T::zero();
            let mut err = None;
            MedianWalk::with_prefix(b, &set, fixed, prefix)?.scan(|_, d| {
                if err.is_some() {
                    return;
                }
                match f(d) {
                    Ok(v) => acc = std::mem::replace(&mut acc, T::zero()) + v,
                    Err(e) => err = Some(e),
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(acc),
            }
        })
        .collect();
    parts.into_iter().try_fold(T::zero(), |acc, p| Ok(acc + p?))
}

/// `Z(B, w) = sum over optimal medians mu of prod_i w(H(nu_i, mu))`.
pub fn partition_function<T: Scalar>(b: &StringMultiset, w: &WeightFunction) -> Result<T> {
    let max = b.layout().len();
    let table = w.values_upto::<T>(max);
    sum_over_medians(b, |d| product_from_histogram(&table, &histogram(d, max)))
}

/// `Z(B, x!) mod p`.
pub fn partition_function_mod_p(b: &StringMultiset, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let fact = factorials_mod(p, b.layout().len());
    let sum = sum_over_medians(b, |d| {
        Ok(ModSum(d.iter().fold(1u64 % p, |acc, &x| crate::primes::mul_mod(acc, fact[x], p)), p))
    })?;
    Ok(sum.0 % p)
}

/// Residue accumulator usable with the generic median sum.
#[derive(Clone, Copy)]
struct ModSum(u64, u64);

impl std::ops::Add for ModSum {
    type Output = ModSum;
    fn add(self, o: ModSum) -> ModSum {
        let p = self.1.max(o.1);
        if p == 0 {
            return ModSum(0, 0);
        }
        ModSum(((self.0 as u128 + o.0 as u128) % p as u128) as u64, p)
    }
}

impl Zero for ModSum {
    fn zero() -> Self {
        ModSum(0, 0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

/// Counts medians whose weight is `<= bound` (or `>= bound`). Decisions are
/// made in log space when the margin is wide and confirmed exactly otherwise.
pub fn count_medians_within_threshold(
    b: &StringMultiset,
    w: &WeightFunction,
    bound: &BigRational,
    dir: Direction,
) -> Result<BigUint> {
    let max = b.layout().len();
    let ln_table: Vec<Option<f64>> = (0..=max).map(|d| w.ln(d).ok()).collect();
    let exact_table = w.values_upto::<BigRational>(max);
    let ln_bound = if bound.is_positive() { ln_exact(bound) } else { f64::NEG_INFINITY };
    let tol = 1e-6 * ln_bound.abs().max(1.0);
    let total = sum_over_medians(b, |d| {
        let hist = histogram(d, max);
        let mut ln_w = 0.0;
        for (dist, &c) in hist.iter().enumerate() {
            if c > 0 {
                ln_w += c as f64 * ln_table[dist].ok_or(Error::WeightDomain(dist))?;
            }
        }
        let decided = if ln_w.is_finite() && ln_bound.is_finite() && (ln_w - ln_bound).abs() > tol {
            Some(ln_w < ln_bound)
        } else {
            None
        };
        let below = match decided {
            Some(v) => v,
            None => {
                let exact = product_from_histogram(&exact_table, &hist)?;
                return Ok(BigUint::from(match dir {
                    Direction::AtMost => (exact <= *bound) as u8,
                    Direction::AtLeast => (exact >= *bound) as u8,
                }));
            }
        };
        let hit = match dir {
            Direction::AtMost => below,
            Direction::AtLeast => !below,
        };
        Ok(BigUint::from(hit as u8))
    })?;
    Ok(total)
}

/// `r`-fold multiset union of `B` with itself.
pub fn amplify(b: &StringMultiset, r: usize) -> Result<StringMultiset> {
    if r == 0 {
        return Err(Error::Gadget("amplification factor must be at least 1".into()));
    }
    let mut members = Vec::with_capacity(b.len() * r);
    for _ in 0..r {
        members.extend(b.members().iter().cloned());
    }
    StringMultiset::new(b.layout(), members)
}

/// Number of optimal medians, `2^{#ambiguous}`.
pub fn median_count(b: &StringMultiset) -> Result<BigUint> {
    Ok(BigUint::one() << MedianSet::of(b)?.ambiguous.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::Layout;

    fn ms(rows: &[&str]) -> StringMultiset {
        StringMultiset::parse_raw(None, &rows.join("\n")).unwrap()
    }

    fn z(b: &StringMultiset) -> BigUint {
        partition_function(b, &WeightFunction::Factorial).unwrap()
    }

    #[test]
    fn weight_examples() {
        let b = ms(&["00", "11"]);
        let l = b.layout();
        let w = WeightFunction::Factorial;
        let at = |s: &str| weight_of_median::<BigUint>(&b, &BitString::parse(l, s).unwrap(), &w, true).unwrap();
        assert_eq!(at("00"), BigUint::from(2u8));
        assert_eq!(at("01"), BigUint::from(1u8));
        let one = WeightFunction::custom("one", |_| BigRational::one());
        assert_eq!(weight_of_median::<BigUint>(&b, &BitString::parse(l, "10").unwrap(), &one, true).unwrap(), BigUint::one());
    }

    #[test]
    fn non_median_is_rejected() {
        let b = ms(&["110", "101", "100"]);
        let mu = BitString::parse(b.layout(), "111").unwrap();
        assert_eq!(weight_of_median::<BigUint>(&b, &mu, &WeightFunction::Factorial, true), Err(Error::NotMedian));
        assert!(weight_of_median::<BigUint>(&b, &mu, &WeightFunction::Factorial, false).is_ok());
    }

    #[test]
    fn partition_examples() {
        assert_eq!(z(&ms(&["00", "11"])), BigUint::from(6u8));
        assert_eq!(z(&ms(&["110", "101", "100"])), BigUint::one());
        let f: f64 = partition_function(&ms(&["00", "11"]), &WeightFunction::Factorial).unwrap();
        assert_eq!(f, 6.0);
        let f: f32 = partition_function(&ms(&["00", "11"]), &WeightFunction::Factorial).unwrap();
        assert_eq!(f, 6.0);
    }

    #[test]
    fn torpid_sum() {
        let b = ms(&["000", "000", "111", "111"]);
        assert_eq!(z(&b), BigUint::from(96u8));
    }

    #[test]
    fn mod_p_examples() {
        let b = ms(&["00", "11"]);
        assert_eq!(partition_function_mod_p(&b, 5).unwrap(), 1);
        assert_eq!(partition_function_mod_p(&b, 2).unwrap(), 0);
        assert_eq!(partition_function_mod_p(&b, 4), Err(Error::NotPrime(4)));
    }

    #[test]
    fn threshold_examples() {
        let b = ms(&["00", "11"]);
        let w = WeightFunction::Factorial;
        let one = BigRational::one();
        assert_eq!(count_medians_within_threshold(&b, &w, &one, Direction::AtMost).unwrap(), BigUint::from(2u8));
        let two = BigRational::from_integer(2.into());
        assert_eq!(count_medians_within_threshold(&b, &w, &two, Direction::AtMost).unwrap(), BigUint::from(4u8));
        assert_eq!(count_medians_within_threshold(&b, &w, &two, Direction::AtLeast).unwrap(), BigUint::from(2u8));
    }

    #[test]
    fn amplify_examples() {
        let b = ms(&["00", "11"]);
        assert_eq!(amplify(&b, 1).unwrap(), b);
        assert_eq!(z(&amplify(&b, 2).unwrap()), BigUint::from(10u8));
        assert_eq!(
            crate::median::ambiguous_coordinates(&amplify(&b, 3).unwrap()),
            crate::median::ambiguous_coordinates(&b)
        );
    }

    #[test]
    fn table_weights_parse() {
        let w = WeightFunction::parse_table("0 1\n1 1/2\n2 0.25\n").unwrap();
        assert_eq!(w.exact(1).unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(w.exact(2).unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(w.exact(3), Err(Error::WeightDomain(3)));
        let b = ms(&["00", "11"]);
        let zr: BigRational = partition_function(&b, &w).unwrap();
        // 1*1/4 + 1/2*1/2 + 1/2*1/2 + 1/4*1
        assert_eq!(zr, BigRational::new(1.into(), 1.into()));
        assert!(partition_function::<BigUint>(&b, &w).is_err());
    }

    #[test]
    fn evaluators_agree() {
        let w = WeightFunction::Factorial;
        for d in 0..30 {
            let exact = factorial(d);
            let ln = w.ln(d).unwrap();
            assert!((ln - crate::scalar::ln_biguint(&exact)).abs() < 1e-9);
            for p in [2u64, 3, 5, 7, 11, 13, 101] {
                assert_eq!(w.mod_p(d, p).unwrap().unwrap(), (&exact % p).to_u64().unwrap());
            }
        }
    }

    #[test]
    fn parallel_scan_matches_sequential() {
        let l = Layout::new(7, 0);
        let zero = BitString::zeros(l);
        let mut one = zero.clone();
        for i in 0..14 {
            one.set(i, true);
        }
        let mut b = StringMultiset::new(l, vec![zero.clone(), one.clone(), zero, one]).unwrap();
        let mut odd = BitString::zeros(l);
        odd.set(3, true);
        b.push(odd.clone()).unwrap();
        b.push(odd.complement_on_pairs()).unwrap();
        assert_eq!(MedianSet::of(&b).unwrap().ambiguous.len(), 14);
        let seq: BigUint = crate::median::enumerate_medians(&b)
            .unwrap()
            .map(|mu| weight_of_median::<BigUint>(&b, &mu, &WeightFunction::Factorial, false).unwrap())
            .sum();
        assert_eq!(z(&b), seq);
    }
}
