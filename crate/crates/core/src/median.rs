use crate::error::{Error, Result};
use crate::strings::{BitString, StringMultiset};
use serde::Serialize;

/// Coordinates where exactly half the members (with multiplicity) carry a 0.
pub fn ambiguous_coordinates(b: &StringMultiset) -> Vec<usize> {
    let m = b.len();
    b.column_ones()
        .into_iter()
        .enumerate()
        .filter(|&(_, ones)| 2 * ones == m)
        .map(|(i, _)| i)
        .collect()
}

/// Bitwise majority; ties go to 0.
pub fn majority_median(b: &StringMultiset) -> Result<BitString> {
    if b.is_empty() {
        return Err(Error::EmptyMultiset);
    }
    let m = b.len();
    let mut mu = BitString::zeros(b.layout());
    for (i, ones) in b.column_ones().into_iter().enumerate() {
        if 2 * ones > m {
            mu.set(i, true);
        }
    }
    Ok(mu)
}

pub fn is_median(b: &StringMultiset, mu: &BitString) -> Result<bool> {
    if mu.layout() != b.layout() {
        return Err(Error::LayoutMismatch(b.layout(), mu.layout()));
    }
    if b.is_empty() {
        return Err(Error::EmptyMultiset);
    }
    let m = b.len();
    Ok(b.column_ones().into_iter().enumerate().all(|(i, ones)| {
        let want = 2 * ones;
        if want == m {
            true
        } else {
            mu.get(i) == (want > m)
        }
    }))
}

/// The median set: a base majority median and the ambiguous coordinates
/// that may be set freely.
#[derive(Debug, Clone)]
pub struct MedianSet {
    pub base: BitString,
    pub ambiguous: Vec<usize>,
}

impl MedianSet {
    pub fn of(b: &StringMultiset) -> Result<Self> {
        Ok(MedianSet { base: majority_median(b)?, ambiguous: ambiguous_coordinates(b) })
    }

    pub fn size_log2(&self) -> usize {
        self.ambiguous.len()
    }

    /// The median whose ambiguous bits are given by `state` (bit `i` of `state`
    /// is coordinate `ambiguous[i]`).
    pub fn median_at(&self, state: u64) -> BitString {
        let mut mu = self.base.clone();
        for (i, &c) in self.ambiguous.iter().enumerate() {
            if (state >> i) & 1 == 1 {
                mu.set(c, true);
            }
        }
        mu
    }

    pub fn state_of(&self, mu: &BitString) -> u64 {
        self.ambiguous
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &c)| if mu.get(c) { acc | (1 << i) } else { acc })
    }
}

/// Walks medians in Gray-code order over the free ambiguous bits, keeping the
/// distance from each member up to date with one flip per step.
pub struct MedianWalk<'a> {
    b: &'a StringMultiset,
    free: Vec<usize>,
    current: BitString,
    distances: Vec<usize>,
    step: u64,
    total: u64,
}

impl<'a> MedianWalk<'a> {
    pub fn new(b: &'a StringMultiset) -> Result<Self> {
        let set = MedianSet::of(b)?;
        Self::with_prefix(b, &set, 0, 0)
    }

    /// Fixes the first `fixed` ambiguous bits to `prefix` and walks the rest.
    pub fn with_prefix(b: &'a StringMultiset, set: &MedianSet, fixed: usize, prefix: u64) -> Result<Self> {
        let free: Vec<usize> = set.ambiguous[fixed.min(set.ambiguous.len())..].to_vec();
        if free.len() >= 64 {
            return Err(Error::TooLarge(format!("{} ambiguous coordinates", set.ambiguous.len())));
        }
        let mut current = set.base.clone();
        for (i, &c) in set.ambiguous.iter().take(fixed).enumerate() {
            if (prefix >> i) & 1 == 1 {
                current.set(c, true);
            }
        }
        let distances = b.distances(&current)?;
        Ok(MedianWalk { b, total: 1u64 << free.len(), free, current, distances, step: 0 })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Advances and calls `f` with each median and its distance vector.
    pub fn scan(mut self, mut f: impl FnMut(&BitString, &[usize])) {
        while let Some(()) = self.advance() {
            f(&self.current, &self.distances);
        }
    }

    fn advance(&mut self) -> Option<()> {
        if self.step == self.total {
            return None;
        }
        if self.step > 0 {
            let c = self.free[self.step.trailing_zeros() as usize];
            self.current.flip(c);
            let v = self.current.get(c);
            for (d, m) in self.distances.iter_mut().zip(self.b.members()) {
                if m.get(c) == v {
                    *d -= 1;
                } else {
                    *d += 1;
                }
            }
        }
        self.step += 1;
        Some(())
    }
}

impl Iterator for MedianWalk<'_> {
    type Item = BitString;
    fn next(&mut self) -> Option<BitString> {
        self.advance().map(|_| self.current.clone())
    }
}

/// All optimal medians, in Gray-code order.
pub fn enumerate_medians(b: &StringMultiset) -> Result<MedianWalk<'_>> {
    MedianWalk::new(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthAssignment {
    /// `values[i]` is the value of variable `i + 1`.
    pub values: Vec<bool>,
}

impl TruthAssignment {
    pub fn from_mask(n: usize, mask: u64) -> Self {
        TruthAssignment { values: (0..n).map(|i| (mask >> i) & 1 == 1).collect() }
    }

    pub fn mask(&self) -> u64 {
        self.values.iter().enumerate().fold(0, |m, (i, &v)| if v { m | (1 << i) } else { m })
    }

    pub fn get(&self, var: usize) -> bool {
        self.values[var - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// `x_i = y_i` for this 1-based variable.
    EqualPair(usize),
    /// Extra coordinate `e_j` (0-based) is set.
    ExtraSet(usize),
}

/// Reads a truth assignment off a median with `x_i != y_i` everywhere and no
/// extra ones: `v_i` is true iff `x_i = 1`.
pub fn assignment_of_median(mu: &BitString) -> std::result::Result<TruthAssignment, Rejection> {
    let l = mu.layout();
    for j in 0..l.t_extra {
        if mu.get(l.extra(j)) {
            return Err(Rejection::ExtraSet(j));
        }
    }
    let mut values = Vec::with_capacity(l.n_pairs);
    for v in 1..=l.n_pairs {
        let (x, y) = (mu.get(l.x(v)), mu.get(l.y(v)));
        if x == y {
            return Err(Rejection::EqualPair(v));
        }
        values.push(x);
    }
    Ok(TruthAssignment { values })
}
