use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;

/// Coordinates `x_1, y_1, ..., x_n, y_n` followed by `t` extra coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Layout {
    pub n_pairs: usize,
    pub t_extra: usize,
}

impl Layout {
    pub fn new(n_pairs: usize, t_extra: usize) -> Self {
        Layout { n_pairs, t_extra }
    }

    pub fn len(&self) -> usize {
        2 * self.n_pairs + self.t_extra
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pair_len(&self) -> usize {
        2 * self.n_pairs
    }

    /// Index of `x_i` for a 1-based variable.
    pub fn x(&self, var: usize) -> usize {
        2 * (var - 1)
    }

    pub fn y(&self, var: usize) -> usize {
        2 * (var - 1) + 1
    }

    pub fn extra(&self, j: usize) -> usize {
        2 * self.n_pairs + j
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, t={})", self.n_pairs, self.t_extra)
    }
}

fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

/// A 0/1 string packed into 64-bit words, tagged with its layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    n_pairs: usize,
    t_extra: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(layout: Layout) -> Self {
        BitString {
            n_pairs: layout.n_pairs,
            t_extra: layout.t_extra,
            words: vec![0; words_for(layout.len())],
        }
    }

    pub fn from_bits(layout: Layout, bits: &[bool]) -> Result<Self> {
        if bits.len() != layout.len() {
            return Err(Error::LengthMismatch { layout, got: bits.len() });
        }
        let mut s = Self::zeros(layout);
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        Ok(s)
    }

    /// Parses `0`/`1` characters; `|`, `_` and whitespace are ignored as separators.
    pub fn parse(layout: Layout, text: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(layout.len());
        for c in text.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                '|' | '_' => {}
                c if c.is_whitespace() => {}
                c => return Err(Error::BadBit(c)),
            }
        }
        Self::from_bits(layout, &bits)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.n_pairs, self.t_extra)
    }

    pub fn len(&self) -> usize {
        self.layout().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len());
        let m = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        if self.layout() != other.layout() {
            return Err(Error::LayoutMismatch(self.layout(), other.layout()));
        }
        Ok(self.hamming_unchecked(other))
    }

    pub fn hamming_unchecked(&self, other: &BitString) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Flips every pair coordinate and leaves the extras alone.
    pub fn complement_on_pairs(&self) -> BitString {
        let mut out = self.clone();
        for i in 0..self.layout().pair_len() {
            out.flip(i);
        }
        out
    }

    pub fn extra_ones(&self) -> usize {
        let l = self.layout();
        (l.pair_len()..l.len()).filter(|&i| self.get(i)).count()
    }

    /// Pair coordinates packed into one word (`x_1` at bit 0), when `2n <= 64`.
    pub fn pair_word(&self) -> Option<u64> {
        let p = self.layout().pair_len();
        if p > 64 {
            return None;
        }
        let mask = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
        Some(self.words.first().copied().unwrap_or(0) & mask)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One string of a blueprint: values on the pair coordinates plus a count of extra ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlueprintString {
    pub pairs: BitString,
    pub extra: usize,
}

impl BlueprintString {
    pub fn new(n_pairs: usize, extra: usize) -> Self {
        BlueprintString { pairs: BitString::zeros(Layout::new(n_pairs, 0)), extra }
    }

    pub fn complement(&self, extra: usize) -> Self {
        BlueprintString { pairs: self.pairs.complement_on_pairs(), extra }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringBlueprint {
    pub n_pairs: usize,
    pub entries: Vec<BlueprintString>,
}

impl StringBlueprint {
    pub fn new(n_pairs: usize) -> Self {
        StringBlueprint { n_pairs, entries: Vec::new() }
    }

    pub fn push(&mut self, s: BlueprintString) {
        debug_assert_eq!(s.pairs.layout().n_pairs, self.n_pairs);
        self.entries.push(s);
    }

    pub fn total_extras(&self) -> usize {
        self.entries.iter().map(|e| e.extra).sum()
    }

    /// Lays the extra ones out left to right in string order, so no extra column
    /// carries more than one 1.
    pub fn materialize(&self, t_extra: usize) -> Result<StringMultiset> {
        let needed = self.total_extras();
        if needed > t_extra {
            return Err(Error::InsufficientExtras { needed, available: t_extra });
        }
        let layout = Layout::new(self.n_pairs, t_extra);
        let mut next = 0;
        let members = self
            .entries
            .iter()
            .map(|e| {
                let mut s = BitString::zeros(layout);
                for i in 0..layout.pair_len() {
                    if e.pairs.get(i) {
                        s.set(i, true);
                    }
                }
                for j in next..next + e.extra {
                    s.set(layout.extra(j), true);
                }
                next += e.extra;
                s
            })
            .collect();
        Ok(StringMultiset { layout, members })
    }

    /// Text format: `<2n pair bits> +<e>` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{} +{}\n", e.pairs, e.extra));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut bp: Option<StringBlueprint> = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
            let (bits, extra) = line.split_once('+').ok_or_else(|| err("expected `<bits> +<e>`"))?;
            let bits = bits.trim();
            if bits.len() % 2 != 0 {
                return Err(err("pair section must have even length"));
            }
            let extra: usize = extra.trim().parse().map_err(|_| err("bad extra count"))?;
            let n = bits.len() / 2;
            let pairs = BitString::parse(Layout::new(n, 0), bits)?;
            let bp = bp.get_or_insert_with(|| StringBlueprint::new(n));
            if bp.n_pairs != n {
                return Err(err("all lines must have the same number of pairs"));
            }
            bp.push(BlueprintString { pairs, extra });
        }
        bp.ok_or(Error::EmptyMultiset)
    }
}

/// Multiset of equal-layout strings; duplicates are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringMultiset {
    layout: Layout,
    members: Vec<BitString>,
}

impl StringMultiset {
    pub fn new(layout: Layout, members: Vec<BitString>) -> Result<Self> {
        for m in &members {
            if m.layout() != layout {
                return Err(Error::LayoutMismatch(layout, m.layout()));
            }
        }
        Ok(StringMultiset { layout, members })
    }

    /// Raw text: one 0/1 line per string. Blank lines and `#` comments are skipped.
    pub fn parse_raw(layout: Option<Layout>, text: &str) -> Result<Self> {
        let mut members = Vec::new();
        let mut layout = layout;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let l = *layout.get_or_insert_with(|| {
                let len = line.chars().filter(|c| *c == '0' || *c == '1').count();
                Layout::new(0, len)
            });
            let s = BitString::parse(l, line).map_err(|e| Error::Parse { line: ln + 1, msg: e.to_string() })?;
            members.push(s);
        }
        let layout = layout.ok_or(Error::EmptyMultiset)?;
        Ok(StringMultiset { layout, members })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn members(&self) -> &[BitString] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn push(&mut self, s: BitString) -> Result<()> {
        if s.layout() != self.layout {
            return Err(Error::LayoutMismatch(self.layout, s.layout()));
        }
        self.members.push(s);
        Ok(())
    }

    pub fn distances(&self, mu: &BitString) -> Result<Vec<usize>> {
        self.members.iter().map(|m| m.hamming(mu)).collect()
    }

    pub fn total_distance(&self, mu: &BitString) -> Result<usize> {
        Ok(self.distances(mu)?.iter().sum())
    }

    /// Number of 1s in each column over the whole multiset.
    pub fn column_ones(&self) -> Vec<usize> {
        let mut ones = vec![0usize; self.layout.len()];
        for m in &self.members {
            for (wi, &w) in m.words().iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    ones[wi * 64 + b] += 1;
                    w &= w - 1;
                }
            }
        }
        ones
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(n: usize, t: usize, bits: &str) -> BitString {
        BitString::parse(Layout::new(n, t), bits).unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(s(2, 0, "0101").hamming(&s(2, 0, "0101")).unwrap(), 0);
        assert_eq!(s(2, 0, "0101").hamming(&s(2, 0, "0110")).unwrap(), 2);
        assert_eq!(s(1, 1, "10|0").hamming(&s(1, 1, "01|1")).unwrap(), 3);
    }

    #[test]
    fn hamming_rejects_mixed_layouts() {
        assert!(s(1, 1, "100").hamming(&s(0, 3, "100")).is_err());
    }

    #[test]
    fn complement_leaves_extras() {
        assert_eq!(s(2, 1, "1001|1").complement_on_pairs(), s(2, 1, "0110|1"));
        assert_eq!(s(2, 0, "0000").complement_on_pairs(), s(2, 0, "1111"));
    }

    #[test]
    fn materialize_packs_left_to_right() {
        let mut bp = StringBlueprint::new(1);
        bp.push(BlueprintString::new(1, 2));
        bp.push(BlueprintString::new(1, 0));
        let ms = bp.materialize(3).unwrap();
        assert_eq!(ms.members()[0].to_string(), "00110");
        assert_eq!(ms.members()[1].to_string(), "00000");
        assert!(matches!(bp.materialize(1), Err(Error::InsufficientExtras { needed: 2, available: 1 })));
    }

    #[test]
    fn blueprint_text_round_trip() {
        let bp = StringBlueprint::parse("1001 +2\n0110 +0\n").unwrap();
        assert_eq!(bp.n_pairs, 2);
        assert_eq!(bp.to_text(), "1001 +2\n0110 +0\n");
    }

    #[test]
    fn words_span_boundaries() {
        let l = Layout::new(40, 7);
        let mut a = BitString::zeros(l);
        a.set(63, true);
        a.set(64, true);
        a.set(86, true);
        assert_eq!(a.count_ones(), 3);
        assert_eq!(a.extra_ones(), 1);
        assert_eq!(a.hamming(&BitString::zeros(l)).unwrap(), 3);
    }

    fn blueprint_strategy() -> impl Strategy<Value = (usize, Vec<(Vec<bool>, usize)>)> {
        (1usize..4).prop_flat_map(|n| {
            (Just(n), prop::collection::vec((prop::collection::vec(any::<bool>(), 2 * n), 0usize..4), 1..6))
        })
    }

    proptest! {
        #[test]
        fn extra_columns_hold_at_most_one((n, rows) in blueprint_strategy(), slack in 0usize..4) {
            let mut bp = StringBlueprint::new(n);
            for (bits, e) in &rows {
                bp.push(BlueprintString { pairs: BitString::from_bits(Layout::new(n, 0), bits).unwrap(), extra: *e });
            }
            let t = bp.total_extras() + slack;
            let ms = bp.materialize(t).unwrap();
            let ones = ms.column_ones();
            for j in 0..t {
                prop_assert!(ones[2 * n + j] <= 1);
            }
            for (m, (_, e)) in ms.members().iter().zip(&rows) {
                prop_assert_eq!(m.extra_ones(), *e);
            }
        }

        #[test]
        fn complementary_distances_sum(n in 1usize..5, mu_bits in any::<u16>(), eta_bits in any::<u16>(), e1 in 0usize..4, e2 in 0usize..4) {
            let l = Layout::new(n, e1 + e2);
            let mut bp = StringBlueprint::new(n);
            let mut eta = BlueprintString::new(n, e1);
            for i in 0..2 * n {
                eta.pairs.set(i, (eta_bits >> i) & 1 == 1);
            }
            bp.push(eta.clone());
            bp.push(eta.complement(e2));
            let ms = bp.materialize(l.t_extra).unwrap();
            let mut mu = BitString::zeros(l);
            for i in 0..2 * n {
                mu.set(i, (mu_bits >> i) & 1 == 1);
            }
            let d = ms.distances(&mu).unwrap();
            prop_assert_eq!(d[0] + d[1], 2 * n + e1 + e2);
        }

        #[test]
        fn hamming_triangle(len in 1usize..100, a in prop::collection::vec(any::<bool>(), 100), b in prop::collection::vec(any::<bool>(), 100), c in prop::collection::vec(any::<bool>(), 100)) {
            let l = Layout::new(0, len);
            let a = BitString::from_bits(l, &a[..len]).unwrap();
            let b = BitString::from_bits(l, &b[..len]).unwrap();
            let c = BitString::from_bits(l, &c[..len]).unwrap();
            let ab = a.hamming(&b).unwrap();
            prop_assert_eq!(ab, b.hamming(&a).unwrap());
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(a.hamming(&c).unwrap() <= ab + b.hamming(&c).unwrap());
        }
    }
}
