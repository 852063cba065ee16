use super::ParsimonyTree;
use crate::error::{Error, Result};
use crate::partition::factorial;
use crate::strings::BitString;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

/// Candidate sets from the bottom-up pass, one bitmask per vertex:
/// bit 0 means "0 is a candidate", bit 1 means "1 is a candidate".
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FitchState {
    pub sets: Vec<u8>,
}

const HAS0: u8 = 1;
const HAS1: u8 = 2;
const BOTH: u8 = 3;

fn mask_of(bit: bool) -> u8 {
    if bit {
        HAS1
    } else {
        HAS0
    }
}

impl FitchState {
    pub fn contains(&self, v: usize, bit: bool) -> bool {
        self.sets[v] & mask_of(bit) != 0
    }

    pub fn is_both(&self, v: usize) -> bool {
        self.sets[v] == BOTH
    }

    /// Members of the set at `v`, in increasing order.
    pub fn members(&self, v: usize) -> Vec<bool> {
        [false, true].into_iter().filter(|&b| self.contains(v, b)).collect()
    }
}

fn check_coord(tree: &ParsimonyTree, coord: usize) -> Result<()> {
    if coord >= tree.layout().len() {
        return Err(Error::Tree(format!("coordinate {coord} out of range for {}", tree.layout())));
    }
    Ok(())
}

fn leaf_bit(tree: &ParsimonyTree, v: usize, coord: usize) -> bool {
    tree.leaf_label(v).expect("leaves are labeled").get(coord)
}

pub fn fitch_sets(tree: &ParsimonyTree, coord: usize) -> Result<FitchState> {
    check_coord(tree, coord)?;
    let mut sets = vec![0u8; tree.len()];
    for v in 0..tree.len() {
        sets[v] = match tree.children(v) {
            None => mask_of(leaf_bit(tree, v, coord)),
            Some([a, b]) => {
                let i = sets[a] & sets[b];
                if i != 0 {
                    i
                } else {
                    sets[a] | sets[b]
                }
            }
        };
    }
    Ok(FitchState { sets })
}

/// Number of union steps in the bottom-up pass, which is the parsimony score.
pub fn fitch_score(tree: &ParsimonyTree, coord: usize) -> Result<u64> {
    let st = fitch_sets(tree, coord)?;
    Ok((0..tree.len())
        .filter_map(|v| tree.children(v))
        .filter(|&[a, b]| st.sets[a] & st.sets[b] == 0)
        .count() as u64)
}

/// Top-down pass from a chosen root value: a child keeps its parent's value
/// when that value is one of its candidates and flips otherwise.
pub fn fitch(tree: &ParsimonyTree, coord: usize, root_choice: bool) -> Result<Vec<bool>> {
    let st = fitch_sets(tree, coord)?;
    fitch_from(tree, &st, root_choice)
}

fn fitch_from(tree: &ParsimonyTree, st: &FitchState, root_choice: bool) -> Result<Vec<bool>> {
    let root = tree.root();
    if !st.contains(root, root_choice) {
        return Err(Error::Tree(format!("root value {} is not a candidate at the root", root_choice as u8)));
    }
    let mut lab = vec![false; tree.len()];
    lab[root] = root_choice;
    for v in (0..root).rev() {
        let p = lab[tree.parent(v).expect("non-root vertices have parents")];
        lab[v] = if st.contains(v, p) { p } else { !p };
    }
    Ok(lab)
}

/// One labeling per candidate root value.
pub fn fitch_solutions(tree: &ParsimonyTree, coord: usize) -> Result<Vec<Vec<bool>>> {
    let st = fitch_sets(tree, coord)?;
    st.members(tree.root()).into_iter().map(|r| fitch_from(tree, &st, r)).collect()
}

/// Stands in for an impossible label.
pub const INF: u32 = u32::MAX;

/// Minimum number of changed edges below each vertex given its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SankoffState {
    pub s0: Vec<u32>,
    pub s1: Vec<u32>,
}

impl SankoffState {
    pub fn score(&self) -> u32 {
        let r = self.s0.len() - 1;
        self.s0[r].min(self.s1[r])
    }

    fn s(&self, v: usize, bit: bool) -> u32 {
        if bit {
            self.s1[v]
        } else {
            self.s0[v]
        }
    }

    /// Optimal labels of `v` below a parent labeled `p` (or at the root when `p` is `None`).
    fn options(&self, v: usize, p: Option<bool>) -> (bool, bool) {
        let cost = |b: bool| {
            let flip = u32::from(p.is_some_and(|p| p != b));
            self.s(v, b).saturating_add(flip)
        };
        let (c0, c1) = (cost(false), cost(true));
        (c0 <= c1, c1 <= c0)
    }
}

pub fn sankoff(tree: &ParsimonyTree, coord: usize) -> Result<SankoffState> {
    check_coord(tree, coord)?;
    let n = tree.len();
    let (mut s0, mut s1) = (vec![0u32; n], vec![0u32; n]);
    for v in 0..n {
        match tree.children(v) {
            None => {
                let bit = leaf_bit(tree, v, coord);
                s0[v] = if bit { INF } else { 0 };
                s1[v] = if bit { 0 } else { INF };
            }
            Some(ch) => {
                let (mut a0, mut a1) = (0u32, 0u32);
                for c in ch {
                    a0 = a0.saturating_add(s0[c].min(s1[c].saturating_add(1)));
                    a1 = a1.saturating_add(s0[c].saturating_add(1).min(s1[c]));
                }
                s0[v] = a0;
                s1[v] = a1;
            }
        }
    }
    Ok(SankoffState { s0, s1 })
}

/// Number of labelings reachable through the tie choices of the top-down pass.
pub fn sankoff_solution_count(tree: &ParsimonyTree, coord: usize) -> Result<BigUint> {
    let st = sankoff(tree, coord)?;
    Ok(solution_count(tree, &st))
}

fn solution_count(tree: &ParsimonyTree, st: &SankoffState) -> BigUint {
    solution_count_small(tree, st).map(BigUint::from).unwrap_or_else(|| solution_count_big(tree, st))
}

/// Same recurrence as [`solution_count_big`] in `u128`; `None` on overflow.
fn solution_count_small(tree: &ParsimonyTree, st: &SankoffState) -> Option<u128> {
    let mut below: Vec<[u128; 2]> = Vec::with_capacity(tree.len());
    for v in 0..tree.len() {
        let entry = match tree.children(v) {
            None => [1, 1],
            Some(ch) => {
                let mut e = [1u128; 2];
                for (b, slot) in e.iter_mut().enumerate() {
                    for &c in &ch {
                        let (o0, o1) = st.options(c, Some(b == 1));
                        let s = if o0 { below[c][0] } else { 0 }.checked_add(if o1 { below[c][1] } else { 0 })?;
                        *slot = slot.checked_mul(s)?;
                    }
                }
                e
            }
        };
        below.push(entry);
    }
    let root = tree.root();
    let (o0, o1) = st.options(root, None);
    if o0 { below[root][0] } else { 0 }.checked_add(if o1 { below[root][1] } else { 0 })
}

fn solution_count_big(tree: &ParsimonyTree, st: &SankoffState) -> BigUint {
    // below[v][b]: optimal completions of the subtree of v when v is labeled b.
    let mut below: Vec<[BigUint; 2]> = Vec::with_capacity(tree.len());
    for v in 0..tree.len() {
        let entry = match tree.children(v) {
            None => [BigUint::one(), BigUint::one()],
            Some(ch) => [false, true].map(|b| {
                ch.iter().fold(BigUint::one(), |acc, &c| {
                    let (o0, o1) = st.options(c, Some(b));
                    let mut s = BigUint::zero();
                    if o0 {
                        s += &below[c][0];
                    }
                    if o1 {
                        s += &below[c][1];
                    }
                    acc * s
                })
            }),
        };
        below.push(entry);
    }
    let root = tree.root();
    let (o0, o1) = st.options(root, None);
    let mut total = BigUint::zero();
    if o0 {
        total += &below[root][0];
    }
    if o1 {
        total += &below[root][1];
    }
    total
}

/// Every labeling produced by some sequence of tie choices in the top-down
/// pass, in a fixed order. Refuses when there are more than `cap`.
pub fn sankoff_solutions(tree: &ParsimonyTree, coord: usize, cap: u64) -> Result<Vec<Vec<bool>>> {
    let st = sankoff(tree, coord)?;
    let count = solution_count(tree, &st);
    if count > BigUint::from(cap) {
        return Err(Error::TooLarge(format!("coordinate {coord} has {count} optimal labelings (cap {cap})")));
    }
    Ok(solutions_of(tree, &st))
}

fn solutions_of(tree: &ParsimonyTree, st: &SankoffState) -> Vec<Vec<bool>> {
    let n = tree.len();
    let mut out = Vec::new();
    // Root first: vertices are visited in decreasing index order.
    let mut stack = vec![(0usize, vec![false; n])];
    while let Some((mut pos, mut lab)) = stack.pop() {
        while pos < n {
            let v = n - 1 - pos;
            let (o0, o1) = st.options(v, tree.parent(v).map(|p| lab[p]));
            if o0 && o1 {
                let mut other = lab.clone();
                other[v] = true;
                stack.push((pos + 1, other));
            }
            lab[v] = !o0;
            pos += 1;
        }
        out.push(lab);
    }
    out
}

/// Whether a vertex with both candidates never sits below a vertex with one.
pub fn fitch_completeness_condition(tree: &ParsimonyTree, coord: usize) -> Result<bool> {
    let st = fitch_sets(tree, coord)?;
    Ok(tree.edges().all(|(p, c)| !st.is_both(c) || st.is_both(p)))
}

pub fn parsimony_score(tree: &ParsimonyTree) -> u64 {
    (0..tree.layout().len())
        .into_par_iter()
        .map(|c| u64::from(sankoff(tree, c).expect("coordinate in range").score()))
        .sum()
}

/// Number of most parsimonious labelings of the whole tree.
pub fn mpl_count(tree: &ParsimonyTree) -> BigUint {
    let counts: Vec<BigUint> = (0..tree.layout().len())
        .into_par_iter()
        .map(|c| sankoff_solution_count(tree, c).expect("coordinate in range"))
        .collect();
    counts.into_iter().fold(BigUint::one(), |a, b| a * b)
}

/// Per-coordinate solutions: coordinates with a unique optimum are folded
/// into `base`, the rest vary.
struct Factored {
    base: Vec<Vec<bool>>,
    varying: Vec<(usize, Vec<Vec<bool>>)>,
}

fn factor(tree: &ParsimonyTree, cap: u64) -> Result<Factored> {
    let len = tree.layout().len();
    let counts: Vec<BigUint> =
        (0..len).into_par_iter().map(|c| sankoff_solution_count(tree, c).expect("coordinate in range")).collect();
    let total = counts.iter().fold(BigUint::one(), |a, b| a * b);
    if total > BigUint::from(cap) {
        return Err(Error::TooLarge(format!("{total} most parsimonious labelings (cap {cap})")));
    }
    let per: Vec<Vec<Vec<bool>>> = (0..len)
        .into_par_iter()
        .map(|c| solutions_of(tree, &sankoff(tree, c).expect("coordinate in range")))
        .collect();
    let mut base = Vec::with_capacity(len);
    let mut varying = Vec::new();
    for (c, mut sols) in per.into_iter().enumerate() {
        if sols.len() == 1 {
            base.push(sols.pop().unwrap());
        } else {
            base.push(sols[0].clone());
            varying.push((c, sols));
        }
    }
    Ok(Factored { base, varying })
}

/// Lazy Cartesian product of the per-coordinate optimal labelings; yields one
/// string per vertex.
pub struct MplIter {
    labels: Vec<BitString>,
    varying: Vec<(usize, Vec<Vec<bool>>)>,
    idx: Vec<usize>,
    done: bool,
}

impl MplIter {
    fn set_coord(&mut self, slot: usize, choice: usize) {
        let (c, sols) = &self.varying[slot];
        for (v, &b) in sols[choice].iter().enumerate() {
            self.labels[v].set(*c, b);
        }
    }
}

impl Iterator for MplIter {
    type Item = Vec<BitString>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.labels.clone();
        // Odometer step, last varying coordinate fastest.
        let mut slot = self.varying.len();
        loop {
            if slot == 0 {
                self.done = true;
                break;
            }
            slot -= 1;
            self.idx[slot] += 1;
            if self.idx[slot] < self.varying[slot].1.len() {
                self.set_coord(slot, self.idx[slot]);
                break;
            }
            self.idx[slot] = 0;
            self.set_coord(slot, 0);
        }
        Some(out)
    }
}

pub fn enumerate_mpl(tree: &ParsimonyTree, cap: u64) -> Result<MplIter> {
    let f = factor(tree, cap)?;
    let layout = tree.layout();
    let mut labels = vec![BitString::zeros(layout); tree.len()];
    for (c, lab) in f.base.iter().enumerate() {
        for (v, &b) in lab.iter().enumerate() {
            if b {
                labels[v].set(c, true);
            }
        }
    }
    let idx = vec![0; f.varying.len()];
    Ok(MplIter { labels, varying: f.varying, idx, done: false })
}

/// Sum over most parsimonious labelings of the product of `H!` over edges.
pub fn scenario_count_tree(tree: &ParsimonyTree, cap: u64) -> Result<BigUint> {
    let f = factor(tree, cap)?;
    let n = tree.len();
    let root = tree.root();
    let parent: Vec<usize> = (0..n).map(|v| tree.parent(v).unwrap_or(v)).collect();
    let diff = |lab: &[bool], v: usize| v != root && lab[v] != lab[parent[v]];
    let mut h = vec![0usize; n];
    for lab in &f.base {
        for (v, hv) in h.iter_mut().enumerate() {
            *hv += usize::from(diff(lab, v));
        }
    }
    let k = f.varying.len();
    // Replace each varying coordinate's base contribution with its current choice (index 0 = base).
    let max_h = tree.layout().len();
    let facts: Vec<BigUint> = (0..=max_h).map(factorial).collect();
    let mut hist = vec![0u64; max_h + 1];
    for v in 0..n {
        if v != root {
            hist[h[v]] += 1;
        }
    }
    let product = |hist: &[u64]| {
        hist.iter().enumerate().skip(2).filter(|(_, &c)| c > 0).fold(BigUint::one(), |acc, (d, &c)| {
            acc * num_traits::pow(facts[d].clone(), c as usize)
        })
    };
    let mut idx = vec![0usize; k];
    let mut total = BigUint::zero();
    loop {
        total += product(&hist);
        let mut slot = k;
        loop {
            if slot == 0 {
                return Ok(total);
            }
            slot -= 1;
            let sols = &f.varying[slot].1;
            let old = idx[slot];
            let new = if old + 1 < sols.len() { old + 1 } else { 0 };
            for v in 0..n {
                let (a, b) = (diff(&sols[old], v), diff(&sols[new], v));
                if a != b {
                    hist[h[v]] -= 1;
                    h[v] = if b { h[v] + 1 } else { h[v] - 1 };
                    hist[h[v]] += 1;
                }
            }
            idx[slot] = new;
            if new != 0 {
                break;
            }
        }
    }
}
