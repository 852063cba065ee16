use super::{ParsimonyTree, TreeBuilder};
use crate::cnf::{xor_augment, Clause3, D3Formula};
use crate::error::{Error, Result};
use crate::primes::sieve;
use crate::scalar::ln_biguint;
use crate::strings::{BitString, Layout};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqKind {
    Plain,
    /// Placeholder for a unit subtree; indexes `PsiSkeleton::units`.
    Unit(usize),
}

/// A vertex carrying equations `coordinate = value`.
#[derive(Debug, Clone, Serialize)]
pub struct EqNode {
    pub equations: Vec<(usize, bool)>,
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    pub kind: EqKind,
}

/// A binary tree built top-down whose vertices carry equations; a leaf's
/// string is determined by the equations on its path from the root.
/// Vertex 0 is the root and children always follow their parent.
#[derive(Debug, Clone, Serialize)]
pub struct EquationTree {
    pub nodes: Vec<EqNode>,
}

impl EquationTree {
    fn new() -> Self {
        EquationTree { nodes: vec![EqNode { equations: Vec::new(), parent: None, children: None, kind: EqKind::Plain }] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    fn split(&mut self, v: usize, left: Vec<(usize, bool)>, right: Vec<(usize, bool)>) -> [usize; 2] {
        debug_assert!(self.nodes[v].children.is_none());
        let mut ids = [0; 2];
        for (slot, equations) in [left, right].into_iter().enumerate() {
            self.nodes.push(EqNode { equations, parent: Some(v), children: None, kind: EqKind::Plain });
            ids[slot] = self.nodes.len() - 1;
        }
        self.nodes[v].children = Some(ids);
        ids
    }

    /// Turns leaf `at` into the root of a sorting tree on `coords` and returns
    /// its 8 leaves from left to right.
    fn hang_sorting(&mut self, at: usize, coords: [usize; 3]) -> Vec<usize> {
        let mut frontier = vec![at];
        for c in coords {
            frontier = frontier.into_iter().flat_map(|v| self.split(v, vec![(c, false)], vec![(c, true)])).collect();
        }
        frontier
    }

    /// Turns leaf `at` into a comb with `count` slots (left-most slot deepest)
    /// and returns the slots from left to right.
    fn comb_slots(&mut self, at: usize, count: usize) -> Vec<usize> {
        let mut slots = Vec::with_capacity(count);
        let mut cur = at;
        for _ in 1..count {
            let [l, r] = self.split(cur, Vec::new(), Vec::new());
            slots.push(r);
            cur = l;
        }
        slots.push(cur);
        slots.reverse();
        slots
    }

    /// Leaves from left to right.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            match self.nodes[v].children {
                Some([l, r]) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(v),
            }
        }
        out
    }

    /// Equations on the path from the root to `v`, root first.
    pub fn inherited(&self, v: usize) -> Vec<(usize, bool)> {
        let mut path = vec![v];
        while let Some(p) = self.nodes[*path.last().unwrap()].parent {
            path.push(p);
        }
        path.iter().rev().flat_map(|&u| self.nodes[u].equations.iter().copied()).collect()
    }

    /// Children of `v` in left-to-right order, or `None` for a leaf.
    pub fn children(&self, v: usize) -> Option<[usize; 2]> {
        self.nodes[v].children
    }
}

/// The complete height-3 tree that splits on `a`, then `b`, then `c`: the
/// leaf reached by the path `(i, j, k)` (0 = left) carries `a=i, b=j, c=k`.
pub fn build_sorting_tree(a: usize, b: usize, c: usize) -> Result<EquationTree> {
    if a == b || a == c || b == c {
        return Err(Error::Tree(format!("sorting coordinates must be distinct, got {a}, {b}, {c}")));
    }
    let mut t = EquationTree::new();
    t.hang_sorting(0, [a, b, c]);
    Ok(t)
}

/// Supplies the concrete unit subtree for a clause with the given literal
/// signs. Coordinates `0..3` of its leaf labels are the clause's three
/// literal coordinates in clause order; the rest are its extra coordinates.
pub trait UnitProvider: Send + Sync {
    fn unit_tree(&self, negated: [bool; 3]) -> Result<ParsimonyTree>;
}

/// Size and scenario counts of the externally defined unit subtree.
#[derive(Clone)]
pub struct UnitGadgetDescriptor {
    pub leaf_count: usize,
    pub coord_count: usize,
    /// Scenario product over the unit when the root assignment satisfies the clause.
    pub sat_count: BigUint,
    /// The same product when the clause is falsified.
    pub unsat_count: BigUint,
    pub provider: Option<Arc<dyn UnitProvider>>,
}

impl fmt::Debug for UnitGadgetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitGadgetDescriptor")
            .field("leaf_count", &self.leaf_count)
            .field("coord_count", &self.coord_count)
            .field("sat_count", &self.sat_count)
            .field("unsat_count", &self.unsat_count)
            .field("provider", &self.provider.is_some())
            .finish()
    }
}

impl UnitGadgetDescriptor {
    /// 248 leaves over 151 coordinates; `2^156 3^64` scenarios when
    /// satisfied and `2^136 3^76` when not. No concrete subtree is attached.
    pub fn published() -> Self {
        let c = |a: u32, b: u32| BigUint::from(2u32).pow(a) * BigUint::from(3u32).pow(b);
        UnitGadgetDescriptor {
            leaf_count: 248,
            coord_count: 151,
            sat_count: c(156, 64),
            unsat_count: c(136, 76),
            provider: None,
        }
    }

    pub fn with_provider(mut self, provider: Arc<dyn UnitProvider>) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn extras_per_unit(&self) -> usize {
        self.coord_count - 3
    }

    fn validate(&self) -> Result<()> {
        if self.coord_count < 3 || self.leaf_count == 0 || self.sat_count.is_zero() || self.unsat_count.is_zero() {
            return Err(Error::Tree(format!("invalid unit descriptor {self:?}")));
        }
        Ok(())
    }
}

/// One unit-subtree placeholder of the skeleton.
#[derive(Debug, Clone, Serialize)]
pub struct UnitSlot {
    /// Clause index, `0..k+4n`.
    pub block: usize,
    /// Position in the clause's comb.
    pub copy: usize,
    pub clause: Clause3,
    /// String coordinates of the clause's literals, in clause order.
    pub coords: [usize; 3],
    /// The extra coordinates reserved for this copy.
    pub extras: Range<usize>,
}

/// The tree for `Psi(G)` with unit subtrees left abstract.
#[derive(Debug, Clone, Serialize)]
pub struct PsiSkeleton {
    /// Variables of the original formula (pairs in the string layout).
    pub n: usize,
    /// Clauses of the original formula.
    pub k: usize,
    pub blocks: usize,
    pub units_per_comb: usize,
    pub extras_per_unit: usize,
    pub layout: Layout,
    pub tree: EquationTree,
    pub units: Vec<UnitSlot>,
    /// Root of each clause's subtree.
    pub block_roots: Vec<usize>,
    pub verdict: SeparationVerdict,
}

/// Copies of the unit subtree per comb.
pub fn units_per_comb(n: usize, k: usize) -> usize {
    16 * n * n + 8 * k * n
}

/// String coordinate of variable `v` of `Psi` over `n` base variables: `v_i`
/// is `x_i`, `w_i = v_{n+i}` is `y_i`.
fn coord_of(layout: &Layout, n: usize, var: usize) -> usize {
    if var <= n {
        layout.x(var)
    } else {
        layout.y(var - n)
    }
}

/// Literal coordinates `C` of a clause and the three other coordinates `O` of
/// the three pairs it is sorted on. A clause touching only two pairs borrows
/// the next pair in cyclic order.
fn clause_coords(clause: &Clause3, n: usize) -> ([usize; 3], [usize; 3], [usize; 3]) {
    let l = Layout::new(n, 0);
    let c = clause.map(|lit| coord_of(&l, n, lit.var));
    let partner = |x: usize| x ^ 1;
    let pair = |x: usize| x / 2;
    let mut pairs: Vec<usize> = c.iter().map(|&x| pair(x)).collect();
    pairs.dedup();
    let mut sorted = pairs.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() == 3 {
        return (c, c.map(partner), [pair(c[0]), pair(c[1]), pair(c[2])]);
    }
    let double = sorted.iter().copied().find(|&p| c.iter().filter(|&&x| pair(x) == p).count() == 2).unwrap();
    let single = sorted.iter().copied().find(|&p| p != double).unwrap();
    let third = (1..n).map(|d| (single + d) % n).find(|&p| p != double && p != single).unwrap();
    let lone = c.iter().copied().find(|&x| pair(x) == single).unwrap();
    (c, [partner(lone), 2 * third, 2 * third + 1], [double, single, third])
}

/// Recovers the base formula when `psi` is an xor augmentation.
fn split_psi(psi: &D3Formula) -> Result<(usize, usize)> {
    let total = psi.n();
    if total % 2 != 0 || total < 6 {
        return Err(Error::Tree(format!("expected an xor-augmented formula over 2n >= 6 variables, got {total}")));
    }
    let n = total / 2;
    let k = psi
        .k()
        .checked_sub(4 * n)
        .ok_or_else(|| Error::Tree("too few clauses for an xor-augmented formula".into()))?;
    let base_clauses = psi.clauses()[..k].to_vec();
    if base_clauses.iter().flatten().any(|l| l.var > n) {
        return Err(Error::Tree("base clauses may only use the first n variables".into()));
    }
    let base = D3Formula::new(n, base_clauses)?;
    if xor_augment(&base)?.clauses() != psi.clauses() {
        return Err(Error::Tree("formula is not the xor augmentation of its first k clauses".into()));
    }
    Ok((n, k))
}

/// Builds the tree shape and every non-unit leaf's equations for an
/// xor-augmented formula.
pub fn build_psi_skeleton(psi: &D3Formula, unit: &UnitGadgetDescriptor) -> Result<PsiSkeleton> {
    unit.validate()?;
    let (n, k) = split_psi(psi)?;
    let blocks = psi.k();
    let units_per_comb = units_per_comb(n, k);
    let e = unit.extras_per_unit();
    let layout = Layout::new(n, blocks * units_per_comb * e);
    let mut tree = EquationTree::new();
    let block_roots = tree.comb_slots(0, blocks);
    let mut units = Vec::with_capacity(blocks * units_per_comb);
    for (i, clause) in psi.clauses().iter().enumerate() {
        let (c, o, touched) = clause_coords(clause, n);
        let outside: Vec<usize> = (0..n).filter(|p| !touched.contains(p)).collect();
        let fill = |v: bool| outside.iter().flat_map(|&p| [(2 * p, v), (2 * p + 1, v)]).collect();
        let [l, r] = tree.split(block_roots[i], fill(false), fill(true));
        let mut hang = tree.hang_sorting(l, o);
        hang.extend(tree.hang_sorting(r, o));
        for (idx, &leaf) in hang.iter().enumerate() {
            if idx > 0 {
                tree.hang_sorting(leaf, c);
                continue;
            }
            for (j, slot) in tree.comb_slots(leaf, units_per_comb).into_iter().enumerate() {
                let start = (i * units_per_comb + j) * e;
                tree.nodes[slot].kind = EqKind::Unit(units.len());
                units.push(UnitSlot { block: i, copy: j, clause: *clause, coords: c, extras: start..start + e });
            }
        }
    }
    let verdict = verify_tree_separation(n, k, unit)?;
    Ok(PsiSkeleton {
        n,
        k,
        blocks,
        units_per_comb,
        extras_per_unit: e,
        layout,
        tree,
        units,
        block_roots,
        verdict,
    })
}

impl PsiSkeleton {
    /// Leaves that are not unit placeholders.
    pub fn plain_leaves(&self) -> Vec<usize> {
        self.tree.leaves().into_iter().filter(|&v| self.tree.nodes[v].kind == EqKind::Plain).collect()
    }

    /// Pair-coordinate values fixed by the equations above each vertex, as
    /// `(known mask, values)` with `x_1` at bit 0.
    fn inherited_masks(&self) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = Vec::with_capacity(self.tree.len());
        for (v, node) in self.tree.nodes.iter().enumerate() {
            let (mut known, mut vals) = node.parent.map(|p| out[p]).unwrap_or((0, 0));
            for &(c, b) in &node.equations {
                known |= 1 << c;
                if b {
                    vals |= 1 << c;
                } else {
                    vals &= !(1 << c);
                }
            }
            debug_assert_eq!(out.len(), v);
            out.push((known, vals));
        }
        out
    }

    /// The string a plain leaf inherits, extras all zero.
    pub fn plain_leaf_label(&self, v: usize) -> Result<BitString> {
        let (known, vals) = self.inherited_masks()[v];
        self.label_from(known, vals)
    }

    fn label_from(&self, known: u64, vals: u64) -> Result<BitString> {
        let full = if self.n == 32 { u64::MAX } else { (1u64 << (2 * self.n)) - 1 };
        if known != full {
            return Err(Error::Tree("leaf equations leave a pair coordinate undetermined".into()));
        }
        let mut s = BitString::zeros(self.layout);
        for i in 0..2 * self.n {
            if vals >> i & 1 == 1 {
                s.set(i, true);
            }
        }
        Ok(s)
    }

    /// Substitutes the provider's unit subtrees for the placeholders and
    /// returns the fully labeled tree. Refuses above `max_vertices`.
    pub fn materialize(&self, unit: &UnitGadgetDescriptor, max_vertices: usize) -> Result<ParsimonyTree> {
        let provider =
            unit.provider.as_ref().ok_or_else(|| Error::Tree("concrete unit subtrees need a unit provider".into()))?;
        if self.n > 32 {
            return Err(Error::TooLarge(format!("{} variables", self.n)));
        }
        if unit.extras_per_unit() != self.extras_per_unit {
            return Err(Error::Tree("unit descriptor does not match the skeleton".into()));
        }
        let mut cache: BTreeMap<[bool; 3], ParsimonyTree> = BTreeMap::new();
        for u in &self.units {
            let neg = u.clause.map(|l| l.negated);
            if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(neg) {
                let t = provider.unit_tree(neg)?;
                if t.layout().len() != unit.coord_count || t.leaves().count() != unit.leaf_count {
                    return Err(Error::Tree(format!(
                        "unit subtree has {} coordinates and {} leaves, descriptor says {} and {}",
                        t.layout().len(),
                        t.leaves().count(),
                        unit.coord_count,
                        unit.leaf_count
                    )));
                }
                slot.insert(t);
            }
        }
        let unit_vertices = cache.values().map(ParsimonyTree::len).max().unwrap_or(1);
        let estimate = self.tree.len() + self.units.len() * (unit_vertices - 1);
        if estimate > max_vertices {
            return Err(Error::TooLarge(format!("materialized tree would have {estimate} vertices (cap {max_vertices})")));
        }
        let masks = self.inherited_masks();
        let mut b = TreeBuilder::new(self.layout);
        let mut id = vec![usize::MAX; self.tree.len()];
        // Children have larger indices than parents, so a reverse sweep is a valid bottom-up order.
        for v in (0..self.tree.len()).rev() {
            let node = &self.tree.nodes[v];
            id[v] = match (node.children, node.kind) {
                (Some([l, r]), _) => b.join(id[l], id[r])?,
                (None, EqKind::Plain) => b.leaf(None, self.label_from(masks[v].0, masks[v].1)?)?,
                (None, EqKind::Unit(ui)) => {
                    let slot = &self.units[ui];
                    let ut = &cache[&slot.clause.map(|l| l.negated)];
                    self.graft_unit(&mut b, ut, slot, masks[v])?
                }
            };
        }
        b.finish()
    }

    fn graft_unit(&self, b: &mut TreeBuilder, ut: &ParsimonyTree, slot: &UnitSlot, mask: (u64, u64)) -> Result<usize> {
        let (mut known, vals) = mask;
        for &c in &slot.coords {
            known |= 1 << c;
        }
        let base = self.label_from(known, vals & !slot.coords.iter().fold(0u64, |m, &c| m | 1 << c))?;
        let mut id = vec![0; ut.len()];
        for u in 0..ut.len() {
            id[u] = match ut.children(u) {
                Some([l, r]) => b.join(id[l], id[r])?,
                None => {
                    let src = ut.leaf_label(u).expect("leaves are labeled");
                    let mut s = base.clone();
                    for (i, &c) in slot.coords.iter().enumerate() {
                        s.set(c, src.get(i));
                    }
                    for (j, e) in slot.extras.clone().enumerate() {
                        s.set(self.layout.extra(e), src.get(3 + j));
                    }
                    b.leaf(None, s)?
                }
            };
        }
        Ok(id[ut.root()])
    }
}

/// A positive rational kept as a product of integer bases raised to signed
/// powers; bases are primes except possibly one cofactor per input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Factors(BTreeMap<BigUint, i64>);

const TRIAL_LIMIT: u64 = 1 << 16;

impl Factors {
    fn add(&mut self, base: BigUint, e: i64) {
        if base.is_one() || e == 0 {
            return;
        }
        let slot = self.0.entry(base.clone()).or_insert(0);
        *slot += e;
        if *slot == 0 {
            self.0.remove(&base);
        }
    }

    fn of(v: &BigUint) -> Self {
        debug_assert!(!v.is_zero());
        let mut out = Factors::default();
        let mut rest = v.clone();
        for p in sieve(TRIAL_LIMIT) {
            let pb = BigUint::from(p);
            if &pb * &pb > rest {
                break;
            }
            let mut e = 0;
            loop {
                let (q, r) = rest.div_rem(&pb);
                if !r.is_zero() {
                    break;
                }
                rest = q;
                e += 1;
            }
            out.add(pb, e);
        }
        out.add(rest, 1);
        out
    }

    fn factorial(d: usize) -> Self {
        let mut out = Factors::default();
        for p in sieve(d as u64) {
            let (mut e, mut q) = (0i64, d as u64);
            while q > 0 {
                q /= p;
                e += q as i64;
            }
            out.add(BigUint::from(p), e);
        }
        out
    }

    fn times(mut self, other: &Factors, power: i64) -> Self {
        for (b, &e) in &other.0 {
            self.add(b.clone(), e * power);
        }
        self
    }

    fn ln(&self) -> f64 {
        self.0.iter().map(|(b, &e)| e as f64 * ln_biguint(b)).sum()
    }

    /// `value < 1`, decided in the log domain when the margin exceeds a
    /// rounding bound and exactly otherwise.
    fn below_one(&self) -> bool {
        let s = self.ln();
        let scale: f64 = self.0.iter().map(|(b, &e)| (e.unsigned_abs() as f64) * (ln_biguint(b) + 1.0)).sum();
        let bound = scale * (self.0.len() as f64 + 2.0) * f64::EPSILON * 16.0;
        if s < -bound {
            return true;
        }
        if s > bound {
            return false;
        }
        let (mut num, mut den) = (BigUint::one(), BigUint::one());
        for (b, &e) in &self.0 {
            let p = num_traits::pow(b.clone(), e.unsigned_abs() as usize);
            if e > 0 {
                num *= p;
            } else {
                den *= p;
            }
        }
        num < den
    }
}

/// Outcome of the separation inequality `2^{2n} B_bad / B_good < 1`.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationVerdict {
    pub n: usize,
    pub k: usize,
    /// Clauses after xor augmentation, `k + 4n`.
    pub blocks: usize,
    pub units_per_comb: usize,
    /// `unsat_count / sat_count`, the per-unit factor raised to `units_per_comb`.
    pub unit_ratio: String,
    /// `ln(2^{2n} B_bad / B_good)` with the satisfied-unit count in `B_good`.
    pub ln_ratio: f64,
    pub holds: bool,
    /// The same quantity when `B_good` is built from the falsified-unit count.
    pub ln_ratio_printed: f64,
    pub holds_printed: bool,
    /// Whether the ratio equals `2^{2n} (unsat/sat)^U binom(2n-6, n-3)^{k+4n}` exactly.
    pub closed_form_matches: bool,
}

/// Evaluates the separation inequality for a base formula with `n`
/// variables and `k` clauses.
pub fn verify_tree_separation(n: usize, k: usize, unit: &UnitGadgetDescriptor) -> Result<SeparationVerdict> {
    unit.validate()?;
    if n < 3 {
        return Err(Error::Tree(format!("need at least 3 variables, got {n}")));
    }
    let u = units_per_comb(n, k) as i64;
    let blocks = (k + 4 * n) as i64;
    let sat = Factors::of(&unit.sat_count);
    let unsat = Factors::of(&unit.unsat_count);
    let half = Factors::factorial(n - 3);
    let full = Factors::factorial(2 * n - 6);
    let mpls = Factors::default().times(&Factors::of(&BigUint::from(2u32)), 2 * n as i64);

    let good_block = |unit_count: &Factors| Factors::default().times(&half, 2).times(unit_count, u);
    let bad_block = |unit_count: &Factors| Factors::default().times(&full, 1).times(unit_count, u);
    let b_bad = Factors::default().times(&bad_block(&unsat), 1).times(&bad_block(&sat), blocks - 1);
    let ratio_for = |good_unit: &Factors| {
        let b_good = Factors::default().times(&good_block(good_unit), blocks);
        mpls.clone().times(&b_bad, 1).times(&b_good, -1)
    };
    let ratio = ratio_for(&sat);
    let printed = ratio_for(&unsat);
    let closed = mpls
        .clone()
        .times(&unsat, u)
        .times(&sat, -u)
        .times(&full, blocks)
        .times(&half, -2 * blocks);
    let g = unit.unsat_count.gcd(&unit.sat_count);
    Ok(SeparationVerdict {
        n,
        k,
        blocks: blocks as usize,
        units_per_comb: u as usize,
        unit_ratio: format!("{}/{}", &unit.unsat_count / &g, &unit.sat_count / &g),
        ln_ratio: ratio.ln(),
        holds: ratio.below_one(),
        ln_ratio_printed: printed.ln(),
        holds_printed: printed.below_one(),
        closed_form_matches: ratio == closed,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{fitch_completeness_condition, fitch_sets, mpl_count, parse_labels};
    use super::*;
    use crate::cnf::Literal;

    #[test]
    fn sorting_tree_shape() {
        let t = build_sorting_tree(4, 1, 7).unwrap();
        assert_eq!((t.len(), t.edge_count()), (15, 14));
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 8);
        // left, right, left
        assert_eq!(t.inherited(leaves[2]), vec![(4, false), (1, true), (7, false)]);
        for v in 1..t.len() {
            assert_eq!(t.nodes[v].equations.len(), 1);
        }
        assert!(build_sorting_tree(1, 1, 2).is_err());
    }

    #[test]
    fn pair_coordinates_of_clauses() {
        let c = [Literal::pos(1), Literal::neg(2), Literal::pos(3)];
        let (cc, o, _) = clause_coords(&c, 4);
        assert_eq!((cc, o), ([0, 2, 4], [1, 3, 5]));
        // v_4, w_4, v_1 over n = 4: borrows pair 2 (v_2/w_2).
        let c = [Literal::pos(4), Literal::pos(8), Literal::neg(1)];
        let (cc, o, touched) = clause_coords(&c, 4);
        assert_eq!((cc, o, touched), ([6, 7, 0], [1, 2, 3], [3, 0, 1]));
    }

    fn psi(n: usize, clauses: Vec<Clause3>) -> D3Formula {
        xor_augment(&D3Formula::new(n, clauses).unwrap()).unwrap()
    }

    #[test]
    fn skeleton_shape() {
        let f = psi(3, vec![[Literal::pos(1), Literal::pos(2), Literal::neg(3)]]);
        let s = build_psi_skeleton(&f, &UnitGadgetDescriptor::published()).unwrap();
        assert_eq!((s.units_per_comb, s.blocks), (168, 13));
        assert_eq!(s.units.len(), 13 * 168);
        assert_eq!(s.layout.t_extra, 148 * 168 * 13);
        assert_eq!(s.plain_leaves().len(), 13 * 15 * 8);
        assert!(s.verdict.holds && !s.verdict.holds_printed && s.verdict.closed_form_matches);
        // Every edge inside a sorting copy changes exactly one coordinate of the inherited strings.
        for &leaf in &s.plain_leaves() {
            let mut v = leaf;
            for _ in 0..6 {
                assert_eq!(s.tree.nodes[v].equations.len(), 1);
                v = s.tree.nodes[v].parent.unwrap();
            }
        }
        assert!(s.materialize(&UnitGadgetDescriptor::published(), usize::MAX).is_err());
        let bad = D3Formula::new(6, f.clauses()[..5].to_vec()).unwrap();
        assert!(build_psi_skeleton(&bad, &UnitGadgetDescriptor::published()).is_err());
    }

    /// Two leaves: all three literal coordinates 0 with the extra set, and all 1.
    struct Cherry;

    impl UnitProvider for Cherry {
        fn unit_tree(&self, _: [bool; 3]) -> Result<ParsimonyTree> {
            let labels = parse_labels("A\t0001\nB\t1110\n", None)?;
            ParsimonyTree::parse("(A,B);", &labels)
        }
    }

    fn cherry_unit() -> UnitGadgetDescriptor {
        UnitGadgetDescriptor {
            leaf_count: 2,
            coord_count: 4,
            sat_count: BigUint::from(2u32),
            unsat_count: BigUint::from(1u32),
            provider: Some(Arc::new(Cherry)),
        }
    }

    #[test]
    fn materialized_reduction_tree() {
        let f = psi(3, vec![[Literal::pos(1), Literal::neg(2), Literal::pos(3)]]);
        let unit = cherry_unit();
        let s = build_psi_skeleton(&f, &unit).unwrap();
        assert!(s.materialize(&unit, 100).unwrap_err().is_guard());
        let t = s.materialize(&unit, 1 << 20).unwrap();
        let pair_len = t.layout().pair_len();
        for c in 0..pair_len {
            assert!(fitch_completeness_condition(&t, c).unwrap(), "coordinate {c}");
            assert!(fitch_sets(&t, c).unwrap().is_both(t.root()));
        }
        for c in [pair_len, t.layout().len() - 1] {
            let st = fitch_sets(&t, c).unwrap();
            assert!(!st.is_both(t.root()));
        }
        assert_eq!(mpl_count(&t), BigUint::from(64u32));
        // Plain leaves are complete and carry no extras.
        for v in s.plain_leaves().into_iter().take(50) {
            assert_eq!(s.plain_leaf_label(v).unwrap().extra_ones(), 0);
        }
    }

    #[test]
    fn separation_small_cases() {
        let unit = UnitGadgetDescriptor::published();
        let v = verify_tree_separation(3, 1, &unit).unwrap();
        assert_eq!(v.units_per_comb, 168);
        assert!((v.ln_ratio - (-110.07)).abs() < 0.1, "{}", v.ln_ratio);
        assert_eq!(v.unit_ratio, "531441/1048576");
        assert!(v.holds && v.closed_form_matches && !v.holds_printed);
        let v = verify_tree_separation(4, 2, &unit).unwrap();
        assert!(v.holds && v.closed_form_matches);
        assert!(verify_tree_separation(2, 1, &unit).is_err());
    }

    #[test]
    fn factor_arithmetic() {
        let f = Factors::factorial(10);
        assert_eq!(f, Factors::of(&BigUint::from(3_628_800u32)));
        let big = BigUint::from(1_000_003u64) * BigUint::from(1_000_033u64);
        let g = Factors::of(&big);
        assert_eq!(g.0.len(), 1);
        let near = Factors::default().times(&f, 1).times(&Factors::of(&BigUint::from(3_628_801u32)), -1);
        assert!(near.below_one());
        assert!(!Factors::default().times(&near, -1).below_one());
    }
}
