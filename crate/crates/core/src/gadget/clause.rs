use super::tables::{clause_key, table, Slot, TableKind, CLASS_HEADINGS};
use crate::cnf::{is_d3_clause, Clause3};
use crate::error::{Error, Result};
use crate::strings::{BitString, BlueprintString, Layout, StringBlueprint};

fn sorted(clause: &Clause3) -> Clause3 {
    let mut c = *clause;
    c.sort_by_key(|l| l.var);
    c
}

/// One string per table row for `clause`: support slots placed by the clause
/// key, every other pair filled with the row's fill value, and `extra + q`
/// additional ones.
pub fn clause_block(clause: &Clause3, n: usize, kind: TableKind, q: usize) -> Result<StringBlueprint> {
    if !is_d3_clause(clause) || clause.iter().any(|l| l.var == 0 || l.var > n) {
        return Err(Error::Gadget(format!("clause {clause:?} is not a valid three-variable clause over {n} variables")));
    }
    let c = sorted(clause);
    let key = clause_key([c[0].negated, c[1].negated, c[2].negated]);
    let layout = Layout::new(n, 0);
    let mut out = StringBlueprint::new(n);
    for row in &table(kind).rows {
        let mut s = BlueprintString::new(n, row.extra + q);
        if row.kappa {
            for i in 0..layout.pair_len() {
                s.pairs.set(i, true);
            }
        }
        for (slot, &v) in key.slots.iter().zip(&row.support) {
            let idx = match *slot {
                Slot::X(pos) => layout.x(c[pos].var),
                Slot::Y(pos) => layout.y(c[pos].var),
            };
            s.pairs.set(idx, v);
        }
        out.push(s);
    }
    Ok(out)
}

/// Index `0..8` of the column class (`M1..M8`) an assignment induces on a
/// clause; `7` means the clause is falsified.
pub fn clause_class_of(clause: &Clause3, assignment: u64) -> usize {
    let c = sorted(clause);
    let pattern: Vec<bool> = c.iter().flat_map(|l| {
        let t = l.holds(assignment);
        [t, !t]
    }).collect();
    CLASS_HEADINGS.iter().position(|h| h[..] == pattern[..]).expect("every pattern is a heading")
}

/// A string with `x_v = y_v = 1` exactly for `v` in `ones` and `extra`
/// additional ones.
pub fn pair_block(n: usize, ones: &[usize], extra: usize) -> BlueprintString {
    let layout = Layout::new(n, 0);
    let mut pairs = BitString::zeros(layout);
    for &v in ones {
        pairs.set(layout.x(v), true);
        pairs.set(layout.y(v), true);
    }
    BlueprintString { pairs, extra }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Literal;
    use crate::median::{assignment_of_median, MedianSet};
    use crate::strings::StringMultiset;

    fn clause(a: i64, b: i64, c: i64) -> Clause3 {
        [Literal::from_dimacs(a), Literal::from_dimacs(b), Literal::from_dimacs(c)]
    }

    #[test]
    fn first_row_positive_clause() {
        let bp = clause_block(&clause(1, 2, 3), 3, TableKind::Full, 0).unwrap();
        assert_eq!(bp.entries.len(), 50);
        assert_eq!(bp.entries[0].pairs.to_string(), "010000");
        assert_eq!(bp.entries[0].extra, 3);
        assert_eq!(bp.total_extras(), 75);
    }

    #[test]
    fn last_row_mixed_clause() {
        // (v1 or not v3 or not v4) over n = 5: slots xa ya yb xb yc xc.
        let bp = clause_block(&clause(-3, 1, -4), 5, TableKind::Full, 2).unwrap();
        let s = &bp.entries[49];
        let l = Layout::new(5, 0);
        let got: Vec<bool> = [l.x(1), l.y(1), l.x(3), l.y(3), l.x(4), l.y(4), l.x(2), l.y(2), l.x(5), l.y(5)]
            .iter()
            .map(|&i| s.pairs.get(i))
            .collect();
        assert_eq!(got, [true, false, false, true, false, true, true, true, true, true]);
        assert_eq!(s.extra, 4);
        assert_eq!(bp.total_extras(), 75 + 50 * 2);
    }

    #[test]
    fn rejects_repeated_variables() {
        assert!(clause_block(&clause(1, 1, 2), 3, TableKind::Full, 0).is_err());
        assert!(clause_block(&clause(1, 2, 4), 3, TableKind::Full, 0).is_err());
    }

    #[test]
    fn classes() {
        let c = clause(1, -2, 3);
        assert_eq!(clause_class_of(&c, 0b000), 5); // F T F
        assert_eq!(clause_class_of(&c, 0b010), 7);
        assert_eq!(clause_class_of(&c, 0b101), 0);
    }

    fn block_distances(c: &Clause3, n: usize, kind: TableKind) {
        let bp = clause_block(c, n, kind, 0).unwrap();
        let b: StringMultiset = bp.materialize(bp.total_extras()).unwrap();
        let set = MedianSet::of(&b).unwrap();
        assert_eq!(set.ambiguous.len(), 2 * n);
        assert_eq!(set.base.count_ones(), 0);
        let expect_len = if kind == TableKind::Full { 50 } else { 26 };
        assert_eq!(b.len(), expect_len);
        for state in 0..1u64 << (2 * n) {
            let mu = set.median_at(state);
            let Ok(a) = assignment_of_median(&mu) else { continue };
            let mask = a.mask();
            let mut d: Vec<i64> = b.distances(&mu).unwrap().into_iter().map(|d| d as i64 - n as i64).collect();
            d.sort();
            let class = clause_class_of(c, mask);
            let want = super::super::verify::expected_class_multiset(kind, class);
            let mut want_list: Vec<i64> = want.iter().flat_map(|(&o, &m)| std::iter::repeat_n(o, m)).collect();
            want_list.sort();
            assert_eq!(d, want_list, "clause {c:?} assignment {mask:b}");
        }
    }

    #[test]
    fn concrete_distances_match_class_profiles() {
        for c in [clause(1, 2, 3), clause(-1, 2, -4), clause(-2, -3, -4), clause(1, -3, 4)] {
            block_distances(&c, 4, TableKind::Full);
            block_distances(&c, 4, TableKind::Complement);
        }
    }
}
