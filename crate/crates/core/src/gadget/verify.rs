use super::tables::{printed_body, table, Cell, TableKind, CLASS_HEADINGS};
use serde::Serialize;
use std::collections::BTreeMap;

/// Printed cells known to disagree with the recomputed value, as `(row, class)`
/// with `class` in `1..=8`.
const FULL_KNOWN_TYPOS: &[(usize, usize)] = &[(15, 1), (50, 8)];

/// Distance profile, as offsets from `n` with multiplicities, of a median in
/// column class `class` (`0..8`) against one clause block.
pub fn expected_class_multiset(kind: TableKind, class: usize) -> BTreeMap<i64, usize> {
    let satisfied = class < 7;
    let pairs: &[(i64, usize)] = match (kind, satisfied) {
        (TableKind::Full, true) => &[(-1, 7), (0, 6), (1, 12), (2, 12), (3, 6), (4, 7)],
        (TableKind::Full, false) => &[(-2, 1), (-1, 6), (0, 3), (1, 15), (2, 15), (3, 3), (4, 6), (5, 1)],
        (TableKind::Complement, true) => &[(-2, 1), (-1, 3), (0, 3), (1, 6), (2, 6), (3, 3), (4, 3), (5, 1)],
        (TableKind::Complement, false) => &[(-1, 4), (0, 6), (1, 3), (2, 3), (3, 6), (4, 4)],
    };
    pairs.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellMismatch {
    pub row: usize,
    /// Column class, `1..=8`.
    pub class: usize,
    pub printed: String,
    pub recomputed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassCheck {
    pub class: usize,
    pub expected: BTreeMap<i64, usize>,
    pub recomputed: BTreeMap<i64, usize>,
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableReport {
    pub table: TableKind,
    pub rows: usize,
    /// Every printed cell that differs from its recomputed value.
    pub mismatches: Vec<CellMismatch>,
    pub known_typos: Vec<(usize, usize)>,
    /// Mismatches not on the known-typo list.
    pub unexpected: Vec<CellMismatch>,
    /// Known typos whose printed cell actually agrees.
    pub missing_known: Vec<(usize, usize)>,
    pub classes: Vec<ClassCheck>,
}

impl TableReport {
    pub fn multisets_match(&self) -> bool {
        self.classes.iter().all(|c| c.matches)
    }

    /// Printed body agrees except on exactly the known typos, and every class
    /// profile matches.
    pub fn passes(&self) -> bool {
        self.unexpected.is_empty() && self.missing_known.is_empty() && self.multisets_match()
    }
}

/// Recomputes every body cell from the support, fill and extra columns (as a
/// symbolic offset from `n`) and compares against the printed body and the
/// per-class distance profiles.
pub fn verify_distance_tables(kind: TableKind) -> TableReport {
    let t = table(kind);
    let printed = printed_body(kind);
    let known: Vec<(usize, usize)> = match kind {
        TableKind::Full => FULL_KNOWN_TYPOS.to_vec(),
        TableKind::Complement => Vec::new(),
    };
    let mut mismatches = Vec::new();
    let mut columns = vec![BTreeMap::<i64, usize>::new(); 8];
    for row in &t.rows {
        let cells = printed.iter().find(|(r, _)| *r == row.row).map(|(_, c)| c);
        for (j, heading) in CLASS_HEADINGS.iter().enumerate() {
            let support_dist = row.support.iter().zip(heading).filter(|(a, b)| a != b).count() as i64;
            // Each of the n-3 outside pairs is (fill, fill) against a 01/10 median pair.
            let offset = support_dist - 3 + row.extra as i64;
            *columns[j].entry(offset).or_default() += 1;
            let recomputed = Cell::Rel(offset);
            match cells {
                Some(c) if c[j] == recomputed => {}
                _ => mismatches.push(CellMismatch {
                    row: row.row,
                    class: j + 1,
                    printed: cells.map(|c| c[j].to_string()).unwrap_or_else(|| "missing".into()),
                    recomputed: recomputed.to_string(),
                }),
            }
        }
    }
    let unexpected = mismatches.iter().filter(|m| !known.contains(&(m.row, m.class))).cloned().collect();
    let missing_known =
        known.iter().copied().filter(|&(r, c)| !mismatches.iter().any(|m| m.row == r && m.class == c)).collect();
    let classes = columns
        .into_iter()
        .enumerate()
        .map(|(j, recomputed)| {
            let expected = expected_class_multiset(kind, j);
            ClassCheck { class: j + 1, matches: expected == recomputed, expected, recomputed }
        })
        .collect();
    TableReport { table: kind, rows: t.rows.len(), mismatches, known_typos: known, unexpected, missing_known, classes }
}
