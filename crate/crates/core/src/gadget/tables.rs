use crate::error::{Error, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::sync::OnceLock;

const FULL_CSV: &str = include_str!("../../data/full.csv");
const COMPLEMENT_CSV: &str = include_str!("../../data/complement.csv");
const FULL_PRINTED_CSV: &str = include_str!("../../data/full_printed.csv");
const COMPLEMENT_PRINTED_CSV: &str = include_str!("../../data/complement_printed.csv");
const KEY_CSV: &str = include_str!("../../data/key.csv");

const FULL_SHA256: &str = "98feeb9748bad8c16a12f21452e68697d9618e071953d24c79d4ef0522a47312";
const COMPLEMENT_SHA256: &str = "0c0339e35b5d99b6009f362658b3a73058f9167c61c89adb22a9ba938dae6135";
const FULL_PRINTED_SHA256: &str = "46059db56613eaec92538032bd836deb52d85729b67e4572c86fb5cdafbf6835";
const COMPLEMENT_PRINTED_SHA256: &str = "3484a7a0a6d3f63380993a0bd6362ad8b623c81e552c562feec612c5e9e06ddb";
const KEY_SHA256: &str = "548a1c1bdac03c3384594a34f785722f3c0b30847e74f3831870bde3f5e469cc";

/// Support-slot values of the eight median classes `M1..M8`; `M8` is the
/// class that falsifies the clause.
pub const CLASS_HEADINGS: [[bool; 6]; 8] = [
    [true, false, true, false, true, false],
    [true, false, true, false, false, true],
    [true, false, false, true, true, false],
    [false, true, true, false, true, false],
    [true, false, false, true, false, true],
    [false, true, true, false, false, true],
    [false, true, false, true, true, false],
    [false, true, false, true, false, true],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// The 50-row clause block.
    Full,
    /// The 26-row complement block.
    Complement,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::Full => "full",
            TableKind::Complement => "complement",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetRow {
    pub row: usize,
    /// Values on the six support slots, in key order.
    pub support: [bool; 6],
    /// Value of both coordinates of every pair outside the clause.
    pub kappa: bool,
    pub extra: usize,
}

#[derive(Debug, Clone)]
pub struct GadgetTable {
    pub kind: TableKind,
    pub rows: Vec<GadgetRow>,
}

impl GadgetTable {
    pub fn extra_sum(&self) -> usize {
        self.rows.iter().map(|r| r.extra).sum()
    }
}

#[derive(Deserialize)]
struct RawRow {
    row: usize,
    support: String,
    kappa: u8,
    extra: usize,
}

fn check_digest(name: &str, text: &str, want: &str) -> Result<()> {
    let got = hex::encode(Sha256::digest(text.as_bytes()));
    if got != want {
        return Err(Error::Gadget(format!("{name} checksum mismatch: {got}")));
    }
    Ok(())
}

fn parse_bits6(s: &str) -> Option<[bool; 6]> {
    let b = s.as_bytes();
    if b.len() != 6 {
        return None;
    }
    let mut out = [false; 6];
    for (o, &c) in out.iter_mut().zip(b) {
        *o = match c {
            b'0' => false,
            b'1' => true,
            _ => return None,
        };
    }
    Some(out)
}

fn load_table(kind: TableKind, text: &str, digest: &str, extra_sum: usize, rows: usize) -> Result<GadgetTable> {
    check_digest(kind.name(), text, digest)?;
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(text.as_bytes()).deserialize::<RawRow>() {
        let r = rec.map_err(|e| Error::Gadget(format!("{}: {e}", kind.name())))?;
        let support = parse_bits6(&r.support)
            .ok_or_else(|| Error::Gadget(format!("{} row {}: bad support {:?}", kind.name(), r.row, r.support)))?;
        if r.kappa > 1 {
            return Err(Error::Gadget(format!("{} row {}: fill value must be 0 or 1", kind.name(), r.row)));
        }
        out.push(GadgetRow { row: r.row, support, kappa: r.kappa == 1, extra: r.extra });
    }
    let t = GadgetTable { kind, rows: out };
    if t.rows.len() != rows || t.extra_sum() != extra_sum {
        return Err(Error::Gadget(format!(
            "{}: expected {rows} rows with extra sum {extra_sum}, got {} rows with sum {}",
            kind.name(),
            t.rows.len(),
            t.extra_sum()
        )));
    }
    Ok(t)
}

pub fn table(kind: TableKind) -> &'static GadgetTable {
    static T1: OnceLock<GadgetTable> = OnceLock::new();
    static T3: OnceLock<GadgetTable> = OnceLock::new();
    match kind {
        TableKind::Full => T1.get_or_init(|| load_table(kind, FULL_CSV, FULL_SHA256, 75, 50).expect("bundled table")),
        TableKind::Complement => {
            T3.get_or_init(|| load_table(kind, COMPLEMENT_CSV, COMPLEMENT_SHA256, 39, 26).expect("bundled table"))
        }
    }
}

/// A printed body cell: `n+c` / `n-c` relative to `n`, or a bare integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Rel(i64),
    Abs(i64),
}

impl Cell {
    pub fn parse(s: &str) -> Option<Cell> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('n') {
            if rest.is_empty() {
                return Some(Cell::Rel(0));
            }
            let (sign, digits) = rest.split_at(1);
            let v: i64 = digits.parse().ok()?;
            return match sign {
                "+" => Some(Cell::Rel(v)),
                "-" => Some(Cell::Rel(-v)),
                _ => None,
            };
        }
        s.parse().ok().map(Cell::Abs)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Cell::Rel(0) => write!(f, "n"),
            Cell::Rel(c) if c > 0 => write!(f, "n+{c}"),
            Cell::Rel(c) => write!(f, "n-{}", -c),
            Cell::Abs(v) => write!(f, "{v}"),
        }
    }
}

/// Printed body: one row of eight cells per gadget row.
pub fn printed_body(kind: TableKind) -> &'static [(usize, [Cell; 8])] {
    static P1: OnceLock<Vec<(usize, [Cell; 8])>> = OnceLock::new();
    static P3: OnceLock<Vec<(usize, [Cell; 8])>> = OnceLock::new();
    let load = |text: &str, digest: &str| -> Result<Vec<(usize, [Cell; 8])>> {
        check_digest(kind.name(), text, digest)?;
        let mut out = Vec::new();
        for rec in csv::Reader::from_reader(text.as_bytes()).records() {
            let rec = rec.map_err(|e| Error::Gadget(e.to_string()))?;
            let bad = || Error::Gadget(format!("bad printed record {rec:?}"));
            if rec.len() != 9 {
                return Err(bad());
            }
            let row: usize = rec[0].parse().map_err(|_| bad())?;
            let mut cells = [Cell::Rel(0); 8];
            for (j, c) in cells.iter_mut().enumerate() {
                *c = Cell::parse(&rec[j + 1]).ok_or_else(bad)?;
            }
            out.push((row, cells));
        }
        Ok(out)
    };
    match kind {
        TableKind::Full => P1.get_or_init(|| load(FULL_PRINTED_CSV, FULL_PRINTED_SHA256).expect("bundled table")),
        TableKind::Complement => {
            P3.get_or_init(|| load(COMPLEMENT_PRINTED_CSV, COMPLEMENT_PRINTED_SHA256).expect("bundled table"))
        }
    }
}

/// Which coordinate of a clause variable a support slot refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    X(usize),
    Y(usize),
}

/// Slot order for one sign pattern; literal positions `0..3` are the clause
/// variables sorted by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseKey {
    pub negated: [bool; 3],
    pub slots: [Slot; 6],
}

fn parse_slot(tok: &str) -> Option<Slot> {
    let b = tok.as_bytes();
    if b.len() != 2 {
        return None;
    }
    let pos = match b[1] {
        b'a' => 0,
        b'b' => 1,
        b'c' => 2,
        _ => return None,
    };
    match b[0] {
        b'x' => Some(Slot::X(pos)),
        b'y' => Some(Slot::Y(pos)),
        _ => None,
    }
}

fn load_keys() -> Result<Vec<ClauseKey>> {
    check_digest("key", KEY_CSV, KEY_SHA256)?;
    let mut keys = Vec::new();
    for rec in csv::Reader::from_reader(KEY_CSV.as_bytes()).records() {
        let rec = rec.map_err(|e| Error::Gadget(e.to_string()))?;
        let bad = || Error::Gadget(format!("bad key record {rec:?}"));
        let signs: Vec<bool> = rec[0].chars().map(|c| c == '-').collect();
        let slots: Vec<Slot> = rec[1].split_whitespace().map(parse_slot).collect::<Option<_>>().ok_or_else(bad)?;
        if signs.len() != 3 || slots.len() != 6 {
            return Err(bad());
        }
        let key = ClauseKey { negated: [signs[0], signs[1], signs[2]], slots: slots.try_into().unwrap() };
        // Positive literals list x before y, negated ones y before x.
        for pos in 0..3 {
            let want = if key.negated[pos] { [Slot::Y(pos), Slot::X(pos)] } else { [Slot::X(pos), Slot::Y(pos)] };
            if key.slots[2 * pos..2 * pos + 2] != want {
                return Err(bad());
            }
        }
        keys.push(key);
    }
    if keys.len() != 8 {
        return Err(Error::Gadget("key must list all eight sign patterns".into()));
    }
    Ok(keys)
}

pub fn clause_key(negated: [bool; 3]) -> &'static ClauseKey {
    static KEYS: OnceLock<Vec<ClauseKey>> = OnceLock::new();
    KEYS.get_or_init(|| load_keys().expect("bundled key"))
        .iter()
        .find(|k| k.negated == negated)
        .expect("all sign patterns present")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_load() {
        assert_eq!(table(TableKind::Full).extra_sum(), 75);
        assert_eq!(table(TableKind::Complement).extra_sum(), 39);
        let r1 = &table(TableKind::Full).rows[0];
        assert_eq!((r1.support, r1.kappa, r1.extra), ([false, true, false, false, false, false], false, 3));
        assert_eq!(printed_body(TableKind::Full).len(), 50);
        assert_eq!(printed_body(TableKind::Complement).len(), 26);
    }

    #[test]
    fn cells() {
        assert_eq!(Cell::parse("n+4"), Some(Cell::Rel(4)));
        assert_eq!(Cell::parse("n-3"), Some(Cell::Rel(-3)));
        assert_eq!(Cell::parse("n"), Some(Cell::Rel(0)));
        assert_eq!(Cell::parse("5"), Some(Cell::Abs(5)));
        assert_eq!(Cell::parse("m+1"), None);
        assert_eq!(Cell::Rel(-2).to_string(), "n-2");
    }

    #[test]
    fn key_negative_slots() {
        let k = clause_key([false, true, true]);
        assert_eq!(k.slots[2], Slot::Y(1));
        assert_eq!(k.slots[5], Slot::X(2));
    }

    #[test]
    fn pairs_are_complementary() {
        // Rows pair up complementary on support and fill value.
        for kind in [TableKind::Full, TableKind::Complement] {
            let rows = &table(kind).rows;
            let mut used = vec![false; rows.len()];
            for i in 0..rows.len() {
                if used[i] {
                    continue;
                }
                let want: Vec<bool> = rows[i].support.iter().map(|b| !b).collect();
                let j = (0..rows.len())
                    .find(|&j| !used[j] && j != i && rows[j].support[..] == want[..] && rows[j].kappa != rows[i].kappa)
                    .unwrap_or_else(|| panic!("{kind:?} row {} has no partner", rows[i].row));
                used[i] = true;
                used[j] = true;
            }
        }
    }
}
