use crate::error::{Error, Result};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

/// Largest variable count the exhaustive counter accepts.
pub const BRUTE_FORCE_MAX_VARS: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    pub fn negate(self) -> Self {
        Literal { var: self.var, negated: !self.negated }
    }

    pub fn from_dimacs(v: i64) -> Self {
        Literal { var: v.unsigned_abs() as usize, negated: v < 0 }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn holds(self, assignment: u64) -> bool {
        ((assignment >> (self.var - 1)) & 1 == 1) != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "-v{}", self.var)
        } else {
            write!(f, "v{}", self.var)
        }
    }
}

pub type Clause3 = [Literal; 3];

/// Three distinct variables, no complementary pair.
pub fn is_d3_clause(c: &Clause3) -> bool {
    c[0].var != c[1].var && c[0].var != c[2].var && c[1].var != c[2].var
}

/// A 3-CNF whose clauses may repeat literals or be tautological.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf3 {
    pub n: usize,
    pub clauses: Vec<Clause3>,
}

/// A 3-CNF with three distinct variables in every clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D3Formula {
    n: usize,
    clauses: Vec<Clause3>,
}

impl D3Formula {
    pub fn new(n: usize, clauses: Vec<Clause3>) -> Result<Self> {
        for (i, c) in clauses.iter().enumerate() {
            if let Some(l) = c.iter().find(|l| l.var == 0 || l.var > n) {
                return Err(Error::Formula(format!("clause {} uses variable {} outside 1..={n}", i + 1, l.var)));
            }
            if !is_d3_clause(c) {
                return Err(Error::Formula(format!("clause {} does not have three distinct variables", i + 1)));
            }
        }
        Ok(D3Formula { n, clauses })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause3] {
        &self.clauses
    }

    pub fn covers_all_variables(&self) -> bool {
        let mut seen = vec![false; self.n + 1];
        for c in &self.clauses {
            for l in c {
                seen[l.var] = true;
            }
        }
        seen[1..].iter().all(|&s| s)
    }

    pub fn satisfied_by(&self, assignment: u64) -> bool {
        satisfies(&self.clauses, assignment)
    }

    pub fn brute_force_count(&self) -> Result<u64> {
        brute_force_count(self.n, &self.clauses)
    }

    pub fn to_cnf(&self) -> Cnf3 {
        Cnf3 { n: self.n, clauses: self.clauses.clone() }
    }

    pub fn to_dimacs(&self) -> String {
        self.to_cnf().to_dimacs()
    }
}

impl Cnf3 {
    pub fn brute_force_count(&self) -> Result<u64> {
        brute_force_count(self.n, &self.clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

fn satisfies(clauses: &[Clause3], assignment: u64) -> bool {
    clauses.iter().all(|c| c.iter().any(|l| l.holds(assignment)))
}

/// Counts satisfying assignments by scanning all `2^n` of them.
pub fn brute_force_count(n: usize, clauses: &[Clause3]) -> Result<u64> {
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(Error::TooLarge(format!("{n} variables exceed the exhaustive limit of {BRUTE_FORCE_MAX_VARS}")));
    }
    // Each clause is falsified exactly when every literal is false.
    let masks: Vec<(u64, u64)> = clauses
        .iter()
        .map(|c| {
            c.iter().fold((0u64, 0u64), |(pos, neg), l| {
                let bit = 1u64 << (l.var - 1);
                if l.negated {
                    (pos, neg | bit)
                } else {
                    (pos | bit, neg)
                }
            })
        })
        .collect();
    let total = 1u64 << n;
    let chunk = 1u64 << 12;
    Ok((0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            (lo..hi)
                .filter(|&a| masks.iter().all(|&(pos, neg)| (a & pos) != 0 || (!a & neg) != 0))
                .count() as u64
        })
        .sum())
}

/// Parses DIMACS CNF with clauses of width at most 3. Shorter clauses are
/// padded by repetition: `[a]` becomes `[a, a, a]` and `[a, b]` becomes `[a, b, b]`.
pub fn parse_dimacs(text: &str) -> Result<Cnf3> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        last_line = line_no;
        let err = |msg: String| Error::Dimacs { line: line_no, msg };
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err("duplicate header".into()));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(err(format!("malformed header {line:?}")));
            }
            let n = parts[2].parse().map_err(|_| err(format!("bad variable count {:?}", parts[2])))?;
            let m = parts[3].parse().map_err(|_| err(format!("bad clause count {:?}", parts[3])))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| err("clause before header".into()))?;
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| err(format!("bad literal {tok:?}")))?;
            if v == 0 {
                clauses.push(pad(&current).ok_or_else(|| err("empty clause".into()))?);
                current.clear();
                continue;
            }
            if v.unsigned_abs() as usize > n {
                return Err(err(format!("variable {} out of range 1..={n}", v.abs())));
            }
            if current.len() == 3 {
                return Err(err("clause has more than three literals".into()));
            }
            current.push(Literal::from_dimacs(v));
        }
    }
    let (n, m) = header.ok_or(Error::Dimacs { line: last_line, msg: "missing header".into() })?;
    if !current.is_empty() {
        clauses.push(pad(&current).unwrap());
    }
    if clauses.len() != m {
        return Err(Error::Dimacs {
            line: last_line,
            msg: format!("header declares {m} clauses but {} were found", clauses.len()),
        });
    }
    Ok(Cnf3 { n, clauses })
}

fn pad(lits: &[Literal]) -> Option<Clause3> {
    match lits {
        [a] => Some([*a, *a, *a]),
        [a, b] => Some([*a, *b, *b]),
        [a, b, c] => Some([*a, *b, *c]),
        _ => None,
    }
}

/// Result of rewriting a 3-CNF into an equivalent D3 formula.
#[derive(Debug, Clone)]
pub struct D3Reduction {
    pub formula: D3Formula,
    /// `#SAT(input) = 2^free_vars * #SAT(formula)`.
    pub free_vars: usize,
    /// `var_map[i]` is the input variable behind output variable `i + 1`.
    pub var_map: Vec<usize>,
}

/// Smallest variables of `1..=n` not in `used`.
fn fresh(n: usize, used: &[usize], count: usize) -> Vec<usize> {
    (1..=n).filter(|v| !used.contains(v)).take(count).collect()
}

/// Rewrites clauses with repeated variables into clauses over distinct variables
/// with the same satisfying assignments, drops tautologies, then renumbers the
/// variables that remain in use.
pub fn to_d3cnf(cnf: &Cnf3) -> Result<D3Reduction> {
    let n = cnf.n;
    if n < 3 {
        return Err(Error::Formula(format!("need at least 3 variables to form distinct clauses, got {n}")));
    }
    let mut out: Vec<Clause3> = Vec::new();
    for c in &cnf.clauses {
        if c.iter().any(|a| c.iter().any(|b| a.var == b.var && a.negated != b.negated)) {
            continue;
        }
        let mut lits: Vec<Literal> = Vec::new();
        for l in c {
            if !lits.contains(l) {
                lits.push(*l);
            }
        }
        match lits.as_slice() {
            [a, b, c] => out.push([*a, *b, *c]),
            [a, b] => {
                let g = fresh(n, &[a.var, b.var], 1)[0];
                out.push([*a, *b, Literal::pos(g)]);
                out.push([*a, *b, Literal::neg(g)]);
            }
            [a] => {
                let f = fresh(n, &[a.var], 2);
                let (b, g) = (f[0], f[1]);
                for (sb, sg) in [(false, false), (false, true), (true, false), (true, true)] {
                    out.push([*a, Literal { var: b, negated: sb }, Literal { var: g, negated: sg }]);
                }
            }
            _ => unreachable!("a clause has between one and three distinct literals"),
        }
    }
    let mut used = vec![false; n + 1];
    for c in &out {
        for l in c {
            used[l.var] = true;
        }
    }
    let var_map: Vec<usize> = (1..=n).filter(|&v| used[v]).collect();
    let mut new_index = vec![0usize; n + 1];
    for (i, &v) in var_map.iter().enumerate() {
        new_index[v] = i + 1;
    }
    let clauses = out
        .into_iter()
        .map(|c| c.map(|l| Literal { var: new_index[l.var], negated: l.negated }))
        .collect();
    let formula = D3Formula::new(var_map.len(), clauses)?;
    Ok(D3Reduction { free_vars: n - var_map.len(), formula, var_map })
}

/// Appends, for each variable `v_i`, a fresh `w_i = v_{n+i}` and four clauses
/// forcing `w_i = not v_i` (indices wrap so `v_{n+1} = v_1`).
pub fn xor_augment(f: &D3Formula) -> Result<D3Formula> {
    let n = f.n();
    if n < 2 {
        return Err(Error::Formula(format!("xor augmentation needs at least 2 variables, got {n}")));
    }
    let mut clauses = f.clauses().to_vec();
    for i in 1..=n {
        let v = i;
        let w = n + i;
        let next = if i == n { 1 } else { i + 1 };
        for (neg_vw, neg_next) in [(false, false), (false, true), (true, false), (true, true)] {
            clauses.push([
                Literal { var: v, negated: neg_vw },
                Literal { var: w, negated: neg_vw },
                Literal { var: next, negated: neg_next },
            ]);
        }
    }
    D3Formula::new(2 * n, clauses)
}

/// A D3 formula with `k` clauses over `n` variables, each clause on a uniformly
/// chosen variable triple with uniform signs.
pub fn random_d3<R: Rng>(rng: &mut R, n: usize, k: usize) -> D3Formula {
    assert!(n >= 3);
    let clauses = (0..k)
        .map(|_| {
            let vars = sample(rng, n, 3);
            let mut c = [Literal::pos(1); 3];
            for (slot, v) in c.iter_mut().zip(vars.iter()) {
                *slot = Literal { var: v + 1, negated: rng.gen() };
            }
            c
        })
        .collect();
    D3Formula::new(n, clauses).expect("random clauses use distinct in-range variables")
}

/// All eight sign patterns over `v1, v2, v3`: unsatisfiable.
pub fn all_sign_patterns() -> D3Formula {
    let clauses = (0..8u8)
        .map(|s| [1, 2, 3].map(|v| Literal { var: v, negated: (s >> (v - 1)) & 1 == 1 }))
        .collect();
    D3Formula::new(3, clauses).unwrap()
}
