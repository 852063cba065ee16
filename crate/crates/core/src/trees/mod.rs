//! Rooted binary trees with bit-string leaf labels, small parsimony and the
//! tree reduction from #D3SAT.

mod parsimony;
mod reduction;

pub use parsimony::{
    enumerate_mpl, fitch, fitch_completeness_condition, fitch_score, fitch_sets, fitch_solutions, mpl_count,
    parsimony_score, sankoff, sankoff_solution_count, sankoff_solutions, scenario_count_tree, FitchState, MplIter,
    SankoffState, INF,
};
pub use reduction::{
    build_psi_skeleton, build_sorting_tree, verify_tree_separation, EqKind, EqNode, EquationTree, PsiSkeleton,
    units_per_comb, SeparationVerdict, UnitGadgetDescriptor, UnitProvider, UnitSlot,
};

use crate::error::{Error, Result};
use crate::strings::{BitString, Layout};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
struct Node {
    parent: Option<usize>,
    children: Option<[usize; 2]>,
    name: Option<String>,
    label: Option<BitString>,
}

/// A rooted binary tree whose leaves carry equal-layout bit strings.
///
/// Vertices are numbered so that children precede their parent; the root is
/// the last vertex.
#[derive(Debug, Clone)]
pub struct ParsimonyTree {
    layout: Layout,
    nodes: Vec<Node>,
}

impl ParsimonyTree {
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn children(&self, v: usize) -> Option<[usize; 2]> {
        self.nodes[v].children
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].children.is_none()
    }

    pub fn name(&self, v: usize) -> Option<&str> {
        self.nodes[v].name.as_deref()
    }

    pub fn leaf_label(&self, v: usize) -> Option<&BitString> {
        self.nodes[v].label.as_ref()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&v| self.is_leaf(v))
    }

    /// `(parent, child)` for every edge, ordered by child.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).filter_map(|v| self.nodes[v].parent.map(|p| (p, v)))
    }

    pub fn to_newick(&self) -> String {
        fn go(t: &ParsimonyTree, v: usize, out: &mut String) {
            match t.children(v) {
                Some([a, b]) => {
                    out.push('(');
                    go(t, a, out);
                    out.push(',');
                    go(t, b, out);
                    out.push(')');
                }
                None => match t.name(v) {
                    Some(n) => out.push_str(n),
                    None => out.push_str(&format!("L{v}")),
                },
            }
        }
        let mut s = String::new();
        go(self, self.root(), &mut s);
        s.push(';');
        s
    }

    /// `name<TAB>bits` lines for every leaf, in vertex order.
    pub fn labels_text(&self) -> String {
        self.leaves()
            .map(|v| {
                let name = self.name(v).map(str::to_string).unwrap_or_else(|| format!("L{v}"));
                format!("{name}\t{}\n", self.nodes[v].label.as_ref().expect("leaves are labeled"))
            })
            .collect()
    }

    /// Parses `((A,B),(C,D));` with leaf labels taken from `labels`.
    pub fn parse(newick: &str, labels: &BTreeMap<String, BitString>) -> Result<Self> {
        let layout = labels
            .values()
            .next()
            .map(BitString::layout)
            .ok_or_else(|| Error::Tree("no leaf labels given".into()))?;
        let mut b = TreeBuilder::new(layout);
        let mut p = NewickParser { chars: newick.chars().collect(), pos: 0, seen: BTreeMap::new() };
        p.subtree(&mut b, labels)?;
        p.skip_ws();
        if p.peek() != Some(';') {
            return Err(p.error("expected ';'"));
        }
        p.pos += 1;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(p.error("trailing input after ';'"));
        }
        b.finish()
    }
}

/// Reads `name<TAB>bits` lines. Blank lines and `#` comments are skipped. The
/// layout defaults to a plain string of the first label's length.
pub fn parse_labels(text: &str, layout: Option<Layout>) -> Result<BTreeMap<String, BitString>> {
    let mut out = BTreeMap::new();
    let mut layout = layout;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: ln + 1, msg };
        let (name, bits) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err("expected `name<TAB>bits`".into()))?;
        if !valid_name(name) {
            return Err(err(format!("bad leaf name {name:?}")));
        }
        let bits = bits.trim();
        let l = *layout.get_or_insert_with(|| Layout::new(0, bits.chars().filter(|c| matches!(c, '0' | '1')).count()));
        let s = BitString::parse(l, bits).map_err(|e| err(e.to_string()))?;
        if out.insert(name.to_string(), s).is_some() {
            return Err(err(format!("duplicate leaf name {name:?}")));
        }
    }
    Ok(out)
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct NewickParser {
    chars: Vec<char>,
    pos: usize,
    seen: BTreeMap<String, ()>,
}

impl NewickParser {
    fn error(&self, msg: &str) -> Error {
        Error::Tree(format!("newick offset {}: {msg}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {c:?}")))
        }
    }

    fn subtree(&mut self, b: &mut TreeBuilder, labels: &BTreeMap<String, BitString>) -> Result<usize> {
        self.skip_ws();
        if self.peek() == Some('(') {
            self.pos += 1;
            let l = self.subtree(b, labels)?;
            self.expect(',')?;
            let r = self.subtree(b, labels)?;
            self.skip_ws();
            if self.peek() == Some(',') {
                return Err(self.error("only binary trees are supported"));
            }
            self.expect(')')?;
            return b.join(l, r);
        }
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a leaf name or '('"));
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        if self.seen.insert(name.clone(), ()).is_some() {
            return Err(self.error(&format!("leaf {name} appears twice")));
        }
        let label = labels.get(&name).ok_or_else(|| self.error(&format!("no label for leaf {name}")))?;
        b.leaf(Some(&name), label.clone())
    }
}

/// Bottom-up construction: leaves first, then joins.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
    layout: Layout,
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new(layout: Layout) -> Self {
        TreeBuilder { layout, nodes: Vec::new() }
    }

    pub fn leaf(&mut self, name: Option<&str>, label: BitString) -> Result<usize> {
        if label.layout() != self.layout {
            return Err(Error::LayoutMismatch(self.layout, label.layout()));
        }
        self.nodes.push(Node { parent: None, children: None, name: name.map(str::to_string), label: Some(label) });
        Ok(self.nodes.len() - 1)
    }

    pub fn join(&mut self, a: usize, b: usize) -> Result<usize> {
        let n = self.nodes.len();
        if a == b || a >= n || b >= n {
            return Err(Error::Tree(format!("cannot join vertices {a} and {b}")));
        }
        if self.nodes[a].parent.is_some() || self.nodes[b].parent.is_some() {
            return Err(Error::Tree(format!("vertex {a} or {b} already has a parent")));
        }
        self.nodes[a].parent = Some(n);
        self.nodes[b].parent = Some(n);
        self.nodes.push(Node { parent: None, children: Some([a, b]), name: None, label: None });
        Ok(n)
    }

    pub fn finish(self) -> Result<ParsimonyTree> {
        let roots = self.nodes.iter().filter(|n| n.parent.is_none()).count();
        if roots != 1 {
            return Err(Error::Tree(format!("expected one root, found {roots}")));
        }
        Ok(ParsimonyTree { layout: self.layout, nodes: self.nodes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(pairs: &[(&str, &str)]) -> BTreeMap<String, BitString> {
        let text: String = pairs.iter().map(|(n, b)| format!("{n}\t{b}\n")).collect();
        parse_labels(&text, None).unwrap()
    }

    #[test]
    fn newick_round_trip() {
        let l = labels(&[("A", "00"), ("B", "01"), ("C", "10"), ("D", "11")]);
        let t = ParsimonyTree::parse(" ((A, B),(C,D)) ;", &l).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.leaves().count(), 4);
        assert_eq!(t.to_newick(), "((A,B),(C,D));");
        assert_eq!(t.edges().count(), 6);
        assert_eq!(t.parent(t.root()), None);
    }

    #[test]
    fn newick_errors() {
        let l = labels(&[("A", "0"), ("B", "1"), ("C", "1")]);
        assert!(ParsimonyTree::parse("(A,B,C);", &l).is_err());
        assert!(ParsimonyTree::parse("(A,A);", &l).is_err());
        assert!(ParsimonyTree::parse("(A,Z);", &l).is_err());
        assert!(ParsimonyTree::parse("(A,B)", &l).is_err());
        assert!(ParsimonyTree::parse("(A,B);x", &l).is_err());
        assert!(ParsimonyTree::parse("A;", &l).unwrap().len() == 1);
    }

    #[test]
    fn label_errors() {
        assert!(parse_labels("A 01\nB 0", None).is_err());
        assert!(parse_labels("A 01\nA 10", None).is_err());
        assert!(parse_labels("A-1 01", None).is_err());
        assert!(parse_labels("A 0x", None).is_err());
    }

    #[test]
    fn builder_rejects_forests() {
        let l = Layout::new(0, 1);
        let mut b = TreeBuilder::new(l);
        let a = b.leaf(None, BitString::zeros(l)).unwrap();
        let c = b.leaf(None, BitString::zeros(l)).unwrap();
        b.leaf(None, BitString::zeros(l)).unwrap();
        let j = b.join(a, c).unwrap();
        assert!(b.join(a, j).is_err());
        assert!(b.clone().finish().is_err());
    }
}
