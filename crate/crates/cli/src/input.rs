use crate::Failure;
use medz_core::cnf::{parse_dimacs, Cnf3, D3Formula};
use medz_core::partition::WeightFunction;
use medz_core::trees::{parse_labels, ParsimonyTree};
use medz_core::{Layout, StringBlueprint, StringMultiset};
use std::path::Path;

pub fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StringFormat {
    /// Blueprint if any line carries `+<e>`, raw otherwise.
    Auto,
    Raw,
    Blueprint,
}

pub struct StringsArgs<'a> {
    pub path: &'a Path,
    pub format: StringFormat,
    pub pairs: usize,
    pub extras: Option<usize>,
}

pub fn load_strings(a: &StringsArgs) -> Result<StringMultiset, Failure> {
    let text = read(a.path)?;
    let blueprint = match a.format {
        StringFormat::Raw => false,
        StringFormat::Blueprint => true,
        StringFormat::Auto => text.lines().any(|l| !l.trim_start().starts_with('#') && l.contains('+')),
    };
    if blueprint {
        let bp = StringBlueprint::parse(&text)?;
        let t = a.extras.unwrap_or_else(|| bp.total_extras());
        return Ok(bp.materialize(t)?);
    }
    let layout = match (a.pairs, a.extras) {
        (0, None) => None,
        (n, t) => {
            let len = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.chars().filter(|c| matches!(c, '0' | '1')).count())
                .unwrap_or(0);
            let t = t.unwrap_or(len.saturating_sub(2 * n));
            Some(Layout::new(n, t))
        }
    };
    let b = StringMultiset::parse_raw(layout, &text)?;
    if b.is_empty() {
        return Err(Failure::Input("multiset is empty".into()));
    }
    Ok(b)
}

pub fn load_cnf(path: &Path) -> Result<Cnf3, Failure> {
    Ok(parse_dimacs(&read(path)?)?)
}

pub fn load_d3(path: &Path) -> Result<D3Formula, Failure> {
    let cnf = load_cnf(path)?;
    Ok(D3Formula::new(cnf.n, cnf.clauses)?)
}

/// `factorial`, `identity`, or `table:<path>` with `d w(d)` lines.
pub fn parse_weight(spec: &str) -> Result<WeightFunction, Failure> {
    match spec {
        "factorial" => Ok(WeightFunction::Factorial),
        "identity" => Ok(WeightFunction::Identity),
        _ => match spec.strip_prefix("table:") {
            Some(path) => Ok(WeightFunction::parse_table(&read(Path::new(path))?)?),
            None => Err(Failure::Input(format!("unknown weight {spec:?} (factorial, identity or table:<path>)"))),
        },
    }
}

pub fn load_tree(tree: &Path, labels: &Path) -> Result<ParsimonyTree, Failure> {
    let labels = parse_labels(&read(labels)?, None)?;
    Ok(ParsimonyTree::parse(&read(tree)?, &labels)?)
}
