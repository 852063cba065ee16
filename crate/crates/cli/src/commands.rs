use crate::input::{load_cnf, load_d3, load_strings, load_tree, parse_weight, StringsArgs};
use crate::Failure;
use medz_core::cnf::{to_d3cnf, xor_augment as augment};
use medz_core::gadget::{
    build_sharp_gadget, build_threshold_gadget, verify_distance_tables, Block, TableKind, Variant,
};
use medz_core::mcmc::{
    chain_diagnostics, conductance_of_cut, torpid_half_cut, torpid_instance, ChainKind, ChainModel,
};
use medz_core::median::{enumerate_medians, MedianSet};
use medz_core::partition::{median_count, partition_function, WeightFunction};
use medz_core::pipeline::{self, select_primes, PrimeMode};
use medz_core::trees::{
    fitch_completeness_condition, fitch_score, mpl_count, parsimony_score, sankoff, sankoff_solution_count,
    scenario_count_tree,
};
use medz_core::{BitString, Exact, StringBlueprint, StringMultiset};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::Path;

type Report = Result<Value, Failure>;

fn exact_str(q: &Exact) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        q.to_string()
    }
}

fn check_bits(b: &StringMultiset, max_bits: usize) -> Result<MedianSet, Failure> {
    let set = MedianSet::of(b)?;
    if set.ambiguous.len() > max_bits {
        return Err(Failure::Guard(format!(
            "{} ambiguous coordinates exceed --max-bits {max_bits}",
            set.ambiguous.len()
        )));
    }
    Ok(set)
}

pub fn z(strings: &StringsArgs, weight: &str, max_bits: usize) -> Report {
    let w = parse_weight(weight)?;
    let b = load_strings(strings)?;
    let set = check_bits(&b, max_bits)?;
    let z: Exact = partition_function(&b, &w)?;
    Ok(json!({
        "Z": exact_str(&z),
        "weight": w.name(),
        "strings": b.len(),
        "length": b.layout().len(),
        "ambiguous": set.ambiguous.len(),
        "medians": median_count(&b)?.to_string(),
    }))
}

pub fn medians(strings: &StringsArgs, list: bool, max_list: u64) -> Report {
    let b = load_strings(strings)?;
    let set = MedianSet::of(&b)?;
    let count = median_count(&b)?;
    let mut out = json!({
        "count": count.to_string(),
        "ambiguous": set.ambiguous,
        "base": set.base.to_string(),
        "total_distance": b.total_distance(&set.base)?,
    });
    if list {
        if set.ambiguous.len() >= 64 || (1u64 << set.ambiguous.len()) > max_list {
            return Err(Failure::Guard(format!("{count} medians exceed --max-list {max_list}")));
        }
        let mut all: Vec<String> = enumerate_medians(&b)?.map(|m| m.to_string()).collect();
        all.sort();
        out["medians"] = json!(all);
    }
    Ok(out)
}

pub fn count_sat(cnf: &Path, mode: &str, max_bits: usize) -> Report {
    let mode: PrimeMode = mode.parse()?;
    let cnf = load_cnf(cnf)?;
    let r = pipeline::count_sat(&cnf, mode, max_bits)?;
    let mut v = serde_json::to_value(&r).expect("serializable");
    v["count"] = json!(r.gamma.to_string());
    Ok(v)
}

pub fn reduce_d3(cnf: &Path) -> Report {
    let cnf = load_cnf(cnf)?;
    let r = to_d3cnf(&cnf)?;
    Ok(json!({
        "n": cnf.n,
        "k": cnf.clauses.len(),
        "reduced_n": r.formula.n(),
        "reduced_k": r.formula.k(),
        "free_vars": r.free_vars,
        "var_map": r.var_map,
        "dimacs": r.formula.to_dimacs(),
    }))
}

pub fn xor_augment(cnf: &Path) -> Report {
    let f = load_d3(cnf)?;
    let g = augment(&f)?;
    Ok(json!({
        "n": f.n(),
        "k": f.k(),
        "augmented_n": g.n(),
        "augmented_k": g.k(),
        "dimacs": g.to_dimacs(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GadgetKind {
    Sharp,
    Up,
    Up2,
}

fn write_blueprints(dir: &Path, bp: &StringBlueprint, blocks: &[Block]) -> Result<Vec<String>, Failure> {
    let io = |e: std::io::Error| Failure::Input(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir.join("blocks")).map_err(io)?;
    let mut files = vec!["gadget.txt".to_string()];
    std::fs::write(dir.join("gadget.txt"), bp.to_text()).map_err(io)?;
    for b in blocks {
        let mut part = StringBlueprint::new(bp.n_pairs);
        for e in &bp.entries[b.range.clone()] {
            part.push(e.clone());
        }
        let name = format!("blocks/{}.txt", b.name);
        std::fs::write(dir.join(&name), part.to_text()).map_err(io)?;
        files.push(name);
    }
    Ok(files)
}

pub fn build_gadget(cnf: &Path, kind: GadgetKind, prime: Option<u64>, weight: &str, out_dir: &Path) -> Report {
    let f = load_d3(cnf)?;
    match kind {
        GadgetKind::Sharp => {
            let p = match prime {
                Some(p) => p,
                None => select_primes(f.n(), PrimeMode::Practical)?.primes[0],
            };
            let g = build_sharp_gadget(&f, p)?;
            let files = write_blueprints(out_dir, &g.blueprint, &g.blocks)?;
            Ok(json!({
                "kind": "sharp",
                "n": g.n,
                "k": g.k,
                "p": g.p,
                "q": g.q,
                "t": g.t,
                "strings": g.len(),
                "length": 2 * g.n + g.t,
                "blocks": g.blocks,
                "files": files,
            }))
        }
        GadgetKind::Up | GadgetKind::Up2 => {
            let variant = if kind == GadgetKind::Up { Variant::Up } else { Variant::Up2 };
            let w = parse_weight(weight)?;
            let (g, rep) = build_threshold_gadget(&f, variant, &w)?;
            let files = write_blueprints(out_dir, &g.blueprint, &g.blocks)?;
            Ok(json!({
                "kind": variant.to_string(),
                "n": g.n,
                "k": g.k,
                "t": g.t,
                "strings": g.blueprint.entries.len(),
                "length": g.length(),
                "stated_strings": g.stated_strings(),
                "stated_length": g.stated_length(),
                "weight": w.name(),
                "threshold": exact_str(&rep.h[3]),
                "h": rep.h.iter().map(exact_str).collect::<Vec<_>>(),
                "separated": rep.separated(),
                "hypothesis_holds": rep.hypothesis_holds,
                "blocks": g.blocks,
                "files": files,
            }))
        }
    }
}

pub fn verify_tables() -> Report {
    let reports: Vec<_> = [TableKind::Full, TableKind::Complement].map(verify_distance_tables).into();
    let passes = reports.iter().all(|r| r.passes());
    Ok(json!({ "passes": passes, "tables": reports }))
}

pub fn tree_score(tree: &Path, labels: &Path) -> Report {
    let t = load_tree(tree, labels)?;
    let coords = (0..t.layout().len())
        .map(|c| {
            let s = sankoff(&t, c)?;
            Ok(json!({
                "coord": c,
                "score": s.score(),
                "fitch_score": fitch_score(&t, c)?,
                "solutions": sankoff_solution_count(&t, c)?.to_string(),
                "fitch_condition": fitch_completeness_condition(&t, c)?,
            }))
        })
        .collect::<Result<Vec<_>, medz_core::Error>>()?;
    Ok(json!({
        "leaves": t.leaves().count(),
        "vertices": t.len(),
        "score": parsimony_score(&t),
        "mpl_count": mpl_count(&t).to_string(),
        "coordinates": coords,
    }))
}

pub fn tree_count(tree: &Path, labels: &Path, max_mpl: u64) -> Report {
    let t = load_tree(tree, labels)?;
    let scenarios = scenario_count_tree(&t, max_mpl)?;
    Ok(json!({
        "score": parsimony_score(&t),
        "mpl_count": mpl_count(&t).to_string(),
        "scenario_count": scenarios.to_string(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ChainChoice {
    Primer,
    Metropolis,
}

fn chain(b: StringMultiset, choice: ChainChoice, weight: &str, seed: u64) -> Result<ChainModel, Failure> {
    let kind = match choice {
        ChainChoice::Primer => ChainKind::Primer,
        ChainChoice::Metropolis => ChainKind::Metropolis(parse_weight(weight)?),
    };
    Ok(ChainModel::new(b, kind, seed)?)
}

fn weight_label(choice: ChainChoice, weight: &str) -> String {
    match choice {
        ChainChoice::Primer => "primer".into(),
        ChainChoice::Metropolis => format!("metropolis:{weight}"),
    }
}

pub fn sample(
    strings: &StringsArgs,
    choice: ChainChoice,
    weight: &str,
    seed: u64,
    steps: u64,
    thin: u64,
    start: Option<&str>,
) -> Report {
    let b = load_strings(strings)?;
    let c = chain(b, choice, weight, seed)?;
    let start_state = match start {
        None => 0,
        Some(s) => {
            let mu = BitString::parse(c.multiset().layout(), s)?;
            if !medz_core::median::is_median(c.multiset(), &mu)? {
                return Err(Failure::Input(format!("start {s} is not a median")));
            }
            c.state_of(&mu)
        }
    };
    let run = c.sample(start_state, steps, thin)?;
    let visits: BTreeMap<String, u64> = run.visits.iter().map(|(&s, &n)| (c.median(s).to_string(), n)).collect();
    Ok(json!({
        "chain": weight_label(choice, weight),
        "seed": run.seed,
        "steps": run.steps,
        "thin": run.thin,
        "start": c.median(run.start).to_string(),
        "final": c.median(run.final_state).to_string(),
        "moves": run.moves,
        "visits": visits,
    }))
}

fn guard_states(c: &ChainModel, max_states: u64) -> Result<(), Failure> {
    if c.n_states() > max_states {
        return Err(Failure::Guard(format!("{} states exceed --max-states {max_states}", c.n_states())));
    }
    Ok(())
}

pub fn diagnose(
    strings: &StringsArgs,
    choice: ChainChoice,
    weight: &str,
    seed: u64,
    cut_max_ones: Option<u32>,
    max_states: u64,
) -> Report {
    let b = load_strings(strings)?;
    let c = chain(b, choice, weight, seed)?;
    guard_states(&c, max_states)?;
    let mut d = chain_diagnostics(&c, max_states)?;
    let cut = match cut_max_ones {
        Some(k) => {
            d.conductance = Some(conductance_of_cut(&c, |s| s.count_ones() <= k, max_states)?);
            Some(format!("ambiguous ones <= {k}"))
        }
        None => None,
    };
    let mut v = serde_json::to_value(&d).expect("serializable");
    v["chain"] = json!(weight_label(choice, weight));
    if let Some(cut) = cut {
        v["conductance"]["cut"] = json!(cut);
    }
    Ok(v)
}

pub fn diagnose_torpid(spec: &str, max_states: u64) -> Report {
    let parsed = spec.split_once(',').and_then(|(n, t)| Some((n.trim().parse().ok()?, t.trim().parse().ok()?)));
    let (n, t): (usize, usize) = parsed.ok_or_else(|| Failure::Input(format!("--torpid expects n,t, got {spec:?}")))?;
    let c = ChainModel::metropolis(torpid_instance(n, t)?, WeightFunction::Factorial, 0)?;
    guard_states(&c, max_states)?;
    let mut d = chain_diagnostics(&c, max_states)?;
    d.conductance = Some(torpid_half_cut(n, t, max_states)?);
    let mut v = serde_json::to_value(&d).expect("serializable");
    v["chain"] = json!("metropolis:factorial");
    v["conductance"]["cut"] = json!(format!("ones <= {}", n / 2));
    Ok(v)
}
