use std::path::{Path, PathBuf};

use num_rational::Rational64;
use serde_json::{json, Value};

use loosetree::decompose::{audit_decomposition, extract_semibare_paths, tree_split};
use loosetree::embed::{almost_spanning_embed, spanning_embed, verify_embedding, HierarchyConfig, PipelineOptions, Requirements};
use loosetree::hypertree::{validate_file, HypertreeFile};
use loosetree::instances::{pm_barrier, random_hypertree, random_kgraph, tightness_construction, GenKind, GenSpec, Persist};
use loosetree::oracle::oracle_embed;
use loosetree::{Hypertree, KGraph, Vertex};

use crate::failure::{Failure, Outcome};

pub fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn load_graph(path: &Path) -> Outcome<KGraph> {
    Ok(KGraph::from_json(&read(path)?)?)
}

pub fn load_tree(path: &Path) -> Outcome<Hypertree> {
    Ok(Hypertree::from_json(&read(path)?)?)
}

pub fn load_config(path: Option<&Path>) -> Outcome<HierarchyConfig> {
    match path {
        None => Ok(HierarchyConfig::default()),
        Some(p) => Ok(serde_json::from_str(&read(p)?)?),
    }
}

/// Writes to `out`, or prints when there is none.
pub fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn is_tree_file(v: &Value) -> bool {
    v.get("root").is_some()
}

pub fn validate(path: &Path) -> Outcome {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text)?;
    if is_tree_file(&value) {
        let file: HypertreeFile = serde_json::from_value(value)?;
        validate_file(&file).map_err(|v| Failure::Invalid(v.to_string()))?;
        let t = Hypertree::from_file(file)?;
        println!("valid {}-uniform hypertree: {} vertices, {} edges", t.k(), t.n(), t.num_edges());
    } else {
        let g = KGraph::from_json(&text)?;
        println!("valid {}-graph: {} vertices, {} edges", g.k(), g.n(), g.num_edges());
    }
    Ok(())
}

pub fn stats_value(path: &Path) -> Outcome<Value> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text)?;
    if is_tree_file(&value) {
        let t = Hypertree::from_json(&text)?;
        let max_degree = (0..t.n() as Vertex).map(|v| t.degree(v)).max().unwrap_or(0);
        Ok(json!({
            "kind": "tree",
            "k": t.k(),
            "n": t.n(),
            "edges": t.num_edges(),
            "root": t.root(),
            "leaf_edges": t.leaf_edges().len(),
            "semi_bare_paths_6": extract_semibare_paths(&t, 5).len(),
            "max_degree": max_degree,
        }))
    } else {
        let g = KGraph::from_json(&text)?;
        let levels = (1..g.k()).map(|l| g.min_degree(l)).collect::<loosetree::Result<Vec<_>>>()?;
        Ok(json!({
            "kind": "graph",
            "k": g.k(),
            "n": g.n(),
            "edges": g.num_edges(),
            "min_degrees": levels,
        }))
    }
}

pub fn stats(path: &Path, as_json: bool) -> Outcome {
    let v = stats_value(path)?;
    if as_json {
        return emit(None, &pretty(&v));
    }
    for (key, val) in v.as_object().expect("object") {
        match val {
            Value::Array(items) => {
                for item in items {
                    println!("{key:<18} {item}");
                }
            }
            other => println!("{key:<18} {other}"),
        }
    }
    Ok(())
}

pub struct DecomposeArgs {
    pub tree: PathBuf,
    pub d: usize,
    pub mu: Rational64,
    pub r1: Option<Vertex>,
    pub r2: Option<Vertex>,
    pub out: Option<PathBuf>,
}

pub fn decompose(a: &DecomposeArgs) -> Outcome {
    let t = load_tree(&a.tree)?;
    let r1 = a.r1.unwrap_or(t.root());
    let r2 = a.r2.or(t.root2()).unwrap_or(if r1 as usize + 1 == t.n() { 0 } else { t.n() as Vertex - 1 });
    let dec = tree_split(&t, r1, r2, a.d, a.mu)?;
    let audit = audit_decomposition(&t, &dec);
    if let Some(out) = &a.out {
        dec.save(out)?;
    }
    let bound = Rational64::from_integer(100_000 * t.k() as i64 * a.d as i64) / (a.mu * a.mu);
    print!("{audit}");
    println!("levels L = {}, bound {bound}", dec.levels.len() - 1);
    match audit.first_failure() {
        Some(c) => Err(Failure::Audit(format!("{}: {}", c.name, c.detail))),
        None => Ok(()),
    }
}

pub struct EmbedArgs {
    pub graph: PathBuf,
    pub tree: PathBuf,
    pub root: Vertex,
    pub image: Vertex,
    pub seed: u64,
    pub config: Option<PathBuf>,
    pub almost: Option<(Vertex, Vertex)>,
    pub out: Option<PathBuf>,
}

pub fn embed(a: &EmbedArgs) -> Outcome {
    let g = load_graph(&a.graph)?;
    let t = load_tree(&a.tree)?;
    let config = load_config(a.config.as_deref())?;
    let (emb, req) = match a.almost {
        Some((r2, v2)) => {
            let out = almost_spanning_embed(&g, &t, [(a.root, a.image), (r2, v2)], &config, a.seed, &PipelineOptions::default())?;
            (out.embedding, Requirements::complete().with_roots(&[(a.root, a.image), (r2, v2)]))
        }
        None => {
            let emb = spanning_embed(&g, &t, a.root, a.image, &config, a.seed)?;
            (emb, Requirements::spanning().with_roots(&[(a.root, a.image)]))
        }
    };
    verify_embedding(&t, &g, &emb, &req).map_err(|e| Failure::Pipeline(e.to_string()))?;
    emit(a.out.as_deref(), &emb.to_json())
}

pub struct OracleArgs {
    pub graph: PathBuf,
    pub tree: PathBuf,
    pub constraints: Vec<(Vertex, Vertex)>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn oracle(a: &OracleArgs) -> Outcome {
    let g = load_graph(&a.graph)?;
    let t = load_tree(&a.tree)?;
    let res = oracle_embed(&g, &t, &a.constraints, a.budget)?;
    if let (Some(emb), Some(out)) = (&res.embedding, &a.out) {
        let req = Requirements::complete().with_roots(&a.constraints);
        verify_embedding(&t, &g, emb, &req).map_err(|e| Failure::Pipeline(e.to_string()))?;
        emb.save(out)?;
    }
    let v = json!({
        "found": res.found,
        "exhausted": res.exhausted,
        "decided": res.decided().is_some(),
        "nodes_explored": res.nodes_explored,
    });
    emit(None, &pretty(&v))
}

pub enum Construct {
    Tightness { k: usize, level: usize, n: usize },
    PmBarrier { k: usize, n: usize },
    Tree { kind: GenKind, n: usize, k: usize, bias: f64, seed: u64 },
    Graph { kind: GenKind, n: usize, k: usize, param: f64, seed: u64 },
}

pub fn construct(c: &Construct, out: Option<&Path>) -> Outcome {
    let text = match *c {
        Construct::Tightness { k, level, n } => {
            if k < 3 || n < 2 {
                return Err(Failure::Invalid(format!("tightness needs k ≥ 3 and n ≥ 2, got k = {k}, n = {n}")));
            }
            let (g, apex) = tightness_construction(k, level, n, &pm_barrier(k - 1, n - 1)?)?;
            eprintln!("apex {apex}");
            g.to_json()
        }
        Construct::PmBarrier { k, n } => pm_barrier(k, n)?.to_json(),
        Construct::Tree { kind, n, k, bias, seed } => random_hypertree(&GenSpec { kind, n, k, param: bias, seed })?.to_json(),
        Construct::Graph { kind, n, k, param, seed } => random_kgraph(&GenSpec { kind, n, k, param, seed })?.to_json(),
    };
    emit(out, &text)
}
