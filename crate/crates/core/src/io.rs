//! Text and JSON formats: graphs, cover dumps, automata, certificates,
//! tangle catalogs and spectrum reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::covers::{CoordinatizedCover, PermutationAssignment};
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, Graph};
use crate::nblang::{CertificateSet, CountAutomaton};
use crate::spectra::{non_alon_count, SpectrumReport};
use crate::tangles::{canonical_form, TangleCatalog, TangleQuery};
use crate::sidestep::SidestepReport;
use crate::tracelab::{NonAlonTable, TraceTable};
use crate::walks::{CensusKey, EdgeLengths};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

/// Meaningful lines with 1-based line numbers; `#` starts a comment.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))
}

pub fn write_graph(g: &Graph) -> String {
    let mut s = format!("graph {}\n", g.vertex_count());
    for (id, e) in g.edges().iter().enumerate() {
        let _ = writeln!(s, "edge {id} {} {}", e.tail, e.head);
    }
    for e in 0..g.directed_edge_count() {
        if e <= g.inv(e) {
            let _ = writeln!(s, "inv {e} {}", g.inv(e));
        }
    }
    s
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut it = lines(text);
    let (l0, head) = it.next().ok_or_else(|| parse_err(1, "missing `graph` header"))?;
    if head.len() != 2 || head[0] != "graph" {
        return Err(parse_err(l0, "expected `graph <n_vertices>`"));
    }
    let nv: usize = num(head[1], l0)?;
    let mut edges: Vec<Option<DirectedEdge>> = Vec::new();
    let mut inv: Vec<Option<usize>> = Vec::new();
    let mut pairs = Vec::new();
    for (l, toks) in it {
        match toks.as_slice() {
            ["edge", id, t, h] => {
                let id: usize = num(id, l)?;
                if id != edges.len() {
                    return Err(parse_err(l, format!("edge ids must be consecutive, expected {}", edges.len())));
                }
                edges.push(Some(DirectedEdge { tail: num(t, l)?, head: num(h, l)? }));
            }
            ["inv", a, b] => pairs.push((l, num::<usize>(a, l)?, num::<usize>(b, l)?)),
            _ => return Err(parse_err(l, "expected `edge <id> <tail> <head>` or `inv <id> <id>`")),
        }
    }
    inv.resize(edges.len(), None);
    for (l, a, b) in pairs {
        if a >= edges.len() || b >= edges.len() {
            return Err(parse_err(l, format!("edge id out of range in `inv {a} {b}`")));
        }
        if inv[a].is_some() || inv[b].is_some() {
            return Err(parse_err(l, format!("edge {a} or {b} paired twice")));
        }
        inv[a] = Some(b);
        inv[b] = Some(a);
    }
    let involution = inv
        .iter()
        .enumerate()
        .map(|(e, x)| x.ok_or_else(|| parse_err(0, format!("edge {e} has no `inv` line"))))
        .collect::<Result<Vec<_>>>()?;
    Graph::new(nv, edges.into_iter().map(|e| e.expect("filled")).collect(), involution)
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)
}

pub fn write_graph_file(path: &Path, g: &Graph) -> Result<()> {
    fs::write(path, write_graph(g)).map_err(|e| io_err(path, e))
}

/// Cover dump: `base <path>`, `n <n>`, then `sigma <edge-id> <images>` per directed base edge.
pub fn write_cover(cover: &CoordinatizedCover, base_ref: &str) -> String {
    let mut s = format!("base {base_ref}\nn {}\n", cover.n);
    for (e, p) in cover.assignment.sigma.iter().enumerate() {
        let imgs: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "sigma {e} {}", imgs.join(" "));
    }
    s
}

/// Parses a cover dump, returning the base reference and the assignment.
pub fn parse_cover(text: &str) -> Result<(String, PermutationAssignment)> {
    let mut base = None;
    let mut n = None;
    let mut sigma: Vec<Vec<usize>> = Vec::new();
    for (l, toks) in lines(text) {
        match toks.as_slice() {
            ["base", rest @ ..] if !rest.is_empty() => base = Some(rest.join(" ")),
            ["n", x] => n = Some(num::<usize>(x, l)?),
            ["sigma", e, imgs @ ..] => {
                let e: usize = num(e, l)?;
                if e != sigma.len() {
                    return Err(parse_err(l, format!("sigma lines must be in edge order, expected {}", sigma.len())));
                }
                sigma.push(imgs.iter().map(|t| num(t, l)).collect::<Result<_>>()?);
            }
            _ => return Err(parse_err(l, "expected `base`, `n` or `sigma` line")),
        }
    }
    let base = base.ok_or_else(|| parse_err(0, "missing `base` line"))?;
    let n = n.or_else(|| sigma.first().map(Vec::len)).ok_or_else(|| parse_err(0, "missing `n` line"))?;
    Ok((base, PermutationAssignment { n, sigma }))
}

/// Reads a cover dump; a relative base path is resolved against the dump's directory.
pub fn read_cover(path: &Path) -> Result<CoordinatizedCover> {
    let (base_ref, assignment) = parse_cover(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)?;
    let mut base_path = PathBuf::from(&base_ref);
    if base_path.is_relative() {
        if let Some(dir) = path.parent() {
            base_path = dir.join(base_path);
        }
    }
    let base = read_graph(&base_path)?;
    CoordinatizedCover::new(&base, assignment)
}

pub fn write_automaton(a: &CountAutomaton) -> String {
    let mut s = format!("states {}\ninit {}\naccept", a.states, a.initial);
    for q in &a.accepting {
        let _ = write!(s, " {q}");
    }
    s.push('\n');
    for (q, row) in a.transitions.iter().enumerate() {
        for (q2, &c) in row.iter().enumerate() {
            if c > 0 {
                let _ = writeln!(s, "trans {q} {q2} {c}");
            }
        }
    }
    s
}

pub fn parse_automaton(text: &str) -> Result<CountAutomaton> {
    let mut states = None;
    let mut init = None;
    let mut accept = Vec::new();
    let mut trans = Vec::new();
    for (l, toks) in lines(text) {
        match toks.as_slice() {
            ["states", x] => states = Some(num::<usize>(x, l)?),
            ["init", x] => init = Some(num::<usize>(x, l)?),
            ["accept", qs @ ..] => {
                for q in qs {
                    accept.push(num::<usize>(q, l)?);
                }
            }
            ["trans", a, b, c] => trans.push((l, num::<usize>(a, l)?, num::<usize>(b, l)?, num::<u64>(c, l)?)),
            _ => return Err(parse_err(l, "expected `states`, `init`, `accept` or `trans` line")),
        }
    }
    let states = states.ok_or_else(|| parse_err(0, "missing `states` line"))?;
    let init = init.ok_or_else(|| parse_err(0, "missing `init` line"))?;
    let mut t = vec![vec![0u64; states]; states];
    for (l, a, b, c) in trans {
        if a >= states || b >= states {
            return Err(parse_err(l, "state out of range"));
        }
        t[a][b] += c;
    }
    CountAutomaton::new(states, t, init, accept)
}

pub fn certificate_json(set: &CertificateSet) -> Value {
    let key = canonical_form(&set.t, &EdgeLengths(vec![1; set.t.directed_edge_count()]));
    json!({
        "type_key": key,
        "nu": set.nu,
        "box": vec![set.search_bound; set.coordinates.len()],
        "coordinates": set.coordinates,
        "certificates": set.vectors(),
    })
}

pub fn spectrum_json(report: &SpectrumReport, epsilons: &[f64]) -> Value {
    let hashimoto: Vec<[f64; 2]> = report.hashimoto_all.iter().map(|z| [z.re, z.im]).collect();
    let mut counts = serde_json::Map::new();
    if report.d.map_or(false, |d| d >= 3) {
        for &eps in epsilons {
            if let Ok(c) = non_alon_count(report, eps) {
                counts.insert(format!("{eps}"), json!(c));
            }
        }
    }
    json!({
        "adjacency_old": report.adjacency_old,
        "adjacency_new": report.adjacency_new,
        "hashimoto": hashimoto,
        "mu1": report.mu1,
        "new_spectral_radius": report.new_spectral_radius,
        "non_alon_count": counts,
    })
}

/// Writes `tangle_NNN.graph` files and `manifest.json` into `dir`.
pub fn write_catalog(dir: &Path, catalog: &TangleCatalog) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (i, g) in catalog.tangles.iter().enumerate() {
        write_graph_file(&dir.join(format!("tangle_{i:03}.graph")), g)?;
    }
    let manifest = json!({
        "nu": catalog.query.nu,
        "r": catalog.query.r,
        "edge_bound": catalog.edge_bound,
        "complete_up_to": catalog.complete_up_to,
        "count": catalog.tangles.len(),
        "mu1_values": catalog.mu1_values,
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("json") + "\n").map_err(|e| io_err(&path, e))
}

pub fn read_catalog(dir: &Path) -> Result<TangleCatalog> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let m: Value = serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    let field = |k: &str| m.get(k).ok_or_else(|| parse_err(0, format!("manifest lacks `{k}`")));
    let as_usize = |v: &Value, k: &str| v.as_u64().map(|x| x as usize).ok_or_else(|| parse_err(0, format!("`{k}` must be an integer")));
    let nu = field("nu")?.as_f64().ok_or_else(|| parse_err(0, "`nu` must be a number"))?;
    let r = as_usize(field("r")?, "r")?;
    let edge_bound = as_usize(field("edge_bound")?, "edge_bound")?;
    let count = as_usize(field("count")?, "count")?;
    let complete_up_to = m.get("complete_up_to").and_then(Value::as_u64).map_or(edge_bound, |x| x as usize);
    let mu1_values = field("mu1_values")?
        .as_array()
        .ok_or_else(|| parse_err(0, "`mu1_values` must be an array"))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| parse_err(0, "bad mu1 value")))
        .collect::<Result<Vec<_>>>()?;
    let tangles = (0..count).map(|i| read_graph(&dir.join(format!("tangle_{i:03}.graph")))).collect::<Result<Vec<_>>>()?;
    Ok(TangleCatalog { query: TangleQuery::new(nu, r)?, edge_bound, tangles, mu1_values, complete_up_to })
}

/// Decimal rendering with 12 significant digits and trailing zeros trimmed.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.push_str(&"0".repeat(int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.push_str(&"0".repeat((-exp - 1) as usize));
        out.push_str(&digits);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if neg {
        out.insert(0, '-');
    }
    out
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// `n,k,mean,stderr`.
pub fn trace_csv(table: &TraceTable) -> String {
    let rows = table
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), r.k.to_string(), fmt12(r.mean), fmt12(r.stderr)])
        .collect();
    csv_string(&["n", "k", "mean", "stderr"], rows)
}

/// `k,order,type_key,lengths,count`.
pub fn census_csv<'a>(k: usize, census: impl IntoIterator<Item = (&'a CensusKey, &'a u64)>) -> String {
    let rows = census
        .into_iter()
        .map(|(key, c)| {
            let lengths: Vec<String> = key.lengths.iter().map(|x| x.to_string()).collect();
            vec![k.to_string(), key.order.to_string(), key.type_key.clone(), lengths.join(" "), c.to_string()]
        })
        .collect();
    csv_string(&["k", "order", "type_key", "lengths", "count"], rows)
}

/// `n,epsilon,hits,p_hat,stderr`.
pub fn nonalon_csv(table: &NonAlonTable) -> String {
    let rows = table
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), fmt12(r.epsilon), r.hits.to_string(), fmt12(r.p_hat), fmt12(r.stderr)])
        .collect();
    csv_string(&["n", "epsilon", "hits", "p_hat", "stderr"], rows)
}

/// `n,region,e_in,e_out,stderr`, one row per planted base plus one `outside` row per `n`.
pub fn sidestep_csv(report: &SidestepReport, bases: &[f64]) -> String {
    let mut rows = Vec::new();
    for r in &report.rows {
        for (b, &(e, s)) in r.e_in.iter().enumerate() {
            let label = format!("near:{}", fmt12(bases.get(b).copied().unwrap_or(f64::NAN)));
            rows.push(vec![r.n.to_string(), label, fmt12(e), fmt12(r.n as f64 - e), fmt12(s)]);
        }
        rows.push(vec![
            r.n.to_string(),
            "outside".into(),
            fmt12(r.n as f64 - r.e_out),
            fmt12(r.e_out),
            fmt12(r.e_out_stderr),
        ]);
    }
    csv_string(&["n", "region", "e_in", "e_out", "stderr"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip() {
        for g in [Graph::bouquet(2, 1), Graph::theta(1, 2, 3), Graph::cycle(1), Graph::empty()] {
            let text = write_graph(&g);
            let back = parse_graph(&text).unwrap();
            assert_eq!(back, g);
            assert_eq!(write_graph(&back), text);
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_graph("graph 1\nedge 0 0 0\nbogus\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, msg: "expected `edge <id> <tail> <head>` or `inv <id> <id>`".into() });
    }

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(3.0), "3");
        assert_eq!(fmt12(-0.125), "-0.125");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(123456789012345.0), "123456789012000");
        assert_eq!(fmt12(2.0f64.sqrt() * 1e-5), "0.0000141421356237");
    }

    #[test]
    fn automaton_round_trip() {
        let a = CountAutomaton::from_line_graph(&Graph::bouquet(2, 0), 0).unwrap();
        assert_eq!(parse_automaton(&write_automaton(&a)).unwrap(), a);
    }
}
