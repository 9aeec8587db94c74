//! Dataset text format and embedding export.
//!
//! Dataset layout (UTF-8, whitespace separated):
//! line 1: `n e d`; then `n` feature rows of `d` floats; then `n` label
//! tokens, one per line, in {-1, 0, 1}; then `e` edge lines `u v` (0-based,
//! undirected). The loader symmetrizes, deduplicates and rejects self-loops.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, Label, LabelSet};
use crate::nn::Mat;
use crate::perturb::PerturbationLedger;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Load a dataset file into a validated [`Graph`] and [`LabelSet`].
pub fn load_graph(path: impl AsRef<Path>) -> Result<(Graph, LabelSet)> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_graph(&text)
}

/// Parse the dataset text format; error messages carry 1-based line numbers.
pub fn parse_graph(text: &str) -> Result<(Graph, LabelSet)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(parse_err(1, format!("header must be `n e d`, got {head:?}")));
    }
    let n: usize = head[0]
        .parse()
        .map_err(|_| parse_err(1, format!("bad node count `{}`", head[0])))?;
    let e: usize = head[1]
        .parse()
        .map_err(|_| parse_err(1, format!("bad edge count `{}`", head[1])))?;
    let d: usize = head[2]
        .parse()
        .map_err(|_| parse_err(1, format!("bad feature dim `{}`", head[2])))?;

    let mut features = Vec::with_capacity(n * d);
    for row in 0..n {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(n.min(row + 1) + 1, "missing feature row"))?;
        let lineno = idx + 1;
        let mut count = 0usize;
        for tok in line.split_whitespace() {
            let x: f64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value `{tok}`")))?;
            if !x.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value `{tok}`")));
            }
            features.push(x);
            count += 1;
        }
        if count != d {
            return Err(parse_err(lineno, format!("expected {d} features, got {count}")));
        }
    }

    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(n * 2 + 1, "missing label row"))?;
        let lineno = idx + 1;
        let tok = line.trim();
        let raw: i64 = tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label token `{tok}`")))?;
        let label = Label::from_token(raw)
            .ok_or_else(|| parse_err(lineno, format!("label token `{tok}` not in {{-1,0,1}}")))?;
        labels.push(label);
    }

    let mut edges = Vec::with_capacity(e);
    for _ in 0..e {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(2 * n + e + 1, "missing edge row"))?;
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(lineno, format!("edge line must be `u v`, got `{line}`")));
        }
        let u: u32 = toks[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad node id `{}`", toks[0])))?;
        let v: u32 = toks[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad node id `{}`", toks[1])))?;
        if u == v {
            return Err(parse_err(lineno, format!("self-loop `{u} {v}` is not allowed")));
        }
        if u as usize >= n || v as usize >= n {
            return Err(parse_err(lineno, format!("node id out of range in `{u} {v}` (n={n})")));
        }
        edges.push((u, v));
    }

    let graph = Graph::from_edges(n, d, features, &edges)?;
    Ok((graph, LabelSet::new(labels)))
}

/// Serialize to the dataset text format (canonical edge order, `u < v`).
pub fn graph_to_text(g: &Graph, labels: &LabelSet) -> String {
    let edges = g.edge_list();
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", g.node_count(), edges.len(), g.feature_dim());
    for v in 0..g.node_count() as u32 {
        let row = g.feature_row(v);
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
    for label in labels.iter() {
        let _ = writeln!(out, "{}", label.token());
    }
    for (u, v) in edges {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Write a dataset file.
pub fn save_graph(g: &Graph, labels: &LabelSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), graph_to_text(g, labels))?;
    Ok(())
}

/// Role tag attached to each exported embedding row.
fn role_tag(v: u32, labels: &LabelSet, ledger: Option<&PerturbationLedger>) -> String {
    if let Some(ledger) = ledger {
        if let Some(kind) = ledger.type_of(v) {
            return format!("synth{}", kind.index() + 1);
        }
    }
    match labels.get(v) {
        Label::Anomaly => "anomaly".to_string(),
        _ => "normal".to_string(),
    }
}

/// Export an `n x d'` embedding matrix as CSV with header `node,tag,h0..h{d'-1}`.
///
/// When a ledger is given, nodes it perturbed are tagged `synth<k>`; otherwise
/// tags come from the label set.
pub fn export_embeddings(
    embeddings: &Mat<f64>,
    labels: &LabelSet,
    ledger: Option<&PerturbationLedger>,
    path: impl AsRef<Path>,
) -> Result<()> {
    if embeddings.rows != labels.len() {
        return Err(Error::Contract(format!(
            "embedding rows {} != label count {}",
            embeddings.rows,
            labels.len()
        )));
    }
    let mut out = String::new();
    out.push_str("node,tag");
    for j in 0..embeddings.cols {
        let _ = write!(out, ",h{j}");
    }
    out.push('\n');
    for v in 0..embeddings.rows as u32 {
        let _ = write!(out, "{v},{}", role_tag(v, labels, ledger));
        for x in embeddings.row(v as usize) {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    fs::write(path.as_ref(), out)?;
    Ok(())
}

/// Read back an embedding CSV written by [`export_embeddings`].
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<(Mat<f64>, Vec<String>)> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut tags = Vec::new();
    let mut width = 0usize;
    for (idx, line) in text.lines().enumerate().skip(1) {
        let mut parts = line.split(',');
        let _node = parts.next();
        let tag = parts
            .next()
            .ok_or_else(|| parse_err(idx + 1, "missing tag column"))?;
        tags.push(tag.to_string());
        let vals: Vec<f64> = parts
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(idx + 1, format!("bad value `{t}`"))))
            .collect::<Result<_>>()?;
        width = vals.len();
        rows.push(vals);
    }
    let mut mat = Mat::zeros(rows.len(), width);
    for (i, r) in rows.iter().enumerate() {
        mat.row_mut(i).copy_from_slice(r);
    }
    Ok((mat, tags))
}
