//! One-mode projections of the article × concept graph.
//!
//! The concept network links two concepts with unit weight when some
//! article uses both. The article network weights a pair of articles by the
//! cosine of their idf vectors, `a_{i,c} = idf(c) = log(N / N_c)` when the
//! article uses `c`.
//!
//! Both builders work row by row: each row is computed from the inverted
//! index alone and rows are merged in index order, so the output does not
//! depend on the number of rayon workers.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{BipartiteGraph, NodeMeta, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    Natural,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// Inverse document frequency per concept. `None` marks concepts that occur
/// in no article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub n_docs: usize,
    pub doc_freq: Vec<usize>,
    pub idf: Vec<Option<f64>>,
    pub base: LogBase,
}

impl IdfTable {
    pub fn get(&self, concept: usize) -> Option<f64> {
        self.idf[concept]
    }
}

pub fn compute_idf(g: &BipartiteGraph) -> IdfTable {
    compute_idf_with_base(g, LogBase::Natural)
}

pub fn compute_idf_with_base(g: &BipartiteGraph, base: LogBase) -> IdfTable {
    let n = g.left_count();
    let doc_freq: Vec<usize> = (0..g.right_count()).map(|c| g.right_degree(c)).collect();
    let idf = doc_freq
        .iter()
        .map(|&df| match df {
            0 => None,
            df if df == n => Some(0.0),
            df => Some(base.log(n as f64 / df as f64)),
        })
        .collect();
    IdfTable {
        n_docs: n,
        doc_freq,
        idf,
        base,
    }
}

/// Sparse idf vector of one article; zero-idf concepts are left out.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticleVector {
    pub entries: Vec<(usize, f64)>,
    pub norm: f64,
}

impl ArticleVector {
    pub fn build(g: &BipartiteGraph, idf: &IdfTable, article: usize) -> Self {
        let entries: Vec<(usize, f64)> = g
            .left_neighbors(article)
            .iter()
            .filter_map(|&c| idf.get(c).filter(|&w| w > 0.0).map(|w| (c, w)))
            .collect();
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        ArticleVector { entries, norm }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Unit-weight concept co-occurrence network.
pub fn project_concepts(g: &BipartiteGraph) -> WeightedGraph {
    project_concepts_with_counts(g).0
}

/// Concept network plus, per edge, the number of articles behind it.
pub fn project_concepts_with_counts(g: &BipartiteGraph) -> (WeightedGraph, Vec<u32>) {
    let n = g.right_count();
    let rows: Vec<Vec<(usize, u32)>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n], Vec::new()),
            |(counts, touched), c| {
                for &article in g.right_neighbors(c) {
                    // Neighbor lists are sorted, so skip everything up to c.
                    let concepts = g.left_neighbors(article);
                    let start = concepts.partition_point(|&x| x <= c);
                    for &other in &concepts[start..] {
                        if counts[other] == 0 {
                            touched.push(other);
                        }
                        counts[other] += 1;
                    }
                }
                touched.sort_unstable();
                let row = touched.iter().map(|&o| (o, counts[o])).collect();
                for &o in touched.iter() {
                    counts[o] = 0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    let mut edges = Vec::with_capacity(rows.iter().map(Vec::len).sum());
    let mut counts = Vec::with_capacity(edges.capacity());
    for (c, row) in rows.into_iter().enumerate() {
        for (other, count) in row {
            edges.push((c, other, 1.0));
            counts.push(count);
        }
    }
    (WeightedGraph::from_sorted_unchecked(n, edges), counts)
}

/// idf-cosine article network. Pairs with cosine `<= threshold` are
/// omitted; articles with an all-zero vector stay isolated.
pub fn project_articles(g: &BipartiteGraph, idf: &IdfTable, threshold: f64) -> WeightedGraph {
    let n = g.left_count();
    let vectors: Vec<ArticleVector> = (0..n)
        .into_par_iter()
        .map(|a| ArticleVector::build(g, idf, a))
        .collect();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0f64; n], Vec::new()),
            |(dots, touched), i| {
                let vi = &vectors[i];
                if vi.is_zero() {
                    return Vec::new();
                }
                for &(c, w) in &vi.entries {
                    let w2 = w * w;
                    let articles = g.right_neighbors(c);
                    let start = articles.partition_point(|&x| x <= i);
                    for &j in &articles[start..] {
                        if dots[j] == 0.0 {
                            touched.push(j);
                        }
                        dots[j] += w2;
                    }
                }
                touched.sort_unstable();
                let row = touched
                    .iter()
                    .filter_map(|&j| {
                        let cos = dots[j] / (vi.norm * vectors[j].norm);
                        (cos > threshold).then_some((j, cos))
                    })
                    .collect();
                for &j in touched.iter() {
                    dots[j] = 0.0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    let mut edges = Vec::with_capacity(rows.iter().map(Vec::len).sum());
    for (i, row) in rows.into_iter().enumerate() {
        edges.extend(row.into_iter().map(|(j, w)| (i, j, w)));
    }
    WeightedGraph::from_sorted_unchecked(n, edges)
}

/// Formats like C's `%.{digits}g`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `u<TAB>v<TAB>weight` lines with external ids and 12 significant digits.
pub fn write_edge_tsv<W: Write>(
    g: &WeightedGraph,
    nodes: &[NodeMeta],
    mut out: W,
) -> io::Result<()> {
    for &(u, v, w) in g.edges() {
        writeln!(
            out,
            "{}\t{}\t{}",
            nodes[u].external_id,
            nodes[v].external_id,
            format_significant(w, 12)
        )?;
    }
    out.flush()
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_graphml<W: Write>(
    g: &WeightedGraph,
    nodes: &[NodeMeta],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
    )?;
    writeln!(
        out,
        r#"  <key id="label" for="node" attr.name="label" attr.type="string"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="category" for="node" attr.name="category" attr.type="string"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>"#
    )?;
    writeln!(out, r#"  <graph id="G" edgedefault="undirected">"#)?;
    for (i, meta) in nodes.iter().enumerate().take(g.node_count()) {
        write!(
            out,
            r#"    <node id="n{i}"><data key="label">{}</data>"#,
            xml_escape(&meta.external_id)
        )?;
        if let Some(cat) = &meta.category {
            write!(out, r#"<data key="category">{}</data>"#, xml_escape(cat))?;
        }
        writeln!(out, "</node>")?;
    }
    for (k, &(u, v, w)) in g.edges().iter().enumerate() {
        writeln!(
            out,
            r#"    <edge id="e{k}" source="n{u}" target="n{v}"><data key="weight">{}</data></edge>"#,
            format_significant(w, 12)
        )?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")?;
    out.flush()
}
