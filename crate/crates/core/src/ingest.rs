//! Incidence and metadata parsing.
//!
//! Edge file: UTF-8, one `left_id<TAB>right_id` pair per line, `#` comments
//! and blank lines ignored. Metadata files: TSV with a header naming an `id`
//! column and optionally `category` and `generic` (`0`/`1`); other columns
//! are ignored.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, NodeKind, NodeMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownIds {
    /// Fail on the first edge naming an id absent from the metadata.
    #[default]
    Reject,
    /// Append unknown ids as new nodes without annotations.
    Register,
    /// Drop such edges and count them as invalid.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub exclude_generic: bool,
    pub unknown_ids: UnknownIds,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            exclude_generic: true,
            unknown_ids: UnknownIds::Reject,
        }
    }
}

/// `lines_read = edges_added + duplicates + dropped_generic + dropped_invalid`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestSummary {
    pub lines_read: usize,
    pub edges_added: usize,
    pub duplicates: usize,
    pub dropped_generic: usize,
    pub dropped_invalid: usize,
    pub registered_left: usize,
    pub registered_right: usize,
}

/// A loaded two-mode dataset. `right` lists the concepts that are nodes of
/// `graph`, in graph order; generic concepts removed by the exclusion rule
/// are kept in `excluded_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: BipartiteGraph,
    pub left: Vec<NodeMeta>,
    pub right: Vec<NodeMeta>,
    pub excluded_right: Vec<NodeMeta>,
    pub summary: IngestSummary,
}

impl Dataset {
    /// Metadata for the combined (Left then Right) index space.
    pub fn combined_meta(&self) -> impl Iterator<Item = &NodeMeta> {
        self.left.iter().chain(&self.right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// N
    pub n_articles: usize,
    /// V
    pub n_concepts: usize,
    /// V_gen
    pub n_generic: usize,
    /// ⟨k⟩
    pub mean_nongeneric_per_article: f64,
    pub min_concepts_per_article: usize,
    pub max_concepts_per_article: usize,
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses a metadata TSV for nodes of `kind`.
pub fn read_meta<R: BufRead>(reader: R, kind: NodeKind, path: &str) -> Result<Vec<NodeMeta>> {
    let mut header: Option<(usize, Option<usize>, Option<usize>)> = None;
    let mut out = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let Some((id_col, cat_col, gen_col)) = header else {
            let find = |name: &str| fields.iter().position(|f| f.trim() == name);
            let id_col =
                find("id").ok_or_else(|| parse_err(path, lineno, "header has no `id` column"))?;
            header = Some((id_col, find("category"), find("generic")));
            continue;
        };
        let id = fields
            .get(id_col)
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| parse_err(path, lineno, "missing id"))?;
        let mut meta = NodeMeta::new(id, kind);
        if let Some(cat) = cat_col.and_then(|c| fields.get(c)).map(|s| s.trim()) {
            if !cat.is_empty() {
                meta.category = Some(cat.to_string());
            }
        }
        if let Some(flag) = gen_col.and_then(|c| fields.get(c)).map(|s| s.trim()) {
            meta.generic = match flag {
                "" | "0" => false,
                "1" => true,
                other => {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("generic must be 0 or 1, got {other:?}"),
                    ))
                }
            };
        }
        if seen.insert(meta.external_id.clone(), out.len()).is_some() {
            return Err(Error::DuplicateId {
                kind,
                id: meta.external_id,
            });
        }
        out.push(meta);
    }
    if header.is_none() {
        return Err(parse_err(path, 0, "missing header line"));
    }
    Ok(out)
}

struct Registry {
    kind: NodeKind,
    metas: Vec<NodeMeta>,
    index: HashMap<String, usize>,
}

impl Registry {
    fn new(metas: Vec<NodeMeta>, kind: NodeKind) -> Self {
        let index = metas
            .iter()
            .enumerate()
            .map(|(i, m)| (m.external_id.clone(), i))
            .collect();
        Registry { kind, metas, index }
    }

    fn resolve(
        &mut self,
        id: &str,
        policy: UnknownIds,
        path: &str,
        line: usize,
        registered: &mut usize,
    ) -> Result<Option<usize>> {
        if let Some(&i) = self.index.get(id) {
            return Ok(Some(i));
        }
        match policy {
            UnknownIds::Reject => Err(Error::UnknownId {
                path: path.to_string(),
                line,
                kind: self.kind,
                id: id.to_string(),
            }),
            UnknownIds::Skip => Ok(None),
            UnknownIds::Register => {
                let i = self.metas.len();
                self.metas.push(NodeMeta::new(id, self.kind));
                self.index.insert(id.to_string(), i);
                *registered += 1;
                Ok(Some(i))
            }
        }
    }
}

/// Builds a dataset from already-open sources. `names` are used in errors.
pub fn load_incidence_from<E: BufRead, L: BufRead, R: BufRead>(
    edges: E,
    left_meta: L,
    right_meta: R,
    names: [&str; 3],
    options: IngestOptions,
) -> Result<Dataset> {
    let [edge_name, left_name, right_name] = names;
    let mut left = Registry::new(
        read_meta(left_meta, NodeKind::Left, left_name)?,
        NodeKind::Left,
    );
    let mut right = Registry::new(
        read_meta(right_meta, NodeKind::Right, right_name)?,
        NodeKind::Right,
    );

    let mut summary = IngestSummary::default();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (idx, line) in edges.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(edge_name, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split('\t').collect();
        if tokens.len() != 2 || tokens.iter().any(|t| t.trim().is_empty()) {
            return Err(parse_err(
                edge_name,
                lineno,
                format!(
                    "expected `left_id<TAB>right_id`, found {} field(s)",
                    tokens.len()
                ),
            ));
        }
        summary.lines_read += 1;
        let l = left.resolve(
            tokens[0].trim(),
            options.unknown_ids,
            edge_name,
            lineno,
            &mut summary.registered_left,
        )?;
        let r = right.resolve(
            tokens[1].trim(),
            options.unknown_ids,
            edge_name,
            lineno,
            &mut summary.registered_right,
        )?;
        match (l, r) {
            (Some(l), Some(r)) => {
                if options.exclude_generic && right.metas[r].generic {
                    summary.dropped_generic += 1;
                } else {
                    pairs.push((l, r));
                }
            }
            _ => summary.dropped_invalid += 1,
        }
    }

    let mut graph_index = vec![usize::MAX; right.metas.len()];
    let mut kept = Vec::new();
    let mut excluded_right = Vec::new();
    for (i, meta) in right.metas.into_iter().enumerate() {
        if options.exclude_generic && meta.generic {
            excluded_right.push(meta);
        } else {
            graph_index[i] = kept.len();
            kept.push(meta);
        }
    }

    let mut graph = BipartiteGraph::new(left.metas.len(), kept.len());
    for (l, r) in pairs {
        if graph.add_edge(l, graph_index[r])? {
            summary.edges_added += 1;
        } else {
            summary.duplicates += 1;
        }
    }
    debug_assert_eq!(
        summary.lines_read,
        summary.edges_added
            + summary.duplicates
            + summary.dropped_generic
            + summary.dropped_invalid
    );

    Ok(Dataset {
        graph,
        left: left.metas,
        right: kept,
        excluded_right,
        summary,
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_incidence(
    edge_file: &Path,
    left_meta: &Path,
    right_meta: &Path,
    options: IngestOptions,
) -> Result<Dataset> {
    load_incidence_from(
        open(edge_file)?,
        open(left_meta)?,
        open(right_meta)?,
        [
            &edge_file.display().to_string(),
            &left_meta.display().to_string(),
            &right_meta.display().to_string(),
        ],
        options,
    )
}

pub fn compute_stats(data: &Dataset) -> DatasetStats {
    let g = &data.graph;
    let n = g.left_count();
    let per_article: Vec<usize> = (0..n)
        .map(|a| {
            g.left_neighbors(a)
                .iter()
                .filter(|&&c| !data.right[c].generic)
                .count()
        })
        .collect();
    let total: usize = per_article.iter().sum();
    let n_generic = data
        .right
        .iter()
        .chain(&data.excluded_right)
        .filter(|m| m.generic)
        .count();
    DatasetStats {
        n_articles: n,
        n_concepts: data.right.len() + data.excluded_right.len(),
        n_generic,
        mean_nongeneric_per_article: if n == 0 { 0.0 } else { total as f64 / n as f64 },
        min_concepts_per_article: per_article.iter().copied().min().unwrap_or(0),
        max_concepts_per_article: per_article.iter().copied().max().unwrap_or(0),
    }
}

/// Writes the graph back as an edge file using external ids.
pub fn write_edge_list<W: Write>(data: &Dataset, mut out: W) -> io::Result<()> {
    for (l, r) in data.graph.edges() {
        writeln!(
            out,
            "{}\t{}",
            data.left[l].external_id, data.right[r].external_id
        )?;
    }
    out.flush()
}

/// Writes metadata in the format [`read_meta`] accepts.
pub fn write_meta<'a, W: Write>(
    metas: impl IntoIterator<Item = &'a NodeMeta>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "id\tcategory\tgeneric")?;
    for m in metas {
        writeln!(
            out,
            "{}\t{}\t{}",
            m.external_id,
            m.category.as_deref().unwrap_or(""),
            u8::from(m.generic)
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(edges: &str, left: &str, right: &str, options: IngestOptions) -> Result<Dataset> {
        load_incidence_from(
            edges.as_bytes(),
            left.as_bytes(),
            right.as_bytes(),
            ["edges.tsv", "left.tsv", "right.tsv"],
            options,
        )
    }

    const LEFT: &str = "id\tcategory\nA1\talpha\nA2\tdelta\n";
    const EDGES: &str = "# comment\nA1\tc1\nA1\tc2\n\nA2\tc2\n";

    #[test]
    fn three_line_fixture() {
        let d = load(
            EDGES,
            LEFT,
            "id\tgeneric\nc1\t0\nc2\t0\n",
            IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(d.graph.degree_sequences(), (vec![2, 1], vec![1, 2]));
        assert_eq!(d.summary.lines_read, 3);
        assert_eq!(d.left[0].category.as_deref(), Some("alpha"));
    }

    #[test]
    fn generic_concepts_are_dropped() {
        let d = load(
            EDGES,
            LEFT,
            "id\tgeneric\nc1\t0\nc2\t1\n",
            IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(d.graph.edge_count(), 1);
        assert_eq!(d.graph.edges().collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(d.summary.dropped_generic, 2);
        assert_eq!(d.excluded_right.len(), 1);
        assert_eq!(d.excluded_right[0].external_id, "c2");
        // A2 keeps its node with degree 0.
        assert_eq!(d.graph.left_count(), 2);

        let kept = IngestOptions {
            exclude_generic: false,
            ..Default::default()
        };
        let d = load(EDGES, LEFT, "id\tgeneric\nc1\t0\nc2\t1\n", kept).unwrap();
        assert_eq!(d.graph.edge_count(), 3);
        let stats = compute_stats(&d);
        assert_eq!(stats.mean_nongeneric_per_article, 0.5);
        assert_eq!(stats.n_generic, 1);
    }

    #[test]
    fn bad_token_count_names_line() {
        let err = load(
            "A1\tc1\nA1 c2\n",
            LEFT,
            "id\nc1\nc2\n",
            IngestOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert_eq!(path, "edges.tsv");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(load("A1\tc1\tx\n", LEFT, "id\nc1\n", IngestOptions::default()).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = load("", "id\nA1\nA1\n", "id\nc1\n", IngestOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::DuplicateId {
                kind: NodeKind::Left,
                ..
            }
        ));
        // Same id across kinds is fine.
        assert!(load("", "id\nx\n", "id\nx\n", IngestOptions::default()).is_ok());
    }

    #[test]
    fn unknown_id_policies() {
        let edges = "A1\tc1\nA9\tc1\nA1\tc7\n";
        let err = load(edges, LEFT, "id\nc1\n", IngestOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::UnknownId {
                line: 2,
                kind: NodeKind::Left,
                ..
            }
        ));

        let skip = IngestOptions {
            unknown_ids: UnknownIds::Skip,
            ..Default::default()
        };
        let d = load(edges, LEFT, "id\nc1\n", skip).unwrap();
        assert_eq!(d.summary.dropped_invalid, 2);
        assert_eq!(d.graph.edge_count(), 1);

        let register = IngestOptions {
            unknown_ids: UnknownIds::Register,
            ..Default::default()
        };
        let d = load(edges, LEFT, "id\nc1\n", register).unwrap();
        assert_eq!(d.graph.left_count(), 3);
        assert_eq!(d.graph.right_count(), 2);
        assert_eq!(d.graph.edge_count(), 3);
        assert_eq!(d.summary.registered_left, 1);
        assert_eq!(d.summary.registered_right, 1);
    }

    #[test]
    fn duplicates_and_summary_identity() {
        let edges = "A1\tc1\nA1\tc1\nA2\tc2\nA2\tc1\n";
        let d = load(
            edges,
            LEFT,
            "id\tgeneric\nc1\t0\nc2\t1\n",
            IngestOptions::default(),
        )
        .unwrap();
        let s = d.summary;
        assert_eq!((s.edges_added, s.duplicates, s.dropped_generic), (2, 1, 1));
        assert_eq!(
            s.lines_read,
            s.edges_added + s.duplicates + s.dropped_generic + s.dropped_invalid
        );
    }

    #[test]
    fn bad_generic_flag() {
        let err = load("", LEFT, "id\tgeneric\nc1\tyes\n", IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn stats_fixture() {
        let d = load(EDGES, LEFT, "id\nc1\nc2\n", IngestOptions::default()).unwrap();
        let s = compute_stats(&d);
        assert_eq!(s.n_articles, 2);
        assert_eq!(s.n_concepts, 2);
        assert_eq!(s.mean_nongeneric_per_article, 1.5);
        assert_eq!(
            (s.min_concepts_per_article, s.max_concepts_per_article),
            (1, 2)
        );
    }

    #[test]
    fn empty_stats() {
        let d = load("", "id\n", "id\n", IngestOptions::default()).unwrap();
        let s = compute_stats(&d);
        assert_eq!(s.n_articles, 0);
        assert_eq!(s.mean_nongeneric_per_article, 0.0);
        assert_eq!(s.max_concepts_per_article, 0);
    }
}
