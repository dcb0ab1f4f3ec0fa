//! Linking one-mode clusters through bipartite co-clusters.
//!
//! Each one-mode partition is compared with the bipartite partition
//! restricted to the same node kind. Every bipartite co-cluster is linked to
//! the one-mode cluster holding the plurality of its nodes; the coverage of
//! a one-mode cluster is the fraction of its nodes that sit in the
//! co-clusters linked to it. Article clusters get their majority category,
//! and concept clusters inherit the categories of the article clusters they
//! reach through shared co-clusters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeKind, NodeMeta, Partition};
use crate::ingest::Dataset;
use crate::louvain::{filter_clusters, FilteredPartition, GraphKind};
use crate::nmi::{nmi, NORMALIZATION};

pub const SCHEMA_VERSION: u32 = 1;
pub const UNKNOWN_LABEL: &str = "unknown";

/// Contingency counts between one-mode clusters (rows) and bipartite
/// co-clusters (columns), restricted to the row partition's node kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub kind: NodeKind,
    pub counts: Vec<Vec<usize>>,
    /// One-mode cluster sizes.
    pub row_totals: Vec<usize>,
    /// Row nodes that fell into dropped bipartite clusters.
    pub unmatched: Vec<usize>,
    pub column_sums: Vec<usize>,
}

impl OverlapMatrix {
    pub fn rows(&self) -> usize {
        self.row_totals.len()
    }

    pub fn cols(&self) -> usize {
        self.column_sums.len()
    }
}

/// `left_count` locates the kind's nodes inside the bipartite index space.
pub fn overlap(
    one_mode: &FilteredPartition,
    kind: NodeKind,
    bipartite: &FilteredPartition,
    left_count: usize,
) -> Result<OverlapMatrix> {
    let total = bipartite.node_count();
    if left_count > total {
        return Err(Error::Mismatch(format!(
            "bipartite partition covers {total} nodes but {left_count} are Left"
        )));
    }
    let (expected, offset) = match kind {
        NodeKind::Left => (left_count, 0),
        NodeKind::Right => (total - left_count, left_count),
    };
    if one_mode.node_count() != expected {
        return Err(Error::Mismatch(format!(
            "{kind} partition covers {} nodes, bipartite graph has {expected} {kind} nodes",
            one_mode.node_count()
        )));
    }
    let rows = one_mode.cluster_count;
    let cols = bipartite.cluster_count;
    let mut counts = vec![vec![0usize; cols]; rows];
    let mut unmatched = vec![0usize; rows];
    let mut row_totals = vec![0usize; rows];
    let mut column_sums = vec![0usize; cols];
    for (i, label) in one_mode.labels.iter().enumerate() {
        let Some(r) = *label else { continue };
        row_totals[r] += 1;
        match bipartite.labels[offset + i] {
            Some(c) => {
                counts[r][c] += 1;
                column_sums[c] += 1;
            }
            None => unmatched[r] += 1,
        }
    }
    Ok(OverlapMatrix {
        kind,
        counts,
        row_totals,
        unmatched,
        column_sums,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkRule {
    /// Each co-cluster links to the row with the largest cell; ties go to
    /// the larger row, then the lower row id.
    #[default]
    ManyToOneByMaxOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Links {
    /// Linked row per bipartite co-cluster; `None` when the co-cluster has
    /// no node of the row kind.
    pub column_to_row: Vec<Option<usize>>,
    /// Linked co-clusters per one-mode cluster, ascending.
    pub row_to_columns: Vec<Vec<usize>>,
    pub coverage_fraction: Vec<f64>,
}

pub fn link_clusters(m: &OverlapMatrix, rule: LinkRule) -> Links {
    let LinkRule::ManyToOneByMaxOverlap = rule;
    let column_to_row: Vec<Option<usize>> = (0..m.cols())
        .map(|c| {
            (0..m.rows())
                .filter(|&r| m.counts[r][c] > 0)
                .max_by(|&a, &b| {
                    (m.counts[a][c], m.row_totals[a])
                        .cmp(&(m.counts[b][c], m.row_totals[b]))
                        .then(b.cmp(&a))
                })
        })
        .collect();
    let mut row_to_columns = vec![Vec::new(); m.rows()];
    for (c, row) in column_to_row.iter().enumerate() {
        if let Some(r) = row {
            row_to_columns[*r].push(c);
        }
    }
    let coverage_fraction = row_to_columns
        .iter()
        .enumerate()
        .map(|(r, cols)| {
            let covered: usize = cols.iter().map(|&c| m.counts[r][c]).sum();
            if m.row_totals[r] == 0 {
                0.0
            } else {
                covered as f64 / m.row_totals[r] as f64
            }
        })
        .collect();
    Links {
        column_to_row,
        row_to_columns,
        coverage_fraction,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleClusterLabel {
    pub cluster: usize,
    pub size: usize,
    pub label: String,
    /// Modal count over cluster size; 0 for `unknown`.
    pub share: f64,
    /// Category counts, most frequent first then by name.
    pub category_counts: Vec<(String, usize)>,
}

pub fn label_article_clusters(
    p: &FilteredPartition,
    meta: &[NodeMeta],
) -> Vec<ArticleClusterLabel> {
    let sizes = p.sizes();
    let mut counts: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); p.cluster_count];
    for (i, label) in p.labels.iter().enumerate() {
        if let (Some(c), Some(cat)) = (label, meta[i].category.as_deref()) {
            *counts[*c].entry(cat).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(cluster, table)| {
            let mut ranked: Vec<(String, usize)> =
                table.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            // Stable sort keeps the BTreeMap's name order among equal counts.
            ranked.sort_by_key(|e| std::cmp::Reverse(e.1));
            let (label, share) = match ranked.first() {
                Some((name, n)) => (name.clone(), *n as f64 / sizes[cluster] as f64),
                None => (UNKNOWN_LABEL.to_string(), 0.0),
            };
            ArticleClusterLabel {
                cluster,
                size: sizes[cluster],
                label,
                share,
                category_counts: ranked,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPath {
    pub bipartite_cluster: usize,
    pub article_cluster: usize,
    /// Share of the concept cluster inside this co-cluster.
    pub concept_fraction: f64,
    /// Coverage of the article cluster by its own linked co-clusters.
    pub article_coverage: f64,
    pub label_share: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredLabel {
    pub label: String,
    /// Sum of path confidences for this label.
    pub confidence: f64,
    pub paths: Vec<LabelPath>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeStatus {
    Bridged,
    /// Reaches article clusters, none of which has a known category.
    Unlabeled,
    /// No linked co-cluster reaches an article cluster.
    Unbridged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptClusterLabel {
    pub cluster: usize,
    pub size: usize,
    pub status: BridgeStatus,
    pub coverage_fraction: f64,
    /// Ranked by confidence, then label.
    pub labels: Vec<InferredLabel>,
}

impl ConceptClusterLabel {
    pub fn top_label(&self) -> Option<&str> {
        self.labels.first().map(|l| l.label.as_str())
    }
}

pub fn infer_concept_labels(
    concept_overlaps: &OverlapMatrix,
    concept_links: &Links,
    article_links: &Links,
    article_labels: &[ArticleClusterLabel],
) -> Vec<ConceptClusterLabel> {
    (0..concept_overlaps.rows())
        .map(|r| {
            let size = concept_overlaps.row_totals[r];
            let mut reachable = false;
            let mut by_label: BTreeMap<&str, Vec<LabelPath>> = BTreeMap::new();
            for &b in &concept_links.row_to_columns[r] {
                let Some(a) = article_links.column_to_row.get(b).copied().flatten() else {
                    continue;
                };
                reachable = true;
                let art = &article_labels[a];
                if art.label == UNKNOWN_LABEL && art.category_counts.is_empty() {
                    continue;
                }
                let concept_fraction = concept_overlaps.counts[r][b] as f64 / size as f64;
                by_label
                    .entry(art.label.as_str())
                    .or_default()
                    .push(LabelPath {
                        bipartite_cluster: b,
                        article_cluster: a,
                        concept_fraction,
                        article_coverage: article_links.coverage_fraction[a],
                        label_share: art.share,
                        confidence: concept_fraction * art.share,
                    });
            }
            let mut labels: Vec<InferredLabel> = by_label
                .into_iter()
                .map(|(label, paths)| InferredLabel {
                    label: label.to_string(),
                    confidence: paths.iter().map(|p| p.confidence).sum(),
                    paths,
                })
                .collect();
            labels.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
            let status = match (reachable, labels.is_empty()) {
                (false, _) => BridgeStatus::Unbridged,
                (true, true) => BridgeStatus::Unlabeled,
                (true, false) => BridgeStatus::Bridged,
            };
            ConceptClusterLabel {
                cluster: r,
                size,
                status,
                coverage_fraction: concept_links.coverage_fraction[r],
                labels,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoClusterSize {
    pub cluster: usize,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLinks {
    pub article: Links,
    pub concept: Links,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageFractions {
    pub article: Vec<f64>,
    pub concept: Vec<f64>,
}

/// NMI of each partition against node categories, over categorized nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmiSection {
    pub normalization: String,
    pub article_network_vs_category: Option<f64>,
    pub concept_network_vs_category: Option<f64>,
    pub bipartite_left_vs_category: Option<f64>,
    pub bipartite_right_vs_category: Option<f64>,
    pub bipartite_vs_category: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub clusters_kept: usize,
    pub clusters_dropped: usize,
    pub nodes_unclustered: usize,
    pub min_cluster_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub link_rule: LinkRule,
    pub nmi_normalization: String,
    pub coverage_reading: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub schema_version: u32,
    pub metadata: ReportMeta,
    pub filters: BTreeMap<String, FilterCounts>,
    pub bipartite_clusters: Vec<CoClusterSize>,
    pub article_overlaps: OverlapMatrix,
    pub concept_overlaps: OverlapMatrix,
    pub links: ClusterLinks,
    pub coverage_fraction: CoverageFractions,
    pub article_cluster_labels: Vec<ArticleClusterLabel>,
    pub concept_cluster_labels: Vec<ConceptClusterLabel>,
    pub nmi: NmiSection,
}

fn filter_counts(p: &Partition, f: &FilteredPartition, kind: GraphKind) -> FilterCounts {
    FilterCounts {
        clusters_kept: f.cluster_count,
        clusters_dropped: p.community_count() - f.cluster_count,
        nodes_unclustered: f.dropped_nodes.len(),
        min_cluster_size: kind.min_cluster_size(),
    }
}

fn nmi_vs_categories(labels: &[usize], meta: &[&NodeMeta]) -> Option<f64> {
    let (parts, cats): (Vec<usize>, Vec<&str>) = labels
        .iter()
        .zip(meta)
        .filter_map(|(&l, m)| m.category.as_deref().map(|c| (l, c)))
        .unzip();
    if parts.is_empty() {
        return None;
    }
    nmi(&parts, &cats).ok()
}

/// Size-filters the three partitions and assembles the full report.
pub fn build_report(
    data: &Dataset,
    article: &Partition,
    concept: &Partition,
    bipartite: &Partition,
    rule: LinkRule,
) -> Result<BridgeReport> {
    let n_left = data.graph.left_count();
    if bipartite.node_count() != data.graph.node_count() {
        return Err(Error::Mismatch(format!(
            "bipartite partition covers {} nodes, graph has {}",
            bipartite.node_count(),
            data.graph.node_count()
        )));
    }
    let fa = filter_clusters(article, GraphKind::Unipartite);
    let fc = filter_clusters(concept, GraphKind::Unipartite);
    let fb = filter_clusters(bipartite, GraphKind::Bipartite);

    let article_overlaps = overlap(&fa, NodeKind::Left, &fb, n_left)?;
    let concept_overlaps = overlap(&fc, NodeKind::Right, &fb, n_left)?;
    let article_links = link_clusters(&article_overlaps, rule);
    let concept_links = link_clusters(&concept_overlaps, rule);
    let article_cluster_labels = label_article_clusters(&fa, &data.left);
    let concept_cluster_labels = infer_concept_labels(
        &concept_overlaps,
        &concept_links,
        &article_links,
        &article_cluster_labels,
    );

    let mut bipartite_clusters: Vec<CoClusterSize> = (0..fb.cluster_count)
        .map(|cluster| CoClusterSize {
            cluster,
            left: 0,
            right: 0,
        })
        .collect();
    for (i, l) in fb.labels.iter().enumerate() {
        if let Some(c) = l {
            if i < n_left {
                bipartite_clusters[*c].left += 1;
            } else {
                bipartite_clusters[*c].right += 1;
            }
        }
    }

    let left_meta: Vec<&NodeMeta> = data.left.iter().collect();
    let right_meta: Vec<&NodeMeta> = data.right.iter().collect();
    let all_meta: Vec<&NodeMeta> = data.combined_meta().collect();
    let nmi = NmiSection {
        normalization: NORMALIZATION.to_string(),
        article_network_vs_category: nmi_vs_categories(article.assignment(), &left_meta),
        concept_network_vs_category: nmi_vs_categories(concept.assignment(), &right_meta),
        bipartite_left_vs_category: nmi_vs_categories(
            &bipartite.assignment()[..n_left],
            &left_meta,
        ),
        bipartite_right_vs_category: nmi_vs_categories(
            &bipartite.assignment()[n_left..],
            &right_meta,
        ),
        bipartite_vs_category: nmi_vs_categories(bipartite.assignment(), &all_meta),
    };

    let mut filters = BTreeMap::new();
    filters.insert(
        "article".to_string(),
        filter_counts(article, &fa, GraphKind::Unipartite),
    );
    filters.insert(
        "concept".to_string(),
        filter_counts(concept, &fc, GraphKind::Unipartite),
    );
    filters.insert(
        "bipartite".to_string(),
        filter_counts(bipartite, &fb, GraphKind::Bipartite),
    );

    Ok(BridgeReport {
        schema_version: SCHEMA_VERSION,
        metadata: ReportMeta {
            link_rule: rule,
            nmi_normalization: NORMALIZATION.to_string(),
            coverage_reading:
                "fraction of a one-mode cluster's nodes inside its linked co-clusters".to_string(),
        },
        filters,
        bipartite_clusters,
        coverage_fraction: CoverageFractions {
            article: article_links.coverage_fraction.clone(),
            concept: concept_links.coverage_fraction.clone(),
        },
        links: ClusterLinks {
            article: article_links,
            concept: concept_links,
        },
        article_overlaps,
        concept_overlaps,
        article_cluster_labels,
        concept_cluster_labels,
        nmi,
    })
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn id_list(prefix: char, ids: &[usize]) -> String {
    if ids.is_empty() {
        return "-".to_string();
    }
    ids.iter()
        .map(|i| format!("{prefix}{i}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl BridgeReport {
    /// Plain-text overview: cluster sizes, links, coverage and labels.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Bipartite co-clusters (concepts / articles)");
        for c in &self.bipartite_clusters {
            let art = self.links.article.column_to_row[c.cluster];
            let con = self.links.concept.column_to_row[c.cluster];
            let _ = writeln!(
                s,
                "  B{:<3} {:>6} / {:<6}  -> article {}  concept {}",
                c.cluster,
                c.right,
                c.left,
                art.map_or("-".into(), |a| format!("A{a}")),
                con.map_or("-".into(), |k| format!("C{k}")),
            );
        }
        let _ = writeln!(s, "\nArticle clusters");
        for (r, lab) in self.article_cluster_labels.iter().enumerate() {
            let _ = writeln!(
                s,
                "  A{:<3} {:>6} articles  {} ({})  linked {}  coverage {}",
                r,
                lab.size,
                lab.label,
                pct(lab.share),
                id_list('B', &self.links.article.row_to_columns[r]),
                pct(self.coverage_fraction.article[r]),
            );
        }
        let _ = writeln!(s, "\nConcept clusters");
        for lab in &self.concept_cluster_labels {
            let inferred = match lab.status {
                BridgeStatus::Unbridged => "unbridged".to_string(),
                BridgeStatus::Unlabeled => "unlabeled".to_string(),
                BridgeStatus::Bridged => lab
                    .labels
                    .iter()
                    .map(|l| format!("{} ({})", l.label, pct(l.confidence)))
                    .collect::<Vec<_>>()
                    .join(", "),
            };
            let _ = writeln!(
                s,
                "  C{:<3} {:>6} concepts  linked {}  coverage {}  inferred {}",
                lab.cluster,
                lab.size,
                id_list('B', &self.links.concept.row_to_columns[lab.cluster]),
                pct(lab.coverage_fraction),
                inferred,
            );
        }
        let _ = writeln!(s, "\nNMI ({})", self.nmi.normalization);
        let rows = [
            (
                "article network vs category",
                self.nmi.article_network_vs_category,
            ),
            (
                "concept network vs category",
                self.nmi.concept_network_vs_category,
            ),
            (
                "bipartite articles vs category",
                self.nmi.bipartite_left_vs_category,
            ),
            (
                "bipartite concepts vs category",
                self.nmi.bipartite_right_vs_category,
            ),
            ("bipartite all vs category", self.nmi.bipartite_vs_category),
        ];
        for (name, v) in rows {
            if let Some(v) = v {
                let _ = writeln!(s, "  {name:<32} {v:.6}");
            }
        }
        s
    }
}
