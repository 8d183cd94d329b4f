//! Weekly weighted co-occurrence graphs over entities, their giant-component
//! reduction, and node-level / graph-level structural measures.
//!
//! Two entities co-occurring in an article contribute 1/(rank_u * rank_v) to
//! their edge; weights are accumulated as exact rationals so the "drop at or
//! below 1/6" threshold never depends on floating-point rounding.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{weighted_entity_sentiment, WeeklyCorpus};

/// Edges with accumulated weight at or below this rational are dropped.
pub const EDGE_WEIGHT_THRESHOLD: (i64, i64) = (1, 6);

/// Default convergence tolerance for [`eigenvector_centrality`] (max-norm of
/// successive iterates).
pub const EIGEN_TOL: f64 = 1e-10;

/// Default iteration cap for [`eigenvector_centrality`].
pub const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("week {week_end}: no edge survives the weight threshold")]
    DegenerateWeek { week_end: NaiveDate },
    #[error("power iteration did not converge within {iterations} iterations")]
    PowerIterationDiverged { iterations: usize },
    #[error("invalid edge list: {0}")]
    InvalidEdges(String),
}

/// One week's co-occurrence graph. After construction via [`build_graph`] it
/// is the giant component: connected, loop-free, every weight strictly above
/// the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyGraph {
    week_end: NaiveDate,
    /// Sorted lexicographically; positions double as node indices.
    nodes: Vec<String>,
    /// Mean rank-weighted sentiment per node, aligned with `nodes`.
    sentiments: Vec<f64>,
    /// Neighbor lists (index, weight), sorted by neighbor index.
    adj: Vec<Vec<(usize, f64)>>,
    /// Undirected edges with u < v, sorted.
    edges: Vec<(usize, usize, f64)>,
    degrees: Vec<f64>,
    total_weight: f64,
    /// Surviving edge -> ids of the articles that contributed to it.
    provenance: BTreeMap<(String, String), BTreeSet<String>>,
    /// Entities appearing in at least one article this week (the giant-ratio
    /// denominator), measured before thresholding.
    total_entities: usize,
    giant_ratio: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDto {
    name: String,
    sentiment: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeDto {
    source: String,
    target: String,
    weight: f64,
    #[serde(default)]
    articles: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphDto {
    week_end: NaiveDate,
    total_entities: usize,
    giant_ratio: f64,
    nodes: Vec<NodeDto>,
    edges: Vec<EdgeDto>,
}

impl WeeklyGraph {
    /// Assembles a graph from explicit name/sentiment/edge data. Node order is
    /// forced lexicographic; edges must reference known nodes, carry positive
    /// finite weights, and contain no duplicates or self-loops.
    fn assemble(
        week_end: NaiveDate,
        node_sentiments: BTreeMap<String, f64>,
        weighted_edges: &[(String, String, f64)],
        provenance: BTreeMap<(String, String), BTreeSet<String>>,
        total_entities: usize,
        giant_size: usize,
    ) -> Result<Self, GraphError> {
        let nodes: Vec<String> = node_sentiments.keys().cloned().collect();
        let sentiments: Vec<f64> = node_sentiments.values().copied().collect();
        let index: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, name)| (name.as_str(), i))
            .collect();

        let mut edges = Vec::with_capacity(weighted_edges.len());
        let mut seen = BTreeSet::new();
        for (a, b, w) in weighted_edges {
            if a == b {
                return Err(GraphError::InvalidEdges(format!("self-loop on {a:?}")));
            }
            if !w.is_finite() || *w <= 0.0 {
                return Err(GraphError::InvalidEdges(format!(
                    "weight {w} on ({a:?}, {b:?}) must be positive and finite"
                )));
            }
            let (u, v) = (index[a.as_str()], index[b.as_str()]);
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::InvalidEdges(format!(
                    "duplicate edge ({a:?}, {b:?})"
                )));
            }
            edges.push((key.0, key.1, *w));
        }
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let n = nodes.len();
        let mut adj = vec![Vec::new(); n];
        let mut degrees = vec![0.0; n];
        let mut total_weight = 0.0;
        for &(u, v, w) in &edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
            degrees[u] += w;
            degrees[v] += w;
            total_weight += w;
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }

        let giant_ratio = if total_entities == 0 {
            0.0
        } else {
            giant_size as f64 / total_entities as f64
        };

        Ok(WeeklyGraph {
            week_end,
            nodes,
            sentiments,
            adj,
            edges,
            degrees,
            total_weight,
            provenance,
            total_entities,
            giant_ratio,
        })
    }

    /// Builds a graph directly from a weighted edge list: no thresholding and
    /// no giant-component reduction, sentiments zero. Intended for algorithm
    /// tests and the guide; the pipeline itself goes through [`build_graph`].
    pub fn from_weighted_edges(
        week_end: NaiveDate,
        weighted_edges: &[(&str, &str, f64)],
    ) -> Result<Self, GraphError> {
        if weighted_edges.is_empty() {
            return Err(GraphError::InvalidEdges("empty edge list".to_string()));
        }
        let mut sentiments = BTreeMap::new();
        let mut owned = Vec::with_capacity(weighted_edges.len());
        for &(a, b, w) in weighted_edges {
            sentiments.insert(a.to_string(), 0.0);
            sentiments.insert(b.to_string(), 0.0);
            owned.push((a.to_string(), b.to_string(), w));
        }
        let total = sentiments.len();
        let mut graph = Self::assemble(week_end, sentiments, &owned, BTreeMap::new(), total, 0)?;
        let giant = largest_component_size(&graph);
        graph.giant_ratio = giant as f64 / total as f64;
        Ok(graph)
    }

    /// Overrides one node's sentiment attribute; returns false when the node
    /// is unknown. Useful for fixtures built via [`Self::from_weighted_edges`].
    pub fn set_sentiment(&mut self, node: &str, sentiment: f64) -> bool {
        match self.node_index(node) {
            Some(i) => {
                self.sentiments[i] = sentiment;
                true
            }
            None => false,
        }
    }

    pub fn week_end(&self) -> NaiveDate {
        self.week_end
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node names, sorted lexicographically; the position is the node index.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, index: usize) -> &str {
        &self.nodes[index]
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.binary_search_by(|probe| probe.as_str().cmp(name)).ok()
    }

    /// Mean rank-weighted sentiment per node, aligned with [`Self::nodes`].
    pub fn sentiments(&self) -> &[f64] {
        &self.sentiments
    }

    /// Neighbors of a node as (index, weight), sorted by index.
    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adj[index]
    }

    /// Undirected edges as (u, v, weight) with u < v, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn weight_between(&self, u: usize, v: usize) -> Option<f64> {
        self.adj[u]
            .binary_search_by_key(&v, |&(j, _)| j)
            .ok()
            .map(|pos| self.adj[u][pos].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight_between(u, v).is_some()
    }

    /// Weighted degree of one node.
    pub fn degree(&self, index: usize) -> f64 {
        self.degrees[index]
    }

    /// Sum of all edge weights (each undirected edge counted once).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Surviving edge -> contributing article ids.
    pub fn provenance(&self) -> &BTreeMap<(String, String), BTreeSet<String>> {
        &self.provenance
    }

    /// Number of entities seen in any article of the week (pre-threshold).
    pub fn total_entities(&self) -> usize {
        self.total_entities
    }

    /// Size of the largest connected component divided by
    /// [`Self::total_entities`].
    pub fn giant_ratio(&self) -> f64 {
        self.giant_ratio
    }

    /// Dense weighted adjacency matrix in node-index order.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.node_count();
        let mut a = DMatrix::zeros(n, n);
        for &(u, v, w) in &self.edges {
            a[(u, v)] = w;
            a[(v, u)] = w;
        }
        a
    }

    pub fn is_connected(&self) -> bool {
        largest_component_size(self) == self.node_count()
    }
}

impl Serialize for WeeklyGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let dto = GraphDto {
            week_end: self.week_end,
            total_entities: self.total_entities,
            giant_ratio: self.giant_ratio,
            nodes: self
                .nodes
                .iter()
                .zip(&self.sentiments)
                .map(|(name, &sentiment)| NodeDto {
                    name: name.clone(),
                    sentiment,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v, weight)| {
                    let key = (self.nodes[u].clone(), self.nodes[v].clone());
                    EdgeDto {
                        articles: self
                            .provenance
                            .get(&key)
                            .map(|ids| ids.iter().cloned().collect())
                            .unwrap_or_default(),
                        source: key.0,
                        target: key.1,
                        weight,
                    }
                })
                .collect(),
        };
        dto.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeeklyGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = GraphDto::deserialize(deserializer)?;
        let mut sentiments = BTreeMap::new();
        for node in &dto.nodes {
            if sentiments.insert(node.name.clone(), node.sentiment).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "duplicate node {:?}",
                    node.name
                )));
            }
        }
        let mut provenance = BTreeMap::new();
        let mut edges = Vec::with_capacity(dto.edges.len());
        for edge in &dto.edges {
            for endpoint in [&edge.source, &edge.target] {
                if !sentiments.contains_key(endpoint) {
                    return Err(serde::de::Error::custom(format!(
                        "edge references unknown node {endpoint:?}"
                    )));
                }
            }
            let key = (
                edge.source.clone().min(edge.target.clone()),
                edge.source.clone().max(edge.target.clone()),
            );
            if !edge.articles.is_empty() {
                provenance.insert(key, edge.articles.iter().cloned().collect());
            }
            edges.push((edge.source.clone(), edge.target.clone(), edge.weight));
        }
        let giant_ratio = dto.giant_ratio;
        let mut graph = Self::assemble(
            dto.week_end,
            sentiments,
            &edges,
            provenance,
            dto.total_entities,
            0,
        )
        .map_err(serde::de::Error::custom)?;
        graph.giant_ratio = giant_ratio;
        Ok(graph)
    }
}

fn largest_component_size(g: &WeeklyGraph) -> usize {
    components_by_index(g).first().map_or(0, Vec::len)
}

/// Connected components as index lists, largest first; ties broken toward the
/// component containing the smallest node index (= lexicographically smallest
/// name).
fn components_by_index(g: &WeeklyGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &(v, _) in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    // Stable discovery order starts at the smallest index, so on equal sizes
    // the earlier component already contains the smaller name.
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    components
}

/// Builds the week's co-occurrence graph from its articles: exact-rational
/// pair weights, thresholding at 1/6, reduction to the giant component, and
/// per-node mean rank-weighted sentiment (over all of the node's mentions in
/// the week, including mentions on edges that fell to the threshold).
pub fn build_graph(week: &WeeklyCorpus) -> Result<WeeklyGraph, GraphError> {
    let threshold = Ratio::new(EDGE_WEIGHT_THRESHOLD.0, EDGE_WEIGHT_THRESHOLD.1);

    let mut weights: BTreeMap<(String, String), Ratio<i64>> = BTreeMap::new();
    let mut contributors: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    let mut entities: BTreeSet<String> = BTreeSet::new();
    // Node sentiment contributions keyed by article id so that summation order
    // is canonical and graph construction is exactly permutation-invariant.
    let mut sentiment_contrib: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();

    for article in &week.articles {
        for mention in &article.entities {
            entities.insert(mention.text.clone());
            sentiment_contrib
                .entry(mention.text.clone())
                .or_default()
                .push((article.article_id.clone(), weighted_entity_sentiment(mention)));
        }
        for (i, a) in article.entities.iter().enumerate() {
            for b in &article.entities[i + 1..] {
                let key = (a.text.clone().min(b.text.clone()), a.text.clone().max(b.text.clone()));
                let pair_weight = Ratio::new(1, i64::from(a.rank) * i64::from(b.rank));
                *weights.entry(key.clone()).or_insert_with(|| Ratio::new(0, 1)) += pair_weight;
                contributors.entry(key).or_default().insert(article.article_id.clone());
            }
        }
    }

    let surviving: BTreeMap<(String, String), Ratio<i64>> = weights
        .into_iter()
        .filter(|(_, w)| *w > threshold)
        .collect();
    if surviving.is_empty() {
        return Err(GraphError::DegenerateWeek {
            week_end: week.week_end,
        });
    }

    // Connected components over the thresholded edges.
    let mut neighbor_names: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in surviving.keys() {
        neighbor_names.entry(a).or_default().push(b);
        neighbor_names.entry(b).or_default().push(a);
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut giant: BTreeSet<&str> = BTreeSet::new();
    for &start in neighbor_names.keys() {
        if seen.contains(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        let mut comp = BTreeSet::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &neighbor_names[u] {
                if seen.insert(v) {
                    comp.insert(v);
                    queue.push_back(v);
                }
            }
        }
        // Strictly larger wins; on ties the first component found already
        // contains the lexicographically smallest node.
        if comp.len() > giant.len() {
            giant = comp;
        }
    }

    let mut node_sentiments = BTreeMap::new();
    for &name in &giant {
        let mut contribs = sentiment_contrib.remove(name).unwrap_or_default();
        contribs.sort_by(|a, b| a.0.cmp(&b.0));
        let mean = contribs.iter().map(|&(_, s)| s).sum::<f64>() / contribs.len() as f64;
        node_sentiments.insert(name.to_string(), mean);
    }

    let mut edges = Vec::new();
    let mut provenance = BTreeMap::new();
    for ((a, b), w) in &surviving {
        if giant.contains(a.as_str()) {
            let weight = *w.numer() as f64 / *w.denom() as f64;
            edges.push((a.clone(), b.clone(), weight));
            provenance.insert((a.clone(), b.clone()), contributors[&(a.clone(), b.clone())].clone());
        }
    }

    let giant_size = giant.len();
    WeeklyGraph::assemble(
        week.week_end,
        node_sentiments,
        &edges,
        provenance,
        entities.len(),
        giant_size,
    )
}

/// Weighted degree per node: the sum of incident edge weights.
pub fn degree_centrality(g: &WeeklyGraph) -> BTreeMap<String, f64> {
    g.nodes()
        .iter()
        .enumerate()
        .map(|(i, name)| (name.clone(), g.degree(i)))
        .collect()
}

/// Eigenvector centrality by power iteration on the weighted adjacency.
///
/// Starts from the uniform positive vector, renormalizes to unit Euclidean
/// norm each step, and stops once successive iterates differ by less than
/// `tol` in max-norm. Internally each step applies A + I: the shift keeps the
/// same eigenvectors while ruling out the sign-flipping two-cycles that
/// bipartite graphs would otherwise feed the plain iteration.
pub fn eigenvector_centrality(
    g: &WeeklyGraph,
    tol: f64,
    max_iter: usize,
) -> Result<BTreeMap<String, f64>, GraphError> {
    let n = g.node_count();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..max_iter {
        let mut y = x.clone();
        for &(u, v, w) in g.edges() {
            y[u] += w * x[v];
            y[v] += w * x[u];
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for value in &mut y {
            *value /= norm;
        }
        let diff = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if diff < tol {
            return Ok(g
                .nodes()
                .iter()
                .zip(&x)
                .map(|(name, &v)| (name.clone(), v))
                .collect());
        }
    }
    Err(GraphError::PowerIterationDiverged {
        iterations: max_iter,
    })
}

/// Mean local clustering coefficient of the unweighted skeleton; nodes of
/// degree < 2 contribute 0.
pub fn avg_clustering_coefficient(g: &WeeklyGraph) -> f64 {
    let n = g.node_count();
    let mut sum = 0.0;
    for u in 0..n {
        let neighbors = g.neighbors(u);
        let k = neighbors.len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        for (i, &(a, _)) in neighbors.iter().enumerate() {
            for &(b, _) in &neighbors[i + 1..] {
                if g.has_edge(a, b) {
                    links += 1;
                }
            }
        }
        sum += 2.0 * links as f64 / (k as f64 * (k as f64 - 1.0));
    }
    sum / n as f64
}

/// Centralities of one week plus the top-3 rankings used by the timelines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralityReport {
    pub week_end: NaiveDate,
    pub degree: BTreeMap<String, f64>,
    pub eigenvector: BTreeMap<String, f64>,
    /// Up to three (node, value) pairs, by descending degree; ties break
    /// toward the lexicographically smaller name.
    pub top_degree: Vec<(String, f64)>,
    pub top_eigenvector: Vec<(String, f64)>,
}

fn top3(values: &BTreeMap<String, f64>) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = values.iter().map(|(k, &v)| (k.clone(), v)).collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("centrality values are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(3);
    ranked
}

/// Computes both centralities with the default power-iteration parameters.
pub fn centrality_report(g: &WeeklyGraph) -> Result<CentralityReport, GraphError> {
    let degree = degree_centrality(g);
    let eigenvector = eigenvector_centrality(g, EIGEN_TOL, EIGEN_MAX_ITER)?;
    Ok(CentralityReport {
        week_end: g.week_end(),
        top_degree: top3(&degree),
        top_eigenvector: top3(&eigenvector),
        degree,
        eigenvector,
    })
}

fn xml_escape(raw: &str) -> String {
    raw.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// GraphML rendering with a `sentiment` attribute per node and a `weight`
/// attribute per edge.
pub fn to_graphml(g: &WeeklyGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"d0\" for=\"node\" attr.name=\"sentiment\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"d1\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str(&format!(
        "  <graph id=\"week_{}\" edgedefault=\"undirected\">\n",
        g.week_end()
    ));
    for (name, &sentiment) in g.nodes().iter().zip(g.sentiments()) {
        out.push_str(&format!(
            "    <node id=\"{}\"><data key=\"d0\">{}</data></node>\n",
            xml_escape(name),
            sentiment
        ));
    }
    for &(u, v, w) in g.edges() {
        out.push_str(&format!(
            "    <edge source=\"{}\" target=\"{}\"><data key=\"d1\">{}</data></edge>\n",
            xml_escape(g.node_name(u)),
            xml_escape(g.node_name(v)),
            w
        ));
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn dot_escape(raw: &str) -> String {
    raw.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz DOT rendering mirroring [`to_graphml`]'s attributes.
pub fn to_dot(g: &WeeklyGraph) -> String {
    let mut out = format!("graph \"week_{}\" {{\n", g.week_end());
    for (name, &sentiment) in g.nodes().iter().zip(g.sentiments()) {
        out.push_str(&format!(
            "  \"{}\" [sentiment={}];\n",
            dot_escape(name),
            sentiment
        ));
    }
    for &(u, v, w) in g.edges() {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [weight={}];\n",
            dot_escape(g.node_name(u)),
            dot_escape(g.node_name(v)),
            w
        ));
    }
    out.push_str("}\n");
    out
}

/// CSV rendering of centrality reports: `week,node,degree,eigenvector`.
pub fn centrality_csv(reports: &[CentralityReport]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["week", "node", "degree", "eigenvector"])
        .expect("writing to memory cannot fail");
    for report in reports {
        for (node, degree) in &report.degree {
            let eigen = report.eigenvector[node];
            writer
                .write_record([
                    report.week_end.to_string(),
                    node.clone(),
                    degree.to_string(),
                    eigen.to_string(),
                ])
                .expect("writing to memory cannot fail");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ArticleRecord, EntityMention};

    fn mention(text: &str, rank: u8, sentiment: f64) -> EntityMention {
        EntityMention {
            text: text.to_string(),
            rank,
            sentiment,
        }
    }

    fn article(id: &str, entities: Vec<EntityMention>) -> ArticleRecord {
        ArticleRecord {
            article_id: id.to_string(),
            week_end: "2021-01-10".parse().unwrap(),
            entities,
            summary: String::new(),
            abstract_text: String::new(),
            overall_sentiment: 0.0,
        }
    }

    fn week(articles: Vec<ArticleRecord>) -> WeeklyCorpus {
        WeeklyCorpus {
            week_end: "2021-01-10".parse().unwrap(),
            articles,
        }
    }

    fn date() -> NaiveDate {
        "2021-01-10".parse().unwrap()
    }

    #[test]
    fn pair_weights_accumulate_as_exact_rationals() {
        // 1/(1*2) + 1/(1*3) = 5/6.
        let w = week(vec![
            article("a1", vec![mention("x", 1, 0.0), mention("y", 2, 0.0)]),
            article("a2", vec![mention("x", 1, 0.0), mention("y", 3, 0.0)]),
        ]);
        let g = build_graph(&w).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].2, 5.0 / 6.0);
    }

    #[test]
    fn threshold_is_exact_at_one_sixth() {
        // Single (2,3) pair: exactly 1/6, dropped -> degenerate week.
        let dropped = week(vec![article(
            "a1",
            vec![mention("x", 2, 0.0), mention("y", 3, 0.0)],
        )]);
        assert!(matches!(
            build_graph(&dropped),
            Err(GraphError::DegenerateWeek { .. })
        ));

        // Two articles each adding 1/12: the sum is exactly 1/6, still dropped.
        let accumulated = week(vec![
            article("a1", vec![mention("x", 3, 0.0), mention("y", 4, 0.0)]),
            article("a2", vec![mention("x", 4, 0.0), mention("y", 3, 0.0)]),
        ]);
        assert!(matches!(
            build_graph(&accumulated),
            Err(GraphError::DegenerateWeek { .. })
        ));

        // 1/5 survives.
        let kept = week(vec![article(
            "a1",
            vec![mention("x", 1, 0.0), mention("y", 5, 0.0)],
        )]);
        assert_eq!(build_graph(&kept).unwrap().edges()[0].2, 0.2);
    }

    #[test]
    fn giant_component_keeps_lexicographically_smallest_on_ties() {
        let w = week(vec![
            article("a1", vec![mention("zeta", 1, 0.0), mention("yank", 1, 0.0)]),
            article("a2", vec![mention("alpha", 1, 0.0), mention("beta", 1, 0.0)]),
        ]);
        let g = build_graph(&w).unwrap();
        assert_eq!(g.nodes(), ["alpha".to_string(), "beta".to_string()]);
        assert_eq!(g.giant_ratio(), 0.5);
        assert_eq!(g.total_entities(), 4);
    }

    #[test]
    fn giant_ratio_counts_all_entities_of_the_week() {
        // Nine entities chained strongly; a tenth appears only in a pair that
        // falls at the threshold, so it stays in the denominator only.
        let mut articles: Vec<ArticleRecord> = (0..8)
            .map(|i| {
                article(
                    &format!("a{i}"),
                    vec![
                        mention(&format!("n{i}"), 1, 0.0),
                        mention(&format!("n{}", i + 1), 1, 0.0),
                    ],
                )
            })
            .collect();
        articles.push(article(
            "weak",
            vec![mention("n0", 2, 0.0), mention("outsider", 3, 0.0)],
        ));
        let g = build_graph(&week(articles)).unwrap();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.total_entities(), 10);
        assert_eq!(g.giant_ratio(), 0.9);
    }

    #[test]
    fn node_sentiment_averages_all_mentions() {
        let w = week(vec![
            article("a1", vec![mention("x", 1, 0.5), mention("y", 1, 0.0)]),
            article("a2", vec![mention("x", 2, 0.5), mention("y", 1, 0.0)]),
        ]);
        let g = build_graph(&w).unwrap();
        let i = g.node_index("x").unwrap();
        // (0.5/1 + 0.5/2) / 2 = 0.375
        assert_eq!(g.sentiments()[i], 0.375);
    }

    #[test]
    fn construction_is_invariant_under_article_order() {
        let a = article("a1", vec![mention("x", 1, 0.31), mention("y", 2, -0.7)]);
        let b = article("a2", vec![mention("y", 1, 0.11), mention("z", 3, 0.9), mention("x", 2, 0.05)]);
        let c = article("a3", vec![mention("z", 1, -0.2), mention("x", 1, 0.4)]);
        let forward = build_graph(&week(vec![a.clone(), b.clone(), c.clone()])).unwrap();
        let backward = build_graph(&week(vec![c, b, a])).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn provenance_cites_articles_containing_both_endpoints() {
        let w = week(vec![
            article("a1", vec![mention("x", 1, 0.0), mention("y", 1, 0.0)]),
            article("a2", vec![mention("x", 1, 0.0), mention("y", 2, 0.0), mention("z", 1, 0.0)]),
        ]);
        let g = build_graph(&w).unwrap();
        for ((a, b), ids) in g.provenance() {
            assert!(!ids.is_empty());
            for id in ids {
                let art = w.articles.iter().find(|art| &art.article_id == id).unwrap();
                let texts: Vec<&str> = art.entities.iter().map(|e| e.text.as_str()).collect();
                assert!(texts.contains(&a.as_str()) && texts.contains(&b.as_str()));
            }
        }
        let xy = g
            .provenance()
            .get(&("x".to_string(), "y".to_string()))
            .unwrap();
        assert_eq!(xy.len(), 2);
    }

    #[test]
    fn degree_centrality_sums_incident_weights() {
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[("a", "b", 1.5), ("a", "c", 0.5), ("b", "c", 1.0)],
        )
        .unwrap();
        let deg = degree_centrality(&g);
        assert_eq!(deg["a"], 2.0);
        assert_eq!(deg["b"], 2.5);
        assert_eq!(deg["c"], 1.5);
    }

    #[test]
    fn eigenvector_centrality_matches_star_closed_form() {
        // Star over 4 nodes: center 1/sqrt(2), each leaf 1/sqrt(6).
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[("hub", "l1", 1.0), ("hub", "l2", 1.0), ("hub", "l3", 1.0)],
        )
        .unwrap();
        let e = eigenvector_centrality(&g, 1e-12, 100_000).unwrap();
        assert!((e["hub"] - 1.0 / 2.0f64.sqrt()).abs() < 1e-10);
        for leaf in ["l1", "l2", "l3"] {
            assert!((e[leaf] - 1.0 / 6.0f64.sqrt()).abs() < 1e-10);
        }
        let norm: f64 = e.values().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_centrality_is_invariant_under_weight_scaling() {
        let edges = [("a", "b", 0.4), ("b", "c", 1.1), ("a", "c", 0.3), ("c", "d", 0.9)];
        let scaled: Vec<(&str, &str, f64)> =
            edges.iter().map(|&(u, v, w)| (u, v, 2.0 * w)).collect();
        let g1 = WeeklyGraph::from_weighted_edges(date(), &edges).unwrap();
        let g2 = WeeklyGraph::from_weighted_edges(date(), &scaled).unwrap();
        let e1 = eigenvector_centrality(&g1, 1e-12, 100_000).unwrap();
        let e2 = eigenvector_centrality(&g2, 1e-12, 100_000).unwrap();
        for (node, v) in &e1 {
            assert!((v - e2[node]).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvector_centrality_converges_on_bipartite_graphs() {
        // A 4-cycle is bipartite; the plain power iteration would oscillate.
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0), ("d", "a", 1.0)],
        )
        .unwrap();
        let e = eigenvector_centrality(&g, 1e-12, 100_000).unwrap();
        for value in e.values() {
            assert!((value - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvector_residual_is_small() {
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[("a", "b", 2.0), ("b", "c", 0.5), ("c", "d", 1.5), ("b", "d", 0.7)],
        )
        .unwrap();
        let tol = 1e-10;
        let e = eigenvector_centrality(&g, tol, 100_000).unwrap();
        let x: Vec<f64> = g.nodes().iter().map(|n| e[n]).collect();
        let a = g.adjacency_matrix();
        let ax = &a * nalgebra::DVector::from_vec(x.clone());
        let lambda: f64 = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| xi * ax[i])
            .sum();
        let residual = (0..x.len())
            .map(|i| (ax[i] - lambda * x[i]).abs())
            .fold(0.0, f64::max);
        assert!(residual < 10.0 * tol, "residual {residual}");
    }

    #[test]
    fn clustering_coefficient_examples() {
        let triangle = WeeklyGraph::from_weighted_edges(
            date(),
            &[("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)],
        )
        .unwrap();
        assert_eq!(avg_clustering_coefficient(&triangle), 1.0);

        let path = WeeklyGraph::from_weighted_edges(date(), &[("a", "b", 1.0), ("b", "c", 1.0)])
            .unwrap();
        assert_eq!(avg_clustering_coefficient(&path), 0.0);

        // K4 minus one edge: (2/3 + 2/3 + 1 + 1) / 4 = 5/6.
        let diamond = WeeklyGraph::from_weighted_edges(
            date(),
            &[
                ("a", "b", 1.0),
                ("a", "c", 1.0),
                ("a", "d", 1.0),
                ("b", "c", 1.0),
                ("b", "d", 1.0),
            ],
        )
        .unwrap();
        assert!((avg_clustering_coefficient(&diamond) - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn report_ranks_top3_with_lexicographic_ties() {
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[("a", "b", 1.0), ("c", "d", 1.0), ("b", "c", 2.0)],
        )
        .unwrap();
        let report = centrality_report(&g).unwrap();
        assert_eq!(report.top_degree[0].0, "b");
        assert_eq!(report.top_degree[1].0, "c");
        // a and d tie at degree 1; a wins lexicographically.
        assert_eq!(report.top_degree[2].0, "a");
    }

    #[test]
    fn exports_render_nodes_edges_and_attributes() {
        let mut g = WeeklyGraph::from_weighted_edges(date(), &[("a&b", "c\"d", 1.25)]).unwrap();
        g.set_sentiment("a&b", -0.5);

        let xml = to_graphml(&g);
        assert!(xml.contains("<node id=\"a&amp;b\"><data key=\"d0\">-0.5</data></node>"));
        assert!(xml.contains("<data key=\"d1\">1.25</data>"));
        assert!(xml.contains("edgedefault=\"undirected\""));

        let dot = to_dot(&g);
        assert!(dot.contains("\"a&b\" [sentiment=-0.5];"));
        assert!(dot.contains("\"a&b\" -- \"c\\\"d\" [weight=1.25];"));
    }

    #[test]
    fn centrality_csv_has_expected_header_and_rows() {
        let g = WeeklyGraph::from_weighted_edges(date(), &[("a", "b", 1.0)]).unwrap();
        let report = centrality_report(&g).unwrap();
        let csv_text = centrality_csv(&[report]);
        let mut lines = csv_text.lines();
        assert_eq!(lines.next().unwrap(), "week,node,degree,eigenvector");
        assert!(lines.next().unwrap().starts_with("2021-01-10,a,1,"));
    }

    #[test]
    fn graph_serde_round_trips() {
        let w = week(vec![
            article("a1", vec![mention("x", 1, 0.5), mention("y", 2, -0.25)]),
            article("a2", vec![mention("x", 1, 0.1), mention("z", 2, 0.0)]),
        ]);
        let g = build_graph(&w).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: WeeklyGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn from_weighted_edges_rejects_bad_input() {
        assert!(WeeklyGraph::from_weighted_edges(date(), &[("a", "a", 1.0)]).is_err());
        assert!(WeeklyGraph::from_weighted_edges(date(), &[("a", "b", 0.0)]).is_err());
        assert!(
            WeeklyGraph::from_weighted_edges(date(), &[("a", "b", 1.0), ("b", "a", 2.0)]).is_err()
        );
        assert!(WeeklyGraph::from_weighted_edges(date(), &[]).is_err());
    }
}
