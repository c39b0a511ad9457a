//! The three semantic graphs: static prior, per-frame current, accumulating
//! global.
//!
//! All graphs share one representation: an ordered node list (class id plus
//! node feature) and a dense binary adjacency where `adj[dst][src] = 1` encodes
//! the directed edge `src -> dst`. Graph values are immutable snapshots;
//! updates return new graphs.

use std::collections::BTreeSet;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::feature_bank::{AttributeVector, FeatureBank, NodeFeature, VisualFeature};

/// Which of the three graphs a value plays the part of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphRole {
    Prior,
    Current,
    Global,
}

impl GraphRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            GraphRole::Prior => "prior",
            GraphRole::Current => "current",
            GraphRole::Global => "global",
        }
    }
}

/// One detected object as the semantic-graph operations consume it.
#[derive(Debug, Clone)]
pub struct ObservedObject {
    pub class_id: usize,
    pub visual: VisualFeature,
    pub attributes: AttributeVector,
}

/// Directed relation between two detection indices of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationPair {
    pub src: usize,
    pub dst: usize,
}

/// Whether a candidate node is compared against all global nodes or only
/// against global nodes of its own class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityScope {
    /// Compare only against global nodes with the same class id; a candidate
    /// with no same-class comparand is always added.
    #[default]
    SameClassOnly,
    /// Compare against every global node regardless of class.
    AllNodes,
}

#[derive(Debug, Clone)]
pub struct GraphNode {
    pub class_id: usize,
    pub feature: NodeFeature,
}

/// Directed graph over detected objects.
#[derive(Debug, Clone)]
pub struct SemanticGraph {
    role: GraphRole,
    nodes: Vec<GraphNode>,
    /// Row-major `n x n`, `adj[dst * n + src]`.
    adj: Vec<bool>,
}

impl SemanticGraph {
    pub fn empty(role: GraphRole) -> Self {
        Self {
            role,
            nodes: Vec::new(),
            adj: Vec::new(),
        }
    }

    /// Assemble a graph from explicit parts; used when restoring snapshots.
    pub fn from_parts(
        role: GraphRole,
        nodes: Vec<GraphNode>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = nodes.len();
        let mut graph = Self {
            role,
            adj: vec![false; n * n],
            nodes,
        };
        for &(src, dst) in edges {
            for endpoint in [src, dst] {
                if endpoint >= n {
                    return Err(Error::RelationOutOfBounds {
                        index: endpoint,
                        len: n,
                    });
                }
            }
            graph.set_edge(src, dst);
        }
        Ok(graph)
    }

    pub fn role(&self) -> GraphRole {
        self.role
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &GraphNode {
        &self.nodes[index]
    }

    fn push_node(&mut self, node: GraphNode) -> usize {
        let n = self.nodes.len();
        let mut adj = vec![false; (n + 1) * (n + 1)];
        for dst in 0..n {
            for src in 0..n {
                adj[dst * (n + 1) + src] = self.adj[dst * n + src];
            }
        }
        self.adj = adj;
        self.nodes.push(node);
        n
    }

    fn set_edge(&mut self, src: usize, dst: usize) {
        let n = self.nodes.len();
        self.adj[dst * n + src] = true;
    }

    /// True if the directed edge `src -> dst` is present.
    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        let n = self.nodes.len();
        src < n && dst < n && self.adj[dst * n + src]
    }

    /// Directed edges as `(src, dst)`, ordered by destination then source.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.nodes.len();
        let mut out = Vec::new();
        for dst in 0..n {
            for src in 0..n {
                if self.adj[dst * n + src] {
                    out.push((src, dst));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&b| b).count()
    }

    /// Dense adjacency with `a[[dst, src]] = 1.0`, the form the graph
    /// convolution consumes.
    pub fn adjacency_dense(&self) -> Array2<f64> {
        let n = self.nodes.len();
        Array2::from_shape_fn((n, n), |(dst, src)| {
            if self.adj[dst * n + src] {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Node features stacked into an `n x d` matrix.
    pub fn feature_matrix(&self) -> Array2<f64> {
        let n = self.nodes.len();
        let d = if n == 0 {
            0
        } else {
            self.nodes[0].feature.as_slice().len()
        };
        Array2::from_shape_fn((n, d), |(i, j)| self.nodes[i].feature.as_slice()[j])
    }

    /// Set of class ids present in the graph.
    pub fn class_set(&self) -> BTreeSet<usize> {
        self.nodes.iter().map(|n| n.class_id).collect()
    }

    /// Digest over role, nodes, and edges; equal digests mean byte-identical
    /// graph state.
    pub fn state_digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.role.as_str().as_bytes());
        hasher.update((self.nodes.len() as u64).to_le_bytes());
        for node in &self.nodes {
            hasher.update((node.class_id as u64).to_le_bytes());
            for v in node.feature.as_slice() {
                hasher.update(v.to_le_bytes());
            }
        }
        for &b in &self.adj {
            hasher.update([b as u8]);
        }
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parse the relation knowledge base: one `src_id,dst_id` row per line.
/// Range checking against the class count happens in [`build_prior_graph`].
pub fn parse_relation_kb(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let context = format!("relation kb line {}", lineno + 1);
        let (src, dst) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(&context, "expected 'src_id,dst_id'"))?;
        let src: usize = src
            .trim()
            .parse()
            .map_err(|e| Error::parse(&context, format!("bad source id: {e}")))?;
        let dst: usize = dst
            .trim()
            .parse()
            .map_err(|e| Error::parse(&context, format!("bad destination id: {e}")))?;
        pairs.push((src, dst));
    }
    Ok(pairs)
}

/// Build the static prior graph: one node per vocabulary class, edges from the
/// knowledge base. Prior nodes have no observation behind them, so their
/// visual and attribute segments are zero and only the word embedding is set.
/// The result is never updated during a run.
pub fn build_prior_graph(kb: &[(usize, usize)], bank: &FeatureBank) -> Result<SemanticGraph> {
    let mut graph = SemanticGraph::empty(GraphRole::Prior);
    for class_id in 0..bank.class_count() {
        graph.push_node(GraphNode {
            class_id,
            feature: bank.unobserved_feature(class_id)?,
        });
    }
    for &(src, dst) in kb {
        if src >= bank.class_count() {
            return Err(Error::UnknownClass {
                id: src,
                count: bank.class_count(),
            });
        }
        if dst >= bank.class_count() {
            return Err(Error::UnknownClass {
                id: dst,
                count: bank.class_count(),
            });
        }
        graph.set_edge(src, dst);
    }
    Ok(graph)
}

/// Rebuild the current graph from one frame's detections. The result depends
/// only on the arguments: the current graph carries no state across frames.
pub fn update_current_graph(
    objects: &[ObservedObject],
    relations: &[RelationPair],
    bank: &FeatureBank,
) -> Result<SemanticGraph> {
    let mut graph = SemanticGraph::empty(GraphRole::Current);
    for (i, obj) in objects.iter().enumerate() {
        let feature = bank
            .compose(&obj.visual, &obj.attributes, obj.class_id)
            .map_err(|e| e.in_detection(i))?;
        graph.push_node(GraphNode {
            class_id: obj.class_id,
            feature,
        });
    }
    for rel in relations {
        for endpoint in [rel.src, rel.dst] {
            if endpoint >= objects.len() {
                return Err(Error::RelationOutOfBounds {
                    index: endpoint,
                    len: objects.len(),
                });
            }
        }
        graph.set_edge(rel.src, rel.dst);
    }
    Ok(graph)
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) || threshold.is_nan() {
        return Err(Error::ThresholdOutOfRange { value: threshold });
    }
    Ok(())
}

/// Max cosine similarity of `candidate` against the comparand set drawn from
/// `global`, or `None` when the set is empty.
fn max_similarity(
    global: &SemanticGraph,
    candidate: &GraphNode,
    scope: SimilarityScope,
) -> Option<f64> {
    global
        .nodes
        .iter()
        .filter(|n| match scope {
            SimilarityScope::SameClassOnly => n.class_id == candidate.class_id,
            SimilarityScope::AllNodes => true,
        })
        .map(|n| n.feature.cosine(&candidate.feature))
        .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
}

/// Copy the current-graph nodes listed in `added` (a map from current index to
/// new global index) and the current edges whose endpoints were both added.
fn insert_added_edges(
    global: &mut SemanticGraph,
    current: &SemanticGraph,
    added: &[(usize, usize)],
) {
    for &(cur_src, new_src) in added {
        for &(cur_dst, new_dst) in added {
            if current.has_edge(cur_src, cur_dst) {
                global.set_edge(new_src, new_dst);
            }
        }
    }
}

/// Fold one current graph into the global graph.
///
/// Every current node is compared against the global graph as it stood before
/// this update; a node is added exactly when its maximum similarity over the
/// comparand set is below `threshold` (or the set is empty). Edges of added
/// nodes are kept only between endpoints that were both added in this update,
/// since a skipped node has no index in the global graph.
pub fn update_global_graph(
    prev_global: &SemanticGraph,
    current: &SemanticGraph,
    threshold: f64,
    scope: SimilarityScope,
) -> Result<SemanticGraph> {
    check_threshold(threshold)?;
    if prev_global.role != GraphRole::Global {
        return Err(Error::InvalidConfig {
            message: format!(
                "update_global_graph needs a global-role graph, got {}",
                prev_global.role.as_str()
            ),
        });
    }
    let mut next = prev_global.clone();
    let mut added: Vec<(usize, usize)> = Vec::new();
    for (i, node) in current.nodes.iter().enumerate() {
        let is_new = match max_similarity(prev_global, node, scope) {
            Some(best) => best < threshold,
            None => true,
        };
        if is_new {
            let new_index = next.push_node(node.clone());
            added.push((i, new_index));
        }
    }
    insert_added_edges(&mut next, current, &added);
    Ok(next)
}

/// Jaccard similarity of two class-id sets; 1 when both are empty.
pub fn jaccard_similarity(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    let intersection = a.intersection(b).count();
    intersection as f64 / union as f64
}

/// Gated variant of the global update: when consecutive current graphs share
/// an identical class set the global graph is returned untouched, and
/// otherwise only nodes of classes new to this frame are candidates for the
/// cosine test.
pub fn update_global_graph_jaccard(
    prev_global: &SemanticGraph,
    prev_current: Option<&SemanticGraph>,
    current: &SemanticGraph,
    threshold: f64,
    scope: SimilarityScope,
) -> Result<SemanticGraph> {
    check_threshold(threshold)?;
    if prev_global.role != GraphRole::Global {
        return Err(Error::InvalidConfig {
            message: format!(
                "update_global_graph_jaccard needs a global-role graph, got {}",
                prev_global.role.as_str()
            ),
        });
    }
    let prev_classes = prev_current.map(|g| g.class_set()).unwrap_or_default();
    let cur_classes = current.class_set();
    if jaccard_similarity(&cur_classes, &prev_classes) >= 1.0 {
        return Ok(prev_global.clone());
    }
    let candidate_classes: BTreeSet<usize> =
        cur_classes.difference(&prev_classes).copied().collect();
    let mut next = prev_global.clone();
    let mut added: Vec<(usize, usize)> = Vec::new();
    for (i, node) in current.nodes.iter().enumerate() {
        if !candidate_classes.contains(&node.class_id) {
            continue;
        }
        let is_new = match max_similarity(prev_global, node, scope) {
            Some(best) => best < threshold,
            None => true,
        };
        if is_new {
            let new_index = next.push_node(node.clone());
            added.push((i, new_index));
        }
    }
    insert_added_edges(&mut next, current, &added);
    Ok(next)
}
