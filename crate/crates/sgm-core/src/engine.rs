//! Per-trace engine: owns the prior graph, weights, and mutable run state,
//! and executes the per-frame pipeline in a fixed order: current graph,
//! global graph, spatial map, embeddings, heads, selection.
//!
//! State transitions commit only after a whole step succeeds, so a failed
//! step leaves the engine as it was. Everything a step produces is a pure
//! function of (trace prefix, config, seed), which the snapshot format makes
//! checkable: equal state digests mean byte-identical state.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::{GlobalMode, RunConfig};
use crate::error::{Error, Result};
use crate::feature_bank::{feature_digest, FeatureBank, NodeFeature};
use crate::graph_nn::{gcn_forward, gcn_forward_map, graph_embed, GraphEmbedding};
use crate::heads::{head_forward, select_action, step_loss_terms, HeadOutput};
use crate::pgm::DepthImage;
use crate::semantic_graphs::{
    build_prior_graph, update_current_graph, update_global_graph, update_global_graph_jaccard,
    GraphNode, GraphRole, SemanticGraph,
};
use crate::spatial_map::{CameraIntrinsics, SpatialSemanticMap};
use crate::trace::Frame;
use crate::weights::{GraphSource, WeightProvenance, WeightSet};

pub const SNAPSHOT_FORMAT: &str = "sgm-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Mutable per-run state.
#[derive(Debug, Clone)]
pub struct EngineState {
    /// Frames consumed so far; the next frame to step is this index.
    pub step_index: usize,
    pub global: SemanticGraph,
    pub map: SpatialSemanticMap,
    /// Current graph of the previous frame; drives the Jaccard gate.
    pub prev_current: Option<SemanticGraph>,
    /// Language vector of the last completed step; kept so embeddings can be
    /// recomputed from a snapshot without the trace.
    pub last_lang: Option<Vec<f64>>,
}

/// Readout embeddings of the four graphs for one step. `None` marks an empty
/// graph whose block in the concatenation is zero.
#[derive(Debug, Clone)]
pub struct RoleEmbeddings {
    pub prior: GraphEmbedding,
    pub current: Option<GraphEmbedding>,
    pub global: Option<GraphEmbedding>,
    pub map: GraphEmbedding,
}

/// Loss terms for one supervised step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub action_term: f64,
    pub object_term: f64,
    pub total: f64,
}

/// State digests after one step; equal digests mean byte-identical state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDigests {
    pub current: String,
    pub global: String,
    pub map: String,
    pub embedding: String,
}

/// Everything one step produces.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub step: usize,
    pub t: u64,
    pub current_nodes: usize,
    pub current_edges: usize,
    pub global_nodes: usize,
    pub global_edges: usize,
    pub occupied_cells: usize,
    pub embeddings: RoleEmbeddings,
    /// Concatenated readout blocks: prior, current, global, map.
    pub embedding: Vec<f64>,
    pub head: HeadOutput,
    pub action: usize,
    pub object: usize,
    pub loss: Option<StepLoss>,
    pub digests: StepDigests,
}

pub struct Engine {
    config: RunConfig,
    bank: FeatureBank,
    weights: WeightSet,
    intrinsics: CameraIntrinsics,
    prior: SemanticGraph,
    prior_digest: String,
    /// GCN output over the prior graph, computed once: the prior never
    /// changes within a run, so neither does this.
    prior_gcn: Array2<f64>,
    state: EngineState,
}

impl Engine {
    pub fn new(
        config: RunConfig,
        bank: FeatureBank,
        kb: &[(usize, usize)],
        weights: WeightSet,
    ) -> Result<Self> {
        config.validate()?;
        weights.validate(&config)?;
        if config.map.layers != bank.class_count() {
            return Err(Error::InvalidConfig {
                message: format!(
                    "map layers ({}) must equal the class count ({})",
                    config.map.layers,
                    bank.class_count()
                ),
            });
        }
        let intrinsics = CameraIntrinsics::from_fov_deg(
            config.camera.width,
            config.camera.height,
            config.camera.fov_deg,
        )?;
        let prior = build_prior_graph(kb, &bank)?;
        let prior_digest = prior.state_digest();
        let prior_gcn = gcn_forward(
            &prior.feature_matrix(),
            &prior.adjacency_dense(),
            &weights.role(GraphSource::Prior).gcn,
        )?;
        let state = EngineState {
            step_index: 0,
            global: SemanticGraph::empty(GraphRole::Global),
            map: SpatialSemanticMap::new(config.map.size, config.map.layers, config.map.cell_size)?,
            prev_current: None,
            last_lang: None,
        };
        Ok(Self {
            config,
            bank,
            weights,
            intrinsics,
            prior,
            prior_digest,
            prior_gcn,
            state,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn bank(&self) -> &FeatureBank {
        &self.bank
    }

    pub fn prior(&self) -> &SemanticGraph {
        &self.prior
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    /// The cached prior GCN output.
    pub fn prior_embedding_matrix(&self) -> &Array2<f64> {
        &self.prior_gcn
    }

    /// Readout embeddings plus their concatenation for an arbitrary state.
    /// Empty current or global graphs contribute a zero block.
    pub fn embed_state(
        &self,
        current: Option<&SemanticGraph>,
        global: &SemanticGraph,
        map: &SpatialSemanticMap,
        lang: &[f64],
    ) -> Result<(Vec<f64>, RoleEmbeddings)> {
        if lang.len() != self.config.gnn.lang_dim {
            return Err(Error::dims(
                "language vector",
                self.config.gnn.lang_dim,
                lang.len(),
            ));
        }
        let embed_graph = |graph: &SemanticGraph, source: GraphSource| -> Result<GraphEmbedding> {
            let role = self.weights.role(source);
            let node_embeddings = gcn_forward(
                &graph.feature_matrix(),
                &graph.adjacency_dense(),
                &role.gcn,
            )?;
            graph_embed(&node_embeddings, lang, &role.readout)
        };
        let prior = graph_embed(
            &self.prior_gcn,
            lang,
            &self.weights.role(GraphSource::Prior).readout,
        )?;
        let current = match current {
            Some(g) if g.node_count() > 0 => Some(embed_graph(g, GraphSource::Current)?),
            _ => None,
        };
        let global = if global.node_count() > 0 {
            Some(embed_graph(global, GraphSource::Global)?)
        } else {
            None
        };
        let map_role = self.weights.role(GraphSource::Map);
        let map_nodes = gcn_forward_map(map, &map_role.gcn)?;
        let map_embedding = graph_embed(&map_nodes, lang, &map_role.readout)?;

        let r = self.config.gnn.readout_dim;
        let mut concat = Vec::with_capacity(4 * r);
        concat.extend_from_slice(&prior.vector);
        match &current {
            Some(e) => concat.extend_from_slice(&e.vector),
            None => concat.extend(std::iter::repeat(0.0).take(r)),
        }
        match &global {
            Some(e) => concat.extend_from_slice(&e.vector),
            None => concat.extend(std::iter::repeat(0.0).take(r)),
        }
        concat.extend_from_slice(&map_embedding.vector);
        Ok((
            concat,
            RoleEmbeddings {
                prior,
                current,
                global,
                map: map_embedding,
            },
        ))
    }

    /// Execute one frame. The frame's position in the trace must equal the
    /// engine's step index; `depth` is that frame's decoded depth image.
    pub fn step(&mut self, frame: &Frame, depth: &DepthImage) -> Result<StepOutput> {
        let step = self.state.step_index;
        let objects: Vec<_> = frame.detections.iter().map(|d| d.object.clone()).collect();
        let current = update_current_graph(&objects, &frame.relations, &self.bank)
            .map_err(|e| e.in_frame(step))?;

        let global_next = match self.config.global_mode {
            GlobalMode::Cosine => update_global_graph(
                &self.state.global,
                &current,
                self.config.threshold,
                self.config.similarity_scope(),
            ),
            GlobalMode::Jaccard => update_global_graph_jaccard(
                &self.state.global,
                self.state.prev_current.as_ref(),
                &current,
                self.config.threshold,
                self.config.similarity_scope(),
            ),
        }
        .map_err(|e| e.in_frame(step))?;

        let mut map_next = self.state.map.clone();
        for (i, detection) in frame.detections.iter().enumerate() {
            let cells = map_next
                .project_detection(
                    depth,
                    &detection.bbox,
                    &frame.pose,
                    &self.intrinsics,
                    self.config.stride,
                )
                .map_err(|e| e.in_detection(i).in_frame(step))?;
            map_next
                .apply_detection(detection.object.class_id, &cells, &current.node(i).feature)
                .map_err(|e| e.in_detection(i).in_frame(step))?;
        }

        let (embedding, embeddings) = self
            .embed_state(Some(&current), &global_next, &map_next, &frame.lang_hidden)
            .map_err(|e| e.in_frame(step))?;

        let mut head_input = Vec::with_capacity(embedding.len() + frame.lang_hidden.len());
        head_input.extend_from_slice(&embedding);
        head_input.extend_from_slice(&frame.lang_hidden);
        let head = head_forward(&head_input, &self.weights.heads).map_err(|e| e.in_frame(step))?;
        let (action, object) = select_action(&head);

        let loss = match &frame.expert {
            Some(label) => {
                let (action_term, object_term) =
                    step_loss_terms(&head, label).map_err(|e| e.in_frame(step))?;
                Some(StepLoss {
                    action_term,
                    object_term,
                    total: action_term + object_term,
                })
            }
            None => None,
        };

        let digests = StepDigests {
            current: current.state_digest(),
            global: global_next.state_digest(),
            map: map_next.state_digest(),
            embedding: feature_digest(&embedding),
        };
        let output = StepOutput {
            step,
            t: frame.t,
            current_nodes: current.node_count(),
            current_edges: current.edge_count(),
            global_nodes: global_next.node_count(),
            global_edges: global_next.edge_count(),
            occupied_cells: map_next.occupied_count(),
            embeddings,
            embedding,
            head,
            action,
            object,
            loss,
            digests,
        };

        self.state.global = global_next;
        self.state.map = map_next;
        self.state.prev_current = Some(current);
        self.state.last_lang = Some(frame.lang_hidden.clone());
        self.state.step_index = step + 1;
        Ok(output)
    }

    /// Step every remaining frame, starting at the engine's step index;
    /// earlier frames are treated as already consumed (the resume path).
    pub fn run(&mut self, frames: &[Frame], depths: &[DepthImage]) -> Result<Vec<StepOutput>> {
        if frames.len() != depths.len() {
            return Err(Error::dims("depth images", frames.len(), depths.len()));
        }
        let start = self.state.step_index;
        if start > frames.len() {
            return Err(Error::SnapshotMismatch {
                message: format!(
                    "snapshot consumed {start} frames but the trace has only {}",
                    frames.len()
                ),
            });
        }
        let mut outputs = Vec::with_capacity(frames.len() - start);
        for (frame, depth) in frames[start..].iter().zip(&depths[start..]) {
            outputs.push(self.step(frame, depth)?);
        }
        Ok(outputs)
    }

    /// Serialize the engine state as a single-line snapshot JSON string.
    pub fn snapshot_json(&self, config_digest: &str) -> String {
        let file = SnapshotFile {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            weights: self.weights.provenance.clone(),
            config_digest: config_digest.to_string(),
            step_index: self.state.step_index,
            prior_digest: self.prior_digest.clone(),
            last_lang: self.state.last_lang.clone(),
            global: dump_graph(&self.state.global),
            prev_current: self.state.prev_current.as_ref().map(dump_graph),
            map: dump_map(&self.state.map),
        };
        serde_json::to_string(&file).expect("snapshot serializes")
    }

    /// Rebuild an engine from a snapshot. The config digest and the rebuilt
    /// prior graph must match what the snapshot records.
    pub fn resume(
        config: RunConfig,
        bank: FeatureBank,
        kb: &[(usize, usize)],
        weights: WeightSet,
        snapshot_text: &str,
        config_digest: &str,
    ) -> Result<Self> {
        let file: SnapshotFile = serde_json::from_str(snapshot_text)
            .map_err(|e| Error::parse("snapshot", e.to_string()))?;
        if file.format != SNAPSHOT_FORMAT || file.version != SNAPSHOT_VERSION {
            return Err(Error::SchemaMismatch {
                expected: format!("{SNAPSHOT_FORMAT} v{SNAPSHOT_VERSION}"),
                got: format!("{} v{}", file.format, file.version),
            });
        }
        if file.config_digest != config_digest {
            return Err(Error::SnapshotMismatch {
                message: format!(
                    "config digest {} does not match snapshot's {}",
                    config_digest, file.config_digest
                ),
            });
        }
        let mut engine = Engine::new(config, bank, kb, weights)?;
        if engine.prior_digest != file.prior_digest {
            return Err(Error::SnapshotMismatch {
                message: "prior graph differs from the one the snapshot was taken with".into(),
            });
        }
        let global = restore_graph(&file.global, GraphRole::Global)?;
        let prev_current = file
            .prev_current
            .as_ref()
            .map(|dump| restore_graph(dump, GraphRole::Current))
            .transpose()?;
        let map = restore_map(&file.map, &engine.config)?;
        engine.state = EngineState {
            step_index: file.step_index,
            global,
            map,
            prev_current,
            last_lang: file.last_lang,
        };
        Ok(engine)
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    format: String,
    version: u32,
    weights: WeightProvenance,
    config_digest: String,
    step_index: usize,
    prior_digest: String,
    last_lang: Option<Vec<f64>>,
    global: GraphDump,
    prev_current: Option<GraphDump>,
    map: MapDump,
}

#[derive(Serialize, Deserialize)]
struct GraphDump {
    role: String,
    nodes: Vec<NodeDump>,
    edges: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct NodeDump {
    class_id: usize,
    feature: String,
}

#[derive(Serialize, Deserialize)]
struct MapDump {
    size: usize,
    layers: usize,
    cell_size: f64,
    cells: Vec<CellDump>,
}

#[derive(Serialize, Deserialize)]
struct CellDump {
    i: usize,
    j: usize,
    layer: usize,
    feature: String,
}

fn feature_to_b64(feature: &NodeFeature) -> String {
    let mut bytes = Vec::with_capacity(feature.as_slice().len() * 8);
    for v in feature.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn feature_from_b64(text: &str) -> Result<NodeFeature> {
    let bytes = BASE64
        .decode(text)
        .map_err(|e| Error::parse("snapshot feature", e.to_string()))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::parse(
            "snapshot feature",
            format!("byte length {} is not a multiple of 8", bytes.len()),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    NodeFeature::from_raw(values)
}

fn dump_graph(graph: &SemanticGraph) -> GraphDump {
    GraphDump {
        role: graph.role().as_str().to_string(),
        nodes: graph
            .nodes()
            .iter()
            .map(|n| NodeDump {
                class_id: n.class_id,
                feature: feature_to_b64(&n.feature),
            })
            .collect(),
        edges: graph.edges().iter().map(|&(s, d)| [s, d]).collect(),
    }
}

fn restore_graph(dump: &GraphDump, expected_role: GraphRole) -> Result<SemanticGraph> {
    if dump.role != expected_role.as_str() {
        return Err(Error::SnapshotMismatch {
            message: format!(
                "graph role '{}' where '{}' was expected",
                dump.role,
                expected_role.as_str()
            ),
        });
    }
    let nodes = dump
        .nodes
        .iter()
        .map(|n| {
            Ok(GraphNode {
                class_id: n.class_id,
                feature: feature_from_b64(&n.feature)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let edges: Vec<(usize, usize)> = dump.edges.iter().map(|&[s, d]| (s, d)).collect();
    SemanticGraph::from_parts(expected_role, nodes, &edges)
}

fn dump_map(map: &SpatialSemanticMap) -> MapDump {
    MapDump {
        size: map.size(),
        layers: map.layers(),
        cell_size: map.cell_size(),
        cells: map
            .occupied_cells()
            .map(|(addr, feature)| CellDump {
                i: addr.i,
                j: addr.j,
                layer: addr.layer,
                feature: feature_to_b64(feature),
            })
            .collect(),
    }
}

fn restore_map(dump: &MapDump, config: &RunConfig) -> Result<SpatialSemanticMap> {
    if dump.size != config.map.size
        || dump.layers != config.map.layers
        || dump.cell_size != config.map.cell_size
    {
        return Err(Error::SnapshotMismatch {
            message: format!(
                "map geometry {}x{}x{} (cell {}) does not match config {}x{}x{} (cell {})",
                dump.size,
                dump.size,
                dump.layers,
                dump.cell_size,
                config.map.size,
                config.map.size,
                config.map.layers,
                config.map.cell_size,
            ),
        });
    }
    let mut map = SpatialSemanticMap::new(dump.size, dump.layers, dump.cell_size)?;
    for cell in &dump.cells {
        map.write_cell(cell.i, cell.j, cell.layer, feature_from_b64(&cell.feature)?)?;
    }
    Ok(map)
}
