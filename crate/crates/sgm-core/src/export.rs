//! Inspection artifacts: graph dumps as JSON and DOT, map renders as PGM,
//! occupancy dumps, and embedding dumps. Every artifact embeds the run
//! provenance (seed and config digest) so outputs are traceable; all writers
//! are deterministic byte-for-byte.

use serde_json::json;

use crate::error::Result;
use crate::feature_bank::FeatureBank;
use crate::graph_nn::GraphEmbedding;
use crate::semantic_graphs::SemanticGraph;
use crate::spatial_map::SpatialSemanticMap;
use crate::weights::WeightProvenance;

/// Human-readable provenance string embedded in artifacts.
pub fn provenance_comment(weights: &WeightProvenance, config_digest: &str) -> String {
    match weights {
        WeightProvenance::Seed { seed } => format!("seed {seed} config {config_digest}"),
        WeightProvenance::File { path } => format!("weights {path} config {config_digest}"),
    }
}

/// Graph as JSON: node ids, class ids, feature digests, and directed edges.
pub fn graph_to_json(graph: &SemanticGraph, provenance: &str) -> serde_json::Value {
    let nodes: Vec<_> = graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, n)| {
            json!({
                "id": id,
                "class": n.class_id,
                "feature_digest": n.feature.digest(),
            })
        })
        .collect();
    let edges: Vec<_> = graph.edges().iter().map(|&(s, d)| json!([s, d])).collect();
    json!({
        "provenance": provenance,
        "role": graph.role().as_str(),
        "nodes": nodes,
        "edges": edges,
    })
}

/// Graph as GraphViz DOT, nodes labeled with class names.
pub fn graph_to_dot(graph: &SemanticGraph, bank: &FeatureBank, provenance: &str) -> Result<String> {
    let mut out = format!("// {provenance}\ndigraph {} {{\n", graph.role().as_str());
    for (id, node) in graph.nodes().iter().enumerate() {
        let name = bank.class_name(node.class_id)?;
        out.push_str(&format!("  n{id} [label=\"{name} #{id}\"];\n"));
    }
    for (src, dst) in graph.edges() {
        out.push_str(&format!("  n{src} -> n{dst};\n"));
    }
    out.push_str("}\n");
    Ok(out)
}

fn pgm_with_samples(size: usize, samples: &[u16], provenance: &str) -> Vec<u8> {
    let mut out = format!("P5\n# {provenance}\n{size} {size}\n65535\n").into_bytes();
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// One map layer as a 16-bit PGM: occupied cells are 65535, background 0.
/// Pixel (x, y) is grid cell (i = x, j = y).
pub fn map_layer_pgm(map: &SpatialSemanticMap, layer: usize, provenance: &str) -> Vec<u8> {
    let s = map.size();
    let mut samples = vec![0u16; s * s];
    for (addr, _) in map.occupied_cells() {
        if addr.layer == layer {
            samples[addr.j * s + addr.i] = u16::MAX;
        }
    }
    pgm_with_samples(s, &samples, provenance)
}

/// All layers flattened to one PGM: each pixel holds `class id + 1` of the
/// occupied layer at that cell, background 0. Where several layers occupy one
/// cell the lowest class id wins, matching the argmax tie rule.
pub fn map_flat_pgm(map: &SpatialSemanticMap, provenance: &str) -> Vec<u8> {
    let s = map.size();
    let mut samples = vec![0u16; s * s];
    // occupied_cells iterates layers ascending; keep the first write per cell.
    for (addr, _) in map.occupied_cells() {
        let slot = &mut samples[addr.j * s + addr.i];
        if *slot == 0 {
            *slot = (addr.layer + 1) as u16;
        }
    }
    pgm_with_samples(s, &samples, provenance)
}

/// Occupancy as JSON, cells sorted by (layer, row, column).
pub fn map_cells_json(map: &SpatialSemanticMap, provenance: &str) -> serde_json::Value {
    let cells: Vec<_> = map
        .occupied_cells()
        .map(|(addr, feature)| {
            json!({
                "i": addr.i,
                "j": addr.j,
                "layer": addr.layer,
                "feature_digest": feature.digest(),
            })
        })
        .collect();
    json!({
        "provenance": provenance,
        "size": map.size(),
        "layers": map.layers(),
        "cell_size": map.cell_size(),
        "cells": cells,
    })
}

/// One graph's readout result: attention weights and the pooled vector.
pub fn embedding_json(
    graph_role: &str,
    embedding: &GraphEmbedding,
    provenance: &str,
) -> serde_json::Value {
    json!({
        "provenance": provenance,
        "graph_role": graph_role,
        "alpha": embedding.alpha,
        "X": embedding.vector,
    })
}
