//! Graph-convolution forward pass and the language-conditioned attention
//! readout.
//!
//! One GCN layer computes `Ahat * relu(Ahat * H * W1) * W2` where
//! `Ahat = Dhat^{-1/2} (A + I) Dhat^{-1/2}` and `Dhat` holds the row sums of
//! `A + I`; a row softmax is applied once, after the final layer. The readout
//! scores each node embedding against a projected language vector, softmaxes
//! the scores into attention weights, and returns the rectified projection of
//! the attention-weighted sum.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::spatial_map::SpatialSemanticMap;

/// Numerically stable softmax; an empty slice yields an empty vector.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn softmax_rows_in_place(m: &mut Array2<f64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let sm = softmax(row.as_slice().expect("row is contiguous"));
        for (dst, src) in row.iter_mut().zip(sm) {
            *dst = src;
        }
    }
}

/// `Dhat^{-1/2} (A + I) Dhat^{-1/2}` with `Dhat` the row sums of `A + I`.
/// The adjacency is used exactly as stored; it need not be symmetric.
pub fn normalized_adjacency(adj: &Array2<f64>) -> Result<Array2<f64>> {
    let n = adj.nrows();
    if adj.ncols() != n {
        return Err(Error::dims("adjacency", n * n, n * adj.ncols()));
    }
    let mut a_plus = adj.clone();
    for i in 0..n {
        a_plus[[i, i]] += 1.0;
    }
    let inv_sqrt: Vec<f64> = a_plus
        .axis_iter(Axis(0))
        .map(|row| row.sum().sqrt().recip())
        .collect();
    for ((i, j), v) in a_plus.indexed_iter_mut() {
        *v *= inv_sqrt[i] * inv_sqrt[j];
    }
    Ok(a_plus)
}

fn relu_in_place(m: &mut Array2<f64>) {
    m.mapv_inplace(|v| v.max(0.0));
}

/// One convolution layer: `H * W1` lifts features, `W2` mixes them after the
/// rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

/// Weight stack for one graph's GCN.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnWeights {
    pub layers: Vec<GcnLayer>,
}

impl GcnWeights {
    pub fn input_dim(&self) -> usize {
        self.layers[0].w1.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").w2.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidConfig {
                message: "gcn needs at least one layer".into(),
            });
        }
        let mut carry = self.input_dim();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.w1.nrows() != carry {
                return Err(Error::dims(
                    format!("gcn layer {i} w1 rows"),
                    carry,
                    layer.w1.nrows(),
                ));
            }
            if layer.w2.nrows() != layer.w1.ncols() {
                return Err(Error::dims(
                    format!("gcn layer {i} w2 rows"),
                    layer.w1.ncols(),
                    layer.w2.nrows(),
                ));
            }
            carry = layer.w2.ncols();
        }
        Ok(())
    }
}

/// Dense GCN forward pass over `n` nodes. Returns `n x output_dim` rows, each
/// a probability-like softmax row. A zero-node input passes through as an
/// empty matrix.
pub fn gcn_forward(
    features: &Array2<f64>,
    adj: &Array2<f64>,
    weights: &GcnWeights,
) -> Result<Array2<f64>> {
    weights.validate()?;
    if adj.nrows() != features.nrows() {
        return Err(Error::dims("adjacency rows", features.nrows(), adj.nrows()));
    }
    if features.nrows() == 0 {
        return Ok(Array2::zeros((0, weights.output_dim())));
    }
    if features.ncols() != weights.input_dim() {
        return Err(Error::dims(
            "gcn input features",
            weights.input_dim(),
            features.ncols(),
        ));
    }
    let ahat = normalized_adjacency(adj)?;
    let mut h = features.clone();
    for layer in &weights.layers {
        let mut z = ahat.dot(&h.dot(&layer.w1));
        relu_in_place(&mut z);
        h = ahat.dot(&z.dot(&layer.w2));
    }
    softmax_rows_in_place(&mut h);
    for v in h.iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "gcn output".into(),
            });
        }
    }
    Ok(h)
}

/// Sparse feature rows keyed by node index; absent rows are zero.
type SparseRows = BTreeMap<usize, Vec<f64>>;

fn sparse_matmul(rows: &SparseRows, w: &Array2<f64>) -> SparseRows {
    rows.iter()
        .map(|(&idx, row)| {
            let v = Array1::from_vec(row.clone());
            (idx, v.dot(w).to_vec())
        })
        .collect()
}

/// Multiply the map's normalized adjacency into sparse rows. The map graph is
/// symmetric with every degree known from the grid, so `Ahat` is never
/// materialized: each nonzero input row scatters into itself and its
/// neighbors.
fn map_adjacency_mul(map: &SpatialSemanticMap, rows: &SparseRows, dim: usize) -> SparseRows {
    let inv_sqrt = |node: usize| ((map.neighbors(node).len() + 1) as f64).sqrt().recip();
    let mut out: SparseRows = BTreeMap::new();
    for (&j, row) in rows {
        let w_j = inv_sqrt(j);
        let mut targets = map.neighbors(j);
        targets.push(j);
        targets.sort_unstable();
        for i in targets {
            let scale = inv_sqrt(i) * w_j;
            let dst = out.entry(i).or_insert_with(|| vec![0.0; dim]);
            for (d, s) in dst.iter_mut().zip(row) {
                *d += scale * s;
            }
        }
    }
    out
}

fn sparse_relu(rows: &mut SparseRows) {
    for row in rows.values_mut() {
        for v in row.iter_mut() {
            *v = v.max(0.0);
        }
    }
}

/// GCN forward pass over the spatial map without materializing its adjacency
/// or the mostly-zero feature matrix. Unoccupied cells carry zero features,
/// which stay zero through every linear stage and the rectifier, so only rows
/// reachable from occupied cells are computed; the final softmax fills every
/// remaining row with the uniform distribution a zero row softmaxes to.
pub fn gcn_forward_map(map: &SpatialSemanticMap, weights: &GcnWeights) -> Result<Array2<f64>> {
    weights.validate()?;
    let mut rows: SparseRows = map
        .occupied_feature_rows()
        .into_iter()
        .map(|(idx, f)| (idx, f.as_slice().to_vec()))
        .collect();
    if let Some(row) = rows.values().next() {
        if row.len() != weights.input_dim() {
            return Err(Error::dims("map features", weights.input_dim(), row.len()));
        }
    }
    for layer in &weights.layers {
        let mut z = map_adjacency_mul(map, &sparse_matmul(&rows, &layer.w1), layer.w1.ncols());
        sparse_relu(&mut z);
        rows = map_adjacency_mul(map, &sparse_matmul(&z, &layer.w2), layer.w2.ncols());
    }
    let n = map.node_count();
    let out_dim = weights.output_dim();
    let uniform = 1.0 / out_dim as f64;
    let mut out = Array2::from_elem((n, out_dim), uniform);
    for (idx, row) in &rows {
        let sm = softmax(row);
        for (c, v) in sm.into_iter().enumerate() {
            out[[*idx, c]] = v;
        }
    }
    for v in out.iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "map gcn output".into(),
            });
        }
    }
    Ok(out)
}

/// Readout weights. `w2 * h` and `w3 * lang` meet in an inner product, so
/// their row counts must match.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights {
    /// Projects the attention-weighted node sum to the output embedding.
    pub w1: Array2<f64>,
    /// Projects a node embedding into the attention space.
    pub w2: Array2<f64>,
    /// Projects the language hidden state into the attention space.
    pub w3: Array2<f64>,
}

impl ReadoutWeights {
    pub fn validate(&self) -> Result<()> {
        if self.w2.nrows() != self.w3.nrows() {
            return Err(Error::dims(
                "attention projections",
                self.w2.nrows(),
                self.w3.nrows(),
            ));
        }
        if self.w1.ncols() != self.w2.ncols() {
            return Err(Error::dims(
                "readout projection columns",
                self.w2.ncols(),
                self.w1.ncols(),
            ));
        }
        Ok(())
    }
}

/// One graph's pooled embedding plus the attention weights that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEmbedding {
    pub vector: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Attention readout over node embeddings. Scores each node against the
/// projected language vector, softmaxes into weights `alpha`, and returns the
/// rectified projection of the weighted sum. An empty graph is a hard error;
/// callers that want a zero block substitute it themselves.
pub fn graph_embed(
    embeddings: &Array2<f64>,
    lang: &[f64],
    weights: &ReadoutWeights,
) -> Result<GraphEmbedding> {
    weights.validate()?;
    let n = embeddings.nrows();
    if n == 0 {
        return Err(Error::EmptyReadout);
    }
    if embeddings.ncols() != weights.w2.ncols() {
        return Err(Error::dims(
            "readout node dim",
            weights.w2.ncols(),
            embeddings.ncols(),
        ));
    }
    if lang.len() != weights.w3.ncols() {
        return Err(Error::dims("language vector", weights.w3.ncols(), lang.len()));
    }
    let lang_v = ArrayView1::from(lang);
    let query = weights.w3.dot(&lang_v);
    let keys = embeddings.dot(&weights.w2.t());
    let scores = keys.dot(&query);
    let alpha = softmax(scores.as_slice().expect("scores are contiguous"));
    let alpha_v = ArrayView1::from(alpha.as_slice());
    let pooled = alpha_v.dot(embeddings);
    let mut vector = weights.w1.dot(&pooled).to_vec();
    for v in vector.iter_mut() {
        *v = v.max(0.0);
    }
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "graph embedding".into(),
        });
    }
    Ok(GraphEmbedding { vector, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_bank::NodeFeature;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn identity_weights(dim: usize) -> GcnWeights {
        GcnWeights {
            layers: vec![GcnLayer {
                w1: Array2::eye(dim),
                w2: Array2::eye(dim),
            }],
        }
    }

    fn random_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn single_node_identity_hand_value() {
        let features = array![[2.0, -3.0]];
        let adj = Array2::zeros((1, 1));
        let out = gcn_forward(&features, &adj, &identity_weights(2)).unwrap();
        let e2 = 2.0f64.exp();
        let expected = [e2 / (e2 + 1.0), 1.0 / (e2 + 1.0)];
        assert!((out[[0, 0]] - expected[0]).abs() < 1e-12);
        assert!((out[[0, 1]] - expected[1]).abs() < 1e-12);
        assert!((out[[0, 0]] - 0.880797).abs() < 1e-6);
    }

    #[test]
    fn softmax_basics() {
        assert!(softmax(&[]).is_empty());
        let p = softmax(&[1.0, 1.0, 1.0]);
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        // Shift invariance.
        let a = softmax(&[1.0, 2.0, 3.0]);
        let b = softmax(&[101.0, 102.0, 103.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_adjacency_symmetric_chain() {
        let adj = array![[0.0, 1.0], [1.0, 0.0]];
        let ahat = normalized_adjacency(&adj).unwrap();
        for v in ahat.iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_adjacency_directed_uses_row_sums() {
        // Single edge 0 -> 1 stored as adj[1][0].
        let adj = array![[0.0, 0.0], [1.0, 0.0]];
        let ahat = normalized_adjacency(&adj).unwrap();
        assert!((ahat[[0, 0]] - 1.0).abs() < 1e-15);
        assert!((ahat[[0, 1]] - 0.0).abs() < 1e-15);
        assert!((ahat[[1, 0]] - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!((ahat[[1, 1]] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gcn_rejects_dim_mismatches() {
        let features = Array2::<f64>::zeros((2, 3));
        let adj = Array2::<f64>::zeros((2, 2));
        assert!(gcn_forward(&features, &adj, &identity_weights(4)).is_err());
        let bad_adj = Array2::<f64>::zeros((3, 3));
        assert!(gcn_forward(&features, &bad_adj, &identity_weights(3)).is_err());
    }

    #[test]
    fn gcn_empty_graph_passes_through() {
        let features = Array2::<f64>::zeros((0, 3));
        let adj = Array2::<f64>::zeros((0, 0));
        let out = gcn_forward(&features, &adj, &identity_weights(3)).unwrap();
        assert_eq!(out.dim(), (0, 3));
    }

    /// Naive reference: explicit loops, no matrix library.
    fn gcn_reference(features: &[Vec<f64>], adj: &[Vec<f64>], weights: &GcnWeights) -> Vec<Vec<f64>> {
        let n = features.len();
        let mut a_plus = adj.to_vec();
        for (i, row) in a_plus.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        let deg: Vec<f64> = a_plus.iter().map(|r| r.iter().sum()).collect();
        let mut ahat = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                ahat[i][j] = a_plus[i][j] / (deg[i].sqrt() * deg[j].sqrt());
            }
        }
        let matmul = |a: &[Vec<f64>], b: &Array2<f64>| -> Vec<Vec<f64>> {
            a.iter()
                .map(|row| {
                    (0..b.ncols())
                        .map(|c| row.iter().enumerate().map(|(k, v)| v * b[[k, c]]).sum())
                        .collect()
                })
                .collect()
        };
        let square = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            a.iter()
                .map(|row| {
                    (0..b[0].len())
                        .map(|c| row.iter().enumerate().map(|(k, v)| v * b[k][c]).sum())
                        .collect()
                })
                .collect()
        };
        let mut h = features.to_vec();
        for layer in &weights.layers {
            let mut z = square(&ahat, &matmul(&h, &layer.w1));
            for row in z.iter_mut() {
                for v in row.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            h = square(&ahat, &matmul(&z, &layer.w2));
        }
        h.iter()
            .map(|row| softmax(row))
            .collect()
    }

    #[test]
    fn gcn_matches_naive_reference() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for n in [1usize, 2, 4, 6] {
            let features = random_matrix(&mut rng, n, 5);
            let mut adj = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.4) {
                        adj[[i, j]] = 1.0;
                    }
                }
            }
            let weights = GcnWeights {
                layers: vec![
                    GcnLayer {
                        w1: random_matrix(&mut rng, 5, 4),
                        w2: random_matrix(&mut rng, 4, 3),
                    },
                    GcnLayer {
                        w1: random_matrix(&mut rng, 3, 4),
                        w2: random_matrix(&mut rng, 4, 3),
                    },
                ],
            };
            let out = gcn_forward(&features, &adj, &weights).unwrap();
            let feat_rows: Vec<Vec<f64>> = features.rows().into_iter().map(|r| r.to_vec()).collect();
            let adj_rows: Vec<Vec<f64>> = adj.rows().into_iter().map(|r| r.to_vec()).collect();
            let reference = gcn_reference(&feat_rows, &adj_rows, &weights);
            for i in 0..n {
                for c in 0..3 {
                    assert!(
                        (out[[i, c]] - reference[i][c]).abs() < 1e-9,
                        "mismatch at ({i}, {c})"
                    );
                }
            }
        }
    }

    #[test]
    fn map_gcn_matches_dense_path() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let mut map = SpatialSemanticMap::new(3, 4, 0.25).unwrap();
        let d = 6;
        for (i, j, layer) in [(0, 0, 1), (1, 2, 0), (2, 1, 3), (1, 2, 2)] {
            let mut raw = vec![0.0; crate::feature_bank::NODE_FEATURE_DIM];
            for v in raw.iter_mut().take(d) {
                *v = rng.gen_range(-2.0..2.0);
            }
            map.write_cell(i, j, layer, NodeFeature::from_raw(raw).unwrap())
                .unwrap();
        }
        let weights = GcnWeights {
            layers: vec![GcnLayer {
                w1: {
                    let mut w = Array2::zeros((crate::feature_bank::NODE_FEATURE_DIM, 5));
                    for r in 0..d {
                        for c in 0..5 {
                            w[[r, c]] = rng.gen_range(-1.0..1.0);
                        }
                    }
                    w
                },
                w2: random_matrix(&mut rng, 5, 4),
            }],
        };
        let sparse = gcn_forward_map(&map, &weights).unwrap();
        // Dense path over the same graph.
        let n = map.node_count();
        let mut features = Array2::zeros((n, crate::feature_bank::NODE_FEATURE_DIM));
        for (idx, f) in map.occupied_feature_rows() {
            for (c, v) in f.as_slice().iter().enumerate() {
                features[[idx, c]] = *v;
            }
        }
        let dense = gcn_forward(&features, &map.adjacency_dense(), &weights).unwrap();
        assert_eq!(sparse.dim(), dense.dim());
        for (s, d) in sparse.iter().zip(dense.iter()) {
            assert!((s - d).abs() < 1e-9);
        }
    }

    #[test]
    fn map_gcn_empty_map_is_uniform() {
        let map = SpatialSemanticMap::new(2, 2, 0.25).unwrap();
        let weights = GcnWeights {
            layers: vec![GcnLayer {
                w1: Array2::eye(crate::feature_bank::NODE_FEATURE_DIM),
                w2: {
                    let mut rng = ChaCha20Rng::seed_from_u64(5);
                    random_matrix(&mut rng, crate::feature_bank::NODE_FEATURE_DIM, 4)
                },
            }],
        };
        let out = gcn_forward_map(&map, &weights).unwrap();
        assert_eq!(out.dim(), (8, 4));
        for v in out.iter() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    fn small_readout(rng: &mut ChaCha20Rng, embed: usize, attn: usize, lang: usize, out: usize) -> ReadoutWeights {
        ReadoutWeights {
            w1: random_matrix(rng, out, embed),
            w2: random_matrix(rng, attn, embed),
            w3: random_matrix(rng, attn, lang),
        }
    }

    #[test]
    fn readout_empty_graph_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let weights = small_readout(&mut rng, 4, 3, 5, 4);
        let embeddings = Array2::<f64>::zeros((0, 4));
        assert!(matches!(
            graph_embed(&embeddings, &[0.0; 5], &weights),
            Err(Error::EmptyReadout)
        ));
    }

    #[test]
    fn readout_single_node() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let weights = small_readout(&mut rng, 4, 3, 5, 4);
        let embeddings = random_matrix(&mut rng, 1, 4);
        let lang = [0.3, -0.2, 0.9, 0.0, 1.5];
        let out = graph_embed(&embeddings, &lang, &weights).unwrap();
        assert_eq!(out.alpha, vec![1.0]);
        let expected = weights.w1.dot(&embeddings.row(0));
        for (got, exp) in out.vector.iter().zip(expected.iter()) {
            assert!((got - exp.max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn readout_alpha_sums_to_one_and_permutes() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let weights = small_readout(&mut rng, 4, 3, 5, 4);
        let embeddings = random_matrix(&mut rng, 5, 4);
        let lang: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = graph_embed(&embeddings, &lang, &weights).unwrap();
        let total: f64 = out.alpha.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Reverse the node order; alpha reverses, the embedding stays put.
        let reversed_rows: Vec<f64> = embeddings
            .rows()
            .into_iter()
            .rev()
            .flat_map(|r| r.to_vec())
            .collect();
        let reversed = Array2::from_shape_vec((5, 4), reversed_rows).unwrap();
        let out_rev = graph_embed(&reversed, &lang, &weights).unwrap();
        for (a, b) in out.alpha.iter().zip(out_rev.alpha.iter().rev()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in out.vector.iter().zip(out_rev.vector.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn readout_lang_scaling_keeps_alpha_argmax() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let weights = small_readout(&mut rng, 4, 3, 5, 4);
        let embeddings = random_matrix(&mut rng, 6, 4);
        let lang: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scaled: Vec<f64> = lang.iter().map(|v| v * 3.5).collect();
        let a = graph_embed(&embeddings, &lang, &weights).unwrap();
        let b = graph_embed(&embeddings, &scaled, &weights).unwrap();
        let argmax = |xs: &[f64]| {
            xs.iter()
                .enumerate()
                .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmax(&a.alpha), argmax(&b.alpha));
    }

    #[test]
    fn readout_validates_dims() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let weights = small_readout(&mut rng, 4, 3, 5, 4);
        let embeddings = random_matrix(&mut rng, 2, 4);
        assert!(graph_embed(&embeddings, &[0.0; 7], &weights).is_err());
        let wrong = random_matrix(&mut rng, 2, 6);
        assert!(graph_embed(&wrong, &[0.0; 5], &weights).is_err());
    }

    proptest! {
        /// Every output row is a probability distribution.
        #[test]
        fn gcn_rows_sum_to_one(
            n in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let features = random_matrix(&mut rng, n, 4);
            let mut adj = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.3) {
                        adj[[i, j]] = 1.0;
                    }
                }
            }
            let weights = GcnWeights {
                layers: vec![GcnLayer {
                    w1: random_matrix(&mut rng, 4, 3),
                    w2: random_matrix(&mut rng, 3, 3),
                }],
            };
            let out = gcn_forward(&features, &adj, &weights).unwrap();
            for row in out.rows() {
                let sum: f64 = row.sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }
}
