//! Weight material for the four graph networks, their readouts, and both
//! output heads. Weights are never trained: they are either generated from a
//! seed or loaded from a JSON file of named matrices.
//!
//! Seeded generation draws every matrix from one ChaCha20 stream in a fixed
//! order: for each role (prior, current, global, map) the GCN layers (w1 then
//! w2 per layer) followed by readout w1, w2, w3; then the action head and the
//! object head. Entries are uniform in (-k, k) with k = 1 / sqrt(fan_in),
//! fan_in being the dimension the multiplication contracts over. Matrices
//! fill row-major. Changing any of this silently changes every seeded run, so
//! it is pinned by tests.

use std::path::Path;

use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph_nn::{GcnLayer, GcnWeights, ReadoutWeights};
use crate::heads::{HeadWeights, ACTION_COUNT, OBJECT_HEAD_DIM};

pub const WEIGHTS_FORMAT: &str = "sgm-weights";
pub const WEIGHTS_VERSION: u32 = 1;

/// The four graphs a step embeds, in concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSource {
    Prior,
    Current,
    Global,
    Map,
}

impl GraphSource {
    pub const ALL: [GraphSource; 4] = [
        GraphSource::Prior,
        GraphSource::Current,
        GraphSource::Global,
        GraphSource::Map,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GraphSource::Prior => "prior",
            GraphSource::Current => "current",
            GraphSource::Global => "global",
            GraphSource::Map => "map",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

/// GCN plus readout weights for one graph role.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleWeights {
    pub gcn: GcnWeights,
    pub readout: ReadoutWeights,
}

/// Where the weights came from; recorded in output artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum WeightProvenance {
    Seed { seed: u64 },
    File { path: String },
}

/// Complete weight material for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub roles: [RoleWeights; 4],
    pub heads: HeadWeights,
    pub provenance: WeightProvenance,
}

fn uniform_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize, fan_in: usize) -> Array2<f64> {
    let k = 1.0 / (fan_in as f64).sqrt();
    let dist = Uniform::new(-k, k);
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(dist.sample(rng));
    }
    Array2::from_shape_vec((rows, cols), data).expect("shape matches data")
}

impl WeightSet {
    /// Generate every matrix from the config's dimensions and the given seed.
    pub fn generate(config: &RunConfig, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let gcn_out = config.gnn.gcn_output_dim();
        let roles = std::array::from_fn(|_| {
            let layers = config
                .gnn
                .layer_dims()
                .into_iter()
                .map(|(input, hidden, output)| GcnLayer {
                    w1: uniform_matrix(&mut rng, input, hidden, input),
                    w2: uniform_matrix(&mut rng, hidden, output, hidden),
                })
                .collect();
            RoleWeights {
                gcn: GcnWeights { layers },
                readout: ReadoutWeights {
                    w1: uniform_matrix(&mut rng, config.gnn.readout_dim, gcn_out, gcn_out),
                    w2: uniform_matrix(&mut rng, config.gnn.attn_dim, gcn_out, gcn_out),
                    w3: uniform_matrix(
                        &mut rng,
                        config.gnn.attn_dim,
                        config.gnn.lang_dim,
                        config.gnn.lang_dim,
                    ),
                },
            }
        });
        let head_in = config.head_input_dim();
        let heads = HeadWeights {
            action: uniform_matrix(&mut rng, ACTION_COUNT, head_in, head_in),
            object: uniform_matrix(&mut rng, OBJECT_HEAD_DIM, head_in, head_in),
        };
        Self {
            roles,
            heads,
            provenance: WeightProvenance::Seed { seed },
        }
    }

    pub fn role(&self, source: GraphSource) -> &RoleWeights {
        &self.roles[source.index()]
    }

    /// Check every matrix against the dimensions the config implies.
    pub fn validate(&self, config: &RunConfig) -> Result<()> {
        let expected = config.gnn.layer_dims();
        let gcn_out = config.gnn.gcn_output_dim();
        for (source, role) in GraphSource::ALL.iter().zip(&self.roles) {
            let name = source.as_str();
            role.gcn.validate()?;
            if role.gcn.layers.len() != expected.len() {
                return Err(Error::dims(
                    format!("{name} gcn layer count"),
                    expected.len(),
                    role.gcn.layers.len(),
                ));
            }
            for (i, (layer, &(input, hidden, output))) in
                role.gcn.layers.iter().zip(&expected).enumerate()
            {
                if layer.w1.dim() != (input, hidden) {
                    return Err(Error::dims(
                        format!("{name} gcn layer {i} w1"),
                        input * hidden,
                        layer.w1.len(),
                    ));
                }
                if layer.w2.dim() != (hidden, output) {
                    return Err(Error::dims(
                        format!("{name} gcn layer {i} w2"),
                        hidden * output,
                        layer.w2.len(),
                    ));
                }
            }
            role.readout.validate()?;
            if role.readout.w1.dim() != (config.gnn.readout_dim, gcn_out) {
                return Err(Error::dims(
                    format!("{name} readout w1"),
                    config.gnn.readout_dim * gcn_out,
                    role.readout.w1.len(),
                ));
            }
            if role.readout.w2.dim() != (config.gnn.attn_dim, gcn_out) {
                return Err(Error::dims(
                    format!("{name} readout w2"),
                    config.gnn.attn_dim * gcn_out,
                    role.readout.w2.len(),
                ));
            }
            if role.readout.w3.dim() != (config.gnn.attn_dim, config.gnn.lang_dim) {
                return Err(Error::dims(
                    format!("{name} readout w3"),
                    config.gnn.attn_dim * config.gnn.lang_dim,
                    role.readout.w3.len(),
                ));
            }
        }
        self.heads.validate()?;
        if self.heads.input_dim() != config.head_input_dim() {
            return Err(Error::dims(
                "head input dim",
                config.head_input_dim(),
                self.heads.input_dim(),
            ));
        }
        Ok(())
    }

    fn named_matrices(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = Vec::new();
        for (source, role) in GraphSource::ALL.iter().zip(&self.roles) {
            let name = source.as_str();
            for (i, layer) in role.gcn.layers.iter().enumerate() {
                out.push((format!("{name}.gcn{i}.w1"), &layer.w1));
                out.push((format!("{name}.gcn{i}.w2"), &layer.w2));
            }
            out.push((format!("{name}.readout.w1"), &role.readout.w1));
            out.push((format!("{name}.readout.w2"), &role.readout.w2));
            out.push((format!("{name}.readout.w3"), &role.readout.w3));
        }
        out.push(("heads.action".to_string(), &self.heads.action));
        out.push(("heads.object".to_string(), &self.heads.object));
        out
    }

    /// Serialize as the JSON weights-file format.
    pub fn to_json(&self) -> serde_json::Value {
        let mut matrices = serde_json::Map::new();
        for (name, matrix) in self.named_matrices() {
            matrices.insert(
                name,
                serde_json::json!({
                    "rows": matrix.nrows(),
                    "cols": matrix.ncols(),
                    "data": matrix.iter().copied().collect::<Vec<f64>>(),
                }),
            );
        }
        serde_json::json!({
            "format": WEIGHTS_FORMAT,
            "version": WEIGHTS_VERSION,
            "matrices": matrices,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_json()).expect("weights serialize");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Load a weights file and check it against the config's dimensions.
    pub fn load(path: &Path, config: &RunConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), config)
    }

    /// Parse the JSON weights-file format and check it against the config's
    /// dimensions. `source` labels parse errors and the recorded provenance.
    pub fn parse(text: &str, source: &str, config: &RunConfig) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawFile {
            format: String,
            version: u32,
            matrices: std::collections::BTreeMap<String, RawMatrix>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawMatrix {
            rows: usize,
            cols: usize,
            data: Vec<f64>,
        }

        let mut raw: RawFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(source.to_string(), e.to_string()))?;
        if raw.format != WEIGHTS_FORMAT || raw.version != WEIGHTS_VERSION {
            return Err(Error::SchemaMismatch {
                expected: format!("{WEIGHTS_FORMAT} v{WEIGHTS_VERSION}"),
                got: format!("{} v{}", raw.format, raw.version),
            });
        }
        let mut take = |name: String| -> Result<Array2<f64>> {
            let m = raw
                .matrices
                .remove(&name)
                .ok_or(Error::MissingWeight { name: name.clone() })?;
            let expected = m
                .rows
                .checked_mul(m.cols)
                .ok_or_else(|| Error::parse(name.clone(), "matrix shape overflows"))?;
            if m.data.len() != expected {
                return Err(Error::dims(name, expected, m.data.len()));
            }
            if m.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { context: name });
            }
            Ok(Array2::from_shape_vec((m.rows, m.cols), m.data).expect("length checked"))
        };
        let layer_count = config.gnn.layer_dims().len();
        let mut roles = Vec::with_capacity(4);
        for source in GraphSource::ALL {
            let name = source.as_str();
            let mut layers = Vec::with_capacity(layer_count);
            for i in 0..layer_count {
                layers.push(GcnLayer {
                    w1: take(format!("{name}.gcn{i}.w1"))?,
                    w2: take(format!("{name}.gcn{i}.w2"))?,
                });
            }
            roles.push(RoleWeights {
                gcn: GcnWeights { layers },
                readout: ReadoutWeights {
                    w1: take(format!("{name}.readout.w1"))?,
                    w2: take(format!("{name}.readout.w2"))?,
                    w3: take(format!("{name}.readout.w3"))?,
                },
            });
        }
        let heads = HeadWeights {
            action: take("heads.action".to_string())?,
            object: take("heads.object".to_string())?,
        };
        if let Some(extra) = raw.matrices.keys().next() {
            return Err(Error::parse(
                source.to_string(),
                format!("unexpected matrix '{extra}'"),
            ));
        }
        let set = Self {
            roles: roles.try_into().expect("exactly four roles"),
            heads,
            provenance: WeightProvenance::File {
                path: source.to_string(),
            },
        };
        set.validate(config)?;
        Ok(set)
    }
}
