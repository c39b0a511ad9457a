//! Run configuration: thresholds, map and camera geometry, network
//! dimensions, seed, and input paths. A config file may supply any subset;
//! missing fields take defaults, and the CLI overrides fields from flags.
//!
//! The config digest is the SHA-256 of the canonical JSON serialization and
//! is embedded in every JSON artifact a run writes.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::feature_bank::NODE_FEATURE_DIM;
use crate::semantic_graphs::SimilarityScope;
use crate::spatial_map::{DEFAULT_CELL_SIZE, MAP_LAYERS, MAP_SIZE};

/// Which global-graph update runs each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GlobalMode {
    #[default]
    Cosine,
    Jaccard,
}

impl GlobalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GlobalMode::Cosine => "cosine",
            GlobalMode::Jaccard => "jaccard",
        }
    }
}

impl FromStr for GlobalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(GlobalMode::Cosine),
            "jaccard" => Ok(GlobalMode::Jaccard),
            other => Err(Error::InvalidConfig {
                message: format!("unknown global mode '{other}', expected cosine or jaccard"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub size: usize,
    pub layers: usize,
    pub cell_size: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            size: MAP_SIZE,
            layers: MAP_LAYERS,
            cell_size: DEFAULT_CELL_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraConfig {
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            fov_deg: 90.0,
            width: 300,
            height: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnConfig {
    /// GCN dimension plan: input, then (hidden, output) per layer. Length
    /// must be odd and at least 3; `[2371, 128, 128]` is one layer.
    pub plan: Vec<usize>,
    pub readout_dim: usize,
    pub attn_dim: usize,
    pub lang_dim: usize,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            plan: vec![NODE_FEATURE_DIM, 128, 128],
            readout_dim: 128,
            attn_dim: 128,
            lang_dim: 512,
        }
    }
}

impl GnnConfig {
    /// (input, hidden, output) per GCN layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize, usize)> {
        self.plan
            .windows(3)
            .step_by(2)
            .map(|w| (w[0], w[1], w[2]))
            .collect()
    }

    pub fn gcn_output_dim(&self) -> usize {
        *self.plan.last().expect("plan validated nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Cosine-similarity threshold for global-graph dedup.
    pub threshold: f64,
    pub global_mode: GlobalMode,
    /// Compare dedup candidates only against same-class global nodes.
    pub same_class_only: bool,
    pub map: MapConfig,
    pub camera: CameraConfig,
    pub gnn: GnnConfig,
    pub seed: u64,
    /// Pixel stride when back-projecting bbox pixels.
    pub stride: usize,
    /// Optional pre-generated weights; absent means seed-generated.
    pub weights_file: Option<PathBuf>,
    /// Class table CSV: `id,name`.
    pub class_file: Option<PathBuf>,
    /// Word-embedding TSV: `name<TAB>f0..f299`.
    pub embedding_file: Option<PathBuf>,
    /// Relation knowledge base CSV: `src_id,dst_id`.
    pub relation_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            threshold: 0.9,
            global_mode: GlobalMode::Cosine,
            same_class_only: true,
            map: MapConfig::default(),
            camera: CameraConfig::default(),
            gnn: GnnConfig::default(),
            seed: 0,
            stride: 1,
            weights_file: None,
            class_file: None,
            embedding_file: None,
            relation_file: None,
        }
    }
}

impl RunConfig {
    /// Read a config file, apply defaults for absent fields, resolve relative
    /// paths against the file's directory, and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    /// Parse config JSON, apply defaults for absent fields, resolve relative
    /// paths against `base`, and validate. `source` labels parse errors.
    pub fn parse(text: &str, source: &str, base: &Path) -> Result<Self> {
        let mut config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::parse(source.to_string(), e.to_string()))?;
        for entry in [
            &mut config.weights_file,
            &mut config.class_file,
            &mut config.embedding_file,
            &mut config.relation_file,
        ] {
            if let Some(p) = entry {
                if p.is_relative() {
                    let joined = base.join(p.as_path());
                    *p = joined;
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) || self.threshold.is_nan() {
            return Err(Error::ThresholdOutOfRange {
                value: self.threshold,
            });
        }
        if self.map.size == 0 || self.map.layers == 0 {
            return Err(Error::InvalidConfig {
                message: "map size and layers must be positive".into(),
            });
        }
        if !(self.map.cell_size.is_finite() && self.map.cell_size > 0.0) {
            return Err(Error::InvalidConfig {
                message: format!("cell_size must be positive, got {}", self.map.cell_size),
            });
        }
        if self.camera.width == 0 || self.camera.height == 0 {
            return Err(Error::InvalidConfig {
                message: "camera dimensions must be positive".into(),
            });
        }
        if !(self.camera.fov_deg > 0.0 && self.camera.fov_deg < 180.0) {
            return Err(Error::InvalidConfig {
                message: format!("camera fov must be in (0, 180), got {}", self.camera.fov_deg),
            });
        }
        if self.gnn.plan.len() < 3 || self.gnn.plan.len() % 2 == 0 {
            return Err(Error::InvalidConfig {
                message: format!(
                    "gnn plan needs an odd length of at least 3, got {:?}",
                    self.gnn.plan
                ),
            });
        }
        if self.gnn.plan[0] != NODE_FEATURE_DIM {
            return Err(Error::InvalidConfig {
                message: format!(
                    "gnn plan must start at the node feature size {NODE_FEATURE_DIM}, got {}",
                    self.gnn.plan[0]
                ),
            });
        }
        if self.gnn.plan.iter().any(|&d| d == 0)
            || self.gnn.readout_dim == 0
            || self.gnn.attn_dim == 0
            || self.gnn.lang_dim == 0
        {
            return Err(Error::InvalidConfig {
                message: "gnn dimensions must be positive".into(),
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig {
                message: "stride must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn similarity_scope(&self) -> SimilarityScope {
        if self.same_class_only {
            SimilarityScope::SameClassOnly
        } else {
            SimilarityScope::AllNodes
        }
    }

    /// Input width of both output heads: four readout blocks plus the
    /// language vector.
    pub fn head_input_dim(&self) -> usize {
        4 * self.gnn.readout_dim + self.gnn.lang_dim
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}
