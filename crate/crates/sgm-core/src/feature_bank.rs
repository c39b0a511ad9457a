//! Object vocabulary, word embeddings, and node-feature composition.
//!
//! A node feature is the 2371-d concatenation `visual (2048) || attributes (23)
//! || word embedding (300)`. The bank owns the class table and the embedding
//! rows and is immutable after load, so it can be shared freely across threads.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dimension of the detector embedding of one object.
pub const VISUAL_DIM: usize = 2048;
/// Number of attribute flags per object.
pub const ATTRIBUTE_DIM: usize = 23;
/// Dimension of one word-embedding row.
pub const WORD_DIM: usize = 300;
/// Full node-feature dimension: visual || attributes || word.
pub const NODE_FEATURE_DIM: usize = VISUAL_DIM + ATTRIBUTE_DIM + WORD_DIM;
/// Number of object classes in the full vocabulary.
pub const CLASS_COUNT: usize = 106;

/// One entry of the class table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectClass {
    pub id: usize,
    pub name: String,
}

/// Detector embedding of one object, length [`VISUAL_DIM`], all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualFeature(Vec<f64>);

impl VisualFeature {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != VISUAL_DIM {
            return Err(Error::dims("visual feature", VISUAL_DIM, values.len()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "visual feature".into(),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; VISUAL_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Attribute flags of one object, length [`ATTRIBUTE_DIM`], each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeVector(Vec<f64>);

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != ATTRIBUTE_DIM {
            return Err(Error::dims("attribute vector", ATTRIBUTE_DIM, values.len()));
        }
        if !values.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::parse(
                "attribute vector",
                "values must be finite and within [0, 1]",
            ));
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; ATTRIBUTE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// The 2371-d node feature: `visual || attributes || word`.
#[derive(Clone, PartialEq)]
pub struct NodeFeature(Vec<f64>);

impl NodeFeature {
    /// Build from a raw vector. Checks length and finiteness only; segment
    /// ranges are enforced when features are composed from validated parts.
    pub fn from_raw(values: Vec<f64>) -> Result<Self> {
        if values.len() != NODE_FEATURE_DIM {
            return Err(Error::dims("node feature", NODE_FEATURE_DIM, values.len()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "node feature".into(),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; NODE_FEATURE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Visual segment, indices `[0, 2048)`.
    pub fn visual(&self) -> &[f64] {
        &self.0[..VISUAL_DIM]
    }

    /// Attribute segment, indices `[2048, 2071)`.
    pub fn attributes(&self) -> &[f64] {
        &self.0[VISUAL_DIM..VISUAL_DIM + ATTRIBUTE_DIM]
    }

    /// Word-embedding segment, indices `[2071, 2371)`.
    pub fn word(&self) -> &[f64] {
        &self.0[VISUAL_DIM + ATTRIBUTE_DIM..]
    }

    /// Cosine similarity between two node features, in `[-1, 1]`.
    ///
    /// Returns 0 when either vector has zero norm, so degenerate nodes read
    /// as maximally dissimilar and are added rather than silently merged.
    pub fn cosine(&self, other: &NodeFeature) -> f64 {
        cosine(&self.0, &other.0).expect("node features have equal length")
    }

    /// Short hex digest of the feature bytes, stable across runs.
    pub fn digest(&self) -> String {
        feature_digest(&self.0)
    }
}

impl fmt::Debug for NodeFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeFeature[{}]({})", self.0.len(), self.digest())
    }
}

/// Cosine similarity of two equal-length vectors; 0 if either norm is 0.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dims("cosine similarity", x.len(), y.len()));
    }
    let mut dot = 0.0;
    let mut nx = 0.0;
    let mut ny = 0.0;
    for (a, b) in x.iter().zip(y) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx == 0.0 || ny == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nx.sqrt() * ny.sqrt()))
}

/// Hex digest (truncated SHA-256) of a feature vector's little-endian bytes.
pub fn feature_digest(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    let out = hasher.finalize();
    let mut s = String::with_capacity(16);
    for byte in &out[..8] {
        s.push_str(&format!("{byte:02x}"));
    }
    s
}

/// Parse the class table: one `id,name` row per line.
///
/// Ids must be unique and dense starting at 0. The full-vocabulary count is
/// enforced by [`FeatureBank::load`], not here.
pub fn parse_class_table(text: &str) -> Result<Vec<ObjectClass>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let context = format!("class table line {}", lineno + 1);
        let (id, name) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(&context, "expected 'id,name'"))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|e| Error::parse(&context, format!("bad class id: {e}")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::parse(&context, "empty class name"));
        }
        rows.push(ObjectClass {
            id,
            name: name.to_string(),
        });
    }
    let mut seen = vec![false; rows.len()];
    for row in &rows {
        if row.id >= rows.len() {
            return Err(Error::parse(
                "class table",
                format!("class ids are not dense: id {} with {} rows", row.id, rows.len()),
            ));
        }
        if seen[row.id] {
            return Err(Error::DuplicateClassId { id: row.id });
        }
        seen[row.id] = true;
    }
    rows.sort_by_key(|r| r.id);
    Ok(rows)
}

/// Parse the embedding table: one `name\tf0\t...\tf299` row per line.
///
/// Later duplicate names replace earlier ones.
pub fn parse_embedding_table(text: &str) -> Result<HashMap<String, Vec<f64>>> {
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let context = format!("embedding table line {}", lineno + 1);
        let mut fields = line.split('\t');
        let name = fields.next().unwrap_or("").trim();
        if name.is_empty() {
            return Err(Error::parse(&context, "empty name"));
        }
        let mut values = Vec::with_capacity(WORD_DIM);
        for field in fields {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| Error::parse(&context, format!("bad value: {e}")))?;
            if !v.is_finite() {
                return Err(Error::parse(&context, "non-finite embedding value"));
            }
            values.push(v);
        }
        if values.len() != WORD_DIM {
            return Err(Error::dims(&context, WORD_DIM, values.len()));
        }
        if map.insert(name.to_string(), values).is_some() {
            log::warn!("duplicate embedding row for '{name}', keeping the later one");
        }
    }
    Ok(map)
}

/// Immutable vocabulary bank: class table plus per-class word embeddings.
#[derive(Debug, Clone)]
pub struct FeatureBank {
    classes: Vec<ObjectClass>,
    embeddings: Vec<Vec<f64>>,
}

impl FeatureBank {
    /// Load the bank from a class CSV and an embedding TSV.
    ///
    /// Requires exactly [`CLASS_COUNT`] classes. Classes missing from the
    /// embedding table fall back to a zero vector and produce one warning.
    pub fn load(class_file: &Path, embedding_file: &Path) -> Result<(Self, Vec<String>)> {
        let class_text =
            fs::read_to_string(class_file).map_err(|e| Error::io(class_file, e))?;
        let embedding_text =
            fs::read_to_string(embedding_file).map_err(|e| Error::io(embedding_file, e))?;
        let classes = parse_class_table(&class_text)?;
        if classes.len() != CLASS_COUNT {
            return Err(Error::parse(
                "class table",
                format!("expected {CLASS_COUNT} classes, got {}", classes.len()),
            ));
        }
        let table = parse_embedding_table(&embedding_text)?;
        Ok(Self::assemble(classes, &table))
    }

    /// Build a bank from in-memory tables. Ids must be dense starting at 0;
    /// any class count is accepted, which the file loader does not allow.
    pub fn from_parts(
        classes: Vec<ObjectClass>,
        embeddings: &HashMap<String, Vec<f64>>,
    ) -> Result<(Self, Vec<String>)> {
        let mut seen = vec![false; classes.len()];
        for class in &classes {
            if class.id >= classes.len() {
                return Err(Error::parse(
                    "class table",
                    format!("class ids are not dense: id {}", class.id),
                ));
            }
            if seen[class.id] {
                return Err(Error::DuplicateClassId { id: class.id });
            }
            seen[class.id] = true;
        }
        for values in embeddings.values() {
            if values.len() != WORD_DIM {
                return Err(Error::dims("embedding table", WORD_DIM, values.len()));
            }
        }
        let mut classes = classes;
        classes.sort_by_key(|c| c.id);
        Ok(Self::assemble(classes, embeddings))
    }

    fn assemble(
        classes: Vec<ObjectClass>,
        table: &HashMap<String, Vec<f64>>,
    ) -> (Self, Vec<String>) {
        let mut warnings = Vec::new();
        let mut embeddings = Vec::with_capacity(classes.len());
        for class in &classes {
            match table.get(&class.name) {
                Some(values) => embeddings.push(values.clone()),
                None => {
                    let w = format!(
                        "class '{}' (id {}) has no embedding row, using zeros",
                        class.name, class.id
                    );
                    log::warn!("{w}");
                    warnings.push(w);
                    embeddings.push(vec![0.0; WORD_DIM]);
                }
            }
        }
        (Self { classes, embeddings }, warnings)
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ObjectClass] {
        &self.classes
    }

    pub fn class_name(&self, id: usize) -> Result<&str> {
        self.classes
            .get(id)
            .map(|c| c.name.as_str())
            .ok_or(Error::UnknownClass {
                id,
                count: self.classes.len(),
            })
    }

    /// Word embedding for a class id.
    pub fn word_embedding(&self, id: usize) -> Result<&[f64]> {
        self.embeddings
            .get(id)
            .map(|v| v.as_slice())
            .ok_or(Error::UnknownClass {
                id,
                count: self.classes.len(),
            })
    }

    /// Compose the node feature `visual || attributes || word(class_id)`.
    pub fn compose(
        &self,
        visual: &VisualFeature,
        attributes: &AttributeVector,
        class_id: usize,
    ) -> Result<NodeFeature> {
        let word = self.word_embedding(class_id)?;
        let mut values = Vec::with_capacity(NODE_FEATURE_DIM);
        values.extend_from_slice(visual.as_slice());
        values.extend_from_slice(attributes.as_slice());
        values.extend_from_slice(word);
        Ok(NodeFeature(values))
    }

    /// Node feature used for a class with no observation behind it: zero
    /// visual segment, zero attribute segment, the class word embedding.
    pub fn unobserved_feature(&self, class_id: usize) -> Result<NodeFeature> {
        self.compose(&VisualFeature::zeros(), &AttributeVector::zeros(), class_id)
    }
}
