//! Shared helpers for unit tests.

use std::collections::HashMap;

use crate::feature_bank::{FeatureBank, NodeFeature, ObjectClass, CLASS_COUNT, NODE_FEATURE_DIM, WORD_DIM};

/// Full-size vocabulary with synthetic names `obj000..obj105`.
///
/// Class 0 has an all-zero embedding row; every other class gets a cheap
/// deterministic pattern so rows differ from each other.
pub fn test_bank() -> FeatureBank {
    let classes: Vec<ObjectClass> = (0..CLASS_COUNT)
        .map(|i| ObjectClass {
            id: i,
            name: format!("obj{i:03}"),
        })
        .collect();
    let mut table = HashMap::new();
    for class in &classes {
        let i = class.id;
        let row: Vec<f64> = if i == 0 {
            vec![0.0; WORD_DIM]
        } else {
            (0..WORD_DIM)
                .map(|k| ((i * 7 + k * 13) % 19) as f64 / 19.0)
                .collect()
        };
        table.insert(class.name.clone(), row);
    }
    let (bank, warnings) = FeatureBank::from_parts(classes, &table).unwrap();
    assert!(warnings.is_empty());
    bank
}

/// Node feature with a single 1.0 at `index`, zero elsewhere.
pub fn basis_feature(index: usize) -> NodeFeature {
    let mut v = vec![0.0; NODE_FEATURE_DIM];
    v[index] = 1.0;
    NodeFeature::from_raw(v).unwrap()
}

