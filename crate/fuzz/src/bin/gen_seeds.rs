//! Regenerates the structured corpus seeds under `corpus/`. Each seed is a
//! valid instance of its target's input format, so mutation starts from
//! inputs that reach the deep decode paths instead of dying in the header.
//!
//! ```text
//! cargo run --bin gen_seeds
//! ```

use std::fs;
use std::path::PathBuf;

use sgm_core::engine::Engine;
use sgm_core::feature_bank::{AttributeVector, VisualFeature, ATTRIBUTE_DIM, VISUAL_DIM};
use sgm_core::pgm::DepthImage;
use sgm_core::semantic_graphs::ObservedObject;
use sgm_core::spatial_map::{AgentPose, BoundingBox};
use sgm_core::trace::{Detection, Frame};
use sgm_fuzz::{class_bank, small_config, small_weights};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn write(target: &str, name: &str, bytes: &[u8]) {
    let path = root().join("corpus").join(target).join(name);
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(&path, bytes).unwrap();
    println!("wrote {} ({} bytes)", path.display(), bytes.len());
}

fn fixture(rel: &str) -> String {
    let path = root().join("../fixtures").join(rel);
    fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn head(text: &str, lines: usize) -> String {
    let mut out: String = text.lines().take(lines).collect::<Vec<_>>().join("\n");
    out.push('\n');
    out
}

fn main() {
    // Vocabulary tables, sliced from the checked-in fixtures.
    let trace_text = fixture("golden/trace.jsonl");
    write("trace_parse", "golden_head.jsonl", head(&trace_text, 2).as_bytes());
    let empty_frame: &str = trace_text
        .lines()
        .find(|l| l.contains("\"detections\":[]"))
        .expect("golden trace has an empty frame");
    let minimal = format!("{}\n{empty_frame}\n", trace_text.lines().next().unwrap());
    write("trace_parse", "minimal.jsonl", minimal.as_bytes());

    write(
        "class_table",
        "classes_head.csv",
        head(&fixture("vocab/classes.csv"), 5).as_bytes(),
    );
    write(
        "embedding_table",
        "embeddings_head.tsv",
        head(&fixture("vocab/embeddings.tsv"), 2).as_bytes(),
    );
    write(
        "relation_kb",
        "relations.csv",
        fixture("vocab/relations.csv").as_bytes(),
    );

    write(
        "config_json",
        "golden.json",
        fixture("golden/config.json").as_bytes(),
    );
    write("config_json", "defaults.json", b"{}");

    // Depth images: a flat 8x8, one with a comment, one single-byte maxval.
    let mut flat = b"P5\n8 8\n65535\n".to_vec();
    for i in 0..64u16 {
        flat.extend_from_slice(&(600 + i * 40).to_be_bytes());
    }
    write("depth_pgm", "flat_8x8.pgm", &flat);
    let mut commented = b"P5\n# depth seed\n4 2\n65535\n".to_vec();
    for i in 0..8u16 {
        commented.extend_from_slice(&(900 + i).to_be_bytes());
    }
    write("depth_pgm", "commented_4x2.pgm", &commented);
    let narrow = b"P5\n3 3\n255\n\x00\x10\x20\x30\x40\x50\x60\x70\x7f".to_vec();
    write("depth_pgm", "narrow_3x3.pgm", &narrow);

    // A weights file and two snapshots that are valid for the small config.
    let config = small_config();
    let weights = small_weights(&config);
    write(
        "weights_json",
        "valid.json",
        weights.to_json().to_string().as_bytes(),
    );

    let digest = config.digest();
    let (width, height) = (config.camera.width, config.camera.height);
    let mut engine = Engine::new(config, class_bank(), &[(0, 1)], weights).unwrap();
    write(
        "snapshot_json",
        "fresh.json",
        engine.snapshot_json(&digest).as_bytes(),
    );

    let mut visual = vec![0.0; VISUAL_DIM];
    visual[3] = 5.0;
    let mut attributes = vec![0.0; ATTRIBUTE_DIM];
    attributes[1] = 1.0;
    let frame = Frame {
        t: 0,
        detections: vec![Detection {
            object: ObservedObject {
                class_id: 4,
                visual: VisualFeature::new(visual).unwrap(),
                attributes: AttributeVector::new(attributes).unwrap(),
            },
            bbox: BoundingBox {
                x_min: 10,
                y_min: 12,
                x_max: 20,
                y_max: 22,
            },
        }],
        relations: vec![],
        depth_ref: "depth/frame_00.pgm".into(),
        pose: AgentPose {
            x: 0.0,
            z: 0.0,
            yaw: 90.0,
            camera_pitch: 15.0,
        },
        lang_hidden: vec![0.25, -0.5],
        expert: None,
    };
    let depth = DepthImage::new(width, height, vec![900; width * height]).unwrap();
    engine.step(&frame, &depth).unwrap();
    write(
        "snapshot_json",
        "stepped.json",
        engine.snapshot_json(&digest).as_bytes(),
    );
}
