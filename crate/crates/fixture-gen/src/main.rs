//! Writes the checked-in fixtures: the 106-class vocabulary (class table,
//! word embeddings, relation knowledge base) and the 20-frame golden trace
//! with depth images, expert labels, and its run config. Everything is
//! seeded, so regeneration is byte-identical.
//!
//! Usage: `fixture-gen [output_root]` (default: `<repo>/fixtures`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sgm_core::config::RunConfig;
use sgm_core::engine::Engine;
use sgm_core::feature_bank::{
    AttributeVector, FeatureBank, VisualFeature, ATTRIBUTE_DIM, CLASS_COUNT, VISUAL_DIM, WORD_DIM,
};
use sgm_core::pgm::DepthImage;
use sgm_core::semantic_graphs::{parse_relation_kb, ObservedObject, RelationPair};
use sgm_core::spatial_map::{AgentPose, BoundingBox};
use sgm_core::trace::{Detection, Frame, Trace};

const EMBEDDING_SEED: u64 = 42;
const GOLDEN_FRAMES: usize = 20;
const DEPTH_SIZE: usize = 64;
const LANG_DIM: usize = 256;

/// The 106 object classes, ids assigned by position.
const CLASS_NAMES: [&str; CLASS_COUNT] = [
    "apple", "armchair", "baseball_bat", "basketball", "bathtub", "bed", "blinds", "book",
    "boots", "bottle", "bowl", "box", "bread", "butter_knife", "cabinet", "candle", "cart",
    "cellphone", "chair", "cloth", "coffee_machine", "counter_top", "credit_card", "cup",
    "curtains", "desk", "desk_lamp", "dishwasher", "drawer", "dresser", "egg", "faucet",
    "floor_lamp", "footstool", "fork", "fridge", "garbage_can", "glass_bottle", "hand_towel",
    "towel_ring", "house_plant", "kettle", "key_chain", "knife", "ladle", "laptop",
    "laundry_hamper", "lettuce", "light_switch", "microwave", "mirror", "mug", "newspaper",
    "ottoman", "painting", "pan", "paper_towel", "pen", "pencil", "pepper_shaker", "pillow",
    "plate", "plunger", "poster", "pot", "potato", "remote_control", "safe", "salt_shaker",
    "scrub_brush", "shelf", "shower_curtain", "shower_door", "shower_glass", "shower_head",
    "side_table", "sink", "soap_bar", "soap_bottle", "sofa", "spatula", "spoon",
    "spray_bottle", "statue", "stove_burner", "stove_knob", "table_lamp", "teddy_bear",
    "television", "tennis_racket", "tissue_box", "toaster", "toilet", "toilet_paper",
    "paper_hanger", "tomato", "towel", "towel_holder", "tv_stand", "vase", "watch",
    "watering_can", "window", "wine_bottle", "wall_clock", "rug",
];

/// Relation knowledge base as (subject, location/support) name pairs.
const RELATION_NAMES: [(&str, &str); 34] = [
    ("apple", "fridge"),
    ("apple", "counter_top"),
    ("bread", "counter_top"),
    ("butter_knife", "drawer"),
    ("bowl", "cabinet"),
    ("cup", "cabinet"),
    ("mug", "coffee_machine"),
    ("mug", "cabinet"),
    ("egg", "fridge"),
    ("lettuce", "fridge"),
    ("tomato", "fridge"),
    ("potato", "pot"),
    ("knife", "drawer"),
    ("fork", "drawer"),
    ("spoon", "drawer"),
    ("pan", "stove_burner"),
    ("pot", "stove_burner"),
    ("kettle", "stove_burner"),
    ("plate", "dishwasher"),
    ("soap_bar", "sink"),
    ("soap_bottle", "sink"),
    ("hand_towel", "towel_ring"),
    ("towel", "towel_holder"),
    ("toilet_paper", "paper_hanger"),
    ("pillow", "sofa"),
    ("pillow", "bed"),
    ("book", "shelf"),
    ("book", "desk"),
    ("laptop", "desk"),
    ("pen", "desk"),
    ("pencil", "desk"),
    ("television", "tv_stand"),
    ("remote_control", "sofa"),
    ("statue", "shelf"),
];

fn class_id(name: &str) -> usize {
    CLASS_NAMES
        .iter()
        .position(|&n| n == name)
        .unwrap_or_else(|| panic!("unknown class name {name}"))
}

fn write_vocab(vocab_dir: &Path) {
    let mut classes = String::new();
    for (id, name) in CLASS_NAMES.iter().enumerate() {
        writeln!(classes, "{id},{name}").unwrap();
    }
    fs::write(vocab_dir.join("classes.csv"), classes).unwrap();

    // One rng stream, rows in id order; values rounded to four decimals so
    // the file stays small and still parses to the same f64 every time.
    let mut rng = ChaCha20Rng::seed_from_u64(EMBEDDING_SEED);
    let dist = Uniform::new(-0.25, 0.25);
    let mut embeddings = String::new();
    for name in CLASS_NAMES {
        embeddings.push_str(name);
        for _ in 0..WORD_DIM {
            write!(embeddings, "\t{:.4}", dist.sample(&mut rng)).unwrap();
        }
        embeddings.push('\n');
    }
    fs::write(vocab_dir.join("embeddings.tsv"), embeddings).unwrap();

    let mut relations = String::new();
    for (src, dst) in RELATION_NAMES {
        writeln!(relations, "{},{}", class_id(src), class_id(dst)).unwrap();
    }
    fs::write(vocab_dir.join("relations.csv"), relations).unwrap();
}

/// One scripted object sighting: `tag` distinguishes instances of a class.
/// The same (class, tag) always produces the same feature vector, so revisits
/// deduplicate; distinct tags are nearly orthogonal and survive the 0.9
/// threshold as new global nodes.
struct Sighting {
    class: &'static str,
    tag: u8,
}

fn s(class: &'static str, tag: u8) -> Sighting {
    Sighting { class, tag }
}

/// Frame script: which instances are visible per step. Repeats exercise
/// dedup, fresh tags grow the global graph, empty frames hit the zero-block
/// path.
fn script() -> Vec<Vec<Sighting>> {
    vec![
        vec![s("apple", 0), s("fridge", 0)],
        vec![s("apple", 0), s("mug", 0)],
        vec![],
        vec![s("mug", 1), s("cabinet", 0)],
        vec![s("apple", 0), s("fridge", 0), s("television", 0)],
        vec![s("pillow", 0), s("sofa", 0)],
        vec![s("book", 0), s("laptop", 0)],
        vec![s("book", 0), s("book", 1)],
        vec![s("lettuce", 0), s("tomato", 0), s("knife", 0)],
        vec![],
        vec![s("television", 0), s("sofa", 0)],
        vec![s("apple", 1), s("mug", 0)],
        vec![s("cabinet", 0), s("fridge", 1)],
        vec![s("laptop", 0)],
        vec![s("pillow", 1), s("book", 0)],
        vec![s("knife", 0), s("tomato", 0)],
        vec![],
        vec![s("television", 1), s("lettuce", 1)],
        vec![s("apple", 0), s("sofa", 1)],
        vec![s("mug", 0), s("fridge", 0)],
    ]
}

fn sighting_visual(class: usize, tag: u8) -> VisualFeature {
    let mut v = vec![0.0; VISUAL_DIM];
    // A large instance-specific spike dominates the shared word block in
    // cosine terms; a small class-colored component keeps vectors non-trivial.
    v[(class * 7 + tag as usize * 131) % 1024] = 10.0;
    v[1024 + class % 512] = 1.0;
    VisualFeature::new(v).unwrap()
}

fn sighting_attributes(class: usize) -> AttributeVector {
    let mut a = vec![0.0; ATTRIBUTE_DIM];
    a[class % ATTRIBUTE_DIM] = 1.0;
    AttributeVector::new(a).unwrap()
}

fn depth_image(t: usize) -> DepthImage {
    let mut data = Vec::with_capacity(DEPTH_SIZE * DEPTH_SIZE);
    for y in 0..DEPTH_SIZE {
        for x in 0..DEPTH_SIZE {
            data.push((600 + 40 * ((x + y + 7 * t) % 32)) as u16);
        }
    }
    DepthImage::new(DEPTH_SIZE, DEPTH_SIZE, data).unwrap()
}

fn golden_frame(t: usize, sightings: &[Sighting]) -> Frame {
    let detections: Vec<Detection> = sightings
        .iter()
        .enumerate()
        .map(|(k, sighting)| {
            let class = class_id(sighting.class);
            let x0 = 4 + (9 * k + 5 * t) % 48;
            let y0 = 6 + (11 * k + 3 * t) % 44;
            Detection {
                object: ObservedObject {
                    class_id: class,
                    visual: sighting_visual(class, sighting.tag),
                    attributes: sighting_attributes(class),
                },
                bbox: BoundingBox {
                    x_min: x0,
                    y_min: y0,
                    x_max: x0 + 7,
                    y_max: y0 + 7,
                },
            }
        })
        .collect();
    let mut relations = Vec::new();
    if detections.len() >= 2 {
        relations.push(RelationPair { src: 0, dst: 1 });
    }
    if detections.len() >= 3 {
        relations.push(RelationPair { src: 2, dst: 1 });
    }
    let lang_hidden: Vec<f64> = (0..LANG_DIM)
        .map(|i| 0.5 * (0.1 * t as f64 + 0.05 * i as f64).sin())
        .collect();
    Frame {
        t: t as u64,
        detections,
        relations,
        depth_ref: format!("depth/frame_{t:02}.pgm"),
        pose: AgentPose {
            x: 0.25 * ((t % 5) as f64 - 2.0),
            z: 0.25 * ((t / 5) as f64 - 1.5),
            yaw: ((t * 90) % 360) as f64,
            camera_pitch: [0.0, 15.0, -15.0, 30.0][t % 4],
        },
        lang_hidden,
        expert: Some(sgm_core::heads::ExpertLabel {
            action: (3 + 5 * t) % 13,
            object: (11 * t) % 106,
        }),
    }
}

fn write_golden(golden_dir: &Path) {
    let depth_dir = golden_dir.join("depth");
    fs::create_dir_all(&depth_dir).unwrap();

    let frames: Vec<Frame> = script()
        .iter()
        .enumerate()
        .map(|(t, sightings)| golden_frame(t, sightings))
        .collect();
    assert_eq!(frames.len(), GOLDEN_FRAMES);
    for t in 0..GOLDEN_FRAMES {
        fs::write(
            depth_dir.join(format!("frame_{t:02}.pgm")),
            depth_image(t).encode(),
        )
        .unwrap();
    }

    let trace = Trace {
        frames,
        lang_dim: LANG_DIM,
        has_expert: true,
    };
    fs::write(golden_dir.join("trace.jsonl"), trace.to_jsonl()).unwrap();

    let config = serde_json::json!({
        "threshold": 0.9,
        "global_mode": "cosine",
        "same_class_only": true,
        "map": {"size": 10, "layers": 106, "cell_size": 0.25},
        "camera": {"fov_deg": 90.0, "width": DEPTH_SIZE, "height": DEPTH_SIZE},
        "gnn": {"plan": [2371, 64, 64], "readout_dim": 64, "attn_dim": 64, "lang_dim": LANG_DIM},
        "seed": 7,
        "stride": 1,
        "class_file": "../vocab/classes.csv",
        "embedding_file": "../vocab/embeddings.tsv",
        "relation_file": "../vocab/relations.csv",
    });
    fs::write(
        golden_dir.join("config.json"),
        serde_json::to_string_pretty(&config).unwrap(),
    )
    .unwrap();
}

/// Load everything back through the real parsers and replay the golden trace;
/// panics if any fixture is invalid.
fn self_check(root: &Path) {
    let config = RunConfig::load(&root.join("golden/config.json")).unwrap();
    let (bank, warnings) = FeatureBank::load(
        config.class_file.as_ref().unwrap(),
        config.embedding_file.as_ref().unwrap(),
    )
    .unwrap();
    assert!(warnings.is_empty(), "vocab warnings: {warnings:?}");
    let kb_text = fs::read_to_string(config.relation_file.as_ref().unwrap()).unwrap();
    let kb = parse_relation_kb(&kb_text).unwrap();
    let (trace, depths) = Trace::load(&root.join("golden/trace.jsonl")).unwrap();
    assert_eq!(trace.frames.len(), GOLDEN_FRAMES);
    assert!(trace.has_expert);

    let weights = sgm_core::weights::WeightSet::generate(&config, config.seed);
    let mut engine = Engine::new(config, bank, &kb, weights).unwrap();
    let outputs = engine.run(&trace.frames, &depths).unwrap();
    let last = outputs.last().unwrap();
    let total: f64 = outputs
        .iter()
        .map(|o| o.loss.as_ref().unwrap().total)
        .sum();
    println!(
        "golden replay ok: {} steps, {} global nodes, {} map cells, loss {:.4}",
        outputs.len(),
        last.global_nodes,
        last.occupied_cells,
        total
    );
    println!(
        "global node sequence: {:?}",
        outputs.iter().map(|o| o.global_nodes).collect::<Vec<_>>()
    );
}

fn main() {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
    });
    let vocab_dir = root.join("vocab");
    let golden_dir = root.join("golden");
    fs::create_dir_all(&vocab_dir).unwrap();
    fs::create_dir_all(&golden_dir).unwrap();

    write_vocab(&vocab_dir);
    write_golden(&golden_dir);
    self_check(&root);
    println!("fixtures written to {}", root.display());
}
