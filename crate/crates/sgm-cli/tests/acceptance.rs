//! Acceptance suite. Each test checks one release criterion against an
//! independent oracle or a pinned value, prints one pass/fail line, and
//! enforces its runtime budget. Run with `--nocapture` to see the lines:
//!
//! ```text
//! cargo test -p sgm-cli --test acceptance -- --nocapture
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Rotation3, Vector3};
use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use sgm_core::config::RunConfig;
use sgm_core::engine::Engine;
use sgm_core::feature_bank::{
    AttributeVector, FeatureBank, ObjectClass, VisualFeature, ATTRIBUTE_DIM, CLASS_COUNT,
    NODE_FEATURE_DIM, VISUAL_DIM, WORD_DIM,
};
use sgm_core::graph_nn::{gcn_forward, graph_embed, GcnLayer, GcnWeights, ReadoutWeights};
use sgm_core::heads::{trajectory_loss, ExpertLabel, HeadOutput};
use sgm_core::pgm::DepthImage;
use sgm_core::semantic_graphs::{
    parse_relation_kb, update_current_graph, update_global_graph, update_global_graph_jaccard,
    GraphRole, ObservedObject, SemanticGraph, SimilarityScope,
};
use sgm_core::spatial_map::{AgentPose, BoundingBox, CameraIntrinsics, SpatialSemanticMap};
use sgm_core::trace::Trace;
use sgm_core::weights::WeightSet;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Runs one criterion, prints its pass/fail line, and enforces the budget.
fn criterion(number: usize, name: &str, budget: Duration, body: impl FnOnce()) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) if elapsed <= budget => {
            println!(
                "acceptance {number} ({name}): PASS in {:.3}s (budget {:.0}s)",
                elapsed.as_secs_f64(),
                budget.as_secs_f64()
            );
        }
        Ok(()) => {
            println!(
                "acceptance {number} ({name}): FAIL, over budget: {:.3}s > {:.0}s",
                elapsed.as_secs_f64(),
                budget.as_secs_f64()
            );
            panic!("criterion {number} exceeded its runtime budget");
        }
        Err(cause) => {
            println!("acceptance {number} ({name}): FAIL");
            resume_unwind(cause);
        }
    }
}

/// A vocabulary whose word embeddings are all zero, so node features consist
/// of the visual block alone and engineered cosines are exact.
fn zero_word_bank() -> FeatureBank {
    let classes: Vec<ObjectClass> = (0..CLASS_COUNT)
        .map(|i| ObjectClass {
            id: i,
            name: format!("c{i}"),
        })
        .collect();
    let (bank, _warnings) = FeatureBank::from_parts(classes, &HashMap::new()).unwrap();
    bank
}

/// Observation with the given visual entries at indices 0 and 1.
fn spike(class_id: usize, a: f64, b: f64) -> ObservedObject {
    let mut v = vec![0.0; VISUAL_DIM];
    v[0] = a;
    v[1] = b;
    ObservedObject {
        class_id,
        visual: VisualFeature::new(v).unwrap(),
        attributes: AttributeVector::zeros(),
    }
}

/// Observation with a visual spike at an index unique to `slot`.
fn spike_at(class_id: usize, slot: usize, value: f64) -> ObservedObject {
    let mut v = vec![0.0; VISUAL_DIM];
    v[slot] = value;
    ObservedObject {
        class_id,
        visual: VisualFeature::new(v).unwrap(),
        attributes: AttributeVector::zeros(),
    }
}

#[test]
fn criterion_1_dimension_fidelity() {
    criterion(1, "dimension fidelity", Duration::from_secs(1), || {
        assert_eq!(NODE_FEATURE_DIM, 2371);
        assert_eq!(VISUAL_DIM, 2048);
        assert_eq!(ATTRIBUTE_DIM, 23);
        assert_eq!(WORD_DIM, 300);
        assert_eq!(VISUAL_DIM + ATTRIBUTE_DIM + WORD_DIM, NODE_FEATURE_DIM);

        let config = RunConfig::load(&fixtures().join("golden/config.json")).unwrap();
        let (bank, _) = FeatureBank::load(
            config.class_file.as_ref().unwrap(),
            config.embedding_file.as_ref().unwrap(),
        )
        .unwrap();
        assert_eq!(bank.class_count(), 106);
        let composed = bank
            .compose(&VisualFeature::zeros(), &AttributeVector::zeros(), 17)
            .unwrap();
        assert_eq!(composed.as_slice().len(), 2371);

        let map = SpatialSemanticMap::new(10, 106, 0.25).unwrap();
        assert_eq!(map.node_count(), 10 * 10 * 106);
        assert_eq!(
            map.undirected_edges().len(),
            2 * 10 * 9 + 10 * 10 * 105
        );

        // Every fixture frame carries full-size features.
        let (trace, depths) = Trace::load(&fixtures().join("golden/trace.jsonl")).unwrap();
        for frame in &trace.frames {
            for det in &frame.detections {
                assert_eq!(det.object.visual.as_slice().len(), 2048);
                assert_eq!(det.object.attributes.as_slice().len(), 23);
            }
        }

        // A live step emits 13 action and 119 object probabilities.
        let kb_text = fs::read_to_string(config.relation_file.as_ref().unwrap()).unwrap();
        let kb = parse_relation_kb(&kb_text).unwrap();
        let weights = WeightSet::generate(&config, config.seed);
        let mut engine = Engine::new(config, bank, &kb, weights).unwrap();
        let out = engine.step(&trace.frames[0], &depths[0]).unwrap();
        assert_eq!(out.head.action_probs.len(), 13);
        assert_eq!(out.head.object_probs.len(), 119);
        assert_eq!(out.embeddings.prior.alpha.len(), 106);
    });
}

#[test]
fn criterion_2_global_update_oracle() {
    criterion(2, "global dedup vs hand oracle", Duration::from_secs(1), || {
        let bank = zero_word_bank();
        // Five frames over classes 1..=3. Spikes are integer-valued so every
        // cosine is exact: identical features give 1.0, the [3,4]/[4,3] pair
        // gives 24/25, disjoint spikes give 0.0.
        let frames: Vec<Vec<ObservedObject>> = vec![
            vec![spike(1, 3.0, 4.0), spike_at(2, 10, 2.0)],
            vec![spike(1, 3.0, 4.0)],
            vec![spike_at(3, 20, 5.0)],
            vec![spike(1, 4.0, 3.0)],
            vec![spike_at(1, 30, 7.0)],
        ];

        // Hand simulation over raw feature vectors, fully independent of the
        // graph implementation.
        let oracle = |threshold: f64| -> Vec<usize> {
            let mut stored: Vec<(usize, Vec<f64>)> = Vec::new();
            let mut counts = Vec::new();
            for frame in &frames {
                for obj in frame {
                    let feat: Vec<f64> = obj.visual.as_slice().to_vec();
                    let same: Vec<&Vec<f64>> = stored
                        .iter()
                        .filter(|(c, _)| *c == obj.class_id)
                        .map(|(_, f)| f)
                        .collect();
                    let cosine = |a: &[f64], b: &[f64]| -> f64 {
                        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if na == 0.0 || nb == 0.0 {
                            0.0
                        } else {
                            dot / (na * nb)
                        }
                    };
                    let add = if same.is_empty() {
                        true
                    } else {
                        let best = same
                            .iter()
                            .map(|f| cosine(&feat, f))
                            .fold(f64::NEG_INFINITY, f64::max);
                        best < threshold
                    };
                    if add {
                        stored.push((obj.class_id, feat));
                    }
                }
                counts.push(stored.len());
            }
            counts
        };

        let engine_counts = |threshold: f64| -> Vec<usize> {
            let mut global = SemanticGraph::empty(GraphRole::Global);
            let mut counts = Vec::new();
            for frame in &frames {
                let current = update_current_graph(frame, &[], &bank).unwrap();
                global = update_global_graph(
                    &global,
                    &current,
                    threshold,
                    SimilarityScope::SameClassOnly,
                )
                .unwrap();
                counts.push(global.node_count());
            }
            counts
        };

        let expected: [(f64, [usize; 5]); 3] = [
            (0.0, [2, 2, 3, 3, 3]),
            (0.9, [2, 2, 3, 3, 4]),
            (1.0, [2, 2, 3, 4, 5]),
        ];
        for (threshold, pinned) in expected {
            let simulated = oracle(threshold);
            let computed = engine_counts(threshold);
            assert_eq!(computed, simulated, "threshold {threshold}");
            assert_eq!(computed, pinned.to_vec(), "threshold {threshold}");
            // Idempotence: the repeat frame adds nothing.
            assert_eq!(computed[1], computed[0], "threshold {threshold}");
            // Monotonicity: the global graph never shrinks.
            assert!(
                computed.windows(2).all(|w| w[0] <= w[1]),
                "threshold {threshold}"
            );
        }
    });
}

#[test]
fn criterion_3_jaccard_gate() {
    criterion(3, "jaccard gate", Duration::from_secs(1), || {
        let bank = zero_word_bank();
        let scope = SimilarityScope::SameClassOnly;
        let frame1 = vec![spike(1, 3.0, 4.0), spike_at(2, 10, 2.0)];
        // Same class set as frame1, features need not match.
        let frame2 = vec![spike(1, 4.0, 3.0), spike_at(2, 11, 6.0)];
        // Class 2 replaced by class 3; the class-1 feature is orthogonal to
        // everything stored, so cosine alone would admit it.
        let frame3 = vec![spike_at(1, 30, 7.0), spike_at(3, 20, 5.0)];

        let cur1 = update_current_graph(&frame1, &[], &bank).unwrap();
        let cur2 = update_current_graph(&frame2, &[], &bank).unwrap();
        let cur3 = update_current_graph(&frame3, &[], &bank).unwrap();

        let g0 = SemanticGraph::empty(GraphRole::Global);
        let g1 = update_global_graph_jaccard(&g0, None, &cur1, 0.9, scope).unwrap();
        assert_eq!(g1.node_count(), 2);

        // Identical class sets: the update must return the global graph
        // untouched, byte for byte.
        let g2 = update_global_graph_jaccard(&g1, Some(&cur1), &cur2, 0.9, scope).unwrap();
        assert_eq!(g2.state_digest(), g1.state_digest());
        assert_eq!(
            sgm_core::export::graph_to_json(&g2, "x").to_string(),
            sgm_core::export::graph_to_json(&g1, "x").to_string()
        );

        // Class sets differ by one class: only that class is a candidate.
        let g3 = update_global_graph_jaccard(&g2, Some(&cur2), &cur3, 0.9, scope).unwrap();
        assert_eq!(g3.node_count(), 3);
        let class_counts = |g: &SemanticGraph, class: usize| {
            g.nodes().iter().filter(|n| n.class_id == class).count()
        };
        assert_eq!(class_counts(&g3, 3), 1, "the new class was added");
        assert_eq!(class_counts(&g3, 1), 1, "the revisited class was not");

        // The ungated update would have admitted the far class-1 feature.
        let unrestricted = update_global_graph(&g2, &cur3, 0.9, scope).unwrap();
        assert_eq!(unrestricted.node_count(), 4);
    });
}

#[test]
fn criterion_4_projection_oracle() {
    criterion(4, "projection vs pinhole oracle", Duration::from_secs(5), || {
        let size = 32usize;
        let map = SpatialSemanticMap::new(10, 106, 0.25).unwrap();
        let intrinsics = CameraIntrinsics::from_fov_deg(size, size, 90.0).unwrap();
        let cell = 0.25;

        // Independent pinhole + rotation implementation on nalgebra types.
        let oracle_cell = |u: usize, v: usize, mm: u16, pose: &AgentPose| -> Option<(usize, usize)> {
            let d = mm as f64 / 1000.0;
            let cam = Vector3::new(
                (u as f64 + 0.5 - intrinsics.cx) * d / intrinsics.fx,
                (v as f64 + 0.5 - intrinsics.cy) * d / intrinsics.fy,
                d,
            );
            let pitch = Rotation3::from_axis_angle(
                &Vector3::x_axis(),
                -pose.camera_pitch.to_radians(),
            );
            let yaw = Rotation3::from_axis_angle(&Vector3::y_axis(), pose.yaw.to_radians());
            let local = pitch * cam;
            let world = yaw * local + Vector3::new(pose.x, 0.0, pose.z);
            let gi = (world.x / cell + 0.5).floor() as i64 + 5;
            let gj = (world.z / cell + 0.5).floor() as i64 + 5;
            if (0..10).contains(&gi) && (0..10).contains(&gj) {
                Some((gi as usize, gj as usize))
            } else {
                None
            }
        };

        let mut rng = ChaCha20Rng::seed_from_u64(404);
        let mut in_bounds_cases = 0usize;
        for case in 0..100 {
            let u = rng.gen_range(0..size);
            let v = rng.gen_range(0..size);
            // The grid spans 2.5m; keep depth shallow so many samples land
            // inside it and the in-grid branch gets real coverage.
            let mm = rng.gen_range(200..1200u16);
            let pose = AgentPose {
                x: rng.gen_range(-0.5..0.5),
                z: rng.gen_range(-0.5..0.5),
                yaw: rng.gen_range(0.0..360.0),
                camera_pitch: rng.gen_range(-40.0..40.0),
            };
            let depth = DepthImage::new(size, size, vec![mm; size * size]).unwrap();
            let bbox = BoundingBox {
                x_min: u,
                y_min: v,
                x_max: u,
                y_max: v,
            };
            let cells = map
                .project_detection(&depth, &bbox, &pose, &intrinsics, 1)
                .unwrap();
            let expected = oracle_cell(u, v, mm, &pose);
            match expected {
                Some(cell) => assert_eq!(cells, vec![cell], "case {case}"),
                None => assert!(cells.is_empty(), "case {case}"),
            }

            // Pose equivariance: translating the pose by whole cells shifts
            // the projected cell by the same offset.
            if let Some((i, j)) = expected {
                in_bounds_cases += 1;
                let (dx, dz) = (rng.gen_range(-2i64..=2), rng.gen_range(-2i64..=2));
                let (si, sj) = (i as i64 + dx, j as i64 + dz);
                if (0..10).contains(&si) && (0..10).contains(&sj) {
                    let shifted_pose = AgentPose {
                        x: pose.x + dx as f64 * cell,
                        z: pose.z + dz as f64 * cell,
                        ..pose
                    };
                    let shifted = map
                        .project_detection(&depth, &bbox, &shifted_pose, &intrinsics, 1)
                        .unwrap();
                    assert_eq!(
                        shifted,
                        vec![(si as usize, sj as usize)],
                        "case {case} equivariance"
                    );
                }
            }
        }
        assert!(in_bounds_cases >= 30, "poor case coverage: {in_bounds_cases}");
    });
}

#[test]
fn criterion_5_gcn_oracle() {
    criterion(5, "gcn vs brute force", Duration::from_secs(5), || {
        // Naive triple-loop implementation of D^-1/2 (A+I) D^-1/2, the two
        // linear stages, relu, and a plain softmax.
        let brute_force = |h0: &Array2<f64>, a: &Array2<f64>, w: &GcnWeights| -> Array2<f64> {
            let n = h0.nrows();
            let mut ahat = vec![vec![0.0; n]; n];
            let mut deg = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    let v = a[[i, j]] + if i == j { 1.0 } else { 0.0 };
                    ahat[i][j] = v;
                    deg[i] += v;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    ahat[i][j] /= (deg[i] * deg[j]).sqrt();
                }
            }
            let matmul = |x: &Vec<Vec<f64>>, y: &Array2<f64>| -> Vec<Vec<f64>> {
                let (r, k, c) = (x.len(), y.nrows(), y.ncols());
                let mut out = vec![vec![0.0; c]; r];
                for i in 0..r {
                    for jj in 0..c {
                        let mut acc = 0.0;
                        for kk in 0..k {
                            acc += x[i][kk] * y[[kk, jj]];
                        }
                        out[i][jj] = acc;
                    }
                }
                out
            };
            let amul = |x: &Vec<Vec<f64>>, ahat: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
                let (r, c) = (x.len(), x[0].len());
                let mut out = vec![vec![0.0; c]; r];
                for i in 0..r {
                    for jj in 0..c {
                        let mut acc = 0.0;
                        for kk in 0..r {
                            acc += ahat[i][kk] * x[kk][jj];
                        }
                        out[i][jj] = acc;
                    }
                }
                out
            };
            let mut h: Vec<Vec<f64>> = (0..n).map(|i| h0.row(i).to_vec()).collect();
            for layer in &w.layers {
                let mut z = amul(&matmul(&h, &layer.w1), &ahat);
                for row in &mut z {
                    for v in row.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
                h = amul(&matmul(&z, &layer.w2), &ahat);
            }
            for row in &mut h {
                let sum: f64 = row.iter().map(|v| v.exp()).sum();
                for v in row.iter_mut() {
                    *v = v.exp() / sum;
                }
            }
            let c = h[0].len();
            Array2::from_shape_fn((n, c), |(i, j)| h[i][j])
        };

        let mut rng = ChaCha20Rng::seed_from_u64(505);
        let wdist = Uniform::new(-0.5, 0.5);
        let fdist = Uniform::new(-1.0, 1.0);
        for case in 0..50 {
            let n = rng.gen_range(1..=8);
            let dims = [(5usize, 4usize, 3usize), (5, 3, 5)][case % 2];
            let layers = vec![GcnLayer {
                w1: Array2::from_shape_fn((dims.0, dims.1), |_| wdist.sample(&mut rng)),
                w2: Array2::from_shape_fn((dims.1, dims.2), |_| wdist.sample(&mut rng)),
            }];
            let weights = GcnWeights { layers };
            let h0 = Array2::from_shape_fn((n, dims.0), |_| fdist.sample(&mut rng));
            let a = Array2::from_shape_fn((n, n), |(i, j)| {
                if i != j && rng.gen_bool(0.4) {
                    1.0
                } else {
                    0.0
                }
            });
            let fast = gcn_forward(&h0, &a, &weights).unwrap();
            let slow = brute_force(&h0, &a, &weights);
            assert_eq!(fast.dim(), slow.dim());
            for i in 0..n {
                let mut row_sum = 0.0;
                for j in 0..dims.2 {
                    assert!(
                        (fast[[i, j]] - slow[[i, j]]).abs() <= 1e-9,
                        "case {case} entry ({i},{j}): {} vs {}",
                        fast[[i, j]],
                        slow[[i, j]]
                    );
                    row_sum += fast[[i, j]];
                }
                assert!((row_sum - 1.0).abs() <= 1e-9, "case {case} row {i}");
            }
        }
    });
}

#[test]
fn criterion_6_readout_properties() {
    criterion(6, "readout properties", Duration::from_secs(5), || {
        let mut rng = ChaCha20Rng::seed_from_u64(606);
        let dist = Uniform::new(-1.0, 1.0);
        let (gcn_out, readout, attn, lang_dim) = (6usize, 4usize, 5usize, 8usize);
        for case in 0..50 {
            let n = rng.gen_range(1..=8);
            let weights = ReadoutWeights {
                w1: Array2::from_shape_fn((readout, gcn_out), |_| dist.sample(&mut rng)),
                w2: Array2::from_shape_fn((attn, gcn_out), |_| dist.sample(&mut rng)),
                w3: Array2::from_shape_fn((attn, lang_dim), |_| dist.sample(&mut rng)),
            };
            let h = Array2::from_shape_fn((n, gcn_out), |_| dist.sample(&mut rng));
            let lang: Vec<f64> = (0..lang_dim).map(|_| dist.sample(&mut rng)).collect();

            let out = graph_embed(&h, &lang, &weights).unwrap();
            assert_eq!(out.alpha.len(), n);
            assert_eq!(out.vector.len(), readout);
            let sum: f64 = out.alpha.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9, "case {case} alpha sum {sum}");

            if n == 1 {
                assert_eq!(out.alpha, vec![1.0], "case {case}");
            }

            // Permuting node order permutes alpha and leaves X unchanged.
            let perm: Vec<usize> = {
                let mut p: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    p.swap(i, j);
                }
                p
            };
            let h_perm = Array2::from_shape_fn((n, gcn_out), |(i, j)| h[[perm[i], j]]);
            let out_perm = graph_embed(&h_perm, &lang, &weights).unwrap();
            for (i, &src) in perm.iter().enumerate() {
                assert!(
                    (out_perm.alpha[i] - out.alpha[src]).abs() <= 1e-9,
                    "case {case} alpha {i}"
                );
            }
            for k in 0..readout {
                assert!(
                    (out_perm.vector[k] - out.vector[k]).abs() <= 1e-9,
                    "case {case} X[{k}]"
                );
            }
        }
    });
}

#[test]
fn criterion_7_loss_values() {
    criterion(7, "loss values", Duration::from_secs(1), || {
        let one_hot = |dim: usize, at: usize| -> Vec<f64> {
            let mut v = vec![0.0; dim];
            v[at] = 1.0;
            v
        };
        let uniform = |dim: usize| vec![1.0 / dim as f64; dim];

        // Perfect predictions: exactly zero after the probability clamp.
        let perfect: Vec<(HeadOutput, ExpertLabel)> = (0..4)
            .map(|i| {
                (
                    HeadOutput {
                        action_probs: one_hot(13, i),
                        object_probs: one_hot(119, i * 3),
                    },
                    ExpertLabel {
                        action: i,
                        object: i * 3,
                    },
                )
            })
            .collect();
        let total = trajectory_loss(perfect.iter().map(|(o, l)| (o, l))).unwrap();
        assert_eq!(total, 0.0);

        // Uniform single step: ln 13 + ln 119.
        let uniform_step = (
            HeadOutput {
                action_probs: uniform(13),
                object_probs: uniform(119),
            },
            ExpertLabel {
                action: 5,
                object: 42,
            },
        );
        let single = trajectory_loss([(&uniform_step.0, &uniform_step.1)]).unwrap();
        let expected = (13f64).ln() + (119f64).ln();
        assert!((single - expected).abs() < 1e-3, "{single} vs {expected}");
        assert!((single - 7.3441).abs() < 1e-3);

        // Additivity over concatenation, exact.
        let steps: Vec<(HeadOutput, ExpertLabel)> = (0..3)
            .map(|_| {
                (
                    HeadOutput {
                        action_probs: uniform(13),
                        object_probs: uniform(119),
                    },
                    ExpertLabel {
                        action: 1,
                        object: 2,
                    },
                )
            })
            .collect();
        let whole = trajectory_loss(steps.iter().map(|(o, l)| (o, l))).unwrap();
        let head = trajectory_loss(steps[..1].iter().map(|(o, l)| (o, l))).unwrap();
        let tail = trajectory_loss(steps[1..].iter().map(|(o, l)| (o, l))).unwrap();
        assert_eq!(whole, head + tail);
    });
}

fn run_sgm(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_sgm"))
        .args(args)
        .output()
        .expect("spawn sgm");
    assert!(
        out.status.success(),
        "sgm {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Relative path -> sha256 of every file under `root`.
fn dir_hashes(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let digest = Sha256::digest(fs::read(&path).unwrap());
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, format!("{digest:x}"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn criterion_8_cli_determinism() {
    criterion(8, "bit-identical cli replays", Duration::from_secs(10), || {
        let dir = tempfile::tempdir().unwrap();
        let trace = fixtures().join("golden/trace.jsonl");
        let config = fixtures().join("golden/config.json");
        let mut dirs = Vec::new();
        for name in ["a", "b"] {
            let out_dir = dir.path().join(name);
            run_sgm(&[
                "replay",
                "--trace",
                trace.to_str().unwrap(),
                "--config",
                config.to_str().unwrap(),
                "--seed",
                "7",
                "--out-dir",
                out_dir.to_str().unwrap(),
            ]);
            dirs.push(out_dir);
        }
        let a = dir_hashes(&dirs[0]);
        let b = dir_hashes(&dirs[1]);
        assert!(!a.is_empty());
        assert_eq!(a, b, "replay output directories differ");
    });
}

#[test]
fn criterion_9_snapshot_round_trip() {
    criterion(9, "snapshot round trip", Duration::from_secs(10), || {
        let dir = tempfile::tempdir().unwrap();
        let trace = fixtures().join("golden/trace.jsonl");
        let config = fixtures().join("golden/config.json");
        let full_dir = dir.path().join("full");
        let resumed_dir = dir.path().join("resumed");

        run_sgm(&[
            "replay",
            "--trace",
            trace.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            full_dir.to_str().unwrap(),
        ]);
        run_sgm(&[
            "replay",
            "--trace",
            trace.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            resumed_dir.to_str().unwrap(),
            "--resume",
            full_dir.join("snapshots/step_0010.json").to_str().unwrap(),
        ]);

        let report = |p: &Path| -> serde_json::Value {
            serde_json::from_str(&fs::read_to_string(p.join("report.json")).unwrap()).unwrap()
        };
        let full = report(&full_dir);
        let resumed = report(&resumed_dir);
        assert_eq!(resumed["start_step"], 10);
        let full_steps = full["steps"].as_array().unwrap();
        let resumed_steps = resumed["steps"].as_array().unwrap();
        assert_eq!(resumed_steps.len(), 10);
        // Step records for 11..20, byte for byte.
        for (a, b) in full_steps[10..].iter().zip(resumed_steps) {
            assert_eq!(a.to_string(), b.to_string());
        }
        // Snapshots for steps 11..20, byte for byte.
        for step in 11..=20 {
            let rel = format!("snapshots/step_{step:04}.json");
            assert_eq!(
                fs::read(full_dir.join(&rel)).unwrap(),
                fs::read(resumed_dir.join(&rel)).unwrap(),
                "{rel}"
            );
        }
        // Final-state renders, byte for byte.
        let full_renders = dir_hashes(&full_dir.join("renders"));
        let resumed_renders = dir_hashes(&resumed_dir.join("renders"));
        assert_eq!(full_renders, resumed_renders);
    });
}
