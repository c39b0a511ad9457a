//! Detection-trace ingestion: JSON Lines, one header line then one frame per
//! line.
//!
//! The header is `{"schema": "sgm-trace", "version": 1}`. Every frame carries
//! detections (class id, visual feature, attribute flags, bbox), directed
//! relations between detection indices, a relative depth-image path, the agent
//! pose, a language hidden vector, and optional expert labels. Validation is
//! eager: the whole file is checked before a single step runs.

use std::path::Path;

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::feature_bank::{AttributeVector, VisualFeature, ATTRIBUTE_DIM, CLASS_COUNT, VISUAL_DIM};
use crate::heads::{ExpertLabel, ACTION_COUNT, OBJECT_HEAD_DIM};
use crate::pgm::DepthImage;
use crate::semantic_graphs::{ObservedObject, RelationPair};
use crate::spatial_map::{AgentPose, BoundingBox};

pub const TRACE_SCHEMA: &str = "sgm-trace";
pub const TRACE_VERSION: u32 = 1;

/// One detection: the observed object plus its image-plane box.
#[derive(Debug, Clone)]
pub struct Detection {
    pub object: ObservedObject,
    pub bbox: BoundingBox,
}

/// One timestep of a trace.
#[derive(Debug, Clone)]
pub struct Frame {
    pub t: u64,
    pub detections: Vec<Detection>,
    pub relations: Vec<RelationPair>,
    pub depth_ref: String,
    pub pose: AgentPose,
    pub lang_hidden: Vec<f64>,
    pub expert: Option<ExpertLabel>,
}

impl Frame {
    /// The frame as one JSON-lines value; `Trace::parse` inverts this.
    pub fn to_json(&self) -> serde_json::Value {
        let detections: Vec<_> = self
            .detections
            .iter()
            .map(|d| {
                json!({
                    "class_id": d.object.class_id,
                    "visual": d.object.visual.as_slice(),
                    "attributes": d.object.attributes.as_slice(),
                    "bbox": [d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max],
                })
            })
            .collect();
        let relations: Vec<_> = self.relations.iter().map(|r| json!([r.src, r.dst])).collect();
        let mut frame = json!({
            "t": self.t,
            "detections": detections,
            "relations": relations,
            "depth_ref": self.depth_ref,
            "pose": {
                "x": self.pose.x,
                "z": self.pose.z,
                "yaw": self.pose.yaw,
                "camera_pitch": self.pose.camera_pitch,
            },
            "lang_hidden": self.lang_hidden,
        });
        if let Some(expert) = &self.expert {
            frame["expert"] = json!({ "action": expert.action, "object": expert.object });
        }
        frame
    }
}

/// A parsed, validated trace.
#[derive(Debug, Clone)]
pub struct Trace {
    pub frames: Vec<Frame>,
    /// Language-vector length, constant across frames; 0 when there are none.
    pub lang_dim: usize,
    /// True when every frame carries expert labels.
    pub has_expert: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    schema: String,
    version: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetection {
    class_id: usize,
    visual: Vec<f64>,
    attributes: Vec<f64>,
    bbox: [usize; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    x: f64,
    z: f64,
    yaw: f64,
    camera_pitch: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpert {
    action: usize,
    object: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    t: u64,
    detections: Vec<RawDetection>,
    relations: Vec<[usize; 2]>,
    depth_ref: String,
    pose: RawPose,
    lang_hidden: Vec<f64>,
    #[serde(default)]
    expert: Option<RawExpert>,
}

fn convert_detection(index: usize, raw: RawDetection) -> Result<Detection> {
    let build = || -> Result<Detection> {
        if raw.class_id >= CLASS_COUNT {
            return Err(Error::UnknownClass {
                id: raw.class_id,
                count: CLASS_COUNT,
            });
        }
        if raw.visual.len() != VISUAL_DIM {
            return Err(Error::dims("visual feature", VISUAL_DIM, raw.visual.len()));
        }
        if raw.attributes.len() != ATTRIBUTE_DIM {
            return Err(Error::dims("attribute vector", ATTRIBUTE_DIM, raw.attributes.len()));
        }
        let [x_min, y_min, x_max, y_max] = raw.bbox;
        if x_min > x_max || y_min > y_max {
            return Err(Error::parse(
                "bbox",
                format!("inverted box [{x_min}, {y_min}, {x_max}, {y_max}]"),
            ));
        }
        Ok(Detection {
            object: ObservedObject {
                class_id: raw.class_id,
                visual: VisualFeature::new(raw.visual)?,
                attributes: AttributeVector::new(raw.attributes)?,
            },
            bbox: BoundingBox {
                x_min,
                y_min,
                x_max,
                y_max,
            },
        })
    };
    build().map_err(|e| e.in_detection(index))
}

fn convert_frame(raw: RawFrame) -> Result<Frame> {
    let mut detections = Vec::with_capacity(raw.detections.len());
    for (i, d) in raw.detections.into_iter().enumerate() {
        detections.push(convert_detection(i, d)?);
    }
    let mut relations = Vec::with_capacity(raw.relations.len());
    for [src, dst] in raw.relations {
        for endpoint in [src, dst] {
            if endpoint >= detections.len() {
                return Err(Error::RelationOutOfBounds {
                    index: endpoint,
                    len: detections.len(),
                });
            }
        }
        relations.push(RelationPair { src, dst });
    }
    if raw.depth_ref.is_empty() {
        return Err(Error::parse("depth_ref", "empty path"));
    }
    for v in [raw.pose.x, raw.pose.z, raw.pose.yaw, raw.pose.camera_pitch] {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "pose".into(),
            });
        }
    }
    if !(0.0..360.0).contains(&raw.pose.yaw) {
        return Err(Error::parse(
            "pose",
            format!("yaw must be in [0, 360), got {}", raw.pose.yaw),
        ));
    }
    if raw.lang_hidden.is_empty() {
        return Err(Error::parse("lang_hidden", "empty vector"));
    }
    if raw.lang_hidden.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "lang_hidden".into(),
        });
    }
    let expert = match raw.expert {
        None => None,
        Some(e) => {
            if e.action >= ACTION_COUNT {
                return Err(Error::parse(
                    "expert",
                    format!("action index {} out of range 0..{ACTION_COUNT}", e.action),
                ));
            }
            if e.object >= OBJECT_HEAD_DIM {
                return Err(Error::parse(
                    "expert",
                    format!("object index {} out of range 0..{OBJECT_HEAD_DIM}", e.object),
                ));
            }
            Some(ExpertLabel {
                action: e.action,
                object: e.object,
            })
        }
    };
    Ok(Frame {
        t: raw.t,
        detections,
        relations,
        depth_ref: raw.depth_ref,
        pose: AgentPose {
            x: raw.pose.x,
            z: raw.pose.z,
            yaw: raw.pose.yaw,
            camera_pitch: raw.pose.camera_pitch,
        },
        lang_hidden: raw.lang_hidden,
        expert,
    })
}

impl Trace {
    /// Parse and validate a whole trace from text. Pure; no file access.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines
            .next()
            .ok_or_else(|| Error::parse("trace", "empty input, expected header line"))?;
        let header: RawHeader = serde_json::from_str(header_line)
            .map_err(|e| Error::parse("trace header", e.to_string()))?;
        if header.schema != TRACE_SCHEMA || header.version != TRACE_VERSION {
            return Err(Error::SchemaMismatch {
                expected: format!("{TRACE_SCHEMA} v{TRACE_VERSION}"),
                got: format!("{} v{}", header.schema, header.version),
            });
        }
        let mut frames: Vec<Frame> = Vec::new();
        for (lineno, line) in lines {
            let frame_index = frames.len();
            let raw: RawFrame = serde_json::from_str(line).map_err(|e| {
                Error::parse(format!("trace line {}", lineno + 1), e.to_string()).in_frame(frame_index)
            })?;
            let frame = convert_frame(raw).map_err(|e| e.in_frame(frame_index))?;
            match frames.last() {
                None => {
                    if frame.t != 0 {
                        return Err(Error::NonMonotonicTimestep {
                            frame: 0,
                            prev: 0,
                            got: frame.t,
                        });
                    }
                }
                Some(prev) => {
                    if frame.t <= prev.t {
                        return Err(Error::NonMonotonicTimestep {
                            frame: frame_index,
                            prev: prev.t,
                            got: frame.t,
                        });
                    }
                }
            }
            frames.push(frame);
        }
        let lang_dim = frames.first().map_or(0, |f| f.lang_hidden.len());
        for (i, frame) in frames.iter().enumerate() {
            if frame.lang_hidden.len() != lang_dim {
                return Err(Error::dims("lang_hidden", lang_dim, frame.lang_hidden.len()).in_frame(i));
            }
        }
        let labeled = frames.iter().filter(|f| f.expert.is_some()).count();
        if labeled != 0 && labeled != frames.len() {
            return Err(Error::parse(
                "trace",
                format!(
                    "expert labels must be on every frame or none, found {labeled} of {}",
                    frames.len()
                ),
            ));
        }
        Ok(Self {
            lang_dim,
            has_expert: labeled != 0 && labeled == frames.len(),
            frames,
        })
    }

    /// Serialize to the JSON-lines format `parse` reads.
    pub fn to_jsonl(&self) -> String {
        let mut out = format!("{}\n", json!({"schema": TRACE_SCHEMA, "version": TRACE_VERSION}));
        for frame in &self.frames {
            out.push_str(&frame.to_json().to_string());
            out.push('\n');
        }
        out
    }

    /// Read a trace file and decode every referenced depth image, resolved
    /// relative to the trace file's directory. Returns one depth image per
    /// frame, in frame order.
    pub fn load(path: &Path) -> Result<(Self, Vec<DepthImage>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let trace = Self::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut depths = Vec::with_capacity(trace.frames.len());
        for (i, frame) in trace.frames.iter().enumerate() {
            let depth_path = base.join(&frame.depth_ref);
            let bytes = std::fs::read(&depth_path)
                .map_err(|e| Error::io(&depth_path, e).in_frame(i))?;
            let depth = DepthImage::decode(&bytes).map_err(|e| e.in_frame(i))?;
            for d in &frame.detections {
                d.bbox.validate(depth.width(), depth.height()).map_err(|e| e.in_frame(i))?;
            }
            depths.push(depth);
        }
        Ok((trace, depths))
    }
}
