//! Layered top-down spatial map and the depth back-projection that feeds it.
//!
//! The map is an `s x s` grid of 0.25 m cells with one layer per object
//! class. Cell (s/2, s/2) sits at the world origin, which is where the agent
//! starts; the grid never re-centers. Column index `i` grows with world +x,
//! row index `j` with world +z. The grid graph (layer-0 4-neighborhoods plus
//! vertical stacks) is fixed at construction; only cell occupancy changes.

use std::collections::BTreeMap;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::feature_bank::NodeFeature;
use crate::pgm::DepthImage;

/// Grid cells per side.
pub const MAP_SIZE: usize = 10;
/// One layer per object class.
pub const MAP_LAYERS: usize = 106;
/// Meters per grid cell.
pub const DEFAULT_CELL_SIZE: f64 = 0.25;

/// Axis-aligned detection box, inclusive pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BoundingBox {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.x_min > self.x_max
            || self.y_min > self.y_max
            || self.x_max >= width
            || self.y_max >= height
        {
            return Err(Error::BboxOutOfBounds {
                x_min: self.x_min,
                y_min: self.y_min,
                x_max: self.x_max,
                y_max: self.y_max,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Pinhole camera model. `fx`/`fy` are focal lengths in pixels, `cx`/`cy` the
/// principal point; pixel centers sit at integer coordinates plus one half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    /// Derive intrinsics from a horizontal field of view, assuming square
    /// pixels and a centered principal point.
    pub fn from_fov_deg(width: usize, height: usize, fov_deg: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig {
                message: "camera dimensions must be positive".into(),
            });
        }
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::InvalidConfig {
                message: format!("camera fov must be in (0, 180) degrees, got {fov_deg}"),
            });
        }
        let fx = (width as f64 / 2.0) / (fov_deg.to_radians() / 2.0).tan();
        Ok(Self {
            width,
            height,
            fx,
            fy: fx,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        })
    }
}

/// Agent pose in world coordinates. `yaw` is the heading in degrees measured
/// clockwise from +z (the initial facing), so forward = (sin yaw, cos yaw) in
/// the (x, z) plane. `camera_pitch` is degrees of downward camera tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPose {
    pub x: f64,
    pub z: f64,
    pub yaw: f64,
    pub camera_pitch: f64,
}

impl AgentPose {
    pub fn origin() -> Self {
        Self {
            x: 0.0,
            z: 0.0,
            yaw: 0.0,
            camera_pitch: 0.0,
        }
    }
}

/// One occupied map cell, identified by column `i`, row `j`, and class layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellAddress {
    pub layer: usize,
    pub j: usize,
    pub i: usize,
}

/// The layered map. Occupancy is sparse: absent cells are unoccupied and read
/// as all-zero features by the graph network.
#[derive(Debug, Clone)]
pub struct SpatialSemanticMap {
    size: usize,
    layers: usize,
    cell_size: f64,
    occupancy: BTreeMap<CellAddress, NodeFeature>,
}

impl SpatialSemanticMap {
    pub fn new(size: usize, layers: usize, cell_size: f64) -> Result<Self> {
        if size == 0 || layers == 0 {
            return Err(Error::InvalidConfig {
                message: "map size and layer count must be positive".into(),
            });
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidConfig {
                message: format!("cell_size must be positive and finite, got {cell_size}"),
            });
        }
        Ok(Self {
            size,
            layers,
            cell_size,
            occupancy: BTreeMap::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn node_count(&self) -> usize {
        self.size * self.size * self.layers
    }

    pub fn node_index(&self, i: usize, j: usize, layer: usize) -> usize {
        layer * self.size * self.size + j * self.size + i
    }

    pub fn node_address(&self, node: usize) -> CellAddress {
        debug_assert!(node < self.node_count(), "node {node} out of range");
        let plane = self.size * self.size;
        CellAddress {
            layer: node / plane,
            j: (node % plane) / self.size,
            i: node % self.size,
        }
    }

    /// Fixed undirected edge set: 4-neighborhoods within layer 0 plus a
    /// vertical edge between identical (i, j) of adjacent layers.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let s = self.size;
        let mut edges = Vec::new();
        for j in 0..s {
            for i in 0..s {
                if i + 1 < s {
                    edges.push((self.node_index(i, j, 0), self.node_index(i + 1, j, 0)));
                }
                if j + 1 < s {
                    edges.push((self.node_index(i, j, 0), self.node_index(i, j + 1, 0)));
                }
            }
        }
        for layer in 0..self.layers.saturating_sub(1) {
            for j in 0..s {
                for i in 0..s {
                    edges.push((
                        self.node_index(i, j, layer),
                        self.node_index(i, j, layer + 1),
                    ));
                }
            }
        }
        edges
    }

    /// Neighbor node indices, ascending.
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let CellAddress { layer, j, i } = self.node_address(node);
        let mut out = Vec::with_capacity(6);
        if layer == 0 {
            if i > 0 {
                out.push(self.node_index(i - 1, j, 0));
            }
            if i + 1 < self.size {
                out.push(self.node_index(i + 1, j, 0));
            }
            if j > 0 {
                out.push(self.node_index(i, j - 1, 0));
            }
            if j + 1 < self.size {
                out.push(self.node_index(i, j + 1, 0));
            }
        }
        if layer > 0 {
            out.push(self.node_index(i, j, layer - 1));
        }
        if layer + 1 < self.layers {
            out.push(self.node_index(i, j, layer + 1));
        }
        out.sort_unstable();
        out
    }

    /// Dense symmetric adjacency; intended for small test maps only.
    pub fn adjacency_dense(&self) -> Array2<f64> {
        let n = self.node_count();
        let mut a = Array2::zeros((n, n));
        for (u, v) in self.undirected_edges() {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
        a
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.len()
    }

    pub fn cell(&self, i: usize, j: usize, layer: usize) -> Option<&NodeFeature> {
        self.occupancy.get(&CellAddress { layer, j, i })
    }

    /// Occupied cells with their features, sorted by (layer, row, column).
    pub fn occupied_cells(&self) -> impl Iterator<Item = (&CellAddress, &NodeFeature)> {
        self.occupancy.iter()
    }

    /// Occupied cells keyed by flat node index, ascending; the sparse feature
    /// rows the graph network consumes.
    pub fn occupied_feature_rows(&self) -> Vec<(usize, &NodeFeature)> {
        let mut rows: Vec<(usize, &NodeFeature)> = self
            .occupancy
            .iter()
            .map(|(addr, f)| (self.node_index(addr.i, addr.j, addr.layer), f))
            .collect();
        rows.sort_unstable_by_key(|&(idx, _)| idx);
        rows
    }

    /// Write a feature into one cell, overwriting any previous content.
    pub fn write_cell(
        &mut self,
        i: usize,
        j: usize,
        layer: usize,
        feature: NodeFeature,
    ) -> Result<()> {
        if i >= self.size || j >= self.size || layer >= self.layers {
            return Err(Error::InvalidConfig {
                message: format!(
                    "cell ({i}, {j}, {layer}) outside {}x{}x{} map",
                    self.size, self.size, self.layers
                ),
            });
        }
        self.occupancy.insert(CellAddress { layer, j, i }, feature);
        Ok(())
    }

    /// Write one detection's feature into every projected cell at the layer
    /// given by its class id.
    pub fn apply_detection(
        &mut self,
        class_id: usize,
        cells: &[(usize, usize)],
        feature: &NodeFeature,
    ) -> Result<()> {
        for &(i, j) in cells {
            self.write_cell(i, j, class_id, feature.clone())?;
        }
        Ok(())
    }

    /// Back-project every `stride`-th bbox pixel through the pinhole model,
    /// rotate by camera pitch then agent yaw, translate by agent position,
    /// drop the height coordinate, and discretize into grid cells. Cells
    /// outside the grid are discarded; the result is deduplicated and sorted.
    pub fn project_detection(
        &self,
        depth: &DepthImage,
        bbox: &BoundingBox,
        pose: &AgentPose,
        intrinsics: &CameraIntrinsics,
        stride: usize,
    ) -> Result<Vec<(usize, usize)>> {
        if intrinsics.width != depth.width() || intrinsics.height != depth.height() {
            return Err(Error::dims(
                "depth image vs camera intrinsics",
                intrinsics.width * intrinsics.height,
                depth.width() * depth.height(),
            ));
        }
        bbox.validate(depth.width(), depth.height())?;
        let stride = stride.max(1);
        let pitch = pose.camera_pitch.to_radians();
        let yaw = pose.yaw.to_radians();
        let (sin_p, cos_p) = pitch.sin_cos();
        let (sin_y, cos_y) = yaw.sin_cos();
        let half = (self.size / 2) as i64;
        let mut cells = Vec::new();
        for v in (bbox.y_min..=bbox.y_max).step_by(stride) {
            for u in (bbox.x_min..=bbox.x_max).step_by(stride) {
                let d = depth.depth_m(u, v);
                let x_c = (u as f64 + 0.5 - intrinsics.cx) * d / intrinsics.fx;
                let y_c = (v as f64 + 0.5 - intrinsics.cy) * d / intrinsics.fy;
                let z_c = d;
                // Pitch rotates about the camera x-axis; height is dropped.
                let x_l = x_c;
                let z_l = -y_c * sin_p + z_c * cos_p;
                let wx = pose.x + x_l * cos_y + z_l * sin_y;
                let wz = pose.z - x_l * sin_y + z_l * cos_y;
                let ci = half + (wx / self.cell_size + 0.5).floor() as i64;
                let cj = half + (wz / self.cell_size + 0.5).floor() as i64;
                if (0..self.size as i64).contains(&ci) && (0..self.size as i64).contains(&cj) {
                    cells.push((ci as usize, cj as usize));
                }
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(cells)
    }

    /// Digest over geometry and occupancy; equal digests mean byte-identical
    /// map state.
    pub fn state_digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.size as u64).to_le_bytes());
        hasher.update((self.layers as u64).to_le_bytes());
        hasher.update(self.cell_size.to_le_bytes());
        hasher.update((self.occupancy.len() as u64).to_le_bytes());
        for (addr, feature) in &self.occupancy {
            hasher.update((addr.layer as u64).to_le_bytes());
            hasher.update((addr.j as u64).to_le_bytes());
            hasher.update((addr.i as u64).to_le_bytes());
            for v in feature.as_slice() {
                hasher.update(v.to_le_bytes());
            }
        }
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}
