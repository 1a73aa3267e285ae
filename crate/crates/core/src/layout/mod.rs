//! Room layouts: an extruded floor-plan polygon with a camera inside it.
//!
//! World frame is right-handed, z-up, in meters. Surfaces are named `floor`,
//! `ceiling`, and `wall_<i>` for the edge from footprint vertex `i` to `i + 1`.

mod geometry;
mod mesh;
mod raycast;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pano::{dot, norm, sub, Direction, Vec3};
use crate::{Error, Result};

pub use geometry::{point_in_polygon, polygon_area, rect_polygon_overlap};
pub use mesh::{mesh_surfaces, Lattice, PlaneMesh, SurfaceMesh, DEFAULT_GRID_SPACING};
pub use raycast::{cast_ray, project_vertices, BakePlan, Hit, MAX_UNASSIGNED_FRACTION};

/// Per-surface assignment from the layout file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub id: String,
    pub material: String,
    pub reflectance: f64,
}

/// Rectangular region on a wall, in the wall's (along-edge, height) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    pub surface: String,
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl Aperture {
    pub fn contains(&self, a: f64, b: f64) -> bool {
        a >= self.u[0] && a <= self.u[1] && b >= self.v[0] && b <= self.v[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomLayout {
    pub footprint: Vec<[f64; 2]>,
    pub floor_z: f64,
    pub ceiling_z: f64,
    pub camera: Vec3,
    /// World azimuth (counter-clockwise from +x, radians) seen at the
    /// panorama's center column.
    #[serde(default)]
    pub forward_azimuth: f64,
    #[serde(default)]
    pub surfaces: Vec<SurfaceSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub apertures: Vec<Aperture>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Floor,
    Ceiling,
    Wall(usize),
}

/// A bounded planar surface of the room.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub id: String,
    pub kind: SurfaceKind,
    pub origin: Vec3,
    pub axis_u: Vec3,
    pub axis_v: Vec3,
    pub extent_u: f64,
    pub extent_v: f64,
    /// Unit normal pointing into the room.
    pub normal: Vec3,
    pub material: String,
    pub reflectance: f64,
    /// Polygon outline in plane coordinates; `None` means the full rectangle.
    pub outline: Option<Vec<[f64; 2]>>,
    pub apertures: Vec<Aperture>,
}

impl Plane {
    pub fn area(&self) -> f64 {
        match &self.outline {
            Some(poly) => polygon_area(poly).abs(),
            None => self.extent_u * self.extent_v,
        }
    }

    pub fn point(&self, a: f64, b: f64) -> Vec3 {
        std::array::from_fn(|k| self.origin[k] + a * self.axis_u[k] + b * self.axis_v[k])
    }

    pub fn local(&self, p: Vec3) -> (f64, f64) {
        let d = sub(p, self.origin);
        (dot(d, self.axis_u), dot(d, self.axis_v))
    }

    /// Whether plane coordinates fall on the surface, with `tol` meters of slack.
    pub fn contains(&self, a: f64, b: f64, tol: f64) -> bool {
        if a < -tol || b < -tol || a > self.extent_u + tol || b > self.extent_v + tol {
            return false;
        }
        match &self.outline {
            None => true,
            Some(poly) => point_in_polygon(poly, [a, b]) || geometry::distance_to_boundary(poly, [a, b]) <= tol,
        }
    }

    pub fn in_aperture(&self, a: f64, b: f64) -> bool {
        self.apertures.iter().any(|ap| ap.contains(a, b))
    }
}

impl RoomLayout {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("layout JSON: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn surface_ids(&self) -> Vec<String> {
        let mut ids = vec!["floor".to_string(), "ceiling".to_string()];
        ids.extend((0..self.footprint.len()).map(|i| format!("wall_{i}")));
        ids
    }

    fn surface_spec(&self, id: &str) -> Result<&SurfaceSpec> {
        self.surfaces
            .iter()
            .find(|s| s.id == id)
            .or_else(|| self.surfaces.iter().find(|s| s.id == "default"))
            .ok_or_else(|| Error::input(format!("no surface entry for `{id}` and no `default` entry")))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.footprint.len();
        if n < 3 {
            return Err(Error::input(format!("footprint needs at least 3 vertices, got {n}")));
        }
        if self.footprint.iter().flatten().any(|c| !c.is_finite())
            || self.camera.iter().any(|c| !c.is_finite())
            || !self.floor_z.is_finite()
            || !self.ceiling_z.is_finite()
            || !self.forward_azimuth.is_finite()
        {
            return Err(Error::input("layout contains non-finite coordinates"));
        }
        if let Some(i) = (0..n).find(|&i| {
            let (a, b) = (self.footprint[i], self.footprint[(i + 1) % n]);
            (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-9
        }) {
            return Err(Error::input(format!("footprint edge {i} has zero length")));
        }
        if !geometry::is_simple(&self.footprint) {
            return Err(Error::input("footprint polygon is self-intersecting"));
        }
        if polygon_area(&self.footprint).abs() < 1e-12 {
            return Err(Error::input("footprint polygon has zero area"));
        }
        if !(self.floor_z < self.camera[2] && self.camera[2] < self.ceiling_z) {
            return Err(Error::input(format!(
                "camera height {} must lie strictly between floor {} and ceiling {}",
                self.camera[2], self.floor_z, self.ceiling_z
            )));
        }
        let cam = [self.camera[0], self.camera[1]];
        if !point_in_polygon(&self.footprint, cam) || geometry::distance_to_boundary(&self.footprint, cam) < 1e-9 {
            return Err(Error::input(format!(
                "camera ({}, {}) lies outside the footprint",
                cam[0], cam[1]
            )));
        }
        for s in &self.surfaces {
            if !(s.reflectance > 0.0 && s.reflectance <= 1.0) {
                return Err(Error::input(format!(
                    "surface `{}` reflectance must lie in (0, 1], got {}",
                    s.id, s.reflectance
                )));
            }
        }
        let ids = self.surface_ids();
        for ap in &self.apertures {
            if !ap.surface.starts_with("wall_") || !ids.contains(&ap.surface) {
                return Err(Error::input(format!("aperture on unknown wall `{}`", ap.surface)));
            }
            if !(ap.u[0] < ap.u[1] && ap.v[0] < ap.v[1]) {
                return Err(Error::input(format!("aperture on `{}` has empty extent", ap.surface)));
            }
        }
        Ok(())
    }

    /// Rotates a panorama-frame vector into the world frame.
    pub fn to_world(&self, local: Vec3) -> Vec3 {
        let (s, c) = self.forward_azimuth.sin_cos();
        [c * local[0] - s * local[1], s * local[0] + c * local[1], local[2]]
    }

    /// Rotates a world-frame vector into the panorama frame.
    pub fn to_local(&self, world: Vec3) -> Vec3 {
        let (s, c) = self.forward_azimuth.sin_cos();
        [c * world[0] + s * world[1], -s * world[0] + c * world[1], world[2]]
    }

    /// Panorama direction of a world point as seen from the camera.
    pub fn direction_to(&self, p: Vec3) -> Result<Direction> {
        let d = sub(p, self.camera);
        if norm(d) < 1e-12 {
            return Err(Error::input("point coincides with the camera"));
        }
        Direction::from_vector(self.to_local(d))
    }

    /// Floor, ceiling, then one wall per footprint edge; normals face inward.
    pub fn build_surfaces(&self) -> Result<Vec<Plane>> {
        self.validate()?;
        let fp = &self.footprint;
        let n = fp.len();
        let ccw = polygon_area(fp) > 0.0;
        let min_x = fp.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let min_y = fp.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_x = fp.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let max_y = fp.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let outline: Vec<[f64; 2]> = fp.iter().map(|p| [p[0] - min_x, p[1] - min_y]).collect();
        let height = self.ceiling_z - self.floor_z;

        let mut planes = Vec::with_capacity(n + 2);
        for (id, z, nz, kind) in [
            ("floor", self.floor_z, 1.0, SurfaceKind::Floor),
            ("ceiling", self.ceiling_z, -1.0, SurfaceKind::Ceiling),
        ] {
            let spec = self.surface_spec(id)?;
            planes.push(Plane {
                id: id.to_string(),
                kind,
                origin: [min_x, min_y, z],
                axis_u: [1.0, 0.0, 0.0],
                axis_v: [0.0, 1.0, 0.0],
                extent_u: max_x - min_x,
                extent_v: max_y - min_y,
                normal: [0.0, 0.0, nz],
                material: spec.material.clone(),
                reflectance: spec.reflectance,
                outline: Some(outline.clone()),
                apertures: Vec::new(),
            });
        }
        for i in 0..n {
            let (a, b) = (fp[i], fp[(i + 1) % n]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = dx.hypot(dy);
            let left = [-dy / len, dx / len, 0.0];
            let normal = if ccw { left } else { left.map(|c| -c) };
            let id = format!("wall_{i}");
            let spec = self.surface_spec(&id)?;
            planes.push(Plane {
                apertures: self.apertures.iter().filter(|ap| ap.surface == id).cloned().collect(),
                id,
                kind: SurfaceKind::Wall(i),
                origin: [a[0], a[1], self.floor_z],
                axis_u: [dx / len, dy / len, 0.0],
                axis_v: [0.0, 0.0, 1.0],
                extent_u: len,
                extent_v: height,
                normal,
                material: spec.material.clone(),
                reflectance: spec.reflectance,
                outline: None,
            });
        }
        Ok(planes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn cuboid() -> RoomLayout {
        RoomLayout::from_json(
            r#"{
                "footprint": [[0,0],[4,0],[4,3],[0,3]],
                "floor_z": 0.0, "ceiling_z": 2.5, "camera": [2.0, 1.5, 1.2],
                "surfaces": [{"id": "default", "material": "plaster_dense", "reflectance": 0.5},
                             {"id": "floor", "material": "concrete", "reflectance": 0.3}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn cuboid_has_six_inward_planes() {
        let layout = cuboid();
        let planes = layout.build_surfaces().unwrap();
        assert_eq!(planes.len(), 6);
        assert_eq!(planes[0].material, "concrete");
        assert_eq!(planes[3].material, "plaster_dense");
        let center = [2.0, 1.5, 1.25];
        for p in &planes {
            // the room center is on the inner side of every surface
            assert!(dot(sub(center, p.origin), p.normal) > 0.0, "{}", p.id);
            assert_abs_diff_eq!(dot(p.axis_u, p.axis_v), 0.0);
            assert_abs_diff_eq!(norm(p.axis_u), 1.0);
            assert_abs_diff_eq!(norm(p.normal), 1.0);
        }
        let total: f64 = planes.iter().map(Plane::area).sum();
        assert_abs_diff_eq!(total, 59.0, epsilon = 1e-12);
    }

    #[test]
    fn clockwise_footprint_still_faces_inward() {
        let mut layout = cuboid();
        layout.footprint.reverse();
        for p in layout.build_surfaces().unwrap() {
            assert!(dot(sub([2.0, 1.5, 1.25], p.origin), p.normal) > 0.0);
        }
    }

    #[test]
    fn l_shape_has_eight_planes() {
        let mut layout = cuboid();
        layout.footprint = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 2.0], [2.0, 2.0], [2.0, 4.0], [0.0, 4.0]];
        layout.camera = [1.0, 1.0, 1.2];
        let planes = layout.build_surfaces().unwrap();
        assert_eq!(planes.len(), 8);
        assert_abs_diff_eq!(planes[0].area(), 12.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_layouts_rejected() {
        let mut outside = cuboid();
        outside.camera = [5.0, 1.0, 1.2];
        assert!(outside.build_surfaces().is_err());

        let mut too_high = cuboid();
        too_high.camera[2] = 2.5;
        assert!(too_high.build_surfaces().is_err());

        let mut bowtie = cuboid();
        bowtie.footprint = vec![[0.0, 0.0], [4.0, 3.0], [4.0, 0.0], [0.0, 3.0]];
        bowtie.camera = [1.0, 1.5, 1.0];
        assert!(bowtie.build_surfaces().is_err());

        let mut two = cuboid();
        two.footprint.truncate(2);
        assert!(two.build_surfaces().is_err());

        let mut bad_r = cuboid();
        bad_r.surfaces[0].reflectance = 0.0;
        assert!(bad_r.build_surfaces().is_err());

        let mut missing = cuboid();
        missing.surfaces.retain(|s| s.id != "default");
        assert!(missing.build_surfaces().is_err());
    }

    #[test]
    fn forward_azimuth_rotates_view() {
        let mut layout = cuboid();
        let d = layout.direction_to([4.0, 1.5, 1.2]).unwrap();
        assert_abs_diff_eq!(d.azimuth, std::f64::consts::PI, epsilon = 1e-12);
        layout.forward_azimuth = std::f64::consts::FRAC_PI_2;
        let d = layout.direction_to([2.0, 3.0, 1.2]).unwrap();
        assert_abs_diff_eq!(d.azimuth, std::f64::consts::PI, epsilon = 1e-12);
        let w = layout.to_world(layout.to_local([0.3, -0.7, 0.2]));
        assert_abs_diff_eq!(w[1], -0.7, epsilon = 1e-15);
        assert!(layout.direction_to(layout.camera).is_err());
    }
}
