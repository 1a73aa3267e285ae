//! Camera rays against room planes: vertex projection and panorama baking.

use rayon::prelude::*;

use super::{Plane, RoomLayout, SurfaceMesh};
use crate::pano::{direction_to_pixel, dot, pixel_to_direction, sub, ScalarMap, Vec3};
use crate::{Error, Result};

/// Bakes fail when more than this fraction of pixels hits no surface.
pub const MAX_UNASSIGNED_FRACTION: f64 = 1e-3;

const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub plane: usize,
    pub t: f64,
    pub a: f64,
    pub b: f64,
}

/// Nearest in-bounds plane hit along `origin + t·dir`, `t > 0`.
pub fn cast_ray(planes: &[Plane], origin: Vec3, dir: Vec3) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for (k, plane) in planes.iter().enumerate() {
        let denom = dot(dir, plane.normal);
        if denom.abs() < 1e-15 {
            continue;
        }
        let t = dot(sub(plane.origin, origin), plane.normal) / denom;
        if !(t > 0.0) || best.is_some_and(|b| b.t <= t) {
            continue;
        }
        let p = std::array::from_fn(|i| origin[i] + t * dir[i]);
        let (a, b) = plane.local(p);
        if plane.contains(a, b, EDGE_TOL) {
            best = Some(Hit { plane: k, t, a, b });
        }
    }
    best
}

/// Fills `pixels` on every plane mesh with the panorama coordinate of each vertex.
pub fn project_vertices(mesh: &mut SurfaceMesh, layout: &RoomLayout, width: usize, height: usize) -> Result<()> {
    for pm in &mut mesh.planes {
        pm.pixels = pm
            .positions
            .iter()
            .map(|&p| layout.direction_to(p).map(|d| direction_to_pixel(d, width, height)))
            .collect::<Result<_>>()?;
    }
    Ok(())
}

const NONE: u32 = u32::MAX;

/// Pixel-to-vertex assignment for one geometry and panorama size.
///
/// Building the plan casts one ray per pixel; baking any number of vertex
/// fields through it afterwards is a gather.
#[derive(Debug, Clone)]
pub struct BakePlan {
    width: usize,
    height: usize,
    plane: Vec<u32>,
    vertex: Vec<u32>,
    masked: Vec<bool>,
    unassigned: usize,
}

impl BakePlan {
    pub fn new(layout: &RoomLayout, planes: &[Plane], mesh: &SurfaceMesh, width: usize, height: usize) -> Result<Self> {
        if mesh.planes.len() != planes.len() {
            return Err(Error::input("mesh and plane list disagree"));
        }
        let hits: Vec<(u32, u32, bool)> = (0..width * height)
            .into_par_iter()
            .map(|k| {
                let d = pixel_to_direction((k % width) as f64, (k / width) as f64, width, height)
                    .expect("pixel centers are in range");
                let dir = layout.to_world(d.to_vector());
                match cast_ray(planes, layout.camera, dir) {
                    Some(hit) => {
                        let v = mesh.planes[hit.plane].nearest_vertex(hit.a, hit.b);
                        let masked = planes[hit.plane].in_aperture(hit.a, hit.b);
                        (hit.plane as u32, v as u32, masked)
                    }
                    None => (NONE, NONE, false),
                }
            })
            .collect();
        let unassigned = hits.iter().filter(|h| h.0 == NONE).count();
        let frac = unassigned as f64 / (width * height) as f64;
        if frac > MAX_UNASSIGNED_FRACTION {
            return Err(Error::input(format!(
                "{unassigned} of {} panorama pixels hit no surface; is the room closed?",
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            plane: hits.iter().map(|h| h.0).collect(),
            vertex: hits.iter().map(|h| h.1).collect(),
            masked: hits.iter().map(|h| h.2).collect(),
            unassigned,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn unassigned(&self) -> usize {
        self.unassigned
    }

    /// Plane index seen through pixel `(x, y)`.
    pub fn plane_at(&self, x: usize, y: usize) -> Option<usize> {
        let p = self.plane[y * self.width + x];
        (p != NONE).then_some(p as usize)
    }

    /// Plane index and lattice vertex seen through pixel `(x, y)`.
    pub fn vertex_at(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        let k = y * self.width + x;
        (self.plane[k] != NONE).then(|| (self.plane[k] as usize, self.vertex[k] as usize))
    }

    /// Gathers per-vertex values into a panorama. Unassigned and aperture
    /// pixels are NaN.
    pub fn bake(&self, values: &[Vec<f64>]) -> ScalarMap {
        let data = (0..self.plane.len())
            .into_par_iter()
            .map(|k| {
                let p = self.plane[k];
                if p == NONE || self.masked[k] {
                    f64::NAN
                } else {
                    values[p as usize][self.vertex[k] as usize]
                }
            })
            .collect();
        ScalarMap::new(self.width, self.height, data).expect("plan dimensions are valid")
    }

    /// Per-pixel value of a per-plane quantity (e.g. reflectance).
    pub fn per_plane(&self, values: &[f64]) -> ScalarMap {
        let data = self
            .plane
            .iter()
            .map(|&p| if p == NONE { f64::NAN } else { values[p as usize] })
            .collect();
        ScalarMap::new(self.width, self.height, data).expect("plan dimensions are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::cuboid;
    use super::super::{mesh_surfaces, Aperture};
    use super::*;
    use crate::pano::Direction;
    use std::f64::consts::PI;

    #[test]
    fn forward_wall_vertex_maps_to_center() {
        let layout = cuboid();
        let planes = layout.build_surfaces().unwrap();
        let d = layout.direction_to([4.0, 1.5, 1.2]).unwrap();
        let (u, v) = direction_to_pixel(d, 1024, 512);
        assert!((u - 511.5).abs() < 1e-9 && (v - 255.5).abs() < 1e-9);
        // nadir
        let d = layout.direction_to([2.0, 1.5, 0.0]).unwrap();
        assert!((d.polar - PI).abs() < 1e-12);
        let mut mesh = mesh_surfaces(&planes, 0.5).unwrap();
        project_vertices(&mut mesh, &layout, 1024, 512).unwrap();
        // floor vertex (2.0, 1.5) is lattice (4, 3)
        let floor = &mesh.planes[0];
        let k = floor.lattice.index(4, 3);
        assert_eq!(floor.positions[k], [2.0, 1.5, 0.0]);
        assert!((floor.pixels[k].1 - 511.5).abs() < 1e-9);
    }

    #[test]
    fn projection_matches_trig_oracle() {
        let mut layout = cuboid();
        layout.forward_azimuth = 0.3;
        let planes = layout.build_surfaces().unwrap();
        let mut mesh = mesh_surfaces(&planes, 0.35).unwrap();
        project_vertices(&mut mesh, &layout, 800, 400).unwrap();
        for pm in &mesh.planes {
            for (p, &(u, v)) in pm.positions.iter().zip(&pm.pixels) {
                let (dx, dy, dz) = (p[0] - 2.0, p[1] - 1.5, p[2] - 1.2);
                let r = (dx * dx + dy * dy + dz * dz).sqrt();
                // world azimuth measured counter-clockwise; image azimuth grows clockwise from forward
                let world_az = dy.atan2(dx);
                let theta = (PI - (world_az - 0.3)).rem_euclid(2.0 * PI);
                let phi = (dz / r).acos();
                let eu = theta / (2.0 * PI) * 800.0 - 0.5;
                let ev = phi / PI * 400.0 - 0.5;
                let du = (u - eu + 400.0).rem_euclid(800.0) - 400.0;
                assert!(du.abs() < 1e-9, "{u} vs {eu}");
                assert!((v - ev).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn closed_cuboid_assigns_every_pixel() {
        let layout = cuboid();
        let planes = layout.build_surfaces().unwrap();
        let mesh = mesh_surfaces(&planes, 0.25).unwrap();
        let plan = BakePlan::new(&layout, &planes, &mesh, 256, 128).unwrap();
        assert_eq!(plan.unassigned(), 0);
        let values: Vec<Vec<f64>> = mesh.planes.iter().map(|p| vec![3.5; p.lattice.len()]).collect();
        let map = plan.bake(&values);
        assert!(map.data().iter().all(|&x| x == 3.5));
    }

    #[test]
    fn open_room_is_rejected() {
        let layout = cuboid();
        let mut planes = layout.build_surfaces().unwrap();
        planes.remove(1);
        let mesh = mesh_surfaces(&planes, 0.25).unwrap();
        assert!(BakePlan::new(&layout, &planes, &mesh, 128, 64).is_err());
    }

    #[test]
    fn bake_returns_surface_under_ray() {
        let layout = cuboid();
        let planes = layout.build_surfaces().unwrap();
        let mesh = mesh_surfaces(&planes, 0.1).unwrap();
        let plan = BakePlan::new(&layout, &planes, &mesh, 200, 100).unwrap();
        // straight up is the ceiling, straight ahead is wall_1 (x = 4)
        assert_eq!(plan.plane_at(0, 0), Some(1));
        assert_eq!(plan.plane_at(100, 50), Some(3));
        let d = Direction::new(PI, PI / 2.0).unwrap();
        assert!(d.to_vector()[0] > 0.99);
    }

    #[test]
    fn apertures_are_masked() {
        let mut layout = cuboid();
        layout.apertures.push(Aperture {
            surface: "wall_1".into(),
            u: [1.0, 2.0],
            v: [1.0, 1.6],
        });
        let planes = layout.build_surfaces().unwrap();
        let mesh = mesh_surfaces(&planes, 0.1).unwrap();
        let plan = BakePlan::new(&layout, &planes, &mesh, 200, 100).unwrap();
        let values: Vec<Vec<f64>> = mesh.planes.iter().map(|p| vec![1.0; p.lattice.len()]).collect();
        let map = plan.bake(&values);
        // the window spans y in [1, 2] on the x = 4 wall, straight ahead
        assert!(map.get(100, 49).is_nan());
        assert_eq!(map.get(10, 50), 1.0);
    }
}
