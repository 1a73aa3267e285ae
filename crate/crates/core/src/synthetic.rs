//! Procedural test scenes: a room layout plus a Lambertian panorama rendered from it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::layout::{cast_ray, RoomLayout};
use crate::pano::{pixel_to_direction, HdrPanorama};
use crate::photometry::DEFAULT_EFFICACY;
use crate::{Error, Result};

/// Rectangle of extra illuminance on one surface, in that surface's plane coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SunPatch {
    pub surface: String,
    pub u: [f64; 2],
    pub v: [f64; 2],
    /// lx
    pub illuminance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub layout: RoomLayout,
    /// Illuminance on every surface, lx.
    pub ambient_lux: f64,
    pub patches: Vec<SunPatch>,
}

/// 4 × 3 × 2.5 m plaster room with the camera near its center.
pub fn desk_layout() -> RoomLayout {
    RoomLayout::from_json(
        r#"{
            "footprint": [[0, 0], [4, 0], [4, 3], [0, 3]],
            "floor_z": 0.0,
            "ceiling_z": 2.5,
            "camera": [2.0, 1.5, 1.2],
            "surfaces": [
                {"id": "default", "material": "plaster_dense", "reflectance": 0.5},
                {"id": "floor", "material": "plaster_dense", "reflectance": 0.3},
                {"id": "ceiling", "material": "plaster_dense", "reflectance": 0.8}
            ]
        }"#,
    )
    .expect("built-in layout parses")
}

impl Fixture {
    /// Desk-scale room with a 12 000 lx sun patch on the floor and one on the
    /// far wall, over 300 lx of ambient light.
    pub fn desk_room() -> Self {
        Self {
            layout: desk_layout(),
            ambient_lux: 300.0,
            patches: vec![
                SunPatch {
                    surface: "floor".into(),
                    u: [2.4, 3.4],
                    v: [0.6, 1.6],
                    illuminance: 12_000.0,
                },
                SunPatch {
                    surface: "wall_1".into(),
                    u: [0.5, 1.5],
                    v: [0.8, 1.6],
                    illuminance: 6_000.0,
                },
            ],
        }
    }

    /// Renders a `width × width/2` panorama whose luminance is `E·R/π` at
    /// every visible surface point, encoded as grey RGB.
    pub fn render(&self, width: usize) -> Result<HdrPanorama> {
        if width < 2 || !width.is_multiple_of(2) {
            return Err(Error::input(format!("panorama width must be even, got {width}")));
        }
        let height = width / 2;
        let planes = self.layout.build_surfaces()?;
        let pixels = (0..width * height)
            .into_par_iter()
            .map(|k| {
                let d = pixel_to_direction((k % width) as f64, (k / width) as f64, width, height)?;
                let dir = self.layout.to_world(d.to_vector());
                let Some(hit) = cast_ray(&planes, self.layout.camera, dir) else {
                    return Ok([0.0; 3]);
                };
                let plane = &planes[hit.plane];
                let extra: f64 = self
                    .patches
                    .iter()
                    .filter(|p| {
                        p.surface == plane.id
                            && (p.u[0]..=p.u[1]).contains(&hit.a)
                            && (p.v[0]..=p.v[1]).contains(&hit.b)
                    })
                    .map(|p| p.illuminance)
                    .sum();
                let e = self.ambient_lux + extra;
                let l = e * plane.reflectance / std::f64::consts::PI;
                Ok([l / DEFAULT_EFFICACY; 3])
            })
            .collect::<Result<Vec<_>>>()?;
        HdrPanorama::new(width, height, pixels, 1.0)
    }
}
