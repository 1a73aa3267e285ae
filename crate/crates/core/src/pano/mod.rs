//! Equirectangular image model and projection math.
//!
//! Continuous pixel coordinates place pixel centers on integers: column `u`
//! covers `[u - 0.5, u + 0.5)`. Azimuth `θ` runs left to right over `[0, 2π)`
//! and polar angle `φ` runs top to bottom over `[0, π]`.
//!
//! The panorama's local frame is right-handed and z-up. The image center
//! (`θ = π`, `φ = π/2`) looks along local `+x`; moving right in the image turns
//! toward local `-y`; the top row looks along `+z`.

mod colormap;
pub mod io;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use colormap::false_color;

pub type Vec3 = [f64; 3];

/// A direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    /// Azimuth in `[0, 2π)`.
    pub azimuth: f64,
    /// Polar angle from local `+z`, in `[0, π]`.
    pub polar: f64,
}

impl Direction {
    pub fn new(azimuth: f64, polar: f64) -> Result<Self> {
        if !azimuth.is_finite() || !polar.is_finite() || !(0.0..=PI).contains(&polar) {
            return Err(Error::input(format!(
                "direction out of range: azimuth {azimuth}, polar {polar}"
            )));
        }
        Ok(Self {
            azimuth: azimuth.rem_euclid(TAU),
            polar,
        })
    }

    /// Unit vector in the panorama's local frame.
    pub fn to_vector(self) -> Vec3 {
        let psi = self.azimuth - PI;
        let (sp, cp) = self.polar.sin_cos();
        [sp * psi.cos(), -sp * psi.sin(), cp]
    }

    /// Direction of a (not necessarily unit) local-frame vector.
    pub fn from_vector(v: Vec3) -> Result<Self> {
        let n = norm(v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::input("cannot take the direction of a zero vector"));
        }
        let z = (v[2] / n).clamp(-1.0, 1.0);
        let psi = (-v[1]).atan2(v[0]);
        Ok(Self {
            azimuth: (psi + PI).rem_euclid(TAU),
            polar: z.acos(),
        })
    }
}

/// Maps a continuous pixel coordinate to the direction through it.
///
/// Accepts the image footprint `[-0.5, w - 0.5] × [-0.5, h - 0.5]`.
pub fn pixel_to_direction(u: f64, v: f64, width: usize, height: usize) -> Result<Direction> {
    let (w, h) = (width as f64, height as f64);
    if width == 0 || height == 0 {
        return Err(Error::input("image dimensions must be positive"));
    }
    if !(-0.5..=w - 0.5).contains(&u) || !(-0.5..=h - 0.5).contains(&v) {
        return Err(Error::input(format!(
            "pixel ({u}, {v}) outside a {width}x{height} image"
        )));
    }
    Ok(Direction {
        azimuth: (TAU * (u + 0.5) / w).rem_euclid(TAU),
        polar: PI * (v + 0.5) / h,
    })
}

/// Inverse of [`pixel_to_direction`]; `u` lands in `[-0.5, w - 0.5)`.
pub fn direction_to_pixel(d: Direction, width: usize, height: usize) -> (f64, f64) {
    let theta = d.azimuth.rem_euclid(TAU);
    (
        theta * width as f64 / TAU - 0.5,
        d.polar * height as f64 / PI - 0.5,
    )
}

/// Solid angle subtended by one pixel of row `row`.
pub fn pixel_solid_angle(row: usize, width: usize, height: usize) -> f64 {
    let top = PI * row as f64 / height as f64;
    let bottom = PI * (row as f64 + 1.0) / height as f64;
    (top.cos() - bottom.cos()) * TAU / width as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Nearest,
    #[default]
    Bilinear,
}

/// Nearest pixel index for a continuous coordinate, wrapping in `u`.
pub fn nearest_index(u: f64, v: f64, width: usize, height: usize) -> (usize, usize) {
    let x = ((u + 0.5).floor() as i64).rem_euclid(width as i64) as usize;
    let y = ((v + 0.5).floor() as i64).clamp(0, height as i64 - 1) as usize;
    (x, y)
}

/// Bilinear taps `(index, weight)` around a continuous coordinate.
fn bilinear_taps(u: f64, v: f64, width: usize, height: usize) -> [(usize, f64); 4] {
    let (u0, v0) = (u.floor(), v.floor());
    let (fu, fv) = (u - u0, v - v0);
    let w = width as i64;
    let hmax = height as i64 - 1;
    let x0 = (u0 as i64).rem_euclid(w) as usize;
    let x1 = (u0 as i64 + 1).rem_euclid(w) as usize;
    let y0 = (v0 as i64).clamp(0, hmax) as usize;
    let y1 = (v0 as i64 + 1).clamp(0, hmax) as usize;
    [
        (y0 * width + x0, (1.0 - fu) * (1.0 - fv)),
        (y0 * width + x1, fu * (1.0 - fv)),
        (y1 * width + x0, (1.0 - fu) * fv),
        (y1 * width + x1, fu * fv),
    ]
}

/// A row-major single-channel float image.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input("map dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::input(format!(
                "map data has {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn same_shape(&self, other: &ScalarMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> ScalarMap {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self.data.par_iter().map(|&x| f(x)).collect(),
        }
    }

    /// Element-wise combination; shapes must match.
    pub fn zip_map(&self, other: &ScalarMap, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<ScalarMap> {
        if !self.same_shape(other) {
            return Err(Error::input(format!(
                "map shapes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(ScalarMap {
            width: self.width,
            height: self.height,
            data: self
                .data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Finite min/max, ignoring NaN samples.
    pub fn finite_range(&self) -> Option<(f64, f64)> {
        self.data
            .iter()
            .copied()
            .filter(|x| x.is_finite())
            .fold(None, |acc, x| match acc {
                None => Some((x, x)),
                Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
            })
    }

    pub fn sample(&self, u: f64, v: f64, sampling: Sampling) -> f64 {
        match sampling {
            Sampling::Nearest => {
                let (x, y) = nearest_index(u, v, self.width, self.height);
                self.get(x, y)
            }
            Sampling::Bilinear => bilinear_taps(u, v, self.width, self.height)
                .iter()
                .map(|&(i, w)| if w == 0.0 { 0.0 } else { w * self.data[i] })
                .sum(),
        }
    }
}

/// Linear-radiance RGB equirectangular panorama.
///
/// `pixels * scale` gives radiance in W·sr⁻¹·m⁻² per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrPanorama {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
    scale: f64,
}

impl HdrPanorama {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>, scale: f64) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::input(format!(
                "equirectangular panorama must be 2:1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::input(format!(
                "panorama has {} pixels, expected {}",
                pixels.len(),
                width * height
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::input(format!("panorama scale must be positive, got {scale}")));
        }
        if let Some(i) = pixels
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite() || *c < 0.0))
        {
            return Err(Error::input(format!(
                "pixel {} ({}, {}) has a negative or non-finite channel",
                i,
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            scale,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::input(format!("panorama scale must be positive, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    /// One channel, stored values (without the physical scale).
    pub fn channel(&self, c: usize) -> ScalarMap {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self.pixels.iter().map(|p| p[c]).collect(),
        }
    }

    pub fn sample(&self, u: f64, v: f64, sampling: Sampling) -> [f64; 3] {
        match sampling {
            Sampling::Nearest => {
                let (x, y) = nearest_index(u, v, self.width, self.height);
                self.pixels[y * self.width + x]
            }
            Sampling::Bilinear => {
                let mut out = [0.0; 3];
                for (i, w) in bilinear_taps(u, v, self.width, self.height) {
                    if w != 0.0 {
                        for c in 0..3 {
                            out[c] += w * self.pixels[i][c];
                        }
                    }
                }
                out
            }
        }
    }
}

/// Virtual pinhole camera looking out from the panorama center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveSpec {
    /// Radians; positive turns right (toward increasing `u`).
    pub yaw: f64,
    /// Radians; positive looks up.
    pub pitch: f64,
    /// Horizontal field of view, radians, in `(0, π)`.
    pub hfov: f64,
    pub out_width: usize,
    pub out_height: usize,
}

impl PerspectiveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.hfov > 0.0 && self.hfov < PI) {
            return Err(Error::input(format!(
                "horizontal FOV must lie in (0, π), got {}",
                self.hfov
            )));
        }
        if self.out_width == 0 || self.out_height == 0 {
            return Err(Error::input("perspective output dimensions must be positive"));
        }
        if !self.yaw.is_finite() || !self.pitch.is_finite() {
            return Err(Error::input("yaw and pitch must be finite"));
        }
        Ok(())
    }

    /// Vertical FOV implied by the horizontal FOV and the output aspect.
    pub fn vfov(&self) -> f64 {
        2.0 * ((self.hfov / 2.0).tan() * self.out_height as f64 / self.out_width as f64).atan()
    }

    /// Ray through the center of output pixel `(i, j)`, in the panorama frame.
    pub fn ray(&self, i: usize, j: usize) -> Vec3 {
        let tan_h = (self.hfov / 2.0).tan();
        let tan_v = tan_h * self.out_height as f64 / self.out_width as f64;
        let x = (2.0 * (i as f64 + 0.5) / self.out_width as f64 - 1.0) * tan_h;
        let y = (1.0 - 2.0 * (j as f64 + 0.5) / self.out_height as f64) * tan_v;

        let (sp, cp) = self.pitch.sin_cos();
        let forward = [cp, 0.0, sp];
        let up = [-sp, 0.0, cp];
        let right = [0.0, -1.0, 0.0];
        let cam = [
            forward[0] + x * right[0] + y * up[0],
            forward[1] + x * right[1] + y * up[1],
            forward[2] + x * right[2] + y * up[2],
        ];
        // turning right is a clockwise rotation about +z
        let (sy, cy) = self.yaw.sin_cos();
        [
            cy * cam[0] + sy * cam[1],
            -sy * cam[0] + cy * cam[1],
            cam[2],
        ]
    }

    /// Continuous panorama coordinate sampled by output pixel `(i, j)`.
    pub fn source_pixel(&self, i: usize, j: usize, pano_w: usize, pano_h: usize) -> (f64, f64) {
        let d = Direction::from_vector(self.ray(i, j)).expect("pinhole rays are never zero");
        direction_to_pixel(d, pano_w, pano_h)
    }
}

fn crop_with<T: Send>(
    spec: &PerspectiveSpec,
    pano_w: usize,
    pano_h: usize,
    sample: impl Fn(f64, f64) -> T + Sync,
) -> Result<Vec<T>> {
    spec.validate()?;
    Ok((0..spec.out_width * spec.out_height)
        .into_par_iter()
        .map(|k| {
            let (u, v) = spec.source_pixel(k % spec.out_width, k / spec.out_width, pano_w, pano_h);
            sample(u, v)
        })
        .collect())
}

/// Perspective view of a scalar panorama.
pub fn crop_perspective(map: &ScalarMap, spec: &PerspectiveSpec, sampling: Sampling) -> Result<ScalarMap> {
    let data = crop_with(spec, map.width, map.height, |u, v| map.sample(u, v, sampling))?;
    ScalarMap::new(spec.out_width, spec.out_height, data)
}

/// Perspective view of an RGB panorama; values keep the stored (unscaled) units.
pub fn crop_perspective_rgb(
    pano: &HdrPanorama,
    spec: &PerspectiveSpec,
    sampling: Sampling,
) -> Result<Vec<[f64; 3]>> {
    crop_with(spec, pano.width, pano.height, |u, v| pano.sample(u, v, sampling))
}

pub(crate) fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
