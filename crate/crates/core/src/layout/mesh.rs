//! Vertex lattices over room planes.
//!
//! Each plane gets `n = ceil(extent / h) + 1` vertices per axis at spacing `h`,
//! with the last spacing shortened to land on the far edge. A vertex owns the
//! dual cell bounded by the midpoints to its neighbours, clipped to the plane.

use rayon::prelude::*;

use super::{rect_polygon_overlap, Plane};
use crate::pano::Vec3;
use crate::{Error, Result};

pub const DEFAULT_GRID_SPACING: f64 = 0.05;

/// Structured grid the heat solver runs on. Index is `j * nu + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub nu: usize,
    pub nv: usize,
    pub spacing: f64,
    /// Vertices with a non-empty cell; inactive ones are outside a polygonal outline.
    pub active: Vec<bool>,
}

impl Lattice {
    pub fn full(nu: usize, nv: usize, spacing: f64) -> Self {
        Self {
            nu,
            nv,
            spacing,
            active: vec![true; nu * nv],
        }
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nu + i
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMesh {
    pub lattice: Lattice,
    pub coords_u: Vec<f64>,
    pub coords_v: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub areas: Vec<f64>,
    /// Continuous panorama pixel per vertex; empty until projected.
    pub pixels: Vec<(f64, f64)>,
}

impl PlaneMesh {
    pub fn area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Index of the lattice coordinate nearest to `x` in sorted `coords`.
    fn nearest(coords: &[f64], x: f64) -> usize {
        let k = coords.partition_point(|&c| c < x);
        if k == 0 {
            0
        } else if k == coords.len() {
            coords.len() - 1
        } else if x - coords[k - 1] <= coords[k] - x {
            k - 1
        } else {
            k
        }
    }

    /// Nearest active vertex to plane coordinates `(a, b)`.
    pub fn nearest_vertex(&self, a: f64, b: f64) -> usize {
        let idx = self
            .lattice
            .index(Self::nearest(&self.coords_u, a), Self::nearest(&self.coords_v, b));
        if self.lattice.active[idx] {
            return idx;
        }
        // only reachable next to a polygon outline
        let mut best = (f64::INFINITY, idx);
        for j in 0..self.lattice.nv {
            for i in 0..self.lattice.nu {
                let k = self.lattice.index(i, j);
                if self.lattice.active[k] {
                    let d = (self.coords_u[i] - a).powi(2) + (self.coords_v[j] - b).powi(2);
                    if d < best.0 {
                        best = (d, k);
                    }
                }
            }
        }
        best.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub spacing: f64,
    pub planes: Vec<PlaneMesh>,
}

impl SurfaceMesh {
    pub fn vertex_count(&self) -> usize {
        self.planes.iter().map(|p| p.lattice.len()).sum()
    }

    pub fn lattices(&self) -> Vec<Lattice> {
        self.planes.iter().map(|p| p.lattice.clone()).collect()
    }
}

fn lattice_coords(extent: f64, h: f64) -> Vec<f64> {
    // tolerate extents that are a whole number of spacings up to rounding
    let segments = ((extent / h) - 1e-9).ceil().max(1.0) as usize;
    let mut coords: Vec<f64> = (0..segments).map(|i| i as f64 * h).collect();
    coords.push(extent);
    coords
}

fn dual_bounds(coords: &[f64]) -> Vec<(f64, f64)> {
    let n = coords.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { coords[0] } else { 0.5 * (coords[i - 1] + coords[i]) };
            let hi = if i == n - 1 { coords[n - 1] } else { 0.5 * (coords[i] + coords[i + 1]) };
            (lo, hi)
        })
        .collect()
}

fn mesh_plane(plane: &Plane, h: f64) -> PlaneMesh {
    let coords_u = lattice_coords(plane.extent_u, h);
    let coords_v = lattice_coords(plane.extent_v, h);
    let (bu, bv) = (dual_bounds(&coords_u), dual_bounds(&coords_v));
    let (nu, nv) = (coords_u.len(), coords_v.len());
    let mut positions = Vec::with_capacity(nu * nv);
    let mut areas = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            positions.push(plane.point(coords_u[i], coords_v[j]));
            let (u0, u1) = bu[i];
            let (v0, v1) = bv[j];
            areas.push(match &plane.outline {
                None => (u1 - u0) * (v1 - v0),
                Some(poly) => rect_polygon_overlap(poly, u0, u1, v0, v1),
            });
        }
    }
    let cell = h * h;
    let active = areas.iter().map(|&a| a > 1e-12 * cell).collect();
    PlaneMesh {
        lattice: Lattice {
            nu,
            nv,
            spacing: h,
            active,
        },
        coords_u,
        coords_v,
        positions,
        areas,
        pixels: Vec::new(),
    }
}

/// Subdivides every plane into a vertex lattice with spacing `h` meters.
pub fn mesh_surfaces(planes: &[Plane], h: f64) -> Result<SurfaceMesh> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::input(format!("grid spacing must be positive, got {h}")));
    }
    if let Some(p) = planes.iter().find(|p| h > p.extent_u.min(p.extent_v) + 1e-12) {
        return Err(Error::input(format!(
            "grid spacing {h} m exceeds the smaller extent of `{}` ({:.4} x {:.4} m)",
            p.id, p.extent_u, p.extent_v
        )));
    }
    Ok(SurfaceMesh {
        spacing: h,
        planes: planes.par_iter().map(|p| mesh_plane(p, h)).collect(),
    })
}
