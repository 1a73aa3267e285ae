//! A room ready to simulate: geometry, meshes, per-vertex flux, and the bake plan.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::heatsim::{run_sim, MaterialDb, MaterialProps, SimConfig, SimResult, TemperatureField, ThermalSurface};
use crate::layout::{mesh_surfaces, project_vertices, BakePlan, Plane, RoomLayout, SurfaceMesh, DEFAULT_GRID_SPACING};
use crate::pano::{HdrPanorama, ScalarMap, Sampling};
use crate::photometry::{FluxMap, PhotometryConfig, Reflectance};
use crate::{Error, Result};

/// Every tunable of a run in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub photometry: PhotometryConfig,
    /// Vertex spacing, m.
    pub grid_spacing: f64,
    pub sim: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            photometry: PhotometryConfig::default(),
            grid_spacing: DEFAULT_GRID_SPACING,
            sim: SimConfig::default(),
        }
    }
}

/// The documented default configuration file shipped with the crate.
pub const DEFAULTS_JSON: &str = include_str!("../data/defaults.json");

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(format!("config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.photometry.validate()?;
        if !(self.grid_spacing.is_finite() && self.grid_spacing > 0.0) {
            return Err(Error::config(format!("grid_spacing must be positive, got {}", self.grid_spacing)));
        }
        self.sim.validate()
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub layout: RoomLayout,
    pub planes: Vec<Plane>,
    pub mesh: SurfaceMesh,
    /// Material of each plane, resolved from the database.
    pub materials: Vec<MaterialProps>,
    pub db: MaterialDb,
    pub flux_map: FluxMap,
    /// Energy influx sampled at each vertex, W/m².
    pub vertex_flux: Vec<Vec<f64>>,
    pub plan: BakePlan,
}

impl Scene {
    pub fn prepare(
        layout: &RoomLayout,
        pano: &HdrPanorama,
        db: &MaterialDb,
        photometry: &PhotometryConfig,
        spacing: f64,
    ) -> Result<Self> {
        db.validate()?;
        let planes = layout.build_surfaces()?;
        let materials = planes
            .iter()
            .map(|p| db.get(&p.material).cloned())
            .collect::<Result<Vec<_>>>()?;
        let mut mesh = mesh_surfaces(&planes, spacing)?;
        let (w, h) = (pano.width(), pano.height());
        project_vertices(&mut mesh, layout, w, h)?;
        let plan = BakePlan::new(layout, &planes, &mesh, w, h)?;

        // pixels that see no surface never feed a vertex, so any valid value will do
        let refl: Vec<f64> = planes.iter().map(|p| p.reflectance).collect();
        let refl_map = plan.per_plane(&refl).map(|r| if r.is_nan() { 1.0 } else { r });
        let flux_map = photometry.flux(pano, &Reflectance::PerPixel(refl_map))?;
        let vertex_flux = mesh
            .planes
            .iter()
            .map(|pm| pm.pixels.iter().map(|&(u, v)| flux_map.sample(u, v, Sampling::Bilinear)).collect())
            .collect();
        Ok(Self {
            layout: layout.clone(),
            planes,
            mesh,
            materials,
            db: db.clone(),
            flux_map,
            vertex_flux,
            plan,
        })
    }

    /// Solver surfaces under `cfg`; `β` is `1 − reflectance` unless overridden.
    pub fn surfaces(&self, cfg: &SimConfig) -> Vec<ThermalSurface> {
        self.planes
            .iter()
            .zip(&self.mesh.planes)
            .zip(&self.materials)
            .zip(&self.vertex_flux)
            .map(|(((plane, pm), m), flux)| ThermalSurface {
                lattice: pm.lattice.clone(),
                flux: flux.clone(),
                material: m.clone(),
                beta: cfg.beta.unwrap_or(1.0 - plane.reflectance),
            })
            .collect()
    }

    pub fn simulate(&self, cfg: &SimConfig) -> Result<SimResult> {
        run_sim(&self.surfaces(cfg), cfg)
    }

    /// Panoramic map of a temperature field, K; apertures are NaN.
    pub fn bake(&self, field: &TemperatureField) -> ScalarMap {
        self.plan.bake(&field.planes)
    }

    /// Copy with every plane's material replaced by `f(material)`.
    pub fn with_materials(&self, f: impl Fn(&MaterialProps) -> Result<MaterialProps>) -> Result<Scene> {
        let materials = self.materials.iter().map(|m| {
            let m = f(m)?;
            m.validate()?;
            Ok(m)
        });
        Ok(Scene {
            materials: materials.collect::<Result<_>>()?,
            ..self.clone()
        })
    }
}
