//! Transient surface heat transport on plane lattices.
//!
//! Every lattice cell is a thin shell of the configured thickness, so each
//! cell is a boundary cell: with `A` the cell area and `dv = A · thickness`
//! the per-vertex rate is
//!
//! ```text
//! dT/dt = α ΔT + 1/(ρ c_p dv) · ( σ ε A (T_surr⁴ − T⁴)
//!                                + h_c A (T_surr − T)
//!                                + A β φ_q
//!                                + h_out A (T_out − T) )
//! ```
//!
//! integrated with explicit Euler steps. Planes do not exchange heat with
//! each other.

mod field_io;
mod materials;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::layout::Lattice;
use crate::{Error, Result};

pub use field_io::{decode_field, encode_field, read_field, write_field, FIELD_MAGIC};
pub use materials::{MaterialDb, MaterialProps};

/// Stefan-Boltzmann constant, W/(m²·K⁴).
pub const STEFAN_BOLTZMANN: f64 = 5.670_374_419e-8;
pub const KELVIN_OFFSET: f64 = 273.15;
/// Fraction of the explicit stability limit used for automatic steps.
pub const DT_SAFETY: f64 = 0.5;
/// Headroom above the hottest expected temperature when bounding the
/// radiative stiffness.
pub const RADIATIVE_HEADROOM_K: f64 = 50.0;

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + KELVIN_OFFSET
}

pub fn kelvin_to_celsius(k: f64) -> f64 {
    k - KELVIN_OFFSET
}

/// Which transfer mechanisms are active. The absorbed-light source is always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Toggles {
    pub conduction: bool,
    pub radiation: bool,
    pub convection: bool,
    /// Indoor-outdoor exchange; only acts when an outdoor temperature is set.
    pub exchange: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            conduction: true,
            radiation: true,
            convection: true,
            exchange: true,
        }
    }
}

impl Toggles {
    pub fn label(&self) -> String {
        let on: Vec<&str> = [
            (self.conduction, "conduction"),
            (self.radiation, "radiation"),
            (self.convection, "convection"),
        ]
        .iter()
        .filter(|(b, _)| *b)
        .map(|(_, n)| *n)
        .collect();
        if on.is_empty() {
            "none".into()
        } else {
            on.join("+")
        }
    }
}

/// Sign convention of the indoor-outdoor exchange term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeSign {
    /// `h_out (T_out − T)`: a warmer outdoors warms the surface.
    #[default]
    Restoring,
    /// `h_out (T − T_out)`, the literal form of the extended transport equation.
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Simulated time, s.
    pub duration: f64,
    /// Fixed step, s; `None` picks the stable step automatically.
    pub dt: Option<f64>,
    /// Shell thickness, m.
    pub thickness: f64,
    /// Indoor ambient (and initial) temperature, K.
    pub t_ambient: f64,
    /// Surroundings for radiation and convection, K; defaults to ambient.
    pub t_surr: Option<f64>,
    /// Outdoor temperature, K; `None` disables exchange.
    pub t_out: Option<f64>,
    /// Convection coefficient, W/(m²·K).
    pub h_c: f64,
    /// Indoor-outdoor exchange coefficient, W/(m²·K).
    pub h_out: f64,
    /// Absorbed fraction of incident flux; `None` uses `1 − reflectance` per surface.
    pub beta: Option<f64>,
    pub toggles: Toggles,
    pub exchange_sign: ExchangeSign,
    /// Snapshot interval, s.
    pub record_every: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 600.0,
            dt: None,
            thickness: 0.001,
            t_ambient: celsius_to_kelvin(21.11),
            t_surr: None,
            t_out: None,
            h_c: 10.0,
            h_out: 1.0,
            beta: None,
            toggles: Toggles::default(),
            exchange_sign: ExchangeSign::Restoring,
            record_every: 30.0,
        }
    }
}

impl SimConfig {
    pub fn t_surr(&self) -> f64 {
        self.t_surr.unwrap_or(self.t_ambient)
    }

    /// Outdoor temperature when exchange is both enabled and configured.
    pub fn active_t_out(&self) -> Option<f64> {
        self.t_out.filter(|_| self.toggles.exchange)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("duration", self.duration),
            ("thickness", self.thickness),
            ("t_ambient", self.t_ambient),
            ("t_surr", self.t_surr()),
            ("record_every", self.record_every),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config(format!("{name} must be positive, got {v}")));
        }
        if let Some(t) = self.t_out {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::config(format!("t_out must be positive kelvin, got {t}")));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::config(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.h_c.is_finite() && self.h_c >= 0.0) || !(self.h_out.is_finite() && self.h_out >= 0.0) {
            return Err(Error::config("heat transfer coefficients must be non-negative"));
        }
        if let Some(b) = self.beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::config(format!("beta must lie in [0, 1], got {b}")));
            }
        }
        Ok(())
    }
}

/// Per-plane temperatures at one instant, K.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    pub time: f64,
    pub planes: Vec<Vec<f64>>,
}

impl TemperatureField {
    pub fn uniform(lattices: &[Lattice], t: f64) -> Self {
        Self {
            time: 0.0,
            planes: lattices.iter().map(|l| vec![t; l.len()]).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.planes.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One plane as the solver sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSurface {
    pub lattice: Lattice,
    /// Incident energy influx per vertex, W/m².
    pub flux: Vec<f64>,
    pub material: MaterialProps,
    /// Absorbed fraction of `flux`.
    pub beta: f64,
}

/// Five-point Laplacian with zero-flux edges: a missing or inactive
/// neighbour contributes the center value, so no heat crosses the boundary.
pub fn laplacian(values: &[f64], lattice: &Lattice) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    laplacian_into(values, lattice, &mut out);
    out
}

fn laplacian_into(values: &[f64], lattice: &Lattice, out: &mut [f64]) {
    let (nu, nv) = (lattice.nu, lattice.nv);
    let inv_h2 = 1.0 / (lattice.spacing * lattice.spacing);
    let act = &lattice.active;
    for j in 0..nv {
        for i in 0..nu {
            let k = j * nu + i;
            if !act[k] {
                out[k] = 0.0;
                continue;
            }
            let c = values[k];
            let nb = |ok: bool, idx: usize| if ok && act[idx] { values[idx] } else { c };
            let w = nb(i > 0, k.wrapping_sub(1));
            let e = nb(i + 1 < nu, k + 1);
            let s = nb(j > 0, k.wrapping_sub(nu));
            let n = nb(j + 1 < nv, k + nu);
            out[k] = (w + e + s + n - 4.0 * c) * inv_h2;
        }
    }
}

/// Largest explicit step considered safe for one surface, s.
///
/// `t_max` is the hottest temperature expected during the run; the
/// radiative term is linearised there.
pub fn stable_dt(m: &MaterialProps, spacing: f64, cfg: &SimConfig, t_max: f64) -> f64 {
    let conduction_limit = spacing * spacing / (4.0 * m.diffusivity());
    let mut stiffness = 0.0;
    if cfg.toggles.convection {
        stiffness += cfg.h_c;
    }
    if cfg.active_t_out().is_some() {
        stiffness += cfg.h_out;
    }
    if cfg.toggles.radiation {
        stiffness += 4.0 * STEFAN_BOLTZMANN * m.emissivity * t_max.powi(3);
    }
    let surface_limit = if stiffness > 0.0 {
        m.heat_capacity() * cfg.thickness / stiffness
    } else {
        f64::INFINITY
    };
    DT_SAFETY * conduction_limit.min(surface_limit)
}

fn radiative_reference(cfg: &SimConfig, initial: &TemperatureField) -> f64 {
    let hottest = initial.max().max(cfg.t_ambient).max(cfg.t_surr());
    cfg.t_out.map_or(hottest, |t| hottest.max(t)) + RADIATIVE_HEADROOM_K
}

/// Smallest [`stable_dt`] over all surfaces.
pub fn stable_dt_for(surfaces: &[ThermalSurface], cfg: &SimConfig, initial: &TemperatureField) -> f64 {
    let t_max = radiative_reference(cfg, initial);
    surfaces
        .iter()
        .map(|s| stable_dt(&s.material, s.lattice.spacing, cfg, t_max))
        .fold(f64::INFINITY, f64::min)
}

fn step_surface(surface: &ThermalSurface, temps: &[f64], cfg: &SimConfig, dt: f64, lap: &mut [f64]) -> Vec<f64> {
    let m = &surface.material;
    let alpha = m.diffusivity();
    let capacity = m.heat_capacity() * cfg.thickness;
    let t_surr = cfg.t_surr();
    let t_surr4 = t_surr.powi(4);
    let sigma_eps = STEFAN_BOLTZMANN * m.emissivity;
    let toggles = cfg.toggles;
    let t_out = cfg.active_t_out();
    if toggles.conduction {
        laplacian_into(temps, &surface.lattice, lap);
    }
    temps
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            if !surface.lattice.active[k] {
                return t;
            }
            // surface terms per unit area; A / dv reduces to 1 / thickness
            let mut q = surface.beta * surface.flux[k];
            if toggles.radiation {
                q += sigma_eps * (t_surr4 - t.powi(4));
            }
            if toggles.convection {
                q += cfg.h_c * (t_surr - t);
            }
            if let Some(t_out) = t_out {
                q += match cfg.exchange_sign {
                    ExchangeSign::Restoring => cfg.h_out * (t_out - t),
                    ExchangeSign::Reversed => cfg.h_out * (t - t_out),
                };
            }
            let mut rate = q / capacity;
            if toggles.conduction {
                rate += alpha * lap[k];
            }
            t + dt * rate
        })
        .collect()
}

/// One explicit Euler step of size `dt` for all surfaces.
///
/// Fails when `dt` exceeds the stability bound or a temperature leaves the
/// positive finite range; `step` is reported in the error.
pub fn step_heat(
    surfaces: &[ThermalSurface],
    field: &TemperatureField,
    cfg: &SimConfig,
    dt: f64,
    step: usize,
) -> Result<TemperatureField> {
    let bound = stable_dt_for(surfaces, cfg, field);
    if dt > bound {
        return Err(Error::Stability { dt, bound });
    }
    advance(surfaces, field, cfg, dt, step)
}

fn advance(
    surfaces: &[ThermalSurface],
    field: &TemperatureField,
    cfg: &SimConfig,
    dt: f64,
    step: usize,
) -> Result<TemperatureField> {
    let planes: Vec<Vec<f64>> = surfaces
        .par_iter()
        .zip(field.planes.par_iter())
        .map(|(s, t)| {
            let mut lap = vec![0.0; t.len()];
            step_surface(s, t, cfg, dt, &mut lap)
        })
        .collect();
    for (p, vals) in planes.iter().enumerate() {
        if let Some(k) = vals.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Numeric {
                step,
                detail: format!("plane {p} vertex {k} reached {}", vals[k]),
            });
        }
    }
    Ok(TemperatureField {
        time: field.time + dt,
        planes,
    })
}

fn check_surfaces(surfaces: &[ThermalSurface]) -> Result<()> {
    for (p, s) in surfaces.iter().enumerate() {
        s.material.validate()?;
        let n = s.lattice.len();
        if s.lattice.nu < 2 || s.lattice.nv < 2 || s.lattice.active.len() != n || s.flux.len() != n {
            return Err(Error::input(format!("surface {p}: lattice, mask, and flux sizes disagree")));
        }
        if !(s.lattice.spacing.is_finite() && s.lattice.spacing > 0.0) {
            return Err(Error::input(format!("surface {p}: non-positive grid spacing")));
        }
        if s.flux.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::input(format!("surface {p}: flux must be finite and non-negative")));
        }
        if !(0.0..=1.0).contains(&s.beta) {
            return Err(Error::input(format!("surface {p}: beta must lie in [0, 1]")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Fields at `0, record_every, 2·record_every, …` up to `duration`.
    pub snapshots: Vec<TemperatureField>,
    pub final_field: TemperatureField,
    /// Largest step actually taken, s.
    pub dt: f64,
    /// Stability bound the step was checked against, s.
    pub dt_bound: f64,
    pub steps: usize,
}

/// Snapshot instants: every multiple of `record_every` not past `duration`.
pub fn record_times(cfg: &SimConfig) -> Vec<f64> {
    let tol = 1e-9 * cfg.duration.max(1.0);
    (0..)
        .map(|k| k as f64 * cfg.record_every)
        .take_while(|&t| t <= cfg.duration + tol)
        .collect()
}

/// Advances from a uniform ambient field to `cfg.duration`.
///
/// Sub-steps are sized so every snapshot instant is hit exactly; the step
/// never exceeds `cfg.dt` (when set) or the stability bound.
pub fn run_sim(surfaces: &[ThermalSurface], cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    check_surfaces(surfaces)?;
    let lattices: Vec<Lattice> = surfaces.iter().map(|s| s.lattice.clone()).collect();
    let mut field = TemperatureField::uniform(&lattices, cfg.t_ambient);
    let bound = stable_dt_for(surfaces, cfg, &field);
    let dt_max = match cfg.dt {
        Some(dt) if dt > bound => return Err(Error::Stability { dt, bound }),
        Some(dt) => dt,
        None => bound,
    };

    let records = record_times(cfg);
    let mut targets = records.clone();
    if targets.last().is_some_and(|&t| t < cfg.duration - 1e-9 * cfg.duration) {
        targets.push(cfg.duration);
    }
    let mut snapshots = vec![field.clone()];
    let mut steps = 0usize;
    let mut dt_used: f64 = 0.0;
    for &target in targets.iter().skip(1) {
        let span = target - field.time;
        let n = ((span / dt_max) - 1e-9).ceil().max(1.0) as usize;
        let dt = span / n as f64;
        dt_used = dt_used.max(dt);
        let start = field.time;
        for s in 0..n {
            field = advance(surfaces, &field, cfg, dt, steps)?;
            steps += 1;
            field.time = start + (s + 1) as f64 * dt;
        }
        field.time = target;
        if records.contains(&target) {
            snapshots.push(field.clone());
        }
    }
    Ok(SimResult {
        snapshots,
        final_field: field,
        dt: dt_used,
        dt_bound: bound,
        steps,
    })
}
