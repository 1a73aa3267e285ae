//! Parameter sweeps, toggle matrices, error maps, and comparison against thermal frames.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::heatsim::{kelvin_to_celsius, celsius_to_kelvin, run_sim, MaterialDb, SimConfig, SimResult, Toggles};
use crate::layout::RoomLayout;
use crate::pano::{crop_perspective, HdrPanorama, PerspectiveSpec, Sampling, ScalarMap};
use crate::photometry::{patch_mean, PatchSpec};
use crate::scene::{RunConfig, Scene};
use crate::thermography::ThermalFrame;
use crate::{Error, Result};

/// Default display half-range for layout perturbation error maps, °C.
pub const PERTURBATION_BOUND_C: f64 = 2.0;
/// Default display half-range for outdoor-temperature error maps, °C.
pub const OUTDOOR_BOUND_C: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Material name from the database, applied to every surface.
    Material,
    /// kg/m³
    Density,
    /// W/(m·K)
    Conductivity,
    /// J/(kg·K)
    SpecificHeat,
    /// m
    Thickness,
    /// °C, or `"none"` for no exchange.
    OutdoorTemp,
    /// Three-letter masks over conduction, radiation, convection, e.g. `"101"`.
    ToggleMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Vec<SweepValue>,
    /// Value the differences are measured against; must be one of `values`.
    #[serde(default)]
    pub baseline: Option<SweepValue>,
    /// Regions averaged per run; empty means the whole panorama.
    #[serde(default)]
    pub patches: Vec<PatchSpec>,
}

/// `"crv"` bit string for a toggle set.
pub fn toggle_mask(t: &Toggles) -> String {
    [t.conduction, t.radiation, t.convection]
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect()
}

/// All eight conduction/radiation/convection combinations, all-on first.
pub fn toggle_masks() -> Vec<String> {
    (0..8u8).rev().map(|m| format!("{:03b}", m)).collect()
}

fn parse_mask(s: &str, base: Toggles) -> Result<Toggles> {
    let bits: Vec<bool> = s
        .chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(Error::input(format!("toggle mask `{s}` must be three 0/1 characters"))),
        })
        .collect::<Result<_>>()?;
    if bits.len() != 3 {
        return Err(Error::input(format!("toggle mask `{s}` must be three 0/1 characters")));
    }
    Ok(Toggles {
        conduction: bits[0],
        radiation: bits[1],
        convection: bits[2],
        ..base
    })
}

impl SweepSpec {
    /// Values and baseline with toggle-matrix defaults filled in.
    pub fn resolved(&self) -> Result<(Vec<SweepValue>, SweepValue)> {
        let mut values = self.values.clone();
        let mut baseline = self.baseline.clone();
        if self.parameter == SweepParameter::ToggleMatrix {
            if values.is_empty() {
                values = toggle_masks().into_iter().map(SweepValue::Text).collect();
            }
            baseline.get_or_insert(SweepValue::Text("111".into()));
        }
        if values.is_empty() {
            return Err(Error::input("sweep needs at least one value"));
        }
        let baseline = baseline.ok_or_else(|| Error::input("sweep needs a baseline value"))?;
        if !values.contains(&baseline) {
            return Err(Error::input(format!("baseline {baseline} is not among the sweep values")));
        }
        Ok((values, baseline))
    }
}

fn number(value: &SweepValue) -> Result<f64> {
    match value {
        SweepValue::Number(x) => Ok(*x),
        SweepValue::Text(s) => Err(Error::input(format!("expected a number, got `{s}`"))),
    }
}

/// Runs `scene` with one sweep parameter set to `value`.
pub fn simulate_variant(
    scene: &Scene,
    base: &SimConfig,
    parameter: SweepParameter,
    value: &SweepValue,
) -> Result<SimResult> {
    let mut cfg = base.clone();
    let mut surfaces = scene.surfaces(&cfg);
    match parameter {
        SweepParameter::Material => {
            let SweepValue::Text(name) = value else {
                return Err(Error::input(format!("material sweep expects names, got {value}")));
            };
            let m = scene.db.get(name)?;
            surfaces.iter_mut().for_each(|s| s.material = m.clone());
        }
        SweepParameter::Density => {
            let x = number(value)?;
            surfaces.iter_mut().for_each(|s| s.material.rho = x);
        }
        SweepParameter::Conductivity => {
            let x = number(value)?;
            surfaces.iter_mut().for_each(|s| s.material.k = x);
        }
        SweepParameter::SpecificHeat => {
            let x = number(value)?;
            surfaces.iter_mut().for_each(|s| s.material.cp = x);
        }
        SweepParameter::Thickness => cfg.thickness = number(value)?,
        SweepParameter::OutdoorTemp => {
            cfg.t_out = match value {
                SweepValue::Text(s) if s == "none" => None,
                v => Some(celsius_to_kelvin(number(v)?)),
            };
            if cfg.t_out.is_some() {
                cfg.toggles.exchange = true;
            }
        }
        SweepParameter::ToggleMatrix => {
            let SweepValue::Text(mask) = value else {
                return Err(Error::input(format!("toggle sweep expects masks, got {value}")));
            };
            cfg.toggles = parse_mask(mask, cfg.toggles)?;
        }
    }
    run_sim(&surfaces, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: SweepValue,
    /// Per-patch mean of the final heat map, °C.
    pub means: Vec<f64>,
    /// `mean − baseline mean`, °C.
    pub deltas: Vec<f64>,
    /// `100 · delta / baseline mean`, both in °C.
    pub pct_errors: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub baseline: SweepValue,
    pub patch_ids: Vec<String>,
    pub rows: Vec<SweepRow>,
    /// Final panoramic heat map per value, K.
    pub maps: Vec<ScalarMap>,
}

/// Patch covering every pixel of a `w × h` map.
pub fn whole_map_patch(w: usize, h: usize) -> PatchSpec {
    PatchSpec {
        u: 0.5 * w as f64,
        v: 0.5 * h as f64,
        radius: (w as f64).hypot(h as f64),
    }
}

fn patch_means_c(map: &ScalarMap, patches: &[PatchSpec]) -> Result<Vec<f64>> {
    patches
        .iter()
        .map(|p| patch_mean(map, p).map(|s| kelvin_to_celsius(s.mean)))
        .collect()
}

/// One simulation per value, otherwise identical. Values run concurrently;
/// rows follow the order of `values`.
pub fn run_sweep(scene: &Scene, base: &SimConfig, spec: &SweepSpec) -> Result<SweepResult> {
    let (values, baseline) = spec.resolved()?;
    let (w, h) = (scene.plan.width(), scene.plan.height());
    let (patches, patch_ids) = if spec.patches.is_empty() {
        (vec![whole_map_patch(w, h)], vec!["all".to_string()])
    } else {
        (spec.patches.clone(), (0..spec.patches.len()).map(|i| i.to_string()).collect())
    };
    let runs: Vec<Result<(ScalarMap, Vec<f64>, f64, usize)>> = values
        .par_iter()
        .map(|v| {
            let wrap = |e: Error| Error::Sweep {
                value: v.to_string(),
                source: Box::new(e),
            };
            let r = simulate_variant(scene, base, spec.parameter, v).map_err(wrap)?;
            let map = scene.bake(&r.final_field);
            let means = patch_means_c(&map, &patches).map_err(wrap)?;
            Ok((map, means, r.dt, r.steps))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let b = values.iter().position(|v| *v == baseline).expect("baseline checked");
    let base_means = runs[b].1.clone();
    let mut rows = Vec::with_capacity(runs.len());
    let mut maps = Vec::with_capacity(runs.len());
    for (v, (map, means, dt, steps)) in values.into_iter().zip(runs) {
        let deltas: Vec<f64> = means.iter().zip(&base_means).map(|(m, b)| m - b).collect();
        let pct_errors = deltas.iter().zip(&base_means).map(|(d, b)| 100.0 * d / b).collect();
        rows.push(SweepRow {
            value: v,
            means,
            deltas,
            pct_errors,
            dt,
            steps,
        });
        maps.push(map);
    }
    Ok(SweepResult {
        parameter: spec.parameter,
        baseline,
        patch_ids,
        rows,
        maps,
    })
}

impl SweepResult {
    /// Long-format table: `value,patch_id,mean_c,delta_c,pct_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,patch_id,mean_c,delta_c,pct_error\n");
        for row in &self.rows {
            for (i, id) in self.patch_ids.iter().enumerate() {
                out += &format!(
                    "{},{},{:.6},{:.6},{:.6}\n",
                    row.value, id, row.means[i], row.deltas[i], row.pct_errors[i]
                );
            }
        }
        out
    }

    pub fn baseline_map(&self) -> &ScalarMap {
        let b = self.rows.iter().position(|r| r.value == self.baseline).expect("baseline row exists");
        &self.maps[b]
    }

    /// Error map of every run against the baseline run.
    pub fn error_maps(&self, bound: f64) -> Result<Vec<ErrorMap>> {
        let base = self.baseline_map();
        self.maps.iter().map(|m| ErrorMap::between(m, base, bound)).collect()
    }
}

/// Signed per-pixel difference `run − baseline`, K (equal to °C differences).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub diff: ScalarMap,
    /// Display range.
    pub lo: f64,
    pub hi: f64,
}

impl ErrorMap {
    /// Difference with a symmetric display range of `±bound`.
    pub fn between(run: &ScalarMap, baseline: &ScalarMap, bound: f64) -> Result<Self> {
        if !run.same_shape(baseline) {
            return Err(Error::input("compared maps differ in size"));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::input(format!("error map bound must be positive, got {bound}")));
        }
        Ok(Self {
            diff: run.zip_map(baseline, |a, b| a - b)?,
            lo: -bound,
            hi: bound,
        })
    }

    /// Largest finite |Δ|; 0 for an all-NaN map.
    pub fn max_abs(&self) -> f64 {
        self.diff
            .data()
            .iter()
            .filter(|x| x.is_finite())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct ToggleRun {
    pub toggles: Toggles,
    /// Final heat map, K.
    pub map: ScalarMap,
    pub error: ErrorMap,
}

/// The eight conduction/radiation/convection combinations, all-on first,
/// each compared against the all-on run.
pub fn toggle_matrix(scene: &Scene, base: &SimConfig) -> Result<Vec<ToggleRun>> {
    let spec = SweepSpec {
        parameter: SweepParameter::ToggleMatrix,
        values: Vec::new(),
        baseline: None,
        patches: Vec::new(),
    };
    let sweep = run_sweep(scene, base, &spec)?;
    let diffs: Vec<ErrorMap> = sweep.error_maps(1.0)?;
    let bound = diffs.iter().map(ErrorMap::max_abs).fold(0.0, f64::max);
    let bound = if bound > 0.0 { bound } else { 1.0 };
    sweep
        .rows
        .iter()
        .zip(sweep.maps)
        .zip(diffs)
        .map(|((row, map), e)| {
            let SweepValue::Text(mask) = &row.value else { unreachable!("toggle values are masks") };
            Ok(ToggleRun {
                toggles: parse_mask(mask, base.toggles)?,
                map,
                error: ErrorMap { lo: -bound, hi: bound, ..e },
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchComparison {
    pub patch: usize,
    pub sim_c: f64,
    pub thermal_c: f64,
    /// `sim − thermal`, °C.
    pub delta_c: f64,
    pub sim_count: usize,
    pub thermal_count: usize,
}

/// Crops the simulated heat map to the thermal camera's view and compares
/// patch means. `spec` must produce an image the size of the frame.
pub fn compare_to_thermal(
    sim: &ScalarMap,
    spec: &PerspectiveSpec,
    thermal: &ThermalFrame,
    patches: &[PatchSpec],
) -> Result<Vec<PatchComparison>> {
    if spec.out_width != thermal.width() || spec.out_height != thermal.height() {
        return Err(Error::input(format!(
            "crop is {}x{} but the thermal frame is {}x{}",
            spec.out_width,
            spec.out_height,
            thermal.width(),
            thermal.height()
        )));
    }
    let crop = crop_perspective(sim, spec, Sampling::Nearest)?;
    patches
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = patch_mean(&crop, p)?;
            let t = patch_mean(&thermal.temps, p)?;
            Ok(PatchComparison {
                patch: i,
                sim_c: kelvin_to_celsius(s.mean),
                thermal_c: kelvin_to_celsius(t.mean),
                delta_c: s.mean - t.mean,
                sim_count: s.count,
                thermal_count: t.count,
            })
        })
        .collect()
}

/// Full pipeline from scratch: prepare, simulate, and bake the final field.
pub fn heat_map(layout: &RoomLayout, pano: &HdrPanorama, db: &MaterialDb, cfg: &RunConfig) -> Result<ScalarMap> {
    cfg.validate()?;
    let scene = Scene::prepare(layout, pano, db, &cfg.photometry, cfg.grid_spacing)?;
    let r = scene.simulate(&cfg.sim)?;
    Ok(scene.bake(&r.final_field))
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    pub map: ScalarMap,
    pub error: ErrorMap,
}

/// Heat maps of each perturbed layout against the base layout, every one
/// recomputed from the panorama up.
pub fn layout_perturbation(
    base: &RoomLayout,
    perturbed: &[RoomLayout],
    pano: &HdrPanorama,
    db: &MaterialDb,
    cfg: &RunConfig,
    bound: f64,
) -> Result<(ScalarMap, Vec<Perturbation>)> {
    let base_map = heat_map(base, pano, db, cfg)?;
    let runs = perturbed
        .iter()
        .map(|l| {
            let map = heat_map(l, pano, db, cfg)?;
            let error = ErrorMap::between(&map, &base_map, bound)?;
            Ok(Perturbation { map, error })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((base_map, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::Fixture;
    use crate::thermography::ThermalFrame;

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec {
            parameter: SweepParameter::Density,
            values: vec![SweepValue::Number(1200.0), SweepValue::Number(1300.0)],
            baseline: Some(SweepValue::Number(1400.0)),
            patches: Vec::new(),
        };
        assert!(spec.resolved().is_err());
        spec.baseline = Some(SweepValue::Number(1300.0));
        assert!(spec.resolved().is_ok());
        spec.values.clear();
        assert!(spec.resolved().is_err());
        let tm = SweepSpec {
            parameter: SweepParameter::ToggleMatrix,
            values: Vec::new(),
            baseline: None,
            patches: Vec::new(),
        };
        let (v, b) = tm.resolved().unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(b, SweepValue::Text("111".into()));
        assert_eq!(v[0], b);
    }

    #[test]
    fn spec_json_shape() {
        let spec: SweepSpec = serde_json::from_str(
            r#"{"parameter": "outdoor_temp", "values": ["none", 41.85, 11.85], "baseline": "none",
                "patches": [{"u": 10, "v": 20, "radius": 3}]}"#,
        )
        .unwrap();
        assert_eq!(spec.values[1], SweepValue::Number(41.85));
        assert_eq!(spec.values[0].to_string(), "none");
    }

    #[test]
    fn masks_round_trip() {
        for m in toggle_masks() {
            assert_eq!(toggle_mask(&parse_mask(&m, Toggles::default()).unwrap()), m);
        }
        assert!(parse_mask("12", Toggles::default()).is_err());
        assert!(parse_mask("1x1", Toggles::default()).is_err());
    }

    #[test]
    fn comparison_offsets() {
        let sim = ScalarMap::filled(64, 32, 300.0);
        let spec = PerspectiveSpec {
            yaw: 0.0,
            pitch: 0.0,
            hfov: 1.0,
            out_width: 16,
            out_height: 12,
        };
        let patches = [PatchSpec { u: 8.0, v: 6.0, radius: 3.0 }];
        let same = ThermalFrame::new(ScalarMap::filled(16, 12, 300.0)).unwrap();
        assert_eq!(compare_to_thermal(&sim, &spec, &same, &patches).unwrap()[0].delta_c, 0.0);
        let cooler = ThermalFrame::new(ScalarMap::filled(16, 12, 298.0)).unwrap();
        let c = compare_to_thermal(&sim, &spec, &cooler, &patches).unwrap();
        assert!((c[0].delta_c - 2.0).abs() < 1e-12);
        let wrong = ThermalFrame::new(ScalarMap::filled(8, 8, 298.0)).unwrap();
        assert!(compare_to_thermal(&sim, &spec, &wrong, &patches).is_err());
        let outside = [PatchSpec { u: 100.0, v: 100.0, radius: 2.0 }];
        assert!(compare_to_thermal(&sim, &spec, &same, &outside).is_err());
    }

    #[test]
    fn baseline_row_is_exactly_zero() {
        let f = Fixture::desk_room();
        let pano = f.render(128).unwrap();
        let scene = Scene::prepare(&f.layout, &pano, &MaterialDb::builtin(), &Default::default(), 0.25).unwrap();
        let spec = SweepSpec {
            parameter: SweepParameter::Conductivity,
            values: [0.01, 0.5, 0.7].map(SweepValue::Number).to_vec(),
            baseline: Some(SweepValue::Number(0.5)),
            patches: vec![PatchSpec { u: 64.0, v: 50.0, radius: 4.0 }],
        };
        let cfg = SimConfig { duration: 120.0, ..SimConfig::default() };
        let r = run_sweep(&scene, &cfg, &spec).unwrap();
        assert_eq!(r.rows[1].deltas, vec![0.0]);
        assert_eq!(r.rows[1].pct_errors, vec![0.0]);
        assert!(r.to_csv().starts_with("value,patch_id,mean_c,delta_c,pct_error\n0.01,0,"));
        let bad = SweepSpec {
            values: vec![SweepValue::Number(0.5), SweepValue::Number(-1.0)],
            ..spec
        };
        match run_sweep(&scene, &cfg, &bad) {
            Err(Error::Sweep { value, .. }) => assert_eq!(value, "-1"),
            other => panic!("expected a sweep error, got {other:?}"),
        }
    }
}
