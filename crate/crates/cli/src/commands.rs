use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use panoheat::analysis::{self, ErrorMap, SweepParameter, SweepSpec, OUTDOOR_BOUND_C};
use panoheat::heatsim::{kelvin_to_celsius, read_field, write_field, MaterialDb};
use panoheat::layout::{mesh_surfaces, BakePlan, RoomLayout};
use panoheat::pano::io::{read_map, read_panorama, write_false_color_png, write_map};
use panoheat::pano::{crop_perspective, PerspectiveSpec, Sampling, ScalarMap};
use panoheat::photometry::{
    flux_from_illuminance, illuminance_from_luminance, luminance_from_hdr, patch_mean, PatchSpec, Reflectance,
};
use panoheat::thermography::{FlirCalibration, ThermalFrame};
use panoheat::{Error, Result, RunConfig, Scene};

use crate::manifest::{io_err, write_atomic, RunManifest};
use crate::{PhotoArgs, ReflectanceArgs, SceneArgs, ViewArgs};

#[derive(Clone, Copy, ValueEnum)]
pub enum SamplingArg {
    Nearest,
    Bilinear,
}

impl From<SamplingArg> for Sampling {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Nearest => Sampling::Nearest,
            SamplingArg::Bilinear => Sampling::Bilinear,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn load_db(path: Option<&Path>) -> Result<MaterialDb> {
    match path {
        Some(p) => MaterialDb::load(p),
        None => Ok(MaterialDb::builtin()),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn manifest_beside(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    s.into()
}

/// Writes the map and, when asked, a PNG over its finite range.
fn save_map(m: &mut RunManifest, map: &ScalarMap, out: &Path, png: Option<&Path>) -> Result<()> {
    write_map(out, map)?;
    m.output(out)?;
    if let Some(png) = png {
        let (lo, hi) = map.finite_range().unwrap_or((0.0, 1.0));
        write_false_color_png(png, map, lo, hi)?;
    }
    Ok(())
}

fn save_error(m: &mut RunManifest, e: &ErrorMap, stem: &Path) -> Result<()> {
    let raw = stem.with_extension("bin");
    write_map(&raw, &e.diff)?;
    m.output(&raw)?;
    write_false_color_png(&stem.with_extension("png"), &e.diff, e.lo, e.hi)
}

fn save_text(m: &mut RunManifest, path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    m.output(path)
}

pub fn light_map(a: &PhotoArgs) -> Result<()> {
    let mut m = RunManifest::start("light-map");
    let cfg = load_config(a.config.as_deref())?;
    cfg.photometry.validate()?;
    m.config(&cfg.photometry);
    let pano = read_panorama(&a.pano)?;
    m.input(&a.pano)?;
    let l = luminance_from_hdr(&pano, cfg.photometry.efficacy, cfg.photometry.weights)?;
    save_map(&mut m, &l, &a.out, a.png.as_deref())?;
    m.finish(&manifest_beside(&a.out))
}

fn reflectance(r: &ReflectanceArgs, cfg: &RunConfig, w: usize, h: usize, m: &mut RunManifest) -> Result<Reflectance> {
    match (r.reflectance, &r.layout) {
        (Some(x), _) => Ok(Reflectance::Uniform(x)),
        (None, Some(path)) => {
            let layout = RoomLayout::load(path)?;
            m.input(path)?;
            let planes = layout.build_surfaces()?;
            let mesh = mesh_surfaces(&planes, cfg.grid_spacing)?;
            let plan = BakePlan::new(&layout, &planes, &mesh, w, h)?;
            let refl: Vec<f64> = planes.iter().map(|p| p.reflectance).collect();
            Ok(Reflectance::PerPixel(plan.per_plane(&refl).map(|r| if r.is_nan() { 1.0 } else { r })))
        }
        (None, None) => Err(Error::Input("give --reflectance or --layout".into())),
    }
}

pub fn illum_map(a: &PhotoArgs, r: &ReflectanceArgs, flux: bool) -> Result<()> {
    let mut m = RunManifest::start(if flux { "flux-map" } else { "illum-map" });
    let cfg = load_config(a.config.as_deref())?;
    cfg.photometry.validate()?;
    m.config(&cfg);
    let pano = read_panorama(&a.pano)?;
    m.input(&a.pano)?;
    let refl = reflectance(r, &cfg, pano.width(), pano.height(), &mut m)?;
    let l = luminance_from_hdr(&pano, cfg.photometry.efficacy, cfg.photometry.weights)?;
    let e = illuminance_from_luminance(&l, &refl)?;
    if flux {
        let f = flux_from_illuminance(&e, cfg.photometry.lux_per_watt)?;
        save_map(&mut m, &f, &a.out, a.png.as_deref())?;
    } else {
        save_map(&mut m, &e, &a.out, a.png.as_deref())?;
    }
    m.finish(&manifest_beside(&a.out))
}

pub fn patch_stats(map: &Path, patches_path: &Path, out: &Path) -> Result<()> {
    let mut m = RunManifest::start("patch-stats");
    let data = read_map(map)?;
    let patches: Vec<PatchSpec> = load_json(patches_path)?;
    m.input(map)?;
    m.input(patches_path)?;
    let mut csv = String::from("patch_id,mean,count\n");
    for (i, p) in patches.iter().enumerate() {
        let s = patch_mean(&data, p)?;
        writeln!(csv, "{i},{},{}", s.mean, s.count).unwrap();
    }
    save_text(&mut m, out, &csv)?;
    m.finish(&manifest_beside(out))
}

struct Loaded {
    cfg: RunConfig,
    scene: Scene,
}

fn load_scene(a: &SceneArgs, m: &mut RunManifest) -> Result<Loaded> {
    let cfg = load_config(a.config.as_deref())?;
    let db = load_db(a.materials.as_deref())?;
    let layout = RoomLayout::load(&a.layout)?;
    let pano = read_panorama(&a.pano)?;
    for p in [Some(&a.layout), Some(&a.pano), a.materials.as_ref(), a.config.as_ref()].into_iter().flatten() {
        m.input(p)?;
    }
    let scene = Scene::prepare(&layout, &pano, &db, &cfg.photometry, cfg.grid_spacing)?;
    for (p, mat) in scene.planes.iter().zip(&scene.materials) {
        m.materials.insert(p.id.clone(), mat.name.clone());
    }
    Ok(Loaded { cfg, scene })
}

fn celsius_stats(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let (mut sum, mut n, mut lo, mut hi) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        sum += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (kelvin_to_celsius(sum / n as f64), kelvin_to_celsius(lo), kelvin_to_celsius(hi))
}

pub fn heat_sim(a: &SceneArgs, dt: Option<f64>, out: &Path) -> Result<()> {
    let mut m = RunManifest::start("heat-sim");
    let Loaded { mut cfg, scene } = load_scene(a, &mut m)?;
    if dt.is_some() {
        cfg.sim.dt = dt;
    }
    cfg.validate()?;
    m.config(&cfg);
    m.toggles = Some(cfg.sim.toggles);
    let result = scene.simulate(&cfg.sim)?;
    m.dt = Some(result.dt);
    m.dt_bound = Some(result.dt_bound);
    m.steps = Some(result.steps);

    create_dir(out)?;
    let lattices = scene.mesh.lattices();
    let mut csv = String::from("snapshot,time_s,mean_c,min_c,max_c\n");
    for (k, snap) in result.snapshots.iter().enumerate() {
        let field = out.join(format!("field_{k:03}.bin"));
        write_field(&field, snap, &lattices)?;
        m.output(&field)?;
        let map = scene.bake(snap);
        save_map(&mut m, &map, &out.join(format!("heat_{k:03}.bin")), None)?;
        let (mean, lo, hi) = celsius_stats(snap.planes.iter().flatten().copied());
        writeln!(csv, "{k},{},{mean:.6},{lo:.6},{hi:.6}", snap.time).unwrap();
    }
    let fin = &result.final_field;
    let field = out.join("field_final.bin");
    write_field(&field, fin, &lattices)?;
    m.output(&field)?;
    let map = scene.bake(fin);
    save_map(&mut m, &map, &out.join("heat_final.bin"), Some(&out.join("heat_final.png")))?;
    save_text(&mut m, &out.join("snapshots.csv"), &csv)?;

    let mut surf = String::from("surface,material,mean_c,min_c,max_c\n");
    for ((p, mat), t) in scene.planes.iter().zip(&scene.materials).zip(&fin.planes) {
        let (mean, lo, hi) = celsius_stats(t.iter().copied());
        writeln!(surf, "{},{},{mean:.6},{lo:.6},{hi:.6}", p.id, mat.name).unwrap();
    }
    save_text(&mut m, &out.join("surfaces.csv"), &surf)?;
    println!(
        "simulated {} s in {} steps (dt {:.4} s, bound {:.4} s); outputs in {}",
        fin.time,
        result.steps,
        result.dt,
        result.dt_bound,
        out.display()
    );
    m.finish(&out.join("manifest.json"))
}

pub fn bake_pano(
    layout: &Path,
    field: &Path,
    config: Option<&Path>,
    width: usize,
    out: &Path,
    png: Option<&Path>,
) -> Result<()> {
    let mut m = RunManifest::start("bake-pano");
    let cfg = load_config(config)?;
    m.config(&cfg);
    let l = RoomLayout::load(layout)?;
    m.input(layout)?;
    let (temps, dims) = read_field(field)?;
    m.input(field)?;
    if width < 2 || !width.is_multiple_of(2) {
        return Err(Error::Input(format!("panorama width must be even, got {width}")));
    }
    let planes = l.build_surfaces()?;
    let mesh = mesh_surfaces(&planes, cfg.grid_spacing)?;
    let expect: Vec<(usize, usize)> = mesh.planes.iter().map(|p| (p.lattice.nu, p.lattice.nv)).collect();
    if dims != expect {
        return Err(Error::Input(
            "field lattices do not match the layout at this grid spacing".into(),
        ));
    }
    let plan = BakePlan::new(&l, &planes, &mesh, width, width / 2)?;
    save_map(&mut m, &plan.bake(&temps.planes), out, png)?;
    m.finish(&manifest_beside(out))
}

#[allow(clippy::too_many_arguments)]
pub fn crop(
    map: Option<&Path>,
    pano: Option<&Path>,
    view: &ViewArgs,
    width: usize,
    height: usize,
    sampling: SamplingArg,
    out: &Path,
    png: Option<&Path>,
) -> Result<()> {
    let mut m = RunManifest::start("crop");
    let source = match (map, pano) {
        (Some(p), _) => {
            m.input(p)?;
            read_map(p)?
        }
        (None, Some(p)) => {
            m.input(p)?;
            let cfg = RunConfig::default().photometry;
            luminance_from_hdr(&read_panorama(p)?, cfg.efficacy, cfg.weights)?.into_inner()
        }
        (None, None) => return Err(Error::Input("give --map or --pano".into())),
    };
    let spec = PerspectiveSpec {
        yaw: view.yaw,
        pitch: view.pitch,
        hfov: view.hfov,
        out_width: width,
        out_height: height,
    };
    m.config(&spec);
    let c = crop_perspective(&source, &spec, sampling.into())?;
    save_map(&mut m, &c, out, png)?;
    m.finish(&manifest_beside(out))
}

pub fn flir_correct(frame: &Path, cal: &Path, eps: f64, out: &Path) -> Result<()> {
    let mut m = RunManifest::start("flir-correct");
    let (f, header) = ThermalFrame::read_with_header(frame)?;
    let c = FlirCalibration::load(cal)?;
    m.input(frame)?;
    m.input(cal)?;
    m.config(&c);
    let g = f.reprocess(eps, &c)?;
    g.write(out, &header)?;
    m.output(out)?;
    m.finish(&manifest_beside(out))
}

pub fn sweep(spec_path: &Path, a: &SceneArgs, out: &Path) -> Result<()> {
    let mut m = RunManifest::start("sweep");
    let spec: SweepSpec = load_json(spec_path)?;
    m.input(spec_path)?;
    let Loaded { cfg, scene } = load_scene(a, &mut m)?;
    cfg.validate()?;
    m.config(&(&cfg, &spec));
    m.toggles = Some(cfg.sim.toggles);
    let r = analysis::run_sweep(&scene, &cfg.sim, &spec)?;
    create_dir(out)?;
    save_text(&mut m, &out.join("sweep.csv"), &r.to_csv())?;
    let bound = match spec.parameter {
        SweepParameter::OutdoorTemp => OUTDOOR_BOUND_C,
        _ => 1.0,
    };
    let errors = r.error_maps(bound)?;
    let max = errors.iter().map(ErrorMap::max_abs).fold(0.0, f64::max);
    for (i, (map, e)) in r.maps.iter().zip(&errors).enumerate() {
        save_map(&mut m, map, &out.join(format!("heat_{i:02}.bin")), Some(&out.join(format!("heat_{i:02}.png"))))?;
        let e = if spec.parameter == SweepParameter::OutdoorTemp || max == 0.0 {
            e.clone()
        } else {
            ErrorMap {
                lo: -max,
                hi: max,
                ..e.clone()
            }
        };
        save_error(&mut m, &e, &out.join(format!("error_{i:02}")))?;
    }
    print!("{}", r.to_csv());
    m.finish(&out.join("manifest.json"))
}

pub fn toggle_matrix(a: &SceneArgs, out: &Path) -> Result<()> {
    let mut m = RunManifest::start("toggle-matrix");
    let Loaded { cfg, scene } = load_scene(a, &mut m)?;
    cfg.validate()?;
    m.config(&cfg);
    let runs = analysis::toggle_matrix(&scene, &cfg.sim)?;
    create_dir(out)?;
    let mut csv = String::from("mask,mechanisms,mean_c,max_abs_delta_k\n");
    for r in &runs {
        let mask = analysis::toggle_mask(&r.toggles);
        let (mean, _, _) = celsius_stats(r.map.data().iter().copied());
        writeln!(csv, "{mask},{},{mean:.6},{:.6e}", r.toggles.label(), r.error.max_abs()).unwrap();
        save_map(
            &mut m,
            &r.map,
            &out.join(format!("heat_{mask}.bin")),
            Some(&out.join(format!("heat_{mask}.png"))),
        )?;
        save_error(&mut m, &r.error, &out.join(format!("error_{mask}")))?;
    }
    save_text(&mut m, &out.join("toggles.csv"), &csv)?;
    print!("{csv}");
    m.finish(&out.join("manifest.json"))
}

pub fn compare(
    heat: &Path,
    thermal: &Path,
    cal: Option<&Path>,
    eps: Option<f64>,
    patches: &Path,
    view: &ViewArgs,
    out: &Path,
) -> Result<()> {
    let mut m = RunManifest::start("compare");
    let sim = read_map(heat)?;
    let mut frame = ThermalFrame::read(thermal)?;
    let patch_list: Vec<PatchSpec> = load_json(patches)?;
    for p in [Some(heat), Some(thermal), cal, Some(patches)].into_iter().flatten() {
        m.input(p)?;
    }
    if let (Some(cal), Some(eps)) = (cal, eps) {
        let c = FlirCalibration::load(cal)?;
        frame = frame.reprocess(eps, &c)?;
    }
    let spec = PerspectiveSpec {
        yaw: view.yaw,
        pitch: view.pitch,
        hfov: view.hfov,
        out_width: frame.width(),
        out_height: frame.height(),
    };
    m.config(&(&spec, eps));
    let rows = analysis::compare_to_thermal(&sim, &spec, &frame, &patch_list)?;
    let mut csv = String::from("patch_id,sim_c,thermal_c,delta_c,sim_count,thermal_count\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{},{}",
            r.patch, r.sim_c, r.thermal_c, r.delta_c, r.sim_count, r.thermal_count
        )
        .unwrap();
    }
    save_text(&mut m, out, &csv)?;
    print!("{csv}");
    m.finish(&manifest_beside(out))
}

pub fn layout_check(path: &Path) -> Result<()> {
    let layout = RoomLayout::load(path)?;
    let planes = layout.build_surfaces()?;
    println!("{} surfaces", planes.len());
    for p in &planes {
        println!(
            "{:<10} {:<16} reflectance {:.3}  {:.3} x {:.3} m  area {:.4} m2",
            p.id,
            p.material,
            p.reflectance,
            p.extent_u,
            p.extent_v,
            p.area()
        );
    }
    Ok(())
}
