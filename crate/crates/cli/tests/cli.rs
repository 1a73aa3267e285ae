use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use panoheat::pano::ScalarMap;
use panoheat::thermography::{synthetic_calibration, FrameHeader, ThermalFrame};
use sha2::{Digest, Sha256};

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample").join(name)
}

fn panoheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_panoheat"))
        .args(args)
        .env("PANOHEAT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn heat_sim(out: &Path, extra: &[&str]) -> Output {
    let (layout, pano, config) = (sample("layout.json"), sample("pano.hdr"), sample("config.json"));
    let mut args = vec![
        "heat-sim",
        "--layout",
        s(&layout),
        "--pano",
        s(&pano),
        "--config",
        s(&config),
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    panoheat(&args)
}

#[test]
fn layout_check_lists_surfaces() {
    let o = panoheat(&["layout-check", "--layout", s(&sample("layout.json"))]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("6 surfaces"), "{text}");
    assert!(text.contains("wall_3"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(panoheat(&["bogus"]).status.code(), Some(1));
    assert_eq!(panoheat(&["heat-sim"]).status.code(), Some(1));
    let o = panoheat(&["layout-check", "--layout", "/nonexistent/layout.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn oversized_step_exits_two_with_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = heat_sim(dir.path(), &["--dt", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("stability bound"), "{err}");
}

#[test]
fn heat_sim_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = heat_sim(dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["heat_final.png", "heat_final.bin", "field_final.bin", "snapshots.csv", "surfaces.csv", "field_020.bin"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let snaps = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().count(), 1 + 21);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "heat-sim");
    assert!(manifest["dt"].as_f64().unwrap() <= manifest["dt_bound"].as_f64().unwrap());
    let outputs = manifest["outputs"].as_object().unwrap();
    assert!(outputs.len() > 40);
    for (path, digest) in outputs {
        let bytes = std::fs::read(path).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), digest.as_str().unwrap(), "{path}");
    }
    assert_eq!(manifest["materials"]["floor"], "plaster_dense");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(heat_sim(a.path(), &[]).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_panoheat"))
        .args(["heat-sim", "--layout", s(&sample("layout.json")), "--pano", s(&sample("pano.hdr"))])
        .args(["--config", s(&sample("config.json")), "--out", s(b.path())])
        .env("PANOHEAT_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let mut n = 0;
    for e in std::fs::read_dir(a.path()).unwrap() {
        let name = e.unwrap().file_name();
        if name.to_string_lossy().ends_with(".bin") {
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert!(x == y, "{name:?} differs");
            n += 1;
        }
    }
    assert_eq!(n, 2 * 22);
}

#[test]
fn map_commands_and_patch_stats() {
    let dir = tempfile::tempdir().unwrap();
    let pano = sample("pano.hdr");
    let flux = dir.path().join("flux.bin");
    let png = dir.path().join("flux.png");
    let o = panoheat(&["flux-map", "--pano", s(&pano), "--layout", s(&sample("layout.json")), "--out", s(&flux), "--png", s(&png)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(png.is_file());

    let csv = dir.path().join("patches.csv");
    let o = panoheat(&["patch-stats", "--map", s(&flux), "--patches", s(&sample("patches.json")), "--out", s(&csv)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "patch_id,mean,count");
    // the floor patch sits in 12000 lx sunlight
    let floor_mean: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    // RGBE keeps about 8 bits of mantissa
    assert!((floor_mean - 100.0).abs() < 3.0, "{floor_mean}");

    let crop = dir.path().join("crop.bin");
    let o = panoheat(&["crop", "--map", s(&flux), "--yaw", "-0.5", "--pitch", "-0.3", "--hfov", "1.2"])
        .status
        .code();
    assert_eq!(o, Some(1), "width and height are required");
    let o = panoheat(&[
        "crop", "--map", s(&flux), "--yaw", "-0.5", "--pitch", "-0.3", "--hfov", "1.2", "--width", "64", "--height",
        "48", "--out", s(&crop),
    ]);
    assert!(o.status.success());
    let m = panoheat::pano::io::read_map(&crop).unwrap();
    assert_eq!((m.width(), m.height()), (64, 48));

    let o = panoheat(&["light-map", "--pano", s(&pano), "--out", s(&crop), "--config", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn flir_correct_roundtrips_at_assumed_emissivity() {
    let dir = tempfile::tempdir().unwrap();
    let temps = ScalarMap::from_fn(64, 32, |x, y| 295.0 + 0.25 * x as f64 + 0.5 * y as f64);
    let frame = ThermalFrame::new(temps).unwrap();
    let input = dir.path().join("frame.bin");
    frame.write(&input, &FrameHeader::centikelvin(64, 32)).unwrap();
    let cal = sample("calibration.json");
    assert_eq!(
        panoheat::thermography::FlirCalibration::load(&cal).unwrap(),
        synthetic_calibration()
    );

    let same = dir.path().join("same.bin");
    let o = panoheat(&["flir-correct", "--frame", s(&input), "--cal", s(&cal), "--emissivity", "0.95", "--out", s(&same)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&input).unwrap(), std::fs::read(&same).unwrap());

    let low = dir.path().join("low.bin");
    let o = panoheat(&["flir-correct", "--frame", s(&input), "--cal", s(&cal), "--emissivity", "0.8", "--out", s(&low)]);
    assert!(o.status.success());
    let a = ThermalFrame::read(&input).unwrap();
    let b = ThermalFrame::read(&low).unwrap();
    // above the background, a lower emissivity means a hotter object
    assert!(a.temps.data().iter().zip(b.temps.data()).all(|(x, y)| y >= x));

    let o = panoheat(&["flir-correct", "--frame", s(&input), "--cal", s(&cal), "--emissivity", "1.5", "--out", s(&low)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_and_toggle_matrix_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"parameter": "density", "values": [1300, 2600], "baseline": 1300}"#).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"grid_spacing": 0.25, "sim": {"duration": 60}}"#).unwrap();
    let (layout, pano) = (sample("layout.json"), sample("pano.hdr"));
    let out = dir.path().join("sweep");
    let o = panoheat(&[
        "sweep", "--spec", s(&spec), "--layout", s(&layout), "--pano", s(&pano), "--config", s(&cfg), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("value,patch_id,mean_c,delta_c,pct_error"));
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("1300,all,"));

    let out = dir.path().join("toggles");
    let o = panoheat(&["toggle-matrix", "--layout", s(&layout), "--pano", s(&pano), "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for mask in ["111", "000", "011"] {
        assert!(out.join(format!("heat_{mask}.png")).is_file());
    }
}
