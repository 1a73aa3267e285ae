//! `panoheat`: light maps, heat simulation, and analysis from the command line.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use panoheat::Error;

#[derive(Parser)]
#[command(name = "panoheat", version, about = "Indoor light and surface heat maps from HDR panoramas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Inputs shared by every command that runs the full scene.
#[derive(Args, Clone)]
pub struct SceneArgs {
    /// Room layout JSON.
    #[arg(long)]
    pub layout: PathBuf,
    /// Equirectangular panorama (.hdr RGBE, or raw float RGB).
    #[arg(long)]
    pub pano: PathBuf,
    /// Material table JSON; the bundled table when omitted.
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Run configuration JSON; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct PhotoArgs {
    #[arg(long)]
    pub pano: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output raw map.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a false-colour PNG.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct ReflectanceArgs {
    /// Uniform reflectance in (0, 1].
    #[arg(long, conflicts_with = "layout")]
    pub reflectance: Option<f64>,
    /// Per-surface reflectance from a layout.
    #[arg(long)]
    pub layout: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct ViewArgs {
    /// Radians, positive turns right.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub yaw: f64,
    /// Radians, positive looks up.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub pitch: f64,
    /// Horizontal field of view, radians.
    #[arg(long)]
    pub hfov: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Per-pixel luminance, cd/m².
    LightMap(PhotoArgs),
    /// Per-pixel illuminance, lx.
    IllumMap {
        #[command(flatten)]
        io: PhotoArgs,
        #[command(flatten)]
        refl: ReflectanceArgs,
    },
    /// Per-pixel energy influx, W/m².
    FluxMap {
        #[command(flatten)]
        io: PhotoArgs,
        #[command(flatten)]
        refl: ReflectanceArgs,
    },
    /// Circular patch means of a raw map, as CSV.
    PatchStats {
        #[arg(long)]
        map: PathBuf,
        /// JSON array of {u, v, radius}.
        #[arg(long)]
        patches: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transient heat simulation with baked panoramic heat maps.
    HeatSim {
        #[command(flatten)]
        scene: SceneArgs,
        /// Fixed time step, s; must not exceed the stability bound.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bakes a per-vertex field file into a panorama.
    BakePano {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Perspective view of a raw map or panorama.
    Crop {
        /// Raw scalar map; use --pano for an RGB panorama.
        #[arg(long, required_unless_present = "pano")]
        map: Option<PathBuf>,
        #[arg(long, conflicts_with = "map")]
        pano: Option<PathBuf>,
        #[command(flatten)]
        view: ViewArgs,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, value_enum, default_value = "bilinear")]
        sampling: commands::SamplingArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Re-expresses a TLinear thermal frame under a different emissivity.
    FlirCorrect {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        cal: PathBuf,
        #[arg(long)]
        emissivity: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// One simulation per parameter value, with patch statistics.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// All eight conduction/radiation/convection combinations against all-on.
    ToggleMatrix {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulated heat map against a thermal frame.
    Compare {
        /// Baked heat map (raw, K).
        #[arg(long)]
        heat: PathBuf,
        #[arg(long)]
        thermal: PathBuf,
        #[arg(long)]
        cal: Option<PathBuf>,
        /// Re-process the frame at this emissivity first (needs --cal).
        #[arg(long, requires = "cal")]
        emissivity: Option<f64>,
        #[arg(long)]
        patches: PathBuf,
        #[command(flatten)]
        view: ViewArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validates a layout and lists its surfaces.
    LayoutCheck {
        #[arg(long)]
        layout: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Input(_) | Error::Config(_) | Error::Format { .. } => 1,
        Error::Stability { .. } | Error::Numeric { .. } => 2,
        Error::Io { .. } => 3,
        Error::Sweep { .. } => unreachable!("root looks through sweep errors"),
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("PANOHEAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("PANOHEAT_THREADS must be a count, got `{v}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::LightMap(a) => commands::light_map(&a),
        Command::IllumMap { io, refl } => commands::illum_map(&io, &refl, false),
        Command::FluxMap { io, refl } => commands::illum_map(&io, &refl, true),
        Command::PatchStats { map, patches, out } => commands::patch_stats(&map, &patches, &out),
        Command::HeatSim { scene, dt, out } => commands::heat_sim(&scene, dt, &out),
        Command::BakePano {
            layout,
            field,
            config,
            width,
            out,
            png,
        } => commands::bake_pano(&layout, &field, config.as_deref(), width, &out, png.as_deref()),
        Command::Crop {
            map,
            pano,
            view,
            width,
            height,
            sampling,
            out,
            png,
        } => commands::crop(map.as_deref(), pano.as_deref(), &view, width, height, sampling, &out, png.as_deref()),
        Command::FlirCorrect {
            frame,
            cal,
            emissivity,
            out,
        } => commands::flir_correct(&frame, &cal, emissivity, &out),
        Command::Sweep { spec, scene, out } => commands::sweep(&spec, &scene, &out),
        Command::ToggleMatrix { scene, out } => commands::toggle_matrix(&scene, &out),
        Command::Compare {
            heat,
            thermal,
            cal,
            emissivity,
            patches,
            view,
            out,
        } => commands::compare(&heat, &thermal, cal.as_deref(), emissivity, &patches, &view, &out),
        Command::LayoutCheck { layout } => commands::layout_check(&layout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
