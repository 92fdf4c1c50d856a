//! `radhars` command-line driver.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use radhars_core::config::{load_config, validate_config, ScenarioKind, SimConfig};
use radhars_core::gait::{project_to_pixels, synth_motion, synthetic_pool, MotionKind, MotionSpec};
use radhars_core::io::{read_cube, read_map, render_map, write_map, write_ridges};
use radhars_core::maps::{
    enhance_map, extract_ridges, format_psnr, make_dtm, mti_profiles, psnr, range_profiles, rtm_from_profiles,
    rtm_mti_from_profiles, MapError,
};
use radhars_core::pipeline::{pose_stage, simulate, write_run};
use radhars_core::pose::{Frames, PosePool, PoseSequence};
use radhars_core::tracking::load_detections;
use radhars_core::TrackSet;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  a pipeline stage failed (the message names the stage)
  2  usage error: bad flags, invalid config, flag combinations the scenario
     does not support, or incompatible inputs";

#[derive(Parser)]
#[command(name = "radhars", version, about = "Pose-to-Doppler radar simulator", after_help = EXIT_CODES)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full chain: poses -> IF cube -> RTM, MTI, DTM -> ridges, plus manifest.
    #[command(after_help = EXIT_CODES)]
    Simulate(SimulateArgs),
    /// Write a synthetic motion clip as a pose file.
    #[command(after_help = EXIT_CODES)]
    Synth(SynthArgs),
    /// Run the bounding-box tracker over a detection file.
    #[command(after_help = EXIT_CODES)]
    Track(TrackArgs),
    /// Range-time maps (plain and MTI) from a stored IF cube.
    #[command(after_help = EXIT_CODES)]
    Rtm(CubeArgs),
    /// Doppler-time map from a stored IF cube.
    #[command(after_help = EXIT_CODES)]
    Dtm(CubeArgs),
    /// Ridge extraction from a stored DTM.
    #[command(after_help = EXIT_CODES)]
    Ridge(RidgeArgs),
    /// PSNR of map B against reference map A.
    #[command(after_help = EXIT_CODES)]
    Psnr(PsnrArgs),
    /// Pose pipeline only: lift, ground, anchor and smooth to metric 3D.
    #[command(after_help = EXIT_CODES)]
    Pose(PoseArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; missing fields take scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario when no config is given (must match the config otherwise).
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<ScenarioKind>,
    /// Noise seed; overrides RADHARS_SEED, which overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Pose file; repeat for several targets.
    #[arg(long, required = true)]
    pose: Vec<PathBuf>,
    /// Pose pool for pixel-mode inputs.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Run directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Drop wall reverberation and image paths.
    #[arg(long)]
    no_multipath: bool,
    /// Use unit wall transmission on the direct through-wall path.
    #[arg(long)]
    no_wall_attenuation: bool,
    /// Also write enhanced maps; ridges then come from the enhanced DTM.
    #[arg(long)]
    enhance: bool,
    /// Number of ridges to extract.
    #[arg(long)]
    ridges: Option<usize>,
    /// Write PNG renderings of every map.
    #[arg(long)]
    render: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// static, radial, pendulum, walk or sit
    #[arg(long, value_parser = parse_motion)]
    motion: MotionKind,
    /// Pose file output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    fps: Option<f64>,
    /// Start position x,y,z in meters.
    #[arg(long, value_parser = parse_vec3)]
    start: Option<[f64; 3]>,
    #[arg(long)]
    speed: Option<f64>,
    /// Step frequency (walk) or swing frequency (pendulum), Hz.
    #[arg(long)]
    freq: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    limb_length: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    /// Emit a pixel-mode clip through an orthographic camera at this scale.
    #[arg(long)]
    pixels: Option<f64>,
    /// Also write a synthetic pose pool here (for pixel-mode clips).
    #[arg(long)]
    pool_out: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pool_size: usize,
}

#[derive(Args)]
struct TrackArgs {
    /// Lines of `frame cx cy w h`; `#` starts a comment.
    #[arg(long)]
    detections: PathBuf,
    /// Frame interval, seconds.
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CubeArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// IF cube descriptor (ifcube.json).
    #[arg(long)]
    cube: PathBuf,
    /// Directory for the map files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    enhance: bool,
    #[arg(long)]
    render: bool,
}

#[derive(Args)]
struct RidgeArgs {
    /// DTM descriptor.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 3)]
    ridges: usize,
    #[arg(long, default_value_t = 5)]
    jump_bins: usize,
    /// CSV output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PsnrArgs {
    /// Reference map descriptor (its maximum is the peak).
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args)]
struct PoseArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    pose: PathBuf,
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Metric pose file output.
    #[arg(long)]
    out: PathBuf,
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: radhars_core::config::ConfigError| e.to_string())
}

fn parse_motion(s: &str) -> Result<MotionKind, String> {
    s.parse().map_err(|e: radhars_core::gait::MotionError| e.to_string())
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected x,y,z".to_string())
}

enum Failure {
    Usage(anyhow::Error),
    Stage(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn stage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Stage(e.into())
}

/// Config file or scenario defaults, then RADHARS_SEED, then `--seed`.
fn resolve_config(a: &ConfigArgs) -> Result<SimConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            let cfg = load_config(p).map_err(usage)?;
            if let Some(k) = a.scenario {
                if k != cfg.scenario {
                    return Err(usage(anyhow!(
                        "--scenario {k} contradicts scenario {} in {}",
                        cfg.scenario,
                        p.display()
                    )));
                }
            }
            cfg
        }
        None => SimConfig::defaults(a.scenario.unwrap_or(ScenarioKind::FreeSpace)),
    };
    cfg.apply_env_overrides().map_err(usage)?;
    if let Some(s) = a.seed {
        cfg.radar.seed = s;
    }
    Ok(cfg)
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let mut cfg = resolve_config(&a.cfg)?;
    if cfg.scenario == ScenarioKind::FreeSpace {
        for (set, flag) in [(a.no_multipath, "--no-multipath"), (a.no_wall_attenuation, "--no-wall-attenuation")] {
            if set {
                return Err(usage(anyhow!("{flag} needs a wall; scenario is free")));
            }
        }
    }
    if a.no_multipath {
        cfg.multipath = false;
    }
    if a.no_wall_attenuation {
        cfg.wall_attenuation = false;
    }
    if a.enhance {
        cfg.proc.enhance = true;
    }
    if let Some(n) = a.ridges {
        cfg.proc.n_ridges = n;
    }
    let max_range = cfg.max_range_m;
    let cfg = validate_config(cfg, max_range).map_err(usage)?;

    let poses = a
        .pose
        .iter()
        .map(|p| PoseSequence::load(p).with_context(|| format!("pose stage failed: {}", p.display())))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::Stage)?;
    let pool = match &a.pool {
        Some(p) => Some(PosePool::load(p).with_context(|| format!("pose stage failed: {}", p.display())).map_err(Failure::Stage)?),
        None => None,
    };

    let out = simulate(&cfg, &poses, pool.as_ref()).map_err(stage)?;
    let mut inputs = a.pose.clone();
    inputs.extend(a.pool.iter().cloned());
    inputs.extend(a.cfg.config.iter().cloned());
    let manifest = write_run(&a.out, &cfg, &out, &inputs, a.render).map_err(stage)?;

    println!("wrote {} files to {}", manifest.outputs.len() + 1, a.out.display());
    println!(
        "scenario {}  seed {}  pulses {}  dtm {}x{}",
        cfg.scenario, cfg.radar.seed, out.cube.n_pulse, out.dtm.rows, out.dtm.cols
    );
    for t in &manifest.timings {
        println!("  {:<12} {:>9.1} ms", t.stage.to_string(), t.ms);
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CmdResult {
    let mut spec = MotionSpec::new(a.motion);
    if let Some(v) = a.duration {
        spec.duration_s = v;
    }
    if let Some(v) = a.fps {
        spec.fps = v;
    }
    if let Some(v) = a.start {
        spec.start_m = v;
    }
    if let Some(v) = a.speed {
        spec.speed_mps = v;
    }
    if let Some(v) = a.freq {
        spec.freq_hz = v;
    }
    if let Some(v) = a.amplitude {
        spec.amplitude_m = v;
    }
    if let Some(v) = a.limb_length {
        spec.limb_length_m = v;
    }
    if let Some(v) = a.height {
        spec.height_m = v;
    }
    let mut seq = synth_motion(&spec).map_err(usage)?;
    if let Some(px) = a.pixels {
        if !(px.is_finite() && px > 0.0) {
            return Err(usage(anyhow!("--pixels must be > 0")));
        }
        let Frames::Metric(frames) = &seq.frames else {
            unreachable!("synth_motion is metric")
        };
        // the pixel pipeline anchors the first frame's hip center here
        let origin = [spec.start_m[0], spec.start_m[1], 0.0];
        let pix = frames
            .iter()
            .map(|f| project_to_pixels(f, px, [640.0, 720.0]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        seq.origin_m = origin;
        seq.frames = Frames::Pixels(pix);
    }
    seq.save(&a.out).map_err(stage)?;
    if let Some(p) = &a.pool_out {
        synthetic_pool(a.pool_size).and_then(|pool| pool.save(p)).map_err(stage)?;
    }
    println!("wrote {} frames to {}", seq.len(), a.out.display());
    Ok(())
}

fn cmd_track(a: TrackArgs) -> CmdResult {
    let params = match &a.config {
        Some(p) => load_config(p).map_err(usage)?.tracking,
        None => Default::default(),
    };
    if !(a.dt.is_finite() && a.dt > 0.0) {
        return Err(usage(anyhow!("--dt must be > 0")));
    }
    let frames = load_detections(&a.detections).map_err(stage)?;
    let mut ts = TrackSet::new(params);
    let mut out = String::from("frame id cx cy w h vcx vcy vw vh status\n");
    for (f, dets) in frames.iter().enumerate() {
        ts.step(dets, a.dt);
        for t in &ts.tracks {
            let s = t.state;
            writeln!(
                out,
                "{f} {} {:.3} {:.3} {:.3} {:.3} {:.3} {:.3} {:.3} {:.3} {}",
                t.id, s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7], t.status
            )
            .unwrap();
        }
    }
    print!("{out}");
    Ok(())
}

fn write_maps(dir: &Path, maps: &[(&str, &radhars_core::SpectralMap)], render: bool) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(stage)?;
    for (stem, m) in maps {
        write_map(dir, stem, m).map_err(stage)?;
        if render {
            render_map(&dir.join(format!("{stem}.png")), m).map_err(stage)?;
        }
        println!("{stem}: {}x{}", m.rows, m.cols);
    }
    Ok(())
}

fn cmd_rtm(a: CubeArgs) -> CmdResult {
    let cfg = resolve_config(&a.cfg)?;
    let (cube, _) = read_cube(&a.cube).map_err(usage)?;
    let p = range_profiles(&cube, &cfg.radar);
    let rtm = rtm_from_profiles(&p);
    let mti = rtm_mti_from_profiles(&mti_profiles(&p).map_err(|e| stage(anyhow!("mti stage failed: {e}")))?);
    let enhanced = a.enhance.then(|| enhance_map(&mti, cfg.proc.enhance_quantile));
    let mut maps = vec![("rtm", &rtm), ("rtm_mti", &mti)];
    if let Some(e) = &enhanced {
        maps.push(("rtm_enhanced", e));
    }
    write_maps(&a.out, &maps, a.render)
}

fn cmd_dtm(a: CubeArgs) -> CmdResult {
    let cfg = resolve_config(&a.cfg)?;
    let (cube, _) = read_cube(&a.cube).map_err(usage)?;
    let mti = mti_profiles(&range_profiles(&cube, &cfg.radar)).map_err(|e| stage(anyhow!("mti stage failed: {e}")))?;
    let dtm = make_dtm(&mti, &cfg.proc).map_err(|e| stage(anyhow!("dtm stage failed: {e}")))?;
    let enhanced = a.enhance.then(|| enhance_map(&dtm, cfg.proc.enhance_quantile));
    let mut maps = vec![("dtm", &dtm)];
    if let Some(e) = &enhanced {
        maps.push(("dtm_enhanced", e));
    }
    write_maps(&a.out, &maps, a.render)
}

fn cmd_ridge(a: RidgeArgs) -> CmdResult {
    let dtm = read_map(&a.map).map_err(usage)?;
    let r = extract_ridges(&dtm, a.ridges, a.jump_bins).map_err(usage)?;
    write_ridges(&a.out, &r).map_err(stage)?;
    let flagged = r.flagged.iter().filter(|&&f| f).count();
    println!("{} ridges over {} columns ({flagged} flagged) -> {}", r.n_ridges(), r.times.len(), a.out.display());
    Ok(())
}

fn cmd_psnr(a: PsnrArgs) -> CmdResult {
    let ma = read_map(&a.a).map_err(usage)?;
    let mb = read_map(&a.b).map_err(usage)?;
    match psnr(&ma, &mb) {
        Ok(v) => {
            println!("{}", format_psnr(v));
            Ok(())
        }
        Err(e @ MapError::DimensionMismatch { .. }) => Err(usage(e)),
        Err(e) => Err(stage(e)),
    }
}

fn cmd_pose(a: PoseArgs) -> CmdResult {
    let cfg = resolve_config(&a.cfg)?;
    let seq = PoseSequence::load(&a.pose)
        .with_context(|| format!("pose stage failed: {}", a.pose.display()))
        .map_err(Failure::Stage)?;
    let pool = match &a.pool {
        Some(p) => Some(
            PosePool::load(p)
                .with_context(|| format!("pose stage failed: {}", p.display()))
                .map_err(Failure::Stage)?,
        ),
        None => None,
    };
    let sk = pose_stage(&seq, pool.as_ref(), &cfg).map_err(stage)?;
    let out = PoseSequence::metric(
        seq.fps,
        seq.height_m,
        sk.iter().map(|s| s.t).collect(),
        sk.iter().map(|s| s.joints_m).collect(),
    );
    out.save(&a.out).map_err(stage)?;
    let min_z = sk.iter().map(|s| s.min_ankle_z()).fold(f64::INFINITY, f64::min);
    println!("wrote {} metric frames to {} (min ankle z {min_z:.4} m)", out.len(), a.out.display());
    Ok(())
}

/// Error chain joined by ": ", skipping causes the message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg.push_str(": ");
            msg.push_str(&c);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Track(a) => cmd_track(a),
        Cmd::Rtm(a) => cmd_rtm(a),
        Cmd::Dtm(a) => cmd_dtm(a),
        Cmd::Ridge(a) => cmd_ridge(a),
        Cmd::Psnr(a) => cmd_psnr(a),
        Cmd::Pose(a) => cmd_pose(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {}", describe(&e));
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
