//! End-to-end simulation: poses in, IF cube, maps, ridges and a run
//! manifest out.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::SimConfig;
use crate::echo::{synth_cube, IfCube, PathKind, PathModel, ScattererTrack};
use crate::io::{render_map, write_cube, write_map, write_ridges};
use crate::maps::{
    enhance_map, extract_ridges, make_dtm, mti_profiles, range_profiles, rtm_from_profiles, rtm_mti_from_profiles,
    RidgeSet, SpectralMap,
};
use crate::pose::{PosePool, PoseSequence, Skeleton3D, NUM_JOINTS};
use crate::pose3d::{kalman_smooth, sequence_to_metric};
use crate::resample::{interp_to_prf, sgolay_filter, JointTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pose,
    Kalman,
    Interpolate,
    Smooth,
    Echo,
    Rtm,
    Mti,
    Dtm,
    Enhance,
    Ridges,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Pose => "pose",
            Stage::Kalman => "kalman",
            Stage::Interpolate => "interpolate",
            Stage::Smooth => "smooth",
            Stage::Echo => "echo",
            Stage::Rtm => "rtm",
            Stage::Mti => "mti",
            Stage::Dtm => "dtm",
            Stage::Enhance => "enhance",
            Stage::Ridges => "ridges",
            Stage::Write => "write",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

fn at<E: std::error::Error + Send + Sync + 'static>(stage: Stage) -> impl FnOnce(E) -> StageError {
    move |e| StageError {
        stage,
        source: Box::new(e),
    }
}

fn fail(stage: Stage, msg: impl Into<String>) -> StageError {
    StageError {
        stage,
        source: msg.into().into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedComponent {
    pub kind: PathKind,
    pub delay_s: f64,
    pub gain_abs: f64,
    pub gain_arg: f64,
}

/// Propagation paths of one joint at the first pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPaths {
    pub sequence: usize,
    pub joint: usize,
    pub position_m: [f64; 3],
    /// Direct free-space gain at the same position, for comparison.
    pub free_space_gain: f64,
    pub components: Vec<LoggedComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLog {
    pub counts: BTreeMap<String, usize>,
    pub joints: Vec<JointPaths>,
}

impl PathLog {
    pub fn count(&self, kind: PathKind) -> usize {
        self.counts.get(&kind.to_string()).copied().unwrap_or(0)
    }
}

impl<'de> Deserialize<'de> for PathKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "Direct" => PathKind::Direct,
            "WallDirect" => PathKind::WallDirect,
            "WallInternal" => PathKind::WallInternal,
            "ImageA" => PathKind::ImageA,
            "ImageB" => PathKind::ImageB,
            "ImageC" => PathKind::ImageC,
            other => return Err(serde::de::Error::custom(format!("unknown path kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub ms: f64,
}

/// Everything one simulation produces in memory.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub cube: IfCube,
    pub rtm: SpectralMap,
    pub rtm_mti: SpectralMap,
    pub dtm: SpectralMap,
    pub rtm_enhanced: Option<SpectralMap>,
    pub dtm_enhanced: Option<SpectralMap>,
    pub ridges: RidgeSet,
    pub path_log: PathLog,
    pub timings: Vec<StageTiming>,
}

struct Timer(Vec<StageTiming>);

impl Timer {
    fn run<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T, StageError>) -> Result<T, StageError> {
        let start = Instant::now();
        let out = f()?;
        self.0.push(StageTiming {
            stage,
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }
}

/// Metric, Kalman-smoothed skeletons of one pose sequence.
pub fn pose_stage(seq: &PoseSequence, pool: Option<&PosePool>, cfg: &SimConfig) -> Result<Vec<Skeleton3D>, StageError> {
    seq.validate().map_err(at(Stage::Pose))?;
    let metric = sequence_to_metric(seq, pool, cfg.pose.depth_ratio).map_err(at(Stage::Pose))?;
    Ok(kalman_smooth(&metric, 1.0 / seq.fps, cfg.pose.kalman_q, cfg.pose.kalman_r))
}

/// Per-joint trajectories on the pulse grid, Savitzky-Golay smoothed.
pub fn joint_tracks(skeletons: &[Skeleton3D], cfg: &SimConfig) -> Result<Vec<ScattererTrack>, StageError> {
    let times: Vec<f64> = skeletons.iter().map(|s| s.t).collect();
    let mut tracks = Vec::with_capacity(NUM_JOINTS);
    for j in 0..NUM_JOINTS {
        let coords = skeletons.iter().map(|s| s.joints_m[j]).collect();
        let traj = JointTrajectory::new(times.clone(), coords).map_err(at(Stage::Interpolate))?;
        let dense = interp_to_prf(&traj, cfg.radar.prf_hz).map_err(at(Stage::Interpolate))?;
        let smooth = sgolay_filter(&dense, cfg.proc.sg_window, cfg.proc.sg_degree).map_err(at(Stage::Smooth))?;
        tracks.push(ScattererTrack {
            positions: smooth.coords_m,
            reflectivity: cfg.echo.reflectivity[j],
        });
    }
    Ok(tracks)
}

fn build_path_log(model: &PathModel, tracks: &[Vec<ScattererTrack>]) -> Result<PathLog, StageError> {
    let mut counts = BTreeMap::new();
    let mut joints = Vec::new();
    for (s, seq) in tracks.iter().enumerate() {
        for (j, tr) in seq.iter().enumerate() {
            let Some(pos) = tr.positions.first() else {
                continue;
            };
            let comps = model.components(pos, tr.reflectivity).map_err(at(Stage::Echo))?;
            for c in &comps {
                *counts.entry(c.kind.to_string()).or_insert(0) += 1;
            }
            joints.push(JointPaths {
                sequence: s,
                joint: j,
                position_m: *pos,
                free_space_gain: model.free_space_gain(pos, tr.reflectivity),
                components: comps
                    .iter()
                    .map(|c| LoggedComponent {
                        kind: c.kind,
                        delay_s: c.delay_s,
                        gain_abs: c.complex_gain.norm(),
                        gain_arg: c.complex_gain.arg(),
                    })
                    .collect(),
            });
        }
    }
    Ok(PathLog { counts, joints })
}

/// Runs the whole chain for one or more targets sharing the scene.
///
/// All sequences must start at the same time; the pulse grid is truncated to
/// the shortest one.
pub fn simulate(cfg: &SimConfig, poses: &[PoseSequence], pool: Option<&PosePool>) -> Result<SimOutput, StageError> {
    if poses.is_empty() {
        return Err(fail(Stage::Pose, "no pose sequences given"));
    }
    let mut timer = Timer(Vec::new());

    let skeletons = timer.run(Stage::Kalman, || {
        poses.iter().map(|p| pose_stage(p, pool, cfg)).collect::<Result<Vec<_>, _>>()
    })?;
    let t0 = skeletons[0].first().map_or(0.0, |s| s.t);
    if skeletons.iter().any(|s| s.first().map_or(true, |f| (f.t - t0).abs() > 1e-9)) {
        return Err(fail(Stage::Pose, "all pose sequences must start at the same time"));
    }

    let mut tracks = timer.run(Stage::Interpolate, || {
        skeletons.iter().map(|s| joint_tracks(s, cfg)).collect::<Result<Vec<_>, _>>()
    })?;
    let n_pulse = tracks.iter().flatten().map(|t| t.positions.len()).min().unwrap_or(0);
    for t in tracks.iter_mut().flatten() {
        t.positions.truncate(n_pulse);
    }

    let model = PathModel::new(cfg).map_err(at(Stage::Echo))?;
    let path_log = build_path_log(&model, &tracks)?;
    let flat: Vec<ScattererTrack> = tracks.into_iter().flatten().collect();
    let cube = timer.run(Stage::Echo, || synth_cube(&flat, &model, t0).map_err(at(Stage::Echo)))?;
    drop(flat);

    let (rtm, profiles) = timer.run(Stage::Rtm, || {
        let p = range_profiles(&cube, &cfg.radar);
        Ok((rtm_from_profiles(&p), p))
    })?;
    let mti = timer.run(Stage::Mti, || mti_profiles(&profiles).map_err(at(Stage::Mti)))?;
    drop(profiles);
    let rtm_mti = rtm_mti_from_profiles(&mti);
    let dtm = timer.run(Stage::Dtm, || make_dtm(&mti, &cfg.proc).map_err(at(Stage::Dtm)))?;
    drop(mti);

    let (rtm_enhanced, dtm_enhanced) = if cfg.proc.enhance {
        timer.run(Stage::Enhance, || {
            Ok((
                Some(enhance_map(&rtm_mti, cfg.proc.enhance_quantile)),
                Some(enhance_map(&dtm, cfg.proc.enhance_quantile)),
            ))
        })?
    } else {
        (None, None)
    };
    let ridge_source = dtm_enhanced.as_ref().unwrap_or(&dtm);
    let ridges = timer.run(Stage::Ridges, || {
        extract_ridges(ridge_source, cfg.proc.n_ridges, cfg.proc.ridge_jump_bins).map_err(at(Stage::Ridges))
    })?;

    Ok(SimOutput {
        cube,
        rtm,
        rtm_mti,
        dtm,
        rtm_enhanced,
        dtm_enhanced,
        ridges,
        path_log,
        timings: timer.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub multipath: bool,
    pub wall_attenuation: bool,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub timings: Vec<StageTiming>,
    pub path_log: PathLog,
}

impl RunManifest {
    pub fn output(&self, name: &str) -> Option<&FileHash> {
        self.outputs.iter().find(|f| f.path == name)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Writes a file via a temporary sibling and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Writes every artifact of `out` into `dir` and then the manifest.
/// `inputs` are hashed as given. Output names are relative to `dir`.
pub fn write_run(
    dir: &Path,
    cfg: &SimConfig,
    out: &SimOutput,
    inputs: &[PathBuf],
    render: bool,
) -> Result<RunManifest, StageError> {
    let w = |e: std::io::Error| fail(Stage::Write, e.to_string());
    fs::create_dir_all(dir).map_err(w)?;
    let hash = cfg.hash();
    let mut files: Vec<PathBuf> = Vec::new();

    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, cfg.to_toml()).map_err(w)?;
    files.push(cfg_path);

    let (d, p) = write_cube(dir, "ifcube", &out.cube, &hash).map_err(at(Stage::Write))?;
    files.extend([d, p]);

    let mut maps: Vec<(&str, &SpectralMap)> = vec![("rtm", &out.rtm), ("rtm_mti", &out.rtm_mti), ("dtm", &out.dtm)];
    if let Some(m) = &out.rtm_enhanced {
        maps.push(("rtm_enhanced", m));
    }
    if let Some(m) = &out.dtm_enhanced {
        maps.push(("dtm_enhanced", m));
    }
    for (stem, map) in maps {
        let (d, p) = write_map(dir, stem, map).map_err(at(Stage::Write))?;
        files.extend([d, p]);
        if render {
            let png = dir.join(format!("{stem}.png"));
            let side = render_map(&png, map).map_err(at(Stage::Write))?;
            files.extend([png, side]);
        }
    }
    let ridges = dir.join("ridges.csv");
    write_ridges(&ridges, &out.ridges).map_err(at(Stage::Write))?;
    files.push(ridges);

    let hash_entry = |p: &Path, rel: bool| -> Result<FileHash, StageError> {
        let name = if rel {
            p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned()
        } else {
            p.to_string_lossy().into_owned()
        };
        Ok(FileHash {
            path: name,
            sha256: sha256_file(p).map_err(w)?,
        })
    };
    let outputs = files.iter().map(|p| hash_entry(p, true)).collect::<Result<Vec<_>, _>>()?;
    let inputs = inputs.iter().map(|p| hash_entry(p, false)).collect::<Result<Vec<_>, _>>()?;

    let manifest = RunManifest {
        tool: "radhars".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash,
        seed: cfg.radar.seed,
        scenario: cfg.scenario.to_string(),
        multipath: cfg.multipath,
        wall_attenuation: cfg.wall_attenuation,
        inputs,
        outputs,
        timings: out.timings.clone(),
        path_log: out.path_log.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes()).map_err(w)?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, StageError> {
    let text = fs::read_to_string(path).map_err(|e| fail(Stage::Write, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fail(Stage::Write, format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioKind;
    use crate::gait::{synth_motion, MotionKind, MotionSpec};

    fn short_cfg(kind: ScenarioKind) -> SimConfig {
        let mut cfg = SimConfig::defaults(kind);
        cfg.radar.prf_hz = 512.0;
        cfg.radar.snr_db = f64::INFINITY;
        cfg.proc.stft_window_len = 64;
        cfg
    }

    fn walk(duration: f64) -> PoseSequence {
        let mut s = MotionSpec::new(MotionKind::Walk);
        s.duration_s = duration;
        synth_motion(&s).unwrap()
    }

    #[test]
    fn stages_run_and_log_paths() {
        let cfg = short_cfg(ScenarioKind::FreeSpace);
        let out = simulate(&cfg, &[walk(1.0)], None).unwrap();
        assert_eq!(out.cube.n_pulse, 512);
        assert_eq!(out.rtm.rows, 200);
        assert_eq!(out.rtm_mti.cols, 511);
        assert_eq!(out.path_log.count(PathKind::Direct), NUM_JOINTS);
        assert_eq!(out.path_log.joints.len(), NUM_JOINTS);
        assert!(out.timings.iter().any(|t| t.stage == Stage::Echo));
    }

    #[test]
    fn ttw_without_multipath_has_no_internal_paths() {
        let mut cfg = short_cfg(ScenarioKind::ThroughWall);
        cfg.radar.prf_hz = 128.0;
        cfg.proc.stft_window_len = 32;
        let out = simulate(&cfg, &[walk(1.0)], None).unwrap();
        assert_eq!(out.path_log.count(PathKind::WallInternal), NUM_JOINTS);
        cfg.multipath = false;
        let out = simulate(&cfg, &[walk(1.0)], None).unwrap();
        assert_eq!(out.path_log.count(PathKind::WallInternal), 0);
        assert_eq!(out.path_log.count(PathKind::WallDirect), NUM_JOINTS);
    }

    #[test]
    fn empty_input_is_a_pose_stage_error() {
        let cfg = short_cfg(ScenarioKind::FreeSpace);
        let e = simulate(&cfg, &[], None).unwrap_err();
        assert_eq!(e.stage, Stage::Pose);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = short_cfg(ScenarioKind::FreeSpace);
        let out = simulate(&cfg, &[walk(0.5)], None).unwrap();
        let m = write_run(dir.path(), &cfg, &out, &[], false).unwrap();
        let back = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(m, back);
        for f in ["ifcube.json", "ifcube.f32", "rtm.json", "rtm_mti.json", "dtm.json", "ridges.csv"] {
            assert!(m.output(f).is_some(), "{f}");
        }
    }
}
