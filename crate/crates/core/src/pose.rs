//! Skeleton types and the pose / pool text formats.
//!
//! Pose file:
//!
//! ```text
//! # comments allowed anywhere
//! fps 30
//! height_m 1.75
//! mode metric3d            # or pixels2d
//! origin_m 0 3 0           # optional, initial absolute position (pixels2d only)
//! frame 0.0 x1 y1 z1 ... x14 y14 z14
//! frame 0.0333 ...
//! ```
//!
//! Each `frame` line carries a timestamp and 14 joints (3 values each in
//! metric3d mode, 2 in pixels2d mode).
//!
//! Pool file:
//!
//! ```text
//! count 200
//! joints 14
//! x1 y1 d1 ... x14 y14 d14
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub const NUM_JOINTS: usize = 14;

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "head",
    "neck",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_hip",
    "r_knee",
    "r_ankle",
    "l_hip",
    "l_knee",
    "l_ankle",
];

/// Zero-based joint indices.
pub mod joint {
    pub const HEAD: usize = 0;
    pub const NECK: usize = 1;
    pub const R_SHOULDER: usize = 2;
    pub const R_ELBOW: usize = 3;
    pub const R_WRIST: usize = 4;
    pub const L_SHOULDER: usize = 5;
    pub const L_ELBOW: usize = 6;
    pub const L_WRIST: usize = 7;
    pub const R_HIP: usize = 8;
    pub const R_KNEE: usize = 9;
    pub const R_ANKLE: usize = 10;
    pub const L_HIP: usize = 11;
    pub const L_KNEE: usize = 12;
    pub const L_ANKLE: usize = 13;
}

pub type Vec3 = [f64; 3];

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("skeleton has zero pixel height")]
    ZeroPixelHeight,
    #[error("pose pool is empty")]
    EmptyPool,
    #[error("{0}")]
    Invalid(String),
}

/// 14 joints in pixel coordinates (x right, y down).
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton2D {
    pub joints: [[f64; 2]; NUM_JOINTS],
}

impl Skeleton2D {
    pub fn new(joints: [[f64; 2]; NUM_JOINTS]) -> Result<Self, PoseError> {
        let s = Skeleton2D { joints };
        if s.joints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PoseError::Invalid("non-finite pixel coordinate".into()));
        }
        if s.pixel_height() <= 0.0 {
            return Err(PoseError::ZeroPixelHeight);
        }
        Ok(s)
    }

    /// max(y) - min(y) over all joints.
    pub fn pixel_height(&self) -> f64 {
        let (lo, hi) = self
            .joints
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
                (lo.min(j[1]), hi.max(j[1]))
            });
        hi - lo
    }

    pub fn hip_center(&self) -> [f64; 2] {
        let (r, l) = (self.joints[joint::R_HIP], self.joints[joint::L_HIP]);
        [0.5 * (r[0] + l[0]), 0.5 * (r[1] + l[1])]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut joints = self.joints;
        for j in joints.iter_mut() {
            j[0] *= s;
            j[1] *= s;
        }
        Skeleton2D { joints }
    }
}

/// Metric skeleton with its absolute anchor and timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton3D {
    pub joints_m: [Vec3; NUM_JOINTS],
    pub abs_pos_m: Vec3,
    pub t: f64,
}

impl Skeleton3D {
    pub fn min_ankle_z(&self) -> f64 {
        self.joints_m[joint::R_ANKLE][2].min(self.joints_m[joint::L_ANKLE][2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseMode {
    Pixels2D,
    Metric3D,
}

impl PoseMode {
    fn label(self) -> &'static str {
        match self {
            PoseMode::Pixels2D => "pixels2d",
            PoseMode::Metric3D => "metric3d",
        }
    }

    fn dims(self) -> usize {
        match self {
            PoseMode::Pixels2D => 2,
            PoseMode::Metric3D => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frames {
    Pixels(Vec<Skeleton2D>),
    Metric(Vec<[Vec3; NUM_JOINTS]>),
}

/// One target's timestamped frames.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    pub fps: f64,
    pub height_m: f64,
    /// Initial absolute position for the pixel pipeline.
    pub origin_m: Vec3,
    pub times: Vec<f64>,
    pub frames: Frames,
}

impl PoseSequence {
    pub fn metric(fps: f64, height_m: f64, times: Vec<f64>, frames: Vec<[Vec3; NUM_JOINTS]>) -> Self {
        PoseSequence {
            fps,
            height_m,
            origin_m: [0.0; 3],
            times,
            frames: Frames::Metric(frames),
        }
    }

    pub fn mode(&self) -> PoseMode {
        match self.frames {
            Frames::Pixels(_) => PoseMode::Pixels2D,
            Frames::Metric(_) => PoseMode::Metric3D,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<(), PoseError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(PoseError::Invalid("fps must be > 0".into()));
        }
        if !(self.height_m.is_finite() && self.height_m > 0.0) {
            return Err(PoseError::Invalid("height_m must be > 0".into()));
        }
        let n = match &self.frames {
            Frames::Pixels(f) => f.len(),
            Frames::Metric(f) => f.len(),
        };
        if n != self.times.len() {
            return Err(PoseError::Invalid("frame/time count mismatch".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PoseError::Invalid("timestamps must strictly increase".into()));
        }
        if let Frames::Metric(f) = &self.frames {
            if f.iter().flatten().flatten().any(|v| !v.is_finite()) {
                return Err(PoseError::Invalid("non-finite coordinate".into()));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fps {}", self.fps);
        let _ = writeln!(s, "height_m {}", self.height_m);
        let _ = writeln!(s, "mode {}", self.mode().label());
        if self.mode() == PoseMode::Pixels2D {
            let o = self.origin_m;
            let _ = writeln!(s, "origin_m {} {} {}", o[0], o[1], o[2]);
        }
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(s, "frame {t}");
            match &self.frames {
                Frames::Pixels(f) => {
                    for j in &f[i].joints {
                        let _ = write!(s, " {} {}", j[0], j[1]);
                    }
                }
                Frames::Metric(f) => {
                    for j in &f[i] {
                        let _ = write!(s, " {} {} {}", j[0], j[1], j[2]);
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, PoseError> {
        let mut fps = None;
        let mut height = None;
        let mut mode = None;
        let mut origin = [0.0; 3];
        let mut times = Vec::new();
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (ln, line) in numbered_lines(text) {
            let mut it = line.split_whitespace();
            let key = it.next().unwrap();
            let rest: Vec<&str> = it.collect();
            match key {
                "fps" => fps = Some(one_number(ln, &rest)?),
                "height_m" => height = Some(one_number(ln, &rest)?),
                "mode" => {
                    mode = Some(match rest.as_slice() {
                        ["pixels2d"] => PoseMode::Pixels2D,
                        ["metric3d"] => PoseMode::Metric3D,
                        _ => return Err(perr(ln, "mode must be pixels2d or metric3d")),
                    })
                }
                "origin_m" => {
                    let v = numbers(ln, &rest)?;
                    if v.len() != 3 {
                        return Err(perr(ln, "origin_m needs 3 values"));
                    }
                    origin = [v[0], v[1], v[2]];
                }
                "frame" => {
                    let v = numbers(ln, &rest)?;
                    if v.is_empty() {
                        return Err(perr(ln, "frame without timestamp"));
                    }
                    times.push(v[0]);
                    rows.push((ln, v[1..].to_vec()));
                }
                other => return Err(perr(ln, format!("unknown key {other:?}"))),
            }
        }
        let fps = fps.ok_or_else(|| perr(0, "missing fps header"))?;
        let height_m = height.ok_or_else(|| perr(0, "missing height_m header"))?;
        let mode = mode.ok_or_else(|| perr(0, "missing mode header"))?;
        let want = NUM_JOINTS * mode.dims();
        for (ln, r) in &rows {
            if r.len() != want {
                return Err(perr(
                    *ln,
                    format!("expected {want} coordinates, found {}", r.len()),
                ));
            }
        }
        let frames = match mode {
            PoseMode::Pixels2D => Frames::Pixels(
                rows.iter()
                    .map(|(ln, r)| {
                        let mut j = [[0.0; 2]; NUM_JOINTS];
                        for (k, c) in r.chunks_exact(2).enumerate() {
                            j[k] = [c[0], c[1]];
                        }
                        Skeleton2D::new(j).map_err(|e| perr(*ln, e.to_string()))
                    })
                    .collect::<Result<_, _>>()?,
            ),
            PoseMode::Metric3D => Frames::Metric(
                rows.iter()
                    .map(|(_, r)| {
                        let mut j = [[0.0; 3]; NUM_JOINTS];
                        for (k, c) in r.chunks_exact(3).enumerate() {
                            j[k] = [c[0], c[1], c[2]];
                        }
                        j
                    })
                    .collect(),
            ),
        };
        let seq = PoseSequence {
            fps,
            height_m,
            origin_m: origin,
            times,
            frames,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PoseError> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PoseError> {
        write(path.as_ref(), &self.to_text())
    }
}

/// Library of unit-scale 3D poses and their depth-dropped 2D projections.
///
/// Columns are (image x, image y, depth). Matching happens on a normalized
/// copy of the 2D entries (hip midpoint at the origin, unit pixel height).
#[derive(Debug, Clone)]
pub struct PosePool {
    entries_3d: Vec<[Vec3; NUM_JOINTS]>,
    entries_2d: Vec<[[f64; 2]; NUM_JOINTS]>,
    normalized_2d: Vec<[[f64; 2]; NUM_JOINTS]>,
}

impl PosePool {
    pub fn new(entries_3d: Vec<[Vec3; NUM_JOINTS]>) -> Result<Self, PoseError> {
        if entries_3d.is_empty() {
            return Err(PoseError::EmptyPool);
        }
        let entries_2d: Vec<_> = entries_3d
            .iter()
            .map(|e| {
                let mut p = [[0.0; 2]; NUM_JOINTS];
                for (d, s) in p.iter_mut().zip(e) {
                    *d = [s[0], s[1]];
                }
                p
            })
            .collect();
        let normalized_2d = entries_2d
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Skeleton2D::new(*p)
                    .map(|s| normalize_query(&s))
                    .map_err(|e| PoseError::Invalid(format!("pool entry {i}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(PosePool {
            entries_3d,
            entries_2d,
            normalized_2d,
        })
    }

    pub fn len(&self) -> usize {
        self.entries_3d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries_3d.is_empty()
    }

    pub fn entry_3d(&self, i: usize) -> &[Vec3; NUM_JOINTS] {
        &self.entries_3d[i]
    }

    pub fn entry_2d(&self, i: usize) -> &[[f64; 2]; NUM_JOINTS] {
        &self.entries_2d[i]
    }

    pub(crate) fn normalized_2d(&self) -> &[[[f64; 2]; NUM_JOINTS]] {
        &self.normalized_2d
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("count {}\njoints {}\n", self.len(), NUM_JOINTS);
        for e in &self.entries_3d {
            let row: Vec<String> = e.iter().flatten().map(|v| v.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, PoseError> {
        let mut count = None;
        let mut entries = Vec::new();
        for (ln, line) in numbered_lines(text) {
            let mut it = line.split_whitespace();
            let first = it.next().unwrap();
            let rest: Vec<&str> = it.collect();
            match first {
                "count" => count = Some(one_number(ln, &rest)? as usize),
                "joints" => {
                    if one_number(ln, &rest)? as usize != NUM_JOINTS {
                        return Err(perr(ln, "only 14-joint pools are supported"));
                    }
                }
                _ => {
                    let v = numbers(ln, &line.split_whitespace().collect::<Vec<_>>())?;
                    if v.len() != NUM_JOINTS * 3 {
                        return Err(perr(ln, format!("expected 42 values, found {}", v.len())));
                    }
                    let mut e = [[0.0; 3]; NUM_JOINTS];
                    for (k, c) in v.chunks_exact(3).enumerate() {
                        e[k] = [c[0], c[1], c[2]];
                    }
                    entries.push(e);
                }
            }
        }
        let count = count.ok_or_else(|| perr(0, "missing count header"))?;
        if count != entries.len() {
            return Err(perr(
                0,
                format!("header says {count} entries, found {}", entries.len()),
            ));
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PoseError> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PoseError> {
        write(path.as_ref(), &self.to_text())
    }
}

/// Hip midpoint to the origin, divided by pixel height.
pub fn normalize_query(p: &Skeleton2D) -> [[f64; 2]; NUM_JOINTS] {
    let h = p.pixel_height();
    let c = p.hip_center();
    let mut out = p.joints;
    for j in out.iter_mut() {
        j[0] = (j[0] - c[0]) / h;
        j[1] = (j[1] - c[1]) / h;
    }
    out
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap().trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn perr(line: usize, msg: impl Into<String>) -> PoseError {
    PoseError::Parse {
        line,
        msg: msg.into(),
    }
}

fn numbers(line: usize, toks: &[&str]) -> Result<Vec<f64>, PoseError> {
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(line, format!("bad number {t:?}")))
        })
        .collect()
}

fn one_number(line: usize, toks: &[&str]) -> Result<f64, PoseError> {
    match numbers(line, toks)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(perr(line, "expected exactly one value")),
    }
}

fn read(path: &Path) -> Result<String, PoseError> {
    std::fs::read_to_string(path).map_err(|source| PoseError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), PoseError> {
    std::fs::write(path, text).map_err(|source| PoseError::Io {
        path: path.display().to_string(),
        source,
    })
}
