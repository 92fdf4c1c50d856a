//! Global-nearest-neighbour box tracker.
//!
//! Each frame: predict every live track with a constant-velocity model, build
//! a `1 - IoU` cost matrix against the detections, solve the assignment, gate
//! hopeless pairs, then update, spawn and retire tracks.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::assignment::{solve_assignment, AssignmentResult};
use crate::config::TrackingConfig;

/// Axis-aligned box in center/size form, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox { cx, cy, w, h }
    }

    pub fn is_valid(&self) -> bool {
        [self.cx, self.cy, self.w, self.h].iter().all(|v| v.is_finite()) && self.w > 0.0 && self.h > 0.0
    }

    /// (x0, y0, x1, y1)
    pub fn corners(&self) -> [f64; 4] {
        [
            self.cx - 0.5 * self.w,
            self.cy - 0.5 * self.h,
            self.cx + 0.5 * self.w,
            self.cy + 0.5 * self.h,
        ]
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// `1 - |A ∩ B| / |A ∪ B|`, in [0, 1].
pub fn iou_cost(pred: &BBox, det: &BBox) -> f64 {
    let a = pred.corners();
    let b = det.corners();
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    // areas from the corners so identical boxes give inter == union exactly
    let area = |c: &[f64; 4]| (c[2] - c[0]) * (c[3] - c[1]);
    let union = area(&a) + area(&b) - inter;
    if union <= 0.0 {
        return 1.0;
    }
    (1.0 - inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

impl fmt::Display for TrackStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrackStatus::Tentative => "tentative",
            TrackStatus::Confirmed => "confirmed",
            TrackStatus::Deleted => "deleted",
        })
    }
}

/// Smallest box side a prediction may produce, pixels.
pub const MIN_BOX_SIDE: f64 = 1.0;

/// `[cx, cy, w, h, vcx, vcy, vw, vh]` plus lifecycle counters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub state: [f64; 8],
    pub id: u64,
    pub miss_count: u32,
    pub hit_count: u32,
    pub status: TrackStatus,
}

impl TrackState {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.state[0], self.state[1], self.state[2], self.state[3])
    }
}

/// Applies the block transition `[[I, dt I], [0, I]]` without clamping.
pub fn transition(state: &[f64; 8], dt: f64) -> [f64; 8] {
    let mut out = *state;
    for k in 0..4 {
        out[k] = state[k] + dt * state[k + 4];
    }
    out
}

/// Constant-velocity prediction; box sides are clamped to [`MIN_BOX_SIDE`].
pub fn predict_track(ts: &TrackState, dt: f64) -> TrackState {
    let mut state = transition(&ts.state, dt);
    state[2] = state[2].max(MIN_BOX_SIDE);
    state[3] = state[3].max(MIN_BOX_SIDE);
    TrackState {
        state,
        ..ts.clone()
    }
}

/// Live tracks of one detection stream. Ids are never reused.
#[derive(Debug, Clone)]
pub struct TrackSet {
    pub tracks: Vec<TrackState>,
    pub params: TrackingConfig,
    next_id: u64,
}

impl Default for TrackSet {
    fn default() -> Self {
        Self::new(TrackingConfig::default())
    }
}

/// Per-step bookkeeping, mostly for logs and tests.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub assignment: AssignmentResult,
    pub spawned: Vec<u64>,
    pub deleted: Vec<u64>,
}

impl TrackSet {
    pub fn new(params: TrackingConfig) -> Self {
        TrackSet {
            tracks: Vec::new(),
            params,
            next_id: 1,
        }
    }

    pub fn live(&self) -> impl Iterator<Item = &TrackState> {
        self.tracks.iter().filter(|t| t.status != TrackStatus::Deleted)
    }

    fn spawn(&mut self, det: &BBox) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let status = if self.params.confirm_hits <= 1 {
            TrackStatus::Confirmed
        } else {
            TrackStatus::Tentative
        };
        self.tracks.push(TrackState {
            state: [det.cx, det.cy, det.w, det.h, 0.0, 0.0, 0.0, 0.0],
            id,
            miss_count: 0,
            hit_count: 1,
            status,
        });
        id
    }

    /// Advances the tracker by one frame. Tracks deleted in the previous step
    /// are purged first; tracks deleted in this step stay visible until the next.
    pub fn step(&mut self, detections: &[BBox], dt: f64) -> StepReport {
        self.tracks.retain(|t| t.status != TrackStatus::Deleted);

        let previous: Vec<[f64; 8]> = self.tracks.iter().map(|t| t.state).collect();
        for t in self.tracks.iter_mut() {
            *t = predict_track(t, dt);
        }

        let cost: Vec<Vec<f64>> = self
            .tracks
            .iter()
            .map(|t| {
                let pb = t.bbox();
                detections.iter().map(|d| iou_cost(&pb, d)).collect()
            })
            .collect();
        let assignment = if self.tracks.is_empty() {
            AssignmentResult {
                pairs: Vec::new(),
                unmatched_rows: Vec::new(),
                unmatched_cols: (0..detections.len()).collect(),
                total_cost: 0.0,
            }
        } else {
            solve_assignment(&cost).gated(&cost, self.params.gate_cost)
        };

        for &(m, p) in &assignment.pairs {
            let det = &detections[p];
            let old = previous[m];
            let t = &mut self.tracks[m];
            let pos = [det.cx, det.cy, det.w, det.h];
            for k in 0..4 {
                t.state[k + 4] = (pos[k] - old[k]) / dt;
                t.state[k] = pos[k];
            }
            t.miss_count = 0;
            t.hit_count += 1;
            if t.status == TrackStatus::Tentative && t.hit_count >= self.params.confirm_hits {
                t.status = TrackStatus::Confirmed;
            }
        }

        let mut deleted = Vec::new();
        for &m in &assignment.unmatched_rows {
            let t = &mut self.tracks[m];
            t.miss_count += 1;
            t.hit_count = 0;
            let drop = match t.status {
                // tentative tracks must be matched on consecutive frames
                TrackStatus::Tentative => true,
                TrackStatus::Confirmed => t.miss_count > self.params.delete_misses,
                TrackStatus::Deleted => false,
            };
            if drop {
                t.status = TrackStatus::Deleted;
                deleted.push(t.id);
            }
        }

        let spawned = assignment
            .unmatched_cols
            .iter()
            .map(|&p| self.spawn(&detections[p]))
            .collect();

        StepReport {
            assignment,
            spawned,
            deleted,
        }
    }
}

/// Free-function form of [`TrackSet::step`].
pub fn step_tracker(tracks: &mut TrackSet, detections: &[BBox], dt: f64) -> StepReport {
    tracks.step(detections, dt)
}

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Parses `frame_index cx cy w h` lines into per-frame box lists. Frames with
/// no boxes between the first and last index are empty lists; a bare
/// `frame_index` line declares an empty frame explicitly.
pub fn parse_detections(text: &str) -> Result<Vec<Vec<BBox>>, DetectionError> {
    let mut frames: Vec<Vec<BBox>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let bad = |msg: String| DetectionError::Malformed { line: line_no, msg };
        let frame: usize = toks[0]
            .parse()
            .map_err(|_| bad(format!("bad frame index {:?}", toks[0])))?;
        if frame >= frames.len() {
            frames.resize_with(frame + 1, Vec::new);
        }
        match toks.len() {
            1 => {}
            5 => {
                let v: Vec<f64> = toks[1..]
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number {t:?}"))))
                    .collect::<Result<_, _>>()?;
                let b = BBox::new(v[0], v[1], v[2], v[3]);
                if !b.is_valid() {
                    return Err(bad("box needs finite center and positive size".into()));
                }
                frames[frame].push(b);
            }
            n => return Err(bad(format!("expected 5 fields, found {n}"))),
        }
    }
    Ok(frames)
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Vec<BBox>>, DetectionError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DetectionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_detections(&text)
}
