//! Closed-form synthetic motion clips.
//!
//! World frame: x lateral, y away from the radar, z up. Every trajectory is
//! an analytic function of time so Doppler ground truth can be derived by
//! differentiation.

use std::f64::consts::PI;

use thiserror::Error;

use crate::pose::{joint, PoseError, PosePool, PoseSequence, Skeleton2D, Vec3, NUM_JOINTS};

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("invalid motion spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionKind {
    /// All joints fixed at `start_m`.
    StaticPoint,
    /// All joints at one point moving horizontally toward the z axis at
    /// `speed_mps` (negative recedes).
    RadialConstV,
    /// All joints at the tip of a pendulum hanging from `start_m`, length
    /// `limb_length_m`, arc amplitude `amplitude_m`, frequency `freq_hz`,
    /// swinging in the y-z plane.
    PendulumLimb,
    /// Skeleton walking toward the radar (along -y) from ground point
    /// `start_m`.
    Walk,
    /// Standing skeleton at ground point `start_m` that sits down over the
    /// middle third of the clip.
    SitDown,
}

impl std::str::FromStr for MotionKind {
    type Err = MotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "static" | "static-point" => MotionKind::StaticPoint,
            "radial" | "radial-const-v" => MotionKind::RadialConstV,
            "pendulum" | "pendulum-limb" => MotionKind::PendulumLimb,
            "walk" => MotionKind::Walk,
            "sit" | "sit-down" => MotionKind::SitDown,
            _ => return Err(MotionError::Invalid(format!("unknown motion kind {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSpec {
    pub kind: MotionKind,
    pub duration_s: f64,
    pub fps: f64,
    pub start_m: Vec3,
    pub speed_mps: f64,
    /// Walk: step frequency (heel strikes per second). Pendulum: swing
    /// frequency.
    pub freq_hz: f64,
    pub amplitude_m: f64,
    pub limb_length_m: f64,
    pub height_m: f64,
}

impl MotionSpec {
    pub fn new(kind: MotionKind) -> Self {
        MotionSpec {
            kind,
            duration_s: 4.0,
            fps: 30.0,
            start_m: match kind {
                MotionKind::Walk | MotionKind::SitDown => [0.0, 5.0, 0.0],
                _ => [0.0, 3.0, 1.5],
            },
            speed_mps: match kind {
                MotionKind::Walk => 1.2,
                _ => 1.0,
            },
            freq_hz: 1.8,
            amplitude_m: 0.3,
            limb_length_m: 0.6,
            height_m: 1.75,
        }
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        let bad = |m: &str| Err(MotionError::Invalid(m.to_string()));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad("duration must be > 0");
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad("fps must be > 0");
        }
        if self.start_m.iter().any(|v| !v.is_finite()) {
            return bad("start position must be finite");
        }
        if !self.speed_mps.is_finite() || !self.amplitude_m.is_finite() {
            return bad("speed and amplitude must be finite");
        }
        if !(self.height_m.is_finite() && self.height_m > 0.0) {
            return bad("height must be > 0");
        }
        match self.kind {
            MotionKind::Walk | MotionKind::PendulumLimb if !(self.freq_hz.is_finite() && self.freq_hz > 0.0) => {
                bad("frequency must be > 0")
            }
            MotionKind::PendulumLimb if !(self.limb_length_m.is_finite() && self.limb_length_m > 0.0) => {
                bad("limb length must be > 0")
            }
            _ => Ok(()),
        }
    }

    /// Frame times `k / fps` for `k = 0..=round(duration * fps)`.
    pub fn frame_times(&self) -> Vec<f64> {
        let n = (self.duration_s * self.fps).round() as usize;
        (0..=n).map(|k| k as f64 / self.fps).collect()
    }
}

/// Relative speed ripple of the walking torso, one cycle per step.
pub const WALK_SPEED_RIPPLE: f64 = 0.12;

/// Body proportions as fractions of standing height.
mod body {
    pub const LEG: f64 = 0.53;
    pub const SHOULDER_Z: f64 = 0.82;
    pub const NECK_Z: f64 = 0.87;
    pub const HEAD_Z: f64 = 0.94;
    pub const UPPER_ARM: f64 = 0.19;
    pub const FOREARM: f64 = 0.16;
    pub const HIP_HALF_WIDTH: f64 = 0.057;
    pub const SHOULDER_HALF_WIDTH: f64 = 0.115;
    pub const SEAT_DROP: f64 = 0.27;
}

/// Walking kinematics at time `t`.
///
/// Legs are straight compass legs of length `L = 0.53 H` swinging by
/// `theta(t) = Theta sin(pi f t)` (right) and `-theta` (left), so each leg
/// completes one cycle every two steps. The swing amplitude is chosen so the
/// stance foot is momentarily at rest at mid-stance (`L Theta pi f = v`).
/// The hip rides at `L cos theta`, which keeps the lower ankle on the ground.
/// Arms swing against the legs.
#[derive(Debug, Clone, Copy)]
pub struct WalkModel {
    pub start: Vec3,
    pub speed: f64,
    pub step_hz: f64,
    pub height: f64,
}

impl WalkModel {
    pub fn from_spec(spec: &MotionSpec) -> Self {
        WalkModel {
            start: spec.start_m,
            speed: spec.speed_mps,
            step_hz: spec.freq_hz,
            height: spec.height_m,
        }
    }

    pub fn leg_len(&self) -> f64 {
        body::LEG * self.height
    }

    pub fn swing_amplitude(&self) -> f64 {
        (self.speed.abs() / (self.leg_len() * PI * self.step_hz)).min(0.6)
    }

    /// Forward distance travelled by the torso.
    pub fn forward(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.step_hz;
        self.speed * (t + WALK_SPEED_RIPPLE / w * (w * t).sin())
    }

    /// Torso forward speed.
    pub fn torso_speed(&self, t: f64) -> f64 {
        self.speed * (1.0 + WALK_SPEED_RIPPLE * (2.0 * PI * self.step_hz * t).cos())
    }

    /// Right-leg swing angle (positive = foot ahead of the hip).
    pub fn theta(&self, t: f64) -> f64 {
        self.swing_amplitude() * (PI * self.step_hz * t).sin()
    }

    pub fn joints(&self, t: f64) -> [Vec3; NUM_JOINTS] {
        let h = self.height;
        let l = self.leg_len();
        let th = self.theta(t);
        let fwd = self.forward(t);
        let hip_z = l * th.cos();
        let cx = self.start[0];
        let cy = self.start[1] - fwd;
        // facing -y, the subject's right is -x
        let at = |dx: f64, dfwd: f64, z: f64| -> Vec3 { [cx + dx, cy - dfwd, z] };
        let torso_z = |frac: f64| hip_z + (frac - body::LEG) * h;

        let mut j = [[0.0; 3]; NUM_JOINTS];
        j[joint::HEAD] = at(0.0, 0.0, torso_z(body::HEAD_Z));
        j[joint::NECK] = at(0.0, 0.0, torso_z(body::NECK_Z));
        let sw = body::SHOULDER_HALF_WIDTH * h;
        let hw = body::HIP_HALF_WIDTH * h;
        let sz = torso_z(body::SHOULDER_Z);
        let (ua, fa) = (body::UPPER_ARM * h, body::FOREARM * h);
        for (dx, phi, sh, el, wr) in [
            (-sw, -th, joint::R_SHOULDER, joint::R_ELBOW, joint::R_WRIST),
            (sw, th, joint::L_SHOULDER, joint::L_ELBOW, joint::L_WRIST),
        ] {
            let a = 0.8 * phi;
            j[sh] = at(dx, 0.0, sz);
            j[el] = at(dx, ua * a.sin(), sz - ua * a.cos());
            j[wr] = at(dx, (ua + fa) * a.sin(), sz - (ua + fa) * a.cos());
        }
        for (dx, a, hip, knee, ankle) in [
            (-hw, th, joint::R_HIP, joint::R_KNEE, joint::R_ANKLE),
            (hw, -th, joint::L_HIP, joint::L_KNEE, joint::L_ANKLE),
        ] {
            j[hip] = at(dx, 0.0, hip_z);
            j[knee] = at(dx, 0.5 * l * a.sin(), hip_z - 0.5 * l * a.cos());
            j[ankle] = at(dx, l * a.sin(), hip_z - l * a.cos());
        }
        j
    }
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

fn standing(ground: Vec3, h: f64) -> [Vec3; NUM_JOINTS] {
    WalkModel {
        start: ground,
        speed: 0.0,
        step_hz: 1.0,
        height: h,
    }
    .joints(0.0)
}

/// Position of every joint at time `t`.
pub fn joints_at(spec: &MotionSpec, t: f64) -> [Vec3; NUM_JOINTS] {
    let p = spec.start_m;
    match spec.kind {
        MotionKind::StaticPoint => [p; NUM_JOINTS],
        MotionKind::RadialConstV => {
            let r = p[0].hypot(p[1]);
            let (ux, uy) = if r > 0.0 { (p[0] / r, p[1] / r) } else { (0.0, 1.0) };
            let d = spec.speed_mps * t;
            [[p[0] - ux * d, p[1] - uy * d, p[2]]; NUM_JOINTS]
        }
        MotionKind::PendulumLimb => {
            let l = spec.limb_length_m;
            let th = spec.amplitude_m / l * (2.0 * PI * spec.freq_hz * t).sin();
            [[p[0], p[1] + l * th.sin(), p[2] - l * th.cos()]; NUM_JOINTS]
        }
        MotionKind::Walk => WalkModel::from_spec(spec).joints(t),
        MotionKind::SitDown => {
            let mut j = standing(p, spec.height_m);
            let u = (t / spec.duration_s - 1.0 / 3.0) * 3.0;
            let drop = body::SEAT_DROP * spec.height_m * smoothstep(u);
            for k in 0..NUM_JOINTS {
                if !matches!(
                    k,
                    joint::R_KNEE | joint::L_KNEE | joint::R_ANKLE | joint::L_ANKLE
                ) {
                    j[k][2] -= drop;
                }
            }
            j
        }
    }
}

/// Metric-mode pose sequence sampled at `k / fps`.
pub fn synth_motion(spec: &MotionSpec) -> Result<PoseSequence, MotionError> {
    spec.validate()?;
    let times = spec.frame_times();
    let frames = times.iter().map(|&t| joints_at(spec, t)).collect();
    Ok(PoseSequence::metric(spec.fps, spec.height_m, times, frames))
}

/// Orthographic camera at the radar looking along +y: image x = world x,
/// image y = -z (down), both scaled by `px_per_m` and offset to `center_px`.
pub fn project_to_pixels(frame: &[Vec3; NUM_JOINTS], px_per_m: f64, center_px: [f64; 2]) -> Result<Skeleton2D, PoseError> {
    Skeleton2D::new(frame.map(|p| [center_px[0] + p[0] * px_per_m, center_px[1] - p[2] * px_per_m]))
}

/// Unit-height pool of `n` walking poses spread over one stride, columns
/// (image x, image y, depth).
pub fn synthetic_pool(n: usize) -> Result<PosePool, PoseError> {
    let walk = WalkModel {
        start: [0.0; 3],
        speed: 1.2,
        step_hz: 1.8,
        height: 1.0,
    };
    let stride = 2.0 / walk.step_hz;
    let entries = (0..n.max(1))
        .map(|i| {
            let t = stride * i as f64 / n.max(1) as f64;
            let y0 = -walk.forward(t);
            walk.joints(t).map(|p| [p[0], -p[2], p[1] - y0])
        })
        .collect();
    PosePool::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Frames;

    fn frames(seq: &PoseSequence) -> &Vec<[Vec3; NUM_JOINTS]> {
        match &seq.frames {
            Frames::Metric(f) => f,
            Frames::Pixels(_) => panic!("expected metric frames"),
        }
    }

    #[test]
    fn static_point_is_constant() {
        let mut s = MotionSpec::new(MotionKind::StaticPoint);
        s.start_m = [0.0, 3.0, 1.0];
        let seq = synth_motion(&s).unwrap();
        assert!(frames(&seq).iter().flatten().all(|p| *p == [0.0, 3.0, 1.0]));
    }

    #[test]
    fn radial_moves_toward_origin() {
        let mut s = MotionSpec::new(MotionKind::RadialConstV);
        s.start_m = [0.0, 5.0, 1.0];
        s.duration_s = 1.0;
        let seq = synth_motion(&s).unwrap();
        assert_eq!(seq.len(), 31);
        let f = frames(&seq);
        for (k, fr) in f.iter().enumerate() {
            let want = 5.0 - k as f64 / 30.0;
            assert!((fr[0][1] - want).abs() < 1e-12);
        }
        assert!((f[30][0][1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn walk_is_grounded() {
        let s = MotionSpec::new(MotionKind::Walk);
        let seq = synth_motion(&s).unwrap();
        for fr in frames(&seq) {
            let z = fr[joint::R_ANKLE][2].min(fr[joint::L_ANKLE][2]);
            assert!(z.abs() < 1e-9, "{z}");
        }
    }

    #[test]
    fn sit_down_drops_torso_only_in_middle_third() {
        let mut s = MotionSpec::new(MotionKind::SitDown);
        s.duration_s = 3.0;
        let a = joints_at(&s, 0.5);
        let b = joints_at(&s, 0.99);
        let c = joints_at(&s, 2.5);
        assert_eq!(a, b);
        let drop = a[joint::R_HIP][2] - c[joint::R_HIP][2];
        assert!((drop - body::SEAT_DROP * 1.75).abs() < 1e-12);
        assert_eq!(a[joint::R_ANKLE], c[joint::R_ANKLE]);
    }

    #[test]
    fn invalid_specs() {
        let mut s = MotionSpec::new(MotionKind::Walk);
        s.duration_s = 0.0;
        assert!(synth_motion(&s).is_err());
        let mut s = MotionSpec::new(MotionKind::PendulumLimb);
        s.limb_length_m = 0.0;
        assert!(synth_motion(&s).is_err());
    }

    #[test]
    fn pool_has_requested_size() {
        let pool = synthetic_pool(16).unwrap();
        assert_eq!(pool.len(), 16);
    }
}
