//! 2D pixel skeletons to grounded metric 3D skeletons, and per-joint Kalman
//! smoothing.
//!
//! Output frame: x = image horizontal, y = depth (away from the radar),
//! z = up. The pipeline per frame is
//! [`nearest_match`] -> [`scale_to_metric`] -> [`anchor_pose`].

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::pose::{joint, normalize_query, Frames, PoseError, PosePool, PoseSequence, Skeleton2D, Skeleton3D, Vec3, NUM_JOINTS};

/// Index of the pool entry nearest to `p2d` (Frobenius distance over the
/// normalized 2D joints) and that distance. Ties go to the lowest index.
pub fn nearest_match(p2d: &Skeleton2D, pool: &PosePool) -> Result<(usize, f64), PoseError> {
    if pool.is_empty() {
        return Err(PoseError::EmptyPool);
    }
    let q = normalize_query(p2d);
    let mut best = (0usize, f64::INFINITY);
    for (i, e) in pool.normalized_2d().iter().enumerate() {
        let d2: f64 = q
            .iter()
            .zip(e)
            .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .sum();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    Ok((best.0, best.1.sqrt()))
}

/// Raw metric pose `[x, image_y, depth]` per joint plus the scale factor
/// alpha = h_real / h_pixel (meters per pixel).
///
/// Image-plane columns are the pixel coordinates times alpha; the depth column
/// is the pool depth, centered on its mean, times alpha and `depth_ratio`.
pub fn scale_to_metric(
    p2d: &Skeleton2D,
    p3d_unit: &[Vec3; NUM_JOINTS],
    h_real: f64,
    depth_ratio: f64,
) -> Result<([Vec3; NUM_JOINTS], f64), PoseError> {
    let h_pixel = p2d.pixel_height();
    if !(h_pixel > 0.0) {
        return Err(PoseError::ZeroPixelHeight);
    }
    let alpha = h_real / h_pixel;
    let mean_depth = p3d_unit.iter().map(|j| j[2]).sum::<f64>() / NUM_JOINTS as f64;
    let mut out = [[0.0; 3]; NUM_JOINTS];
    for (k, o) in out.iter_mut().enumerate() {
        *o = [
            p2d.joints[k][0] * alpha,
            p2d.joints[k][1] * alpha,
            (p3d_unit[k][2] - mean_depth) * alpha * depth_ratio,
        ];
    }
    Ok((out, alpha))
}

/// Result of [`anchor_pose`]: the skeleton and the hip center in pixels, to
/// be passed back as `prev_hip_px` on the next frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchored {
    pub skeleton: Skeleton3D,
    pub hip_px: [f64; 2],
}

/// Hip-centers the raw pose, flips image y into z-up, grounds the lower ankle
/// at z = 0 and adds the absolute position.
///
/// `abs_pos` is the previous frame's absolute position. Its x advances by the
/// hip's horizontal pixel displacement times `alpha`; y and z are held.
pub fn anchor_pose(
    raw: &[Vec3; NUM_JOINTS],
    prev_hip_px: Option<[f64; 2]>,
    abs_pos: Vec3,
    alpha: f64,
    t: f64,
) -> Anchored {
    let hip = [0, 1, 2].map(|c| 0.5 * (raw[joint::R_HIP][c] + raw[joint::L_HIP][c]));
    let mut rel = [[0.0; 3]; NUM_JOINTS];
    for (r, p) in rel.iter_mut().zip(raw) {
        *r = [p[0] - hip[0], p[2] - hip[2], -(p[1] - hip[1])];
    }
    let z_offset = rel[joint::R_ANKLE][2].min(rel[joint::L_ANKLE][2]);
    for r in rel.iter_mut() {
        r[2] -= z_offset;
    }

    let hip_px = [hip[0] / alpha, hip[1] / alpha];
    let mut abs = abs_pos;
    if let Some(prev) = prev_hip_px {
        abs[0] += (hip_px[0] - prev[0]) * alpha;
    }
    let mut joints_m = rel;
    for j in joints_m.iter_mut() {
        for c in 0..3 {
            j[c] += abs[c];
        }
    }
    Anchored {
        skeleton: Skeleton3D {
            joints_m,
            abs_pos_m: abs,
            t,
        },
        hip_px,
    }
}

/// Lifts a pixel sequence to metric skeletons (unsmoothed).
pub fn lift_sequence(
    p2d: &[Skeleton2D],
    times: &[f64],
    pool: &PosePool,
    h_real: f64,
    depth_ratio: f64,
    origin: Vec3,
) -> Result<Vec<Skeleton3D>, PoseError> {
    let mut out = Vec::with_capacity(p2d.len());
    let mut prev_hip = None;
    let mut abs = origin;
    for (s, &t) in p2d.iter().zip(times) {
        let (i, _) = nearest_match(s, pool)?;
        let (raw, alpha) = scale_to_metric(s, pool.entry_3d(i), h_real, depth_ratio)?;
        let a = anchor_pose(&raw, prev_hip, abs, alpha, t);
        abs = a.skeleton.abs_pos_m;
        prev_hip = Some(a.hip_px);
        out.push(a.skeleton);
    }
    Ok(out)
}

/// Metric skeletons of a pose sequence, lifting pixel frames through `pool`.
pub fn sequence_to_metric(
    seq: &PoseSequence,
    pool: Option<&PosePool>,
    depth_ratio: f64,
) -> Result<Vec<Skeleton3D>, PoseError> {
    match &seq.frames {
        Frames::Metric(frames) => Ok(frames
            .iter()
            .zip(&seq.times)
            .map(|(j, &t)| {
                let hip = [0, 1, 2].map(|c| 0.5 * (j[joint::R_HIP][c] + j[joint::L_HIP][c]));
                Skeleton3D {
                    joints_m: *j,
                    abs_pos_m: [hip[0], hip[1], 0.0],
                    t,
                }
            })
            .collect()),
        Frames::Pixels(frames) => {
            let pool = pool.ok_or_else(|| PoseError::Invalid("pixels2d input needs a pose pool".into()))?;
            lift_sequence(frames, &seq.times, pool, seq.height_m, depth_ratio, seq.origin_m)
        }
    }
}

type Mat6 = SMatrix<f64, 6, 6>;
type Vec6 = SVector<f64, 6>;
type Mat36 = SMatrix<f64, 3, 6>;

/// Constant-velocity Kalman filter for one joint: state `[p, v]` in 3D.
#[derive(Debug, Clone)]
pub struct KalmanJoint {
    pub state: Vec6,
    pub covariance: Mat6,
    /// White-acceleration spectral density.
    pub q: f64,
    /// Measurement variance per axis.
    pub r: f64,
}

/// Initial variance for position and velocity.
const INIT_VARIANCE: f64 = 1e3;

impl KalmanJoint {
    pub fn new(first: Vec3, q: f64, r: f64) -> Self {
        let mut state = Vec6::zeros();
        state.fixed_rows_mut::<3>(0).copy_from(&Vector3::from(first));
        KalmanJoint {
            state,
            covariance: Mat6::identity() * INIT_VARIANCE,
            q,
            r,
        }
    }

    fn transition(dt: f64) -> Mat6 {
        let mut f = Mat6::identity();
        f.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Matrix3::identity() * dt));
        f
    }

    fn measurement() -> Mat36 {
        let mut h = Mat36::zeros();
        h.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
        h
    }

    fn process_noise(&self, dt: f64) -> Mat6 {
        let (pp, pv, vv) = (dt.powi(4) / 4.0, dt.powi(3) / 2.0, dt * dt);
        let mut q = Mat6::zeros();
        for i in 0..3 {
            q[(i, i)] = pp;
            q[(i, i + 3)] = pv;
            q[(i + 3, i)] = pv;
            q[(i + 3, i + 3)] = vv;
        }
        q * self.q
    }

    /// Time update; returns the predicted position.
    pub fn predict(&mut self, dt: f64) -> Vec3 {
        let f = Self::transition(dt);
        self.state = f * self.state;
        self.covariance = f * self.covariance * f.transpose() + self.process_noise(dt);
        self.position()
    }

    /// Measurement update (Joseph form). A singular innovation covariance
    /// means both prior and measurement are exact; the prior is kept.
    pub fn correct(&mut self, z: Vec3) {
        let h = Self::measurement();
        let innovation = Vector3::from(z) - h * self.state;
        let s = h * self.covariance * h.transpose() + Matrix3::identity() * self.r;
        let Some(s_inv) = s.try_inverse() else {
            return;
        };
        let k = self.covariance * h.transpose() * s_inv;
        self.state += k * innovation;
        let i_kh = Mat6::identity() - k * h;
        let p = i_kh * self.covariance * i_kh.transpose()
            + k * (Matrix3::identity() * self.r) * k.transpose();
        self.covariance = (p + p.transpose()) * 0.5;
    }

    pub fn position(&self) -> Vec3 {
        [self.state[0], self.state[1], self.state[2]]
    }

    /// Smallest covariance eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigenvalues().min()
    }
}

/// Runs one [`KalmanJoint`] per joint over the sequence; outputs the
/// corrected positions. The first frame passes through unchanged.
pub fn kalman_smooth(seq: &[Skeleton3D], dt: f64, q: f64, r: f64) -> Vec<Skeleton3D> {
    let Some(first) = seq.first() else {
        return Vec::new();
    };
    let mut filters: Vec<KalmanJoint> = first.joints_m.iter().map(|&p| KalmanJoint::new(p, q, r)).collect();
    let mut out = Vec::with_capacity(seq.len());
    out.push(first.clone());
    for s in &seq[1..] {
        let mut joints = [[0.0; 3]; NUM_JOINTS];
        for (k, kf) in filters.iter_mut().enumerate() {
            kf.predict(dt);
            kf.correct(s.joints_m[k]);
            joints[k] = kf.position();
        }
        out.push(Skeleton3D {
            joints_m: joints,
            abs_pos_m: s.abs_pos_m,
            t: s.t,
        });
    }
    out
}
