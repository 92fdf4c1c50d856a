//! Frame-rate to PRF resampling and Savitzky-Golay smoothing.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::pose::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum ResampleError {
    #[error("need at least 2 frames to interpolate, got {0}")]
    TooFewFrames(usize),
    #[error("timestamps must be strictly increasing and finite")]
    BadTimes,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("invalid Savitzky-Golay window {window} / degree {degree}")]
    BadWindow { window: usize, degree: usize },
    #[error("trajectory of {len} samples is shorter than window {window}")]
    TooShort { len: usize, window: usize },
    #[error("prf must be positive")]
    BadPrf,
}

/// One joint's 3D path over time.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub times_s: Vec<f64>,
    pub coords_m: Vec<Vec3>,
}

impl JointTrajectory {
    pub fn new(times_s: Vec<f64>, coords_m: Vec<Vec3>) -> Result<Self, ResampleError> {
        let t = JointTrajectory { times_s, coords_m };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), ResampleError> {
        if self.times_s.len() != self.coords_m.len()
            || self.times_s.iter().any(|t| !t.is_finite())
            || self.times_s.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(ResampleError::BadTimes);
        }
        if self.coords_m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ResampleError::NonFinite);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }
}

/// Number of pulses on the half-open grid `t0 + m / prf` covering
/// `[t_first, t_last)`.
pub fn pulse_count(t_first: f64, t_last: f64, prf: f64) -> usize {
    let span = (t_last - t_first) * prf;
    ((span - 1e-9).ceil().max(0.0) as usize).max(1)
}

/// Linear interpolation onto the pulse grid `t_first + m / prf`.
pub fn interp_to_prf(traj: &JointTrajectory, prf: f64) -> Result<JointTrajectory, ResampleError> {
    if traj.len() < 2 {
        return Err(ResampleError::TooFewFrames(traj.len()));
    }
    traj.check()?;
    if !(prf.is_finite() && prf > 0.0) {
        return Err(ResampleError::BadPrf);
    }
    let t0 = traj.times_s[0];
    let t_end = *traj.times_s.last().unwrap();
    let n = pulse_count(t0, t_end, prf);
    let mut times = Vec::with_capacity(n);
    let mut coords = Vec::with_capacity(n);
    let mut f = 0usize;
    for m in 0..n {
        let t = t0 + m as f64 / prf;
        while f + 2 < traj.len() && traj.times_s[f + 1] <= t {
            f += 1;
        }
        let (ta, tb) = (traj.times_s[f], traj.times_s[f + 1]);
        let (pa, pb) = (traj.coords_m[f], traj.coords_m[f + 1]);
        let p = if t <= ta {
            pa
        } else if t >= tb {
            pb
        } else {
            let frac = (t - ta) / (tb - ta);
            [0, 1, 2].map(|c| pa[c] + (pb[c] - pa[c]) * frac)
        };
        times.push(t);
        coords.push(p);
    }
    Ok(JointTrajectory {
        times_s: times,
        coords_m: coords,
    })
}

fn check_window(window: usize, degree: usize) -> Result<(), ResampleError> {
    if window < 3 || window % 2 == 0 || degree >= window {
        return Err(ResampleError::BadWindow { window, degree });
    }
    Ok(())
}

/// Least-squares weights that evaluate the degree-`degree` polynomial fitted
/// to samples at offsets `-m..=m` (m = window / 2) at offset `at`.
///
/// Offsets are scaled by 1/m before building the Vandermonde matrix to keep
/// the normal equations well conditioned.
pub fn sgolay_weights_at(window: usize, degree: usize, at: f64) -> Result<Vec<f64>, ResampleError> {
    check_window(window, degree)?;
    let m = (window / 2) as f64;
    let cols = degree + 1;
    let v = DMatrix::from_fn(window, cols, |i, k| ((i as f64 - m) / m).powi(k as i32));
    let e = DVector::from_fn(cols, |k, _| (at / m).powi(k as i32));
    let gram = v.transpose() * &v;
    let a = gram
        .cholesky()
        .ok_or(ResampleError::BadWindow { window, degree })?
        .solve(&e);
    Ok((v * a).iter().copied().collect())
}

/// Center-point smoothing weights; they sum to 1.
pub fn sgolay_coeffs(window: usize, degree: usize) -> Result<Vec<f64>, ResampleError> {
    sgolay_weights_at(window, degree, 0.0)
}

/// Smooths one scalar series. Interior points use the centered weights; the
/// first and last `m` points are evaluated on the polynomial fitted to the
/// first / last full window.
pub fn sgolay_smooth(x: &[f64], window: usize, degree: usize) -> Result<Vec<f64>, ResampleError> {
    check_window(window, degree)?;
    if x.len() < window {
        return Err(ResampleError::TooShort {
            len: x.len(),
            window,
        });
    }
    let m = window / 2;
    let n = x.len();
    let center = sgolay_coeffs(window, degree)?;
    let dot = |w: &[f64], start: usize| -> f64 { w.iter().zip(&x[start..start + window]).map(|(a, b)| a * b).sum() };
    let mut out = vec![0.0; n];
    for i in m..n - m {
        out[i] = dot(&center, i - m);
    }
    for i in 0..m {
        let w = sgolay_weights_at(window, degree, i as f64 - m as f64)?;
        out[i] = dot(&w, 0);
        let w = sgolay_weights_at(window, degree, m as f64 - i as f64)?;
        out[n - 1 - i] = dot(&w, n - window);
    }
    Ok(out)
}

/// Applies [`sgolay_smooth`] to each coordinate.
pub fn sgolay_filter(traj: &JointTrajectory, window: usize, degree: usize) -> Result<JointTrajectory, ResampleError> {
    let mut coords = traj.coords_m.clone();
    for c in 0..3 {
        let series: Vec<f64> = traj.coords_m.iter().map(|p| p[c]).collect();
        for (p, v) in coords.iter_mut().zip(sgolay_smooth(&series, window, degree)?) {
            p[c] = v;
        }
    }
    Ok(JointTrajectory {
        times_s: traj.times_s.clone(),
        coords_m: coords,
    })
}
