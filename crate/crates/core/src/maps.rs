//! Range-time and Doppler-time maps, MTI, enhancement, ridges and PSNR.
//!
//! Range FFTs use the unitary convention (scaled by 1/sqrt(N)) so energy is
//! preserved between fast time and range. RTM rows are the first N/2 range
//! bins (positive beat frequencies); row `r` sits at
//! `r * f_s / N * c / (2 mu)` meters.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{DtmSource, ProcConfig, RadarConfig, WindowKind};
use crate::consts::C;
use crate::echo::IfCube;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("MTI needs at least 2 pulses, got {0}")]
    TooFewPulses(usize),
    #[error("STFT window of {window} samples is longer than the {len}-sample slow-time signal")]
    WindowTooLong { window: usize, len: usize },
    #[error("map dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("n_ridges must be >= 1")]
    NoRidges,
    #[error("range gate selects no bins")]
    EmptyGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Rtm,
    RtmMti,
    RtmEnhanced,
    Dtm,
    DtmEnhanced,
}

impl MapKind {
    pub fn enhanced(self) -> Self {
        match self {
            MapKind::Rtm | MapKind::RtmMti | MapKind::RtmEnhanced => MapKind::RtmEnhanced,
            MapKind::Dtm | MapKind::DtmEnhanced => MapKind::DtmEnhanced,
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::Rtm => "rtm",
            MapKind::RtmMti => "rtm_mti",
            MapKind::RtmEnhanced => "rtm_enhanced",
            MapKind::Dtm => "dtm",
            MapKind::DtmEnhanced => "dtm_enhanced",
        })
    }
}

/// Linear axis: value of index `i` is `start + i * step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub unit: String,
}

impl Axis {
    pub fn new(start: f64, step: f64, unit: &str) -> Self {
        Axis {
            start,
            step,
            unit: unit.to_string(),
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }
}

/// Non-negative real map, row-major (`values[r * cols + c]`). Rows are range
/// or Doppler bins, columns are slow time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub kind: MapKind,
}

impl SpectralMap {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Row index of the largest value in column `c` (lowest index on ties).
    pub fn argmax_in_column(&self, c: usize) -> usize {
        let mut best = 0;
        for r in 1..self.rows {
            if self.get(r, c) > self.get(best, c) {
                best = r;
            }
        }
        best
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Complex range profiles, pulse-major (`data[p * n_bins + r]`).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfiles {
    pub n_bins: usize,
    pub n_pulse: usize,
    pub data: Vec<Complex64>,
    /// Range spacing per bin.
    pub bin_m: f64,
    pub slow_dt: f64,
    /// Time of the first profile.
    pub t0: f64,
}

impl RangeProfiles {
    pub fn profile(&self, p: usize) -> &[Complex64] {
        &self.data[p * self.n_bins..(p + 1) * self.n_bins]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Range spacing per FFT bin for a cube synthesized with `radar`.
pub fn range_bin_m(cube: &IfCube, mu: f64) -> f64 {
    (1.0 / cube.fast_dt) / cube.n_fast as f64 * C / (2.0 * mu)
}

/// Unitary fast-time FFT of every pulse, all N bins.
pub fn range_profiles(cube: &IfCube, radar: &RadarConfig) -> RangeProfiles {
    let n = cube.n_fast;
    let mut data = cube.samples.clone();
    if n > 0 {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scale = 1.0 / (n as f64).sqrt();
        data.par_chunks_mut(n).for_each(|p| {
            fft.process(p);
            for z in p.iter_mut() {
                *z *= scale;
            }
        });
    }
    RangeProfiles {
        n_bins: n,
        n_pulse: cube.n_pulse,
        data,
        bin_m: range_bin_m(cube, radar.chirp_slope()),
        slow_dt: cube.slow_dt,
        t0: cube.t0,
    }
}

fn magnitude_map(p: &RangeProfiles, rows: usize, kind: MapKind) -> SpectralMap {
    let cols = p.n_pulse;
    let mut values = vec![0.0; rows * cols];
    for c in 0..cols {
        let prof = p.profile(c);
        for r in 0..rows {
            values[r * cols + c] = prof[r].norm();
        }
    }
    SpectralMap {
        rows,
        cols,
        values,
        row_axis: Axis::new(0.0, p.bin_m, "m"),
        col_axis: Axis::new(p.t0, p.slow_dt, "s"),
        kind,
    }
}

/// Range-time map: |range FFT| over the positive-beat half.
pub fn rtm_from_profiles(p: &RangeProfiles) -> SpectralMap {
    magnitude_map(p, p.n_bins / 2, MapKind::Rtm)
}

pub fn make_rtm(cube: &IfCube, radar: &RadarConfig) -> SpectralMap {
    rtm_from_profiles(&range_profiles(cube, radar))
}

/// Two-pulse canceller on complex profiles: `X_m - X_{m-1}` for m >= 1,
/// keeping the positive-beat half. Output has `n_pulse - 1` profiles.
pub fn mti_profiles(p: &RangeProfiles) -> Result<RangeProfiles, MapError> {
    if p.n_pulse < 2 {
        return Err(MapError::TooFewPulses(p.n_pulse));
    }
    let keep = p.n_bins / 2;
    let n_out = p.n_pulse - 1;
    let mut data = vec![Complex64::new(0.0, 0.0); keep * n_out];
    data.par_chunks_mut(keep.max(1)).enumerate().for_each(|(m, out)| {
        let cur = p.profile(m + 1);
        let prev = p.profile(m);
        for r in 0..out.len() {
            out[r] = cur[r] - prev[r];
        }
    });
    Ok(RangeProfiles {
        n_bins: keep,
        n_pulse: n_out,
        data,
        bin_m: p.bin_m,
        slow_dt: p.slow_dt,
        t0: p.t0 + p.slow_dt,
    })
}

pub fn rtm_mti_from_profiles(mti: &RangeProfiles) -> SpectralMap {
    magnitude_map(mti, mti.n_bins, MapKind::RtmMti)
}

/// MTI range-time map straight from a cube.
pub fn apply_mti(cube: &IfCube, radar: &RadarConfig) -> Result<SpectralMap, MapError> {
    Ok(rtm_mti_from_profiles(&mti_profiles(&range_profiles(cube, radar))?))
}

/// Slow-time signal: per pulse, the sum over (gated) range bins of the MTI
/// profiles, coherent or in magnitude depending on `proc.dtm_source`.
pub fn slow_time_signal(mti: &RangeProfiles, proc: &ProcConfig) -> Result<Vec<Complex64>, MapError> {
    let (lo, hi) = match proc.range_gate_m {
        None => (0, mti.n_bins),
        Some([a, b]) => {
            let lo = (a / mti.bin_m).ceil().max(0.0) as usize;
            let hi = ((b / mti.bin_m).ceil() as usize).min(mti.n_bins);
            (lo, hi)
        }
    };
    if lo >= hi {
        return Err(MapError::EmptyGate);
    }
    Ok((0..mti.n_pulse)
        .map(|m| {
            let prof = &mti.profile(m)[lo..hi];
            match proc.dtm_source {
                DtmSource::Complex => prof.iter().sum(),
                DtmSource::Magnitude => Complex64::from(prof.iter().map(|z| z.norm()).sum::<f64>()),
            }
        })
        .collect())
}

/// Periodic window of length `n`.
pub fn window(kind: WindowKind, n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|i| {
            let x = 2.0 * PI * i as f64 / nf;
            match kind {
                WindowKind::Hamming => 0.54 - 0.46 * x.cos(),
                WindowKind::Hann => 0.5 - 0.5 * x.cos(),
                WindowKind::Rect => 1.0,
            }
        })
        .collect()
}

/// Magnitude STFT of a uniformly sampled complex signal. Rows run over
/// frequency in (-fs/2, fs/2] with zero Doppler centered; each column is
/// stamped with the time of its window center.
pub fn stft(signal: &[Complex64], fs: f64, t0: f64, proc: &ProcConfig) -> Result<SpectralMap, MapError> {
    let len = proc.stft_window_len;
    if len == 0 || len > signal.len() {
        return Err(MapError::WindowTooLong {
            window: len,
            len: signal.len(),
        });
    }
    let hop = proc.stft_hop();
    let nfft = len * proc.stft_zero_pad;
    let cols = (signal.len() - len) / hop + 1;
    let win = window(proc.stft_window_kind, len);
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    // row i holds FFT bin (i + first) mod nfft
    let first = -(((nfft - 1) / 2) as i64);
    let spectra: Vec<Vec<f64>> = (0..cols)
        .into_par_iter()
        .map(|c| {
            let start = c * hop;
            let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
            for i in 0..len {
                buf[i] = signal[start + i] * win[i];
            }
            fft.process(&mut buf);
            (0..nfft)
                .map(|i| {
                    let k = (i as i64 + first).rem_euclid(nfft as i64) as usize;
                    buf[k].norm()
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; nfft * cols];
    for (c, s) in spectra.iter().enumerate() {
        for (r, v) in s.iter().enumerate() {
            values[r * cols + c] = *v;
        }
    }
    let df = fs / nfft as f64;
    let dt = 1.0 / fs;
    Ok(SpectralMap {
        rows: nfft,
        cols,
        values,
        row_axis: Axis::new(first as f64 * df, df, "Hz"),
        col_axis: Axis::new(t0 + 0.5 * len as f64 * dt, hop as f64 * dt, "s"),
        kind: MapKind::Dtm,
    })
}

/// Doppler-time map from complex MTI profiles.
pub fn make_dtm(mti: &RangeProfiles, proc: &ProcConfig) -> Result<SpectralMap, MapError> {
    let signal = slow_time_signal(mti, proc)?;
    stft(&signal, 1.0 / mti.slow_dt, mti.t0, proc)
}

/// dB floor used for normalization and rendering.
pub const DB_FLOOR: f64 = -80.0;

/// Maps values to [0, 1] on a dB scale relative to the map maximum, floored
/// at [`DB_FLOOR`]. An all-zero map stays zero.
pub fn db_normalize(map: &SpectralMap) -> Vec<f64> {
    let max = map.max();
    if max <= 0.0 {
        return vec![0.0; map.values.len()];
    }
    map.values
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                return 0.0;
            }
            let db = (20.0 * (v / max).log10()).max(DB_FLOOR);
            (db - DB_FLOOR) / -DB_FLOOR
        })
        .collect()
}

fn median3x3(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let mut win = [0.0f64; 9];
    for r in 0..rows {
        for c in 0..cols {
            let mut k = 0;
            for dr in [-1i64, 0, 1] {
                for dc in [-1i64, 0, 1] {
                    let rr = (r as i64 + dr).clamp(0, rows as i64 - 1) as usize;
                    let cc = (c as i64 + dc).clamp(0, cols as i64 - 1) as usize;
                    win[k] = values[rr * cols + cc];
                    k += 1;
                }
            }
            win.sort_by(f64::total_cmp);
            out[r * cols + c] = win[4];
        }
    }
    out
}

/// Value at quantile `q` (nearest rank on the sorted values).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
    v[idx]
}

/// Classical enhancement: dB normalization to [0, 1], 3x3 median filter
/// (edge-replicated), then soft threshold at the `noise_quantile` level.
///
/// This is a fixed, non-learned stand-in for a denoising network.
pub fn enhance_map(map: &SpectralMap, noise_quantile: f64) -> SpectralMap {
    let norm = db_normalize(map);
    let med = median3x3(&norm, map.rows, map.cols);
    let thr = quantile(&med, noise_quantile);
    let values = med.iter().map(|&v| (v - thr).max(0.0)).collect();
    SpectralMap {
        values,
        kind: map.kind.enhanced(),
        ..map.clone()
    }
}

/// `n_r` ridge tracks over the DTM columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSet {
    /// `ridges[k][c]`: Doppler frequency of ridge k in column c, Hz.
    pub ridges: Vec<Vec<f64>>,
    /// Row index behind each frequency.
    pub bins: Vec<Vec<usize>>,
    /// Map magnitude at each ridge point.
    pub energies: Vec<Vec<f64>>,
    /// Column had fewer than `n_r` local maxima and was padded.
    pub flagged: Vec<bool>,
    pub times: Vec<f64>,
}

impl RidgeSet {
    pub fn n_ridges(&self) -> usize {
        self.ridges.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("column,time_s,k,freq_hz,energy,flagged\n");
        for c in 0..self.times.len() {
            for k in 0..self.ridges.len() {
                s.push_str(&format!(
                    "{c},{},{},{},{},{}\n",
                    self.times[c],
                    k + 1,
                    self.ridges[k][c],
                    self.energies[k][c],
                    u8::from(self.flagged[c])
                ));
            }
        }
        s
    }
}

/// Per column, the `n_r` largest strict local maxima along the (circular)
/// Doppler axis, strongest first. Equal-energy candidates are ordered by
/// closeness to the previous column's bin for that ridge when within
/// `jump_bins`, otherwise by row index. Columns with fewer than `n_r` maxima
/// are padded with the column's global maximum and flagged.
pub fn extract_ridges(dtm: &SpectralMap, n_r: usize, jump_bins: usize) -> Result<RidgeSet, MapError> {
    if n_r == 0 {
        return Err(MapError::NoRidges);
    }
    let rows = dtm.rows;
    let mut bins = vec![Vec::with_capacity(dtm.cols); n_r];
    let mut flagged = Vec::with_capacity(dtm.cols);
    let mut prev: Vec<Option<usize>> = vec![None; n_r];

    for c in 0..dtm.cols {
        let col = dtm.column(c);
        let mut cands: Vec<usize> = if rows >= 3 {
            (0..rows)
                .filter(|&r| {
                    let up = col[(r + 1) % rows];
                    let down = col[(r + rows - 1) % rows];
                    col[r] > up && col[r] > down
                })
                .collect()
        } else {
            Vec::new()
        };
        cands.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));

        let mut chosen: Vec<usize> = Vec::with_capacity(n_r);
        let mut i = 0;
        while chosen.len() < n_r && i < cands.len() {
            // block of equal-energy candidates
            let mut j = i + 1;
            while j < cands.len() && col[cands[j]] == col[cands[i]] {
                j += 1;
            }
            let mut block: Vec<usize> = cands[i..j].to_vec();
            while !block.is_empty() && chosen.len() < n_r {
                let slot = chosen.len();
                let pick = match prev[slot] {
                    Some(p) => {
                        let (idx, d) = block
                            .iter()
                            .enumerate()
                            .map(|(ix, &b)| (ix, b.abs_diff(p)))
                            .min_by_key(|&(ix, d)| (d, ix))
                            .unwrap();
                        if d <= jump_bins {
                            idx
                        } else {
                            0
                        }
                    }
                    None => 0,
                };
                chosen.push(block.remove(pick));
            }
            i = j;
        }
        let short = chosen.len() < n_r;
        if short {
            let g = (0..rows).fold(0, |best, r| if col[r] > col[best] { r } else { best });
            chosen.resize(n_r, g);
        }
        flagged.push(short);
        for k in 0..n_r {
            bins[k].push(chosen[k]);
            prev[k] = Some(chosen[k]);
        }
    }

    let ridges = bins
        .iter()
        .map(|b| b.iter().map(|&r| dtm.row_axis.at(r)).collect())
        .collect();
    let energies = bins
        .iter()
        .map(|b| b.iter().enumerate().map(|(c, &r)| dtm.get(r, c)).collect())
        .collect();
    let times = (0..dtm.cols).map(|c| dtm.col_axis.at(c)).collect();
    Ok(RidgeSet {
        ridges,
        bins,
        energies,
        flagged,
        times,
    })
}

/// `10 log10(H W max(a)^2 / sum (a - b)^2)`. The peak comes from `a` only.
/// Identical maps give `+inf`.
pub fn psnr(a: &SpectralMap, b: &SpectralMap) -> Result<f64, MapError> {
    psnr_values(&a.values, a.dims(), &b.values, b.dims())
}

pub fn psnr_values(a: &[f64], da: (usize, usize), b: &[f64], db: (usize, usize)) -> Result<f64, MapError> {
    if da != db || a.len() != b.len() {
        return Err(MapError::DimensionMismatch { a: da, b: db });
    }
    let sse: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(10.0 * ((a.len() as f64) * peak * peak / sse).log10())
}

/// PSNR formatted with two decimals, or `inf`.
pub fn format_psnr(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.2}")
    }
}
