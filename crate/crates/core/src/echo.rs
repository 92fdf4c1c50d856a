//! De-chirped IF echo synthesis.
//!
//! Each scatterer contributes `A exp(j 2 pi (f_c tau + mu tau t - mu tau^2 / 2))`
//! per propagation path, sampled at `t = k / f_s` within the pulse. Paths depend
//! on the scenario:
//!
//! | scenario  | components |
//! |-----------|------------|
//! | `free`    | Direct |
//! | `ttw`     | WallDirect, WallInternal (multipath) |
//! | `free-mp` | Direct, ImageA (tx, rx'), ImageB (tx', rx), ImageC (tx', rx') (multipath) |
//!
//! Delays are bistatic: `(|P - a| + |P - b|) / c`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{RadarConfig, ScenarioKind, SimConfig, WallConfig};
use crate::consts::{eta0, C, EPS0, MU0};
use crate::pose::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum EchoError {
    #[error("path delay {delay_s:.4e} s exceeds pulse duration {pulse_s:.4e} s")]
    DelayExceedsPulse { delay_s: f64, pulse_s: f64 },
    #[error("scatterer at y = {y:.3} m is on the wrong side of the wall for scenario {scenario} (wall face at y = {face:.3} m)")]
    WrongSideOfWall { y: f64, face: f64, scenario: ScenarioKind },
    #[error("scenario {0} needs wall parameters")]
    MissingWall(ScenarioKind),
    #[error("scatterer track has {got} samples, expected {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("non-finite scatterer position")]
    NonFinite,
}

/// Electromagnetic description of a homogeneous wall slab at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallEm {
    /// Complex propagation constant alpha + j beta, 1/m.
    pub gamma: Complex64,
    pub eta_wall: Complex64,
    pub eta0: f64,
    /// Re sqrt(eps_c / eps0).
    pub n_wall: f64,
    /// air -> wall
    pub gamma12: Complex64,
    pub t12: Complex64,
    /// wall -> air
    pub gamma21: Complex64,
    pub t21: Complex64,
}

impl WallEm {
    /// One-way amplitude factor `T12 T21 exp(-gamma d)`.
    pub fn one_way(&self, d: f64) -> Complex64 {
        self.t12 * self.t21 * (-self.gamma * d).exp()
    }

    /// Two-way factor of the direct through-wall path.
    pub fn two_way_direct(&self, d: f64) -> Complex64 {
        let o = self.one_way(d);
        o * o
    }

    /// Two-way factor of the path that bounces once inside the wall each way.
    pub fn two_way_internal(&self, d: f64) -> Complex64 {
        let o = self.t12 * self.gamma21 * self.gamma21 * self.t21 * (-self.gamma * (3.0 * d)).exp();
        o * o
    }
}

/// Propagation constant, impedance, index and interface coefficients of
/// `wall` at frequency `freq_hz`.
pub fn wall_em(wall: &WallConfig, freq_hz: f64) -> WallEm {
    let omega = 2.0 * PI * freq_hz;
    let eps_rel = Complex64::new(wall.rel_permittivity, -wall.rel_permittivity * wall.loss_tangent);
    let eps_c = eps_rel * EPS0;
    let gamma = Complex64::i() * omega * (eps_c * MU0).sqrt();
    let eta_wall = (Complex64::from(MU0) / eps_c).sqrt();
    let eta0 = eta0();
    let n_wall = eps_rel.sqrt().re;
    let gamma12 = (eta_wall - eta0) / (eta_wall + eta0);
    let t12 = 1.0 + gamma12;
    let gamma21 = -gamma12;
    let t21 = 1.0 + gamma21;
    WallEm {
        gamma,
        eta_wall,
        eta0,
        n_wall,
        gamma12,
        t12,
        gamma21,
        t21,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PathKind {
    Direct,
    WallDirect,
    WallInternal,
    /// Real transmitter, mirrored receiver.
    ImageA,
    /// Mirrored transmitter, real receiver.
    ImageB,
    /// Both mirrored.
    ImageC,
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub delay_s: f64,
    pub complex_gain: Complex64,
    pub kind: PathKind,
}

fn dist(a: &Vec3, b: &Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Bistatic amplitude `g sigma / (d_tx d_rx)` with
/// `g = 10^(G/20) lambda / (4 pi)^(3/2)`.
pub fn amplitude(radar: &RadarConfig, reflectivity: f64, d_tx: f64, d_rx: f64) -> f64 {
    let g = 10f64.powf(radar.antenna_gain_dbi / 20.0) * radar.wavelength_m() / (4.0 * PI).powf(1.5);
    g * reflectivity / (d_tx * d_rx)
}

/// Mirror of `p` across the plane y = `y_face`.
pub fn mirror_y(p: &Vec3, y_face: f64) -> Vec3 {
    [p[0], 2.0 * y_face - p[1], p[2]]
}

/// Everything [`path_components`] needs that does not change per scatterer.
#[derive(Debug, Clone)]
pub struct PathModel {
    pub radar: RadarConfig,
    pub kind: ScenarioKind,
    pub multipath: bool,
    pub wall_attenuation: bool,
    pub wall: Option<WallConfig>,
    pub em: Option<WallEm>,
}

impl PathModel {
    pub fn new(cfg: &SimConfig) -> Result<Self, EchoError> {
        let em = match (cfg.scenario, &cfg.wall) {
            (ScenarioKind::FreeSpace, _) => None,
            (kind, None) => return Err(EchoError::MissingWall(kind)),
            (_, Some(w)) => Some(wall_em(w, cfg.radar.carrier_freq_hz)),
        };
        Ok(PathModel {
            radar: cfg.radar.clone(),
            kind: cfg.scenario,
            multipath: cfg.multipath,
            wall_attenuation: cfg.wall_attenuation,
            wall: if cfg.scenario == ScenarioKind::FreeSpace { None } else { cfg.wall.clone() },
            em,
        })
    }

    /// Propagation paths from the antennas to a scatterer at `pos` and back.
    pub fn components(&self, pos: &Vec3, reflectivity: f64) -> Result<Vec<PathComponent>, EchoError> {
        if pos.iter().any(|v| !v.is_finite()) {
            return Err(EchoError::NonFinite);
        }
        let tx = &self.radar.tx_pos_m;
        let rx = &self.radar.rx_pos_m;
        let (d_tx, d_rx) = (dist(pos, tx), dist(pos, rx));
        let tau = (d_tx + d_rx) / C;
        let a = amplitude(&self.radar, reflectivity, d_tx, d_rx);
        let mut out = Vec::with_capacity(4);
        match self.kind {
            ScenarioKind::FreeSpace => out.push(PathComponent {
                delay_s: tau,
                complex_gain: Complex64::from(a),
                kind: PathKind::Direct,
            }),
            ScenarioKind::ThroughWall => {
                let (wall, em) = self.wall_and_em()?;
                if pos[1] <= wall.back_face_y() {
                    return Err(EchoError::WrongSideOfWall {
                        y: pos[1],
                        face: wall.back_face_y(),
                        scenario: self.kind,
                    });
                }
                let d = wall.thickness_m();
                let tau1 = tau + 2.0 * d * (em.n_wall - 1.0) / C;
                let direct = if self.wall_attenuation { em.two_way_direct(d) } else { Complex64::from(1.0) };
                out.push(PathComponent {
                    delay_s: tau1,
                    complex_gain: direct * a,
                    kind: PathKind::WallDirect,
                });
                if self.multipath {
                    let internal = if self.wall_attenuation {
                        em.two_way_internal(d)
                    } else {
                        em.gamma21.powi(4)
                    };
                    out.push(PathComponent {
                        delay_s: tau1 + 4.0 * d * em.n_wall / C,
                        complex_gain: internal * a,
                        kind: PathKind::WallInternal,
                    });
                }
            }
            ScenarioKind::FreeSpaceWallReflection => {
                let (wall, em) = self.wall_and_em()?;
                let face = wall.front_face_y();
                if pos[1] >= face {
                    return Err(EchoError::WrongSideOfWall {
                        y: pos[1],
                        face,
                        scenario: self.kind,
                    });
                }
                out.push(PathComponent {
                    delay_s: tau,
                    complex_gain: Complex64::from(a),
                    kind: PathKind::Direct,
                });
                if self.multipath {
                    let tx_img = mirror_y(tx, face);
                    let rx_img = mirror_y(rx, face);
                    let g = em.gamma12;
                    for (kind, ant_t, ant_r, refl) in [
                        (PathKind::ImageA, tx, &rx_img, g),
                        (PathKind::ImageB, &tx_img, rx, g),
                        (PathKind::ImageC, &tx_img, &rx_img, g * g),
                    ] {
                        let (dt, dr) = (dist(pos, ant_t), dist(pos, ant_r));
                        out.push(PathComponent {
                            delay_s: (dt + dr) / C,
                            complex_gain: refl * amplitude(&self.radar, reflectivity, dt, dr),
                            kind,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Free-space gain of the direct path, for comparisons in logs.
    pub fn free_space_gain(&self, pos: &Vec3, reflectivity: f64) -> f64 {
        amplitude(
            &self.radar,
            reflectivity,
            dist(pos, &self.radar.tx_pos_m),
            dist(pos, &self.radar.rx_pos_m),
        )
    }

    fn wall_and_em(&self) -> Result<(&WallConfig, &WallEm), EchoError> {
        match (&self.wall, &self.em) {
            (Some(w), Some(e)) => Ok((w, e)),
            _ => Err(EchoError::MissingWall(self.kind)),
        }
    }
}

/// Convenience wrapper over [`PathModel::components`].
pub fn path_components(pos: &Vec3, reflectivity: f64, cfg: &SimConfig) -> Result<Vec<PathComponent>, EchoError> {
    PathModel::new(cfg)?.components(pos, reflectivity)
}

/// Adds the IF samples of `components` into `out` (length N_fast).
pub fn accumulate_pulse(components: &[PathComponent], radar: &RadarConfig, out: &mut [Complex64]) -> Result<(), EchoError> {
    let mu = radar.chirp_slope();
    let fs = radar.sample_rate_hz;
    for c in components {
        if !(c.delay_s < radar.pulse_duration_s) {
            return Err(EchoError::DelayExceedsPulse {
                delay_s: c.delay_s,
                pulse_s: radar.pulse_duration_s,
            });
        }
        let tau = c.delay_s;
        // start phase in cycles, reduced mod 1 before scaling by 2 pi
        let start = (radar.carrier_freq_hz * tau).fract() - (0.5 * mu * tau * tau).fract();
        let mut z = c.complex_gain * Complex64::from_polar(1.0, 2.0 * PI * start);
        let step = Complex64::from_polar(1.0, 2.0 * PI * (mu * tau / fs));
        for s in out.iter_mut() {
            *s += z;
            z *= step;
        }
    }
    Ok(())
}

/// One pulse's de-chirped samples from a set of path components.
pub fn synth_pulse(components: &[PathComponent], radar: &RadarConfig) -> Result<Vec<Complex64>, EchoError> {
    let mut out = vec![Complex64::new(0.0, 0.0); radar.n_fast()];
    accumulate_pulse(components, radar, &mut out)?;
    Ok(out)
}

/// One scatterer (joint) sampled on the pulse grid.
#[derive(Debug, Clone)]
pub struct ScattererTrack {
    pub positions: Vec<Vec3>,
    pub reflectivity: f64,
}

/// Complex de-chirped samples, pulse-major: sample `k` of pulse `p` is at
/// `p * n_fast + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IfCube {
    pub n_fast: usize,
    pub n_pulse: usize,
    pub samples: Vec<Complex64>,
    pub fast_dt: f64,
    pub slow_dt: f64,
    /// Time of pulse 0.
    pub t0: f64,
}

impl IfCube {
    pub fn zeros(n_fast: usize, n_pulse: usize, fast_dt: f64, slow_dt: f64) -> Self {
        IfCube {
            n_fast,
            n_pulse,
            samples: vec![Complex64::new(0.0, 0.0); n_fast * n_pulse],
            fast_dt,
            slow_dt,
            t0: 0.0,
        }
    }

    pub fn pulse(&self, p: usize) -> &[Complex64] {
        &self.samples[p * self.n_fast..(p + 1) * self.n_fast]
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        // per-pulse partial sums keep the reduction order fixed
        let per_pulse: Vec<f64> = self
            .samples
            .par_chunks(self.n_fast.max(1))
            .map(|p| p.iter().map(|s| s.norm_sqr()).sum())
            .collect();
        per_pulse.iter().sum::<f64>() / self.samples.len() as f64
    }
}

impl std::ops::Add for &IfCube {
    type Output = IfCube;

    fn add(self, rhs: &IfCube) -> IfCube {
        assert_eq!((self.n_fast, self.n_pulse), (rhs.n_fast, rhs.n_pulse));
        IfCube {
            samples: self.samples.iter().zip(&rhs.samples).map(|(a, b)| a + b).collect(),
            ..self.clone()
        }
    }
}

/// Synthesizes the full cube for `scatterers` (all the same length, one
/// sample per pulse) and adds seeded complex white Gaussian noise at
/// `radar.snr_db` relative to the mean noiseless power. Each pulse's noise
/// comes from its own ChaCha stream (`seed`, pulse index), so the result does
/// not depend on thread scheduling.
pub fn synth_cube(scatterers: &[ScattererTrack], model: &PathModel, t0: f64) -> Result<IfCube, EchoError> {
    let radar = &model.radar;
    let n_pulse = scatterers.first().map_or(0, |s| s.positions.len());
    for s in scatterers {
        if s.positions.len() != n_pulse {
            return Err(EchoError::LengthMismatch {
                got: s.positions.len(),
                want: n_pulse,
            });
        }
    }
    let n_fast = radar.n_fast();
    let mut cube = IfCube::zeros(n_fast, n_pulse, 1.0 / radar.sample_rate_hz, 1.0 / radar.prf_hz);
    cube.t0 = t0;
    if n_pulse == 0 {
        return Ok(cube);
    }

    cube.samples
        .par_chunks_mut(n_fast)
        .enumerate()
        .try_for_each(|(p, out)| -> Result<(), EchoError> {
            for s in scatterers {
                let comps = model.components(&s.positions[p], s.reflectivity)?;
                accumulate_pulse(&comps, radar, out)?;
            }
            Ok(())
        })?;

    if radar.snr_db.is_finite() {
        let signal = cube.mean_power();
        let noise_power = signal / 10f64.powf(radar.snr_db / 10.0);
        if noise_power > 0.0 {
            let sigma = (noise_power / 2.0).sqrt();
            let seed = radar.seed;
            cube.samples.par_chunks_mut(n_fast).enumerate().for_each(|(p, out)| {
                let mut rng = pulse_rng(seed, p as u64);
                for s in out.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *s += Complex64::new(re * sigma, im * sigma);
                }
            });
        }
    }
    Ok(cube)
}

/// Noise generator for one pulse.
pub fn pulse_rng(seed: u64, pulse: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pulse);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless(eps: f64) -> WallConfig {
        WallConfig {
            rel_permittivity: eps,
            loss_tangent: 0.0,
            ..WallConfig::table_default()
        }
    }

    #[test]
    fn eta0_value() {
        assert!((eta0() - 376.730313).abs() < 1e-5);
    }

    #[test]
    fn lossless_eps6() {
        let em = wall_em(&lossless(6.0), 2e9);
        let s6 = 6f64.sqrt();
        assert!((em.n_wall - s6).abs() < 1e-14);
        assert!((em.gamma12.re - (1.0 - s6) / (1.0 + s6)).abs() < 1e-12);
        assert!((em.gamma12.re + 0.4202).abs() < 1e-4);
        assert!((em.t12.re - 0.5798).abs() < 1e-4);
        assert_eq!(em.gamma.re, 0.0);
        assert_eq!(em.two_way_direct(0.24).norm(), (em.t12 * em.t21).norm_sqr());
    }

    #[test]
    fn matched_wall_vanishes() {
        let em = wall_em(&lossless(1.0), 2e9);
        assert!(em.gamma12.norm() < 1e-12);
        assert!((em.t12 - 1.0).norm() < 1e-12);
        assert!((em.n_wall - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lossy_wall_attenuates() {
        let lossy = wall_em(&WallConfig::table_default(), 2e9);
        let clean = wall_em(&lossless(6.0), 2e9);
        assert!(lossy.gamma.re > 0.0);
        let rel = (lossy.gamma12.norm() - clean.gamma12.norm()).abs() / clean.gamma12.norm();
        assert!(rel < 0.01, "{rel}");
        assert_eq!(lossy.t12, 1.0 + lossy.gamma12);
        assert_eq!(lossy.gamma21, -lossy.gamma12);
        assert_eq!(lossy.t21, 1.0 + lossy.gamma21);
        assert!(lossy.two_way_internal(0.24).norm() < lossy.two_way_direct(0.24).norm());
    }

    #[test]
    fn ttw_delays() {
        let mut cfg = SimConfig::defaults(ScenarioKind::ThroughWall);
        cfg.wall = Some(lossless(6.0));
        let pos = [0.0, 3.0, 1.5];
        let comps = path_components(&pos, 1.0, &cfg).unwrap();
        let tau = (dist(&pos, &cfg.radar.tx_pos_m) + dist(&pos, &cfg.radar.rx_pos_m)) / C;
        assert_eq!(comps.len(), 2);
        let n = 6f64.sqrt();
        let extra = 2.0 * 0.24 * (n - 1.0) / C;
        let internal = 4.0 * 0.24 * n / C;
        assert!((extra - 2.3208e-9).abs() < 1e-13);
        assert!(((comps[0].delay_s - tau) - extra).abs() < 1e-18);
        assert!(((comps[1].delay_s - comps[0].delay_s) - internal).abs() < 1e-18);
        assert!(comps[1].complex_gain.norm() < comps[0].complex_gain.norm());
    }

    #[test]
    fn ttw_without_attenuation_matches_free_gain() {
        let mut cfg = SimConfig::defaults(ScenarioKind::ThroughWall);
        cfg.wall_attenuation = false;
        let model = PathModel::new(&cfg).unwrap();
        let pos = [0.3, 2.5, 1.0];
        let comps = model.components(&pos, 0.4).unwrap();
        assert_eq!(comps[0].complex_gain.norm(), model.free_space_gain(&pos, 0.4));
        cfg.wall_attenuation = true;
        let with = PathModel::new(&cfg).unwrap().components(&pos, 0.4).unwrap();
        assert_eq!(with[0].delay_s, comps[0].delay_s);
    }

    #[test]
    fn wrong_side_rejected() {
        let cfg = SimConfig::defaults(ScenarioKind::ThroughWall);
        assert!(matches!(
            path_components(&[0.0, 0.05, 1.0], 1.0, &cfg),
            Err(EchoError::WrongSideOfWall { .. })
        ));
        let cfg = SimConfig::defaults(ScenarioKind::FreeSpaceWallReflection);
        assert!(matches!(
            path_components(&[0.0, 4.0, 1.0], 1.0, &cfg),
            Err(EchoError::WrongSideOfWall { .. })
        ));
    }

    #[test]
    fn image_paths() {
        let cfg = SimConfig::defaults(ScenarioKind::FreeSpaceWallReflection);
        let pos = [0.2, 2.0, 1.2];
        let comps = path_components(&pos, 1.0, &cfg).unwrap();
        let kinds: Vec<_> = comps.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, [PathKind::Direct, PathKind::ImageA, PathKind::ImageB, PathKind::ImageC]);
        let face = cfg.wall.as_ref().unwrap().front_face_y();
        let tx = cfg.radar.tx_pos_m;
        let rx_img = mirror_y(&cfg.radar.rx_pos_m, face);
        assert!((comps[1].delay_s - (dist(&pos, &tx) + dist(&pos, &rx_img)) / C).abs() < 1e-18);
        for c in &comps[1..] {
            assert!(c.delay_s > comps[0].delay_s);
            assert!(c.complex_gain.norm() <= comps[0].complex_gain.norm());
        }
        let mut no_mp = cfg.clone();
        no_mp.multipath = false;
        assert_eq!(path_components(&pos, 1.0, &no_mp).unwrap().len(), 1);
    }

    #[test]
    fn empty_pulse_is_zero() {
        let r = RadarConfig::free_space();
        let p = synth_pulse(&[], &r).unwrap();
        assert_eq!(p.len(), 400);
        assert!(p.iter().all(|s| *s == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn delay_beyond_pulse_rejected() {
        let r = RadarConfig::free_space();
        let c = PathComponent {
            delay_s: 41e-6,
            complex_gain: Complex64::from(1.0),
            kind: PathKind::Direct,
        };
        assert!(matches!(synth_pulse(&[c], &r), Err(EchoError::DelayExceedsPulse { .. })));
    }

    #[test]
    fn recursion_matches_direct_phase() {
        let r = RadarConfig::free_space();
        let tau = 2.345e-8;
        let c = PathComponent {
            delay_s: tau,
            complex_gain: Complex64::new(0.3, -0.1),
            kind: PathKind::Direct,
        };
        let p = synth_pulse(&[c], &r).unwrap();
        let mu = r.chirp_slope();
        for (k, s) in p.iter().enumerate() {
            let t = k as f64 / r.sample_rate_hz;
            let phase = 2.0 * PI * (r.carrier_freq_hz * tau + mu * tau * t - 0.5 * mu * tau * tau);
            let want = c.complex_gain * Complex64::from_polar(1.0, phase);
            assert!((s - want).norm() < 1e-9, "sample {k}");
        }
    }
}
