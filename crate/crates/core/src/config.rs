//! Simulation parameters.
//!
//! One TOML document carries the scenario selection plus `[radar]`, `[wall]`,
//! `[proc]`, `[pose]`, `[echo]` and `[tracking]` sections. Every key is
//! optional; missing keys take the defaults of the selected scenario's column
//! (free-space at 77 GHz or through-the-wall at 2 GHz).
//!
//! ```toml
//! scenario = "ttw"          # "free" | "free-mp" | "ttw"
//! multipath = true
//! wall_attenuation = true
//! max_range_m = 8.0
//!
//! [radar]
//! carrier_freq_hz = 2e9
//! snr_db = 50.0             # `inf` disables noise
//! seed = 7
//!
//! [wall]
//! rel_permittivity = 6.0
//! loss_tangent = 0.03
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consts::C;
use crate::pose::NUM_JOINTS;

/// Environment variable that overrides `radar.seed`.
pub const SEED_ENV: &str = "RADHARS_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid parameter {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(
        "beat frequency {beat_hz:.4e} Hz at {range_m} m reaches Nyquist limit {nyquist_hz:.4e} Hz"
    )]
    NyquistViolation {
        range_m: f64,
        beat_hz: f64,
        nyquist_hz: f64,
    },
    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "free")]
    FreeSpace,
    /// Target in front of a wall; image-method reflections off the wall face.
    #[serde(rename = "free-mp")]
    FreeSpaceWallReflection,
    /// Target behind the wall; two-way transmission plus internal reverberation.
    #[serde(rename = "ttw")]
    ThroughWall,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::FreeSpace => "free",
            ScenarioKind::FreeSpaceWallReflection => "free-mp",
            ScenarioKind::ThroughWall => "ttw",
        }
    }

    pub fn needs_wall(self) -> bool {
        !matches!(self, ScenarioKind::FreeSpace)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(ScenarioKind::FreeSpace),
            "free-mp" => Ok(ScenarioKind::FreeSpaceWallReflection),
            "ttw" => Ok(ScenarioKind::ThroughWall),
            other => Err(ConfigError::Parse(format!(
                "unknown scenario {other:?} (expected free, free-mp or ttw)"
            ))),
        }
    }
}

/// Scenario plus the two ablation switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub multipath_enabled: bool,
    pub wall_attenuation_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub prf_hz: f64,
    pub sample_rate_hz: f64,
    pub pulse_duration_s: f64,
    pub tx_pos_m: [f64; 3],
    pub rx_pos_m: [f64; 3],
    pub antenna_gain_dbi: f64,
    /// Stored and reported; the signal model does not use it.
    pub antenna_isolation_db: f64,
    /// `inf` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl RadarConfig {
    pub fn free_space() -> Self {
        RadarConfig {
            carrier_freq_hz: 77e9,
            bandwidth_hz: 4e9,
            prf_hz: 8192.0,
            sample_rate_hz: 10e6,
            pulse_duration_s: 40e-6,
            tx_pos_m: [-0.1, 0.0, 1.5],
            rx_pos_m: [0.1, 0.0, 1.5],
            antenna_gain_dbi: 10.0,
            antenna_isolation_db: 20.0,
            snr_db: 50.0,
            seed: 0,
        }
    }

    pub fn through_wall() -> Self {
        RadarConfig {
            carrier_freq_hz: 2e9,
            bandwidth_hz: 1e9,
            prf_hz: 128.0,
            ..Self::free_space()
        }
    }

    /// Chirp slope mu = B / T_p in Hz/s.
    pub fn chirp_slope(&self) -> f64 {
        self.bandwidth_hz / self.pulse_duration_s
    }

    /// Samples per pulse, floor(f_s * T_p).
    pub fn n_fast(&self) -> usize {
        // guard against 10e6 * 40e-6 = 399.99999...
        (self.sample_rate_hz * self.pulse_duration_s + 1e-9).floor() as usize
    }

    pub fn wavelength_m(&self) -> f64 {
        C / self.carrier_freq_hz
    }

    /// Beat frequency of a round-trip path of `path_m` meters.
    pub fn beat_hz(&self, path_m: f64) -> f64 {
        self.chirp_slope() * path_m / C
    }

    /// Range spacing of one fast-time FFT bin, c / (2 mu) * f_s / N_fast.
    pub fn range_bin_m(&self) -> f64 {
        self.sample_rate_hz / self.n_fast() as f64 * C / (2.0 * self.chirp_slope())
    }

    /// Midpoint of the two antennas.
    pub fn antenna_center(&self) -> [f64; 3] {
        [
            0.5 * (self.tx_pos_m[0] + self.rx_pos_m[0]),
            0.5 * (self.tx_pos_m[1] + self.rx_pos_m[1]),
            0.5 * (self.tx_pos_m[2] + self.rx_pos_m[2]),
        ]
    }

    fn check(&self) -> Result<(), ConfigError> {
        let positive = [
            ("radar.carrier_freq_hz", self.carrier_freq_hz),
            ("radar.bandwidth_hz", self.bandwidth_hz),
            ("radar.prf_hz", self.prf_hz),
            ("radar.sample_rate_hz", self.sample_rate_hz),
            ("radar.pulse_duration_s", self.pulse_duration_s),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        let mu = self.chirp_slope();
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid("radar.bandwidth_hz", "chirp slope is not finite"));
        }
        if self.n_fast() < 8 {
            return Err(invalid(
                "radar.sample_rate_hz",
                format!("only {} samples per pulse (need >= 8)", self.n_fast()),
            ));
        }
        for (field, p) in [("radar.tx_pos_m", self.tx_pos_m), ("radar.rx_pos_m", self.rx_pos_m)] {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid(field, "non-finite coordinate"));
            }
        }
        if !self.antenna_gain_dbi.is_finite() || !self.antenna_isolation_db.is_finite() {
            return Err(invalid("radar.antenna_gain_dbi", "must be finite"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(invalid("radar.snr_db", "must be a number or inf"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallConfig {
    pub center_m: [f64; 3],
    /// (length along x, thickness along y, height along z).
    pub dims_m: [f64; 3],
    pub rel_permittivity: f64,
    pub loss_tangent: f64,
}

impl WallConfig {
    pub fn table_default() -> Self {
        WallConfig {
            center_m: [-0.1, 0.0, 1.5],
            dims_m: [5.0, 0.24, 2.5],
            rel_permittivity: 6.0,
            loss_tangent: 0.03,
        }
    }

    /// Default reflecting wall for the free-space-with-multipath scenario:
    /// same slab, placed behind a target standing ~3 m out.
    pub fn reflector_default() -> Self {
        WallConfig {
            center_m: [-0.1, 3.5, 1.5],
            ..Self::table_default()
        }
    }

    pub fn thickness_m(&self) -> f64 {
        self.dims_m[1]
    }

    /// y of the face nearest the antennas.
    pub fn front_face_y(&self) -> f64 {
        self.center_m[1] - 0.5 * self.thickness_m()
    }

    pub fn back_face_y(&self) -> f64 {
        self.center_m[1] + 0.5 * self.thickness_m()
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.center_m.iter().any(|v| !v.is_finite()) {
            return Err(invalid("wall.center_m", "non-finite coordinate"));
        }
        if self.dims_m.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("wall.dims_m", "all dimensions must be > 0"));
        }
        if !(self.rel_permittivity.is_finite() && self.rel_permittivity >= 1.0) {
            return Err(invalid("wall.rel_permittivity", "must be >= 1"));
        }
        if !(self.loss_tangent.is_finite() && self.loss_tangent >= 0.0) {
            return Err(invalid("wall.loss_tangent", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hamming, 0.54 - 0.46 cos(2 pi n / L).
    Hamming,
    /// Periodic Hann.
    Hann,
    Rect,
}

/// What the DTM's slow-time signal is summed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtmSource {
    /// Coherent sum of the complex MTI range profiles.
    Complex,
    /// Sum of MTI magnitudes (drops Doppler phase; kept for comparison).
    Magnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcConfig {
    pub stft_window_len: usize,
    pub stft_overlap: f64,
    pub stft_window_kind: WindowKind,
    /// FFT length as a multiple of the window length.
    pub stft_zero_pad: usize,
    pub n_ridges: usize,
    /// Max bin jump when linking ridges across columns.
    pub ridge_jump_bins: usize,
    pub sg_window: usize,
    pub sg_degree: usize,
    pub enhance: bool,
    pub enhance_quantile: f64,
    pub dtm_source: DtmSource,
    /// Optional [lo, hi) range window in meters for the DTM range summation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_gate_m: Option<[f64; 2]>,
}

impl ProcConfig {
    pub fn for_scenario(kind: ScenarioKind) -> Self {
        ProcConfig {
            stft_window_len: if kind == ScenarioKind::ThroughWall { 64 } else { 256 },
            stft_overlap: 0.9,
            stft_window_kind: WindowKind::Hamming,
            stft_zero_pad: 4,
            n_ridges: 3,
            ridge_jump_bins: 5,
            sg_window: 9,
            sg_degree: 3,
            enhance: false,
            enhance_quantile: 0.6,
            dtm_source: DtmSource::Complex,
            range_gate_m: None,
        }
    }

    /// STFT hop in samples.
    pub fn stft_hop(&self) -> usize {
        ((self.stft_window_len as f64 * (1.0 - self.stft_overlap)).round() as usize).max(1)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.stft_window_len == 0 {
            return Err(invalid("proc.stft_window_len", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.stft_overlap) {
            return Err(invalid("proc.stft_overlap", "must lie in [0, 1)"));
        }
        if self.stft_zero_pad == 0 {
            return Err(invalid("proc.stft_zero_pad", "must be >= 1"));
        }
        if self.n_ridges == 0 {
            return Err(invalid("proc.n_ridges", "must be >= 1"));
        }
        if self.sg_window < 3 || self.sg_window % 2 == 0 {
            return Err(invalid("proc.sg_window", "must be odd and >= 3"));
        }
        if self.sg_degree >= self.sg_window {
            return Err(invalid("proc.sg_degree", "must be < sg_window"));
        }
        if !(0.0..=1.0).contains(&self.enhance_quantile) {
            return Err(invalid("proc.enhance_quantile", "must lie in [0, 1]"));
        }
        if let Some([lo, hi]) = self.range_gate_m {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
                return Err(invalid("proc.range_gate_m", "need 0 <= lo < hi"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseConfig {
    /// White-acceleration process noise scale.
    pub kalman_q: f64,
    /// Measurement noise variance, m^2.
    pub kalman_r: f64,
    /// Depth-to-height ratio applied to pool depth.
    pub depth_ratio: f64,
}

impl Default for PoseConfig {
    fn default() -> Self {
        PoseConfig {
            kalman_q: 0.01,
            kalman_r: 0.0025,
            depth_ratio: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoConfig {
    /// Per-joint reflectivity, joint order of [`crate::pose::JOINT_NAMES`].
    pub reflectivity: [f64; NUM_JOINTS],
}

impl Default for EchoConfig {
    fn default() -> Self {
        // head, neck, shoulders, hips: 1.0; elbows, wrists, knees, ankles: 0.4
        EchoConfig {
            reflectivity: [
                1.0, 1.0, 1.0, 0.4, 0.4, 1.0, 0.4, 0.4, 1.0, 0.4, 0.4, 1.0, 0.4, 0.4,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingConfig {
    pub confirm_hits: u32,
    pub delete_misses: u32,
    pub gate_cost: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            confirm_hits: 3,
            delete_misses: 5,
            gate_cost: 0.7,
        }
    }
}

/// Full, defaulted parameter set. Immutable once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioKind,
    pub multipath: bool,
    pub wall_attenuation: bool,
    pub max_range_m: f64,
    pub radar: RadarConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallConfig>,
    pub proc: ProcConfig,
    pub pose: PoseConfig,
    pub echo: EchoConfig,
    pub tracking: TrackingConfig,
}

impl SimConfig {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let (radar, wall, max_range_m) = match kind {
            ScenarioKind::FreeSpace => (RadarConfig::free_space(), None, 7.0),
            ScenarioKind::FreeSpaceWallReflection => (
                RadarConfig::free_space(),
                Some(WallConfig::reflector_default()),
                7.0,
            ),
            ScenarioKind::ThroughWall => (
                RadarConfig::through_wall(),
                Some(WallConfig::table_default()),
                8.0,
            ),
        };
        SimConfig {
            scenario: kind,
            multipath: true,
            wall_attenuation: true,
            max_range_m,
            radar,
            wall,
            proc: ProcConfig::for_scenario(kind),
            pose: PoseConfig::default(),
            echo: EchoConfig::default(),
            tracking: TrackingConfig::default(),
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            kind: self.scenario,
            multipath_enabled: self.multipath,
            wall_attenuation_enabled: self.wall_attenuation,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("SimConfig always serializes")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Applies [`SEED_ENV`] if set.
    pub fn apply_env_overrides(&mut self) -> Result<(), ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.radar.seed = v
                .trim()
                .parse()
                .map_err(|_| invalid("RADHARS_SEED", format!("not an unsigned integer: {v:?}")))?;
        }
        Ok(())
    }
}

// Partial mirror of SimConfig used for parsing; every field optional.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<ScenarioKind>,
    multipath: Option<bool>,
    wall_attenuation: Option<bool>,
    max_range_m: Option<f64>,
    radar: Option<RawRadar>,
    wall: Option<RawWall>,
    proc: Option<RawProc>,
    pose: Option<RawPose>,
    echo: Option<RawEcho>,
    tracking: Option<RawTracking>,
}

macro_rules! raw_section {
    ($raw:ident => $full:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $raw {
            $($field: Option<$ty>,)*
        }

        impl $raw {
            fn merge_into(self, full: &mut $full) {
                $(if let Some(v) = self.$field { full.$field = v; })*
            }
        }
    };
}

raw_section!(RawRadar => RadarConfig {
    carrier_freq_hz: f64, bandwidth_hz: f64, prf_hz: f64, sample_rate_hz: f64,
    pulse_duration_s: f64, tx_pos_m: [f64; 3], rx_pos_m: [f64; 3],
    antenna_gain_dbi: f64, antenna_isolation_db: f64, snr_db: f64, seed: u64,
});
raw_section!(RawWall => WallConfig {
    center_m: [f64; 3], dims_m: [f64; 3], rel_permittivity: f64, loss_tangent: f64,
});
raw_section!(RawPose => PoseConfig { kalman_q: f64, kalman_r: f64, depth_ratio: f64 });
raw_section!(RawEcho => EchoConfig { reflectivity: [f64; NUM_JOINTS] });
raw_section!(RawTracking => TrackingConfig { confirm_hits: u32, delete_misses: u32, gate_cost: f64 });

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProc {
    stft_window_len: Option<usize>,
    stft_overlap: Option<f64>,
    stft_window_kind: Option<WindowKind>,
    stft_zero_pad: Option<usize>,
    n_ridges: Option<usize>,
    ridge_jump_bins: Option<usize>,
    sg_window: Option<usize>,
    sg_degree: Option<usize>,
    enhance: Option<bool>,
    enhance_quantile: Option<f64>,
    dtm_source: Option<DtmSource>,
    range_gate_m: Option<[f64; 2]>,
}

impl RawProc {
    fn merge_into(self, full: &mut ProcConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { full.$f = v; })* };
        }
        set!(
            stft_window_len, stft_overlap, stft_window_kind, stft_zero_pad, n_ridges,
            ridge_jump_bins, sg_window, sg_degree, enhance, enhance_quantile, dtm_source
        );
        if self.range_gate_m.is_some() {
            full.range_gate_m = self.range_gate_m;
        }
    }
}

/// Parses a config document and fills defaults. Field checks run, but not the
/// range/Nyquist check; see [`validate_config`].
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let kind = raw.scenario.unwrap_or(ScenarioKind::FreeSpace);
    let mut cfg = SimConfig::defaults(kind);
    if let Some(v) = raw.multipath {
        cfg.multipath = v;
    }
    if let Some(v) = raw.wall_attenuation {
        cfg.wall_attenuation = v;
    }
    if let Some(v) = raw.max_range_m {
        cfg.max_range_m = v;
    }
    if let Some(r) = raw.radar {
        r.merge_into(&mut cfg.radar);
    }
    if let Some(w) = raw.wall {
        if kind == ScenarioKind::FreeSpace {
            return Err(ConfigError::ScenarioMismatch(
                "free-space scenario does not take a [wall] section".into(),
            ));
        }
        let mut wall = cfg.wall.take().expect("wall scenarios default a wall");
        w.merge_into(&mut wall);
        cfg.wall = Some(wall);
    }
    if let Some(p) = raw.proc {
        p.merge_into(&mut cfg.proc);
    }
    if let Some(p) = raw.pose {
        p.merge_into(&mut cfg.pose);
    }
    if let Some(e) = raw.echo {
        e.merge_into(&mut cfg.echo);
    }
    if let Some(t) = raw.tracking {
        t.merge_into(&mut cfg.tracking);
    }
    validate_config(cfg.clone(), cfg.max_range_m)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Checks every parameter invariant, scenario/wall consistency, and that a
/// target at `max_range_m` (plus any wall delay) beats below f_s / 2.
/// Returns `cfg` unchanged on success.
pub fn validate_config(cfg: SimConfig, max_range_m: f64) -> Result<SimConfig, ConfigError> {
    cfg.radar.check()?;
    cfg.proc.check()?;
    if !(max_range_m.is_finite() && max_range_m > 0.0) {
        return Err(invalid("max_range_m", "must be finite and > 0"));
    }
    match (cfg.scenario.needs_wall(), &cfg.wall) {
        (true, None) => {
            return Err(ConfigError::ScenarioMismatch(format!(
                "scenario {} requires a wall",
                cfg.scenario
            )))
        }
        (false, Some(_)) => {
            return Err(ConfigError::ScenarioMismatch(
                "free-space scenario must not carry a wall".into(),
            ))
        }
        (_, Some(w)) => w.check()?,
        (false, None) => {}
    }
    if cfg.pose.kalman_q < 0.0 || cfg.pose.kalman_r < 0.0 || !cfg.pose.kalman_q.is_finite() {
        return Err(invalid("pose.kalman_q", "noise scales must be >= 0"));
    }
    if !(cfg.pose.depth_ratio.is_finite() && cfg.pose.depth_ratio >= 0.0) {
        return Err(invalid("pose.depth_ratio", "must be >= 0"));
    }
    if cfg.echo.reflectivity.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("echo.reflectivity", "weights must be finite and >= 0"));
    }
    if !(cfg.tracking.gate_cost > 0.0) {
        return Err(invalid("tracking.gate_cost", "must be > 0"));
    }

    let nyquist_hz = cfg.radar.sample_rate_hz / 2.0;
    let mut path_m = 2.0 * max_range_m;
    if let (ScenarioKind::ThroughWall, Some(w)) = (cfg.scenario, &cfg.wall) {
        // extra optical path of the slowest (reverberating) wall route
        let n = crate::echo::wall_em(w, cfg.radar.carrier_freq_hz).n_wall;
        let d = w.thickness_m();
        path_m += 2.0 * d * (n - 1.0);
        if cfg.multipath {
            path_m += 4.0 * d * n;
        }
    }
    let beat_hz = cfg.radar.beat_hz(path_m);
    if beat_hz >= nyquist_hz {
        return Err(ConfigError::NyquistViolation {
            range_m: max_range_m,
            beat_hz,
            nyquist_hz,
        });
    }
    if let (ScenarioKind::FreeSpaceWallReflection, Some(w), true) =
        (cfg.scenario, &cfg.wall, cfg.multipath)
    {
        // image antennas sit 2 * (face - antenna) behind the antennas
        let face = w.front_face_y() - cfg.radar.antenna_center()[1];
        if face <= 0.0 {
            return Err(ConfigError::ScenarioMismatch(
                "reflecting wall must lie in front of the antennas (+y)".into(),
            ));
        }
        let image_beat = cfg.radar.beat_hz(4.0 * face);
        if image_beat >= nyquist_hz {
            return Err(ConfigError::NyquistViolation {
                range_m: 2.0 * face,
                beat_hz: image_beat,
                nyquist_hz,
            });
        }
    }
    Ok(cfg)
}
