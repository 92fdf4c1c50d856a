//! On-disk formats: JSON descriptor plus raw little-endian float32 payload
//! for IF cubes and maps, CSV for ridges, PNG for rendered maps.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::echo::IfCube;
use crate::maps::{db_normalize, Axis, MapKind, RidgeSet, SpectralMap, DB_FLOOR};
use crate::Complex64;

pub const CUBE_FORMAT: &str = "radhars-ifcube";
pub const MAP_FORMAT: &str = "radhars-map";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad descriptor: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{path}: image encoding failed: {msg}")]
    Image { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeDescriptor {
    pub format: String,
    pub n_fast: usize,
    pub n_pulse: usize,
    pub fast_dt: f64,
    pub slow_dt: f64,
    pub t0: f64,
    pub config_hash: String,
    pub layout: String,
    pub dtype: String,
    /// Payload file name, relative to the descriptor.
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDescriptor {
    pub format: String,
    pub kind: MapKind,
    pub rows: usize,
    pub cols: usize,
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub layout: String,
    pub dtype: String,
    pub payload: String,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(v).expect("descriptor serializes");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn payload_path(desc: &Path, name: &str) -> PathBuf {
    desc.parent().unwrap_or(Path::new(".")).join(name)
}

fn read_f32s(path: &Path, expected: usize) -> Result<Vec<f32>, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() != expected * 4 {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            msg: format!("payload has {} bytes, expected {}", bytes.len(), expected * 4),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

/// Writes `<stem>.json` and `<stem>.f32` into `dir`. Returns both paths.
pub fn write_cube(dir: &Path, stem: &str, cube: &IfCube, config_hash: &str) -> Result<(PathBuf, PathBuf), IoError> {
    let desc_path = dir.join(format!("{stem}.json"));
    let data_path = dir.join(format!("{stem}.f32"));
    let mut bytes = Vec::with_capacity(cube.samples.len() * 8);
    for z in &cube.samples {
        bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    fs::write(&data_path, bytes).map_err(io_err(&data_path))?;
    let desc = CubeDescriptor {
        format: CUBE_FORMAT.into(),
        n_fast: cube.n_fast,
        n_pulse: cube.n_pulse,
        fast_dt: cube.fast_dt,
        slow_dt: cube.slow_dt,
        t0: cube.t0,
        config_hash: config_hash.into(),
        layout: "pulse-major, fast time contiguous".into(),
        dtype: "complex float32 little-endian (re, im)".into(),
        payload: format!("{stem}.f32"),
    };
    write_json(&desc_path, &desc)?;
    Ok((desc_path, data_path))
}

pub fn read_cube(desc_path: &Path) -> Result<(IfCube, CubeDescriptor), IoError> {
    let desc: CubeDescriptor = read_json(desc_path)?;
    if desc.format != CUBE_FORMAT {
        return Err(IoError::Format {
            path: desc_path.to_path_buf(),
            msg: format!("not an IF cube descriptor (format {:?})", desc.format),
        });
    }
    let raw = read_f32s(&payload_path(desc_path, &desc.payload), 2 * desc.n_fast * desc.n_pulse)?;
    let samples = raw
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0] as f64, p[1] as f64))
        .collect();
    let cube = IfCube {
        n_fast: desc.n_fast,
        n_pulse: desc.n_pulse,
        samples,
        fast_dt: desc.fast_dt,
        slow_dt: desc.slow_dt,
        t0: desc.t0,
    };
    Ok((cube, desc))
}

/// Writes `<stem>.json` and `<stem>.f32` into `dir`.
pub fn write_map(dir: &Path, stem: &str, map: &SpectralMap) -> Result<(PathBuf, PathBuf), IoError> {
    let desc_path = dir.join(format!("{stem}.json"));
    let data_path = dir.join(format!("{stem}.f32"));
    let bytes: Vec<u8> = map.values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    fs::write(&data_path, bytes).map_err(io_err(&data_path))?;
    let desc = MapDescriptor {
        format: MAP_FORMAT.into(),
        kind: map.kind,
        rows: map.rows,
        cols: map.cols,
        row_axis: map.row_axis.clone(),
        col_axis: map.col_axis.clone(),
        layout: "row-major, rows = range or Doppler bins, cols = slow time".into(),
        dtype: "float32 little-endian".into(),
        payload: format!("{stem}.f32"),
    };
    write_json(&desc_path, &desc)?;
    Ok((desc_path, data_path))
}

pub fn read_map(desc_path: &Path) -> Result<SpectralMap, IoError> {
    let desc: MapDescriptor = read_json(desc_path)?;
    if desc.format != MAP_FORMAT {
        return Err(IoError::Format {
            path: desc_path.to_path_buf(),
            msg: format!("not a map descriptor (format {:?})", desc.format),
        });
    }
    let raw = read_f32s(&payload_path(desc_path, &desc.payload), desc.rows * desc.cols)?;
    Ok(SpectralMap {
        rows: desc.rows,
        cols: desc.cols,
        values: raw.into_iter().map(f64::from).collect(),
        row_axis: desc.row_axis,
        col_axis: desc.col_axis,
        kind: desc.kind,
    })
}

pub fn write_ridges(path: &Path, ridges: &RidgeSet) -> Result<(), IoError> {
    fs::write(path, ridges.to_csv()).map_err(io_err(path))
}

/// Grayscale PNG on the dB scale (floor at -80 dB), highest row at the top,
/// plus a `<png>.axes.txt` sidecar with the axis scales.
pub fn render_map(path: &Path, map: &SpectralMap) -> Result<PathBuf, IoError> {
    let norm = db_normalize(map);
    let mut img = image::GrayImage::new(map.cols as u32, map.rows as u32);
    for r in 0..map.rows {
        let y = (map.rows - 1 - r) as u32;
        for c in 0..map.cols {
            let v = (norm[r * map.cols + c] * 255.0).round().clamp(0.0, 255.0) as u8;
            img.put_pixel(c as u32, y, image::Luma([v]));
        }
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::Image {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
    let mut side = path.as_os_str().to_owned();
    side.push(".axes.txt");
    let side = PathBuf::from(side);
    let last_row = map.row_axis.at(map.rows.saturating_sub(1));
    let last_col = map.col_axis.at(map.cols.saturating_sub(1));
    let text = format!(
        "kind {}\nsize {} x {} (width x height)\nx: slow time {} .. {} {} (step {})\ny: bottom {} .. top {} {} (step {})\nscale: dB re map max, floor {} dB, black = floor, white = 0 dB\n",
        map.kind,
        map.cols,
        map.rows,
        map.col_axis.start,
        last_col,
        map.col_axis.unit,
        map.col_axis.step,
        map.row_axis.start,
        last_row,
        map.row_axis.unit,
        map.row_axis.step,
        DB_FLOOR
    );
    fs::write(&side, text).map_err(io_err(&side))?;
    Ok(side)
}
