//! Radio propagation: log-distance path loss, knife-edge terrain
//! diffraction, and noisy RSSI synthesis.
//!
//! The mean received power model is
//!
//! `rssi = ref_power - 10 * n * log10(d / d0) + gain(phi)`
//!
//! with `d` the full 3-D distance and `gain` the antenna pattern evaluated
//! at the relative bearing. Terrain shadowing follows the single knife-edge
//! approximation: the line of sight is sampled where it crosses terrain grid
//! lines, the sample with the worst clearance-to-Fresnel-radius ratio picks
//! the diffraction loss `max(0, -20 * h / F1 + 10)` dB.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::GainPattern;
use crate::geometry::{distance_3d, relative_bearing, SourceState, UavState};
use crate::scalar::Real;
use crate::{Error, Result};

/// Log-distance path loss parameters plus the pulse noise level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioModel<F> {
    /// Received power at the reference distance, dBm.
    pub ref_power_dbm: F,
    /// Reference distance `d0`, metres.
    pub ref_distance_m: F,
    /// Path loss exponent `n`.
    pub path_loss_exponent: F,
    /// Standard deviation of per-pulse RSSI noise, dB.
    pub noise_std_db: F,
}

impl<F: Real> RadioModel<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.ref_distance_m > F::zero()) {
            return Err(Error::InvalidParameter {
                what: "radio model",
                why: format!("reference distance {} m must be positive", self.ref_distance_m),
            });
        }
        if !(self.noise_std_db >= F::zero()) {
            return Err(Error::InvalidParameter {
                what: "radio model",
                why: format!("noise std {} dB must be non-negative", self.noise_std_db),
            });
        }
        for (name, v) in [
            ("ref_power_dbm", self.ref_power_dbm),
            ("path_loss_exponent", self.path_loss_exponent),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "radio model",
                    why: format!("{name} must be finite"),
                });
            }
        }
        Ok(())
    }
}

/// Noise-free mean RSSI at the receiver, dBm.
///
/// Errors on zero 3-D distance and on horizontally coincident positions
/// (no bearing).
pub fn mean_rssi<F: Real>(
    radio: &RadioModel<F>,
    pattern: &GainPattern<F>,
    source: &SourceState<F>,
    uav: &UavState<F>,
) -> Result<F> {
    radio.validate()?;
    let d = distance_3d(source.position, uav.position);
    if d == F::zero() {
        return Err(Error::DegenerateGeometry("coincident receiver and source"));
    }
    let phi = relative_bearing(source, uav)?;
    let ten = F::of(10.0);
    Ok(radio.ref_power_dbm - ten * radio.path_loss_exponent * (d / radio.ref_distance_m).log10()
        + pattern.gain_db(phi))
}

/// First Fresnel zone radius in metres.
///
/// `d1` and `d2` are the distances from each endpoint to the evaluation
/// point and `total` the link length, all in km; `freq` is in GHz. `d1 + d2`
/// must match `total` within 1%.
pub fn fresnel_radius<F: Real>(d1_km: F, d2_km: F, freq_ghz: F, total_km: F) -> Result<F> {
    if !(d1_km >= F::zero() && d2_km >= F::zero()) {
        return Err(Error::InvalidParameter {
            what: "fresnel radius",
            why: format!("segment lengths ({d1_km}, {d2_km}) km must be non-negative"),
        });
    }
    if !(freq_ghz > F::zero()) {
        return Err(Error::InvalidParameter {
            what: "fresnel radius",
            why: format!("frequency {freq_ghz} GHz must be positive"),
        });
    }
    if !(total_km > F::zero()) {
        return Err(Error::InvalidParameter {
            what: "fresnel radius",
            why: format!("link length {total_km} km must be positive"),
        });
    }
    let mismatch = ((d1_km + d2_km) - total_km).abs();
    if mismatch > F::of(0.01) * total_km {
        return Err(Error::InvalidParameter {
            what: "fresnel radius",
            why: format!("d1 + d2 = {} km does not match total {} km", d1_km + d2_km, total_km),
        });
    }
    Ok(F::of(17.3) * (d1_km * d2_km / (freq_ghz * total_km)).sqrt())
}

/// Regular terrain height grid with bilinear interpolation.
///
/// Heights sit on grid nodes spaced `cell_size_m` apart; row 0 is the
/// southern edge (`origin[1]`) and rows grow northward. Interpolation is
/// defined on the node hull only; queries outside it are errors.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrainGrid<F> {
    origin: [F; 2],
    cell_size_m: F,
    rows: usize,
    cols: usize,
    heights: Vec<F>,
}

impl<F: Real> TerrainGrid<F> {
    /// `heights` is row-major with row 0 at `origin[1]` (south).
    pub fn new(
        origin: [F; 2],
        cell_size_m: F,
        rows: usize,
        cols: usize,
        heights: Vec<F>,
    ) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidParameter {
                what: "terrain grid",
                why: format!("{rows}x{cols} grid is too small to interpolate"),
            });
        }
        if !(cell_size_m > F::zero()) {
            return Err(Error::InvalidParameter {
                what: "terrain grid",
                why: format!("cell size {cell_size_m} m must be positive"),
            });
        }
        if heights.len() != rows * cols {
            return Err(Error::InvalidParameter {
                what: "terrain grid",
                why: format!("{} heights for a {rows}x{cols} grid", heights.len()),
            });
        }
        if let Some(h) = heights.iter().find(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter {
                what: "terrain grid",
                why: format!("non-finite height {h}"),
            });
        }
        Ok(Self {
            origin,
            cell_size_m,
            rows,
            cols,
            heights,
        })
    }

    /// Load an ESRI ASCII raster (`ncols`/`nrows`/`xllcorner`/`yllcorner`/
    /// `cellsize` headers, optional `NODATA_value`, rows listed north to
    /// south). NODATA cells are rejected: a hole in the surface cannot be
    /// interpolated.
    pub fn from_esri_ascii_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_esri_ascii_reader(BufReader::new(File::open(path)?))
    }

    pub fn from_esri_ascii_reader(reader: impl BufRead) -> Result<Self> {
        let mut ncols: Option<usize> = None;
        let mut nrows: Option<usize> = None;
        let mut xll: Option<f64> = None;
        let mut yll: Option<f64> = None;
        let mut cell: Option<f64> = None;
        let mut nodata: Option<f64> = None;
        let mut values: Vec<F> = Vec::new();
        let mut header_done = false;

        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if !header_done {
                let mut parts = trimmed.split_whitespace();
                let key = parts.next().unwrap_or("").to_ascii_lowercase();
                let is_header = matches!(
                    key.as_str(),
                    "ncols" | "nrows" | "xllcorner" | "yllcorner" | "cellsize" | "nodata_value"
                );
                if is_header {
                    let value = parts.next().ok_or(Error::Parse {
                        line: idx + 1,
                        msg: format!("missing value for {key}"),
                    })?;
                    let parse_f = || -> Result<f64> {
                        value.parse().map_err(|_| Error::Parse {
                            line: idx + 1,
                            msg: format!("bad value '{value}' for {key}"),
                        })
                    };
                    match key.as_str() {
                        "ncols" => ncols = Some(parse_f()? as usize),
                        "nrows" => nrows = Some(parse_f()? as usize),
                        "xllcorner" => xll = Some(parse_f()?),
                        "yllcorner" => yll = Some(parse_f()?),
                        "cellsize" => cell = Some(parse_f()?),
                        _ => nodata = Some(parse_f()?),
                    }
                    continue;
                }
                header_done = true;
            }
            for token in trimmed.split_whitespace() {
                let v: f64 = token.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad height '{token}'"),
                })?;
                if let Some(nd) = nodata {
                    if v == nd {
                        return Err(Error::Parse {
                            line: idx + 1,
                            msg: "NODATA cells are not supported".into(),
                        });
                    }
                }
                values.push(F::of(v));
            }
        }

        let (ncols, nrows) = match (ncols, nrows) {
            (Some(c), Some(r)) => (c, r),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing ncols/nrows header".into(),
                })
            }
        };
        let (xll, yll, cell) = match (xll, yll, cell) {
            (Some(x), Some(y), Some(c)) => (x, y, c),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing xllcorner/yllcorner/cellsize header".into(),
                })
            }
        };
        if values.len() != nrows * ncols {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "expected {} heights for {nrows}x{ncols}, found {}",
                    nrows * ncols,
                    values.len()
                ),
            });
        }
        // ESRI lists the northernmost row first; flip into south-up storage.
        let mut heights = Vec::with_capacity(values.len());
        for row in (0..nrows).rev() {
            heights.extend_from_slice(&values[row * ncols..(row + 1) * ncols]);
        }
        Self::new([F::of(xll), F::of(yll)], F::of(cell), nrows, ncols, heights)
    }

    /// Deterministic rolling terrain: a seeded sum of plane sinusoids,
    /// rescaled to span `[0, relief_m]`.
    pub fn synthetic(
        origin: [F; 2],
        cell_size_m: F,
        rows: usize,
        cols: usize,
        relief_m: F,
        seed: u64,
    ) -> Result<Self> {
        if !(relief_m >= F::zero()) {
            return Err(Error::InvalidParameter {
                what: "terrain grid",
                why: format!("relief {relief_m} m must be non-negative"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extent = cell_size_m.as_f64() * (rows.min(cols) as f64 - 1.0);
        let waves: Vec<(f64, f64, f64, f64)> = (0..6)
            .map(|k| {
                let wavelength = rng.random_range(0.15..0.6) * extent;
                let direction = rng.random_range(0.0..std::f64::consts::TAU);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let amplitude = 1.0 / (1.0 + k as f64);
                (
                    std::f64::consts::TAU / wavelength * direction.cos(),
                    std::f64::consts::TAU / wavelength * direction.sin(),
                    phase,
                    amplitude,
                )
            })
            .collect();

        let mut raw = Vec::with_capacity(rows * cols);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in 0..rows {
            for c in 0..cols {
                let x = origin[0].as_f64() + c as f64 * cell_size_m.as_f64();
                let y = origin[1].as_f64() + r as f64 * cell_size_m.as_f64();
                let h: f64 = waves
                    .iter()
                    .map(|(kx, ky, phase, amp)| amp * (kx * x + ky * y + phase).sin())
                    .sum();
                lo = lo.min(h);
                hi = hi.max(h);
                raw.push(h);
            }
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        let heights = raw
            .into_iter()
            .map(|h| F::of((h - lo) / span) * relief_m)
            .collect();
        Self::new(origin, cell_size_m, rows, cols, heights)
    }

    pub fn origin(&self) -> [F; 2] {
        self.origin
    }

    pub fn cell_size_m(&self) -> F {
        self.cell_size_m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// North-east corner of the interpolation hull.
    pub fn max_corner(&self) -> [F; 2] {
        [
            self.origin[0] + self.cell_size_m * F::of((self.cols - 1) as f64),
            self.origin[1] + self.cell_size_m * F::of((self.rows - 1) as f64),
        ]
    }

    /// Bilinear height lookup. Errors outside the node hull.
    pub fn height_at(&self, p: [F; 2]) -> Result<F> {
        let max = self.max_corner();
        if p[0] < self.origin[0] || p[0] > max[0] || p[1] < self.origin[1] || p[1] > max[1] {
            return Err(Error::OutOfBounds(format!(
                "({}, {}) outside terrain hull ({}, {})..({}, {})",
                p[0], p[1], self.origin[0], self.origin[1], max[0], max[1]
            )));
        }
        let fx = (p[0] - self.origin[0]) / self.cell_size_m;
        let fy = (p[1] - self.origin[1]) / self.cell_size_m;
        let ix = (fx.to_usize().unwrap_or(0)).min(self.cols - 2);
        let iy = (fy.to_usize().unwrap_or(0)).min(self.rows - 2);
        let tx = fx - F::of(ix as f64);
        let ty = fy - F::of(iy as f64);
        let h = |r: usize, c: usize| self.heights[r * self.cols + c];
        let bottom = h(iy, ix) * (F::one() - tx) + h(iy, ix + 1) * tx;
        let top = h(iy + 1, ix) * (F::one() - tx) + h(iy + 1, ix + 1) * tx;
        Ok(bottom * (F::one() - ty) + top * ty)
    }
}

/// Knife-edge diffraction loss along the straight line `a -> b`, dB.
///
/// The line-of-sight profile is sampled wherever its horizontal projection
/// crosses a grid line of `grid`, strictly between the endpoints (at the
/// endpoints the Fresnel radius vanishes and the clearance ratio is
/// undefined; a link inside a single cell falls back to its midpoint). The
/// sample minimizing clearance / F1 sets the loss, clamped to >= 0.
pub fn terrain_loss<F: Real>(
    grid: &TerrainGrid<F>,
    a: [F; 3],
    b: [F; 3],
    freq_ghz: F,
) -> Result<F> {
    let length_m = distance_3d(a, b);
    if length_m == F::zero() {
        return Err(Error::DegenerateGeometry("zero-length link"));
    }
    let length_km = length_m / F::of(1000.0);

    let mut ts: Vec<F> = Vec::new();
    let cell = grid.cell_size_m;
    for axis in 0..2 {
        let (start, delta) = (a[axis], b[axis] - a[axis]);
        if delta == F::zero() {
            continue;
        }
        // Indices of grid lines strictly between the endpoint coordinates.
        let lo = start.min(start + delta);
        let hi = start.max(start + delta);
        let first = ((lo - grid.origin[axis]) / cell).ceil();
        let mut k = first;
        loop {
            let coord = grid.origin[axis] + k * cell;
            if coord >= hi {
                break;
            }
            if coord > lo {
                let t = (coord - start) / delta;
                if t > F::zero() && t < F::one() {
                    ts.push(t);
                }
            }
            k += F::one();
        }
    }
    ts.sort_by(|x, y| x.partial_cmp(y).expect("crossing parameters are finite"));
    ts.dedup_by(|x, y| (*x - *y).abs() < F::of(1e-12));
    if ts.is_empty() {
        ts.push(F::of(0.5));
    }

    let mut worst_ratio = F::infinity();
    for &t in &ts {
        let pos = [
            a[0] + (b[0] - a[0]) * t,
            a[1] + (b[1] - a[1]) * t,
        ];
        let line_z = a[2] + (b[2] - a[2]) * t;
        let clearance = line_z - grid.height_at(pos)?;
        let d1 = t * length_km;
        let d2 = (F::one() - t) * length_km;
        let f1 = fresnel_radius(d1, d2, freq_ghz, length_km)?;
        let ratio = clearance / f1;
        if ratio < worst_ratio {
            worst_ratio = ratio;
        }
    }

    let loss = F::of(-20.0) * worst_ratio + F::of(10.0);
    Ok(loss.max(F::zero()))
}

/// Everything about the channel that is not the radio itself.
#[derive(Clone, Debug)]
pub struct EnvironmentModel<F> {
    pub terrain: Option<TerrainGrid<F>>,
    /// Fixed extra attenuation applied to every pulse, dB.
    pub extra_loss_db: F,
    pub carrier_freq_ghz: F,
    /// Probability that an emitted pulse is detected at all.
    pub detection_prob: F,
}

impl<F: Real> EnvironmentModel<F> {
    pub fn new(
        terrain: Option<TerrainGrid<F>>,
        extra_loss_db: F,
        carrier_freq_ghz: F,
        detection_prob: F,
    ) -> Result<Self> {
        if !(extra_loss_db >= F::zero() && extra_loss_db.is_finite()) {
            return Err(Error::InvalidParameter {
                what: "environment",
                why: format!("extra loss {extra_loss_db} dB must be non-negative"),
            });
        }
        if !(carrier_freq_ghz > F::zero()) {
            return Err(Error::InvalidParameter {
                what: "environment",
                why: format!("carrier frequency {carrier_freq_ghz} GHz must be positive"),
            });
        }
        if !(detection_prob >= F::zero() && detection_prob <= F::one()) {
            return Err(Error::InvalidParameter {
                what: "environment",
                why: format!("detection probability {detection_prob} outside [0, 1]"),
            });
        }
        Ok(Self {
            terrain,
            extra_loss_db,
            carrier_freq_ghz,
            detection_prob,
        })
    }

    /// Free-space-free losses: terrain diffraction (when a grid is present)
    /// plus the fixed extra attenuation.
    pub fn excess_loss_db(&self, tx: [F; 3], rx: [F; 3]) -> Result<F> {
        let terrain = match &self.terrain {
            Some(grid) => terrain_loss(grid, tx, rx, self.carrier_freq_ghz)?,
            None => F::zero(),
        };
        Ok(terrain + self.extra_loss_db)
    }
}

/// One synthetic pulse: `None` when the pulse goes undetected, otherwise the
/// received RSSI including terrain, extra attenuation, and Gaussian noise.
///
/// Draw order is fixed (one uniform for detection, then one normal for noise
/// only when detected), so equal seeds give equal sample streams.
pub fn synthesize_rssi<F: Real, R: Rng + ?Sized>(
    radio: &RadioModel<F>,
    pattern: &GainPattern<F>,
    env: &EnvironmentModel<F>,
    source: &SourceState<F>,
    uav: &UavState<F>,
    rng: &mut R,
) -> Result<Option<F>> {
    let detect = F::uniform(rng, F::zero(), F::one()) < env.detection_prob;
    if !detect {
        return Ok(None);
    }
    let mean = mean_rssi(radio, pattern, source, uav)?;
    let excess = env.excess_loss_db(source.position, uav.position)?;
    let noise = radio.noise_std_db * F::std_normal(rng);
    Ok(Some(mean - excess + noise))
}
