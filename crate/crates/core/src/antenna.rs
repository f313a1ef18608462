//! Directional antenna gain patterns.
//!
//! A pattern maps relative bearing (radians off boresight, clockwise) to
//! gain in dB. Two shapes are supported: a smooth cardioid-style parametric
//! model, and a tabulated pattern interpolated linearly with wraparound.
//! Tables load from two-column CSV (`angle_deg,gain_db`).

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::geometry::wrap_angle;
use crate::scalar::Real;
use crate::{Error, Result};

/// Antenna gain as a function of relative bearing.
#[derive(Clone, Debug, PartialEq)]
pub enum GainPattern<F> {
    /// `g(phi) = boresight - (front_to_back / 2) * (1 - cos phi)`: maximum
    /// `boresight` dB at phi = 0, minimum `boresight - front_to_back` dB at
    /// phi = pi.
    Parametric { boresight_db: F, front_to_back_db: F },
    /// Piecewise-linear interpolation through `(angle, gain)` knots, wrapping
    /// from the last knot back to the first.
    Tabulated { angles_rad: Vec<F>, gains_db: Vec<F> },
}

impl<F: Real> Default for GainPattern<F> {
    /// A small directional antenna: 6.15 dB boresight (a 4 dBd yagi), 10 dB
    /// front-to-back ratio.
    fn default() -> Self {
        Self::parametric(F::of(6.15), F::of(10.0)).expect("default pattern parameters are valid")
    }
}

impl<F: Real> GainPattern<F> {
    pub fn parametric(boresight_db: F, front_to_back_db: F) -> Result<Self> {
        if !boresight_db.is_finite() || !front_to_back_db.is_finite() {
            return Err(Error::InvalidParameter {
                what: "gain pattern",
                why: "parameters must be finite".into(),
            });
        }
        if front_to_back_db < F::zero() {
            return Err(Error::InvalidParameter {
                what: "gain pattern",
                why: format!("front-to-back ratio {front_to_back_db} dB is negative"),
            });
        }
        Ok(Self::Parametric {
            boresight_db,
            front_to_back_db,
        })
    }

    /// Build a tabulated pattern from knots in degrees. Knot angles must be
    /// strictly increasing within `[0, 360)`; at least two knots.
    pub fn tabulated(angles_deg: &[F], gains_db: &[F]) -> Result<Self> {
        if angles_deg.len() != gains_db.len() {
            return Err(Error::InvalidParameter {
                what: "gain table",
                why: format!(
                    "{} angles but {} gains",
                    angles_deg.len(),
                    gains_db.len()
                ),
            });
        }
        if angles_deg.len() < 2 {
            return Err(Error::InvalidParameter {
                what: "gain table",
                why: "need at least two knots".into(),
            });
        }
        let full = F::of(360.0);
        for (i, (&a, &g)) in angles_deg.iter().zip(gains_db).enumerate() {
            if !a.is_finite() || !g.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "gain table",
                    why: format!("non-finite entry at row {i}"),
                });
            }
            if a < F::zero() || a >= full {
                return Err(Error::InvalidParameter {
                    what: "gain table",
                    why: format!("angle {a} deg outside [0, 360)"),
                });
            }
            if i > 0 && a <= angles_deg[i - 1] {
                return Err(Error::InvalidParameter {
                    what: "gain table",
                    why: format!("angles must be strictly increasing (row {i})"),
                });
            }
        }
        Ok(Self::Tabulated {
            angles_rad: angles_deg.iter().map(|a| a.to_radians()).collect(),
            gains_db: gains_db.to_vec(),
        })
    }

    /// Load a tabulated pattern from CSV with header `angle_deg,gain_db`.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(BufReader::new(File::open(path)?))
    }

    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut angles = Vec::new();
        let mut gains = Vec::new();
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                let normalized: String =
                    trimmed.chars().filter(|c| !c.is_whitespace()).collect();
                if !normalized.eq_ignore_ascii_case("angle_deg,gain_db") {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("expected header 'angle_deg,gain_db', got '{trimmed}'"),
                    });
                }
                saw_header = true;
                continue;
            }
            let mut fields = trimmed.split(',');
            let parse = |field: Option<&str>, name: &str| -> Result<F> {
                let text = field
                    .ok_or(Error::Parse {
                        line: idx + 1,
                        msg: format!("missing {name}"),
                    })?
                    .trim();
                let value: f64 = text.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad {name} '{text}'"),
                })?;
                Ok(F::of(value))
            };
            angles.push(parse(fields.next(), "angle_deg")?);
            gains.push(parse(fields.next(), "gain_db")?);
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected exactly two columns".into(),
                });
            }
        }
        if !saw_header {
            return Err(Error::Parse {
                line: 1,
                msg: "empty gain table".into(),
            });
        }
        Self::tabulated(&angles, &gains)
    }

    /// Gain in dB at relative bearing `phi` (any radians value; wrapped).
    pub fn gain_db(&self, phi: F) -> F {
        let phi = wrap_angle(phi);
        match self {
            Self::Parametric {
                boresight_db,
                front_to_back_db,
            } => {
                let half = *front_to_back_db / F::of(2.0);
                *boresight_db - half * (F::one() - phi.cos())
            }
            Self::Tabulated { .. } => {
                let (a0, g0, a1, g1) = self.segment(phi);
                let t = (phi - a0) / (a1 - a0);
                g0 + t * (g1 - g0)
            }
        }
    }

    /// Derivative of gain with respect to bearing, dB per radian.
    ///
    /// Parametric patterns differentiate analytically; tabulated patterns
    /// return the slope of the interpolation segment containing `phi` (the
    /// right-hand segment when `phi` sits exactly on a knot).
    pub fn slope_db_per_rad(&self, phi: F) -> F {
        let phi = wrap_angle(phi);
        match self {
            Self::Parametric {
                front_to_back_db, ..
            } => -(*front_to_back_db / F::of(2.0)) * phi.sin(),
            Self::Tabulated { .. } => {
                let (a0, g0, a1, g1) = self.segment(phi);
                (g1 - g0) / (a1 - a0)
            }
        }
    }

    /// Largest absolute slope the pattern can produce, used for scaling
    /// tolerance floors.
    pub fn slope_scale(&self) -> F {
        match self {
            Self::Parametric {
                front_to_back_db, ..
            } => (*front_to_back_db / F::of(2.0)).abs(),
            Self::Tabulated {
                angles_rad,
                gains_db,
            } => {
                let mut max = F::zero();
                let n = angles_rad.len();
                for i in 0..n {
                    let (a0, g0) = (angles_rad[i], gains_db[i]);
                    let (a1, g1) = if i + 1 < n {
                        (angles_rad[i + 1], gains_db[i + 1])
                    } else {
                        (angles_rad[0] + F::TAU(), gains_db[0])
                    };
                    max = max.max(((g1 - g0) / (a1 - a0)).abs());
                }
                max
            }
        }
    }

    /// Interpolation segment containing wrapped `phi`: `(a0, g0, a1, g1)`
    /// with `a0 <= phi < a1` once the wrap offsets are applied.
    fn segment(&self, phi: F) -> (F, F, F, F) {
        let (angles, gains) = match self {
            Self::Tabulated {
                angles_rad,
                gains_db,
            } => (angles_rad, gains_db),
            Self::Parametric { .. } => unreachable!("segment() is only called for tables"),
        };
        let n = angles.len();
        let tau = F::TAU();
        if phi < angles[0] {
            // Tail of the wrap segment: last knot shifted down a turn.
            return (angles[n - 1] - tau, gains[n - 1], angles[0], gains[0]);
        }
        if phi >= angles[n - 1] {
            // Head of the wrap segment: first knot shifted up a turn.
            return (angles[n - 1], gains[n - 1], angles[0] + tau, gains[0]);
        }
        // Invariant: angles[0] <= phi < angles[n-1], so 1 <= idx <= n-1.
        let idx = angles.partition_point(|a| *a <= phi);
        (angles[idx - 1], gains[idx - 1], angles[idx], gains[idx])
    }
}
