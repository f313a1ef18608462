//! RSSI windows, finite differencing, and the differential measurement
//! likelihood.
//!
//! A window holds `m` consecutive pulse samples. Differencing adjacent
//! samples cancels every additive term that is constant across the window
//! (transmit power, path loss at an essentially unchanged distance, terrain
//! and hardware offsets) and leaves the change in antenna gain plus
//! differenced noise. Differencing i.i.d. noise of variance `sigma^2`
//! correlates neighbours: the `(m-1) x (m-1)` covariance is tridiagonal with
//! `2 sigma^2` on the diagonal and `-sigma^2` off it. The likelihood here
//! evaluates the corresponding multivariate normal density exactly via an
//! `L D L^T` factorization of that matrix, computed once per `(m, sigma)`
//! and reused across particles.

use crate::antenna::GainPattern;
use crate::geometry::{relative_bearing, SourceState, UavState};
use crate::scalar::Real;
use crate::{Error, Result};

/// One detected pulse: when it arrived, what it measured, where the
/// receiver was.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSample<F> {
    pub time_s: F,
    pub rssi_dbm: F,
    pub uav: UavState<F>,
}

/// A run of consecutive pulse samples with strictly increasing timestamps.
#[derive(Clone, Debug)]
pub struct MeasurementWindow<F> {
    samples: Vec<WindowSample<F>>,
    max_gap_s: F,
}

impl<F: Real> MeasurementWindow<F> {
    /// `max_gap_s` is the largest tolerated spacing between consecutive
    /// samples before the window counts as stale; 1.5 pulse periods is the
    /// usual choice, allowing jitter but not a missed pulse.
    pub fn new(samples: Vec<WindowSample<F>>, max_gap_s: F) -> Result<Self> {
        if !(max_gap_s > F::zero()) {
            return Err(Error::InvalidParameter {
                what: "measurement window",
                why: format!("max gap {max_gap_s} s must be positive"),
            });
        }
        if samples.is_empty() {
            return Err(Error::InsufficientData("empty measurement window"));
        }
        for pair in samples.windows(2) {
            if !(pair[1].time_s > pair[0].time_s) {
                return Err(Error::InvalidParameter {
                    what: "measurement window",
                    why: format!(
                        "timestamps must be strictly increasing ({} then {})",
                        pair[0].time_s, pair[1].time_s
                    ),
                });
            }
        }
        Ok(Self { samples, max_gap_s })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[WindowSample<F>] {
        &self.samples
    }

    /// Finite-difference the window into a differential measurement.
    ///
    /// Needs at least two samples; rejects windows containing a gap larger
    /// than `max_gap_s` (a missed pulse breaks the cancellation argument,
    /// since the environment may have changed meanwhile).
    pub fn difference_window(&self) -> Result<DifferentialMeasurement<F>> {
        if self.samples.len() < 2 {
            return Err(Error::InsufficientData(
                "differencing needs at least two samples",
            ));
        }
        for pair in self.samples.windows(2) {
            let gap = pair[1].time_s - pair[0].time_s;
            if gap > self.max_gap_s {
                return Err(Error::StaleWindow {
                    gap_s: gap.as_f64(),
                    max_gap_s: self.max_gap_s.as_f64(),
                });
            }
        }
        let deltas = self
            .samples
            .windows(2)
            .map(|pair| pair[1].rssi_dbm - pair[0].rssi_dbm)
            .collect();
        let uav_states = self.samples.iter().map(|s| s.uav).collect();
        Ok(DifferentialMeasurement { deltas, uav_states })
    }
}

/// `m - 1` successive RSSI differences plus the `m` receiver poses they were
/// taken from.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialMeasurement<F> {
    deltas: Vec<F>,
    uav_states: Vec<UavState<F>>,
}

impl<F: Real> DifferentialMeasurement<F> {
    pub fn from_parts(deltas: Vec<F>, uav_states: Vec<UavState<F>>) -> Result<Self> {
        if uav_states.len() < 2 {
            return Err(Error::InsufficientData(
                "a differential measurement spans at least two poses",
            ));
        }
        if deltas.len() + 1 != uav_states.len() {
            return Err(Error::DimensionMismatch {
                expected: uav_states.len() - 1,
                got: deltas.len(),
            });
        }
        Ok(Self { deltas, uav_states })
    }

    /// Number of underlying samples (`m`).
    pub fn window_len(&self) -> usize {
        self.uav_states.len()
    }

    pub fn deltas(&self) -> &[F] {
        &self.deltas
    }

    pub fn uav_states(&self) -> &[UavState<F>] {
        &self.uav_states
    }
}

/// Noise-free predicted differences for a hypothetical source: the gain at
/// each pose's relative bearing, differenced. Every term that does not pass
/// through the antenna pattern cancels by construction.
pub fn predicted_deltas<F: Real>(
    source: &SourceState<F>,
    uav_states: &[UavState<F>],
    pattern: &GainPattern<F>,
) -> Result<Vec<F>> {
    if uav_states.len() < 2 {
        return Err(Error::InsufficientData(
            "predicting differences needs at least two poses",
        ));
    }
    let mut gains = Vec::with_capacity(uav_states.len());
    for uav in uav_states {
        gains.push(pattern.gain_db(relative_bearing(source, uav)?));
    }
    Ok(gains.windows(2).map(|g| g[1] - g[0]).collect())
}

/// Covariance of the differenced noise vector for an `m`-sample window with
/// per-sample noise std `sigma`: tridiagonal, `2 sigma^2` on the diagonal,
/// `-sigma^2` on the first off-diagonals. Returned dense and row-major.
pub fn noise_covariance<F: Real>(m: usize, sigma: F) -> Result<Vec<Vec<F>>> {
    check_window_and_sigma(m, sigma)?;
    let n = m - 1;
    let var = sigma * sigma;
    let two_var = F::of(2.0) * var;
    let mut cov = vec![vec![F::zero(); n]; n];
    for i in 0..n {
        cov[i][i] = two_var;
        if i + 1 < n {
            cov[i][i + 1] = -var;
            cov[i + 1][i] = -var;
        }
    }
    Ok(cov)
}

fn check_window_and_sigma<F: Real>(m: usize, sigma: F) -> Result<()> {
    if m < 2 {
        return Err(Error::InsufficientData(
            "noise covariance is defined for windows of at least two samples",
        ));
    }
    if !(sigma > F::zero()) {
        return Err(Error::InvalidParameter {
            what: "noise std",
            why: format!("sigma = {sigma} dB must be positive"),
        });
    }
    Ok(())
}

/// Cached Gaussian log-density of the differenced noise for fixed
/// `(m, sigma)`.
///
/// Holds the `L D L^T` factorization of the tridiagonal covariance, so each
/// evaluation is a bidiagonal solve: O(m) per residual.
#[derive(Clone, Debug)]
pub struct DeltaLikelihood<F> {
    /// Diagonal of `D`.
    diag: Vec<F>,
    /// Subdiagonal multipliers of unit `L` (`sub[i]` couples rows i and i+1).
    sub: Vec<F>,
    log_det: F,
    log_norm: F,
}

impl<F: Real> DeltaLikelihood<F> {
    pub fn new(m: usize, sigma: F) -> Result<Self> {
        check_window_and_sigma(m, sigma)?;
        let n = m - 1;
        let var = sigma * sigma;
        let two_var = F::of(2.0) * var;
        let mut diag = Vec::with_capacity(n);
        let mut sub = Vec::with_capacity(n.saturating_sub(1));
        let mut log_det = F::zero();
        let mut prev = two_var;
        diag.push(prev);
        log_det += prev.ln();
        for _ in 1..n {
            let l = -var / prev;
            sub.push(l);
            prev = two_var - var * var / prev;
            diag.push(prev);
            log_det += prev.ln();
        }
        // (2 pi)^(n/2) etc., folded into a constant so evaluations are one
        // solve plus one multiply-add.
        let log_norm = F::of(-0.5) * (log_det + F::of(n as f64) * F::TAU().ln());
        Ok(Self {
            diag,
            sub,
            log_det,
            log_norm,
        })
    }

    /// Dimension of residual vectors (`m - 1`).
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn log_det(&self) -> F {
        self.log_det
    }

    /// `r^T Sigma^-1 r` via the cached factorization.
    pub fn quad_form(&self, residual: &[F]) -> Result<F> {
        if residual.len() != self.diag.len() {
            return Err(Error::DimensionMismatch {
                expected: self.diag.len(),
                got: residual.len(),
            });
        }
        let mut quad = F::zero();
        let mut prev_y = F::zero();
        for (i, &r) in residual.iter().enumerate() {
            let y = if i == 0 { r } else { r - self.sub[i - 1] * prev_y };
            quad += y * y / self.diag[i];
            prev_y = y;
        }
        Ok(quad)
    }

    /// Log multivariate-normal density of a residual vector.
    pub fn log_density(&self, residual: &[F]) -> Result<F> {
        Ok(self.log_norm - F::of(0.5) * self.quad_form(residual)?)
    }
}

/// Log-likelihood of a differential measurement for a hypothetical source
/// position: Gaussian in `measured - predicted` under the differenced-noise
/// covariance.
pub fn log_likelihood<F: Real>(
    meas: &DifferentialMeasurement<F>,
    source: &SourceState<F>,
    pattern: &GainPattern<F>,
    sigma: F,
) -> Result<F> {
    let lik = DeltaLikelihood::new(meas.window_len(), sigma)?;
    log_likelihood_cached(meas, source, pattern, &lik)
}

/// Same as [`log_likelihood`] with the factorization supplied by the caller;
/// this is the path the particle filter uses, one factorization per update
/// shared across all particles.
pub fn log_likelihood_cached<F: Real>(
    meas: &DifferentialMeasurement<F>,
    source: &SourceState<F>,
    pattern: &GainPattern<F>,
    lik: &DeltaLikelihood<F>,
) -> Result<F> {
    let predicted = predicted_deltas(source, meas.uav_states(), pattern)?;
    if predicted.len() != lik.dim() {
        return Err(Error::DimensionMismatch {
            expected: lik.dim(),
            got: predicted.len(),
        });
    }
    let residual: Vec<F> = meas
        .deltas()
        .iter()
        .zip(&predicted)
        .map(|(&z, &p)| z - p)
        .collect();
    lik.log_density(&residual)
}
