//! Particle filter over emitter position.
//!
//! The belief is a weighted cloud of x-y hypotheses. Prediction applies the
//! emitter's random-walk model; updates reweight in log space against any
//! measurement likelihood (differential RSSI here, but the mission layer
//! also plugs in bearing and scalar-RSSI likelihoods); systematic resampling
//! kicks in when the effective sample size drops below half the particle
//! count. Once the determinant of the weighted position covariance falls
//! under the localization threshold the belief latches: the estimate
//! freezes and the belief stops consuming measurements.

use std::io::Write;

use rand::Rng;

use crate::antenna::GainPattern;
use crate::geometry::{Bounds, SourceState};
use crate::measurement::{log_likelihood_cached, DeltaLikelihood, DifferentialMeasurement};
use crate::scalar::Real;
use crate::{Error, Result};

/// Emitter motion model: an independent Gaussian random walk per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionModel<F> {
    /// Per-axis displacement std per step, metres.
    pub sigma_q_m: F,
}

/// What an update call did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UpdateOutcome<F> {
    /// Weights were reweighted (and possibly resampled).
    Applied { ess: F, resampled: bool },
    /// Every particle had zero likelihood; the belief was left untouched and
    /// the skip was counted.
    Underflow,
    /// The belief is latched; measurements are ignored.
    Frozen,
}

/// Weighted particle cloud for one emitter.
#[derive(Clone, Debug)]
pub struct ParticleBelief<F> {
    source_id: u32,
    particles: Vec<[F; 2]>,
    weights: Vec<F>,
    localized: bool,
    frozen_estimate: Option<[F; 2]>,
    skipped_updates: u32,
}

impl<F: Real> ParticleBelief<F> {
    /// Uniform initialization over the search area.
    pub fn initialize<R: Rng + ?Sized>(
        source_id: u32,
        n_particles: usize,
        bounds: &Bounds<F>,
        rng: &mut R,
    ) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidParameter {
                what: "particle count",
                why: "need at least one particle".into(),
            });
        }
        let particles = (0..n_particles)
            .map(|_| {
                [
                    F::uniform(rng, bounds.min[0], bounds.max[0]),
                    F::uniform(rng, bounds.min[1], bounds.max[1]),
                ]
            })
            .collect();
        let w = F::one() / F::of(n_particles as f64);
        Ok(Self {
            source_id,
            particles,
            weights: vec![w; n_particles],
            localized: false,
            frozen_estimate: None,
            skipped_updates: 0,
        })
    }

    /// Build a belief from an explicit cloud. Weights are normalized; they
    /// must be non-negative with a positive sum.
    pub fn from_particles(
        source_id: u32,
        particles: Vec<[F; 2]>,
        weights: Vec<F>,
    ) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InvalidParameter {
                what: "particle count",
                why: "need at least one particle".into(),
            });
        }
        if particles.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: particles.len(),
                got: weights.len(),
            });
        }
        let mut sum = F::zero();
        for &w in &weights {
            if !(w >= F::zero()) {
                return Err(Error::InvalidParameter {
                    what: "particle weights",
                    why: format!("weight {w} is negative or NaN"),
                });
            }
            sum += w;
        }
        if !(sum > F::zero()) {
            return Err(Error::InvalidParameter {
                what: "particle weights",
                why: "weights must not all be zero".into(),
            });
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self {
            source_id,
            particles,
            weights,
            localized: false,
            frozen_estimate: None,
            skipped_updates: 0,
        })
    }

    pub fn source_id(&self) -> u32 {
        self.source_id
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[[F; 2]] {
        &self.particles
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn localized(&self) -> bool {
        self.localized
    }

    /// The estimate frozen at the localization latch, if any.
    pub fn localized_estimate(&self) -> Option<[F; 2]> {
        self.frozen_estimate
    }

    /// Updates rejected because every particle underflowed.
    pub fn skipped_updates(&self) -> u32 {
        self.skipped_updates
    }

    /// Apply the random walk to every particle. No-op once latched or when
    /// `sigma_q_m` is zero.
    pub fn predict<R: Rng + ?Sized>(
        &mut self,
        model: &TransitionModel<F>,
        rng: &mut R,
    ) -> Result<()> {
        if !(model.sigma_q_m >= F::zero()) {
            return Err(Error::InvalidParameter {
                what: "transition model",
                why: format!("sigma_q = {} m must be non-negative", model.sigma_q_m),
            });
        }
        if self.localized || model.sigma_q_m == F::zero() {
            return Ok(());
        }
        for p in &mut self.particles {
            p[0] += model.sigma_q_m * F::std_normal(rng);
            p[1] += model.sigma_q_m * F::std_normal(rng);
        }
        Ok(())
    }

    /// Bayes update against a differential RSSI measurement.
    ///
    /// The tridiagonal noise factorization is built once per call and shared
    /// across particles. Particle z is irrelevant here: the differential
    /// likelihood depends on bearings only, which are horizontal.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        meas: &DifferentialMeasurement<F>,
        pattern: &GainPattern<F>,
        sigma: F,
        rng: &mut R,
    ) -> Result<UpdateOutcome<F>> {
        if self.localized {
            return Ok(UpdateOutcome::Frozen);
        }
        let lik = DeltaLikelihood::new(meas.window_len(), sigma)?;
        let mut log_liks = Vec::with_capacity(self.particles.len());
        for p in &self.particles {
            let source = SourceState::new([p[0], p[1], F::zero()]);
            let ll = match log_likelihood_cached(meas, &source, pattern, &lik) {
                Ok(ll) => ll,
                // A particle sitting exactly under a receiver pose has no
                // bearing; it simply gets zero likelihood.
                Err(Error::DegenerateGeometry(_)) => F::neg_infinity(),
                Err(e) => return Err(e),
            };
            log_liks.push(ll);
        }
        let mut idx = 0;
        Ok(self.update_with(
            |_| {
                let ll = log_liks[idx];
                idx += 1;
                ll
            },
            rng,
        ))
    }

    /// Bayes update with an arbitrary per-particle log-likelihood.
    ///
    /// Works in log space with max subtraction. If every particle comes back
    /// with zero likelihood (or NaN), the update is skipped, counted, and
    /// the belief left untouched.
    pub fn update_with<R, L>(&mut self, mut log_lik: L, rng: &mut R) -> UpdateOutcome<F>
    where
        R: Rng + ?Sized,
        L: FnMut(&[F; 2]) -> F,
    {
        if self.localized {
            return UpdateOutcome::Frozen;
        }
        let n = self.particles.len();
        let mut logw = Vec::with_capacity(n);
        let mut max = F::neg_infinity();
        for (p, &w) in self.particles.iter().zip(&self.weights) {
            let lw = w.ln() + log_lik(p);
            let lw = if lw.is_nan() { F::neg_infinity() } else { lw };
            if lw > max {
                max = lw;
            }
            logw.push(lw);
        }
        if !max.is_finite() {
            self.skipped_updates += 1;
            return UpdateOutcome::Underflow;
        }
        let mut sum = F::zero();
        for lw in &mut logw {
            *lw = (*lw - max).exp();
            sum += *lw;
        }
        // sum >= 1 because the max element maps to exp(0).
        for (w, lw) in self.weights.iter_mut().zip(&logw) {
            *w = *lw / sum;
        }
        let ess = F::one() / self.weights.iter().map(|w| *w * *w).fold(F::zero(), |a, b| a + b);
        let mut resampled = false;
        if ess < F::of(n as f64) / F::of(2.0) {
            self.resample_systematic(rng);
            resampled = true;
        }
        UpdateOutcome::Applied { ess, resampled }
    }

    /// Systematic (low-variance) resampling: one uniform draw, `n` evenly
    /// spaced pointers through the weight CDF. Preserves the particle count
    /// and resets weights to uniform.
    pub fn resample_systematic<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.particles.len();
        let n_f = F::of(n as f64);
        let step = F::one() / n_f;
        let mut pointer = F::uniform(rng, F::zero(), step);
        let mut cumulative = self.weights[0];
        let mut idx = 0usize;
        let mut new_particles = Vec::with_capacity(n);
        for _ in 0..n {
            while pointer > cumulative && idx < n - 1 {
                idx += 1;
                cumulative += self.weights[idx];
            }
            new_particles.push(self.particles[idx]);
            pointer += step;
        }
        self.particles = new_particles;
        self.weights = vec![step; n];
    }

    /// Weighted mean of the live cloud.
    pub fn estimate_mean(&self) -> [F; 2] {
        let mut mx = F::zero();
        let mut my = F::zero();
        for (p, &w) in self.particles.iter().zip(&self.weights) {
            mx += w * p[0];
            my += w * p[1];
        }
        [mx, my]
    }

    /// The frozen estimate once latched, the live mean before that.
    pub fn estimate(&self) -> [F; 2] {
        self.frozen_estimate.unwrap_or_else(|| self.estimate_mean())
    }

    /// Weighted position covariance about the weighted mean.
    pub fn covariance(&self) -> [[F; 2]; 2] {
        let mean = self.estimate_mean();
        let mut cxx = F::zero();
        let mut cxy = F::zero();
        let mut cyy = F::zero();
        for (p, &w) in self.particles.iter().zip(&self.weights) {
            let dx = p[0] - mean[0];
            let dy = p[1] - mean[1];
            cxx += w * dx * dx;
            cxy += w * dx * dy;
            cyy += w * dy * dy;
        }
        [[cxx, cxy], [cxy, cyy]]
    }

    /// Determinant of the weighted position covariance, m^4. The mission's
    /// localization criterion.
    pub fn covariance_det(&self) -> F {
        let c = self.covariance();
        c[0][0] * c[1][1] - c[0][1] * c[1][0]
    }

    /// Latching localization check: once the covariance determinant drops
    /// below `threshold`, the belief stays localized and the estimate at the
    /// moment of the transition is frozen.
    pub fn check_localized(&mut self, threshold: F) -> Result<bool> {
        if !(threshold > F::zero()) {
            return Err(Error::InvalidParameter {
                what: "localization threshold",
                why: format!("{threshold} m^4 must be positive"),
            });
        }
        if self.localized {
            return Ok(true);
        }
        if self.covariance_det() < threshold {
            self.localized = true;
            self.frozen_estimate = Some(self.estimate_mean());
            return Ok(true);
        }
        Ok(false)
    }

    /// Snapshot the cloud as CSV (`particle_x,particle_y,weight`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "particle_x,particle_y,weight")?;
        for (p, weight) in self.particles.iter().zip(&self.weights) {
            writeln!(w, "{},{},{}", p[0], p[1], weight)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UavState;
    use crate::measurement::{predicted_deltas, DifferentialMeasurement};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_bounds() -> Bounds<f64> {
        Bounds::new([0.0, 0.0], [1.0, 1.0]).unwrap()
    }

    fn belief_from_parts(particles: Vec<[f64; 2]>, weights: Vec<f64>) -> ParticleBelief<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut b =
            ParticleBelief::initialize(0, particles.len(), &unit_bounds(), &mut rng).unwrap();
        b.particles = particles;
        b.weights = weights;
        b
    }

    #[test]
    fn initialize_small_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let b = ParticleBelief::initialize(3, 4, &unit_bounds(), &mut rng).unwrap();
        assert_eq!(b.source_id(), 3);
        assert_eq!(b.len(), 4);
        for p in b.particles() {
            assert!((0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1]));
        }
        for w in b.weights() {
            assert_eq!(*w, 0.25);
        }
        assert!(!b.localized());
        assert!(ParticleBelief::<f64>::initialize(0, 0, &unit_bounds(), &mut rng).is_err());
    }

    #[test]
    fn initialize_is_seed_deterministic() {
        let bounds = Bounds::new([-100.0, 50.0], [300.0, 400.0]).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let x = ParticleBelief::initialize(0, 64, &bounds, &mut a).unwrap();
        let y = ParticleBelief::initialize(0, 64, &bounds, &mut b).unwrap();
        assert_eq!(x.particles(), y.particles());
    }

    #[test]
    fn predict_zero_sigma_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut b = ParticleBelief::initialize(0, 32, &unit_bounds(), &mut rng).unwrap();
        let before = b.particles().to_vec();
        b.predict(&TransitionModel { sigma_q_m: 0.0 }, &mut rng).unwrap();
        assert_eq!(b.particles(), &before[..]);
        assert!(b
            .predict(&TransitionModel { sigma_q_m: -1.0 }, &mut rng)
            .is_err());
    }

    #[test]
    fn predict_displacement_variance_matches_sigma() {
        let sigma_q = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut b = belief_from_parts(vec![[0.0, 0.0]; n], vec![1.0 / n as f64; n]);
        b.predict(&TransitionModel { sigma_q_m: sigma_q }, &mut rng).unwrap();
        for axis in 0..2 {
            let mean: f64 = b.particles().iter().map(|p| p[axis]).sum::<f64>() / n as f64;
            let var: f64 = b
                .particles()
                .iter()
                .map(|p| (p[axis] - mean).powi(2))
                .sum::<f64>()
                / (n as f64 - 1.0);
            let rel = (var - sigma_q * sigma_q).abs() / (sigma_q * sigma_q);
            assert!(rel < 0.02, "axis {axis}: var {var}, relative error {rel}");
        }
    }

    #[test]
    fn update_reweights_toward_the_truth() {
        let pattern = GainPattern::parametric(6.15, 10.0).unwrap();
        let truth = SourceState::new([80.0, 30.0, 0.0]);
        let poses: Vec<UavState<f64>> = (0..4)
            .map(|k| UavState::new([5.0 * k as f64, 0.0, 30.0], 0.9 * k as f64))
            .collect();
        let deltas = predicted_deltas(&truth, &poses, &pattern).unwrap();
        let meas = DifferentialMeasurement::from_parts(deltas, poses).unwrap();

        let mut b = belief_from_parts(
            vec![[80.0, 30.0], [-120.0, -60.0]],
            vec![0.5, 0.5],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let outcome = b.update(&meas, &pattern, 2.0, &mut rng).unwrap();
        assert!(matches!(outcome, UpdateOutcome::Applied { .. }));
        let sum: f64 = b.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "weights sum to {sum}");
        assert!(
            b.weights()[0] > b.weights()[1],
            "truth particle should out-weigh the decoy: {:?}",
            b.weights()
        );
    }

    #[test]
    fn update_underflow_leaves_belief_untouched() {
        let mut b = belief_from_parts(vec![[0.25, 0.25], [0.7, 0.7]], vec![0.5, 0.5]);
        let before_w = b.weights().to_vec();
        let before_p = b.particles().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let outcome = b.update_with(|_| f64::NEG_INFINITY, &mut rng);
        assert_eq!(outcome, UpdateOutcome::Underflow);
        assert_eq!(b.weights(), &before_w[..]);
        assert_eq!(b.particles(), &before_p[..]);
        assert_eq!(b.skipped_updates(), 1);
        // NaN likelihoods count as underflow, not a poisoned belief.
        let outcome = b.update_with(|_| f64::NAN, &mut rng);
        assert_eq!(outcome, UpdateOutcome::Underflow);
        assert_eq!(b.skipped_updates(), 2);
    }

    #[test]
    fn differential_update_treats_coincident_particles_as_zero_likelihood() {
        let pattern = GainPattern::default();
        let poses = vec![
            UavState::new([0.25, 0.25, 30.0], 0.0),
            UavState::new([5.0, 5.0, 30.0], 1.0),
        ];
        let meas = DifferentialMeasurement::from_parts(vec![0.5], poses).unwrap();
        // First particle sits exactly under the first pose; the update must
        // not error, and all weight must flow to the other particle.
        let mut b = belief_from_parts(vec![[0.25, 0.25], [40.0, -30.0]], vec![0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let outcome = b.update(&meas, &pattern, 2.0, &mut rng).unwrap();
        assert!(matches!(outcome, UpdateOutcome::Applied { .. }));
        assert!(b.weights().iter().sum::<f64>() > 0.999);
    }

    #[test]
    fn update_resamples_when_ess_collapses() {
        let n = 100;
        let mut b = belief_from_parts(
            (0..n).map(|k| [k as f64, 0.0]).collect(),
            vec![1.0 / n as f64; n],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // Likelihood that crushes everything except particle 7.
        let outcome = b.update_with(
            |p| if p[0] == 7.0 { 0.0 } else { -1e6 },
            &mut rng,
        );
        match outcome {
            UpdateOutcome::Applied { ess, resampled } => {
                assert!(ess < 1.5, "ess = {ess}");
                assert!(resampled);
            }
            other => panic!("expected Applied, got {other:?}"),
        }
        assert!(b.particles().iter().all(|p| *p == [7.0, 0.0]));
        assert!(b.weights().iter().all(|w| (*w - 0.01).abs() < 1e-12));
    }

    #[test]
    fn flat_likelihood_keeps_ess_high() {
        let n = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut b = ParticleBelief::initialize(0, n, &unit_bounds(), &mut rng).unwrap();
        let outcome = b.update_with(|_| -3.25, &mut rng);
        match outcome {
            UpdateOutcome::Applied { ess, resampled } => {
                assert!((ess - n as f64).abs() < 1e-6);
                assert!(!resampled);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resampling_preserves_the_mean_in_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 300;
        let particles: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let base = belief_from_parts(particles, weights);
        let target = base.estimate_mean();

        let trials = 200;
        let mut means = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut b = base.clone();
            let mut trial_rng = ChaCha8Rng::seed_from_u64(1000 + t as u64);
            b.resample_systematic(&mut trial_rng);
            means.push(b.estimate_mean());
        }
        for axis in 0..2 {
            let avg: f64 = means.iter().map(|m| m[axis]).sum::<f64>() / trials as f64;
            let var: f64 = means
                .iter()
                .map(|m| (m[axis] - avg).powi(2))
                .sum::<f64>()
                / (trials as f64 - 1.0);
            let se = (var / trials as f64).sqrt();
            let shift = (avg - target[axis]).abs();
            assert!(
                shift < 3.0 * se.max(1e-9),
                "axis {axis}: shift {shift} vs 3 SE {}",
                3.0 * se
            );
        }
    }

    #[test]
    fn localization_thresholds() {
        // Isotropic variance 100 per axis: det = 1e4 < 2e4.
        let spread = |a: f64| {
            belief_from_parts(
                vec![[a, 0.0], [-a, 0.0], [0.0, a], [0.0, -a]],
                vec![0.25; 4],
            )
        };
        let mut tight = spread(200.0f64.sqrt()); // var = 100 per axis
        assert!(tight.check_localized(2.0e4).unwrap());
        assert_eq!(tight.localized_estimate().map(|e| e[0].round()), Some(0.0));

        let mut wide = spread(400.0f64.sqrt()); // var = 200 per axis
        assert!(!wide.check_localized(2.0e4).unwrap());
        assert!(wide.localized_estimate().is_none());

        // Correlated cloud: covariance [[150, 90], [90, 150]], det 14400.
        let p = 240.0f64.sqrt();
        let r = 60.0f64.sqrt();
        let mut corr = belief_from_parts(
            vec![[p, p], [-p, -p], [r, -r], [-r, r]],
            vec![0.25; 4],
        );
        let c = corr.covariance();
        assert!((c[0][0] - 150.0).abs() < 1e-9);
        assert!((c[0][1] - 90.0).abs() < 1e-9);
        assert!((corr.covariance_det() - 14400.0).abs() < 1e-6);
        assert!(corr.check_localized(2.0e4).unwrap());

        assert!(tight.check_localized(-1.0).is_err());
    }

    #[test]
    fn latch_freezes_the_estimate_and_blocks_updates() {
        let mut b = belief_from_parts(
            vec![[10.0, 10.0], [10.2, 9.8], [9.8, 10.1], [10.1, 10.2]],
            vec![0.25; 4],
        );
        assert!(b.check_localized(2.0e4).unwrap());
        let frozen = b.localized_estimate().unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Neither prediction nor update may move a latched belief.
        b.predict(&TransitionModel { sigma_q_m: 50.0 }, &mut rng).unwrap();
        let outcome = b.update_with(|p| -p[0].abs() * 1e3, &mut rng);
        assert_eq!(outcome, UpdateOutcome::Frozen);
        assert_eq!(b.localized_estimate().unwrap(), frozen);
        assert_eq!(b.estimate(), frozen);
        assert!(b.check_localized(2.0e4).unwrap(), "latch must hold");
    }

    #[test]
    fn estimate_mean_is_weighted() {
        let b = belief_from_parts(vec![[0.0, 0.0], [10.0, 20.0]], vec![0.75, 0.25]);
        assert_eq!(b.estimate_mean(), [2.5, 5.0]);
        assert_eq!(b.estimate(), [2.5, 5.0]);
    }

    #[test]
    fn csv_snapshot_round_trips() {
        let b = belief_from_parts(vec![[1.5, -2.0], [3.0, 4.0]], vec![0.5, 0.5]);
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("particle_x,particle_y,weight"));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row, vec![1.5, -2.0, 0.5]);
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn update_is_seed_deterministic() {
        let n = 500;
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(88);
            ParticleBelief::initialize(1, n, &unit_bounds(), &mut rng).unwrap()
        };
        let run = |mut b: ParticleBelief<f64>| {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            b.update_with(|p| -((p[0] - 0.3).powi(2) + (p[1] - 0.7).powi(2)) * 400.0, &mut rng);
            b
        };
        let a = run(build());
        let b = run(build());
        assert_eq!(a.particles(), b.particles());
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn runs_in_f32() {
        let bounds = Bounds::new([0.0f32, 0.0], [10.0, 10.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut b = ParticleBelief::initialize(0, 128, &bounds, &mut rng).unwrap();
        b.predict(&TransitionModel { sigma_q_m: 0.5f32 }, &mut rng).unwrap();
        let outcome = b.update_with(|p| -(p[0] - 5.0).abs(), &mut rng);
        assert!(matches!(outcome, UpdateOutcome::Applied { .. }));
        let sum: f32 = b.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-4);
    }
}
