//! Closed-loop mission simulation and the Monte Carlo harness.
//!
//! A mission puts one receiver-carrying vehicle in a rectangular survey area
//! with a set of tagged RF sources, each emitting one pulse per second. Every
//! tick the simulator advances the ground truth, draws pulse detections,
//! feeds the configured measurement strategy into the per-source particle
//! filters, checks the localization latch, replans, and moves the vehicle.
//! The mission ends when every source is localized or the timeout expires.
//!
//! Four measurement strategies share all of that infrastructure and differ
//! only in the measurement and its likelihood:
//!
//! * [`Method::Gyro`] — the spinning-antenna receiver: RSSI samples enter a
//!   short window whose successive differences feed the differential
//!   likelihood. Unknown transmit power and slow path-loss drift cancel.
//! * [`Method::DualAntenna`] — a two-chain receiver that reads the gain
//!   contrast between a directional and an omnidirectional antenna at every
//!   pulse; terrain and transmit power cancel between the chains.
//! * [`Method::RotateBearing`] — the stop-and-stare baseline: the vehicle
//!   halts for a full rotation and extracts one noisy world-frame bearing.
//! * [`Method::RssiIdeal`] — an oracle baseline that scores raw RSSI with
//!   the exact generation model, terrain included.
//!
//! Determinism contract: every public entry point is a pure function of its
//! configuration and a `u64` seed. Ground truth and receiver noise draw from
//! separate seeded streams so a batch can replay one truth under many noise
//! realizations.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::GainPattern;
use crate::filter::{ParticleBelief, TransitionModel};
use crate::geometry::{
    relative_bearing, world_bearing, wrap_to_pi, Bounds, SourceState, UavState,
};
use crate::measurement::{MeasurementWindow, WindowSample};
use crate::planner::{plan, select_nearest_source, Action, PlannerConfig, PlannerMode};
use crate::propagation::{mean_rssi, EnvironmentModel, RadioModel, TerrainGrid};
use crate::scalar::Real;
use crate::{Error, Result};

/// Measurement strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gyro,
    DualAntenna,
    RotateBearing,
    RssiIdeal,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Gyro,
        Method::DualAntenna,
        Method::RotateBearing,
        Method::RssiIdeal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gyro => "gyro",
            Method::DualAntenna => "dual_antenna",
            Method::RotateBearing => "rotate_bearing",
            Method::RssiIdeal => "rssi_ideal",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gyro" => Ok(Method::Gyro),
            "dual_antenna" => Ok(Method::DualAntenna),
            "rotate_bearing" => Ok(Method::RotateBearing),
            "rssi_ideal" => Ok(Method::RssiIdeal),
            other => Err(Error::InvalidParameter {
                what: "method",
                why: format!(
                    "unknown method {other:?}; expected one of gyro, dual_antenna, \
                     rotate_bearing, rssi_ideal"
                ),
            }),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One tagged emitter and where it starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: u32,
    pub position: [f64; 2],
}

/// How to obtain the terrain grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerrainSpec {
    /// Seeded sum-of-sinusoids surface; reproducible anywhere.
    Synthetic {
        origin: [f64; 2],
        cell_size_m: f64,
        rows: usize,
        cols: usize,
        relief_m: f64,
        seed: u64,
    },
    /// Load an ESRI ASCII grid from disk.
    EsriAscii { path: String },
}

impl TerrainSpec {
    pub fn build(&self) -> Result<TerrainGrid<f64>> {
        match self {
            TerrainSpec::Synthetic {
                origin,
                cell_size_m,
                rows,
                cols,
                relief_m,
                seed,
            } => TerrainGrid::synthetic(*origin, *cell_size_m, *rows, *cols, *relief_m, *seed),
            TerrainSpec::EsriAscii { path } => TerrainGrid::from_esri_ascii_path(path),
        }
    }
}

/// How to obtain the receiver's gain pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternSpec {
    Parametric {
        boresight_db: f64,
        front_to_back_db: f64,
    },
    /// Tabulated pattern from a `angle_deg,gain_db` CSV file.
    Csv { path: String },
}

impl PatternSpec {
    pub fn build(&self) -> Result<GainPattern<f64>> {
        match self {
            PatternSpec::Parametric {
                boresight_db,
                front_to_back_db,
            } => GainPattern::parametric(*boresight_db, *front_to_back_db),
            PatternSpec::Csv { path } => GainPattern::from_csv_path(path),
        }
    }
}

/// Full mission description. Deserializes from JSON with every missing field
/// taking its desk-scale default, so config files only state overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Survey area, metres.
    pub bounds: Bounds<f64>,
    pub terrain: Option<TerrainSpec>,
    pub sources: Vec<SourceSpec>,
    /// Ground-truth random-walk std per pulse period, per axis, metres.
    pub source_sigma_q_m: f64,
    /// What the transmitters actually do (generation side).
    pub truth_radio: RadioModel<f64>,
    /// What the filter assumes (its noise_std_db is the filter sigma).
    pub model_radio: RadioModel<f64>,
    pub pattern: PatternSpec,
    pub method: Method,
    pub planner: PlannerConfig<f64>,
    /// RSSI window length fed to the differencing front end.
    pub window_m: usize,
    /// Latch threshold on the belief covariance determinant, m^4.
    pub localized_threshold_m4: f64,
    pub mission_timeout_s: f64,
    pub uav_start_xy: [f64; 2],
    pub uav_start_heading_deg: f64,
    /// Fixed flight altitude, metres.
    pub altitude_m: f64,
    pub n_particles: usize,
    pub pulse_period_s: f64,
    pub carrier_freq_ghz: f64,
    /// Probability each emitted pulse is detected at all.
    pub detection_prob: f64,
    /// Fixed extra attenuation on every pulse, dB.
    pub extra_loss_db: f64,
    /// Rotate-for-bearing: bearing noise std, degrees.
    pub bearing_noise_std_deg: f64,
    /// Rotate-for-bearing: stationary rotation time per bearing, seconds.
    pub rotation_duration_s: f64,
    /// Dual-antenna: known inter-chain offset constant, dB.
    pub dual_constant_db: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ScenarioConfig {
    /// Desk-scale defaults: 1 km^2 area, five wandering sources, spinning
    /// receiver at 10 m/s and 40 deg/s, 3000 particles.
    pub fn desk() -> Self {
        let bounds = Bounds::new([0.0, 0.0], [1000.0, 1000.0]).expect("static bounds");
        Self {
            bounds,
            terrain: None,
            sources: vec![
                SourceSpec { id: 1, position: [200.0, 800.0] },
                SourceSpec { id: 2, position: [800.0, 750.0] },
                SourceSpec { id: 3, position: [500.0, 500.0] },
                SourceSpec { id: 4, position: [250.0, 250.0] },
                SourceSpec { id: 5, position: [750.0, 200.0] },
            ],
            source_sigma_q_m: 2.0,
            truth_radio: RadioModel {
                ref_power_dbm: 20.0,
                ref_distance_m: 1.0,
                path_loss_exponent: 3.0,
                noise_std_db: 2.0,
            },
            model_radio: RadioModel {
                ref_power_dbm: 10.0,
                ref_distance_m: 1.0,
                path_loss_exponent: 2.0,
                noise_std_db: 2.0,
            },
            pattern: PatternSpec::Parametric {
                boresight_db: 6.15,
                front_to_back_db: 10.0,
            },
            method: Method::Gyro,
            planner: PlannerConfig::standard(PlannerMode::Discrete, bounds),
            window_m: 2,
            localized_threshold_m4: 2.0e4,
            mission_timeout_s: 2000.0,
            uav_start_xy: [500.0, 50.0],
            uav_start_heading_deg: 0.0,
            altitude_m: 30.0,
            n_particles: 3000,
            pulse_period_s: 1.0,
            carrier_freq_ghz: 0.15,
            detection_prob: 0.95,
            extra_loss_db: 0.0,
            bearing_noise_std_deg: 9.0,
            rotation_duration_s: 10.0,
            dual_constant_db: 0.0,
        }
    }

    /// Fixed-transect convergence scenario: one static source 20 m abeam of
    /// a slow straight northbound pass, calibrated receiver on a clean bench
    /// channel. Built for [`rotation_speed_convergence`].
    pub fn transect() -> Self {
        let mut cfg = Self::desk();
        cfg.sources = vec![SourceSpec {
            id: 1,
            position: [520.0, 400.0],
        }];
        cfg.source_sigma_q_m = 0.0;
        cfg.uav_start_xy = [500.0, 100.0];
        cfg.mission_timeout_s = 300.0;
        cfg.truth_radio.noise_std_db = 1.0;
        cfg.model_radio = cfg.truth_radio;
        cfg.planner.uav_speed_m_s = 4.0;
        cfg
    }

    /// Field-trial conditions: slower vehicle, noisier channel, four sources.
    pub fn field() -> Self {
        let mut cfg = Self::desk();
        cfg.planner.uav_speed_m_s = 5.5;
        cfg.truth_radio.noise_std_db = 5.0;
        cfg.model_radio.noise_std_db = 5.0;
        cfg.sources.truncate(4);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.sources {
            if !self.bounds.contains(s.position) {
                return Err(Error::InvalidParameter {
                    what: "source position",
                    why: format!(
                        "source {} at ({}, {}) lies outside the survey bounds",
                        s.id, s.position[0], s.position[1]
                    ),
                });
            }
        }
        for (i, a) in self.sources.iter().enumerate() {
            for b in &self.sources[i + 1..] {
                if a.id == b.id {
                    return Err(Error::InvalidParameter {
                        what: "source ids",
                        why: format!("source id {} appears more than once", a.id),
                    });
                }
            }
        }
        if !(self.source_sigma_q_m >= 0.0) {
            return Err(Error::InvalidParameter {
                what: "source sigma_q",
                why: "must be non-negative".into(),
            });
        }
        self.truth_radio.validate()?;
        self.model_radio.validate()?;
        self.pattern.build()?;
        self.planner.validate()?;
        if self.window_m < 2 {
            return Err(Error::InvalidParameter {
                what: "window length",
                why: format!("{} samples cannot be differenced", self.window_m),
            });
        }
        if !(self.localized_threshold_m4 > 0.0) {
            return Err(Error::InvalidParameter {
                what: "localization threshold",
                why: "must be positive".into(),
            });
        }
        if !(self.mission_timeout_s > 0.0) || !(self.pulse_period_s > 0.0) {
            return Err(Error::InvalidParameter {
                what: "mission timing",
                why: "timeout and pulse period must be positive".into(),
            });
        }
        if !self.bounds.contains(self.uav_start_xy) {
            return Err(Error::InvalidParameter {
                what: "uav start",
                why: "start position lies outside the survey bounds".into(),
            });
        }
        if self.n_particles == 0 {
            return Err(Error::InvalidParameter {
                what: "particle count",
                why: "need at least one particle per source".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.detection_prob) {
            return Err(Error::InvalidParameter {
                what: "detection probability",
                why: format!("{} is outside [0, 1]", self.detection_prob),
            });
        }
        if !(self.extra_loss_db >= 0.0) {
            return Err(Error::InvalidParameter {
                what: "extra loss",
                why: "must be non-negative".into(),
            });
        }
        if !(self.carrier_freq_ghz > 0.0) {
            return Err(Error::InvalidParameter {
                what: "carrier frequency",
                why: "must be positive".into(),
            });
        }
        if !(self.bearing_noise_std_deg >= 0.0) || !(self.rotation_duration_s > 0.0) {
            return Err(Error::InvalidParameter {
                what: "rotate-for-bearing parameters",
                why: "bearing noise must be non-negative and rotation time positive".into(),
            });
        }
        if let Some(spec) = &self.terrain {
            let grid = spec.build()?;
            let lo = grid.origin();
            let hi = grid.max_corner();
            if lo[0] > self.bounds.min[0]
                || lo[1] > self.bounds.min[1]
                || hi[0] < self.bounds.max[0]
                || hi[1] < self.bounds.max[1]
            {
                return Err(Error::InvalidParameter {
                    what: "terrain",
                    why: "terrain grid does not cover the survey bounds".into(),
                });
            }
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.mission_timeout_s / self.pulse_period_s).ceil() as usize
    }

    fn start_state(&self) -> UavState<f64> {
        UavState::new(
            [self.uav_start_xy[0], self.uav_start_xy[1], self.altitude_m],
            self.uav_start_heading_deg.to_radians(),
        )
    }
}

/// Independent seeds for the two random streams of a mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionSeeds {
    /// Drives ground-truth source motion.
    pub truth: u64,
    /// Drives everything receiver-side: initialization, noise, resampling.
    pub receiver: u64,
}

impl MissionSeeds {
    /// Split one master seed into the two streams.
    pub fn from_master(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            truth: rng.next_u64(),
            receiver: rng.next_u64(),
        }
    }
}

/// Outcome for one source in one mission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceOutcome {
    pub id: u32,
    /// Seconds until the localization latch, or `None` on timeout.
    pub localization_time_s: Option<f64>,
    /// Distance from the frozen estimate to the true position at the moment
    /// of declaration.
    pub error_m: Option<f64>,
    /// Distance from the final estimate to the true position at mission end.
    pub final_error_m: f64,
}

/// One vehicle pose sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t_s: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    pub heading_rad: f64,
}

/// Belief covariance-determinant trace for one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetTrace {
    pub source_id: u32,
    /// (time s, det of the 2x2 positional covariance, m^4) per tick.
    pub series: Vec<(f64, f64)>,
}

/// Everything a single mission produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionResult {
    pub per_source: Vec<SourceOutcome>,
    /// Time of the last localization, or the timeout value.
    pub total_time_s: f64,
    pub timed_out: bool,
    pub pulses_emitted: u64,
    pub pulses_detected: u64,
    /// Exactly pulses_detected / pulses_emitted (0 when nothing emitted).
    pub detection_rate: f64,
    pub trajectory: Vec<TrajectorySample>,
    pub det_traces: Vec<DetTrace>,
    /// Rotate-for-bearing only: when each bearing was emitted.
    pub bearing_times_s: Vec<f64>,
    /// Filter updates dropped because every particle underflowed.
    pub skipped_updates: u64,
}

/// Ground-truth x-y series per source: `series[source][tick]`, with entry 0
/// the initial position. Walks are clamped to the survey bounds.
pub fn generate_ground_truth<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
    steps: usize,
) -> Vec<Vec<[f64; 2]>> {
    let sigma = config.source_sigma_q_m;
    config
        .sources
        .iter()
        .map(|src| {
            let mut series = Vec::with_capacity(steps + 1);
            let mut p = config.bounds.clamp(src.position);
            series.push(p);
            for _ in 0..steps {
                p[0] += sigma * f64::std_normal(rng);
                p[1] += sigma * f64::std_normal(rng);
                p = config.bounds.clamp(p);
                series.push(p);
            }
            series
        })
        .collect()
}

fn source_state(terrain: Option<&TerrainGrid<f64>>, xy: [f64; 2]) -> Result<SourceState<f64>> {
    let z = match terrain {
        Some(grid) => grid.height_at(xy)?,
        None => 0.0,
    };
    Ok(SourceState::new([xy[0], xy[1], z]))
}

/// What the rotate-for-bearing vehicle is currently doing.
enum RotatePhase {
    Travel { until_s: f64 },
    Rotating { until_s: f64, target: u32 },
}

/// Run one mission from a single master seed.
pub fn run_mission(config: &ScenarioConfig, seed: u64) -> Result<MissionResult> {
    run_mission_with_seeds(config, MissionSeeds::from_master(seed))
}

/// Run one mission with explicit truth/receiver seeds (the batch harness
/// reuses a truth seed across many receiver seeds).
pub fn run_mission_with_seeds(
    config: &ScenarioConfig,
    seeds: MissionSeeds,
) -> Result<MissionResult> {
    config.validate()?;
    let pattern = config.pattern.build()?;
    let terrain = config.terrain.as_ref().map(|t| t.build()).transpose()?;
    let env = EnvironmentModel::new(
        terrain,
        config.extra_loss_db,
        config.carrier_freq_ghz,
        config.detection_prob,
    )?;
    let steps = config.steps();
    let dt = config.pulse_period_s;

    let mut truth_rng = ChaCha8Rng::seed_from_u64(seeds.truth);
    let mut rx_rng = ChaCha8Rng::seed_from_u64(seeds.receiver);
    let truth = generate_ground_truth(config, &mut truth_rng, steps);

    let mut beliefs: Vec<ParticleBelief<f64>> = Vec::with_capacity(config.sources.len());
    for src in &config.sources {
        beliefs.push(ParticleBelief::initialize(
            src.id,
            config.n_particles,
            &config.bounds,
            &mut rx_rng,
        )?);
    }

    let transition = TransitionModel {
        sigma_q_m: config.source_sigma_q_m,
    };
    let sigma_gen = config.truth_radio.noise_std_db;
    let sigma_filter = config.model_radio.noise_std_db;
    let bearing_std_rad = config.bearing_noise_std_deg.to_radians();
    let max_gap = 1.5 * dt;

    let mut uav = config.start_state();
    let mut action = Action {
        velocity_m_s: [0.0, 0.0],
        duration_s: dt,
    };
    let mut next_replan = 0.0;
    let mut rotate_phase = RotatePhase::Travel { until_s: 0.0 };
    let mut windows: Vec<Vec<WindowSample<f64>>> =
        vec![Vec::with_capacity(config.window_m); config.sources.len()];

    let mut outcomes: Vec<SourceOutcome> = config
        .sources
        .iter()
        .map(|s| SourceOutcome {
            id: s.id,
            localization_time_s: None,
            error_m: None,
            final_error_m: f64::NAN,
        })
        .collect();
    let mut trajectory = Vec::with_capacity(steps.min(100_000));
    let mut det_traces: Vec<DetTrace> = config
        .sources
        .iter()
        .map(|s| DetTrace {
            source_id: s.id,
            series: Vec::new(),
        })
        .collect();
    let mut bearing_times = Vec::new();
    let mut pulses_emitted = 0u64;
    let mut pulses_detected = 0u64;
    let mut total_time = 0.0;
    let mut last_tick = 0usize;

    for tick in 0..steps {
        let time = tick as f64 * dt;
        last_tick = tick;
        trajectory.push(TrajectorySample {
            t_s: time,
            x_m: uav.position[0],
            y_m: uav.position[1],
            z_m: uav.position[2],
            heading_rad: uav.heading,
        });

        // Source motion diffuses the beliefs.
        for belief in beliefs.iter_mut() {
            belief.predict(&transition, &mut rx_rng)?;
        }

        // Pulse detection and method-specific measurement per source.
        for (idx, _) in config.sources.iter().enumerate() {
            let detected = f64::uniform(&mut rx_rng, 0.0, 1.0) < config.detection_prob;
            pulses_emitted += 1;
            if detected {
                pulses_detected += 1;
            }
            if beliefs[idx].localized() || !detected {
                if !detected {
                    // A missed pulse breaks the differencing chain.
                    prune_stale(&mut windows[idx], time + dt, max_gap);
                }
                continue;
            }
            let truth_state = source_state(env.terrain.as_ref(), truth[idx][tick])?;
            match config.method {
                Method::Gyro => {
                    let mean = mean_rssi(&config.truth_radio, &pattern, &truth_state, &uav)?;
                    let excess = env.excess_loss_db(truth_state.position, uav.position)?;
                    let rssi = mean - excess + sigma_gen * f64::std_normal(&mut rx_rng);
                    push_sample(
                        &mut windows[idx],
                        WindowSample {
                            time_s: time,
                            rssi_dbm: rssi,
                            uav: uav.clone(),
                        },
                        config.window_m,
                        max_gap,
                    );
                    if windows[idx].len() >= 2 {
                        let window = MeasurementWindow::new(windows[idx].clone(), max_gap)?;
                        let meas = window.difference_window()?;
                        beliefs[idx].update(&meas, &pattern, sigma_filter, &mut rx_rng)?;
                    }
                }
                Method::DualAntenna => {
                    let phi = relative_bearing(&truth_state, &uav)?;
                    let z = pattern.gain_db(phi)
                        + config.dual_constant_db
                        + std::f64::consts::SQRT_2 * sigma_gen * f64::std_normal(&mut rx_rng);
                    let var = 2.0 * sigma_filter * sigma_filter;
                    let uav_now = uav.clone();
                    let c = config.dual_constant_db;
                    let pat = &pattern;
                    beliefs[idx].update_with(
                        |p: &[f64; 2]| {
                            let particle = SourceState::new([p[0], p[1], 0.0]);
                            match relative_bearing(&particle, &uav_now) {
                                Ok(phi_p) => {
                                    let r = z - pat.gain_db(phi_p) - c;
                                    -0.5 * r * r / var
                                }
                                Err(_) => f64::NEG_INFINITY,
                            }
                        },
                        &mut rx_rng,
                    );
                }
                Method::RssiIdeal => {
                    let mean = mean_rssi(&config.truth_radio, &pattern, &truth_state, &uav)?;
                    let excess = env.excess_loss_db(truth_state.position, uav.position)?;
                    let z = mean - excess + sigma_gen * f64::std_normal(&mut rx_rng);
                    let var = sigma_gen * sigma_gen;
                    let uav_now = uav.clone();
                    let env_ref = &env;
                    let radio = &config.truth_radio;
                    let pat = &pattern;
                    beliefs[idx].update_with(
                        |p: &[f64; 2]| {
                            let particle = match source_state(env_ref.terrain.as_ref(), *p) {
                                Ok(s) => s,
                                Err(_) => return f64::NEG_INFINITY,
                            };
                            let mean_p = match mean_rssi(radio, pat, &particle, &uav_now) {
                                Ok(m) => m,
                                Err(_) => return f64::NEG_INFINITY,
                            };
                            let excess_p = match env_ref
                                .excess_loss_db(particle.position, uav_now.position)
                            {
                                Ok(e) => e,
                                Err(_) => return f64::NEG_INFINITY,
                            };
                            let r = z - (mean_p - excess_p);
                            -0.5 * r * r / var
                        },
                        &mut rx_rng,
                    );
                }
                Method::RotateBearing => {
                    // Bearings are produced by the rotation schedule below,
                    // not per pulse.
                }
            }
        }

        // Rotate-for-bearing: finish a rotation by emitting one bearing to
        // the targeted source.
        if config.method == Method::RotateBearing {
            if let RotatePhase::Rotating { until_s, target } = rotate_phase {
                if time + dt >= until_s - 1e-9 {
                    let idx = config.sources.iter().position(|s| s.id == target);
                    if let Some(idx) = idx {
                        if !beliefs[idx].localized() {
                            let truth_state =
                                source_state(env.terrain.as_ref(), truth[idx][tick])?;
                            let true_bearing =
                                world_bearing(uav.xy(), truth_state.xy())?;
                            let measured = true_bearing
                                + bearing_std_rad * f64::std_normal(&mut rx_rng);
                            let uav_now = uav.clone();
                            let var = bearing_std_rad * bearing_std_rad;
                            beliefs[idx].update_with(
                                |p: &[f64; 2]| match world_bearing(uav_now.xy(), *p) {
                                    Ok(b) => {
                                        let r = wrap_to_pi(measured - b);
                                        -0.5 * r * r / var
                                    }
                                    Err(_) => f64::NEG_INFINITY,
                                },
                                &mut rx_rng,
                            );
                            bearing_times.push(time);
                        }
                    }
                    rotate_phase = RotatePhase::Travel { until_s: time };
                    next_replan = time; // plan a fresh travel leg below
                }
            }
        }

        // Localization latch and determinant bookkeeping.
        for (idx, belief) in beliefs.iter_mut().enumerate() {
            let det = belief.covariance_det();
            det_traces[idx].series.push((time, det));
            if !belief.localized() && belief.check_localized(config.localized_threshold_m4)? {
                let est = belief.estimate();
                let truth_xy = truth[idx][tick];
                let dx = est[0] - truth_xy[0];
                let dy = est[1] - truth_xy[1];
                outcomes[idx].localization_time_s = Some(time);
                outcomes[idx].error_m = Some((dx * dx + dy * dy).sqrt());
                total_time = time;
            }
        }
        if beliefs.iter().all(|b| b.localized()) {
            break;
        }

        // Replanning.
        match config.method {
            Method::RotateBearing => {
                if let RotatePhase::Travel { until_s } = rotate_phase {
                    if time >= until_s - 1e-9 {
                        match nearest_target(&beliefs, &uav) {
                            Some((target, target_xy)) => {
                                // Travel one leg toward it, then stop and spin.
                                let leg = plan(&uav, target_xy, &config.planner)?;
                                action = leg;
                                rotate_phase = RotatePhase::Travel {
                                    until_s: time + config.planner.action_duration_s,
                                };
                                let _ = target;
                            }
                            None => {
                                action.velocity_m_s = [0.0, 0.0];
                            }
                        }
                    } else if time + dt >= until_s - 1e-9 {
                        // Leg ends this tick: queue the stationary rotation.
                        if let Some((target, _)) = nearest_target(&beliefs, &uav) {
                            rotate_phase = RotatePhase::Rotating {
                                until_s: until_s + config.rotation_duration_s,
                                target,
                            };
                        }
                    }
                }
                if matches!(rotate_phase, RotatePhase::Rotating { .. }) {
                    action.velocity_m_s = [0.0, 0.0];
                }
            }
            _ => {
                if time >= next_replan - 1e-9 {
                    if let Some((_, target_xy)) = nearest_target(&beliefs, &uav) {
                        action = plan(&uav, target_xy, &config.planner)?;
                        next_replan = time + action.duration_s;
                    } else {
                        action.velocity_m_s = [0.0, 0.0];
                    }
                }
            }
        }

        // Vehicle propagation: translation plus the method's spin profile.
        let spin = match config.method {
            Method::RotateBearing => match rotate_phase {
                RotatePhase::Rotating { .. } => {
                    std::f64::consts::TAU / config.rotation_duration_s
                }
                RotatePhase::Travel { .. } => 0.0,
            },
            _ => config.planner.gyration_rate_rad_s,
        };
        let step_action = Action {
            velocity_m_s: action.velocity_m_s,
            duration_s: dt,
        };
        uav = crate::planner::propagate_uav(&uav, &step_action, spin, dt)?;
        let clamped = config.bounds.clamp(uav.xy());
        uav.position[0] = clamped[0];
        uav.position[1] = clamped[1];
    }

    let timed_out = !beliefs.iter().all(|b| b.localized());
    if timed_out {
        total_time = config.mission_timeout_s;
    }
    let final_truth_tick = last_tick;
    for (idx, belief) in beliefs.iter().enumerate() {
        let est = belief.estimate();
        let truth_xy = truth[idx][final_truth_tick];
        let dx = est[0] - truth_xy[0];
        let dy = est[1] - truth_xy[1];
        outcomes[idx].final_error_m = (dx * dx + dy * dy).sqrt();
    }
    let detection_rate = if pulses_emitted == 0 {
        0.0
    } else {
        pulses_detected as f64 / pulses_emitted as f64
    };
    let skipped = beliefs.iter().map(|b| b.skipped_updates() as u64).sum();

    Ok(MissionResult {
        per_source: outcomes,
        total_time_s: total_time,
        timed_out,
        pulses_emitted,
        pulses_detected,
        detection_rate,
        trajectory,
        det_traces,
        bearing_times_s: bearing_times,
        skipped_updates: skipped,
    })
}

/// Nearest unlocalized source id plus its current mean estimate.
fn nearest_target(
    beliefs: &[ParticleBelief<f64>],
    uav: &UavState<f64>,
) -> Option<(u32, [f64; 2])> {
    let id = select_nearest_source(beliefs, uav)?;
    let belief = beliefs.iter().find(|b| b.source_id() == id)?;
    Some((id, belief.estimate_mean()))
}

/// Drop samples that can no longer chain to a sample at `next_time`.
fn prune_stale(window: &mut Vec<WindowSample<f64>>, next_time: f64, max_gap: f64) {
    if let Some(last) = window.last() {
        if next_time - last.time_s > max_gap {
            window.clear();
        }
    }
}

fn push_sample(
    window: &mut Vec<WindowSample<f64>>,
    sample: WindowSample<f64>,
    window_m: usize,
    max_gap: f64,
) {
    prune_stale(window, sample.time_s, max_gap);
    window.push(sample);
    while window.len() > window_m {
        window.remove(0);
    }
}

/// One mission inside a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub track: u32,
    pub run: u32,
    pub total_time_s: f64,
    /// Mean end-of-mission error over all sources: frozen (or, for sources
    /// still open at timeout, current) estimate vs truth at mission end.
    /// Frozen estimates go stale while truth keeps drifting, so slower
    /// methods pay for their staleness here.
    pub mean_error_m: Option<f64>,
    /// Sources still unlocalized at timeout.
    pub timeouts: u32,
    pub detection_rate: f64,
}

/// Batch statistics plus the per-run records they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub method: Method,
    pub n_tracks: usize,
    pub runs_per_track: usize,
    pub records: Vec<RunRecord>,
    pub mean_total_time_s: f64,
    pub std_total_time_s: f64,
    /// Mean/std over runs that localized at least one source.
    pub mean_error_m: f64,
    pub std_error_m: f64,
    /// Fraction of runs with at least one timeout.
    pub timeout_rate: f64,
    pub mean_detection_rate: f64,
}

/// Options for the Monte Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchOptions {
    pub n_tracks: usize,
    pub runs_per_track: usize,
    /// Worker threads; 0 lets the runtime decide. Results are identical
    /// regardless of the thread count.
    pub threads: usize,
}

/// Run `n_tracks` seeded ground-truth tracks (randomized initial source
/// positions) with `runs_per_track` receiver-noise realizations each.
/// Deterministic in (config, options, seed); thread count never changes the
/// output because records are re-sorted before aggregation.
pub fn run_monte_carlo(
    config: &ScenarioConfig,
    options: &BatchOptions,
    seed: u64,
) -> Result<BatchSummary> {
    if options.n_tracks == 0 || options.runs_per_track == 0 {
        return Err(Error::InvalidParameter {
            what: "batch size",
            why: "need at least one track and one run per track".into(),
        });
    }
    config.validate()?;

    // Pre-draw every seed sequentially so workers share nothing.
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks: Vec<(u32, u32, ScenarioConfig, MissionSeeds)> =
        Vec::with_capacity(options.n_tracks * options.runs_per_track);
    for track in 0..options.n_tracks as u32 {
        let mut track_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let mut track_config = config.clone();
        for src in track_config.sources.iter_mut() {
            src.position = [
                f64::uniform(&mut track_rng, config.bounds.min[0], config.bounds.max[0]),
                f64::uniform(&mut track_rng, config.bounds.min[1], config.bounds.max[1]),
            ];
        }
        let truth_seed = track_rng.next_u64();
        for run in 0..options.runs_per_track as u32 {
            let receiver_seed = master.next_u64();
            tasks.push((
                track,
                run,
                track_config.clone(),
                MissionSeeds {
                    truth: truth_seed,
                    receiver: receiver_seed,
                },
            ));
        }
    }

    let run_task = |(track, run, cfg, seeds): &(u32, u32, ScenarioConfig, MissionSeeds)| {
        run_mission_with_seeds(cfg, *seeds).map(|result| {
            let errors: Vec<f64> = result.per_source.iter().map(|s| s.final_error_m).collect();
            RunRecord {
                track: *track,
                run: *run,
                total_time_s: result.total_time_s,
                mean_error_m: if errors.is_empty() {
                    None
                } else {
                    Some(errors.iter().sum::<f64>() / errors.len() as f64)
                },
                timeouts: result
                    .per_source
                    .iter()
                    .filter(|s| s.localization_time_s.is_none())
                    .count() as u32,
                detection_rate: result.detection_rate,
            }
        })
    };

    let mut records: Vec<RunRecord> = if options.threads == 1 {
        tasks.iter().map(run_task).collect::<Result<_>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| Error::InvalidParameter {
                what: "thread pool",
                why: e.to_string(),
            })?;
        pool.install(|| tasks.par_iter().map(run_task).collect::<Result<_>>())?
    };
    records.sort_by_key(|r| (r.track, r.run));

    let n = records.len() as f64;
    let times: Vec<f64> = records.iter().map(|r| r.total_time_s).collect();
    let errors: Vec<f64> = records.iter().filter_map(|r| r.mean_error_m).collect();
    let (mean_time, std_time) = mean_std(&times);
    let (mean_err, std_err) = mean_std(&errors);
    let timeout_rate = records.iter().filter(|r| r.timeouts > 0).count() as f64 / n;
    let mean_detection = records.iter().map(|r| r.detection_rate).sum::<f64>() / n;

    Ok(BatchSummary {
        method: config.method,
        n_tracks: options.n_tracks,
        runs_per_track: options.runs_per_track,
        records,
        mean_total_time_s: mean_time,
        std_total_time_s: std_time,
        mean_error_m: mean_err,
        std_error_m: std_err,
        timeout_rate,
        mean_detection_rate: mean_detection,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Write per-run records as CSV:
/// `track,run,method,planner,total_time_s,mean_error_m,timeouts,detection_rate`.
/// A run that localized nothing leaves the error field empty.
pub fn write_runs_csv<W: std::io::Write>(
    w: &mut W,
    summary: &BatchSummary,
    planner_mode: PlannerMode,
) -> std::io::Result<()> {
    write_runs_header(w)?;
    write_runs_rows(w, summary, planner_mode)
}

/// Just the header line of the per-run CSV.
pub fn write_runs_header<W: std::io::Write>(w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "track,run,method,planner,total_time_s,mean_error_m,timeouts,detection_rate"
    )
}

/// Just the data rows; lets several method batches share one file.
pub fn write_runs_rows<W: std::io::Write>(
    w: &mut W,
    summary: &BatchSummary,
    planner_mode: PlannerMode,
) -> std::io::Result<()> {
    let planner = match planner_mode {
        PlannerMode::Discrete => "discrete",
        PlannerMode::Continuous => "continuous",
    };
    for r in &summary.records {
        let err = r
            .mean_error_m
            .map(|e| e.to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.track,
            r.run,
            summary.method.name(),
            planner,
            r.total_time_s,
            err,
            r.timeouts,
            r.detection_rate
        )?;
    }
    Ok(())
}

/// Covariance-determinant evolution along the fixed transect at one spin
/// rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub zeta_deg_s: f64,
    /// (time s, covariance det m^4) per tick.
    pub series: Vec<(f64, f64)>,
    /// First time the det crossed the localization threshold, if it did.
    pub time_to_threshold_s: Option<f64>,
}

/// Fixed-path convergence study: the vehicle flies a straight northbound
/// transect past a single static source while the antenna spins at each
/// listed rate; everything else (seeds included) is held identical, so the
/// traces differ only through the spin rate. Uses the spinning-receiver
/// measurement model; the belief is never latched so the full determinant
/// evolution is visible.
pub fn rotation_speed_convergence(
    config: &ScenarioConfig,
    zetas_deg_s: &[f64],
    seed: u64,
) -> Result<Vec<ConvergenceTrace>> {
    let mut cfg = config.clone();
    cfg.method = Method::Gyro;
    cfg.source_sigma_q_m = 0.0;
    cfg.validate()?;
    if cfg.sources.len() != 1 {
        return Err(Error::InvalidParameter {
            what: "convergence scenario",
            why: format!(
                "needs exactly one static source, got {}",
                cfg.sources.len()
            ),
        });
    }
    let pattern = cfg.pattern.build()?;
    let terrain = cfg.terrain.as_ref().map(|t| t.build()).transpose()?;
    let env = EnvironmentModel::new(
        terrain,
        cfg.extra_loss_db,
        cfg.carrier_freq_ghz,
        cfg.detection_prob,
    )?;
    let steps = cfg.steps();
    let dt = cfg.pulse_period_s;
    let seeds = MissionSeeds::from_master(seed);
    let truth_xy = cfg.bounds.clamp(cfg.sources[0].position);
    let truth_state = source_state(env.terrain.as_ref(), truth_xy)?;
    let sigma_gen = cfg.truth_radio.noise_std_db;
    let sigma_filter = cfg.model_radio.noise_std_db;
    let max_gap = 1.5 * dt;

    let mut out = Vec::with_capacity(zetas_deg_s.len());
    for &zeta_deg in zetas_deg_s {
        let zeta = zeta_deg.to_radians();
        let mut rx_rng = ChaCha8Rng::seed_from_u64(seeds.receiver);
        let mut belief = ParticleBelief::initialize(
            cfg.sources[0].id,
            cfg.n_particles,
            &cfg.bounds,
            &mut rx_rng,
        )?;
        let mut uav = cfg.start_state();
        let mut window: Vec<WindowSample<f64>> = Vec::with_capacity(cfg.window_m);
        let mut series = Vec::with_capacity(steps);
        let mut crossed = None;

        for tick in 0..steps {
            let time = tick as f64 * dt;
            let detected = f64::uniform(&mut rx_rng, 0.0, 1.0) < cfg.detection_prob;
            if detected {
                let mean = mean_rssi(&cfg.truth_radio, &pattern, &truth_state, &uav)?;
                let excess = env.excess_loss_db(truth_state.position, uav.position)?;
                let rssi = mean - excess + sigma_gen * f64::std_normal(&mut rx_rng);
                push_sample(
                    &mut window,
                    WindowSample {
                        time_s: time,
                        rssi_dbm: rssi,
                        uav: uav.clone(),
                    },
                    cfg.window_m,
                    max_gap,
                );
                if window.len() >= 2 {
                    let meas = MeasurementWindow::new(window.clone(), max_gap)?
                        .difference_window()?;
                    belief.update(&meas, &pattern, sigma_filter, &mut rx_rng)?;
                }
            } else {
                prune_stale(&mut window, time + dt, max_gap);
            }
            let det = belief.covariance_det();
            series.push((time, det));
            if crossed.is_none() && det < cfg.localized_threshold_m4 {
                crossed = Some(time);
            }

            // Straight northbound transect; spin is the swept variable.
            let step_action = Action {
                velocity_m_s: [0.0, cfg.planner.uav_speed_m_s],
                duration_s: dt,
            };
            uav = crate::planner::propagate_uav(&uav, &step_action, zeta, dt)?;
            let clamped = cfg.bounds.clamp(uav.xy());
            uav.position[0] = clamped[0];
            uav.position[1] = clamped[1];
        }
        out.push(ConvergenceTrace {
            zeta_deg_s: zeta_deg,
            series,
            time_to_threshold_s: crossed,
        });
    }
    Ok(out)
}

/// Write convergence traces as CSV: `t_s,zeta_deg_s,det_cov`, grouped by
/// spin rate.
pub fn write_convergence_csv<W: std::io::Write>(
    w: &mut W,
    traces: &[ConvergenceTrace],
) -> std::io::Result<()> {
    writeln!(w, "t_s,zeta_deg_s,det_cov")?;
    for trace in traces {
        for &(t, det) in &trace.series {
            writeln!(w, "{},{},{}", t, trace.zeta_deg_s, det)?;
        }
    }
    Ok(())
}

/// Write a mission trajectory as CSV: `t_s,x_m,y_m,z_m,heading_rad`.
pub fn write_trajectory_csv<W: std::io::Write>(
    w: &mut W,
    trajectory: &[TrajectorySample],
) -> std::io::Result<()> {
    writeln!(w, "t_s,x_m,y_m,z_m,heading_rad")?;
    for s in trajectory {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.t_s, s.x_m, s.y_m, s.z_m, s.heading_rad
        )?;
    }
    Ok(())
}

/// Write per-source determinant traces as CSV: `source_id,t_s,det_m4`.
pub fn write_det_traces_csv<W: std::io::Write>(
    w: &mut W,
    traces: &[DetTrace],
) -> std::io::Result<()> {
    writeln!(w, "source_id,t_s,det_m4")?;
    for trace in traces {
        for &(t, det) in &trace.series {
            writeln!(w, "{},{},{}", trace.source_id, t, det)?;
        }
    }
    Ok(())
}
