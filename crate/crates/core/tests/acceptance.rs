//! Acceptance suite: one test per release gate, ordered. Each pins a
//! load-bearing property of the stack — differencing algebra, estimation
//! bounds, and desk-scale mission statistics — at its stated tolerance and
//! runtime budget, and prints the measured numbers next to the bound it
//! asserts. Mission-level tests derive their streams exactly like the
//! command-line driver (`master ^ fnv1a64(component)`), so every figure
//! here can be reproduced with a CLI run of the same scenario.

use std::time::Instant;

use gyrotrack::antenna::GainPattern;
use gyrotrack::crlb::{self, CrlbScenario};
use gyrotrack::geometry::{relative_bearing, SourceState, UavState};
use gyrotrack::measurement::{
    log_likelihood, noise_covariance, MeasurementWindow, WindowSample,
};
use gyrotrack::sim::{
    rotation_speed_convergence, run_mission, run_monte_carlo, BatchOptions, Method,
    ScenarioConfig, SourceSpec, TerrainSpec,
};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Same stream derivation as the CLI, so desk numbers below match
/// `gyrotrack batch --seed 1` on the same scenario byte for byte.
fn derive_seed(master: u64, component: &str) -> u64 {
    master ^ fnv1a64(component.as_bytes())
}

fn budget(start: Instant, limit_s: f64, what: &str) {
    let elapsed = start.elapsed().as_secs_f64();
    println!("{what}: {elapsed:.1} s elapsed (budget {limit_s:.0} s)");
    assert!(
        elapsed < limit_s,
        "{what} took {elapsed:.1} s, over the {limit_s:.0} s budget"
    );
}

#[test]
fn a1_differenced_noise_covariance_matches_monte_carlo() {
    let start = Instant::now();
    let sigma = 3.0f64;
    let var = sigma * sigma;
    let reps = 1_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for m in [2usize, 3, 5, 8] {
        let n = m - 1;
        let exact = noise_covariance(m, sigma).unwrap();
        let mut acc = vec![vec![0.0f64; n]; n];
        let mut noise = vec![0.0f64; m];
        let mut d = vec![0.0f64; n];
        for _ in 0..reps {
            for v in noise.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v = sigma * z;
            }
            for i in 0..n {
                d[i] = noise[i + 1] - noise[i];
            }
            for i in 0..n {
                for j in i..n {
                    acc[i][j] += d[i] * d[j];
                }
            }
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let est = acc[i.min(j)][i.max(j)] / reps as f64;
                let err = (est - exact[i][j]).abs();
                // 2% of the entry for structural nonzeros, 2% of sigma^2
                // (the off-diagonal magnitude) as the yardstick for zeros.
                let tol = if exact[i][j] != 0.0 {
                    0.02 * exact[i][j].abs()
                } else {
                    0.02 * var
                };
                worst = worst.max(err / tol);
                assert!(
                    err <= tol,
                    "m={m} entry ({i},{j}): estimate {est:.5}, exact {:.5}, err {err:.2e} > tol {tol:.2e}",
                    exact[i][j]
                );
            }
        }
        println!("m={m}: worst entry at {:.1}% of tolerance", 100.0 * worst);
    }
    budget(start, 30.0, "covariance monte carlo");
}

#[test]
fn a2_differencing_is_offset_invariant() {
    let start = Instant::now();
    // Samples and offsets on a 2^-16 grid keep every addition exact in f64,
    // so the check exercises the differencing map, not harness rounding.
    let quantum = (2.0f64).powi(-16);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let pattern = GainPattern::parametric(6.15, 10.0).unwrap();
    let mut worst_loglik = 0.0f64;
    for _ in 0..10_000 {
        let m = rng.random_range(2..=8usize);
        let values: Vec<f64> = (0..m)
            .map(|_| rng.random_range(-4_000_000..4_000_000i64) as f64 * quantum)
            .collect();
        let offset = rng.random_range(-2_000_000..2_000_000i64) as f64 * quantum;
        let poses: Vec<UavState<f64>> = (0..m)
            .map(|_| {
                UavState::new(
                    [
                        rng.random_range(-400.0..400.0),
                        rng.random_range(-400.0..400.0),
                        30.0,
                    ],
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let window = |shift: f64| {
            let samples: Vec<WindowSample<f64>> = values
                .iter()
                .zip(&poses)
                .enumerate()
                .map(|(i, (&v, &uav))| WindowSample {
                    time_s: i as f64,
                    rssi_dbm: v + shift,
                    uav,
                })
                .collect();
            MeasurementWindow::new(samples, 1.5)
                .unwrap()
                .difference_window()
                .unwrap()
        };
        let base = window(0.0);
        let shifted = window(offset);
        assert_eq!(
            base.deltas(),
            shifted.deltas(),
            "offset {offset} leaked into the differences"
        );
        let source = SourceState::new([
            rng.random_range(-800.0..800.0),
            rng.random_range(-800.0..800.0),
            0.0,
        ]);
        let la = log_likelihood(&base, &source, &pattern, 2.0).unwrap();
        let lb = log_likelihood(&shifted, &source, &pattern, 2.0).unwrap();
        worst_loglik = worst_loglik.max((la - lb).abs());
    }
    println!("worst log-likelihood shift: {worst_loglik:.2e}");
    assert!(worst_loglik < 1e-12);
    budget(start, 10.0, "offset invariance");
}

#[test]
fn a3_jacobian_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let pattern = GainPattern::parametric(
            rng.random_range(2.0..8.0),
            rng.random_range(3.0..20.0),
        )
        .unwrap();
        let source = SourceState::new([
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
            0.0,
        ]);
        let pose = |rng: &mut ChaCha8Rng| {
            // Keep poses 30..500 m from the source so the geometry stays
            // comfortably away from the overhead singularity.
            let r = rng.random_range(30.0..500.0);
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            UavState::new(
                [
                    source.position[0] + r * th.sin(),
                    source.position[1] + r * th.cos(),
                    30.0,
                ],
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        };
        let prev = pose(&mut rng);
        let curr = pose(&mut rng);
        let analytic =
            crlb::measurement_jacobian(&source, &prev, &curr, &pattern).unwrap();
        let delta_at = |xy: [f64; 2]| {
            let s = SourceState::new([xy[0], xy[1], source.position[2]]);
            pattern.gain_db(relative_bearing(&s, &curr).unwrap())
                - pattern.gain_db(relative_bearing(&s, &prev).unwrap())
        };
        let h = 1e-3;
        let [sx, sy] = source.xy();
        let fd = [
            (delta_at([sx + h, sy]) - delta_at([sx - h, sy])) / (2.0 * h),
            (delta_at([sx, sy + h]) - delta_at([sx, sy - h])) / (2.0 * h),
        ];
        let err = ((analytic[0] - fd[0]).powi(2) + (analytic[1] - fd[1]).powi(2)).sqrt();
        let norm = (analytic[0].powi(2) + analytic[1].powi(2))
            .sqrt()
            .max((fd[0].powi(2) + fd[1].powi(2)).sqrt());
        assert!(
            err <= 1e-5 * norm + 1e-12,
            "jacobian row {analytic:?} vs finite differences {fd:?} (err {err:.2e})"
        );
        if norm > 0.0 {
            worst = worst.max(err / norm);
        }
    }
    println!("worst relative row error: {worst:.2e}");
    budget(start, 5.0, "jacobian finite differences");
}

#[test]
fn a4_bound_favors_fast_spin_and_beats_dual_antenna_past_crossover() {
    let start = Instant::now();
    let template = CrlbScenario::baseline();

    // (a) not spinning costs at least two orders of magnitude.
    let det_0 = crlb::crlb_det_final(&CrlbScenario {
        spin_rate_rad_s: 0.0,
        ..template.clone()
    })
    .unwrap()
    .expect("orbit alone eventually makes the information invertible");
    let det_40 = crlb::crlb_det_final(&template)
        .unwrap()
        .expect("baseline bound exists");
    println!("det at 0 deg/s: {det_0:.3e}, at 40 deg/s: {det_40:.3e}, ratio {:.0}x", det_0 / det_40);
    assert!(det_0 >= 100.0 * det_40);

    // (b) a full extra revolution per sample changes nothing: the pose
    // sequence is identical, so the bound must agree to within 1%.
    for zeta in [5.0f64, 20.0, 40.0, 90.0, 170.0] {
        let d = crlb::sweep_spin_rates(&template, &[zeta, zeta + 360.0]).unwrap();
        let (a, b) = (d[0].1.unwrap(), d[1].1.unwrap());
        assert!(
            (a - b).abs() <= 0.01 * a,
            "bound not periodic at {zeta} deg/s: {a:.4e} vs {b:.4e}"
        );
    }
    println!("sweep 360-periodic within 1% at 5 probe rates");

    // (c) strict interior minimum of the sweep on (0, 180) deg per sample.
    let grid: Vec<f64> = (0..=72).map(|i| 2.5 * i as f64).collect();
    let sweep = crlb::sweep_spin_rates(&template, &grid).unwrap();
    let dets: Vec<f64> = sweep
        .iter()
        .map(|&(z, d)| d.unwrap_or_else(|| panic!("singular bound at {z} deg/s")))
        .collect();
    let (argmin, &min_det) = dets
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let best = grid[argmin];
    println!("sweep minimum {min_det:.3e} at {best} deg/s");
    assert!(
        best > 0.0 && best < 180.0 && min_det < dets[0] && min_det < *dets.last().unwrap(),
        "expected a strict interior minimum, got {best} deg/s"
    );

    // (d) against the two-antenna reference: loses below 10 deg/sample,
    // wins everywhere above 30.
    let dual = crlb::dual_antenna_final(&template, &crlb::default_dual_pattern())
        .unwrap()
        .expect("dual-antenna bound exists");
    println!("dual-antenna det: {dual:.3e}");
    for (&zeta, &det) in grid.iter().zip(&dets) {
        if zeta > 0.0 && zeta < 10.0 {
            assert!(det > dual, "expected to lose at {zeta} deg/s: {det:.3e} vs {dual:.3e}");
        }
        if zeta > 30.0 {
            assert!(det < dual, "expected to win at {zeta} deg/s: {det:.3e} vs {dual:.3e}");
        }
    }
    budget(start, 120.0, "bound reproduction");
}

/// Desk-scale scenario behind the two statistics gates: the stock 1 km^2
/// five-source layout over seeded synthetic terrain, mission cap 700 s.
/// The cap is the one knob changed from the desk defaults; see the batch
/// docs for why end-of-mission error makes slow methods pay for staleness.
fn desk_terrain(method: Method, sigma_q: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::desk();
    cfg.terrain = Some(TerrainSpec::Synthetic {
        origin: [-60.0, -60.0],
        cell_size_m: 20.0,
        rows: 57,
        cols: 57,
        relief_m: 25.0,
        seed: 7,
    });
    cfg.mission_timeout_s = 700.0;
    cfg.method = method;
    cfg.source_sigma_q_m = sigma_q;
    cfg
}

#[test]
fn a5_desk_scale_method_comparison() {
    let start = Instant::now();
    let opts = BatchOptions {
        n_tracks: 10,
        runs_per_track: 10,
        threads: 1,
    };
    let seed = derive_seed(1, "batch/sigma_q=2");
    let mut stats = Vec::new();
    for method in [Method::Gyro, Method::DualAntenna, Method::RotateBearing] {
        let summary = run_monte_carlo(&desk_terrain(method, 2.0), &opts, seed).unwrap();
        println!(
            "{:>14}: time {:6.1} +- {:5.1} s, error {:5.1} +- {:4.1} m, timeout rate {:.2}",
            method.name(),
            summary.mean_total_time_s,
            summary.std_total_time_s,
            summary.mean_error_m,
            summary.std_error_m,
            summary.timeout_rate
        );
        stats.push(summary);
    }
    let (gyro, dual, rotate) = (&stats[0], &stats[1], &stats[2]);

    let time_ratio = gyro.mean_total_time_s / rotate.mean_total_time_s;
    println!("gyro/rotate time ratio: {time_ratio:.3} (bound 0.60)");
    assert!(time_ratio <= 0.60);

    let dual_ratio = gyro.mean_total_time_s / dual.mean_total_time_s;
    println!("gyro/dual time ratio: {dual_ratio:.3} (bounds 0.75..1.25)");
    assert!((0.75..=1.25).contains(&dual_ratio));

    println!(
        "mean error: gyro {:.1} m vs rotate {:.1} m",
        gyro.mean_error_m, rotate.mean_error_m
    );
    assert!(gyro.mean_error_m < rotate.mean_error_m);
    budget(start, 1200.0, "desk-scale comparison");
}

#[test]
fn a6_mobility_sweep_error_growth() {
    let start = Instant::now();
    let opts = BatchOptions {
        n_tracks: 5,
        runs_per_track: 5,
        threads: 1,
    };
    let mut gyro = Vec::new();
    let mut rotate = Vec::new();
    for sigma_q in [0.0f64, 2.0, 4.0] {
        let seed = derive_seed(1, &format!("batch/sigma_q={sigma_q:.0}"));
        for (method, out) in [(Method::Gyro, &mut gyro), (Method::RotateBearing, &mut rotate)] {
            let summary =
                run_monte_carlo(&desk_terrain(method, sigma_q), &opts, seed).unwrap();
            println!(
                "sigma_q={sigma_q}: {:>14} error {:5.1} +- {:4.1} m",
                method.name(),
                summary.mean_error_m,
                summary.std_error_m
            );
            out.push(summary.mean_error_m);
        }
    }
    let gyro_growth = gyro[2] - gyro[0];
    let rotate_growth = rotate[2] - rotate[0];
    println!("absolute error growth 0 -> 4 m drift: rotate {rotate_growth:.1} m, gyro {gyro_growth:.1} m");
    assert!(
        rotate_growth > gyro_growth,
        "rotate should degrade faster with source mobility"
    );

    // End-of-mission error folds in drift accumulated after the estimate
    // froze, which grows with drift rate for every method; the 2x ceiling
    // below does not survive that staleness term and this assert is
    // expected to fail. Anchored at declaration instead, the gyro error
    // ratio is ~1.5x and the consistency claim holds.
    let ceiling = 2.0 * gyro[0];
    println!(
        "gyro error at 4 m drift: {:.1} m vs 2x ceiling {:.1} m",
        gyro[2], ceiling
    );
    budget(start, 900.0, "mobility sweep");
    assert!(
        gyro[2] <= ceiling,
        "gyro end-of-mission error {:.1} m exceeds twice its static value {:.1} m",
        gyro[2],
        gyro[0]
    );
}

#[test]
fn a7_transect_convergence_speeds_up_with_spin() {
    let start = Instant::now();
    let zetas = [0.0f64, 20.0, 40.0, 60.0];
    let traces = rotation_speed_convergence(
        &ScenarioConfig::transect(),
        &zetas,
        derive_seed(1, "convergence"),
    )
    .unwrap();
    let times: Vec<f64> = traces
        .iter()
        .map(|t| t.time_to_threshold_s.unwrap_or(f64::INFINITY))
        .collect();
    for (z, t) in zetas.iter().zip(&times) {
        if t.is_finite() {
            println!("zeta {z:>4} deg/s: threshold crossed at {t:.0} s");
        } else {
            println!("zeta {z:>4} deg/s: never crossed");
        }
    }
    assert!(
        times[0].is_infinite(),
        "a non-spinning pass should not localize within the window"
    );
    assert!(times[2].is_finite() && times[3].is_finite());
    let inversions = times.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(
        inversions <= 1,
        "threshold times {times:?} increase more than once across spin rates"
    );
    budget(start, 120.0, "transect convergence");
}

#[test]
fn a8_filter_smoke_single_static_source() {
    let start = Instant::now();
    let mut cfg = ScenarioConfig::desk();
    cfg.sources = vec![SourceSpec {
        id: 1,
        position: [650.0, 600.0],
    }];
    cfg.source_sigma_q_m = 0.0;
    cfg.mission_timeout_s = 300.0;
    cfg.method = Method::Gyro;
    let mut worst_time = 0.0f64;
    let mut worst_error = 0.0f64;
    for seed in 1..=20u64 {
        let result = run_mission(&cfg, seed).unwrap();
        let outcome = &result.per_source[0];
        let t = outcome
            .localization_time_s
            .unwrap_or_else(|| panic!("seed {seed}: never latched within 300 s"));
        assert!(
            outcome.final_error_m < 40.0,
            "seed {seed}: final error {:.1} m",
            outcome.final_error_m
        );
        worst_time = worst_time.max(t);
        worst_error = worst_error.max(outcome.final_error_m);
    }
    println!("20/20 seeds latched; worst time {worst_time:.0} s, worst error {worst_error:.1} m");
    budget(start, 60.0, "filter smoke");
}
