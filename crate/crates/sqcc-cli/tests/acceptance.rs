//! Acceptance gate for the primary deliverables.
//!
//! One test per criterion. Each prints a single `acceptance <name>:
//! PASS|FAIL` line before asserting, so a full run shows the scoreboard
//! regardless of which assertion text the harness surfaces. Every stochastic
//! check runs from a frozen seed and is therefore reproducible bit for bit.

use std::fs;
use std::process::Command;

use rand::Rng;

use sqcc_core::classical::{max_tolerable_phase_noise, qpsk_ber, solve_displacement};
use sqcc_core::keyrate::{g_function, key_rate, optimize_va, SearchSpec};
use sqcc_core::noise::{assemble, delay_phase_variance, leakage_excess_noise, leakage_photons};
use sqcc_core::phase::{estimate_phase_error_variance, TruePhase};
use sqcc_core::rng::{derive_seed, StreamSeed};
use sqcc_core::sim::{run_campaign_at, PhaseModel};
use sqcc_core::{PhaseNoiseBudget64, SystemParams64};

fn verdict(name: &str, pass: bool) -> bool {
    println!("acceptance {name}: {}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// A random feasible operating point. The phase noise total stays below the
/// tolerable maximum of the hardest error rate target in the drawn range,
/// so the displacement always solves.
fn draw_point<R: Rng>(rng: &mut R) -> (SystemParams64, PhaseNoiseBudget64) {
    let mut p = SystemParams64::baseline();
    p.v_a = log_uniform(rng, 0.1, 30.0);
    p.length_km = rng.random_range(0.0..150.0);
    p.eta = rng.random_range(0.25..1.0);
    p.v_el = rng.random_range(0.0..0.5);
    p.eps0 = rng.random_range(0.0..0.05);
    p.ber_target = log_uniform(rng, 1e-11, 1e-2);
    let phase = PhaseNoiseBudget64::new(
        rng.random_range(0.0..5e-3),
        rng.random_range(0.0..5e-3),
    )
    .expect("drawn budget is valid");
    (p.validated().expect("drawn parameters are valid"), phase)
}

/// The four phase noise combinations the link is normally quoted at, in
/// the canonical order.
const COMBOS: [(f64, f64); 4] = [(1e-5, 1e-3), (1e-5, 1e-2), (1e-4, 1e-3), (1e-4, 1e-2)];

#[test]
fn threshold_band() {
    let threshold = max_tolerable_phase_noise(1e-9_f64).unwrap();
    let in_band = (0.0276..=0.0280).contains(&threshold);
    let pinned = (threshold - 0.027_798_094_332_169_35).abs() < 1e-12;
    assert!(
        verdict("threshold-band", in_band && pinned),
        "threshold = {threshold}"
    );
}

#[test]
fn untrusted_collapse() {
    // Accounting the tracker variance as untrusted hands it to the
    // eavesdropper: the key rate must then be negative at every distance
    // and every modulation variance, for all four combinations.
    let search = SearchSpec::default();
    let mut max_rate = f64::NEG_INFINITY;
    for (si, sb) in COMBOS {
        let phase = PhaseNoiseBudget64::new(si + sb, 0.0).unwrap();
        for l in (0..=160).step_by(5) {
            let params = SystemParams64::baseline().with_length_km(f64::from(l));
            let report = optimize_va(&params, &phase, &search).unwrap();
            max_rate = max_rate.max(report.rate_raw);
        }
    }
    assert!(
        verdict("untrusted-collapse", max_rate < 0.0),
        "best rate with an untrusted tracker = {max_rate}"
    );
}

#[test]
fn rate_curve_shape() {
    let search = SearchSpec::default();
    let grid: Vec<f64> = (0..=160).step_by(5).map(f64::from).collect();
    let mut rate_at_5km = Vec::new();
    let mut cutoffs = Vec::new();
    let mut monotone = true;

    for (si, sb) in COMBOS {
        let phase = PhaseNoiseBudget64::new(si, sb).unwrap();
        let rates: Vec<f64> = grid
            .iter()
            .map(|&l| {
                let params = SystemParams64::baseline().with_length_km(l);
                optimize_va(&params, &phase, &search).unwrap().rate_raw
            })
            .collect();
        monotone &= rates.windows(2).all(|w| w[1] < w[0] + 1e-9);
        rate_at_5km.push(rates[1]);
        let cutoff = grid
            .iter()
            .zip(&rates)
            .filter(|(_, &r)| r > 0.0)
            .map(|(&l, _)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        cutoffs.push(cutoff);
    }

    let positive_at_5 = rate_at_5km.iter().all(|&r| r > 0.0);
    // More untrusted noise can only shorten the reach, and trusted tracker
    // noise hurts less than untrusted quadrature noise.
    let ordered = cutoffs[0] >= cutoffs[2] && cutoffs[1] >= cutoffs[3] && cutoffs[0] >= cutoffs[1];
    // Frozen from an independent grid scan of the same closed forms.
    let pinned = cutoffs == [75.0, 70.0, 35.0, 30.0];

    assert!(
        verdict("rate-curve-shape", positive_at_5 && monotone && ordered && pinned),
        "rates at 5 km = {rate_at_5km:?}, cutoffs = {cutoffs:?}, monotone = {monotone}"
    );
}

#[test]
fn simulator_equivalence() {
    // Ten operating points across distance, modulation strength and error
    // rate target; at each the empirical error rates must sit within three
    // binomial deviations of the target and the empirical decision noise
    // within 1% of the closed form. Phase noise totals are small enough
    // that the exact-rotation simulation and the small-angle budget agree
    // far below these resolutions.
    struct Point {
        l: f64,
        si: f64,
        sb: f64,
        v_a: f64,
        ber: f64,
    }
    const POINTS: [Point; 10] = [
        Point { l: 0.0, si: 1e-5, sb: 1e-3, v_a: 4.0, ber: 1e-2 },
        Point { l: 0.0, si: 1e-4, sb: 1e-3, v_a: 16.0, ber: 1e-3 },
        Point { l: 10.0, si: 1e-6, sb: 1e-4, v_a: 4.0, ber: 1e-3 },
        Point { l: 10.0, si: 5e-4, sb: 2e-3, v_a: 8.0, ber: 1e-2 },
        Point { l: 25.0, si: 1e-5, sb: 1e-3, v_a: 4.0, ber: 1e-4 },
        Point { l: 25.0, si: 1e-4, sb: 1e-3, v_a: 8.0, ber: 1e-3 },
        Point { l: 40.0, si: 1e-5, sb: 1e-3, v_a: 2.0, ber: 1e-2 },
        Point { l: 40.0, si: 1e-4, sb: 2e-3, v_a: 4.0, ber: 2e-5 },
        Point { l: 60.0, si: 1e-5, sb: 1e-3, v_a: 4.0, ber: 1e-3 },
        Point { l: 60.0, si: 1e-6, sb: 1e-4, v_a: 2.0, ber: 1e-2 },
    ];
    const ROUNDS: u64 = 10_000_000;

    let mut violations = Vec::new();
    for (i, pt) in POINTS.iter().enumerate() {
        let mut params = SystemParams64::baseline()
            .with_length_km(pt.l)
            .with_v_a(pt.v_a);
        params.ber_target = pt.ber;
        let params = params.validated().unwrap();
        let phase = PhaseNoiseBudget64::new(pt.si, pt.sb).unwrap();
        let t = params.transmittance().unwrap();
        let alpha = solve_displacement(&params, &phase, t)
            .unwrap()
            .alpha
            .unwrap();
        let noise = assemble(&params, &phase, alpha, t).unwrap();

        let emp = run_campaign_at(
            &params,
            &phase,
            alpha,
            ROUNDS,
            derive_seed(0x5eed_2026, i as u64),
            PhaseModel::ExactRotation,
        )
        .unwrap();

        let n = ROUNDS as f64;
        let ber_bound = 3.0 * (pt.ber * (1.0 - pt.ber) / n).sqrt();
        for (q, observed) in [("x", emp.ber_x.rate), ("p", emp.ber_p.rate)] {
            if (observed - pt.ber).abs() > ber_bound {
                violations.push(format!(
                    "point {i}: ber_{q} = {observed} vs {} (bound {ber_bound})",
                    pt.ber
                ));
            }
        }
        for (q, observed) in [("x", emp.noise_x), ("p", emp.noise_p)] {
            if (observed - noise.n_tot).abs() > 0.01 * noise.n_tot {
                violations.push(format!(
                    "point {i}: noise_{q} = {observed} vs {} (1%)",
                    noise.n_tot
                ));
            }
        }
    }
    assert!(
        verdict("simulator-equivalence", violations.is_empty()),
        "{}",
        violations.join("\n")
    );
}

#[test]
fn displacement_round_trip() {
    // Solving the amplitude, assembling the budget at that amplitude and
    // evaluating the error rate must land back on the target.
    let mut rng = StreamSeed::new(0xa11ce).stream(0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (params, phase) = draw_point(&mut rng);
        let t = params.transmittance().unwrap();
        let alpha = solve_displacement(&params, &phase, t)
            .unwrap()
            .alpha
            .expect("drawn points are feasible");
        let noise = assemble(&params, &phase, alpha, t).unwrap();
        let ber = qpsk_ber(alpha, t, params.eta, noise.n_tot, params.n0).unwrap();
        worst = worst.max(((ber - params.ber_target) / params.ber_target).abs());
    }
    assert!(
        verdict("displacement-round-trip", worst < 1e-9),
        "worst relative error = {worst}"
    );
}

#[test]
fn phase_shot_floor() {
    // The measured tracker error variance must reproduce the shot-limited
    // floor 2 n0 / (eta n_ref). The calibration pulse is bright enough
    // that its own contribution is 0.1% at worst.
    let mut worst = 0.0f64;
    for (n_ref, floor, seed) in [(1e3_f64, 1e-3_f64, 601_u64), (1e4, 1e-4, 602)] {
        let stats = estimate_phase_error_variance(
            n_ref,
            1e7,
            0.5,
            0.25,
            TruePhase::Uniform,
            100_000,
            seed,
        )
        .unwrap();
        worst = worst.max((stats.variance / floor - 1.0).abs());
    }
    assert!(
        verdict("phase-shot-floor", worst < 0.05),
        "worst relative deviation = {worst}"
    );
}

#[test]
fn spectrum_sanity() {
    let mut rng = StreamSeed::new(0xe16e).stream(3);
    let mut violations = Vec::new();
    for i in 0..1000 {
        let (params, phase) = draw_point(&mut rng);
        let report = key_rate(&params, &phase).unwrap();
        let Some(detail) = report.detail else {
            violations.push(format!("draw {i}: unexpectedly infeasible"));
            continue;
        };
        let h = detail.holevo;
        let [l1, l2, l3, l4, l5] = h.lambdas;
        if l5 != 1.0 {
            violations.push(format!("draw {i}: l5 = {l5}"));
        }
        for l in [l1, l2, l3, l4] {
            if l < 1.0 - 1e-9 {
                violations.push(format!("draw {i}: eigenvalue {l} below vacuum"));
            }
        }
        let residuals = [
            rel(l1 * l1 + l2 * l2, h.coeffs.a),
            rel(l1 * l1 * l2 * l2, h.coeffs.b),
            rel(l3 * l3 + l4 * l4, h.coeffs.c),
            rel(l3 * l3 * l4 * l4, h.coeffs.d),
        ];
        if residuals.iter().any(|&r| r > 1e-9) {
            violations.push(format!("draw {i}: characteristic residuals {residuals:?}"));
        }
        if h.chi_be < 0.0 {
            violations.push(format!("draw {i}: negative bound {}", h.chi_be));
        }
    }
    let g_anchors = g_function(0.0_f64).unwrap() == 0.0 && g_function(1.0_f64).unwrap() == 2.0;
    if !g_anchors {
        violations.push("entropy anchors g(0) = 0, g(1) = 2 violated".into());
    }
    assert!(
        verdict("spectrum-sanity", violations.is_empty()),
        "{}",
        violations.join("\n")
    );
}

#[test]
fn leakage_identity() {
    // The closed form must equal photon count times delay variance over
    // two shot-noise units across the whole grid, including the degenerate
    // corners where either factor vanishes.
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for n_ref in [1.0, 1e3, 1e6] {
        for dt in [0.0, 1e-9, 50e-9, 1e-6] {
            for tau in [1e-7, 1e-6, 1e-3, f64::INFINITY] {
                for xi_a in [0.0, 30.0, f64::INFINITY] {
                    for xi_p in [0.0, 30.0, f64::INFINITY] {
                        for t in [1e-3, 1e-2, 0.5, 1.0] {
                            let direct: f64 =
                                leakage_excess_noise(n_ref, dt, tau, xi_a, xi_p, t, 0.25).unwrap();
                            let composed = leakage_photons(n_ref, xi_a, xi_p, t).unwrap()
                                * delay_phase_variance(dt, tau).unwrap()
                                / (2.0 * 0.25);
                            let denom = composed.abs().max(1e-300);
                            worst = worst.max((direct - composed).abs() / denom);
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    let reference: f64 =
        leakage_excess_noise(1000.0, 50e-9, 1e-6, 30.0, 30.0, 1e-2, 0.25).unwrap();
    let pass = count >= 1000 && worst <= 1e-12 && (reference - 0.02).abs() < 1e-12;
    assert!(
        verdict("leakage-identity", pass),
        "grid points = {count}, worst = {worst}, 100 km leakage = {reference}"
    );
}

#[test]
fn csv_determinism() {
    // The sweep output must be byte-identical no matter how many rayon
    // workers the campaign uses.
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.json");
    fs::write(
        &config_path,
        r#"{
            "distances_km": [0.0, 50.0],
            "noise_combinations": [
                {"sigma_i": 1e-5, "sigma_b": 1e-3},
                {"sigma_i": 1e-4, "sigma_b": 1e-2}
            ],
            "mode": "both",
            "trials": 20000,
            "seed": 123
        }"#,
    )
    .unwrap();

    let mut outputs = Vec::new();
    for threads in ["1", "2", "4"] {
        let out_path = dir.path().join(format!("out-{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_sqcc"))
            .args(["sweep", "--config"])
            .arg(&config_path)
            .arg("--output")
            .arg(&out_path)
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success(), "sweep with {threads} workers failed");
        outputs.push(fs::read(&out_path).unwrap());
    }
    let identical = outputs[1] == outputs[0] && outputs[2] == outputs[0];
    let non_trivial = outputs[0].len() > 200;
    assert!(
        verdict("csv-determinism", identical && non_trivial),
        "lengths = {:?}",
        outputs.iter().map(Vec::len).collect::<Vec<_>>()
    );
}

#[test]
fn closed_form_pin() {
    // One full evaluation frozen against an independent implementation of
    // the same closed forms (no optimizer in the loop).
    let params = SystemParams64::baseline()
        .with_length_km(25.0)
        .with_v_a(4.0);
    let phase = PhaseNoiseBudget64::new(1e-5, 1e-3).unwrap();
    let report = key_rate(&params, &phase).unwrap();
    let detail = report.detail.unwrap();

    let checks = [
        ("rate", report.rate_raw, 0.06293582192640995),
        ("alpha", detail.alpha, 12.933750744361282),
        ("i_ab", detail.i_ab, 0.34923831693478247),
        ("chi_be", detail.holevo.chi_be, 0.2688405791616334),
        ("chi_line", detail.noise.chi_line, 2.1796440685436367),
        ("chi_het", detail.noise.chi_het, 3.6128616477128777),
        ("chi_tot", detail.noise.chi_tot, 13.604515746385191),
    ];
    let mut violations = Vec::new();
    for (name, got, want) in checks {
        if ((got - want) / want).abs() > 1e-10 {
            violations.push(format!("{name} = {got:?}, frozen {want:?}"));
        }
    }
    assert!(
        verdict("closed-form-pin", violations.is_empty()),
        "{}",
        violations.join("\n")
    );
}
