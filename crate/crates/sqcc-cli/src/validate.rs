//! Cross-check of the simulator against the closed-form link budget.
//!
//! A fixed battery of operating points spans short and long fiber, strong
//! and weak modulation and quiet to busy phase noise. At each point the
//! displacement amplitude is solved analytically, a campaign is simulated
//! at that amplitude, and the empirical error rates and decision noise are
//! compared against their closed forms at three standard deviations.
//!
//! The battery keeps `sigma_i + sigma_b` a few 1e-3 at most: there the
//! exact-rotation simulation and the small-angle budget agree to far below
//! the statistical resolution, so a violated bound means a real
//! disagreement and not linearization error. Error rate targets are high
//! enough that the expected error counts resolve the comparison; points
//! whose expected count drops below 100 report `insufficient` instead of a
//! verdict.

use std::io::Write;

use serde::Serialize;
use sqcc_core::classical::solve_displacement;
use sqcc_core::noise::assemble;
use sqcc_core::rng::derive_seed;
use sqcc_core::sim::{run_campaign_at, PhaseModel};
use sqcc_core::{Error, PhaseNoiseBudget64, Result, SystemParams64};

/// Expected error count below which a binomial comparison has no power.
const MIN_EXPECTED_ERRORS: f64 = 100.0;

/// Absolute floor on the decision noise tolerance, shot-noise units. Keeps
/// the check honest against sub-permille systematic offsets that the
/// variance estimator cannot resolve anyway.
const NOISE_TOLERANCE_FLOOR: f64 = 2e-3;

#[derive(Debug, Clone, Copy)]
struct CheckPoint {
    name: &'static str,
    length_km: f64,
    sigma_i: f64,
    sigma_b: f64,
    v_a: f64,
    ber_target: f64,
}

const BATTERY: [CheckPoint; 5] = [
    CheckPoint {
        name: "back-to-back",
        length_km: 0.0,
        sigma_i: 1e-5,
        sigma_b: 1e-3,
        v_a: 4.0,
        ber_target: 1e-2,
    },
    CheckPoint {
        name: "metro-span",
        length_km: 25.0,
        sigma_i: 1e-4,
        sigma_b: 1e-3,
        v_a: 8.0,
        ber_target: 1e-3,
    },
    CheckPoint {
        name: "long-span",
        length_km: 50.0,
        sigma_i: 1e-5,
        sigma_b: 1e-3,
        v_a: 2.0,
        ber_target: 1e-2,
    },
    CheckPoint {
        name: "quiet-phase",
        length_km: 10.0,
        sigma_i: 1e-6,
        sigma_b: 1e-4,
        v_a: 4.0,
        ber_target: 1e-3,
    },
    CheckPoint {
        name: "busy-phase",
        length_km: 10.0,
        sigma_i: 5e-4,
        sigma_b: 2e-3,
        v_a: 4.0,
        ber_target: 1e-2,
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Insufficient,
    Fail,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    name: &'static str,
    observed: f64,
    expected: f64,
    /// Maximum |observed - expected| this check accepts.
    bound: f64,
    status: Status,
}

impl CheckReport {
    fn compare(name: &'static str, observed: f64, expected: f64, bound: f64) -> Self {
        let status = if (observed - expected).abs() <= bound {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckReport { name, observed, expected, bound, status }
    }

    fn insufficient(name: &'static str, observed: f64, expected: f64) -> Self {
        CheckReport { name, observed, expected, bound: f64::NAN, status: Status::Insufficient }
    }
}

#[derive(Debug, Serialize)]
struct PointReport {
    name: &'static str,
    length_km: f64,
    sigma_i: f64,
    sigma_b: f64,
    v_a: f64,
    ber_target: f64,
    alpha: f64,
    rounds: u64,
    checks: Vec<CheckReport>,
    status: Status,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    trials: u64,
    seed: u64,
    /// Deliberate corruption of the analytic electronic noise, for
    /// exercising the checks themselves. Zero in normal operation.
    injected_v_el_bias: f64,
    points: Vec<PointReport>,
    pub status: Status,
}

fn worst(checks: &[CheckReport]) -> Status {
    checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
}

fn check_point(
    pt: &CheckPoint,
    trials: u64,
    seed: u64,
    index: u64,
    v_el_bias: f64,
) -> Result<PointReport> {
    let mut params = SystemParams64::baseline()
        .with_length_km(pt.length_km)
        .with_v_a(pt.v_a);
    params.ber_target = pt.ber_target;
    let params = params.validated()?;
    let phase = PhaseNoiseBudget64::new(pt.sigma_i, pt.sigma_b)?;
    let t = params.transmittance()?;

    // The amplitude is solved against the (possibly corrupted) budget, then
    // transmitted over the true physics. With zero bias the two coincide.
    let mut believed = params;
    believed.v_el += v_el_bias;
    let believed = believed.validated()?;
    let solution = solve_displacement(&believed, &phase, t)?;
    let alpha = solution.alpha.ok_or_else(|| Error::Domain {
        op: "validate",
        detail: format!("check point {} has no feasible amplitude", pt.name),
    })?;
    let noise = assemble(&believed, &phase, alpha, t)?;

    let emp = run_campaign_at(
        &params,
        &phase,
        alpha,
        trials,
        derive_seed(seed, index),
        PhaseModel::ExactRotation,
    )?;

    let n = trials as f64;
    let c = pt.ber_target;
    let mut checks = Vec::new();

    if n * c < MIN_EXPECTED_ERRORS {
        checks.push(CheckReport::insufficient("ber_x", emp.ber_x.rate, c));
        checks.push(CheckReport::insufficient("ber_p", emp.ber_p.rate, c));
        checks.push(CheckReport::insufficient(
            "ber_symmetry",
            (emp.ber_x.rate - emp.ber_p.rate).abs(),
            0.0,
        ));
    } else {
        let ber_bound = 3.0 * (c * (1.0 - c) / n).sqrt();
        checks.push(CheckReport::compare("ber_x", emp.ber_x.rate, c, ber_bound));
        checks.push(CheckReport::compare("ber_p", emp.ber_p.rate, c, ber_bound));
        let px = emp.ber_x.rate;
        let pp = emp.ber_p.rate;
        let sym_bound = 3.0 * (px * (1.0 - px) / n + pp * (1.0 - pp) / n).sqrt();
        checks.push(CheckReport::compare(
            "ber_symmetry",
            (px - pp).abs(),
            0.0,
            sym_bound,
        ));
    }

    // Sample variance of a Gaussian has relative standard error
    // sqrt(2 / n), so the comparison runs at three of those plus the floor.
    let noise_bound = 3.0 * noise.n_tot * (2.0 / n).sqrt() + NOISE_TOLERANCE_FLOOR;
    checks.push(CheckReport::compare("noise_x", emp.noise_x, noise.n_tot, noise_bound));
    checks.push(CheckReport::compare("noise_p", emp.noise_p, noise.n_tot, noise_bound));

    let status = worst(&checks);
    Ok(PointReport {
        name: pt.name,
        length_km: pt.length_km,
        sigma_i: pt.sigma_i,
        sigma_b: pt.sigma_b,
        v_a: pt.v_a,
        ber_target: pt.ber_target,
        alpha,
        rounds: trials,
        checks,
        status,
    })
}

/// Runs the whole battery and writes the JSON report to `out`.
pub fn run_validate<W: Write>(
    trials: u64,
    seed: u64,
    inject_vel_bias: Option<f64>,
    out: &mut W,
) -> Result<Status> {
    let bias = inject_vel_bias.unwrap_or(0.0);
    if !bias.is_finite() || bias < 0.0 {
        return Err(Error::InvalidArgument {
            name: "inject_vel_bias",
            value: format!("{bias}"),
            requirement: "finite and >= 0",
        });
    }

    let mut points = Vec::with_capacity(BATTERY.len());
    for (i, pt) in BATTERY.iter().enumerate() {
        points.push(check_point(pt, trials, seed, i as u64, bias)?);
    }
    let status = points.iter().map(|p| p.status).max().unwrap_or(Status::Pass);
    let report = ValidationReport {
        trials,
        seed,
        injected_v_el_bias: bias,
        points,
        status,
    };
    serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(status)
}
