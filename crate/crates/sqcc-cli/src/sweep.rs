//! Sweep execution and CSV output.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which is
//! enough to reproduce the binary value exactly, so two runs agree byte for
//! byte iff they computed the same numbers. Infeasible rows carry the
//! literal `nan` in every column that has no defined value and `false` in
//! the `feasible` column; their `rate` is the clamped zero.

use std::io::Write;

use sqcc_core::keyrate::{key_rate, optimize_va, KeyRateReport, SearchSpec};
use sqcc_core::rng::derive_seed;
use sqcc_core::sim::{run_campaign_at, BerEstimate, EmpiricalReport, PhaseModel};
use sqcc_core::Result;

use crate::config::{Mode, SweepSpec};

const ANALYTIC_COLUMNS: [&str; 19] = [
    "distance_km",
    "sigma_i",
    "sigma_b",
    "T",
    "v_a_opt",
    "alpha",
    "n_tot",
    "chi_line",
    "chi_het",
    "chi_tot",
    "i_ab",
    "chi_be",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda4",
    "lambda5",
    "rate",
    "feasible",
];

const EMPIRICAL_COLUMNS: [&str; 5] = ["ber_emp_x", "ber_emp_p", "noise_emp", "ci_low", "ci_high"];

fn cell(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// The analytic column values for one row. Missing detail (an infeasible
/// operating point) turns into `nan` cells.
fn analytic_cells(distance_km: f64, sigma_i: f64, sigma_b: f64, t: f64, report: &KeyRateReport<f64>) -> Vec<String> {
    let nan = f64::NAN;
    let mut cells = vec![
        cell(distance_km),
        cell(sigma_i),
        cell(sigma_b),
        cell(t),
        cell(if report.feasible() { report.v_a } else { nan }),
        cell(report.displacement.alpha.unwrap_or(nan)),
    ];
    match &report.detail {
        Some(d) => {
            cells.push(cell(d.noise.n_tot));
            cells.push(cell(d.noise.chi_line));
            cells.push(cell(d.noise.chi_het));
            cells.push(cell(d.noise.chi_tot));
            cells.push(cell(d.i_ab));
            cells.push(cell(d.holevo.chi_be));
            for l in d.holevo.lambdas {
                cells.push(cell(l));
            }
        }
        None => cells.extend(std::iter::repeat_n(cell(nan), 11)),
    }
    cells.push(cell(report.rate()));
    cells.push(if report.feasible() { "true" } else { "false" }.to_string());
    cells
}

fn empirical_cells(emp: Option<&EmpiricalReport<f64>>) -> Vec<String> {
    match emp {
        Some(e) => {
            let pooled = BerEstimate::<f64>::wilson(
                e.ber_x.errors + e.ber_p.errors,
                e.ber_x.trials + e.ber_p.trials,
            );
            vec![
                cell(e.ber_x.rate),
                cell(e.ber_p.rate),
                cell(0.5 * (e.noise_x + e.noise_p)),
                cell(pooled.ci_low),
                cell(pooled.ci_high),
            ]
        }
        None => vec![cell(f64::NAN); 5],
    }
}

/// Runs `spec` and streams the CSV to `out`.
///
/// Determinism: row `i` derives its simulation seed from `(spec.seed, i)`
/// and the campaign itself is worker-count invariant, so the bytes written
/// here depend only on the resolved specification.
pub fn run_sweep<W: Write>(spec: &SweepSpec, out: &mut W) -> Result<()> {
    spec.preflight()?;

    let base = spec.params.to_params()?;
    let search: SearchSpec<f64> = spec.search.unwrap_or_default().into();
    let budgets = spec
        .noise_combinations
        .iter()
        .map(|c| c.budget())
        .collect::<Result<Vec<_>>>()?;
    let simulate = spec.mode != Mode::Analytic;

    writeln!(
        out,
        "# sqcc v{} seed={} config_sha256={}",
        env!("CARGO_PKG_VERSION"),
        spec.seed,
        spec.digest()
    )?;
    let mut columns: Vec<&str> = ANALYTIC_COLUMNS.to_vec();
    if simulate {
        columns.extend(EMPIRICAL_COLUMNS);
    }
    writeln!(out, "{}", columns.join(","))?;

    for (di, &distance_km) in spec.distances_km.iter().enumerate() {
        let params = base.with_length_km(distance_km);
        let t = params.transmittance()?;
        for (ci, budget) in budgets.iter().enumerate() {
            let report = match spec.mode {
                Mode::Montecarlo => key_rate(&params, budget)?,
                Mode::Analytic | Mode::Both => optimize_va(&params, budget, &search)?,
            };

            let empirical = if simulate && report.feasible() {
                let alpha = report
                    .displacement
                    .alpha
                    .expect("feasible reports carry an amplitude");
                let row = (di * budgets.len() + ci) as u64;
                Some(run_campaign_at(
                    &params.with_v_a(report.v_a),
                    budget,
                    alpha,
                    spec.trials,
                    derive_seed(spec.seed, row),
                    PhaseModel::ExactRotation,
                )?)
            } else {
                None
            };

            let combo = spec.noise_combinations[ci];
            let mut cells = analytic_cells(distance_km, combo.sigma_i, combo.sigma_b, t, &report);
            if simulate {
                cells.extend(empirical_cells(empirical.as_ref()));
            }
            writeln!(out, "{}", cells.join(","))?;
        }
    }
    Ok(())
}
