//! Asymptotic secure key rate under collective attacks with reverse
//! reconciliation.
//!
//! The channel is the usual thermal-loss model: transmittance `t` and excess
//! noise `chi_line` referred to its input, with the receiver's trusted noise
//! `chi_het` appended at the output. The eavesdropper's information is the
//! Holevo bound evaluated from the symplectic spectra of the shared
//! two-mode state and of the state conditioned on the receiver's conjugate
//! measurement. Both spectra come from closed-form quartics; no matrix
//! diagonalization is involved.

use std::cell::RefCell;

use crate::classical::{solve_displacement, DisplacementSolution};
use crate::error::{Error, Result};
use crate::noise::{assemble, NoiseDecomposition};
use crate::optimize::maximize_log_unimodal;
use crate::params::{PhaseNoiseBudget, SystemParams};
use crate::scalar::{real, Real};

/// Relative slack on discriminants and on `lambda^2 - 1` below which a
/// negative value is treated as roundoff and clamped. Anything more negative
/// is reported as a physicality failure instead of being repaired.
const DUST: f64 = 1e-6;

/// Von Neumann entropy of a thermal state with `x` mean photons, in bits:
/// `(x + 1) log2(x + 1) - x log2 x`, continuously extended to `g(0) = 0`.
pub fn g_function<T: Real>(x: T) -> Result<T> {
    if x.is_nan() || x < T::zero() {
        return Err(Error::Domain {
            op: "g_function",
            detail: format!("argument {x} must be >= 0"),
        });
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    let ln2 = real::<T>(std::f64::consts::LN_2);
    if x > real(1e8) {
        // (x + 1) ln(1 + 1/x) evaluated without cancellation.
        return Ok((x.ln() + (x + T::one()) * x.recip().ln_1p()) / ln2);
    }
    let xp1 = x + T::one();
    Ok(xp1 * xp1.log2() - x * x.log2())
}

/// Shannon mutual information of the heterodyne Gaussian channel between
/// the modulated quadratures and the measured ones, in bits per pulse
/// (both quadratures together).
pub fn mutual_information<T: Real>(v_a: T, chi_tot: T) -> Result<T> {
    if !v_a.is_finite() || v_a < T::zero() {
        return Err(Error::Domain {
            op: "mutual_information",
            detail: format!("v_a {v_a} must be finite and >= 0"),
        });
    }
    if !chi_tot.is_finite() || chi_tot < T::zero() {
        return Err(Error::Domain {
            op: "mutual_information",
            detail: format!("chi_tot {chi_tot} must be finite and >= 0"),
        });
    }
    let ln2 = real::<T>(std::f64::consts::LN_2);
    Ok((v_a / (T::one() + chi_tot)).ln_1p() / ln2)
}

/// Sum and product pairs behind the two symplectic spectra: `a`, `b` for the
/// shared state, `c`, `d` for the state conditioned on the measurement. The
/// squared eigenvalues solve `z^2 - sum z + prod = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

/// Holevo bound on the eavesdropper's information about the receiver's
/// measurement outcomes, with the spectra that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolevoBound<T> {
    /// The bound itself, in bits per pulse.
    pub chi_be: T,
    /// Symplectic eigenvalues: two of the shared state, two of the
    /// conditioned state, and the unit eigenvalue of the pure remainder.
    pub lambdas: [T; 5],
    pub coeffs: QuarticCoefficients<T>,
}

/// Squared eigenvalue pair from its sum and product, larger first. The
/// smaller root comes from the product to dodge the cancellation in
/// `sum - sqrt(disc)`.
fn eigenvalue_pair<T: Real>(sum: T, prod: T) -> Result<(T, T)> {
    let four = real::<T>(4.0);
    let mut disc = sum * sum - four * prod;
    if disc < T::zero() {
        let scale = (sum * sum).max(T::one());
        if disc >= -real::<T>(DUST) * scale {
            disc = T::zero();
        } else {
            return Err(Error::Physicality {
                op: "holevo_bound",
                detail: format!("complex squared eigenvalues: sum {sum}, product {prod}"),
            });
        }
    }
    let hi = (sum + disc.sqrt()) * real::<T>(0.5);
    if !(hi > T::zero()) {
        return Err(Error::Physicality {
            op: "holevo_bound",
            detail: format!("nonpositive squared eigenvalue {hi}"),
        });
    }
    Ok((hi, prod / hi))
}

/// Eigenvalue from its square, enforcing the uncertainty bound `lambda >= 1`.
///
/// A squared value within [`DUST`] below 1 is roundoff and clamps to 1. A
/// genuinely smaller value is only legal when the input state carries no
/// modulation at all (`v_total == 1`): there the conditional state is pure
/// vacuum, the quartics degenerate, and the branch artifacts below 1 all
/// stand for exact units.
fn eigenvalue<T: Real>(squared: T, v_total: T) -> Result<T> {
    let one = T::one();
    if squared >= one {
        return Ok(squared.sqrt());
    }
    if squared >= one - real::<T>(DUST) || v_total == one {
        return Ok(one);
    }
    Err(Error::Physicality {
        op: "holevo_bound",
        detail: format!("symplectic eigenvalue below 1: lambda^2 = {squared}"),
    })
}

/// Evaluates the Holevo bound for total modulated variance
/// `v_total = v_a + 1`, channel transmittance `t`, untrusted noise
/// `chi_line`, trusted receiver noise `chi_het` and their input-referred
/// total `chi_tot`, which must equal `chi_line + chi_het / t`.
pub fn holevo_bound<T: Real>(
    v_total: T,
    t: T,
    chi_line: T,
    chi_het: T,
    chi_tot: T,
) -> Result<HolevoBound<T>> {
    let one = T::one();
    let two = real::<T>(2.0);
    if !v_total.is_finite() || v_total < one {
        return Err(Error::Domain {
            op: "holevo_bound",
            detail: format!("v_total {v_total} must be finite and >= 1"),
        });
    }
    if !t.is_finite() || t <= T::zero() || t > one {
        return Err(Error::Domain {
            op: "holevo_bound",
            detail: format!("transmittance {t} outside (0, 1]"),
        });
    }
    for (name, v) in [("chi_line", chi_line), ("chi_het", chi_het), ("chi_tot", chi_tot)] {
        if !v.is_finite() || v < T::zero() {
            return Err(Error::Domain {
                op: "holevo_bound",
                detail: format!("{name} = {v} must be finite and >= 0"),
            });
        }
    }
    let recon = chi_line + chi_het / t;
    if (chi_tot - recon).abs() > real::<T>(1e-9) * chi_tot.max(one) {
        return Err(Error::Domain {
            op: "holevo_bound",
            detail: format!("chi_tot {chi_tot} inconsistent with chi_line + chi_het / t = {recon}"),
        });
    }

    let v = v_total;
    let vl = v + chi_line;
    let a = v * v * (one - two * t) + two * t + t * t * vl * vl;
    let b = t * t * (v * chi_line + one) * (v * chi_line + one);
    let (l1s, l2s) = eigenvalue_pair(a, b)?;

    let sqrt_b = b.sqrt();
    let denom = t * (v + chi_tot);
    let c = (a * chi_het * chi_het
        + b
        + one
        + two * chi_het * (v * sqrt_b + t * vl)
        + two * t * (v * v - one))
        / (denom * denom);
    let d = (v + sqrt_b * chi_het) / denom;
    let d = d * d;
    let (l3s, l4s) = eigenvalue_pair(c, d)?;

    let lambdas = [
        eigenvalue(l1s, v)?,
        eigenvalue(l2s, v)?,
        eigenvalue(l3s, v)?,
        eigenvalue(l4s, v)?,
        one,
    ];

    let half = real::<T>(0.5);
    let mut chi_be = T::zero();
    for (i, lam) in lambdas.iter().enumerate() {
        let term = g_function((*lam - one) * half)?;
        chi_be = if i < 2 { chi_be + term } else { chi_be - term };
    }
    if chi_be < T::zero() {
        if chi_be >= -real::<T>(1e-9) {
            chi_be = T::zero();
        } else {
            return Err(Error::Physicality {
                op: "holevo_bound",
                detail: format!("negative Holevo bound {chi_be}"),
            });
        }
    }

    Ok(HolevoBound {
        chi_be,
        lambdas,
        coeffs: QuarticCoefficients { a, b, c, d },
    })
}

/// Everything behind one key rate figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateDetail<T> {
    /// QPSK displacement amplitude realizing the configured error rate.
    pub alpha: T,
    pub noise: NoiseDecomposition<T>,
    /// Mutual information of the reconciliation channel, bits per pulse.
    pub i_ab: T,
    pub holevo: HolevoBound<T>,
}

/// Key rate at one operating point. `rate_raw` keeps its sign (and is minus
/// infinity when no displacement amplitude exists); [`KeyRateReport::rate`]
/// clamps at zero for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport<T> {
    /// Modulation variance this report was evaluated at.
    pub v_a: T,
    /// `f_rec * i_ab - chi_be`, in bits per pulse, unclamped.
    pub rate_raw: T,
    /// Present when this report came out of [`optimize_va`].
    pub v_a_opt: Option<T>,
    pub displacement: DisplacementSolution<T>,
    /// Absent when the operating point is infeasible.
    pub detail: Option<KeyRateDetail<T>>,
}

impl<T: Real> KeyRateReport<T> {
    pub fn feasible(&self) -> bool {
        self.displacement.feasible()
    }

    /// Secret bits per pulse, clamped at zero.
    pub fn rate(&self) -> T {
        self.rate_raw.max(T::zero())
    }

    pub fn v_total(&self) -> T {
        self.v_a + T::one()
    }
}

/// Computes the key rate of `params` under the given phase noise budget.
///
/// The displacement amplitude is solved first so that the classical
/// crosstalk and phase noise terms in the budget are self-consistent. An
/// infeasible budget yields a report with `rate_raw = -inf` and no detail
/// rather than an error.
pub fn key_rate<T: Real>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
) -> Result<KeyRateReport<T>> {
    let params = params.validated()?;
    let t = params.transmittance()?;
    let displacement = solve_displacement(&params, phase, t)?;
    let Some(alpha) = displacement.alpha else {
        return Ok(KeyRateReport {
            v_a: params.v_a,
            rate_raw: T::neg_infinity(),
            v_a_opt: None,
            displacement,
            detail: None,
        });
    };

    let noise = assemble(&params, phase, alpha, t)?;
    let i_ab = mutual_information(params.v_a, noise.chi_tot)?;
    let holevo = holevo_bound(
        params.v_a + T::one(),
        t,
        noise.chi_line,
        noise.chi_het,
        noise.chi_tot,
    )?;
    let rate_raw = params.f_rec * i_ab - holevo.chi_be;

    Ok(KeyRateReport {
        v_a: params.v_a,
        rate_raw,
        v_a_opt: None,
        displacement,
        detail: Some(KeyRateDetail { alpha, noise, i_ab, holevo }),
    })
}

/// Search interval and stopping rule for [`optimize_va`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec<T> {
    pub lo: T,
    pub hi: T,
    /// Relative uncertainty accepted on the optimum variance.
    pub rel_tol: T,
    /// Coarse bracketing grid size on the log axis.
    pub grid_points: usize,
}

impl<T: Real> Default for SearchSpec<T> {
    fn default() -> Self {
        SearchSpec {
            lo: real(1e-2),
            hi: real(1e2),
            rel_tol: real(1e-4),
            grid_points: 32,
        }
    }
}

/// Maximizes the key rate over the modulation variance.
///
/// Feasibility does not depend on `v_a` (the displacement solvability
/// condition involves only the margin and the phase noise), so an infeasible
/// budget short-circuits to an infeasible report. The returned report is
/// evaluated at the optimum and carries it in `v_a_opt`.
pub fn optimize_va<T: Real>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    search: &SearchSpec<T>,
) -> Result<KeyRateReport<T>> {
    let params = params.validated()?;
    let t = params.transmittance()?;
    let probe = solve_displacement(&params, phase, t)?;
    if !probe.feasible() {
        return Ok(KeyRateReport {
            v_a: params.v_a,
            rate_raw: T::neg_infinity(),
            v_a_opt: None,
            displacement: probe,
            detail: None,
        });
    }

    let first_err: RefCell<Option<Error>> = RefCell::new(None);
    let objective = |v: T| match key_rate(&params.with_v_a(v), phase) {
        Ok(report) => report.rate_raw,
        Err(e) => {
            first_err.borrow_mut().get_or_insert(e);
            T::neg_infinity()
        }
    };
    let (mut v_star, mut best) =
        maximize_log_unimodal(&objective, search.lo, search.hi, search.rel_tol, search.grid_points)?;
    // The bracket is only rel_tol wide; nudging by one tolerance either way
    // costs two evaluations and catches an off-center final bracket.
    for v in [v_star * (T::one() - search.rel_tol), v_star * (T::one() + search.rel_tol)] {
        let v = v.max(search.lo).min(search.hi);
        let y = objective(v);
        if y > best {
            best = y;
            v_star = v;
        }
    }
    if let Some(e) = first_err.into_inner() {
        return Err(e);
    }

    let mut report = key_rate(&params.with_v_a(v_star), phase)?;
    report.v_a_opt = Some(v_star);
    Ok(report)
}
