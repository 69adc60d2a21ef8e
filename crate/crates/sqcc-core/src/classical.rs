//! Classical QPSK side of the shared pulse.
//!
//! The transmitter puts a four-point displacement of amplitude `alpha` per
//! quadrature on every pulse; the receiver decides each bit from the sign of
//! the corresponding quadrature. Closing the loop, [`solve_displacement`]
//! returns the amplitude that realizes a requested bit error rate against
//! the full decision noise including the phase jitter the displacement
//! itself excites. Too much phase noise makes the loop diverge, in which
//! case no amplitude exists and the operating point is infeasible.

use crate::erf::{erfc, erfc_inv};
use crate::error::{Error, Result};
use crate::noise::leakage_excess_noise;
use crate::params::{PhaseNoiseBudget, SystemParams};
use crate::scalar::{real, Real};

/// Bit error rate of sign decisions on one quadrature displaced by
/// `alpha` and observed through transmittance `t`, detector efficiency
/// `eta` and decision variance `n_tot` (in shot-noise units).
pub fn qpsk_ber<T: Real>(alpha: T, t: T, eta: T, n_tot: T, n0: T) -> Result<T> {
    for (name, v, lo_open) in [
        ("alpha", alpha, false),
        ("t", t, true),
        ("eta", eta, true),
        ("n_tot", n_tot, true),
        ("n0", n0, true),
    ] {
        if !v.is_finite() || v < T::zero() || (lo_open && v == T::zero()) {
            return Err(Error::Domain {
                op: "qpsk_ber",
                detail: format!("{name} = {v} out of range"),
            });
        }
    }
    if t > T::one() || eta > T::one() {
        return Err(Error::Domain {
            op: "qpsk_ber",
            detail: "t and eta must be at most 1".into(),
        });
    }
    let arg = (t * eta).sqrt() * alpha / (real::<T>(4.0) * n_tot * n0).sqrt();
    Ok(real::<T>(0.5) * erfc(arg))
}

/// Decision margin, in units of the decision noise standard deviation,
/// needed to hit bit error rate `ber_target`.
pub fn w_factor<T: Real>(ber_target: T) -> Result<T> {
    if !(ber_target > T::zero() && ber_target < real::<T>(0.5)) {
        return Err(Error::invalid(
            "ber_target",
            ber_target,
            "must lie strictly between 0 and 1/2",
        ));
    }
    erfc_inv(real::<T>(2.0) * ber_target)
}

/// Largest total phase noise variance `sigma_i + sigma_b` for which a
/// displacement achieving `ber_target` still exists, in rad^2.
pub fn max_tolerable_phase_noise<T: Real>(ber_target: T) -> Result<T> {
    let w = w_factor(ber_target)?;
    Ok(T::one() / (real::<T>(2.0) * w * w))
}

/// Result of the displacement solver. `alpha` is `None` when the phase
/// noise budget exceeds [`max_tolerable_phase_noise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementSolution<T> {
    /// Decision margin implied by the error rate target.
    pub w: T,
    /// Per-quadrature displacement amplitude, in natural units.
    pub alpha: Option<T>,
}

impl<T: Real> DisplacementSolution<T> {
    pub fn feasible(&self) -> bool {
        self.alpha.is_some()
    }

    /// Mean photon number spent on the classical displacement, `2 alpha^2`.
    pub fn mu_classical(&self) -> Option<T> {
        self.alpha.map(|a| real::<T>(2.0) * a * a)
    }
}

/// Solves for the displacement amplitude whose realized bit error rate
/// equals `params.ber_target` at transmittance `t`.
///
/// The decision noise itself grows with `alpha^2` through the phase noise
/// terms, so the amplitude solves a self-consistent balance. It exists iff
/// `phase.total()` stays below the tolerable maximum; at the boundary the
/// required amplitude diverges.
pub fn solve_displacement<T: Real>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    t: T,
) -> Result<DisplacementSolution<T>> {
    let w = w_factor(params.ber_target)?;
    let two = real::<T>(2.0);
    let four = real::<T>(4.0);

    let head = two - four * w * w * phase.sigma_i - four * w * w * phase.sigma_b;
    if head <= T::zero() {
        return Ok(DisplacementSolution { w, alpha: None });
    }

    let eps_le = leakage_excess_noise(
        params.n_ref,
        params.dt_s,
        params.tau_c_s,
        params.xi_a_db,
        params.xi_p_db,
        t,
        params.n0,
    )?;
    let te = t * params.eta;
    let num = te * (params.v_a + eps_le + params.eps0) + two + two * params.v_el;
    let alpha = w * num.sqrt() / (te * head).sqrt();
    Ok(DisplacementSolution { w, alpha: Some(alpha) })
}
